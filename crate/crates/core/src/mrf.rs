//! Receptive-field restricted maps.
//!
//! Every neuron is wired to a fixed subset of input dimensions. Winner search
//! only looks at a neuron's own dimensions and updates never touch the others,
//! so a weight outside the receptive field keeps its initial value for good.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::datagen::JOINT_NAMES;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::lattice::gaussian;
use crate::som::{Codebook, EpochStats, TrainLog, TrainSchedule};

/// Body-part groups of the built-in mask, in report order.
pub const BODY_GROUPS: [&str; 4] = ["head", "shoulder", "elbow", "wrist"];

const OVERLAP_PREFIX: &str = "overlap-";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceptiveFieldMask {
    pub rows: usize,
    pub cols: usize,
    /// `neurons x dims`, row-major neuron order.
    pub active: Array2<bool>,
    /// One label per neuron, or none. Overlap neurons are labelled
    /// `overlap-<home>+<other>...`.
    pub labels: Option<Vec<String>>,
}

/// Group a label belongs to: the label itself, or the home group named first
/// after the `overlap-` prefix.
pub fn group_of(label: &str) -> &str {
    match label.strip_prefix(OVERLAP_PREFIX) {
        Some(rest) => rest.split('+').next().unwrap_or(rest),
        None => label,
    }
}

impl ReceptiveFieldMask {
    pub fn new(
        rows: usize,
        cols: usize,
        active: Array2<bool>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let mask = Self {
            rows,
            cols,
            active,
            labels,
        };
        mask.validate()?;
        Ok(mask)
    }

    /// Fully connected mask, unlabelled.
    pub fn all_true(rows: usize, cols: usize, dims: usize) -> Result<Self> {
        Self::new(rows, cols, Array2::from_elem((rows * cols, dims), true), None)
    }

    /// Same lattice and labels with every connection switched on.
    pub fn fully_connected(&self) -> Self {
        Self {
            active: Array2::from_elem(self.active.dim(), true),
            ..self.clone()
        }
    }

    pub fn neurons(&self) -> usize {
        self.active.nrows()
    }

    pub fn dims(&self) -> usize {
        self.active.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.dims() == 0 {
            return Err(Error::Configuration(format!(
                "mask must be non-empty, got {}x{} lattice with {} dims",
                self.rows,
                self.cols,
                self.dims()
            )));
        }
        if self.neurons() != self.rows * self.cols {
            return Err(Error::Configuration(format!(
                "mask has {} neuron rows for a {}x{} lattice",
                self.neurons(),
                self.rows,
                self.cols
            )));
        }
        for (n, row) in self.active.rows().into_iter().enumerate() {
            if !row.iter().any(|&a| a) {
                return Err(Error::Configuration(format!(
                    "neuron {n} has an empty receptive field"
                )));
            }
        }
        for (i, col) in self.active.columns().into_iter().enumerate() {
            if !col.iter().any(|&a| a) {
                return Err(Error::Configuration(format!(
                    "input dimension {i} is not connected to any neuron"
                )));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.neurons() {
                return Err(Error::Configuration(format!(
                    "mask has {} group labels for {} neurons",
                    labels.len(),
                    self.neurons()
                )));
            }
            if labels.iter().any(|l| l.is_empty() || l.contains('\n')) {
                return Err(Error::Configuration("group labels must be non-empty single lines".into()));
            }
        }
        Ok(())
    }

    pub fn active_dims(&self, neuron: usize) -> Vec<usize> {
        self.active
            .row(neuron)
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
            .collect()
    }

    pub fn label(&self, neuron: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[neuron].as_str())
    }

    /// Group name per neuron; unlabelled masks form a single group `all`.
    pub fn group_names(&self) -> Vec<String> {
        match &self.labels {
            Some(labels) => labels.iter().map(|l| group_of(l).to_string()).collect(),
            None => vec!["all".to_string(); self.neurons()],
        }
    }

    /// Distinct groups in first-appearance order with their member neurons.
    pub fn groups(&self) -> Vec<(String, Vec<usize>)> {
        let mut out: Vec<(String, Vec<usize>)> = Vec::new();
        for (n, g) in self.group_names().into_iter().enumerate() {
            match out.iter_mut().find(|(name, _)| *name == g) {
                Some((_, members)) => members.push(n),
                None => out.push((g, vec![n])),
            }
        }
        out
    }

    /// Dimensions shared by every neuron of a group.
    pub fn base_dims(&self, members: &[usize]) -> Vec<usize> {
        (0..self.dims())
            .filter(|&i| members.iter().all(|&n| self.active[[n, i]]))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.rows, self.cols, self.dims());
        for row in self.active.rows() {
            let cells: Vec<&str> = row.iter().map(|&a| if a { "1" } else { "0" }).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        if let Some(labels) = &self.labels {
            for l in labels {
                out.push_str("#group ");
                out.push_str(l);
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str, source_name: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::parse(source_name, format!("line {line}"), msg);
        let body = text
            .strip_suffix('\n')
            .ok_or_else(|| err(1, "file must end with a newline".into()))?;
        let lines: Vec<&str> = body.split('\n').collect();

        let header: Vec<&str> = lines[0].split(' ').collect();
        if header.len() != 3 {
            return Err(err(1, format!("expected `rows cols dims`, got `{}`", lines[0])));
        }
        let mut dims_of = [0usize; 3];
        for (slot, tok) in dims_of.iter_mut().zip(&header) {
            *slot = tok
                .parse()
                .map_err(|_| err(1, format!("`{tok}` is not a non-negative integer")))?;
        }
        let [rows, cols, dims] = dims_of;
        let neurons = rows * cols;

        if lines.len() < 1 + neurons {
            return Err(err(
                lines.len() + 1,
                format!("expected {neurons} mask rows, found {}", lines.len() - 1),
            ));
        }
        let mut active = Array2::from_elem((neurons, dims), false);
        for n in 0..neurons {
            let line_no = n + 2;
            let line = lines[n + 1];
            let cells: Vec<&str> = line.split(' ').collect();
            if cells.len() != dims {
                return Err(err(line_no, format!("expected {dims} entries, got {}", cells.len())));
            }
            for (i, c) in cells.iter().enumerate() {
                active[[n, i]] = match *c {
                    "1" => true,
                    "0" => false,
                    other => return Err(err(line_no, format!("`{other}` is not 0 or 1"))),
                };
            }
        }

        let rest = &lines[1 + neurons..];
        let labels = if rest.is_empty() {
            None
        } else {
            if rest.len() != neurons {
                return Err(err(
                    2 + neurons,
                    format!("expected {neurons} `#group` lines, found {}", rest.len()),
                ));
            }
            let mut labels = Vec::with_capacity(neurons);
            for (k, line) in rest.iter().enumerate() {
                let label = line
                    .strip_prefix("#group ")
                    .ok_or_else(|| err(2 + neurons + k, format!("expected `#group <label>`, got `{line}`")))?;
                labels.push(label.to_string());
            }
            Some(labels)
        };
        Self::new(rows, cols, active, labels)
    }
}

/// Built-in 4x4 by 7-joint mask.
///
/// The lattice splits into 2x2 quadrants: head top-left, shoulder top-right,
/// wrist bottom-left, elbow bottom-right. A neuron with a lattice neighbor
/// (Manhattan distance 1) in another quadrant also sees that quadrant's joints.
pub fn default_paper_mask() -> ReceptiveFieldMask {
    // Joint indices per body part, in JOINT_NAMES order.
    let joints: [&[usize]; 4] = [&[0, 1], &[2, 3], &[4, 5], &[6]];
    // Quadrant owner as an index into BODY_GROUPS.
    let quadrant = |r: usize, c: usize| match (r < 2, c < 2) {
        (true, true) => 0,
        (true, false) => 1,
        (false, false) => 2,
        (false, true) => 3,
    };

    let (rows, cols) = (4usize, 4usize);
    let mut active = Array2::from_elem((rows * cols, JOINT_NAMES.len()), false);
    let mut labels = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let n = r * cols + c;
            let home = quadrant(r, c);
            let mut parts = vec![home];
            let neighbors = [
                (r.wrapping_sub(1), c),
                (r + 1, c),
                (r, c.wrapping_sub(1)),
                (r, c + 1),
            ];
            for (nr, nc) in neighbors {
                if nr < rows && nc < cols {
                    let q = quadrant(nr, nc);
                    if !parts.contains(&q) {
                        parts.push(q);
                    }
                }
            }
            for &p in &parts {
                for &j in joints[p] {
                    active[[n, j]] = true;
                }
            }
            labels.push(if parts.len() == 1 {
                BODY_GROUPS[home].to_string()
            } else {
                let mut others: Vec<usize> = parts[1..].to_vec();
                others.sort_unstable();
                let tail: Vec<&str> = others.iter().map(|&p| BODY_GROUPS[p]).collect();
                format!("{OVERLAP_PREFIX}{}+{}", BODY_GROUPS[home], tail.join("+"))
            });
        }
    }
    ReceptiveFieldMask::new(rows, cols, active, Some(labels)).expect("built-in mask is valid")
}

pub fn save_mask(mask: &ReceptiveFieldMask, path: &Path) -> Result<()> {
    write_atomic(path, mask.to_text().as_bytes())
}

pub fn load_mask(path: &Path) -> Result<ReceptiveFieldMask> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ReceptiveFieldMask::from_text(&text, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BmuScope {
    #[default]
    GlobalMasked,
    PerGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceNormalization {
    #[default]
    RmsPerActiveDim,
    Unnormalized,
}

impl fmt::Display for BmuScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BmuScope::GlobalMasked => "global-masked",
            BmuScope::PerGroup => "per-group",
        })
    }
}

impl FromStr for BmuScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global-masked" => Ok(BmuScope::GlobalMasked),
            "per-group" => Ok(BmuScope::PerGroup),
            other => Err(Error::Parameter(format!("unknown bmu scope `{other}`"))),
        }
    }
}

impl fmt::Display for DistanceNormalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceNormalization::RmsPerActiveDim => "rms-per-active-dim",
            DistanceNormalization::Unnormalized => "unnormalized",
        })
    }
}

impl FromStr for DistanceNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rms-per-active-dim" => Ok(DistanceNormalization::RmsPerActiveDim),
            "unnormalized" => Ok(DistanceNormalization::Unnormalized),
            other => Err(Error::Parameter(format!("unknown distance normalization `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MrfConfig {
    pub bmu_scope: BmuScope,
    pub distance_normalization: DistanceNormalization,
}

/// Winners of one masked competition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Winners {
    Global(usize),
    /// One winner per group, in [`ReceptiveFieldMask::groups`] order.
    PerGroup(Vec<usize>),
}

/// Precomputed per-neuron dimension lists and group structure.
struct MaskedMap {
    active: Vec<Vec<usize>>,
    groups: Vec<Vec<usize>>,
    normalization: DistanceNormalization,
}

impl MaskedMap {
    fn new(mask: &ReceptiveFieldMask, cfg: &MrfConfig) -> Self {
        Self {
            active: (0..mask.neurons()).map(|n| mask.active_dims(n)).collect(),
            groups: mask.groups().into_iter().map(|(_, m)| m).collect(),
            normalization: cfg.distance_normalization,
        }
    }

    /// Squared masked distance, divided by the active count under RMS mode.
    fn score(&self, sample: ArrayView1<f64>, weights: &Array2<f64>, n: usize) -> f64 {
        let dims = &self.active[n];
        let mut sum = 0.0;
        for &i in dims {
            let diff = sample[i] - weights[[n, i]];
            sum += diff * diff;
        }
        match self.normalization {
            DistanceNormalization::RmsPerActiveDim => sum / dims.len() as f64,
            DistanceNormalization::Unnormalized => sum,
        }
    }

    fn best_of(
        &self,
        sample: ArrayView1<f64>,
        weights: &Array2<f64>,
        candidates: impl Iterator<Item = usize>,
    ) -> usize {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for n in candidates {
            let d = self.score(sample, weights, n);
            if d < best_d || best == usize::MAX {
                best_d = d;
                best = n;
            }
        }
        best
    }

    fn two_best(&self, sample: ArrayView1<f64>, weights: &Array2<f64>) -> (usize, usize) {
        let mut first = (usize::MAX, f64::INFINITY);
        let mut second = (usize::MAX, f64::INFINITY);
        for n in 0..weights.nrows() {
            let d = self.score(sample, weights, n);
            if d < first.1 {
                second = first;
                first = (n, d);
            } else if d < second.1 {
                second = (n, d);
            }
        }
        (first.0, second.0)
    }

    fn update(
        &self,
        weights: &mut Array2<f64>,
        sample: ArrayView1<f64>,
        neurons: &[usize],
        distances: &[u32],
        alpha: f64,
        sigma: f64,
    ) {
        for &n in neurons {
            let rate = alpha * gaussian(distances[n], sigma);
            for &i in &self.active[n] {
                let w = &mut weights[[n, i]];
                *w += rate * (sample[i] - *w);
            }
        }
    }
}

fn check_compat(codebook: &Codebook, mask: &ReceptiveFieldMask) -> Result<()> {
    mask.validate()?;
    if mask.rows != codebook.lattice.rows
        || mask.cols != codebook.lattice.cols
        || mask.dims() != codebook.dims()
    {
        return Err(Error::Configuration(format!(
            "mask is {}x{} with {} dims but codebook is {}x{} with {} dims",
            mask.rows,
            mask.cols,
            mask.dims(),
            codebook.lattice.rows,
            codebook.lattice.cols,
            codebook.dims()
        )));
    }
    Ok(())
}

/// Euclidean distance over the neuron's active dimensions, divided by
/// `sqrt(active count)` under RMS normalization.
pub fn masked_distance(
    sample: ArrayView1<f64>,
    neuron: usize,
    codebook: &Codebook,
    mask: &ReceptiveFieldMask,
    cfg: &MrfConfig,
) -> Result<f64> {
    check_compat(codebook, mask)?;
    codebook.check_sample(sample)?;
    if neuron >= codebook.neurons() {
        return Err(Error::Parameter(format!("neuron {neuron} out of range")));
    }
    let map = MaskedMap::new(mask, cfg);
    Ok(map.score(sample, &codebook.weights, neuron).sqrt())
}

/// Masked winner search. Ties go to the lowest row-major index.
pub fn mrf_find_bmu(
    sample: ArrayView1<f64>,
    codebook: &Codebook,
    mask: &ReceptiveFieldMask,
    cfg: &MrfConfig,
) -> Result<Winners> {
    check_compat(codebook, mask)?;
    codebook.check_sample(sample)?;
    let map = MaskedMap::new(mask, cfg);
    Ok(match cfg.bmu_scope {
        BmuScope::GlobalMasked => {
            Winners::Global(map.best_of(sample, &codebook.weights, 0..codebook.neurons()))
        }
        BmuScope::PerGroup => Winners::PerGroup(
            map.groups
                .iter()
                .map(|g| map.best_of(sample, &codebook.weights, g.iter().copied()))
                .collect(),
        ),
    })
}

/// Trains a receptive-field restricted map.
///
/// Same schedule and sample order as [`crate::som::train`]. Under per-group
/// scope each group's winner only pulls on members of its own group.
pub fn mrf_train(
    codebook: &Codebook,
    dataset: ArrayView2<f64>,
    mask: &ReceptiveFieldMask,
    schedule: &TrainSchedule,
    cfg: &MrfConfig,
) -> Result<(Codebook, TrainLog)> {
    check_compat(codebook, mask)?;
    codebook.check_dataset(dataset)?;
    schedule.validate()?;

    let map = MaskedMap::new(mask, cfg);
    let mut out = codebook.clone();
    let mut log = TrainLog::default();
    let samples = dataset.nrows();
    let total = schedule.epochs * samples;
    let table = out.lattice.distance_table();
    let everyone: Vec<usize> = (0..out.neurons()).collect();

    for epoch in 0..schedule.epochs {
        for (k, &idx) in schedule.epoch_order(epoch, samples).iter().enumerate() {
            let step = epoch * samples + k;
            let alpha = schedule.alpha(step, total);
            let sigma = schedule.sigma(step, total);
            let x = dataset.row(idx);
            match cfg.bmu_scope {
                BmuScope::GlobalMasked => {
                    let bmu = map.best_of(x, &out.weights, 0..everyone.len());
                    map.update(&mut out.weights, x, &everyone, &table[bmu], alpha, sigma);
                }
                BmuScope::PerGroup => {
                    for group in &map.groups {
                        let bmu = map.best_of(x, &out.weights, group.iter().copied());
                        map.update(&mut out.weights, x, group, &table[bmu], alpha, sigma);
                    }
                }
            }
        }
        let stats = masked_stats(&map, &out, dataset);
        log::debug!(
            "epoch {epoch}: qe={:.6} te={:.4}",
            stats.quantization_error,
            stats.topographic_error
        );
        log.epochs.push(stats);
    }
    Ok((out, log))
}

fn masked_stats(map: &MaskedMap, codebook: &Codebook, dataset: ArrayView2<f64>) -> EpochStats {
    let n = dataset.nrows() as f64;
    let qe = dataset
        .rows()
        .into_iter()
        .map(|x| {
            let bmu = map.best_of(x, &codebook.weights, 0..codebook.neurons());
            map.score(x, &codebook.weights, bmu).sqrt()
        })
        .sum::<f64>()
        / n;
    let te = if codebook.neurons() < 2 {
        f64::NAN
    } else {
        let misses = dataset
            .rows()
            .into_iter()
            .filter(|x| {
                let (a, b) = map.two_best(*x, &codebook.weights);
                codebook.lattice.index_distance(a, b) != 1
            })
            .count();
        misses as f64 / n
    };
    EpochStats {
        quantization_error: qe,
        topographic_error: te,
    }
}

/// Mean masked distance from each sample to its global masked winner.
pub fn masked_quantization_error(
    codebook: &Codebook,
    dataset: ArrayView2<f64>,
    mask: &ReceptiveFieldMask,
    cfg: &MrfConfig,
) -> Result<f64> {
    check_compat(codebook, mask)?;
    codebook.check_dataset(dataset)?;
    Ok(masked_stats(&MaskedMap::new(mask, cfg), codebook, dataset).quantization_error)
}

/// Topographic error with first and second winners ranked by masked distance.
pub fn masked_topographic_error(
    codebook: &Codebook,
    dataset: ArrayView2<f64>,
    mask: &ReceptiveFieldMask,
    cfg: &MrfConfig,
) -> Result<f64> {
    if codebook.neurons() < 2 {
        return Err(Error::Configuration(
            "topographic error needs at least two neurons".into(),
        ));
    }
    check_compat(codebook, mask)?;
    codebook.check_dataset(dataset)?;
    Ok(masked_stats(&MaskedMap::new(mask, cfg), codebook, dataset).topographic_error)
}
