//! Evaluation artifacts of a trained map: per-joint weight heatmaps, the
//! neuron-distance map, the per-neuron encoding report and the cluster
//! separation statistic.

use serde::{Deserialize, Serialize};

use crate::datagen::JOINT_NAMES;
use crate::error::{Error, Result};
use crate::mrf::ReceptiveFieldMask;
use crate::numfmt::sig17;
use crate::som::Codebook;

/// Cell literal for weights outside a neuron's receptive field.
pub const NOT_CONNECTED: &str = "NC";

/// Default relative threshold for a joint to count toward a combination.
pub const COMBINATION_THRESHOLD: f64 = 0.25;

/// Name of input dimension `i`, usable in file names.
pub fn joint_label(i: usize, dims: usize) -> String {
    if dims == JOINT_NAMES.len() {
        JOINT_NAMES[i].to_string()
    } else {
        format!("dim{i}")
    }
}

fn check_compat(codebook: &Codebook, mask: &ReceptiveFieldMask) -> Result<()> {
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

/// RMS weight difference of two neurons over the union of their active dims.
pub fn pair_distance(codebook: &Codebook, mask: &ReceptiveFieldMask, a: usize, b: usize) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..codebook.dims() {
        if mask.active[[a, i]] || mask.active[[b, i]] {
            let d = codebook.weights[[a, i]] - codebook.weights[[b, i]];
            sum += d * d;
            count += 1;
        }
    }
    (sum / count as f64).sqrt()
}

/// One `rows x cols` grid of weights per input joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSet {
    pub rows: usize,
    pub cols: usize,
    pub joints: Vec<String>,
    /// `grids[joint][row][col]`; `None` where the neuron is not connected.
    pub grids: Vec<Vec<Vec<Option<f64>>>>,
}

pub fn build_heatmaps(codebook: &Codebook, mask: &ReceptiveFieldMask) -> Result<HeatmapSet> {
    check_compat(codebook, mask)?;
    let lattice = codebook.lattice;
    let dims = codebook.dims();
    let grids = (0..dims)
        .map(|j| {
            (0..lattice.rows)
                .map(|r| {
                    (0..lattice.cols)
                        .map(|c| {
                            let n = r * lattice.cols + c;
                            mask.active[[n, j]].then(|| codebook.weights[[n, j]])
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(HeatmapSet {
        rows: lattice.rows,
        cols: lattice.cols,
        joints: (0..dims).map(|j| joint_label(j, dims)).collect(),
        grids,
    })
}

impl HeatmapSet {
    /// Grid as CSV: one line per lattice row, `NC` for unconnected cells.
    pub fn to_csv(&self, joint: usize) -> String {
        let mut out = String::new();
        for row in &self.grids[joint] {
            let cells: Vec<String> = row
                .iter()
                .map(|c| c.map_or_else(|| NOT_CONNECTED.to_string(), sig17))
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Vec<Vec<Option<f64>>>> {
        text.lines()
            .enumerate()
            .map(|(r, line)| {
                line.split(',')
                    .enumerate()
                    .map(|(c, cell)| {
                        if cell == NOT_CONNECTED {
                            Ok(None)
                        } else {
                            cell.parse().map(Some).map_err(|_| {
                                Error::parse("heatmap", format!("row {}, column {}", r + 1, c + 1), format!("bad cell `{cell}`"))
                            })
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Binary P5 image, min-max scaled over connected cells; unconnected
    /// cells are 0.
    pub fn to_pgm(&self, joint: usize) -> Vec<u8> {
        let values: Vec<f64> = self.grids[joint].iter().flatten().flatten().copied().collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.pgm(joint, |v| {
            if hi > lo {
                ((v - lo) / (hi - lo) * 255.0).round() as u8
            } else {
                255
            }
        })
    }

    /// Sidecar P5 image: 255 where connected, 0 where not.
    pub fn mask_pgm(&self, joint: usize) -> Vec<u8> {
        self.pgm(joint, |_| 255)
    }

    fn pgm(&self, joint: usize, shade: impl Fn(f64) -> u8) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        out.extend(
            self.grids[joint]
                .iter()
                .flatten()
                .map(|c| c.map_or(0, &shade)),
        );
        out
    }
}

/// Mean codebook distance from each neuron to its lattice neighbors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronDistanceMap {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<Vec<f64>>,
}

pub fn build_distance_map(codebook: &Codebook, mask: &ReceptiveFieldMask) -> Result<NeuronDistanceMap> {
    check_compat(codebook, mask)?;
    let lattice = codebook.lattice;
    let mut cells = vec![vec![0.0; lattice.cols]; lattice.rows];
    for n in 0..lattice.len() {
        let neighbors = lattice.neighbors(n);
        if neighbors.is_empty() {
            continue;
        }
        let total: f64 = neighbors.iter().map(|&m| pair_distance(codebook, mask, n, m)).sum();
        let c = lattice.coord(n);
        cells[c.row][c.col] = total / neighbors.len() as f64;
    }
    Ok(NeuronDistanceMap {
        rows: lattice.rows,
        cols: lattice.cols,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    SingleJoint,
    Combination,
    InhibitoryCombination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronEncoding {
    pub index: usize,
    pub row: usize,
    pub col: usize,
    pub label: String,
    pub group: String,
    pub active_joints: Vec<String>,
    /// Per joint, `None` where not connected.
    pub weights: Vec<Option<f64>>,
    /// Active joint with the largest absolute weight.
    pub preferred_joint: String,
    /// Largest absolute weight among the group's shared joints.
    pub preferred_group_joint: Option<String>,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub neurons: Vec<usize>,
    /// Joints every member is connected to.
    pub shared_joints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingReport {
    pub joints: Vec<String>,
    pub combination_threshold: f64,
    pub neurons: Vec<NeuronEncoding>,
    pub groups: Vec<GroupSummary>,
    /// Mean cross-group pair distance, zero on the diagonal.
    pub group_distances: Vec<Vec<f64>>,
}

fn argmax_abs(codebook: &Codebook, n: usize, dims: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &i in dims {
        let v = codebook.weights[[n, i]].abs();
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Per-neuron joint preferences and classification. `threshold` is the
/// fraction of the neuron's largest absolute weight a joint needs to count
/// toward a combination.
pub fn build_encoding_report(
    codebook: &Codebook,
    mask: &ReceptiveFieldMask,
    threshold: f64,
) -> Result<EncodingReport> {
    check_compat(codebook, mask)?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Parameter(format!(
            "combination threshold must lie in [0, 1], got {threshold}"
        )));
    }
    let dims = codebook.dims();
    let names: Vec<String> = (0..dims).map(|j| joint_label(j, dims)).collect();
    let groups = mask.groups();
    let group_names = mask.group_names();

    let summaries: Vec<GroupSummary> = groups
        .iter()
        .map(|(name, members)| GroupSummary {
            name: name.clone(),
            neurons: members.clone(),
            shared_joints: mask.base_dims(members).into_iter().map(|j| names[j].clone()).collect(),
        })
        .collect();

    let mut neurons = Vec::with_capacity(codebook.neurons());
    for n in 0..codebook.neurons() {
        let active = mask.active_dims(n);
        let preferred = argmax_abs(codebook, n, &active).expect("receptive field is non-empty");
        let peak = codebook.weights[[n, preferred]].abs();
        let strong = active
            .iter()
            .filter(|&&i| codebook.weights[[n, i]].abs() >= threshold * peak)
            .count();
        let classification = if active.iter().any(|&i| codebook.weights[[n, i]] < 0.0) {
            Classification::InhibitoryCombination
        } else if strong >= 2 {
            Classification::Combination
        } else {
            Classification::SingleJoint
        };
        let home = groups
            .iter()
            .find(|(g, _)| *g == group_names[n])
            .expect("every neuron has a group");
        let shared = mask.base_dims(&home.1);
        let coord = codebook.lattice.coord(n);
        neurons.push(NeuronEncoding {
            index: n,
            row: coord.row,
            col: coord.col,
            label: mask.label(n).unwrap_or("all").to_string(),
            group: group_names[n].clone(),
            active_joints: active.iter().map(|&j| names[j].clone()).collect(),
            weights: (0..dims)
                .map(|j| mask.active[[n, j]].then(|| codebook.weights[[n, j]]))
                .collect(),
            preferred_joint: names[preferred].clone(),
            preferred_group_joint: argmax_abs(codebook, n, &shared).map(|j| names[j].clone()),
            classification,
        });
    }

    let g = groups.len();
    let mut group_distances = vec![vec![0.0; g]; g];
    for a in 0..g {
        for b in (a + 1)..g {
            let (ma, mb) = (&groups[a].1, &groups[b].1);
            let mut total = 0.0;
            for &x in ma {
                for &y in mb {
                    total += pair_distance(codebook, mask, x, y);
                }
            }
            let mean = total / (ma.len() * mb.len()) as f64;
            group_distances[a][b] = mean;
            group_distances[b][a] = mean;
        }
    }

    Ok(EncodingReport {
        joints: names,
        combination_threshold: threshold,
        neurons,
        groups: summaries,
        group_distances,
    })
}

impl EncodingReport {
    pub fn group_index(&self, name: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.name == name)
    }

    /// Distance between two named groups.
    pub fn group_distance(&self, a: &str, b: &str) -> Result<f64> {
        let ia = self
            .group_index(a)
            .ok_or_else(|| Error::Report(format!("group `{a}` missing from report")))?;
        let ib = self
            .group_index(b)
            .ok_or_else(|| Error::Report(format!("group `{b}` missing from report")))?;
        Ok(self.group_distances[ia][ib])
    }
}

/// Shoulder-elbow distance over the mean of the four shoulder/elbow to
/// head/wrist distances. NaN, with a warning, when the denominator is zero.
pub fn cluster_separation_ratio(report: &EncodingReport) -> Result<f64> {
    let near = report.group_distance("shoulder", "elbow")?;
    let far = [
        report.group_distance("shoulder", "head")?,
        report.group_distance("shoulder", "wrist")?,
        report.group_distance("elbow", "head")?,
        report.group_distance("elbow", "wrist")?,
    ];
    let mean = far.iter().sum::<f64>() / far.len() as f64;
    if mean == 0.0 {
        log::warn!("cluster separation ratio undefined: all cross-group distances are zero");
        return Ok(f64::NAN);
    }
    Ok(near / mean)
}

/// Distance map and encoding report as one export document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisDocument {
    pub distance_map: NeuronDistanceMap,
    pub encoding_report: EncodingReport,
    /// `null` when the mask has no body-part groups or the ratio is undefined.
    pub cluster_separation_ratio: Option<f64>,
}
