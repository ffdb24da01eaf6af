//! Classic Kohonen map: codebook, winner search, neighborhood updates,
//! per-sample training and the two usual quality metrics.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{gaussian, LatticeSpec};

/// Weight matrix of a map, one row per neuron in row-major lattice order.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub lattice: LatticeSpec,
    pub weights: Array2<f64>,
}

impl Codebook {
    pub fn new(lattice: LatticeSpec, weights: Array2<f64>) -> Result<Self> {
        lattice.validate()?;
        if weights.nrows() != lattice.len() {
            return Err(Error::Shape {
                expected: lattice.len(),
                got: weights.nrows(),
            });
        }
        if weights.ncols() == 0 {
            return Err(Error::Parameter("codebook needs at least one input dimension".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Data("codebook contains non-finite weights".into()));
        }
        Ok(Self { lattice, weights })
    }

    pub fn neurons(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dims(&self) -> usize {
        self.weights.ncols()
    }

    pub(crate) fn check_sample(&self, sample: ArrayView1<f64>) -> Result<()> {
        if sample.len() != self.dims() {
            return Err(Error::Shape {
                expected: self.dims(),
                got: sample.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_dataset(&self, data: ArrayView2<f64>) -> Result<()> {
        if data.nrows() == 0 {
            return Err(Error::Data("dataset is empty".into()));
        }
        if data.ncols() != self.dims() {
            return Err(Error::Shape {
                expected: self.dims(),
                got: data.ncols(),
            });
        }
        Ok(())
    }
}

/// Uniform random weights in `[-1, 1]` from a ChaCha8 stream seeded with `seed`.
pub fn init_codebook(lattice: LatticeSpec, dims: usize, seed: u64) -> Result<Codebook> {
    lattice.validate()?;
    if dims == 0 {
        return Err(Error::Parameter("dims must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-1.0, 1.0);
    let weights = Array2::from_shape_simple_fn((lattice.len(), dims), || dist.sample(&mut rng));
    Ok(Codebook { lattice, weights })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decay {
    Exponential,
    Linear,
}

impl fmt::Display for Decay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decay::Exponential => "exponential",
            Decay::Linear => "linear",
        })
    }
}

impl FromStr for Decay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(Decay::Exponential),
            "linear" => Ok(Decay::Linear),
            other => Err(Error::Parameter(format!("unknown decay `{other}`"))),
        }
    }
}

/// Learning-rate and neighborhood-radius decay over all training steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSchedule {
    pub epochs: usize,
    pub alpha0: f64,
    pub alpha_end: f64,
    pub sigma0: f64,
    pub sigma_end: f64,
    pub decay: Decay,
    pub seed: u64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            epochs: 100,
            alpha0: 0.5,
            alpha_end: 0.01,
            sigma0: 2.0,
            sigma_end: 0.5,
            decay: Decay::Exponential,
            seed: 0,
        }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(Error::Parameter(format!("alpha0 must lie in (0, 1], got {}", self.alpha0)));
        }
        if !(self.alpha_end > 0.0 && self.alpha_end <= self.alpha0) {
            return Err(Error::Parameter(format!(
                "alpha_end must lie in (0, alpha0], got {}",
                self.alpha_end
            )));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::Parameter(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        if !(self.sigma_end > 0.0 && self.sigma_end <= self.sigma0) {
            return Err(Error::Parameter(format!(
                "sigma_end must lie in (0, sigma0], got {}",
                self.sigma_end
            )));
        }
        Ok(())
    }

    /// Learning rate at global step `step` out of `total_steps`.
    pub fn alpha(&self, step: usize, total_steps: usize) -> f64 {
        self.interpolate(self.alpha0, self.alpha_end, step, total_steps)
    }

    /// Neighborhood radius at global step `step` out of `total_steps`.
    pub fn sigma(&self, step: usize, total_steps: usize) -> f64 {
        self.interpolate(self.sigma0, self.sigma_end, step, total_steps)
    }

    fn interpolate(&self, start: f64, end: f64, step: usize, total_steps: usize) -> f64 {
        if total_steps <= 1 {
            return start;
        }
        let t = step.min(total_steps - 1) as f64 / (total_steps - 1) as f64;
        match self.decay {
            Decay::Exponential => start * (end / start).powf(t),
            Decay::Linear => start + (end - start) * t,
        }
    }

    /// Sample visiting order for one epoch.
    pub(crate) fn epoch_order(&self, epoch: usize, samples: usize) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(epoch as u64));
        let mut order: Vec<usize> = (0..samples).collect();
        order.shuffle(&mut rng);
        order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub quantization_error: f64,
    /// NaN for single-neuron maps, where adjacency is undefined.
    pub topographic_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

pub(crate) fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, w)| (x - w) * (x - w)).sum()
}

fn bmu_unchecked(weights: &Array2<f64>, sample: ArrayView1<f64>) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (n, row) in weights.rows().into_iter().enumerate() {
        let d = squared_distance(sample, row);
        if d < best_d {
            best_d = d;
            best = n;
        }
    }
    best
}

/// Two closest neurons, ties broken by lower index.
fn two_bmus(weights: &Array2<f64>, sample: ArrayView1<f64>) -> (usize, usize) {
    let mut first = (usize::MAX, f64::INFINITY);
    let mut second = (usize::MAX, f64::INFINITY);
    for (n, row) in weights.rows().into_iter().enumerate() {
        let d = squared_distance(sample, row);
        if d < first.1 {
            second = first;
            first = (n, d);
        } else if d < second.1 {
            second = (n, d);
        }
    }
    (first.0, second.0)
}

/// Index of the neuron closest to `sample` in Euclidean distance. Ties go to
/// the lowest row-major index.
pub fn find_bmu(sample: ArrayView1<f64>, codebook: &Codebook) -> Result<usize> {
    codebook.check_sample(sample)?;
    Ok(bmu_unchecked(&codebook.weights, sample))
}

fn validate_rates(alpha: f64, sigma: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Moves every neuron toward `sample` by `alpha * h(d(n, bmu))`.
pub fn update_step(
    codebook: &mut Codebook,
    sample: ArrayView1<f64>,
    bmu: usize,
    alpha: f64,
    sigma: f64,
) -> Result<()> {
    codebook.check_sample(sample)?;
    validate_rates(alpha, sigma)?;
    if bmu >= codebook.neurons() {
        return Err(Error::Parameter(format!(
            "bmu index {bmu} out of range for {} neurons",
            codebook.neurons()
        )));
    }
    let lattice = codebook.lattice;
    let distances: Vec<u32> = (0..codebook.neurons())
        .map(|n| lattice.index_distance(n, bmu))
        .collect();
    apply_update(&mut codebook.weights, sample, &distances, alpha, sigma);
    Ok(())
}

fn apply_update(
    weights: &mut Array2<f64>,
    sample: ArrayView1<f64>,
    distances: &[u32],
    alpha: f64,
    sigma: f64,
) {
    for (mut row, &d) in weights.rows_mut().into_iter().zip(distances) {
        let rate = alpha * gaussian(d, sigma);
        for (w, &x) in row.iter_mut().zip(sample.iter()) {
            *w += rate * (x - *w);
        }
    }
}

/// Per-sample training over `schedule.epochs` shuffled passes.
pub fn train(
    codebook: &Codebook,
    dataset: ArrayView2<f64>,
    schedule: &TrainSchedule,
) -> Result<(Codebook, TrainLog)> {
    codebook.check_dataset(dataset)?;
    schedule.validate()?;
    let mut out = codebook.clone();
    let mut log = TrainLog::default();
    let samples = dataset.nrows();
    let total = schedule.epochs * samples;
    let table = out.lattice.distance_table();

    for epoch in 0..schedule.epochs {
        for (k, &idx) in schedule.epoch_order(epoch, samples).iter().enumerate() {
            let step = epoch * samples + k;
            let sample = dataset.row(idx);
            let bmu = bmu_unchecked(&out.weights, sample);
            apply_update(
                &mut out.weights,
                sample,
                &table[bmu],
                schedule.alpha(step, total),
                schedule.sigma(step, total),
            );
        }
        let qe = quantization_error(&out, dataset)?;
        let te = if out.neurons() >= 2 {
            topographic_error(&out, dataset)?
        } else {
            f64::NAN
        };
        log::debug!("epoch {epoch}: qe={qe:.6} te={te:.4}");
        log.epochs.push(EpochStats {
            quantization_error: qe,
            topographic_error: te,
        });
    }
    Ok((out, log))
}

/// Mean Euclidean distance from each sample to its best-matching unit.
pub fn quantization_error(codebook: &Codebook, dataset: ArrayView2<f64>) -> Result<f64> {
    codebook.check_dataset(dataset)?;
    let total: f64 = dataset
        .rows()
        .into_iter()
        .map(|x| {
            let bmu = bmu_unchecked(&codebook.weights, x);
            squared_distance(x, codebook.weights.row(bmu)).sqrt()
        })
        .sum();
    Ok(total / dataset.nrows() as f64)
}

/// Fraction of samples whose first and second BMU are not lattice neighbors.
pub fn topographic_error(codebook: &Codebook, dataset: ArrayView2<f64>) -> Result<f64> {
    if codebook.neurons() < 2 {
        return Err(Error::Configuration(
            "topographic error needs at least two neurons".into(),
        ));
    }
    codebook.check_dataset(dataset)?;
    let lattice = codebook.lattice;
    let misses = dataset
        .rows()
        .into_iter()
        .filter(|x| {
            let (a, b) = two_bmus(&codebook.weights, *x);
            lattice.index_distance(a, b) != 1
        })
        .count();
    Ok(misses as f64 / dataset.nrows() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};
    use rand::Rng;

    fn line(n: usize) -> LatticeSpec {
        LatticeSpec::grid(1, n).unwrap()
    }

    fn book(lattice: LatticeSpec, w: Array2<f64>) -> Codebook {
        Codebook::new(lattice, w).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_shaped() {
        let a = init_codebook(LatticeSpec::default(), 7, 42).unwrap();
        let b = init_codebook(LatticeSpec::default(), 7, 42).unwrap();
        assert_eq!(a.weights.dim(), (16, 7));
        assert_eq!(a, b);
        let c = init_codebook(LatticeSpec::default(), 7, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_single_weight_in_range() {
        for seed in 0..50 {
            let cb = init_codebook(line(1), 1, seed).unwrap();
            let w = cb.weights[[0, 0]];
            assert!((-1.0..=1.0).contains(&w));
        }
    }

    #[test]
    fn bmu_examples() {
        let cb = book(line(2), array![[0.0, 0.0], [1.0, 1.0]]);
        assert_eq!(find_bmu(array![0.9, 0.9].view(), &cb).unwrap(), 1);
        assert_eq!(find_bmu(array![1.0, 1.0].view(), &cb).unwrap(), 1);
        assert_eq!(find_bmu(array![0.0, 0.0].view(), &cb).unwrap(), 0);
        // equidistant: lower index wins
        assert_eq!(find_bmu(array![0.5, 0.5].view(), &cb).unwrap(), 0);
        assert!(matches!(
            find_bmu(array![0.5].view(), &cb),
            Err(Error::Shape { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn full_step_lands_on_sample() {
        let mut cb = book(line(2), array![[0.0, 0.0], [5.0, 5.0]]);
        update_step(&mut cb, array![1.0, 2.0].view(), 0, 1.0, 1.0).unwrap();
        assert_eq!(cb.weights.row(0), array![1.0, 2.0]);
    }

    #[test]
    fn half_step_arithmetic() {
        let mut cb = book(line(1), array![[0.0, 0.0]]);
        update_step(&mut cb, array![1.0, 0.0].view(), 0, 0.5, 1.0).unwrap();
        assert_eq!(cb.weights.row(0), array![0.5, 0.0]);
    }

    #[test]
    fn update_rejects_bad_rates() {
        let mut cb = book(line(1), array![[0.0]]);
        let x = array![1.0];
        assert!(update_step(&mut cb, x.view(), 0, 0.0, 1.0).is_err());
        assert!(update_step(&mut cb, x.view(), 0, 1.5, 1.0).is_err());
        assert!(update_step(&mut cb, x.view(), 0, 0.5, 0.0).is_err());
        assert!(update_step(&mut cb, x.view(), 3, 0.5, 1.0).is_err());
    }

    #[test]
    fn update_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let lattice = LatticeSpec::grid(rng.gen_range(1..5), rng.gen_range(1..5)).unwrap();
            let dims = rng.gen_range(1..8);
            let cb = init_codebook(lattice, dims, rng.gen()).unwrap();
            let x: Array1<f64> = (0..dims).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let bmu = rng.gen_range(0..lattice.len());
            let alpha = rng.gen_range(0.01..1.0);
            let sigma = rng.gen_range(0.1..3.0);

            let mut oracle = cb.weights.clone();
            for n in 0..lattice.len() {
                let (r0, c0) = (n / lattice.cols, n % lattice.cols);
                let (r1, c1) = (bmu / lattice.cols, bmu % lattice.cols);
                let d = (r0 as f64 - r1 as f64).abs() + (c0 as f64 - c1 as f64).abs();
                let h = (-(d * d) / (2.0 * sigma * sigma)).exp();
                for i in 0..dims {
                    oracle[[n, i]] += alpha * h * (x[i] - oracle[[n, i]]);
                }
            }

            let mut got = cb.clone();
            update_step(&mut got, x.view(), bmu, alpha, sigma).unwrap();
            for (a, b) in got.weights.iter().zip(oracle.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn update_stays_on_segment_and_bmu_improves() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let cb = init_codebook(LatticeSpec::default(), 3, rng.gen()).unwrap();
            let x: Array1<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bmu = find_bmu(x.view(), &cb).unwrap();
            let mut next = cb.clone();
            update_step(&mut next, x.view(), bmu, rng.gen_range(0.01..1.0), 1.5).unwrap();
            for n in 0..16 {
                for i in 0..3 {
                    let (lo, hi) = if cb.weights[[n, i]] <= x[i] {
                        (cb.weights[[n, i]], x[i])
                    } else {
                        (x[i], cb.weights[[n, i]])
                    };
                    let w = next.weights[[n, i]];
                    assert!(w >= lo && w <= hi);
                }
            }
            let before = squared_distance(x.view(), cb.weights.row(bmu));
            let after = squared_distance(x.view(), next.weights.row(bmu));
            assert!(after < before);
        }
    }

    #[test]
    fn zero_epochs_is_identity() {
        let cb = init_codebook(LatticeSpec::default(), 2, 1).unwrap();
        let data = array![[0.1, 0.2], [0.3, 0.4]];
        let schedule = TrainSchedule { epochs: 0, ..TrainSchedule::default() };
        let (out, log) = train(&cb, data.view(), &schedule).unwrap();
        assert_eq!(out, cb);
        assert!(log.epochs.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let cb = init_codebook(LatticeSpec::default(), 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = Array2::from_shape_simple_fn((200, 2), || rng.gen_range(0.0..1.0));
        let schedule = TrainSchedule { epochs: 5, seed: 11, ..TrainSchedule::default() };
        let (a, la) = train(&cb, data.view(), &schedule).unwrap();
        let (b, lb) = train(&cb, data.view(), &schedule).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        assert_eq!(la.epochs.len(), 5);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let cb = init_codebook(LatticeSpec::default(), 2, 3).unwrap();
        let data = Array2::<f64>::zeros((0, 2));
        assert!(matches!(
            train(&cb, data.view(), &TrainSchedule::default()),
            Err(Error::Data(_))
        ));
        assert!(matches!(quantization_error(&cb, data.view()), Err(Error::Data(_))));
    }

    #[test]
    fn schedule_endpoints_and_monotonicity() {
        for decay in [Decay::Exponential, Decay::Linear] {
            let s = TrainSchedule { decay, ..TrainSchedule::default() };
            let total = 977;
            assert_eq!(s.alpha(0, total), s.alpha0);
            assert_eq!(s.sigma(0, total), s.sigma0);
            assert!(((s.alpha(total - 1, total) - s.alpha_end) / s.alpha_end).abs() < 1e-9);
            assert!(((s.sigma(total - 1, total) - s.sigma_end) / s.sigma_end).abs() < 1e-9);
            for t in 1..total {
                assert!(s.alpha(t, total) <= s.alpha(t - 1, total));
                assert!(s.sigma(t, total) <= s.sigma(t - 1, total));
            }
        }
    }

    #[test]
    fn schedule_validation() {
        let bad = TrainSchedule { alpha_end: 0.9, ..TrainSchedule::default() };
        assert!(bad.validate().is_err());
        let bad = TrainSchedule { sigma0: -1.0, ..TrainSchedule::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn qe_examples() {
        let cb = book(line(2), array![[0.0, 0.0], [1.0, 1.0]]);
        assert_eq!(quantization_error(&cb, array![[0.0, 0.0], [1.0, 1.0]].view()).unwrap(), 0.0);
        let single = book(line(1), array![[0.0, 0.0]]);
        let qe = quantization_error(&single, array![[1.0, 0.0], [0.0, 1.0]].view()).unwrap();
        assert_eq!(qe, 1.0);
    }

    #[test]
    fn te_examples() {
        let pair = book(line(2), array![[0.0], [1.0]]);
        let data = array![[0.2], [0.7], [5.0], [-3.0]];
        assert_eq!(topographic_error(&pair, data.view()).unwrap(), 0.0);

        // Neurons 0 and 2 are nearest for every sample but not adjacent.
        let gap = book(line(3), array![[0.0], [10.0], [1.0]]);
        assert_eq!(topographic_error(&gap, array![[0.4], [0.6]].view()).unwrap(), 1.0);

        let single = book(line(1), array![[0.0]]);
        assert!(matches!(
            topographic_error(&single, array![[0.0]].view()),
            Err(Error::Configuration(_))
        ));
    }

    // Re-centering minimizes squared distortion, not the mean Euclidean
    // distance, so the property is checked on squared distortion.
    fn distortion(cb: &Codebook, data: ArrayView2<f64>) -> f64 {
        data.rows()
            .into_iter()
            .map(|x| squared_distance(x, cb.weights.row(find_bmu(x, cb).unwrap())))
            .sum::<f64>()
            / data.nrows() as f64
    }

    #[test]
    fn recentering_a_neuron_never_raises_distortion() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let cb = init_codebook(LatticeSpec::grid(2, 2).unwrap(), 2, rng.gen()).unwrap();
            let data = Array2::from_shape_simple_fn((30, 2), || rng.gen_range(-1.0..1.0));
            let before = distortion(&cb, data.view());
            let target = rng.gen_range(0..4);
            let members: Vec<_> = data
                .rows()
                .into_iter()
                .filter(|x| find_bmu(*x, &cb).unwrap() == target)
                .collect();
            if members.is_empty() {
                continue;
            }
            let mut next = cb.clone();
            let mean = members.iter().fold(Array1::zeros(2), |acc, x| acc + x) / members.len() as f64;
            next.weights.row_mut(target).assign(&mean);
            let after = distortion(&next, data.view());
            assert!(after <= before + 1e-12);
        }
    }
}
