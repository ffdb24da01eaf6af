use ndarray::Array2;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kinematics::{ChainSpec, JointSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub attempts: u64,
    pub accepted: usize,
    pub acceptance_rate: f64,
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Rejection sampler for self-touch postures.
///
/// Joint angles are drawn uniformly within their limits and kept when the hand
/// lies strictly within `touch_radius` of the face target. Returns exactly `n`
/// rows in [`super::JOINT_NAMES`] order.
pub fn synthesize_self_touch(
    chain: &ChainSpec,
    n: usize,
    seed: u64,
    max_attempts: u64,
) -> Result<(Array2<f64>, SampleReport)> {
    chain.validate()?;
    if n == 0 {
        return Err(Error::Parameter("sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dists: Vec<Uniform<f64>> = chain
        .limits
        .iter()
        .map(|&(lo, hi)| Uniform::new_inclusive(lo, hi))
        .collect();

    let mut data = Array2::zeros((n, 7));
    let mut accepted = 0;
    let mut attempts = 0u64;
    while accepted < n {
        if attempts >= max_attempts {
            return Err(Error::Sampling(format!(
                "accepted {accepted} of {n} postures after {attempts} attempts; \
                 increase the touch radius (currently {} m) or max_attempts",
                chain.touch_radius
            )));
        }
        attempts += 1;
        let mut angles = [0.0; 7];
        for (a, d) in angles.iter_mut().zip(&dists) {
            *a = d.sample(&mut rng);
        }
        let (hand, face) = chain.hand_and_face(&JointSample::new(angles));
        if distance(hand, face) < chain.touch_radius {
            data.row_mut(accepted).assign(&ndarray::ArrayView1::from(&angles));
            accepted += 1;
        }
    }
    let report = SampleReport {
        attempts,
        accepted,
        acceptance_rate: accepted as f64 / attempts as f64,
    };
    log::info!(
        "accepted {accepted} postures in {attempts} attempts (rate {:.5})",
        report.acceptance_rate
    );
    Ok((data, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::forward_kinematics;

    #[test]
    fn accepted_rows_touch_and_respect_limits() {
        let chain = ChainSpec::default();
        let (data, report) = synthesize_self_touch(&chain, 200, 4, 50_000_000).unwrap();
        assert_eq!(data.dim(), (200, 7));
        assert_eq!(report.accepted, 200);
        assert!(report.acceptance_rate > 0.0 && report.acceptance_rate < 1.0);
        for row in data.rows() {
            let q = JointSample::new(row.to_vec().try_into().unwrap());
            let (hand, face) = forward_kinematics(&q, &chain).unwrap();
            assert!(distance(hand, face) < chain.touch_radius);
        }
    }

    #[test]
    fn infinite_radius_accepts_everything() {
        let chain = ChainSpec { touch_radius: f64::INFINITY, ..ChainSpec::default() };
        let (data, report) = synthesize_self_touch(&chain, 500, 1, 500).unwrap();
        assert_eq!(report.attempts, 500);
        assert_eq!(report.acceptance_rate, 1.0);
        for row in data.rows() {
            for (v, &(lo, hi)) in row.iter().zip(&chain.limits) {
                assert!(*v >= lo && *v <= hi);
            }
        }
    }

    #[test]
    fn same_seed_same_rows() {
        let chain = ChainSpec::default();
        let (a, _) = synthesize_self_touch(&chain, 50, 9, 50_000_000).unwrap();
        let (b, _) = synthesize_self_touch(&chain, 50, 9, 50_000_000).unwrap();
        assert_eq!(a, b);
        let (c, _) = synthesize_self_touch(&chain, 50, 10, 50_000_000).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn exhausted_attempts_is_a_sampling_error() {
        let chain = ChainSpec { touch_radius: 1e-6, ..ChainSpec::default() };
        match synthesize_self_touch(&chain, 5, 1, 10_000) {
            Err(Error::Sampling(msg)) => assert!(msg.contains("touch radius")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
