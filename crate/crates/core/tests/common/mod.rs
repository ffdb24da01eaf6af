//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the code paths it checks.

#![allow(dead_code)]

use mrf_som::datagen::{Axis, ChainSpec};
use nalgebra::{Point3, Translation3, UnitQuaternion, Vector3};

pub type Matrix = Vec<Vec<f64>>;

fn sq(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s
}

/// Lowest index among the minimizers of `score`.
fn argmin(scores: &[f64]) -> usize {
    let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    scores.iter().position(|&s| s == min).unwrap()
}

pub fn bmu(weights: &Matrix, x: &[f64]) -> usize {
    let scores: Vec<f64> = weights.iter().map(|w| sq(w, x)).collect();
    argmin(&scores)
}

pub fn masked_score(w: &[f64], x: &[f64], active: &[bool], rms: bool) -> f64 {
    let mut s = 0.0;
    let mut k = 0;
    for i in 0..x.len() {
        if active[i] {
            s += (x[i] - w[i]) * (x[i] - w[i]);
            k += 1;
        }
    }
    if rms {
        s / k as f64
    } else {
        s
    }
}

pub fn masked_bmu(weights: &Matrix, x: &[f64], mask: &[Vec<bool>], rms: bool, candidates: &[usize]) -> usize {
    let scores: Vec<f64> = candidates
        .iter()
        .map(|&n| masked_score(&weights[n], x, &mask[n], rms))
        .collect();
    candidates[argmin(&scores)]
}

/// Mean Euclidean distance to the nearest row.
pub fn quantization_error(weights: &Matrix, data: &Matrix) -> f64 {
    let mut total = 0.0;
    for x in data {
        let best = weights.iter().map(|w| sq(w, x)).fold(f64::INFINITY, f64::min);
        total += best.sqrt();
    }
    total / data.len() as f64
}

fn manhattan(a: usize, b: usize, cols: usize) -> usize {
    (a / cols).abs_diff(b / cols) + (a % cols).abs_diff(b % cols)
}

/// Sorts neurons by (distance, index) and checks the first two for adjacency.
pub fn topographic_error(weights: &Matrix, data: &Matrix, cols: usize) -> f64 {
    let mut misses = 0;
    for x in data {
        let mut order: Vec<(f64, usize)> = weights.iter().enumerate().map(|(n, w)| (sq(w, x), n)).collect();
        order.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if manhattan(order[0].1, order[1].1, cols) != 1 {
            misses += 1;
        }
    }
    misses as f64 / data.len() as f64
}

pub fn pair_rms(weights: &Matrix, mask: &[Vec<bool>], a: usize, b: usize) -> f64 {
    let mut s = 0.0;
    let mut k = 0.0;
    for i in 0..weights[a].len() {
        if mask[a][i] || mask[b][i] {
            s += (weights[a][i] - weights[b][i]).powi(2);
            k += 1.0;
        }
    }
    (s / k).sqrt()
}

/// Per-cell mean over 4-neighbors on a rectangular Manhattan grid.
pub fn distance_map(weights: &Matrix, mask: &[Vec<bool>], rows: usize, cols: usize) -> Matrix {
    let mut out = vec![vec![0.0; cols]; rows];
    for r in 0..rows {
        for c in 0..cols {
            let mut total = 0.0;
            let mut k = 0.0;
            let steps: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
            for (dr, dc) in steps {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                    continue;
                }
                total += pair_rms(weights, mask, r * cols + c, nr as usize * cols + nc as usize);
                k += 1.0;
            }
            out[r][c] = if k > 0.0 { total / k } else { 0.0 };
        }
    }
    out
}

pub fn group_distance(weights: &Matrix, mask: &[Vec<bool>], a: &[usize], b: &[usize]) -> f64 {
    let mut total = 0.0;
    for &x in a {
        for &y in b {
            total += pair_rms(weights, mask, x, y);
        }
    }
    total / (a.len() * b.len()) as f64
}

/// Hand and face target by rotating points joint by joint with quaternions.
pub fn fk_oracle(angles: &[f64], chain: &ChainSpec) -> ([f64; 3], [f64; 3]) {
    let axis = |a: Axis| match a {
        Axis::X => Vector3::x_axis(),
        Axis::Y => Vector3::y_axis(),
        Axis::Z => Vector3::z_axis(),
    };
    let rot = |j: usize| UnitQuaternion::from_axis_angle(&axis(chain.axes[j]), angles[j]);
    let v = |a: [f64; 3]| Vector3::new(a[0], a[1], a[2]);

    let mut p = Point3::origin();
    p = rot(6) * p;
    p = Translation3::new(chain.forearm_hand, 0.0, 0.0) * p;
    p = rot(4) * p;
    p = rot(5) * p;
    p = Translation3::new(chain.upper_arm, 0.0, 0.0) * p;
    p = rot(2) * p;
    p = rot(3) * p;
    p += v(chain.shoulder_offset);

    let mut f = Point3::from(v(chain.face_target));
    f = rot(1) * f;
    f = rot(0) * f;
    f += v(chain.neck_offset);
    ([p.x, p.y, p.z], [f.x, f.y, f.z])
}

pub fn touches(angles: &[f64], chain: &ChainSpec) -> bool {
    let (h, f) = fk_oracle(angles, chain);
    let d = ((h[0] - f[0]).powi(2) + (h[1] - f[1]).powi(2) + (h[2] - f[2]).powi(2)).sqrt();
    d < chain.touch_radius
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx).powi(2);
        syy += (y[i] - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}
