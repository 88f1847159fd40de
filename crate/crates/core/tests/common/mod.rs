//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's numerical code paths.
#![allow(dead_code)]

use mfnet::features::{apply_scaling, expand_all, fit_scaling};
use mfnet::network::{Model, Topology};
use mfnet::training::{init_weights, one_hot, InitEpsilon};
use mfnet::{CarcinomaClass, Dataset, GeneratorSpec, MultifractalSample};
use ndarray::Array2;

pub fn plain_sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Straight-line forward pass: explicit loops over nested vectors.
pub fn loop_forward(theta1: &[Vec<f64>], theta2: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let mut hidden = vec![1.0];
    for row in theta1 {
        let mut z = row[0];
        for n in 0..x.len() {
            z += row[n + 1] * x[n];
        }
        hidden.push(plain_sigmoid(z));
    }
    let mut out = Vec::new();
    for row in theta2 {
        let mut z = 0.0;
        for n in 0..hidden.len() {
            z += row[n] * hidden[n];
        }
        out.push(plain_sigmoid(z));
    }
    out
}

pub fn to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Regularized cross-entropy computed with loops, used for finite differences.
pub fn loop_cost(
    theta1: &[Vec<f64>],
    theta2: &[Vec<f64>],
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    lambda: f64,
) -> f64 {
    let m = x.len() as f64;
    let mut total = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let h = loop_forward(theta1, theta2, xi);
        for k in 0..h.len() {
            let hk = h[k].clamp(1e-12, 1.0 - 1e-12);
            total += -yi[k] * hk.ln() - (1.0 - yi[k]) * (1.0 - hk).ln();
        }
    }
    let mut reg = 0.0;
    for row in theta1.iter().chain(theta2) {
        for w in &row[1..] {
            reg += w * w;
        }
    }
    total / m + lambda / (2.0 * m) * reg
}

/// Central differences of [`loop_cost`] for every weight, θ1 then θ2, row-major.
pub fn numeric_gradient(
    theta1: &[Vec<f64>],
    theta2: &[Vec<f64>],
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    lambda: f64,
    step: f64,
) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t1 = theta1.to_vec();
    let mut t2 = theta2.to_vec();
    for layer in 0..2 {
        let rows = if layer == 0 { t1.len() } else { t2.len() };
        for r in 0..rows {
            let cols = if layer == 0 { t1[r].len() } else { t2[r].len() };
            for c in 0..cols {
                let w = if layer == 0 { t1[r][c] } else { t2[r][c] };
                let set = |t1: &mut Vec<Vec<f64>>, t2: &mut Vec<Vec<f64>>, v: f64| {
                    if layer == 0 {
                        t1[r][c] = v
                    } else {
                        t2[r][c] = v
                    }
                };
                set(&mut t1, &mut t2, w + step);
                let plus = loop_cost(&t1, &t2, x, y, lambda);
                set(&mut t1, &mut t2, w - step);
                let minus = loop_cost(&t1, &t2, x, y, lambda);
                set(&mut t1, &mut t2, w);
                out.push((plus - minus) / (2.0 * step));
            }
        }
    }
    out
}

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / (a.abs() + n.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Tiny deterministic generator (splitmix64) for test fixtures.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn class(&mut self) -> CarcinomaClass {
        CarcinomaClass::ALL[(self.next_u64() % 3) as usize]
    }
}

/// Scaled features, one-hot targets and a randomly initialized model for a
/// small synthetic problem.
pub struct Problem {
    pub model: Model,
    pub x: Array2<f64>,
    pub y: Array2<f64>,
}

pub fn small_problem(per_class: usize, hidden: usize, lambda: f64, seed: u64) -> Problem {
    let data = mfnet::dataio::generate(&GeneratorSpec::with_sigma(0.01, per_class, seed)).unwrap();
    let raw = expand_all(data.samples()).unwrap();
    let scaling = fit_scaling(raw.view()).unwrap();
    let x = apply_scaling(raw.view(), &scaling).unwrap();
    let y = one_hot(&data.labels());
    let (t1, t2) = init_weights(Topology::pipeline(hidden).unwrap(), seed ^ 0xABCD, InitEpsilon::Auto).unwrap();
    Problem {
        model: Model::new(t1, t2, scaling, lambda).unwrap(),
        x,
        y,
    }
}

/// Nearest class centroid on the raw six parameters, centroids from `train`.
pub fn nearest_centroid_accuracy(train: &[MultifractalSample], test: &[MultifractalSample]) -> f64 {
    let mut centroids = [[0.0f64; 6]; 3];
    let mut counts = [0usize; 3];
    for s in train {
        let k = s.label.unwrap().index();
        counts[k] += 1;
        for (c, p) in centroids[k].iter_mut().zip(s.params()) {
            *c += p;
        }
    }
    for k in 0..3 {
        for c in centroids[k].iter_mut() {
            *c /= counts[k] as f64;
        }
    }
    let correct = test
        .iter()
        .filter(|s| {
            let p = s.params();
            let best = (0..3)
                .min_by(|&a, &b| {
                    let da: f64 = (0..6).map(|i| (p[i] - centroids[a][i]).powi(2)).sum();
                    let db: f64 = (0..6).map(|i| (p[i] - centroids[b][i]).powi(2)).sum();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            best == s.label.unwrap().index()
        })
        .count();
    correct as f64 / test.len() as f64
}

pub fn accuracy(model: &Model, data: &Dataset) -> f64 {
    let preds = mfnet::network::predict_batch(model, data.samples(), mfnet::Execution::default()).unwrap();
    let ok = preds
        .iter()
        .zip(data.samples())
        .filter(|(p, s)| Some(p.class) == s.label)
        .count();
    ok as f64 / data.len() as f64
}

/// Brute-force one-vs-rest tally.
pub fn tally(pred: &[u8], truth: &[u8], k: u8) -> (u64, u64, u64, u64) {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for i in 0..pred.len() {
        if pred[i] == k && truth[i] == k {
            tp += 1;
        } else if pred[i] == k {
            fp += 1;
        } else if truth[i] == k {
            fn_ += 1;
        } else {
            tn += 1;
        }
    }
    (tp, fp, fn_, tn)
}
