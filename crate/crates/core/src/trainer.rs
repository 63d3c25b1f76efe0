//! Fidelity cost, analytic gradients, Adam, and the training loop.
//!
//! The batch cost is the mean over points of `1 − |⟨Y_c|ψ(x)⟩|²`. Gradients
//! come from one forward sweep that stores the intermediate states and one
//! backward sweep of the bra `⟨Y_c|` through the gate chain, using
//! `∂R_A(v)/∂v = (−i A / 2) R_A(v)`.

use std::time::Instant;

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, LabeledPoint, Point2};
use crate::model::{classify_exact, LabelSet, ModelError, UqcParams, PARAMS_PER_LAYER};
use crate::qmath::{ry, rz, PureState, Unitary2};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("train set is `{train}` but test set is `{test}`")]
    ProblemMismatch { train: String, test: String },
    #[error("label {label} has no label state among {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.6,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(TrainError::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Moment estimates and step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(num_params: usize) -> Self {
        Self {
            m: vec![T::zero(); num_params],
            v: vec![T::zero(); num_params],
            t: 0,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, grad: &[T], params: &mut [T], cfg: &AdamConfig) -> Result<(), TrainError> {
        let n = self.m.len();
        for len in [grad.len(), params.len(), self.v.len()] {
            if len != n {
                return Err(TrainError::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        self.t += 1;
        let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
        let lr = T::of(cfg.learning_rate);
        let eps = T::of(cfg.epsilon);
        let bc1 = T::one() - b1.powi(self.t as i32);
        let bc2 = T::one() - b2.powi(self.t as i32);
        for i in 0..n {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::step`] over model parameters.
pub fn adam_step<T: Scalar>(
    state: &AdamState<T>,
    grad: &[T],
    params: &UqcParams<T>,
    cfg: &AdamConfig,
) -> Result<(AdamState<T>, UqcParams<T>), TrainError> {
    let mut next = state.clone();
    let mut flat = params.to_flat();
    next.step(grad, &mut flat, cfg)?;
    let updated = UqcParams::from_flat(&flat, params.num_classes)?;
    Ok((next, updated))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    /// Return the parameters of the epoch with the highest test accuracy
    /// (earliest on ties) instead of the last epoch.
    #[serde(default = "default_keep_best")]
    pub keep_best: bool,
}

fn default_keep_best() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 100,
            shuffle_seed: 0,
            keep_best: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_batch_cost: f64,
    pub test_accuracy: f64,
    /// Wall-clock seconds spent in the epoch.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainMetrics {
    pub batch_costs: Vec<f64>,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub selected_epoch: usize,
}

impl TrainMetrics {
    pub fn final_accuracy(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.test_accuracy)
    }

    pub fn best_accuracy(&self) -> f64 {
        self.epochs.iter().map(|e| e.test_accuracy).fold(0.0, f64::max)
    }

    /// First epoch (1-based) whose test accuracy reaches `threshold`.
    pub fn first_epoch_reaching(&self, threshold: f64) -> Option<usize> {
        self.epochs
            .iter()
            .find(|e| e.test_accuracy >= threshold)
            .map(|e| e.epoch)
    }
}

fn row_times<T: Scalar>(row: [Complex<T>; 2], u: &Unitary2<T>) -> [Complex<T>; 2] {
    [
        row[0] * u.m[0][0] + row[1] * u.m[1][0],
        row[0] * u.m[0][1] + row[1] * u.m[1][1],
    ]
}

fn row_dot<T: Scalar>(row: [Complex<T>; 2], psi: &PureState<T>) -> Complex<T> {
    row[0] * psi.a0 + row[1] * psi.a1
}

/// `(−i Z / 2) ψ`
fn dz<T: Scalar>(psi: &PureState<T>) -> PureState<T> {
    let h = Complex::new(T::zero(), T::half());
    PureState::new(-h * psi.a0, h * psi.a1)
}

/// `(−i Y / 2) ψ`
fn dy<T: Scalar>(psi: &PureState<T>) -> PureState<T> {
    PureState::new(-psi.a1 * T::half(), psi.a0 * T::half())
}

/// Fidelity `|⟨Y|ψ(x)⟩|²` and its gradient with respect to the flat
/// parameter vector, accumulated into `grad`.
pub fn point_fidelity_grad<T: Scalar>(
    params: &UqcParams<T>,
    x: &Point2<T>,
    label: &PureState<T>,
    grad: &mut [T],
) -> T {
    struct Cache<T> {
        gates: [Unitary2<T>; 3],
        after: [PureState<T>; 3],
    }
    let mut psi = PureState::zero();
    let mut caches = Vec::with_capacity(params.num_layers());
    for layer in &params.layers {
        let [v1, v2, v3] = layer.angles(x);
        let gates = [rz(v1), ry(v2), rz(v3)];
        let a1 = gates[0].apply(&psi);
        let a2 = gates[1].apply(&a1);
        let a3 = gates[2].apply(&a2);
        psi = a3;
        caches.push(Cache {
            gates,
            after: [a1, a2, a3],
        });
    }
    let amp = label.inner(&psi);
    let fid = amp.norm_sqr();
    let two = T::two();

    let mut bra = [label.a0.conj(), label.a1.conj()];
    for (l, cache) in caches.iter().enumerate().rev() {
        let [a1, a2, a3] = &cache.after;
        let g3 = row_dot(bra, &dz(a3));
        let mu2 = row_times(bra, &cache.gates[2]);
        let g2 = row_dot(mu2, &dy(a2));
        let mu1 = row_times(mu2, &cache.gates[1]);
        let g1 = row_dot(mu1, &dz(a1));
        bra = row_times(mu1, &cache.gates[0]);

        let d = |g: Complex<T>| two * (amp.conj() * g).re;
        let (d1, d2, d3) = (d(g1), d(g2), d(g3));
        let base = l * PARAMS_PER_LAYER;
        grad[base] = grad[base] + d1 * x.x1;
        grad[base + 1] = grad[base + 1] + d2 * x.x2;
        grad[base + 2] = grad[base + 2] + d1;
        grad[base + 3] = grad[base + 3] + d2;
        grad[base + 4] = grad[base + 4] + d3;
    }
    fid
}

fn check_batch<T: Scalar>(batch: &[LabeledPoint], labels: &LabelSet<T>) -> Result<(), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    if let Some(p) = batch.iter().find(|p| p.label >= labels.len()) {
        return Err(TrainError::LabelOutOfRange {
            label: p.label,
            classes: labels.len(),
        });
    }
    Ok(())
}

/// Mean infidelity over the batch and its exact gradient.
///
/// Per-point terms are evaluated in parallel and reduced in batch order.
pub fn cost_and_grad<T: Scalar>(
    params: &UqcParams<T>,
    batch: &[LabeledPoint],
    labels: &LabelSet<T>,
) -> Result<(T, Vec<T>), TrainError> {
    check_batch(batch, labels)?;
    let np = params.num_params();
    let terms: Vec<(T, Vec<T>)> = batch
        .par_iter()
        .map(|p| {
            let mut g = vec![T::zero(); np];
            let f = point_fidelity_grad(params, &p.point.cast(), &labels.states[p.label], &mut g);
            (f, g)
        })
        .collect();
    let n = T::of(batch.len() as f64);
    let mut cost = T::zero();
    let mut grad = vec![T::zero(); np];
    for (f, g) in terms {
        cost = cost + (T::one() - f);
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc = *acc - gi;
        }
    }
    grad.iter_mut().for_each(|g| *g = *g / n);
    Ok((cost / n, grad))
}

/// Mean infidelity `1 − ⟨Y_c|ρ(x)|Y_c⟩` over the batch.
pub fn cost<T: Scalar>(params: &UqcParams<T>, batch: &[LabeledPoint], labels: &LabelSet<T>) -> Result<T, TrainError> {
    check_batch(batch, labels)?;
    let terms: Vec<T> = batch
        .par_iter()
        .map(|p| {
            let psi = crate::model::forward_state(params, &p.point.cast());
            T::one() - labels.states[p.label].inner(&psi).norm_sqr()
        })
        .collect();
    let sum = terms.into_iter().fold(T::zero(), |a, b| a + b);
    Ok(sum / T::of(batch.len() as f64))
}

pub fn grad<T: Scalar>(params: &UqcParams<T>, batch: &[LabeledPoint], labels: &LabelSet<T>) -> Result<Vec<T>, TrainError> {
    cost_and_grad(params, batch, labels).map(|(_, g)| g)
}

/// Fraction of points whose predicted class matches the stored label.
pub fn evaluate_accuracy<T, F>(params: &UqcParams<T>, dataset: &Dataset, classify: F) -> Result<f64, TrainError>
where
    T: Scalar,
    F: Fn(&UqcParams<T>, &Point2<T>) -> usize + Sync,
{
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let correct: usize = dataset
        .points
        .par_iter()
        .map(|p| usize::from(classify(params, &p.point.cast()) == p.label))
        .sum();
    Ok(correct as f64 / dataset.len() as f64)
}

/// Exact-backend accuracy of `params` on `dataset`.
pub fn exact_accuracy<T: Scalar>(params: &UqcParams<T>, dataset: &Dataset) -> Result<f64, TrainError> {
    let labels = LabelSet::new(params.num_classes)?;
    evaluate_accuracy(params, dataset, |p, x| classify_exact(p, x, &labels))
}

/// Parameters drawn i.i.d. uniform on `[−π, π]`.
pub fn init_params<T: Scalar>(num_layers: usize, num_classes: usize, seed: u64) -> Result<UqcParams<T>, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    let flat: Vec<T> = (0..num_layers * PARAMS_PER_LAYER)
        .map(|_| T::of(rng.random_range(-pi..=pi)))
        .collect();
    Ok(UqcParams::from_flat(&flat, num_classes)?)
}

/// Mini-batch Adam training with per-epoch test accuracy.
///
/// The training order is reshuffled every epoch from `tcfg.shuffle_seed`;
/// the last batch of an epoch may be smaller than `batch_size`.
pub fn train<T: Scalar>(
    train_set: &Dataset,
    test_set: &Dataset,
    num_layers: usize,
    acfg: &AdamConfig,
    tcfg: &TrainConfig,
    init_seed: u64,
) -> Result<(UqcParams<T>, TrainMetrics), TrainError> {
    if train_set.problem != test_set.problem {
        return Err(TrainError::ProblemMismatch {
            train: train_set.problem.to_string(),
            test: test_set.problem.to_string(),
        });
    }
    acfg.validate()?;
    if tcfg.epochs == 0 {
        return Err(TrainError::InvalidConfig("epochs must be at least 1".into()));
    }
    if tcfg.batch_size == 0 || tcfg.batch_size > train_set.len() {
        return Err(TrainError::InvalidConfig(format!(
            "batch size {} outside 1..={}",
            tcfg.batch_size,
            train_set.len()
        )));
    }
    if num_layers == 0 {
        return Err(ModelError::NoLayers.into());
    }
    let classes = train_set.num_classes();
    let labels = LabelSet::<T>::new(classes)?;
    let mut params = init_params::<T>(num_layers, classes, init_seed)?;
    let mut flat = params.to_flat();
    let mut adam = AdamState::new(flat.len());
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(tcfg.shuffle_seed);
    let mut order: Vec<LabeledPoint> = train_set.points.clone();
    let mut metrics = TrainMetrics::default();
    let mut best: Option<(f64, UqcParams<T>)> = None;

    for epoch in 1..=tcfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut epoch_cost = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(tcfg.batch_size) {
            let (c, g) = cost_and_grad(&params, batch, &labels)?;
            adam.step(&g, &mut flat, acfg)?;
            params = UqcParams::from_flat(&flat, classes)?;
            metrics.batch_costs.push(c.as_f64());
            epoch_cost += c.as_f64();
            batches += 1;
        }
        let acc = evaluate_accuracy(&params, test_set, |p, x| classify_exact(p, x, &labels))?;
        let record = EpochRecord {
            epoch,
            mean_batch_cost: epoch_cost / batches as f64,
            test_accuracy: acc,
            seconds: start.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: cost {:.5} test accuracy {:.4}",
            record.mean_batch_cost,
            acc
        );
        metrics.epochs.push(record);
        if !tcfg.keep_best || best.as_ref().is_none_or(|(b, _)| acc > *b) {
            best = Some((acc, params.clone()));
            metrics.selected_epoch = epoch;
        }
    }
    let (_, selected) = best.expect("at least one epoch ran");
    Ok((selected, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, Problem};
    use crate::model::{forward_state, LayerParams};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn random_params(r: &mut ChaCha8Rng, layers: usize, classes: usize) -> UqcParams<f64> {
        let flat: Vec<f64> = (0..layers * PARAMS_PER_LAYER).map(|_| r.random_range(-PI..PI)).collect();
        UqcParams::from_flat(&flat, classes).unwrap()
    }

    fn batch(r: &mut ChaCha8Rng, n: usize, classes: usize) -> Vec<LabeledPoint> {
        (0..n)
            .map(|_| LabeledPoint {
                point: Point2::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)),
                label: r.random_range(0..classes),
            })
            .collect()
    }

    #[test]
    fn cost_zero_params() {
        let labels = LabelSet::<f64>::new(2).unwrap();
        let p = UqcParams::zeros(4, 2).unwrap();
        let x = Point2::new(0.3, -0.2);
        let c0 = cost(&p, &[LabeledPoint { point: x, label: 0 }], &labels).unwrap();
        let c1 = cost(&p, &[LabeledPoint { point: x, label: 1 }], &labels).unwrap();
        assert_abs_diff_eq!(c0, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c1, 1.0, epsilon = 1e-15);
        assert!(matches!(cost(&p, &[], &labels), Err(TrainError::EmptyBatch)));
        assert!(matches!(grad(&p, &[], &labels), Err(TrainError::EmptyBatch)));
    }

    #[test]
    fn cost_matches_statevector_oracle() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for classes in [2, 3] {
            let labels = LabelSet::<f64>::new(classes).unwrap();
            for _ in 0..50 {
                let p = random_params(&mut r, 6, classes);
                let b = batch(&mut r, 20, classes);
                // layer-by-layer statevector, then Born-rule overlap
                let mut total = 0.0;
                for lp in &b {
                    let mut psi = PureState::zero();
                    for l in &p.layers {
                        psi = crate::model::layer_unitary(l, &lp.point).apply(&psi);
                    }
                    total += 1.0 - labels.states[lp.label].inner(&psi).norm_sqr();
                }
                let c = cost(&p, &b, &labels).unwrap();
                assert_abs_diff_eq!(c, total / b.len() as f64, epsilon = 1e-12);
                let (c2, _) = cost_and_grad(&p, &b, &labels).unwrap();
                assert_abs_diff_eq!(c, c2, epsilon = 1e-12);
                assert!((0.0..=1.0).contains(&c));
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_global_minimum() {
        // zero params put every state at |0⟩ = |Y_0⟩
        let labels = LabelSet::<f64>::new(2).unwrap();
        let p = UqcParams::zeros(5, 2).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let b: Vec<_> = batch(&mut r, 30, 2).into_iter().map(|mut p| {
            p.label = 0;
            p
        }).collect();
        let g = grad(&p, &b, &labels).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-9));
    }

    fn fd_grad(p: &UqcParams<f64>, b: &[LabeledPoint], labels: &LabelSet<f64>, h: f64) -> Vec<f64> {
        let flat = p.to_flat();
        (0..flat.len())
            .map(|i| {
                let mut up = flat.clone();
                let mut dn = flat.clone();
                up[i] += h;
                dn[i] -= h;
                let cu = cost(&UqcParams::from_flat(&up, p.num_classes).unwrap(), b, labels).unwrap();
                let cd = cost(&UqcParams::from_flat(&dn, p.num_classes).unwrap(), b, labels).unwrap();
                (cu - cd) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        for k in 0..30 {
            let classes = 2 + k % 2;
            let labels = LabelSet::<f64>::new(classes).unwrap();
            let p = random_params(&mut r, 1 + k % 7, classes);
            let b = batch(&mut r, 8, classes);
            let g = grad(&p, &b, &labels).unwrap();
            let n = fd_grad(&p, &b, &labels, 1e-5);
            let diff = g.iter().zip(&n).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = g.iter().chain(&n).map(|v| v.abs()).fold(0.0, f64::max);
            assert!(diff / scale <= 1e-5, "relative error {}", diff / scale);
        }
    }

    #[test]
    fn last_z_rotation_does_not_affect_pole_fidelity() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let labels = LabelSet::<f64>::new(2).unwrap();
        for _ in 0..50 {
            let p = random_params(&mut r, 6, 2);
            let b = batch(&mut r, 10, 2);
            let g = grad(&p, &b, &labels).unwrap();
            assert!(g.last().unwrap().abs() < 1e-12);
            // shifting ω3 of the last layer leaves the cost unchanged
            let mut flat = p.to_flat();
            *flat.last_mut().unwrap() += 0.77;
            let q = UqcParams::from_flat(&flat, 2).unwrap();
            assert_abs_diff_eq!(cost(&p, &b, &labels).unwrap(), cost(&q, &b, &labels).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        let cfg = AdamConfig::default();
        let mut st = AdamState::<f64>::new(3);
        let mut p = vec![0.0, 1.0, -2.0];
        st.step(&[0.3, -4.0, 1e-3], &mut p, &cfg).unwrap();
        assert_eq!(st.t, 1);
        assert_abs_diff_eq!(p[0], -0.6, epsilon = 1e-6);
        assert_abs_diff_eq!(p[1], 1.6, epsilon = 1e-6);
        assert_abs_diff_eq!(p[2], -2.6, epsilon = 1e-4);
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let p = UqcParams::<f64>::from_flat(&[0.1, 0.2, 0.3, 0.4, 0.5], 2).unwrap();
        let st = AdamState::new(5);
        let (st2, q) = adam_step(&st, &[0.0; 5], &p, &AdamConfig::default()).unwrap();
        assert_eq!(q, p);
        assert_eq!(st2.t, 1);
        assert!(matches!(
            adam_step(&st, &[0.0; 4], &p, &AdamConfig::default()),
            Err(TrainError::DimensionMismatch { expected: 5, found: 4 })
        ));
    }

    #[test]
    fn adam_two_step_trace() {
        // f(a, b) = a² + 3b² from (1, −1), lr 0.1
        // step 1: g = (2, −6), m̂ = g, v̂ = g², update ≈ −0.1·sign(g)
        //   → (0.9000000005, −0.9000000001666666)
        // step 2: values below recomputed by hand from the update equations.
        let cfg = AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        };
        let mut st = AdamState::<f64>::new(2);
        let mut p = vec![1.0, -1.0];
        let g1 = vec![2.0 * p[0], 6.0 * p[1]];
        st.step(&g1, &mut p, &cfg).unwrap();
        assert_abs_diff_eq!(p[0], 0.900_000_000_5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], -0.900_000_000_166_666_7, epsilon = 1e-12);
        let g2 = vec![2.0 * p[0], 6.0 * p[1]];
        st.step(&g2, &mut p, &cfg).unwrap();
        assert_abs_diff_eq!(p[0], TRACE_A2, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], TRACE_B2, epsilon = 1e-12);
    }

    // Second-step values of the two-parameter trace above.
    const TRACE_A2: f64 = 0.800_412_228_691_792_8;
    const TRACE_B2: f64 = -0.800_412_228_011_429_3;

    #[test]
    fn single_point_descent_converges() {
        let labels = LabelSet::<f64>::new(2).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(5);
        for label in [0, 1] {
            let b = vec![LabeledPoint {
                point: Point2::new(0.4, -0.7),
                label,
            }];
            let mut p = random_params(&mut r, 3, 2);
            let mut st = AdamState::new(p.num_params());
            let cfg = AdamConfig {
                learning_rate: 0.05,
                ..AdamConfig::default()
            };
            let mut steps = 0;
            while cost(&p, &b, &labels).unwrap() >= 1e-3 {
                let g = grad(&p, &b, &labels).unwrap();
                let (s, q) = adam_step(&st, &g, &p, &cfg).unwrap();
                st = s;
                p = q;
                steps += 1;
                assert!(steps <= 500, "did not converge");
            }
        }
    }

    #[test]
    fn train_bookkeeping_and_errors() {
        let tr = generate(Problem::Circle, 1000, 1).unwrap();
        let te = generate(Problem::Circle, 200, 2).unwrap();
        let tcfg = TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        };
        let (p, m) = train::<f64>(&tr, &te, 2, &AdamConfig::default(), &tcfg, 3).unwrap();
        assert_eq!(p.num_layers(), 2);
        assert_eq!(m.batch_costs.len(), 10);
        assert_eq!(m.epochs.len(), 1);
        let zero = TrainConfig { epochs: 0, ..tcfg };
        assert!(matches!(
            train::<f64>(&tr, &te, 2, &AdamConfig::default(), &zero, 3),
            Err(TrainError::InvalidConfig(_))
        ));
        let other = generate(Problem::TwoCircles, 200, 2).unwrap();
        assert!(matches!(
            train::<f64>(&tr, &other, 2, &AdamConfig::default(), &tcfg, 3),
            Err(TrainError::ProblemMismatch { .. })
        ));
        let partial = TrainConfig { batch_size: 300, ..tcfg };
        let (_, m) = train::<f64>(&tr, &te, 2, &AdamConfig::default(), &partial, 3).unwrap();
        assert_eq!(m.batch_costs.len(), 4);
        let last = TrainConfig { epochs: 3, keep_best: false, ..tcfg };
        let (p, m) = train::<f64>(&tr, &te, 2, &AdamConfig::default(), &last, 3).unwrap();
        assert_eq!(m.selected_epoch, 3);
        assert_eq!(exact_accuracy(&p, &te).unwrap(), m.final_accuracy());
    }

    #[test]
    fn train_is_deterministic() {
        let tr = generate(Problem::Sine, 300, 1).unwrap();
        let te = generate(Problem::Sine, 100, 2).unwrap();
        let tcfg = TrainConfig {
            epochs: 3,
            batch_size: 50,
            shuffle_seed: 9,
            keep_best: true,
        };
        let (a, ma) = train::<f64>(&tr, &te, 3, &AdamConfig::default(), &tcfg, 4).unwrap();
        assert_eq!(ma.epochs[ma.selected_epoch - 1].test_accuracy, ma.best_accuracy());
        assert_eq!(exact_accuracy(&a, &te).unwrap(), ma.best_accuracy());
        let (b, mb) = train::<f64>(&tr, &te, 3, &AdamConfig::default(), &tcfg, 4).unwrap();
        let bits = |p: &UqcParams<f64>| p.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(ma.batch_costs, mb.batch_costs);
    }

    #[test]
    fn accuracy_examples() {
        let d = generate(Problem::Circle, 2000, 8).unwrap();
        let p = UqcParams::<f64>::zeros(1, 2).unwrap();
        let perfect = evaluate_accuracy(&p, &d, |_, x| Problem::Circle.label_of(&Point2::new(x.x1, x.x2))).unwrap();
        assert_eq!(perfect, 1.0);
        let constant = evaluate_accuracy(&p, &d, |_, _| 0).unwrap();
        assert!((constant - 0.5).abs() <= 0.03);
        let brute = d.points.iter().filter(|lp| lp.label == 0).count() as f64 / d.len() as f64;
        assert_eq!(constant, brute);
    }

    #[test]
    fn init_is_uniform_in_range() {
        let p = init_params::<f64>(10, 3, 77).unwrap();
        assert!(p.to_flat().iter().all(|v| (-PI..=PI).contains(v)));
        assert_eq!(p, init_params::<f64>(10, 3, 77).unwrap());
    }

    #[test]
    fn single_precision_gradient() {
        let mut r = ChaCha8Rng::seed_from_u64(6);
        let p = random_params(&mut r, 4, 2);
        let b = batch(&mut r, 10, 2);
        let g64 = grad(&p, &b, &LabelSet::new(2).unwrap()).unwrap();
        let g32 = grad(&p.cast::<f32>(), &b, &LabelSet::new(2).unwrap()).unwrap();
        for (a, b) in g64.iter().zip(g32) {
            assert!((a - b as f64).abs() < 1e-4);
        }
        let _ = forward_state(&p.cast::<f32>(), &Point2::new(0.0f32, 0.0));
        let _ = LayerParams::<f32>::default();
    }
}
