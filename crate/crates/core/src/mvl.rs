//! Centralized multi-view learning.
//!
//! Training minimizes, over per-view transforms `W_k`, per-view pseudo-labels
//! `Z_k` and the consensus `Z`,
//!
//! ```text
//! Σ_k ‖X_k W_k − Z_k‖²_F + β_k L21ε(W_k) + ζ_k ‖Z_k − Z‖²_F  +  η ‖Z − Y‖²_F
//! ```
//!
//! with `L21ε(W) = Σ_i √(‖W_(i)‖² + ε²)`, by exact block updates: an IRLS
//! solve for each `W_k`, a closed form for each `Z_k`, then a closed form for
//! `Z`. Testing alternates the closed forms for `Z_test` and `Z_k^test`
//! starting from `Z_k^test = X_k^test W_k`.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::{MultiViewDataset, ViewMatrix};
use crate::error::{Error, Result};
use crate::numerics::{orthonormal_init, row_l2_norms, solve_spd, Matrix, RngSeed};

/// When the outer training loop stops before its iteration cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    /// Relative change of the smoothed objective, `|f_t − f_{t−1}| / max(1, |f_{t−1}|)`.
    Objective,
    /// Relative drift of the consensus, `‖Z_t − Z_{t−1}‖_F / ‖Z_{t−1}‖_F`.
    /// This is what a federation server can evaluate.
    ConsensusDrift,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    pub beta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub eta: f64,
    pub epsilon: f64,
    /// Relative-change threshold; `0` disables early stopping.
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub stop: StopRule,
}

impl HyperParams {
    /// `β = 4`, `ζ_k = η = 8`, `ε = 1e-8`, `tol = 1e-6`, 100 outer and 20 inner iterations.
    pub fn new(views: usize) -> Self {
        HyperParams::uniform(views, 4.0, 8.0, 8.0)
    }

    pub fn uniform(views: usize, beta: f64, zeta: f64, eta: f64) -> Self {
        HyperParams {
            beta: vec![beta; views],
            zeta: vec![zeta; views],
            eta,
            epsilon: 1e-8,
            tol: 1e-6,
            max_outer: 100,
            max_inner: 20,
            stop: StopRule::Objective,
        }
    }

    pub fn num_views(&self) -> usize {
        self.beta.len()
    }

    /// Keeps the entries of views selected by `mask`.
    pub fn select_views(&self, mask: &[bool]) -> HyperParams {
        let pick = |v: &[f64]| v.iter().zip(mask).filter(|(_, &m)| m).map(|(&x, _)| x).collect();
        HyperParams {
            beta: pick(&self.beta),
            zeta: pick(&self.zeta),
            ..self.clone()
        }
    }

    pub fn validate(&self, views: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidHyperParams(m));
        if self.beta.len() != views || self.zeta.len() != views {
            return bad(format!(
                "expected {views} values of beta and zeta, got {} and {}",
                self.beta.len(),
                self.zeta.len()
            ));
        }
        if let Some(b) = self.beta.iter().find(|&&b| !(b > 0.0 && b.is_finite())) {
            return bad(format!("beta must be positive, got {b}"));
        }
        if let Some(z) = self.zeta.iter().find(|&&z| !(z > 0.0 && z.is_finite())) {
            return bad(format!("zeta must be positive, got {z}"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.tol) {
            return bad(format!("tol must lie in [0, 1), got {}", self.tol));
        }
        if self.max_inner == 0 {
            return bad("max_inner must be at least 1".into());
        }
        Ok(())
    }
}

/// Training state: transforms, pseudo-labels, consensus and IRLS weights.
#[derive(Clone, Debug, PartialEq)]
pub struct MvlState {
    pub w: Vec<Matrix>,
    pub zk: Vec<Matrix>,
    pub z: Matrix,
    /// Diagonals of the IRLS reweighting matrices `A_k`.
    pub a: Vec<Vec<f64>>,
}

/// Seeds for the random initialization, shared with the federated variants
/// so their runs reproduce the centralized ones exactly.
pub mod init {
    use super::*;

    pub fn w_seed(seed: RngSeed, view: usize) -> RngSeed {
        seed.derive2(0x57, view as u64)
    }

    pub fn zk_seed(seed: RngSeed, view: usize) -> RngSeed {
        seed.derive2(0x5A4B, view as u64)
    }

    pub fn z_seed(seed: RngSeed) -> RngSeed {
        seed.derive(0x5A)
    }

    /// Standard Gaussian scaled by `1/√d`.
    pub fn transform(d: usize, c: usize, seed: RngSeed) -> Matrix {
        Matrix::gaussian(d, c, seed).scale(1.0 / (d.max(1) as f64).sqrt())
    }
}

/// ε-smoothed row-wise ℓ₂,₁ norm.
pub fn smoothed_l21(w: &Matrix, epsilon: f64) -> f64 {
    row_l2_norms(w)
        .iter()
        .map(|r| (r * r + epsilon * epsilon).sqrt())
        .sum()
}

fn check_state(data: &MultiViewDataset, state: &MvlState, hp: &HyperParams) -> Result<()> {
    let k = data.num_views();
    let n = data.num_samples();
    let c = data.num_classes();
    if state.w.len() != k || state.zk.len() != k || hp.beta.len() != k || hp.zeta.len() != k {
        return Err(Error::dims("objective", format!("{k} views"), format!("{} transforms", state.w.len())));
    }
    if state.z.shape() != (n, c) {
        return Err(Error::dims("objective", format!("Z {n}x{c}"), format!("{:?}", state.z.shape())));
    }
    for (v, (w, zk)) in data.views().iter().zip(state.w.iter().zip(&state.zk)) {
        if w.shape() != (v.cols(), c) || zk.shape() != (n, c) {
            return Err(Error::dims(
                "objective",
                format!("W {}x{c}, Z_k {n}x{c}", v.cols()),
                format!("W {:?}, Z_k {:?}", w.shape(), zk.shape()),
            ));
        }
    }
    Ok(())
}

/// Smoothed training objective.
pub fn objective(data: &MultiViewDataset, state: &MvlState, hp: &HyperParams) -> Result<f64> {
    check_state(data, state, hp)?;
    let y = data.labels().to_matrix();
    let mut total = 0.0;
    for (k, view) in data.views().iter().enumerate() {
        let xw = view.matrix().matmul(&state.w[k])?;
        total += xw.dist_sq(&state.zk[k])?
            + hp.beta[k] * smoothed_l21(&state.w[k], hp.epsilon)
            + hp.zeta[k] * state.zk[k].dist_sq(&state.z)?;
    }
    Ok(total + hp.eta * state.z.dist_sq(&y)?)
}

/// IRLS weights `1 / (2√(‖W_(i)‖² + ε²))`, the derivative of the smoothed
/// row norm. This makes each reweighted solve minimize a majorizer of the
/// smoothed objective.
pub fn update_a(w: &Matrix, epsilon: f64) -> Vec<f64> {
    row_l2_norms(w)
        .into_iter()
        .map(|r| 1.0 / (2.0 * r.hypot(epsilon)))
        .collect()
}

fn system_matrix(gram: &Matrix, a: &[f64], beta: f64) -> Matrix {
    let mut m = gram.clone();
    for (i, &ai) in a.iter().enumerate() {
        m[(i, i)] += beta * ai;
    }
    m
}

/// `W = (XᵀX + βA)⁻¹ XᵀZ`, via an SPD solve.
pub fn update_w(x: &Matrix, zk: &Matrix, a: &[f64], beta: f64) -> Result<Matrix> {
    if a.len() != x.cols() {
        return Err(Error::dims("update_w", x.cols(), a.len()));
    }
    let xtz = x.t_matmul(zk)?;
    solve_spd(&system_matrix(&x.gram(), a, beta), &xtz)
}

/// `‖(XᵀX + βA)W − XᵀZ‖_max`.
pub fn normal_equation_residual(x: &Matrix, zk: &Matrix, a: &[f64], beta: f64, w: &Matrix) -> Result<f64> {
    let lhs = system_matrix(&x.gram(), a, beta).matmul(w)?;
    lhs.max_abs_diff(&x.t_matmul(zk)?)
}

#[derive(Clone, Debug)]
pub struct IrlsOutcome {
    pub w: Vec<f64>,
    pub w_matrix: Matrix,
    /// Weights used for the final solve.
    pub a: Vec<f64>,
    /// Smoothed subproblem value after each inner iteration, preceded by the
    /// value at the starting point when one was given.
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Largest normal-equation residual over all solves.
    pub max_residual: f64,
}

/// Per-view data that does not change across iterations.
#[derive(Clone, Debug)]
pub(crate) struct ViewSystem {
    pub gram: Matrix,
}

impl ViewSystem {
    pub fn new(x: &Matrix) -> Self {
        ViewSystem { gram: x.gram() }
    }
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    (cur - prev).abs() / prev.abs().max(1.0)
}

fn subproblem_value(x: &Matrix, target: &Matrix, w: &Matrix, beta: f64, epsilon: f64) -> Result<f64> {
    Ok(x.matmul(w)?.dist_sq(target)? + beta * smoothed_l21(w, epsilon))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn irls_with_system(
    x: &Matrix,
    sys: &ViewSystem,
    target: &Matrix,
    start: Option<&Matrix>,
    beta: f64,
    epsilon: f64,
    max_inner: usize,
    tol: f64,
) -> Result<IrlsOutcome> {
    let d = x.cols();
    let c = target.cols();
    if target.rows() != x.rows() {
        return Err(Error::dims("irls", format!("{} target rows", x.rows()), target.rows()));
    }
    let xtz = x.t_matmul(target)?;
    let mut values = Vec::with_capacity(max_inner + 1);
    let mut w = match start {
        Some(w0) => {
            if w0.shape() != (d, c) {
                return Err(Error::dims("irls start", format!("{d}x{c}"), format!("{:?}", w0.shape())));
            }
            values.push(subproblem_value(x, target, w0, beta, epsilon)?);
            w0.clone()
        }
        None => Matrix::zeros(d, c),
    };
    let mut a = vec![1.0 / (2.0 * 1f64.hypot(epsilon)); d];
    let mut max_residual: f64 = 0.0;
    let mut iterations = 0;
    for it in 0..max_inner {
        if start.is_some() || it > 0 {
            a = update_a(&w, epsilon);
        }
        let m = system_matrix(&sys.gram, &a, beta);
        w = solve_spd(&m, &xtz)?;
        max_residual = max_residual.max(m.matmul(&w)?.max_abs_diff(&xtz)?);
        iterations += 1;
        let v = subproblem_value(x, target, &w, beta, epsilon)?;
        let prev = values.last().copied();
        values.push(v);
        if let Some(p) = prev {
            if tol > 0.0 && relative_change(p, v) < tol {
                break;
            }
        }
    }
    Ok(IrlsOutcome {
        w: w.data().to_vec(),
        w_matrix: w,
        a,
        values,
        iterations,
        max_residual,
    })
}

/// Minimizes `‖XW − Z‖² + β L21ε(W)` by alternating [`update_a`] and
/// [`update_w`], starting from `start` (or, when absent, from weights of a
/// matrix with unit-norm rows). Stops when the value changes by less than
/// `tol` relative, or after `max_inner` solves.
pub fn irls_solve_w(
    x: &Matrix,
    zk: &Matrix,
    start: Option<&Matrix>,
    beta: f64,
    epsilon: f64,
    max_inner: usize,
    tol: f64,
) -> Result<IrlsOutcome> {
    irls_with_system(x, &ViewSystem::new(x), zk, start, beta, epsilon, max_inner, tol)
}

/// `Z_k = (XW + ζZ) / (1 + ζ)`, evaluated as `XW + (ζ/(1+ζ))(Z − XW)` so
/// that `Z = XW` is reproduced exactly.
pub fn update_zk(xw: &Matrix, z: &Matrix, zeta: f64) -> Result<Matrix> {
    if xw.shape() != z.shape() {
        return Err(Error::dims("update_zk", format!("{:?}", xw.shape()), format!("{:?}", z.shape())));
    }
    let t = zeta / (1.0 + zeta);
    let data = xw.data().iter().zip(z.data()).map(|(&p, &q)| p + t * (q - p)).collect();
    Matrix::new(xw.rows(), xw.cols(), data)
}

/// `Z = (Σ_k ζ_k Z_k + ηY) / (Σ_k ζ_k + η)`, evaluated as
/// `Y + Σ_k (ζ_k/s)(Z_k − Y)` in view order so that `Z_k = Y` for all `k`
/// gives `Y` exactly.
pub fn update_z(zk: &[Matrix], y: &Matrix, zeta: &[f64], eta: f64) -> Result<Matrix> {
    if zk.len() != zeta.len() {
        return Err(Error::dims("update_z", zk.len(), zeta.len()));
    }
    let total = zeta.iter().sum::<f64>() + eta;
    let mut acc = y.clone();
    for (m, &s) in zk.iter().zip(zeta) {
        if m.shape() != y.shape() {
            return Err(Error::dims("update_z", format!("{:?}", y.shape()), format!("{:?}", m.shape())));
        }
        let w = s / total;
        for ((a, &v), &yv) in acc.data_mut().iter_mut().zip(m.data()).zip(y.data()) {
            *a += w * (v - yv);
        }
    }
    Ok(acc)
}

/// One view's local update: IRLS for `W_k` against the current `Z_k`,
/// then the closed-form `Z_k` update against the consensus. Shared with the
/// vertical protocol's client so both run identical arithmetic.
#[allow(clippy::too_many_arguments)]
pub(crate) fn view_block_step(
    x: &Matrix,
    sys: &ViewSystem,
    w: &Matrix,
    zk: &Matrix,
    z: &Matrix,
    beta: f64,
    zeta: f64,
    epsilon: f64,
    max_inner: usize,
    tol: f64,
) -> Result<(IrlsOutcome, Matrix)> {
    let out = irls_with_system(x, sys, zk, Some(w), beta, epsilon, max_inner, tol)?;
    let xw = x.matmul(&out.w_matrix)?;
    let zk_new = update_zk(&xw, z, zeta)?;
    Ok((out, zk_new))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    /// Relative consensus drift (0 for the initial row).
    pub drift: f64,
    /// (min, max) row norm of each `W_k`.
    pub w_rownorm: Vec<(f64, f64)>,
    /// Largest normal-equation residual of any `W` solve in this iteration.
    pub max_residual: f64,
    /// Whether every IRLS inner sequence was non-increasing within 1e-10.
    pub inner_monotone: bool,
}

#[derive(Clone, Debug)]
pub struct MvlFit {
    pub state: MvlState,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
}

fn rownorm_range(w: &Matrix) -> (f64, f64) {
    let norms = row_l2_norms(w);
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let max = norms.iter().copied().fold(0.0, f64::max);
    (if min.is_finite() { min } else { 0.0 }, max)
}

/// Steppable trainer; [`train_mvl`] runs it to completion.
pub struct MvlTrainer<'a> {
    data: &'a MultiViewDataset,
    hp: HyperParams,
    systems: Vec<ViewSystem>,
    y: Matrix,
    state: MvlState,
    trace: Vec<TraceRow>,
    converged: bool,
}

impl<'a> MvlTrainer<'a> {
    pub fn new(data: &'a MultiViewDataset, hp: &HyperParams, seed: RngSeed) -> Result<Self> {
        let k = data.num_views();
        hp.validate(k)?;
        let n = data.num_samples();
        let c = data.num_classes();
        let mut w = Vec::with_capacity(k);
        let mut zk = Vec::with_capacity(k);
        for (v, view) in data.views().iter().enumerate() {
            w.push(init::transform(view.cols(), c, init::w_seed(seed, v)));
            zk.push(orthonormal_init(n, c, init::zk_seed(seed, v))?);
        }
        let z = orthonormal_init(n, c, init::z_seed(seed))?;
        let a = w.iter().map(|m| update_a(m, hp.epsilon)).collect();
        let state = MvlState { w, zk, z, a };
        let initial = TraceRow {
            iter: 0,
            objective: objective(data, &state, hp)?,
            drift: 0.0,
            w_rownorm: state.w.iter().map(rownorm_range).collect(),
            max_residual: 0.0,
            inner_monotone: true,
        };
        Ok(MvlTrainer {
            data,
            hp: hp.clone(),
            systems: data.views().iter().map(|v| ViewSystem::new(v.matrix())).collect(),
            y: data.labels().to_matrix(),
            state,
            trace: vec![initial],
            converged: false,
        })
    }

    pub fn state(&self) -> &MvlState {
        &self.state
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// One outer iteration: every view's local update, then the consensus. Returns the new trace row.
    pub fn step(&mut self) -> Result<&TraceRow> {
        let hp = &self.hp;
        let mut max_residual: f64 = 0.0;
        let mut inner_monotone = true;
        for (k, view) in self.data.views().iter().enumerate() {
            let (out, zk_new) = view_block_step(
                view.matrix(),
                &self.systems[k],
                &self.state.w[k],
                &self.state.zk[k],
                &self.state.z,
                hp.beta[k],
                hp.zeta[k],
                hp.epsilon,
                hp.max_inner,
                hp.tol,
            )?;
            max_residual = max_residual.max(out.max_residual);
            inner_monotone &= out.values.windows(2).all(|p| p[1] <= p[0] + 1e-10);
            self.state.w[k] = out.w_matrix;
            self.state.a[k] = out.a;
            self.state.zk[k] = zk_new;
        }
        let z_new = update_z(&self.state.zk, &self.y, &hp.zeta, hp.eta)?;
        let drift = consensus_drift(&self.state.z, &z_new)?;
        self.state.z = z_new;
        let obj = objective(self.data, &self.state, hp)?;
        let prev = self.trace.last().expect("trace starts with the initial row").objective;
        let iter = self.trace.len();
        self.trace.push(TraceRow {
            iter,
            objective: obj,
            drift,
            w_rownorm: self.state.w.iter().map(rownorm_range).collect(),
            max_residual,
            inner_monotone,
        });
        if hp.tol > 0.0 {
            self.converged = match hp.stop {
                StopRule::Objective => relative_change(prev, obj) < hp.tol,
                StopRule::ConsensusDrift => drift < hp.tol,
            };
        }
        Ok(self.trace.last().unwrap())
    }

    pub fn finish(self) -> MvlFit {
        MvlFit {
            state: self.state,
            trace: self.trace,
            converged: self.converged,
        }
    }
}

/// `‖new − old‖_F / ‖old‖_F`.
pub fn consensus_drift(old: &Matrix, new: &Matrix) -> Result<f64> {
    Ok(new.dist_sq(old)?.sqrt() / old.frobenius().max(f64::MIN_POSITIVE))
}

pub fn train_mvl(data: &MultiViewDataset, hp: &HyperParams, seed: RngSeed) -> Result<MvlFit> {
    let mut trainer = MvlTrainer::new(data, hp, seed)?;
    for _ in 0..hp.max_outer {
        trainer.step()?;
        if trainer.converged() {
            break;
        }
    }
    Ok(trainer.finish())
}

/// `Z_test = Σ_k ζ_k Z_k^test / Σ_k ζ_k`, accumulated in view order with
/// weights `ζ_k / Σζ`.
pub fn test_consensus(zk: &[Matrix], zeta: &[f64]) -> Result<Matrix> {
    let first = zk.first().ok_or_else(|| Error::dims("test_consensus", "at least one view", 0))?;
    if zk.len() != zeta.len() {
        return Err(Error::dims("test_consensus", zk.len(), zeta.len()));
    }
    let total: f64 = zeta.iter().sum();
    let mut acc = Matrix::zeros(first.rows(), first.cols());
    for (m, &s) in zk.iter().zip(zeta) {
        if m.shape() != first.shape() {
            return Err(Error::dims("test_consensus", format!("{:?}", first.shape()), format!("{:?}", m.shape())));
        }
        let w = s / total;
        for (a, &v) in acc.data_mut().iter_mut().zip(m.data()) {
            *a += w * v;
        }
    }
    Ok(acc)
}

/// Test-phase objective right after a `Z_k^test` pass against `z`.
///
/// That pass makes `X_kW_k − Z_k = ζ_k(Z_k − Z)` hold exactly, so the
/// objective reduces to `Σ_k (ζ_k² + ζ_k)‖Z_k − Z‖²_F`, which a server
/// holding only `(ζ_k, Z_k)` can evaluate.
pub fn test_objective(zk: &[Matrix], z: &Matrix, zeta: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (m, &s) in zk.iter().zip(zeta) {
        total += (s * s + s) * m.dist_sq(z)?;
    }
    Ok(total)
}

/// Whether the test-phase loop should stop after round `round` (1-based).
pub(crate) fn test_converged(round: usize, prev: Option<f64>, cur: f64, tol: f64) -> bool {
    match prev {
        Some(p) if round >= 2 && tol > 0.0 => relative_change(p, cur) < tol,
        _ => false,
    }
}

/// Consensus prediction for unseen samples. At least one round is run.
pub fn predict_mvl(test: &[ViewMatrix], w: &[Matrix], zeta: &[f64], tol: f64, max_outer: usize) -> Result<Matrix> {
    if test.len() != w.len() || w.len() != zeta.len() || w.is_empty() {
        return Err(Error::dims("predict_mvl", format!("{} views", w.len()), test.len()));
    }
    if let Some(z) = zeta.iter().find(|&&z| !(z > 0.0)) {
        return Err(Error::InvalidHyperParams(format!("zeta must be positive, got {z}")));
    }
    let mut xw = Vec::with_capacity(w.len());
    for (x, wk) in test.iter().zip(w) {
        if x.cols() != wk.rows() {
            return Err(Error::dims("predict_mvl", format!("{} columns", wk.rows()), x.cols()));
        }
        xw.push(x.matrix().matmul(wk)?);
    }
    let mut zk = xw.clone();
    let mut z = test_consensus(&zk, zeta)?;
    let mut prev = None;
    for round in 1..=max_outer.max(1) {
        if round > 1 {
            z = test_consensus(&zk, zeta)?;
        }
        for (k, m) in zk.iter_mut().enumerate() {
            *m = update_zk(&xw[k], &z, zeta[k])?;
        }
        let f = test_objective(&zk, &z, zeta)?;
        if test_converged(round, prev, f, tol) {
            break;
        }
        prev = Some(f);
    }
    Ok(z)
}

/// Single-view baseline: `min ‖XW − Y‖² + β L21ε(W)`.
pub fn train_single_view(
    x: &ViewMatrix,
    y: &Matrix,
    beta: f64,
    epsilon: f64,
    max_inner: usize,
    tol: f64,
) -> Result<Matrix> {
    if x.rows() != y.rows() {
        return Err(Error::dims("train_single_view", x.rows(), y.rows()));
    }
    if max_inner == 0 {
        return Err(Error::InvalidHyperParams("max_inner must be at least 1".into()));
    }
    Ok(irls_solve_w(x.matrix(), y, None, beta, epsilon, max_inner, tol)?.w_matrix)
}

/// CSV with columns `iter,objective,w{k}_rownorm_min,w{k}_rownorm_max,...`.
pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let k = trace.first().map_or(0, |r| r.w_rownorm.len());
    let mut out = String::from("iter,objective");
    for v in 0..k {
        let _ = write!(out, ",w{v}_rownorm_min,w{v}_rownorm_max");
    }
    out.push('\n');
    for row in trace {
        let _ = write!(out, "{},{:?}", row.iter, row.objective);
        for (lo, hi) in &row.w_rownorm {
            let _ = write!(out, ",{lo:?},{hi:?}");
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
