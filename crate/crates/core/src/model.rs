//! Domain types and the primal/dual objectives of the sign-constrained SVM.
//!
//! The learning problem is
//!
//! ```text
//! min_w  P(w) = (λ/2)‖w‖² + (1/n) Σ_i max(0, 1 − y_i⟨x_i, w⟩)   s.t.  σ ⊙ w ≥ 0
//! ```
//!
//! and its dual over the box `α ∈ [0,1]^n` is
//!
//! ```text
//! D(α) = −(λ/2)‖w(α)‖² + (1/n)⟨1, α⟩,   w(α) = Π_S(Xα / (λn)).
//! ```
//!
//! Non-positive constraints are turned into non-negative ones by negating the
//! affected features before training (see [`SignMask`]); weights are mapped back
//! to the caller's feature space by [`recover_weights`].

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Exec};

/// Gap values in `[-GAP_FLOOR, 0)` are treated as accumulation noise.
pub const GAP_FLOOR: f64 = 1e-10;

/// Training examples stored as the columns `y_i · x_i` of a `d × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    cols: Vec<f64>,
    labels: Vec<f64>,
    radius: f64,
}

impl Dataset {
    /// Builds a dataset from row-major raw features (`n × d`) and ±1 labels.
    pub fn new(d: usize, features: &[f64], labels: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidDataset("no examples".into()));
        }
        if d == 0 {
            return Err(Error::InvalidDataset("zero features".into()));
        }
        if features.len() != n * d {
            return Err(Error::DimensionMismatch {
                context: "dataset features",
                expected: n * d,
                got: features.len(),
            });
        }
        let mut cols = Vec::with_capacity(n * d);
        let mut radius: f64 = 0.0;
        for (i, (&y, row)) in labels.iter().zip(features.chunks(d)).enumerate() {
            if y != 1.0 && y != -1.0 {
                return Err(Error::InvalidDataset(format!(
                    "label {y} of example {i} is not ±1"
                )));
            }
            if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "non-finite feature value {x} in example {i}"
                )));
            }
            cols.extend(row.iter().map(|x| y * x));
            radius = radius.max(linalg::norm(row));
        }
        Ok(Dataset {
            n,
            d,
            cols,
            labels,
            radius,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// `max_i ‖x_i‖`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Column-major storage of `y_i · x_i`.
    pub fn columns(&self) -> &[f64] {
        &self.cols
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.cols[i * self.d..(i + 1) * self.d]
    }

    /// Raw feature vector `x_i` (as stored, i.e. after any negation preprocessing).
    pub fn features(&self, i: usize) -> Vec<f64> {
        let y = self.labels[i];
        self.column(i).iter().map(|c| y * c).collect()
    }

    /// Margins `z_i = ⟨y_i x_i, w⟩`.
    pub fn margins(&self, w: &[f64], exec: Exec) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        linalg::column_dots(&self.cols, self.d, w, &mut z, exec);
        z
    }

    /// Decision values `⟨x_i, w⟩` for weights in the stored feature space.
    pub fn scores(&self, w: &[f64], exec: Exec) -> Vec<f64> {
        let mut z = self.margins(w, exec);
        for (s, y) in z.iter_mut().zip(&self.labels) {
            *s *= y;
        }
        z
    }

    /// `scale · X c`.
    pub fn combine(&self, coeffs: &[f64], scale: f64, exec: Exec) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        linalg::combine_columns(&self.cols, self.d, coeffs, scale, &mut out, exec);
        out
    }

    /// Dataset restricted to the given examples, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidDataset("empty subset".into()));
        }
        let mut cols = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        let mut radius: f64 = 0.0;
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidDataset(format!("subset index {i} out of range")));
            }
            let col = self.column(i);
            cols.extend_from_slice(col);
            labels.push(self.labels[i]);
            radius = radius.max(linalg::norm(col));
        }
        Ok(Dataset {
            n: indices.len(),
            d: self.d,
            cols,
            labels,
            radius,
        })
    }

    /// Checks that the stored radius bounds every feature norm.
    pub fn radius_holds(&self) -> bool {
        (0..self.n).all(|i| linalg::norm(self.column(i)) <= self.radius)
    }
}

/// Which coordinates are sign constrained, plus the negation bookkeeping.
///
/// After preprocessing every constrained coordinate is non-negative: features
/// in the original non-positive set are negated and moved into the
/// non-negative set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignMask {
    sigma: Vec<bool>,
    pos_idx: Vec<usize>,
    neg_idx: Vec<usize>,
    negated: Vec<bool>,
}

impl SignMask {
    pub fn unconstrained(d: usize) -> Self {
        SignMask {
            sigma: vec![false; d],
            pos_idx: Vec::new(),
            neg_idx: Vec::new(),
            negated: vec![false; d],
        }
    }

    /// `pos` must be non-negative, `neg` non-positive; the sets must be disjoint.
    pub fn new(d: usize, pos: &[usize], neg: &[usize]) -> Result<Self> {
        let mut sigma = vec![false; d];
        let mut negated = vec![false; d];
        for &h in pos {
            if h >= d {
                return Err(Error::InvalidMask(format!("index {h} out of range for d = {d}")));
            }
            sigma[h] = true;
        }
        for &h in neg {
            if h >= d {
                return Err(Error::InvalidMask(format!("index {h} out of range for d = {d}")));
            }
            if sigma[h] && !negated[h] {
                return Err(Error::InvalidMask(format!(
                    "feature {h} is constrained both non-negative and non-positive"
                )));
            }
            sigma[h] = true;
            negated[h] = true;
        }
        let pos_idx = (0..d).filter(|&h| sigma[h]).collect();
        let mut neg_idx: Vec<usize> = neg.to_vec();
        neg_idx.sort_unstable();
        neg_idx.dedup();
        Ok(SignMask {
            sigma,
            pos_idx,
            neg_idx,
            negated,
        })
    }

    pub fn d(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[bool] {
        &self.sigma
    }

    pub fn is_constrained(&self, h: usize) -> bool {
        self.sigma[h]
    }

    /// Constrained (non-negative after preprocessing) indices.
    pub fn pos_idx(&self) -> &[usize] {
        &self.pos_idx
    }

    /// Original non-positive indices, before negation.
    pub fn neg_idx(&self) -> &[usize] {
        &self.neg_idx
    }

    pub fn negated(&self) -> &[bool] {
        &self.negated
    }

    pub fn is_negated(&self, h: usize) -> bool {
        self.negated[h]
    }

    /// Maps a vector between the preprocessed and the original feature space.
    /// The map is an involution.
    pub fn flip(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.negated)
            .map(|(&x, &neg)| if neg { -x } else { x })
            .collect()
    }
}

/// Solver bookkeeping carried alongside a model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelMeta {
    pub solver: String,
    pub iterations: usize,
    pub final_gap: Option<f64>,
}

/// A trained linear model. `w` lives in the caller's (un-negated) feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalModel {
    pub w: Vec<f64>,
    pub lambda: f64,
    pub sign_mask: SignMask,
    pub meta: ModelMeta,
}

impl PrimalModel {
    /// Wraps weights given in the preprocessed (all constraints non-negative) space.
    pub fn from_internal(w_internal: &[f64], lambda: f64, mask: &SignMask, meta: ModelMeta) -> Self {
        PrimalModel {
            w: mask.flip(w_internal),
            lambda,
            sign_mask: mask.clone(),
            meta,
        }
    }

    pub fn zeros(d: usize, lambda: f64, mask: &SignMask) -> Self {
        Self::from_internal(&vec![0.0; d], lambda, mask, ModelMeta::default())
    }

    /// Weights in the preprocessed feature space.
    pub fn internal_weights(&self) -> Vec<f64> {
        self.sign_mask.flip(&self.w)
    }

    /// Sign constraints hold exactly in the caller's space.
    pub fn is_sign_feasible(&self) -> bool {
        self.w.iter().enumerate().all(|(h, &wh)| {
            if !self.sign_mask.is_constrained(h) {
                true
            } else if self.sign_mask.is_negated(h) {
                wh <= 0.0
            } else {
                wh >= 0.0
            }
        })
    }

    /// Decision value `⟨w, x⟩` for a raw (un-negated) feature vector.
    pub fn score(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.w, x)
    }
}

/// Radius `√(2/λ)` of the ball known to contain the constrained optimum.
pub fn ball_radius(lambda: f64) -> f64 {
    (2.0 / lambda).sqrt()
}

fn check_dims(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}

/// `P(w)` from precomputed margins.
pub(crate) fn primal_from_margins(w: &[f64], margins: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = margins.iter().map(|z| (1.0 - z).max(0.0)).sum();
    0.5 * lambda * linalg::norm_sq(w) + hinge / margins.len() as f64
}

/// Primal objective for weights in the preprocessed feature space.
pub fn primal_objective_internal(w: &[f64], lambda: f64, data: &Dataset, exec: Exec) -> Result<f64> {
    check_dims("primal objective", data.d(), w.len())?;
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    Ok(primal_from_margins(w, &data.margins(w, exec), lambda))
}

/// `P(w) = (λ/2)‖w‖² + (1/n)Σ_i max(0, 1 − ⟨y_i x_i, w⟩)`.
pub fn primal_objective(model: &PrimalModel, data: &Dataset) -> Result<f64> {
    primal_objective_internal(&model.internal_weights(), model.lambda, data, Exec::default())
}

/// Subgradient from precomputed margins; margin exactly 1 contributes nothing.
pub(crate) fn subgradient_from_margins(
    w: &[f64],
    margins: &[f64],
    lambda: f64,
    data: &Dataset,
    exec: Exec,
) -> Vec<f64> {
    let n = data.n() as f64;
    let violators: Vec<f64> = margins.iter().map(|&z| if z < 1.0 { 1.0 } else { 0.0 }).collect();
    let mut g = data.combine(&violators, -1.0 / n, exec);
    for (gh, wh) in g.iter_mut().zip(w) {
        *gh += lambda * wh;
    }
    g
}

/// `λw − (1/n) Σ_{i: ⟨y_i x_i, w⟩ < 1} y_i x_i`, in the preprocessed space.
pub fn primal_subgradient(model: &PrimalModel, data: &Dataset) -> Result<Vec<f64>> {
    let w = model.internal_weights();
    check_dims("primal subgradient", data.d(), w.len())?;
    let z = data.margins(&w, Exec::default());
    Ok(subgradient_from_margins(
        &w,
        &z,
        model.lambda,
        data,
        Exec::default(),
    ))
}

/// Euclidean projection onto `S = {w : σ ⊙ w ≥ 0}`.
pub fn project_sign_cone(v: &[f64], mask: &SignMask) -> Vec<f64> {
    v.iter()
        .zip(mask.sigma())
        .map(|(&x, &s)| if s { x.max(0.0) } else { x })
        .collect()
}

pub(crate) fn project_sign_cone_in_place(v: &mut [f64], mask: &SignMask) {
    for (x, &s) in v.iter_mut().zip(mask.sigma()) {
        if s && *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Euclidean projection onto the ball of radius `√(2/λ)`.
pub fn project_ball(v: &[f64], lambda: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    project_ball_in_place(&mut out, lambda);
    out
}

pub(crate) fn project_ball_in_place(v: &mut [f64], lambda: f64) {
    let r = ball_radius(lambda);
    let nv = linalg::norm(v);
    if nv > r {
        let s = r / nv;
        for x in v.iter_mut() {
            *x *= s;
        }
    }
}

/// Dual iterate `α` with cached `v = Xα/(λn)` and `w = Π_S(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    alpha: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
}

impl DualState {
    pub fn new(alpha: Vec<f64>, data: &Dataset, mask: &SignMask, lambda: f64, exec: Exec) -> Result<Self> {
        check_dims("dual state", data.n(), alpha.len())?;
        check_dims("sign mask", data.d(), mask.d())?;
        check_box(&alpha)?;
        let v = data.combine(&alpha, 1.0 / (lambda * data.n() as f64), exec);
        let w = project_sign_cone(&v, mask);
        Ok(DualState { alpha, v, w })
    }

    pub fn zero(data: &Dataset) -> Self {
        DualState {
            alpha: vec![0.0; data.n()],
            v: vec![0.0; data.d()],
            w: vec![0.0; data.d()],
        }
    }

    /// Moves to `α + η q` given `Xq/(λn)`; caches are updated incrementally.
    pub(crate) fn step(&mut self, q: &[f64], vq: &[f64], eta: f64, mask: &SignMask) {
        for (a, dq) in self.alpha.iter_mut().zip(q) {
            *a = (*a + eta * dq).clamp(0.0, 1.0);
        }
        for (v, dv) in self.v.iter_mut().zip(vq) {
            *v += eta * dv;
        }
        self.w.copy_from_slice(&self.v);
        project_sign_cone_in_place(&mut self.w, mask);
    }

    /// Recomputes the caches from `α`, discarding accumulated drift.
    pub(crate) fn refresh(&mut self, data: &Dataset, mask: &SignMask, lambda: f64, exec: Exec) {
        self.v = data.combine(&self.alpha, 1.0 / (lambda * data.n() as f64), exec);
        self.w = project_sign_cone(&self.v, mask);
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// `w(α)` in the preprocessed feature space.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Largest deviation of the cached `v` from a fresh recomputation.
    pub fn cache_drift(&self, data: &Dataset, lambda: f64) -> f64 {
        let fresh = data.combine(&self.alpha, 1.0 / (lambda * data.n() as f64), Exec::Sequential);
        fresh
            .iter()
            .zip(&self.v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_box(alpha: &[f64]) -> Result<()> {
    match alpha.iter().enumerate().find(|(_, a)| !(0.0..=1.0).contains(*a)) {
        Some((index, &value)) => Err(Error::AlphaOutOfBox { index, value }),
        None => Ok(()),
    }
}

/// `D(α)` from the cached `w(α)`.
pub(crate) fn dual_from_state(state: &DualState, n: usize, lambda: f64) -> f64 {
    -0.5 * lambda * linalg::norm_sq(&state.w) + state.alpha_sum() / n as f64
}

/// `D(α) = −(λ/2)‖w(α)‖² + (1/n)⟨1, α⟩`.
pub fn dual_objective(state: &DualState, data: &Dataset, lambda: f64) -> Result<f64> {
    check_dims("dual objective", data.n(), state.alpha.len())?;
    check_box(&state.alpha)?;
    Ok(dual_from_state(state, data.n(), lambda))
}

/// Applies the numerical floor to a raw gap value.
pub(crate) fn floor_gap(gap: f64) -> Result<f64> {
    if gap >= 0.0 {
        Ok(gap)
    } else if gap >= -GAP_FLOOR {
        debug!("clamping duality gap {gap:e} to zero");
        Ok(0.0)
    } else if gap.is_nan() {
        Err(Error::NonFinite { iteration: 0 })
    } else {
        Err(Error::NegativeGap { gap })
    }
}

/// `P(w(α)) − D(α)`; certifies `P(w(α)) − P(w★) ≤ gap`.
pub fn duality_gap(state: &DualState, data: &Dataset, lambda: f64) -> Result<f64> {
    let d = dual_objective(state, data, lambda)?;
    let p = primal_objective_internal(&state.w, lambda, data, Exec::default())?;
    floor_gap(p - d)
}

/// Primal model `w(α)` mapped back to the caller's feature space.
pub fn recover_weights(state: &DualState, lambda: f64, mask: &SignMask) -> PrimalModel {
    PrimalModel::from_internal(&state.w, lambda, mask, ModelMeta::default())
}
