//! Frank-Wolfe on the dual box `[0,1]^n`.
//!
//! Each iteration costs two passes over the data: margins `X^⊤ w(α)` (which
//! give the direction and the duality gap) and `X q` (which feeds the exact
//! line search).

use std::time::Instant;

use log::debug;

use crate::error::{Error, Result};
use crate::linalg::Exec;
use crate::linesearch::{self, LineSearchInput};
use crate::model::{
    self, floor_gap, primal_from_margins, Dataset, DualState, ModelMeta, PrimalModel, SignMask,
};
use crate::trace::TraceRecord;

/// Recompute the cached `v = Xα/(λn)` from scratch this often.
const REFRESH_EVERY: usize = 256;

/// Initial dual point.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Alpha0 {
    #[default]
    Zero,
    Constant(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwConfig {
    pub lambda: f64,
    /// Target duality gap.
    pub epsilon: f64,
    pub max_iter: usize,
    pub alpha0: Alpha0,
    /// Evaluate the gap every `gap_stride` iterations (1 = every iteration).
    pub gap_stride: usize,
    /// Keep a trace row every `trace_stride` iterations; the final row is always kept.
    pub trace_stride: usize,
    pub exec: Exec,
}

impl FwConfig {
    pub fn new(lambda: f64, epsilon: f64, max_iter: usize) -> Self {
        FwConfig {
            lambda,
            epsilon,
            max_iter,
            alpha0: Alpha0::Zero,
            gap_stride: 1,
            trace_stride: 1,
            exec: Exec::default(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iter == 0 || self.gap_stride == 0 || self.trace_stride == 0 {
            return Err(Error::InvalidConfig("max_iter and strides must be ≥ 1".into()));
        }
        match &self.alpha0 {
            Alpha0::Constant(c) if !(0.0..=1.0).contains(c) => Err(Error::InvalidConfig(format!(
                "initial alpha constant {c} outside [0, 1]"
            ))),
            Alpha0::Vector(v) if v.len() != n => Err(Error::DimensionMismatch {
                context: "initial alpha",
                expected: n,
                got: v.len(),
            }),
            _ => Ok(()),
        }
    }

    fn initial_alpha(&self, n: usize) -> Vec<f64> {
        match &self.alpha0 {
            Alpha0::Zero => vec![0.0; n],
            Alpha0::Constant(c) => vec![*c; n],
            Alpha0::Vector(v) => v.clone(),
        }
    }
}

/// One Frank-Wolfe step: the corner `u`, the direction `q = u − α`, and `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct FwIterate {
    pub state: DualState,
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub eta: f64,
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FwStatus {
    /// Duality gap reached the target.
    Certified,
    /// The direction vanished (`u = α`); the current point is optimal for the linearization.
    Stationary,
    /// Ran out of iterations before certifying; the state is still usable.
    NotCertified,
}

#[derive(Debug, Clone)]
pub struct FwResult {
    pub model: PrimalModel,
    pub state: DualState,
    pub trace: Vec<TraceRecord>,
    pub status: FwStatus,
    /// Completed Frank-Wolfe updates.
    pub iterations: usize,
    pub primal: f64,
    pub dual: f64,
    /// Last evaluated gap.
    pub gap: f64,
}

impl FwResult {
    pub fn certified(&self) -> bool {
        self.status != FwStatus::NotCertified
    }
}

/// Linear maximization oracle from precomputed margins: `u_i = 1` iff `z_i < 1`.
pub fn lmo_from_margins(margins: &[f64]) -> Vec<f64> {
    margins.iter().map(|&z| if z < 1.0 { 1.0 } else { 0.0 }).collect()
}

/// Corner of `[0,1]^n` maximizing `⟨∇D(α), u⟩`.
pub fn lmo(state: &DualState, data: &Dataset) -> Vec<f64> {
    lmo_from_margins(&data.margins(state.w(), Exec::default()))
}

/// Iterations after which the dual error is at most `ε`: `⌈2R²/(λε) − 2⌉`, clamped at 0.
pub fn fw_iteration_bound(lambda: f64, radius: f64, epsilon: f64) -> usize {
    let t = 2.0 * radius * radius / (lambda * epsilon) - 2.0;
    if t <= 0.0 {
        0
    } else {
        t.ceil() as usize
    }
}

/// Guaranteed dual error after `t` iterations, `2C_F/(t+2)` with `C_F ≤ R²/λ`.
pub fn fw_rate_bound(lambda: f64, radius: f64, t: usize) -> f64 {
    2.0 * radius * radius / (lambda * (t as f64 + 2.0))
}

/// Line-search step from `state` towards the corner `u`.
pub fn fw_step(
    state: &DualState,
    u: Vec<f64>,
    data: &Dataset,
    mask: &SignMask,
    lambda: f64,
    exec: Exec,
) -> Result<Option<FwIterate>> {
    let q: Vec<f64> = u.iter().zip(state.alpha()).map(|(u, a)| u - a).collect();
    if q.iter().all(|&x| x == 0.0) {
        return Ok(None);
    }
    let n = data.n();
    let vq = data.combine(&q, 1.0 / (lambda * n as f64), exec);
    let input = LineSearchInput {
        v0: state.v(),
        vq: &vq,
        sum_alpha: state.alpha_sum(),
        sum_q: q.iter().sum(),
        mask,
        lambda,
        n,
    };
    let (eta, _) = linesearch::exact_line_search(&input)?;
    let mut next = state.clone();
    next.step(&q, &vq, eta, mask);
    Ok(Some(FwIterate {
        state: next,
        u,
        q,
        eta,
    }))
}

/// Runs the Frank-Wolfe loop until the duality gap is at most `ε` or `T` updates were made.
pub fn fw_train(data: &Dataset, mask: &SignMask, cfg: &FwConfig) -> Result<FwResult> {
    cfg.validate(data.n())?;
    if mask.d() != data.d() {
        return Err(Error::DimensionMismatch {
            context: "sign mask",
            expected: data.d(),
            got: mask.d(),
        });
    }
    let lambda = cfg.lambda;
    let n = data.n();
    let exec = cfg.exec;
    let start = Instant::now();
    let mut state = DualState::new(cfg.initial_alpha(n), data, mask, lambda, exec)?;
    let mut trace = Vec::new();
    let mut last_dual = f64::NEG_INFINITY;
    let mut status = FwStatus::NotCertified;
    let (mut primal, mut dual, mut gap) = (f64::NAN, f64::NAN, f64::INFINITY);
    let mut t = 0;

    loop {
        let z = data.margins(state.w(), exec);
        let evaluate = t % cfg.gap_stride == 0 || t == cfg.max_iter;
        if evaluate {
            primal = primal_from_margins(state.w(), &z, lambda);
            dual = model::dual_from_state(&state, n, lambda);
            if !primal.is_finite() || !dual.is_finite() {
                return Err(Error::NonFinite { iteration: t });
            }
            gap = floor_gap(primal - dual).map_err(|e| match e {
                Error::NonFinite { .. } => Error::NonFinite { iteration: t },
                e => e,
            })?;
            if dual < last_dual - 1e-12 * last_dual.abs().max(1.0) {
                debug!("dual decreased at iteration {t}: {last_dual} -> {dual}");
            }
            last_dual = dual;
            let keep = t % cfg.trace_stride == 0 || gap <= cfg.epsilon || t == cfg.max_iter;
            if keep {
                trace.push(TraceRecord {
                    iter: t,
                    primal,
                    dual: Some(dual),
                    gap: Some(gap),
                    elapsed_ns: start.elapsed().as_nanos() as u64,
                });
            }
            if gap <= cfg.epsilon {
                status = FwStatus::Certified;
                break;
            }
        }
        if t == cfg.max_iter {
            break;
        }
        let u = lmo_from_margins(&z);
        match fw_step(&state, u, data, mask, lambda, exec)? {
            None => {
                status = FwStatus::Stationary;
                if !evaluate {
                    primal = primal_from_margins(state.w(), &z, lambda);
                    dual = model::dual_from_state(&state, n, lambda);
                    gap = floor_gap(primal - dual)?;
                }
                break;
            }
            Some(it) => state = it.state,
        }
        t += 1;
        if t % REFRESH_EVERY == 0 {
            state.refresh(data, mask, lambda, exec);
        }
    }
    if matches!(trace.last(), Some(r) if r.iter != t) || trace.is_empty() {
        trace.push(TraceRecord {
            iter: t,
            primal,
            dual: Some(dual),
            gap: Some(gap),
            elapsed_ns: start.elapsed().as_nanos() as u64,
        });
    }
    let meta = ModelMeta {
        solver: "fw".into(),
        iterations: t,
        final_gap: Some(gap),
    };
    let model = PrimalModel::from_internal(state.w(), lambda, mask, meta);
    Ok(FwResult {
        model,
        state,
        trace,
        status,
        iterations: t,
        primal,
        dual,
        gap,
    })
}
