//! Projected subgradient descent on the primal (sign-constrained Pegasos).
//!
//! `w⁽¹⁾ = 0` and `w⁽ᵗ⁺¹⁾ = Π_B(Π_S(w⁽ᵗ⁾ − ∇P(w⁽ᵗ⁾)/(λt)))` with the full-batch
//! subgradient. There is no stopping rule: exactly `T` updates are made and
//! the best iterate seen is returned.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::Exec;
use crate::model::{
    self, primal_from_margins, subgradient_from_margins, Dataset, ModelMeta, PrimalModel, SignMask,
};
use crate::trace::TraceRecord;

/// When the objective is written to the trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum EvalSchedule {
    /// 100 log-spaced points between 1 and `T`, rounded up and deduplicated.
    #[default]
    Log,
    /// Every iteration.
    All,
    /// Every `k`-th iteration, plus the last one.
    Every(usize),
    /// Explicit iteration indices in `1..=T`, sorted ascending.
    At(Vec<usize>),
}

impl EvalSchedule {
    pub fn iterations(&self, max_iter: usize) -> Vec<usize> {
        match self {
            EvalSchedule::Log => log_schedule(max_iter, 100),
            EvalSchedule::All => (1..=max_iter).collect(),
            EvalSchedule::Every(k) => {
                let k = (*k).max(1);
                let mut v: Vec<usize> = (1..=max_iter).filter(|t| t % k == 0).collect();
                if v.last() != Some(&max_iter) {
                    v.push(max_iter);
                }
                v
            }
            EvalSchedule::At(v) => v.clone(),
        }
    }
}

/// `unique(ceil(10^{linspace(0, log10 T, points)}))`; for `T = 100` this gives 55 indices.
pub fn log_schedule(max_iter: usize, points: usize) -> Vec<usize> {
    if max_iter <= 1 || points <= 1 {
        return vec![max_iter.max(1)];
    }
    let top = (max_iter as f64).log10();
    let mut out: Vec<usize> = (0..points)
        .map(|j| {
            let x = 10f64.powf(top * j as f64 / (points - 1) as f64);
            // values that are integers up to rounding must not be bumped up
            let c = (x - 1e-9 * x).ceil();
            (c as usize).clamp(1, max_iter)
        })
        .collect();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgConfig {
    pub lambda: f64,
    pub max_iter: usize,
    pub eval_schedule: EvalSchedule,
    /// Unused: the solver is deterministic.
    pub seed: u64,
    pub exec: Exec,
}

impl PgConfig {
    pub fn new(lambda: f64, max_iter: usize) -> Self {
        PgConfig {
            lambda,
            max_iter,
            eval_schedule: EvalSchedule::Log,
            seed: 0,
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be ≥ 1".into()));
        }
        if let EvalSchedule::At(v) = &self.eval_schedule {
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig(
                    "evaluation schedule must be strictly increasing".into(),
                ));
            }
            if v.first() == Some(&0) || v.last().is_some_and(|&t| t > self.max_iter) {
                return Err(Error::InvalidConfig(
                    "evaluation schedule must lie in 1..=max_iter".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PgResult {
    /// Best iterate over `w⁽¹⁾ … w⁽ᵀ⁺¹⁾`.
    pub model: PrimalModel,
    pub best_iter: usize,
    pub best_primal: f64,
    /// `w⁽ᵀ⁺¹⁾` in the preprocessed feature space.
    pub last_w: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    /// `P(w⁽ᵗ⁾)` for `t = 1..=T+1`.
    pub objective_history: Vec<f64>,
}

impl PgResult {
    /// `min_{t ≤ T} P(w⁽ᵗ⁾)`.
    pub fn best_up_to(&self, t: usize) -> f64 {
        self.objective_history[..t.min(self.objective_history.len())]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Theorem-style bound on the best-iterate primal error after `T ≥ 2` updates.
pub fn pg_bound(lambda: f64, radius: f64, t: f64) -> f64 {
    let g = (2.0 * lambda).sqrt() + radius;
    g * g * t.ln() / (lambda * t)
}

pub fn pg_train(data: &Dataset, mask: &SignMask, cfg: &PgConfig) -> Result<PgResult> {
    cfg.validate()?;
    if mask.d() != data.d() {
        return Err(Error::DimensionMismatch {
            context: "sign mask",
            expected: data.d(),
            got: mask.d(),
        });
    }
    let lambda = cfg.lambda;
    let exec = cfg.exec;
    let start = Instant::now();
    let schedule = cfg.eval_schedule.iterations(cfg.max_iter);
    let mut next_eval = schedule.iter().peekable();

    let mut w = vec![0.0; data.d()];
    let mut best_w = w.clone();
    let mut best_primal = f64::INFINITY;
    let mut best_iter = 1;
    let mut history = Vec::with_capacity(cfg.max_iter + 1);
    let mut trace = Vec::with_capacity(schedule.len());

    for t in 1..=cfg.max_iter + 1 {
        // margins give both P(w⁽ᵗ⁾) and the subgradient
        let z = data.margins(&w, exec);
        let primal = primal_from_margins(&w, &z, lambda);
        if !primal.is_finite() {
            return Err(Error::NonFinite { iteration: t });
        }
        history.push(primal);
        if primal < best_primal {
            best_primal = primal;
            best_w.copy_from_slice(&w);
            best_iter = t;
        }
        if next_eval.peek() == Some(&&t) {
            next_eval.next();
            trace.push(TraceRecord {
                iter: t,
                primal,
                dual: None,
                gap: None,
                elapsed_ns: start.elapsed().as_nanos() as u64,
            });
        }
        if t == cfg.max_iter + 1 {
            break;
        }
        let g = subgradient_from_margins(&w, &z, lambda, data, exec);
        let step = 1.0 / (lambda * t as f64);
        for (wh, gh) in w.iter_mut().zip(&g) {
            *wh -= step * gh;
        }
        model::project_sign_cone_in_place(&mut w, mask);
        model::project_ball_in_place(&mut w, lambda);
        debug_assert!(w.iter().zip(mask.sigma()).all(|(&x, &s)| !s || x >= 0.0));
        debug_assert!(crate::linalg::norm(&w) <= model::ball_radius(lambda) * (1.0 + 1e-12));
    }

    let meta = ModelMeta {
        solver: "pg".into(),
        iterations: cfg.max_iter,
        final_gap: None,
    };
    Ok(PgResult {
        model: PrimalModel::from_internal(&best_w, lambda, mask, meta),
        best_iter,
        best_primal,
        last_w: w,
        trace,
        objective_history: history,
    })
}
