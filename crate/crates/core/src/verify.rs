//! Seeded self-checks of the solvers against the oracles.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fw::{self, fw_iteration_bound, fw_rate_bound, FwConfig};
use crate::linalg::Exec;
use crate::linesearch::{self, LineSearchInput};
use crate::model::{Dataset, SignMask};
use crate::oracles::{self, OracleConfig};
use crate::pg::{self, pg_bound, EvalSchedule, PgConfig};
use crate::synth::{self, Instance, InstanceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    LineSearch,
    Consistency,
    Lmo,
    Rate,
    PgBound,
    Duality,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::LineSearch,
        Check::Consistency,
        Check::Lmo,
        Check::Rate,
        Check::PgBound,
        Check::Duality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::LineSearch => "linesearch",
            Check::Consistency => "consistency",
            Check::Lmo => "lmo",
            Check::Rate => "rate",
            Check::PgBound => "pg-bound",
            Check::Duality => "duality",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown check {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub instances: usize,
    pub checks: Vec<Check>,
    /// Overrides the per-instance λ of the rate and bound checks.
    pub lambda: Option<f64>,
    /// Dual accuracy target reported by the rate check.
    pub epsilon: Option<f64>,
    pub oracle: OracleConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            instances: 20,
            checks: Check::ALL.to_vec(),
            lambda: None,
            epsilon: None,
            oracle: OracleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: Check,
    pub passed: bool,
    pub instances: usize,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<12} instances={} worst={:.3e} tol={:.1e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.check.name(),
            self.instances,
            self.worst,
            self.tolerance,
            self.detail
        )
    }
}

/// State and direction for one line-search case.
#[derive(Debug, Clone)]
pub struct LineSearchCase {
    pub instance: Instance,
    pub alpha: Vec<f64>,
    pub q: Vec<f64>,
    pub lambda: f64,
}

impl LineSearchCase {
    pub fn input<'a>(&'a self, v0: &'a [f64], vq: &'a [f64]) -> LineSearchInput<'a> {
        LineSearchInput {
            v0,
            vq,
            sum_alpha: self.alpha.iter().sum(),
            sum_q: self.q.iter().sum(),
            mask: &self.instance.mask,
            lambda: self.lambda,
            n: self.instance.data.n(),
        }
    }

    /// `(v₀, v_q)` through the fast kernels.
    pub fn vectors(&self) -> (Vec<f64>, Vec<f64>) {
        let data = &self.instance.data;
        let s = 1.0 / (self.lambda * data.n() as f64);
        (
            data.combine(&self.alpha, s, Exec::Sequential),
            data.combine(&self.q, s, Exec::Sequential),
        )
    }
}

/// Random `α` (with some coordinates pinned at the box faces) and a random
/// corner direction, so breakpoints land inside `[0, 1]`.
pub fn random_line_search_case<R: Rng>(rng: &mut R, max_n: usize, max_d: usize) -> Result<LineSearchCase> {
    let n = rng.random_range(2..=max_n);
    let d = rng.random_range(1..=max_d);
    let spec = InstanceSpec {
        normalize: rng.random::<bool>(),
        constrained_fraction: rng.random_range(0.0..1.0),
        ..InstanceSpec::new(n, d)
    };
    let instance = synth::random_instance(rng, &spec)?;
    let alpha: Vec<f64> = (0..n)
        .map(|_| match rng.random_range(0..6) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..1.0),
        })
        .collect();
    let mut u: Vec<f64> = (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 })
        .collect();
    if u == alpha {
        u[0] = 1.0 - u[0];
    }
    let q = u.iter().zip(&alpha).map(|(u, a)| u - a).collect();
    let lambda = 10f64.powf(rng.random_range(-2.0..0.0));
    Ok(LineSearchCase {
        instance,
        alpha,
        q,
        lambda,
    })
}

/// Normalized (R = 1) random instance with mixed constraints for the bound checks.
pub fn bound_instance<R: Rng>(rng: &mut R) -> Result<(Instance, f64)> {
    let n = rng.random_range(20..=40);
    let d = rng.random_range(3..=8);
    let inst = synth::random_instance(rng, &InstanceSpec::new(n, d))?;
    let lambda = [0.1, 0.05, 0.02][rng.random_range(0..3)];
    Ok((inst, lambda))
}

fn report(
    check: Check,
    instances: usize,
    worst: f64,
    tolerance: f64,
    passed: bool,
    detail: String,
) -> CheckReport {
    CheckReport {
        check,
        passed,
        instances,
        worst,
        tolerance,
        detail,
    }
}

pub fn check_line_search(seed: u64, instances: usize, grid_points: usize) -> Result<CheckReport> {
    let mut rng = synth::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let case = random_line_search_case(&mut rng, 50, 30)?;
        let (v0, vq) = case.vectors();
        let (eta, _) = linesearch::exact_line_search(&case.input(&v0, &vq))?;
        let data = &case.instance.data;
        let moved: Vec<f64> = case.alpha.iter().zip(&case.q).map(|(a, q)| a + eta * q).collect();
        let at_eta = oracles::naive_dual(&moved, data, &case.instance.mask, case.lambda);
        let (_, grid_max) = oracles::grid_line_search(
            &case.alpha,
            &case.q,
            data,
            &case.instance.mask,
            case.lambda,
            grid_points,
        )?;
        worst = worst.max((at_eta - grid_max).abs());
    }
    let tol = 1e-8;
    Ok(report(
        Check::LineSearch,
        instances,
        worst,
        tol,
        worst <= tol,
        "|ζ(η★) − grid max|".into(),
    ))
}

pub fn check_consistency(seed: u64, instances: usize, etas_per_instance: usize) -> Result<CheckReport> {
    let mut rng = synth::rng(seed);
    let (mut worst_val, mut worst_cont, mut concave) = (0.0f64, 0.0f64, true);
    for _ in 0..instances {
        let case = random_line_search_case(&mut rng, 50, 30)?;
        let (v0, vq) = case.vectors();
        let pq = linesearch::build_quadratic(&case.input(&v0, &vq))?;
        concave &= pq.is_concave();
        let (vr, sr) = pq.continuity_residuals();
        worst_cont = worst_cont.max(vr).max(sr);
        for _ in 0..etas_per_instance {
            let eta: f64 = rng.random_range(0.0..=1.0);
            let moved: Vec<f64> = case.alpha.iter().zip(&case.q).map(|(a, q)| a + eta * q).collect();
            let direct = oracles::naive_dual(&moved, &case.instance.data, &case.instance.mask, case.lambda);
            worst_val = worst_val.max((pq.value(eta) - direct).abs());
        }
    }
    let passed = concave && worst_val <= 1e-10 && worst_cont <= 1e-9;
    Ok(report(
        Check::Consistency,
        instances,
        worst_val,
        1e-10,
        passed,
        format!("continuity residual {worst_cont:.1e} (tol 1e-9), all a_k ≤ 0: {concave}"),
    ))
}

pub fn check_lmo(seed: u64, instances: usize) -> Result<CheckReport> {
    let mut rng = synth::rng(seed);
    let mut mismatches = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = rng.random_range(1..=16);
        let d = rng.random_range(1..=10);
        let inst = synth::random_instance(&mut rng, &InstanceSpec::new(n.max(2), d))?;
        let lambda = 10f64.powf(rng.random_range(-2.0..0.5));
        let data = &inst.data;
        let alpha: Vec<f64> = (0..data.n()).map(|_| rng.random_range(0.0..1.0)).collect();
        let state = crate::model::DualState::new(alpha.clone(), data, &inst.mask, lambda, Exec::Sequential)?;
        let u = fw::lmo(&state, data);
        let (_, best) = oracles::exhaustive_lmo(&alpha, data, &inst.mask, lambda)?;
        let ours = oracles::linear_value(&alpha, &u, data, &inst.mask, lambda);
        if ours != best {
            mismatches += 1;
            worst = worst.max((ours - best).abs());
        }
    }
    Ok(report(
        Check::Lmo,
        instances,
        worst,
        0.0,
        mismatches == 0,
        format!("{mismatches} mismatches"),
    ))
}

/// FW dual error vs `2R²/(λ(T+2))` for every `T ≤ max_t`.
pub fn check_rate(
    seed: u64,
    instances: usize,
    max_t: usize,
    lambda: Option<f64>,
    oracle: &OracleConfig,
) -> Result<CheckReport> {
    let mut rng = synth::rng(seed);
    let mut worst_ratio: f64 = 0.0;
    let mut all_converged = true;
    for _ in 0..instances {
        let (inst, lam) = bound_instance(&mut rng)?;
        let lam = lambda.unwrap_or(lam);
        let r = oracles::reference_optimum(&inst.data, &inst.mask, lam, oracle)?;
        all_converged &= r.converged;
        let errors = fw_dual_errors(&inst.data, &inst.mask, lam, max_t, r.d_star)?;
        for (t, err) in errors.iter().enumerate() {
            worst_ratio = worst_ratio.max(err / fw_rate_bound(lam, inst.data.radius(), t));
        }
    }
    Ok(report(
        Check::Rate,
        instances,
        worst_ratio,
        1.0,
        worst_ratio <= 1.0 && all_converged,
        format!("max error/bound over T ≤ {max_t}; references converged: {all_converged}"),
    ))
}

/// `D★ − D(α⁽ᵗ⁾)` for `t = 0..=max_t` (padded with the final value after early stops).
pub fn fw_dual_errors(
    data: &Dataset,
    mask: &SignMask,
    lambda: f64,
    max_t: usize,
    d_star: f64,
) -> Result<Vec<f64>> {
    let mut cfg = FwConfig::new(lambda, f64::MIN_POSITIVE, max_t);
    cfg.exec = Exec::Sequential;
    let res = fw::fw_train(data, mask, &cfg)?;
    let mut errors: Vec<f64> = res
        .trace
        .iter()
        .map(|r| d_star - r.dual.unwrap_or(f64::NAN))
        .collect();
    let last = *errors.last().unwrap_or(&f64::NAN);
    errors.resize(max_t + 1, last);
    Ok(errors)
}

/// Iterations the FW solver needs to bring `D★ − D(α)` under `ε`, next to the bound.
pub fn rate_report(seed: u64, lambda: f64, epsilon: f64, oracle: &OracleConfig) -> Result<CheckReport> {
    let mut rng = synth::rng(seed);
    let (inst, _) = bound_instance(&mut rng)?;
    let bound = fw_iteration_bound(lambda, inst.data.radius(), epsilon);
    let r = oracles::reference_optimum(&inst.data, &inst.mask, lambda, oracle)?;
    let horizon = bound.max(1);
    let errors = fw_dual_errors(&inst.data, &inst.mask, lambda, horizon, r.d_star)?;
    let observed = errors.iter().position(|&e| e <= epsilon);
    let passed = observed.is_some_and(|t| t <= bound);
    Ok(report(
        Check::Rate,
        1,
        observed.map_or(f64::INFINITY, |t| t as f64),
        bound as f64,
        passed,
        format!(
            "bound {bound} iterations for λ={lambda} ε={epsilon}; observed {}",
            observed.map_or("none within bound".to_string(), |t| t.to_string())
        ),
    ))
}

pub fn check_pg_bound(
    seed: u64,
    instances: usize,
    horizons: &[usize],
    lambda: Option<f64>,
    oracle: &OracleConfig,
) -> Result<CheckReport> {
    let mut rng = synth::rng(seed);
    let mut worst_ratio: f64 = 0.0;
    let max_t = horizons.iter().copied().max().unwrap_or(1);
    for _ in 0..instances {
        let (inst, lam) = bound_instance(&mut rng)?;
        let lam = lambda.unwrap_or(lam);
        let r = oracles::reference_optimum(&inst.data, &inst.mask, lam, oracle)?;
        let mut cfg = PgConfig::new(lam, max_t);
        cfg.eval_schedule = EvalSchedule::At(horizons.to_vec());
        cfg.exec = Exec::Sequential;
        let res = pg::pg_train(&inst.data, &inst.mask, &cfg)?;
        for &t in horizons {
            let err = res.best_up_to(t) - r.p_star;
            worst_ratio = worst_ratio.max(err / pg_bound(lam, inst.data.radius(), t as f64));
        }
    }
    Ok(report(
        Check::PgBound,
        instances,
        worst_ratio,
        1.0,
        worst_ratio <= 1.0,
        format!("max error/bound at T ∈ {horizons:?}"),
    ))
}

pub fn check_duality(seed: u64, instances: usize) -> Result<CheckReport> {
    let mut rng = synth::rng(seed);
    let mut worst: f64 = f64::INFINITY;
    for _ in 0..instances {
        let n = rng.random_range(2..=20);
        let d = rng.random_range(1..=10);
        let inst = synth::random_instance(&mut rng, &InstanceSpec::new(n, d))?;
        let lambda = 10f64.powf(rng.random_range(-3.0..1.0));
        let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let w = oracles::naive_dual_weights(&alpha, &inst.data, &inst.mask, lambda);
        let gap = oracles::naive_primal(&w, &inst.data, lambda)
            - oracles::naive_dual(&alpha, &inst.data, &inst.mask, lambda);
        worst = worst.min(gap);
    }
    Ok(report(
        Check::Duality,
        instances,
        worst,
        -1e-10,
        worst >= -1e-10,
        "min P(w(α)) − D(α)".into(),
    ))
}

pub fn run(cfg: &VerifyConfig) -> Result<Vec<CheckReport>> {
    if cfg.instances == 0 {
        return Err(Error::InvalidConfig("need at least one instance".into()));
    }
    let mut out = Vec::new();
    for &check in &cfg.checks {
        let seed = cfg
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(check as u64);
        let r = match check {
            Check::LineSearch => check_line_search(seed, cfg.instances, cfg.oracle.grid_points)?,
            Check::Consistency => check_consistency(seed, cfg.instances, 100)?,
            Check::Lmo => check_lmo(seed, cfg.instances)?,
            Check::Rate => match (cfg.lambda, cfg.epsilon) {
                (Some(l), Some(e)) => rate_report(seed, l, e, &cfg.oracle)?,
                _ => check_rate(seed, cfg.instances, 500, cfg.lambda, &cfg.oracle)?,
            },
            Check::PgBound => check_pg_bound(seed, cfg.instances, &[100, 1000], cfg.lambda, &cfg.oracle)?,
            Check::Duality => check_duality(seed, cfg.instances * 50)?,
        };
        out.push(r);
    }
    Ok(out)
}
