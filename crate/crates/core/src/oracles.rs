//! Slow-but-sure references for checking the solvers.
//!
//! Nothing here calls into `linalg`, `linesearch` or the objective helpers in
//! `model`: every quantity is recomputed with plain loops from the stored
//! columns, so a bug in the fast path cannot hide in its own oracle.
//! Reference optima come from [`dual_coordinate_reference`], a solver that
//! shares no code with Frank-Wolfe or projected subgradient descent.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::model::{Dataset, SignMask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub grid_points: usize,
    pub fd_step: f64,
    /// Sweep budget of the coordinate-ascent reference.
    pub reference_sweeps: usize,
    pub reference_gap: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            grid_points: 100_000,
            fd_step: 1e-6,
            reference_sweeps: 200_000,
            reference_gap: 1e-9,
        }
    }
}

/// Largest `n` accepted by [`exhaustive_lmo`].
pub const MAX_EXHAUSTIVE_N: usize = 20;

/// `(1/(λn)) Σ_i c_i col_i` with a plain double loop.
pub fn naive_combination(data: &Dataset, coeffs: &[f64], lambda: f64) -> Vec<f64> {
    let (n, d) = (data.n(), data.d());
    let mut out = vec![0.0; d];
    for h in 0..d {
        let mut s = 0.0;
        for i in 0..n {
            s += coeffs[i] * data.columns()[i * d + h];
        }
        out[h] = s / (lambda * n as f64);
    }
    out
}

pub fn naive_project(v: &[f64], mask: &SignMask) -> Vec<f64> {
    (0..v.len())
        .map(|h| if mask.sigma()[h] && v[h] < 0.0 { 0.0 } else { v[h] })
        .collect()
}

fn naive_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// `P(w)` for weights in the preprocessed feature space.
pub fn naive_primal(w: &[f64], data: &Dataset, lambda: f64) -> f64 {
    let n = data.n();
    let mut hinge = 0.0;
    for i in 0..n {
        let z = naive_dot(data.column(i), w);
        if z < 1.0 {
            hinge += 1.0 - z;
        }
    }
    0.5 * lambda * naive_dot(w, w) + hinge / n as f64
}

pub fn naive_dual_weights(alpha: &[f64], data: &Dataset, mask: &SignMask, lambda: f64) -> Vec<f64> {
    naive_project(&naive_combination(data, alpha, lambda), mask)
}

pub fn naive_dual(alpha: &[f64], data: &Dataset, mask: &SignMask, lambda: f64) -> f64 {
    let w = naive_dual_weights(alpha, data, mask, lambda);
    let s: f64 = alpha.iter().sum();
    -0.5 * lambda * naive_dot(&w, &w) + s / data.n() as f64
}

/// `∂D/∂α_i = (1/n)(1 − ⟨w(α), y_i x_i⟩)`.
pub fn naive_dual_gradient(alpha: &[f64], data: &Dataset, mask: &SignMask, lambda: f64) -> Vec<f64> {
    let w = naive_dual_weights(alpha, data, mask, lambda);
    let n = data.n() as f64;
    (0..data.n())
        .map(|i| (1.0 - naive_dot(&w, data.column(i))) / n)
        .collect()
}

/// Maximizes `D(α + ηq)` over a uniform grid on `[0, 1]` (endpoints included).
pub fn grid_line_search(
    alpha: &[f64],
    q: &[f64],
    data: &Dataset,
    mask: &SignMask,
    lambda: f64,
    grid_points: usize,
) -> Result<(f64, f64)> {
    if q.iter().all(|&x| x == 0.0) {
        return Err(Error::Oracle("direction q is zero".into()));
    }
    if grid_points < 2 {
        return Err(Error::Oracle("grid needs at least two points".into()));
    }
    let v0 = naive_combination(data, alpha, lambda);
    let vq = naive_combination(data, q, lambda);
    let (sa, sq): (f64, f64) = (alpha.iter().sum(), q.iter().sum());
    let n = data.n() as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for j in 0..grid_points {
        let eta = j as f64 / (grid_points - 1) as f64;
        let mut sq_norm = 0.0;
        for h in 0..v0.len() {
            let mut w = v0[h] + eta * vq[h];
            if mask.sigma()[h] && w < 0.0 {
                w = 0.0;
            }
            sq_norm += w * w;
        }
        let val = -0.5 * lambda * sq_norm + (sa + eta * sq) / n;
        if val > best.1 {
            best = (eta, val);
        }
    }
    Ok(best)
}

/// Best corner of `[0,1]^n` for `⟨∇D(α), u⟩` by enumeration; lowest corner index wins ties.
pub fn exhaustive_lmo(
    alpha: &[f64],
    data: &Dataset,
    mask: &SignMask,
    lambda: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = data.n();
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::Oracle(format!(
            "exhaustive LMO limited to n ≤ {MAX_EXHAUSTIVE_N}, got {n}"
        )));
    }
    let g = naive_dual_gradient(alpha, data, mask, lambda);
    let value_of = |corner: u64| -> f64 {
        let mut s = 0.0;
        for (i, gi) in g.iter().enumerate() {
            if corner >> i & 1 == 1 {
                s += gi;
            }
        }
        s
    };
    let corners = 1u64 << n;
    let best = best_corner(corners, &value_of);
    let u = (0..n).map(|i| (best >> i & 1) as f64).collect();
    Ok((u, value_of(best)))
}

#[cfg(feature = "parallel")]
fn best_corner(corners: u64, value_of: &(dyn Fn(u64) -> f64 + Sync)) -> u64 {
    use rayon::prelude::*;
    (0..corners)
        .into_par_iter()
        .map(|c| (value_of(c), c))
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        )
        .1
}

#[cfg(not(feature = "parallel"))]
fn best_corner(corners: u64, value_of: &dyn Fn(u64) -> f64) -> u64 {
    let mut best = (f64::NEG_INFINITY, 0);
    for c in 0..corners {
        let v = value_of(c);
        if v > best.0 {
            best = (v, c);
        }
    }
    best.1
}

/// `⟨∇D(α), u⟩` evaluated with the oracle's own gradient.
pub fn linear_value(alpha: &[f64], u: &[f64], data: &Dataset, mask: &SignMask, lambda: f64) -> f64 {
    let g = naive_dual_gradient(alpha, data, mask, lambda);
    let mut s = 0.0;
    for i in 0..g.len() {
        if u[i] == 1.0 {
            s += g[i];
        } else if u[i] != 0.0 {
            s += g[i] * u[i];
        }
    }
    s
}

/// Central-difference directional derivative of `P` at internal weights `w`.
pub fn fd_directional_derivative(w: &[f64], dir: &[f64], data: &Dataset, lambda: f64, step: f64) -> f64 {
    let plus: Vec<f64> = w.iter().zip(dir).map(|(a, b)| a + step * b).collect();
    let minus: Vec<f64> = w.iter().zip(dir).map(|(a, b)| a - step * b).collect();
    (naive_primal(&plus, data, lambda) - naive_primal(&minus, data, lambda)) / (2.0 * step)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOptimum {
    pub p_star: f64,
    pub d_star: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Internal-space weights of the reference solution.
    pub w: Vec<f64>,
}

/// Tight `P★`/`D★` estimates, certified by the duality gap.
pub fn reference_optimum(
    data: &Dataset,
    mask: &SignMask,
    lambda: f64,
    cfg: &OracleConfig,
) -> Result<ReferenceOptimum> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Oracle(format!("lambda must be positive, got {lambda}")));
    }
    if mask.d() != data.d() {
        return Err(Error::DimensionMismatch {
            context: "sign mask",
            expected: data.d(),
            got: mask.d(),
        });
    }
    Ok(dual_coordinate_reference(
        data,
        mask,
        lambda,
        cfg.reference_sweeps,
        cfg.reference_gap,
    ))
}

/// Coordinate ascent on the dual with explicit sign multipliers.
///
/// Maximizes `F(α, μ) = −(λ/2)‖w‖² + (1/n)Σα` with `w = (Xα/n + μ)/λ`,
/// `α ∈ [0,1]^n` and `μ_h ≥ 0` on constrained coordinates (zero elsewhere).
/// Maximizing out `μ` recovers the projected dual, so both problems share the
/// optimum, but every coordinate step here is a clipped one-dimensional
/// Newton step with no line-search machinery.
pub fn dual_coordinate_reference(
    data: &Dataset,
    mask: &SignMask,
    lambda: f64,
    max_sweeps: usize,
    tol: f64,
) -> ReferenceOptimum {
    let (n, d) = (data.n(), data.d());
    let nf = n as f64;
    let mut alpha = vec![0.0; n];
    let mut mu = vec![0.0; d];
    let mut w = vec![0.0; d];
    let sq: Vec<f64> = (0..n)
        .map(|i| naive_dot(data.column(i), data.column(i)))
        .collect();
    let mut sweeps = 0;
    let mut gap = f64::INFINITY;
    let mut p = f64::INFINITY;
    let mut dual = f64::NEG_INFINITY;
    while sweeps < max_sweeps {
        sweeps += 1;
        for i in 0..n {
            if sq[i] == 0.0 {
                alpha[i] = 1.0;
                continue;
            }
            let col = data.column(i);
            let z = naive_dot(col, &w);
            let delta = lambda * nf * (1.0 - z) / sq[i];
            let new = (alpha[i] + delta).clamp(0.0, 1.0);
            let step = new - alpha[i];
            if step != 0.0 {
                let s = step / (lambda * nf);
                for h in 0..d {
                    w[h] += s * col[h];
                }
                alpha[i] = new;
            }
        }
        for h in 0..d {
            if mask.sigma()[h] {
                let new = (mu[h] - lambda * w[h]).max(0.0);
                w[h] += (new - mu[h]) / lambda;
                mu[h] = new;
            }
        }
        if sweeps % 10 == 0 || sweeps == max_sweeps {
            // fresh recomputation for the certificate
            let v = naive_combination(data, &alpha, lambda);
            let wp = naive_project(&v, mask);
            p = naive_primal(&wp, data, lambda);
            dual = naive_dual(&alpha, data, mask, lambda);
            gap = p - dual;
            w = (0..d).map(|h| v[h] + mu[h] / lambda).collect();
            if gap <= tol {
                break;
            }
        }
    }
    let wp = naive_dual_weights(&alpha, data, mask, lambda);
    ReferenceOptimum {
        p_star: p,
        d_star: dual,
        gap,
        iterations: sweeps,
        converged: gap <= tol,
        w: wp,
    }
}
