//! Exact line search for the dual objective along a Frank-Wolfe direction.
//!
//! Along `α + ηq` the pre-projection vector is affine in `η`,
//! `v(η) = v₀ + η v_q`, and each constrained coordinate of `Π_S(v(η))` is
//! either the affine function or zero depending on the sign of
//! `v_{h,0} + η v_{h,q}`. The sign changes at `−v_{h,0}/v_{h,q}`, so
//! `ζ(η) = D(α + ηq)` is a concave, continuously differentiable piecewise
//! quadratic whose pieces are delimited by those ratios. We build the pieces
//! and maximize in closed form.

use crate::error::{Error, Result};
use crate::model::SignMask;

/// Ratios closer than this are merged into a single breakpoint.
pub const BREAKPOINT_MERGE_TOL: f64 = 1e-12;

/// Everything the line search needs about `α` and `q = u − α`.
#[derive(Debug, Clone)]
pub struct LineSearchInput<'a> {
    /// `v_{h,0} = ⟨f_h, α⟩/(λn)`.
    pub v0: &'a [f64],
    /// `v_{h,q} = ⟨f_h, u − α⟩/(λn)`.
    pub vq: &'a [f64],
    /// `⟨1, α⟩`.
    pub sum_alpha: f64,
    /// `⟨1, u − α⟩`.
    pub sum_q: f64,
    pub mask: &'a SignMask,
    pub lambda: f64,
    pub n: usize,
}

impl LineSearchInput<'_> {
    pub fn validate(&self) -> Result<()> {
        let d = self.mask.d();
        if self.v0.len() != d || self.vq.len() != d {
            return Err(Error::DimensionMismatch {
                context: "line search input",
                expected: d,
                got: self.v0.len().min(self.vq.len()),
            });
        }
        if !self.v0.iter().chain(self.vq).all(|x| x.is_finite())
            || !self.sum_alpha.is_finite()
            || !self.sum_q.is_finite()
        {
            return Err(Error::LineSearch("non-finite input".into()));
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 || self.n == 0 {
            return Err(Error::InvalidConfig("line search needs λ > 0 and n ≥ 1".into()));
        }
        Ok(())
    }

    /// Root of the constrained coordinate `h` if it lies in `[0, 1]`.
    fn root(&self, h: usize) -> Option<f64> {
        let q = self.vq[h];
        if q == 0.0 {
            return None;
        }
        let r = -self.v0[h] / q;
        (0.0..=1.0).contains(&r).then_some(r)
    }
}

/// One quadratic piece `a η² + b η + c` on `[θ_k, θ_{k+1}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Piece {
    pub fn value(&self, eta: f64) -> f64 {
        (self.a * eta + self.b) * eta + self.c
    }

    pub fn slope(&self, eta: f64) -> f64 {
        2.0 * self.a * eta + self.b
    }
}

/// `ζ` as sorted endpoints `0 = θ_1 < … < θ_{d_t+1} = 1` and one piece per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseQuadratic {
    pub theta: Vec<f64>,
    pub pieces: Vec<Piece>,
}

impl PiecewiseQuadratic {
    /// Number of intervals `d_t`.
    pub fn intervals(&self) -> usize {
        self.pieces.len()
    }

    /// Index of the interval containing `eta` (left-closed, last interval closed).
    pub fn interval_of(&self, eta: f64) -> usize {
        let k = self.theta.partition_point(|&t| t <= eta);
        k.saturating_sub(1).min(self.pieces.len() - 1)
    }

    pub fn value(&self, eta: f64) -> f64 {
        self.pieces[self.interval_of(eta)].value(eta)
    }

    pub fn slope(&self, eta: f64) -> f64 {
        self.pieces[self.interval_of(eta)].slope(eta)
    }

    /// Largest mismatch in value and in slope across interior endpoints.
    pub fn continuity_residuals(&self) -> (f64, f64) {
        let mut value_res: f64 = 0.0;
        let mut slope_res: f64 = 0.0;
        for k in 0..self.pieces.len().saturating_sub(1) {
            let t = self.theta[k + 1];
            let (l, r) = (self.pieces[k], self.pieces[k + 1]);
            value_res = value_res.max((l.value(t) - r.value(t)).abs());
            slope_res = slope_res.max((l.slope(t) - r.slope(t)).abs());
        }
        (value_res, slope_res)
    }

    pub fn is_concave(&self) -> bool {
        self.pieces.iter().all(|p| p.a <= 0.0)
    }
}

/// Sorted, deduplicated endpoint set `{0, 1} ∪ {−v_{h,0}/v_{h,q} ∈ [0,1] : h constrained}`.
pub fn breakpoints(input: &LineSearchInput) -> Vec<f64> {
    let mut ratios: Vec<f64> = input
        .mask
        .pos_idx()
        .iter()
        .filter_map(|&h| input.root(h))
        .filter(|&r| r > BREAKPOINT_MERGE_TOL && r < 1.0 - BREAKPOINT_MERGE_TOL)
        .collect();
    ratios.sort_by(f64::total_cmp);
    let mut theta = Vec::with_capacity(ratios.len() + 2);
    theta.push(0.0);
    for r in ratios {
        if r - theta[theta.len() - 1] > BREAKPOINT_MERGE_TOL {
            theta.push(r);
        }
    }
    if 1.0 - theta[theta.len() - 1] <= BREAKPOINT_MERGE_TOL && theta.len() > 1 {
        theta.pop();
    }
    theta.push(1.0);
    theta
}

fn midpoint(theta: &[f64], k: usize) -> f64 {
    0.5 * (theta[k] + theta[k + 1])
}

fn survives(input: &LineSearchInput, h: usize, eta: f64) -> bool {
    input.v0[h] + eta * input.vq[h] > 0.0
}

/// Coordinates kept by the projection inside interval `k` (0-based):
/// every unconstrained coordinate, plus constrained ones positive at the midpoint.
pub fn active_set(input: &LineSearchInput, k: usize, theta: &[f64]) -> Vec<usize> {
    let mid = midpoint(theta, k);
    (0..input.mask.d())
        .filter(|&h| !input.mask.is_constrained(h) || survives(input, h, mid))
        .collect()
}

#[derive(Clone, Copy, Default)]
struct Sums {
    qq: f64,
    q0: f64,
    zz: f64,
}

impl Sums {
    fn add(&mut self, q: f64, z: f64) {
        self.qq += q * q;
        self.q0 += q * z;
        self.zz += z * z;
    }

    fn plus(self, o: Sums) -> Sums {
        Sums {
            qq: self.qq + o.qq,
            q0: self.q0 + o.q0,
            zz: self.zz + o.zz,
        }
    }
}

/// Builds the piecewise quadratic for `ζ(η) = D(α + ηq)`.
///
/// A constrained coordinate with `v_{h,q} > 0` is active on a suffix of the
/// intervals and one with `v_{h,q} < 0` on a prefix, so the first (or last)
/// active interval is found by bisection over midpoints and the per-interval
/// sums are assembled from bucketed contributions in `O(d log d)`. Only
/// non-negative terms are ever added to the squared sums, so every `a_k ≤ 0`.
pub fn build_quadratic(input: &LineSearchInput) -> Result<PiecewiseQuadratic> {
    input.validate()?;
    let theta = breakpoints(input);
    let m = theta.len() - 1;
    let mids: Vec<f64> = (0..m).map(|k| midpoint(&theta, k)).collect();

    let mut always = Sums::default();
    // contributions starting at interval k and running to the end
    let mut starts = vec![Sums::default(); m];
    // contributions running from the first interval up to interval k
    let mut ends = vec![Sums::default(); m];

    for h in 0..input.mask.d() {
        let (q, z) = (input.vq[h], input.v0[h]);
        if !input.mask.is_constrained(h) {
            always.add(q, z);
            continue;
        }
        if q > 0.0 {
            let first = mids.partition_point(|&e| !survives(input, h, e));
            if first < m {
                starts[first].add(q, z);
            }
        } else if q < 0.0 {
            let count = mids.partition_point(|&e| survives(input, h, e));
            if count > 0 {
                ends[count - 1].add(q, z);
            }
        } else if z > 0.0 {
            always.add(q, z);
        }
    }

    let mut suffix_end = vec![Sums::default(); m];
    let mut acc = Sums::default();
    for k in (0..m).rev() {
        acc = acc.plus(ends[k]);
        suffix_end[k] = acc;
    }

    let n = input.n as f64;
    let lambda = input.lambda;
    let mut pieces = Vec::with_capacity(m);
    let mut prefix_start = Sums::default();
    for k in 0..m {
        prefix_start = prefix_start.plus(starts[k]);
        let s = always.plus(prefix_start).plus(suffix_end[k]);
        pieces.push(Piece {
            a: -0.5 * lambda * s.qq,
            b: input.sum_q / n - lambda * s.q0,
            c: input.sum_alpha / n - 0.5 * lambda * s.zz,
        });
    }
    Ok(PiecewiseQuadratic { theta, pieces })
}

/// Maximizer of a concave piecewise quadratic over `[0, 1]`.
pub fn maximize(pq: &PiecewiseQuadratic) -> Result<f64> {
    if pq.pieces.is_empty() || pq.theta.len() != pq.pieces.len() + 1 {
        return Err(Error::LineSearch("malformed piecewise quadratic".into()));
    }
    if let Some(k) = pq
        .pieces
        .iter()
        .position(|p| p.a.is_nan() || p.a > 0.0 || !p.b.is_finite() || !p.c.is_finite())
    {
        return Err(Error::LineSearch(format!(
            "piece {k} is not concave or not finite (a = {})",
            pq.pieces[k].a
        )));
    }
    let first = pq.pieces[0];
    if first.b <= 0.0 {
        return Ok(0.0);
    }
    let last = pq.pieces[pq.pieces.len() - 1];
    if last.slope(1.0) >= 0.0 {
        return Ok(1.0);
    }
    // first interval whose right-end slope is non-positive
    let k = pq
        .pieces
        .iter()
        .enumerate()
        .position(|(k, p)| p.slope(pq.theta[k + 1]) <= 0.0)
        .ok_or_else(|| Error::LineSearch("no interval where the slope changes sign".into()))?;
    let p = pq.pieces[k];
    let (lo, hi) = (pq.theta[k], pq.theta[k + 1]);
    if p.slope(lo) < 0.0 {
        // the slope jumped across θ_k by rounding; the maximum sits on the endpoint
        return Ok(lo);
    }
    if p.a < 0.0 {
        Ok((-p.b / (2.0 * p.a)).clamp(lo, hi))
    } else {
        Ok(lo)
    }
}

/// Builds and maximizes `ζ`; returns `(η★, ζ(η★))`.
pub fn exact_line_search(input: &LineSearchInput) -> Result<(f64, f64)> {
    let pq = build_quadratic(input)?;
    let eta = maximize(&pq)?;
    Ok((eta, pq.value(eta)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input<'a>(v0: &'a [f64], vq: &'a [f64], mask: &'a SignMask) -> LineSearchInput<'a> {
        LineSearchInput {
            v0,
            vq,
            sum_alpha: 0.0,
            sum_q: 1.0,
            mask,
            lambda: 1.0,
            n: 1,
        }
    }

    #[test]
    fn no_crossings_gives_single_interval() {
        let mask = SignMask::new(2, &[0, 1], &[]).unwrap();
        let (v0, vq) = ([0.5, -0.2], [0.0, 0.0]);
        assert_eq!(breakpoints(&input(&v0, &vq, &mask)), vec![0.0, 1.0]);
    }

    #[test]
    fn single_ratio() {
        let mask = SignMask::new(1, &[0], &[]).unwrap();
        let (v0, vq) = ([-0.3], [1.0]);
        let inp = input(&v0, &vq, &mask);
        let theta = breakpoints(&inp);
        assert_eq!(theta.len(), 3);
        assert!((theta[1] - 0.3).abs() < 1e-15);
        assert!(active_set(&inp, 0, &theta).is_empty());
        assert_eq!(active_set(&inp, 1, &theta), vec![0]);
    }

    #[test]
    fn ratios_outside_unit_interval_are_dropped_and_ties_merged() {
        let mask = SignMask::new(4, &[0, 1, 2, 3], &[]).unwrap();
        let v0 = [-2.0, 0.5, -0.5, -0.5 - 1e-14];
        let vq = [1.0, 1.0, 1.0, 1.0];
        let theta = breakpoints(&input(&v0, &vq, &mask));
        assert_eq!(theta.len(), 3);
        // root at exactly 0 merges with the boundary
        let v0 = [0.0, 0.0, 0.0, 0.0];
        assert_eq!(breakpoints(&input(&v0, &vq, &mask)), vec![0.0, 1.0]);
    }

    #[test]
    fn unconstrained_active_set_is_everything() {
        let mask = SignMask::unconstrained(3);
        let (v0, vq) = ([-1.0, 0.0, 1.0], [1.0, -3.0, 0.5]);
        let inp = input(&v0, &vq, &mask);
        let theta = breakpoints(&inp);
        assert_eq!(theta, vec![0.0, 1.0]);
        assert_eq!(active_set(&inp, 0, &theta), vec![0, 1, 2]);
    }

    #[test]
    fn pure_quadratic_maximum() {
        let pq = PiecewiseQuadratic {
            theta: vec![0.0, 1.0],
            pieces: vec![Piece {
                a: -1.0,
                b: 1.0,
                c: 0.0,
            }],
        };
        assert_eq!(maximize(&pq).unwrap(), 0.5);
    }

    #[test]
    fn boundary_cases() {
        let down = PiecewiseQuadratic {
            theta: vec![0.0, 1.0],
            pieces: vec![Piece {
                a: -1.0,
                b: -0.2,
                c: 0.0,
            }],
        };
        assert_eq!(maximize(&down).unwrap(), 0.0);
        let up = PiecewiseQuadratic {
            theta: vec![0.0, 1.0],
            pieces: vec![Piece {
                a: -0.1,
                b: 1.0,
                c: 0.0,
            }],
        };
        assert_eq!(maximize(&up).unwrap(), 1.0);
    }

    #[test]
    fn flat_piece_returns_left_endpoint() {
        // slope 1 → 0 on [0, .5], flat on [.5, 1) then negative
        let pq = PiecewiseQuadratic {
            theta: vec![0.0, 0.5, 0.75, 1.0],
            pieces: vec![
                Piece {
                    a: -1.0,
                    b: 1.0,
                    c: 0.0,
                },
                Piece {
                    a: 0.0,
                    b: 0.0,
                    c: 0.25,
                },
                Piece {
                    a: -1.0,
                    b: 1.5,
                    c: -0.3125,
                },
            ],
        };
        assert_eq!(maximize(&pq).unwrap(), 0.5);
    }

    #[test]
    fn convex_piece_is_rejected() {
        let pq = PiecewiseQuadratic {
            theta: vec![0.0, 1.0],
            pieces: vec![Piece {
                a: 1.0,
                b: 1.0,
                c: 0.0,
            }],
        };
        assert!(matches!(maximize(&pq), Err(Error::LineSearch(_))));
    }

    #[test]
    fn kinked_example_is_continuous() {
        let mask = SignMask::new(2, &[0], &[]).unwrap();
        let (v0, vq) = ([-0.3, 0.2], [1.0, -0.5]);
        let inp = LineSearchInput {
            sum_alpha: 0.4,
            sum_q: 0.6,
            lambda: 0.5,
            n: 2,
            ..input(&v0, &vq, &mask)
        };
        let pq = build_quadratic(&inp).unwrap();
        assert_eq!(pq.intervals(), 2);
        assert!(pq.is_concave());
        let (vr, sr) = pq.continuity_residuals();
        assert!(vr < 1e-12 && sr < 1e-12);
        // direct evaluation
        for &eta in &[0.0, 0.1, 0.3, 0.6, 1.0] {
            let w0 = (v0[0] + eta * vq[0]).max(0.0);
            let w1 = v0[1] + eta * vq[1];
            let direct = -0.25 * (w0 * w0 + w1 * w1) + (0.4 + eta * 0.6) / 2.0;
            assert!((direct - pq.value(eta)).abs() < 1e-14);
        }
    }
}
