use proptest::prelude::*;
use scsvm::linesearch::{self, PiecewiseQuadratic};
use scsvm::oracles;
use scsvm::synth;
use scsvm::verify::{random_line_search_case, LineSearchCase};

fn case(seed: u64) -> (LineSearchCase, Vec<f64>, Vec<f64>) {
    let c = random_line_search_case(&mut synth::rng(seed), 30, 20).unwrap();
    let (v0, vq) = c.vectors();
    (c, v0, vq)
}

fn quadratic(c: &LineSearchCase, v0: &[f64], vq: &[f64]) -> PiecewiseQuadratic {
    linesearch::build_quadratic(&c.input(v0, vq)).unwrap()
}

fn direct(c: &LineSearchCase, eta: f64) -> f64 {
    let moved: Vec<f64> = c.alpha.iter().zip(&c.q).map(|(a, q)| a + eta * q).collect();
    oracles::naive_dual(&moved, &c.instance.data, &c.instance.mask, c.lambda)
}

proptest! {
    #[test]
    fn coefficients_reproduce_the_dual(seed in any::<u64>(), eta in 0.0f64..=1.0) {
        let (c, v0, vq) = case(seed);
        let pq = quadratic(&c, &v0, &vq);
        prop_assert!((pq.value(eta) - direct(&c, eta)).abs() <= 1e-10);
    }

    #[test]
    fn pieces_are_concave_and_glue_smoothly(seed in any::<u64>()) {
        let (c, v0, vq) = case(seed);
        let pq = quadratic(&c, &v0, &vq);
        prop_assert!(pq.is_concave());
        let (value_res, slope_res) = pq.continuity_residuals();
        prop_assert!(value_res <= 1e-9 && slope_res <= 1e-9);
        prop_assert_eq!(pq.theta[0], 0.0);
        prop_assert_eq!(*pq.theta.last().unwrap(), 1.0);
        prop_assert!(pq.theta.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn step_beats_a_coarse_grid(seed in any::<u64>()) {
        let (c, v0, vq) = case(seed);
        let (eta, value) = linesearch::exact_line_search(&c.input(&v0, &vq)).unwrap();
        prop_assert!((0.0..=1.0).contains(&eta));
        prop_assert!((value - direct(&c, eta)).abs() <= 1e-10);
        let (_, grid) = oracles::grid_line_search(&c.alpha, &c.q, &c.instance.data, &c.instance.mask, c.lambda, 2001).unwrap();
        prop_assert!(value >= grid - 1e-10);
    }

    /// Every interior breakpoint is a sign change of some constrained `v₀ + ηv_q`.
    #[test]
    fn breakpoints_are_sign_changes(seed in any::<u64>()) {
        let (c, v0, vq) = case(seed);
        let theta = linesearch::breakpoints(&c.input(&v0, &vq));
        for &t in &theta[1..theta.len() - 1] {
            let hit = c.instance.mask.pos_idx().iter().any(|&h| {
                vq[h] != 0.0 && ((-v0[h] / vq[h]) - t).abs() <= 1e-12
            });
            prop_assert!(hit, "breakpoint {} matches no coordinate", t);
        }
    }

    #[test]
    fn active_sets_match_projection(seed in any::<u64>()) {
        let (c, v0, vq) = case(seed);
        let input = c.input(&v0, &vq);
        let theta = linesearch::breakpoints(&input);
        for k in 0..theta.len() - 1 {
            let mid = 0.5 * (theta[k] + theta[k + 1]);
            let set = linesearch::active_set(&input, k, &theta);
            for h in 0..v0.len() {
                let x = v0[h] + mid * vq[h];
                let kept = !c.instance.mask.is_constrained(h) || x > 0.0;
                prop_assert_eq!(set.contains(&h), kept);
            }
        }
    }
}

#[test]
fn duplicate_roots_merge_into_one_breakpoint() {
    use scsvm::linesearch::LineSearchInput;
    use scsvm::SignMask;
    let mask = SignMask::new(3, &[0, 1, 2], &[]).unwrap();
    let v0 = [-0.5, -1.0, 0.25];
    let vq = [1.0, 2.0, -1.0];
    let input = LineSearchInput {
        v0: &v0,
        vq: &vq,
        sum_alpha: 0.0,
        sum_q: 1.0,
        mask: &mask,
        lambda: 1.0,
        n: 1,
    };
    assert_eq!(linesearch::breakpoints(&input), vec![0.0, 0.25, 0.5, 1.0]);
}
