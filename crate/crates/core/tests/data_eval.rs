use std::path::Path;

use proptest::prelude::*;
use scsvm::data::{self, Format, LoadOptions};
use scsvm::eval::{self, HoldoutConfig};
use scsvm::synth::{self, InstanceSpec};
use scsvm::{Error, Exec, RawDataset, SignMask, SolverSpec};

fn quadratic_auc(scores: &[f64], labels: &[f64]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] > 0.0 && labels[j] < 0.0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..60).prop_flat_map(|n| {
        (
            proptest::collection::vec((0i32..8).prop_map(|k| k as f64 * 0.5), n),
            proptest::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(s, b)| {
                let mut y: Vec<f64> = b.into_iter().map(|p| if p { 1.0 } else { -1.0 }).collect();
                y[0] = 1.0;
                y[1] = -1.0;
                (s, y)
            })
    })
}

proptest! {
    #[test]
    fn auc_matches_pair_counting((scores, labels) in scored_labels()) {
        let fast = eval::auc(&scores, &labels).unwrap();
        prop_assert!((fast - quadratic_auc(&scores, &labels)).abs() <= 1e-12);
    }

    #[test]
    fn auc_ignores_monotone_transforms((scores, labels) in scored_labels()) {
        let moved: Vec<f64> = scores.iter().map(|s| (3.0 * s - 1.0).exp()).collect();
        prop_assert_eq!(eval::auc(&scores, &labels).unwrap(), eval::auc(&moved, &labels).unwrap());
    }

    #[test]
    fn sparse_and_dense_round_trip(seed in any::<u64>(), n in 2usize..20, d in 1usize..10) {
        let inst = synth::random_instance(&mut synth::rng(seed), &InstanceSpec::new(n, d)).unwrap();
        for format in [Format::Sparse, Format::DenseCsv] {
            let text = data::format_dataset(&inst.raw, format);
            let opts = LoadOptions { d: Some(d), ..Default::default() };
            let back = match format {
                Format::Sparse => data::parse_sparse(&text, Path::new("mem"), opts),
                Format::DenseCsv => data::parse_dense(&text, Path::new("mem"), opts),
            }
            .unwrap();
            prop_assert_eq!(&back, &inst.raw);
        }
    }

    #[test]
    fn stratified_folds_partition(n_pos in 5usize..30, n_neg in 5usize..30, k in 2usize..5, seed in any::<u64>()) {
        let mut labels = vec![1.0; n_pos];
        labels.extend(vec![-1.0; n_neg]);
        let folds = eval::stratified_folds(&labels, k, seed).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n_pos + n_neg).collect::<Vec<_>>());
        for f in &folds {
            let p = f.iter().filter(|&&i| labels[i] > 0.0).count() as f64;
            prop_assert!((p - n_pos as f64 / k as f64).abs() < 1.0);
        }
    }
}

#[test]
fn cross_validation_edge_cases() {
    let inst = synth::random_instance(&mut synth::rng(9), &InstanceSpec::new(40, 5)).unwrap();
    let solver = SolverSpec::Fw {
        epsilon: 1e-4,
        max_iter: 200,
    };
    let one = eval::cross_validate(&inst.data, &inst.mask, &[0.1], 4, &solver, 1, Exec::Sequential).unwrap();
    assert_eq!(one.best_lambda, 0.1);
    assert_eq!(one.scores[0].fold_aucs.len(), 4);
    let dup = eval::cross_validate(
        &inst.data,
        &inst.mask,
        &[0.1, 0.1],
        4,
        &solver,
        1,
        Exec::Sequential,
    )
    .unwrap();
    assert_eq!(dup.scores[0], dup.scores[1]);
    assert_eq!(dup.scores[0], one.scores[0]);
    let par =
        eval::cross_validate(&inst.data, &inst.mask, &[0.1, 0.1], 4, &solver, 1, Exec::Parallel).unwrap();
    assert_eq!(par, dup);
    assert!(eval::cross_validate(&inst.data, &inst.mask, &[], 4, &solver, 1, Exec::Sequential).is_err());
}

#[test]
fn holdout_on_generic_data() {
    let inst = synth::random_instance(
        &mut synth::rng(21),
        &InstanceSpec {
            flip: 0.0,
            constrained_fraction: 0.0,
            ..InstanceSpec::new(120, 4)
        },
    )
    .unwrap();
    let cfg = HoldoutConfig {
        lambdas: vec![1e-3, 1e-2, 1e-1],
        folds: 3,
        ..Default::default()
    };
    let rep = eval::holdout_experiment(&inst.raw, &[], &[], &cfg, Exec::default()).unwrap();
    assert!(rep.report.auc > 0.9, "{}", rep.report.auc);
    assert!((58..=62).contains(&(rep.report.n_pos + rep.report.n_neg)));
    assert!(cfg.lambdas.contains(&rep.cv.best_lambda));
}

#[test]
fn pairwise_pipeline_end_to_end() {
    let sim = synth::two_blob_similarity(60, 3, 3.0, 4).unwrap();
    let pw = data::build_pairwise(&sim).unwrap();
    assert_eq!(pw.raw.d, 60);
    assert!(pw.order[..pw.n_pos].iter().all(|&i| sim.labels[i] > 0.0));
    assert_eq!(pw.to_original_order(&pw.order), (0..60).collect::<Vec<_>>());
    let (data, mask) = pw.dataset(true).unwrap();
    let model = SolverSpec::default()
        .train(&data, &mask, 1e-2, Exec::default())
        .unwrap();
    assert!(model.is_sign_feasible());
    assert!(model.w[..pw.n_pos].iter().all(|&w| w >= 0.0));
    assert!(model.w[pw.n_pos..].iter().all(|&w| w <= 0.0));
    for constrained in [true, false] {
        let rep =
            eval::pairwise_experiment(&sim, constrained, &HoldoutConfig::default(), Exec::default()).unwrap();
        assert!(
            rep.report.auc > 0.8,
            "constrained={constrained}: {}",
            rep.report.auc
        );
    }
}

#[test]
fn toy_pairwise_mask() {
    let values = vec![
        1.0, 0.8, 0.1, 0.2, //
        0.8, 1.0, 0.3, 0.1, //
        0.1, 0.3, 1.0, 0.7, //
        0.2, 0.1, 0.7, 1.0,
    ];
    let sim = data::SimilarityMatrix::new(4, values, vec![-1.0, 1.0, 1.0, -1.0]).unwrap();
    let pw = data::build_pairwise(&sim).unwrap();
    assert_eq!(pw.order, vec![1, 2, 0, 3]);
    assert_eq!(
        data::format_sign_mask(&pw.pos(), &pw.neg()),
        "0 +\n1 +\n2 -\n3 -\n"
    );
    assert_eq!(pw.raw.row(0), &[1.0, 0.3, 0.8, 0.1]);
}

#[test]
fn load_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.svm");
    let err = data::load_dataset(&missing, Format::Sparse, LoadOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("nope.svm"));
    let bad = dir.path().join("bad.svm");
    std::fs::write(&bad, "+1 1:0.5\n+1 2:x\n").unwrap();
    let err = data::load_dataset(&bad, Format::Sparse, LoadOptions::default()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("bad.svm:2"), "{msg}");
    let mask = dir.path().join("mask.txt");
    std::fs::write(&mask, "0 +\n0 -\n").unwrap();
    assert!(data::load_sign_mask(&mask, Some(3)).is_err());
    assert!(SignMask::new(3, &[0], &[0]).is_err());
}

#[test]
fn normalization_rejects_zero_rows() {
    let raw = RawDataset::new(2, vec![1.0, -1.0], vec![3.0, 4.0, 0.0, 0.0]).unwrap();
    let err = data::normalize_unit(&raw).unwrap_err();
    assert!(err.to_string().contains('1'));
    let ok = RawDataset::new(2, vec![1.0], vec![3.0, 4.0]).unwrap();
    assert_eq!(data::normalize_unit(&ok).unwrap().features, vec![0.6, 0.8]);
}
