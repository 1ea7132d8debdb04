//! ROC/AUC scoring, stratified splits and k-fold cross-validation over λ.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{self, apply_sign_mask, RawDataset, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, Exec};
use crate::model::{Dataset, SignMask};
use crate::solver::SolverSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub lambda: f64,
    pub seed: u64,
}

/// Probability that a random positive outscores a random negative; ties count ½.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "auc",
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Eval("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y > 0.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Eval("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum of positives, with tied groups sharing their mean rank
    let mut rank2_pos: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mean_rank2 = (i + 1 + j + 1) as u64;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k] > 0.0).count() as u64;
        rank2_pos += mean_rank2 * pos_in_group;
        i = j + 1;
    }
    let np = n_pos as u64;
    let u2 = rank2_pos - np * (np + 1);
    Ok(u2 as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn class_indices(labels: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let pos = (0..labels.len()).filter(|&i| labels[i] > 0.0).collect();
    let neg = (0..labels.len()).filter(|&i| labels[i] <= 0.0).collect();
    (pos, neg)
}

/// Stratified random split; returns `(train, test)` index lists, each sorted.
pub fn train_test_split(labels: &[f64], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0 < train_fraction && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut neg) = class_indices(labels);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [&mut pos, &mut neg] {
        if class.len() < 2 {
            return Err(Error::Eval(
                "each class needs at least two examples to split".into(),
            ));
        }
        class.shuffle(&mut rng);
        let k = ((class.len() as f64 * train_fraction).round() as usize).clamp(1, class.len() - 1);
        train.extend_from_slice(&class[..k]);
        test.extend_from_slice(&class[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// `k` stratified folds; each fold's class counts differ from the ideal by < 1.
pub fn stratified_folds(labels: &[f64], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidConfig("cross-validation needs k ≥ 2".into()));
    }
    let (mut pos, mut neg) = class_indices(labels);
    if pos.len() < k || neg.len() < k {
        return Err(Error::Eval(format!(
            "a fold would lack a class: {} positives, {} negatives for {k} folds",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (j, &i) in pos.iter().chain(&neg).enumerate() {
        folds[j % k].push(i);
    }
    for f in folds.iter_mut() {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaScore {
    pub lambda: f64,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub fold_aucs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best_lambda: f64,
    pub scores: Vec<LambdaScore>,
}

/// Picks the λ with the best mean validation AUC (first one on ties).
pub fn cross_validate(
    data: &Dataset,
    mask: &SignMask,
    lambdas: &[f64],
    k: usize,
    solver: &SolverSpec,
    seed: u64,
    exec: Exec,
) -> Result<CvResult> {
    if lambdas.is_empty() {
        return Err(Error::InvalidConfig("no λ candidates".into()));
    }
    let folds = stratified_folds(data.labels(), k, seed)?;
    let jobs: Vec<(usize, usize)> = (0..lambdas.len())
        .flat_map(|l| (0..k).map(move |f| (l, f)))
        .collect();
    let results = linalg::map_indexed(jobs.len(), exec, |j| {
        let (l, f) = jobs[j];
        let valid = &folds[f];
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        let tr = data.subset(&train)?;
        let va = data.subset(valid)?;
        let model = solver.train(&tr, mask, lambdas[l], Exec::Sequential)?;
        auc(
            &va.scores(&model.internal_weights(), Exec::Sequential),
            va.labels(),
        )
    });
    let mut scores = Vec::with_capacity(lambdas.len());
    let mut it = results.into_iter();
    for &lambda in lambdas {
        let fold_aucs: Vec<f64> = it.by_ref().take(k).collect::<Result<_>>()?;
        let (mean_auc, std_auc) = mean_std(&fold_aucs);
        scores.push(LambdaScore {
            lambda,
            mean_auc,
            std_auc,
            fold_aucs,
        });
    }
    let best = scores
        .iter()
        .fold(&scores[0], |b, s| if s.mean_auc > b.mean_auc { s } else { b });
    Ok(CvResult {
        best_lambda: best.lambda,
        scores,
    })
}

/// Held-out evaluation protocol shared by the generic and pairwise experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutConfig {
    pub lambdas: Vec<f64>,
    pub folds: usize,
    pub solver: SolverSpec,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for HoldoutConfig {
    fn default() -> Self {
        HoldoutConfig {
            lambdas: vec![1e-2],
            folds: 5,
            solver: SolverSpec::default(),
            train_fraction: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub report: EvalReport,
    pub cv: CvResult,
}

fn report(scores: &[f64], labels: &[f64], lambda: f64, seed: u64) -> Result<EvalReport> {
    let n_pos = labels.iter().filter(|&&y| y > 0.0).count();
    Ok(EvalReport {
        auc: auc(scores, labels)?,
        n_pos,
        n_neg: labels.len() - n_pos,
        lambda,
        seed,
    })
}

/// Split, cross-validate λ on the training part, retrain, score the test part.
pub fn holdout_experiment(
    raw: &RawDataset,
    pos: &[usize],
    neg: &[usize],
    cfg: &HoldoutConfig,
    exec: Exec,
) -> Result<HoldoutReport> {
    let (train, test) = train_test_split(&raw.labels, cfg.train_fraction, cfg.seed)?;
    let (tr, mask) = apply_sign_mask(&raw.subset(&train), pos, neg)?;
    let cv = cross_validate(&tr, &mask, &cfg.lambdas, cfg.folds, &cfg.solver, cfg.seed, exec)?;
    let model = cfg.solver.train(&tr, &mask, cv.best_lambda, exec)?;
    let te = raw.subset(&test);
    let scores: Vec<f64> = (0..te.n()).map(|i| model.score(te.row(i))).collect();
    Ok(HoldoutReport {
        report: report(&scores, &te.labels, cv.best_lambda, cfg.seed)?,
        cv,
    })
}

/// SVM-pairwise protocol: features are similarities to the training sequences only.
pub fn pairwise_experiment(
    sim: &SimilarityMatrix,
    constrained: bool,
    cfg: &HoldoutConfig,
    exec: Exec,
) -> Result<HoldoutReport> {
    let (train, test) = train_test_split(&sim.labels, cfg.train_fraction, cfg.seed)?;
    let pw = data::build_pairwise_subset(sim, &train)?;
    let (tr, mask) = pw.dataset(constrained)?;
    let cv = cross_validate(&tr, &mask, &cfg.lambdas, cfg.folds, &cfg.solver, cfg.seed, exec)?;
    let model = cfg.solver.train(&tr, &mask, cv.best_lambda, exec)?;
    let te = data::pairwise_features(sim, &pw.order, &test);
    let scores: Vec<f64> = (0..te.n()).map(|i| model.score(te.row(i))).collect();
    Ok(HoldoutReport {
        report: report(&scores, &te.labels, cv.best_lambda, cfg.seed)?,
        cv,
    })
}

/// `λ = c/n` for every multiplier `c`.
pub fn lambda_grid_over_n(multipliers: &[f64], n: usize) -> Vec<f64> {
    multipliers.iter().map(|c| c / n as f64).collect()
}
