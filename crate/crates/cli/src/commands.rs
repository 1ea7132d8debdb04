use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use scsvm::data::{self, Format, LoadOptions};
use scsvm::eval::{self, HoldoutConfig, HoldoutReport};
use scsvm::trace::{self, TraceRecord};
use scsvm::verify::{self, VerifyConfig};
use scsvm::{fw_train, pg_train, EvalSchedule, Exec, FwConfig, PgConfig, RawDataset, SolverSpec};
use serde::Serialize;

use crate::model_file::{fingerprint, ModelFile};
use crate::{
    DataArgs, EvalArgs, PairwiseArgs, PairwiseMode, PredictArgs, SolverArg, TrainArgs, VerifyArgs,
    EXIT_NOT_CERTIFIED, EXIT_VERIFY_FAILED,
};

fn load_raw(a: &DataArgs, d: Option<usize>) -> Result<RawDataset> {
    let format = a.format.resolve(&a.data);
    if let (Some(flag), Some(expected)) = (a.dim, d) {
        if flag != expected {
            bail!("--dim {flag} does not match the model's {expected} features");
        }
    }
    let opts = LoadOptions {
        d: a.dim.or(d),
        zero_one_labels: a.zero_one_labels,
    };
    Ok(data::load_dataset(&a.data, format, opts)?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Trace rows on the schedule, plus the first and the last row.
fn select_rows(trace: Vec<TraceRecord>, schedule: &EvalSchedule, max_iter: usize) -> Vec<TraceRecord> {
    let keep = schedule.iterations(max_iter);
    let last = trace.last().map(|r| r.iter);
    trace
        .into_iter()
        .filter(|r| r.iter == 0 || Some(r.iter) == last || keep.binary_search(&r.iter).is_ok())
        .collect()
}

pub fn train(a: &TrainArgs) -> Result<ExitCode> {
    let loaded = load_raw(&a.data, None)?;
    let fp = fingerprint(&loaded);
    let raw = if a.normalize {
        data::normalize_unit(&loaded)?
    } else {
        loaded
    };
    let (pos, neg) = match &a.signs {
        Some(p) => data::load_sign_mask(p, Some(raw.d))?,
        None => (Vec::new(), Vec::new()),
    };
    let (ds, mask) = data::apply_sign_mask(&raw, &pos, &neg)?;
    let lambda = a.lambda.resolve(ds.n())?;
    info!(
        "n = {}, d = {}, λ = {lambda:e}, R = {:.6}",
        ds.n(),
        ds.d(),
        ds.radius()
    );

    let (model, trace_rows, certified, summary) = match a.solver {
        SolverArg::Fw => {
            let cfg = FwConfig::new(lambda, a.epsilon, a.max_iter);
            let res = fw_train(&ds, &mask, &cfg)?;
            let schedule = a.eval_schedule.clone().unwrap_or(EvalSchedule::All);
            let rows = select_rows(res.trace, &schedule, a.max_iter);
            let summary = format!(
                "fw: {} iterations, primal {:e}, dual {:e}, gap {:e}, {:?}",
                res.iterations, res.primal, res.dual, res.gap, res.status
            );
            let certified = res.status != scsvm::FwStatus::NotCertified;
            (res.model, rows, Some(certified), summary)
        }
        SolverArg::Pg => {
            let mut cfg = PgConfig::new(lambda, a.max_iter);
            cfg.eval_schedule = a.eval_schedule.clone().unwrap_or_default();
            cfg.seed = a.seed;
            let res = pg_train(&ds, &mask, &cfg)?;
            let summary = format!(
                "pg: {} iterations, best primal {:e} at iterate {}",
                a.max_iter, res.best_primal, res.best_iter
            );
            (res.model, res.trace, None, summary)
        }
    };

    ModelFile::new(&model, certified, a.normalize, fp).save(&a.model)?;
    if let Some(path) = &a.trace {
        write(path, &trace::to_csv(&trace_rows))?;
    }
    println!("{summary}");
    if certified == Some(false) {
        eprintln!(
            "warning: duality gap did not reach ε = {:e} within {} iterations",
            a.epsilon, a.max_iter
        );
        return Ok(ExitCode::from(EXIT_NOT_CERTIFIED));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn predict(a: &PredictArgs) -> Result<ExitCode> {
    let file = ModelFile::load(&a.model)?;
    let model = file.to_model()?;
    let sparse = a.data.format.resolve(&a.data.data) == Format::Sparse;
    let loaded = load_raw(&a.data, sparse.then_some(file.d()))?;
    if loaded.d != file.d() {
        bail!(
            "dimension mismatch: model {} has {} features, data {} has {}",
            a.model.display(),
            file.d(),
            a.data.data.display(),
            loaded.d
        );
    }
    if fingerprint(&loaded) != file.dataset_fingerprint {
        warn!(
            "{} differs from the training data of {}",
            a.data.data.display(),
            a.model.display()
        );
    }
    let raw = if file.normalize {
        data::normalize_unit(&loaded)?
    } else {
        loaded
    };
    let scores: Vec<f64> = (0..raw.n()).map(|i| model.score(raw.row(i))).collect();
    let mut out = String::with_capacity(scores.len() * 24);
    for s in &scores {
        let _ = writeln!(out, "{s}");
    }
    if a.auc {
        let _ = writeln!(out, "# auc={}", eval::auc(&scores, &raw.labels)?);
    }
    match &a.out {
        Some(p) => write(p, &out)?,
        None => print!("{out}"),
    }
    Ok(ExitCode::SUCCESS)
}

pub fn pairwise(a: &PairwiseArgs) -> Result<ExitCode> {
    let sim = data::load_similarity(&a.similarity, &a.labels, a.zero_one_labels)?;
    let pw = data::build_pairwise(&sim)?;
    let raw = if a.normalize {
        data::normalize_unit(&pw.raw)?
    } else {
        pw.raw.clone()
    };
    data::write_dataset(&raw, &a.out_data, a.format.resolve(&a.out_data))?;
    write(&a.out_signs, &data::format_sign_mask(&pw.pos(), &pw.neg()))?;
    let ids = pw.order.iter().fold(String::new(), |mut s, i| {
        let _ = writeln!(s, "{i}");
        s
    });
    write(&a.out_ids, &ids)?;
    println!(
        "{} sequences, {} positive, {} negative",
        sim.n,
        pw.n_pos,
        sim.n - pw.n_pos
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Series {
    label: &'static str,
    mean_auc: f64,
    std_auc: f64,
    runs: Vec<HoldoutReport>,
}

#[derive(Serialize)]
struct EvalOutput {
    protocol: &'static str,
    series: Vec<Series>,
}

fn series(label: &'static str, runs: Vec<HoldoutReport>) -> Series {
    let aucs: Vec<f64> = runs.iter().map(|r| r.report.auc).collect();
    let (mean_auc, std_auc) = eval::mean_std(&aucs);
    Series {
        label,
        mean_auc,
        std_auc,
        runs,
    }
}

fn holdout_config(a: &EvalArgs, labels: &[f64], seed: u64) -> Result<HoldoutConfig> {
    let lambdas = if a.lambda.is_empty() {
        let (train, _) = eval::train_test_split(labels, a.train_fraction, seed)?;
        eval::lambda_grid_over_n(&a.lambda_over_n, train.len())
    } else {
        a.lambda.clone()
    };
    let solver = match a.solver {
        SolverArg::Fw => SolverSpec::Fw {
            epsilon: a.epsilon,
            max_iter: a.max_iter,
        },
        SolverArg::Pg => SolverSpec::Pg { max_iter: a.max_iter },
    };
    Ok(HoldoutConfig {
        lambdas,
        folds: a.folds,
        solver,
        train_fraction: a.train_fraction,
        seed,
    })
}

pub fn eval(a: &EvalArgs) -> Result<ExitCode> {
    if a.repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let seeds = a.seed..a.seed + a.repeats;
    let output = if let (Some(sim_path), Some(labels_path)) = (&a.similarity, &a.labels) {
        let sim = data::load_similarity(sim_path, labels_path, a.zero_one_labels)?;
        let modes: &[(bool, &'static str)] = match a.mode {
            PairwiseMode::Constrained => &[(true, "constrained")],
            PairwiseMode::Unconstrained => &[(false, "unconstrained")],
            PairwiseMode::Both => &[(true, "constrained"), (false, "unconstrained")],
        };
        let mut out = Vec::new();
        for &(constrained, label) in modes {
            let runs = seeds
                .clone()
                .map(|s| {
                    Ok(eval::pairwise_experiment(
                        &sim,
                        constrained,
                        &holdout_config(a, &sim.labels, s)?,
                        Exec::default(),
                    )?)
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(series(label, runs));
        }
        EvalOutput {
            protocol: "pairwise",
            series: out,
        }
    } else {
        let Some(path) = &a.data else {
            bail!("eval needs --data or --similarity with --labels");
        };
        let data_args = DataArgs {
            data: path.clone(),
            format: a.format,
            dim: a.dim,
            zero_one_labels: a.zero_one_labels,
        };
        let loaded = load_raw(&data_args, None)?;
        let raw = if a.normalize {
            data::normalize_unit(&loaded)?
        } else {
            loaded
        };
        let (pos, neg) = match &a.signs {
            Some(p) => data::load_sign_mask(p, Some(raw.d))?,
            None => (Vec::new(), Vec::new()),
        };
        let runs = seeds
            .map(|s| {
                Ok(eval::holdout_experiment(
                    &raw,
                    &pos,
                    &neg,
                    &holdout_config(a, &raw.labels, s)?,
                    Exec::default(),
                )?)
            })
            .collect::<Result<Vec<_>>>()?;
        let label = if a.signs.is_some() {
            "constrained"
        } else {
            "unconstrained"
        };
        EvalOutput {
            protocol: "generic",
            series: vec![series(label, runs)],
        }
    };
    let mut text = serde_json::to_string_pretty(&output)?;
    text.push('\n');
    match &a.out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

pub fn verify(a: &VerifyArgs) -> Result<ExitCode> {
    let defaults = VerifyConfig::default();
    let cfg = VerifyConfig {
        seed: a.seed,
        instances: a.instances,
        checks: if a.checks.is_empty() {
            defaults.checks.clone()
        } else {
            a.checks.clone()
        },
        lambda: a.lambda,
        epsilon: a.epsilon,
        oracle: defaults.oracle,
    };
    let reports = verify::run(&cfg)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        for r in &reports {
            println!("{r}");
        }
    }
    if reports.iter().all(|r| r.passed) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_VERIFY_FAILED))
    }
}
