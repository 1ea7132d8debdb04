//! Uniform entry point over both solvers.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fw::{fw_train, FwConfig};
use crate::linalg::Exec;
use crate::model::{Dataset, PrimalModel, SignMask};
use crate::pg::{pg_train, EvalSchedule, PgConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "lowercase")]
pub enum SolverSpec {
    Fw { epsilon: f64, max_iter: usize },
    Pg { max_iter: usize },
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec::Fw {
            epsilon: 1e-4,
            max_iter: 1000,
        }
    }
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Fw { .. } => "fw",
            SolverSpec::Pg { .. } => "pg",
        }
    }

    pub fn train(&self, data: &Dataset, mask: &SignMask, lambda: f64, exec: Exec) -> Result<PrimalModel> {
        match *self {
            SolverSpec::Fw { epsilon, max_iter } => {
                let mut cfg = FwConfig::new(lambda, epsilon, max_iter);
                cfg.exec = exec;
                // gap is evaluated every iteration but only the last row matters here
                cfg.trace_stride = max_iter;
                Ok(fw_train(data, mask, &cfg)?.model)
            }
            SolverSpec::Pg { max_iter } => {
                let mut cfg = PgConfig::new(lambda, max_iter);
                cfg.exec = exec;
                cfg.eval_schedule = EvalSchedule::At(vec![max_iter]);
                Ok(pg_train(data, mask, &cfg)?.model)
            }
        }
    }
}
