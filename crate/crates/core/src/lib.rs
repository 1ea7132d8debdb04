//! Linear SVMs with per-feature sign constraints.
//!
//! Training minimizes `λ/2‖w‖² + mean hinge loss` subject to `w_h ≥ 0` or
//! `w_h ≤ 0` on chosen features. Two solvers are provided: projected
//! subgradient descent on the primal ([`pg`]) and Frank-Wolfe with an exact
//! line search on the dual box ([`fw`]).
//!
//! Non-positive constraints are handled by negating those features when the
//! [`Dataset`] is built, so internally every constraint is `w_h ≥ 0`.
//! [`PrimalModel::w`] is always reported in the caller's original feature space.

pub mod data;
pub mod error;
pub mod eval;
pub mod fw;
pub mod linalg;
pub mod linesearch;
pub mod model;
pub mod oracles;
pub mod pg;
pub mod solver;
pub mod synth;
pub mod trace;
pub mod verify;

pub use data::{Format, LoadOptions, RawDataset, SimilarityMatrix};
pub use error::{Error, Result};
pub use fw::{fw_train, FwConfig, FwResult, FwStatus};
pub use linalg::Exec;
pub use model::{Dataset, DualState, ModelMeta, PrimalModel, SignMask};
pub use pg::{pg_train, EvalSchedule, PgConfig, PgResult};
pub use solver::SolverSpec;
pub use trace::TraceRecord;
