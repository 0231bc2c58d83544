//! Post-hoc hierarchical ensembles over exported classifier scores.
//!
//! The crate never touches models. It consumes per-level score matrices and a
//! label taxonomy, and provides:
//!
//! * [`taxonomy`]: the label tree, LCA heights and the leaf cost matrix
//! * [`scorespace`]: score matrices, softmax and top-k ranking
//! * [`ensemble`]: fine × coarse reweighting, self-marginal and cascade variants
//! * [`riskmin`]: expected-cost reranking
//! * [`metrics`]: top-1 accuracy, mistake severity and hierarchical distance@k
//! * [`datio`]: file formats
//! * [`synthlab`]: seeded synthetic data

pub mod datio;
pub mod ensemble;
pub mod metrics;
pub mod riskmin;
pub mod scorespace;
pub mod synthlab;
pub mod taxonomy;

pub use ensemble::{CombinedScores, Level};
pub use metrics::{EvalReport, LabelVector};
pub use riskmin::{CostMatrix, RiskRanking};
pub use scorespace::{Ranking, ScoreKind, ScoreMatrix};
pub use taxonomy::{NodeId, Taxonomy};
