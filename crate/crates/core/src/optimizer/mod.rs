//! Numerical kernels: linear programming, simplex-constrained minimization,
//! convex scalarization and derivative-free search.

pub mod cutting;
pub mod lp;
pub mod search;
pub mod simplex;

pub use cutting::{
    lagrange_dual_scalarization, ConvexOracle, OracleValue, ScalarizationOptions, ScalarizationReport,
    ScalarizationStatus,
};
pub use lp::{solve_lp, FarkasCertificate, LinearProgram, LpSolution, LpStatus, RowKind, Sense};
pub use search::nelder_mead;
pub use simplex::{minimize_over_simplex, project_capped, SimplexOptions, SimplexReport, SimplexStatus};
