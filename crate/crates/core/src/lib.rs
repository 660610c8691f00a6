//! Sparse SPD solves by conjugate gradients, certified as they run.
//!
//! Every CG iteration feeds its step lengths into a Jacobi (Lanczos)
//! tridiagonal matrix. From that matrix the solver extracts the extremal
//! Ritz values, extrapolates a look-ahead underestimate of the smallest
//! eigenvalue of `A`, and evaluates Gauss, Gauss-Radau and Gauss-Lobatto
//! quadrature bounds on the A-norm error together with an l2 estimate.
//! The extra work per iteration is linear in the iteration count.
//!
//! Module map:
//!
//! * [`sparse`]: CSR storage, MatrixMarket reader/writer, products.
//! * [`cg`]: instrumented CG iteration and Jacobi-matrix assembly.
//! * [`tridiag`]: Sturm bisection, LDLᵀ solves and node prescription.
//! * [`extrapolate`]: smallest-eigenvalue look-ahead from the Ritz sequence.
//! * [`estimators`]: quadrature error bounds and stopping rules.
//! * [`solver`]: the end-to-end instrumented solve.
//! * [`oracle`]: dense reference computations for validation.

pub mod cg;
pub mod error;
pub mod estimators;
pub mod extrapolate;
pub mod oracle;
pub mod solver;
pub mod sparse;
pub mod tridiag;

pub use cg::CgState;
pub use error::{Error, Result};
pub use estimators::{Criterion, ErrorEstimate};
pub use extrapolate::{EigenTrace, Variant};
pub use oracle::DenseSym;
pub use solver::{solve, EigSource, IterationRecord, SolveConfig, SolveReport, StopReason};
pub use sparse::CsrMatrix;
pub use tridiag::SymTridiagonal;
