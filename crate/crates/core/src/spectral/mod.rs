//! Sparse operators, stoquasticity checks, eigensolvers and the null-space angle bound.

pub mod eigen;
pub mod geometric;
pub mod mtx;
pub mod operator;
pub mod stoq;

pub use eigen::{lowest_blockwise, solver_by_name, DenseSolver, EigenSolver, LanczosSolver, Method, SpectrumResult};
pub use geometric::{geometric_bound, GeometricBound};
pub use operator::{LocalBuilder, LocalOperator, ProductBasis, Restricted, SparseOperator, DEFAULT_ASSEMBLY_CAP};
pub use stoq::{check_stoquastic, check_stoquastic_local, StoqReport};
