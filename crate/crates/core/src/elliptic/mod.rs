//! Dirichlet solvers on level-set domains.

pub mod cg;
pub mod interface;
pub mod multigrid;
pub mod solve;
pub mod stencil;

pub use cg::{pcg, pcg_with, CgOutcome, Jacobi, LinearOperator, Preconditioner};
pub use multigrid::Multigrid;
pub use interface::{boundary_gradient_norms, crossings, gradient_norm, inward_derivative, surface_sum, Crossing};
pub use solve::{
    default_max_iter, divform_rhs, residual_check, solve_dirichlet, solve_divform, DirichletProblem, DivFormProblem, DivScheme, DEFAULT_TOL,
};
pub use stencil::{Leg, NodeClass, Stencil, THETA_MIN};
