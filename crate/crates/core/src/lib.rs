pub mod blowup;
pub mod calculus;
pub mod cli;
pub mod cone;
pub mod domain;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod optimizer;
pub mod quadrature;
mod reduce;

pub use domain::DomainRep;
pub use error::{Error, Result};
pub use field::{ScalarField, VectorField};
pub use grid::{Grid, Point};
pub use quadrature::{ball_integral, sampled_ball_integral, BallMode, BallRegion};
