//! Shape derivatives of the two-state energy under flows `Φ_t` of a field ξ.

pub mod data;
pub mod energy;
pub mod flow;
pub mod variation;
pub mod vfield;

pub use data::{eye, ProblemData, ScalarData};
pub use energy::{energy_ef, energy_f, energy_g, Energy, Region, StateSystem};
pub use flow::{advect_domain, FlowMap};
pub use variation::{
    delta_a, delta_f, first_variation, linearized_state, one_phase_variations, second_variation,
    FirstVariation, Order, SecondOrderForm, TaylorMode, TaylorRow, VariationOptions, VariationReport,
};
pub use vfield::{Bump, FdField, FieldSum, Jet, Scaled, VectorFieldSpec, ZeroField};
