//! Forward operators along lines, their adjoints, the linearized map and the
//! Fourier-slice identity.

mod backproject;
mod forward;
mod fourier;
mod linearized;
mod weight;

pub use backproject::{backprojection, backprojection_at};
pub use forward::{
    attenuated_line, attenuated_xray, beam_transform, combined_forward, foot, nonlinear_difference,
    transport_solution, weighted_line, weighted_xray, NonlinearDifference,
};
pub use fourier::{fourier_slice, FourierSlice};
pub use linearized::LinearizedOperator;
pub use weight::{Weight, WeightField, WeightFn, WeightTable};
