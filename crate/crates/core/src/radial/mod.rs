//! Radial functions: the Abel pair, null pairs of the linearized map at zero
//! attenuation, and equivalent sources.

mod abel;
mod construct;

pub use abel::{abel_forward, abel_inverse, radial_relative_error, write_radial_csv, AbelOptions, AbelProfile};
pub use construct::{
    equivalent_source, null_pair, transport_weighted_line, ProfileOptions, RadialInversion, MOLLIFY_WIDTH,
};
