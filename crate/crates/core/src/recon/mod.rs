//! Discrete identification operators, least-squares reconstruction and
//! stability probes.

mod cgls;
mod operator;
mod probe;
mod qreduce;

pub use cgls::{cgls_solve, CglsOptions, ReconReport, DIVERGENCE_TOL};
pub use operator::{DiscreteOperator, LineWeights, OperatorOptions, Stencil, WeightPair};
pub use qreduce::{coherent_q_check, q_reduce, CoherentCheck, CoherentOptions};
pub use probe::{
    holder_probe, kernel_probe, kernel_probe_from, null_diagnostics, radial_correlation, radial_extent, radial_mode, radial_profiles, shell_wave, smooth_radial_mode, smooth_sample, stability_ratio, transfer, HolderOptions, HolderRow,
    HolderTable, KernelProbe, KernelProbeOptions, NullCandidate,
};
