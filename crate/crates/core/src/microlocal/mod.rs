//! Weight determinants and symbols, characteristic directions, zero
//! bicharacteristics, trapping, and checks of the pseudodifferential structure
//! of `I'_b I_a`.

mod characteristic;
mod psdo;
mod rays;
mod symbol;

pub use characteristic::{
    characteristic_directions, rpt_check, CharacteristicPoint, Characteristics, RptReport, RptViolation,
    DEFAULT_SCAN, DEGENERATE_TOL,
};
pub use psdo::{
    coherent_symbol_check, kernel_integral, symbol_amplitude, verify_psdo_kernel, CoherentPart, KernelCheck,
    KernelQuadrature, SymbolCheck,
};
pub use rays::{
    trace_bicharacteristic, trapping_check, Bicharacteristic, RayState, Termination, TraceOptions, TrapOptions,
    TrapParameters, TrapReport, TrapWitness, Verdict,
};
pub use symbol::{
    covector_for, direction_of, normal_symbol, radial_example_weights, w0_value, weight_determinant,
    weight_pair_from_af, IdentificationSymbol, LinearSymbol, NormalSymbol, Symbol, TabulatedSymbol,
    WeightDeterminant, FD_STEP,
};
