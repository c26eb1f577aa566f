//! Grids, symbols and boundary kernels, fibrewise Fourier transforms and the
//! symbol-level products.

pub mod calculus;
pub mod catalogue;
pub mod fourier;
pub mod grid;
pub mod kernel;
pub mod quadrature;
pub mod symbol;

pub use calculus::{
    convolve_symbols, convolve_symbols_hbar, leftover_l, leftover_l_hbar, star_prime,
    BoundaryElement, Calculus,
};
pub use catalogue::{parse_kernel, parse_symbol, STANDARD_KERNELS, STANDARD_SYMBOLS};
pub use fourier::{
    fiberwise_fourier, fourier_sup, symbol_sup_norm, CovariableGrid, FourierConvention,
    SampledSpectrum,
};
pub use grid::{make_grid, Axis, AxisKind, Coord, Domain, Grid};
pub use kernel::{BoundaryKernel, HalfLineGaussian};
pub use quadrature::Trapezoid;
pub use symbol::{BaseProfile, FiberProfile, Separable, Symbol, DECAY_THRESHOLD};
