//! Arithmetic over F_p, grid functions, and the prime-length transform.

mod field;
mod fourier;
mod grid;
pub mod io;

pub use field::PrimeField;
pub use fourier::{
    affine_image, affine_reindex, convolve, convolve_counts, convolve_direct, convolve_spectral,
    dft, dft_complex, dft_with, idft, idft_real, idft_with, DftMethod, DIRECT_CONVOLVE_MAX,
    DIRECT_DFT_MAX,
};
pub use grid::{GridFn, IndicatorSet, Role, Spectrum};

/// Library-wide default absolute tolerance for float comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;
