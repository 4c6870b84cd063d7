//! Grids, fast transforms and spectral operators shared by all solvers.

pub mod cartesian;
pub mod cheb;
pub mod fieldio;
pub mod fourier;
pub mod polar;

pub use cartesian::{wiener_norm_estimate, CartesianField, CartesianGrid, Fourier2, WienerEstimate};
pub use cheb::{cheb_diff_matrix, cheb_nodes, mult_by_shifted_l_matrix, ChebTransform};
pub use fieldio::ComplexField2D;
pub use fourier::fourier_diff;
pub use polar::{DbarSolver, PolarField, PolarGrid, PolarSpectral, SpectralCoeffs};
