//! Wideband spectrum estimation without known band boundaries.

pub mod cs;
pub mod wavelet;

pub use cs::{cs_measure, cs_occupancy, dft_basis, measurement_matrix, omp_recover, recovery_rate, CsProblem, MeasurementKind, OmpResult};
pub use wavelet::{cwt, estimate_bands, threshold_edges, wmm, wmm_edges, wmp, wmp_edges, wms, Multiscale, WaveletConfig};
