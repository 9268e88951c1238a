//! Frequency-domain Granger connectivity (total PDC, total DTF and their
//! classical special cases) from any minimum-phase spectral factor.
//!
//! Factors come from three interchangeable routes:
//!
//! * VAR fitting by the Nuttall-Strand recursion with Hannan-Quinn order selection,
//! * VMA / VARMA fitting by the two-step long-autoregression method,
//! * Welch cross-spectra followed by Wilson's spectral factorization.
//!
//! ```
//! use tpdc_core::{catalog, connectivity, FrequencyGrid};
//!
//! let grid = FrequencyGrid::new(64).unwrap();
//! let factor = catalog::example4().canonical().transfer_function(&grid).unwrap();
//! let tpdc = connectivity::total_pdc(&factor).unwrap();
//! // x1 does not drive x2 in this model
//! assert!(tpdc.entry(1, 0).iter().all(|v| v.norm() < 1e-12));
//! ```

pub mod catalog;
pub mod connectivity;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod model;
pub mod poly;
pub mod simulate;
pub mod spectrum;
pub mod welch;
pub mod wilson;

pub use connectivity::{ConnectivityField, FieldKind, InnovationStructure};
pub use error::{Error, ErrorClass, Result};
pub use estimate::FitReport;
pub use model::{RootClass, RootReport, VarmaModel};
pub use simulate::{simulate, TimeSeriesPanel};
pub use spectrum::{FactorDiagnostics, FrequencyGrid, SpectralFactor, SpectralMatrix};
pub use welch::{welch_cross_spectrum, WelchConfig};
pub use wilson::{wilson_factorize, WilsonConfig};
