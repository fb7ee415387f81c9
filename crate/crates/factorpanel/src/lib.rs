//! Panel regression with unobserved, time-varying individual effects driven
//! by common factors.
//!
//! The model is
//!
//! ```text
//! y_it = sum_j x_itj beta_j + nu_it + eps_it,
//! nu_it = sum_l lambda_il f_lt,
//! ```
//!
//! where the `nu_it` are individual time paths spanned by a small number of
//! common factors `f_lt` with individual loadings `lambda_il`. Two estimators
//! are provided: one assuming the factors are smooth functions of time,
//! estimated with penalized splines and functional principal components
//! (Kneip, Sickles and Song, 2012), and one for arbitrary stationary factors
//! via iterated principal components (Bai, 2009). Supporting modules cover
//! factor extraction, factor-dimension selection criteria, inference under
//! eight error assumptions including heteroskedasticity- and
//! autocorrelation-robust variants with bias correction, and specification
//! tests.
//!
//! The numerical core is generic over the scalar type through the
//! [`num::Real`] trait; `f64` aliases for every public type are exported at
//! the crate root.

pub mod dims;
pub mod factors;
pub mod num;
pub mod panel;
pub mod spline;

pub use num::Real;

/// A `f64` panel variable.
pub type Panel = panel::PanelMatrix<f64>;
/// A `f64` model variable set.
pub type PanelGroup = panel::PanelSet<f64>;
/// A `f64` spline system.
pub type SplineBasis = spline::SplineSystem<f64>;
/// A `f64` factor structure.
pub type Factors = factors::FactorStructure<f64>;
/// A `f64` dimension-selection configuration.
pub type DimSetup = dims::DimConfig<f64>;
/// A `f64` dimension-selection report.
pub type DimSummary = dims::DimReport<f64>;
