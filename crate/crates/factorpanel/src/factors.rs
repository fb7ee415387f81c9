//! Principal-component machinery for the unobserved factor structure.
//!
//! A residual panel W (T×n) is decomposed through the eigenvalue problem of
//! its empirical covariance. The module exposes three layers:
//!
//! * [`covariance_eigen`] — the plain symmetric eigendecomposition of the
//!   residual covariance, optionally on the correlation scale;
//! * [`spectral_decompose`] — the full decomposition bookkeeping shared by
//!   the estimators and the dimension criteria: time- and unit-side bases,
//!   raw eigenvalues and their tail sums, and the rank-d reconstruction,
//!   with the dual (unit-side) eigenproblem used automatically when it is
//!   the smaller one;
//! * [`extract_factors`] / [`pca_fit`] / [`fpca_fit`] — restricted
//!   factor/loading pairs under either normalization, the last of them on a
//!   spline-smoothed panel (functional principal components).
//!
//! Normalizations follow the two standard conventions: `restrict_factors`
//! scales factors to (1/T)·FᵀF = I with diagonal ΛᵀΛ, `restrict_loadings`
//! scales loadings to (1/n)·ΛᵀΛ = I with diagonal FᵀF. Both span the same
//! fitted structure FΛᵀ.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::num::{cast, Real};
use crate::spline::{kappa_from_unit_grid, kappa_to_unit_grid, SplineError, SplineSystem};

/// Errors from factor extraction.
#[derive(Debug, Error)]
pub enum FactorError {
    /// Input contains NaN or infinity.
    #[error("input matrix contains non-finite entries")]
    NonFinite,
    /// Requested more factors than the panel can support.
    #[error("factor dimension {d} exceeds min(T, n) = {max}")]
    DimensionTooLarge { d: usize, max: usize },
    /// Variance shares need at least one factor.
    #[error("factor structure is empty (d = 0)")]
    EmptyStructure,
    /// Smoothing failure inside functional PCA.
    #[error(transparent)]
    Spline(#[from] SplineError),
}

/// Normalization convention for a factor/loading pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Restriction {
    /// (1/T)·FᵀF = I; loadings carry the scale (ΛᵀΛ diagonal).
    Factors,
    /// (1/n)·ΛᵀΛ = I; factors carry the scale (FᵀF diagonal).
    Loadings,
}

impl Restriction {
    /// Parse the conventional names.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "restrict.factors" | "factors" => Some(Restriction::Factors),
            "restrict.loadings" | "loadings" => Some(Restriction::Loadings),
            _ => None,
        }
    }
}

/// Covariance normalization used when reporting eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceScaling {
    /// Σ̂ = (1/n)·W Wᵀ.
    Kss,
    /// Σ̂ = (1/(nT))·W Wᵀ.
    Eup,
}

/// Extracted factors and loadings under a normalization restriction.
#[derive(Debug, Clone)]
pub struct FactorStructure<T: Real> {
    /// T×d factor paths.
    pub factors: DMatrix<T>,
    /// n×d individual loadings.
    pub loadings: DMatrix<T>,
    /// Descending eigenvalues of the scaled covariance, length min(T, n).
    pub eigenvalues: Vec<T>,
    /// Number of factors retained.
    pub d: usize,
    /// Active normalization.
    pub restriction: Restriction,
}

impl<T: Real> FactorStructure<T> {
    /// The fitted common component FΛᵀ (T×n).
    pub fn common_component(&self) -> DMatrix<T> {
        &self.factors * self.loadings.transpose()
    }
}

/// Result of [`covariance_eigen`].
#[derive(Debug, Clone)]
pub struct CovarianceEigen<T: Real> {
    /// Eigenvalues, descending, clipped to zero below 1e-12·λ₁.
    pub values: Vec<T>,
    /// Matching eigenvectors as columns.
    pub vectors: DMatrix<T>,
}

/// Full decomposition bookkeeping for a T×n panel.
///
/// The eigenproblem is solved on the smaller of W Wᵀ (time side) and Wᵀ W
/// (unit side); either way `time_basis` holds orthonormal time-side columns
/// and `unit_basis` unit-norm unit-side columns, in the panel's original
/// orientation.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Real> {
    /// T×max_rank orthonormal basis on the time side.
    pub time_basis: DMatrix<T>,
    /// n×max_rank unit-norm basis on the unit side.
    pub unit_basis: DMatrix<T>,
    /// Raw eigenvalues of the (unscaled) covariance, descending, length
    /// max_rank. May include trailing negatives when `neglect_negative` was
    /// off.
    pub eigenvalues: Vec<T>,
    /// Tail sums: tail_sums[d] = Σ_{r>d} eigenvalues over the first
    /// max_rank, so tail_sums[0] is the total. Length max_rank.
    pub tail_sums: Vec<T>,
    /// Square roots of the eigenvalues (zero where clipped), length
    /// max_rank.
    pub singular_values: Vec<T>,
    /// Rank-`given_d` reconstruction of the input, T×n.
    pub fitted: DMatrix<T>,
    /// Whether the dual (unit-side) eigenproblem was solved.
    pub dual: bool,
    /// Retained dimension (requested d clamped to max_rank).
    pub given_d: usize,
    /// Number of usable eigen-directions.
    pub max_rank: usize,
    /// Count of strictly positive eigenvalues (raw, unclipped).
    pub n_positive: usize,
    /// Original panel dimensions (T, n).
    pub dims: (usize, usize),
}

/// Eigendecomposition of the empirical residual covariance (1/n)·W Wᵀ,
/// optionally after standardizing each row of W to zero mean and unit
/// variance across units (correlation scale).
pub fn covariance_eigen<T: Real>(
    w: &DMatrix<T>,
    standardize: bool,
) -> Result<CovarianceEigen<T>, FactorError> {
    check_finite(w)?;
    let data = if standardize {
        standardize_rows(w)
    } else {
        w.clone()
    };
    let t = data.nrows();
    let n = cast::<T>(data.ncols() as f64);
    let cov = &data * data.transpose() / n;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let top = eig.eigenvalues[order[0]];
    let floor = top * cast::<T>(1e-12);
    let mut values = Vec::with_capacity(t);
    let mut vectors = DMatrix::<T>::zeros(t, t);
    for (k, &i) in order.iter().enumerate() {
        let v = eig.eigenvalues[i];
        values.push(if v.abs() < floor { T::zero() } else { v });
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(CovarianceEigen { values, vectors })
}

/// Decompose a panel through the smaller-side eigenproblem.
///
/// `given_d` defaults to the full usable rank. With `neglect_negative` the
/// usable rank is the count of strictly positive eigenvalues and the
/// reconstruction always projects onto the retained directions; without it
/// all eigenvalues are kept (negatives appear as zeros in
/// `singular_values`) and a full-rank request returns the input itself as
/// `fitted`. `allow_dual` permits solving the unit-side problem when the
/// panel is tall (T > n).
pub fn spectral_decompose<T: Real>(
    w: &DMatrix<T>,
    given_d: Option<usize>,
    neglect_negative: bool,
    allow_dual: bool,
) -> Result<SpectralDecomposition<T>, FactorError> {
    check_finite(w)?;
    let (nr, nc) = (w.nrows(), w.ncols());
    let dual = nr > nc && allow_dual;
    // Work on the orientation whose covariance is smaller.
    let q = if dual { w.transpose() } else { w.clone() };
    let m = q.nrows();
    let cov = &q * q.transpose();
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let raw: Vec<T> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n_positive = raw.iter().filter(|&&v| v > T::zero()).count();
    let max_rank = if neglect_negative { n_positive } else { raw.len() };
    let given_d = given_d.map_or(max_rank, |d| d.min(max_rank));

    let mut own_basis = DMatrix::<T>::zeros(m, max_rank);
    for k in 0..max_rank {
        own_basis.set_column(k, &eig.eigenvectors.column(order[k]));
    }
    let eigenvalues: Vec<T> = raw[..max_rank].to_vec();
    let singular_values: Vec<T> = eigenvalues
        .iter()
        .map(|&v| if v > T::zero() { v.sqrt() } else { T::zero() })
        .collect();

    // Cross basis on the other side: S = Qᵀ L, columns normalized to unit
    // length. A zero column (exactly null direction) stays zero.
    let s = q.transpose() * &own_basis;
    let mut cross_basis = s;
    for k in 0..max_rank {
        let norm = cross_basis.column(k).norm();
        if norm > T::zero() {
            cross_basis.column_mut(k).scale_mut(T::one() / norm);
        }
    }

    // Rank-d reconstruction in the working orientation.
    let fitted_work = if given_d == max_rank && !neglect_negative {
        q.clone()
    } else {
        let ld = own_basis.columns(0, given_d);
        &ld * (ld.transpose() * &q)
    };

    let mut tail_sums = Vec::with_capacity(max_rank);
    let total: T = eigenvalues.iter().copied().sum();
    tail_sums.push(total);
    let mut running = T::zero();
    for k in 0..max_rank.saturating_sub(1) {
        running += eigenvalues[k];
        tail_sums.push(total - running);
    }

    let (time_basis, unit_basis, fitted) = if dual {
        (cross_basis, own_basis, fitted_work.transpose())
    } else {
        (own_basis, cross_basis, fitted_work)
    };

    Ok(SpectralDecomposition {
        time_basis,
        unit_basis,
        eigenvalues,
        tail_sums,
        singular_values,
        fitted,
        dual,
        given_d,
        max_rank,
        n_positive,
        dims: (nr, nc),
    })
}

impl<T: Real> SpectralDecomposition<T> {
    /// Restricted factor/loading pair for the first `d` directions.
    ///
    /// Under [`Restriction::Factors`]: F = √T·L_d, Λ = R_d·diag(σ)/√T.
    /// Under [`Restriction::Loadings`]: F = L_d·diag(σ)/√n, Λ = √n·R_d.
    /// Either way FΛᵀ equals the rank-d singular reconstruction.
    pub fn restricted(&self, d: usize, restriction: Restriction) -> (DMatrix<T>, DMatrix<T>) {
        let (nr, nc) = self.dims;
        let d = d.min(self.max_rank);
        let mut factors = DMatrix::<T>::zeros(nr, d);
        let mut loadings = DMatrix::<T>::zeros(nc, d);
        let sqrt_t = cast::<T>(nr as f64).sqrt();
        let sqrt_n = cast::<T>(nc as f64).sqrt();
        for k in 0..d {
            let sigma = self.singular_values[k];
            match restriction {
                Restriction::Factors => {
                    factors.set_column(k, &(self.time_basis.column(k) * sqrt_t));
                    loadings.set_column(k, &(self.unit_basis.column(k) * (sigma / sqrt_t)));
                }
                Restriction::Loadings => {
                    factors.set_column(k, &(self.time_basis.column(k) * (sigma / sqrt_n)));
                    loadings.set_column(k, &(self.unit_basis.column(k) * sqrt_n));
                }
            }
        }
        (factors, loadings)
    }

    /// Eigenvalues scaled by 1/(T·n), length max_rank.
    pub fn scaled_eigenvalues(&self) -> Vec<T> {
        let (nr, nc) = self.dims;
        let denom = cast::<T>((nr * nc) as f64);
        self.eigenvalues.iter().map(|&v| v / denom).collect()
    }

    /// Tail sums scaled by 1/(T·n): position d holds the variance left
    /// after removing d factors.
    pub fn scaled_tail_sums(&self) -> Vec<T> {
        let (nr, nc) = self.dims;
        let denom = cast::<T>((nr * nc) as f64);
        self.tail_sums.iter().map(|&v| v / denom).collect()
    }
}

/// Restricted principal components of a raw panel at a fixed dimension.
#[derive(Debug, Clone)]
pub struct PcaFit<T: Real> {
    /// The underlying decomposition.
    pub decomposition: SpectralDecomposition<T>,
    /// T×d factors under the requested restriction.
    pub factors: DMatrix<T>,
    /// n×d loadings under the requested restriction.
    pub loadings: DMatrix<T>,
    /// Rank-d reconstruction of the input.
    pub fitted: DMatrix<T>,
}

/// Principal components with normalization, keeping the rank-`d`
/// reconstruction of the input. Only positive eigen-directions are usable.
pub fn pca_fit<T: Real>(
    w: &DMatrix<T>,
    given_d: Option<usize>,
    restriction: Restriction,
) -> Result<PcaFit<T>, FactorError> {
    let decomposition = spectral_decompose(w, given_d, true, true)?;
    let (factors, loadings) = decomposition.restricted(decomposition.given_d, restriction);
    let fitted = decomposition.fitted.clone();
    Ok(PcaFit {
        decomposition,
        factors,
        loadings,
        fitted,
    })
}

/// Functional principal components: smooth the panel columns first, then
/// decompose the smoothed panel keeping only positive eigen-directions.
#[derive(Debug, Clone)]
pub struct FpcaFit<T: Real> {
    /// Decomposition of the smoothed panel.
    pub decomposition: SpectralDecomposition<T>,
    /// T×d smooth factors under the requested restriction.
    pub factors: DMatrix<T>,
    /// n×d loadings under the requested restriction.
    pub loadings: DMatrix<T>,
    /// Rank-d reconstruction of the smoothed panel.
    pub fitted: DMatrix<T>,
    /// The smoothed panel itself.
    pub smoothed: DMatrix<T>,
    /// Smoothing parameter used, on the unit-grid scale.
    pub spar: T,
}

/// Fit functional principal components.
///
/// `spar` is the smoothing parameter on the unit-grid scale; when absent it
/// is chosen as 0.75 times the generalized cross-validation optimum for the
/// panel. `given_d` defaults to the count of positive eigenvalues.
pub fn fpca_fit<T: Real>(
    w: &DMatrix<T>,
    spar: Option<T>,
    given_d: Option<usize>,
    restriction: Restriction,
) -> Result<FpcaFit<T>, FactorError> {
    check_finite(w)?;
    let t = w.nrows();
    let system = SplineSystem::<T>::new(t)?;
    let spar = match spar {
        Some(s) => s,
        None => {
            let sel = system.gcv_select(w)?;
            kappa_to_unit_grid(sel.kappa, t) * cast::<T>(0.75)
        }
    };
    let smoothed = system.smooth(w, kappa_from_unit_grid(spar, t))?;
    let decomposition = spectral_decompose(&smoothed, given_d, true, true)?;
    let (factors, loadings) = decomposition.restricted(decomposition.given_d, restriction);
    let fitted = decomposition.fitted.clone();
    Ok(FpcaFit {
        decomposition,
        factors,
        loadings,
        fitted,
        smoothed,
        spar,
    })
}

/// Extract `d` factors from a residual panel with the spec'd scaling and
/// normalization, sign-fixed so the largest-magnitude entry of each factor
/// column is positive.
pub fn extract_factors<T: Real>(
    w: &DMatrix<T>,
    d: usize,
    scaling: CovarianceScaling,
    restriction: Restriction,
) -> Result<FactorStructure<T>, FactorError> {
    check_finite(w)?;
    let (t, n) = (w.nrows(), w.ncols());
    let max = t.min(n);
    if d > max {
        return Err(FactorError::DimensionTooLarge { d, max });
    }
    let decomposition = spectral_decompose(w, Some(d.max(1)), false, true)?;
    let (mut factors, mut loadings) = decomposition.restricted(d, restriction);
    // Sign convention: largest-|entry| of each factor column positive; the
    // paired loading column flips with it so FΛᵀ is unchanged.
    for k in 0..d {
        let mut best = 0;
        let mut best_abs = T::zero();
        for i in 0..t {
            if factors[(i, k)].abs() > best_abs {
                best_abs = factors[(i, k)].abs();
                best = i;
            }
        }
        if factors[(best, k)] < T::zero() {
            factors.column_mut(k).neg_mut();
            loadings.column_mut(k).neg_mut();
        }
    }
    let denom = match scaling {
        CovarianceScaling::Kss => cast::<T>(n as f64),
        CovarianceScaling::Eup => cast::<T>((n * t) as f64),
    };
    let eigenvalues: Vec<T> = decomposition
        .eigenvalues
        .iter()
        .take(max)
        .map(|&v| v / denom)
        .collect();
    Ok(FactorStructure {
        factors,
        loadings,
        eigenvalues,
        d,
        restriction,
    })
}

/// Variance shares of the loading columns: Var(λ_·l)/Σ_k Var(λ_·k), as
/// fractions summing to one. Variances are sample variances across
/// individuals (mean removed, n−1 denominator).
pub fn variance_shares<T: Real>(structure: &FactorStructure<T>) -> Result<Vec<T>, FactorError> {
    if structure.d == 0 {
        return Err(FactorError::EmptyStructure);
    }
    Ok(loading_variance_shares(&structure.loadings))
}

/// Variance shares straight from a loading matrix (columns = factors).
pub fn loading_variance_shares<T: Real>(loadings: &DMatrix<T>) -> Vec<T> {
    let n = loadings.nrows();
    let variances: Vec<T> = (0..loadings.ncols())
        .map(|k| {
            let col = loadings.column(k);
            let mean: T = col.iter().copied().sum::<T>() / cast::<T>(n as f64);
            col.iter()
                .map(|&v| (v - mean) * (v - mean))
                .sum::<T>()
                / cast::<T>((n - 1) as f64)
        })
        .collect();
    let total: T = variances.iter().copied().sum();
    variances.into_iter().map(|v| v / total).collect()
}

fn check_finite<T: Real>(w: &DMatrix<T>) -> Result<(), FactorError> {
    if w.iter().any(|v| !v.is_finite()) {
        return Err(FactorError::NonFinite);
    }
    Ok(())
}

/// Row-standardize: each row to mean zero, unit sample variance.
pub(crate) fn standardize_rows<T: Real>(w: &DMatrix<T>) -> DMatrix<T> {
    let (t, n) = (w.nrows(), w.ncols());
    let mut out = w.clone();
    for i in 0..t {
        let mean: T = w.row(i).iter().copied().sum::<T>() / cast::<T>(n as f64);
        let var: T = w
            .row(i)
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<T>()
            / cast::<T>((n - 1) as f64);
        let sd = var.sqrt();
        for j in 0..n {
            out[(i, j)] = (w[(i, j)] - mean) / sd;
        }
    }
    out
}
