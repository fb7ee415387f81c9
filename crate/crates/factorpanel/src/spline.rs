//! Natural cubic smoothing splines on the equidistant grid 1..T.
//!
//! The estimator for smooth common factors replaces each observed curve by a
//! penalized least-squares fit: minimize ‖w − g‖² + κ·∫(g″)² over natural
//! cubic splines g with knots at the observation times. In the cardinal
//! basis (one basis function per knot, `Z = I`) the fit is linear in the
//! data, ĝ = (I + κR)⁻¹ w, with `R` the Green–Silverman second-derivative
//! penalty matrix; `R` is symmetric positive semidefinite with a
//! two-dimensional null space (constants and linear trends), so heavy
//! smoothing shrinks every curve toward its best straight line.
//!
//! The system is diagonalized once (Demmler–Reinsch): with R = U diag(ω) Uᵀ,
//! the smoother at any κ is U diag(1/(1+κω)) Uᵀ, which makes repeated
//! evaluation over a κ grid cheap. κ is selected by generalized
//! cross-validation (or ordinary leave-one-out cross-validation) minimized
//! over a 64-point log-spaced grid refined by golden-section search.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::num::{cast, Real};

/// Errors from spline construction and κ selection.
#[derive(Debug, Error)]
pub enum SplineError {
    /// Natural cubic splines need at least 4 distinct knots.
    #[error("spline system requires T >= 4 grid points, got T = {t}")]
    TooShort { t: usize },
    /// Negative smoothing parameter.
    #[error("smoothing parameter must be nonnegative, got {kappa}")]
    NegativeKappa { kappa: f64 },
    /// The panel handed to κ selection carries no signal to smooth.
    #[error("degenerate input: residual panel is identically zero")]
    DegenerateInput,
    /// Panel rows must match the grid length.
    #[error("panel has {rows} rows but the spline grid has {t} points")]
    GridMismatch { rows: usize, t: usize },
}

/// Spline basis and penalty on the grid 1..T, with the penalty
/// eigendecomposition cached for O(T) smoother evaluations.
#[derive(Debug, Clone)]
pub struct SplineSystem<T: Real> {
    t: usize,
    /// Interpolation basis. In the cardinal representation each basis
    /// function is 1 at its own knot and 0 at the others, so Z is the
    /// identity; kept explicit because downstream formulas are written
    /// against Z(ZᵀZ + κR)⁻¹Zᵀ.
    basis: DMatrix<T>,
    /// Green–Silverman penalty R = Q S⁻¹ Qᵀ for knots 1..T (unit spacing).
    penalty: DMatrix<T>,
    /// Eigenvectors of the penalty (columns), U.
    eigenvectors: DMatrix<T>,
    /// Eigenvalues ω ≥ 0 of the penalty, ascending; exactly two are zero.
    eigenvalues: Vec<T>,
}

/// The linear smoother Z_κ = (I + κR)⁻¹ at a fixed κ.
#[derive(Debug, Clone)]
pub struct Smoother<T: Real> {
    /// Smoothing parameter.
    pub kappa: T,
    /// The T×T smoother matrix.
    pub matrix: DMatrix<T>,
    /// tr(Z_κ): the effective model dimension, in (m, T].
    pub trace: T,
}

/// Result of a κ search: the minimizer and the criterion value there.
#[derive(Debug, Clone, Copy)]
pub struct KappaSelection<T: Real> {
    /// The selected smoothing parameter.
    pub kappa: T,
    /// Criterion value at `kappa`.
    pub value: T,
}

impl<T: Real> SplineSystem<T> {
    /// Build the natural cubic spline system on the grid 1..T.
    pub fn new(t: usize) -> Result<Self, SplineError> {
        if t < 4 {
            return Err(SplineError::TooShort { t });
        }
        let penalty = penalty_matrix::<T>(t);
        let eig = SymmetricEigen::new(penalty.clone());
        // Pair eigenvalues with their vectors, sort ascending, and clamp the
        // two null-space values (tiny negative noise from the decomposition)
        // to exact zero.
        let mut order: Vec<usize> = (0..t).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let max_ev = order
            .iter()
            .map(|&i| eig.eigenvalues[i])
            .fold(T::zero(), |a, b| if b > a { b } else { a });
        let floor = max_ev * cast::<T>(1e-12);
        let mut eigenvalues = Vec::with_capacity(t);
        let mut eigenvectors = DMatrix::<T>::zeros(t, t);
        for (k, &i) in order.iter().enumerate() {
            let ev = eig.eigenvalues[i];
            eigenvalues.push(if ev < floor { T::zero() } else { ev });
            eigenvectors.set_column(k, &eig.eigenvectors.column(i));
        }
        Ok(SplineSystem {
            t,
            basis: DMatrix::identity(t, t),
            penalty,
            eigenvectors,
            eigenvalues,
        })
    }

    /// Grid length T.
    pub fn len(&self) -> usize {
        self.t
    }

    /// Always false: construction enforces T ≥ 4.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// The interpolation basis Z (identity in the cardinal representation).
    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    /// The penalty matrix R on knots 1..T.
    pub fn penalty(&self) -> &DMatrix<T> {
        &self.penalty
    }

    /// Eigenvalues of the penalty, ascending; the first two are zero.
    pub fn penalty_eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Materialize the smoother Z_κ with its trace.
    pub fn smoother(&self, kappa: T) -> Result<Smoother<T>, SplineError> {
        self.check_kappa(kappa)?;
        let shrink = self.shrinkage(kappa);
        let mut scaled = self.eigenvectors.clone();
        for (k, &s) in shrink.iter().enumerate() {
            scaled.column_mut(k).scale_mut(s);
        }
        let matrix = &scaled * self.eigenvectors.transpose();
        Ok(Smoother {
            kappa,
            matrix,
            trace: shrink.iter().copied().sum(),
        })
    }

    /// Apply the smoother to a T×n panel: columns are smoothed curves.
    pub fn smooth(&self, panel: &DMatrix<T>, kappa: T) -> Result<DMatrix<T>, SplineError> {
        self.check_kappa(kappa)?;
        self.check_rows(panel)?;
        let mut coeffs = self.eigenvectors.transpose() * panel;
        for (k, &s) in self.shrinkage(kappa).iter().enumerate() {
            coeffs.row_mut(k).scale_mut(s);
        }
        Ok(&self.eigenvectors * coeffs)
    }

    /// tr(Z_κ) without materializing the smoother.
    pub fn trace(&self, kappa: T) -> T {
        self.shrinkage(kappa).into_iter().sum()
    }

    /// tr(Z_κ²).
    pub fn trace_squared(&self, kappa: T) -> T {
        self.shrinkage(kappa).into_iter().map(|s| s * s).sum()
    }

    /// Diagonal of Z_κ: the leverage of each grid point.
    pub fn leverages(&self, kappa: T) -> Vec<T> {
        let shrink = self.shrinkage(kappa);
        (0..self.t)
            .map(|i| {
                (0..self.t)
                    .map(|k| {
                        let u = self.eigenvectors[(i, k)];
                        u * u * shrink[k]
                    })
                    .sum()
            })
            .collect()
    }

    /// Diagonal of Z_κ² (the twice-applied smoother).
    pub fn leverages_squared(&self, kappa: T) -> Vec<T> {
        let shrink = self.shrinkage(kappa);
        (0..self.t)
            .map(|i| {
                (0..self.t)
                    .map(|k| {
                        let u = self.eigenvectors[(i, k)];
                        u * u * shrink[k] * shrink[k]
                    })
                    .sum()
            })
            .collect()
    }

    /// Generalized cross-validation score of smoothing `panel` at κ:
    /// rss·T/(n²·(T − tr Z_κ)²) with rss summed over all cells.
    pub fn gcv_value(&self, panel: &DMatrix<T>, kappa: T) -> Result<T, SplineError> {
        self.check_rows(panel)?;
        let smoothed = self.smooth(panel, kappa)?;
        let rss: T = panel
            .iter()
            .zip(smoothed.iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        let t = cast::<T>(self.t as f64);
        let n = cast::<T>(panel.ncols() as f64);
        let denom = t - self.trace(kappa);
        Ok(rss * t / (n * n * denom * denom))
    }

    /// Ordinary leave-one-out cross-validation score at κ:
    /// Σ_ij (res_ij/(1 − lev_i))² / T.
    pub fn cv_value(&self, panel: &DMatrix<T>, kappa: T) -> Result<T, SplineError> {
        self.check_rows(panel)?;
        let smoothed = self.smooth(panel, kappa)?;
        let lev = self.leverages(kappa);
        let mut acc = T::zero();
        for j in 0..panel.ncols() {
            for i in 0..self.t {
                let r = (panel[(i, j)] - smoothed[(i, j)]) / (T::one() - lev[i]);
                acc += r * r;
            }
        }
        Ok(acc / cast::<T>(self.t as f64))
    }

    /// Select κ by minimizing the GCV score over a log grid refined by
    /// golden-section search. Deterministic for fixed inputs.
    pub fn gcv_select(&self, panel: &DMatrix<T>) -> Result<KappaSelection<T>, SplineError> {
        self.select(panel, |k| {
            self.gcv_value(panel, k).expect("kappa > 0 on search grid")
        })
    }

    /// Select κ by minimizing the leave-one-out cross-validation score.
    pub fn cv_select(&self, panel: &DMatrix<T>) -> Result<KappaSelection<T>, SplineError> {
        self.select(panel, |k| {
            self.cv_value(panel, k).expect("kappa > 0 on search grid")
        })
    }

    fn select<F: Fn(T) -> T>(
        &self,
        panel: &DMatrix<T>,
        objective: F,
    ) -> Result<KappaSelection<T>, SplineError> {
        self.check_rows(panel)?;
        if panel.iter().all(|&v| v == T::zero()) {
            return Err(SplineError::DegenerateInput);
        }
        // Grid bounds scale with the penalty: κ·ω spans [tiny, huge] when κ
        // runs over [1e-8, 1e8] times T/tr(R).
        let tr_r: T = (0..self.t).map(|i| self.penalty[(i, i)]).sum();
        let scale = cast::<T>(self.t as f64) / tr_r;
        let lo = (scale * cast::<T>(1e-8)).ln();
        let hi = (scale * cast::<T>(1e8)).ln();
        let points = 64;
        let grid: Vec<T> = (0..points)
            .map(|i| {
                let frac = cast::<T>(i as f64 / (points - 1) as f64);
                (lo + (hi - lo) * frac).exp()
            })
            .collect();
        let mut best_idx = 0;
        let mut best_val = objective(grid[0]);
        for (i, &k) in grid.iter().enumerate().skip(1) {
            let v = objective(k);
            if v < best_val {
                best_val = v;
                best_idx = i;
            }
        }
        // Golden-section refinement on log κ between the grid neighbors of
        // the best point, to relative width 1e-4.
        let mut a = grid[best_idx.saturating_sub(1)].ln();
        let mut b = grid[(best_idx + 1).min(points - 1)].ln();
        let inv_phi = cast::<T>(0.618_033_988_749_894_9_f64);
        let tol = cast::<T>(1e-4);
        let mut x1 = b - (b - a) * inv_phi;
        let mut x2 = a + (b - a) * inv_phi;
        let mut f1 = objective(x1.exp());
        let mut f2 = objective(x2.exp());
        while b - a > tol {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - (b - a) * inv_phi;
                f1 = objective(x1.exp());
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + (b - a) * inv_phi;
                f2 = objective(x2.exp());
            }
        }
        let kappa = ((a + b) / cast::<T>(2.0)).exp();
        let value = objective(kappa);
        // Keep whichever point is actually lowest (refinement cannot lose to
        // the coarse grid).
        if best_val < value {
            Ok(KappaSelection {
                kappa: grid[best_idx],
                value: best_val,
            })
        } else {
            Ok(KappaSelection { kappa, value })
        }
    }

    /// Shrinkage factors 1/(1+κω) per eigen-direction.
    fn shrinkage(&self, kappa: T) -> Vec<T> {
        self.eigenvalues
            .iter()
            .map(|&w| T::one() / (T::one() + kappa * w))
            .collect()
    }

    fn check_kappa(&self, kappa: T) -> Result<(), SplineError> {
        if kappa < T::zero() {
            return Err(SplineError::NegativeKappa {
                kappa: kappa.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    fn check_rows(&self, panel: &DMatrix<T>) -> Result<(), SplineError> {
        if panel.nrows() != self.t {
            return Err(SplineError::GridMismatch {
                rows: panel.nrows(),
                t: self.t,
            });
        }
        Ok(())
    }
}

/// Convert a smoothing parameter expressed on the unit grid (knots spread
/// over [0,1]) to the equivalent value on knots 1..T. The penalty scales as
/// the cube of the knot spacing, so κ_{1..T} = κ_{[0,1]}·(T−1)³.
pub fn kappa_from_unit_grid<T: Real>(kappa_unit: T, t: usize) -> T {
    let scale = cast::<T>(((t - 1) * (t - 1) * (t - 1)) as f64);
    kappa_unit * scale
}

/// Inverse of [`kappa_from_unit_grid`].
pub fn kappa_to_unit_grid<T: Real>(kappa: T, t: usize) -> T {
    let scale = cast::<T>(((t - 1) * (t - 1) * (t - 1)) as f64);
    kappa / scale
}

/// Green–Silverman penalty R = Q S⁻¹ Qᵀ for natural cubic splines on the
/// equidistant knots 1..T (unit spacing): Q is the T×(T−2) second-difference
/// matrix and S the tridiagonal Gram matrix of the second-derivative basis.
fn penalty_matrix<T: Real>(t: usize) -> DMatrix<T> {
    let inner = t - 2;
    let mut q = DMatrix::<T>::zeros(t, inner);
    for j in 0..inner {
        q[(j, j)] = T::one();
        q[(j + 1, j)] = -cast::<T>(2.0);
        q[(j + 2, j)] = T::one();
    }
    let mut s = DMatrix::<T>::zeros(inner, inner);
    let two_thirds = cast::<T>(2.0 / 3.0);
    let one_sixth = cast::<T>(1.0 / 6.0);
    for i in 0..inner {
        s[(i, i)] = two_thirds;
        if i + 1 < inner {
            s[(i, i + 1)] = one_sixth;
            s[(i + 1, i)] = one_sixth;
        }
    }
    let s_inv = s
        .try_inverse()
        .expect("tridiagonal Gram matrix is positive definite");
    &q * s_inv * q.transpose()
}
