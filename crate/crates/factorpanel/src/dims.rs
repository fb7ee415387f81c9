//! Factor-dimension selection.
//!
//! Sixteen criteria for choosing the number of common factors in a panel:
//! the PC/BIC/IC families of Bai and Ng (2002), their integrated
//! counterparts IPC1–IPC3 for unit-root factors (Bai, 2004), the
//! subsample-calibrated criteria of Alessi, Barigozzi and Capasso (2010),
//! the sequential eigenvalue test of Kneip, Sickles and Song (2012), the
//! eigenvalue-difference estimator of Onatski (2010), and the eigenvalue-
//! and growth-ratio estimators of Ahn and Horenstein (2013).
//!
//! All criteria operate on the spectrum of the panel's covariance. The
//! criterion functions accept either the panel itself (decomposing it
//! through [`spectral_decompose`]) or, for the purely spectrum-based
//! estimators, a descending eigenvalue sequence. [`opt_dim`] evaluates a
//! configured set of criteria off a single shared decomposition and
//! collects the estimates in a [`DimReport`].
//!
//! Conventions shared across the module: eigenvalues are those of the
//! unscaled cross-product (descending), `tails[d]` is the eigenvalue sum
//! beyond the first `d` directions, and the scaled spectrum `w =
//! tails/(T·n)` measures the residual variance after removing `d` factors.
//! Criterion minimization resolves ties by the smallest dimension.

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::factors::{spectral_decompose, standardize_rows, FactorError, SpectralDecomposition};
use crate::num::{cast, Real};
use crate::spline::{kappa_from_unit_grid, kappa_to_unit_grid, SplineError, SplineSystem};

/// Errors from dimension selection.
#[derive(Debug, Error)]
pub enum DimError {
    /// The input contains NaN or infinite entries.
    #[error("input contains non-finite values")]
    NonFinite,
    /// A configuration value is out of its admissible range.
    #[error("invalid dimension-selection configuration: {0}")]
    InvalidConfig(String),
    /// The panel is too small for the requested criterion.
    #[error("input dimension too small for the requested criterion")]
    DimensionTooSmall,
    /// A criterion ran past the available eigenvalue sequence.
    #[error("eigenvalue sequence exhausted: needed {needed}, available {available}")]
    SpectrumExhausted {
        /// Number of eigenvalues the criterion needed.
        needed: usize,
        /// Number of eigenvalues actually available.
        available: usize,
    },
    /// No stable dimension exists on the calibration grid.
    #[error("calibration grid too coarse: no stable dimension below the search bound")]
    GridTooCoarse,
    /// Spline machinery failed (KSS criterion).
    #[error(transparent)]
    Spline(#[from] SplineError),
    /// Factor decomposition failed.
    #[error(transparent)]
    Factor(#[from] FactorError),
}

/// The sixteen selection criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// Bai–Ng PC with penalty ((n+T)/(nT))·log(nT/(n+T)).
    Pc1,
    /// Bai–Ng PC with penalty ((n+T)/(nT))·log(min(n,T)).
    Pc2,
    /// Bai–Ng PC with penalty log(min(n,T))/min(n,T).
    Pc3,
    /// BIC-type criterion with penalty ((n+T−σ²)/(nT))·log(nT).
    Bic3,
    /// Bai–Ng IC, log scale, PC1 penalty.
    Ic1,
    /// Bai–Ng IC, log scale, PC2 penalty.
    Ic2,
    /// Bai–Ng IC, log scale, PC3 penalty.
    Ic3,
    /// Integrated-factor PC1 (Bai, 2004), for unit-root factors.
    Ipc1,
    /// Integrated-factor PC2.
    Ipc2,
    /// Integrated-factor PC3.
    Ipc3,
    /// Alessi–Barigozzi–Capasso calibration of IC1.
    AbcIc1,
    /// Alessi–Barigozzi–Capasso calibration of IC2.
    AbcIc2,
    /// Kneip–Sickles–Song sequential eigenvalue test.
    KssC,
    /// Onatski eigenvalue-difference estimator.
    Ed,
    /// Ahn–Horenstein eigenvalue ratio.
    Er,
    /// Ahn–Horenstein growth ratio.
    Gr,
}

impl Criterion {
    /// Every criterion, in canonical reporting order.
    pub const ALL: [Criterion; 16] = [
        Criterion::Pc1,
        Criterion::Pc2,
        Criterion::Pc3,
        Criterion::Bic3,
        Criterion::Ic1,
        Criterion::Ic2,
        Criterion::Ic3,
        Criterion::Ipc1,
        Criterion::Ipc2,
        Criterion::Ipc3,
        Criterion::AbcIc1,
        Criterion::AbcIc2,
        Criterion::KssC,
        Criterion::Ed,
        Criterion::Er,
        Criterion::Gr,
    ];

    /// Conventional label, e.g. `"PC1"`, `"ABC.IC1"`, `"KSS.C"`.
    pub fn label(self) -> &'static str {
        match self {
            Criterion::Pc1 => "PC1",
            Criterion::Pc2 => "PC2",
            Criterion::Pc3 => "PC3",
            Criterion::Bic3 => "BIC3",
            Criterion::Ic1 => "IC1",
            Criterion::Ic2 => "IC2",
            Criterion::Ic3 => "IC3",
            Criterion::Ipc1 => "IPC1",
            Criterion::Ipc2 => "IPC2",
            Criterion::Ipc3 => "IPC3",
            Criterion::AbcIc1 => "ABC.IC1",
            Criterion::AbcIc2 => "ABC.IC2",
            Criterion::KssC => "KSS.C",
            Criterion::Ed => "ED",
            Criterion::Er => "ER",
            Criterion::Gr => "GR",
        }
    }

    /// Parse a conventional label (case-insensitive).
    pub fn from_label(s: &str) -> Option<Criterion> {
        Criterion::ALL
            .iter()
            .copied()
            .find(|c| c.label().eq_ignore_ascii_case(s))
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Criterion {
    type Err = DimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Criterion::from_label(s)
            .ok_or_else(|| DimError::InvalidConfig(format!("unknown criterion `{s}`")))
    }
}

/// Configuration for [`opt_dim`].
#[derive(Debug, Clone)]
pub struct DimConfig<T: Real> {
    /// Criteria to evaluate, in reporting order.
    pub criteria: Vec<Criterion>,
    /// Upper search bound; `None` derives it from the panel dimensions.
    pub d_max: Option<usize>,
    /// Noise variance on the scaled-eigenvalue scale; `None` uses the
    /// first neglected eigenvalue (PC/BIC/IPC families) or an internal
    /// estimate (KSS test).
    pub sig2_hat: Option<T>,
    /// Significance level of the KSS test, in (0, 1).
    pub level: T,
    /// Calibration constants for the ABC criteria; `None` uses 128 points
    /// equally spaced on [0, 5]. Must be strictly increasing.
    pub c_grid: Option<Vec<T>>,
    /// Time dimensions of the ABC subpanels; `None` derives a nested
    /// sequence from the panel shape.
    pub t_seq: Option<Vec<usize>>,
    /// Unit dimensions of the ABC subpanels, likewise.
    pub n_seq: Option<Vec<usize>>,
    /// Standardize rows (center and scale each unit's series) first.
    pub standardize: bool,
    /// Smoothing parameter for the KSS test, on the unit-grid scale;
    /// `None` selects it by generalized cross-validation.
    pub spar: Option<T>,
}

impl<T: Real> Default for DimConfig<T> {
    fn default() -> Self {
        DimConfig {
            criteria: Criterion::ALL.to_vec(),
            d_max: None,
            sig2_hat: None,
            level: cast::<T>(0.01),
            c_grid: None,
            t_seq: None,
            n_seq: None,
            standardize: false,
            spar: None,
        }
    }
}

/// Estimates from the PC and BIC criteria.
#[derive(Debug, Clone)]
pub struct PcBicDims<T: Real> {
    /// PC1 estimate.
    pub pc1: usize,
    /// PC2 estimate.
    pub pc2: usize,
    /// PC3 estimate.
    pub pc3: usize,
    /// BIC3 estimate.
    pub bic3: usize,
    /// Search bound actually used.
    pub d_max_used: usize,
    /// Noise-variance reference actually used.
    pub sig2_used: T,
}

/// Estimates from the IC criteria.
#[derive(Debug, Clone)]
pub struct IcDims {
    /// IC1 estimate.
    pub ic1: usize,
    /// IC2 estimate.
    pub ic2: usize,
    /// IC3 estimate.
    pub ic3: usize,
    /// Search bound actually used.
    pub d_max_used: usize,
}

/// Estimates from the integrated-factor criteria.
#[derive(Debug, Clone)]
pub struct IpcDims<T: Real> {
    /// IPC1 estimate.
    pub ipc1: usize,
    /// IPC2 estimate.
    pub ipc2: usize,
    /// IPC3 estimate.
    pub ipc3: usize,
    /// Search bound actually used.
    pub d_max_used: usize,
    /// Noise-variance reference actually used.
    pub sig2_used: T,
}

/// Estimates from the subsample-calibrated ABC criteria.
#[derive(Debug, Clone)]
pub struct AbcDims {
    /// Calibrated IC1 estimate.
    pub ic1: usize,
    /// Calibrated IC2 estimate.
    pub ic2: usize,
    /// Whether IC1 fell back to the plain full-panel criterion because no
    /// stable dimension existed on the grid.
    pub ic1_fallback: bool,
    /// Whether IC2 fell back likewise.
    pub ic2_fallback: bool,
    /// Internal search bound (requested bound plus one).
    pub d_max_used: usize,
}

/// Internal calibration quantities of the ABC criteria, for inspection.
#[derive(Debug, Clone)]
pub struct AbcDetails<T: Real> {
    /// Time dimensions of the nested subpanels, descending.
    pub t_seq: Vec<usize>,
    /// Unit dimensions of the nested subpanels, descending.
    pub n_seq: Vec<usize>,
    /// Scaled eigenvalue tail sums, one row per subpanel: column `l` holds
    /// the residual variance after `l` factors, the last column the tail
    /// beyond the search bound.
    pub tail_sums: DMatrix<T>,
    /// Selected dimension per grid constant (rows) and subpanel (columns)
    /// under the IC1 penalty.
    pub dims_ic1: DMatrix<usize>,
    /// The same under the IC2 penalty.
    pub dims_ic2: DMatrix<usize>,
    /// Internal search bound (requested bound plus one).
    pub d_max_used: usize,
}

/// Estimates from the eigenvalue- and growth-ratio criteria.
#[derive(Debug, Clone)]
pub struct ErGrDims {
    /// Eigenvalue-ratio estimate.
    pub er: usize,
    /// Growth-ratio estimate.
    pub gr: usize,
    /// Search bound actually used.
    pub d_max_used: usize,
}

/// Result of the eigenvalue-difference estimator.
#[derive(Debug, Clone)]
pub struct EdResult {
    /// Estimated dimension.
    pub d_hat: usize,
    /// Whether the fixed-point iteration converged within the cap.
    pub converged: bool,
    /// Iterations taken.
    pub iterations: usize,
}

/// Result of the KSS sequential eigenvalue test.
#[derive(Debug, Clone)]
pub struct KssCResult<T: Real> {
    /// Estimated dimension: the count of standardized eigenvalue
    /// statistics exceeding the critical value.
    pub d_hat: usize,
    /// Leading test statistic (no factors against at least one), rounded
    /// to two decimals.
    pub test_stat: T,
    /// Its p-value, rounded to two decimals.
    pub p_value: T,
    /// Normal critical value at the configured level, rounded to two
    /// decimals.
    pub crit_value: T,
    /// Significance level used, rounded to two decimals.
    pub sig_level: T,
    /// Noise variance used in the final statistics.
    pub sig2_used: T,
    /// Smoothing parameter used, on the unit-grid scale.
    pub spar_used: T,
}

/// Estimates and shared context collected by [`opt_dim`].
#[derive(Debug, Clone)]
pub struct DimReport<T: Real> {
    /// Criterion estimates, in the requested order.
    pub dims: Vec<(Criterion, usize)>,
    /// Share of total variance per eigen-direction of the shared
    /// decomposition.
    pub eigen_shares: Vec<T>,
    /// Search bound used by the eigenvalue-penalty families.
    pub d_max_used: usize,
    /// Noise-variance reference used by those families.
    pub sig2_used: T,
    /// Whether the eigenvalue-difference iteration converged (true when
    /// ED was not requested).
    pub ed_converged: bool,
    /// Whether calibrated IC1 fell back to the plain criterion.
    pub abc_ic1_fallback: bool,
    /// Whether calibrated IC2 fell back to the plain criterion.
    pub abc_ic2_fallback: bool,
    /// Details of the KSS test when it was evaluated.
    pub kss_test: Option<KssCResult<T>>,
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn nan<T: Real>() -> T {
    cast::<T>(f64::NAN)
}

fn is_na<T: Real>(x: T) -> bool {
    x != x
}

/// Round half to even at two decimals.
fn round_to_2<T: Real>(x: T) -> T {
    let v = x.to_f64().unwrap_or(f64::NAN);
    cast::<T>((v * 100.0).round_ties_even() / 100.0)
}

fn nearest_usize(x: f64) -> usize {
    x.round_ties_even().max(0.0) as usize
}

/// Index of the first minimum, skipping NaN entries; 0 when every entry
/// is NaN. `-inf` is an ordinary (winning) value.
fn argmin_first<T: Real>(values: &[T]) -> usize {
    let mut best: Option<(usize, T)> = None;
    for (i, &v) in values.iter().enumerate() {
        if is_na(v) {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, b)) => v < b,
        };
        if better {
            best = Some((i, v));
        }
    }
    best.map_or(0, |(i, _)| i)
}

/// One-based original position of the `k`-th smallest value (`k`
/// one-based) under a stable ordering that places NaN entries first.
fn order_position<T: Real>(values: &[T], k: usize) -> Option<usize> {
    if k == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let (na_a, na_b) = (is_na(values[a]), is_na(values[b]));
        match (na_a, na_b) {
            (true, true) => std::cmp::Ordering::Equal,
            (true, false) => std::cmp::Ordering::Less,
            (false, true) => std::cmp::Ordering::Greater,
            (false, false) => values[a]
                .partial_cmp(&values[b])
                .unwrap_or(std::cmp::Ordering::Equal),
        }
    });
    idx.get(k - 1).map(|&i| i + 1)
}

/// Count of strictly positive entries in a window over the first `m`
/// positions; positions past the end of the slice count as positive, so
/// the window stays monotone in `m` even on short spectra.
fn positive_window_count<T: Real>(w: &[T], m: usize) -> usize {
    (0..m)
        .map(|k| match w.get(k) {
            Some(&v) => usize::from(v > T::zero()),
            None => 1,
        })
        .sum()
}

/// Scaled spectrum w = tails/(T·n).
fn scaled_tails<T: Real>(tails: &[T], nr: usize, nc: usize) -> Vec<T> {
    let denom = cast::<T>((nr * nc) as f64);
    tails.iter().map(|&v| v / denom).collect()
}

fn decompose_full<T: Real>(panel: &DMatrix<T>) -> Result<SpectralDecomposition<T>, DimError> {
    if panel.nrows() < 2 || panel.ncols() < 2 {
        return Err(DimError::DimensionTooSmall);
    }
    Ok(spectral_decompose(panel, None, false, true)?)
}

fn check_level<T: Real>(level: T) -> Result<f64, DimError> {
    let l = level.to_f64().unwrap_or(f64::NAN);
    if !(l > 0.0 && l < 1.0) {
        return Err(DimError::InvalidConfig(format!(
            "significance level must lie strictly between 0 and 1, got {l}"
        )));
    }
    Ok(l)
}

fn check_grid<T: Real>(grid: &[T]) -> Result<(), DimError> {
    if grid.is_empty() || grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(DimError::InvalidConfig(
            "calibration grid must be nonempty and strictly increasing".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Eigenvalue-penalty families (PC, BIC, IC, IPC)
// ---------------------------------------------------------------------------

/// All estimates derived from penalizing the scaled spectrum of one panel.
pub(crate) struct PenaltyFamilyDims<T: Real> {
    pub pc1: usize,
    pub pc2: usize,
    pub pc3: usize,
    pub bic3: usize,
    pub ic1: usize,
    pub ic2: usize,
    pub ic3: usize,
    pub ipc1: usize,
    pub ipc2: usize,
    pub ipc3: usize,
    /// PC1 with the iteratively refined variance reference used by the
    /// iterated principal-components estimator.
    pub iter_pc1: usize,
    /// IPC-form criterion with a single reference refinement, likewise.
    pub iter_ipc1: usize,
    pub d_max_used: usize,
    pub sig2_used: T,
}

/// Evaluate every eigenvalue-penalty criterion on a tail-sum sequence.
///
/// `tails[d]` is the unscaled eigenvalue sum beyond dimension `d`. The
/// reference variance defaults to the scaled tail just past the search
/// bound; the bound defaults to round(sqrt(min(T, n))) capped at the
/// spectrum length.
pub(crate) fn penalty_family_dims<T: Real>(
    nr: usize,
    nc: usize,
    tails: &[T],
    d_max: Option<usize>,
    sig2_hat: Option<T>,
) -> Result<PenaltyFamilyDims<T>, DimError> {
    if nr < 2 || nc < 2 {
        return Err(DimError::DimensionTooSmall);
    }
    if tails.is_empty() {
        return Err(DimError::SpectrumExhausted {
            needed: 1,
            available: 0,
        });
    }
    let w = scaled_tails(tails, nr, nc);
    let max_rk = w.len();
    let c_min = nr.min(nc);
    let d_max_used = match d_max {
        Some(d) => d.min(max_rk),
        None => nearest_usize((c_min as f64).sqrt()).min(max_rk),
    };
    let reference = match sig2_hat {
        Some(s) => s,
        None => *w.get(d_max_used).ok_or(DimError::SpectrumExhausted {
            needed: d_max_used + 1,
            available: max_rk,
        })?,
    };

    let nr_t = cast::<T>(nr as f64);
    let nc_t = cast::<T>(nc as f64);
    let c_t = cast::<T>(c_min as f64);
    let nt = nr_t * nc_t;
    let sum_dims = nr_t + nc_t;
    // Penalty rates per extra factor, before the dimension multiplier.
    let pen_pc1 = (sum_dims / nt) * (nt / sum_dims).ln();
    let pen_pc2 = (sum_dims / nt) * c_t.ln();
    let pen_pc3 = c_t.ln() / c_t;
    let pen_bic3 = ((sum_dims - reference) / nt) * nt.ln();
    // Slow-rate scale for integrated (unit-root) factors.
    let integ = nr_t / (cast::<T>(4.0) * nr_t.ln().ln());
    let pen_ipc1 = integ * (sum_dims / nt) * (nt / sum_dims).ln();
    let pen_ipc2 = integ * (sum_dims / nt) * c_t.ln();
    let pen_ipc3 = integ * ((sum_dims - reference) / nt) * nt.ln();

    let weighted = |pen: T, refv: T| -> Vec<T> {
        w.iter()
            .enumerate()
            .map(|(l, &wl)| wl + refv * cast::<T>(l as f64) * pen)
            .collect()
    };
    let minimize = |pen: T| -> usize { argmin_first(&weighted(pen, reference)).min(d_max_used) };

    let pc1 = minimize(pen_pc1);
    let pc2 = minimize(pen_pc2);
    let pc3 = minimize(pen_pc3);
    let bic3 = minimize(pen_bic3);
    let ipc1 = minimize(pen_ipc1);
    let ipc2 = minimize(pen_ipc2);
    let ipc3 = minimize(pen_ipc3);

    // Log-scale criteria need no variance reference. Zero or negative
    // tails are floored before the log so exact fits stay comparable.
    let floor = cast::<T>(1e-300);
    let log_domain = d_max_used.min(max_rk - 1);
    let log_crit = |pen: T| -> usize {
        let vals: Vec<T> = (0..=log_domain)
            .map(|l| {
                let wl = if w[l] > floor { w[l] } else { floor };
                wl.ln() + cast::<T>(l as f64) * pen
            })
            .collect();
        argmin_first(&vals)
    };
    let ic1 = log_crit(pen_pc1);
    let ic2 = log_crit(pen_pc2);
    let ic3 = log_crit(pen_pc3);

    // PC1 with iterative reference refinement: shrink the search bound to
    // the current estimate, re-reference the criterion at the tail just
    // past it, and repeat until the estimate stops moving inside the
    // bound. An initial minimum at or past the bound is returned as is.
    let mut iter_pc1 = argmin_first(&weighted(pen_pc1, reference));
    let mut shrink_bound = d_max_used;
    while 0 < iter_pc1 && iter_pc1 < shrink_bound {
        shrink_bound = iter_pc1;
        let refreshed = w[shrink_bound];
        iter_pc1 = argmin_first(&weighted(pen_pc1, refreshed));
        if iter_pc1 > shrink_bound {
            iter_pc1 = shrink_bound;
        }
    }

    // Integrated-factor variant with one reference refinement: the
    // refreshed reference never feeds back into the minimization, so the
    // initial estimate (capped at the bound) settles it.
    let iter_ipc1 = argmin_first(&weighted(pen_ipc3, reference)).min(d_max_used);

    Ok(PenaltyFamilyDims {
        pc1,
        pc2,
        pc3,
        bic3,
        ic1,
        ic2,
        ic3,
        ipc1,
        ipc2,
        ipc3,
        iter_pc1,
        iter_ipc1,
        d_max_used,
        sig2_used: reference,
    })
}

/// Bai–Ng PC criteria and the BIC3 variant.
///
/// `sig2_hat` is the noise variance on the scaled-eigenvalue scale; when
/// absent the scaled tail just past the search bound serves as reference.
pub fn pc_bic_criteria<T: Real>(
    panel: &DMatrix<T>,
    d_max: Option<usize>,
    sig2_hat: Option<T>,
) -> Result<PcBicDims<T>, DimError> {
    let sv = decompose_full(panel)?;
    let fam = penalty_family_dims(sv.dims.0, sv.dims.1, &sv.tail_sums, d_max, sig2_hat)?;
    Ok(PcBicDims {
        pc1: fam.pc1,
        pc2: fam.pc2,
        pc3: fam.pc3,
        bic3: fam.bic3,
        d_max_used: fam.d_max_used,
        sig2_used: fam.sig2_used,
    })
}

/// Bai–Ng IC criteria (log scale, reference-free).
pub fn ic_criteria<T: Real>(panel: &DMatrix<T>, d_max: Option<usize>) -> Result<IcDims, DimError> {
    let sv = decompose_full(panel)?;
    let fam = penalty_family_dims(sv.dims.0, sv.dims.1, &sv.tail_sums, d_max, None)?;
    Ok(IcDims {
        ic1: fam.ic1,
        ic2: fam.ic2,
        ic3: fam.ic3,
        d_max_used: fam.d_max_used,
    })
}

/// Integrated-factor PC criteria for unit-root factors.
pub fn ipc_criteria<T: Real>(
    panel: &DMatrix<T>,
    d_max: Option<usize>,
    sig2_hat: Option<T>,
) -> Result<IpcDims<T>, DimError> {
    let sv = decompose_full(panel)?;
    let fam = penalty_family_dims(sv.dims.0, sv.dims.1, &sv.tail_sums, d_max, sig2_hat)?;
    Ok(IpcDims {
        ipc1: fam.ipc1,
        ipc2: fam.ipc2,
        ipc3: fam.ipc3,
        d_max_used: fam.d_max_used,
        sig2_used: fam.sig2_used,
    })
}

// ---------------------------------------------------------------------------
// ABC subsample calibration
// ---------------------------------------------------------------------------

fn abc_sequences(
    nr: usize,
    nc: usize,
    d_max_work: usize,
    t_seq: Option<&[usize]>,
    n_seq: Option<&[usize]>,
) -> Result<(Vec<usize>, Vec<usize>), DimError> {
    let resolve_len = |seq: Option<&[usize]>, dim: usize, name: &str| -> Result<usize, DimError> {
        match seq {
            None => {
                let auto = (dim as isize - d_max_work as isize - 1)
                    .min((dim as f64).sqrt().trunc() as isize)
                    .min(30);
                if auto < 2 {
                    return Err(DimError::InvalidConfig(format!(
                        "panel too small to form a {name} subsample sequence"
                    )));
                }
                Ok(auto as usize)
            }
            Some([]) => Err(DimError::InvalidConfig(format!(
                "{name} sequence must be nonempty"
            ))),
            Some(seq) => {
                if seq.iter().any(|&v| v < d_max_work + 1 || v > dim) {
                    return Err(DimError::InvalidConfig(format!(
                        "{name} sequence entries must lie in [{}, {dim}]",
                        d_max_work + 1
                    )));
                }
                Ok(seq.len())
            }
        }
    };
    let l_n = resolve_len(n_seq, nc, "unit")?;
    let l_t = resolve_len(t_seq, nr, "time")?;

    let sorted_desc = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    };
    let descending_run = |from: usize, len: usize| (0..len).map(|k| from - k).collect::<Vec<_>>();
    // Linear descent from `hi` to `lo` in `len` points, truncated to
    // integers.
    let spaced = |hi: usize, lo: usize, len: usize| -> Vec<usize> {
        if len == 1 {
            return vec![hi];
        }
        let by = (lo as f64 - hi as f64) / (len as f64 - 1.0);
        (0..len)
            .map(|k| (hi as f64 + k as f64 * by).trunc() as usize)
            .collect()
    };

    let (t_out, n_out) = if l_t == l_n {
        let t_out = t_seq.map_or_else(|| descending_run(nr, l_t), sorted_desc);
        let n_out = n_seq.map_or_else(|| descending_run(nc, l_n), sorted_desc);
        (t_out, n_out)
    } else if l_n > l_t {
        let n_out = n_seq.map_or_else(|| descending_run(nc, l_n), sorted_desc);
        let t_out = match t_seq {
            Some(s) => {
                let hi = *s.iter().max().unwrap();
                let lo = *s.iter().min().unwrap();
                spaced(hi, lo, l_n)
            }
            None => spaced(nr, nr - l_t, l_n),
        };
        (t_out, n_out)
    } else {
        let t_out = t_seq.map_or_else(|| descending_run(nr, l_t), sorted_desc);
        let n_out = match n_seq {
            Some(s) => {
                let hi = *s.iter().max().unwrap();
                let lo = *s.iter().min().unwrap();
                spaced(hi, lo, l_t)
            }
            None => spaced(nc, nc - l_n, l_t),
        };
        (t_out, n_out)
    };
    Ok((t_out, n_out))
}

fn abc_details<T: Real>(
    panel: &DMatrix<T>,
    d_max: Option<usize>,
    c_grid: Option<&[T]>,
    t_seq: Option<&[usize]>,
    n_seq: Option<&[usize]>,
) -> Result<AbcDetails<T>, DimError> {
    let (nr, nc) = (panel.nrows(), panel.ncols());
    if nr < 2 || nc < 2 {
        return Err(DimError::DimensionTooSmall);
    }
    // The calibration always searches one dimension past the requested
    // bound, so the tail column exists at the bound itself.
    let d_max_work = d_max.unwrap_or_else(|| ((nr.min(nc)) as f64).sqrt().trunc() as usize) + 1;
    let (t_out, n_out) = abc_sequences(nr, nc, d_max_work, t_seq, n_seq)?;
    let leng = t_out.len();

    // Scaled eigenvalue tail sums per nested subpanel.
    let mut tail_rows = DMatrix::<T>::zeros(leng, d_max_work + 1);
    for (j, (&t_j, &n_j)) in t_out.iter().zip(&n_out).enumerate() {
        if t_j.min(n_j) <= d_max_work {
            return Err(DimError::InvalidConfig(format!(
                "subpanel {t_j}x{n_j} cannot hold {d_max_work} factors plus a tail"
            )));
        }
        let block = panel.view((0, 0), (t_j, n_j));
        let scale = cast::<T>((t_j * n_j) as f64);
        let gram = if n_j < t_j {
            (block.transpose() * block) / scale
        } else {
            (block * block.transpose()) / scale
        };
        let eig = nalgebra::SymmetricEigen::new(gram);
        let mut vals: Vec<T> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        let total: T = vals.iter().copied().sum();
        let mut running = T::zero();
        tail_rows[(j, 0)] = total;
        for l in 0..d_max_work {
            running += vals[l];
            tail_rows[(j, l + 1)] = total - running;
        }
    }

    let grid: Vec<T> = match c_grid {
        Some(g) => {
            check_grid(g)?;
            g.to_vec()
        }
        None => {
            let by = 5.0 / 127.0;
            (0..128).map(|k| cast::<T>(k as f64 * by)).collect()
        }
    };

    let pen_of = |t_j: usize, n_j: usize, log_term: T| -> T {
        let (t_f, n_f) = (cast::<T>(t_j as f64), cast::<T>(n_j as f64));
        ((n_f + t_f) / (n_f * t_f)) * log_term
    };
    let pen1: Vec<T> = t_out
        .iter()
        .zip(&n_out)
        .map(|(&t_j, &n_j)| {
            let (t_f, n_f) = (cast::<T>(t_j as f64), cast::<T>(n_j as f64));
            pen_of(t_j, n_j, ((n_f * t_f) / (n_f + t_f)).ln())
        })
        .collect();
    let root_c_log = cast::<T>((nr.min(nc) as f64).sqrt()).ln();
    let pen2: Vec<T> = t_out
        .iter()
        .zip(&n_out)
        .map(|(&t_j, &n_j)| pen_of(t_j, n_j, root_c_log))
        .collect();

    let dims_for = |pen: &[T]| -> DMatrix<usize> {
        let mut dims = DMatrix::<usize>::zeros(grid.len(), leng);
        for m in 0..leng {
            let logw: Vec<T> = (0..=d_max_work).map(|l| tail_rows[(m, l)].ln()).collect();
            for (g, &c) in grid.iter().enumerate() {
                let crit: Vec<T> = logw
                    .iter()
                    .enumerate()
                    .map(|(l, &lw)| lw + cast::<T>(l as f64) * pen[m] * c)
                    .collect();
                dims[(g, m)] = argmin_first(&crit);
            }
        }
        dims
    };
    let dims_ic1 = dims_for(&pen1);
    let dims_ic2 = dims_for(&pen2);

    Ok(AbcDetails {
        t_seq: t_out,
        n_seq: n_out,
        tail_sums: tail_rows,
        dims_ic1,
        dims_ic2,
        d_max_used: d_max_work,
    })
}

/// Pick the stable dimension from a grid-by-subpanel dimension matrix.
fn abc_select(dims: &DMatrix<usize>, d_max_work: usize) -> Result<usize, DimError> {
    let (n_grid, leng) = (dims.nrows(), dims.ncols());
    // Variance of the selected dimension across subpanels, per grid row;
    // a single subpanel counts as perfectly stable.
    let mut var = vec![0.0f64; n_grid];
    if leng > 1 {
        for g in 0..n_grid {
            let mean = (0..leng).map(|m| dims[(g, m)] as f64).sum::<f64>() / leng as f64;
            var[g] = (0..leng)
                .map(|m| {
                    let d = dims[(g, m)] as f64 - mean;
                    d * d
                })
                .sum::<f64>()
                / (leng as f64 - 1.0);
        }
    }
    let min_var = var.iter().copied().fold(f64::INFINITY, f64::min);
    let stable: Vec<usize> = (0..n_grid)
        .filter(|&g| var[g] == min_var)
        .map(|g| dims[(g, 0)])
        .collect();
    if stable.iter().all(|&d| d == d_max_work) {
        return Ok(d_max_work - 1);
    }
    // Among stable rows, keep full-panel dimensions strictly below the
    // bound minus one and take the first consecutively repeated value,
    // falling through to the last.
    let candidates: Vec<usize> = stable
        .into_iter()
        .filter(|&d| (d as isize) < d_max_work as isize - 1)
        .collect();
    match candidates.len() {
        0 => Err(DimError::GridTooCoarse),
        1 => Ok(candidates[0]),
        _ => {
            for l in 0..candidates.len() {
                if l + 1 == candidates.len() || candidates[l] == candidates[l + 1] {
                    return Ok(candidates[l]);
                }
            }
            unreachable!("candidate walk terminates at the last element")
        }
    }
}

/// Subsample-calibrated IC criteria of Alessi, Barigozzi and Capasso.
///
/// The IC penalty is scaled by a constant c, the criterion is minimized on
/// every nested subpanel for every c, and the chosen dimension is the one
/// stable across subpanels at the most stable c. When no dimension below
/// the search bound is stable on the grid, the affected criterion falls
/// back to the plain full-panel IC estimate and the result flags the
/// fallback.
pub fn abc_criteria<T: Real>(
    panel: &DMatrix<T>,
    d_max: Option<usize>,
    c_grid: Option<&[T]>,
    t_seq: Option<&[usize]>,
    n_seq: Option<&[usize]>,
) -> Result<AbcDims, DimError> {
    let details = abc_details(panel, d_max, c_grid, t_seq, n_seq)?;
    let d_work = details.d_max_used;
    let mut fallback_cache: Option<(usize, usize)> = None;
    let mut plain_ic = |first: bool| -> Result<usize, DimError> {
        if fallback_cache.is_none() {
            let sv = decompose_full(panel)?;
            let fam = penalty_family_dims(sv.dims.0, sv.dims.1, &sv.tail_sums, None, None)?;
            fallback_cache = Some((fam.ic1, fam.ic2));
        }
        let (ic1, ic2) = fallback_cache.unwrap();
        Ok(if first { ic1 } else { ic2 })
    };

    let (ic1, ic1_fallback) = match abc_select(&details.dims_ic1, d_work) {
        Ok(d) => (d, false),
        Err(DimError::GridTooCoarse) => (plain_ic(true)?, true),
        Err(e) => return Err(e),
    };
    let (ic2, ic2_fallback) = match abc_select(&details.dims_ic2, d_work) {
        Ok(d) => (d, false),
        Err(DimError::GridTooCoarse) => (plain_ic(false)?, true),
        Err(e) => return Err(e),
    };
    Ok(AbcDims {
        ic1,
        ic2,
        ic1_fallback,
        ic2_fallback,
        d_max_used: d_work,
    })
}

/// Internal calibration quantities of [`abc_criteria`], for inspection
/// and diagnostics.
pub fn abc_calibration_details<T: Real>(
    panel: &DMatrix<T>,
    d_max: Option<usize>,
    c_grid: Option<&[T]>,
    t_seq: Option<&[usize]>,
    n_seq: Option<&[usize]>,
) -> Result<AbcDetails<T>, DimError> {
    abc_details(panel, d_max, c_grid, t_seq, n_seq)
}

// ---------------------------------------------------------------------------
// Eigenvalue-difference estimator (ED)
// ---------------------------------------------------------------------------

/// Onatski's eigenvalue-difference estimator.
///
/// `eigenvalues` must be descending; the estimate is invariant to a
/// uniform positive rescaling. The calibration regression reads a window
/// of four eigenvalues past the current candidate, so the sequence must
/// extend accordingly past the search bound. The fixed-point iteration is
/// capped at 50 rounds; a non-converged result carries the last iterate
/// with `converged` unset.
pub fn ed_criterion<T: Real>(
    eigenvalues: &[T],
    d_max: Option<usize>,
) -> Result<EdResult, DimError> {
    let max_rk = eigenvalues.len();
    let bound = match d_max {
        Some(d) => (d as isize).min(max_rk as isize - 5),
        None => nearest_usize((max_rk as f64).sqrt()) as isize,
    };
    if bound < 2 {
        // A candidate of one would calibrate the slope regression on
        // fractional powers of negative indices.
        return Err(DimError::DimensionTooSmall);
    }
    let two_thirds = cast::<T>(2.0 / 3.0);
    let mut j = bound as usize - 1;
    let mut d_hat = 0usize;
    for iteration in 1..=50 {
        // One-based spectrum positions j..j+4 feed a no-intercept slope
        // regression on the (j-1..j+3)^(2/3) design.
        if j + 4 > max_rk {
            return Err(DimError::SpectrumExhausted {
                needed: j + 4,
                available: max_rk,
            });
        }
        let mut num = T::zero();
        let mut den = T::zero();
        for k in 0..5 {
            let x = cast::<T>((j - 1 + k) as f64).powf(two_thirds);
            num += x * eigenvalues[j - 1 + k];
            den += x * x;
        }
        let delta = (num / den).abs() * cast::<T>(2.0);
        d_hat = (0..=j)
            .filter(|&i| eigenvalues[i] - eigenvalues[i + 1] - delta > T::zero())
            .count();
        if d_hat == j || d_hat == 0 {
            return Ok(EdResult {
                d_hat,
                converged: true,
                iterations: iteration,
            });
        }
        j = d_hat;
    }
    Ok(EdResult {
        d_hat,
        converged: false,
        iterations: 50,
    })
}

// ---------------------------------------------------------------------------
// Eigenvalue ratio and growth ratio (ER, GR)
// ---------------------------------------------------------------------------

/// Ahn–Horenstein eigenvalue-ratio and growth-ratio estimators.
///
/// `eigenvalues` must be descending; both estimates are invariant to a
/// uniform positive rescaling. Each ratio sequence is prefixed with a mock
/// zero-dimension entry and the selected dimension is the position of its
/// second-largest value under a full stable ordering (NaN entries first),
/// which locates the maximizer past the mock entry.
pub fn er_gr_criteria<T: Real>(
    eigenvalues: &[T],
    d_max: Option<usize>,
) -> Result<ErGrDims, DimError> {
    let max_rk = eigenvalues.len();
    if max_rk < 2 {
        return Err(DimError::DimensionTooSmall);
    }
    // Tail sums play the role of residual variances; the eigenvalue scale
    // cancels from every ratio.
    let total: T = eigenvalues.iter().copied().sum();
    let mut tails = Vec::with_capacity(max_rk);
    let mut running = T::zero();
    tails.push(total);
    for k in 0..max_rk - 1 {
        running += eigenvalues[k];
        tails.push(total - running);
    }
    let d_max_used = match d_max {
        Some(d) => d.min(max_rk),
        None => nearest_usize((max_rk as f64).sqrt()).min(max_rk),
    };
    if d_max_used == 0 {
        return Err(DimError::DimensionTooSmall);
    }

    // Eigenvalue ratios over the mock-extended spectrum; entries past the
    // end propagate as NaN.
    let extended = |k: usize| -> T {
        if k == 0 {
            total
        } else {
            eigenvalues.get(k - 1).copied().unwrap_or_else(nan)
        }
    };
    let er_vals: Vec<T> = (0..=d_max_used)
        .map(|k| extended(k) / extended(k + 1))
        .collect();
    let er = order_position(&er_vals, d_max_used).ok_or(DimError::SpectrumExhausted {
        needed: d_max_used,
        available: er_vals.len(),
    })?;

    // Growth ratios of log tail sums over positive-tail windows, with
    // cyclic recycling to the longest window.
    let p1 = positive_window_count(&tails, d_max_used + 1);
    let p2 = positive_window_count(&tails, d_max_used + 2);
    let p3 = positive_window_count(&tails, d_max_used + 3);
    let log_tail = |k: usize| -> T {
        // One-based position into the tail sums.
        tails.get(k - 1).map_or_else(nan, |&v| v.ln())
    };
    let a: Vec<T> = (1..=p1).map(log_tail).collect();
    let b: Vec<T> = (2..=p2).map(log_tail).collect();
    let c: Vec<T> = (3..=p3).map(log_tail).collect();
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Err(DimError::SpectrumExhausted {
            needed: 3,
            available: tails.len(),
        });
    }
    let len = a.len().max(b.len()).max(c.len());
    let gr_vals: Vec<T> = (0..len)
        .map(|i| {
            let (ai, bi, ci) = (a[i % a.len()], b[i % b.len()], c[i % c.len()]);
            (ai - bi) / (bi - ci)
        })
        .collect();
    let gr = order_position(&gr_vals, d_max_used).ok_or(DimError::SpectrumExhausted {
        needed: d_max_used,
        available: gr_vals.len(),
    })?;

    Ok(ErGrDims {
        er,
        gr,
        d_max_used,
    })
}

// ---------------------------------------------------------------------------
// KSS sequential eigenvalue test
// ---------------------------------------------------------------------------

/// Kneip–Sickles–Song sequential test for the factor dimension.
///
/// The panel is column-smoothed at `spar` (unit-grid scale; selected as
/// 0.75 times the generalized cross-validation optimum when absent; zero
/// skips smoothing), decomposed keeping positive eigen-directions, and
/// each eigenvalue tail sum is standardized against its expectation under
/// d factors plus smoothed noise. The estimate counts the standardized
/// statistics exceeding the normal critical value at `level`; it is
/// deliberately not capped at a search bound, since the statistics run
/// over the whole usable spectrum.
///
/// When neither a noise variance nor a bound is supplied and the panel
/// was not smoothed, the variance is re-estimated at the first-round
/// count and the count repeated once.
pub fn kss_c_criterion<T: Real>(
    panel: &DMatrix<T>,
    spar: Option<T>,
    d_max: Option<usize>,
    sig2_hat: Option<T>,
    level: T,
) -> Result<KssCResult<T>, DimError> {
    let level_f = check_level(level)?;
    let (t, n) = (panel.nrows(), panel.ncols());
    if t < 4 || n < 2 {
        return Err(DimError::DimensionTooSmall);
    }
    let system = SplineSystem::<T>::new(t)?;
    let spar_used = match spar {
        Some(s) => {
            if s < T::zero() {
                return Err(DimError::InvalidConfig(
                    "smoothing parameter must be nonnegative".into(),
                ));
            }
            s
        }
        None => {
            let sel = system.gcv_select(panel)?;
            kappa_to_unit_grid(sel.kappa, t) * cast::<T>(0.75)
        }
    };
    let kappa = kappa_from_unit_grid(spar_used, t);
    let smoothing = spar_used > T::zero();
    let smoothed = if smoothing {
        Some(system.smooth(panel, kappa)?)
    } else {
        None
    };
    let data = smoothed.as_ref().unwrap_or(panel);
    let sv = spectral_decompose(data, None, true, true)?;
    let max_rk = sv.max_rank;
    let tails = &sv.tail_sums;
    let w = scaled_tails(tails, t, n);

    // Smoother traces govern how much noise variance survives smoothing.
    let tr_z = system.trace(kappa);
    let tr_z2 = system.trace_squared(kappa);
    let sum_lev2_sq: T = system
        .leverages_squared(kappa)
        .iter()
        .map(|&v| v * v)
        .sum();
    let t_f = cast::<T>(t as f64);
    let n_f = cast::<T>(n as f64);

    // Removing d factor directions removes a d/T share of the smoothed
    // noise trace.
    let trace_share = |base: T, d: usize| base * (t_f - cast::<T>(d as f64)) / t_f;

    let unsmoothed_sig2 = |d: usize| -> Result<T, DimError> {
        let wd = *w.get(d).ok_or(DimError::SpectrumExhausted {
            needed: d + 1,
            available: w.len(),
        })?;
        let denom = t_f * n_f - (t_f + n_f) * cast::<T>(d as f64) - T::one();
        Ok(wd * (n_f * t_f) / denom)
    };

    let mut sig2 = match sig2_hat {
        Some(s) => s,
        None => {
            if !smoothing || d_max.is_some() {
                let dm = d_max.unwrap_or_else(|| nearest_usize(((t.min(n)) as f64).sqrt()));
                unsmoothed_sig2(dm)?
            } else {
                let resid_tr = t_f + tr_z2 - cast::<T>(2.0) * tr_z;
                let rss: T = panel
                    .iter()
                    .zip(data.iter())
                    .map(|(&y, &s)| (y - s) * (y - s))
                    .sum();
                rss / ((n_f - T::one()) * resid_tr)
            }
        }
    };

    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let crit = cast::<T>(normal.inverse_cdf(1.0 - level_f));
    let deltas = |sig2: T| -> Vec<T> {
        (0..max_rk)
            .map(|d| {
                let expected = (n_f - T::one()) * sig2 * trace_share(tr_z2, d);
                let spread = sig2 * (cast::<T>(2.0) * n_f * trace_share(sum_lev2_sq, d)).sqrt();
                (tails[d] - expected) / spread
            })
            .collect()
    };
    let count_over = |delta: &[T]| delta.iter().filter(|&&v| v > crit).count();

    let mut delta = deltas(sig2);
    let mut d_hat = count_over(&delta);
    // Second pass with the variance re-estimated at the first-round
    // count, only on the fully automatic unsmoothed path (and only while
    // the spectrum still has a tail to reference).
    if sig2_hat.is_none() && d_max.is_none() && !smoothing && d_hat < max_rk {
        sig2 = unsmoothed_sig2(d_hat)?;
        delta = deltas(sig2);
        d_hat = count_over(&delta);
    }

    let lead = delta.first().copied().unwrap_or_else(nan);
    let p_value = 1.0 - normal.cdf(lead.to_f64().unwrap_or(f64::NAN));
    Ok(KssCResult {
        d_hat,
        test_stat: round_to_2(lead),
        p_value: round_to_2(cast::<T>(p_value)),
        crit_value: round_to_2(crit),
        sig_level: round_to_2(level),
        sig2_used: sig2,
        spar_used,
    })
}

// ---------------------------------------------------------------------------
// Combined report
// ---------------------------------------------------------------------------

/// Evaluate a configured set of criteria off one shared decomposition.
///
/// The panel is optionally row-standardized, decomposed once, and every
/// requested criterion is evaluated on that spectrum (the ABC calibration
/// re-decomposes its nested subpanels and the KSS test smooths first, by
/// construction). Duplicate criteria are reported once, at the first
/// occurrence's position.
pub fn opt_dim<T: Real>(
    panel: &DMatrix<T>,
    config: &DimConfig<T>,
) -> Result<DimReport<T>, DimError> {
    let (t, n) = (panel.nrows(), panel.ncols());
    if t < 2 || n < 2 {
        return Err(DimError::DimensionTooSmall);
    }
    if config.criteria.is_empty() {
        return Err(DimError::InvalidConfig("no criteria requested".into()));
    }
    if let Some(d) = config.d_max {
        if d + 1 > t.min(n) {
            return Err(DimError::InvalidConfig(format!(
                "d_max {d} exceeds min(T, n) - 1 = {}",
                t.min(n) - 1
            )));
        }
    }
    check_level(config.level)?;
    if let Some(g) = &config.c_grid {
        check_grid(g)?;
    }

    let data = if config.standardize {
        standardize_rows(panel)
    } else {
        panel.clone()
    };
    let sv = decompose_full(&data)?;
    let total: T = sv.eigenvalues.iter().copied().sum();
    let eigen_shares: Vec<T> = if total > T::zero() {
        sv.eigenvalues.iter().map(|&v| v / total).collect()
    } else {
        vec![T::zero(); sv.eigenvalues.len()]
    };

    // Reporting context follows the eigenvalue-penalty conventions even
    // when no such criterion was requested.
    let w = scaled_tails(&sv.tail_sums, t, n);
    let d_max_used = config
        .d_max
        .unwrap_or_else(|| nearest_usize(((t.min(n)) as f64).sqrt()).min(w.len()));
    let sig2_used = config
        .sig2_hat
        .unwrap_or_else(|| w.get(d_max_used).copied().unwrap_or_else(nan));

    let mut seen = std::collections::HashSet::new();
    let requested: Vec<Criterion> = config
        .criteria
        .iter()
        .copied()
        .filter(|c| seen.insert(*c))
        .collect();

    let needs_family = requested.iter().any(|c| {
        matches!(
            c,
            Criterion::Pc1
                | Criterion::Pc2
                | Criterion::Pc3
                | Criterion::Bic3
                | Criterion::Ic1
                | Criterion::Ic2
                | Criterion::Ic3
                | Criterion::Ipc1
                | Criterion::Ipc2
                | Criterion::Ipc3
        )
    });
    let family = if needs_family {
        Some(penalty_family_dims(
            t,
            n,
            &sv.tail_sums,
            config.d_max,
            config.sig2_hat,
        )?)
    } else {
        None
    };
    let abc = if requested
        .iter()
        .any(|c| matches!(c, Criterion::AbcIc1 | Criterion::AbcIc2))
    {
        Some(abc_criteria(
            &data,
            config.d_max,
            config.c_grid.as_deref(),
            config.t_seq.as_deref(),
            config.n_seq.as_deref(),
        )?)
    } else {
        None
    };
    let er_gr = if requested
        .iter()
        .any(|c| matches!(c, Criterion::Er | Criterion::Gr))
    {
        Some(er_gr_criteria(&sv.eigenvalues, config.d_max)?)
    } else {
        None
    };
    let ed = if requested.contains(&Criterion::Ed) {
        Some(ed_criterion(&sv.eigenvalues, config.d_max)?)
    } else {
        None
    };
    let kss = if requested.contains(&Criterion::KssC) {
        Some(kss_c_criterion(
            &data,
            config.spar,
            config.d_max,
            config.sig2_hat,
            config.level,
        )?)
    } else {
        None
    };

    let mut dims = Vec::with_capacity(requested.len());
    for c in &requested {
        let fam = || family.as_ref().expect("penalty family evaluated");
        let d = match c {
            Criterion::Pc1 => fam().pc1,
            Criterion::Pc2 => fam().pc2,
            Criterion::Pc3 => fam().pc3,
            Criterion::Bic3 => fam().bic3,
            Criterion::Ic1 => fam().ic1,
            Criterion::Ic2 => fam().ic2,
            Criterion::Ic3 => fam().ic3,
            Criterion::Ipc1 => fam().ipc1,
            Criterion::Ipc2 => fam().ipc2,
            Criterion::Ipc3 => fam().ipc3,
            Criterion::AbcIc1 => abc.as_ref().expect("abc evaluated").ic1,
            Criterion::AbcIc2 => abc.as_ref().expect("abc evaluated").ic2,
            Criterion::KssC => kss.as_ref().expect("kss evaluated").d_hat,
            Criterion::Ed => ed.as_ref().expect("ed evaluated").d_hat,
            Criterion::Er => er_gr.as_ref().expect("er/gr evaluated").er,
            Criterion::Gr => er_gr.as_ref().expect("er/gr evaluated").gr,
        };
        dims.push((*c, d));
    }

    Ok(DimReport {
        dims,
        eigen_shares,
        d_max_used,
        sig2_used,
        ed_converged: ed.as_ref().map_or(true, |e| e.converged),
        abc_ic1_fallback: abc.as_ref().is_some_and(|a| a.ic1_fallback),
        abc_ic2_fallback: abc.as_ref().is_some_and(|a| a.ic2_fallback),
        kss_test: kss,
    })
}
