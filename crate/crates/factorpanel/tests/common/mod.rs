//! Shared helpers for integration tests: fixture loading and canonical sign
//! alignment for factor/loading comparisons.

use nalgebra::DMatrix;
use std::path::PathBuf;

/// Absolute path of a fixture in `tests/data`.
pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

/// Read a headerless numeric CSV fixture into a matrix.
pub fn read_matrix(name: &str) -> DMatrix<f64> {
    let text = std::fs::read_to_string(fixture_path(name))
        .unwrap_or_else(|e| panic!("fixture {name}: {e}"));
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| c.trim().parse().unwrap_or_else(|e| panic!("fixture {name}: bad cell `{c}`: {e:?}")))
                .collect()
        })
        .collect();
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

/// Read a one-column fixture as a vector.
pub fn read_vector(name: &str) -> Vec<f64> {
    let m = read_matrix(name);
    assert_eq!(m.ncols(), 1, "fixture {name} is not a column vector");
    m.column(0).iter().copied().collect()
}

/// Flip each column so its largest-magnitude entry is positive. Principal
/// directions are only defined up to sign; fixtures are stored in this
/// canonical form and computed results must be aligned the same way before
/// comparison.
pub fn canonical_signs(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for j in 0..out.ncols() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..out.nrows() {
            if out[(i, j)].abs() > best_abs {
                best_abs = out[(i, j)].abs();
                best = i;
            }
        }
        if out[(best, j)] < 0.0 {
            for i in 0..out.nrows() {
                out[(i, j)] = -out[(i, j)];
            }
        }
    }
    out
}

/// Largest absolute elementwise difference.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch {:?} vs {:?}", a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Path of the cigarette-consumption panel shipped with the workspace.
pub fn cigar_csv() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/cigar.csv")
}
