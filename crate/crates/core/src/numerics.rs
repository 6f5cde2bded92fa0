//! Dense complex subspace toolkit.
//!
//! Numerical rank, orthonormal null-space bases, span dimension and span
//! equality on top of an SVD, plus a general (non-Hermitian) complex
//! eigendecomposition built from a Hessenberg reduction, a single-shift
//! complex QR iteration to triangular Schur form, and back substitution
//! for the eigenvectors.
//!
//! Every routine is a pure function of its inputs. Null bases and
//! eigenpairs come out in a fixed canonical order so that downstream
//! selections ("the first `d` columns") are reproducible.

use nalgebra::{DMatrix, DVector, Hessenberg, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex double-precision scalar.
#[allow(non_camel_case_types)]
pub type c64 = Complex64;

/// Dense column-major complex matrix used throughout the crate.
pub type ComplexMatrix = DMatrix<c64>;

const EPS: f64 = f64::EPSILON;

/// Aligned-but-finite-precision directions of the interference matrices sit
/// around 1e-11 relative to the largest singular value, while genuine
/// directions of generic draws stay above 1e-3.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;
pub const DEFAULT_LEAKAGE_TOL: f64 = 1e-8;

/// Thresholds used when turning exact-arithmetic dimension statements into
/// finite-precision decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Singular values at or below `relative_rank_tol * sigma_max` count as zero.
    pub relative_rank_tol: f64,
    /// Bound on relative Frobenius-norm leakage.
    pub leakage_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            relative_rank_tol: DEFAULT_RANK_TOL,
            leakage_tol: DEFAULT_LEAKAGE_TOL,
        }
    }
}

impl Tolerance {
    pub fn new(relative_rank_tol: f64, leakage_tol: f64) -> Result<Self> {
        let tol = Tolerance {
            relative_rank_tol,
            leakage_tol,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |x: f64| x.is_finite() && x > 0.0 && x < 1.0;
        if !in_range(self.relative_rank_tol) {
            return Err(Error::InvalidInput(format!(
                "relative rank tolerance must lie in (0, 1), got {}",
                self.relative_rank_tol
            )));
        }
        if !in_range(self.leakage_tol) {
            return Err(Error::InvalidInput(format!(
                "leakage tolerance must lie in (0, 1), got {}",
                self.leakage_tol
            )));
        }
        Ok(())
    }
}

fn check_matrix(a: &ComplexMatrix, what: &str) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidInput(format!("{what}: empty matrix")));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput(format!("{what}: non-finite entry")));
    }
    Ok(())
}

/// Horizontal concatenation of blocks with equal row counts.
pub fn hstack(blocks: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidInput("hstack of zero blocks".into()))?;
    let rows = first.nrows();
    if let Some(bad) = blocks.iter().find(|b| b.nrows() != rows) {
        return Err(Error::DimensionMismatch(format!(
            "expected {rows} rows, found a block with {}",
            bad.nrows()
        )));
    }
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    Ok(out)
}

/// Vertical concatenation of blocks with equal column counts.
pub fn vstack(blocks: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidInput("vstack of zero blocks".into()))?;
    let cols = first.ncols();
    if let Some(bad) = blocks.iter().find(|b| b.ncols() != cols) {
        return Err(Error::DimensionMismatch(format!(
            "expected {cols} columns, found a block with {}",
            bad.ncols()
        )));
    }
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.rows_mut(at, b.nrows()).copy_from(b);
        at += b.nrows();
    }
    Ok(out)
}

/// Singular values in descending order.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    check_matrix(a, "singular_values")?;
    let svd = SVD::try_new(a.clone(), false, false, EPS, 0)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    Ok(svd.singular_values.iter().copied().collect())
}

fn rank_from_singular_values(sv: &[f64], tol: &Tolerance) -> usize {
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let cutoff = tol.relative_rank_tol * smax;
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Count of singular values above `tol.relative_rank_tol * sigma_max`.
pub fn numerical_rank(a: &ComplexMatrix, tol: &Tolerance) -> Result<usize> {
    let sv = singular_values(a)?;
    Ok(rank_from_singular_values(&sv, tol))
}

/// Orthonormal basis of `{x : A x = 0}` together with the numerical rank of `A`.
///
/// Columns are right singular vectors ordered by ascending singular value.
pub fn right_null_with_rank(a: &ComplexMatrix, tol: &Tolerance) -> Result<(usize, ComplexMatrix)> {
    check_matrix(a, "right_null_basis")?;
    let (m, n) = a.shape();
    // Zero rows leave the right null space unchanged and make the SVD return all n right vectors.
    let work = if m >= n {
        a.clone()
    } else {
        let mut padded = ComplexMatrix::zeros(n, n);
        padded.rows_mut(0, m).copy_from(a);
        padded
    };
    let svd = SVD::try_new(work, false, true, EPS, 0)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let rank = rank_from_singular_values(&sv, tol);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::NumericalFailure("SVD returned no right vectors".into()))?;

    let mut basis = ComplexMatrix::zeros(n, n - rank);
    for (col, idx) in (rank..n).rev().enumerate() {
        basis.set_column(col, &v_t.row(idx).adjoint());
    }
    Ok((rank, basis))
}

/// Orthonormal basis of the right null space of `A`; zero columns when `A` has full column rank.
pub fn right_null_basis(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    right_null_with_rank(a, tol).map(|(_, basis)| basis)
}

/// Orthonormal columns `y` with `y^H A = 0`, ascending singular value first.
pub fn left_null_basis(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    check_matrix(a, "left_null_basis")?;
    right_null_basis(&a.adjoint(), tol)
}

/// Dimension of the span of all columns of the given blocks.
pub fn span_dimension(blocks: &[&ComplexMatrix], tol: &Tolerance) -> Result<usize> {
    numerical_rank(&hstack(blocks)?, tol)
}

/// Whether `A` and `B` span the same column space.
pub fn spans_equal(a: &ComplexMatrix, b: &ComplexMatrix, tol: &Tolerance) -> Result<bool> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "spans_equal on {} vs {} rows",
            a.nrows(),
            b.nrows()
        )));
    }
    let ra = numerical_rank(a, tol)?;
    let rb = numerical_rank(b, tol)?;
    if ra != a.ncols() || rb != b.ncols() {
        return Err(Error::DegenerateSpan(format!(
            "inputs must have full column rank (rank {ra}/{} and {rb}/{})",
            a.ncols(),
            b.ncols()
        )));
    }
    let joint = span_dimension(&[a, b], tol)?;
    Ok(joint == ra && joint == rb)
}

/// `||num||_F / ||den||_F`, reported as 0 when both are exactly zero.
pub fn relative_norm(num: &ComplexMatrix, den: &ComplexMatrix) -> f64 {
    let d = den.norm();
    let n = num.norm();
    if d == 0.0 {
        if n == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        n / d
    }
}

/// Eigenvalues with matching unit-norm eigenvectors (one per column).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<c64>,
    pub vectors: ComplexMatrix,
}

/// Eigendecomposition of a general square complex matrix.
///
/// Pairs are sorted by descending `|lambda|`, then descending real part,
/// then descending imaginary part.
pub fn general_eig(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    check_matrix(a, "general_eig")?;
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "general_eig needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let scale = a.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Ok(EigenDecomposition {
            values: vec![c64::new(0.0, 0.0); n],
            vectors: ComplexMatrix::identity(n, n),
        });
    }

    let (z, t) = complex_schur(a.unscale(scale))?;
    let x = triangular_eigenvectors(&t);
    let mut vectors = &z * &x;
    for mut col in vectors.column_iter_mut() {
        let nrm = col.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::NumericalFailure(
                "eigenvector back substitution produced a zero vector".into(),
            ));
        }
        col.unscale_mut(nrm);
    }
    let values: Vec<c64> = (0..n).map(|k| t[(k, k)] * scale).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (values[i], values[j]);
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = vectors.select_columns(order.iter());
    Ok(EigenDecomposition {
        values: sorted_values,
        vectors: sorted_vectors,
    })
}

/// Unitary `Z` and upper-triangular `T` with `A = Z T Z^H`.
fn complex_schur(a: ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = a.nrows();
    if n == 1 {
        return Ok((ComplexMatrix::identity(1, 1), a));
    }
    let (mut z, mut h) = Hessenberg::new(a).unpack();
    for j in 0..n {
        for i in (j + 2)..n {
            h[(i, j)] = c64::new(0.0, 0.0);
        }
    }

    let norm = h.norm().max(f64::MIN_POSITIVE);
    let max_iter = 30 * n.max(10);
    let mut hi = n - 1;
    let mut since_deflation = 0usize;
    let mut total = 0usize;

    while hi > 0 {
        // Locate the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let off = h[(lo, lo - 1)].norm();
            let mut diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if diag == 0.0 {
                diag = norm;
            }
            if off <= EPS * diag {
                h[(lo, lo - 1)] = c64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        total += 1;
        since_deflation += 1;
        if total > max_iter {
            return Err(Error::NumericalFailure(format!(
                "complex QR iteration did not converge after {max_iter} sweeps"
            )));
        }

        let shift = if since_deflation.is_multiple_of(11) {
            // Exceptional shift to break stagnation cycles.
            h[(hi, hi)] + c64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            if k > lo {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let col_start = if k > lo { k - 1 } else { lo };
            for j in col_start..n {
                let (p, q) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = p * c + s * q;
                h[(k + 1, j)] = -s.conj() * p + q * c;
            }
            let row_end = (k + 2).min(hi);
            for i in 0..=row_end {
                let (p, q) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = p * c + q * s.conj();
                h[(i, k + 1)] = -p * s + q * c;
            }
            for i in 0..n {
                let (p, q) = (z[(i, k)], z[(i, k + 1)]);
                z[(i, k)] = p * c + q * s.conj();
                z[(i, k + 1)] = -p * s + q * c;
            }
            if k > lo {
                h[(k + 1, k - 1)] = c64::new(0.0, 0.0);
            }
        }
    }

    for j in 0..n {
        for i in (j + 1)..n {
            h[(i, j)] = c64::new(0.0, 0.0);
        }
    }
    Ok((z, h))
}

/// Eigenvalue of the trailing 2x2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: c64, b: c64, c: c64, d: c64) -> c64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let l1 = mid + disc;
    let l2 = mid - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` to `(r, 0)`; `c` is real.
fn givens(x: c64, y: c64) -> (f64, c64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, c64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    let phase = x / ax;
    (ax / r, phase * y.conj() / r)
}

/// Right eigenvectors of an upper-triangular matrix, one column per diagonal entry.
fn triangular_eigenvectors(t: &ComplexMatrix) -> ComplexMatrix {
    let n = t.nrows();
    let small = (EPS * t.norm()).max(f64::MIN_POSITIVE);
    let mut x = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut v = DVector::<c64>::zeros(n);
        v[k] = c64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = c64::new(0.0, 0.0);
            for l in (j + 1)..=k {
                acc += t[(j, l)] * v[l];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                denom = c64::new(small, 0.0);
            }
            v[j] = -acc / denom;
        }
        x.set_column(k, &v);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c64::new(re, im)
        })
    }

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn assert_orthonormal(q: &ComplexMatrix) {
        let gram = q.adjoint() * q;
        let err = (gram - ComplexMatrix::identity(q.ncols(), q.ncols())).norm();
        assert!(err < 1e-12, "gram error {err}");
    }

    #[test]
    fn rank_of_identity_zero_and_outer_product() {
        let tol = Tolerance::default();
        assert_eq!(numerical_rank(&ComplexMatrix::identity(3, 3), &tol).unwrap(), 3);
        assert_eq!(numerical_rank(&ComplexMatrix::zeros(4, 4), &tol).unwrap(), 0);
        let u = random(5, 1, 42);
        let v = random(5, 1, 43);
        assert_eq!(numerical_rank(&(&u * v.adjoint()), &tol).unwrap(), 1);
    }

    #[test]
    fn rank_rejects_non_finite_and_empty() {
        let tol = Tolerance::default();
        let mut a = ComplexMatrix::identity(2, 2);
        a[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(numerical_rank(&a, &tol), Err(Error::InvalidInput(_))));
        a[(0, 1)] = c(0.0, f64::INFINITY);
        assert!(matches!(right_null_basis(&a, &tol), Err(Error::InvalidInput(_))));
        assert!(matches!(
            numerical_rank(&ComplexMatrix::zeros(0, 3), &tol),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn right_null_cases() {
        let tol = Tolerance::default();
        assert_eq!(right_null_basis(&random(4, 4, 7), &tol).unwrap().ncols(), 0);

        let a = random(3, 6, 7);
        let null = right_null_basis(&a, &tol).unwrap();
        assert_eq!(null.shape(), (6, 3));
        assert_orthonormal(&null);
        let bound = 1e-12 * a.norm();
        for x in null.column_iter() {
            assert!((&a * x).norm() <= bound * x.norm());
        }

        let z = right_null_basis(&ComplexMatrix::zeros(2, 3), &tol).unwrap();
        assert_eq!(z.shape(), (3, 3));
        assert_orthonormal(&z);
    }

    #[test]
    fn left_null_cases() {
        let tol = Tolerance::default();
        assert_eq!(left_null_basis(&random(5, 5, 1), &tol).unwrap().ncols(), 0);

        let a = &random(16, 9, 11) * random(9, 9, 12);
        let y = left_null_basis(&a, &tol).unwrap();
        assert_eq!(y.ncols(), 7);
        assert_orthonormal(&y);
        for col in y.column_iter() {
            assert!((col.adjoint() * &a).norm() <= 1e-12 * a.norm());
        }

        let line = ComplexMatrix::from_column_slice(3, 1, &[c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0)]);
        let comp = left_null_basis(&line, &tol).unwrap();
        assert_eq!(comp.ncols(), 2);
        assert_orthonormal(&comp);
        assert!((comp.adjoint() * &line).norm() < 1e-14);
    }

    #[test]
    fn null_bases_are_deterministic() {
        let tol = Tolerance::default();
        let a = random(5, 9, 3);
        assert_eq!(right_null_basis(&a, &tol).unwrap(), right_null_basis(&a, &tol).unwrap());
    }

    #[test]
    fn span_dimension_cases() {
        let tol = Tolerance::default();
        let i3 = ComplexMatrix::identity(3, 3);
        assert_eq!(span_dimension(&[&i3, &i3], &tol).unwrap(), 3);

        let e1 = i3.columns(0, 1).into_owned();
        let e2 = i3.columns(1, 1).into_owned();
        let sum = &e1 + &e2;
        let cols = [e1, e2, sum];
        let refs: Vec<&ComplexMatrix> = cols.iter().collect();
        assert_eq!(span_dimension(&refs, &tol).unwrap(), 2);

        let vs: Vec<ComplexMatrix> = (0..4).map(|k| random(8, 1, 3 + 100 * k)).collect();
        let refs: Vec<&ComplexMatrix> = vs.iter().collect();
        assert_eq!(span_dimension(&refs, &tol).unwrap(), 4);

        let bad = ComplexMatrix::zeros(2, 1);
        assert!(matches!(
            span_dimension(&[&i3, &bad], &tol),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn spans_equal_cases() {
        let tol = Tolerance::default();
        let a = random(6, 2, 5);
        let t = random(2, 2, 6);
        assert!(spans_equal(&a, &(&a * &t), &tol).unwrap());
        assert!(spans_equal(&a, &(&a * c(2.0, 0.0)), &tol).unwrap());
        assert!(!spans_equal(&a, &random(6, 2, 55), &tol).unwrap());

        let deficient = &random(6, 1, 1) * random(1, 2, 2);
        assert!(matches!(
            spans_equal(&a, &deficient, &tol),
            Err(Error::DegenerateSpan(_))
        ));
        assert!(matches!(
            spans_equal(&a, &random(5, 2, 1), &tol),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn eig_diagonal() {
        let mut a = ComplexMatrix::zeros(2, 2);
        a[(0, 0)] = c(3.0, 0.0);
        a[(1, 1)] = c(1.0, 1.0);
        let eig = general_eig(&a).unwrap();
        assert!((eig.values[0] - c(3.0, 0.0)).norm() < 1e-14);
        assert!((eig.values[1] - c(1.0, 1.0)).norm() < 1e-14);
        assert!((eig.vectors[(0, 0)].norm() - 1.0).abs() < 1e-14);
        assert!(eig.vectors[(1, 0)].norm() < 1e-14);
        assert!((eig.vectors[(1, 1)].norm() - 1.0).abs() < 1e-14);
        assert!(eig.vectors[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn eig_rotation_spectrum() {
        let a = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let eig = general_eig(&a).unwrap();
        let mut ims: Vec<f64> = eig.values.iter().map(|l| l.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-14 && (ims[1] - 1.0).abs() < 1e-14);
        for l in &eig.values {
            assert!(l.re.abs() < 1e-14);
        }
    }

    #[test]
    fn eig_rejects_non_square() {
        assert!(matches!(
            general_eig(&random(3, 4, 1)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn eig_ordering_is_canonical() {
        let a = random(12, 12, 21);
        let eig = general_eig(&a).unwrap();
        for w in eig.values.windows(2) {
            assert!(w[0].norm() >= w[1].norm());
        }
    }

    #[test]
    fn eig_handles_jordan_block() {
        // Defective input still yields finite unit vectors with small residual.
        let a = ComplexMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let eig = general_eig(&a).unwrap();
        for k in 0..2 {
            let v = eig.vectors.column(k);
            assert!((&a * v - v * eig.values[k]).norm() < 1e-7);
        }
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerance::new(0.0, 1e-8).is_err());
        assert!(Tolerance::new(1e-8, 1.0).is_err());
        assert!(Tolerance::new(f64::NAN, 1e-8).is_err());
        assert!(Tolerance::new(1e-10, 1e-8).is_ok());
    }

    #[test]
    fn relative_norm_zero_over_zero() {
        let z = ComplexMatrix::zeros(2, 2);
        assert_eq!(relative_norm(&z, &z), 0.0);
    }
}
