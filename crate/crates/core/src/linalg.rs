// SPDX-License-Identifier: MIT OR Apache-2.0

//! Structured linear algebra for the lower-triangular all-ones design `X`.
//!
//! Nothing here forms `X` or `XᵀX` densely. Products with `X` and `Xᵀ` are
//! running sums, `(XᵀX)⁻¹` is a fixed tridiagonal matrix, and systems in
//!
//! ```text
//! M_t = T XᵀX T + n (I - T²),   T = diag(t)
//! ```
//!
//! are solved through the Woodbury identity, which reduces them to a single
//! tridiagonal solve with `(XᵀX)⁻¹ + T D⁻¹ T`, `D = n (I - T²)`. Every
//! operation is O(n).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};

/// Relaxation variables are kept inside `[T_CLAMP, 1 - T_CLAMP]` before any
/// solve so that `D = n (I - T²)` stays invertible.
pub const T_CLAMP: f64 = 1e-8;

/// Thomas pivots smaller than this are treated as singular.
pub const PIVOT_FLOOR: f64 = 1e-14;

/// `X v`: running sums from the front.
pub fn prefix_sum(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    v.iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect()
}

/// `Xᵀ v`: running sums from the back.
pub fn suffix_sum(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let mut acc = 0.0;
    for (o, &x) in out.iter_mut().zip(v).rev() {
        acc += x;
        *o = acc;
    }
    out
}

/// `XᵀX v` without forming the Gram matrix.
pub fn gram_apply(v: &[f64]) -> Vec<f64> {
    suffix_sum(&prefix_sum(v))
}

/// Square tridiagonal matrix stored as three bands.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiagonal {
    /// Bands must have lengths `n - 1`, `n`, `n - 1` with `n >= 1`.
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidInput(
                "tridiagonal matrix must have n >= 1".into(),
            ));
        }
        check_len(n - 1, lower.len())?;
        check_len(n - 1, upper.len())?;
        Ok(Self { lower, diag, upper })
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "tridiagonal matrix must have n >= 1");
        Self {
            lower: vec![0.0; n - 1],
            diag: vec![1.0; n],
            upper: vec![0.0; n - 1],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn diag_mut(&mut self) -> &mut [f64] {
        &mut self.diag
    }

    /// `self · x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        check_len(n, x.len())?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// LU factorization without pivoting (the forward sweep of the Thomas
    /// algorithm). Fails when a pivot magnitude drops below [`PIVOT_FLOOR`].
    pub fn factor(&self) -> Result<TridiagonalLu> {
        let n = self.len();
        let mut inv_pivot = Vec::with_capacity(n);
        let mut upper_scaled = Vec::with_capacity(n.saturating_sub(1));
        let mut prev_c = 0.0;
        for i in 0..n {
            let pivot = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.lower[i - 1] * prev_c
            };
            if !(pivot.abs() >= PIVOT_FLOOR) {
                return Err(Error::SingularSystem { row: i, pivot });
            }
            let inv = 1.0 / pivot;
            inv_pivot.push(inv);
            if i + 1 < n {
                prev_c = self.upper[i] * inv;
                upper_scaled.push(prev_c);
            }
        }
        Ok(TridiagonalLu {
            lower: self.lower.clone(),
            inv_pivot,
            upper_scaled,
        })
    }
}

/// Factored tridiagonal matrix; solves reuse the forward sweep.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper_scaled: Vec<f64>,
}

impl TridiagonalLu {
    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `b` with the solution.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let n = self.len();
        check_len(n, b.len())?;
        b[0] *= self.inv_pivot[0];
        for i in 1..n {
            b[i] = (b[i] - self.lower[i - 1] * b[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            b[i] -= self.upper_scaled[i] * b[i + 1];
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

/// Closed form of `(XᵀX)⁻¹`: diagonal `(1, 2, …, 2)`, both off-diagonals `-1`.
pub fn xtx_inverse_tridiag(n: usize) -> Tridiagonal {
    assert!(n >= 1, "n must be positive");
    let mut diag = vec![2.0; n];
    diag[0] = 1.0;
    Tridiagonal {
        lower: vec![-1.0; n - 1],
        diag,
        upper: vec![-1.0; n - 1],
    }
}

/// Solves `m u = b` with the Thomas algorithm.
pub fn thomas_solve(m: &Tridiagonal, b: &[f64]) -> Result<Vec<f64>> {
    check_len(m.len(), b.len())?;
    m.factor()?.solve(b)
}

/// `T = diag(t)` and `D = n (I - T²)` for a clamped relaxation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalScaling {
    t: Vec<f64>,
    d: Vec<f64>,
}

impl DiagonalScaling {
    /// Clamps every `t_i` into `[T_CLAMP, 1 - T_CLAMP]` and uses `n = t.len()`.
    pub fn new(t: &[f64]) -> Self {
        let n = t.len() as f64;
        let t: Vec<f64> = t.iter().map(|&ti| clamp_t(ti)).collect();
        let d = t.iter().map(|&ti| n * (1.0 - ti * ti)).collect();
        Self { t, d }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }
}

/// NaN maps to the lower clamp.
pub(crate) fn clamp_t(t: f64) -> f64 {
    if t >= T_CLAMP {
        t.min(1.0 - T_CLAMP)
    } else {
        T_CLAMP
    }
}

/// Factorization of `M_t` that can be reused for several right-hand sides.
///
/// With `M̃ = (XᵀX)⁻¹ + T D⁻¹ T`,
/// `M_t⁻¹ b = D⁻¹ b - D⁻¹ T M̃⁻¹ T D⁻¹ b`.
#[derive(Debug, Clone)]
pub struct MtFactor {
    scaling: DiagonalScaling,
    inner: TridiagonalLu,
}

impl MtFactor {
    pub fn new(scaling: DiagonalScaling) -> Result<Self> {
        if scaling.is_empty() {
            return Err(Error::InvalidInput("relaxation vector is empty".into()));
        }
        let mut m_tilde = xtx_inverse_tridiag(scaling.len());
        for ((m, &t), &d) in m_tilde
            .diag_mut()
            .iter_mut()
            .zip(&scaling.t)
            .zip(&scaling.d)
        {
            *m += t * t / d;
        }
        let inner = m_tilde.factor()?;
        Ok(Self { scaling, inner })
    }

    pub fn scaling(&self) -> &DiagonalScaling {
        &self.scaling
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.scaling.len(), rhs.len())?;
        let DiagonalScaling { t, d } = &self.scaling;
        let z: Vec<f64> = rhs.iter().zip(d).map(|(&b, &di)| b / di).collect();
        let mut q: Vec<f64> = z.iter().zip(t).map(|(&zi, &ti)| ti * zi).collect();
        self.inner.solve_in_place(&mut q)?;
        Ok(z.iter()
            .zip(&q)
            .zip(t.iter().zip(d))
            .map(|((&zi, &qi), (&ti, &di))| zi - ti * qi / di)
            .collect())
    }
}

/// Solves `(T XᵀX T + n (I - T²)) u = rhs`.
///
/// Same arithmetic as [`MtFactor`], fused into one forward and one backward
/// sweep over two buffers; the off-diagonals of `M̃` are all `-1`.
pub fn mt_solve(scaling: &DiagonalScaling, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = scaling.len();
    if n == 0 {
        return Err(Error::InvalidInput("relaxation vector is empty".into()));
    }
    check_len(n, rhs.len())?;
    let DiagonalScaling { t, d } = scaling;
    let mut inv_pivot = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut prev_inv = 0.0;
    let mut prev_q = 0.0;
    for i in 0..n {
        let (ti, di) = (t[i], d[i]);
        let base = if i == 0 { 1.0 } else { 2.0 };
        let pivot = base + ti * ti / di - prev_inv;
        if !(pivot.abs() >= PIVOT_FLOOR) {
            return Err(Error::SingularSystem { row: i, pivot });
        }
        let inv = 1.0 / pivot;
        prev_q = (ti * rhs[i] / di + prev_q) * inv;
        inv_pivot[i] = inv;
        q[i] = prev_q;
        prev_inv = inv;
    }
    let mut next = 0.0;
    for i in (0..n).rev() {
        let qi = q[i] + inv_pivot[i] * next;
        next = qi;
        q[i] = (rhs[i] - t[i] * qi) / d[i];
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn design(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if j <= i { 1.0 } else { 0.0 })
    }

    fn dense(m: &Tridiagonal) -> DMatrix<f64> {
        let n = m.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                m.diag()[i]
            } else if i == j + 1 {
                m.lower()[j]
            } else if j == i + 1 {
                m.upper()[i]
            } else {
                0.0
            }
        })
    }

    fn dense_mt(t: &[f64]) -> DMatrix<f64> {
        let n = t.len();
        let x = design(n);
        let tt = DMatrix::from_diagonal(&DVector::from_column_slice(t));
        let ident = DMatrix::<f64>::identity(n, n);
        &tt * x.transpose() * &x * &tt + (ident - &tt * &tt) * n as f64
    }

    #[test]
    fn running_sums() {
        assert_eq!(prefix_sum(&[1.0, 2.0, 3.0]), [1.0, 3.0, 6.0]);
        assert_eq!(prefix_sum(&[0.0, 0.0, 0.0]), [0.0, 0.0, 0.0]);
        assert_eq!(prefix_sum(&[5.0]), [5.0]);
        assert_eq!(suffix_sum(&[1.0, 2.0, 3.0]), [6.0, 5.0, 3.0]);
        assert_eq!(suffix_sum(&[0.0, 0.0, 1.0]), [1.0, 1.0, 1.0]);
        assert_eq!(suffix_sum(&[5.0]), [5.0]);
        assert_eq!(gram_apply(&[1.0, 1.0, 1.0]), [6.0, 5.0, 3.0]);
        assert_eq!(gram_apply(&[1.0, 0.0]), [2.0, 1.0]);
        assert_eq!(gram_apply(&[0.0; 3]), [0.0; 3]);
    }

    #[test]
    fn closed_form_inverse_small_cases() {
        let a = xtx_inverse_tridiag(2);
        assert_eq!(a.diag(), [1.0, 2.0]);
        assert_eq!(a.lower(), [-1.0]);
        assert_eq!(a.upper(), [-1.0]);

        let a = xtx_inverse_tridiag(1);
        assert_eq!(a.diag(), [1.0]);
        assert!(a.lower().is_empty() && a.upper().is_empty());

        let x = design(3);
        let prod = dense(&xtx_inverse_tridiag(3)) * x.transpose() * x;
        let err = (prod - DMatrix::<f64>::identity(3, 3)).abs().max();
        assert!(err <= 1e-12);
    }

    #[test]
    fn band_lengths_are_checked() {
        assert!(Tridiagonal::new(vec![], vec![1.0], vec![]).is_ok());
        assert!(matches!(
            Tridiagonal::new(vec![1.0], vec![1.0], vec![]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Tridiagonal::new(vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn thomas_examples() {
        let u = thomas_solve(&Tridiagonal::identity(3), &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(u, [4.0, 5.0, 6.0]);

        // A · (XᵀX · 1) = 1, so solving A u = 1 must give XᵀX · 1.
        let expected = gram_apply(&[1.0, 1.0, 1.0]);
        let u = thomas_solve(&xtx_inverse_tridiag(3), &[1.0, 1.0, 1.0]).unwrap();
        for (a, b) in u.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn thomas_reports_singular_pivot() {
        let m = Tridiagonal::new(vec![1.0], vec![0.0, 1.0], vec![1.0]).unwrap();
        assert!(matches!(
            thomas_solve(&m, &[1.0, 1.0]),
            Err(Error::SingularSystem { row: 0, .. })
        ));
        // Second pivot is 1 - 1·1 = 0.
        let m = Tridiagonal::new(vec![1.0], vec![1.0, 1.0], vec![1.0]).unwrap();
        assert!(matches!(
            thomas_solve(&m, &[1.0, 1.0]),
            Err(Error::SingularSystem { row: 1, .. })
        ));
    }

    #[test]
    fn thomas_matches_dense_lu_random() {
        use rand_chacha::ChaCha8Rng;
        use rand_core::{RngCore, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut unif = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
        let n = 50;
        let lower: Vec<f64> = (0..n - 1).map(|_| unif()).collect();
        let upper: Vec<f64> = (0..n - 1).map(|_| unif()).collect();
        let diag: Vec<f64> = (0..n).map(|_| 3.0 + unif()).collect();
        let b: Vec<f64> = (0..n).map(|_| unif() * 10.0).collect();
        let m = Tridiagonal::new(lower, diag, upper).unwrap();
        let u = thomas_solve(&m, &b).unwrap();
        let reference = dense(&m)
            .lu()
            .solve(&DVector::from_column_slice(&b))
            .unwrap();
        for (a, r) in u.iter().zip(reference.iter()) {
            assert!((a - r).abs() <= 1e-9 * (1.0 + r.abs()));
        }
        let resid = m.matvec(&u).unwrap();
        let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (r, bi) in resid.iter().zip(&b) {
            assert!((r - bi).abs() <= 1e-8 * (1.0 + bmax));
        }
    }

    #[test]
    fn mt_solve_two_by_two() {
        // M = [[2.0, 0.25], [0.25, 1.75]] for t = (0.5, 0.5), n = 2.
        let dense_m = dense_mt(&[0.5, 0.5]);
        assert!((dense_m[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((dense_m[(0, 1)] - 0.25).abs() < 1e-15);
        assert!((dense_m[(1, 1)] - 1.75).abs() < 1e-15);

        let u = mt_solve(&DiagonalScaling::new(&[0.5, 0.5]), &[1.0, 0.0]).unwrap();
        let exact = [1.75 / 3.4375, -0.25 / 3.4375];
        assert!((u[0] - exact[0]).abs() < 1e-14);
        assert!((u[1] - exact[1]).abs() < 1e-14);
        assert!((u[0] - 0.509_090_909_090_909).abs() < 1e-12);
        assert!((u[1] + 0.072_727_272_727_272).abs() < 1e-12);
    }

    #[test]
    fn mt_solve_diagonal_limit() {
        let n = 7;
        let mut b = vec![0.0; n];
        b[0] = n as f64;
        let u = mt_solve(&DiagonalScaling::new(&vec![0.0; n]), &b).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12);
        assert!(u[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn scaling_clamps() {
        let s = DiagonalScaling::new(&[0.0, 1.0, f64::NAN, 0.3]);
        assert_eq!(s.t()[0], T_CLAMP);
        assert_eq!(s.t()[1], 1.0 - T_CLAMP);
        assert_eq!(s.t()[2], T_CLAMP);
        assert_eq!(s.t()[3], 0.3);
        assert!(s.d().iter().all(|&d| d > 0.0));
    }

    proptest! {
        #[test]
        fn sums_match_dense_products(v in proptest::collection::vec(-100i32..100, 1..64)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let n = v.len();
            let x = design(n);
            let dv = DVector::from_column_slice(&v);
            let xv = &x * &dv;
            let xtv = x.transpose() * &dv;
            let gv = x.transpose() * &x * &dv;
            prop_assert_eq!(prefix_sum(&v), xv.as_slice().to_vec());
            prop_assert_eq!(suffix_sum(&v), xtv.as_slice().to_vec());
            prop_assert_eq!(gram_apply(&v), gv.as_slice().to_vec());
        }

        #[test]
        fn sums_match_dense_products_real(v in proptest::collection::vec(-1.0f64..1.0, 1..64)) {
            let n = v.len();
            let x = design(n);
            let dv = DVector::from_column_slice(&v);
            let gv = x.transpose() * &x * &dv;
            for (a, b) in gram_apply(&v).iter().zip(gv.iter()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn mt_is_positive_definite(t in proptest::collection::vec(0.0f64..=1.0, 1..64)) {
            let s = DiagonalScaling::new(&t);
            prop_assert!(dense_mt(s.t()).cholesky().is_some());
        }

        #[test]
        fn mt_solve_matches_dense(
            tb in (2usize..=64).prop_flat_map(|n| (
                proptest::collection::vec(0.05f64..0.95, n),
                proptest::collection::vec(-10.0f64..10.0, n),
            ))
        ) {
            let (t, b) = tb;
            let u = mt_solve(&DiagonalScaling::new(&t), &b).unwrap();
            let reference = dense_mt(&t).lu().solve(&DVector::from_column_slice(&b)).unwrap();
            let err: f64 = u.iter().zip(reference.iter()).map(|(a, r)| (a - r).powi(2)).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-8 * reference.norm());
        }

        #[test]
        fn fused_solve_matches_factor(
            tb in (1usize..=200).prop_flat_map(|n| (
                proptest::collection::vec(0.0f64..=1.0, n),
                proptest::collection::vec(-10.0f64..10.0, n),
            ))
        ) {
            let (t, b) = tb;
            let s = DiagonalScaling::new(&t);
            let fused = mt_solve(&s, &b).unwrap();
            let factored = MtFactor::new(s).unwrap().solve(&b).unwrap();
            // Near-singular D for t close to 1 makes the two rounding orders
            // differ by up to cond · eps, so compare norm-wise.
            let scale = factored.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, r) in fused.iter().zip(&factored) {
                prop_assert!((a - r).abs() <= 1e-9 * scale, "{} vs {}", a, r);
            }
        }
    }
}
