//! Dense matrix helpers used while assembling LMIs.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Dense real matrix. Empty (0-row or 0-column) matrices are allowed everywhere.
pub type Mat = DMatrix<f64>;

/// Default relative rank tolerance for [`nullspace_basis`].
pub const RANK_TOL: f64 = 1e-9;

/// Symmetric matrix. The constructor replaces the input by `(M + Mᵀ)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat(Mat);

impl SymMat {
    pub fn new(m: Mat) -> Self {
        assert!(m.is_square(), "SymMat requires a square matrix");
        let t = m.transpose();
        SymMat((m + t) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        SymMat(Mat::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMat(Mat::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    /// Smallest eigenvalue; `+∞` for the empty matrix.
    pub fn lambda_min(&self) -> f64 {
        eig_extremes(&self.0).0
    }

    /// Largest eigenvalue; `−∞` for the empty matrix.
    pub fn lambda_max(&self) -> f64 {
        eig_extremes(&self.0).1
    }
}

/// (λ_min, λ_max) of a symmetric matrix.
pub fn eig_extremes(m: &Mat) -> (f64, f64) {
    if m.nrows() == 0 {
        return (f64::INFINITY, f64::NEG_INFINITY);
    }
    let e = SymmetricEigen::new(m.clone()).eigenvalues;
    let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

pub fn all_finite(m: &Mat) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Mat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s != 0.0 {
                out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * s));
            }
        }
    }
    out
}

pub fn blockdiag(parts: &[Mat]) -> Mat {
    let r: usize = parts.iter().map(|p| p.nrows()).sum();
    let c: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = Mat::zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for p in parts {
        out.view_mut((i, j), p.shape()).copy_from(p);
        i += p.nrows();
        j += p.ncols();
    }
    out
}

/// Block matrix with fixed row and column partitions; unset blocks are zero.
#[derive(Clone, Debug)]
pub struct Blocks {
    rows: Vec<usize>,
    cols: Vec<usize>,
    m: Mat,
}

impl Blocks {
    pub fn new(rows: &[usize], cols: &[usize]) -> Self {
        Blocks {
            rows: rows.to_vec(),
            cols: cols.to_vec(),
            m: Mat::zeros(rows.iter().sum(), cols.iter().sum()),
        }
    }

    fn offset(sizes: &[usize], k: usize) -> usize {
        sizes[..k].iter().sum()
    }

    /// Add `b` into block `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, b: &Mat) -> &mut Self {
        assert_eq!(
            (self.rows[i], self.cols[j]),
            b.shape(),
            "block ({i},{j}) has the wrong shape"
        );
        let (r0, c0) = (Self::offset(&self.rows, i), Self::offset(&self.cols, j));
        let mut v = self.m.view_mut((r0, c0), b.shape());
        v += b;
        self
    }

    pub fn set(&mut self, i: usize, j: usize, b: &Mat) -> &mut Self {
        assert_eq!((self.rows[i], self.cols[j]), b.shape(), "block ({i},{j}) has the wrong shape");
        let (r0, c0) = (Self::offset(&self.rows, i), Self::offset(&self.cols, j));
        self.m.view_mut((r0, c0), b.shape()).copy_from(b);
        self
    }

    pub fn identity(&mut self, i: usize, j: usize) -> &mut Self {
        let n = self.rows[i];
        self.set(i, j, &Mat::identity(n, n))
    }

    pub fn build(&self) -> Mat {
        self.m.clone()
    }
}

/// Horizontal concatenation; all parts must share a row count.
pub fn hcat(parts: &[&Mat]) -> Mat {
    let r = parts.first().map_or(0, |p| p.nrows());
    let c: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = Mat::zeros(r, c);
    let mut j = 0;
    for p in parts {
        assert_eq!(p.nrows(), r, "hcat row mismatch");
        out.view_mut((0, j), p.shape()).copy_from(*p);
        j += p.ncols();
    }
    out
}

/// Vertical concatenation; all parts must share a column count.
pub fn vcat(parts: &[&Mat]) -> Mat {
    let c = parts.first().map_or(0, |p| p.ncols());
    let r: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = Mat::zeros(r, c);
    let mut i = 0;
    for p in parts {
        assert_eq!(p.ncols(), c, "vcat column mismatch");
        out.view_mut((i, 0), p.shape()).copy_from(*p);
        i += p.nrows();
    }
    out
}

/// Orthonormal basis of the numerical kernel of `m`.
///
/// Singular values at or below `tol · σ_max` count as zero.
pub fn nullspace_basis(m: &Mat, tol: f64) -> Mat {
    let (r, c) = m.shape();
    if c == 0 {
        return Mat::zeros(0, 0);
    }
    if r == 0 {
        return Mat::identity(c, c);
    }
    // pad to square so the SVD returns the full right singular basis
    let mut sq = Mat::zeros(r.max(c), c);
    sq.view_mut((0, 0), (r, c)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("svd v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = tol * smax;
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax == 0.0 || svd.singular_values[i] <= cut)
        .collect();
    let mut out = Mat::zeros(c, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        out.set_column(k, &vt.row(i).transpose());
    }
    out
}

/// `λ_max(m) ≤ −margin`, and strictly negative even when `margin` is 0.
pub fn assert_negdef(m: &SymMat, margin: f64) -> bool {
    if m.dim() == 0 {
        return true;
    }
    let l = m.lambda_max();
    l < 0.0 && l <= -margin
}

/// `λ_min(m) ≥ margin`, and strictly positive even when `margin` is 0.
pub fn assert_posdef(m: &SymMat, margin: f64) -> bool {
    if m.dim() == 0 {
        return true;
    }
    let l = m.lambda_min();
    l > 0.0 && l >= margin
}

/// Schur complement `A − B C⁻¹ Bᵀ` of `m = [A B; Bᵀ C]` with `A` of size `split`.
pub fn schur_reduce(m: &SymMat, split: usize) -> Result<SymMat> {
    let n = m.dim();
    if split > n {
        return Err(Error::Dimension(format!("split {split} exceeds dimension {n}")));
    }
    let t = n - split;
    let mm = m.as_mat();
    let a = mm.view((0, 0), (split, split)).into_owned();
    if t == 0 {
        return Ok(SymMat::new(a));
    }
    let b = mm.view((0, split), (split, t)).into_owned();
    let c = mm.view((split, split), (t, t)).into_owned();
    let (lo, hi) = eig_extremes(&c);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let definite = (lo > 0.0 || hi < 0.0) && lo.abs().min(hi.abs()) > 1e-12 * scale;
    if !definite {
        return Err(Error::SchurPivotSingular);
    }
    let cinv_bt = c
        .lu()
        .solve(&b.transpose())
        .ok_or(Error::SchurPivotSingular)?;
    Ok(SymMat::new(a - b * cinv_bt))
}

/// Powers `a⁰ … a^k`.
pub fn powers(a: &Mat, k: usize) -> Vec<Mat> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(Mat::identity(a.nrows(), a.ncols()));
    for i in 0..k {
        let next = a * &out[i];
        out.push(next);
    }
    out
}

/// Reciprocal 1-norm condition estimate via explicit inverse; 0 for singular input.
pub fn rcond(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let norm1 = |x: &Mat| {
        (0..x.ncols())
            .map(|j| x.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match m.clone().try_inverse() {
        Some(inv) => {
            let r = 1.0 / (norm1(m) * norm1(&inv));
            if r.is_finite() {
                r
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Power-of-two diagonal `s` balancing the off-diagonal row and column sums of
/// `Σ |Mᵢ|` under `x = diag(s) x̃`; normalized so that `max sᵢ = 1`.
pub fn balance_scaling(mats: &[&Mat]) -> Vec<f64> {
    let n = mats.first().map_or(0, |m| m.nrows());
    let mut b = Mat::zeros(n, n);
    for m in mats {
        b += m.abs();
    }
    let mut s = vec![1.0; n];
    for _ in 0..100 {
        let mut done = true;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&j| j != i).map(|j| b[(j, i)]).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| b[(i, j)]).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / 2.0 {
                cc *= 2.0;
                rr /= 2.0;
                f *= 2.0;
            }
            while cc > rr * 2.0 {
                cc /= 2.0;
                rr *= 2.0;
                f /= 2.0;
            }
            if (cc + rr) < 0.95 * (c + r) {
                done = false;
                s[i] *= f;
                for j in 0..n {
                    b[(j, i)] *= f;
                    b[(i, j)] /= f;
                }
            }
        }
        if done {
            break;
        }
    }
    let top = s.iter().cloned().fold(0.0, f64::max);
    if top > 0.0 {
        s.iter_mut().for_each(|v| *v /= top);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn kron_identity_and_unit() {
        let k = kron(&Mat::identity(2, 2), &Mat::from_element(1, 1, 5.0));
        assert_eq!(k, Mat::from_diagonal_element(2, 2, 5.0));
        let e = Mat::from_row_slice(2, 1, &[1.0, 0.0]);
        let k = kron(&e, &Mat::identity(2, 2));
        assert_eq!(k, Mat::from_row_slice(4, 2, &[1., 0., 0., 1., 0., 0., 0., 0.]));
    }

    #[test]
    fn kron_identity_matches_blockdiag() {
        let p = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -3.0]);
        let k = kron(&Mat::identity(3, 3), &p);
        assert_eq!(k, blockdiag(&[p.clone(), p.clone(), p]));
    }

    #[test]
    fn blockdiag_cases() {
        assert_eq!(blockdiag(&[]).shape(), (0, 0));
        let d = blockdiag(&[Mat::identity(2, 2), -Mat::identity(1, 1)]);
        assert_eq!(d, Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1., 1., -1.])));
        let q = Mat::identity(3, 3);
        let r = Mat::identity(2, 2);
        assert_eq!(blockdiag(&[q, r]).shape(), (5, 5));
    }

    #[test]
    fn nullspace_simple() {
        let n = nullspace_basis(&Mat::from_row_slice(1, 2, &[1.0, 0.0]), RANK_TOL);
        assert_eq!(n.shape(), (2, 1));
        assert!(n[(0, 0)].abs() < 1e-14);
        assert!((n[(1, 0)].abs() - 1.0).abs() < 1e-14);
        assert_eq!(nullspace_basis(&Mat::identity(3, 3), RANK_TOL).shape(), (3, 0));
    }

    #[test]
    fn nullspace_random_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let r = rng.gen_range(1..5);
            let c = rng.gen_range(1..7);
            let k = rng.gen_range(1..4);
            // rank-deficient by construction
            let m = rand_mat(&mut rng, r, k) * rand_mat(&mut rng, k, c);
            let n = nullspace_basis(&m, RANK_TOL);
            assert_eq!(n.ncols(), c - k.min(r).min(c));
            assert!((&m * &n).norm() <= 10.0 * RANK_TOL * m.norm() + 1e-12);
            let g = n.transpose() * &n;
            assert!((g - Mat::identity(n.ncols(), n.ncols())).norm() < 1e-10);
        }
    }

    #[test]
    fn negdef_cases() {
        assert!(assert_negdef(&SymMat::new(-Mat::identity(2, 2)), 0.5));
        assert!(!assert_negdef(&SymMat::zeros(1), 0.0));
        assert!(assert_posdef(&SymMat::identity(2), 1.0));
        assert!(!assert_posdef(&SymMat::zeros(1), 0.0));
    }

    #[test]
    fn negdef_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = rand_mat(&mut rng, 4, 4);
            let m = SymMat::new(-(&a * a.transpose()) - Mat::identity(4, 4) * 0.1);
            let eps = -m.lambda_max();
            assert!(assert_negdef(&m, eps * 0.999));
            for _ in 0..20 {
                let x: nalgebra::DVector<f64> = nalgebra::DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
                let x = &x / x.norm();
                let q = (x.transpose() * m.as_mat() * &x)[(0, 0)];
                assert!(q <= -eps + 1e-9);
            }
        }
    }

    #[test]
    fn schur_scalar_and_decoupled() {
        let b = 0.7;
        let a = 0.3;
        let s = schur_reduce(&SymMat::new(Mat::from_row_slice(2, 2, &[a, b, b, -1.0])), 1).unwrap();
        assert!((s.as_mat()[(0, 0)] - (a + b * b)).abs() < 1e-15);
        let aa = Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let s = schur_reduce(&SymMat::new(blockdiag(&[aa.clone(), -Mat::identity(3, 3)])), 2).unwrap();
        assert!((s.as_mat() - aa).norm() < 1e-15);
        let bad = SymMat::new(blockdiag(&[Mat::identity(1, 1), Mat::from_row_slice(2, 2, &[1., 0., 0., -1.])]));
        assert!(matches!(schur_reduce(&bad, 1), Err(Error::SchurPivotSingular)));
    }

    #[test]
    fn schur_sign_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 100 {
            let a = rand_mat(&mut rng, 6, 6);
            let m = SymMat::new(a.clone() + a.transpose() - Mat::identity(6, 6) * rng.gen_range(0.0..4.0));
            let c = m.as_mat().view((3, 3), (3, 3)).into_owned();
            let (_, chi) = eig_extremes(&c);
            if chi >= -1e-6 {
                continue;
            }
            let s = schur_reduce(&m, 3).unwrap();
            let lhs = m.lambda_max() < 0.0;
            let rhs = s.lambda_max() < 0.0;
            assert_eq!(lhs, rhs);
            checked += 1;
        }
    }

    #[test]
    fn rcond_identity_and_singular() {
        assert!((rcond(&Mat::identity(3, 3)) - 1.0).abs() < 1e-15);
        assert_eq!(rcond(&Mat::zeros(2, 2)), 0.0);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn mat3() -> impl Strategy<Value = Mat> {
            proptest::collection::vec(-2.0f64..2.0, 9).prop_map(|v| Mat::from_row_slice(3, 3, &v))
        }

        proptest! {
            #[test]
            fn kron_mixed_product(a in mat3(), b in mat3(), c in mat3(), d in mat3()) {
                let lhs = kron(&a, &b) * kron(&c, &d);
                let rhs = kron(&(&a * &c), &(&b * &d));
                prop_assert!((lhs - rhs).norm() < 1e-10);
            }

            #[test]
            fn kron_bilinear(a in mat3(), b in mat3(), c in mat3(), s in -3.0f64..3.0) {
                let lhs = kron(&(&a * s + &c), &b);
                let rhs = kron(&a, &b) * s + kron(&c, &b);
                prop_assert!((lhs - rhs).norm() < 1e-10);
            }

            #[test]
            fn symmat_is_symmetric(a in mat3()) {
                let s = SymMat::new(a);
                prop_assert_eq!(s.as_mat().clone(), s.as_mat().transpose());
            }
        }
    }

    #[test]
    fn balancing_equalizes_skewed_rotation() {
        let a = Mat::from_row_slice(2, 2, &[0.0, -10.0, 0.1, 0.0]);
        let s = balance_scaling(&[&a]);
        assert_eq!(s, vec![1.0, 0.125]);
        let t = Mat::from_diagonal(&DVector::from_vec(s.clone()));
        let ti = Mat::from_diagonal(&DVector::from_vec(s.iter().map(|v| 1.0 / v).collect()));
        let b = &ti * &a * &t;
        assert!(b[(0, 1)].abs() < 2.0 && b[(1, 0)].abs() < 2.0);
        assert_eq!(balance_scaling(&[&Mat::identity(3, 3)]), vec![1.0; 3]);
    }
}
