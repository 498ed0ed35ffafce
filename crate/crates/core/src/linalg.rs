//! Small dense linear algebra: rank and nullspace by pivoted elimination,
//! projected eigenvalues by Jacobi rotations, and min-norm least squares.
//!
//! Everything here runs on matrices of at most a few dozen rows, so the
//! O(n^3) textbook algorithms are the right tool.

use crate::tol::RANK_TOL;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Mirrors the lower triangle onto the upper so the result is
    /// bitwise symmetric.
    pub fn symmetrized(&self) -> Mat {
        assert_eq!(self.rows, self.cols);
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in 0..i {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                s.set(i, j, v);
                s.set(j, i, v);
            }
        }
        s
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..i {
                if self.get(i, j) != self.get(j, i) {
                    return false;
                }
            }
        }
        true
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Rank and an orthonormal nullspace basis.
///
/// Elimination pivots on the largest remaining column entry; entries below
/// `tol * max_abs` count as zero.
pub fn rank_and_nullspace(a: &Mat, tol: f64) -> (usize, Vec<Vec<f64>>) {
    let (r, c) = (a.rows(), a.cols());
    let threshold = tol * a.max_abs().max(1e-300);
    let mut m = a.clone();
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..c {
        if row >= r {
            break;
        }
        // find pivot in this column at or below `row`
        let (mut best, mut best_val) = (row, m.get(row, col).abs());
        for i in row + 1..r {
            let v = m.get(i, col).abs();
            if v > best_val {
                best = i;
                best_val = v;
            }
        }
        if best_val <= threshold {
            continue;
        }
        // swap rows
        if best != row {
            for j in 0..c {
                let tmp = m.get(row, j);
                m.set(row, j, m.get(best, j));
                m.set(best, j, tmp);
            }
        }
        // eliminate
        let p = m.get(row, col);
        for i in 0..r {
            if i == row {
                continue;
            }
            let f = m.get(i, col) / p;
            if f != 0.0 {
                for j in col..c {
                    let v = m.get(i, j) - f * m.get(row, j);
                    m.set(i, j, v);
                }
            }
        }
        pivot_cols.push((row, col));
        row += 1;
    }
    let rank = pivot_cols.len();
    // free columns produce nullspace vectors by back substitution
    let pivot_set: Vec<usize> = pivot_cols.iter().map(|&(_, c)| c).collect();
    let mut basis = Vec::new();
    for free in 0..c {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![0.0; c];
        v[free] = 1.0;
        for &(prow, pcol) in pivot_cols.iter().rev() {
            v[pcol] = -m.get(prow, free) / m.get(prow, pcol);
        }
        basis.push(v);
    }
    (rank, orthonormalize(&basis, tol))
}

/// Modified Gram-Schmidt; vectors that collapse below `tol` are dropped.
pub fn orthonormalize(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for q in &out {
            let p = dot(&w, q);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= p * qi;
            }
        }
        let n = norm2(&w);
        if n > tol * norm2(v).max(1.0) {
            out.push(scale(&w, 1.0 / n));
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(sym: &Mat) -> Vec<f64> {
    assert_eq!(sym.rows(), sym.cols());
    let n = sym.rows();
    if n == 0 {
        return Vec::new();
    }
    let mut a = sym.symmetrized();
    let scale = a.max_abs().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(a.get(i, j).abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    (0..n).map(|i| a.get(i, i)).collect()
}

/// Minimum eigenvalue of `H` restricted to the span of `basis`.
///
/// An empty basis makes the restriction vacuously positive-definite, which
/// the infinity sentinel encodes.
pub fn projected_min_eigenvalue(h: &Mat, basis: &[Vec<f64>]) -> f64 {
    let q = orthonormalize(basis, RANK_TOL);
    if q.is_empty() {
        return f64::INFINITY;
    }
    let k = q.len();
    let mut b = Mat::zeros(k, k);
    for i in 0..k {
        let hqi = h.matvec(&q[i]);
        for j in 0..k {
            b.set(i, j, dot(&q[j], &hqi));
        }
    }
    jacobi_eigenvalues(&b.symmetrized())
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Min-norm least-squares solution of `A x = b`.
///
/// Returns the solution together with a flag telling whether the system is
/// consistent (residual below `tol` relative to the data).
pub fn least_squares_min_norm(a: &Mat, b: &[f64], tol: f64) -> (Vec<f64>, bool) {
    assert_eq!(a.rows(), b.len());
    // Orthonormalize the rows, carrying the right-hand side along.
    let mut qs: Vec<Vec<f64>> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let scale_bound = a.max_abs().max(norm_inf(b)).max(1.0);
    for i in 0..a.rows() {
        let mut w = a.row(i).to_vec();
        let mut beta = b[i];
        for (q, bq) in qs.iter().zip(&betas) {
            let p = dot(&w, q);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= p * qi;
            }
            beta -= p * bq;
        }
        let n = norm2(&w);
        if n > tol * scale_bound {
            betas.push(beta / n);
            qs.push(scale(&w, 1.0 / n));
        } else if beta.abs() > tol * scale_bound {
            // dependent row with incompatible right-hand side
            let x = combine(&qs, &betas, a.cols());
            return (x, false);
        }
    }
    (combine(&qs, &betas, a.cols()), true)
}

fn combine(qs: &[Vec<f64>], betas: &[f64], n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (q, b) in qs.iter().zip(betas) {
        for (xi, qi) in x.iter_mut().zip(q) {
            *xi += b * qi;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_has_full_rank() {
        let (rank, ns) = rank_and_nullspace(&Mat::identity(3), RANK_TOL);
        assert_eq!(rank, 3);
        assert!(ns.is_empty());
    }

    #[test]
    fn repeated_column_entries_rank_one() {
        // 2x1 matrix with entries [1, 1]^T
        let a = Mat::from_rows(&[vec![1.0], vec![1.0]]);
        let (rank, _) = rank_and_nullspace(&a, RANK_TOL);
        assert_eq!(rank, 1);
    }

    #[test]
    fn low_rank_product_nullspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let b: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let c: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let mut a = Mat::zeros(4, 6);
            for i in 0..4 {
                for j in 0..6 {
                    a.set(i, j, dot(&b[i], &c[j]));
                }
            }
            let (rank, ns) = rank_and_nullspace(&a, RANK_TOL);
            assert_eq!(rank, 2);
            assert_eq!(ns.len(), 4);
            for v in &ns {
                assert!(norm_inf(&a.matvec(v)) < 1e-9);
            }
        }
    }

    #[test]
    fn projected_eigenvalue_identity() {
        let h = Mat::identity(3);
        let basis = vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]];
        assert!((projected_min_eigenvalue(&h, &basis) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projected_eigenvalue_hides_negative_direction() {
        let mut h = Mat::zeros(2, 2);
        h.set(0, 0, 1.0);
        h.set(1, 1, -1.0);
        let basis = vec![vec![1.0, 0.0]];
        assert!((projected_min_eigenvalue(&h, &basis) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_basis_is_vacuous() {
        let h = Mat::identity(2);
        assert_eq!(projected_min_eigenvalue(&h, &[]), f64::INFINITY);
    }

    #[test]
    fn projected_eigenvalue_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 5;
            let mut h = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.gen_range(-1.0..1.0);
                    h.set(i, j, v);
                    h.set(j, i, v);
                }
            }
            let basis: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let ours = projected_min_eigenvalue(&h, &basis);

            // independent oracle: nalgebra eigendecomposition of Z^T H Z
            let q = orthonormalize(&basis, RANK_TOL);
            let k = q.len();
            let mut b = nalgebra::DMatrix::<f64>::zeros(k, k);
            for i in 0..k {
                let hqi = h.matvec(&q[i]);
                for j in 0..k {
                    b[(i, j)] = dot(&q[j], &hqi);
                }
            }
            let sym = nalgebra::SymmetricEigen::new(b);
            let oracle = sym.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!((ours - oracle).abs() < 1e-9, "{ours} vs {oracle}");
        }
    }

    #[test]
    fn eigenvalue_monotone_under_subspace_shrinking() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let n = 5;
            let mut h = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.gen_range(-1.0..1.0);
                    h.set(i, j, v);
                    h.set(j, i, v);
                }
            }
            let big: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let small = vec![big[0].clone(), big[1].clone()];
            assert!(
                projected_min_eigenvalue(&h, &small)
                    >= projected_min_eigenvalue(&h, &big) - 1e-9
            );
        }
    }

    #[test]
    fn min_norm_least_squares() {
        let a = Mat::from_rows(&[vec![1.0, 1.0]]);
        let (x, ok) = least_squares_min_norm(&a, &[2.0], 1e-12);
        assert!(ok);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
