//! Dense matrix primitives used by every update rule.
//!
//! Everything here is deterministic: identical inputs give bitwise-identical
//! outputs, and all randomness flows through [`RngSeed`], which drives a
//! ChaCha8 stream.

use std::fmt;
use std::ops::{Index, IndexMut};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(
                "Matrix::new",
                format!("{} elements", rows * cols),
                format!("{} elements", data.len()),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::dims("Matrix::from_rows", cols, format!("{} in row {i}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Matrix with entries drawn i.i.d. from N(0, 1).
    pub fn gaussian(rows: usize, cols: usize, seed: RngSeed) -> Self {
        let mut rng = seed.rng();
        let data = (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::dims("matmul", format!("{} rows", self.cols), format!("{} rows", rhs.rows)));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * rhs` without materializing the transpose.
    pub fn t_matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows {
            return Err(Error::dims("t_matmul", format!("{} rows", self.rows), format!("{} rows", rhs.rows)));
        }
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = rhs.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * self`.
    pub fn gram(&self) -> Matrix {
        self.t_matmul(self).expect("gram shapes always agree")
    }

    fn check_same_shape(&self, other: &Matrix, context: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                context,
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(())
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "sub")?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "add")?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_map(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    /// `‖self − other‖²_F` without allocating the difference.
    pub fn dist_sq(&self, other: &Matrix) -> Result<f64> {
        self.check_same_shape(other, "dist_sq")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        self.check_same_shape(other, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Rows picked by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Index of the largest entry in each row; ties go to the lowest index.
    pub fn row_argmax(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|r| {
                let mut best = 0;
                for (c, &v) in self.row(r).iter().enumerate() {
                    if v > self.row(r)[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    /// IEEE-754 bit patterns, for bitwise comparisons.
    pub fn to_bits(&self) -> Vec<u64> {
        self.data.iter().map(|v| v.to_bits()).collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Seed for the repository's only random source (ChaCha8).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent child seed for a named sub-stream (splitmix64 finalizer).
    pub fn derive(self, stream: u64) -> RngSeed {
        let mut z = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }

    pub fn derive2(self, a: u64, b: u64) -> RngSeed {
        self.derive(a).derive(b)
    }
}

/// Solves `A X = B` for symmetric positive-definite `A` by a square-root-free
/// Cholesky (`LDLᵀ`) factorization, followed by iterative refinement when the
/// residual is above `1e-8·(1+‖B‖_max)`.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if n == 0 || a.cols() != n {
        return Err(Error::dims("solve_spd", "square non-empty A", format!("{}x{}", a.rows(), a.cols())));
    }
    if b.rows() != n {
        return Err(Error::dims("solve_spd", format!("{n} rows in B"), format!("{} rows", b.rows())));
    }
    let scale = a.max_abs();
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }

    let (l, d) = ldl(a)?;
    let mut x = ldl_solve(&l, &d, b);

    let bound = 1e-8 * (1.0 + b.max_abs());
    for _ in 0..3 {
        let r = b.sub(&a.matmul(&x)?)?;
        if r.max_abs() <= 0.5 * bound {
            break;
        }
        let dx = ldl_solve(&l, &d, &r);
        x = x.add(&dx)?;
    }
    Ok(x)
}

/// Unit lower-triangular `L` and diagonal `D` with `A = L D Lᵀ` (only the
/// lower triangle of `a` is read).
fn ldl(a: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let n = a.rows();
    let mut l = Matrix::identity(n);
    let mut d = vec![0.0; n];
    for j in 0..n {
        let mut dj = a[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if !(dj > 0.0) || !dj.is_finite() {
            return Err(Error::NotSpd { pivot: j, value: dj });
        }
        d[j] = dj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok((l, d))
}

fn ldl_solve(l: &Matrix, d: &[f64], b: &Matrix) -> Matrix {
    let n = l.rows();
    let m = b.cols();
    let mut x = b.clone();
    // L y = b
    for i in 0..n {
        for c in 0..m {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s;
        }
    }
    // D Lᵀ x = y
    for i in (0..n).rev() {
        for c in 0..m {
            let mut s = x[(i, c)] / d[i];
            for k in i + 1..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s;
        }
    }
    x
}

/// `n×c` matrix with orthonormal columns: Householder QR of a seeded
/// Gaussian draw, with signs fixed so that `diag(R) ≥ 0`.
pub fn orthonormal_init(n: usize, c: usize, seed: RngSeed) -> Result<Matrix> {
    if c == 0 || n < c {
        return Err(Error::InvalidShape(format!(
            "orthonormal columns need n >= c >= 1, got n={n}, c={c}"
        )));
    }
    let mut r = Matrix::gaussian(n, c, seed);
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(c);

    for j in 0..c {
        let norm = (j..n).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>().sqrt();
        let mut v: Vec<f64> = (j..n).map(|i| r[(i, j)]).collect();
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq > 0.0 {
            for col in j..c {
                let dot: f64 = (j..n).map(|i| v[i - j] * r[(i, col)]).sum();
                let f = 2.0 * dot / vnorm_sq;
                for i in j..n {
                    r[(i, col)] -= f * v[i - j];
                }
            }
        }
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{c-1} applied to the first c columns of I.
    let mut q = Matrix::from_fn(n, c, |i, j| if i == j { 1.0 } else { 0.0 });
    for j in (0..c).rev() {
        let v = &reflectors[j];
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        for col in 0..c {
            let dot: f64 = (j..n).map(|i| v[i - j] * q[(i, col)]).sum();
            let f = 2.0 * dot / vnorm_sq;
            for i in j..n {
                q[(i, col)] -= f * v[i - j];
            }
        }
    }

    for j in 0..c {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}

/// ℓ₂ norm of every row.
pub fn row_l2_norms(m: &Matrix) -> Vec<f64> {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spd(n: usize, delta: f64, seed: u64) -> Matrix {
        let g = Matrix::gaussian(n, n, RngSeed(seed));
        let mut a = g.gram();
        for i in 0..n {
            a[(i, i)] += delta;
        }
        a
    }

    #[test]
    fn solve_identity_and_scalar() {
        let x = solve_spd(&Matrix::identity(2), &Matrix::from_rows(&[&[1.0], &[2.0]]).unwrap()).unwrap();
        assert_eq!(x.data(), &[1.0, 2.0]);
        let x = solve_spd(&Matrix::from_rows(&[&[2.0]]).unwrap(), &Matrix::from_rows(&[&[4.0]]).unwrap()).unwrap();
        assert_eq!(x.data(), &[2.0]);
    }

    #[test]
    fn solve_random_8x8_residual() {
        let a = spd(8, 1.0, 3);
        let b = Matrix::gaussian(8, 3, RngSeed(4));
        let x = solve_spd(&a, &b).unwrap();
        let r = a.matmul(&x).unwrap().sub(&b).unwrap();
        assert!(r.max_abs() < 1e-8);
    }

    #[test]
    fn solve_rejects_non_spd_and_bad_shapes() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        let b = Matrix::zeros(2, 1);
        assert!(matches!(solve_spd(&a, &b), Err(Error::NotSpd { .. })));
        assert!(matches!(
            solve_spd(&Matrix::identity(2), &Matrix::zeros(3, 1)),
            Err(Error::DimensionMismatch { .. })
        ));
        let asym = Matrix::from_rows(&[&[2.0, 1.0], &[0.0, 2.0]]).unwrap();
        assert!(matches!(solve_spd(&asym, &b), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn orthonormal_definition_and_determinism() {
        let m = orthonormal_init(10, 3, RngSeed(7)).unwrap();
        let g = m.gram();
        assert!(g.max_abs_diff(&Matrix::identity(3)).unwrap() <= 1e-10);
        let again = orthonormal_init(10, 3, RngSeed(7)).unwrap();
        assert_eq!(m.to_bits(), again.to_bits());
        assert!(matches!(orthonormal_init(2, 3, RngSeed(7)), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn row_norms() {
        assert_eq!(row_l2_norms(&Matrix::from_rows(&[&[3.0, 4.0]]).unwrap()), vec![5.0]);
        assert_eq!(row_l2_norms(&Matrix::zeros(2, 2)), vec![0.0, 0.0]);
        assert_eq!(row_l2_norms(&Matrix::identity(2)), vec![1.0, 1.0]);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        let m = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 2.0], &[3.0, -1.0]]).unwrap();
        assert_eq!(m.row_argmax(), vec![0, 1, 0]);
    }

    #[test]
    fn derived_seeds_differ() {
        let s = RngSeed(1);
        assert_ne!(s.derive(0), s.derive(1));
        assert_eq!(s.derive(5), s.derive(5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn solve_spd_residual_bound(n in 1usize..=64, m in 1usize..4, exp in -6i32..2, seed in any::<u64>()) {
            let delta = 10f64.powi(exp);
            let a = spd(n, delta, seed);
            let b = Matrix::gaussian(n, m, RngSeed(seed ^ 0xABCD));
            let x = solve_spd(&a, &b).unwrap();
            let r = a.matmul(&x).unwrap().sub(&b).unwrap();
            prop_assert!(r.max_abs() <= 1e-8 * (1.0 + b.max_abs()));
            let x2 = solve_spd(&a, &b).unwrap();
            prop_assert_eq!(x.to_bits(), x2.to_bits());
        }

        #[test]
        fn orthonormal_gram(n in 1usize..=256, frac in 0.0f64..1.0, seed in any::<u64>()) {
            let c = 1 + ((n - 1) as f64 * frac) as usize;
            let m = orthonormal_init(n, c, RngSeed(seed)).unwrap();
            prop_assert!(m.gram().max_abs_diff(&Matrix::identity(c)).unwrap() <= 1e-10);
        }
    }
}
