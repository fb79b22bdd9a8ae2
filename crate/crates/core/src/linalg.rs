//! Dense linear algebra used by the moment solvers.
//!
//! Exact systems go through Bareiss' fraction-free elimination on the
//! integer-scaled rows; float systems use partial pivoting.

use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn mul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        Matrix::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = S::zero();
            for k in 0..self.cols {
                acc += &(self[(i, k)].clone() * &other[(k, j)]);
            }
            acc
        })
    }

    pub fn max_abs(&self) -> S {
        let mut m = S::zero();
        for v in &self.data {
            let a = v.abs();
            if a > m {
                m = a;
            }
        }
        m
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// Threshold below which a float pivot is treated as zero.
fn pivot_floor<S: Scalar>(scale: &S, n: usize) -> S {
    scale.clone() * S::epsilon() * S::from_usize(1024 * n.max(1))
}

fn argmax_pivot<S: Scalar>(m: &Matrix<S>, col: usize, from: usize) -> (usize, S) {
    let mut best = from;
    let mut best_abs = m[(from, col)].abs();
    for i in from + 1..m.rows() {
        let a = m[(i, col)].abs();
        if a > best_abs {
            best = i;
            best_abs = a;
        }
    }
    (best, best_abs)
}

pub fn pivoted_solve<S: Scalar>(mut a: Matrix<S>, mut b: Vec<S>) -> Option<Vec<S>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let floor = pivot_floor(&a.max_abs(), n);
    for k in 0..n {
        let (p, pabs) = argmax_pivot(&a, k, k);
        if pabs <= floor || pabs.is_zero() {
            return None;
        }
        a.swap_rows(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            if a[(i, k)].is_zero() {
                continue;
            }
            let f = a[(i, k)].clone() / &a[(k, k)];
            for j in k + 1..n {
                let t = f.clone() * &a[(k, j)];
                a[(i, j)] -= &t;
            }
            let t = f * &b[k];
            b[i] -= &t;
            a[(i, k)] = S::zero();
        }
    }
    back_substitute(&a, b)
}

fn back_substitute<S: Scalar>(a: &Matrix<S>, b: Vec<S>) -> Option<Vec<S>> {
    let n = b.len();
    let mut x = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut acc = b[i].clone();
        for j in i + 1..n {
            acc -= &(a[(i, j)].clone() * &x[j]);
        }
        x[i] = acc / &a[(i, i)];
    }
    Some(x)
}

pub fn pivoted_det<S: Scalar>(mut a: Matrix<S>) -> S {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut det = S::one();
    for k in 0..n {
        let (p, pabs) = argmax_pivot(&a, k, k);
        if pabs.is_zero() {
            return S::zero();
        }
        if p != k {
            a.swap_rows(k, p);
            det = -det;
        }
        det *= &a[(k, k)];
        for i in k + 1..n {
            if a[(i, k)].is_zero() {
                continue;
            }
            let f = a[(i, k)].clone() / &a[(k, k)];
            for j in k + 1..n {
                let t = f.clone() * &a[(k, j)];
                a[(i, j)] -= &t;
            }
        }
    }
    det
}

/// Scales each row to integers; returns the integer rows and the row multipliers.
fn integer_rows(a: &Matrix<BigRational>, b: Option<&[BigRational]>) -> (Vec<Vec<BigInt>>, Vec<BigInt>) {
    let mut rows = Vec::with_capacity(a.rows());
    let mut scales = Vec::with_capacity(a.rows());
    for i in 0..a.rows() {
        let mut l = BigInt::one();
        for v in a.row(i).iter().chain(b.map(|b| &b[i])) {
            l = l.lcm(v.denom());
        }
        let mut row: Vec<BigInt> = a.row(i).iter().map(|v| (v.numer() * &l) / v.denom()).collect();
        if let Some(b) = b {
            row.push((b[i].numer() * &l) / b[i].denom());
        }
        rows.push(row);
        scales.push(l);
    }
    (rows, scales)
}

/// Fraction-free forward elimination in place. Returns the row-swap parity,
/// or `None` if the leading `n` columns are singular.
fn bareiss_eliminate(m: &mut [Vec<BigInt>], n: usize) -> Option<bool> {
    let width = m.first().map_or(0, Vec::len);
    let mut prev = BigInt::one();
    let mut odd = false;
    for k in 0..n {
        let p = (k..n).find(|&i| !m[i][k].is_zero())?;
        if p != k {
            m.swap(p, k);
            odd = !odd;
        }
        for i in k + 1..n {
            for j in k + 1..width {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    Some(odd)
}

pub fn bareiss_solve(a: Matrix<BigRational>, b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    if n == 0 {
        return Some(Vec::new());
    }
    let (mut m, _) = integer_rows(&a, Some(&b));
    bareiss_eliminate(&mut m, n)?;
    let mut x = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = BigRational::from_integer(m[i][n].clone());
        for j in i + 1..n {
            acc -= BigRational::from_integer(m[i][j].clone()) * &x[j];
        }
        x[i] = acc / BigRational::from_integer(m[i][i].clone());
    }
    Some(x)
}

pub fn bareiss_det(a: Matrix<BigRational>) -> BigRational {
    let n = a.rows();
    assert_eq!(n, a.cols());
    if n == 0 {
        return BigRational::one();
    }
    let (mut m, scales) = integer_rows(&a, None);
    let Some(odd) = bareiss_eliminate(&mut m, n) else {
        return BigRational::zero();
    };
    let scale: BigInt = scales.iter().product();
    let det = BigRational::new(m[n - 1][n - 1].clone(), scale);
    if odd {
        -det
    } else {
        det
    }
}

/// Failure modes of [`solve_consistent`].
#[derive(Clone, Debug, PartialEq)]
pub enum ConsistencyError<S> {
    RankDeficient,
    /// Largest residual of the rows not used for pivots.
    Inconsistent(S),
}

/// Solves an overdetermined `m x k` system that is expected to be consistent,
/// checking the unused rows against `tol` (relative to the largest entry).
pub fn solve_consistent<S: Scalar>(
    mut a: Matrix<S>,
    mut b: Vec<S>,
    tol: &S,
) -> Result<Vec<S>, ConsistencyError<S>> {
    let (m, k) = (a.rows(), a.cols());
    assert!(m >= k);
    let scale = {
        let mut s = a.max_abs();
        for v in &b {
            if v.abs() > s {
                s = v.abs();
            }
        }
        s
    };
    let floor = if S::EXACT { S::zero() } else { pivot_floor(&scale, m) };
    for c in 0..k {
        let (p, pabs) = argmax_pivot(&a, c, c);
        if pabs.is_zero() || pabs <= floor {
            return Err(ConsistencyError::RankDeficient);
        }
        a.swap_rows(c, p);
        b.swap(c, p);
        for i in c + 1..m {
            if a[(i, c)].is_zero() {
                continue;
            }
            let f = a[(i, c)].clone() / &a[(c, c)];
            for j in c + 1..k {
                let t = f.clone() * &a[(c, j)];
                a[(i, j)] -= &t;
            }
            let t = f * &b[c];
            b[i] -= &t;
            a[(i, c)] = S::zero();
        }
    }
    let mut worst = S::zero();
    for v in &b[k..] {
        if v.abs() > worst {
            worst = v.abs();
        }
    }
    let limit = tol.clone() * &scale;
    if worst > limit || (S::EXACT && !worst.is_zero()) {
        return Err(ConsistencyError::Inconsistent(worst));
    }
    let mut x = vec![S::zero(); k];
    for i in (0..k).rev() {
        let mut acc = b[i].clone();
        for j in i + 1..k {
            acc -= &(a[(i, j)].clone() * &x[j]);
        }
        x[i] = acc / &a[(i, i)];
    }
    Ok(x)
}

/// `true` if `|x|` is small compared to `scale` at the working precision.
pub fn negligible<S: Scalar>(x: &S, scale: &S, tol: &S) -> bool {
    if S::EXACT {
        x.is_zero()
    } else {
        x.abs() <= tol.clone() * scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn hilbert(n: usize) -> Matrix<BigRational> {
        Matrix::from_fn(n, n, |i, j| ratio(1, (i + j + 1) as i64))
    }

    #[test]
    fn bareiss_hilbert_determinant() {
        // det H_3 = 1/2160
        assert_eq!(bareiss_det(hilbert(3)), ratio(1, 2160));
        assert_eq!(bareiss_det(hilbert(4)), ratio(1, 6048000));
    }

    #[test]
    fn bareiss_matches_pivoted() {
        let a = Matrix::from_fn(4, 4, |i, j| ratio(((i * 7 + j * 3) % 5) as i64 - 2, (j + 1) as i64));
        let b: Vec<_> = (0..4).map(|i| ratio(i as i64 + 1, 3)).collect();
        let x = bareiss_solve(a.clone(), b.clone());
        let y = pivoted_solve(a.clone(), b.clone());
        assert_eq!(x, y);
        if let Some(x) = x {
            for i in 0..4 {
                let mut acc = BigRational::zero();
                for j in 0..4 {
                    acc += &a[(i, j)] * &x[j];
                }
                assert_eq!(acc, b[i]);
            }
        }
        assert_eq!(bareiss_det(a.clone()), pivoted_det(a));
    }

    #[test]
    fn singular_detected() {
        let a = Matrix::from_fn(3, 3, |i, j| ratio((i + j) as i64, 1));
        assert!(bareiss_solve(a.clone(), vec![ratio(1, 1); 3]).is_none());
        assert_eq!(bareiss_det(a), BigRational::zero());
        let f = Matrix::from_fn(3, 3, |i, j| (i + j) as f64);
        assert!(pivoted_solve(f, vec![1.0; 3]).is_none());
    }

    #[test]
    fn consistent_overdetermined() {
        // rows of [1 0; 0 1; 1 1] with rhs [2, 3, 5]
        let a = Matrix::from_fn(3, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) | (2, _) => ratio(1, 1),
            _ => ratio(0, 1),
        });
        let x = solve_consistent(a.clone(), vec![ratio(2, 1), ratio(3, 1), ratio(5, 1)], &BigRational::zero());
        assert_eq!(x, Ok(vec![ratio(2, 1), ratio(3, 1)]));
        let bad = solve_consistent(a, vec![ratio(2, 1), ratio(3, 1), ratio(6, 1)], &BigRational::zero());
        assert!(matches!(bad, Err(ConsistencyError::Inconsistent(_))));
    }
}
