//! The lower Hessenberg matrix `J` of multiplication by `x` in the basis
//! `p_l = P_{n_l}`: `x p_l = sum_{k <= l+1} J_{l,k} p_k` with `J_{l,l+1} = 1`.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{solve_consistent, ConsistencyError, Matrix};
use crate::measures::MeasureSystem;
use crate::mop::{Mop, PathFamily};
use crate::paths::{MultiIndex, Path};
use crate::poly::Poly;
use crate::scalar::Scalar;

/// Rows `0..N` of `J`; row `l` stores columns `0..=l+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct HessenbergMatrix<S> {
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> HessenbergMatrix<S> {
    /// From explicit rows; row `l` must have length `l + 2`.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        for (l, row) in rows.iter().enumerate() {
            if row.len() != l + 2 {
                return Err(Error::Validation(format!("row {l} has {} entries, expected {}", row.len(), l + 2)));
            }
        }
        Ok(HessenbergMatrix { rows })
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// `J_{i,k}`; zero above the superdiagonal.
    pub fn entry(&self, i: usize, k: usize) -> S {
        if k > i + 1 {
            return S::zero();
        }
        self.rows[i][k].clone()
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.rows[i]
    }

    /// Leading principal `n x n` block `J_n`.
    pub fn truncate(&self, n: usize) -> Result<Matrix<S>> {
        if n > self.size() {
            return Err(Error::Bounds { requested: n, available: self.size() });
        }
        Ok(Matrix::from_fn(n, n, |i, k| self.entry(i, k)))
    }

    /// `det(x Id_n - J_n)` through `f_m = x f_{m-1} - sum_{j<m} J_{m-1,j} f_j`.
    pub fn charpoly(&self, n: usize) -> Result<Poly<S>> {
        if n > self.size() {
            return Err(Error::Bounds { requested: n, available: self.size() });
        }
        charpoly(&self.truncate(n)?)
    }

    /// Sparse `(row, col, value)` triplets with a versioned header.
    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = String::from("# mopkit jmatrix v1\nrow,col,value\n");
        for (i, row) in self.rows.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    out.push_str(&format!("{i},{k},{}\n", v.to_decimal(digits)));
                }
            }
        }
        out
    }

    /// `[J^l]_{jj}` for `j` in `rows`, using only the window `[j-l+1, j+l-1]`.
    pub fn power_window(&self, l: usize, rows: std::ops::Range<usize>) -> Result<Vec<S>> {
        rows.map(|j| self.power_diag(l, j, None)).collect()
    }

    /// `[J_n^l]_{jj}` for the truncation `J_n`.
    pub fn truncated_power_diag(&self, l: usize, j: usize, n: usize) -> Result<S> {
        self.power_diag(l, j, Some(n))
    }

    fn power_diag(&self, l: usize, j: usize, limit: Option<usize>) -> Result<S> {
        if l == 0 {
            return Ok(S::one());
        }
        let lo = j.saturating_sub(l - 1);
        let mut hi = j + l - 1;
        if let Some(n) = limit {
            if n > self.size() || j >= n {
                return Err(Error::Bounds { requested: n.max(j + 1), available: self.size() });
            }
            hi = hi.min(n - 1);
        } else if hi >= self.size() {
            return Err(Error::Bounds { requested: hi + 1, available: self.size() });
        }
        // row vector e_j^T multiplied l times by J, restricted to the window
        let w = hi - lo + 1;
        let mut v = vec![S::zero(); w];
        v[j - lo] = S::one();
        for _ in 0..l {
            let mut next = vec![S::zero(); w];
            for (a, va) in v.iter().enumerate() {
                if va.is_zero() {
                    continue;
                }
                let i = lo + a;
                let top = (i + 1).min(hi);
                for k in lo..=top {
                    let e = &self.rows[i][k];
                    if !e.is_zero() {
                        next[k - lo] += &(va.clone() * e);
                    }
                }
            }
            v = next;
        }
        Ok(v[j - lo].clone())
    }

    /// Suprema of `|J_{n, n-d}|` over all stored rows for offsets `d = -1..=R`.
    pub fn ndb_profile(&self, radius: usize) -> NdbProfile<S> {
        self.ndb_profile_rows(radius, self.size())
    }

    fn ndb_profile_rows(&self, radius: usize, rows: usize) -> NdbProfile<S> {
        let mut suprema = Vec::with_capacity(radius + 2);
        for d in -1..=(radius as i64) {
            let mut sup = S::zero();
            for n in 0..rows {
                let k = n as i64 - d;
                if k < 0 || k > n as i64 + 1 {
                    continue;
                }
                let v = self.rows[n][k as usize].abs();
                if v > sup {
                    sup = v;
                }
            }
            suprema.push((d, sup));
        }
        NdbProfile { rows, suprema }
    }

    /// Profiles computed from the first `N` rows, for each `N` in `sizes`.
    pub fn ndb_trace(&self, radius: usize, sizes: &[usize]) -> Result<Vec<NdbProfile<S>>> {
        sizes
            .iter()
            .map(|&n| {
                if n > self.size() {
                    Err(Error::Bounds { requested: n, available: self.size() })
                } else {
                    Ok(self.ndb_profile_rows(radius, n))
                }
            })
            .collect()
    }
}

/// Characteristic polynomial `det(x Id - H)` of a lower Hessenberg matrix
/// with unit superdiagonal. The empty matrix gives `1`.
pub fn charpoly<S: Scalar>(h: &Matrix<S>) -> Result<Poly<S>> {
    let n = h.rows();
    for i in 0..n.saturating_sub(1) {
        if !h[(i, i + 1)].is_one() {
            return Err(Error::Validation("charpoly expects a unit superdiagonal".into()));
        }
        for k in i + 2..n {
            if !h[(i, k)].is_zero() {
                return Err(Error::Validation("charpoly expects a lower Hessenberg matrix".into()));
            }
        }
    }
    let mut f: Vec<Poly<S>> = vec![Poly::one()];
    for m in 1..=n {
        let mut next = f[m - 1].mul_x();
        for (j, fj) in f.iter().enumerate() {
            let c = &h[(m - 1, j)];
            if !c.is_zero() {
                next = next.sub_scaled(c, fj);
            }
        }
        f.push(next);
    }
    Ok(f.pop().expect("nonempty"))
}

#[derive(Clone, Debug)]
pub struct NdbProfile<S> {
    /// Number of rows inspected.
    pub rows: usize,
    /// `(offset, sup |J_{n,n-offset}|)` for offsets `-1, 0, ..., R`.
    pub suprema: Vec<(i64, S)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NdbProfileExport {
    pub rows: usize,
    pub offsets: Vec<i64>,
    pub suprema: Vec<f64>,
}

impl<S: Scalar> NdbProfile<S> {
    pub fn export(&self) -> NdbProfileExport {
        NdbProfileExport {
            rows: self.rows,
            offsets: self.suprema.iter().map(|s| s.0).collect(),
            suprema: self.suprema.iter().map(|s| s.1.to_f64()).collect(),
        }
    }
}

/// Expands `x p_l` in `p_0..p_{l+1}` by back substitution, for `l < N`.
pub fn build_j<S: Scalar>(family: &PathFamily<S>, size: usize) -> Result<HessenbergMatrix<S>> {
    if size > family.size() {
        return Err(Error::Bounds { requested: size, available: family.size() });
    }
    let rows: Result<Vec<Vec<S>>> = (0..size)
        .into_par_iter()
        .map(|l| {
            let mut rest = family.p(l).mul_x();
            let mut row = vec![S::zero(); l + 2];
            for k in (0..=l + 1).rev() {
                let c = rest.coeff(k);
                if !c.is_zero() {
                    rest = rest.sub_scaled(&c, family.p(k));
                }
                row[k] = c;
            }
            Ok(row)
        })
        .collect();
    HessenbergMatrix::from_rows(rows?)
}

/// Convenience wrapper: builds the family and then `J` of size `N`.
pub fn build_j_for<S: Scalar>(system: MeasureSystem, path: &Path, size: usize) -> Result<HessenbergMatrix<S>> {
    let family = PathFamily::build(Arc::new(Mop::new(system)), path, size)?;
    build_j(&family, size)
}

/// Largest `|J_{l,k} - <x p_l, q_k>|` over `l < N`, `k <= min(l+1, N-1)`.
pub fn verify_by_pairing<S: Scalar>(family: &PathFamily<S>, j: &HessenbergMatrix<S>) -> Result<S> {
    let n = j.size().min(family.size());
    let mut worst = S::zero();
    for l in 0..n {
        let xp = family.p(l).mul_x();
        for k in 0..=(l + 1).min(n - 1) {
            let v = family.mop().pairing(&xp, family.q(k))?;
            let d = (v - &j.entry(l, k)).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    Ok(worst)
}

/// Nearest neighbour recurrence coefficients at one index:
/// `x P_n = P_{n+e_k} + b_k P_n + sum_j a_j P_{n-e_j}` for every `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct NnrrCoeffs<S> {
    pub index: MultiIndex,
    pub b: Vec<S>,
    /// `a_j`; zero when `n_j = 0`.
    pub a: Vec<S>,
}

fn consistency_tol<S: Scalar>() -> S {
    if S::EXACT {
        S::zero()
    } else {
        // a quarter of the working digits
        S::epsilon().sqrt().and_then(|s| s.sqrt()).unwrap_or_else(|_| S::epsilon())
    }
}

fn sub_leading<S: Scalar>(p: &Poly<S>) -> S {
    match p.degree() {
        Some(d) if d >= 1 => p.coeff(d - 1),
        _ => S::zero(),
    }
}

/// `b_{n,k}` and `a_{n,.}` for the single direction `k` by matching coefficients.
pub fn nnrr_direction<S: Scalar>(mop: &Mop<S>, n: &MultiIndex, k: usize) -> Result<(S, Vec<S>)> {
    let r = mop.r();
    if k >= r {
        return Err(Error::Bounds { requested: k, available: r });
    }
    let size = n.size();
    let pn = mop.type2(n)?;
    let up = mop.type2(&n.plus(k))?;
    let rest = pn.poly.mul_x().sub(&up.poly);
    let b = rest.coeff(size);
    let rest = rest.sub_scaled(&b, &pn.poly);
    let active: Vec<usize> = (0..r).filter(|&j| n.get(j) > 0).collect();
    let mut a = vec![S::zero(); r];
    if active.is_empty() {
        if !rest.is_zero() {
            return Err(Error::Inconsistent(format!("recurrence at {n} leaves a remainder")));
        }
        return Ok((b, a));
    }
    let downs: Vec<_> = active
        .iter()
        .map(|&j| mop.type2(&n.minus(j).expect("active component")))
        .collect::<Result<_>>()?;
    let mat = Matrix::from_fn(size, active.len(), |row, col| downs[col].poly.coeff(row));
    let rhs: Vec<S> = (0..size).map(|row| rest.coeff(row)).collect();
    let sol = solve_consistent(mat, rhs, &consistency_tol::<S>()).map_err(|e| match e {
        ConsistencyError::RankDeficient => Error::NotNormal { index: n.clone(), which: "recurrence neighbours" },
        ConsistencyError::Inconsistent(res) => Error::Inconsistent(format!(
            "recurrence expansion at {n} direction {k} leaves residual {}",
            res.to_f64()
        )),
    })?;
    for (&j, v) in active.iter().zip(sol) {
        a[j] = v;
    }
    Ok((b, a))
}

/// Coefficients for all directions, checking that `a` does not depend on `k`.
pub fn nnrr<S: Scalar>(mop: &Mop<S>, n: &MultiIndex) -> Result<NnrrCoeffs<S>> {
    let mut b = Vec::with_capacity(mop.r());
    let mut a_ref: Option<Vec<S>> = None;
    let tol = consistency_tol::<S>();
    for k in 0..mop.r() {
        let (bk, a) = nnrr_direction(mop, n, k)?;
        b.push(bk);
        match &a_ref {
            None => a_ref = Some(a),
            Some(first) => {
                let scale = first.iter().chain(&a).fold(S::one(), |m, v| if v.abs() > m { v.abs() } else { m });
                for (x, y) in first.iter().zip(&a) {
                    let d = (x.clone() - y).abs();
                    if (S::EXACT && !d.is_zero()) || d > tol.clone() * &scale {
                        return Err(Error::Inconsistent(format!(
                            "a-coefficients at {n} differ between directions 1 and {}",
                            k + 1
                        )));
                    }
                }
            }
        }
    }
    Ok(NnrrCoeffs { index: n.clone(), b, a: a_ref.expect("r >= 1") })
}

/// Assembles `J` from recurrence coefficients:
/// `J_{l,l+1} = 1`, `J_{l,l} = b_{n_l, i_l}` and for `j < l`
/// `J_{l,j} = sum_k a_{n_l,k} prod_{m=j+2}^{l} (b_{n_{m-1}-e_k,k} - b_{n_{m-1}-e_k,i_{m-1}})`.
pub fn build_j_from_nnrr<S: Scalar>(mop: &Mop<S>, path: &Path, size: usize) -> Result<HessenbergMatrix<S>> {
    if path.len() < size {
        return Err(Error::Bounds { requested: size, available: path.len() });
    }
    let idx = path.indices();
    let steps = path.steps();
    let r = mop.r();
    let mut b_cache: HashMap<(MultiIndex, usize), S> = HashMap::new();
    let mut b_at = |m: &MultiIndex, k: usize| -> Result<S> {
        if let Some(v) = b_cache.get(&(m.clone(), k)) {
            return Ok(v.clone());
        }
        let v = sub_leading(&mop.type2(m)?.poly) - &sub_leading(&mop.type2(&m.plus(k))?.poly);
        b_cache.insert((m.clone(), k), v.clone());
        Ok(v)
    };
    let coeffs: Vec<NnrrCoeffs<S>> = idx[..size].par_iter().map(|n| nnrr(mop, n)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(size);
    for l in 0..size {
        let mut row = vec![S::zero(); l + 2];
        row[l + 1] = S::one();
        row[l] = coeffs[l].b[steps[l]].clone();
        for k in 0..r {
            let a = &coeffs[l].a[k];
            if a.is_zero() {
                continue;
            }
            // running product over m = l, l-1, ..., j+2
            let mut prod = S::one();
            for j in (0..l).rev() {
                if j + 2 <= l {
                    let m = j + 2;
                    if steps[m - 1] == k {
                        break;
                    }
                    let base = idx[m - 1].minus(k).ok_or_else(|| {
                        Error::Inconsistent(format!("index {} has no component {} to remove", idx[m - 1], k + 1))
                    })?;
                    let f = b_at(&base, k)? - &b_at(&base, steps[m - 1])?;
                    prod *= &f;
                    if prod.is_zero() {
                        break;
                    }
                }
                row[j] += &(a.clone() * &prod);
            }
        }
        rows.push(row);
    }
    HessenbergMatrix::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Interval;
    use crate::scalar::{ratio, BigReal};
    use num_rational::BigRational;
    use num_traits::Zero;

    type Q = BigRational;

    fn angelesco() -> MeasureSystem {
        MeasureSystem::angelesco(vec![Interval::from_ints(-1, 0).unwrap(), Interval::from_ints(0, 1).unwrap()]).unwrap()
    }

    fn legendre_j(n: usize) -> HessenbergMatrix<Q> {
        build_j_for(MeasureSystem::legendre(), &Path::stepline(1, n), n).unwrap()
    }

    /// Monic Legendre recurrence: `a_n = n^2 / (4 n^2 - 1)`.
    fn legendre_a(n: i64) -> Q {
        ratio(n * n, 4 * n * n - 1)
    }

    #[test]
    fn legendre_rows() {
        let j = legendre_j(6);
        assert_eq!(j.entry(1, 0), ratio(1, 3));
        assert_eq!(j.entry(1, 1), Q::zero());
        assert_eq!(j.entry(1, 2), ratio(1, 1));
        assert_eq!(j.entry(2, 1), ratio(4, 15));
        assert_eq!(j.entry(2, 2), Q::zero());
        for l in 1..6 {
            assert_eq!(j.entry(l, l - 1), legendre_a(l as i64));
            for k in 0..l.saturating_sub(1) {
                assert!(j.entry(l, k).is_zero());
            }
        }
    }

    #[test]
    fn superdiagonal_is_one() {
        let j: HessenbergMatrix<Q> = build_j_for(angelesco(), &Path::stepline(2, 8), 8).unwrap();
        for l in 0..8 {
            assert_eq!(j.entry(l, l + 1), ratio(1, 1));
            assert!(j.entry(l, l + 2).is_zero());
        }
    }

    #[test]
    fn charpoly_matches_type2() {
        let mop = Arc::new(Mop::<Q>::new(angelesco()));
        let path = Path::stepline(2, 8);
        let fam = PathFamily::build(mop, &path, 8).unwrap();
        let j = build_j(&fam, 8).unwrap();
        assert_eq!(j.charpoly(0).unwrap(), Poly::one());
        for n in 1..=8 {
            assert_eq!(j.charpoly(n).unwrap(), *fam.p(n), "n = {n}");
        }
        let leg = legendre_j(5);
        assert_eq!(leg.charpoly(2).unwrap(), Poly::new(vec![ratio(-1, 3), ratio(0, 1), ratio(1, 1)]));
    }

    #[test]
    fn charpoly_against_bareiss_determinant() {
        let j: HessenbergMatrix<Q> = build_j_for(angelesco(), &Path::stepline(2, 6), 6).unwrap();
        let jn = j.truncate(6).unwrap();
        let cp = charpoly(&jn).unwrap();
        for x in [ratio(-2, 1), ratio(1, 3), ratio(5, 7)] {
            let m = Matrix::from_fn(6, 6, |i, k| if i == k { x.clone() - &jn[(i, k)] } else { -jn[(i, k)].clone() });
            assert_eq!(Q::determinant(m), cp.eval(&x));
        }
    }

    #[test]
    fn pairing_cross_check() {
        let fam = PathFamily::build(Arc::new(Mop::<Q>::new(angelesco())), &Path::stepline(2, 7), 7).unwrap();
        let j = build_j(&fam, 7).unwrap();
        assert!(verify_by_pairing(&fam, &j).unwrap().is_zero());
    }

    #[test]
    fn transpose_action_by_quadrature() {
        let sys = angelesco();
        let fam = PathFamily::build(Arc::new(Mop::<BigReal>::new(sys.clone())), &Path::stepline(2, 8), 8).unwrap();
        let j = build_j(&fam, 8).unwrap();
        for (l, lp) in [(3usize, 2usize), (5, 1), (6, 6), (4, 5)] {
            let q = &fam.q(lp).clone();
            let p = fam.p(l).clone();
            let v = sys
                .integrate(|x: &BigReal| {
                    let w = sys.weights(x)?;
                    Ok(x.clone() * &q.q_value(&w, x) * &p.eval(x))
                })
                .unwrap()
                .value;
            assert!((v - &j.entry(l, lp)).abs().to_f64() < 1e-40, "({l}, {lp})");
        }
    }

    #[test]
    fn nnrr_examples() {
        let leg = Mop::<Q>::new(MeasureSystem::legendre());
        let c = nnrr(&leg, &MultiIndex::new(vec![1])).unwrap();
        assert_eq!(c.b, vec![Q::zero()]);
        assert_eq!(c.a, vec![ratio(1, 3)]);
        let c = nnrr(&leg, &MultiIndex::new(vec![2])).unwrap();
        assert_eq!(c.a, vec![ratio(4, 15)]);
        for n in 0..8 {
            assert!(nnrr(&leg, &MultiIndex::new(vec![n])).unwrap().b[0].is_zero());
        }
        let ang = Mop::<Q>::new(angelesco());
        let (_, a1) = nnrr_direction(&ang, &MultiIndex::new(vec![1, 1]), 0).unwrap();
        let (_, a2) = nnrr_direction(&ang, &MultiIndex::new(vec![1, 1]), 1).unwrap();
        assert_eq!(a1, a2);
        assert!(nnrr(&ang, &MultiIndex::new(vec![3, 1])).is_ok());
    }

    #[test]
    fn duits_formula_reproduces_j() {
        let leg = Mop::<Q>::new(MeasureSystem::legendre());
        let j1 = build_j_from_nnrr(&leg, &Path::stepline(1, 6), 6).unwrap();
        assert_eq!(j1, legendre_j(6));
        let mop = Arc::new(Mop::<Q>::new(angelesco()));
        for path in [Path::stepline(2, 8), Path::direction(&[ratio(2, 3), ratio(1, 3)], 8).unwrap()] {
            let fam = PathFamily::build(mop.clone(), &path, 8).unwrap();
            assert_eq!(build_j(&fam, 8).unwrap(), build_j_from_nnrr(&mop, &path, 8).unwrap());
        }
    }

    #[test]
    fn power_window_values() {
        let j = legendre_j(8);
        assert!(j.power_window(0, 0..4).unwrap().iter().all(|v| *v == ratio(1, 1)));
        let diag = j.power_window(1, 0..4).unwrap();
        assert!(diag.iter().enumerate().all(|(i, v)| *v == j.entry(i, i)));
        assert_eq!(j.power_window(2, 1..2).unwrap(), vec![ratio(3, 5)]);
        assert!(j.power_window(3, 6..7).is_err());
    }

    #[test]
    fn power_window_matches_dense_powers() {
        let j: HessenbergMatrix<Q> = build_j_for(angelesco(), &Path::stepline(2, 10), 10).unwrap();
        let dense = j.truncate(10).unwrap();
        let mut pow = Matrix::identity(10);
        for l in 1..=4 {
            pow = pow.mul(&dense);
            for row in 0..10 {
                assert_eq!(j.truncated_power_diag(l, row, 10).unwrap(), pow[(row, row)]);
                for col in row + l + 1..10 {
                    assert!(pow[(row, col)].is_zero());
                }
            }
            for row in 0..(10 - l) {
                assert_eq!(j.power_window(l, row..row + 1).unwrap()[0], pow[(row, row)]);
            }
        }
    }

    #[test]
    fn ndb_legendre() {
        let j = legendre_j(12);
        let p = j.ndb_profile(1);
        assert_eq!(p.suprema[0], (-1, ratio(1, 1)));
        assert_eq!(p.suprema[1], (0, Q::zero()));
        assert_eq!(p.suprema[2], (1, ratio(1, 3)));
        let trace = j.ndb_trace(2, &[4, 8, 12]).unwrap();
        assert_eq!(trace.len(), 3);
        assert!(j.ndb_trace(2, &[13]).is_err());
    }

    #[test]
    fn float_duits_agrees() {
        let mop = Arc::new(Mop::<BigReal>::new(angelesco()));
        let path = Path::stepline(2, 20);
        let fam = PathFamily::build(mop.clone(), &path, 20).unwrap();
        let a = build_j(&fam, 20).unwrap();
        let b = build_j_from_nnrr(&mop, &path, 20).unwrap();
        for l in 0..20 {
            for k in 0..=l + 1 {
                assert!((a.entry(l, k) - &b.entry(l, k)).abs().to_f64() < 1e-30);
            }
        }
    }
}
