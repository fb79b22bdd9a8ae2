//! Type I and type II multiple orthogonal polynomials from moments.
//!
//! For a multi-index `n` with `|n| = N`, the type II polynomial `P_n` is monic
//! of degree `N` with `int x^k P_n dmu_j = 0` for `k < n_j`. The type I vector
//! `(A_{n,1}, ..., A_{n,r})` has `deg A_{n,j} < n_j` and
//! `sum_j int x^k A_{n,j} dmu_j = delta_{k, N-1}` for `k < N`.
//!
//! Along a path, `p_l = P_{n_l}` and `q_l = Q_{n_{l+1}} = sum_j A_{n_{l+1},j} w_j`
//! are biorthogonal: `<p_l, q_m> = delta_{l,m}`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::measures::{MeasureSystem, WeightValues};
use crate::paths::{MultiIndex, Path};
use crate::poly::{Poly, PolyExport};
use crate::scalar::Scalar;

/// Monic type II polynomial `P_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeIIPoly<S> {
    pub poly: Poly<S>,
    pub index: MultiIndex,
}

/// Type I vector `(A_{n,1}, ..., A_{n,r})`.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeIVector<S> {
    pub polys: Vec<Poly<S>>,
    pub index: MultiIndex,
}

impl<S: Scalar> TypeIVector<S> {
    /// `Q_n(x) = sum_j A_{n,j}(x) w_j(x)` given the weights at `x`.
    pub fn q_value(&self, weights: &WeightValues<S>, x: &S) -> S {
        let mut acc = S::zero();
        for (a, w) in self.polys.iter().zip(&weights.values) {
            if !w.is_zero() {
                acc += &(a.eval(x) * w);
            }
        }
        acc
    }
}

/// The function `Q_n` attached to a type I vector and its system.
#[derive(Clone, Debug)]
pub struct QFunction<S> {
    pub type1: Arc<TypeIVector<S>>,
    pub system: Arc<MeasureSystem>,
}

impl<S: Scalar> QFunction<S> {
    /// Value at `x` and whether the zero extension of the weights was used.
    pub fn eval(&self, x: &S) -> Result<(S, bool)> {
        let w = self.system.weights(x)?;
        Ok((self.type1.q_value(&w, x), w.outside))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MopExport {
    pub index: Vec<usize>,
    pub kind: &'static str,
    pub polys: Vec<PolyExport>,
}

impl<S: Scalar> TypeIIPoly<S> {
    pub fn export(&self, digits: usize) -> MopExport {
        MopExport { index: self.index.entries().to_vec(), kind: "type2", polys: vec![self.poly.export(digits)] }
    }
}

impl<S: Scalar> TypeIVector<S> {
    pub fn export(&self, digits: usize) -> MopExport {
        MopExport {
            index: self.index.entries().to_vec(),
            kind: "type1",
            polys: self.polys.iter().map(|p| p.export(digits)).collect(),
        }
    }
}

/// Polynomial constructor for one system with shared moment and memo tables.
/// Safe to use from several threads.
pub struct Mop<S> {
    system: Arc<MeasureSystem>,
    moments: RwLock<Vec<Vec<S>>>,
    type2_cache: Mutex<HashMap<MultiIndex, Arc<TypeIIPoly<S>>>>,
    type1_cache: Mutex<HashMap<MultiIndex, Arc<TypeIVector<S>>>>,
}

impl<S: Scalar> Mop<S> {
    pub fn new(system: MeasureSystem) -> Self {
        Mop::shared(Arc::new(system))
    }

    pub fn shared(system: Arc<MeasureSystem>) -> Self {
        let r = system.r();
        Mop {
            system,
            moments: RwLock::new(vec![Vec::new(); r]),
            type2_cache: Mutex::new(HashMap::new()),
            type1_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn system(&self) -> &MeasureSystem {
        &self.system
    }

    pub fn system_arc(&self) -> Arc<MeasureSystem> {
        self.system.clone()
    }

    pub fn r(&self) -> usize {
        self.system.r()
    }

    /// Makes `m_j(0..count)` available for every component.
    pub fn ensure_moments(&self, count: usize) -> Result<()> {
        if self.moments.read().unwrap().iter().all(|m| m.len() >= count) {
            return Ok(());
        }
        let mut guard = self.moments.write().unwrap();
        let have = guard.iter().map(|m| m.len()).min().unwrap_or(0);
        if have >= count {
            return Ok(());
        }
        // grow geometrically so quadrature batches are not repeated for every step
        let target = count.max(have + have / 2).max(8);
        let fresh: Result<Vec<Vec<S>>> = (0..self.r()).into_par_iter().map(|j| self.system.moments(j, target)).collect();
        *guard = fresh?;
        Ok(())
    }

    /// `m_j(k)`, extending the table when needed.
    pub fn moment(&self, j: usize, k: usize) -> Result<S> {
        self.ensure_moments(k + 1)?;
        Ok(self.moments.read().unwrap()[j][k].clone())
    }

    fn moment_rows(&self, count: usize) -> Result<Vec<Vec<S>>> {
        self.ensure_moments(count)?;
        Ok(self.moments.read().unwrap().iter().map(|m| m[..count].to_vec()).collect())
    }

    fn check_r(&self, n: &MultiIndex) -> Result<()> {
        if n.r() != self.r() {
            return Err(Error::Validation(format!("multi-index {n} has {} entries, system has r = {}", n.r(), self.r())));
        }
        Ok(())
    }

    fn solve_type2(&self, n: &MultiIndex) -> Result<TypeIIPoly<S>> {
        self.check_r(n)?;
        let size = n.size();
        if size == 0 {
            return Ok(TypeIIPoly { poly: Poly::one(), index: n.clone() });
        }
        let m = self.moment_rows(2 * size)?;
        let mut a = Matrix::zeros(size, size);
        let mut rhs = Vec::with_capacity(size);
        let mut row = 0;
        for (j, mj) in m.iter().enumerate() {
            for k in 0..n.get(j) {
                for i in 0..size {
                    a[(row, i)] = mj[k + i].clone();
                }
                rhs.push(-mj[k + size].clone());
                row += 1;
            }
        }
        let c = S::solve_linear(a, rhs).ok_or_else(|| Error::NotNormal { index: n.clone(), which: "type II" })?;
        Ok(TypeIIPoly { poly: Poly::monic_from_lower(c), index: n.clone() })
    }

    fn solve_type1(&self, n: &MultiIndex) -> Result<TypeIVector<S>> {
        self.check_r(n)?;
        let size = n.size();
        if size == 0 {
            return Err(Error::Validation("type I polynomials need |n| >= 1".into()));
        }
        let m = self.moment_rows(2 * size)?;
        let mut a = Matrix::zeros(size, size);
        for k in 0..size {
            let mut col = 0;
            for (j, mj) in m.iter().enumerate() {
                for i in 0..n.get(j) {
                    a[(k, col)] = mj[k + i].clone();
                    col += 1;
                }
            }
        }
        let mut rhs = vec![S::zero(); size];
        rhs[size - 1] = S::one();
        let c = S::solve_linear(a, rhs).ok_or_else(|| Error::NotNormal { index: n.clone(), which: "type I" })?;
        let mut polys = Vec::with_capacity(self.r());
        let mut it = c.into_iter();
        for j in 0..self.r() {
            polys.push(Poly::new(it.by_ref().take(n.get(j)).collect()));
        }
        Ok(TypeIVector { polys, index: n.clone() })
    }

    /// Monic type II polynomial `P_n` (memoized).
    pub fn type2(&self, n: &MultiIndex) -> Result<Arc<TypeIIPoly<S>>> {
        if let Some(hit) = self.type2_cache.lock().unwrap().get(n) {
            return Ok(hit.clone());
        }
        let p = Arc::new(self.solve_type2(n)?);
        self.type2_cache.lock().unwrap().insert(n.clone(), p.clone());
        Ok(p)
    }

    /// Type I vector `A_n` (memoized).
    pub fn type1(&self, n: &MultiIndex) -> Result<Arc<TypeIVector<S>>> {
        if let Some(hit) = self.type1_cache.lock().unwrap().get(n) {
            return Ok(hit.clone());
        }
        let a = Arc::new(self.solve_type1(n)?);
        self.type1_cache.lock().unwrap().insert(n.clone(), a.clone());
        Ok(a)
    }

    pub fn q_function(&self, n: &MultiIndex) -> Result<QFunction<S>> {
        Ok(QFunction { type1: self.type1(n)?, system: self.system.clone() })
    }

    /// `int p q dmu = sum_j sum_{a,b} p_a A_{j,b} m_j(a+b)`, using moments only.
    pub fn pairing(&self, p: &Poly<S>, a: &TypeIVector<S>) -> Result<S> {
        let dp = p.degree().map_or(0, |d| d + 1);
        let da = a.polys.iter().map(|q| q.degree().map_or(0, |d| d + 1)).max().unwrap_or(0);
        if dp == 0 || da == 0 {
            return Ok(S::zero());
        }
        let m = self.moment_rows(dp + da)?;
        let mut acc = S::zero();
        for (aj, mj) in a.polys.iter().zip(&m) {
            for (i, pc) in p.coeffs().iter().enumerate() {
                if pc.is_zero() {
                    continue;
                }
                for (k, ac) in aj.coeffs().iter().enumerate() {
                    acc += &(pc.clone() * ac * &mj[i + k]);
                }
            }
        }
        Ok(acc)
    }

    /// `int x^k P_n dmu_j` for every constrained `(j, k)`, row by row.
    pub fn type2_residuals(&self, p: &TypeIIPoly<S>) -> Result<Vec<S>> {
        let n = &p.index;
        let m = self.moment_rows(2 * n.size() + 1)?;
        let mut out = Vec::new();
        for (j, mj) in m.iter().enumerate() {
            for k in 0..n.get(j) {
                let mut acc = S::zero();
                for (i, c) in p.poly.coeffs().iter().enumerate() {
                    acc += &(c.clone() * &mj[k + i]);
                }
                out.push(acc);
            }
        }
        Ok(out)
    }

    /// `sum_j int x^k A_{n,j} dmu_j` for `k < |n|`.
    pub fn type1_residuals(&self, a: &TypeIVector<S>) -> Result<Vec<S>> {
        let size = a.index.size();
        let m = self.moment_rows(2 * size + 1)?;
        Ok((0..size)
            .map(|k| {
                let mut acc = S::zero();
                for (aj, mj) in a.polys.iter().zip(&m) {
                    for (i, c) in aj.coeffs().iter().enumerate() {
                        acc += &(c.clone() * &mj[k + i]);
                    }
                }
                acc
            })
            .collect())
    }

    /// Checks solvability of both systems for every `|n| <= max_size`.
    pub fn perfectness_scan(&self, max_size: usize) -> PerfectnessReport {
        let mut checked = 0;
        let mut failures = Vec::new();
        for size in 0..=max_size {
            for n in MultiIndex::all_of_size(self.r(), size) {
                checked += 1;
                if let Err(e) = self.solve_type2(&n) {
                    failures.push(ScanFailure { index: n.entries().to_vec(), which: "type II", error: e.to_string() });
                }
                if size > 0 {
                    if let Err(e) = self.solve_type1(&n) {
                        failures.push(ScanFailure {
                            index: n.entries().to_vec(),
                            which: "type I",
                            error: e.to_string(),
                        });
                    }
                }
            }
        }
        PerfectnessReport { max_size, checked, all_normal: failures.is_empty(), failures }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanFailure {
    pub index: Vec<usize>,
    pub which: &'static str,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct PerfectnessReport {
    pub max_size: usize,
    pub checked: usize,
    pub all_normal: bool,
    pub failures: Vec<ScanFailure>,
}

/// `p_0..p_N` and `q_0..q_{N-1}` along a path.
pub struct PathFamily<S> {
    mop: Arc<Mop<S>>,
    path: Path,
    p: Vec<Arc<TypeIIPoly<S>>>,
    q: Vec<Arc<TypeIVector<S>>>,
}

impl<S: Scalar> PathFamily<S> {
    /// Builds `p_0..p_size` and `q_0..q_{size-1}`; the path needs at least `size` steps.
    pub fn build(mop: Arc<Mop<S>>, path: &Path, size: usize) -> Result<Self> {
        if path.len() < size {
            return Err(Error::Bounds { requested: size, available: path.len() });
        }
        if path.r() != mop.r() {
            return Err(Error::Validation(format!("path has r = {}, system has r = {}", path.r(), mop.r())));
        }
        let indices = path.indices();
        mop.ensure_moments(2 * size + 2)?;
        let p: Result<Vec<_>> = indices[..=size].par_iter().map(|n| mop.type2(n)).collect();
        let q: Result<Vec<_>> = indices[1..=size].par_iter().map(|n| mop.type1(n)).collect();
        Ok(PathFamily { mop, path: path.prefix(size)?, p: p?, q: q? })
    }

    pub fn mop(&self) -> &Arc<Mop<S>> {
        &self.mop
    }

    pub fn system(&self) -> &MeasureSystem {
        self.mop.system()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Number of biorthogonal pairs `N`.
    pub fn size(&self) -> usize {
        self.q.len()
    }

    pub fn p(&self, l: usize) -> &Poly<S> {
        &self.p[l].poly
    }

    pub fn p_full(&self, l: usize) -> &Arc<TypeIIPoly<S>> {
        &self.p[l]
    }

    pub fn q(&self, l: usize) -> &Arc<TypeIVector<S>> {
        &self.q[l]
    }

    /// `(p_0(x), ..., p_{len-1}(x))`.
    pub fn p_values(&self, x: &S, len: usize) -> Vec<S> {
        self.p[..len].iter().map(|p| p.poly.eval(x)).collect()
    }

    /// `(q_0(x), ..., q_{len-1}(x))` and the outside-support flag.
    pub fn q_values(&self, x: &S, len: usize) -> Result<(Vec<S>, bool)> {
        let w = self.system().weights(x)?;
        Ok((self.q[..len].iter().map(|a| a.q_value(&w, x)).collect(), w.outside))
    }

    /// Matrix of `<p_l, q_m>` for `l, m < n`.
    pub fn biorthogonality_matrix(&self, n: usize) -> Result<Matrix<S>> {
        if n > self.size() {
            return Err(Error::Bounds { requested: n, available: self.size() });
        }
        let rows: Result<Vec<Vec<S>>> = (0..n)
            .into_par_iter()
            .map(|l| (0..n).map(|m| self.mop.pairing(&self.p[l].poly, &self.q[m])).collect())
            .collect();
        let rows = rows?;
        Ok(Matrix::from_fn(n, n, |i, j| rows[i][j].clone()))
    }
}

/// `<p_l, q_m>` for `l, m < n` along `path`.
pub fn biorthogonality_matrix<S: Scalar>(system: MeasureSystem, path: &Path, n: usize) -> Result<Matrix<S>> {
    PathFamily::build(Arc::new(Mop::new(system)), path, n)?.biorthogonality_matrix(n)
}
