//! Christoffel–Darboux kernel `K_n(x, y) = sum_{j<n} p_j(x) q_j(y)` and the
//! diagnostics built on it: positivity of the diagonal and of kernel
//! determinants, the reproducing identity, the Nevai operator and atom limits.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hessenberg::HessenbergMatrix;
use crate::linalg::Matrix;
use crate::measures::{Interval, MeasureSystem};
use crate::mop::PathFamily;
use crate::quadrature::QuadOptions;
use crate::scalar::{BigReal, Scalar};

/// Cached `p_j(x)` and `q_j(x)` for every available `j`.
#[derive(Clone, Debug)]
pub struct PointValues<S> {
    pub x: S,
    pub p: Vec<S>,
    pub q: Vec<S>,
    /// The weights were extended by zero at `x`.
    pub outside: bool,
}

/// Kernel family over a fixed path; every method takes the kernel order `n`.
pub struct CDKernel<S> {
    family: Arc<PathFamily<S>>,
    cache: Mutex<HashMap<String, Arc<PointValues<S>>>>,
    pairing: Mutex<Option<Arc<Matrix<S>>>>,
}

/// A kernel value with the outside-support flag of its `y` argument.
#[derive(Clone, Debug)]
pub struct KernelValue<S> {
    pub value: S,
    pub flagged: bool,
}

fn key<S: Scalar>(x: &S) -> String {
    x.to_ratio().map(|q| q.to_string()).unwrap_or_else(|| format!("{x:?}"))
}

impl<S: Scalar> CDKernel<S> {
    pub fn new(family: Arc<PathFamily<S>>) -> Self {
        CDKernel { family, cache: Mutex::new(HashMap::new()), pairing: Mutex::new(None) }
    }

    pub fn family(&self) -> &PathFamily<S> {
        &self.family
    }

    pub fn system(&self) -> &MeasureSystem {
        self.family.system()
    }

    /// Largest admissible order.
    pub fn max_n(&self) -> usize {
        self.family.size()
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n > self.max_n() {
            return Err(Error::Bounds { requested: n, available: self.max_n() });
        }
        Ok(())
    }

    pub fn values(&self, x: &S) -> Result<Arc<PointValues<S>>> {
        let k = key(x);
        if let Some(hit) = self.cache.lock().unwrap().get(&k) {
            return Ok(hit.clone());
        }
        let size = self.family.size();
        let (q, outside) = self.family.q_values(x, size)?;
        let pv = Arc::new(PointValues { x: x.clone(), p: self.family.p_values(x, size + 1), q, outside });
        self.cache.lock().unwrap().insert(k, pv.clone());
        Ok(pv)
    }

    /// `K_n(x, y)`.
    pub fn eval(&self, n: usize, x: &S, y: &S) -> Result<KernelValue<S>> {
        self.check_n(n)?;
        let vx = self.values(x)?;
        let vy = self.values(y)?;
        let mut acc = S::zero();
        for j in 0..n {
            acc += &(vx.p[j].clone() * &vy.q[j]);
        }
        Ok(KernelValue { value: acc, flagged: vy.outside })
    }

    /// `K_n(x, x)`.
    pub fn diag(&self, n: usize, x: &S) -> Result<S> {
        Ok(self.eval(n, x, x)?.value)
    }

    /// `K_n(x, x)` without touching the point cache (for quadrature loops).
    pub fn diag_direct(&self, n: usize, x: &S) -> Result<S> {
        self.check_n(n)?;
        let w = self.system().weights(x)?;
        let mut acc = S::zero();
        for j in 0..n {
            acc += &(self.family.p(j).eval(x) * &self.family.q(j).q_value(&w, x));
        }
        Ok(acc)
    }

    fn pairing_matrix(&self) -> Result<Arc<Matrix<S>>> {
        if let Some(m) = self.pairing.lock().unwrap().as_ref() {
            return Ok(m.clone());
        }
        let m = Arc::new(self.family.biorthogonality_matrix(self.max_n())?);
        *self.pairing.lock().unwrap() = Some(m.clone());
        Ok(m)
    }

    /// `int K_n(x,y) K_n(y,x) dmu(y) - K_n(x,x)`, evaluated through the
    /// moment pairings `<p_m, q_l>` without quadrature.
    pub fn reproducing_residual(&self, n: usize, x: &S) -> Result<S> {
        self.check_n(n)?;
        let g = self.pairing_matrix()?;
        let v = self.values(x)?;
        let mut acc = S::zero();
        for l in 0..n {
            for m in 0..n {
                let gml = &g[(m, l)];
                if !gml.is_zero() {
                    acc += &(v.p[l].clone() * &v.q[m] * gml);
                }
            }
        }
        Ok(acc - &self.diag(n, x)?)
    }

    /// Minimum of `K_n(x, x)` over `grid` and the negative points.
    pub fn positivity_scan(&self, n: usize, grid: &[S]) -> Result<PositivityReport> {
        let vals: Vec<S> = grid.par_iter().map(|x| self.diag(n, x)).collect::<Result<_>>()?;
        let mut min: Option<&S> = None;
        let mut negatives = Vec::new();
        for (x, v) in grid.iter().zip(&vals) {
            if min.is_none_or(|m| v < m) {
                min = Some(v);
            }
            if *v < S::zero() {
                negatives.push(x.to_f64());
            }
        }
        Ok(PositivityReport {
            n,
            points: grid.len(),
            min: min.map(|m| m.to_f64()),
            min_decimal: min.map(|m| m.to_decimal(20)),
            negative_count: negatives.len(),
            negatives,
        })
    }

    /// `det [K_n(x_i, x_j)]` for a strictly increasing tuple of at most `n` points.
    pub fn detpos_check(&self, n: usize, points: &[S]) -> Result<DetposReport> {
        self.check_n(n)?;
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("detpos points must be strictly increasing".into()));
        }
        if points.is_empty() || points.len() > n {
            return Err(Error::Validation(format!("detpos needs between 1 and n = {n} points, got {}", points.len())));
        }
        let m = points.len();
        let mut mat = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                mat[(i, j)] = self.eval(n, &points[i], &points[j])?.value;
            }
        }
        let (value, decimal, exact) = if S::EXACT && m > EXACT_DET_LIMIT {
            let conv = Matrix::from_fn(m, m, |i, j| BigReal::from_ratio(&mat[(i, j)].to_ratio().expect("rational")));
            let d = BigReal::determinant(conv);
            (d.to_f64(), d.to_decimal(20), false)
        } else {
            let d = S::determinant(mat);
            (d.to_f64(), d.to_decimal(20), S::EXACT)
        };
        Ok(DetposReport {
            n,
            points: points.iter().map(|p| p.to_f64()).collect(),
            extension: m < n,
            determinant: value,
            determinant_decimal: decimal,
            exact,
            sign: if value > 0.0 {
                1
            } else if value < 0.0 {
                -1
            } else {
                0
            },
        })
    }

    /// `G_n[y^k](x) = <Pi_n q(x), J^k Pi_n p(x)> / K_n(x, x)` (no quadrature).
    pub fn nevai_g(&self, j: &HessenbergMatrix<S>, n: usize, x: &S, k: usize) -> Result<S> {
        self.check_n(n)?;
        if n + k > j.size() + 1 {
            return Err(Error::Bounds { requested: n + k - 1, available: j.size() });
        }
        let v = self.values(x)?;
        let kxx = self.diag(n, x)?;
        if kxx.is_zero() {
            return Err(Error::Undefined(format!("K_{n}(x,x) = 0 at x = {}", x.to_f64())));
        }
        // u = J^t Pi_n p on indices 0..n+k-t
        let mut u: Vec<S> = (0..n + k).map(|i| if i < n { v.p[i].clone() } else { S::zero() }).collect();
        for t in 0..k {
            let len = n + k - t - 1;
            let next: Vec<S> = (0..len)
                .map(|i| {
                    let mut acc = S::zero();
                    for (m, um) in u.iter().enumerate().take((i + 2).min(u.len())) {
                        if !um.is_zero() {
                            acc += &(j.entry(i, m) * um);
                        }
                    }
                    acc
                })
                .collect();
            u = next;
        }
        let mut acc = S::zero();
        for i in 0..n {
            acc += &(v.q[i].clone() * &u[i]);
        }
        Ok(acc / &kxx)
    }

    /// Ratios `q_l(x) p_m(x) / K_n(x,x)` for `m in [n-N, n)`, `l in [n, n+N]`.
    pub fn hypothesis_c(&self, n: usize, x: &S, width: usize) -> Result<HypothesisCRow> {
        if width == 0 {
            return Ok(HypothesisCRow { n, max_abs_ratio: 0.0, entries: Vec::new() });
        }
        self.check_n(n + width + 1)?;
        let v = self.values(x)?;
        let kxx = self.diag(n, x)?;
        if kxx.is_zero() {
            return Err(Error::Undefined(format!("K_{n}(x,x) = 0 at x = {}", x.to_f64())));
        }
        let mut entries = Vec::new();
        let mut worst = 0.0f64;
        for l in n..=n + width {
            for m in n.saturating_sub(width)..n {
                let r = (v.q[l].clone() * &v.p[m] / &kxx).to_f64();
                worst = worst.max(r.abs());
                entries.push((l, m, r));
            }
        }
        Ok(HypothesisCRow { n, max_abs_ratio: worst, entries })
    }

    /// Sign census of `y -> K_n(x,y) K_n(y,x)` on `grid`.
    pub fn product_sign_scan(&self, n: usize, x: &S, grid: &[S]) -> Result<SignScan> {
        self.check_n(n)?;
        let vals: Vec<S> = grid
            .par_iter()
            .map(|y| Ok(self.eval(n, x, y)?.value * &self.eval(n, y, x)?.value))
            .collect::<Result<_>>()?;
        let mut negative = 0;
        let mut zero = 0;
        let mut positive = 0;
        let mut min = f64::INFINITY;
        let mut argmin = f64::NAN;
        for (y, v) in grid.iter().zip(&vals) {
            let f = v.to_f64();
            if *v < S::zero() {
                negative += 1;
            } else if v.is_zero() {
                zero += 1;
            } else {
                positive += 1;
            }
            if f < min {
                min = f;
                argmin = y.to_f64();
            }
        }
        Ok(SignScan { n, x: x.to_f64(), negative, zero, positive, min, argmin })
    }

    /// `(1/K_n(x,x)) int |K_n(x,y) K_n(y,x)| dmu(y)`.
    pub fn absolute_ratio(&self, n: usize, x: &S, rel_tol: &S) -> Result<S> {
        self.check_n(n)?;
        let v = self.values(x)?;
        let kxx = self.diag(n, x)?;
        if kxx.is_zero() {
            return Err(Error::Undefined(format!("K_{n}(x,x) = 0 at x = {}", x.to_f64())));
        }
        let sys = self.system();
        let f = |y: &S| -> Result<Vec<S>> {
            let w = sys.weights(y)?;
            let mut kxy = S::zero();
            let mut kyx = S::zero();
            for j in 0..n {
                let pj = self.family.p(j).eval(y);
                let qj = self.family.q(j).q_value(&w, y);
                kxy += &(v.p[j].clone() * &qj);
                kyx += &(pj * &v.q[j]);
            }
            Ok(vec![(kxy * &kyx).abs()])
        };
        let q = sys.integrate_many_with(f, 1, &QuadOptions::with_tol(rel_tol.clone()))?;
        Ok(q[0].value.clone() / &kxx)
    }

    /// `(1/n) int K_n(x,x) dmu(x)` by quadrature.
    pub fn normalized_trace(&self, n: usize) -> Result<S> {
        let f = |x: &S| -> Result<Vec<S>> { Ok(vec![self.diag_direct(n, x)?]) };
        Ok(self.system().integrate_many(f, 1)?[0].value.clone() / &S::from_usize(n))
    }

    /// `K_n(x0, x0)` for each `n` in `ns`, for an atom `x0` of an `r = 1` system.
    pub fn atom_limit_experiment(&self, x0: &S, ns: &[usize]) -> Result<AtomLimitTable> {
        let sys = self.system();
        if sys.r() != 1 {
            return Err(Error::Validation("the atom experiment needs r = 1".into()));
        }
        let mass = sys.reference_atom_mass(x0);
        if mass.is_zero() {
            return Err(Error::Validation(format!("{} is not an atom of the measure", x0.to_f64())));
        }
        let rows = ns.iter().map(|&n| Ok((n, self.diag(n, x0)?.to_f64()))).collect::<Result<Vec<_>>>()?;
        let target = (S::one() / &mass).to_f64();
        let last_error = rows.last().map(|r| (r.1 - target).abs());
        Ok(AtomLimitTable { x0: x0.to_f64(), mass: mass.to_f64(), target, rows, last_error })
    }
}

/// Exact kernel determinants are used up to this tuple length.
pub const EXACT_DET_LIMIT: usize = 12;

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub n: usize,
    pub points: usize,
    pub min: Option<f64>,
    pub min_decimal: Option<String>,
    pub negative_count: usize,
    pub negatives: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DetposReport {
    pub n: usize,
    pub points: Vec<f64>,
    /// Fewer points than `n`.
    pub extension: bool,
    pub determinant: f64,
    pub determinant_decimal: String,
    pub exact: bool,
    pub sign: i8,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisCRow {
    pub n: usize,
    pub max_abs_ratio: f64,
    /// `(l, m, q_l(x) p_m(x) / K_n(x,x))`.
    pub entries: Vec<(usize, usize, f64)>,
}

/// Hypothesis (c) ratios over a range of `n` with a decay summary.
#[derive(Clone, Debug, Serialize)]
pub struct NevaiReport {
    pub x: f64,
    pub k: usize,
    /// `(n, G_n[y^k](x))`.
    pub g: Vec<(usize, f64)>,
    pub target: f64,
    pub hypothesis_c: Vec<HypothesisCRow>,
    /// Largest ratio at the last `n` is below the one at the first `n`.
    pub ratios_decay: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SignScan {
    pub n: usize,
    pub x: f64,
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
    pub min: f64,
    pub argmin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AtomLimitTable {
    pub x0: f64,
    pub mass: f64,
    /// `1 / mu({x0})`.
    pub target: f64,
    pub rows: Vec<(usize, f64)>,
    pub last_error: Option<f64>,
}

/// Runs `G_n[y^k](x)` and the hypothesis (c) table over `ns`.
pub fn nevai_run<S: Scalar>(
    kernel: &CDKernel<S>,
    j: &HessenbergMatrix<S>,
    x: &S,
    k: usize,
    ns: &[usize],
    width: usize,
) -> Result<NevaiReport> {
    let g = ns.iter().map(|&n| Ok((n, kernel.nevai_g(j, n, x, k)?.to_f64()))).collect::<Result<Vec<_>>>()?;
    let rows = ns.iter().map(|&n| kernel.hypothesis_c(n, x, width)).collect::<Result<Vec<_>>>()?;
    let ratios_decay = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if rows.len() > 1 => b.max_abs_ratio < a.max_abs_ratio,
        _ => false,
    };
    Ok(NevaiReport { x: x.to_f64(), k, g, target: x.to_f64().powi(k as i32), hypothesis_c: rows, ratios_decay })
}

/// `m` midpoints spread over the reference intervals in proportion to length.
pub fn support_grid<S: Scalar>(system: &MeasureSystem, m: usize) -> Vec<S> {
    let mut ivs: Vec<Interval> = system.intervals();
    ivs.sort_by(|a, b| a.a().cmp(b.a()));
    ivs.dedup();
    let lens: Vec<f64> = ivs.iter().map(|iv| num_traits::ToPrimitive::to_f64(&iv.length()).unwrap_or(0.0)).collect();
    let total: f64 = lens.iter().sum();
    let mut out = Vec::with_capacity(m);
    let mut used = 0;
    for (i, iv) in ivs.iter().enumerate() {
        let share = if i + 1 == ivs.len() { m - used } else { ((lens[i] / total) * m as f64).round() as usize };
        used += share;
        out.extend(iv.midpoints::<S>(share));
    }
    out
}

/// Seeded strictly increasing tuples of length `len` drawn uniformly from the
/// reference intervals.
pub fn random_tuples(system: &MeasureSystem, len: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut ivs = system.intervals();
    ivs.dedup();
    let bounds: Vec<(f64, f64)> = ivs
        .iter()
        .map(|iv| {
            (
                num_traits::ToPrimitive::to_f64(iv.a()).unwrap_or(0.0),
                num_traits::ToPrimitive::to_f64(iv.b()).unwrap_or(0.0),
            )
        })
        .collect();
    let total: f64 = bounds.iter().map(|(a, b)| b - a).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut t: Vec<f64> = (0..len)
            .map(|_| {
                let mut u = rng.gen::<f64>() * total;
                for (a, b) in &bounds {
                    if u <= b - a {
                        return a + u;
                    }
                    u -= b - a;
                }
                bounds.last().map(|b| b.1).unwrap_or(0.0)
            })
            .collect();
        t.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        if t.windows(2).all(|w| w[0] < w[1]) {
            out.push(t);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hessenberg::build_j;
    use crate::measures::{ReferenceRule, WeightComponent};
    use crate::mop::Mop;
    use crate::paths::Path;
    use crate::scalar::ratio;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    type Q = BigRational;

    fn angelesco() -> MeasureSystem {
        MeasureSystem::angelesco(vec![Interval::from_ints(-1, 0).unwrap(), Interval::from_ints(0, 1).unwrap()]).unwrap()
    }

    fn kernel<S: Scalar>(sys: MeasureSystem, r: usize, size: usize) -> CDKernel<S> {
        let fam = PathFamily::build(Arc::new(Mop::new(sys)), &Path::stepline(r, size), size).unwrap();
        CDKernel::new(Arc::new(fam))
    }

    #[test]
    fn first_kernel_is_constant() {
        let k = kernel::<Q>(MeasureSystem::legendre(), 1, 3);
        for (x, y) in [(ratio(0, 1), ratio(1, 2)), (ratio(-1, 3), ratio(1, 1))] {
            assert_eq!(k.eval(1, &x, &y).unwrap().value, ratio(1, 2));
        }
    }

    #[test]
    fn angelesco_kernel_is_not_symmetric() {
        let k = kernel::<Q>(angelesco(), 2, 4);
        let (x, y) = (ratio(-1, 2), ratio(1, 5));
        let a = k.eval(3, &x, &y).unwrap().value;
        let b = k.eval(3, &y, &x).unwrap().value;
        assert_ne!(a, b);
        let leg = kernel::<Q>(MeasureSystem::legendre(), 1, 6);
        assert_eq!(leg.eval(5, &x, &ratio(1, 3)).unwrap().value, leg.eval(5, &ratio(1, 3), &x).unwrap().value);
    }

    #[test]
    fn kernel_integrates_to_n() {
        let k = kernel::<BigReal>(angelesco(), 2, 8);
        for n in 1..=8 {
            assert!((k.normalized_trace(n).unwrap().to_f64() - 1.0).abs() < 1e-40);
        }
    }

    #[test]
    fn reproducing_residual_exact_zero() {
        let k = kernel::<Q>(angelesco(), 2, 8);
        for n in 1..=8 {
            for x in [ratio(-3, 4), ratio(0, 1), ratio(2, 5)] {
                assert!(k.reproducing_residual(n, &x).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn reproducing_residual_against_quadrature() {
        let sys = angelesco();
        let k = kernel::<BigReal>(sys.clone(), 2, 6);
        let x = BigReal::from_f64(0.3);
        let n = 6;
        let direct = sys
            .integrate(|y: &BigReal| Ok(k.eval(n, &x, y)?.value * &k.eval(n, y, &x)?.value))
            .unwrap()
            .value;
        assert!((direct - k.diag(n, &x).unwrap()).abs().to_f64() < 1e-40);
    }

    #[test]
    fn lemma_contraction_matches_quadrature() {
        let sys = angelesco();
        let size = 14;
        let fam = Arc::new(PathFamily::build(Arc::new(Mop::<BigReal>::new(sys.clone())), &Path::stepline(2, size), size).unwrap());
        let j = build_j(&fam, size).unwrap();
        let k = CDKernel::new(fam);
        let x = BigReal::from_f64(-0.4);
        for n in [3usize, 6, 10] {
            for power in 0..=3usize {
                let g = k.nevai_g(&j, n, &x, power).unwrap();
                let direct = sys
                    .integrate(|y: &BigReal| {
                        let mut yk = BigReal::one();
                        for _ in 0..power {
                            yk *= y;
                        }
                        Ok(k.eval(n, &x, y)?.value * &yk * &k.eval(n, y, &x)?.value)
                    })
                    .unwrap()
                    .value
                    / &k.diag(n, &x).unwrap();
                assert!((g - direct).abs().to_f64() < 1e-40, "n = {n}, k = {power}");
            }
        }
    }

    #[test]
    fn nevai_small_cases() {
        let fam = Arc::new(PathFamily::build(Arc::new(Mop::<Q>::new(MeasureSystem::legendre())), &Path::stepline(1, 6), 6).unwrap());
        let j = build_j(&fam, 6).unwrap();
        let k = CDKernel::new(fam);
        assert_eq!(k.nevai_g(&j, 1, &ratio(1, 3), 1).unwrap(), Q::zero());
        for n in 1..=5 {
            assert_eq!(k.nevai_g(&j, n, &ratio(2, 7), 0).unwrap(), Q::one());
        }
        assert!(k.hypothesis_c(3, &ratio(0, 1), 0).unwrap().entries.is_empty());
    }

    #[test]
    fn detpos_and_positivity() {
        let k = kernel::<Q>(angelesco(), 2, 4);
        let pts = [ratio(-7, 10), ratio(-1, 5), ratio(1, 2)];
        let rep = k.detpos_check(3, &pts).unwrap();
        assert!(rep.sign >= 0);
        assert!(rep.exact);
        assert!(k.detpos_check(3, &[ratio(1, 2), ratio(-1, 5)]).is_err());
        let grid: Vec<Q> = support_grid(k.system(), 20);
        assert_eq!(grid.len(), 20);
        let scan = k.positivity_scan(4, &grid).unwrap();
        assert_eq!(scan.negative_count, 0);
        let empty = k.positivity_scan(4, &[]).unwrap();
        assert!(empty.min.is_none());
    }

    #[test]
    fn legendre_random_determinants_nonnegative() {
        let k = kernel::<BigReal>(MeasureSystem::legendre(), 1, 4);
        for t in random_tuples(k.system(), 4, 20, 7) {
            let pts: Vec<BigReal> = t.iter().map(|&v| BigReal::from_f64(v)).collect();
            assert!(k.detpos_check(4, &pts).unwrap().determinant >= -1e-60);
        }
        assert_eq!(random_tuples(k.system(), 3, 5, 11), random_tuples(k.system(), 3, 5, 11));
    }

    #[test]
    fn atom_limit() {
        let leb = WeightComponent::lebesgue(Interval::from_ints(-1, 1).unwrap());
        let sys = MeasureSystem::single(leb.with_atom(ratio(2, 1), ratio(1, 2))).unwrap();
        let k = kernel::<BigReal>(sys, 1, 20);
        let table = k.atom_limit_experiment(&BigReal::from_usize(2), &[5, 10, 20]).unwrap();
        assert_eq!(table.target, 2.0);
        assert!(table.last_error.unwrap() < 1e-3);
        assert!(k.atom_limit_experiment(&BigReal::from_f64(0.5), &[5]).is_err());
        let atoms = WeightComponent::atoms_only(vec![
            crate::measures::Atom { at: ratio(0, 1), mass: ratio(1, 1) },
            crate::measures::Atom { at: ratio(1, 1), mass: ratio(1, 1) },
            crate::measures::Atom { at: ratio(3, 1), mass: ratio(1, 1) },
        ]);
        let toy = kernel::<Q>(MeasureSystem::single(atoms).unwrap(), 1, 3);
        let t = toy.atom_limit_experiment(&ratio(1, 1), &[3]).unwrap();
        assert_eq!(t.rows, vec![(3, 1.0)]);
    }

    #[test]
    fn r1_products_are_nonnegative() {
        let k = kernel::<BigReal>(MeasureSystem::legendre(), 1, 8);
        let grid: Vec<BigReal> = support_grid(k.system(), 50);
        let s = k.product_sign_scan(8, &BigReal::from_f64(0.2), &grid).unwrap();
        assert_eq!(s.negative, 0);
    }

    #[test]
    fn jacobi_pineiro_exact_kernel_at_squares() {
        let sys =
            MeasureSystem::jacobi_pineiro(&[ratio(0, 1), ratio(1, 2)], &ratio(0, 1), ReferenceRule::SumOfComponents)
                .unwrap();
        let k = kernel::<Q>(sys, 2, 6);
        for x in [ratio(1, 4), ratio(4, 9), ratio(9, 16)] {
            assert!(k.reproducing_residual(6, &x).unwrap().is_zero());
        }
    }
}
