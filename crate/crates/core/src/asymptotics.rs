//! Zero counting measures `nu_n`, kernel measures `eta_n` and their moment gaps.
//!
//! With `J_n` the `n x n` truncation of the recurrence matrix,
//! `int x^l dnu_n = tr(J_n^l) / n` and `int x^l deta_n = (1/n) sum_{j<n} [J^l]_{jj}`.
//! The two differ only in the last `l` rows, which gives the `O(1/n)` rate.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hessenberg::HessenbergMatrix;
use crate::kernel::CDKernel;
use crate::measures::MeasureSystem;
use crate::mop::PathFamily;
use crate::quadrature::QuadOptions;
use crate::roots::{interlacing_check, InterlacingReport, RootList};
use crate::scalar::Scalar;

/// `(1/n) tr(J_n^l)`.
pub fn nu_moment<S: Scalar>(j: &HessenbergMatrix<S>, n: usize, l: usize) -> Result<S> {
    nu_moment_rows(j, n, l, 0)
}

/// `(1/n) sum_{i<n} [J^l]_{ii}` over the untruncated matrix.
pub fn eta_moment<S: Scalar>(j: &HessenbergMatrix<S>, n: usize, l: usize) -> Result<S> {
    eta_moment_rows(j, n, l, 0)
}

/// [`nu_moment`] restricted to diagonal entries `i >= from`.
pub fn nu_moment_rows<S: Scalar>(j: &HessenbergMatrix<S>, n: usize, l: usize, from: usize) -> Result<S> {
    check_n(n)?;
    let mut acc = S::zero();
    for i in from..n {
        acc += &j.truncated_power_diag(l, i, n)?;
    }
    Ok(acc / &S::from_usize(n))
}

/// [`eta_moment`] restricted to diagonal entries `i >= from`.
pub fn eta_moment_rows<S: Scalar>(j: &HessenbergMatrix<S>, n: usize, l: usize, from: usize) -> Result<S> {
    check_n(n)?;
    let mut acc = S::zero();
    for v in j.power_window(l, from..n)? {
        acc += &v;
    }
    Ok(acc / &S::from_usize(n))
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Validation("moments of nu_n need n >= 1".into()));
    }
    Ok(())
}

/// `(1/n) sum_k m_k x_k^l` over the roots of `p_n`.
pub fn nu_moment_from_roots<S: Scalar>(roots: &RootList, l: usize) -> S {
    let mut acc = S::zero();
    for r in &roots.roots {
        let x: S = r.value();
        let mut p = S::one();
        for _ in 0..l {
            p *= &x;
        }
        acc += &(p * &S::from_usize(r.multiplicity));
    }
    acc / &S::from_usize(roots.degree.max(1))
}

/// `nu_n` moments for `l = 0..=lmax`.
pub fn nu_moments<S: Scalar>(j: &HessenbergMatrix<S>, n: usize, lmax: usize) -> Result<Vec<S>> {
    (0..=lmax).map(|l| nu_moment(j, n, l)).collect()
}

#[derive(Clone, Debug)]
pub struct GapRow<S> {
    pub n: usize,
    pub ell: usize,
    pub nu: S,
    pub eta: S,
    pub gap: S,
}

/// Least-squares slope of `log gap` against `log n` for one `l`.
#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub ell: usize,
    pub slope: Option<f64>,
    pub points: usize,
    /// Every gap is zero (exactly, or below working precision in float mode).
    pub identically_zero: bool,
}

#[derive(Clone, Debug)]
pub struct MomentGapTable<S> {
    pub rows: Vec<GapRow<S>>,
    pub fits: Vec<SlopeFit>,
}

impl<S: Scalar> MomentGapTable<S> {
    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = String::from("# mopkit gaps v1\nn,ell,nu,eta,gap\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n,
                r.ell,
                r.nu.to_decimal(digits),
                r.eta.to_decimal(digits),
                r.gap.to_decimal(digits)
            ));
        }
        out
    }

    pub fn fit(&self, ell: usize) -> Option<&SlopeFit> {
        self.fits.iter().find(|f| f.ell == ell)
    }

    pub fn gaps(&self, ell: usize) -> Vec<(usize, S)> {
        self.rows.iter().filter(|r| r.ell == ell).map(|r| (r.n, r.gap.clone())).collect()
    }
}

/// Gaps below this are treated as zero when fitting.
///
/// Entries of `J` that vanish analytically pick up roundoff that grows with
/// the row index, so the floor sits at `eps^(1/4)` rather than near `eps`.
pub fn zero_threshold<S: Scalar>() -> f64 {
    if S::EXACT {
        0.0
    } else {
        S::epsilon().to_f64().powf(0.25)
    }
}

/// Slope of the least-squares line through `(ln x, ln y)`; needs 4 points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 4 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `|nu_n moment - eta_n moment|` for every `n` in `ns`, `l = 0..=lmax`,
/// with a decay-exponent fit per `l`.
pub fn moment_gap_experiment<S: Scalar>(j: &HessenbergMatrix<S>, ns: &[usize], lmax: usize) -> Result<MomentGapTable<S>> {
    let cells: Vec<(usize, usize)> = ns.iter().flat_map(|&n| (0..=lmax).map(move |l| (n, l))).collect();
    let rows: Vec<GapRow<S>> = cells
        .par_iter()
        .map(|&(n, l)| {
            let nu = nu_moment(j, n, l)?;
            let eta = eta_moment(j, n, l)?;
            let gap = (nu.clone() - &eta).abs();
            Ok(GapRow { n, ell: l, nu, eta, gap })
        })
        .collect::<Result<_>>()?;
    let thr = zero_threshold::<S>();
    let fits = (0..=lmax)
        .map(|l| {
            let pts: Vec<(f64, f64)> =
                rows.iter().filter(|r| r.ell == l).map(|r| (r.n as f64, r.gap.to_f64())).collect();
            let identically_zero = pts.iter().all(|p| p.1 <= thr);
            SlopeFit {
                ell: l,
                slope: if identically_zero { None } else { loglog_slope(&pts) },
                points: pts.len(),
                identically_zero,
            }
        })
        .collect();
    Ok(MomentGapTable { rows, fits })
}

/// `(1/n) int |d(x)| dmu(x)` for an arbitrary diagonal `d`.
pub fn tv_value<S, F>(system: &MeasureSystem, n: usize, diag: F, rel_tol: &S) -> Result<S>
where
    S: Scalar,
    F: Fn(&S) -> Result<S> + Sync,
{
    if n == 0 {
        return Err(Error::Validation("tv bound needs n >= 1".into()));
    }
    let f = |x: &S| -> Result<Vec<S>> { Ok(vec![diag(x)?.abs()]) };
    let q = system.integrate_many_with(f, 1, &QuadOptions::with_tol(rel_tol.clone()))?;
    Ok(q[0].value.clone() / &S::from_usize(n))
}

/// `(1/n) int |K_n(x,x)| dmu(x)` for each `n` in `ns`.
pub fn tv_bound<S: Scalar>(kernel: &CDKernel<S>, ns: &[usize], rel_tol: &S) -> Result<Vec<(usize, S)>> {
    ns.iter()
        .map(|&n| Ok((n, tv_value(kernel.system(), n, |x: &S| kernel.diag_direct(n, x), rel_tol)?)))
        .collect()
}

/// Interlacing of `p_n, p_{n+1}` for `n = 1..nmax` inside the support hull.
pub fn interlacing_scan<S: Scalar>(family: &PathFamily<S>, nmax: usize, bits: u32) -> Result<Vec<InterlacingReport>> {
    if nmax >= family.size() {
        return Err(Error::Bounds { requested: nmax + 1, available: family.size() });
    }
    let (a, b) = family.system().hull();
    (1..=nmax)
        .into_par_iter()
        .map(|n| interlacing_check(family.p(n), family.p(n + 1), (&a, &b), bits))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakLimitRow {
    pub ell: usize,
    pub nu: f64,
    pub target: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakLimitReport {
    pub rows: Vec<WeakLimitRow>,
    pub max_deviation: f64,
}

/// Moment deviations `|nu_l - target_l|` for `l <= lmax`.
pub fn weak_limit_compare(nu: &[f64], target: &[f64], lmax: usize) -> Result<WeakLimitReport> {
    if nu.len() <= lmax || target.len() <= lmax {
        return Err(Error::Bounds { requested: lmax + 1, available: nu.len().min(target.len()) });
    }
    let rows: Vec<WeakLimitRow> = (0..=lmax)
        .map(|l| WeakLimitRow { ell: l, nu: nu[l], target: target[l], deviation: (nu[l] - target[l]).abs() })
        .collect();
    let max_deviation = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(WeakLimitReport { rows, max_deviation })
}
