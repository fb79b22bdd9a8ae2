//! Discretized vector equilibrium problems for the logarithmic kernel.
//!
//! Each component `eta_j` lives on `m` equal cells of its interval and is
//! taken piecewise constant, so every energy is an exact finite sum of cell
//! pair integrals of `log 1/|x - y|`. The energy is
//! `E = sum_j c_jj I(eta_j, eta_j) + sum_{j<k} c_jk I(eta_j, eta_k)`
//! minimized over nonnegative weights with prescribed component masses.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{pivoted_solve, Matrix};
use crate::measures::Interval;

/// `Phi'' = log|t|`, `Phi(0) = 0`.
fn phi(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        0.5 * t * t * t.abs().ln() - 0.75 * t * t
    }
}

/// `Psi' = log|t|`, `Psi(0) = 0`.
fn psi(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.abs().ln() - t
    }
}

/// Average of `log 1/|x - y|` over the cells `[a1,b1] x [a2,b2]`; a zero-width
/// cell stands for a point.
pub fn cell_log_average(a1: f64, b1: f64, a2: f64, b2: f64) -> Result<f64> {
    let (h1, h2) = (b1 - a1, b2 - a2);
    let v = match (h1 > 0.0, h2 > 0.0) {
        (true, true) => (phi(b1 - a2) - phi(a1 - a2) - phi(b1 - b2) + phi(a1 - b2)) / (h1 * h2),
        (false, true) => (psi(a1 - a2) - psi(a1 - b2)) / h2,
        (true, false) => (psi(a2 - a1) - psi(a2 - b1)) / h1,
        (false, false) => {
            if a1 == a2 {
                return Err(Error::Config(format!("two point masses at {a1} have infinite mutual energy")));
            }
            (a1 - a2).abs().ln()
        }
    };
    Ok(-v)
}

/// Nonnegative measure with constant density on each of `m` equal cells.
#[derive(Clone, Debug, Serialize)]
pub struct DiscretizedMeasure {
    /// `None` for a measure made of point masses.
    pub interval: Option<Interval>,
    /// Cell midpoints.
    pub grid: Vec<f64>,
    /// Half the cell width (zero for point masses).
    pub half_width: f64,
    /// Mass carried by each cell.
    pub weights: Vec<f64>,
    pub mass: f64,
}

impl DiscretizedMeasure {
    /// Uniform distribution of `mass` over `m` cells of `interval`.
    pub fn uniform(interval: &Interval, m: usize, mass: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Validation("grid size must be positive".into()));
        }
        let grid: Vec<f64> = interval.midpoints::<f64>(m);
        let h = num_traits::ToPrimitive::to_f64(&interval.length()).unwrap_or(f64::NAN) / m as f64;
        Ok(DiscretizedMeasure {
            interval: Some(interval.clone()),
            grid,
            half_width: h / 2.0,
            weights: vec![mass / m as f64; m],
            mass,
        })
    }

    /// Point masses.
    pub fn points(at: &[f64], weights: &[f64]) -> Result<Self> {
        if at.len() != weights.len() || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Validation("point masses need matching nonnegative weights".into()));
        }
        Ok(DiscretizedMeasure {
            interval: None,
            grid: at.to_vec(),
            half_width: 0.0,
            weights: weights.to_vec(),
            mass: weights.iter().sum(),
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn cell(&self, i: usize) -> (f64, f64) {
        (self.grid[i] - self.half_width, self.grid[i] + self.half_width)
    }

    /// `int x^l` for `l = 0..=lmax`, exact for the piecewise-constant density.
    pub fn moments(&self, lmax: usize) -> Vec<f64> {
        (0..=lmax)
            .map(|l| {
                self.weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        let (a, b) = self.cell(i);
                        if self.half_width == 0.0 {
                            w * a.powi(l as i32)
                        } else {
                            w * (b.powi(l as i32 + 1) - a.powi(l as i32 + 1)) / ((l as f64 + 1.0) * (b - a))
                        }
                    })
                    .sum()
            })
            .collect()
    }

    /// Cell weights reversed and mirrored through the origin.
    pub fn mirrored(&self) -> Self {
        let mut m = self.clone();
        m.grid = self.grid.iter().rev().map(|x| -x).collect();
        m.weights.reverse();
        m.interval = self.interval.as_ref().map(|iv| Interval::new(-iv.b().clone(), -iv.a().clone()).expect("nonempty"));
        m
    }
}

/// Cell-pair interaction matrix `G_ab` between two discretizations.
fn interaction(eta: &DiscretizedMeasure, nu: &DiscretizedMeasure) -> Result<Vec<Vec<f64>>> {
    (0..eta.len())
        .into_par_iter()
        .map(|a| {
            let (a1, b1) = eta.cell(a);
            (0..nu.len())
                .map(|b| {
                    let (a2, b2) = nu.cell(b);
                    if eta.grid[a] == nu.grid[b] && eta.half_width != nu.half_width {
                        return Err(Error::Config(format!(
                            "distinct cells share the grid point {}",
                            eta.grid[a]
                        )));
                    }
                    cell_log_average(a1, b1, a2, b2)
                })
                .collect()
        })
        .collect()
}

/// `I(eta, nu) = int int log 1/|x - y| deta dnu`.
pub fn mutual_energy(eta: &DiscretizedMeasure, nu: &DiscretizedMeasure) -> Result<f64> {
    let g = interaction(eta, nu)?;
    Ok(g.iter().zip(&eta.weights).map(|(row, wa)| wa * row.iter().zip(&nu.weights).map(|(x, wb)| x * wb).sum::<f64>()).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Angelesco,
    Nikishin,
    Custom,
}

/// Coupling coefficients and component masses.
#[derive(Clone, Debug, Serialize)]
pub struct InteractionSpec {
    pub preset: Preset,
    pub r: usize,
    /// Symmetric; the energy uses `c_jj` on self terms and `c_jk` once per pair `j < k`.
    pub coupling: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    pub warnings: Vec<String>,
}

impl InteractionSpec {
    /// Off-diagonal coupling `1`, masses `s_i`.
    pub fn angelesco(s: &[f64]) -> Result<Self> {
        InteractionSpec::build(Preset::Angelesco, vec![vec![1.0; s.len()]; s.len()], s.to_vec())
    }

    /// Coupling `-1` between neighbours, masses `sum_{j >= i} s_j`.
    pub fn nikishin(s: &[f64]) -> Result<Self> {
        let r = s.len();
        let coupling = (0..r)
            .map(|j| (0..r).map(|k| if j == k { 1.0 } else if j.abs_diff(k) == 1 { -1.0 } else { 0.0 }).collect())
            .collect();
        let masses = (0..r).map(|i| s[i..].iter().sum()).collect();
        InteractionSpec::build(Preset::Nikishin, coupling, masses)
    }

    pub fn custom(coupling: Vec<Vec<f64>>, masses: Vec<f64>) -> Result<Self> {
        InteractionSpec::build(Preset::Custom, coupling, masses)
    }

    fn build(preset: Preset, coupling: Vec<Vec<f64>>, masses: Vec<f64>) -> Result<Self> {
        let r = masses.len();
        if r == 0 {
            return Err(Error::Validation("at least one component is required".into()));
        }
        if coupling.len() != r || coupling.iter().any(|row| row.len() != r) {
            return Err(Error::Validation("coupling matrix must be r x r".into()));
        }
        for j in 0..r {
            if coupling[j][j] != 1.0 {
                return Err(Error::Validation(format!("coupling c_{j}{j} must be 1")));
            }
            for k in 0..j {
                if coupling[j][k] != coupling[k][j] {
                    return Err(Error::Validation("coupling matrix must be symmetric".into()));
                }
            }
        }
        if masses.iter().any(|m| m.is_nan() || *m <= 0.0) {
            return Err(Error::Validation("component masses must be positive".into()));
        }
        let mut warnings = Vec::new();
        if !quadratic_form_definite(&coupling) {
            warnings.push("coupling form is not positive definite; the minimizer may not be unique".into());
        }
        Ok(InteractionSpec { preset, r, coupling, masses, warnings })
    }

    /// Weight of `I(eta_j, eta_k)` in the symmetric form `sum_jk B_jk I_jk`.
    fn form(&self, j: usize, k: usize) -> f64 {
        if j == k {
            self.coupling[j][j]
        } else {
            self.coupling[j][k] / 2.0
        }
    }
}

/// Cholesky test on `B_jj = c_jj`, `B_jk = c_jk / 2`.
fn quadratic_form_definite(c: &[Vec<f64>]) -> bool {
    let r = c.len();
    let b = |j: usize, k: usize| if j == k { c[j][j] } else { c[j][k] / 2.0 };
    let mut l = vec![vec![0.0; r]; r];
    for j in 0..r {
        for k in 0..=j {
            let s: f64 = (0..k).map(|p| l[j][p] * l[k][p]).sum();
            if j == k {
                let d = b(j, j) - s;
                if d <= 0.0 {
                    return false;
                }
                l[j][j] = d.sqrt();
            } else {
                l[j][k] = (b(j, k) - s) / l[k][k];
            }
        }
    }
    true
}

#[derive(Clone, Debug)]
pub struct MinimizeOptions {
    /// Cells per component.
    pub grid_size: usize,
    /// Stop when the optimality residual falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { grid_size: 400, tol: 1e-10, max_iter: 100_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumSolution {
    pub components: Vec<DiscretizedMeasure>,
    pub energy: f64,
    pub iterations: usize,
    /// Per component: largest potential on the support minus the smallest
    /// potential anywhere on the interval (zero at a Frostman point).
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub converged: bool,
    /// Energy never increased between iterations.
    pub monotone: bool,
    pub diagnostic: Option<String>,
    pub warnings: Vec<String>,
}

impl EquilibriumSolution {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# mopkit equilibrium v1\ncomponent,grid_point,weight\n");
        for (j, c) in self.components.iter().enumerate() {
            for (x, w) in c.grid.iter().zip(&c.weights) {
                out.push_str(&format!("{},{:.17e},{:.17e}\n", j + 1, x, w));
            }
        }
        out
    }
}

struct Problem {
    /// `E(w) = w^T A w / 2`.
    a: Vec<Vec<f64>>,
    /// Component of each cell.
    owner: Vec<usize>,
    masses: Vec<f64>,
}

impl Problem {
    fn energy(&self, w: &[f64]) -> f64 {
        0.5 * self.a.iter().zip(w).map(|(row, wi)| wi * dot(row, w)).sum::<f64>()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        self.a.par_iter().map(|row| dot(row, w)).collect()
    }

    fn residuals(&self, w: &[f64], g: &[f64], floor: f64) -> Vec<f64> {
        (0..self.masses.len())
            .map(|j| {
                let cells = (0..w.len()).filter(|&i| self.owner[i] == j);
                let lo = cells.clone().map(|i| g[i]).fold(f64::INFINITY, f64::min);
                let hi = cells.filter(|&i| w[i] > floor).map(|i| g[i]).fold(f64::NEG_INFINITY, f64::max);
                (hi - lo).max(0.0)
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes the discretized energy over nonnegative weights with the
/// prescribed masses.
///
/// Active-set steps solve the stationarity system on the current support and
/// move toward it with an exact line search; pairwise conditional-gradient
/// steps (mass moved from the highest-potential support cell to the
/// lowest-potential cell) polish the result. Both step types never raise
/// the energy.
pub fn minimize(spec: &InteractionSpec, intervals: &[Interval], opts: &MinimizeOptions) -> Result<EquilibriumSolution> {
    if intervals.len() != spec.r {
        return Err(Error::Validation(format!("{} intervals for {} components", intervals.len(), spec.r)));
    }
    for j in 0..spec.r {
        for k in j + 1..spec.r {
            let coupled = spec.coupling[j][k] != 0.0;
            if coupled && intervals[j].interiors_overlap(&intervals[k]) && spec.preset != Preset::Custom {
                return Err(Error::Validation(format!("intervals {} and {} overlap", intervals[j], intervals[k])));
            }
        }
    }
    let mut comps = intervals
        .iter()
        .zip(&spec.masses)
        .map(|(iv, m)| DiscretizedMeasure::uniform(iv, opts.grid_size, *m))
        .collect::<Result<Vec<_>>>()?;

    let m = opts.grid_size;
    let total = m * spec.r;
    let owner: Vec<usize> = (0..total).map(|i| i / m).collect();
    let mut a = vec![vec![0.0; total]; total];
    for j in 0..spec.r {
        for k in j..spec.r {
            let b = spec.form(j, k);
            if b == 0.0 {
                continue;
            }
            let g = interaction(&comps[j], &comps[k])?;
            for (p, row) in g.iter().enumerate() {
                for (q, v) in row.iter().enumerate() {
                    a[j * m + p][k * m + q] = 2.0 * b * v;
                    a[k * m + q][j * m + p] = 2.0 * b * v;
                }
            }
        }
    }
    let prob = Problem { a, owner, masses: spec.masses.clone() };
    let mut w: Vec<f64> = comps.iter().flat_map(|c| c.weights.clone()).collect();
    let mut g = prob.gradient(&w);
    let mut energy = prob.energy(&w);
    let mut monotone = true;
    let mut iterations = 0;
    let floor = 1e-300;
    let mut support: Vec<bool> = vec![true; total];

    // active-set phase
    let mut active_rounds = 0;
    while iterations < opts.max_iter && active_rounds < 4 * total {
        active_rounds += 1;
        iterations += 1;
        let Some(target) = stationary_point(&prob, &support) else { break };
        let d: Vec<f64> = target.iter().zip(&w).map(|(t, x)| t - x).collect();
        let mut t_max = 1.0f64;
        let mut blocking = None;
        for i in 0..total {
            if d[i] < 0.0 && target[i] < 0.0 {
                let t = w[i] / -d[i];
                if t < t_max {
                    t_max = t;
                    blocking = Some(i);
                }
            }
        }
        let slope = dot(&g, &d);
        let ad = prob.gradient(&d);
        let curv = dot(&d, &ad);
        let t = if curv > 0.0 { (-slope / curv).clamp(0.0, t_max) } else if slope < 0.0 { t_max } else { 0.0 };
        for i in 0..total {
            w[i] = (w[i] + t * d[i]).max(0.0);
            g[i] += t * ad[i];
        }
        if let Some(b) = blocking.filter(|_| t >= t_max) {
            w[b] = 0.0;
        }
        for i in 0..total {
            if support[i] && w[i] <= floor && (t < 1.0 || target[i] <= 0.0) && d[i] <= 0.0 {
                support[i] = w[i] > 0.0;
            }
        }
        let e = prob.energy(&w);
        monotone &= e <= energy + 1e-14 * energy.abs().max(1.0);
        energy = e;
        if t < t_max && t < 1.0 {
            continue;
        }
        if t >= 1.0 {
            // stationary on the support: admit the most violating outside cell per component
            g = prob.gradient(&w);
            let mut added = false;
            for j in 0..spec.r {
                let level = (0..total).filter(|&i| prob.owner[i] == j && support[i]).map(|i| g[i]).fold(f64::NEG_INFINITY, f64::max);
                let cand = (0..total)
                    .filter(|&i| prob.owner[i] == j && !support[i])
                    .min_by(|&x, &y| g[x].partial_cmp(&g[y]).expect("finite"));
                if let Some(i) = cand {
                    if g[i] < level - opts.tol {
                        support[i] = true;
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }
    }

    // pairwise conditional-gradient polish
    g = prob.gradient(&w);
    let mut residuals = prob.residuals(&w, &g, floor);
    while residuals.iter().cloned().fold(0.0, f64::max) > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let j = (0..spec.r).max_by(|&x, &y| residuals[x].partial_cmp(&residuals[y]).expect("finite")).expect("r >= 1");
        let cells: Vec<usize> = (0..total).filter(|&i| prob.owner[i] == j).collect();
        let to = *cells.iter().min_by(|&&x, &&y| g[x].partial_cmp(&g[y]).expect("finite")).expect("cells");
        let from = *cells
            .iter()
            .filter(|&&i| w[i] > floor)
            .max_by(|&&x, &&y| g[x].partial_cmp(&g[y]).expect("finite"))
            .expect("support");
        let slope = g[to] - g[from];
        let curv = prob.a[to][to] - 2.0 * prob.a[to][from] + prob.a[from][from];
        let step = if curv > 0.0 { (-slope / curv).min(w[from]) } else { w[from] };
        if step <= 0.0 {
            break;
        }
        w[to] += step;
        w[from] -= step;
        for i in 0..total {
            g[i] += step * (prob.a[i][to] - prob.a[i][from]);
        }
        let e = energy + slope * step + 0.5 * curv * step * step;
        monotone &= e <= energy + 1e-14 * energy.abs().max(1.0);
        energy = e;
        residuals = prob.residuals(&w, &g, floor);
    }
    energy = prob.energy(&w);
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    let converged = max_residual <= opts.tol.max(1e-9);
    let diagnostic = (!converged).then(|| {
        format!("stopped after {iterations} iterations with optimality residual {max_residual:.3e}")
    });
    for (j, c) in comps.iter_mut().enumerate() {
        c.weights = w[j * m..(j + 1) * m].to_vec();
        // renormalize away roundoff drift so masses hold to 1e-12
        let s: f64 = c.weights.iter().sum();
        if s > 0.0 {
            let f = c.mass / s;
            c.weights.iter_mut().for_each(|x| *x *= f);
        }
    }
    Ok(EquilibriumSolution {
        components: comps,
        energy,
        iterations,
        residuals,
        max_residual,
        converged,
        monotone,
        diagnostic,
        warnings: spec.warnings.clone(),
    })
}

/// Minimizer of the energy on the given support with the mass constraints
/// (weights may come out negative).
fn stationary_point(prob: &Problem, support: &[bool]) -> Option<Vec<f64>> {
    let idx: Vec<usize> = (0..support.len()).filter(|&i| support[i]).collect();
    let r = prob.masses.len();
    let n = idx.len();
    let mut k = Matrix::<f64>::zeros(n + r, n + r);
    let mut rhs = vec![0.0; n + r];
    for (p, &i) in idx.iter().enumerate() {
        for (q, &j) in idx.iter().enumerate() {
            k[(p, q)] = prob.a[i][j];
        }
        k[(p, n + prob.owner[i])] = 1.0;
        k[(n + prob.owner[i], p)] = 1.0;
    }
    rhs[n..n + r].copy_from_slice(&prob.masses[..r]);
    let sol = pivoted_solve(k, rhs)?;
    let mut out = vec![0.0; support.len()];
    for (p, &i) in idx.iter().enumerate() {
        out[i] = sol[p];
    }
    Some(out)
}

/// Moments `l = 0..=lmax` of the limit of the zero counting measures:
/// the sum of all components for Angelesco-type couplings, the first
/// component for Nikishin.
pub fn limit_measure(solution: &EquilibriumSolution, spec: &InteractionSpec, lmax: usize) -> Vec<f64> {
    match spec.preset {
        Preset::Nikishin => solution.components[0].moments(lmax),
        _ => {
            let mut acc = vec![0.0; lmax + 1];
            for c in &solution.components {
                for (a, m) in acc.iter_mut().zip(c.moments(lmax)) {
                    *a += m;
                }
            }
            acc
        }
    }
}

/// Energy of a solution recomputed from its components.
pub fn total_energy(solution: &EquilibriumSolution, spec: &InteractionSpec) -> Result<f64> {
    let mut e = 0.0;
    for j in 0..spec.r {
        for k in j..spec.r {
            let c = spec.coupling[j][k];
            if c != 0.0 {
                e += c * mutual_energy(&solution.components[j], &solution.components[k])?;
            }
        }
    }
    Ok(e)
}
