//! Measure systems: components with moments, densities, Cauchy transforms
//! and integration against the reference measure.
//!
//! A component is a continuous part `scale (x-a)^left (b-x)^right dx` on an
//! interval, optionally multiplied by the Cauchy transform of another
//! component (Nikishin construction), plus finitely many atoms.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_many, Quad, QuadOptions};
use crate::scalar::{exact_pow, parse_ratio, Scalar};

/// Compact interval `[a, b]` with rational endpoints, `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Interval {
    #[serde(serialize_with = "ser_ratio")]
    a: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    b: BigRational,
}

fn ser_ratio<S: serde::Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

impl Interval {
    pub fn new(a: BigRational, b: BigRational) -> Result<Self> {
        if a >= b {
            return Err(Error::Interval { a: a.to_string(), b: b.to_string() });
        }
        Ok(Interval { a, b })
    }

    pub fn from_ints(a: i64, b: i64) -> Result<Self> {
        Interval::new(BigRational::from_integer(a.into()), BigRational::from_integer(b.into()))
    }

    /// Parses `"a,b"` with rational or decimal endpoints.
    pub fn parse(text: &str) -> Result<Self> {
        let (a, b) = text
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("interval '{text}' is not of the form a,b")))?;
        Interval::new(parse_ratio(a.trim())?, parse_ratio(b.trim())?)
    }

    pub fn a(&self) -> &BigRational {
        &self.a
    }

    pub fn b(&self) -> &BigRational {
        &self.b
    }

    pub fn length(&self) -> BigRational {
        &self.b - &self.a
    }

    pub fn contains_ratio(&self, x: &BigRational) -> bool {
        *x >= self.a && *x <= self.b
    }

    pub fn contains<S: Scalar>(&self, x: &S) -> bool {
        *x >= S::from_ratio(&self.a) && *x <= S::from_ratio(&self.b)
    }

    /// Closed intervals share at least one point.
    pub fn intersects(&self, other: &Interval) -> bool {
        self.a <= other.b && other.a <= self.b
    }

    /// Open interiors share a point.
    pub fn interiors_overlap(&self, other: &Interval) -> bool {
        self.a < other.b && other.a < self.b
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.a <= other.a && other.b <= self.b
    }

    /// `m` equally spaced interior points (cell midpoints).
    pub fn midpoints<S: Scalar>(&self, m: usize) -> Vec<S> {
        let a = S::from_ratio(&self.a);
        let h = S::from_ratio(&self.length()) / &S::from_usize(m);
        (0..m).map(|i| a.clone() + &(h.clone() * &(S::from_usize(2 * i + 1) / &S::from_usize(2)))).collect()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.a, self.b)
    }
}

/// `scale (x-a)^left (b-x)^right` on `[a, b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiWeight {
    pub scale: BigRational,
    pub left: BigRational,
    pub right: BigRational,
}

impl JacobiWeight {
    pub fn lebesgue() -> Self {
        JacobiWeight { scale: BigRational::one(), left: BigRational::zero(), right: BigRational::zero() }
    }

    fn is_lebesgue_multiple(&self) -> bool {
        self.left.is_zero() && self.right.is_zero()
    }

    /// Endpoint behaviour that defeats plain Gauss–Legendre.
    fn singular(&self) -> bool {
        !self.left.is_integer() || !self.right.is_integer()
    }

    fn eval<S: Scalar>(&self, iv: &Interval, x: &S) -> Result<S> {
        let l = x.clone() - &S::from_ratio(&iv.a);
        let r = S::from_ratio(&iv.b) - x;
        Ok(S::from_ratio(&self.scale) * &power(&l, &self.left)? * &power(&r, &self.right)?)
    }
}

fn power<S: Scalar>(x: &S, e: &BigRational) -> Result<S> {
    if e.is_zero() {
        return Ok(S::one());
    }
    if e.is_integer() && !e.is_negative() {
        let k = e.to_integer().to_u64().ok_or_else(|| Error::Domain("exponent too large".into()))?;
        let mut acc = S::one();
        for _ in 0..k {
            acc *= x;
        }
        return Ok(acc);
    }
    x.pow_ratio(e)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Density {
    Jacobi(JacobiWeight),
    /// `base(x) * C(inner)(x)`, the density of `<sigma, inner>`.
    CauchyProduct { base: JacobiWeight, inner: Box<WeightComponent> },
}

impl Density {
    fn base(&self) -> &JacobiWeight {
        match self {
            Density::Jacobi(w) => w,
            Density::CauchyProduct { base, .. } => base,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousPart {
    pub interval: Interval,
    pub density: Density,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Atom {
    #[serde(serialize_with = "ser_ratio")]
    pub at: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub mass: BigRational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentKind {
    ClosedFormRational,
    Quadrature,
}

/// One measure `mu_j`: a continuous part and/or atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightComponent {
    pub continuous: Option<ContinuousPart>,
    pub atoms: Vec<Atom>,
}

impl WeightComponent {
    pub fn lebesgue(interval: Interval) -> Self {
        WeightComponent::jacobi(interval, BigRational::zero(), BigRational::zero())
    }

    /// `(x-a)^left (b-x)^right` on `interval`; exponents must exceed -1.
    pub fn jacobi(interval: Interval, left: BigRational, right: BigRational) -> Self {
        WeightComponent {
            continuous: Some(ContinuousPart {
                interval,
                density: Density::Jacobi(JacobiWeight { scale: BigRational::one(), left, right }),
            }),
            atoms: Vec::new(),
        }
    }

    pub fn atoms_only(atoms: Vec<Atom>) -> Self {
        WeightComponent { continuous: None, atoms }
    }

    pub fn with_atom(mut self, at: BigRational, mass: BigRational) -> Self {
        self.atoms.push(Atom { at, mass });
        self
    }

    pub fn scaled(mut self, c: &BigRational) -> Self {
        if let Some(part) = self.continuous.as_mut() {
            match &mut part.density {
                Density::Jacobi(w) => w.scale *= c,
                Density::CauchyProduct { base, .. } => base.scale *= c,
            }
        }
        for a in &mut self.atoms {
            a.mass *= c;
        }
        self
    }

    fn validate(&self) -> Result<()> {
        if self.continuous.is_none() && self.atoms.is_empty() {
            return Err(Error::Construction("component has neither density nor atoms".into()));
        }
        if let Some(part) = &self.continuous {
            let w = part.density.base();
            if w.left <= -BigRational::one() || w.right <= -BigRational::one() {
                return Err(Error::Construction("Jacobi exponents must exceed -1".into()));
            }
            if w.scale.is_zero() {
                return Err(Error::Construction("zero density scale".into()));
            }
            if let Density::CauchyProduct { inner, .. } = &part.density {
                inner.validate()?;
            }
        }
        if self.atoms.iter().any(|a| !a.mass.is_positive()) {
            return Err(Error::Construction("atom masses must be positive".into()));
        }
        Ok(())
    }

    /// Smallest interval containing the support.
    pub fn hull(&self) -> Option<(BigRational, BigRational)> {
        let mut pts: Vec<BigRational> = self.atoms.iter().map(|a| a.at.clone()).collect();
        if let Some(p) = &self.continuous {
            pts.push(p.interval.a.clone());
            pts.push(p.interval.b.clone());
        }
        let lo = pts.iter().min()?.clone();
        let hi = pts.iter().max()?.clone();
        Some((lo, hi))
    }

    pub fn moment_kind(&self) -> MomentKind {
        match &self.continuous {
            None => MomentKind::ClosedFormRational,
            Some(p) => match &p.density {
                Density::Jacobi(w) if closed_form_scale(&p.interval, w).is_some() => MomentKind::ClosedFormRational,
                _ => MomentKind::Quadrature,
            },
        }
    }

    fn needs_grading(&self) -> bool {
        self.continuous.as_ref().is_some_and(|p| p.density.base().singular())
    }

    /// Density of the continuous part with respect to `dx`; zero outside its interval.
    pub fn density<S: Scalar>(&self, x: &S) -> Result<S> {
        let Some(part) = &self.continuous else {
            return Ok(S::zero());
        };
        if !part.interval.contains(x) {
            return Ok(S::zero());
        }
        match &part.density {
            Density::Jacobi(w) => w.eval(&part.interval, x),
            Density::CauchyProduct { base, inner } => {
                Ok(base.eval(&part.interval, x)? * &inner.cauchy_transform(x)?)
            }
        }
    }

    /// Mass of the atom at `x` (zero when there is none).
    pub fn atom_mass<S: Scalar>(&self, x: &S) -> S {
        self.atoms
            .iter()
            .filter(|a| S::from_ratio(&a.at) == *x)
            .fold(S::zero(), |acc, a| acc + &S::from_ratio(&a.mass))
    }

    /// Moments `m(0), ..., m(count-1)`.
    pub fn moments<S: Scalar>(&self, count: usize) -> Result<Vec<S>> {
        let mut out = vec![S::zero(); count];
        for atom in &self.atoms {
            let x = S::from_ratio(&atom.at);
            let mut t = S::from_ratio(&atom.mass);
            for slot in out.iter_mut() {
                *slot += &t;
                t *= &x;
            }
        }
        if let Some(part) = &self.continuous {
            let cont: Vec<S> = match &part.density {
                Density::Jacobi(w) if closed_form_scale(&part.interval, w).is_some() => {
                    jacobi_moments_exact(&part.interval, w, count)
                        .expect("closed form available")
                        .iter()
                        .map(S::from_ratio)
                        .collect()
                }
                _ => {
                    if S::EXACT {
                        return Err(Error::Inexact(format!(
                            "moments on {} have no rational closed form",
                            part.interval
                        )));
                    }
                    let iv = &part.interval;
                    let f = |x: &S| -> Result<Vec<S>> {
                        let rho = self.density(x)?;
                        let mut v = Vec::with_capacity(count);
                        let mut t = rho;
                        for _ in 0..count {
                            v.push(t.clone());
                            t *= x;
                        }
                        Ok(v)
                    };
                    let opts = QuadOptions::<S>::working().graded(self.needs_grading());
                    integrate_many(f, &S::from_ratio(&iv.a), &S::from_ratio(&iv.b), count, &opts)?
                        .into_iter()
                        .map(|q| q.value)
                        .collect()
                }
            };
            for (slot, c) in out.iter_mut().zip(cont) {
                *slot += &c;
            }
        }
        Ok(out)
    }

    pub fn moment<S: Scalar>(&self, k: usize) -> Result<S> {
        Ok(self.moments::<S>(k + 1)?.pop().expect("nonempty"))
    }

    /// `C(sigma)(x) = int dsigma(y) / (x - y)` for `x` off the support.
    pub fn cauchy_transform<S: Scalar>(&self, x: &S) -> Result<S> {
        let mut total = S::zero();
        for atom in &self.atoms {
            let d = x.clone() - &S::from_ratio(&atom.at);
            if d.is_zero() {
                return Err(Error::Domain(format!("Cauchy transform evaluated at the atom {}", atom.at)));
            }
            total += &(S::from_ratio(&atom.mass) / &d);
        }
        if let Some(part) = &self.continuous {
            let iv = &part.interval;
            if iv.contains(x) {
                return Err(Error::Domain(format!("Cauchy transform evaluated at {} inside {iv}", x.to_f64())));
            }
            match &part.density {
                Density::Jacobi(w) if w.is_lebesgue_multiple() => {
                    let num = x.clone() - &S::from_ratio(&iv.a);
                    let den = x.clone() - &S::from_ratio(&iv.b);
                    total += &(S::from_ratio(&w.scale) * &(num / &den).ln()?);
                }
                _ => {
                    if S::EXACT {
                        return Err(Error::Inexact("Cauchy transform of a continuous measure".into()));
                    }
                    let f = |y: &S| -> Result<Vec<S>> { Ok(vec![self.density(y)? / &(x.clone() - y)]) };
                    let opts = QuadOptions::<S>::working().graded(self.needs_grading());
                    let q = integrate_many(f, &S::from_ratio(&iv.a), &S::from_ratio(&iv.b), 1, &opts)?;
                    total += &q[0].value;
                }
            }
        }
        Ok(total)
    }
}

/// `(b-a)^{left+right+1} scale`, when the Beta factors and this power are rational.
fn closed_form_scale(iv: &Interval, w: &JacobiWeight) -> Option<BigRational> {
    let int_left = w.left.is_integer() && !w.left.is_negative();
    let int_right = w.right.is_integer() && !w.right.is_negative();
    if !int_left && !int_right {
        return None;
    }
    let e = &w.left + &w.right + BigRational::one();
    Some(exact_pow(&iv.length(), &e)? * &w.scale)
}

fn factorial(m: u64) -> BigRational {
    (1..=m).fold(BigRational::one(), |acc, k| acc * BigRational::from_integer(k.into()))
}

/// `B(p, q)` when `p` or `q` is a positive integer.
fn beta_rational(p: &BigRational, q: &BigRational) -> Option<BigRational> {
    let (int, other) = if q.is_integer() && q.is_positive() {
        (q, p)
    } else if p.is_integer() && p.is_positive() {
        (p, q)
    } else {
        return None;
    };
    // B(x, m+1) = m! / (x (x+1) ... (x+m))
    let m = (int - BigRational::one()).to_integer().to_u64()?;
    let mut den = BigRational::one();
    for i in 0..=m {
        den *= other + BigRational::from_integer(i.into());
    }
    Some(factorial(m) / den)
}

/// Exact moments of `scale (x-a)^left (b-x)^right` on `[a, b]`:
/// `m(k) = scale L^{l+r+1} sum_i C(k,i) a^{k-i} L^i B(l+i+1, r+1)`.
fn jacobi_moments_exact(iv: &Interval, w: &JacobiWeight, count: usize) -> Option<Vec<BigRational>> {
    let pref = closed_form_scale(iv, w)?;
    let len = iv.length();
    let one = BigRational::one();
    let q = &w.right + &one;
    let mut betas = Vec::with_capacity(count);
    let mut p = &w.left + &one;
    let mut beta = beta_rational(&p, &q)?;
    for _ in 0..count {
        betas.push(beta.clone());
        // B(p+1, q) = B(p, q) p / (p + q)
        beta = beta * &p / (&p + &q);
        p += &one;
    }
    let mut lpow = Vec::with_capacity(count);
    let mut t = one.clone();
    for _ in 0..count {
        lpow.push(t.clone());
        t *= &len;
    }
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let mut s = BigRational::zero();
        let mut binom = BigRational::one();
        let mut apow = vec![one.clone(); k + 1];
        for i in 1..=k {
            apow[i] = &apow[i - 1] * &iv.a;
        }
        for i in 0..=k {
            s += &binom * &apow[k - i] * &lpow[i] * &betas[i];
            binom = binom * BigRational::from_integer(((k - i) as i64).into())
                / BigRational::from_integer(((i + 1) as i64).into());
        }
        out.push(s * &pref);
    }
    Some(out)
}

/// How the reference measure `mu` is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceRule {
    SumOfComponents,
    FirstComponent,
    Explicit(Box<WeightComponent>),
}

impl ReferenceRule {
    pub fn name(&self) -> &'static str {
        match self {
            ReferenceRule::SumOfComponents => "sum-of-components",
            ReferenceRule::FirstComponent => "first-component",
            ReferenceRule::Explicit(_) => "explicit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Angelesco,
    JacobiPineiro,
    Nikishin,
    Single,
    Custom,
}

/// Values of `w_1(x), ..., w_r(x)`; `outside` marks points where the
/// reference density vanishes and the zero extension was used.
#[derive(Clone, Debug)]
pub struct WeightValues<S> {
    pub values: Vec<S>,
    pub outside: bool,
}

/// A vector of measures `(mu_1, ..., mu_r)` with a reference measure `mu`.
#[derive(Clone, Debug)]
pub struct MeasureSystem {
    kind: SystemKind,
    components: Vec<WeightComponent>,
    reference: ReferenceRule,
}

impl MeasureSystem {
    pub fn new(kind: SystemKind, components: Vec<WeightComponent>, reference: ReferenceRule) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Construction("a system needs at least one component".into()));
        }
        for c in &components {
            c.validate()?;
        }
        if components.len() > 1 && components.iter().any(|c| !c.atoms.is_empty()) {
            return Err(Error::Construction("atoms are only supported for r = 1".into()));
        }
        let sys = MeasureSystem { kind, components, reference };
        sys.check_reference()?;
        Ok(sys)
    }

    fn check_reference(&self) -> Result<()> {
        let dominated = |by: &WeightComponent, c: &WeightComponent| -> bool {
            let cont_ok = match (&c.continuous, &by.continuous) {
                (None, _) => true,
                (Some(p), Some(q)) => q.interval.contains_interval(&p.interval),
                (Some(_), None) => false,
            };
            cont_ok && c.atoms.iter().all(|a| by.atoms.iter().any(|b| b.at == a.at))
        };
        match &self.reference {
            ReferenceRule::SumOfComponents => Ok(()),
            ReferenceRule::FirstComponent => {
                if self.components.iter().all(|c| dominated(&self.components[0], c)) {
                    Ok(())
                } else {
                    Err(Error::Construction("first-component reference does not dominate every component".into()))
                }
            }
            ReferenceRule::Explicit(mu) => {
                mu.validate()?;
                if self.components.iter().all(|c| dominated(mu, c)) {
                    Ok(())
                } else {
                    Err(Error::Construction("explicit reference does not dominate every component".into()))
                }
            }
        }
    }

    /// Lebesgue measures on intervals with pairwise disjoint interiors.
    pub fn angelesco(intervals: Vec<Interval>) -> Result<Self> {
        for i in 0..intervals.len() {
            for j in i + 1..intervals.len() {
                if intervals[i].interiors_overlap(&intervals[j]) {
                    return Err(Error::Construction(format!(
                        "Angelesco intervals {} and {} overlap",
                        intervals[i], intervals[j]
                    )));
                }
            }
        }
        let comps = intervals.into_iter().map(WeightComponent::lebesgue).collect();
        MeasureSystem::new(SystemKind::Angelesco, comps, ReferenceRule::SumOfComponents)
    }

    /// Weights `x^{alpha_j} (1-x)^beta` on `[0, 1]`. The `alpha_j` must not
    /// differ by integers, otherwise the system is not perfect.
    pub fn jacobi_pineiro(alphas: &[BigRational], beta: &BigRational, reference: ReferenceRule) -> Result<Self> {
        for i in 0..alphas.len() {
            for j in i + 1..alphas.len() {
                if (&alphas[i] - &alphas[j]).is_integer() {
                    return Err(Error::Construction(format!(
                        "Jacobi-Pineiro exponents {} and {} differ by an integer",
                        alphas[i], alphas[j]
                    )));
                }
            }
        }
        let unit = Interval::from_ints(0, 1)?;
        let comps = alphas.iter().map(|a| WeightComponent::jacobi(unit.clone(), a.clone(), beta.clone())).collect();
        MeasureSystem::new(SystemKind::JacobiPineiro, comps, reference)
    }

    /// Nikishin system generated by continuous `sigmas`:
    /// `mu_1 = sigma_1`, `mu_k = <sigma_1, <sigma_2, ..., sigma_k>>`.
    pub fn nikishin(sigmas: Vec<WeightComponent>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::Construction("a Nikishin system needs at least one generator".into()));
        }
        for s in &sigmas {
            if !s.atoms.is_empty() || s.continuous.is_none() {
                return Err(Error::Construction("Nikishin generators must be continuous".into()));
            }
            if !matches!(s.continuous.as_ref().map(|p| &p.density), Some(Density::Jacobi(_))) {
                return Err(Error::Construction("Nikishin generators must be Jacobi weights".into()));
            }
        }
        let iv = |s: &WeightComponent| s.continuous.as_ref().expect("continuous").interval.clone();
        for w in sigmas.windows(2) {
            if iv(&w[0]).intersects(&iv(&w[1])) {
                return Err(Error::Construction(format!(
                    "consecutive Nikishin supports {} and {} intersect",
                    iv(&w[0]),
                    iv(&w[1])
                )));
            }
        }
        let compose = |outer: &WeightComponent, inner: WeightComponent| -> WeightComponent {
            let part = outer.continuous.as_ref().expect("continuous");
            WeightComponent {
                continuous: Some(ContinuousPart {
                    interval: part.interval.clone(),
                    density: Density::CauchyProduct { base: part.density.base().clone(), inner: Box::new(inner) },
                }),
                atoms: Vec::new(),
            }
        };
        let mut comps = vec![sigmas[0].clone()];
        for k in 1..sigmas.len() {
            let mut nested = sigmas[k].clone();
            for i in (0..k).rev() {
                nested = compose(&sigmas[i], nested);
            }
            comps.push(nested);
        }
        let kind = if sigmas.len() == 1 { SystemKind::Single } else { SystemKind::Nikishin };
        MeasureSystem::new(kind, comps, ReferenceRule::FirstComponent)
    }

    /// A single measure (`r = 1`).
    pub fn single(component: WeightComponent) -> Result<Self> {
        MeasureSystem::new(SystemKind::Single, vec![component], ReferenceRule::SumOfComponents)
    }

    /// Lebesgue measure on `[-1, 1]`.
    pub fn legendre() -> Self {
        MeasureSystem::single(WeightComponent::lebesgue(Interval::from_ints(-1, 1).expect("interval")))
            .expect("valid")
    }

    pub fn with_reference(self, reference: ReferenceRule) -> Result<Self> {
        MeasureSystem::new(self.kind, self.components, reference)
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn r(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[WeightComponent] {
        &self.components
    }

    pub fn component(&self, j: usize) -> Result<&WeightComponent> {
        self.components.get(j).ok_or(Error::Bounds { requested: j, available: self.components.len() })
    }

    pub fn reference(&self) -> &ReferenceRule {
        &self.reference
    }

    fn reference_parts(&self) -> Vec<&WeightComponent> {
        match &self.reference {
            ReferenceRule::SumOfComponents => self.components.iter().collect(),
            ReferenceRule::FirstComponent => vec![&self.components[0]],
            ReferenceRule::Explicit(mu) => vec![mu],
        }
    }

    /// `m_j(k)` for the 0-based component `j`.
    pub fn moment<S: Scalar>(&self, j: usize, k: usize) -> Result<S> {
        self.component(j)?.moment(k)
    }

    /// Moments `m_j(0..count)` of component `j`.
    pub fn moments<S: Scalar>(&self, j: usize, count: usize) -> Result<Vec<S>> {
        self.component(j)?.moments(count)
    }

    pub fn reference_moments<S: Scalar>(&self, count: usize) -> Result<Vec<S>> {
        let mut out = vec![S::zero(); count];
        for part in self.reference_parts() {
            for (slot, m) in out.iter_mut().zip(part.moments::<S>(count)?) {
                *slot += &m;
            }
        }
        Ok(out)
    }

    /// Smallest interval containing every support.
    pub fn hull(&self) -> (BigRational, BigRational) {
        let hulls: Vec<_> = self.components.iter().filter_map(|c| c.hull()).collect();
        let lo = hulls.iter().map(|h| h.0.clone()).min().expect("nonempty");
        let hi = hulls.iter().map(|h| h.1.clone()).max().expect("nonempty");
        (lo, hi)
    }

    /// Supports of the continuous parts, one per component when present.
    pub fn intervals(&self) -> Vec<Interval> {
        self.components.iter().filter_map(|c| c.continuous.as_ref().map(|p| p.interval.clone())).collect()
    }

    /// Whether `x` lies in the closed support of the reference measure.
    pub fn in_support<S: Scalar>(&self, x: &S) -> bool {
        self.reference_parts().iter().any(|c| {
            c.continuous.as_ref().is_some_and(|p| p.interval.contains(x))
                || c.atoms.iter().any(|a| S::from_ratio(&a.at) == *x)
        })
    }

    pub fn reference_atom_mass<S: Scalar>(&self, x: &S) -> S {
        self.reference_parts().iter().fold(S::zero(), |acc, c| acc + &c.atom_mass(x))
    }

    /// Radon–Nikodym derivatives `w_j = d mu_j / d mu` at `x`.
    pub fn weights<S: Scalar>(&self, x: &S) -> Result<WeightValues<S>> {
        let atom = self.reference_atom_mass(x);
        if !atom.is_zero() {
            let values = self.components.iter().map(|c| c.atom_mass(x) / &atom).collect();
            return Ok(WeightValues { values, outside: false });
        }
        let mut rho = S::zero();
        for part in self.reference_parts() {
            rho += &part.density(x)?;
        }
        if rho.is_zero() {
            return Ok(WeightValues { values: vec![S::zero(); self.r()], outside: true });
        }
        let mut values = Vec::with_capacity(self.r());
        for (j, c) in self.components.iter().enumerate() {
            // avoid re-evaluating nested Cauchy transforms for mu_1 under its own reference
            if j == 0 && matches!(self.reference, ReferenceRule::FirstComponent) {
                values.push(S::one());
            } else {
                values.push(c.density(x)? / &rho);
            }
        }
        Ok(WeightValues { values, outside: false })
    }

    fn needs_grading(&self) -> bool {
        self.reference_parts().iter().any(|c| c.needs_grading())
    }

    /// `int f dmu` for vector-valued `f` with the given tolerance.
    pub fn integrate_many_with<S, F>(&self, f: F, width: usize, opts: &QuadOptions<S>) -> Result<Vec<Quad<S>>>
    where
        S: Scalar,
        F: Fn(&S) -> Result<Vec<S>> + Sync,
    {
        let parts = self.reference_parts();
        let mut groups: Vec<(Interval, Vec<&WeightComponent>)> = Vec::new();
        for c in &parts {
            if let Some(p) = &c.continuous {
                match groups.iter_mut().find(|(iv, _)| *iv == p.interval) {
                    Some((_, members)) => members.push(c),
                    None => groups.push((p.interval.clone(), vec![c])),
                }
            }
        }
        let mut total: Vec<Quad<S>> = (0..width).map(|_| Quad { value: S::zero(), error: S::zero() }).collect();
        let opts = QuadOptions { rel_tol: opts.rel_tol.clone(), graded: opts.graded || self.needs_grading() };
        for (iv, members) in &groups {
            let g = |x: &S| -> Result<Vec<S>> {
                let mut rho = S::zero();
                for c in members {
                    rho += &c.density(x)?;
                }
                if rho.is_zero() {
                    return Ok(vec![S::zero(); width]);
                }
                Ok(f(x)?.into_iter().map(|v| v * &rho).collect())
            };
            let q = integrate_many(g, &S::from_ratio(&iv.a), &S::from_ratio(&iv.b), width, &opts)?;
            for (t, qi) in total.iter_mut().zip(q) {
                t.value += &qi.value;
                t.error += &qi.error;
            }
        }
        for c in &parts {
            for atom in &c.atoms {
                let x = S::from_ratio(&atom.at);
                let m = S::from_ratio(&atom.mass);
                for (t, v) in total.iter_mut().zip(f(&x)?) {
                    t.value += &(v * &m);
                }
            }
        }
        Ok(total)
    }

    pub fn integrate_many<S, F>(&self, f: F, width: usize) -> Result<Vec<Quad<S>>>
    where
        S: Scalar,
        F: Fn(&S) -> Result<Vec<S>> + Sync,
    {
        self.integrate_many_with(f, width, &QuadOptions::working())
    }

    /// `int f dmu` with an error estimate.
    pub fn integrate<S, F>(&self, f: F) -> Result<Quad<S>>
    where
        S: Scalar,
        F: Fn(&S) -> Result<S> + Sync,
    {
        Ok(self.integrate_many(|x: &S| Ok(vec![f(x)?]), 1)?.pop().expect("width 1"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, BigReal};

    type Q = BigRational;

    fn leb(a: i64, b: i64) -> WeightComponent {
        WeightComponent::lebesgue(Interval::from_ints(a, b).unwrap())
    }

    #[test]
    fn interval_rejects_reversed() {
        let e = Interval::from_ints(1, 1).unwrap_err();
        assert_eq!(e.code(), "E_INTERVAL");
        assert!(Interval::parse("0.5, 1/3").is_err());
        assert_eq!(Interval::parse("-1/2,3").unwrap().a(), &ratio(-1, 2));
    }

    #[test]
    fn lebesgue_moments() {
        let m = leb(-1, 1).moments::<Q>(4).unwrap();
        assert_eq!(m, vec![ratio(2, 1), ratio(0, 1), ratio(2, 3), ratio(0, 1)]);
        // int_{2}^{5} x^3 dx = (625 - 16) / 4
        assert_eq!(leb(2, 5).moment::<Q>(3).unwrap(), ratio(609, 4));
    }

    #[test]
    fn jacobi_moments_against_beta() {
        let half = WeightComponent::jacobi(Interval::from_ints(0, 1).unwrap(), ratio(1, 2), ratio(0, 1));
        assert_eq!(half.moment_kind(), MomentKind::ClosedFormRational);
        assert_eq!(half.moment::<Q>(0).unwrap(), ratio(2, 3));
        // int_0^1 x^{k+1/2} dx = 1 / (k + 3/2)
        assert_eq!(half.moment::<Q>(3).unwrap(), ratio(2, 9));
        // int_0^1 x (1-x)^{1/2} dx = B(2, 3/2) = 4/15
        let w = WeightComponent::jacobi(Interval::from_ints(0, 1).unwrap(), ratio(0, 1), ratio(1, 2));
        assert_eq!(w.moment::<Q>(1).unwrap(), ratio(4, 15));
        // int_{-1}^{1} x^2 (1-x^2) dx = 2/3 - 2/5
        let sq = WeightComponent::jacobi(Interval::from_ints(-1, 1).unwrap(), ratio(1, 1), ratio(1, 1));
        assert_eq!(sq.moment::<Q>(2).unwrap(), ratio(4, 15));
    }

    #[test]
    fn quadrature_moments_for_irrational_scale() {
        // (x+1)^{1/2}(1-x)^{1/2} on [-1,1] has mass pi/2
        let w = WeightComponent::jacobi(Interval::from_ints(-1, 1).unwrap(), ratio(1, 2), ratio(1, 2));
        assert_eq!(w.moment_kind(), MomentKind::Quadrature);
        assert!(w.moment::<Q>(0).is_err());
        let m0: BigReal = w.moment(0).unwrap();
        let target = BigReal::pi() / &BigReal::from_usize(2);
        assert!((m0 - target).abs().to_f64() < 1e-60);
    }

    #[test]
    fn cauchy_examples() {
        let c: BigReal = leb(0, 1).cauchy_transform(&BigReal::from_usize(2)).unwrap();
        assert!((c.to_f64() - std::f64::consts::LN_2).abs() < 1e-15);
        let far: f64 = leb(0, 1).cauchy_transform(&1e6).unwrap();
        assert!((far / 1e-6 - 1.0).abs() < 1e-5);
        let atom = WeightComponent::atoms_only(vec![Atom { at: ratio(0, 1), mass: ratio(1, 1) }]);
        assert_eq!(atom.cauchy_transform(&ratio(2, 1)).unwrap(), ratio(1, 2));
        let inside = leb(0, 1).cauchy_transform(&0.5f64).unwrap_err();
        assert_eq!(inside.code(), "E_DOMAIN");
    }

    #[test]
    fn cauchy_by_quadrature_matches_closed_form() {
        let mut w = leb(0, 1);
        // force the quadrature branch with an exponent that changes nothing numerically
        if let Some(ContinuousPart { density: Density::Jacobi(j), .. }) = w.continuous.as_mut() {
            j.left = ratio(1, 1);
        }
        // int_0^1 y / (2 - y) dy = 2 ln 2 - 1
        let c: BigReal = w.cauchy_transform(&BigReal::from_usize(2)).unwrap();
        assert!((c.to_f64() - (2.0 * std::f64::consts::LN_2 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn nikishin_construction() {
        let sys = MeasureSystem::nikishin(vec![leb(0, 1), leb(2, 3)]).unwrap();
        assert_eq!(sys.r(), 2);
        let m: BigReal = sys.moment(1, 0).unwrap();
        // int_0^1 ln((x-2)/(x-3)) dx
        let oracle = {
            let g = |x: f64| (x - 2.0) * (2.0 - x).ln() - (x - 3.0) * (3.0 - x).ln();
            g(1.0) - g(0.0)
        };
        assert!(m.to_f64() < 0.0);
        assert!((m.to_f64() - oracle).abs() < 1e-14);
        assert!(MeasureSystem::nikishin(vec![leb(0, 1), WeightComponent::lebesgue(Interval::new(ratio(1, 2), ratio(2, 1)).unwrap())]).is_err());
        let single = MeasureSystem::nikishin(vec![leb(-1, 1)]).unwrap();
        assert_eq!(single.components()[0], leb(-1, 1));
    }

    #[test]
    fn integrate_examples() {
        let leg = MeasureSystem::legendre();
        let one: BigReal = leg.integrate(|_| Ok(BigReal::one())).unwrap().value;
        assert!((one.to_f64() - 2.0).abs() < 1e-60);
        let normalized = MeasureSystem::single(leb(-1, 1).scaled(&ratio(1, 2))).unwrap();
        let x2: BigReal = normalized.integrate(|x: &BigReal| Ok(x.clone() * x)).unwrap().value;
        assert!((x2.to_f64() - 1.0 / 3.0).abs() < 1e-15);
        let with_atom = MeasureSystem::single(leb(-1, 1).with_atom(ratio(2, 1), ratio(1, 2))).unwrap();
        let total: f64 = with_atom.integrate(|_| Ok(1.0)).unwrap().value;
        assert!((total - 2.5).abs() < 1e-14);
    }

    #[test]
    fn reference_rules_and_weights() {
        let jp = MeasureSystem::jacobi_pineiro(&[ratio(0, 1), ratio(1, 2)], &ratio(0, 1), ReferenceRule::SumOfComponents)
            .unwrap();
        // at x = 1/4: w = (1, 1/2) / (3/2)
        let w = jp.weights(&ratio(1, 4)).unwrap();
        assert_eq!(w.values, vec![ratio(2, 3), ratio(1, 3)]);
        let out = jp.weights(&ratio(2, 1)).unwrap();
        assert!(out.outside);
        assert!(MeasureSystem::jacobi_pineiro(&[ratio(1, 2), ratio(3, 2)], &ratio(0, 1), ReferenceRule::SumOfComponents)
            .is_err());
        let ang = MeasureSystem::angelesco(vec![Interval::from_ints(-1, 0).unwrap(), Interval::from_ints(0, 1).unwrap()])
            .unwrap();
        assert!(ang.clone().with_reference(ReferenceRule::FirstComponent).is_err());
        assert!(MeasureSystem::new(
            SystemKind::Custom,
            vec![leb(-1, 1).with_atom(ratio(2, 1), ratio(1, 1)), leb(-1, 1)],
            ReferenceRule::SumOfComponents
        )
        .is_err());
        let atom_sys = MeasureSystem::single(leb(-1, 1).with_atom(ratio(2, 1), ratio(1, 2))).unwrap();
        assert_eq!(atom_sys.weights(&ratio(2, 1)).unwrap().values, vec![ratio(1, 1)]);
    }

    #[test]
    fn closed_form_agrees_with_quadrature() {
        let w = WeightComponent::jacobi(Interval::from_ints(-1, 3).unwrap(), ratio(2, 1), ratio(1, 2));
        let exact: Vec<Q> = w.moments(6).unwrap();
        let sys = MeasureSystem::single(w).unwrap();
        for (k, m) in exact.iter().enumerate() {
            let q: BigReal = sys
                .integrate(|x: &BigReal| {
                    let mut t = BigReal::one();
                    for _ in 0..k {
                        t *= x;
                    }
                    Ok(t)
                })
                .unwrap()
                .value;
            assert!((q - BigReal::from_ratio(m)).abs().to_f64() < 1e-50, "k = {k}");
        }
    }
}
