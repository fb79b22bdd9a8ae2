//! Real root isolation with Sturm sequences over exact rationals.
//!
//! Float polynomials are converted to their exact dyadic values first, so the
//! root count is certified for the polynomial actually stored.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::{ratio_to_decimal, Scalar};

type Q = BigRational;

/// One isolated real root.
#[derive(Clone, Debug)]
pub struct Root {
    /// Isolating interval `(lo, hi]`; `lo == hi` for a root found exactly.
    pub lo: Q,
    pub hi: Q,
    pub multiplicity: usize,
}

impl Root {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> Q {
        (&self.lo + &self.hi) / Q::from_integer(2.into())
    }

    pub fn value<S: Scalar>(&self) -> S {
        S::from_ratio(&self.midpoint())
    }
}

/// Sorted real roots of a polynomial.
#[derive(Clone, Debug)]
pub struct RootList {
    pub degree: usize,
    pub roots: Vec<Root>,
    /// Bits of refinement: every interval has width at most `2^-bits`.
    pub bits: u32,
}

impl RootList {
    /// Number of real roots counted with multiplicity.
    pub fn count(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn all_simple(&self) -> bool {
        self.roots.iter().all(|r| r.multiplicity == 1)
    }

    pub fn values<S: Scalar>(&self) -> Vec<S> {
        self.roots.iter().map(|r| r.value()).collect()
    }

    pub fn export(&self, digits: usize) -> RootListExport {
        RootListExport {
            degree: self.degree,
            count: self.count(),
            all_simple: self.all_simple(),
            roots: self
                .roots
                .iter()
                .map(|r| RootExport {
                    value: ratio_to_decimal(&r.midpoint(), digits),
                    lo: ratio_to_decimal(&r.lo, digits),
                    hi: ratio_to_decimal(&r.hi, digits),
                    multiplicity: r.multiplicity,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RootExport {
    pub value: String,
    pub lo: String,
    pub hi: String,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RootListExport {
    pub degree: usize,
    pub count: usize,
    pub all_simple: bool,
    pub roots: Vec<RootExport>,
}

struct Sturm {
    seq: Vec<Poly<Q>>,
}

impl Sturm {
    fn new(p: &Poly<Q>) -> Self {
        let mut seq = vec![normalize(p), normalize(&p.derivative())];
        loop {
            let n = seq.len();
            if seq[n - 1].is_zero() {
                seq.pop();
                break;
            }
            let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
            if r.is_zero() {
                break;
            }
            seq.push(normalize(&r.scale(&-Q::one())));
        }
        Sturm { seq }
    }

    fn variations(&self, x: &Q) -> usize {
        let mut count = 0;
        let mut last = 0i8;
        for p in &self.seq {
            let v = p.eval(x);
            let s = sign(&v);
            if s != 0 {
                if last != 0 && s != last {
                    count += 1;
                }
                last = s;
            }
        }
        count
    }

    /// Roots in `(a, b]`.
    fn count(&self, a: &Q, b: &Q) -> usize {
        self.variations(a) - self.variations(b)
    }
}

fn sign(q: &Q) -> i8 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}

/// Divides by the absolute leading coefficient (keeps signs, shrinks sizes).
fn normalize(p: &Poly<Q>) -> Poly<Q> {
    match p.leading() {
        Some(l) => p.scale(&(Q::one() / Signed::abs(l))),
        None => Poly::zero(),
    }
}

fn half(a: &Q, b: &Q) -> Q {
    (a + b) / Q::from_integer(2.into())
}

/// Power of two at least `1 + max |a_i / a_n|`.
fn cauchy_bound(p: &Poly<Q>) -> Q {
    let lead = Signed::abs(p.leading().expect("nonzero"));
    let mut m = Q::zero();
    for c in &p.coeffs()[..p.coeffs().len() - 1] {
        let v = Signed::abs(c) / &lead;
        if v > m {
            m = v;
        }
    }
    let target = m + Q::one();
    let mut b = Q::one();
    while b < target {
        b *= Q::from_integer(2.into());
    }
    b
}

/// Isolates every real root of `p`, refines each to width `2^-bits`, and
/// detects multiplicities through repeated gcds with the derivative.
pub fn real_roots<S: Scalar>(p: &Poly<S>, bits: u32) -> Result<RootList> {
    if p.is_zero() {
        return Err(Error::Domain("roots of the zero polynomial".into()));
    }
    let exact: Poly<Q> = Poly::new(
        p.coeffs()
            .iter()
            .map(|c| c.to_ratio().ok_or_else(|| Error::Domain("non-finite coefficient".into())))
            .collect::<Result<_>>()?,
    );
    let degree = exact.degree().unwrap_or(0);
    if degree == 0 {
        return Ok(RootList { degree, roots: Vec::new(), bits });
    }
    let g = exact.gcd(&exact.derivative());
    let free = exact.div_rem(&g).0;
    let sturm = Sturm::new(&free);

    let bound = cauchy_bound(&free);
    let lo = -bound.clone();
    let mut pending = vec![(lo, bound)];
    let mut isolated: Vec<(Q, Q)> = Vec::new();
    let max_depth = bits as usize + 4 * degree + 64;
    let mut steps = 0usize;
    while let Some((a, b)) = pending.pop() {
        let c = sturm.count(&a, &b);
        if c == 0 {
            continue;
        }
        if c == 1 {
            isolated.push((a, b));
            continue;
        }
        steps += 1;
        if steps > max_depth * degree {
            return Err(Error::Precision(format!(
                "root isolation stalled with {} intervals isolated and ({}, {}] holding {c} roots",
                isolated.len(),
                a,
                b
            )));
        }
        let m = half(&a, &b);
        pending.push((m.clone(), b));
        pending.push((a, m));
    }
    isolated.sort_by(|x, y| x.0.cmp(&y.0));

    let width = Q::new(BigInt::one(), BigInt::one() << bits);
    let mut roots = Vec::with_capacity(isolated.len());
    for (a, b) in isolated {
        let (lo, hi) = refine(&free, &sturm, a, b, &width);
        roots.push(Root { lo, hi, multiplicity: 1 });
    }

    // multiplicity m: root of g_{m-1} but not of g_m, with g_0 = p, g_k = gcd(g_{k-1}, g_{k-1}')
    let mut gk = g;
    let mut level = 1;
    while gk.degree().unwrap_or(0) > 0 {
        let free_k = gk.div_rem(&gk.gcd(&gk.derivative())).0;
        let st = Sturm::new(&free_k);
        level += 1;
        for r in roots.iter_mut() {
            let hit = if r.is_exact() {
                free_k.eval(&r.lo).is_zero()
            } else {
                st.count(&r.lo, &r.hi) > 0
            };
            if hit {
                r.multiplicity = level;
            }
        }
        gk = gk.gcd(&gk.derivative());
    }
    Ok(RootList { degree, roots, bits })
}

fn refine(p: &Poly<Q>, sturm: &Sturm, mut a: Q, mut b: Q, width: &Q) -> (Q, Q) {
    if p.eval(&b).is_zero() {
        return (b.clone(), b);
    }
    let mut sa = sign(&p.eval(&a));
    while &(b.clone() - &a) > width {
        let m = half(&a, &b);
        let sm = sign(&p.eval(&m));
        if sm == 0 {
            return (m.clone(), m);
        }
        // a sign change is conclusive; a zero at `a` forces a Sturm count
        let left = if sa != 0 { sm != sa } else { sturm.count(&a, &m) == 1 };
        if left {
            b = m;
        } else {
            a = m;
            sa = sm;
        }
    }
    (a, b)
}

/// Outcome of [`interlacing_check`].
#[derive(Clone, Debug, Serialize)]
pub struct InterlacingReport {
    pub n: usize,
    pub interlacing: bool,
    pub inside_hull: bool,
    pub simple: bool,
    /// Why the check failed, when it did.
    pub witness: Option<String>,
}

impl InterlacingReport {
    pub fn passed(&self) -> bool {
        self.interlacing && self.inside_hull && self.simple
    }
}

/// Checks that `p` (degree `n`) and `next` (degree `n+1`) have `n` and `n+1`
/// simple real roots, strictly interlacing and strictly inside `(a, b)`.
pub fn interlacing_check<S: Scalar>(p: &Poly<S>, next: &Poly<S>, hull: (&Q, &Q), bits: u32) -> Result<InterlacingReport> {
    let n = p.degree().unwrap_or(0);
    let rp = real_roots(p, bits)?;
    let rq = real_roots(next, bits)?;
    let mut rep = InterlacingReport { n, interlacing: true, inside_hull: true, simple: true, witness: None };
    if !rp.all_simple() || !rq.all_simple() {
        rep.simple = false;
        rep.interlacing = false;
        rep.witness = Some("repeated root: simple-zero hypothesis fails".into());
        return Ok(rep);
    }
    if rp.count() != n || rq.count() != n + 1 {
        rep.interlacing = false;
        rep.witness = Some(format!("expected {} and {} real roots, found {} and {}", n, n + 1, rp.count(), rq.count()));
    }
    for r in rp.roots.iter().chain(&rq.roots) {
        if &r.lo < hull.0 || &r.hi > hull.1 || (r.is_exact() && (&r.lo == hull.0 || &r.hi == hull.1)) {
            rep.inside_hull = false;
            rep.witness.get_or_insert_with(|| format!("root near {} outside ({}, {})", r.midpoint(), hull.0, hull.1));
        }
    }
    if rep.interlacing {
        // y_0 < x_0 < y_1 < ... < x_{n-1} < y_n on disjoint isolating intervals
        let mut merged: Vec<&Root> = Vec::with_capacity(2 * n + 1);
        for i in 0..n {
            merged.push(&rq.roots[i]);
            merged.push(&rp.roots[i]);
        }
        merged.push(&rq.roots[n]);
        for w in merged.windows(2) {
            let ordered = w[0].hi < w[1].lo || (w[0].hi == w[1].lo && !(w[0].is_exact() && w[1].is_exact()));
            if !ordered {
                rep.interlacing = false;
                rep.witness = Some(format!("roots near {} and {} are not separated", w[0].midpoint(), w[1].midpoint()));
                break;
            }
        }
    }
    Ok(rep)
}
