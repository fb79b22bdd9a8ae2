//! Dense polynomials in the monomial basis.

use serde::Serialize;

use crate::scalar::Scalar;

/// Polynomial with coefficients stored lowest degree first. The zero
/// polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Poly<S> {
    pub fn new(mut coeffs: Vec<S>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: S) -> Self {
        Poly::new(vec![c])
    }

    pub fn one() -> Self {
        Poly::constant(S::one())
    }

    /// `c x^k`.
    pub fn monomial(c: S, k: usize) -> Self {
        let mut v = vec![S::zero(); k + 1];
        v[k] = c;
        Poly::new(v)
    }

    /// Monic polynomial `x^n + lower[n-1] x^{n-1} + ... + lower[0]`.
    pub fn monic_from_lower(mut lower: Vec<S>) -> Self {
        lower.push(S::one());
        Poly { coeffs: lower }
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> S {
        self.coeffs.get(k).cloned().unwrap_or_else(S::zero)
    }

    pub fn leading(&self) -> Option<&S> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(|c| c.is_one())
    }

    pub fn eval(&self, x: &S) -> S {
        let mut acc = S::zero();
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn mul_x(&self) -> Self {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut v = Vec::with_capacity(self.coeffs.len() + 1);
        v.push(S::zero());
        v.extend(self.coeffs.iter().cloned());
        Poly { coeffs: v }
    }

    pub fn scale(&self, c: &S) -> Self {
        Poly::new(self.coeffs.iter().map(|a| a.clone() * c).collect())
    }

    pub fn add(&self, other: &Poly<S>) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + &other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Poly<S>) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - &other.coeff(k)).collect())
    }

    /// `self - c * other`.
    pub fn sub_scaled(&self, c: &S, other: &Poly<S>) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - &(c.clone() * &other.coeff(k))).collect())
    }

    pub fn mul(&self, other: &Poly<S>) -> Self {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![S::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                v[i + j] += &(a.clone() * b);
            }
        }
        Poly::new(v)
    }

    pub fn derivative(&self) -> Self {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.clone() * &S::from_usize(k))
                .collect(),
        )
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Poly<S>) -> (Poly<S>, Poly<S>) {
        let dd = divisor.degree().expect("division by zero polynomial");
        let lead = divisor.coeffs[dd].clone();
        let mut rem = self.coeffs.clone();
        let Some(nd) = self.degree() else {
            return (Poly::zero(), Poly::zero());
        };
        if nd < dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![S::zero(); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let c = rem[k + dd].clone() / &lead;
            for (i, d) in divisor.coeffs.iter().enumerate() {
                let t = c.clone() * d;
                rem[k + i] -= &t;
            }
            rem[k + dd] = S::zero();
            quot[k] = c;
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    /// Scales to a monic polynomial.
    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => {
                let inv = S::one() / l;
                self.scale(&inv)
            }
            None => Poly::zero(),
        }
    }

    /// Monic greatest common divisor. Only meaningful for exact scalars.
    pub fn gcd(&self, other: &Poly<S>) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Converts coefficients to another scalar type through exact rationals.
    pub fn convert<T: Scalar>(&self) -> Poly<T> {
        Poly::new(
            self.coeffs
                .iter()
                .map(|c| T::from_ratio(&c.to_ratio().expect("finite coefficient")))
                .collect(),
        )
    }

    pub fn export(&self, digits: usize) -> PolyExport {
        PolyExport {
            degree: self.degree(),
            exact: S::EXACT,
            coefficients: self
                .coeffs
                .iter()
                .map(|c| c.to_ratio().map(|q| q.to_string()).unwrap_or_else(|| "nan".into()))
                .collect(),
            decimal: self.coeffs.iter().map(|c| c.to_decimal(digits)).collect(),
        }
    }
}

/// JSON-friendly view: exact rational strings (lowest degree first) plus decimals.
#[derive(Clone, Debug, Serialize)]
pub struct PolyExport {
    pub degree: Option<usize>,
    pub exact: bool,
    pub coefficients: Vec<String>,
    pub decimal: Vec<String>,
}
