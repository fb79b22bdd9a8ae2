//! Multi-indices and nested paths `n_0 = 0, n_{l+1} = n_l + e_{i_l}`.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A multi-index `(n_1, ..., n_r)` of nonnegative integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(r: usize) -> Self {
        MultiIndex(vec![0; r])
    }

    pub fn r(&self) -> usize {
        self.0.len()
    }

    /// `|n|`.
    pub fn size(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, j: usize) -> usize {
        self.0[j]
    }

    /// `n + e_j` (0-based `j`).
    pub fn plus(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        v[j] += 1;
        MultiIndex(v)
    }

    /// `n - e_j`, or `None` when `n_j = 0`.
    pub fn minus(&self, j: usize) -> Option<Self> {
        let mut v = self.0.clone();
        v[j] = v[j].checked_sub(1)?;
        Some(MultiIndex(v))
    }

    /// All multi-indices with `r` components and size exactly `size`,
    /// in lexicographic order.
    pub fn all_of_size(r: usize, size: usize) -> Vec<MultiIndex> {
        fn rec(r: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if cur.len() + 1 == r {
                cur.push(left);
                out.push(MultiIndex(cur.clone()));
                cur.pop();
                return;
            }
            for k in (0..=left).rev() {
                cur.push(k);
                rec(r, left - k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if r > 0 {
            rec(r, size, &mut Vec::new(), &mut out);
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// Nested path of multi-indices described by its step directions
/// (0-based component indices).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Path {
    r: usize,
    steps: Vec<usize>,
    #[serde(serialize_with = "ser_direction")]
    direction: Option<Vec<BigRational>>,
}

fn ser_direction<S: serde::Serializer>(d: &Option<Vec<BigRational>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let strings: Option<Vec<String>> = d.as_ref().map(|v| v.iter().map(|q| q.to_string()).collect());
    strings.serialize(s)
}

impl Path {
    /// Path from explicit steps; each step must be a component index below `r`.
    pub fn from_steps(r: usize, steps: Vec<usize>) -> Result<Self> {
        if r == 0 {
            return Err(Error::Validation("a path needs r >= 1".into()));
        }
        if let Some(bad) = steps.iter().find(|&&s| s >= r) {
            return Err(Error::Validation(format!("step {bad} is not a component index below {r}")));
        }
        Ok(Path { r, steps, direction: None })
    }

    /// Cyclic steps `0, 1, ..., r-1, 0, 1, ...`.
    pub fn stepline(r: usize, len: usize) -> Self {
        assert!(r >= 1, "stepline needs r >= 1");
        let direction = vec![BigRational::new(1.into(), (r as i64).into()); r];
        Path { r, steps: (0..len).map(|l| l % r).collect(), direction: Some(direction) }
    }

    /// Greedy path in direction `s`: step `l` picks the component maximizing
    /// `s_i (l+1) - (n_l)_i`, ties going to the smallest index.
    pub fn direction(s: &[BigRational], len: usize) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Validation("direction vector is empty".into()));
        }
        if s.iter().any(|x| !x.is_positive()) {
            return Err(Error::Validation("direction entries must be positive".into()));
        }
        let total: BigRational = s.iter().sum();
        if !total.is_one() {
            return Err(Error::Validation(format!("direction entries sum to {total}, not 1")));
        }
        let r = s.len();
        let mut n = vec![0usize; r];
        let mut steps = Vec::with_capacity(len);
        for l in 0..len {
            let target = BigRational::from_integer((l as i64 + 1).into());
            let mut best = 0;
            let mut best_val = None;
            for i in 0..r {
                let v = &s[i] * &target - BigRational::from_integer((n[i] as i64).into());
                if best_val.as_ref().is_none_or(|b| v > *b) {
                    best = i;
                    best_val = Some(v);
                }
            }
            n[best] += 1;
            steps.push(best);
        }
        Ok(Path { r, steps, direction: Some(s.to_vec()) })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn direction_vector(&self) -> Option<&[BigRational]> {
        self.direction.as_deref()
    }

    /// `n_l` for `0 <= l <= len`.
    pub fn index(&self, l: usize) -> Result<MultiIndex> {
        if l > self.steps.len() {
            return Err(Error::Bounds { requested: l, available: self.steps.len() });
        }
        let mut v = vec![0; self.r];
        for &s in &self.steps[..l] {
            v[s] += 1;
        }
        Ok(MultiIndex(v))
    }

    /// `n_0, ..., n_len`.
    pub fn indices(&self) -> Vec<MultiIndex> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut cur = MultiIndex::zeros(self.r);
        out.push(cur.clone());
        for &s in &self.steps {
            cur = cur.plus(s);
            out.push(cur.clone());
        }
        out
    }

    /// Path truncated to its first `len` steps.
    pub fn prefix(&self, len: usize) -> Result<Path> {
        if len > self.steps.len() {
            return Err(Error::Bounds { requested: len, available: self.steps.len() });
        }
        Ok(Path { r: self.r, steps: self.steps[..len].to_vec(), direction: self.direction.clone() })
    }

    pub fn validate(&self) -> PathReport {
        let indices = self.indices();
        let nested = indices.iter().enumerate().all(|(l, n)| n.size() == l)
            && indices.windows(2).all(|w| {
                let diff: Vec<i64> =
                    w[1].0.iter().zip(&w[0].0).map(|(a, b)| *a as i64 - *b as i64).collect();
                diff.iter().filter(|&&d| d == 1).count() == 1 && diff.iter().all(|&d| d == 0 || d == 1)
            });
        let last = indices.last().cloned().unwrap_or_else(|| MultiIndex::zeros(self.r));
        let stalled: Vec<usize> = (0..self.r).filter(|&j| last.0[j] == 0).collect();
        let max_deviation = self.direction.as_ref().map(|s| {
            let mut worst = BigRational::zero();
            for (l, n) in indices.iter().enumerate() {
                let lq = BigRational::from_integer((l as i64).into());
                for (j, sj) in s.iter().enumerate() {
                    let d = (BigRational::from_integer((n.0[j] as i64).into()) - sj * &lq).abs();
                    if d > worst {
                        worst = d;
                    }
                }
            }
            worst
        });
        PathReport {
            len: self.steps.len(),
            nested,
            final_index: last.0.clone(),
            stalled_components: stalled.clone(),
            growth_ok: stalled.is_empty(),
            max_deviation: max_deviation.as_ref().map(|q| q.to_string()),
            max_deviation_f64: max_deviation.map(|q| num_traits::ToPrimitive::to_f64(&q).unwrap_or(f64::NAN)),
        }
    }

    /// One step per line, 1-based component numbers, with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# mopkit path v1\nell,step\n");
        for (l, s) in self.steps.iter().enumerate() {
            out.push_str(&format!("{l},{}\n", s + 1));
        }
        out
    }

    /// JSON object `{"r": .., "steps": [1-based ..]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "r": self.r,
            "steps": self.steps.iter().map(|s| s + 1).collect::<Vec<_>>(),
            "direction": self.direction.as_ref().map(|d| d.iter().map(|q| q.to_string()).collect::<Vec<_>>()),
        })
    }
}

/// Outcome of [`Path::validate`].
#[derive(Clone, Debug, Serialize)]
pub struct PathReport {
    pub len: usize,
    /// `|n_l| = l` and consecutive indices differ by a unit vector.
    pub nested: bool,
    pub final_index: Vec<usize>,
    /// Components that never increase along the path.
    pub stalled_components: Vec<usize>,
    /// Every component grows (no stalled component).
    pub growth_ok: bool,
    pub max_deviation: Option<String>,
    pub max_deviation_f64: Option<f64>,
}
