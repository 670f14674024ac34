//! Eventually periodic real sequences: the diagonal of a diagonal operator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CalkinError;

#[derive(Serialize, Deserialize)]
struct SequenceRepr {
    prefix: Vec<f64>,
    tail_cycle: Vec<f64>,
}

/// `prefix` followed by `tail_cycle` repeated forever.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceRepr", into = "SequenceRepr")]
pub struct DiagonalSequence {
    prefix: Vec<f64>,
    tail_cycle: Vec<f64>,
}

impl TryFrom<SequenceRepr> for DiagonalSequence {
    type Error = CalkinError;

    fn try_from(r: SequenceRepr) -> Result<Self, CalkinError> {
        DiagonalSequence::new(r.prefix, r.tail_cycle)
    }
}

impl From<DiagonalSequence> for SequenceRepr {
    fn from(s: DiagonalSequence) -> Self {
        SequenceRepr { prefix: s.prefix, tail_cycle: s.tail_cycle }
    }
}

impl DiagonalSequence {
    pub fn new(prefix: Vec<f64>, tail_cycle: Vec<f64>) -> Result<Self, CalkinError> {
        if tail_cycle.is_empty() || prefix.iter().chain(&tail_cycle).any(|x| !x.is_finite()) {
            return Err(CalkinError::BadSequence);
        }
        Ok(Self { prefix, tail_cycle })
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn tail_cycle(&self) -> &[f64] {
        &self.tail_cycle
    }

    /// Term `n`.
    pub fn get(&self, n: usize) -> f64 {
        match self.prefix.get(n) {
            Some(&x) => x,
            None => self.tail_cycle[(n - self.prefix.len()) % self.tail_cycle.len()],
        }
    }

    /// `limsup |dₙ|`, the essential norm of the diagonal operator.
    pub fn limsup_abs(&self) -> f64 {
        self.tail_cycle.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `sup |dₙ|`, the operator norm.
    pub fn sup_abs(&self) -> f64 {
        self.prefix.iter().fold(self.limsup_abs(), |m, x| m.max(x.abs()))
    }

    pub fn has_zero_tail(&self) -> bool {
        self.tail_cycle.iter().all(|&x| x == 0.0)
    }

    /// Termwise sum.
    pub fn add(&self, other: &Self) -> Self {
        let start = self.prefix.len().max(other.prefix.len());
        let period = lcm(self.tail_cycle.len(), other.tail_cycle.len());
        let term = |n| self.get(n) + other.get(n);
        Self { prefix: (0..start).map(term).collect(), tail_cycle: (start..start + period).map(term).collect() }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Zero-tail correction `k₀` with `sup |d + k₀| = limsup |d|`.
///
/// Each prefix term is clipped to `[−L, L]`, `L = limsup |d|`. When the
/// rounded sum `dₙ + k₀ₙ` lands one ulp outside the interval, `k₀ₙ` is
/// stepped inward until it does not.
pub fn minimal_norm_lift(d: &DiagonalSequence) -> DiagonalSequence {
    let l = d.limsup_abs();
    let prefix = d
        .prefix
        .iter()
        .map(|&x| {
            let mut k = x.clamp(-l, l) - x;
            while (x + k).abs() > l {
                k = if x + k > 0.0 { k.next_down() } else { k.next_up() };
            }
            k
        })
        .collect();
    DiagonalSequence { prefix, tail_cycle: vec![0.0] }
}

/// Random sequence: prefix of length `0..8` with terms in `[−10, 10]`, cycle of
/// length `1..5` with terms in `[−3, 3]`.
pub fn random_diagonal_sequence(rng: &mut impl Rng) -> DiagonalSequence {
    let plen = rng.random_range(0..8);
    let clen = rng.random_range(1..5);
    let prefix = (0..plen).map(|_| rng.random_range(-10.0..10.0)).collect();
    let tail_cycle = (0..clen).map(|_| rng.random_range(-3.0..3.0)).collect();
    DiagonalSequence { prefix, tail_cycle }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::random::seeded_rng;

    fn seq(p: &[f64], c: &[f64]) -> DiagonalSequence {
        DiagonalSequence::new(p.to_vec(), c.to_vec()).unwrap()
    }

    #[test]
    fn clipping_example() {
        let d = seq(&[5.0, -3.0], &[1.0, 0.5]);
        assert_eq!(d.limsup_abs(), 1.0);
        let k = minimal_norm_lift(&d);
        assert_eq!(k.prefix(), &[-4.0, 2.0]);
        assert!(k.has_zero_tail());
        assert_eq!(d.add(&k).sup_abs(), 1.0);
    }

    #[test]
    fn nothing_to_clip() {
        let k = minimal_norm_lift(&seq(&[], &[2.0, -1.0]));
        assert!(k.prefix().is_empty() && k.has_zero_tail());
        let k = minimal_norm_lift(&seq(&[0.2], &[1.0]));
        assert_eq!(k.prefix(), &[0.0]);
    }

    #[test]
    fn sum_aligns_prefix_and_cycles() {
        let a = seq(&[1.0], &[0.0, 1.0]);
        let b = seq(&[], &[10.0, 20.0, 30.0]);
        let s = a.add(&b);
        for n in 0..40 {
            assert_eq!(s.get(n), a.get(n) + b.get(n));
        }
        assert_eq!(s.tail_cycle().len(), 6);
    }

    #[test]
    fn exact_on_random_sequences() {
        let mut rng = seeded_rng(9);
        for _ in 0..500 {
            let d = random_diagonal_sequence(&mut rng);
            let k = minimal_norm_lift(&d);
            assert_eq!(d.add(&k).sup_abs(), d.limsup_abs());
        }
    }

    #[test]
    fn rejects_empty_cycle() {
        assert_eq!(DiagonalSequence::new(vec![1.0], vec![]), Err(CalkinError::BadSequence));
        assert!(serde_json::from_str::<DiagonalSequence>(r#"{"prefix":[1],"tail_cycle":[]}"#).is_err());
    }
}
