//! Points of the probability simplex, the Bhattacharyya coefficient and the
//! two losses built on it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries in (−CLAMP_TOL, 0) are treated as round-off and clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;
/// Maximum tolerated drift of the entry sum from 1 before normalization.
pub const SUM_TOL: f64 = 1e-9;

/// A probability vector in the K-simplex, K ≥ 2.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates and normalizes `entries`.
    ///
    /// Tiny negative entries (> −1e-12) are clamped to zero; the result is
    /// divided by its sum, which must be within 1e-9 of one.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidProbability(format!("need at least 2 entries, got {}", entries.len())));
        }
        let mut entries = entries;
        for (k, x) in entries.iter_mut().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidProbability(format!("entry {k} is {x}")));
            }
            if *x < 0.0 {
                if *x > -CLAMP_TOL {
                    *x = 0.0;
                } else {
                    return Err(Error::InvalidProbability(format!("entry {k} is negative ({x})")));
                }
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidProbability(format!("entries sum to {sum}")));
        }
        entries.iter_mut().for_each(|x| *x /= sum);
        Ok(ProbVector(entries))
    }

    /// The binary vector (p0, 1 − p0).
    pub fn binary(p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::InvalidProbability(format!("p0 = {p0} outside [0, 1]")));
        }
        Ok(ProbVector(vec![p0, 1.0 - p0]))
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        Self::new(vec![1.0 / dim as f64; dim])
    }

    /// Element-wise square of a (not necessarily normalized) nonnegative
    /// direction, rescaled onto the simplex.
    pub(crate) fn from_sqrt_direction(a: &[f64]) -> Result<Self> {
        let sq: Vec<f64> = a.iter().map(|x| x * x).collect();
        let norm: f64 = sq.iter().sum();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidProbability("zero or non-finite direction".into()));
        }
        Ok(ProbVector(sq.into_iter().map(|x| x / norm).collect()))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Element-wise square root, √0 = 0.
    pub fn sqrt(&self) -> Vec<f64> {
        self.0.iter().map(|x| x.sqrt()).collect()
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl<'de> Deserialize<'de> for ProbVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        ProbVector::new(v).map_err(serde::de::Error::custom)
    }
}

/// Which Bhattacharyya-based loss is in play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    /// L = 1 − B
    #[serde(rename = "b")]
    OneMinusB,
    /// L = 1 − B²
    #[serde(rename = "b2")]
    OneMinusBSquared,
}

impl LossKind {
    /// Loss expressed through the coefficient B.
    #[inline]
    pub fn from_coefficient(self, b: f64) -> f64 {
        match self {
            LossKind::OneMinusB => 1.0 - b,
            LossKind::OneMinusBSquared => 1.0 - b * b,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            LossKind::OneMinusB => "b",
            LossKind::OneMinusBSquared => "b2",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "b" | "1-b" => Ok(LossKind::OneMinusB),
            "b2" | "1-b2" => Ok(LossKind::OneMinusBSquared),
            other => Err(Error::InvalidParameter(format!("unknown loss '{other}'"))),
        }
    }
}

fn check_dims(p: &ProbVector, q: &ProbVector) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { left: p.dim(), right: q.dim() });
    }
    Ok(())
}

/// B(p, q) = Σ_k √(p_k q_k), in [0, 1].
pub fn bhattacharyya(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_dims(p, q)?;
    let b: f64 = p.0.iter().zip(&q.0).map(|(a, b)| (a * b).sqrt()).sum();
    Ok(b.min(1.0))
}

/// 1 − B or 1 − B² depending on `kind`.
pub fn loss(kind: LossKind, p: &ProbVector, q: &ProbVector) -> Result<f64> {
    let b = bhattacharyya(p, q)?;
    Ok(kind.from_coefficient(b).max(0.0))
}
