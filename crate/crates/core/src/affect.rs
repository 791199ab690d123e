//! Valence / Arousal / Dominance triples.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A point in VAD space. Scores produced for reporting live in `[0,1]^3`;
/// raw network outputs use the same type before clamping.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AffectVector(pub [f64; 3]);

impl AffectVector {
    pub const fn new(valence: f64, arousal: f64, dominance: f64) -> Self {
        Self([valence, arousal, dominance])
    }

    pub fn splat(x: f64) -> Self {
        Self([x; 3])
    }

    pub fn valence(&self) -> f64 {
        self.0[0]
    }

    pub fn arousal(&self) -> f64 {
        self.0[1]
    }

    pub fn dominance(&self) -> f64 {
        self.0[2]
    }

    pub fn get(&self, dim: AffectDim) -> f64 {
        self.0[dim.index()]
    }

    pub fn clamp_unit(self) -> Self {
        Self(self.0.map(|x| x.clamp(0.0, 1.0)))
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|x| (0.0..=1.0).contains(x))
    }

    pub fn distance(&self, other: &AffectVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Componentwise arithmetic mean. Used to summarize per-channel scores.
    pub fn mean(vectors: &[AffectVector]) -> Option<AffectVector> {
        if vectors.is_empty() {
            return None;
        }
        let mut acc = [0.0; 3];
        for v in vectors {
            for (a, x) in acc.iter_mut().zip(v.0) {
                *a += x;
            }
        }
        let n = vectors.len() as f64;
        Some(AffectVector(acc.map(|a| a / n)))
    }
}

impl From<[f64; 3]> for AffectVector {
    fn from(v: [f64; 3]) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AffectDim {
    Valence,
    Arousal,
    Dominance,
}

impl AffectDim {
    pub const ALL: [AffectDim; 3] = [AffectDim::Valence, AffectDim::Arousal, AffectDim::Dominance];

    pub fn index(self) -> usize {
        match self {
            AffectDim::Valence => 0,
            AffectDim::Arousal => 1,
            AffectDim::Dominance => 2,
        }
    }

    pub fn letter(self) -> char {
        match self {
            AffectDim::Valence => 'V',
            AffectDim::Arousal => 'A',
            AffectDim::Dominance => 'D',
        }
    }
}

impl fmt::Display for AffectDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for AffectDim {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "v" | "valence" => Ok(AffectDim::Valence),
            "a" | "arousal" => Ok(AffectDim::Arousal),
            "d" | "dominance" => Ok(AffectDim::Dominance),
            other => Err(format!(
                "unknown affect dimension `{other}` (expected V, A or D)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    High,
    Low,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::High => "high",
            Direction::Low => "low",
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "high" | "hi" | "+" => Ok(Direction::High),
            "low" | "lo" | "-" => Ok(Direction::Low),
            other => Err(format!(
                "unknown direction `{other}` (expected high or low)"
            )),
        }
    }
}
