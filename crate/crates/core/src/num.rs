//! Small numeric helpers shared across modules.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An integrability exponent in `(0, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// `1/q`, with `1/∞ = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            Exponent::Finite(q) => 1.0 / q,
            Exponent::Infinity => 0.0,
        }
    }

    /// Hölder conjugate `q' = q/(q-1)`; `1' = ∞`, `∞' = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(q) if q == 1.0 => Exponent::Infinity,
            Exponent::Finite(q) => Exponent::Finite(q / (q - 1.0)),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(q) => q,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

impl From<f64> for Exponent {
    fn from(q: f64) -> Self {
        if q.is_infinite() {
            Exponent::Infinity
        } else {
            Exponent::Finite(q)
        }
    }
}

// JSON has no infinity literal, so `∞` travels as the string "inf".
impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(q) => s.serialize_f64(*q),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(q) => Ok(Exponent::Finite(q)),
            Raw::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(Exponent::Infinity)
            }
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad exponent {s:?}"))),
        }
    }
}

/// `lhs ≤ rhs` up to a relative tolerance on the larger magnitude.
///
/// The tiny absolute floor keeps `0 ≤ 0` style comparisons from tripping on
/// values at the level of accumulated roundoff.
pub fn leq_rel(lhs: f64, rhs: f64, rel: f64) -> bool {
    let scale = lhs.abs().max(rhs.abs()).max(1e-290);
    lhs <= rhs + rel * scale.max(1e-12)
}

/// Maximum with deterministic tie-break on the smallest id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgMax {
    pub value: f64,
    pub id: Option<usize>,
}

impl ArgMax {
    pub const EMPTY: ArgMax = ArgMax { value: 0.0, id: None };

    pub fn new(value: f64, id: usize) -> Self {
        ArgMax { value, id: Some(id) }
    }

    pub fn merge(self, other: ArgMax) -> ArgMax {
        match (self.id, other.id) {
            (None, _) => other,
            (_, None) => self,
            (Some(a), Some(b)) => {
                if other.value > self.value || (other.value == self.value && b < a) {
                    other
                } else {
                    self
                }
            }
        }
    }
}

/// Least-squares slope of `y ≈ k·x` through the origin.
pub fn slope_through_origin(points: &[(f64, f64)]) -> Option<f64> {
    let (sxx, sxy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x * x, b + x * y));
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Ordinary least-squares line `y ≈ a + b·x`, returned as `(a, b)`.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        (a + (x - mx) * (x - mx), b + (x - mx) * (y - my))
    });
    (sxx > 0.0).then(|| (my - sxy / sxx * mx, sxy / sxx))
}

/// splitmix64, used for deterministic hashing keys.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
