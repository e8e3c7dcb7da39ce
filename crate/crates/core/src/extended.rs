use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

/// A point of the extended real line.
///
/// Serialized as a JSON number when finite and as the strings `"-inf"` /
/// `"+inf"` otherwise, since JSON has no infinities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::NegInf => f64::NEG_INFINITY,
            ExtendedReal::Finite(v) => v,
            ExtendedReal::PosInf => f64::INFINITY,
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtendedReal::PosInf
        } else if v == f64::NEG_INFINITY {
            ExtendedReal::NegInf
        } else {
            ExtendedReal::Finite(v)
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInf => write!(f, "-inf"),
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PosInf => write!(f, "+inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::NegInf => s.serialize_str("-inf"),
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::PosInf => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = ExtendedReal;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, \"-inf\" or \"+inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtendedReal, E> {
                Ok(ExtendedReal::from(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtendedReal, E> {
                Ok(ExtendedReal::Finite(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtendedReal, E> {
                Ok(ExtendedReal::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtendedReal, E> {
                match v {
                    "-inf" => Ok(ExtendedReal::NegInf),
                    "+inf" | "inf" => Ok(ExtendedReal::PosInf),
                    _ => Err(E::custom(format!("unexpected string {v:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_and_roundtrip() {
        assert!(ExtendedReal::NegInf < ExtendedReal::Finite(-1e300));
        assert!(ExtendedReal::Finite(1e300) < ExtendedReal::PosInf);
        for v in [ExtendedReal::NegInf, ExtendedReal::Finite(1.5), ExtendedReal::PosInf] {
            let s = serde_json::to_string(&v).unwrap();
            let back: ExtendedReal = serde_json::from_str(&s).unwrap();
            assert_eq!(v, back);
        }
        assert_eq!(ExtendedReal::from(f64::NEG_INFINITY), ExtendedReal::NegInf);
    }
}
