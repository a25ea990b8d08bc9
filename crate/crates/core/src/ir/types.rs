use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::IrError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElemType {
    F32,
    I32,
    I64,
    Bool,
}

impl ElemType {
    pub fn bits(self) -> u32 {
        match self {
            ElemType::F32 | ElemType::I32 => 32,
            ElemType::I64 => 64,
            ElemType::Bool => 1,
        }
    }

    pub fn zero(self) -> Scalar {
        match self {
            ElemType::F32 => Scalar::F32(0.0),
            ElemType::I32 => Scalar::I32(0),
            ElemType::I64 => Scalar::I64(0),
            ElemType::Bool => Scalar::Bool(false),
        }
    }

    pub fn from_i64(self, v: i64) -> Scalar {
        match self {
            ElemType::F32 => Scalar::F32(v as f32),
            ElemType::I32 => Scalar::I32(v as i32),
            ElemType::I64 => Scalar::I64(v),
            ElemType::Bool => Scalar::Bool(v != 0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElemType::F32 => "f32",
            ElemType::I32 => "i32",
            ElemType::I64 => "i64",
            ElemType::Bool => "bool",
        }
    }
}

/// A single data element. Equality is bitwise so that float outputs can be
/// compared exactly (including NaN payloads).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scalar {
    F32(f32),
    I32(i32),
    I64(i64),
    Bool(bool),
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::F32(a), Scalar::F32(b)) => a.to_bits() == b.to_bits(),
            (Scalar::I32(a), Scalar::I32(b)) => a == b,
            (Scalar::I64(a), Scalar::I64(b)) => a == b,
            (Scalar::Bool(a), Scalar::Bool(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Scalar {}

impl Scalar {
    pub fn ty(self) -> ElemType {
        match self {
            Scalar::F32(_) => ElemType::F32,
            Scalar::I32(_) => ElemType::I32,
            Scalar::I64(_) => ElemType::I64,
            Scalar::Bool(_) => ElemType::Bool,
        }
    }

    pub fn as_i64(self) -> i64 {
        match self {
            Scalar::F32(v) => v as i64,
            Scalar::I32(v) => v as i64,
            Scalar::I64(v) => v,
            Scalar::Bool(v) => v as i64,
        }
    }

    pub fn truthy(self) -> bool {
        match self {
            Scalar::F32(v) => v != 0.0,
            Scalar::I32(v) => v != 0,
            Scalar::I64(v) => v != 0,
            Scalar::Bool(v) => v,
        }
    }

    /// Raw bits, zero-extended, for hashing traces.
    pub fn bits(self) -> u64 {
        match self {
            Scalar::F32(v) => v.to_bits() as u64,
            Scalar::I32(v) => v as u32 as u64,
            Scalar::I64(v) => v as u64,
            Scalar::Bool(v) => v as u64,
        }
    }

    pub(crate) fn partial_cmp_value(self, other: Scalar) -> Option<Ordering> {
        match (self, other) {
            (Scalar::F32(a), Scalar::F32(b)) => a.partial_cmp(&b),
            (Scalar::I32(a), Scalar::I32(b)) => Some(a.cmp(&b)),
            (Scalar::I64(a), Scalar::I64(b)) => Some(a.cmp(&b)),
            (Scalar::Bool(a), Scalar::Bool(b)) => Some(a.cmp(&b)),
            _ => None,
        }
    }
}

/// Clock frequency in MHz as an exact positive rational.
///
/// Serialized as a `"num/den"` string; parsed from that form, plain
/// integers, or finite decimals such as `527.9`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mhz(pub Ratio<i64>);

impl Mhz {
    pub fn new(num: i64, den: i64) -> Self {
        Mhz(Ratio::new(num, den))
    }

    pub fn from_int(v: i64) -> Self {
        Mhz(Ratio::from_integer(v))
    }

    pub fn is_positive(self) -> bool {
        self.0 > Ratio::zero()
    }

    pub fn to_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn ratio(self) -> Ratio<i64> {
        self.0
    }
}

impl fmt::Display for Mhz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Mhz {
    type Err = IrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IrError::Parse(format!("bad frequency `{s}`"));
        let s = s.trim();
        let r = if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ratio::new(n, d)
        } else if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || frac.len() > 9 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let den = 10i64.pow(frac.len() as u32);
            let int: i64 = int.parse().map_err(|_| bad())?;
            let frac: i64 = frac.parse().map_err(|_| bad())?;
            Ratio::new(int * den + frac, den)
        } else {
            Ratio::from_integer(s.parse().map_err(|_| bad())?)
        };
        Ok(Mhz(r))
    }
}

impl Serialize for Mhz {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Mhz {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde helper for exact rationals outside of clock frequencies.
pub mod ratio_string {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<i64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&format_args!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<i64>, D::Error> {
        let s = String::deserialize(d)?;
        let (n, den) = s
            .split_once('/')
            .ok_or_else(|| serde::de::Error::custom("expected num/den"))?;
        let n: i64 = n.parse().map_err(serde::de::Error::custom)?;
        let den: i64 = den.parse().map_err(serde::de::Error::custom)?;
        if den == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Ratio::new(n, den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mhz_parse_forms() {
        assert_eq!("527.9".parse::<Mhz>().unwrap(), Mhz::new(5279, 10));
        assert_eq!("300".parse::<Mhz>().unwrap(), Mhz::from_int(300));
        assert_eq!("1349/4".parse::<Mhz>().unwrap(), Mhz::new(1349, 4));
        assert_eq!(Mhz::new(6747, 20).to_string(), "6747/20");
        assert!("abc".parse::<Mhz>().is_err());
        assert!("1/0".parse::<Mhz>().is_err());
    }

    #[test]
    fn scalar_bitwise_eq() {
        assert_eq!(Scalar::F32(f32::NAN), Scalar::F32(f32::NAN));
        assert_ne!(Scalar::F32(0.0), Scalar::F32(-0.0));
        assert_ne!(Scalar::I32(1), Scalar::I64(1));
    }
}
