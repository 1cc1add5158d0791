//! Min-plus scalars over an integer entry type extended with `+∞`.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_bigint::{BigInt, ToBigInt};
use num_integer::Integer;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, FromPrimitive, ToPrimitive};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Integer types usable as finite tropical entries.
///
/// Implemented for every signed integer type carrying the listed traits;
/// in practice `i64`, `i128` and [`BigInt`]. Fixed-width types report
/// overflow through the checked operations instead of wrapping.
pub trait Entry:
    Clone
    + Ord
    + Hash
    + Debug
    + Display
    + FromStr
    + Integer
    + CheckedAdd
    + CheckedSub
    + CheckedMul
    + CheckedDiv
    + FromPrimitive
    + ToPrimitive
    + ToBigInt
    + Send
    + Sync
    + 'static
{
}

impl<T> Entry for T where
    T: Clone
        + Ord
        + Hash
        + Debug
        + Display
        + FromStr
        + Integer
        + CheckedAdd
        + CheckedSub
        + CheckedMul
        + CheckedDiv
        + FromPrimitive
        + ToPrimitive
        + ToBigInt
        + Send
        + Sync
        + 'static
{
}

/// An element of `Z ∪ {+∞}` under `(min, +)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum TropicalScalar<T> {
    Finite(T),
    Infinity,
}

impl<T: Entry> TropicalScalar<T> {
    /// Multiplicative identity (classical zero).
    pub fn zero() -> Self {
        TropicalScalar::Finite(T::zero())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, TropicalScalar::Infinity)
    }

    pub fn finite(&self) -> Option<&T> {
        match self {
            TropicalScalar::Finite(v) => Some(v),
            TropicalScalar::Infinity => None,
        }
    }

    pub fn from_i64(value: i64) -> Self {
        TropicalScalar::Finite(T::from_i64(value).expect("entry type cannot hold an i64 value"))
    }

    /// Tropical sum: the minimum, with `∞` above every integer.
    pub fn oplus(&self, other: &Self) -> Self {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Tropical product (classical sum), `None` on fixed-width overflow.
    pub fn checked_otimes(&self, other: &Self) -> Option<Self> {
        match (self, other) {
            (TropicalScalar::Finite(a), TropicalScalar::Finite(b)) => {
                a.checked_add(b).map(TropicalScalar::Finite)
            }
            _ => Some(TropicalScalar::Infinity),
        }
    }

    /// Tropical product (classical sum). `∞` is absorbing.
    ///
    /// Panics if a fixed-width entry type overflows; use
    /// [`checked_otimes`](Self::checked_otimes) to handle that case.
    pub fn otimes(&self, other: &Self) -> Self {
        self.checked_otimes(other)
            .expect("tropical product overflowed the entry type")
    }
}

impl<T: Ord> PartialOrd for TropicalScalar<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Ord> Ord for TropicalScalar<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        use TropicalScalar::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), Infinity) => Ordering::Less,
            (Infinity, Finite(_)) => Ordering::Greater,
            (Infinity, Infinity) => Ordering::Equal,
        }
    }
}

impl<T> From<T> for TropicalScalar<T> {
    fn from(value: T) -> Self {
        TropicalScalar::Finite(value)
    }
}

impl<T: Display> Display for TropicalScalar<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TropicalScalar::Finite(v) => write!(f, "{v}"),
            TropicalScalar::Infinity => f.write_str("inf"),
        }
    }
}

impl<T: Debug> Debug for TropicalScalar<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TropicalScalar::Finite(v) => v.fmt(f),
            TropicalScalar::Infinity => f.write_str("inf"),
        }
    }
}

// JSON encoding: "inf" for infinity, a JSON integer when the value fits
// in 64 bits, otherwise its decimal string.
impl<T: Entry> Serialize for TropicalScalar<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            TropicalScalar::Infinity => serializer.serialize_str("inf"),
            TropicalScalar::Finite(v) => match v.to_i64() {
                Some(small) => serializer.serialize_i64(small),
                None => serializer.serialize_str(&v.to_string()),
            },
        }
    }
}

impl<'de, T: Entry> Deserialize<'de> for TropicalScalar<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ScalarVisitor<T>(std::marker::PhantomData<T>);

        impl<T: Entry> Visitor<'_> for ScalarVisitor<T> {
            type Value = TropicalScalar<T>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer, a decimal string, or \"inf\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                T::from_i64(v)
                    .map(TropicalScalar::Finite)
                    .ok_or_else(|| E::custom(format!("{v} does not fit the entry type")))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                T::from_u64(v)
                    .map(TropicalScalar::Finite)
                    .ok_or_else(|| E::custom(format!("{v} does not fit the entry type")))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                let trimmed = v.trim();
                if trimmed.eq_ignore_ascii_case("inf") {
                    return Ok(TropicalScalar::Infinity);
                }
                // Parse through BigInt so out-of-range values get a clear message.
                let big: BigInt = trimmed
                    .parse()
                    .map_err(|_| E::custom(format!("invalid tropical entry {v:?}")))?;
                trimmed
                    .parse::<T>()
                    .map(TropicalScalar::Finite)
                    .map_err(|_| E::custom(format!("{big} does not fit the entry type")))
            }
        }

        deserializer.deserialize_any(ScalarVisitor(std::marker::PhantomData))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type S = TropicalScalar<i64>;

    fn f(v: i64) -> S {
        S::Finite(v)
    }

    #[test]
    fn oplus_is_min() {
        assert_eq!(f(3).oplus(&f(5)), f(3));
        assert_eq!(f(7).oplus(&S::Infinity), f(7));
        assert_eq!(S::Infinity.oplus(&f(7)), f(7));
        assert_eq!(f(-2).oplus(&f(-2)), f(-2));
    }

    #[test]
    fn otimes_is_sum() {
        assert_eq!(f(3).otimes(&f(5)), f(8));
        assert_eq!(f(7).otimes(&f(0)), f(7));
        assert_eq!(f(4).otimes(&S::Infinity), S::Infinity);
        assert_eq!(S::Infinity.otimes(&S::Infinity), S::Infinity);
    }

    #[test]
    fn fixed_width_overflow_is_reported() {
        assert_eq!(f(i64::MAX).checked_otimes(&f(1)), None);
        assert_eq!(f(i64::MAX).checked_otimes(&S::Infinity), Some(S::Infinity));
    }

    #[test]
    #[should_panic(expected = "overflowed")]
    fn otimes_panics_on_overflow() {
        let _ = f(i64::MIN).otimes(&f(-1));
    }

    #[test]
    fn json_encoding() {
        let big: TropicalScalar<BigInt> = TropicalScalar::Finite("123456789012345678901234567890".parse().unwrap());
        assert_eq!(serde_json::to_string(&big).unwrap(), "\"123456789012345678901234567890\"");
        assert_eq!(serde_json::to_string(&S::Infinity).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&f(-12)).unwrap(), "-12");

        let back: TropicalScalar<BigInt> = serde_json::from_str("\"123456789012345678901234567890\"").unwrap();
        assert_eq!(back, big);
        let inf: S = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(inf, S::Infinity);
        assert!(serde_json::from_str::<S>("\"123456789012345678901234567890\"").is_err());
        assert!(serde_json::from_str::<S>("\"abc\"").is_err());
    }
}
