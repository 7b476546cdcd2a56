//! Trits, three-valued logics and the ternary Hamming distance.
//!
//! A trit takes one of FALSE (`-1`), UNKNOWN (`0`) or TRUE (`+1`). The
//! distance between two trits is derived from a logic's EQUIVALENCE
//! operator as `THD(a, b) = (¬(a ↔ b) + 1) / 2`, which lands in
//! `{0, 0.5, 1}`. The logics only differ on pairs involving UNKNOWN:
//!
//! | a ↔ b      | Łukasiewicz | Kleene / Bochvar |
//! |------------|-------------|------------------|
//! | `0 ↔ 0`    | `+1`        | `0`              |
//! | `0 ↔ ±1`   | `0`         | `0`              |
//!
//! so `THD(0, 0)` is `0` under Łukasiewicz and `0.5` under Kleene.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg};
use std::str::FromStr;

use crate::error::{Error, Result};

/// A balanced ternary digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(i8)]
pub enum Trit {
    /// FALSE, `-1`.
    Neg = -1,
    /// UNKNOWN, `0`.
    Unknown = 0,
    /// TRUE, `+1`.
    Pos = 1,
}

impl Trit {
    pub const ALL: [Trit; 3] = [Trit::Pos, Trit::Unknown, Trit::Neg];

    #[inline]
    pub const fn value(self) -> i8 {
        self as i8
    }

    #[inline]
    pub const fn negate(self) -> Trit {
        match self {
            Trit::Neg => Trit::Pos,
            Trit::Unknown => Trit::Unknown,
            Trit::Pos => Trit::Neg,
        }
    }
}

impl Neg for Trit {
    type Output = Trit;

    fn neg(self) -> Trit {
        self.negate()
    }
}

impl TryFrom<i8> for Trit {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(Trit::Neg),
            0 => Ok(Trit::Unknown),
            1 => Ok(Trit::Pos),
            other => Err(Error::data(format!("{other} is not a trit"))),
        }
    }
}

impl From<Trit> for i8 {
    fn from(t: Trit) -> i8 {
        t.value()
    }
}

impl fmt::Display for Trit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trit::Neg => f.write_str("-1"),
            Trit::Unknown => f.write_str("0"),
            Trit::Pos => f.write_str("+1"),
        }
    }
}

/// The three-valued logic whose EQUIVALENCE defines the distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Logic {
    Lukasiewicz,
    Kleene,
    /// Shares Kleene's EQUIVALENCE table; kept distinct for reporting.
    Bochvar,
}

impl Logic {
    pub const ALL: [Logic; 3] = [Logic::Lukasiewicz, Logic::Kleene, Logic::Bochvar];

    pub fn name(self) -> &'static str {
        match self {
            Logic::Lukasiewicz => "lukasiewicz",
            Logic::Kleene => "kleene",
            Logic::Bochvar => "bochvar",
        }
    }

    /// Whether `0 ↔ 0` is UNKNOWN (Kleene, Bochvar) rather than TRUE.
    #[inline]
    pub(crate) fn unknown_pairs_differ(self) -> bool {
        !matches!(self, Logic::Lukasiewicz)
    }
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Logic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lukasiewicz" | "luka" | "l" => Ok(Logic::Lukasiewicz),
            "kleene" | "k" => Ok(Logic::Kleene),
            "bochvar" | "b" => Ok(Logic::Bochvar),
            _ => Err(Error::param(format!("unknown logic '{s}'"))),
        }
    }
}

/// A ternary Hamming distance, stored exactly as a count of half units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TernaryDistance(u64);

impl TernaryDistance {
    pub const ZERO: TernaryDistance = TernaryDistance(0);

    #[inline]
    pub const fn from_halves(halves: u64) -> Self {
        TernaryDistance(halves)
    }

    /// Twice the distance.
    #[inline]
    pub const fn halves(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0 as f64 * 0.5
    }
}

impl Add for TernaryDistance {
    type Output = TernaryDistance;

    fn add(self, rhs: Self) -> Self {
        TernaryDistance(self.0 + rhs.0)
    }
}

impl AddAssign for TernaryDistance {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sum for TernaryDistance {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(TernaryDistance::ZERO, Add::add)
    }
}

impl fmt::Display for TernaryDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0 / 2)
        }
    }
}

/// `a ↔ b` under `logic`.
pub fn equivalence(a: Trit, b: Trit, logic: Logic) -> Trit {
    use Trit::*;
    match (a, b) {
        (Unknown, Unknown) if logic.unknown_pairs_differ() => Unknown,
        (Unknown, Unknown) => Pos,
        (Unknown, _) | (_, Unknown) => Unknown,
        (x, y) if x == y => Pos,
        _ => Neg,
    }
}

#[inline]
pub fn negate(a: Trit) -> Trit {
    a.negate()
}

/// `(¬(a ↔ b) + 1) / 2`.
pub fn thd_scalar(a: Trit, b: Trit, logic: Logic) -> TernaryDistance {
    let not_eq = negate(equivalence(a, b, logic)).value();
    // not_eq + 1 is in {0, 1, 2}: exactly the number of half units.
    TernaryDistance::from_halves((not_eq + 1) as u64)
}

/// Sum of [`thd_scalar`] over aligned positions.
pub fn thd_vector(a: &[Trit], b: &[Trit], logic: Logic) -> Result<TernaryDistance> {
    if a.len() != b.len() {
        return Err(Error::dimension(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| thd_scalar(x, y, logic)).sum())
}
