//! Exponent arithmetic in exact rationals, and the empirical exponent region
//! cut out by ball-volume lower bounds `|B(z, d1, d2)| >= c d1^c1 d2^c2`.

use std::fmt;
use std::str::FromStr;

use num::rational::Ratio;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod region;

pub use region::*;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExponentError {
    #[error("degenerate exponents: {0}")]
    Degenerate(String),
    #[error("ordering violated: {0}")]
    Ordering(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cannot parse exponent {0:?}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, ExponentError>;

/// A Lebesgue exponent in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Rational),
    Infinite,
}

impl Exponent {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(ExponentError::Domain("zero denominator".into()));
        }
        Exponent::finite(Rational::new(num, den))
    }

    pub fn finite(v: Rational) -> Result<Self> {
        if v < Rational::one() {
            return Err(ExponentError::Domain(format!("exponent {v} is below 1")));
        }
        Ok(Exponent::Finite(v))
    }

    pub fn integer(n: i64) -> Result<Self> {
        Exponent::new(n, 1)
    }

    /// Nearest rational with a small denominator; `inf` maps to [`Exponent::Infinite`].
    pub fn from_f64(v: f64) -> Result<Self> {
        if v.is_infinite() && v > 0.0 {
            return Ok(Exponent::Infinite);
        }
        let r = Rational::approximate_float(v).ok_or_else(|| ExponentError::Parse(v.to_string()))?;
        Exponent::finite(snap(r, v))
    }

    /// `1/e`, with `1/inf = 0`.
    pub fn recip(&self) -> Rational {
        match self {
            Exponent::Finite(v) => v.recip(),
            Exponent::Infinite => Rational::zero(),
        }
    }

    pub fn from_recip(r: Rational) -> Result<Self> {
        if r.is_zero() {
            Ok(Exponent::Infinite)
        } else if r.is_negative() || r > Rational::one() {
            Err(ExponentError::Domain(format!("reciprocal {r} is outside [0, 1]")))
        } else {
            Ok(Exponent::Finite(r.recip()))
        }
    }

    pub fn conjugate(&self) -> Exponent {
        Exponent::from_recip(Rational::one() - self.recip()).expect("conjugate of an exponent in [1, inf]")
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(v) => ratio_f64(*v),
            Exponent::Infinite => f64::INFINITY,
        }
    }
}

/// Prefer a denominator up to 1000 when it reproduces `v` to rounding error.
fn snap(r: Rational, v: f64) -> Rational {
    for den in 1..=1000i64 {
        let num = (v * den as f64).round();
        if ((num / den as f64) - v).abs() <= 1e-12 * v.abs().max(1.0) {
            return Rational::new(num as i64, den);
        }
    }
    r
}

pub fn ratio_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(v) => write!(f, "{v}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = ExponentError;

    /// Accepts `inf`, integers, fractions `a/b` and decimals.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => return Ok(Exponent::Infinite),
            _ => {}
        }
        if let Some((a, b)) = s.split_once('/') {
            let a: i64 = a.trim().parse().map_err(|_| ExponentError::Parse(s.into()))?;
            let b: i64 = b.trim().parse().map_err(|_| ExponentError::Parse(s.into()))?;
            return Exponent::new(a, b);
        }
        if let Ok(n) = s.parse::<i64>() {
            return Exponent::integer(n);
        }
        let v: f64 = s.parse().map_err(|_| ExponentError::Parse(s.into()))?;
        Exponent::from_f64(v)
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Exponent::from_f64(v).map_err(serde::de::Error::custom),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentTriple {
    pub p: Exponent,
    pub q: Exponent,
    pub r: Exponent,
}

impl ExponentTriple {
    pub fn new(p: Exponent, q: Exponent, r: Exponent) -> Self {
        ExponentTriple { p, q, r }
    }

    /// Parses `"p,q,r"`, e.g. `"5/3,3,3"` or `"1,inf,1"`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(ExponentError::Parse(s.into()));
        }
        Ok(ExponentTriple { p: parts[0].parse()?, q: parts[1].parse()?, r: parts[2].parse()? })
    }

    pub fn as_f64(&self) -> (f64, f64, f64) {
        (self.p.to_f64(), self.q.to_f64(), self.r.to_f64())
    }

    /// `p <= q <= r`.
    pub fn check_ordering(&self) -> Result<()> {
        let (ip, iq, ir) = (self.p.recip(), self.q.recip(), self.r.recip());
        if ip < iq || iq < ir {
            return Err(ExponentError::Ordering(format!(
                "need p <= q <= r, got ({self}); triples outside this ordering follow from ordered ones \
                 (see interpolation_window and the necessity construction)"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ExponentTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.p, self.q, self.r)
    }
}

/// `(c1, c2)` in the ball-volume bound `|B| >= c d1^c1 d2^c2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallExponents {
    #[serde(with = "rational_string")]
    pub c1: Rational,
    #[serde(with = "rational_string")]
    pub c2: Rational,
}

impl BallExponents {
    pub fn as_f64(&self) -> (f64, f64) {
        (ratio_f64(self.c1), ratio_f64(self.c2))
    }
}

mod rational_string {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ball exponents of the unmixed restricted weak-type `(p, q)` inequality.
pub fn c_from_pq(p: Exponent, q: Exponent) -> Result<BallExponents> {
    let (ip, iq) = (p.recip(), q.recip());
    if ip <= iq {
        return Err(ExponentError::Degenerate(format!("need q > p, got p = {p}, q = {q}")));
    }
    let den = ip - iq;
    Ok(BallExponents { c1: ip / den, c2: (Rational::one() - iq) / den })
}

/// Inverse of [`c_from_pq`]; needs `c1, c2 >= 1`.
pub fn pq_from_c(c: &BallExponents) -> Result<(Exponent, Exponent)> {
    let one = Rational::one();
    if c.c1 < one || c.c2 < one {
        return Err(ExponentError::Domain(format!("need c1, c2 >= 1, got ({}, {})", c.c1, c.c2)));
    }
    let s = c.c1 + c.c2 - one;
    Ok((Exponent::from_recip(c.c1 / s)?, Exponent::from_recip((c.c1 - one) / s)?))
}

/// Ball exponents of the mixed `(p, q, r)` inequality; `r = q` reduces to [`c_from_pq`].
pub fn c_from_pqr(t: &ExponentTriple) -> Result<BallExponents> {
    let (ip, iq, ir) = (t.p.recip(), t.q.recip(), t.r.recip());
    if ip <= ir {
        return Err(ExponentError::Degenerate(format!("need r > p, got ({t})")));
    }
    t.check_ordering()?;
    let den = ip - ir;
    Ok(BallExponents { c1: (ip + iq - ir) / den, c2: (Rational::one() - ir) / den })
}

/// The exponents `(g1, g2, g3)` with `|Omega| >= a1^g1 a2^g2 |Pi F|^g3`; all
/// nonnegative when `p <= q <= r`.
pub fn gammas(t: &ExponentTriple) -> Result<[Rational; 3]> {
    let (ip, iq, ir) = (t.p.recip(), t.q.recip(), t.r.recip());
    if ip <= ir {
        return Err(ExponentError::Degenerate(format!("need r > p, got ({t})")));
    }
    let den = ip - ir;
    Ok([ip / den, (Rational::one() - ir) / den, (iq - ir) / den])
}

/// Parameters `s` for which `(p, q, r)` sits on the segment from `(1, inf, 1)`
/// to an ordered triple `(p1, q1, r1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationWindow {
    pub triple: ExponentTriple,
    #[serde(with = "rational_string")]
    pub s_lo: Rational,
    #[serde(with = "rational_string")]
    pub s_hi: Rational,
}

impl InterpolationWindow {
    /// `(p1, q1, r1)` from `1/p = 1 - s + s/p1`, `1/q = s/q1`, `1/r = 1 - s + s/r1`.
    pub fn endpoint(&self, s: Rational) -> Result<ExponentTriple> {
        if s < self.s_lo || s > self.s_hi {
            return Err(ExponentError::Domain(format!("s = {s} outside [{}, {}]", self.s_lo, self.s_hi)));
        }
        let one = Rational::one();
        let t = &self.triple;
        let ip1 = (t.p.recip() - one + s) / s;
        let iq1 = t.q.recip() / s;
        let ir1 = (t.r.recip() - one + s) / s;
        let out = ExponentTriple {
            p: Exponent::from_recip(ip1)?,
            q: Exponent::from_recip(iq1)?,
            r: Exponent::from_recip(ir1)?,
        };
        out.check_ordering()?;
        Ok(out)
    }

    pub fn midpoint(&self) -> Rational {
        (self.s_lo + self.s_hi) / Rational::from_integer(2)
    }
}

/// Requires `q > r > p`.
pub fn interpolation_window(t: &ExponentTriple) -> Result<InterpolationWindow> {
    let (ip, iq, ir) = (t.p.recip(), t.q.recip(), t.r.recip());
    if !(iq < ir && ir < ip) {
        return Err(ExponentError::Domain(format!("need q > r > p, got ({t})")));
    }
    let one = Rational::one();
    let s_lo = iq + one - ip;
    let s_hi = iq + one - ir;
    if !(s_lo > Rational::zero() && s_lo <= s_hi && s_hi < one) {
        return Err(ExponentError::Domain(format!("empty window [{s_lo}, {s_hi}]")));
    }
    Ok(InterpolationWindow { triple: *t, s_lo, s_hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Exponent {
        s.parse().unwrap()
    }

    fn r(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn parse_forms() {
        assert_eq!(e("5/3"), Exponent::Finite(r(5, 3)));
        assert_eq!(e("inf"), Exponent::Infinite);
        assert_eq!(e("1.5"), Exponent::Finite(r(3, 2)));
        assert_eq!(Exponent::from_f64(5.0 / 3.0).unwrap(), Exponent::Finite(r(5, 3)));
        assert!("0.5".parse::<Exponent>().is_err());
        assert!("x".parse::<Exponent>().is_err());
    }

    #[test]
    fn conjugates() {
        assert_eq!(e("1").conjugate(), Exponent::Infinite);
        assert_eq!(e("inf").conjugate(), e("1"));
        assert_eq!(e("3").conjugate(), e("3/2"));
    }

    #[test]
    fn pq_examples() {
        let c = c_from_pq(e("3/2"), e("3")).unwrap();
        assert_eq!((c.c1, c.c2), (r(2, 1), r(2, 1)));
        let c = c_from_pq(e("1"), e("inf")).unwrap();
        assert_eq!((c.c1, c.c2), (r(1, 1), r(1, 1)));
        let c = c_from_pq(e("2"), e("4")).unwrap();
        assert_eq!((c.c1, c.c2), (r(2, 1), r(3, 1)));
        assert!(matches!(c_from_pq(e("3"), e("3")), Err(ExponentError::Degenerate(_))));
        for (p, q) in [("3/2", "3"), ("1", "inf"), ("2", "4")] {
            assert_eq!(pq_from_c(&c_from_pq(e(p), e(q)).unwrap()).unwrap(), (e(p), e(q)));
        }
    }

    #[test]
    fn pqr_examples() {
        let t = ExponentTriple::parse("5/3,3,3").unwrap();
        let c = c_from_pqr(&t).unwrap();
        assert_eq!((c.c1, c.c2), (r(9, 4), r(5, 2)));
        for q in ["1", "2", "7/2"] {
            let t = ExponentTriple::new(e("1"), e(q), e("inf"));
            let c = c_from_pqr(&t).unwrap();
            assert_eq!(c.c1, Rational::one() + e(q).recip());
            assert_eq!(c.c2, Rational::one());
        }
        let bad = ExponentTriple::parse("2,3,3/2").unwrap();
        assert!(matches!(c_from_pqr(&bad), Err(ExponentError::Degenerate(_))));
        let unordered = ExponentTriple::parse("3/2,4,2").unwrap();
        assert!(matches!(c_from_pqr(&unordered), Err(ExponentError::Ordering(_))));
    }

    #[test]
    fn gamma_examples() {
        let g = gammas(&ExponentTriple::parse("3/2,2,3").unwrap()).unwrap();
        assert_eq!(g[2], r(1, 2));
        let g = gammas(&ExponentTriple::parse("5/3,3,3").unwrap()).unwrap();
        assert_eq!(g, [r(9, 4), r(5, 2), r(0, 1)]);
    }

    #[test]
    fn window_rejects_wrong_ordering() {
        assert!(interpolation_window(&ExponentTriple::parse("3/2,3,3").unwrap()).is_err());
        assert!(interpolation_window(&ExponentTriple::parse("2,3,4").unwrap()).is_err());
    }

    #[test]
    fn serde_as_strings() {
        let t = ExponentTriple::parse("5/3,inf,3").unwrap();
        let text = serde_json::to_string(&t).unwrap();
        assert_eq!(text, r#"{"p":"5/3","q":"inf","r":"3"}"#);
        let back: ExponentTriple = serde_json::from_str(r#"{"p":1.5,"q":"inf","r":3}"#).unwrap();
        assert_eq!(back.p, e("3/2"));
    }
}
