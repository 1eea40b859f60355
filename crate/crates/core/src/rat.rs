//! Rational scalar helpers shared by the exact layers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn frac(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn fmt(q: &Rat) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `p`, `p/q` or a finite decimal such as `-0.125` exactly.
pub fn parse(s: &str) -> Option<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rat::new(p, q));
    }
    if s.contains(['.', 'e', 'E']) {
        return parse_decimal(s);
    }
    s.parse::<BigInt>().ok().map(Rat::from_integer)
}

fn parse_decimal(s: &str) -> Option<Rat> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{ip}{fp}").parse().ok()?;
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rat::from_integer(digits);
    if scale >= 0 {
        value *= Rat::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rat::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -value } else { value })
}

pub fn to_f64(q: &Rat) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator or denominator overflow f64 individually
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Exact value of a finite float.
pub fn from_f64_exact(x: f64) -> Rat {
    Rat::from_float(x).unwrap_or_else(Rat::zero)
}

/// Nearest rational with denominator `2^bits` (ties away from zero).
pub fn round_dyadic(x: f64, bits: u32) -> Rat {
    let scale = BigInt::one() << bits;
    let exact = from_f64_exact(x) * Rat::from_integer(scale.clone());
    Rat::new(exact.round().to_integer(), scale)
}

/// Largest rational with denominator `2^bits` not exceeding `x`.
pub fn floor_dyadic(x: &Rat, bits: u32) -> Rat {
    let scale = BigInt::one() << bits;
    let scaled = x * Rat::from_integer(scale.clone());
    Rat::new(scaled.floor().to_integer(), scale)
}

/// Whether the rational is a finite decimal (denominator of the form 2^a 5^b).
pub fn is_finite_decimal(q: &Rat) -> bool {
    let mut d = q.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&d % &two).is_zero() {
        d /= &two;
    }
    while (&d % &five).is_zero() {
        d /= &five;
    }
    d.is_one()
}

/// Exact decimal rendering for finite decimals.
pub fn fmt_decimal(q: &Rat) -> Option<String> {
    if !is_finite_decimal(q) {
        return None;
    }
    if q.is_integer() {
        return Some(q.numer().to_string());
    }
    let mut places = 0usize;
    let mut scaled = q.abs();
    let ten = Rat::from_integer(BigInt::from(10));
    while !scaled.is_integer() {
        scaled *= &ten;
        places += 1;
    }
    let digits = scaled.to_integer().to_string();
    let digits = format!("{:0>width$}", digits, width = places + 1);
    let (ip, fp) = digits.split_at(digits.len() - places);
    let sign = if q.is_negative() { "-" } else { "" };
    Some(format!("{sign}{ip}.{fp}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("3/6"), Some(frac(1, 2)));
        assert_eq!(parse("-7"), Some(int(-7)));
        assert_eq!(parse("-0.125"), Some(frac(-1, 8)));
        assert_eq!(parse("1.5e2"), Some(int(150)));
        assert_eq!(parse("2.5E-1"), Some(frac(1, 4)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("x"), None);
    }

    #[test]
    fn decimal_roundtrip() {
        for q in [frac(1, 8), frac(-3, 40), int(12), frac(7, 2)] {
            let s = fmt_decimal(&q).unwrap();
            assert_eq!(parse(&s), Some(q));
        }
        assert_eq!(fmt_decimal(&frac(1, 3)), None);
    }

    #[test]
    fn dyadic_rounding() {
        assert_eq!(round_dyadic(0.3, 2), frac(1, 4));
        assert_eq!(floor_dyadic(&frac(5, 2), 1), frac(5, 2));
        assert_eq!(floor_dyadic(&frac(1, 3), 2), frac(1, 4));
        assert_eq!(floor_dyadic(&frac(-1, 3), 2), frac(-1, 2));
    }
}
