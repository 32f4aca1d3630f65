//! Exact rationals. Backed by `num-rational`'s `BigRational`, which keeps
//! values in lowest terms with a positive denominator.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `(b-1)! (n-b)! / n!`, the share of a coalition of size `b` among `n`
/// players.
pub fn coalition_weight(b: usize, n: usize) -> Rational {
    assert!(b >= 1 && b <= n);
    Rational::new(factorial(b - 1) * factorial(n - b), factorial(n))
}

/// Nearest `f64`, for display only.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `p/q`, or just `p` for integers.
pub fn render(r: &Rational) -> String {
    r.to_string()
}

/// Inverse of [`render`].
pub fn parse(text: &str) -> Option<Rational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((p, q)) => {
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p.trim().parse().ok()?, q))
        }
        None => Some(Rational::from_integer(text.parse().ok()?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one_per_player() {
        // Σ_b C(n-1, b-1) w(b, n) = 1
        for n in 1..8usize {
            let total: Rational = (1..=n)
                .map(|b| {
                    let choose = factorial(n - 1) / (factorial(b - 1) * factorial(n - b));
                    Rational::from_integer(choose) * coalition_weight(b, n)
                })
                .sum();
            assert_eq!(total, int(1));
        }
    }

    #[test]
    fn three_player_weights() {
        assert_eq!(coalition_weight(1, 3), ratio(1, 3));
        assert_eq!(coalition_weight(2, 3), ratio(1, 6));
        assert_eq!(coalition_weight(3, 3), ratio(1, 3));
    }

    #[test]
    fn render_round_trip() {
        for r in [ratio(3, 2), int(5), ratio(-1, 4), zero()] {
            assert_eq!(parse(&render(&r)), Some(r));
        }
        assert_eq!(render(&ratio(6, 4)), "3/2");
        assert_eq!(parse("1/0"), None);
    }
}
