//! Direct evaluation of the weighted log-odds formulas in binary fixed point
//! with 400 fractional bits (about 120 decimal digits).
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

pub const FRAC_BITS: u32 = 400;

/// A real number `x` stored as `round(x * 2^FRAC_BITS)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixed(pub BigInt);

impl Fixed {
    pub fn from_ratio(num: &BigInt, den: &BigInt) -> Fixed {
        Fixed((num << FRAC_BITS) / den)
    }

    pub fn from_int(n: i64) -> Fixed {
        Fixed(BigInt::from(n) << FRAC_BITS)
    }

    pub fn add(&self, o: &Fixed) -> Fixed {
        Fixed(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &Fixed) -> Fixed {
        Fixed(&self.0 - &o.0)
    }

    pub fn mul(&self, o: &Fixed) -> Fixed {
        Fixed((&self.0 * &o.0) >> FRAC_BITS)
    }

    pub fn div(&self, o: &Fixed) -> Fixed {
        Fixed((&self.0 << FRAC_BITS) / &o.0)
    }

    pub fn sqrt(&self) -> Fixed {
        assert!(!self.0.is_negative());
        Fixed((&self.0 << FRAC_BITS).sqrt())
    }

    pub fn to_f64(&self) -> f64 {
        let shift = FRAC_BITS - 64;
        let top = &self.0 >> shift;
        top.to_f64().unwrap() / 2f64.powi(64)
    }

    /// Truncated decimal expansion with `digits` fractional digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        let neg = self.0.sign() == Sign::Minus;
        let mag = self.0.abs();
        let int = &mag >> FRAC_BITS;
        let frac = &mag - (&int << FRAC_BITS);
        let scaled = (frac * BigInt::from(10u8).pow(digits as u32)) >> FRAC_BITS;
        format!(
            "{}{int}.{:0>width$}",
            if neg { "-" } else { "" },
            scaled.to_string(),
            width = digits
        )
    }
}

/// `atanh(z) = z + z^3/3 + z^5/5 + ...` for `|z| <= 1/3`.
fn atanh(z: &Fixed) -> Fixed {
    let z2 = z.mul(z);
    let mut power = z.clone();
    let mut sum = Fixed(BigInt::zero());
    let mut k: u32 = 1;
    loop {
        let term = Fixed(&power.0 / BigInt::from(k));
        if term.0.is_zero() {
            break;
        }
        sum = sum.add(&term);
        power = power.mul(&z2);
        k += 2;
    }
    sum
}

pub fn ln2() -> Fixed {
    static LN2: OnceLock<Fixed> = OnceLock::new();
    LN2.get_or_init(|| {
        let third = Fixed::from_ratio(&BigInt::one(), &BigInt::from(3));
        let a = atanh(&third);
        a.add(&a)
    })
    .clone()
}

/// `ln n = k ln 2 + ln(n / 2^k)` with `n / 2^k` in `[1, 2)`.
pub fn ln_int(n: &BigInt) -> Fixed {
    assert!(n.is_positive(), "ln of non-positive {n}");
    let k = n.bits() - 1;
    let m = Fixed((n << FRAC_BITS) >> k);
    let one = Fixed::from_int(1);
    let z = m.sub(&one).div(&m.add(&one));
    let t = atanh(&z);
    let k_ln2 = Fixed(ln2().0 * BigInt::from(k));
    k_ln2.add(&t).add(&t)
}

/// `ln(num / den)` for positive integers.
pub fn ln_ratio(num: &BigInt, den: &BigInt) -> Fixed {
    ln_int(num).sub(&ln_int(den))
}

#[derive(Debug, Clone)]
pub struct OracleEntry {
    pub delta: Fixed,
    pub variance: Fixed,
    pub z: Fixed,
}

/// Scores every n-gram in `a` or `b` against a background (default: `a + b`)
/// and integer prior mass (default: combined token total). All inputs are
/// exact rationals, so each logarithm argument is formed exactly.
pub fn log_odds(
    a: &BTreeMap<String, u64>,
    b: &BTreeMap<String, u64>,
    background: Option<&BTreeMap<String, u64>>,
    alpha0: Option<u64>,
) -> BTreeMap<String, OracleEntry> {
    let mut combined = a.clone();
    for (k, v) in b {
        *combined.entry(k.clone()).or_default() += v;
    }
    let bg = background.unwrap_or(&combined);
    let big = |x: u64| BigInt::from(x);
    let n_a = big(a.values().sum());
    let n_b = big(b.values().sum());
    let alpha0 = big(alpha0.unwrap_or(a.values().sum::<u64>() + b.values().sum::<u64>()));
    let bg_total = big(bg.values().sum());

    let mut out = BTreeMap::new();
    for w in combined.keys() {
        // alpha = alpha0 * bg_w / bg_total = p / q
        let p = &alpha0 * big(bg[w]);
        let q = bg_total.clone();
        let ya = big(a.get(w).copied().unwrap_or(0));
        let yb = big(b.get(w).copied().unwrap_or(0));
        // (y + alpha) = (y q + p) / q ; (n + alpha0 - y - alpha) = ((n + alpha0 - y) q - p) / q
        let pa = &ya * &q + &p;
        let qa = (&n_a + &alpha0 - &ya) * &q - &p;
        let pb = &yb * &q + &p;
        let qb = (&n_b + &alpha0 - &yb) * &q - &p;
        let delta = ln_ratio(&pa, &qa).sub(&ln_ratio(&pb, &qb));
        let variance = Fixed::from_ratio(&q, &pa).add(&Fixed::from_ratio(&q, &pb));
        let z = delta.div(&variance.sqrt());
        out.insert(w.clone(), OracleEntry { delta, variance, z });
    }
    out
}
