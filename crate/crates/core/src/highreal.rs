//! Arbitrary-precision binary floating point with round-to-nearest-even.
//!
//! [`HighReal`] is a sign/magnitude significand of exactly `prec` bits times
//! a power of two. Every operation computes the exact result as an integer
//! (with guard and sticky bits where the exact result does not terminate)
//! and then applies one round-to-nearest, ties-to-even step, so a `HighReal`
//! computation at precision `p` behaves like an ideal binary format with a
//! `p`-bit significand and unbounded exponent. It is deliberately slow and
//! simple; it exists to evaluate error-bound formulas to many digits and to
//! cross-check the exact integer oracle, never to compute norms at speed.

use crate::Real;
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

/// Decimal digits rendered by [`HighReal::to_decimal_sig18`].
const SIG_DIGITS: u32 = 18;

#[derive(Clone, Debug)]
pub struct HighReal {
    /// -1, 0 or +1; zero iff the value is zero.
    sign: i8,
    /// Normalized significand: exactly `prec` bits (msb set) unless zero.
    mant: BigUint,
    /// Value = sign * mant * 2^exp.
    exp: i64,
    prec: u32,
}

impl HighReal {
    pub fn zero(prec: u32) -> Self {
        assert!(prec >= 2);
        HighReal { sign: 0, mant: BigUint::zero(), exp: 0, prec }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_u64(1, prec)
    }

    pub fn from_u64(v: u64, prec: u32) -> Self {
        assert!(prec >= 2);
        round_normalize(1, BigUint::from(v), 0, prec)
    }

    /// Exactly 2^k.
    pub fn pow2(k: i64, prec: u32) -> Self {
        assert!(prec >= 2);
        round_normalize(1, BigUint::one(), k, prec)
    }

    /// Exact conversion from a finite `f64` (rounds only if `prec < 53`).
    pub fn from_f64(x: f64, prec: u32) -> Self {
        assert!(x.is_finite(), "HighReal::from_f64 needs a finite value");
        if x == 0.0 {
            return Self::zero(prec);
        }
        let (m, e) = x.decompose();
        round_normalize(if x < 0.0 { -1 } else { 1 }, BigUint::from(m), e as i64, prec)
    }

    /// Value = ±mant * 2^exp, rounded to `prec` bits.
    pub fn from_parts(negative: bool, mant: BigUint, exp: i64, prec: u32) -> Self {
        assert!(prec >= 2);
        round_normalize(if negative { -1 } else { 1 }, mant, exp, prec)
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_negative(&self) -> bool {
        self.sign < 0
    }

    pub fn neg(&self) -> Self {
        let mut r = self.clone();
        r.sign = -r.sign;
        r
    }

    pub fn abs(&self) -> Self {
        let mut r = self.clone();
        r.sign = r.sign.abs();
        r
    }

    /// Exact scaling by 2^k.
    pub fn mul_pow2(&self, k: i64) -> Self {
        let mut r = self.clone();
        if r.sign != 0 {
            r.exp += k;
        }
        r
    }

    pub fn add(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        if self.sign == 0 {
            return round_normalize(other.sign, other.mant.clone(), other.exp, prec);
        }
        if other.sign == 0 {
            return round_normalize(self.sign, self.mant.clone(), self.exp, prec);
        }
        let a = upscale(self, prec);
        let b = upscale(other, prec);
        // Same bit length, so the larger scale exponent has the larger
        // magnitude.
        let (hi, lo) = if a.exp >= b.exp { (&a, &b) } else { (&b, &a) };
        let gap = hi.exp - lo.exp;
        if gap > prec as i64 + 4 {
            // |lo| < ulp(hi)/8, so hi +/- lo rounds back to hi: on the same
            // side the sum sits below the halfway point to the next value,
            // and on opposite sides it stays above the halfway point to the
            // previous one even when hi is a power of two.
            return hi.clone();
        }
        let shifted = &hi.mant << gap as u64;
        let (sign, mag) = if hi.sign == lo.sign {
            (hi.sign, shifted + &lo.mant)
        } else {
            match shifted.cmp(&lo.mant) {
                Ordering::Greater => (hi.sign, shifted - &lo.mant),
                Ordering::Less => (lo.sign, &lo.mant - shifted),
                Ordering::Equal => return Self::zero(prec),
            }
        };
        round_normalize(sign, mag, lo.exp, prec)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        if self.sign == 0 || other.sign == 0 {
            return Self::zero(prec);
        }
        round_normalize(self.sign * other.sign, &self.mant * &other.mant, self.exp + other.exp, prec)
    }

    pub fn div(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        assert!(other.sign != 0, "HighReal division by zero");
        if self.sign == 0 {
            return Self::zero(prec);
        }
        // prec + 3 guard bits; the remainder folds into a sticky bit. A tie
        // pattern after normalization requires the lowest dropped bits to be
        // zero, so OR-ing the sticky into bit 0 can only break a tie, never
        // create one.
        let guard = prec as u64 + 3;
        let (q, r) = (&self.mant << guard).div_rem(&other.mant);
        let q = if r.is_zero() { q } else { q | BigUint::one() };
        round_normalize(self.sign * other.sign, q, self.exp - other.exp - guard as i64, prec)
    }

    pub fn sqrt(&self) -> Self {
        assert!(self.sign >= 0, "HighReal square root of a negative value");
        if self.sign == 0 {
            return Self::zero(self.prec);
        }
        // Widen to roughly 2*prec + 4 bits at an even exponent, take the
        // integer floor square root, and fold the remainder into a sticky
        // bit exactly as in `div`.
        let mut t = self.prec as i64 + 4;
        if (self.exp - t) & 1 != 0 {
            t += 1;
        }
        let wide = &self.mant << t as u64;
        let u = num_integer::Roots::sqrt(&wide);
        let rem = &wide - &u * &u;
        let v = if rem.is_zero() { u } else { u | BigUint::one() };
        round_normalize(1, v, (self.exp - t) / 2, self.prec)
    }

    /// Binary exponentiation; each squaring and multiply rounds once.
    pub fn pow_u64(&self, mut k: u64) -> Self {
        let mut result = Self::one(self.prec);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Total order on values (precision does not matter).
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return ord,
        }
        if self.sign == 0 {
            return Ordering::Equal;
        }
        let mag = cmp_magnitude(self, other);
        if self.sign > 0 {
            mag
        } else {
            mag.reverse()
        }
    }

    /// Nearest `f64`, for values within the normal binary64 range.
    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        let r = round_normalize(self.sign, self.mant.clone(), self.exp, 53);
        let m = r.mant.to_u64().expect("53-bit significand fits in u64") as f64;
        debug_assert!((-1074..=971).contains(&r.exp), "to_f64 outside the normal range");
        let half = (r.exp / 2) as i32;
        let magnitude = m * 2f64.powi(half) * 2f64.powi(r.exp as i32 - half);
        if r.sign < 0 {
            -magnitude
        } else {
            magnitude
        }
    }

    /// Exactly rounded 18-significant-digit decimal form `d.ddd...e{E}`.
    pub fn to_decimal_sig18(&self) -> String {
        if self.sign == 0 {
            return "0.00000000000000000e0".to_string();
        }
        let ten17 = BigUint::from(10u32).pow(SIG_DIGITS - 1);
        let ten18 = BigUint::from(10u32).pow(SIG_DIGITS);
        // First guess for the decimal exponent from the binary one; the loop
        // below corrects it by at most a step or two.
        let e_val = self.exp + self.prec as i64 - 1;
        let mut dec_exp = (e_val as f64 * std::f64::consts::LOG10_2).floor() as i64;
        let digits = loop {
            let scaled = self.round_decimal_scaled(SIG_DIGITS as i64 - 1 - dec_exp);
            if scaled < ten17 {
                dec_exp -= 1;
            } else if scaled >= ten18 {
                dec_exp += 1;
            } else {
                break scaled;
            }
        };
        let s = digits.to_string();
        debug_assert_eq!(s.len(), SIG_DIGITS as usize);
        let sign = if self.sign < 0 { "-" } else { "" };
        format!("{sign}{}.{}e{dec_exp}", &s[..1], &s[1..])
    }

    /// round(|self| * 10^t) with ties to even, exactly.
    fn round_decimal_scaled(&self, t: i64) -> BigUint {
        let mut num = self.mant.clone();
        let mut den = BigUint::one();
        if t >= 0 {
            num *= BigUint::from(10u32).pow(t as u32);
        } else {
            den *= BigUint::from(10u32).pow((-t) as u32);
        }
        if self.exp >= 0 {
            num <<= self.exp as u64;
        } else {
            den <<= (-self.exp) as u64;
        }
        let (q, r) = num.div_rem(&den);
        let twice = &r << 1u32;
        match twice.cmp(&den) {
            Ordering::Less => q,
            Ordering::Greater => q + 1u32,
            Ordering::Equal => {
                if q.bit(0) {
                    q + 1u32
                } else {
                    q
                }
            }
        }
    }
}

impl PartialEq for HighReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl fmt::Display for HighReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_sig18())
    }
}

/// Round ±mant * 2^exp to `prec` bits (nearest, ties to even) and normalize
/// the significand to exactly `prec` bits.
fn round_normalize(sign: i8, mut mant: BigUint, mut exp: i64, prec: u32) -> HighReal {
    if mant.is_zero() {
        return HighReal::zero(prec);
    }
    debug_assert!(sign == 1 || sign == -1);
    let prec_i = prec as i64;
    let bl = mant.bits() as i64;
    if bl < prec_i {
        mant <<= (prec_i - bl) as u64;
        exp -= prec_i - bl;
    } else if bl > prec_i {
        let drop = (bl - prec_i) as u64;
        let dropped = &mant & ((BigUint::one() << drop) - 1u32);
        let mut keep = &mant >> drop;
        exp += drop as i64;
        let half = BigUint::one() << (drop - 1);
        let round_up = match dropped.cmp(&half) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => keep.bit(0),
        };
        if round_up {
            keep += 1u32;
            if keep.bits() as i64 > prec_i {
                keep >>= 1u32;
                exp += 1;
            }
        }
        mant = keep;
    }
    HighReal { sign, mant, exp, prec }
}

/// Re-normalize to a precision at least as large (always exact).
fn upscale(v: &HighReal, prec: u32) -> HighReal {
    debug_assert!(prec >= v.prec);
    round_normalize(v.sign, v.mant.clone(), v.exp, prec)
}

fn cmp_magnitude(a: &HighReal, b: &HighReal) -> Ordering {
    let ea = a.exp + a.mant.bits() as i64 - 1;
    let eb = b.exp + b.mant.bits() as i64 - 1;
    match ea.cmp(&eb) {
        Ordering::Equal => {}
        ord => return ord,
    }
    let la = a.mant.bits();
    let lb = b.mant.bits();
    let width = la.max(lb);
    let am = &a.mant << (width - la);
    let bm = &b.mant << (width - lb);
    am.cmp(&bm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_arithmetic_is_exact() {
        let one = HighReal::one(64);
        let two = one.add(&one);
        assert_eq!(two.to_f64(), 2.0);
        assert_eq!(two.mul(&two).to_f64(), 4.0);
        assert_eq!(two.sub(&one).to_f64(), 1.0);
        assert!(one.sub(&one).is_zero());
        assert_eq!(HighReal::from_u64(0, 32).to_f64(), 0.0);
    }

    #[test]
    fn rounding_is_nearest_even_at_low_precision() {
        // 257 at 8 bits sits exactly between 256 and 258; 256 has the even
        // significand. 259 sits between 258 and 260; 260 wins.
        let a = HighReal::from_u64(257, 8);
        assert_eq!(a.to_f64(), 256.0);
        let b = HighReal::from_u64(259, 8);
        assert_eq!(b.to_f64(), 260.0);
        // 1/3 at 8 bits is 171/512.
        let third = HighReal::one(8).div(&HighReal::from_u64(3, 8));
        assert_eq!(third.to_f64(), 171.0 / 512.0);
    }

    #[test]
    fn add_handles_huge_exponent_gaps() {
        let big = HighReal::one(64);
        let tiny = HighReal::pow2(-200, 64);
        assert_eq!(big.add(&tiny).cmp_value(&big), Ordering::Equal);
        let down = big.sub(&tiny);
        assert_eq!(down.cmp_value(&big), Ordering::Equal);
        // Near the shortcut threshold the exact path must still round
        // correctly: 1 + 2^-63 at 64 bits is a tie, kept significand even.
        let near = big.add(&HighReal::pow2(-64, 64));
        assert_eq!(near.cmp_value(&big), Ordering::Equal);
        let above = big.add(&HighReal::pow2(-63, 64));
        assert!(above.cmp_value(&big) == Ordering::Greater);
    }

    #[test]
    fn sqrt_matches_the_hardware_formats() {
        let two = HighReal::from_u64(2, 53);
        assert_eq!(two.sqrt().to_f64(), std::f64::consts::SQRT_2);
        let four = HighReal::from_u64(4, 53);
        assert_eq!(four.sqrt().to_f64(), 2.0);
        let three = HighReal::from_u64(3, 24);
        assert_eq!(three.sqrt().to_f64() as f32, 3f32.sqrt());
        // Higher precision refines toward the true value.
        let fine = HighReal::from_u64(2, 256).sqrt();
        let coarse = HighReal::from_u64(2, 53).sqrt();
        assert_eq!(fine.to_f64(), coarse.to_f64());
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        let x = HighReal::from_f64(1.0 + 2f64.powi(-20), 128);
        let mut by_loop = HighReal::one(128);
        for _ in 0..13 {
            by_loop = by_loop.mul(&x);
        }
        assert_eq!(x.pow_u64(13).cmp_value(&by_loop), Ordering::Equal);
        assert_eq!(x.pow_u64(0).to_f64(), 1.0);
        assert_eq!(x.pow_u64(1).cmp_value(&x), Ordering::Equal);
    }

    #[test]
    fn decimal_rendering_is_exact() {
        assert_eq!(HighReal::one(64).to_decimal_sig18(), "1.00000000000000000e0");
        assert_eq!(HighReal::pow2(-1, 64).to_decimal_sig18(), "5.00000000000000000e-1");
        assert_eq!(HighReal::from_f64(512.5, 64).to_decimal_sig18(), "5.12500000000000000e2");
        assert_eq!(
            HighReal::one(256).div(&HighReal::from_u64(3, 256)).to_decimal_sig18(),
            "3.33333333333333333e-1"
        );
        assert_eq!(HighReal::from_f64(-0.125, 64).to_decimal_sig18(), "-1.25000000000000000e-1");
        assert_eq!(HighReal::zero(64).to_decimal_sig18(), "0.00000000000000000e0");
    }

    #[test]
    fn f64_round_trip_is_identity_on_normal_values() {
        let samples = [
            1.0,
            -1.0,
            std::f64::consts::PI,
            2f64.powi(-1000),
            -2f64.powi(900) * 1.2345,
            6.02214076e23,
            f64::MIN_POSITIVE,
        ];
        for &x in &samples {
            let hr = HighReal::from_f64(x, 96);
            assert_eq!(hr.to_f64().to_bits(), x.to_bits(), "x={x:e}");
        }
    }

    #[test]
    fn comparisons_ignore_precision() {
        let a = HighReal::from_f64(1.5, 64);
        let b = HighReal::from_f64(1.5, 2048);
        assert_eq!(a.cmp_value(&b), Ordering::Equal);
        assert_eq!(a.cmp_value(&HighReal::from_f64(1.25, 32)), Ordering::Greater);
        assert_eq!(
            HighReal::from_f64(-3.0, 64).cmp_value(&HighReal::from_f64(2.0, 64)),
            Ordering::Less
        );
    }
}
