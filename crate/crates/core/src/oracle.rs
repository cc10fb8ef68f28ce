//! Exact reference results: the norm and hypotenuse every other module is
//! measured against.
//!
//! Finite working-precision values are dyadic rationals, so a sum of their
//! squares is representable exactly in a fixed-point integer accumulator
//! whose base quantum is the square of the smallest subnormal. The oracle
//! accumulates squares exactly, then rounds the square root of the exact sum
//! once to the nearest working-precision value, deciding ties and neighbor
//! choices by comparing exact integers (never by inspecting an approximate
//! remainder). There is no precision parameter to tune: the only
//! approximation in the pipeline is the single final rounding the definition
//! asks for.

use crate::Real;
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("element at index {0} is not finite")]
    NonFinite(usize),
}

/// Fixed-point accumulator for exact sums of squares.
///
/// Bit `i` of the accumulator has weight `2^(base_exp + i)` with
/// `base_exp = 2 * MIN_SUB_EXP`, so every square of a finite value lands on
/// the grid exactly. The limb count covers the largest square times `2^64`
/// possible terms.
struct SquareAccumulator {
    limbs: Vec<u64>,
    base_exp: i64,
}

impl SquareAccumulator {
    fn new<R: Real>() -> Self {
        let base_exp = 2 * R::MIN_SUB_EXP as i64;
        let top = 2 * (R::MAX_FINITE_EXP as i64 + 1) + 64;
        let nlimbs = ((top - base_exp) / 64 + 2) as usize;
        SquareAccumulator { limbs: vec![0; nlimbs], base_exp }
    }

    fn add_square<R: Real>(&mut self, x: R) {
        let (m, e) = x.decompose();
        if m == 0 {
            return;
        }
        let sq = (m as u128) * (m as u128);
        let off = (2 * e as i64 - self.base_exp) as u64;
        let idx = (off / 64) as usize;
        let sh = (off % 64) as u32;
        // The square spans at most 106 bits; shifted by sh it spans three
        // 64-bit words.
        let words = if sh == 0 {
            [sq as u64, (sq >> 64) as u64, 0]
        } else {
            [(sq << sh) as u64, (sq >> (64 - sh)) as u64, (sq >> (128 - sh)) as u64]
        };
        let mut carry = 0u64;
        for (k, w) in words.into_iter().enumerate() {
            let (s1, c1) = self.limbs[idx + k].overflowing_add(w);
            let (s2, c2) = s1.overflowing_add(carry);
            self.limbs[idx + k] = s2;
            carry = u64::from(c1) + u64::from(c2);
        }
        let mut j = idx + 3;
        while carry != 0 {
            let (s, c) = self.limbs[j].overflowing_add(carry);
            self.limbs[j] = s;
            carry = u64::from(c);
            j += 1;
        }
    }

    fn into_biguint(self) -> BigUint {
        let mut bytes = Vec::with_capacity(self.limbs.len() * 8);
        for limb in &self.limbs {
            bytes.extend_from_slice(&limb.to_le_bytes());
        }
        BigUint::from_bytes_le(&bytes)
    }
}

/// Nearest working-precision value to `sqrt(s * 2^e2)`, ties to even.
///
/// The candidate significand is the integer square root of the sum shifted
/// onto the result's quantum grid; the round-up decision compares the exact
/// sum against the exact square of the halfway point. Subnormal results fall
/// out of clamping the quantum exponent at its minimum.
fn round_sqrt_to_working<R: Real>(s: &BigUint, e2: i64) -> R {
    if s.is_zero() {
        return R::ZERO;
    }
    let p = R::MANT_DIGITS as i64;
    let min_sub = R::MIN_SUB_EXP as i64;
    // First guess for the quantum exponent from the operand width, then
    // settle so the floor root has exactly p bits (less only at the
    // subnormal floor).
    let mut q = ((s.bits() as i64 - 1 + e2).div_euclid(2) - (p - 1)).max(min_sub);
    let u = loop {
        let u = floor_sqrt_shifted(s, e2 - 2 * q);
        let bl = u.bits() as i64;
        if bl > p {
            q += 1;
        } else if bl < p && q > min_sub {
            q -= 1;
        } else {
            break u;
        }
    };
    let mut sig = u.to_u64().expect("floor root fits the significand width");
    // Compare s * 2^e2 with ((2u+1) * 2^(q-1))^2, both exact.
    let twice_plus_1 = (&u << 1u32) + 1u32;
    let mid_sq = &twice_plus_1 * &twice_plus_1;
    let ord = cmp_shifted(s, &mid_sq, e2 - (2 * q - 2));
    if ord == Ordering::Greater || (ord == Ordering::Equal && sig & 1 == 1) {
        sig += 1;
        if sig == 1u64 << p {
            sig >>= 1;
            q += 1;
        }
    }
    let e_val = q + (63 - i64::from(sig.leading_zeros()));
    if e_val > R::MAX_FINITE_EXP as i64 {
        return R::INFINITY;
    }
    R::from_sig_quantum(sig, q as i32)
}

/// floor(sqrt(s * 2^t)); flooring s * 2^t first is harmless because
/// floor(sqrt(floor(x))) = floor(sqrt(x)) for x >= 0.
fn floor_sqrt_shifted(s: &BigUint, t: i64) -> BigUint {
    if t >= 0 {
        (s << t as u64).sqrt()
    } else {
        (s >> (-t) as u64).sqrt()
    }
}

/// Ordering of a * 2^d versus b.
fn cmp_shifted(a: &BigUint, b: &BigUint, d: i64) -> Ordering {
    if d >= 0 {
        (a << d as u64).cmp(b)
    } else {
        a.cmp(&(b << (-d) as u64))
    }
}

/// Correctly rounded hypotenuse of two finite values: the nearest
/// working-precision value to sqrt(x^2 + y^2), computed from the exact
/// two-term sum. Infinity is returned exactly when the true value rounds
/// past the largest finite value.
pub fn oracle_hypot<R: Real>(x: R, y: R) -> R {
    assert!(x.is_finite() && y.is_finite(), "oracle_hypot needs finite inputs");
    let (mx, ex) = x.decompose();
    let (my, ey) = y.decompose();
    if mx == 0 && my == 0 {
        return R::ZERO;
    }
    let e0 = 2 * ex.min(ey) as i64;
    let sx = BigUint::from((mx as u128) * (mx as u128)) << (2 * ex as i64 - e0) as u64;
    let sy = BigUint::from((my as u128) * (my as u128)) << (2 * ey as i64 - e0) as u64;
    round_sqrt_to_working(&(sx + sy), e0)
}

/// Correctly rounded norm of a finite array: the nearest working-precision
/// value to the square root of the exact sum of squares. The empty array
/// has norm +0.
pub fn oracle_norm<R: Real>(x: &[R]) -> Result<R, OracleError> {
    let mut acc = SquareAccumulator::new::<R>();
    for (i, &v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(OracleError::NonFinite(i));
        }
        acc.add_square(v);
    }
    let base = acc.base_exp;
    Ok(round_sqrt_to_working(&acc.into_biguint(), base))
}
