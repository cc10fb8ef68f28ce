//! Scalar hypotenuse kernels and the fused multiply-add primitive.
//!
//! Three interchangeable two-operand kernels drive the recursive norm
//! algorithms: a correctly rounded hypotenuse ([`cr_hypot`]), the platform
//! native one ([`native_hypot`]), and a branch-free kernel ([`v1_hypot`])
//! whose straight-line form is what the lane-parallel algorithms execute
//! per lane.

use crate::Real;
use std::cmp::Ordering;

/// Which hypotenuse kernel a recursive norm uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HypotKind {
    /// Exactly rounded sqrt(x^2 + y^2); see [`cr_hypot`].
    CorrectRounded,
    /// The platform `hypot`; accuracy varies by libm, no certified envelope.
    Native,
    /// Branch-free min/max/div/fma/sqrt sequence; see [`v1_hypot`].
    BranchFree,
}

impl HypotKind {
    pub const ALL: [HypotKind; 3] = [
        HypotKind::CorrectRounded,
        HypotKind::Native,
        HypotKind::BranchFree,
    ];
}

/// `a * b + c` with a single rounding.
///
/// Delegates to the hardware/libm fused operation, which rounds once to
/// nearest-even. `fused_mul_add(x, x, -1.0)` with `x = 1 + 2^-30` yields
/// `2^-29 + 2^-60` exactly, where separate multiply-add loses the low term.
#[inline(always)]
pub fn fused_mul_add<R: Real>(a: R, b: R, c: R) -> R {
    a.mul_add(b, c)
}

/// Branch-free hypotenuse: min/max, one division, one fma, one square root,
/// one multiply, with no data-dependent branches.
///
/// The `max(q, 0)` step repairs the 0/0 division when both inputs are zero,
/// so `v1_hypot(0, 0) == 0`. Because `min`/`max` return the non-NaN operand,
/// a NaN input is not propagated: `v1_hypot(NAN, 0) == 0`. The result
/// overflows to infinity when the true hypotenuse exceeds the largest finite
/// value (for example both inputs `1.5e308`). Relative error is certified by
/// the branch-free envelope in [`crate::bounds::hypot_eps_envelope`].
#[inline(always)]
pub fn v1_hypot<R: Real>(x: R, y: R) -> R {
    let ax = x.abs();
    let ay = y.abs();
    let small = ax.min(ay);
    let big = ax.max(ay);
    let q = small / big;
    let q = q.max(R::ZERO);
    let s = q.mul_add(q, R::ONE).sqrt();
    big * s
}

/// The platform `hypot` from the system math library.
///
/// Typically accurate to about an ulp but with no published error envelope,
/// and potentially different bits across platforms; algorithm `B` exists to
/// measure it, not to certify it.
#[inline]
pub fn native_hypot<R: Real>(x: R, y: R) -> R {
    x.native_hypot(y)
}

/// Correctly rounded hypotenuse: the nearest-even rounding of the exact
/// sqrt(x^2 + y^2), for all finite inputs including subnormals, with
/// overflow to infinity exactly when the true value rounds beyond the
/// largest finite value.
///
/// Infinite inputs give +infinity even when the other operand is NaN,
/// matching IEEE `hypot` special semantics.
#[inline]
pub fn cr_hypot<R: Real>(x: R, y: R) -> R {
    x.cr_hypot(y)
}

/// Dispatch over [`HypotKind`].
#[inline]
pub fn hypot_by<R: Real>(kind: HypotKind, x: R, y: R) -> R {
    match kind {
        HypotKind::CorrectRounded => cr_hypot(x, y),
        HypotKind::Native => native_hypot(x, y),
        HypotKind::BranchFree => v1_hypot(x, y),
    }
}

// ---------------------------------------------------------------------------
// Error-free transforms and small nonoverlapping expansions, used to make
// the correctly rounded kernel's decisions exact.

/// Knuth two-sum: `a + b = s + err` exactly.
#[inline(always)]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bv = s - a;
    let err = (a - (s - bv)) + (b - bv);
    (s, err)
}

/// `a * b = p + err` exactly (via fma; no over/underflow in our ranges).
#[inline(always)]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

/// Nonoverlapping expansion with components in increasing magnitude order.
/// The value is the exact sum of the components.
#[derive(Clone, Copy, Debug)]
struct Expansion {
    terms: [f64; 10],
    len: usize,
}

impl Expansion {
    fn zero() -> Self {
        Expansion { terms: [0.0; 10], len: 0 }
    }

    /// Grow-expansion: add one float exactly, keeping the invariant.
    fn add(&mut self, b: f64) {
        let mut q = b;
        for t in self.terms[..self.len].iter_mut() {
            let (s, err) = two_sum(q, *t);
            *t = err;
            q = s;
        }
        self.terms[self.len] = q;
        self.len += 1;
    }

    /// Sign of the exact value: the sign of the largest nonzero component.
    fn sign(&self) -> Ordering {
        for &t in self.terms[..self.len].iter().rev() {
            if t != 0.0 {
                return t.partial_cmp(&0.0).unwrap();
            }
        }
        Ordering::Equal
    }
}

/// Exact multiply of `x` by 2^j in at most two steps, each a multiply by a
/// normal-range power of two. Overflow saturates to infinity, which is the
/// correct rounding in the one place (final unscaling) where it can happen.
#[inline]
fn ldexp2(x: f64, j: i32) -> f64 {
    let j1 = j.clamp(-1022, 1023);
    let y = x * crate::pow2f64(j1);
    let j2 = j - j1;
    if j2 == 0 {
        y
    } else {
        y * crate::pow2f64(j2.clamp(-1022, 1023))
    }
}

/// Sign of `S - mid^2` where `S` is an exact expansion and `mid = mh + ml`
/// with `ml` a power of two: mid^2 = mh^2 + 2*mh*ml + ml^2, all three terms
/// exact, so the comparison is exact.
fn cmp_sum_midsq(s: &Expansion, mh: f64, ml: f64) -> Ordering {
    let (p, e) = two_prod(mh, mh);
    let cross = 2.0 * mh * ml;
    let tail = ml * ml;
    let mut diff = *s;
    diff.add(-p);
    diff.add(-e);
    diff.add(-cross);
    diff.add(-tail);
    diff.sign()
}

/// Of two adjacent grid values, the one with even mantissa.
#[inline]
fn even_of(lo: f64, hi: f64) -> f64 {
    if lo.to_bits() & 1 == 0 {
        lo
    } else {
        hi
    }
}

/// Round the exact value sqrt(S) to nearest-even on the standard f64 grid,
/// given `S` as an exact expansion and a starting guess within a few ulps.
/// Works entirely in the scaled domain where the result is normal.
fn round_sqrt_f64(s: &Expansion, guess: f64) -> f64 {
    let mut r = guess;
    let mut steps = 0u32;
    loop {
        debug_assert!(
            {
                steps += 1;
                steps < 64
            },
            "sqrt rounding failed to converge"
        );
        let up = r.next_up();
        let dn = r.next_down();
        let half_up = 0.5 * (up - r);
        let half_dn = 0.5 * (r - dn);
        match cmp_sum_midsq(s, r, half_up) {
            Ordering::Greater => {
                r = up;
                continue;
            }
            Ordering::Equal => return even_of(r, up),
            Ordering::Less => {}
        }
        match cmp_sum_midsq(s, r, -half_dn) {
            Ordering::Less => {
                r = dn;
                continue;
            }
            Ordering::Equal => return even_of(dn, r),
            Ordering::Greater => return r,
        }
    }
}

pub(crate) fn cr_hypot64(x: f64, y: f64) -> f64 {
    if x.is_infinite() || y.is_infinite() {
        return f64::INFINITY;
    }
    if x.is_nan() || y.is_nan() {
        return f64::NAN;
    }
    let (a, b) = {
        let ax = x.abs();
        let ay = y.abs();
        if ax >= ay { (ax, ay) } else { (ay, ax) }
    };
    if b == 0.0 {
        return a;
    }
    let ea = a.exponent();
    let eb = b.exponent();
    if ea - eb > 55 {
        // b^2 < 2^-110 * a^2 cannot lift sqrt(a^2+b^2) past the midpoint
        // above a (which is at least 2^-54 * a away), so the rounding is a.
        return a;
    }
    // Scale to a in [1, 2); exact, and b stays normal (>= 2^-56).
    let k = ea;
    let sa = ldexp2(a, -k);
    let sb = ldexp2(b, -k);
    // S = sa^2 + sb^2 exactly.
    let (h1, l1) = two_prod(sa, sa);
    let (h2, l2) = two_prod(sb, sb);
    let mut s = Expansion::zero();
    s.add(l1);
    s.add(l2);
    s.add(h2);
    s.add(h1);
    let guess = sa.mul_add(sa, sb * sb).sqrt();
    if k <= -1023 {
        // The unscaled result lands on the subnormal quantum 2^-1074, which
        // in the scaled domain is the fixed quantum q = 2^(-1074-k) with
        // -51 <= -1074-k <= 0. Round to that grid instead, then the bit
        // pattern of u * 2^-1074 is u itself.
        let qe = -1074 - k;
        let q = crate::pow2f64(qe);
        let half = crate::pow2f64(qe - 1);
        let mut u = (guess / q).round_ties_even() as u64;
        let mut steps = 0u32;
        loop {
            debug_assert!(
                {
                    steps += 1;
                    steps < 64
                },
                "subnormal sqrt rounding failed to converge"
            );
            let r = u as f64 * q;
            match cmp_sum_midsq(&s, r, half) {
                Ordering::Greater => {
                    u += 1;
                    continue;
                }
                Ordering::Equal => {
                    u += u & 1;
                    break;
                }
                Ordering::Less => {}
            }
            match cmp_sum_midsq(&s, r, -half) {
                Ordering::Less => {
                    u -= 1;
                    continue;
                }
                Ordering::Equal => {
                    u -= u & 1;
                    break;
                }
                Ordering::Greater => break,
            }
        }
        return f64::from_bits(u);
    }
    let r = round_sqrt_f64(&s, guess);
    // Exact unscale; overflows to infinity exactly when the true value
    // rounds past the largest finite (verified: the scaled rounding crosses
    // 2 - 2^-53 precisely when the unscaled value crosses the overflow
    // midpoint).
    ldexp2(r, k)
}

pub(crate) fn cr_hypot32(x: f32, y: f32) -> f32 {
    if x.is_infinite() || y.is_infinite() {
        return f32::INFINITY;
    }
    if x.is_nan() || y.is_nan() {
        return f32::NAN;
    }
    let (a, b) = {
        let ax = x.abs() as f64;
        let ay = y.abs() as f64;
        if ax >= ay { (ax, ay) } else { (ay, ax) }
    };
    if b == 0.0 {
        return a as f32;
    }
    // Squares of f32 values are exact in f64 (48 bits), and their double-word
    // sum captures S = a^2 + b^2 exactly; no scaling is ever needed.
    let p1 = a * a;
    let p2 = b * b;
    let (sh, sl) = two_sum(p1, p2);
    let mut s = Expansion::zero();
    s.add(sl);
    s.add(sh);
    let mut r = {
        let c = (sh + sl).sqrt() as f32;
        if c.is_infinite() { f32::MAX } else { c }
    };
    // f32 midpoints have 25 significant bits, so both the midpoint and its
    // square are exact single f64 values.
    let mut steps = 0u32;
    loop {
        debug_assert!(
            {
                steps += 1;
                steps < 64
            },
            "f32 sqrt rounding failed to converge"
        );
        let up = r.next_up();
        let mid_up = if up.is_infinite() {
            // overflow midpoint 2^128 - 2^103
            crate::pow2f64(103) * (2f64.powi(25) - 1.0)
        } else {
            (r as f64 + up as f64) * 0.5
        };
        match cmp_sq_f32(&s, mid_up) {
            Ordering::Greater => {
                if up.is_infinite() {
                    return f32::INFINITY;
                }
                r = up;
                continue;
            }
            Ordering::Equal => {
                return if up.is_infinite() {
                    f32::INFINITY
                } else {
                    even_of32(r, up)
                };
            }
            Ordering::Less => {}
        }
        let dn = r.next_down();
        let mid_dn = (r as f64 + dn as f64) * 0.5;
        match cmp_sq_f32(&s, mid_dn) {
            Ordering::Less => {
                r = dn;
                continue;
            }
            Ordering::Equal => return even_of32(dn, r),
            Ordering::Greater => return r,
        }
    }
}

/// Sign of `S - m^2` where `m` (an f32 midpoint, <= 25 bits) squares exactly.
fn cmp_sq_f32(s: &Expansion, m: f64) -> Ordering {
    let mut diff = *s;
    diff.add(-(m * m));
    diff.sign()
}

#[inline]
fn even_of32(lo: f32, hi: f32) -> f32 {
    if lo.to_bits() & 1 == 0 {
        lo
    } else {
        hi
    }
}
