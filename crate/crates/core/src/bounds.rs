//! Worst-case relative error bounds for the three norm computation models.
//!
//! The bounds are evaluated in [`HighReal`] arithmetic (2048 bits by
//! default) as products of per-operation factors `1 + eta` or `1 + eps`:
//!
//! * model `L`: one fused multiply-add per element followed by one square
//!   root, so the factors accumulate under the root;
//! * model `C`: one hypotenuse rounding per element after the first;
//! * model `R`: one hypotenuse rounding per level of the split tree.
//!
//! Reported bounds are normalized to units of the working-precision unit
//! roundoff: `ub_relerr = (ub_factor - 1)/eps` and
//! `lb_relerr = (1 - lb_factor)/eps`.

use crate::highreal::HighReal;
use crate::kernels::HypotKind;
use crate::Precision;
use std::cmp::Ordering;
use std::collections::HashMap;
use thiserror::Error;

/// Default evaluation precision in bits.
pub const DEFAULT_BITS: u32 = 2048;

/// Error-accumulation model of a norm algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundModel {
    /// Iterative scaled fma accumulation (algorithm `L`).
    L,
    /// Iterative chained hypot (algorithm `C`).
    C,
    /// Recursive pairwise hypot (algorithms `A`/`H`/`X`/`Y`/`Z`).
    R,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoundsError {
    #[error("the native hypot kernel has no published error envelope")]
    NativeEnvelope,
}

/// Two-sided multiplicative error bound for one model at one length.
#[derive(Clone, Debug)]
pub struct BoundPair {
    pub lb_factor: HighReal,
    pub ub_factor: HighReal,
    pub n: u64,
    pub model: BoundModel,
    pub eps: HighReal,
    pub eps_prime: HighReal,
}

impl BoundPair {
    fn new(
        lb_factor: HighReal,
        ub_factor: HighReal,
        n: u64,
        model: BoundModel,
        eps: HighReal,
        eps_prime: HighReal,
    ) -> Self {
        let one = HighReal::one(2);
        debug_assert!(!lb_factor.is_negative());
        debug_assert!(lb_factor.cmp_value(&one) != Ordering::Greater);
        debug_assert!(ub_factor.cmp_value(&one) != Ordering::Less);
        BoundPair { lb_factor, ub_factor, n, model, eps, eps_prime }
    }

    /// Upper bound in units of the unit roundoff: `(ub_factor - 1)/eps`.
    pub fn ub_relerr(&self) -> HighReal {
        self.ub_factor.sub(&HighReal::one(self.eps.prec())).div(&self.eps)
    }

    /// Lower bound in units of the unit roundoff: `(1 - lb_factor)/eps`.
    pub fn lb_relerr(&self) -> HighReal {
        HighReal::one(self.eps.prec()).sub(&self.lb_factor).div(&self.eps)
    }
}

/// The unit roundoff of a working precision as a `HighReal` of `bits` bits.
pub fn eps_for(precision: Precision, bits: u32) -> HighReal {
    HighReal::pow2(precision.unit_roundoff_log2() as i64, bits)
}

/// Relative error envelope `(lb, ub)` of one hypotenuse kernel invocation,
/// as deviations from 1 (`lb` is negative, `ub` positive).
///
/// The correctly rounded kernel contributes one rounding. The branch-free
/// kernel performs a division, an fma, a square root and a multiply on the
/// sorted operands, giving the envelope
/// `(1 +/- eps)^(5/2) * sqrt(1 +/- eps(2 +/- eps)/2) - 1`, roughly
/// `+/- 3 eps`. The native kernel's accuracy is implementation-defined, so
/// it has no envelope here.
pub fn hypot_eps_envelope(
    kind: HypotKind,
    eps: &HighReal,
) -> Result<(HighReal, HighReal), BoundsError> {
    let one = HighReal::one(eps.prec());
    match kind {
        HypotKind::CorrectRounded => Ok((eps.neg(), eps.clone())),
        HypotKind::BranchFree => {
            let up = envelope_side(eps, true).sub(&one);
            let down = envelope_side(eps, false).sub(&one);
            Ok((down, up))
        }
        HypotKind::Native => Err(BoundsError::NativeEnvelope),
    }
}

/// `(1 +/- eps)^(5/2) * sqrt(1 +/- eps(2 +/- eps)/2)` for one sign choice.
fn envelope_side(eps: &HighReal, upper: bool) -> HighReal {
    let one = HighReal::one(eps.prec());
    let e = if upper { eps.clone() } else { eps.neg() };
    let base = one.add(&e);
    let five_halves = base.mul(&base).mul(&base.sqrt());
    let two = HighReal::from_u64(2, eps.prec());
    let inner = one.add(&e.mul(&two.add(&e)).mul_pow2(-1));
    five_halves.mul(&inner.sqrt())
}

/// Bound for the iterative fma model: `n - 1` accumulation factors under
/// the square root, then the root's own rounding.
pub fn bounds_l(n: u64, eps: &HighReal) -> BoundPair {
    assert!(n >= 1);
    let one = HighReal::one(eps.prec());
    let up = one.add(eps);
    let down = one.sub(eps);
    let ub = up.pow_u64(n - 1).sqrt().mul(&up);
    let lb = down.pow_u64(n - 1).sqrt().mul(&down);
    BoundPair::new(lb, ub, n, BoundModel::L, eps.clone(), eps.clone())
}

/// Bound for the chained hypot model: one kernel rounding per element after
/// the first. The chained recurrence telescopes, because
/// `sqrt(1 + x(2 + x)) = 1 + x` for `x >= -1`, to `(1 +/- eps')^(n-1)`.
pub fn bounds_c(n: u64, eps: &HighReal, eps_prime: &HighReal) -> BoundPair {
    assert!(n >= 1);
    let one = HighReal::one(eps_prime.prec().max(eps.prec()));
    let ub = one.add(eps_prime).pow_u64(n - 1);
    let lb = one.sub(eps_prime).pow_u64(n - 1);
    BoundPair::new(lb, ub, n, BoundModel::C, eps.clone(), eps_prime.clone())
}

/// Bound for the recursive model over the same split tree the scalar and
/// lane algorithms use, memoized on subproblem length.
///
/// Each merge multiplies the worse child bound by one kernel factor. The
/// true min/max error quotient of the children never exceeds 1, so the
/// upper branch drops the quotient term entirely (worst-case squared-norm
/// ratio 0), while the lower branch keeps it at worst-case ratio 1, where
/// the square-root term collapses to the quotient itself by the identity
/// above.
pub fn bounds_r(n: u64, eps: &HighReal, eps_prime: &HighReal) -> BoundPair {
    assert!(n >= 1);
    let prec = eps_prime.prec().max(eps.prec());
    let one = HighReal::one(prec);
    let up = one.add(eps_prime);
    let down = one.sub(eps_prime);
    let mut memo: HashMap<u64, (HighReal, HighReal)> = HashMap::new();
    let (lb, ub) = bounds_r_rec(n, &up, &down, &mut memo);
    BoundPair::new(lb, ub, n, BoundModel::R, eps.clone(), eps_prime.clone())
}

fn bounds_r_rec(
    n: u64,
    up: &HighReal,
    down: &HighReal,
    memo: &mut HashMap<u64, (HighReal, HighReal)>,
) -> (HighReal, HighReal) {
    if n == 1 {
        let one = HighReal::one(up.prec());
        return (one.clone(), one);
    }
    if let Some(hit) = memo.get(&n) {
        return hit.clone();
    }
    // Same split as the scalar recursion: ceil(n/2) elements on the left.
    let p = n.div_ceil(2);
    let (l1, u1) = bounds_r_rec(p, up, down, memo);
    let (l2, u2) = bounds_r_rec(n - p, up, down, memo);
    let max_ub = max_value(&u1, &u2);
    let ub = max_ub.mul(up);
    let lb = min_value(&l1, &l2).div(&max_ub).mul(&max_value(&l1, &l2)).mul(down);
    memo.insert(n, (lb.clone(), ub.clone()));
    (lb, ub)
}

fn max_value(a: &HighReal, b: &HighReal) -> HighReal {
    if a.cmp_value(b) == Ordering::Less {
        b.clone()
    } else {
        a.clone()
    }
}

fn min_value(a: &HighReal, b: &HighReal) -> HighReal {
    if a.cmp_value(b) == Ordering::Greater {
        b.clone()
    } else {
        a.clone()
    }
}

/// Normalized upper bounds at `n = 2^k` for `k = 1..=max_lg_n`: the fma
/// model, the recursive model with the correctly rounded kernel, and the
/// recursive model with the branch-free kernel.
pub fn table3(
    max_lg_n: u32,
    precision: Precision,
    bits: u32,
) -> Vec<(u32, HighReal, HighReal, HighReal)> {
    assert!(max_lg_n <= 40);
    let eps = eps_for(precision, bits);
    let (_, bf_up) =
        hypot_eps_envelope(HypotKind::BranchFree, &eps).expect("branch-free envelope exists");
    let mut rows = Vec::with_capacity(max_lg_n as usize);
    for k in 1..=max_lg_n {
        let n = 1u64 << k;
        let l = bounds_l(n, &eps).ub_relerr();
        let a = bounds_r(n, &eps, &eps).ub_relerr();
        let h = bounds_r(n, &eps, &bf_up).ub_relerr();
        rows.push((k, l, a, h));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps_d(bits: u32) -> HighReal {
        eps_for(Precision::Double, bits)
    }

    #[test]
    fn fma_model_matches_published_anchors() {
        let eps = eps_d(DEFAULT_BITS);
        assert_eq!(bounds_l(1, &eps).ub_relerr().to_decimal_sig18(), "1.00000000000000000e0");
        assert_eq!(bounds_l(2, &eps).ub_relerr().to_decimal_sig18(), "1.50000000000000004e0");
        assert_eq!(bounds_l(1 << 10, &eps).ub_relerr().to_decimal_sig18(), "5.12500000000014552e2");
    }

    #[test]
    fn recursive_model_matches_published_anchors() {
        let eps = eps_d(DEFAULT_BITS);
        assert_eq!(bounds_r(2, &eps, &eps).ub_relerr().to_decimal_sig18(), "1.00000000000000000e0");
        assert_eq!(
            bounds_r(1 << 20, &eps, &eps).ub_relerr().to_decimal_sig18(),
            "2.00000000000000211e1"
        );
        let (_, bf) = hypot_eps_envelope(HypotKind::BranchFree, &eps).unwrap();
        assert_eq!(
            bounds_r(2, &eps, &bf).ub_relerr().to_decimal_sig18(),
            "3.00000000000000036e0"
        );
        assert_eq!(
            bounds_r(1 << 5, &eps, &bf).ub_relerr().to_decimal_sig18(),
            "1.50000000000000118e1"
        );
    }

    #[test]
    fn chained_model_is_about_twice_the_fma_model() {
        let eps = eps_d(DEFAULT_BITS);
        assert!(bounds_c(1, &eps, &eps).ub_relerr().is_zero());
        assert_eq!(bounds_c(2, &eps, &eps).ub_relerr().to_decimal_sig18(), "1.00000000000000000e0");
        let c = bounds_c(1 << 20, &eps, &eps).ub_relerr().to_f64();
        let l = bounds_l(1 << 20, &eps).ub_relerr().to_f64();
        let ratio = c / l;
        assert!((ratio - 2.0).abs() < 0.2, "C/L ratio {ratio}");
    }

    #[test]
    fn chained_recurrence_telescopes_exactly() {
        // Literal per-step form: e <- sqrt(1 + e(2 + e)) * (1 + eps') - 1,
        // against the closed form (1 + eps')^(n-1), at full precision.
        let eps = eps_d(512);
        let one = HighReal::one(512);
        let two = HighReal::from_u64(2, 512);
        let up = one.add(&eps);
        let mut factor = one.clone();
        let tol = HighReal::pow2(-480, 512);
        for i in 2u64..=1 << 10 {
            let e = factor.sub(&one);
            factor = one.add(&e.mul(&two.add(&e))).sqrt().mul(&up);
            if i.is_power_of_two() {
                let closed = up.pow_u64(i - 1);
                let diff = factor.sub(&closed).abs();
                assert!(
                    diff.cmp_value(&tol) != Ordering::Greater,
                    "literal and closed forms diverge at n={i}"
                );
                assert_eq!(factor.to_decimal_sig18(), closed.to_decimal_sig18());
            }
        }
    }

    #[test]
    fn envelope_shapes_and_native_rejection() {
        let eps = eps_d(DEFAULT_BITS);
        let (lo, hi) = hypot_eps_envelope(HypotKind::CorrectRounded, &eps).unwrap();
        assert_eq!(lo.cmp_value(&eps.neg()), Ordering::Equal);
        assert_eq!(hi.cmp_value(&eps), Ordering::Equal);
        let (blo, bhi) = hypot_eps_envelope(HypotKind::BranchFree, &eps).unwrap();
        assert!(blo.is_negative());
        let three = (bhi.div(&eps)).to_f64();
        assert!((three - 3.0).abs() < 1e-10, "bf upper envelope {three} eps");
        let three_lo = (blo.div(&eps)).to_f64();
        assert!((three_lo + 3.0).abs() < 1e-10, "bf lower envelope {three_lo} eps");
        assert_eq!(
            hypot_eps_envelope(HypotKind::Native, &eps),
            Err(BoundsError::NativeEnvelope)
        );
        // Single precision: same first-order shape.
        let eps_s = eps_for(Precision::Single, DEFAULT_BITS);
        let (_, shi) = hypot_eps_envelope(HypotKind::BranchFree, &eps_s).unwrap();
        assert!((shi.div(&eps_s).to_f64() - 3.0).abs() < 1e-6);
    }

    #[test]
    fn factors_bracket_one_everywhere() {
        let eps = eps_d(256);
        let one = HighReal::one(256);
        for n in [1u64, 2, 3, 7, 64, 1000, 1 << 20] {
            for pair in [
                bounds_l(n, &eps),
                bounds_c(n, &eps, &eps),
                bounds_r(n, &eps, &eps),
            ] {
                assert!(pair.lb_factor.cmp_value(&one) != Ordering::Greater, "n={n}");
                assert!(pair.ub_factor.cmp_value(&one) != Ordering::Less, "n={n}");
                assert!(!pair.lb_factor.is_negative(), "n={n}");
                assert!(!pair.lb_relerr().is_negative(), "n={n}");
            }
        }
    }

    #[test]
    fn growth_laws_hold_on_a_sample() {
        let rows = table3(14, Precision::Double, 512);
        for w in rows.windows(2) {
            let (k, ref l0, ref a0, ref h0) = w[0];
            let (_, ref l1, ref a1, ref h1) = w[1];
            if k >= 10 {
                let ratio = l1.to_f64() / l0.to_f64();
                assert!((1.9..=2.1).contains(&ratio), "L ratio {ratio} at k={k}");
            }
            let da = a1.sub(a0).to_f64();
            assert!((da - 1.0).abs() < 1e-6, "A step {da} at k={k}");
            let dh = h1.sub(h0).to_f64();
            assert!((dh - 3.0).abs() < 1e-6, "H step {dh} at k={k}");
        }
    }

    #[test]
    fn doubling_bits_changes_no_rendered_digit() {
        let lo = table3(8, Precision::Double, 256);
        let hi = table3(8, Precision::Double, 512);
        for ((k, l0, a0, h0), (_, l1, a1, h1)) in lo.into_iter().zip(hi) {
            assert_eq!(l0.to_decimal_sig18(), l1.to_decimal_sig18(), "L row {k}");
            assert_eq!(a0.to_decimal_sig18(), a1.to_decimal_sig18(), "A row {k}");
            assert_eq!(h0.to_decimal_sig18(), h1.to_decimal_sig18(), "H row {k}");
        }
    }

    #[test]
    fn unbalanced_lengths_stay_between_neighbor_powers() {
        let eps = eps_d(256);
        for n in [3u64, 5, 6, 7, 100, 1000] {
            let below = bounds_r(n.next_power_of_two() / 2, &eps, &eps).ub_relerr().to_f64();
            let above = bounds_r(n.next_power_of_two(), &eps, &eps).ub_relerr().to_f64();
            let here = bounds_r(n, &eps, &eps).ub_relerr().to_f64();
            assert!(below <= here && here <= above, "n={n}: {below} {here} {above}");
        }
    }
}
