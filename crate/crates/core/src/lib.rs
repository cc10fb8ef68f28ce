//! Reproducible Frobenius-norm computation.
//!
//! The crate provides three families of norm algorithms over `f32`/`f64`
//! slices, all bit-reproducible across platforms and worker counts:
//!
//! * iterative scaled accumulation ([`scalar::norm_iterative_fma`], id `L`)
//!   and an iterative hypot chain ([`scalar::norm_iterative_hypot`], id `C`),
//! * pairwise recursion over a hypotenuse kernel ([`scalar::norm_recursive`],
//!   ids `A`/`B`/`H` for the correctly rounded, platform native and
//!   branch-free kernels),
//! * lane-parallel recursion in a software vector model ([`vector::nrmf`],
//!   ids `X`/`Y`/`Z` for increasing lane widths).
//!
//! Certified relative error bounds for each algorithm live in [`bounds`],
//! evaluated in arbitrary-precision arithmetic ([`highreal`]). The [`oracle`]
//! module computes the exactly rounded norm for error measurement, and
//! [`harness`] drives seeded experiment campaigns.

pub mod bounds;
pub mod harness;
pub mod highreal;
pub mod kernels;
pub mod oracle;
pub mod scalar;
pub mod vector;
mod workers;

pub use kernels::HypotKind;
pub use scalar::{AlgorithmId, RealArray};
pub use workers::default_workers;

use std::fmt;
use std::hash::Hash;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// Working floating-point precision of a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    pub const ALL: [Precision; 2] = [Precision::Single, Precision::Double];

    /// Base-2 log of the unit roundoff: -24 for single, -53 for double.
    pub fn unit_roundoff_log2(self) -> i32 {
        match self {
            Precision::Single => -24,
            Precision::Double => -53,
        }
    }

    /// The unit roundoff as an exact `f64` (2^-24 or 2^-53). Relative errors
    /// and bound tables are normalized by this value.
    pub fn unit_roundoff(self) -> f64 {
        pow2f64(self.unit_roundoff_log2())
    }

    /// Element width in bytes (4 or 8), as stored in array files.
    pub fn byte_width(self) -> usize {
        match self {
            Precision::Single => 4,
            Precision::Double => 8,
        }
    }

    /// Short tag used in CSV output and CLI flags: `s` or `d`.
    pub fn tag(self) -> &'static str {
        match self {
            Precision::Single => "s",
            Precision::Double => "d",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s" | "S" | "single" | "f32" => Ok(Precision::Single),
            "d" | "D" | "double" | "f64" => Ok(Precision::Double),
            other => Err(format!("unknown precision `{other}` (expected s or d)")),
        }
    }
}

/// Exact power of two in the normal `f64` range.
pub(crate) const fn pow2f64(k: i32) -> f64 {
    debug_assert!(-1022 <= k && k <= 1023);
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// Exact power of two in the normal `f32` range.
pub(crate) const fn pow2f32(k: i32) -> f32 {
    debug_assert!(-126 <= k && k <= 127);
    f32::from_bits(((k + 127) as u32) << 23)
}

mod sealed {
    pub trait Sealed {}
    impl Sealed for f32 {}
    impl Sealed for f64 {}
}

/// The two working-precision IEEE binary formats, with the exact operations
/// and format constants the norm algorithms rely on.
///
/// `min`/`max` follow the `f32`/`f64` std semantics (a NaN operand is
/// ignored, the other operand is returned); the branch-free kernel depends
/// on this.
pub trait Real:
    sealed::Sealed
    + Copy
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    type Bits: Copy + Eq + Ord + Hash + fmt::Debug + fmt::LowerHex + Send + Sync;

    const PRECISION: Precision;
    /// Significand width in bits, implicit bit included (53 or 24).
    const MANT_DIGITS: u32;
    /// Exponent of the leading bit of the smallest normal (-1022 or -126).
    const MIN_NORMAL_EXP: i32;
    /// Exponent of the smallest subnormal, i.e. the subnormal quantum
    /// (-1074 or -149).
    const MIN_SUB_EXP: i32;
    /// Exponent of the leading bit of the largest finite value (1023 or 127).
    const MAX_FINITE_EXP: i32;

    const ZERO: Self;
    const ONE: Self;
    const INFINITY: Self;
    const MAX_FINITE: Self;

    // Magnitude classes and rescale factors of the scaled-accumulator
    // algorithm. All are powers of two, so rescaling is exact.
    /// Below this, squares may lose bits to underflow (2^-511 / 2^-63).
    const T_SMALL: Self;
    /// Above this, squares may overflow (2^486 / 2^52).
    const T_BIG: Self;
    /// Upscale factor for the small class (2^537 / 2^75).
    const S_SMALL: Self;
    /// Downscale factor for the big class (2^-538 / 2^-76).
    const S_BIG: Self;

    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn mul_add(self, a: Self, b: Self) -> Self;
    fn min(self, other: Self) -> Self;
    fn max(self, other: Self) -> Self;
    fn is_nan(self) -> bool;
    fn is_finite(self) -> bool;
    fn is_infinite(self) -> bool;
    fn to_bits(self) -> Self::Bits;
    fn from_bits(bits: Self::Bits) -> Self;
    /// Bit pattern zero-extended to 64 bits, for precision-agnostic records.
    fn bits_u64(self) -> u64;
    /// Bit pattern as a fixed-width lowercase hex string (16 or 8 digits).
    fn hex_bits(self) -> String;
    fn to_f64(self) -> f64;
    /// Round a `f64` to this precision (identity for `f64`).
    fn from_f64(x: f64) -> Self;
    /// Platform native hypotenuse (`std` `hypot`).
    fn native_hypot(self, other: Self) -> Self;
    /// Correctly rounded hypotenuse backend; see [`kernels::cr_hypot`].
    fn cr_hypot(self, other: Self) -> Self;
    /// Exact decomposition `|self| = m * 2^e` with integer `m`.
    /// Requires `self` finite; returns `m = 0` for zeros.
    fn decompose(self) -> (u64, i32);
    /// Exact 2^k for `MIN_SUB_EXP <= k <= MAX_FINITE_EXP`.
    fn pow2(k: i32) -> Self;
    /// Floor of log2(|self|) for finite nonzero values.
    fn exponent(self) -> i32;
    /// Map a 64-bit word to the open interval (0, 1), exactly representable.
    fn unit_open(word: u64) -> Self;
    /// Exact `sig * 2^quantum` for a representable target: `sig` below
    /// 2^MANT_DIGITS and the value finite. Inverse of [`Real::decompose`].
    fn from_sig_quantum(sig: u64, quantum: i32) -> Self;
}

impl Real for f64 {
    type Bits = u64;

    const PRECISION: Precision = Precision::Double;
    const MANT_DIGITS: u32 = 53;
    const MIN_NORMAL_EXP: i32 = -1022;
    const MIN_SUB_EXP: i32 = -1074;
    const MAX_FINITE_EXP: i32 = 1023;

    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const INFINITY: Self = f64::INFINITY;
    const MAX_FINITE: Self = f64::MAX;

    const T_SMALL: Self = pow2f64(-511);
    const T_BIG: Self = pow2f64(486);
    const S_SMALL: Self = pow2f64(537);
    const S_BIG: Self = pow2f64(-538);

    #[inline(always)]
    fn abs(self) -> Self {
        self.abs()
    }

    #[inline(always)]
    fn sqrt(self) -> Self {
        self.sqrt()
    }

    #[inline(always)]
    fn mul_add(self, a: Self, b: Self) -> Self {
        self.mul_add(a, b)
    }

    #[inline(always)]
    fn min(self, other: Self) -> Self {
        f64::min(self, other)
    }

    #[inline(always)]
    fn max(self, other: Self) -> Self {
        f64::max(self, other)
    }

    #[inline(always)]
    fn is_nan(self) -> bool {
        f64::is_nan(self)
    }

    #[inline(always)]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    #[inline(always)]
    fn is_infinite(self) -> bool {
        f64::is_infinite(self)
    }

    #[inline(always)]
    fn to_bits(self) -> u64 {
        f64::to_bits(self)
    }

    #[inline(always)]
    fn from_bits(bits: u64) -> Self {
        f64::from_bits(bits)
    }

    #[inline(always)]
    fn bits_u64(self) -> u64 {
        self.to_bits()
    }

    fn hex_bits(self) -> String {
        format!("{:016x}", self.to_bits())
    }

    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn native_hypot(self, other: Self) -> Self {
        f64::hypot(self, other)
    }

    #[inline]
    fn cr_hypot(self, other: Self) -> Self {
        kernels::cr_hypot64(self, other)
    }

    #[inline]
    fn decompose(self) -> (u64, i32) {
        let bits = self.to_bits();
        let frac = bits & ((1u64 << 52) - 1);
        let raw_exp = (bits >> 52) & 0x7ff;
        debug_assert!(raw_exp != 0x7ff, "decompose requires a finite value");
        if raw_exp == 0 {
            (frac, Self::MIN_SUB_EXP)
        } else {
            (frac | (1u64 << 52), raw_exp as i32 - 1023 - 52)
        }
    }

    #[inline]
    fn pow2(k: i32) -> Self {
        debug_assert!((Self::MIN_SUB_EXP..=Self::MAX_FINITE_EXP).contains(&k));
        if k >= Self::MIN_NORMAL_EXP {
            pow2f64(k)
        } else {
            f64::from_bits(1u64 << (k - Self::MIN_SUB_EXP))
        }
    }

    #[inline]
    fn exponent(self) -> i32 {
        let (m, e) = self.decompose();
        debug_assert!(m != 0, "exponent of zero is undefined");
        e + 63 - m.leading_zeros() as i32
    }

    #[inline]
    fn unit_open(word: u64) -> Self {
        // (0.5 + k) * 2^-52 for k in [0, 2^52): the sum has at most 53
        // significant bits, so it is exact and never reaches 0 or 1.
        ((word >> 12) as f64 + 0.5) * pow2f64(-52)
    }

    #[inline]
    fn from_sig_quantum(sig: u64, quantum: i32) -> Self {
        debug_assert!(sig < 1 << 53);
        // Split the scale so the intermediate stays normal even for
        // subnormal targets; both multiplies are then exact.
        let half = quantum / 2;
        sig as f64 * 2f64.powi(half) * 2f64.powi(quantum - half)
    }
}

impl Real for f32 {
    type Bits = u32;

    const PRECISION: Precision = Precision::Single;
    const MANT_DIGITS: u32 = 24;
    const MIN_NORMAL_EXP: i32 = -126;
    const MIN_SUB_EXP: i32 = -149;
    const MAX_FINITE_EXP: i32 = 127;

    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const INFINITY: Self = f32::INFINITY;
    const MAX_FINITE: Self = f32::MAX;

    const T_SMALL: Self = pow2f32(-63);
    const T_BIG: Self = pow2f32(52);
    const S_SMALL: Self = pow2f32(75);
    const S_BIG: Self = pow2f32(-76);

    #[inline(always)]
    fn abs(self) -> Self {
        self.abs()
    }

    #[inline(always)]
    fn sqrt(self) -> Self {
        self.sqrt()
    }

    #[inline(always)]
    fn mul_add(self, a: Self, b: Self) -> Self {
        self.mul_add(a, b)
    }

    #[inline(always)]
    fn min(self, other: Self) -> Self {
        f32::min(self, other)
    }

    #[inline(always)]
    fn max(self, other: Self) -> Self {
        f32::max(self, other)
    }

    #[inline(always)]
    fn is_nan(self) -> bool {
        f32::is_nan(self)
    }

    #[inline(always)]
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }

    #[inline(always)]
    fn is_infinite(self) -> bool {
        f32::is_infinite(self)
    }

    #[inline(always)]
    fn to_bits(self) -> u32 {
        f32::to_bits(self)
    }

    #[inline(always)]
    fn from_bits(bits: u32) -> Self {
        f32::from_bits(bits)
    }

    #[inline(always)]
    fn bits_u64(self) -> u64 {
        self.to_bits() as u64
    }

    fn hex_bits(self) -> String {
        format!("{:08x}", self.to_bits())
    }

    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn native_hypot(self, other: Self) -> Self {
        f32::hypot(self, other)
    }

    #[inline]
    fn cr_hypot(self, other: Self) -> Self {
        kernels::cr_hypot32(self, other)
    }

    #[inline]
    fn decompose(self) -> (u64, i32) {
        let bits = self.to_bits();
        let frac = (bits & ((1u32 << 23) - 1)) as u64;
        let raw_exp = (bits >> 23) & 0xff;
        debug_assert!(raw_exp != 0xff, "decompose requires a finite value");
        if raw_exp == 0 {
            (frac, Self::MIN_SUB_EXP)
        } else {
            (frac | (1u64 << 23), raw_exp as i32 - 127 - 23)
        }
    }

    #[inline]
    fn pow2(k: i32) -> Self {
        debug_assert!((Self::MIN_SUB_EXP..=Self::MAX_FINITE_EXP).contains(&k));
        if k >= Self::MIN_NORMAL_EXP {
            pow2f32(k)
        } else {
            f32::from_bits(1u32 << (k - Self::MIN_SUB_EXP))
        }
    }

    #[inline]
    fn exponent(self) -> i32 {
        let (m, e) = self.decompose();
        debug_assert!(m != 0, "exponent of zero is undefined");
        e + 63 - m.leading_zeros() as i32
    }

    #[inline]
    fn unit_open(word: u64) -> Self {
        // (0.5 + k) * 2^-23 for k in [0, 2^23): exact in 24 bits, open at
        // both ends.
        ((word >> 41) as f32 + 0.5) * pow2f32(-23)
    }

    #[inline]
    fn from_sig_quantum(sig: u64, quantum: i32) -> Self {
        debug_assert!(sig < 1 << 24);
        // Exact in f64 (24-bit integer times a power of two), and the cast
        // is exact because the target is representable.
        (sig as f64 * 2f64.powi(quantum)) as f32
    }
}

/// Evaluate one of the norm algorithms on `x`.
///
/// `workers` is the fork-join worker count for the recursive and
/// lane-parallel algorithms (the iterative ones are inherently sequential);
/// results are bitwise independent of it. Pass [`default_workers()`] to
/// honor the `FNORM_WORKERS` environment variable.
pub fn evaluate<R: Real>(alg: AlgorithmId, x: &[R], workers: usize) -> R {
    match alg {
        AlgorithmId::L => scalar::norm_iterative_fma(x),
        AlgorithmId::C => scalar::norm_iterative_hypot(x),
        AlgorithmId::A => scalar::norm_recursive(x, HypotKind::CorrectRounded, workers),
        AlgorithmId::B => scalar::norm_recursive(x, HypotKind::Native, workers),
        AlgorithmId::H => scalar::norm_recursive(x, HypotKind::BranchFree, workers),
        AlgorithmId::X | AlgorithmId::Y | AlgorithmId::Z => vector::nrmf(
            x,
            alg.lanes(R::PRECISION),
            vector::Reduce::Scalar,
            workers,
        ),
    }
}
