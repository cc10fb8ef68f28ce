//! Scalar norm algorithms: iterative scaled accumulation (`L`), an iterative
//! hypot chain (`C`), and the recursive family (`A`/`B`/`H` by kernel).

use crate::kernels::{self, HypotKind};
use crate::workers::{run_with_pool, PAR_MIN};
use crate::{Precision, Real};
use std::alloc::{alloc_zeroed, dealloc, handle_alloc_error, Layout};
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::ptr::NonNull;
use std::slice;
use std::str::FromStr;

const CACHE_LINE: usize = 64;

/// Identifier of a norm computation algorithm.
///
/// `L` is the iterative scaled-accumulator algorithm, `C` the iterative
/// hypot chain; `A`, `B` and `H` are the recursive algorithm with the
/// correctly rounded, native and branch-free kernels; `X`, `Y` and `Z` are
/// the lane-parallel recursion at increasing lane widths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmId {
    L,
    C,
    A,
    B,
    H,
    X,
    Y,
    Z,
}

/// How an [`AlgorithmId`] computes the norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgorithmKind {
    IterativeFma,
    IterativeHypot,
    Recursive(HypotKind),
    LaneParallel,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 8] = [
        AlgorithmId::L,
        AlgorithmId::C,
        AlgorithmId::A,
        AlgorithmId::B,
        AlgorithmId::H,
        AlgorithmId::X,
        AlgorithmId::Y,
        AlgorithmId::Z,
    ];

    pub fn kind(self) -> AlgorithmKind {
        match self {
            AlgorithmId::L => AlgorithmKind::IterativeFma,
            AlgorithmId::C => AlgorithmKind::IterativeHypot,
            AlgorithmId::A => AlgorithmKind::Recursive(HypotKind::CorrectRounded),
            AlgorithmId::B => AlgorithmKind::Recursive(HypotKind::Native),
            AlgorithmId::H => AlgorithmKind::Recursive(HypotKind::BranchFree),
            AlgorithmId::X | AlgorithmId::Y | AlgorithmId::Z => AlgorithmKind::LaneParallel,
        }
    }

    /// Lane count: 1 for the scalar algorithms; X/Y/Z widen with narrower
    /// elements (4/8/16 lanes single, 2/4/8 double).
    pub fn lanes(self, precision: Precision) -> usize {
        let doubled = match precision {
            Precision::Single => 2,
            Precision::Double => 1,
        };
        match self {
            AlgorithmId::X => 2 * doubled,
            AlgorithmId::Y => 4 * doubled,
            AlgorithmId::Z => 8 * doubled,
            _ => 1,
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgorithmId::L => "L",
            AlgorithmId::C => "C",
            AlgorithmId::A => "A",
            AlgorithmId::B => "B",
            AlgorithmId::H => "H",
            AlgorithmId::X => "X",
            AlgorithmId::Y => "Y",
            AlgorithmId::Z => "Z",
        })
    }
}

impl FromStr for AlgorithmId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "L" | "l" => Ok(AlgorithmId::L),
            "C" | "c" => Ok(AlgorithmId::C),
            "A" | "a" => Ok(AlgorithmId::A),
            "B" | "b" => Ok(AlgorithmId::B),
            "H" | "h" => Ok(AlgorithmId::H),
            "X" | "x" => Ok(AlgorithmId::X),
            "Y" | "y" => Ok(AlgorithmId::Y),
            "Z" | "z" => Ok(AlgorithmId::Z),
            other => Err(format!(
                "unknown algorithm `{other}` (expected one of L C A B H X Y Z)"
            )),
        }
    }
}

/// An owned, contiguous array of working-precision reals whose storage is
/// cache-line aligned (64 bytes).
///
/// A nonzero `offset` places the first element that many elements past the
/// aligned base, which is how the alignment-independence experiments build
/// deliberately misaligned views of identical data.
pub struct RealArray<R: Real> {
    ptr: NonNull<R>,
    cap: usize,
    offset: usize,
    len: usize,
}

unsafe impl<R: Real> Send for RealArray<R> {}
unsafe impl<R: Real> Sync for RealArray<R> {}

impl<R: Real> RealArray<R> {
    fn layout(cap: usize) -> Layout {
        Layout::from_size_align(cap * std::mem::size_of::<R>(), CACHE_LINE)
            .expect("array size overflows the address space")
    }

    fn alloc(cap: usize) -> NonNull<R> {
        if cap == 0 {
            return NonNull::dangling();
        }
        let layout = Self::layout(cap);
        // Zero bits are a valid +0 in both formats.
        let p = unsafe { alloc_zeroed(layout) };
        match NonNull::new(p as *mut R) {
            Some(p) => p,
            None => handle_alloc_error(layout),
        }
    }

    /// A zero-filled array of `len` elements at the aligned base.
    pub fn zeroed(len: usize) -> Self {
        RealArray { ptr: Self::alloc(len), cap: len, offset: 0, len }
    }

    pub fn from_slice(values: &[R]) -> Self {
        let mut a = Self::zeroed(values.len());
        a.as_mut_slice().copy_from_slice(values);
        a
    }

    pub fn from_vec(values: Vec<R>) -> Self {
        Self::from_slice(&values)
    }

    /// Same contents, but starting `offset` elements past the aligned base.
    pub fn with_offset(values: &[R], offset: usize) -> Self {
        let cap = values.len().checked_add(offset).expect("array size overflow");
        let mut a = RealArray { ptr: Self::alloc(cap), cap, offset, len: values.len() };
        a.as_mut_slice().copy_from_slice(values);
        a
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_slice(&self) -> &[R] {
        unsafe { slice::from_raw_parts(self.ptr.as_ptr().add(self.offset), self.len) }
    }

    pub fn as_mut_slice(&mut self) -> &mut [R] {
        unsafe { slice::from_raw_parts_mut(self.ptr.as_ptr().add(self.offset), self.len) }
    }

    /// Largest power of two dividing the address of the first element.
    pub fn base_alignment(&self) -> usize {
        let addr = self.as_slice().as_ptr() as usize;
        1 << addr.trailing_zeros().min(12)
    }
}

impl<R: Real> Drop for RealArray<R> {
    fn drop(&mut self) {
        if self.cap > 0 {
            unsafe { dealloc(self.ptr.as_ptr() as *mut u8, Self::layout(self.cap)) }
        }
    }
}

impl<R: Real> Clone for RealArray<R> {
    fn clone(&self) -> Self {
        Self::with_offset(self.as_slice(), self.offset)
    }
}

impl<R: Real> Deref for RealArray<R> {
    type Target = [R];

    fn deref(&self) -> &[R] {
        self.as_slice()
    }
}

impl<R: Real> DerefMut for RealArray<R> {
    fn deref_mut(&mut self) -> &mut [R] {
        self.as_mut_slice()
    }
}

impl<R: Real> fmt::Debug for RealArray<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealArray")
            .field("len", &self.len)
            .field("offset", &self.offset)
            .finish()
    }
}

/// The recursive split: left half rounded up, `(⌈n/2⌉, n - ⌈n/2⌉)`.
#[inline]
pub fn split_lengths(n: usize) -> (usize, usize) {
    debug_assert!(n >= 3, "leaves of length 1 and 2 are not split");
    let p = n.div_ceil(2);
    (p, n - p)
}

/// Recursive pairwise norm over the chosen hypotenuse kernel
/// (algorithms `A`, `B`, `H`).
///
/// Leaves are `|x|` for one element and `kernel(x1, x2)` for two; longer
/// slices split at [`split_lengths`] and combine the two partial norms with
/// the kernel, giving recursion depth exactly `⌈lg n⌉`. The combine tree
/// depends only on `n`, so the result is bitwise independent of `workers`.
/// An empty slice yields +0.
pub fn norm_recursive<R: Real>(x: &[R], kind: HypotKind, workers: usize) -> R {
    if x.is_empty() {
        return R::ZERO;
    }
    run_with_pool(workers, || rec_norm(x, kind, workers > 1))
}

fn rec_norm<R: Real>(x: &[R], kind: HypotKind, par: bool) -> R {
    match x.len() {
        1 => x[0].abs(),
        2 => kernels::hypot_by(kind, x[0], x[1]),
        n => {
            let (p, _) = split_lengths(n);
            let (lo, hi) = x.split_at(p);
            let (a, b) = if par && n >= PAR_MIN {
                rayon::join(|| rec_norm(lo, kind, true), || rec_norm(hi, kind, true))
            } else {
                (rec_norm(lo, kind, false), rec_norm(hi, kind, false))
            };
            kernels::hypot_by(kind, a, b)
        }
    }
}

/// Iterative scaled-accumulator norm (algorithm `L`).
///
/// Elements are classified by magnitude against [`Real::T_SMALL`] and
/// [`Real::T_BIG`]; small and big squares are accumulated pre-scaled by the
/// exact powers of two [`Real::S_SMALL`]/[`Real::S_BIG`] so they can neither
/// underflow to zero nor overflow, and every accumulation is one fused
/// multiply-add. The combine step follows the reference routine: a nonempty
/// big accumulator absorbs the medium one; otherwise small and medium merge
/// through a two-term hypotenuse; NaNs propagate through the medium class.
pub fn norm_iterative_fma<R: Real>(x: &[R]) -> R {
    let mut asml = R::ZERO;
    let mut amed = R::ZERO;
    let mut abig = R::ZERO;
    let mut notbig = true;
    for &v in x {
        let ax = v.abs();
        if ax > R::T_BIG {
            let t = ax * R::S_BIG;
            abig = t.mul_add(t, abig);
            notbig = false;
        } else if ax < R::T_SMALL {
            // Once a big value is seen, small ones can no longer affect the
            // result and would only risk spurious underflow.
            if notbig {
                let t = ax * R::S_SMALL;
                asml = t.mul_add(t, asml);
            }
        } else {
            amed = ax.mul_add(ax, amed);
        }
    }
    let scl;
    let sumsq;
    if abig > R::ZERO {
        if amed > R::ZERO || amed.is_nan() {
            abig = abig + (amed * R::S_BIG) * R::S_BIG;
        }
        scl = R::ONE / R::S_BIG;
        sumsq = abig;
    } else if asml > R::ZERO {
        if amed > R::ZERO || amed.is_nan() {
            let med_root = amed.sqrt();
            let sml_root = asml.sqrt() / R::S_SMALL;
            let (ymin, ymax) = if sml_root > med_root {
                (med_root, sml_root)
            } else {
                (sml_root, med_root)
            };
            let q = ymin / ymax;
            scl = R::ONE;
            sumsq = ymax * ymax * (R::ONE + q * q);
        } else {
            scl = R::ONE / R::S_SMALL;
            sumsq = asml;
        }
    } else {
        scl = R::ONE;
        sumsq = amed;
    }
    scl * sumsq.sqrt()
}

/// Iterative hypot-chain norm (algorithm `C`).
///
/// Keeps three partial norms over the same magnitude classes as `L` but
/// without any scaling: each element updates its class's partial norm
/// through the correctly rounded hypotenuse, and the final result is
/// `cr_hypot(cr_hypot(small, medium), big)`. No element is ever squared,
/// so nothing under- or overflows before the final combine.
pub fn norm_iterative_hypot<R: Real>(x: &[R]) -> R {
    let mut sml = R::ZERO;
    let mut med = R::ZERO;
    let mut big = R::ZERO;
    for &v in x {
        let ax = v.abs();
        if ax > R::T_BIG {
            big = kernels::cr_hypot(big, ax);
        } else if ax < R::T_SMALL {
            sml = kernels::cr_hypot(sml, ax);
        } else {
            med = kernels::cr_hypot(med, ax);
        }
    }
    kernels::cr_hypot(kernels::cr_hypot(sml, med), big)
}

/// Norm of a complex array stored as contiguous (re, im) pairs: the selected
/// algorithm applied to the flat `2 * count` real view.
pub fn norm_complex<R: Real>(z: &[[R; 2]], alg: AlgorithmId, workers: usize) -> R {
    crate::evaluate(alg, z.as_flattened(), workers)
}
