//! Built-in verification suites behind `fnorm selftest`.
//!
//! Each suite re-checks a shipped invariant against an independent witness:
//! the branch-free kernel against its certified envelope and the correctly
//! rounded kernel against the exact integer oracle, lane results against
//! scalar subsequence norms, the bound table against its published values,
//! and norm evaluation against alignment, worker-count, and rerun changes.

use fnorm::bounds::{self, DEFAULT_BITS};
use fnorm::harness::{self, rng, CampaignConfig, Dist};
use fnorm::highreal::HighReal;
use fnorm::kernels::{self, HypotKind};
use fnorm::oracle;
use fnorm::scalar::{AlgorithmId, RealArray};
use fnorm::vector;
use fnorm::{Precision, Real};
use std::cmp::Ordering;

pub const SUITES: [&str; 4] = [
    "kernel-envelopes",
    "lane-equivalence",
    "bounds-regression",
    "reproducibility",
];

pub struct Options {
    /// Random pairs per precision in the kernel suites.
    pub pairs: u64,
    /// Largest array length in the lane-equivalence sweep.
    pub max_n: usize,
    /// Break the tail mask on purpose; lane-equivalence must then fail.
    pub inject_fault: bool,
    pub workers: usize,
}

/// Run the selected suites (all of them when `selected` is empty) in fixed
/// order, reporting one summary line each as it finishes, and return the
/// names that failed.
pub fn run(selected: &[String], opts: &Options, mut report: impl FnMut(&str)) -> Vec<String> {
    let mut failed = Vec::new();
    for name in SUITES {
        if !selected.is_empty() && !selected.iter().any(|s| s == name) {
            continue;
        }
        let outcome = match name {
            "kernel-envelopes" => kernel_envelopes(opts),
            "lane-equivalence" => lane_equivalence(opts),
            "bounds-regression" => bounds_regression(),
            "reproducibility" => reproducibility(opts),
            _ => unreachable!(),
        };
        match outcome {
            Ok(detail) => report(&format!("suite {name}: ok ({detail})")),
            Err(detail) => {
                report(&format!("suite {name}: FAILED ({detail})"));
                failed.push(name.to_string());
            }
        }
    }
    failed
}

/// Finite double with the exponent drawn from [-band, band], keeping the
/// branch-free kernel inside its no-overflow/no-underflow hypothesis.
fn f64_in_band(word: u64, band: i32) -> f64 {
    let e = (word >> 52) as i32 % (2 * band + 1) - band;
    let bits = (word & (1 << 63)) | (((e + 1023) as u64) << 52) | (word & ((1 << 52) - 1));
    f64::from_bits(bits)
}

fn f32_in_band(word: u64, band: i32) -> f32 {
    let w = word as u32;
    let e = (w >> 23) as i32 % (2 * band + 1) - band;
    let bits = (w & (1 << 31)) | (((e + 127) as u32) << 23) | (w & ((1 << 23) - 1));
    f32::from_bits(bits)
}

/// Any word, forced finite: an all-ones exponent field has one bit cleared.
fn finite_f64(word: u64) -> f64 {
    let bits = if word >> 52 & 0x7ff == 0x7ff { word & !(1 << 62) } else { word };
    f64::from_bits(bits)
}

fn finite_f32(word: u64) -> f32 {
    let w = word as u32;
    let bits = if w >> 23 & 0xff == 0xff { w & !(1 << 30) } else { w };
    f32::from_bits(bits)
}

/// Envelope factors squared, so the membership check needs no square root
/// per pair; 320 bits keeps evaluation noise far below the eps^2 terms.
struct SquaredEnvelope {
    lo2: HighReal,
    hi2: HighReal,
}

fn squared_envelope(precision: Precision) -> SquaredEnvelope {
    let eps = bounds::eps_for(precision, 320);
    let one = HighReal::one(320);
    let (lo, hi) = bounds::hypot_eps_envelope(HypotKind::BranchFree, &eps).unwrap();
    let lo1 = one.add(&lo);
    let hi1 = one.add(&hi);
    SquaredEnvelope { lo2: lo1.mul(&lo1), hi2: hi1.mul(&hi1) }
}

fn within_envelope<R: Real>(env: &SquaredEnvelope, x: R, y: R, v: R) -> bool {
    let xh = HighReal::from_f64(x.to_f64(), 320);
    let yh = HighReal::from_f64(y.to_f64(), 320);
    let s = xh.mul(&xh).add(&yh.mul(&yh));
    let vh = HighReal::from_f64(v.to_f64(), 320);
    let v2 = vh.mul(&vh);
    v2.cmp_value(&s.mul(&env.lo2)) != Ordering::Less
        && v2.cmp_value(&s.mul(&env.hi2)) != Ordering::Greater
}

fn kernel_envelopes(opts: &Options) -> Result<String, String> {
    let env_d = squared_envelope(Precision::Double);
    for i in 0..opts.pairs {
        let x = f64_in_band(rng::index_to_word(0x5E1F_E57D, 2 * i), 200);
        let y = f64_in_band(rng::index_to_word(0x5E1F_E57D, 2 * i + 1), 200);
        let v = kernels::v1_hypot(x, y);
        if !within_envelope(&env_d, x, y, v) {
            return Err(format!("double pair ({x:e}, {y:e}) -> {v:e} outside the envelope"));
        }
    }
    let env_s = squared_envelope(Precision::Single);
    for i in 0..opts.pairs {
        let x = f32_in_band(rng::index_to_word(0x5E1F_E575, 2 * i), 60);
        let y = f32_in_band(rng::index_to_word(0x5E1F_E575, 2 * i + 1), 60);
        let v = kernels::v1_hypot(x, y);
        if !within_envelope(&env_s, x, y, v) {
            return Err(format!("single pair ({x:e}, {y:e}) -> {v:e} outside the envelope"));
        }
    }

    for i in 0..opts.pairs {
        let x = finite_f64(rng::index_to_word(0x5E1F_C62D, 2 * i));
        let y = finite_f64(rng::index_to_word(0x5E1F_C62D, 2 * i + 1));
        let got = kernels::cr_hypot(x, y);
        let want = oracle::oracle_hypot(x, y);
        if got.to_bits() != want.to_bits() {
            return Err(format!("double pair ({x:e}, {y:e}): kernel {got:e}, oracle {want:e}"));
        }
    }
    for i in 0..opts.pairs {
        let x = finite_f32(rng::index_to_word(0x5E1F_C625, 2 * i));
        let y = finite_f32(rng::index_to_word(0x5E1F_C625, 2 * i + 1));
        let got = kernels::cr_hypot(x, y);
        let want = oracle::oracle_hypot(x, y);
        if got.to_bits() != want.to_bits() {
            return Err(format!("single pair ({x:e}, {y:e}): kernel {got:e}, oracle {want:e}"));
        }
    }

    // Directed edges: zeros, subnormals, powers straddling the rescale
    // thresholds, and the overflow boundary, in all four sign combinations.
    let edges64: Vec<f64> = vec![
        0.0,
        -0.0,
        f64::from_bits(1),
        f64::from_bits(2),
        f64::from_bits((1 << 52) - 1),
        f64::MIN_POSITIVE,
        1.0,
        3.0,
        4.0,
        2f64.powi(-537),
        2f64.powi(511),
        2f64.powi(512),
        f64::MAX,
        f64::MAX / 2.0,
        f64::from_bits(f64::MAX.to_bits() - 1),
        1.5e308,
    ];
    let mut edges = 0u64;
    for &a in &edges64 {
        for &b in &edges64 {
            for (x, y) in [(a, b), (-a, b), (a, -b), (-a, -b)] {
                let got = kernels::cr_hypot(x, y);
                let want = oracle::oracle_hypot(x, y);
                if got.to_bits() != want.to_bits() {
                    return Err(format!("double edge ({x:e}, {y:e}): kernel {got:e}, oracle {want:e}"));
                }
                edges += 1;
            }
        }
    }
    let edges32: Vec<f32> = vec![
        0.0,
        -0.0,
        f32::from_bits(1),
        f32::from_bits((1 << 23) - 1),
        f32::MIN_POSITIVE,
        1.0,
        3.0,
        4.0,
        2f32.powi(-75),
        2f32.powi(63),
        2f32.powi(64),
        f32::MAX,
        f32::MAX / 2.0,
        f32::from_bits(f32::MAX.to_bits() - 1),
    ];
    for &a in &edges32 {
        for &b in &edges32 {
            for (x, y) in [(a, b), (-a, b), (a, -b), (-a, -b)] {
                let got = kernels::cr_hypot(x, y);
                let want = oracle::oracle_hypot(x, y);
                if got.to_bits() != want.to_bits() {
                    return Err(format!("single edge ({x:e}, {y:e}): kernel {got:e}, oracle {want:e}"));
                }
                edges += 1;
            }
        }
    }
    Ok(format!(
        "{} pairs/precision inside the branch-free envelope; {} pairs/precision + {} edges bitwise correctly rounded",
        opts.pairs, opts.pairs, edges
    ))
}

/// Mixed-magnitude deterministic fill: a unit-interval value times an exact
/// power of two, exercising the kernel's sort and scale paths.
fn fill_mixed<R: Real>(arr: &mut RealArray<R>, seed: u64, band: i32) {
    for (i, v) in arr.as_mut_slice().iter_mut().enumerate() {
        let w = rng::index_to_word(seed, i as u64);
        let k = (w >> 52) as i32 % (2 * band + 1) - band;
        *v = R::unit_open(w) * R::pow2(k);
    }
}

fn lane_check<R: Real, const P: usize>(
    n_max: usize,
    band: i32,
    faulty: bool,
) -> Result<u64, String> {
    let mut checked = 0;
    for n in 1..=n_max {
        let mut arr = RealArray::<R>::zeroed(n);
        fill_mixed(&mut arr, (P as u64) << 32 | n as u64, band);
        let lanes = if faulty {
            vector::vnorm_recursive_tail_fault::<R, P>(&arr, true)
        } else {
            vector::vnorm_recursive::<R, P>(&arr, true)
        };
        for l in 0..P {
            let reference = vector::lane_reference_norm(&arr, l, P);
            if lanes.lanes()[l].to_bits() != reference.to_bits() {
                return Err(format!(
                    "lane {l} of width {P} diverges from its scalar subsequence norm at n={n}, {} precision",
                    R::PRECISION
                ));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

fn lane_equivalence(opts: &Options) -> Result<String, String> {
    let n_max = opts.max_n;
    let f = opts.inject_fault;
    let mut checked = 0;
    checked += lane_check::<f64, 2>(n_max, 20, f)?;
    checked += lane_check::<f64, 4>(n_max, 20, f)?;
    checked += lane_check::<f64, 8>(n_max, 20, f)?;
    checked += lane_check::<f32, 4>(n_max, 10, f)?;
    checked += lane_check::<f32, 8>(n_max, 10, f)?;
    checked += lane_check::<f32, 16>(n_max, 10, f)?;
    Ok(format!("{checked} lane checks over n in [1,{n_max}], all six widths"))
}

/// Published double-precision upper bounds, normalized to unit roundoffs,
/// for the iterative fma model and the recursive model with the correctly
/// rounded and branch-free kernels, at n = 2^k for k = 1..=30.
const PUBLISHED_UB: [(u32, &str, &str, &str); 30] = [
    (1, "1.50000000000000004e0", "1.00000000000000000e0", "3.00000000000000036e0"),
    (2, "2.50000000000000021e0", "2.00000000000000011e0", "6.00000000000000172e0"),
    (3, "4.50000000000000087e0", "3.00000000000000033e0", "9.00000000000000408e0"),
    (4, "8.50000000000000354e0", "4.00000000000000067e0", "1.20000000000000074e1"),
    (5, "1.65000000000000142e1", "5.00000000000000111e0", "1.50000000000000118e1"),
    (6, "3.25000000000000568e1", "6.00000000000000167e0", "1.80000000000000172e1"),
    (7, "6.45000000000002274e1", "7.00000000000000233e0", "2.10000000000000235e1"),
    (8, "1.28500000000000909e2", "8.00000000000000311e0", "2.40000000000000309e1"),
    (9, "2.56500000000003638e2", "9.00000000000000400e0", "2.70000000000000392e1"),
    (10, "5.12500000000014552e2", "1.00000000000000050e1", "3.00000000000000486e1"),
    (11, "1.02450000000005821e3", "1.10000000000000061e1", "3.30000000000000589e1"),
    (12, "2.04850000000023283e3", "1.20000000000000073e1", "3.60000000000000703e1"),
    (13, "4.09650000000093132e3", "1.30000000000000087e1", "3.90000000000000826e1"),
    (14, "8.19250000000372529e3", "1.40000000000000101e1", "4.20000000000000960e1"),
    (15, "1.63845000000149012e4", "1.50000000000000117e1", "4.50000000000001103e1"),
    (16, "3.27685000000596046e4", "1.60000000000000133e1", "4.80000000000001257e1"),
    (17, "6.55365000002384186e4", "1.70000000000000151e1", "5.10000000000001420e1"),
    (18, "1.31072500000953674e5", "1.80000000000000170e1", "5.40000000000001594e1"),
    (19, "2.62144500003814697e5", "1.90000000000000190e1", "5.70000000000001777e1"),
    (20, "5.24288500015258789e5", "2.00000000000000211e1", "6.00000000000001971e1"),
    (21, "1.04857650006103516e6", "2.10000000000000233e1", "6.30000000000002174e1"),
    (22, "2.09715250024414063e6", "2.20000000000000256e1", "6.60000000000002388e1"),
    (23, "4.19430450097656250e6", "2.30000000000000281e1", "6.90000000000002611e1"),
    (24, "8.38860850390625000e6", "2.40000000000000306e1", "7.20000000000002844e1"),
    (25, "1.67772165156250000e7", "2.50000000000000333e1", "7.50000000000003088e1"),
    (26, "3.35544325625000001e7", "2.60000000000000361e1", "7.80000000000003341e1"),
    (27, "6.71088647500000006e7", "2.70000000000000390e1", "8.10000000000003605e1"),
    (28, "1.34217729500000005e8", "2.80000000000000420e1", "8.40000000000003878e1"),
    (29, "2.68435460500000040e8", "2.90000000000000451e1", "8.70000000000004161e1"),
    (30, "5.36870928500000318e8", "3.00000000000000483e1", "9.00000000000004455e1"),
];

fn sig18_parts(s: &str) -> (u64, i64) {
    let (mant, exp) = s.split_once('e').expect("sig18 form has an exponent");
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    (digits.parse().unwrap(), exp.parse().unwrap())
}

/// Agreement to at least 15 significant decimal digits: identical decimal
/// exponents and 18-digit significands within 500 units of the last digit.
fn agree_to_15_digits(a: &str, b: &str) -> bool {
    let (da, ea) = sig18_parts(a);
    let (db, eb) = sig18_parts(b);
    ea == eb && da.abs_diff(db) <= 500
}

fn bounds_regression() -> Result<String, String> {
    let rows = bounds::table3(30, Precision::Double, DEFAULT_BITS);
    let mut checked = 0;
    for ((k, l, a, h), (pk, pl, pa, ph)) in rows.iter().zip(PUBLISHED_UB) {
        if *k != pk {
            return Err(format!("row {k} out of order"));
        }
        for (got, want, col) in [
            (l.to_decimal_sig18(), pl, "fma"),
            (a.to_decimal_sig18(), pa, "recursive-cr"),
            (h.to_decimal_sig18(), ph, "recursive-bf"),
        ] {
            if !agree_to_15_digits(&got, want) {
                return Err(format!(
                    "row lg n = {k}, {col} column: computed {got}, published {want}"
                ));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked}/90 published values reproduced to >=15 digits at {DEFAULT_BITS} bits"))
}

fn reproducibility(opts: &Options) -> Result<String, String> {
    // Aligned vs offset placements of identical data, all lane widths.
    for arr_idx in 0..10u64 {
        let n = 1000 + 17 * arr_idx as usize;
        let mut vals64 = vec![0.0f64; n];
        for (i, v) in vals64.iter_mut().enumerate() {
            *v = <f64 as Real>::unit_open(rng::index_to_word(900 + arr_idx, i as u64));
        }
        let vals32: Vec<f32> = vals64.iter().map(|&v| v as f32).collect();
        for lanes in [2usize, 4, 8] {
            let aligned = RealArray::from_slice(&vals64);
            let off1 = RealArray::with_offset(&vals64, 1);
            for reduce in [vector::Reduce::Scalar, vector::Reduce::Tree] {
                let a = vector::nrmf(&aligned, lanes, reduce, 1).to_bits();
                let b = vector::nrmf(&off1, lanes, reduce, 1).to_bits();
                if a != b {
                    return Err(format!("alignment changed double bits (lanes {lanes})"));
                }
            }
        }
        for lanes in [4usize, 8, 16] {
            let aligned = RealArray::from_slice(&vals32);
            let off1 = RealArray::with_offset(&vals32, 1);
            let a = vector::nrmf(&aligned, lanes, vector::Reduce::Scalar, 1).to_bits();
            let b = vector::nrmf(&off1, lanes, vector::Reduce::Scalar, 1).to_bits();
            if a != b {
                return Err(format!("alignment changed single bits (lanes {lanes})"));
            }
        }
    }

    // Worker counts on arrays long enough to actually fork.
    for arr_idx in 0..5u64 {
        let n = 33_000 + 37 * arr_idx as usize;
        let mut arr = RealArray::<f64>::zeroed(n);
        fill_mixed(&mut arr, 7000 + arr_idx, 20);
        let r1 = fnorm::evaluate(AlgorithmId::Z, &arr, 1).to_bits();
        let r2 = fnorm::evaluate(AlgorithmId::Z, &arr, 2).to_bits();
        let r4 = fnorm::evaluate(AlgorithmId::Z, &arr, 4).to_bits();
        if r1 != r2 || r2 != r4 {
            return Err(format!("worker count changed Z bits on array {arr_idx}"));
        }
    }

    // Two campaign reruns from one seed manifest, different worker counts.
    let path = std::env::temp_dir().join(format!("fnorm-selftest-{}.seeds", std::process::id()));
    let outcome = (|| {
        let mut cfg = CampaignConfig {
            algorithms: AlgorithmId::ALL.to_vec(),
            runs: 3,
            n: 2048,
            dists: vec![Dist::Uniform01, Dist::Normal01],
            workers: 1,
            timing_repeats: 1,
        };
        let first = harness::run_campaign::<f64>(&cfg, &path)
            .map_err(|e| format!("campaign failed: {e}"))?;
        cfg.workers = opts.workers.max(2);
        let second = harness::run_campaign::<f64>(&cfg, &path)
            .map_err(|e| format!("campaign rerun failed: {e}"))?;
        for (a, b) in first.iter().zip(&second) {
            if a.seed != b.seed || a.result_hex() != b.result_hex() || a.relerr_ulps != b.relerr_ulps {
                return Err(format!("rerun changed {} results", a.alg));
            }
        }
        Ok(first.len())
    })();
    let _ = std::fs::remove_file(&path);
    let records = outcome?;
    Ok(format!(
        "alignment, worker counts 1/2/4, and a {records}-record campaign rerun all bit-identical"
    ))
}
