//! Experiment driver: deterministic input generation, accuracy and timing
//! metrics, seed persistence, and campaign orchestration.
//!
//! Everything here is keyed by explicit 64-bit seeds so that a campaign
//! re-run from the same seed manifest reproduces every result bit pattern;
//! only wall-clock columns may differ.

use crate::oracle::{self, OracleError};
use crate::scalar::{AlgorithmId, RealArray};
use crate::{evaluate, Precision, Real};
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

pub mod rng {
    //! Counter-based pseudorandom generation.
    //!
    //! Each output word is a pure function of `(seed, index)`, so streams
    //! can be evaluated in any order or in parallel without changing a
    //! single bit, and a stored 64-bit seed reproduces the whole array.
    //! The word function is the splitmix64 finalizer over a golden-ratio
    //! counter; normal deviates come from the inverse normal CDF
    //! (Wichura's PPND16, accurate to roughly one double-precision ulp),
    //! so streams are bit-stable across platforms, unlike rejection-based
    //! samplers whose consumption pattern is data-dependent.

    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

    /// Word `i` of the stream identified by `seed`.
    #[inline]
    pub fn index_to_word(seed: u64, i: u64) -> u64 {
        mix(seed.wrapping_add(i.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    #[inline]
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Standard normal deviate for one word.
    #[inline]
    pub fn normal01(word: u64) -> f64 {
        ppnd16(<f64 as crate::Real>::unit_open(word))
    }

    /// Inverse of the standard normal CDF (quantile function) for
    /// 0 < p < 1, by Wichura's AS 241 rational approximation PPND16.
    pub fn ppnd16(p: f64) -> f64 {
        debug_assert!(p > 0.0 && p < 1.0);
        let q = p - 0.5;
        if q.abs() <= 0.425 {
            let r = 0.180625 - q * q;
            return q * poly7(&CENTRAL_NUM, r) / poly7(&CENTRAL_DEN, r);
        }
        let mut r = if q < 0.0 { p } else { 1.0 - p };
        r = (-r.ln()).sqrt();
        let x = if r <= 5.0 {
            r -= 1.6;
            poly7(&TAIL_NUM, r) / poly7(&TAIL_DEN, r)
        } else {
            r -= 5.0;
            poly7(&FAR_TAIL_NUM, r) / poly7(&FAR_TAIL_DEN, r)
        };
        if q < 0.0 {
            -x
        } else {
            x
        }
    }

    /// Degree-7 polynomial, coefficients from the highest power down.
    #[inline]
    fn poly7(c: &[f64; 8], r: f64) -> f64 {
        c[1..].iter().fold(c[0], |acc, k| acc * r + k)
    }

    // Coefficients as published; the extra digits are kept verbatim even
    // though they exceed double precision.
    #[allow(clippy::excessive_precision)]
    const CENTRAL_NUM: [f64; 8] = [
        2.5090809287301226727e+3,
        3.3430575583588128105e+4,
        6.7265770927008700853e+4,
        4.5921953931549871457e+4,
        1.3731693765509461125e+4,
        1.9715909503065514427e+3,
        1.3314166789178437745e+2,
        3.3871328727963666080e+0,
    ];
    #[allow(clippy::excessive_precision)]
    const CENTRAL_DEN: [f64; 8] = [
        5.2264952788528545610e+3,
        2.8729085735721942674e+4,
        3.9307895800092710610e+4,
        2.1213794301586595867e+4,
        5.3941960214247511077e+3,
        6.8718700749205790830e+2,
        4.2313330701600911252e+1,
        1.0,
    ];
    #[allow(clippy::excessive_precision)]
    const TAIL_NUM: [f64; 8] = [
        7.74545014278341407640e-4,
        2.27238449892691845833e-2,
        2.41780725177450611770e-1,
        1.27045825245236838258e+0,
        3.64784832476320460504e+0,
        5.76949722146069140550e+0,
        4.63033784615654529590e+0,
        1.42343711074968357734e+0,
    ];
    #[allow(clippy::excessive_precision)]
    const TAIL_DEN: [f64; 8] = [
        1.05075007164441684324e-9,
        5.47593808499534494600e-4,
        1.51986665636164571966e-2,
        1.48103976427480074590e-1,
        6.89767334985100004550e-1,
        1.67638483018380384940e+0,
        2.05319162663775882187e+0,
        1.0,
    ];
    #[allow(clippy::excessive_precision)]
    const FAR_TAIL_NUM: [f64; 8] = [
        2.01033439929228813265e-7,
        2.71155556874348757815e-5,
        1.24266094738807843860e-3,
        2.65321895265761230930e-2,
        2.96560571828504891230e-1,
        1.78482653991729133580e+0,
        5.46378491116411436990e+0,
        6.65790464350110377720e+0,
    ];
    #[allow(clippy::excessive_precision)]
    const FAR_TAIL_DEN: [f64; 8] = [
        2.04426310338993978564e-15,
        1.42151175831644588870e-7,
        1.84631831751005468180e-5,
        7.86869131145613259100e-4,
        1.48753612908506148525e-2,
        1.36929880922735805310e-1,
        5.99832206555887937690e-1,
        1.0,
    ];
}

/// Input distribution of a generated array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dist {
    /// Open-interval uniform (0, 1).
    Uniform01,
    /// Standard normal.
    Normal01,
}

impl Dist {
    pub const ALL: [Dist; 2] = [Dist::Uniform01, Dist::Normal01];
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dist::Uniform01 => "uniform01",
            Dist::Normal01 => "normal01",
        })
    }
}

impl FromStr for Dist {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform01" | "uniform" => Ok(Dist::Uniform01),
            "normal01" | "normal" => Ok(Dist::Normal01),
            other => Err(format!("unknown distribution `{other}` (expected uniform01 or normal01)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("reference norm must be positive and finite")]
    NonPositiveReference,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("seed manifest {}: {detail}", path.display())]
    Manifest { path: PathBuf, detail: String },
}

/// Deterministic array of `n` samples from `dist`, cache-line aligned.
pub fn gen_array<R: Real>(dist: Dist, n: usize, seed: u64) -> RealArray<R> {
    assert!(n >= 1, "gen_array needs at least one element");
    let mut arr = RealArray::zeroed(n);
    let dst = arr.as_mut_slice();
    match dist {
        Dist::Uniform01 => {
            for (i, slot) in dst.iter_mut().enumerate() {
                *slot = R::unit_open(rng::index_to_word(seed, i as u64));
            }
        }
        Dist::Normal01 => {
            // Deviates are computed in double and rounded once to the
            // working precision.
            for (i, slot) in dst.iter_mut().enumerate() {
                *slot = R::from_f64(rng::normal01(rng::index_to_word(seed, i as u64)));
            }
        }
    }
    arr
}

/// Relative error in units of the unit roundoff:
/// `|reference - result| / (reference * eps)`, evaluated in double.
pub fn relerr<R: Real>(result: R, reference: R, precision: Precision) -> Result<f64, HarnessError> {
    let r = reference.to_f64();
    if !reference.is_finite() || r <= 0.0 {
        return Err(HarnessError::NonPositiveReference);
    }
    Ok((r - result.to_f64()).abs() / (r * precision.unit_roundoff()))
}

/// Median wall time of `repeats` evaluations (upper middle for even counts)
/// and the computed norm. The result is routed through a black box so the
/// optimizer cannot elide the work, and every repeat must reproduce the
/// same bits.
pub fn time_algorithm<R: Real>(
    alg: AlgorithmId,
    x: &[R],
    repeats: u32,
    workers: usize,
) -> (f64, R) {
    assert!(repeats >= 1);
    let mut times = Vec::with_capacity(repeats as usize);
    let mut result: Option<R> = None;
    for _ in 0..repeats {
        let start = Instant::now();
        let r = std::hint::black_box(evaluate(alg, std::hint::black_box(x), workers));
        // Clamp to the clock quantum so durations stay positive.
        times.push(start.elapsed().as_secs_f64().max(1e-9));
        if let Some(prev) = result {
            debug_assert_eq!(prev.to_bits(), r.to_bits(), "{alg} repeat changed bits");
        }
        result = Some(r);
    }
    times.sort_by(f64::total_cmp);
    (times[times.len() / 2], result.expect("repeats >= 1"))
}

/// `(slowdown, speedup)` of an algorithm relative to the baseline:
/// `slowdown = m/l`, `speedup = l/m`.
pub fn speed_ratios(m_time: f64, l_time: f64) -> (f64, f64) {
    assert!(m_time > 0.0 && l_time > 0.0);
    (m_time / l_time, l_time / m_time)
}

/// Best-effort fresh 64-bit seed from the operating system.
pub fn os_seed() -> u64 {
    use std::io::Read;
    if let Ok(mut f) = fs::File::open("/dev/urandom") {
        let mut b = [0u8; 8];
        if f.read_exact(&mut b).is_ok() {
            return u64::from_le_bytes(b);
        }
    }
    // Fallback: hasher keys are randomized per instance.
    use std::hash::{BuildHasher, Hasher};
    let h = std::collections::hash_map::RandomState::new().build_hasher();
    let t = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.subsec_nanos() as u64)
        .unwrap_or(0);
    h.finish() ^ t.rotate_left(32)
}

/// Persisted `(run, distribution) -> seed` map.
///
/// Stored as a text file with one record per line, `t dist seed`, sorted by
/// run then distribution, with decimal 64-bit seeds.
#[derive(Clone, Debug, Default)]
pub struct SeedManifest {
    entries: BTreeMap<(u32, Dist), u64>,
}

impl SeedManifest {
    /// Load from `path`; a missing file is an empty manifest.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let err = |detail: String| HarnessError::Manifest { path: path.to_path_buf(), detail };
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let parse = |field: Option<&str>, what: &str| {
                field.map(str::to_owned).ok_or_else(|| err(format!("line {}: missing {what}", idx + 1)))
            };
            let t = parse(fields.next(), "run number")?
                .parse::<u32>()
                .map_err(|e| err(format!("line {}: bad run number: {e}", idx + 1)))?;
            let dist = parse(fields.next(), "distribution")?
                .parse::<Dist>()
                .map_err(|e| err(format!("line {}: {e}", idx + 1)))?;
            let seed = parse(fields.next(), "seed")?
                .parse::<u64>()
                .map_err(|e| err(format!("line {}: bad seed: {e}", idx + 1)))?;
            entries.insert((t, dist), seed);
        }
        Ok(SeedManifest { entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let mut text = String::new();
        for ((t, dist), seed) in &self.entries {
            text.push_str(&format!("{t} {dist} {seed}\n"));
        }
        fs::write(path, text).map_err(|e| HarnessError::Manifest {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }

    /// Seed for `(t, dist)`, drawing and recording a fresh one if absent.
    pub fn ensure(&mut self, t: u32, dist: Dist) -> u64 {
        *self.entries.entry((t, dist)).or_insert_with(os_seed)
    }

    pub fn get(&self, t: u32, dist: Dist) -> Option<u64> {
        self.entries.get(&(t, dist)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parameters of an accuracy or timing campaign.
#[derive(Clone, Debug)]
pub struct CampaignConfig {
    pub algorithms: Vec<AlgorithmId>,
    /// Number of runs `t = 1..=runs` per distribution.
    pub runs: u32,
    pub n: usize,
    pub dists: Vec<Dist>,
    pub workers: usize,
    pub timing_repeats: u32,
}

/// One (run, distribution, algorithm) measurement.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub t: u32,
    pub dist: Dist,
    pub alg: AlgorithmId,
    pub precision: Precision,
    pub n: usize,
    pub lanes: usize,
    pub seed: u64,
    pub seconds: f64,
    pub relerr_ulps: f64,
    pub result_bits: u64,
    /// Bit pattern of the correctly rounded oracle norm of the same input.
    pub reference_bits: u64,
}

impl RunRecord {
    /// Result bit pattern as fixed-width lowercase hex.
    pub fn result_hex(&self) -> String {
        match self.precision {
            Precision::Single => format!("{:08x}", self.result_bits as u32),
            Precision::Double => format!("{:016x}", self.result_bits),
        }
    }
}

/// Run every algorithm on every `(t, dist)` input, sharing one generated
/// array and one oracle norm per input. Seeds are loaded from (and new ones
/// persisted to) the manifest before any computation starts.
pub fn run_campaign<R: Real>(
    cfg: &CampaignConfig,
    manifest_path: &Path,
) -> Result<Vec<RunRecord>, HarnessError> {
    assert!(cfg.runs >= 1 && cfg.n >= 1);
    let mut manifest = SeedManifest::load(manifest_path)?;
    for t in 1..=cfg.runs {
        for &dist in &cfg.dists {
            manifest.ensure(t, dist);
        }
    }
    manifest.save(manifest_path)?;

    let mut records = Vec::with_capacity(cfg.runs as usize * cfg.dists.len() * cfg.algorithms.len());
    for t in 1..=cfg.runs {
        for &dist in &cfg.dists {
            let seed = manifest.get(t, dist).expect("seed was just ensured");
            let x = gen_array::<R>(dist, cfg.n, seed);
            let reference = oracle::oracle_norm(&x)?;
            for &alg in &cfg.algorithms {
                let (seconds, result) = time_algorithm(alg, &x, cfg.timing_repeats, cfg.workers);
                let relerr_ulps = relerr(result, reference, R::PRECISION)?;
                records.push(RunRecord {
                    t,
                    dist,
                    alg,
                    precision: R::PRECISION,
                    n: cfg.n,
                    lanes: alg.lanes(R::PRECISION),
                    seed,
                    seconds,
                    relerr_ulps,
                    result_bits: result.bits_u64(),
                    reference_bits: reference.bits_u64(),
                });
            }
        }
    }
    Ok(records)
}
