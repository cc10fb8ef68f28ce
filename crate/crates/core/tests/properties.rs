//! Property tests of the cross-cutting invariants: correct rounding against
//! the exact oracle, permutation invariance of exact accumulation, kernel
//! symmetries, lane-subsequence equivalence, alignment independence, exact
//! power-of-two scale equivariance, and bound monotonicity.

use fnorm::bounds;
use fnorm::harness::Dist;
use fnorm::kernels::{self, HypotKind};
use fnorm::oracle;
use fnorm::scalar::{self, AlgorithmId};
use fnorm::vector::{self, Reduce};
use fnorm::{evaluate, Precision, Real, RealArray};
use proptest::prelude::*;

/// Any word, forced finite: an all-ones exponent field has one bit cleared.
fn finite_f64(word: u64) -> f64 {
    let bits = if word >> 52 & 0x7ff == 0x7ff { word & !(1 << 62) } else { word };
    f64::from_bits(bits)
}

fn finite_f32(word: u32) -> f32 {
    let bits = if word >> 23 & 0xff == 0xff { word & !(1 << 30) } else { word };
    f32::from_bits(bits)
}

/// Signed unit-interval value times a power of two in [-20, 20]: the
/// mixed-magnitude regime the norm algorithms are built for, away from the
/// rescale thresholds.
fn banded_value() -> impl Strategy<Value = f64> {
    (any::<u64>(), -20i32..=20).prop_map(|(w, k)| {
        let v = <f64 as Real>::unit_open(w) * <f64 as Real>::pow2(k);
        if w & 1 == 1 {
            -v
        } else {
            v
        }
    })
}

proptest! {
    #[test]
    fn cr_hypot_matches_the_oracle_in_double(
        x in any::<u64>().prop_map(finite_f64),
        y in any::<u64>().prop_map(finite_f64),
    ) {
        prop_assert_eq!(
            kernels::cr_hypot(x, y).to_bits(),
            oracle::oracle_hypot(x, y).to_bits()
        );
    }

    #[test]
    fn cr_hypot_matches_the_oracle_in_single(
        x in any::<u32>().prop_map(finite_f32),
        y in any::<u32>().prop_map(finite_f32),
    ) {
        prop_assert_eq!(
            kernels::cr_hypot(x, y).to_bits(),
            oracle::oracle_hypot(x, y).to_bits()
        );
    }

    /// Both kernels look only at |x| and |y| and sort internally, so every
    /// argument order and sign combination must give identical bits.
    #[test]
    fn hypot_kernels_are_symmetric_and_sign_blind(
        x in any::<u64>().prop_map(finite_f64),
        y in any::<u64>().prop_map(finite_f64),
    ) {
        let cr = kernels::cr_hypot(x, y).to_bits();
        let bf = kernels::v1_hypot(x, y).to_bits();
        for (a, b) in [(y, x), (-x, y), (x, -y), (-y, -x)] {
            prop_assert_eq!(kernels::cr_hypot(a, b).to_bits(), cr);
            prop_assert_eq!(kernels::v1_hypot(a, b).to_bits(), bf);
        }
    }

    /// The oracle accumulates squares exactly, so element order cannot
    /// change its result.
    #[test]
    fn oracle_norm_is_permutation_invariant(
        (original, shuffled) in proptest::collection::vec(any::<u64>().prop_map(finite_f64), 1..64)
            .prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle())),
    ) {
        prop_assert_eq!(
            oracle::oracle_norm(&original).unwrap().to_bits(),
            oracle::oracle_norm(&shuffled).unwrap().to_bits()
        );
    }

    #[test]
    fn lanes_compute_their_subsequence_norms(
        data in proptest::collection::vec(banded_value(), 1..=200),
        p in prop::sample::select(vec![2usize, 4, 8]),
    ) {
        let arr = RealArray::from_slice(&data);
        let lanes: Vec<f64> = match p {
            2 => vector::vnorm_recursive::<f64, 2>(&arr, true).lanes().to_vec(),
            4 => vector::vnorm_recursive::<f64, 4>(&arr, true).lanes().to_vec(),
            _ => vector::vnorm_recursive::<f64, 8>(&arr, true).lanes().to_vec(),
        };
        for (l, got) in lanes.iter().enumerate() {
            let want = vector::lane_reference_norm(&arr, l, p);
            prop_assert_eq!(got.to_bits(), want.to_bits(), "lane {} of {}", l, p);
        }
    }

    #[test]
    fn results_are_alignment_independent(
        data in proptest::collection::vec(banded_value(), 1..=200),
        offset in 1usize..=7,
        p in prop::sample::select(vec![2usize, 4, 8]),
        tree in any::<bool>(),
    ) {
        let aligned = RealArray::from_slice(&data);
        let shifted = RealArray::with_offset(&data, offset);
        let reduce = if tree { Reduce::Tree } else { Reduce::Scalar };
        prop_assert_eq!(
            vector::nrmf(&aligned, p, reduce, 1).to_bits(),
            vector::nrmf(&shifted, p, reduce, 1).to_bits()
        );
    }

    /// Scaling the input by 2^k scales every intermediate exactly (no
    /// element leaves the accumulation thresholds in this regime), so the
    /// result scales exactly too. The native kernel B is exempt: its
    /// rounding behavior is implementation-defined.
    #[test]
    fn norms_scale_exactly_by_powers_of_two(
        data in proptest::collection::vec(
            any::<u64>().prop_map(<f64 as Real>::unit_open), 1..=128),
        k in -8i32..=8,
        alg in prop::sample::select(vec![
            AlgorithmId::L, AlgorithmId::C, AlgorithmId::A, AlgorithmId::H,
            AlgorithmId::X, AlgorithmId::Y, AlgorithmId::Z,
        ]),
    ) {
        let factor = <f64 as Real>::pow2(k);
        let scaled_data: Vec<f64> = data.iter().map(|&v| v * factor).collect();
        let base = RealArray::from_slice(&data);
        let scaled = RealArray::from_slice(&scaled_data);
        let r0 = evaluate(alg, &base, 1);
        let r1 = evaluate(alg, &scaled, 1);
        prop_assert_eq!(r1.to_bits(), (r0 * factor).to_bits());
    }

    #[test]
    fn complex_norms_equal_their_flat_real_view(
        pairs in proptest::collection::vec((banded_value(), banded_value()), 1..=64),
        alg in prop::sample::select(AlgorithmId::ALL.to_vec()),
    ) {
        let z: Vec<[f64; 2]> = pairs.iter().map(|&(re, im)| [re, im]).collect();
        let flat: Vec<f64> = pairs.iter().flat_map(|&(re, im)| [re, im]).collect();
        prop_assert_eq!(
            scalar::norm_complex(&z, alg, 1).to_bits(),
            evaluate(alg, &RealArray::from_slice(&flat), 1).to_bits()
        );
    }

    /// The recursive bound depends on n only through the split-tree depth,
    /// so it is nondecreasing in n, and the branch-free kernel's wider
    /// envelope can only push it up.
    #[test]
    fn recursive_bounds_are_monotone(a in 1u64..=4096, b in 1u64..=4096) {
        let eps = bounds::eps_for(Precision::Double, 256);
        let (_, bf_up) = bounds::hypot_eps_envelope(HypotKind::BranchFree, &eps).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let ub_lo = bounds::bounds_r(lo, &eps, &eps).ub_relerr().to_f64();
        let ub_hi = bounds::bounds_r(hi, &eps, &eps).ub_relerr().to_f64();
        prop_assert!(ub_lo >= 0.0);
        prop_assert!(ub_lo <= ub_hi, "ub({}) = {} > ub({}) = {}", lo, ub_lo, hi, ub_hi);
        let bf_hi = bounds::bounds_r(hi, &eps, &bf_up).ub_relerr().to_f64();
        prop_assert!(ub_hi <= bf_hi, "cr bound above bf bound at n = {}", hi);
        prop_assert!(bounds::bounds_r(hi, &eps, &eps).lb_relerr().to_f64() >= 0.0);
    }
}

#[test]
fn labels_round_trip_through_parse_and_display() {
    for alg in AlgorithmId::ALL {
        assert_eq!(alg.to_string().parse::<AlgorithmId>().unwrap(), alg);
    }
    for dist in [Dist::Uniform01, Dist::Normal01] {
        assert_eq!(dist.to_string().parse::<Dist>().unwrap(), dist);
    }
    for prec in [Precision::Single, Precision::Double] {
        assert_eq!(prec.to_string().parse::<Precision>().unwrap(), prec);
    }
    for reduce in [Reduce::Scalar, Reduce::Tree] {
        let label = match reduce {
            Reduce::Scalar => "scalar",
            Reduce::Tree => "tree",
        };
        assert_eq!(label.parse::<Reduce>().unwrap(), reduce);
    }
}
