use gradcodec::bitio::{subset_rank, subset_unrank, BitString, Container};
use gradcodec::bounds::{beta_at, dsd_predicted_bits, tau_star, up_lower_bound};
use gradcodec::compressors::{compress, decompress, dsd_levels, sd_bit_count, OperatorConfig};
use gradcodec::data::{parse_libsvm, Dataset};
use nalgebra::DMatrix;
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Field {
    Bit(bool),
    Fixed(u64, u32),
    Unary(u64),
    Rice(u64, u32),
    Gamma(u64),
}

fn field() -> impl Strategy<Value = Field> {
    prop_oneof![
        any::<bool>().prop_map(Field::Bit),
        (1u32..=64)
            .prop_flat_map(|w| {
                let max = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
                (0..=max, Just(w))
            })
            .prop_map(|(v, w)| Field::Fixed(v, w)),
        (1u64..200).prop_map(Field::Unary),
        (0u64..100_000, 0u32..20).prop_map(|(v, m)| Field::Rice(v, m)),
        (1u64..u64::MAX / 2).prop_map(Field::Gamma),
    ]
}

/// Gaussian-like entries with a wide dynamic range and some exact zeros.
fn vector(min_d: usize, max_d: usize) -> impl Strategy<Value = Vec<f64>> {
    (min_d..=max_d, -6i32..6).prop_flat_map(|(d, e)| {
        prop::collection::vec(
            prop_oneof![1 => Just(0.0), 6 => (-1.0f64..1.0).prop_map(move |v| v * 10f64.powi(e))],
            d,
        )
    })
}

fn nonzero(x: &[f64]) -> bool {
    x.iter().any(|v| *v != 0.0)
}

fn configs(d: usize) -> Vec<OperatorConfig> {
    let k = (d / 3).max(1);
    let mut out = vec![
        OperatorConfig::identity(),
        OperatorConfig::dsd(0.3),
        OperatorConfig::rsd(0.3),
        OperatorConfig::rsd(0.5).wrapped(0.5),
        OperatorConfig::topk(k),
        OperatorConfig::rand_sparse(k),
        OperatorConfig::std_dither(3),
        OperatorConfig::ternary(),
        OperatorConfig::natural(),
    ];
    if d >= 2 {
        out.push(OperatorConfig::sc(1.0 - 1.0 / d as f64));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bit_fields_round_trip(fields in prop::collection::vec(field(), 0..40)) {
        let mut bits = BitString::new();
        for f in &fields {
            match *f {
                Field::Bit(b) => bits.push_bit(b),
                Field::Fixed(v, w) => bits.push_fixed(v, w).unwrap(),
                Field::Unary(v) => bits.push_unary(v).unwrap(),
                Field::Rice(v, m) => bits.push_golomb_rice(v, m).unwrap(),
                Field::Gamma(v) => bits.push_elias_gamma(v).unwrap(),
            }
        }
        let mut cur = bits.cursor();
        for f in &fields {
            match *f {
                Field::Bit(b) => prop_assert_eq!(cur.read_bit().unwrap(), b),
                Field::Fixed(v, w) => prop_assert_eq!(cur.read_fixed(w).unwrap(), v),
                Field::Unary(v) => prop_assert_eq!(cur.read_unary().unwrap(), v),
                Field::Rice(v, m) => prop_assert_eq!(cur.read_golomb_rice(m).unwrap(), v),
                Field::Gamma(v) => prop_assert_eq!(cur.read_elias_gamma().unwrap(), v),
            }
        }
        prop_assert!(cur.is_exhausted());
        prop_assert!(cur.read_bit().is_err());
    }

    #[test]
    fn container_round_trip(bits in prop::collection::vec(any::<bool>(), 0..300), tag in 0u8..10, dim in any::<u32>()) {
        let mut payload = BitString::new();
        bits.iter().for_each(|b| payload.push_bit(*b));
        let c = Container { tag, dim, payload };
        prop_assert_eq!(Container::from_bytes(&c.to_bytes().unwrap()).unwrap(), c);
    }

    #[test]
    fn subset_rank_is_a_bijection(mask in prop::collection::vec(any::<bool>(), 1..80)) {
        let d = mask.len();
        let positions: Vec<usize> = (0..d).filter(|i| mask[*i]).collect();
        let rank = subset_rank(&positions, d).unwrap();
        prop_assert_eq!(subset_unrank(&rank, d, positions.len()).unwrap(), positions);
    }

    #[test]
    fn every_operator_round_trips(x in vector(1, 48), message in 0u64..1000, seed in any::<u64>()) {
        for base in configs(x.len()) {
            let config = base.with_seed(seed);
            let enc = compress(&config, &x, message).unwrap();
            prop_assert_eq!(enc.payload.len(), enc.outcome.bits);
            let dec = decompress(&config, &enc.payload, x.len(), message).unwrap();
            let same = dec.iter().zip(&enc.outcome.reconstructed).all(|(a, b)| a.to_bits() == b.to_bits());
            prop_assert!(same, "{} differs", config.label());
        }
    }

    #[test]
    fn deterministic_dithering_contracts_and_counts_bits(x in vector(1, 200), nu in 0.01f64..2.0) {
        let enc = compress(&OperatorConfig::dsd(nu), &x, 0).unwrap();
        prop_assert!(enc.outcome.distortion <= nu.min(1.0) * (1.0 + 1e-9));
        let levels = dsd_levels(&x, nu);
        let n0 = levels.iter().filter(|k| **k == 0).count();
        let sum: u64 = levels.iter().sum();
        let expected = if nonzero(&x) { sd_bit_count(x.len(), n0, sum) } else { enc.outcome.bits };
        prop_assert_eq!(enc.outcome.bits, expected);
        prop_assert!(enc.outcome.bits as f64 <= dsd_predicted_bits(nu.min(1.0), x.len()).unwrap() + 2.0);
    }

    #[test]
    fn power_of_two_scaling_commutes(x in vector(1, 40), j in -20i32..20, seed in any::<u64>()) {
        let c = 2f64.powi(j);
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let d = x.len();
        for base in [
            OperatorConfig::identity(),
            OperatorConfig::dsd(0.2),
            OperatorConfig::rsd(0.2),
            OperatorConfig::topk((d / 2).max(1)),
            OperatorConfig::std_dither(4),
            OperatorConfig::ternary(),
        ] {
            let config = base.with_seed(seed);
            let a = compress(&config, &x, 3).unwrap().outcome.reconstructed;
            let b = compress(&config, &scaled, 3).unwrap().outcome.reconstructed;
            let same = a.iter().zip(&b).all(|(u, v)| (u * c).to_bits() == v.to_bits());
            prop_assert!(same, "{} is not scale invariant", config.label());
        }
    }

    #[test]
    fn spherical_compression_contracts_strictly(x in vector(2, 6), alpha in 0.4f64..0.95, seed in any::<u64>()) {
        prop_assume!(nonzero(&x));
        let enc = compress(&OperatorConfig::sc(alpha).with_seed(seed), &x, 1).unwrap();
        prop_assert!(enc.outcome.distortion < alpha);
        prop_assert!(enc.trials.unwrap() >= 1);
    }

    #[test]
    fn libsvm_text_round_trips(rows in 1usize..12, cols in 1usize..8, seed in any::<u64>()) {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        };
        let features = DMatrix::from_fn(rows, cols, |_, _| { let v = next(); if v.abs() < 0.15 { 0.0 } else { v * 1e3 } });
        let labels: Vec<f64> = (0..rows).map(|_| if next() > 0.0 { 1.0 } else { -1.0 }).collect();
        let ds = Dataset { name: "p".into(), source: "generated".into(), features, labels, scaled: false };
        let back = parse_libsvm(&ds.to_libsvm(), "p").unwrap();
        prop_assert_eq!(back.labels, ds.labels);
        prop_assert_eq!(back.features, ds.features);
    }

    #[test]
    fn worst_case_bound_decreases_in_alpha(a in 0.001f64..0.999, b in 0.001f64..0.999, d in 1usize..5000) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(up_lower_bound(lo, d).unwrap() >= up_lower_bound(hi, d).unwrap());
    }

    #[test]
    fn tau_star_is_the_worst_case(nu in 0.01f64..1.0, tau in 0.0f64..1.0) {
        let t = tau_star(nu).unwrap();
        prop_assert!(beta_at(t, nu) >= beta_at(tau, nu) - 1e-12);
    }
}
