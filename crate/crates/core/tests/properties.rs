mod common;

use std::sync::OnceLock;

use proptest::prelude::*;

use ttimatch::harness::{parse_csv, points_to_csv};
use ttimatch::matching::min_weight_perfect_matching;
use ttimatch::{build_decoder, BitVector, Catalog, CodeEntry, CokerBasisData, CssCode, DecoderKind, DecoderParams, PointRecord};

struct Prepared {
    entry: CodeEntry,
    code: CssCode,
    data: CokerBasisData,
}

fn prepared(name: &str) -> &'static Prepared {
    static CACHE: OnceLock<Vec<Prepared>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        let cat = Catalog::builtin();
        ["gross", "toric-5", "color-8"]
            .iter()
            .map(|n| {
                let entry = cat.get(n).unwrap().clone();
                let code = entry.build().unwrap();
                let data = CokerBasisData::for_entry(&entry, &code).unwrap();
                Prepared { entry, code, data }
            })
            .collect()
    });
    all.iter().find(|p| p.entry.name == name).unwrap()
}

fn error_on(n: usize, qubits: &[usize]) -> BitVector {
    let mut e = BitVector::zeros(n);
    for &q in qubits {
        e.flip(q % n);
    }
    e
}

fn code_name() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("gross"), Just("toric-5"), Just("color-8")]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn physical_syndromes_carry_even_type_counts(name in code_name(), qs in prop::collection::vec(0usize..10_000, 0..20)) {
        let p = prepared(name);
        let e = error_on(p.code.n(), &qs);
        let s = common::syndrome(p.code.hx(), &e);
        prop_assert_eq!(p.data.decompose(&s), 0);
    }

    #[test]
    fn decompose_check_is_linear(name in code_name(), a in prop::collection::vec(any::<bool>(), 288), b in prop::collection::vec(any::<bool>(), 288)) {
        let p = prepared(name);
        let m = p.code.num_checks();
        let a = BitVector::from_bools(&a[..m]);
        let b = BitVector::from_bools(&b[..m]);
        let lhs = p.data.decompose_check(&a.xor(&b).unwrap()).unwrap();
        let rhs = p.data.decompose_check(&a).unwrap().xor(&p.data.decompose_check(&b).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn dictionary_matches_the_linear_map(name in code_name(), c in 0usize..10_000) {
        let p = prepared(name);
        let c = c % p.code.num_checks();
        let unit = error_on(p.code.num_checks(), &[c]);
        let u = p.data.decompose_check(&unit).unwrap();
        let bits: u64 = u.ones_iter().fold(0, |acc, i| acc | 1 << i);
        prop_assert_eq!(p.data.dictionary[c], bits);
    }

    #[test]
    fn syndromes_commute_with_translations(name in code_name(), qs in prop::collection::vec(0usize..10_000, 0..12), dx in -13i64..13, dy in -13i64..13) {
        let p = prepared(name);
        let e = error_on(p.code.n(), &qs);
        let moved = p.code.translate_error(&e, dx, dy);
        let lhs = common::syndrome(p.code.hx(), &moved);
        let rhs = p.code.lattice().translate_vector(&common::syndrome(p.code.hx(), &e), dx, dy);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn cell_and_osd_corrections_reproduce_the_syndrome(
        name in prop_oneof![Just("toric-5"), Just("color-8"), Just("gross")],
        qs in prop::collection::vec(0usize..10_000, 0..16),
    ) {
        let p = prepared(name);
        let kind = if name == "gross" { DecoderKind::BpOsd } else { DecoderKind::Cell };
        let dec = build_decoder(kind, &p.entry, &p.code, Some(&p.data), &DecoderParams::small(), 0.05).unwrap();
        let e = error_on(p.code.n(), &qs);
        let s = common::syndrome(p.code.hx(), &e);
        let out = dec.decode(&s).unwrap();
        let c = out.correction.expect("these decoders always return a correction");
        prop_assert_eq!(common::syndrome(p.code.hx(), &c), s);
    }

    #[test]
    fn toric_cell_decoder_corrects_light_errors(a in 0usize..50, b in 0usize..50) {
        let p = prepared("toric-5");
        let dec = build_decoder(DecoderKind::Cell, &p.entry, &p.code, None, &DecoderParams::small(), 0.05).unwrap();
        let e = error_on(p.code.n(), &[a, b]);
        let s = common::syndrome(p.code.hx(), &e);
        let c = dec.decode(&s).unwrap().correction.unwrap();
        prop_assert!(!common::is_logical(&p.code, &c.xor(&e).unwrap()));
    }

    #[test]
    fn matching_is_optimal(n in prop_oneof![Just(2usize), Just(4), Just(6), Just(8)], w in prop::collection::vec(1i64..=20, 28)) {
        let weight = |a: usize, b: usize| {
            let (a, b) = (a.min(b), a.max(b));
            w[b * (b - 1) / 2 + a]
        };
        let pairs = min_weight_perfect_matching(n, weight).unwrap();
        prop_assert_eq!(pairs.len(), n / 2);
        let total: i64 = pairs.iter().map(|&(a, b)| weight(a, b)).sum();
        prop_assert_eq!(total, common::brute_mwpm(n, &weight));
    }

    #[test]
    fn csv_round_trips(rows in prop::collection::vec((0.0f64..1.0, 1u64..1_000_000, 0u64..1000), 1..8)) {
        let points: Vec<PointRecord> = rows.iter().map(|&(p, t, f)| PointRecord::new(p, t, f.min(t))).collect();
        let text = points_to_csv(&points).unwrap();
        prop_assert_eq!(parse_csv(&text).unwrap(), points);
    }
}
