use bell_core::data::{
    canonicalize, chsh_all_signs, flatten, load_embedded, BellDataset, CanonicalTransform, Sign, EMBEDDED_NAMES,
};
use proptest::prelude::*;

fn sign(b: bool) -> Sign {
    if b {
        Sign::Minus
    } else {
        Sign::Plus
    }
}

fn transform(code: u32) -> CanonicalTransform {
    CanonicalTransform {
        alice_flip: [sign(code & 1 != 0), sign(code & 2 != 0)],
        bob_flip: [sign(code & 4 != 0), sign(code & 8 != 0)],
        alice_setting_swap: code & 16 != 0,
        bob_setting_swap: code & 32 != 0,
        tie: false,
    }
}

fn sorted(mut v: [f64; 8]) -> [f64; 8] {
    v.sort_by(f64::total_cmp);
    v
}

fn dataset() -> impl Strategy<Value = BellDataset> {
    proptest::array::uniform4(proptest::array::uniform4(0u64..60))
        .prop_filter("every table needs trials", |rows| rows.iter().all(|r| r.iter().sum::<u64>() > 0))
        .prop_map(|rows| BellDataset::from_cells("prop", rows))
}

proptest! {
    #[test]
    fn chsh_multiset_invariant_under_relabelling(ds in dataset(), code in 0u32..64) {
        let before = sorted(chsh_all_signs(&ds).unwrap());
        let after = sorted(chsh_all_signs(&transform(code).apply(&ds)).unwrap());
        for (a, b) in before.iter().zip(after) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn canonicalize_is_idempotent(ds in dataset()) {
        let (once, t1) = canonicalize(&ds).unwrap();
        let (_, t2) = canonicalize(&once).unwrap();
        prop_assert!(t2.is_identity());
        let max = chsh_all_signs(&ds).unwrap().into_iter().fold(f64::MIN, f64::max);
        let canon = chsh_all_signs(&once).unwrap()[0];
        prop_assert!((max - canon).abs() < 1e-12, "{} vs {}", max, canon);
        let mut back = t1.inverse().apply(&once);
        back.canonical = ds.canonical;
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn transform_inverse_round_trips(ds in dataset(), code in 0u32..64) {
        let t = transform(code);
        let mut back = t.inverse().apply(&t.apply(&ds));
        back.canonical = ds.canonical;
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn flatten_blocks_sum_to_one(ds in dataset()) {
        let fv = flatten(&ds).unwrap();
        for i in 0..4 {
            prop_assert!((fv.block(i).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(fv.block(i).iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }
}

#[test]
fn every_experiment_violates_chsh() {
    for name in EMBEDDED_NAMES {
        let v = chsh_all_signs(&load_embedded(name).unwrap()).unwrap();
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max > 2.0, "{name}: {max}");
        assert_eq!(v.iter().filter(|&&x| x > 2.0).count(), 1, "{name}");
    }
}

#[test]
fn embedded_datasets_are_already_canonical() {
    for name in EMBEDDED_NAMES {
        let (_, t) = canonicalize(&load_embedded(name).unwrap()).unwrap();
        assert!(t.is_identity(), "{name}: {t:?}");
    }
}

#[test]
fn alice_double_flip_is_undone() {
    let ds = load_embedded("delft").unwrap();
    let flipped = transform(0b11).apply(&ds);
    let (canon, t) = canonicalize(&flipped).unwrap();
    assert_eq!(t.alice_flip, [Sign::Minus; 2]);
    let s = chsh_all_signs(&canon).unwrap()[0];
    assert!((s - 2.4225).abs() < 1e-4);
}

#[test]
fn bob_setting_two_flip_permutes_values() {
    let ds = load_embedded("delft").unwrap();
    let before = chsh_all_signs(&ds).unwrap();
    let after = chsh_all_signs(&transform(0b1000).apply(&ds)).unwrap();
    assert_ne!(before, after);
    for (a, b) in sorted(before).iter().zip(sorted(after)) {
        assert!((a - b).abs() < 1e-12);
    }
}
