mod common;

use std::collections::HashSet;

use effortcast_core::dataset::{
    count_missing, split, stratify_by_completeness, CompletenessTier, DatasetError, Schema, SplitSpec,
};
use proptest::prelude::*;

fn tier(m: usize) -> CompletenessTier {
    CompletenessTier::new(m, &Schema::isbsg()).unwrap()
}

fn ids(ds: &effortcast_core::Dataset) -> Vec<String> {
    ds.ids().map(str::to_string).collect()
}

#[test]
fn planted_tiers_have_exact_sizes() {
    let ds = common::synthetic_100();
    let planted = common::planted_blank_counts();
    let names: Vec<&str> = ds.schema().names().collect();
    for (r, &p) in ds.records().iter().zip(&planted) {
        assert_eq!(count_missing(ds.schema(), r, &names).unwrap(), p);
    }
    assert_eq!(stratify_by_completeness(&ds, tier(0)).unwrap().len(), 10);
    assert_eq!(stratify_by_completeness(&ds, tier(3)).unwrap().len(), 60);
    assert_eq!(stratify_by_completeness(&ds, tier(5)).unwrap().len(), 85);
    assert_eq!(stratify_by_completeness(&ds, tier(10)).unwrap().len(), 100);
    for m in 0..=10 {
        let expected = planted.iter().filter(|&&p| p <= m).count();
        assert_eq!(stratify_by_completeness(&ds, tier(m)).unwrap().len(), expected);
    }
}

#[test]
fn tiers_are_nested_and_idempotent() {
    let ds = common::synthetic_100();
    for m in 0..10 {
        let small: HashSet<String> = ids(&stratify_by_completeness(&ds, tier(m)).unwrap()).into_iter().collect();
        let big: HashSet<String> = ids(&stratify_by_completeness(&ds, tier(m + 1)).unwrap()).into_iter().collect();
        assert!(small.is_subset(&big), "tier {m} not inside tier {}", m + 1);
        let once = stratify_by_completeness(&ds, tier(m)).unwrap();
        assert_eq!(stratify_by_completeness(&once, tier(m)).unwrap(), once);
    }
    assert!(matches!(
        CompletenessTier::new(11, &Schema::isbsg()),
        Err(DatasetError::InvalidTier { .. })
    ));
}

#[test]
fn global_split_80_10_10() {
    let ds = common::synthetic_100();
    let s = split(&ds, &SplitSpec::new(0.8, 0.1, 0.1, 7).unwrap()).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (80, 10, 10));
    let again = split(&ds, &SplitSpec::new(0.8, 0.1, 0.1, 7).unwrap()).unwrap();
    assert_eq!(s, again);
    let other = split(&ds, &SplitSpec::new(0.8, 0.1, 0.1, 8).unwrap()).unwrap();
    assert_ne!(ids(&s.train), ids(&other.train));
}

#[test]
fn pinned_tier_of_228_splits_in_half() {
    // 228 complete records inside 1140, so the global 10% test quota is 114.
    let ds = common::tiered(1140, 228);
    let spec = SplitSpec::new(0.8, 0.1, 0.1, 3).unwrap().pinned(tier(0), 0.5).unwrap();
    let s = split(&ds, &spec).unwrap();
    let in_tier = |d: &effortcast_core::Dataset| {
        d.records().iter().filter(|r| r.id.as_str() < "T00228").count()
    };
    assert_eq!(in_tier(&s.train), 114);
    assert_eq!(in_tier(&s.test), 114);
    assert_eq!(in_tier(&s.val), 0);
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (912, 114, 114));
    assert_eq!(s, split(&ds, &spec).unwrap());

    // The tier alone with no validation share.
    let only = common::tiered(228, 228);
    let spec = SplitSpec::new(0.5, 0.0, 0.5, 3).unwrap().pinned(tier(0), 0.5).unwrap();
    let s = split(&only, &spec).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (114, 0, 114));
}

#[test]
fn pinned_tier_too_large_is_rejected() {
    let ds = common::tiered(100, 60);
    let spec = SplitSpec::new(0.8, 0.1, 0.1, 1).unwrap().pinned(tier(0), 0.5).unwrap();
    assert!(matches!(split(&ds, &spec), Err(DatasetError::PinnedTierLargerThanSplit { .. })));
}

#[test]
fn bad_fractions_rejected() {
    assert!(SplitSpec::new(0.8, 0.1, 0.2, 0).is_err());
    assert!(SplitSpec::new(1.2, -0.1, -0.1, 0).is_err());
}

proptest! {
    #[test]
    fn split_partitions(n in 1usize..300, train in 0.0..1.0f64, val_share in 0.0..1.0f64, seed in any::<u64>()) {
        let val = (1.0 - train) * val_share;
        let test = 1.0 - train - val;
        let ds = common::tiered(n, 0);
        let s = split(&ds, &SplitSpec::new(train, val, test, seed).unwrap()).unwrap();
        prop_assert_eq!(s.train.len() + s.val.len() + s.test.len(), n);
        prop_assert_eq!(s.train.len(), ((n as f64) * train + 1e-9).floor() as usize);
        let mut all: Vec<String> = ids(&s.train);
        all.extend(ids(&s.val));
        all.extend(ids(&s.test));
        let unique: HashSet<&String> = all.iter().collect();
        prop_assert_eq!(unique.len(), n);
        let again = split(&ds, &SplitSpec::new(train, val, test, seed).unwrap()).unwrap();
        prop_assert_eq!(s, again);
    }

    #[test]
    fn stratify_monotone(m in 0usize..10) {
        let ds = common::synthetic_100();
        let a = stratify_by_completeness(&ds, tier(m)).unwrap().len();
        let b = stratify_by_completeness(&ds, tier(m + 1)).unwrap().len();
        prop_assert!(a <= b);
    }
}
