mod common;

use effortcast_core::correlate::{pearson, rank_features, Correlation};
use proptest::prelude::*;

/// Textbook form: cov / (sd_x * sd_y), all in two passes.
fn oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
    let sx = (xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / n).sqrt();
    cov / (sx * sy)
}

#[test]
fn hand_computed_value() {
    let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[2.0, 2.0, 3.0, 5.0]).unwrap();
    approx::assert_abs_diff_eq!(r.value().unwrap(), 0.9128709291752769, epsilon = 1e-12);
}

#[test]
fn constant_input_is_undefined() {
    assert_eq!(pearson(&[3.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), Correlation::Undefined);
}

#[test]
fn ranking_puts_strongest_first() {
    // Target is 50 + 20*size + 35*team with size spanning more range.
    let ds = common::small_numeric(60);
    let report = rank_features(&ds, "effort", 3).unwrap();
    assert_eq!(report.entries.len(), 3);
    assert_eq!(report.entries[0].feature, "size");
    for w in report.entries.windows(2) {
        assert!(w[0].r.abs().unwrap_or(-1.0) >= w[1].r.abs().unwrap_or(-1.0));
    }
    assert!(report.to_csv().starts_with("feature,r,n_pairs\n"));
}

fn paired() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 3..80)
}

proptest! {
    #[test]
    fn matches_textbook_oracle(v in paired()) {
        let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        if let Correlation::Defined(r) = pearson(&x, &y).unwrap() {
            let o = oracle(&x, &y);
            prop_assert!((r - o.clamp(-1.0, 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric(v in paired()) {
        let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        prop_assert_eq!(pearson(&x, &y).unwrap(), pearson(&y, &x).unwrap());
    }

    #[test]
    fn affine_invariant(v in paired(), a in 0.1..10.0f64, b in -100.0..100.0f64, flip in any::<bool>()) {
        let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        let s = if flip { -a } else { a };
        let x2: Vec<f64> = x.iter().map(|v| s * v + b).collect();
        match (pearson(&x, &y).unwrap(), pearson(&x2, &y).unwrap()) {
            (Correlation::Defined(r1), Correlation::Defined(r2)) => {
                let expect = if flip { -r1 } else { r1 };
                prop_assert!((r2 - expect).abs() < 1e-7);
            }
            (Correlation::Undefined, Correlation::Undefined) => {}
            (p, q) => prop_assert!(false, "defined-ness changed: {:?} vs {:?}", p, q),
        }
    }
}
