use fgm_ml::ScalerParams;
use proptest::prelude::*;

fn table() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..5)
        .prop_flat_map(|w| prop::collection::vec(prop::collection::vec(-1e3f64..1e3, w), 1..40))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn scaling_round_trips(rows in table()) {
        let p = ScalerParams::fit(&rows).unwrap();
        for r in &rows {
            let s = p.apply(r);
            prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
            let back = p.invert(&s);
            for (a, b) in back.iter().zip(r) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn column_extremes_map_to_unit_interval_ends(rows in table()) {
        let p = ScalerParams::fit(&rows).unwrap();
        for c in 0..p.width() {
            let (lo, hi) = (p.min[c], p.max[c]);
            prop_assert!(hi >= lo);
            if hi > lo {
                prop_assert_eq!(p.scale(c, lo), 0.0);
                prop_assert_eq!(p.scale(c, hi), 1.0);
            } else {
                prop_assert_eq!(p.scale(c, lo), 0.5);
            }
        }
    }
}

#[test]
fn chi_range_endpoints() {
    let rows: Vec<Vec<f64>> = [0.0, 5.5, 14.5, 29.5].iter().map(|&v| vec![v]).collect();
    let p = ScalerParams::fit(&rows).unwrap();
    assert_eq!(p.apply(&[0.0]), vec![0.0]);
    assert_eq!(p.apply(&[29.5]), vec![1.0]);
}

#[test]
fn constant_column_maps_to_half() {
    let rows = vec![vec![3.0, 1.0], vec![3.0, 2.0]];
    let p = ScalerParams::fit(&rows).unwrap();
    assert!(rows.iter().all(|r| p.apply(r)[0] == 0.5));
    assert_eq!(p.invert(&[0.5, 0.0]), vec![3.0, 1.0]);
}

#[test]
fn empty_table_is_rejected() {
    assert!(matches!(
        ScalerParams::fit(&[]),
        Err(fgm_ml::MlError::EmptyDataset)
    ));
}
