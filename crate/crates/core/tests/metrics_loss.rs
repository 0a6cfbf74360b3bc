use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use panosweep::pipeline::{berhu, berhu_depth, berhu_value, eval_metrics, total_loss, LossWeights, Metrics};
use panosweep::{DepthMap, ErpGrid, Error};

fn grid() -> ErpGrid {
    ErpGrid::new(8, 4).unwrap()
}

fn map(values: Vec<f64>) -> DepthMap {
    DepthMap::from_depths(grid(), values, 0.05, 100.0).unwrap()
}

#[test]
fn worked_examples() {
    let g: Vec<f64> = (0..32).map(|i| 1.0 + i as f64 * 0.1).collect();
    let gt = map(g.clone());
    let m = eval_metrics(&map(g.iter().map(|x| 2.0 * x).collect()), &gt).unwrap();
    assert_eq!((m.abs_rel, m.delta1, m.delta2, m.delta3), (1.0, 0.0, 0.0, 0.0));
    assert_abs_diff_eq!(m.rmse_log, std::f64::consts::LN_2, epsilon = 1e-12);
    let sq_rel: f64 = g.iter().sum::<f64>() / 32.0;
    assert_abs_diff_eq!(m.sq_rel, sq_rel, epsilon = 1e-12);

    // 1.25^2 = 1.5625 and 1.25^3 = 1.953125 sit between these factors.
    let m = eval_metrics(&map(g.iter().map(|x| 1.6 * x).collect()), &gt).unwrap();
    assert_eq!((m.delta1, m.delta2, m.delta3), (0.0, 0.0, 1.0));
    let m = eval_metrics(&map(g.iter().map(|x| x / 1.3).collect()), &gt).unwrap();
    assert_eq!((m.delta1, m.delta2, m.delta3), (0.0, 1.0, 1.0));
}

#[test]
fn metrics_use_the_common_valid_pixels() {
    let gt = DepthMap::with_mask(grid(), vec![2.0; 32], (0..32).map(|i| i < 16).collect(), 0.1, 10.0).unwrap();
    let mut p = vec![2.0; 32];
    p[0] = 4.0;
    p[20] = 9.0;
    let pred = DepthMap::with_mask(grid(), p, (0..32).map(|i| i != 1).collect(), 0.1, 10.0).unwrap();
    let m = eval_metrics(&pred, &gt).unwrap();
    assert_eq!(m.pixels, 15);
    assert_abs_diff_eq!(m.abs_rel, 1.0 / 15.0, epsilon = 1e-15);
    let none = DepthMap::with_mask(grid(), vec![2.0; 32], (0..32).map(|i| i >= 16).collect(), 0.1, 10.0).unwrap();
    assert!(matches!(eval_metrics(&none, &gt), Err(Error::Numerical(_))));
}

#[test]
fn berhu_threshold_follows_the_largest_error() {
    // Residuals 0.1 and 1.0: c = 0.2, so 0.1 is linear and 1.0 quadratic.
    let v = berhu(&[1.1, 3.0], &[1.0, 2.0], &[true, true]).unwrap();
    assert_abs_diff_eq!(v, (0.1 + (1.0 + 0.04) / 0.4) / 2.0, epsilon = 1e-12);
    assert!(berhu(&[1.0], &[1.0], &[false]).is_err());
}

#[test]
fn total_loss_weights_levels() {
    let gt = map(vec![2.0; 32]);
    let coarse = map(vec![3.0; 32]);
    let l1 = map(vec![2.5; 32]);
    let l2 = map(vec![2.0; 32]);
    let w = LossWeights { omega1: 1.0, omega2: 0.02, lambda: vec![0.5] };
    let r = total_loss((&coarse, &gt), &[(&l1, &gt), (&l2, &gt)], &w).unwrap();
    // Uniform residual e gives c = 0.2 e and berHu (e^2 + c^2) / 2c = 2.6 e.
    assert_abs_diff_eq!(r.coarse, 2.6, epsilon = 1e-12);
    assert_abs_diff_eq!(r.stereo[0], 1.3, epsilon = 1e-12);
    assert_eq!(r.stereo[1], 0.0);
    assert_abs_diff_eq!(r.total, 2.6 + 0.02 * 0.5 * 1.3, epsilon = 1e-12);
    assert_eq!(berhu_depth(&gt, &gt).unwrap(), 0.0);
    assert!(total_loss((&coarse, &gt), &[], &LossWeights { omega1: -1.0, ..w }).is_err());
}

fn depths(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.3f64..9.0, n)
}

proptest! {
    #[test]
    fn metrics_are_ordered_and_scale_free(g in depths(32), p in depths(32), s in 0.5f64..3.0) {
        let m = eval_metrics(&map(p.clone()), &map(g.clone())).unwrap();
        prop_assert!(m.delta1 <= m.delta2 && m.delta2 <= m.delta3);
        prop_assert!(m.values().iter().all(|v| v.is_finite() && *v >= 0.0));
        let scaled = eval_metrics(&map(p.iter().map(|x| x * s).collect()), &map(g.iter().map(|x| x * s).collect())).unwrap();
        prop_assert!((scaled.abs_rel - m.abs_rel).abs() < 1e-12);
        prop_assert!((scaled.rmse_log - m.rmse_log).abs() < 1e-12);
    }

    #[test]
    fn berhu_is_continuous_and_bounded(c in 1e-4f64..50.0, k in 1.0f64..20.0) {
        prop_assert_eq!(berhu_value(c, c), c);
        prop_assert!((berhu_value(c * (1.0 + 1e-10), c) - c).abs() <= 1e-8 * c);
        let e = c * k;
        prop_assert!(berhu_value(e, c) >= e - c / 2.0);
        prop_assert!(berhu_value(-e, c) == berhu_value(e, c));
    }

    #[test]
    fn suite_means_average_rows(a in depths(7), b in depths(7)) {
        let m = |v: &Vec<f64>| Metrics { abs_rel: v[0], sq_rel: v[1], rmse: v[2], rmse_log: v[3], delta1: v[4], delta2: v[5], delta3: v[6], pixels: 1 };
        let mean = Metrics::mean(&[m(&a), m(&b)]).unwrap();
        for (i, v) in mean.values().iter().enumerate() {
            prop_assert!((v - (a[i] + b[i]) / 2.0).abs() < 1e-12);
        }
        prop_assert_eq!(mean.pixels, 2);
    }
}
