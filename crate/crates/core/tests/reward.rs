mod common;

use common::*;
use dppo::reward::{free_space_centroid, max_offset, reward, threshold_free_space, FreeSpaceMask};
use dppo::DepthImage;
use proptest::prelude::*;

fn image(width: usize, height: usize, values: Vec<f64>) -> DepthImage {
    DepthImage::new(width, height, 1e6, values).unwrap()
}

fn frame() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..12, 1usize..12)
        .prop_flat_map(|(w, h)| (Just(w), Just(h), prop::collection::vec(0.0f64..50.0, w * h)))
}

proptest! {
    #[test]
    fn raising_tau_shrinks_the_mask((w, h, vals) in frame(), t1 in 0.01f64..1.0, t2 in 0.01f64..1.0) {
        let img = image(w, h, vals);
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let wide = threshold_free_space(&img, lo);
        let narrow = threshold_free_space(&img, hi);
        for (a, b) in wide.bits.iter().zip(&narrow.bits) {
            prop_assert!(!*b || *a);
        }
    }

    #[test]
    fn centroid_lies_inside_the_mask_bounding_box((w, h, vals) in frame(), tau in 0.05f64..1.0) {
        let mask = threshold_free_space(&image(w, h, vals), tau);
        let r = free_space_centroid(&mask);
        match r.centroid {
            None => {
                prop_assert_eq!(mask.count(), 0);
                prop_assert_eq!(r.d, max_offset(w, h));
            }
            Some((cu, cv)) => {
                let set: Vec<(usize, usize)> = (0..w * h)
                    .filter(|&i| mask.bits[i])
                    .map(|i| (i % w, i / w))
                    .collect();
                let umin = set.iter().map(|p| p.0).min().unwrap() as f64;
                let umax = set.iter().map(|p| p.0).max().unwrap() as f64;
                let vmin = set.iter().map(|p| p.1).min().unwrap() as f64;
                let vmax = set.iter().map(|p| p.1).max().unwrap() as f64;
                prop_assert!(cu >= umin && cu <= umax && cv >= vmin && cv <= vmax);
            }
        }
    }

    #[test]
    fn power_of_two_rescaling_keeps_the_mask((w, h, vals) in frame(), k in -8i32..8, tau in 0.05f64..1.0) {
        let s = 2f64.powi(k);
        let a = threshold_free_space(&image(w, h, vals.clone()), tau);
        let b = threshold_free_space(&image(w, h, vals.iter().map(|v| v * s).collect()), tau);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn centroid_matches_enumeration(bits in prop::collection::vec(any::<bool>(), 64)) {
        let mask = FreeSpaceMask { width: 8, height: 8, bits: bits.clone() };
        let r = free_space_centroid(&mask);
        match centroid_oracle(8, 8, &bits) {
            None => prop_assert!(r.centroid.is_none()),
            Some(((cu, cv), d)) => {
                let (gu, gv) = r.centroid.unwrap();
                prop_assert!((gu - cu).abs() <= 1e-12 && (gv - cv).abs() <= 1e-12);
                prop_assert!((r.d - d).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn reward_table() {
    assert_eq!(reward(true, 3.0).unwrap().value, -10.0);
    for (d, r) in [
        (1.0, 100.0),
        (2.0, 50.0),
        (10.0, 10.0),
        (50.0, 2.0),
        (0.0, 100.0),
    ] {
        assert_eq!(reward(false, d).unwrap().value, r);
    }
    let empty = FreeSpaceMask {
        width: 128,
        height: 128,
        bits: vec![false; 128 * 128],
    };
    let d = free_space_centroid(&empty).d;
    assert_eq!(d, (2.0f64 * 127.0 * 127.0).sqrt() / 2.0);
    assert_eq!(reward(false, d).unwrap().value, 100.0 / d);
}
