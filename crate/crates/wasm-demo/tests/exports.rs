use optsample_wasm_demo::{contents, curves, ratio_floor, ratios};

#[test]
fn drained_curves_differ_from_undrained() {
    let full = curves(6, 80, "sqrt", "optsample", false).unwrap();
    let drained = curves(6, 80, "sqrt", "optsample", true).unwrap();
    assert_eq!(full.len(), 80);
    assert_eq!(drained.len(), 80);
    assert_ne!(full, drained);
}

#[test]
fn every_series_name_on_the_page_is_accepted() {
    for policy in ["optsample", "drop-oldest", "2-sample", "3-sample"] {
        let seqs = contents(policy, 5, 100).unwrap();
        assert!(
            seqs.len() <= 5 && seqs.windows(2).all(|w| w[0] < w[1]),
            "{policy}"
        );
    }
    for eval_fn in ["ln", "log2", "sqrt", "arctan"] {
        assert!(curves(
            3,
            20,
            eval_fn,
            "oracle,drop-oldest,2-sample,optsample",
            false
        )
        .is_ok());
    }
}

#[test]
fn ratio_floor_matches_small_capacity_bound() {
    assert_eq!(ratio_floor(1), 0.5);
    assert!((ratio_floor(100) - 0.940339898858).abs() < 1e-9);
    assert!(ratios(1, 5000).unwrap().iter().all(|&r| r >= 0.5));
}
