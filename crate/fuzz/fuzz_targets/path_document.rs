#![no_main]

use feedplan::{PathDocument, PhSplinePath};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if PathDocument::from_json(text).is_err() {
        return;
    }
    let Ok(path) = PhSplinePath::from_json(text) else { return };
    let total = path.total_length();
    assert!(total.is_finite() && total > 0.0);
    for i in 0..=8 {
        let ell = total * i as f64 / 8.0;
        let (j, xi) = path.locate_by_arclength(ell).expect("in range");
        assert!(j < path.len() && (0.0..=1.0).contains(&xi));
        let back = path.arc_length(j, xi).expect("valid location");
        assert!((back - ell).abs() <= 1e-6 * total.max(1.0));
    }
    let _ = path.curvature_range();
    let _ = path.motion_segments();
});
