#![no_main]

use feedplan::{JerkLevel, KinematicLimits};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(lim) = KinematicLimits::from_json(text) else { return };
    for level in [JerkLevel::Acceleration, JerkLevel::TangentialJerk, JerkLevel::FullJerk] {
        let kcr = lim.critical_curvature(level);
        assert!(kcr > 0.0);
        for kappa in [0.0, 0.5 * kcr, kcr, 10.0 * kcr] {
            let v = lim.velocity_bound(level, kappa, kappa);
            assert!(v > 0.0 && v <= lim.v_max, "bound {v}");
        }
    }
});
