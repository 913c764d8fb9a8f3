#![allow(clippy::single_range_in_vec_init)]

mod common;

use std::sync::OnceLock;

use feedplan::interpolator::generate_reference_points;
use feedplan::scheduler::{compatibility_g, phase_times};
use feedplan::verify::sample_kinematics;
use feedplan::{
    BernsteinPoly, JerkLevel, KinematicLimits, PhQuinticSegment, PhSplinePath, PieceKind, Schedule,
    ScheduleOptions, SchedulerMode, SpecialPointKind, SpeedBound,
};
use proptest::prelude::*;

const LEVELS: [JerkLevel; 3] = [JerkLevel::Acceleration, JerkLevel::TangentialJerk, JerkLevel::FullJerk];

fn poly(max_len: usize) -> impl Strategy<Value = BernsteinPoly> {
    prop::collection::vec(-1e3..1e3f64, 1..=max_len).prop_map(BernsteinPoly::new)
}

fn limits() -> impl Strategy<Value = KinematicLimits> {
    (1.0..3.0f64, 2.0..4.0f64, 3.0..6.0f64, -5.0..-2.0f64, -4.0..-2.3f64).prop_map(|(v, a, j, d, dt)| {
        KinematicLimits::new(10f64.powf(v), 10f64.powf(a), 10f64.powf(j), 10f64.powf(d), 10f64.powf(dt)).unwrap()
    })
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.log10()..hi.log10()).prop_map(|e| 10f64.powf(e))
}

/// A regular PH quintic with a preimage of moderate size.
fn segment() -> impl Strategy<Value = PhQuinticSegment> {
    (prop::array::uniform3(-3.0..3.0f64), prop::array::uniform3(-3.0..3.0f64))
        .prop_map(|(u, v)| PhQuinticSegment::new([0.0, 0.0], u, v))
        .prop_filter("regular hodograph", |s| s.min_speed() > 1e-2)
}

fn magnitude(p: &BernsteinPoly) -> f64 {
    p.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()))
}

proptest! {
    #[test]
    fn values_lie_in_the_convex_hull(p in poly(12), tau in 0.0..=1.0f64) {
        let x = p.evaluate(tau).unwrap();
        let slack = 1e-12 * magnitude(&p);
        prop_assert!(x >= p.min_coeff() - slack && x <= p.max_coeff() + slack);
    }

    #[test]
    fn antiderivative_integrates_to_the_coefficient_mean(p in poly(12)) {
        let a = p.antiderivative();
        let mean = p.coeffs().iter().sum::<f64>() / p.coeffs().len() as f64;
        let got = a.evaluate(1.0).unwrap() - a.evaluate(0.0).unwrap();
        prop_assert!((got - mean).abs() <= 1e-14 * magnitude(&p).max(f64::MIN_POSITIVE), "{got} vs {mean}");
    }

    #[test]
    fn derivative_undoes_antiderivative(p in poly(12)) {
        let back = p.antiderivative().derivative();
        prop_assert_eq!(back.degree(), p.degree());
        for (a, b) in back.coeffs().iter().zip(p.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-13 * magnitude(&p));
        }
    }

    #[test]
    fn product_and_sum_are_pointwise(p in poly(8), q in poly(8), taus in prop::collection::vec(0.0..=1.0f64, 100)) {
        let prod = p.product(&q);
        let sum = p.sum(&q);
        for tau in taus {
            let (a, b) = (p.evaluate(tau).unwrap(), q.evaluate(tau).unwrap());
            prop_assert!((prod.evaluate(tau).unwrap() - a * b).abs() <= 1e-12 * magnitude(&p) * magnitude(&q));
            prop_assert!((sum.evaluate(tau).unwrap() - (a + b)).abs() <= 1e-12 * (magnitude(&p) + magnitude(&q)));
        }
    }

    #[test]
    fn hodograph_is_pythagorean(seg in segment()) {
        let (dx, dy) = seg.hodograph_polys();
        let lhs = dx.product(dx).sum(&dy.product(dy));
        let rhs = seg.sigma().product(seg.sigma());
        let scale = magnitude(&rhs);
        for (a, b) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn arc_length_is_monotone(seg in segment(), mut xis in prop::collection::vec(0.0..=1.0f64, 2..40)) {
        xis.sort_by(f64::total_cmp);
        let s: Vec<f64> = xis.iter().map(|&x| seg.arclength(x)).collect();
        prop_assert!(s.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(seg.arclength(0.0), 0.0);
        prop_assert!((seg.arclength(1.0) - seg.length()).abs() <= 1e-13 * seg.length());
    }

    #[test]
    fn curvature_sign_follows_its_numerator(seg in segment()) {
        let numerator = seg.curvature_numerator();
        let roots = numerator.find_roots(0.0, 1.0).unwrap();
        let mut sign_changes = 0;
        let mut previous = 0.0f64;
        for i in 0..=400 {
            let xi = i as f64 / 400.0;
            if roots.iter().any(|r| (r - xi).abs() < 1e-6) {
                continue;
            }
            let k = seg.curvature(xi);
            prop_assert_eq!(k.signum(), numerator.evaluate(xi).unwrap().signum());
            if previous != 0.0 && k.signum() != previous.signum() {
                sign_changes += 1;
                // a root must separate the two samples
                let lo = (i - 1) as f64 / 400.0;
                prop_assert!(roots.iter().any(|&r| r > lo - 1e-6 && r < xi + 1e-6));
            }
            previous = k;
        }
        prop_assert!(sign_changes <= roots.len());
    }

    #[test]
    fn spatial_scaling_scales_length_and_curvature(seg in segment(), c in log_uniform(0.1, 10.0)) {
        let path = PhSplinePath::from_segments(vec![seg.clone()], &[], 1e-6).unwrap();
        let scaled = path.scaled(c).unwrap();
        prop_assert!((scaled.total_length() - c * path.total_length()).abs() <= 1e-12 * c * path.total_length());
        for i in 0..50 {
            let xi = i as f64 / 49.0;
            let (k0, k1) = (seg.curvature(xi), scaled.segment(0).curvature(xi));
            prop_assert!((k1 - k0 / c).abs() <= 1e-10 * (k0 / c).abs().max(1e-300), "{k1} vs {}", k0 / c);
        }
    }

    #[test]
    fn chord_bound_inverts_chord_error(lim in limits(), kappa in log_uniform(1e-3, 1e3)) {
        if let SpeedBound::Finite(v) = lim.chord_velocity_bound(kappa) {
            let d = lim.chord_error(kappa, v).unwrap();
            prop_assert!((d - lim.chord_tol).abs() <= 1e-10 * lim.chord_tol, "{d} vs {}", lim.chord_tol);
        }
    }

    #[test]
    fn chord_bound_halves_when_sampling_period_doubles(lim in limits(), kappa in log_uniform(1e-3, 1e3)) {
        let slow = KinematicLimits::new(lim.v_max, lim.a_max, lim.j_max, lim.chord_tol, 2.0 * lim.sample_dt).unwrap();
        if let (Some(a), Some(b)) = (lim.chord_velocity_bound(kappa).finite(), slow.chord_velocity_bound(kappa).finite()) {
            prop_assert!((b - 0.5 * a).abs() <= 1e-14 * a);
        }
    }

    #[test]
    fn critical_curvature_marks_the_commanded_feedrate(lim in limits(), level in 0usize..2) {
        // at full jerk the centripetal-jerk root is active even with w = 0
        let level = LEVELS[level];
        let kcr = lim.critical_curvature(level);
        prop_assert_eq!(lim.velocity_bound(level, kcr * (1.0 - 1e-6), 0.0), lim.v_max);
        prop_assert!(lim.velocity_bound(level, kcr * (1.0 + 1e-6), 0.0) < lim.v_max);
    }

    #[test]
    fn level_bounds_are_nested(lim in limits(), kappa in log_uniform(1e-4, 1e3), w in log_uniform(1e-4, 1e5)) {
        let b: Vec<f64> = LEVELS.iter().map(|&l| lim.velocity_bound(l, kappa, w)).collect();
        prop_assert!(b[0] >= b[1] && b[1] >= b[2], "{b:?}");
    }

    #[test]
    fn centripetal_jerk_root_is_monotone(
        lim in limits(),
        mut kappas in prop::collection::vec(log_uniform(1e-4, 1e3), 2..6),
        mut ws in prop::collection::vec(log_uniform(1e-4, 1e5), 2..6),
    ) {
        kappas.sort_by(f64::total_cmp);
        kappas.dedup();
        ws.sort_by(f64::total_cmp);
        ws.dedup();
        let root = |l: &KinematicLimits, k: f64, w: f64| l.jerk_centripetal_root(k, w).finite().unwrap();
        let w0 = ws[0];
        for pair in kappas.windows(2) {
            prop_assert!(root(&lim, pair[0], w0) > root(&lim, pair[1], w0));
        }
        let k0 = kappas[0];
        for pair in ws.windows(2) {
            prop_assert!(root(&lim, k0, pair[0]) > root(&lim, k0, pair[1]));
        }
        let stiffer = KinematicLimits::new(lim.v_max, lim.a_max, 2.0 * lim.j_max, lim.chord_tol, lim.sample_dt).unwrap();
        prop_assert!(stiffer.j_cen() > lim.j_cen());
        prop_assert!(root(&stiffer, k0, w0) > root(&lim, k0, w0));
    }

    #[test]
    fn phase_time_is_the_tightest_feasible_ramp(lim in limits(), mode in 0usize..6, from in 0.0..1.0f64, to in 0.0..1.0f64) {
        let mode = SchedulerMode::ALL[mode];
        let (lo, hi) = (from.min(to) * lim.v_max, from.max(to) * lim.v_max);
        prop_assume!(hi > lo);
        let t = phase_times(&lim, mode, lo, hi).unwrap();
        let dv = hi - lo;
        let peak_acc = 15.0 * dv / (8.0 * t);
        let peak_jerk = 10.0 * dv / (3f64.sqrt() * t * t);
        let (at, jt) = (lim.a_tan(), lim.ramp_jerk(mode.level));
        prop_assert!(peak_acc <= at * (1.0 + 1e-12) && peak_jerk <= jt * (1.0 + 1e-12));
        prop_assert!((peak_acc - at).abs() <= 1e-12 * at || (peak_jerk - jt).abs() <= 1e-12 * jt);
        prop_assert!(phase_times(&lim, mode, hi, lo).is_err());
    }

    #[test]
    fn compatibility_grows_above_both_ends(lim in limits(), mode in 0usize..6, a in 0.0..1.0f64, b in 0.0..1.0f64, mut xs in prop::collection::vec(0.0..1.0f64, 2..20)) {
        let mode = SchedulerMode::ALL[mode];
        let (a, b) = (a * lim.v_max, b * lim.v_max);
        let floor = a.max(b);
        xs.sort_by(f64::total_cmp);
        let g: Vec<f64> = xs.iter().map(|x| compatibility_g(&lim, mode, a, b, floor + x * (lim.v_max - floor))).collect();
        prop_assert!(g.windows(2).all(|w| w[0] <= w[1]), "{g:?}");
    }
}

struct Scheduled {
    name: &'static str,
    path: PhSplinePath,
    limits: KinematicLimits,
    /// Indexed like `SchedulerMode::ALL`.
    schedules: Vec<Schedule>,
}

fn scheduled() -> &'static [Scheduled] {
    static CACHE: OnceLock<Vec<Scheduled>> = OnceLock::new();
    CACHE.get_or_init(|| {
        std::thread::scope(|scope| {
            let handles: Vec<_> = common::FIXTURES
                .iter()
                .map(|&(name, lim)| {
                    scope.spawn(move || {
                        let path = common::load_path(name);
                        let limits = common::load_limits(lim);
                        let schedules = SchedulerMode::ALL
                            .iter()
                            .map(|&m| feedplan::scheduler::schedule(&path, &limits, m, &ScheduleOptions::default()).unwrap())
                            .collect();
                        Scheduled { name, path, limits, schedules }
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    })
}

fn halting_lengths(path: &PhSplinePath) -> Vec<f64> {
    path.motion_segments()
        .iter()
        .map(|r| path.segment_offset(r.end - 1) + path.segment(r.end - 1).length() - path.segment_offset(r.start))
        .collect()
}

#[test]
fn block_lengths_sum_to_segment_lengths() {
    for f in scheduled() {
        let lengths = halting_lengths(&f.path);
        for s in &f.schedules {
            for (range, &len) in s.segment_blocks.iter().zip(&lengths) {
                let sum: f64 = s.blocks[range.clone()].iter().map(|b| b.length).sum();
                assert!((sum - len).abs() <= 1e-10 * len, "{} {}: {sum} vs {len}", f.name, s.mode);
            }
        }
    }
}

#[test]
fn locate_round_trips_arc_length() {
    for f in scheduled() {
        let total = f.path.total_length();
        for i in 0..=997 {
            let ell = total * i as f64 / 997.0;
            let (j, xi) = f.path.locate_by_arclength(ell).unwrap();
            let back = f.path.arc_length(j, xi).unwrap();
            assert!((back - ell).abs() <= 1e-12 * total, "{}: {back} vs {ell}", f.name);
        }
    }
}

#[test]
fn relaxed_critical_points_sit_inside_strict_high_curvature_blocks() {
    for f in scheduled() {
        for level in 0..3 {
            let (relaxed, strict) = (&f.schedules[level], &f.schedules[level + 3]);
            let kcr = strict.kappa_cr;
            for p in relaxed.special_points.iter().filter(|p| p.kind == SpecialPointKind::Critical) {
                if p.kappa.abs() <= kcr * (1.0 + 1e-9) {
                    continue;
                }
                let host = strict
                    .blocks
                    .iter()
                    .find(|b| b.start.arclength < p.arclength && p.arclength < b.end.arclength);
                let host = host.unwrap_or_else(|| panic!("{} {}: critical point at s={} has no host", f.name, relaxed.mode, p.arclength));
                assert!(host.kappa_stat > kcr, "{} {}: host block below κ_cr", f.name, strict.mode);
            }
        }
    }
}

#[test]
fn crossings_come_in_pairs_between_low_curvature_ends() {
    for f in scheduled() {
        for s in &f.schedules[3..] {
            for range in &s.segment_blocks {
                let blocks = &s.blocks[range.clone()];
                let (first, last) = (&blocks[0].start, &blocks[blocks.len() - 1].end);
                if first.kappa.abs() >= s.kappa_cr || last.kappa.abs() >= s.kappa_cr {
                    continue;
                }
                let crossings = blocks.iter().filter(|b| b.end.kind == SpecialPointKind::Crossing).count();
                assert_eq!(crossings % 2, 0, "{} {}", f.name, s.mode);
            }
        }
    }
}

#[test]
fn finer_statistics_grid_moves_nothing() {
    for f in scheduled() {
        for (m, coarse) in SchedulerMode::ALL.iter().zip(&f.schedules) {
            let fine = feedplan::scheduler::schedule(&f.path, &f.limits, *m, &ScheduleOptions { grid_density: 4096, dwell: 0.0 }).unwrap();
            assert_eq!(fine.special_points.len(), coarse.special_points.len(), "{} {m}", f.name);
            for (a, b) in fine.special_points.iter().zip(&coarse.special_points) {
                assert_eq!(a.segment, b.segment);
                assert!((a.xi - b.xi).abs() < 1e-9);
            }
            for (a, b) in fine.blocks.iter().zip(&coarse.blocks) {
                assert!((a.kappa_stat - b.kappa_stat).abs() <= 1e-9 * a.kappa_stat.max(1e-12), "{} {m}", f.name);
            }
        }
    }
}

#[test]
fn relaxed_caps_are_ordered_by_level() {
    for f in scheduled() {
        let r = &f.schedules[..3];
        assert!(r.windows(2).all(|w| w[0].special_points == w[1].special_points));
        for i in 0..r[0].blocks.len() {
            let caps: Vec<f64> = r.iter().map(|s| s.blocks[i].v_cap_bound).collect();
            assert!(caps[0] >= caps[1] && caps[1] >= caps[2], "{} block {i}: {caps:?}", f.name);
        }
    }
}

#[test]
fn ramp_directions_match_piece_kinds() {
    for f in scheduled() {
        for s in &f.schedules {
            for piece in s.profile.pieces() {
                let d = piece.poly.derivative();
                let tol = 1e-12 * f.limits.v_max;
                match piece.kind {
                    PieceKind::Acc => assert!(d.min_coeff() >= -tol),
                    PieceKind::Dec => assert!(d.max_coeff() <= tol),
                    PieceKind::Const | PieceKind::Dwell => assert!(d.coeffs().iter().all(|c| c.abs() <= tol)),
                }
            }
        }
    }
}

#[test]
fn pieces_cover_their_blocks() {
    for f in scheduled() {
        for s in &f.schedules {
            let mut covered = vec![0.0; s.blocks.len()];
            for p in s.profile.pieces() {
                if let Some(b) = p.block {
                    covered[b] += p.length();
                }
            }
            for (b, c) in s.blocks.iter().zip(&covered) {
                assert!((c - b.length).abs() <= 1e-9 * b.length, "{} {}: {c} vs {}", f.name, s.mode, b.length);
            }
        }
    }
}

#[test]
fn scheduling_is_idempotent() {
    for f in scheduled().iter().take(3) {
        for (m, first) in SchedulerMode::ALL.iter().zip(&f.schedules) {
            let again = feedplan::scheduler::schedule(&f.path, &f.limits, *m, &ScheduleOptions::default()).unwrap();
            assert_eq!(again.profile, first.profile);
            assert_eq!(again.blocks, first.blocks);
        }
    }
}

#[test]
fn reference_points_respect_the_path() {
    for f in scheduled() {
        for s in &f.schedules {
            let pts = generate_reference_points(&f.path, &s.profile, &f.limits).unwrap();
            let chords: f64 = pts
                .windows(2)
                .map(|w| (w[1].position[0] - w[0].position[0]).hypot(w[1].position[1] - w[0].position[1]))
                .sum();
            assert!(chords <= f.path.total_length() * (1.0 + 1e-12), "{} {}", f.name, s.mode);

            let dt = f.limits.sample_dt;
            let full_steps = pts.windows(2).filter(|w| (w[1].t - w[0].t - dt).abs() < 1e-12);
            for w in full_steps {
                let kappa = f.path.segment(w[0].segment).curvature(w[0].xi).abs();
                if kappa * w[0].feedrate * dt >= 0.1 {
                    continue;
                }
                let speed = (w[1].position[0] - w[0].position[0]).hypot(w[1].position[1] - w[0].position[1]) / dt;
                // average feedrate over the step; endpoint values differ a lot on ramps out of a stop
                let mean = (s.profile.displacement(w[1].t) - s.profile.displacement(w[0].t)) / dt;
                if mean < 1e-3 * f.limits.v_max {
                    continue;
                }
                assert!((speed - mean).abs() <= 0.01 * mean, "{} {} at t={}: {speed} vs {mean}", f.name, s.mode, w[0].t);
            }
            if s.mode.is_strict() {
                for p in &pts {
                    let c = p.chord_error.expect("strict chord error defined");
                    assert!(c <= f.limits.chord_tol * (1.0 + 1e-9), "{} {}: chord {c}", f.name, s.mode);
                }
            }
        }
    }
}

#[test]
fn jerk_vector_recombines_from_frenet_components() {
    for f in scheduled() {
        let s = &f.schedules[5];
        for k in sample_kinematics(&f.path, &s.profile, &f.limits, 2) {
            let norm2 = k.j[0] * k.j[0] + k.j[1] * k.j[1];
            let tan = k.vddot - k.v.powi(3) * k.kappa * k.kappa;
            let nor = 3.0 * k.v * k.vdot * k.kappa + k.v.powi(3) * k.w;
            let expect = tan * tan + nor * nor;
            assert!((norm2 - expect).abs() <= 1e-9 * expect.max(f.limits.j_max * f.limits.j_max * 1e-6), "{} t={}", f.name, k.t);
        }
    }
}

#[test]
fn sample_just_past_a_knot_lands_in_the_next_piece() {
    use feedplan::scheduler::assemble_profile;
    use feedplan::{CurveBlock, SpecialPoint};

    let pieces = vec![
        PhQuinticSegment::new([0.0, 0.0], [1.0; 3], [0.0; 3]),
        PhQuinticSegment::new([1.0, 0.0], [1.0; 3], [0.0; 3]),
    ];
    let path = PhSplinePath::from_segments(pieces, &[], 1e-6).unwrap();
    assert_eq!(path.motion_segments().len(), 1);
    let limits = KinematicLimits::new(10.0, 1e3, 1e4, 1e-3, 1e-3).unwrap();
    // t_500 covers the first piece plus 1e-6 mm
    let v = (1.0 + 1e-6) / 0.5;
    let end = SpecialPoint { kind: SpecialPointKind::Endpoint, segment: 1, xi: 1.0, arclength: 2.0, kappa: 0.0 };
    let block = CurveBlock {
        start: SpecialPoint { segment: 0, xi: 0.0, arclength: 0.0, ..end },
        end,
        length: 2.0,
        kappa_stat: 0.0,
        w_stat: 0.0,
        v_start: v,
        v_end: v,
        v_cap_bound: v,
        v_cap: v,
        t_acc: 0.0,
        t_con: 2.0 / v,
        t_dec: 0.0,
    };
    let profile = assemble_profile(&[block], &[0..1], 0.0);
    let pts = generate_reference_points(&path, &profile, &limits).unwrap();
    let p = &pts[500];
    let (j, xi) = path.locate_by_arclength(profile.displacement(p.t)).unwrap();
    assert_eq!((p.segment, j), (1, 1));
    assert!((p.xi - xi).abs() <= 1e-12 && (p.xi - 1e-6).abs() <= 1e-9, "{}", p.xi);
    assert!(pts.windows(2).all(|w| (w[0].segment, w[0].xi) <= (w[1].segment, w[1].xi)));
}
