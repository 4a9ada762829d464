use std::f64::consts::{PI, TAU};

use mintori_core::dynamics::{
    advance, field_rates, find_periodic, first_return, integrate, level_grid, locate_brackets, rational_targets,
    s_distance, state_of, tau_rate_along_jaw, xi_at_level, xi_crosscheck, xi_scan, Field, FlowOptions, StopCondition,
};
use mintori_core::reduced::{wrap_signed, ReducedModel};
use mintori_core::subtorus::{build_polytope, make_frame, WeightVector};
use mintori_core::{Error, FubiniStudy};

fn model(v: &[i64]) -> ReducedModel {
    let fs = FubiniStudy::new(2);
    let p = build_polytope(&fs);
    let f = make_frame(&WeightVector::new(v.to_vec()).unwrap(), &p).unwrap();
    ReducedModel::new(fs, f).unwrap()
}

fn tight() -> FlowOptions {
    FlowOptions::with_tol(1e-12)
}

/// Level point with `tau > 0` and the given fiber phase, by bisection on `h_0`.
fn seed_with_theta(m: &ReducedModel, s: f64, theta: f64, psi: f64) -> mintori_core::reduced::SPoint {
    let target = s / theta.cos();
    let (mut lo, mut hi) = (0.0, m.frame().t2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if m.h0(mid).unwrap() > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    m.chart_point(0.5 * (lo + hi), theta, psi).unwrap()
}

#[test]
fn l_plus_is_a_trajectory() {
    for v in [[1, -1], [2, 3]] {
        let m = model(&v);
        let s = m.chart_point(0.0, 0.0, 0.3).unwrap();
        let tr = integrate(&m, &s, StopCondition::Time(2.0), &tight()).unwrap();
        assert!(tr.states.len() > 2);
        for (_, y) in &tr.states {
            assert!(y[0].abs() < 1e-8 && wrap_signed(y[1]).abs() < 1e-8);
        }
        let last = tr.states.last().unwrap().1;
        assert!(last[2] > 0.3 + 1.0, "psi advances along L+");
        assert!(first_return(&m, &s, &tight()).is_err());
    }
}

#[test]
fn f_is_conserved_and_drift_tracks_tolerance() {
    let m = model(&[2, 3]);
    let fp = m.f_plus().unwrap();
    for frac in [0.2, 0.5, 0.9, -0.6] {
        let seed = m.seed_on_level(frac * fp).unwrap();
        let rec = first_return(&m, &seed, &FlowOptions::default()).unwrap();
        assert!(rec.max_drift < 1e-8 * (1.0 + (frac * fp).abs()), "{frac}: {}", rec.max_drift);
        let drifts: Vec<f64> = [1e-6, 1e-8, 1e-10]
            .iter()
            .map(|&tol| first_return(&m, &seed, &FlowOptions::with_tol(tol)).unwrap().max_drift)
            .collect();
        assert!(drifts[0] > drifts[1] && drifts[1] > drifts[2], "{drifts:?}");
    }
}

#[test]
fn tau_moves_off_l_plus_minus() {
    let m = model(&[2, 3]);
    let seed = m.seed_on_level(0.5 * m.f_plus().unwrap()).unwrap();
    let tr = integrate(&m, &seed, StopCondition::Time(0.5), &tight()).unwrap();
    let (lo, hi) = tr.states.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, y)| (a.min(y[0]), b.max(y[0])));
    assert!(hi - lo > 1e-4);
}

#[test]
fn reversibility() {
    let m = model(&[2, 3]);
    let opts = tight();
    for y in [[0.01, 0.2, 0.0], [-0.02, 2.0, 1.0], [0.005, -1.0, 3.0]] {
        let fwd = advance(&m, y, 1.5, 1.0, &opts).unwrap();
        let back = advance(&m, fwd, 1.5, -1.0, &opts).unwrap();
        for k in 0..3 {
            assert!((back[k] - y[k]).abs() < 1e-7, "{y:?} -> {back:?}");
        }
    }
}

#[test]
fn holonomy_is_a_function_of_the_level() {
    let m = model(&[2, 3]);
    let fp = m.f_plus().unwrap();
    let opts = tight();
    for frac in [0.3, 0.7] {
        let s = frac * fp;
        let base = xi_at_level(&m, s, &opts).unwrap();
        // another seed on the same level component
        let other = seed_with_theta(&m, s, 0.4, 1.7);
        assert!((m.f_value(&other).unwrap() - s).abs() < 1e-12);
        let r = first_return(&m, &other, &opts).unwrap();
        assert!((r.xi_unwrapped - base.xi_unwrapped).abs() < 1e-6);
        // a later point on the same trajectory
        let later = advance(&m, state_of(&m.seed_on_level(s).unwrap()), 0.37 * base.t_return, 1.0, &opts).unwrap();
        let later = m.chart_point(later[0], later[1], later[2]).unwrap();
        let r = first_return(&m, &later, &opts).unwrap();
        assert!((r.xi_unwrapped - base.xi_unwrapped).abs() < 1e-6);
        assert!((r.t_return - base.t_return).abs() < 1e-6);
        // the R-orbit of the seed
        let seed = m.seed_on_level(s).unwrap();
        let moved = m.chart_point(seed.chart_tau(), seed.theta(), seed.psi() + 2.2).unwrap();
        let r = first_return(&m, &moved, &opts).unwrap();
        assert!((r.xi_unwrapped - base.xi_unwrapped).abs() < 1e-9);
    }
}

#[test]
fn holonomy_is_inverted_by_minus_one() {
    let m = model(&[2, 3]);
    let fp = m.f_plus().unwrap();
    let opts = tight();
    for frac in [0.15, 0.45, 0.85] {
        let seed = m.seed_on_level(frac * fp).unwrap();
        let a = first_return(&m, &seed, &opts).unwrap();
        let b = first_return(&m, &m.minus_act(&seed), &opts).unwrap();
        assert!(wrap_signed(a.xi_angle + b.xi_angle).abs() < 1e-6);
        assert!((a.xi_unwrapped + b.xi_unwrapped).abs() < 1e-6);
    }
}

#[test]
fn scan_is_nonconstant_deterministic_and_mirrored() {
    let m = model(&[2, 3]);
    let fp = m.f_plus().unwrap();
    let levels = level_grid(fp, 0.1, 0.99, 24);
    let opts = FlowOptions::default();
    let a = xi_scan(&m, &levels, &opts);
    let b = xi_scan(&m, &levels, &opts);
    let xs: Vec<f64> = a.iter().map(|r| r.result.as_ref().unwrap().xi_unwrapped).collect();
    for (r, x) in b.iter().zip(&xs) {
        assert_eq!(r.result.as_ref().unwrap().xi_unwrapped.to_bits(), x.to_bits());
    }
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    assert!(hi - lo > 0.1, "holonomy range {lo}..{hi}");
    let neg: Vec<f64> = levels.iter().map(|s| -s).collect();
    for (r, x) in xi_scan(&m, &neg, &opts).iter().zip(&xs) {
        assert!((r.result.as_ref().unwrap().xi_unwrapped + x).abs() < 1e-6);
    }
}

#[test]
fn antisymmetric_weight_has_flat_holonomy() {
    // for v = (1, -1) the return map is trivial on every level
    let m = model(&[1, -1]);
    let fp = m.f_plus().unwrap();
    for frac in [0.2, 0.6, 0.95] {
        let r = xi_at_level(&m, frac * fp, &tight()).unwrap();
        assert!((r.xi_unwrapped - TAU).abs() < 1e-6, "{}", r.xi_unwrapped);
    }
}

#[test]
fn crosscheck_agrees_with_first_return() {
    let m = model(&[2, 3]);
    let fp = m.f_plus().unwrap();
    let opts = tight();
    for i in 0..10 {
        let s = fp * (0.12 + 0.085 * i as f64);
        let seed = m.seed_on_level(s).unwrap();
        let a = first_return(&m, &seed, &opts).unwrap();
        let b = xi_crosscheck(&m, &seed, &opts).unwrap();
        assert!((a.xi_unwrapped - b.t_m).abs() < 1e-6, "level {s}: {} vs {}", a.xi_unwrapped, b.t_m);
        assert!(wrap_signed(a.xi_angle - b.angle).abs() < 1e-6);
    }
    let neg = m.seed_on_level(-0.5 * fp).unwrap();
    assert!(matches!(xi_crosscheck(&m, &neg, &opts), Err(Error::Domain(_))));
}

#[test]
fn reparametrized_field_is_finite_on_positive_levels() {
    let m = model(&[2, 3]);
    let seed = m.seed_on_level(0.4 * m.f_plus().unwrap()).unwrap();
    let tr = integrate(&m, &seed, StopCondition::Returns(1), &tight()).unwrap();
    for (_, y) in tr.states.iter().step_by(7) {
        let r = field_rates(&m, Field::WPrime, 1.0, y).unwrap();
        assert!(r.iter().all(|x| x.is_finite()));
        assert!((r[2] - 1.0).abs() < 1e-9, "unit psi speed");
    }
}

#[test]
fn tau_rate_along_j_aw_has_one_sign() {
    let m = model(&[2, 3]);
    let (t1, t2) = (m.frame().t1, m.frame().t2);
    let mut signs = Vec::new();
    for i in 1..40 {
        let tau = t1 + (t2 - t1) * i as f64 / 40.0;
        for theta in [0.0, 1.0, PI, 4.0] {
            let s = m.chart_point(tau, theta, 0.5).unwrap();
            let r = tau_rate_along_jaw(&m, &s).unwrap();
            assert!(r.abs() > 1e-8);
            signs.push(r.signum());
        }
    }
    assert!(signs.iter().all(|&x| x == signs[0]));
}

#[test]
fn periodic_orbit_closes_and_mirrors() {
    let m = model(&[2, 3]);
    let fp = m.f_plus().unwrap();
    let opts = tight();
    let levels = level_grid(fp, 0.1, 0.99, 40);
    let rows = xi_scan(&m, &levels, &FlowOptions::default());
    let br = locate_brackets(&rows, 13, 3);
    assert_eq!(br.len(), 1);
    let o = find_periodic(&m, 13, 3, br[0], &opts).unwrap();
    assert!((o.xi_unwrapped - TAU * 13.0 / 3.0).abs() < 1e-9);
    assert!(o.closure < 1e-6);
    assert!((o.period - 3.0 * o.t_return).abs() < 1e-6 * o.period);
    let y0 = state_of(&o.seed);
    let end = advance(&m, y0, o.period, 1.0, &opts).unwrap();
    assert!(s_distance(&m, &y0, &end).unwrap() < 1e-6);

    let mirrored = (-br[0].1, -br[0].0);
    let om = find_periodic(&m, 13, 3, mirrored, &opts).unwrap();
    assert!((om.level + o.level).abs() < 1e-9);
    assert!((om.xi_unwrapped + o.xi_unwrapped).abs() < 1e-8);

    assert!(matches!(find_periodic(&m, 5, 1, br[0], &opts), Err(Error::Bracket { .. })));
    assert!(find_periodic(&m, 26, 6, br[0], &opts).is_err());
}

#[test]
fn rational_targets_are_reduced_and_inside() {
    let t = rational_targets(4.04, 4.36, 12);
    assert!(t.contains(&(13, 3)) && t.contains(&(17, 4)) && t.contains(&(21, 5)));
    for &(p, q) in &t {
        let r = p as f64 / q as f64;
        assert!(r > 4.04 && r < 4.36 && q <= 12);
        assert!((2..=q as i64).all(|d| p % d != 0 || q as i64 % d != 0));
    }
    assert!(t.windows(2).all(|w| w[0].0 * (w[1].1 as i64) < w[1].0 * (w[0].1 as i64)));
}
