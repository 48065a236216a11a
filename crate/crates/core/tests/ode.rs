use pv5_jacobi::ode::{self, integrate, Harmonic};
use pv5_jacobi::{num, Error, ModelParams, PrecisionContext, Real};

fn r(v: f64) -> Real {
    num::real(256, v)
}

fn cos_error(tol: &str) -> (f64, usize) {
    let tol = num::parse(256, tol).unwrap();
    let sol = integrate(&Harmonic, &r(0.0), &r(1.0), &[r(1.0), r(0.0)], &tol).unwrap();
    let end = sol.ys.last().unwrap()[0].clone();
    ((end - r(1.0).cos()).abs().to_f64(), sol.stats.steps)
}

#[test]
fn cosine_error_tracks_tolerance() {
    let runs: Vec<_> = ["1e-10", "1e-12", "1e-14"].iter().map(|t| cos_error(t)).collect();
    for ((err, _), tol) in runs.iter().zip([1e-10, 1e-12, 1e-14]) {
        assert!(*err <= tol, "{err} > {tol}");
    }
    // error per unit step with local extrapolation: error ~ tol^(5/4)
    let slope = (runs[0].0.log10() - runs[2].0.log10()) / 4.0;
    assert!((slope - 1.25).abs() < 0.15, "slope {slope}");
    assert!(runs[0].1 < runs[1].1 && runs[1].1 < runs[2].1);
}

#[test]
fn tighter_tolerance_reduces_riccati_deviation() {
    // short window well before the movable pole of the seeded solution
    let p = ModelParams::from_f64(1.0, 0.04, 0.5, 256, 2).unwrap();
    let ctx = PrecisionContext::default();
    let (t0, t1) = (r(0.5), r(0.505));
    let init = ode::riccati_init(&p, &ctx, 2, &t0).unwrap();
    let reference = ode::integrate_riccati(&p, 2, &t0, &t1, init.clone(), &r(1e-20)).unwrap();
    let dev = |tol: f64| {
        let tr = ode::integrate_riccati(&p, 2, &t0, &t1, init.clone(), &r(tol)).unwrap();
        num::normalized_diff(&tr.end_state()[0], &reference.end_state()[0]).to_f64()
    };
    assert!(dev(1e-12) < dev(1e-8));
}

#[test]
fn crosscheck_at_start_is_zero() {
    let p = ModelParams::from_f64(1.0, 0.04, 0.5, 256, 2).unwrap();
    let ctx = PrecisionContext::default();
    let t0 = r(0.5);
    let init = ode::riccati_init(&p, &ctx, 2, &t0).unwrap();
    let tr = ode::integrate_riccati(&p, 2, &t0, &r(0.501), init, &r(1e-12)).unwrap();
    assert!(ode::crosscheck(&tr, &ctx, &[t0]).unwrap().is_zero());
    assert!(ode::crosscheck(&tr, &ctx, &[r(0.6)]).is_err());
}

#[test]
fn round_trip_on_a_regular_window() {
    let p = ModelParams::from_f64(1.0, 0.04, 0.5, 256, 2).unwrap();
    let ctx = PrecisionContext::default();
    let (t0, t1) = (r(0.5), r(0.505));
    let tol = r(1e-12);
    let init = ode::riccati_init(&p, &ctx, 2, &t0).unwrap();
    let fwd = ode::integrate_riccati(&p, 2, &t0, &t1, init.clone(), &tol).unwrap();
    let end = fwd.end_state();
    let back = ode::integrate_riccati(&p, 2, &t1, &t0, (end[0].clone(), end[1].clone()), &tol).unwrap();
    let got = back.end_state();
    assert!(num::normalized_diff(&got[0], &init.0) <= 1e-11);
    assert!(num::normalized_diff(&got[1], &init.1) <= 1e-11);
}

#[test]
fn seeded_riccati_run_reports_its_pole() {
    let p = ModelParams::from_f64(1.0, 0.04, 0.5, 256, 2).unwrap();
    let ctx = PrecisionContext::default();
    let init = ode::riccati_init(&p, &ctx, 2, &r(0.5)).unwrap();
    match ode::integrate_riccati(&p, 2, &r(0.5), &r(1.0), init, &r(1e-10)) {
        Err(Error::PoleHit { t, .. }) => {
            let t: f64 = t.parse().unwrap();
            assert!(t > 0.5 && t < 1.0);
        }
        other => panic!("expected a pole, got {other:?}"),
    }
}

#[test]
fn identical_inputs_identical_trajectories() {
    let p = ModelParams::from_f64(1.0, 0.04, 0.5, 256, 2).unwrap();
    let init = (r(3.0), r(-0.02));
    let a = ode::integrate_riccati(&p, 2, &r(0.5), &r(0.502), init.clone(), &r(1e-12)).unwrap();
    let b = ode::integrate_riccati(&p, 2, &r(0.5), &r(0.502), init, &r(1e-12)).unwrap();
    assert_eq!(a.t_points, b.t_points);
    assert_eq!(a.values, b.values);
}
