use pv5_jacobi::verify::{self, check, check_suite, factor_split, fd_step, IdentityId, Snapshot, Status};
use pv5_jacobi::{num, Error, ModelParams, PrecisionContext, Real};

fn r(v: f64) -> Real {
    num::real(256, v)
}

fn dec(s: &str) -> Real {
    num::parse(256, s).unwrap()
}

fn params(alpha: f64, k2: f64, t: f64) -> ModelParams {
    ModelParams::from_f64(alpha, k2, t, 256, 4).unwrap()
}

#[test]
fn s1_at_sample_point() {
    let ctx = PrecisionContext::default();
    let rep = check(IdentityId::S1Func, &params(1.0, 0.25, 0.5), &ctx, 3, &r(0.5), Some(&dec("0.8"))).unwrap();
    assert!(rep.residual.unwrap() <= 1e-20);
    assert_eq!(rep.pass, Some(true));
}

#[test]
fn yj4_at_zero_t() {
    // classical weight: a_1 = 5 and R_1 = 0
    let ctx = PrecisionContext::default();
    let rep = check(IdentityId::Yj4, &params(1.0, -1.0, 0.0), &ctx, 1, &r(0.0), None).unwrap();
    assert!(rep.residual.unwrap() <= 1e-60);
    assert_eq!(rep.pass, None);
}

#[test]
fn r_sum_relations_first_degree() {
    // r_2 + r_1 = k2 R_1 + 2t, and its second-order companion
    let ctx = PrecisionContext::default();
    for id in [IdentityId::CS1R, IdentityId::CS2R] {
        let rep = check(id, &params(1.0, 0.25, 0.5), &ctx, 1, &r(0.5), None).unwrap();
        assert!(rep.residual.unwrap() <= 1e-20, "{id}");
    }
}

#[test]
fn check_error_contract() {
    let ctx = PrecisionContext::default();
    let p = params(1.0, 0.25, 0.5);
    assert!(matches!(check(IdentityId::Dbeta, &p, &ctx, 0, &r(0.5), None), Err(Error::IndexError(_))));
    assert!(matches!(
        check(IdentityId::RicR, &params(1.0, 0.0, 0.5), &ctx, 1, &r(0.5), None),
        Err(Error::SingularParams(_))
    ));
    assert!(matches!(check(IdentityId::S1Func, &p, &ctx, 1, &r(0.5), None), Err(Error::InvalidConfig(_))));
    assert!(matches!(check(IdentityId::Q1, &p, &ctx, 1, &r(0.5), Some(&r(0.8))), Err(Error::InvalidConfig(_))));
}

#[test]
fn empty_degree_set() {
    let ctx = PrecisionContext::default();
    let out = check_suite(&params(1.0, 0.25, 0.5), &ctx, IdentityId::ALL, &[], &[r(0.5)], &[r(0.8)]);
    assert!(out.is_empty());
}

#[test]
fn suite_order_and_skips() {
    let ctx = PrecisionContext::default();
    let p = params(1.0, 0.25, 0.5);
    let ids = [IdentityId::Dlnh, IdentityId::S1Func, IdentityId::Yj4, IdentityId::Dbeta];
    // t below the finite-difference step: no central stencil
    let tiny = dec("1e-7");
    let out = check_suite(&p, &ctx, &ids, &[2, 1], &[r(0.5), tiny.clone()], &[r(0.9), r(0.7)]);
    let keys: Vec<_> = out.iter().map(|x| (x.id, x.n, x.t.clone(), x.z.clone())).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
    for rep in &out {
        let derivative = rep.id.uses_derivative();
        if derivative && rep.t == tiny {
            assert!(matches!(rep.status, Status::Skipped(_)), "{:?}", rep.status);
            assert!(rep.residual.is_none());
        } else {
            assert_eq!(rep.status, Status::Ok, "{} at n = {}", rep.id, rep.n);
        }
    }
    // 2 z * 2 n * 2 t for S1, 2 n * 2 t for the rest
    assert_eq!(out.len(), 8 + 4 * 3);
}

#[test]
fn no_z_samples_is_explicit() {
    let ctx = PrecisionContext::default();
    let out = check_suite(&params(1.0, 0.25, 0.5), &ctx, &[IdentityId::S2Func], &[1], &[r(0.5)], &[]);
    assert_eq!(out.len(), 1);
    assert!(matches!(out[0].status, Status::Skipped(_)));
}

/// Both bracketed factors expanded by hand into monomials.
fn expanded_product(t: f64, k2: f64, n: f64, a: f64, big_r: f64, r: f64, r1: f64) -> f64 {
    let p = |x: f64, e: i32| x.powi(e);
    let terms = [
        2.0 * p(big_r, 3) * a * p(k2, 2) * r,
        2.0 * p(big_r, 3) * p(k2, 2) * n * r,
        -2.0 * p(big_r, 3) * p(k2, 2) * n * t,
        -p(big_r, 3) * k2 * p(r, 2),
        2.0 * p(big_r, 3) * k2 * r * t,
        4.0 * p(big_r, 2) * p(a, 2) * p(k2, 2) * r,
        8.0 * p(big_r, 2) * a * p(k2, 2) * n * r,
        -4.0 * p(big_r, 2) * a * p(k2, 2) * n * t,
        4.0 * p(big_r, 2) * a * p(k2, 2) * r,
        -10.0 * p(big_r, 2) * a * k2 * p(r, 2),
        16.0 * p(big_r, 2) * a * k2 * r * t,
        4.0 * p(big_r, 2) * p(k2, 2) * p(n, 2) * r,
        -4.0 * p(big_r, 2) * p(k2, 2) * p(n, 2) * t,
        4.0 * p(big_r, 2) * p(k2, 2) * n * r,
        -4.0 * p(big_r, 2) * p(k2, 2) * n * t,
        -10.0 * p(big_r, 2) * k2 * n * p(r, 2),
        20.0 * p(big_r, 2) * k2 * n * r * t,
        -4.0 * p(big_r, 2) * k2 * n * p(t, 2),
        -4.0 * p(big_r, 2) * k2 * p(r, 2),
        8.0 * p(big_r, 2) * k2 * r * t,
        2.0 * p(big_r, 2) * p(r, 3),
        -6.0 * p(big_r, 2) * p(r, 2) * t,
        4.0 * p(big_r, 2) * r * p(t, 2),
        -4.0 * big_r * r1 * a * p(k2, 2) * r * t,
        -4.0 * big_r * r1 * p(k2, 2) * n * r * t,
        4.0 * big_r * r1 * p(k2, 2) * n * p(t, 2),
        2.0 * big_r * r1 * k2 * p(r, 2) * t,
        -4.0 * big_r * r1 * k2 * r * p(t, 2),
        -16.0 * big_r * p(a, 2) * k2 * p(r, 2),
        24.0 * big_r * p(a, 2) * k2 * r * t,
        -32.0 * big_r * a * k2 * n * p(r, 2),
        56.0 * big_r * a * k2 * n * r * t,
        -8.0 * big_r * a * k2 * n * p(t, 2),
        -16.0 * big_r * a * k2 * p(r, 2),
        28.0 * big_r * a * k2 * r * t,
        12.0 * big_r * a * p(r, 3),
        -36.0 * big_r * a * p(r, 2) * t,
        24.0 * big_r * a * r * p(t, 2),
        -16.0 * big_r * k2 * p(n, 2) * p(r, 2),
        32.0 * big_r * k2 * p(n, 2) * r * t,
        -8.0 * big_r * k2 * p(n, 2) * p(t, 2),
        -16.0 * big_r * k2 * n * p(r, 2),
        32.0 * big_r * k2 * n * r * t,
        -4.0 * big_r * k2 * n * p(t, 2),
        -4.0 * big_r * k2 * p(r, 2),
        8.0 * big_r * k2 * r * t,
        12.0 * big_r * n * p(r, 3),
        -36.0 * big_r * n * p(r, 2) * t,
        24.0 * big_r * n * r * p(t, 2),
        6.0 * big_r * p(r, 3),
        -18.0 * big_r * p(r, 2) * t,
        12.0 * big_r * r * p(t, 2),
        8.0 * r1 * a * k2 * p(r, 2) * t,
        -16.0 * r1 * a * k2 * r * p(t, 2),
        8.0 * r1 * k2 * n * p(r, 2) * t,
        -16.0 * r1 * k2 * n * r * p(t, 2),
        4.0 * r1 * k2 * p(r, 2) * t,
        -8.0 * r1 * k2 * r * p(t, 2),
        16.0 * p(a, 2) * p(r, 3),
        -48.0 * p(a, 2) * p(r, 2) * t,
        32.0 * p(a, 2) * r * p(t, 2),
        32.0 * a * n * p(r, 3),
        -96.0 * a * n * p(r, 2) * t,
        64.0 * a * n * r * p(t, 2),
        16.0 * a * p(r, 3),
        -48.0 * a * p(r, 2) * t,
        32.0 * a * r * p(t, 2),
        16.0 * p(n, 2) * p(r, 3),
        -48.0 * p(n, 2) * p(r, 2) * t,
        32.0 * p(n, 2) * r * p(t, 2),
        16.0 * n * p(r, 3),
        -48.0 * n * p(r, 2) * t,
        32.0 * n * r * p(t, 2),
        4.0 * p(r, 3),
        -12.0 * p(r, 2) * t,
        8.0 * r * p(t, 2),
    ];
    terms.iter().sum()
}

#[test]
fn factor_product_matches_expansion() {
    let ctx = PrecisionContext::default();
    let (alpha, k2, n) = (1.0, 0.04, 2usize);
    let p = params(alpha, k2, 0.5);
    let t = r(0.5);
    let (f1, f2) = factor_split(&p, &ctx, n, &t).unwrap();
    assert!(f1.is_finite() && f2.is_finite());

    let h = fd_step(&t);
    let at = |s: Real| Snapshot::build(&p, &ctx, &s, n).unwrap();
    let mid = at(t.clone());
    let plus = at(t.clone() + &h);
    let minus = at(t.clone() - &h);
    let slope = (plus.lad.big_r[n].clone() - &minus.lad.big_r[n]) / (h * 2u32);
    let want = expanded_product(
        0.5,
        k2,
        n as f64,
        alpha,
        mid.lad.big_r[n].to_f64(),
        mid.lad.r[n].to_f64(),
        slope.to_f64(),
    );
    let got = (f1.clone() * &f2).to_f64();
    assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{got} vs {want}");
    println!("factor1 = {:.6e}, factor2 = {:.6e}", f1.to_f64(), f2.to_f64());
}

#[test]
fn factor_split_contract() {
    let ctx = PrecisionContext::default();
    assert!(matches!(factor_split(&params(1.0, 0.04, 0.5), &ctx, 0, &r(0.5)), Err(Error::IndexError(_))));
    assert!(matches!(factor_split(&params(1.0, 0.0, 0.5), &ctx, 1, &r(0.5)), Err(Error::SingularParams(_))));
    // stencil reaching t < 0 is an error, never NaN
    assert!(factor_split(&params(1.0, 0.04, 0.5), &ctx, 1, &dec("1e-7")).is_err());
}

#[test]
fn zero_k2_blocking_lists_offenders() {
    let blocked = verify::blocked_at_zero_k2(&params(1.0, 0.0, 0.5), IdentityId::ALL);
    assert!(blocked.contains(&IdentityId::PvPhi));
    assert!(!blocked.contains(&IdentityId::S1Func));
    assert!(verify::blocked_at_zero_k2(&params(1.0, 0.25, 0.5), IdentityId::ALL).is_empty());
}
