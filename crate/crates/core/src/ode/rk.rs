//! Dormand-Prince 5(4) with local extrapolation and error-per-unit-step
//! control.

use rug::Float;

use crate::num;
use crate::{Error, Real, Result};

/// First-order system `y' = f(t, y)`.
pub trait System {
    fn dim(&self) -> usize;
    fn rhs(&self, t: &Real, y: &[Real]) -> Result<Vec<Real>>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stats {
    pub steps: usize,
    pub rejected: usize,
    pub min_step: Real,
}

/// Accepted mesh with the derivative at every node.
#[derive(Clone, Debug)]
pub struct Solution {
    pub ts: Vec<Real>,
    pub ys: Vec<Vec<Real>>,
    pub fs: Vec<Vec<Real>>,
    pub stats: Stats,
}

const C: [(i64, i64); 6] = [(1, 5), (3, 10), (4, 5), (8, 9), (1, 1), (1, 1)];

const A: [&[(i64, i64)]; 6] = [
    &[(1, 5)],
    &[(3, 40), (9, 40)],
    &[(44, 45), (-56, 15), (32, 9)],
    &[(19372, 6561), (-25360, 2187), (64448, 6561), (-212, 729)],
    &[(9017, 3168), (-355, 33), (46732, 5247), (49, 176), (-5103, 18656)],
    &[(35, 384), (0, 1), (500, 1113), (125, 192), (-2187, 6784), (11, 84)],
];

/// Fifth-order minus fourth-order weights.
const E: [(i64, i64); 7] = [
    (71, 57600),
    (0, 1),
    (-71, 16695),
    (71, 1920),
    (-17253, 339200),
    (22, 525),
    (-1, 40),
];

struct Tableau {
    c: Vec<Real>,
    a: Vec<Vec<Real>>,
    e: Vec<Real>,
}

impl Tableau {
    fn new(p: u32) -> Self {
        let q = |(n, d): (i64, i64)| num::ratio(p, n, d);
        Tableau {
            c: C.iter().copied().map(q).collect(),
            a: A.iter().map(|row| row.iter().copied().map(q).collect()).collect(),
            e: E.iter().copied().map(q).collect(),
        }
    }
}

const MAX_STEPS: usize = 2_000_000;

/// Integrates from `t0` to `t1` (either direction). A step is accepted when
/// `max_i |err_i| / (|h| (1 + |y_i|)) <= tol`.
pub fn integrate<S: System + ?Sized>(sys: &S, t0: &Real, t1: &Real, y0: &[Real], tol: &Real) -> Result<Solution> {
    let p = t0.prec();
    if y0.len() != sys.dim() {
        return Err(Error::InvalidConfig(format!(
            "initial state has {} components, system needs {}",
            y0.len(),
            sys.dim()
        )));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("initial state is not finite".into()));
    }
    if !(tol.is_finite() && *tol > 0) {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    let f0 = sys.rhs(t0, y0)?;
    let span = Float::with_val(p, t1 - t0);
    let mut sol = Solution {
        ts: vec![t0.clone()],
        ys: vec![y0.to_vec()],
        fs: vec![f0.clone()],
        stats: Stats { steps: 0, rejected: 0, min_step: span.clone().abs() },
    };
    if span.is_zero() {
        return Ok(sol);
    }
    let tab = Tableau::new(p);
    let dir_neg = span < 0;
    let abs_span = span.clone().abs();
    let floor = Float::with_val(p, &abs_span * num::parse(p, "1e-24")?);
    // fourth root of tol: the step that makes the per-unit-step error O(tol)
    let mut h = num::min(
        Float::with_val(p, tol.clone().sqrt().sqrt() * &abs_span) / 10u32,
        &abs_span,
    );
    let mut t = t0.clone();
    let mut y = y0.to_vec();
    let mut f = f0;
    loop {
        let remaining = Float::with_val(p, t1 - &t).abs();
        if remaining.is_zero() {
            break;
        }
        let last = h >= remaining;
        if last {
            h = remaining.clone();
        }
        if h < floor {
            return Err(Error::StepUnderflow {
                t: num::to_decimal(&t),
                detail: format!("step {} below floor", num::to_decimal(&h)),
            });
        }
        if sol.stats.steps + sol.stats.rejected > MAX_STEPS {
            return Err(Error::StepUnderflow { t: num::to_decimal(&t), detail: "step budget exhausted".into() });
        }
        let hs = if dir_neg { -h.clone() } else { h.clone() };
        let (y_new, f_new, err) = attempt(sys, &tab, &t, &y, &f, &hs)?;
        let scaled = error_norm(&err, &y, &y_new, &h, tol);
        if scaled <= 1 {
            t = if last { t1.clone() } else { Float::with_val(p, &t + &hs) };
            y = y_new;
            f = f_new;
            sol.stats.steps += 1;
            if h < sol.stats.min_step {
                sol.stats.min_step = h.clone();
            }
            sol.ts.push(t.clone());
            sol.ys.push(y.clone());
            sol.fs.push(f.clone());
            if last {
                break;
            }
        } else {
            sol.stats.rejected += 1;
        }
        h *= step_factor(&scaled);
    }
    Ok(sol)
}

type Attempt = (Vec<Real>, Vec<Real>, Vec<Real>);

fn attempt<S: System + ?Sized>(sys: &S, tab: &Tableau, t: &Real, y: &[Real], f: &[Real], h: &Real) -> Result<Attempt> {
    let p = t.prec();
    let dim = y.len();
    let mut k: Vec<Vec<Real>> = vec![f.to_vec()];
    for (stage, row) in tab.a.iter().enumerate() {
        let mut ys = y.to_vec();
        for (i, yi) in ys.iter_mut().enumerate() {
            let mut acc = num::int(p, 0);
            for (j, aij) in row.iter().enumerate() {
                if !aij.is_zero() {
                    acc += Float::with_val(p, aij * &k[j][i]);
                }
            }
            *yi += acc * h;
        }
        let ts = Float::with_val(p, &tab.c[stage] * h) + t;
        let ki = sys.rhs(&ts, &ys)?;
        if stage == tab.a.len() - 1 {
            // FSAL: the last stage is evaluated at the new solution
            let mut err = vec![num::int(p, 0); dim];
            k.push(ki.clone());
            for (i, e) in err.iter_mut().enumerate() {
                for (j, ej) in tab.e.iter().enumerate() {
                    if !ej.is_zero() {
                        *e += Float::with_val(p, ej * &k[j][i]);
                    }
                }
                *e *= h;
            }
            if ys.iter().any(|v| !v.is_finite()) {
                return Err(Error::PoleHit { t: num::to_decimal(t), detail: "non-finite state".into() });
            }
            return Ok((ys, ki, err));
        }
        k.push(ki);
    }
    unreachable!("tableau has a final stage")
}

fn error_norm(err: &[Real], y: &[Real], y_new: &[Real], h: &Real, tol: &Real) -> Real {
    let p = h.prec();
    let mut worst = num::int(p, 0);
    for i in 0..err.len() {
        let scale = num::max(num::abs(&y[i]), &num::abs(&y_new[i])) + 1u32;
        let v = Float::with_val(p, err[i].abs_ref()) / scale;
        worst = num::max(worst, &v);
    }
    worst / Float::with_val(p, h * tol)
}

fn step_factor(scaled: &Real) -> f64 {
    let s = scaled.to_f64();
    if s == 0.0 {
        return 5.0;
    }
    (0.9 * s.powf(-0.25)).clamp(0.2, 5.0)
}

/// Cubic Hermite interpolation on `[t_a, t_b]`.
pub fn hermite(t: &Real, ta: &Real, tb: &Real, ya: &Real, yb: &Real, fa: &Real, fb: &Real) -> Real {
    let p = t.prec();
    let h = Float::with_val(p, tb - ta);
    let s = Float::with_val(p, t - ta) / &h;
    let s2 = Float::with_val(p, &s * &s);
    let s3 = Float::with_val(p, &s2 * &s);
    let h00 = Float::with_val(p, &s3 * 2u32) - Float::with_val(p, &s2 * 3u32) + 1u32;
    let h10 = Float::with_val(p, &s3 - Float::with_val(p, &s2 * 2u32)) + &s;
    let h01 = Float::with_val(p, &s2 * 3u32) - Float::with_val(p, &s3 * 2u32);
    let h11 = Float::with_val(p, &s3 - &s2);
    h00 * ya + h10 * &h * fa + h01 * yb + h11 * h * fb
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;

    impl System for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: &Real, y: &[Real]) -> Result<Vec<Real>> {
            Ok(vec![-y[0].clone()])
        }
    }

    #[test]
    fn tableau_consistency() {
        let tab = Tableau::new(256);
        for (i, row) in tab.a.iter().enumerate() {
            let s = row.iter().fold(num::int(256, 0), |acc, v| acc + v);
            assert!(num::rel_diff(&s, &tab.c[i]) < 1e-70, "row {i}");
        }
        let e = tab.e.iter().fold(num::int(256, 0), |acc, v| acc + v);
        assert!(e.abs() < 1e-70);
    }

    #[test]
    fn exponential_decay() {
        let tol = num::parse(256, "1e-14").unwrap();
        let sol = integrate(&Decay, &num::int(256, 0), &num::int(256, 2), &[num::int(256, 1)], &tol).unwrap();
        let exact = num::int(256, -2).exp();
        let end = sol.ys.last().unwrap()[0].clone();
        assert!(num::rel_diff(&end, &exact) < 1e-13);
        assert_eq!(*sol.ts.last().unwrap(), 2);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let r = |v: f64| num::real(256, v);
        let v = hermite(&r(0.3), &r(0.0), &r(1.0), &r(f(0.0)), &r(f(1.0)), &r(df(0.0)), &r(df(1.0)));
        assert!((v.to_f64() - f(0.3)).abs() < 1e-14);
    }
}
