//! Initial value problems in `t`: the coupled Riccati system for
//! `(R_n, r_n)` and the Painleve V equation for `Phi_n`, both seeded from
//! quadrature and compared against quadrature along the way.

mod rk;

use rug::Float;

use crate::num;
use crate::quadrature::PrecisionContext;
use crate::verify::{self, fd_step, Snapshot};
use crate::weight::ModelParams;
use crate::{Error, Real, Result};

pub use rk::{hermite, integrate, Solution, Stats, System};

/// Distance from a singular value of the state at which integration halts.
pub const POLE_GUARD: f64 = 1e-8;

/// State magnitude treated as a blow-up (a movable pole in `t`).
pub const BLOW_UP: f64 = 1e8;

fn check_bounded(t: &Real, y: &[Real]) -> Result<()> {
    if y.iter().any(|v| !v.is_finite() || num::abs(v) > BLOW_UP) {
        return Err(pole(t, "state diverged".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrajectoryKind {
    /// State `(R_n, r_n)`.
    Riccati,
    /// State `(Phi_n, Phi_n')`.
    PainleveV,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub n: usize,
    pub params: ModelParams,
    /// Strictly increasing accepted mesh.
    pub t_points: Vec<Real>,
    pub values: Vec<Vec<Real>>,
    derivs: Vec<Vec<Real>>,
    pub stats: Stats,
    /// Where the integration started (first or last mesh point).
    pub t_start: Real,
    pub t_end: Real,
}

impl Trajectory {
    fn from_solution(kind: TrajectoryKind, n: usize, params: &ModelParams, mut sol: Solution) -> Self {
        let t_start = sol.ts[0].clone();
        let t_end = sol.ts.last().expect("non-empty").clone();
        if t_end < t_start {
            sol.ts.reverse();
            sol.ys.reverse();
            sol.fs.reverse();
        }
        Trajectory {
            kind,
            n,
            params: params.clone(),
            t_points: sol.ts,
            values: sol.ys,
            derivs: sol.fs,
            stats: sol.stats,
            t_start,
            t_end,
        }
    }

    pub fn start_state(&self) -> &[Real] {
        self.state_at_mesh(&self.t_start)
    }

    pub fn end_state(&self) -> &[Real] {
        self.state_at_mesh(&self.t_end)
    }

    fn state_at_mesh(&self, t: &Real) -> &[Real] {
        if self.t_points[0] == *t {
            &self.values[0]
        } else {
            self.values.last().expect("non-empty")
        }
    }

    /// Dense output by cubic Hermite interpolation on the accepted mesh.
    pub fn sample(&self, t: &Real) -> Result<Vec<Real>> {
        let first = &self.t_points[0];
        let last = self.t_points.last().expect("non-empty");
        if t < first || t > last {
            return Err(Error::DomainError(format!(
                "t = {} outside the trajectory span [{}, {}]",
                num::to_decimal(t),
                num::to_decimal(first),
                num::to_decimal(last)
            )));
        }
        let i = self.t_points.partition_point(|x| x <= t);
        if i == 0 || self.t_points[i - 1] == *t {
            return Ok(self.values[i.saturating_sub(1)].clone());
        }
        let (a, b) = (i - 1, i);
        Ok((0..self.values[a].len())
            .map(|k| {
                hermite(
                    t,
                    &self.t_points[a],
                    &self.t_points[b],
                    &self.values[a][k],
                    &self.values[b][k],
                    &self.derivs[a][k],
                    &self.derivs[b][k],
                )
            })
            .collect())
    }
}

/// `m = 2n + 2 alpha + 1`.
fn degree_shift(params: &ModelParams, n: usize) -> Real {
    let p = params.prec();
    Float::with_val(p, &params.alpha * 2u32) + (2 * n + 1) as u32
}

fn pole(t: &Real, detail: String) -> Error {
    Error::PoleHit { t: num::to_decimal(t), detail }
}

fn require_path(params: &ModelParams, t0: &Real, t1: &Real) -> Result<()> {
    if params.k2.is_zero() {
        return Err(Error::SingularParams("the t-equations need k2 != 0".into()));
    }
    if *t0 <= 0 || *t1 <= 0 {
        return Err(Error::InvalidConfig("integration interval must lie in t > 0".into()));
    }
    Ok(())
}

/// `2 k2 t R' = 2[k2(n+a+1)+t] R - 2 r (m + R) + k2 R^2 + 2 m t` and
/// `2 k2 t r' = 2[k2(n+a+1)+t] r - 2 m (r^2 - 2 t r)/R - r^2 - 2 k2 n t`.
pub struct Riccati {
    alpha: Real,
    k2: Real,
    n: Real,
    m: Real,
    guard: Real,
}

impl Riccati {
    pub fn new(params: &ModelParams, n: usize) -> Self {
        let p = params.prec();
        Riccati {
            alpha: params.alpha.clone(),
            k2: params.k2.clone(),
            n: num::int(p, n as i64),
            m: degree_shift(params, n),
            guard: num::real(p, POLE_GUARD),
        }
    }
}

impl System for Riccati {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, t: &Real, y: &[Real]) -> Result<Vec<Real>> {
        let p = t.prec();
        check_bounded(t, y)?;
        let (big_r, r) = (&y[0], &y[1]);
        if num::abs(big_r) < self.guard {
            return Err(pole(t, format!("R_n = {} reached 0", num::to_decimal(big_r))));
        }
        let lin = (self.n.clone() + &self.alpha + 1u32) * &self.k2 * 2u32 + Float::with_val(p, t * 2u32);
        let denom = self.k2.clone() * t * 2u32;
        let rr = Float::with_val(p, r * r);
        let dr_big = lin.clone() * big_r - r.clone() * (self.m.clone() + big_r) * 2u32
            + self.k2.clone() * Float::with_val(p, big_r * big_r)
            + self.m.clone() * t * 2u32;
        let dr = lin * r - self.m.clone() * (rr.clone() - Float::with_val(p, t * r) * 2u32) * 2u32 / big_r
            - rr
            - self.k2.clone() * &self.n * t * 2u32;
        Ok(vec![dr_big / &denom, dr / denom])
    }
}

/// `Phi'' = PV(Phi, Phi', t)` as a first-order system in `(Phi, Phi')`.
pub struct PainleveV {
    alpha: Real,
    k2: Real,
    m: Real,
    guard: Real,
}

impl PainleveV {
    pub fn new(params: &ModelParams, n: usize) -> Self {
        PainleveV {
            alpha: params.alpha.clone(),
            k2: params.k2.clone(),
            m: degree_shift(params, n),
            guard: num::real(params.prec(), POLE_GUARD),
        }
    }
}

impl System for PainleveV {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, t: &Real, y: &[Real]) -> Result<Vec<Real>> {
        check_bounded(t, y)?;
        let phi = &y[0];
        if num::abs(phi) < self.guard {
            return Err(pole(t, "Phi_n reached 0".into()));
        }
        if num::abs(&Float::with_val(phi.prec(), phi - 1u32)) < self.guard {
            return Err(pole(t, "Phi_n reached 1".into()));
        }
        let acc = verify::pv_rhs(phi, &y[1], t, &self.m, &self.alpha, &self.k2, t.prec());
        Ok(vec![y[1].clone(), acc])
    }
}

/// `y'' = -y` as `(y, y')`.
pub struct Harmonic;

impl System for Harmonic {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, _t: &Real, y: &[Real]) -> Result<Vec<Real>> {
        Ok(vec![y[1].clone(), -y[0].clone()])
    }
}

pub fn integrate_riccati(
    params: &ModelParams,
    n: usize,
    t0: &Real,
    t1: &Real,
    init: (Real, Real),
    tol: &Real,
) -> Result<Trajectory> {
    require_path(params, t0, t1)?;
    let sol = integrate(&Riccati::new(params, n), t0, t1, &[init.0, init.1], tol)?;
    Ok(Trajectory::from_solution(TrajectoryKind::Riccati, n, params, sol))
}

pub fn integrate_pv(
    params: &ModelParams,
    n: usize,
    t0: &Real,
    t1: &Real,
    init: (Real, Real),
    tol: &Real,
) -> Result<Trajectory> {
    require_path(params, t0, t1)?;
    let guard = num::real(params.prec(), POLE_GUARD);
    let phim1 = Float::with_val(params.prec(), &init.0 - 1u32);
    if num::abs(&init.0) < guard || num::abs(&phim1) < guard {
        return Err(pole(t0, "initial Phi_n at a pole of the right side".into()));
    }
    let sol = integrate(&PainleveV::new(params, n), t0, t1, &[init.0, init.1], tol)?;
    Ok(Trajectory::from_solution(TrajectoryKind::PainleveV, n, params, sol))
}

/// `(R_n(t), r_n(t))` from quadrature.
pub fn riccati_init(params: &ModelParams, ctx: &PrecisionContext, n: usize, t: &Real) -> Result<(Real, Real)> {
    let s = Snapshot::build(params, ctx, t, n.max(1))?;
    Ok((s.lad.big_r[n].clone(), s.lad.r[n].clone()))
}

/// `(Phi_n(t), Phi_n'(t))` from quadrature, the derivative by a central
/// difference with the verifier's step.
pub fn pv_init(params: &ModelParams, ctx: &PrecisionContext, n: usize, t: &Real) -> Result<(Real, Real)> {
    let p = params.prec();
    let m = degree_shift(params, n);
    let h = fd_step(t);
    let big_r = |s: &Real| -> Result<Real> { Ok(Snapshot::build(params, ctx, s, n.max(1))?.lad.big_r[n].clone()) };
    let mid = big_r(t)?;
    let plus = big_r(&Float::with_val(p, t + &h))?;
    let minus = big_r(&Float::with_val(p, t - &h))?;
    let phi = (mid + &m) / &m;
    let dphi = (plus - minus) / (h * 2u32) / &m;
    Ok((phi, dphi))
}

/// Largest normalized deviation between the trajectory's dense output and
/// quadrature rebuilt at each sample time.
pub fn crosscheck(traj: &Trajectory, ctx: &PrecisionContext, sample_ts: &[Real]) -> Result<Real> {
    let p = traj.params.prec();
    let mut worst = num::int(p, 0);
    for t in sample_ts {
        let got = traj.sample(t)?;
        let want = match traj.kind {
            TrajectoryKind::Riccati => {
                let (a, b) = riccati_init(&traj.params, ctx, traj.n, t)?;
                vec![a, b]
            }
            TrajectoryKind::PainleveV => {
                let (a, b) = pv_init(&traj.params, ctx, traj.n, t)?;
                vec![a, b]
            }
        };
        for (g, w) in got.iter().zip(&want) {
            worst = num::max(worst, &num::normalized_diff(g, w));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> Real {
        num::real(256, v)
    }

    #[test]
    fn harmonic_cosine() {
        let tol = num::parse(256, "1e-12").unwrap();
        let sol = integrate(&Harmonic, &r(0.0), &r(1.0), &[r(1.0), r(0.0)], &tol).unwrap();
        let end = &sol.ys.last().unwrap()[0];
        let exact = r(1.0).cos();
        assert!(num::abs(&(end.clone() - &exact)) < 1e-12);
    }

    #[test]
    fn zero_length_interval() {
        let params = ModelParams::from_f64(1.0, 0.04, 0.5, 256, 2).unwrap();
        let tr = integrate_riccati(&params, 2, &r(0.5), &r(0.5), (r(1.0), r(0.2)), &r(1e-10)).unwrap();
        assert_eq!(tr.t_points.len(), 1);
        assert_eq!(tr.end_state(), &[r(1.0), r(0.2)]);
    }

    #[test]
    fn backward_trajectory_is_ascending() {
        let params = ModelParams::from_f64(1.0, 0.04, 0.5, 256, 2).unwrap();
        let tr = integrate_riccati(&params, 2, &r(0.6), &r(0.59), (r(3.0), r(0.0)), &r(1e-10)).unwrap();
        assert!(tr.t_points.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(tr.t_start, 0.6);
        assert_eq!(tr.start_state(), &[r(3.0), r(0.0)]);
        let mid = tr.sample(&r(0.595)).unwrap();
        assert!(mid.iter().all(|v| v.is_finite()));
        assert!(tr.sample(&r(0.7)).is_err());
    }

    #[test]
    fn pole_guards() {
        let params = ModelParams::from_f64(1.0, 0.04, 0.5, 256, 2).unwrap();
        assert!(matches!(
            integrate_pv(&params, 1, &r(0.5), &r(0.6), (r(1.0), r(0.1)), &r(1e-10)),
            Err(Error::PoleHit { .. })
        ));
        assert!(matches!(
            integrate_riccati(&params, 1, &r(0.5), &r(0.6), (r(0.0), r(0.1)), &r(1e-10)),
            Err(Error::PoleHit { .. })
        ));
        let flat = ModelParams::from_f64(1.0, 0.0, 0.5, 256, 2).unwrap();
        assert!(matches!(
            integrate_riccati(&flat, 1, &r(0.5), &r(0.6), (r(1.0), r(0.1)), &r(1e-10)),
            Err(Error::SingularParams(_))
        ));
    }
}
