//! Both sides of every identity, evaluated from quadrature-backed states.

use rug::Float;

use super::suite::{Snapshot, Stencil};
use super::IdentityId;
use crate::ladder::{self, LadderFunctions};
use crate::num;
use crate::quadrature::PrecisionContext;
use crate::weight::{self, ModelParams};
use crate::{Error, Real, Result};

/// Residual of one evaluation and the magnitude it is measured against.
#[derive(Clone, Debug)]
pub(crate) struct Measured {
    pub residual: Real,
    pub scale: Option<Real>,
}

/// `|lhs - rhs| / (1 + max(|lhs|, |rhs|))`.
fn compare(lhs: Real, rhs: Real) -> Measured {
    let scale = num::max(num::abs(&lhs), &num::abs(&rhs));
    let diff = (lhs - &rhs).abs();
    let denom = Float::with_val(scale.prec(), &scale + 1u32);
    Measured { residual: diff / denom, scale: Some(scale) }
}

/// Relation written as `sum(terms) = 0`, divided by the largest term.
fn vanish(terms: &[Real]) -> Measured {
    let scale = terms
        .iter()
        .fold(num::int(terms[0].prec(), 0), |acc, t| num::max(acc, &num::abs(t)));
    Measured { residual: ladder::term_residual(terms), scale: Some(scale) }
}

fn sum(terms: &[Real]) -> Real {
    let mut acc = num::int(terms[0].prec(), 0);
    for t in terms {
        acc += t;
    }
    acc
}

fn nonzero_k2(params: &ModelParams, id: IdentityId) -> Result<()> {
    if params.k2.is_zero() {
        return Err(Error::SingularParams(format!("{id} needs k2 != 0")));
    }
    Ok(())
}

fn nonzero(x: &Real, what: &str) -> Result<()> {
    if x.is_zero() {
        return Err(Error::SingularParams(format!("{what} vanishes")));
    }
    Ok(())
}

/// Scalars shared by the coefficient identities at one `(n, t)`.
struct Local<'a> {
    s: &'a Snapshot,
    n: usize,
    p: u32,
    nr: Real,
    alpha: Real,
    k2: Real,
    t: Real,
    /// `2n + 2 alpha + 1`
    m: Real,
}

impl<'a> Local<'a> {
    fn new(s: &'a Snapshot, n: usize) -> Self {
        let params = &s.ortho.params;
        let p = params.prec();
        let nr = num::int(p, n as i64);
        let m = Float::with_val(p, &nr * 2u32) + Float::with_val(p, &params.alpha * 2u32) + 1u32;
        Local {
            s,
            n,
            p,
            nr,
            alpha: params.alpha.clone(),
            k2: params.k2.clone(),
            t: params.t.clone(),
            m,
        }
    }

    fn int(&self, v: i64) -> Real {
        num::int(self.p, v)
    }
    fn a(&self, j: usize) -> Real {
        self.s.lad.a[j].clone()
    }
    fn b(&self, j: usize) -> Real {
        self.s.lad.b[j].clone()
    }
    fn big_r(&self, j: usize) -> Real {
        self.s.lad.big_r[j].clone()
    }
    fn r(&self, j: usize) -> Real {
        self.s.lad.r[j].clone()
    }
    fn beta(&self, j: usize) -> Real {
        self.s.ortho.beta[j].clone()
    }
    fn p_sub(&self, j: usize) -> Real {
        self.s.ortho.p_sub_integral[j].clone()
    }
    /// `2n + 2 alpha + s` for integer shift `s`.
    fn shifted(&self, s: i32) -> Real {
        self.m.clone() + (s - 1)
    }
    fn sum_a(&self) -> Real {
        (0..self.n).fold(self.int(0), |acc, j| acc + &self.s.lad.a[j])
    }
    fn sum_big_r(&self) -> Real {
        (0..self.n).fold(self.int(0), |acc, j| acc + &self.s.lad.big_r[j])
    }
}

fn check_range(id: IdentityId, n: usize, n_max: usize) -> Result<()> {
    if n < id.min_n() {
        return Err(Error::IndexError(format!("{id} needs n >= {}, got {n}", id.min_n())));
    }
    if n + id.lookahead() > n_max {
        return Err(Error::IndexError(format!(
            "{id} at n = {n} needs degree {} but the state stops at {n_max}",
            n + id.lookahead()
        )));
    }
    Ok(())
}

/// Checks evaluated at a sampled `z`.
pub(crate) fn at_z(id: IdentityId, n: usize, s: &Snapshot, f: &LadderFunctions) -> Result<Measured> {
    check_range(id, n, s.ortho.n_max())?;
    let o = &s.ortho;
    let p = o.prec();
    let z = &f.z;
    let vp = || weight::v_prime(z, &o.params);
    let big_a = |j: usize| f.a[j].clone();
    let big_b = |j: usize| f.b[j].clone();
    let beta = |j: usize| o.beta[j].clone();
    Ok(match id {
        IdentityId::S1Func => {
            let lhs = big_b(n + 1) + &f.b[n];
            let rhs = big_a(n) * z - vp()?;
            compare(lhs, rhs)
        }
        IdentityId::S2Func => {
            let lhs = (big_b(n + 1) - &f.b[n]) * z + 1u32;
            let mut rhs = beta(n + 1) * &f.a[n + 1];
            if n > 0 {
                rhs -= beta(n) * &f.a[n - 1];
            }
            compare(lhs, rhs)
        }
        IdentityId::S2pFunc => {
            let bn = big_b(n);
            let partial = f.a[..n].iter().fold(num::int(p, 0), |acc, v| acc + v);
            let lhs = Float::with_val(p, &bn * &bn) + vp()? * &bn + partial;
            let rhs = beta(n) * &f.a[n] * &f.a[n - 1];
            compare(lhs, rhs)
        }
        IdentityId::ARational => compare(ladder::a_rational(n, z, o, &s.lad)?, big_a(n)),
        IdentityId::BRational => compare(ladder::b_rational(n, z, o, &s.lad)?, big_b(n)),
        IdentityId::Lowering => Measured { residual: ladder::lowering_residual(n, o, f)?, scale: None },
        IdentityId::Raising => Measured { residual: ladder::raising_residual(n, o, f)?, scale: None },
        _ => unreachable!("{id} is not a z check"),
    })
}

/// Checks that need only the state at `t`.
pub(crate) fn at_t(id: IdentityId, n: usize, s: &Snapshot) -> Result<Measured> {
    use IdentityId::*;
    check_range(id, n, s.ortho.n_max())?;
    if id.needs_nonzero_k2() {
        nonzero_k2(&s.ortho.params, id)?;
    }
    let l = Local::new(s, n);
    let (k2, t, alpha, nr) = (&l.k2, &l.t, &l.alpha, &l.nr);
    let two = |x: Real| x * 2u32;
    let sq = |x: &Real| Float::with_val(l.p, x * x);
    Ok(match id {
        BetaRoutes => compare(l.beta(n), l.p_sub(n) - l.p_sub(n + 1)),
        PTelescope => {
            let acc = (0..n).fold(l.int(0), |acc, j| acc + &s.ortho.beta[j]);
            compare(acc, -l.p_sub(n))
        }
        CS1B => compare(l.b(n + 1) + l.b(n), l.a(n) - two(alpha.clone())),
        CS1R => compare(l.r(n + 1) + l.r(n), l.big_r(n) * k2 + two(t.clone())),
        CS2B => compare(
            l.b(n + 1) - l.b(n),
            l.beta(n + 1) * l.a(n + 1) - l.beta(n) * l.a(n - 1),
        ),
        CS2R => compare(
            l.r(n + 1) - l.r(n),
            l.beta(n + 1) * l.big_r(n + 1) - l.beta(n) * l.big_r(n - 1),
        ),
        CS2Mix => {
            let lhs = l.r(n + 1) - l.r(n) + (k2.clone() - 1u32) * (l.b(n + 1) - l.b(n)) - k2;
            let rhs = l.beta(n) * l.shifted(-1) - l.beta(n + 1) * l.shifted(3);
            compare(lhs, rhs)
        }
        Yj3 => {
            let lhs = l.b(n + 1) - l.b(n);
            let rhs = l.beta(n) * (l.big_r(n - 1) + l.shifted(-1))
                - l.beta(n + 1) * (l.big_r(n + 1) + l.shifted(3));
            compare(lhs, rhs)
        }
        Yj4 => compare(l.a(n), l.big_r(n) + &l.m),
        TeleSum => {
            let lhs = l.r(n) + (k2.clone() - 1u32) * l.b(n) - Float::with_val(l.p, nr * k2);
            let rhs = -(l.beta(n) * &l.m) + two(l.p_sub(n));
            compare(lhs, rhs)
        }
        Q1 | Qp1 => {
            let b = l.b(n);
            compare(sq(&b) + two(alpha.clone()) * &b, l.beta(n) * l.a(n) * l.a(n - 1))
        }
        Q2 | Qp2 => {
            let r = l.r(n);
            compare(sq(&r) - two(t.clone()) * &r, l.beta(n) * k2 * l.big_r(n) * l.big_r(n - 1))
        }
        Q3 => {
            let b = l.b(n);
            compare(sq(&b) + l.sum_a(), two(nr.clone()) * (b + alpha))
        }
        Q4 => {
            let (b, r) = (l.b(n), l.r(n));
            let lhs = two(b) * (r.clone() - t) + two(alpha.clone()) * &r;
            let rhs = l.beta(n) * (l.a(n) * l.big_r(n - 1) + l.a(n - 1) * l.big_r(n));
            compare(lhs, rhs)
        }
        Q5 => {
            let (bm, r) = (l.b(n) - nr, l.r(n));
            let lhs = sq(&bm) * k2 - two(t.clone()) * &bm + two(r) * &bm + l.sum_big_r() * k2;
            compare(lhs, l.beta(n) * l.big_r(n) * l.big_r(n - 1))
        }
        Q6 => {
            let (b, r) = (l.b(n), l.r(n));
            let lhs = two(k2.clone()) * (b.clone() - nr) * (b.clone() + alpha)
                + two(b) * (r.clone() - t)
                + two(alpha.clone()) * &r;
            let rhs = l.beta(n) * (l.a(n - 1) * l.big_r(n) + l.a(n) * l.big_r(n - 1));
            compare(lhs, rhs)
        }
        Q7 | Qp7 => {
            let (bm, r) = (l.b(n) - nr, l.r(n));
            let lhs = sq(&r) - two(t.clone()) * &r + two(k2.clone()) * bm * (r - t);
            compare(lhs, two(k2.clone()) * l.beta(n) * l.big_r(n) * l.big_r(n - 1))
        }
        Qp3 => {
            let b = l.b(n);
            compare(sq(&b) + two(alpha.clone()) * &b, l.sum_a())
        }
        Qp4 => {
            let (b, r) = (l.b(n), l.r(n));
            let lhs = two(b.clone()) * &r + two(alpha.clone()) * &r - two(alpha.clone()) * t * &b;
            let rhs = l.beta(n) * k2 * (l.a(n) * l.big_r(n - 1) + l.a(n - 1) * l.big_r(n));
            compare(lhs, rhs)
        }
        Qp5 => {
            let (b, r) = (l.b(n), l.r(n));
            let bm = b.clone() - nr;
            let lhs = sq(&bm) * k2 - two(t.clone()) * &bm - two(r) * (nr.clone() + alpha)
                + two(alpha.clone()) * t * &b
                + l.sum_big_r() * k2;
            compare(lhs, l.beta(n) * l.big_r(n) * l.big_r(n - 1))
        }
        Qp6 => {
            let b = l.b(n);
            let lhs = two(b.clone() + alpha) * (b - nr);
            let rhs = l.beta(n) * (l.a(n - 1) * l.big_r(n) + l.a(n) * l.big_r(n - 1));
            compare(lhs, rhs)
        }
        MutexWitness => {
            let b = l.b(n);
            vanish(&[sq(&b), (alpha.clone() - nr) * &b, -(alpha.clone() * nr)])
        }
        Zhu232 => {
            let r = l.r(n);
            let beta_k2 = l.beta(n) * k2;
            vanish(&[
                sq(&r),
                -(two(k2.clone()) * (nr.clone() + alpha) * &r),
                two(k2.clone()) * t * nr,
                -(two(t.clone()) * &r),
                beta_k2.clone() * l.big_r(n) * l.shifted(-1),
                beta_k2 * l.big_r(n - 1) * &l.m,
            ])
        }
        BetaExpr => {
            let (big_r, r) = (l.big_r(n), l.r(n));
            nonzero(&big_r, "R_n")?;
            let c = l.shifted(-1);
            let first = two(k2.clone()) * (nr.clone() + alpha) * &r - two(k2.clone()) * t * nr
                + two(t.clone()) * &r
                - sq(&r);
            let first = first / (k2.clone() * &big_r * &c);
            let second = l.m.clone() * (sq(&r) - two(t.clone()) * &r) / (k2.clone() * sq(&big_r) * &c);
            compare(l.beta(n), first - second)
        }
        _ => unreachable!("{id} is not a pointwise check"),
    })
}

/// `R_n`, `r_n` and their `t`-derivatives from a central stencil.
struct Flow {
    big_r: Real,
    r: Real,
    big_r1: Real,
    big_r2: Real,
    r1: Real,
}

impl Flow {
    fn new(st: &Stencil<'_>, n: usize) -> Self {
        let big_r = |s: &Snapshot| s.lad.big_r[n].clone();
        let r = |s: &Snapshot| s.lad.r[n].clone();
        Flow {
            big_r: big_r(st.mid),
            r: r(st.mid),
            big_r1: st.d1(big_r),
            big_r2: st.d2(big_r),
            r1: st.d1(r),
        }
    }
}

/// `2 [k2 (n + alpha + 1) + t]`
fn riccati_linear(l: &Local<'_>) -> Real {
    ((l.nr.clone() + &l.alpha + 1u32) * &l.k2 + &l.t) * 2u32
}

/// Right side of `2 k2 t r_n' = ...` for given `R_n`, `r_n`.
fn riccati_r_rhs(l: &Local<'_>, big_r: &Real, r: &Real) -> Real {
    let p = l.p;
    let r2 = Float::with_val(p, r * r);
    let two_t = l.t.clone() * 2u32;
    riccati_linear(l) * r
        - (l.m.clone() * 2u32) * (r2.clone() - two_t * r) / big_r
        - r2
        - l.k2.clone() * &l.nr * &l.t * 2u32
}

/// Right side of `2 k2 t R_n' = ...`.
fn riccati_big_r_rhs(l: &Local<'_>, big_r: &Real, r: &Real) -> Real {
    let p = l.p;
    riccati_linear(l) * big_r - (r.clone() * 2u32) * (l.m.clone() + big_r)
        + l.k2.clone() * Float::with_val(p, big_r * big_r)
        + l.m.clone() * &l.t * 2u32
}

/// Terms of the two bracketed factors of the product equation.
fn factor_terms(l: &Local<'_>, f: &Flow) -> (Vec<Real>, Vec<Real>) {
    let (k2, t, m, nr, alpha) = (&l.k2, &l.t, &l.m, &l.nr, &l.alpha);
    let (big_r, r) = (&f.big_r, &f.r);
    let p = l.p;
    let rr = Float::with_val(p, r * r);
    let first = vec![
        t.clone() * big_r * 2u32,
        k2.clone() * (nr.clone() + alpha + 1u32) * big_r * 2u32,
        k2.clone() * Float::with_val(p, big_r * big_r),
        -(r.clone() * (m.clone() + big_r) * 2u32),
        t.clone() * m * 2u32,
        -(k2.clone() * t * &f.big_r1 * 2u32),
    ];
    let second = vec![
        m.clone() * t * r * 4u32,
        -(m.clone() * &rr * 2u32),
        t.clone() * r * big_r * 2u32,
        k2.clone() * nr * r * big_r * 2u32,
        k2.clone() * alpha * r * big_r * 2u32,
        -(rr * big_r),
        -(k2.clone() * nr * t * big_r * 2u32),
    ];
    (first, second)
}

/// The nine terms of the second-order equation for `R_n`.
fn ode_terms(l: &Local<'_>, f: &Flow) -> Vec<Real> {
    let (k2, t, m, nr, alpha) = (&l.k2, &l.t, &l.m, &l.nr, &l.alpha);
    let p = l.p;
    let big_r = &f.big_r;
    let k4 = Float::with_val(p, k2 * k2);
    let t2 = Float::with_val(p, t * t);
    let rpow = |e: u32| Float::with_val(p, rug::ops::Pow::pow(big_r, e));
    let m_plus_r = m.clone() + big_r;
    let na = nr.clone() + alpha;
    let cubic = k4.clone() * &na * (na.clone() + 1u32) - &t2 - k2.clone() * alpha * t * 2u32;
    vec![
        k4.clone() * &t2 * big_r * &m_plus_r * &f.big_r2 * 8u32,
        -(k4.clone() * &t2 * (na * 4u32 + 2u32 + big_r.clone() * 3u32)
            * Float::with_val(p, &f.big_r1 * &f.big_r1)
            * 4u32),
        k4.clone() * t * big_r * &m_plus_r * &f.big_r1 * 8u32,
        -(k4.clone() * rpow(5)),
        -(k4.clone() * m * rpow(4) * 2u32),
        -(cubic * rpow(3) * 4u32),
        t.clone() * m * (t.clone() + k2.clone() * alpha) * rpow(2) * 16u32,
        t.clone() * Float::with_val(p, m * m) * (t.clone() * 5u32 + k2.clone() * alpha * 2u32) * big_r * 4u32,
        t2 * Float::with_val(p, rug::ops::Pow::pow(m, 3u32)) * 8u32,
    ]
}

/// Checks built on `t`-derivatives, evaluated with one stencil.
pub(crate) fn with_stencil(id: IdentityId, n: usize, st: &Stencil<'_>) -> Result<Measured> {
    use IdentityId::*;
    let s = st.mid;
    check_range(id, n, s.ortho.n_max())?;
    if id.needs_nonzero_k2() {
        nonzero_k2(&s.ortho.params, id)?;
    }
    let l = Local::new(s, n);
    let two_t = l.t.clone() * 2u32;
    Ok(match id {
        Dlnh => {
            let d = st.d1(|s| s.ortho.h[n].clone().ln());
            compare(two_t * d, -l.big_r(n))
        }
        Dbeta => {
            let d = st.d1(|s| s.ortho.beta[n].clone());
            compare(two_t * d, l.beta(n) * (l.big_r(n - 1) - l.big_r(n)))
        }
        Dp => {
            let d = st.d1(|s| s.ortho.p_sub_integral[n].clone());
            compare(two_t * d, l.r(n) - l.beta(n) * l.big_r(n))
        }
        RicR => {
            let f = Flow::new(st, n);
            nonzero(&f.big_r, "R_n")?;
            let lhs = two_t * &l.k2 * &f.r1;
            compare(lhs, riccati_r_rhs(&l, &f.big_r, &f.r))
        }
        RicBigR => {
            let f = Flow::new(st, n);
            let lhs = two_t * &l.k2 * &f.big_r1;
            compare(lhs, riccati_big_r_rhs(&l, &f.big_r, &f.r))
        }
        RicElim => {
            let f = Flow::new(st, n);
            nonzero(&f.big_r, "R_n")?;
            // r_n solved from the R_n equation, differentiated exactly
            let (k2, t, m) = (&l.k2, &l.t, &l.m);
            let lin = riccati_linear(&l);
            let big_r = &f.big_r;
            let num = lin.clone() * big_r
                + k2.clone() * Float::with_val(l.p, big_r * big_r)
                + m.clone() * t * 2u32
                - k2.clone() * t * &f.big_r1 * 2u32;
            let den = (m.clone() + big_r) * 2u32;
            nonzero(&den, "2n + 2 alpha + 1 + R_n")?;
            let num1 = big_r.clone() * 2u32 + lin * &f.big_r1 + k2.clone() * big_r * &f.big_r1 * 2u32
                + m.clone() * 2u32
                - k2.clone() * &f.big_r1 * 2u32
                - k2.clone() * t * &f.big_r2 * 2u32;
            let den1 = f.big_r1.clone() * 2u32;
            let r = num.clone() / &den;
            let r1 = (num1 * &den - num * den1) / Float::with_val(l.p, &den * &den);
            compare(two_t * k2 * r1, riccati_r_rhs(&l, big_r, &r))
        }
        FactorProd => {
            let f = Flow::new(st, n);
            let (a, b) = factor_terms(&l, &f);
            let va = vanish(&a);
            let vb = vanish(&b);
            let scale = match (va.scale, vb.scale) {
                (Some(x), Some(y)) => Some(x * y),
                _ => None,
            };
            Measured { residual: va.residual * vb.residual, scale }
        }
        OdeRn => vanish(&ode_terms(&l, &Flow::new(st, n))),
        PvPhi => {
            let f = Flow::new(st, n);
            let m = &l.m;
            let phi = (f.big_r.clone() + m) / m;
            let phi1 = f.big_r1.clone() / m;
            let phi2 = f.big_r2.clone() / m;
            pv_compare(&l, &phi, &phi1, phi2, &s.ortho.params)?
        }
        _ => unreachable!("{id} is not a derivative check"),
    })
}

/// `Phi''` against the Painleve V right-hand side with
/// `gamma = m^2/8, delta = -1/8, epsilon = -alpha/k2, eta = -1/(2 k2^2)`.
fn pv_compare(l: &Local<'_>, phi: &Real, phi1: &Real, phi2: Real, params: &ModelParams) -> Result<Measured> {
    let p = l.p;
    let guard = params.pole_guard();
    let phim1 = phi.clone() - 1u32;
    if num::abs(phi) < guard || num::abs(&phim1) < guard {
        return Err(Error::PoleError(format!("Phi_n = {} at a pole of the right side", num::to_decimal(phi))));
    }
    Ok(compare(phi2, pv_rhs(phi, phi1, &l.t, &l.m, &l.alpha, &l.k2, p)))
}

/// Painleve V right-hand side for `Phi_n` at degree-dependent `m = 2n + 2 alpha + 1`.
pub fn pv_rhs(phi: &Real, phi1: &Real, t: &Real, m: &Real, alpha: &Real, k2: &Real, p: u32) -> Real {
    let gamma = Float::with_val(p, m * m) / 8u32;
    let delta = num::ratio(p, -1, 8);
    let epsilon = -(alpha.clone() / k2);
    let eta = -(num::int(p, 1) / (Float::with_val(p, k2 * k2) * 2u32));
    let phim1 = phi.clone() - 1u32;
    let phi1_sq = Float::with_val(p, phi1 * phi1);
    let t2 = Float::with_val(p, t * t);
    (phi.clone() * 3u32 - 1u32) * phi1_sq / (phi.clone() * &phim1 * 2u32) - phi1.clone() / t
        + Float::with_val(p, &phim1 * &phim1) / t2 * (gamma * phi + delta / phi)
        + epsilon * phi / t
        + eta * phi * (phi.clone() + 1u32) / phim1
}

/// The two bracketed factors of the product equation at `(n, t)`; the
/// first is `RIC_BIGR` moved to one side.
pub fn factor_split(params: &ModelParams, ctx: &PrecisionContext, n: usize, t: &Real) -> Result<(Real, Real)> {
    nonzero_k2(params, IdentityId::FactorProd)?;
    if n < 1 {
        return Err(Error::IndexError("factor_split needs n >= 1".into()));
    }
    let snaps = super::suite::StencilSet::build(params, ctx, n, t)?;
    let st = snaps.stencil(false);
    let l = Local::new(st.mid, n);
    let f = Flow::new(&st, n);
    let (a, b) = factor_terms(&l, &f);
    Ok((sum(&a), sum(&b)))
}
