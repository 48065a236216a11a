//! Monic orthogonal polynomials `P_n(z; t)`, norms `h_n`, recurrence
//! coefficients `beta_n` and sub-leading coefficients `p(n, t)` via the
//! Stieltjes procedure on a tanh-sinh discretisation of the weight.
//!
//! The weight is even, so `z P_n = P_{n+1} + beta_n P_{n-1}` with no
//! diagonal term and `P_n(z) = z^n + p(n) z^{n-2} + ...`.

use std::sync::Arc;

use rug::Float;

use crate::num;
use crate::quadrature::{self, Measure, PrecisionContext, Sums, START_LEVEL};
use crate::weight::{self, ModelParams};
use crate::{Error, Real, Result};

/// Polynomial data at fixed `(params, t)`. Immutable once built.
#[derive(Clone, Debug)]
pub struct OrthoState {
    pub params: ModelParams,
    /// `h[n] = h_n`, `0 <= n <= n_max`.
    pub h: Vec<Real>,
    /// `beta[n] = h_n / h_{n-1}`, `beta[0] = 0`.
    pub beta: Vec<Real>,
    /// `p_sub[n] = p(n, t)` for `0 <= n <= n_max + 1`, from
    /// `p(n + 1) = p(n) - beta_n`.
    pub p_sub: Vec<Real>,
    /// `p(n, t) = -(1/h_{n-2}) int z^n P_{n-2} w`, computed independently of
    /// the `beta` recursion.
    pub p_sub_integral: Vec<Real>,
    /// `max_n |int z P_n^2 w| / h_n`; zero for an exactly even measure.
    pub symmetry_defect: Real,
    /// Largest relative fine/coarse disagreement at the accepted level.
    pub convergence: Real,
    measure: Arc<Measure>,
}

struct Stieltjes {
    h: Vec<Real>,
    beta: Vec<Real>,
    p_integral: Vec<Real>,
    symmetry: Real,
}

/// One Stieltjes sweep over the fine nodes, or over the coarse nodes only
/// (with doubled weights).
fn stieltjes(measure: &Measure, n_max: usize, coarse_only: bool) -> Result<Stieltjes> {
    let p = measure.params().prec();
    let nodes: Vec<_> = measure
        .iter()
        .filter(|(n, _)| !coarse_only || n.coarse)
        .map(|(n, w)| {
            let mut qw = Float::with_val(p, &n.qw * &w.w);
            if coarse_only {
                qw *= 2u32;
            }
            (n.at.x.clone(), qw)
        })
        .collect();

    let zero = num::int(p, 0);
    let mut prev: Vec<Real> = vec![zero.clone(); nodes.len()];
    let mut cur: Vec<Real> = vec![num::int(p, 1); nodes.len()];
    let mut xpow: Vec<Real> = nodes.iter().map(|(x, _)| Float::with_val(p, x * x)).collect();
    let mut h: Vec<Real> = Vec::with_capacity(n_max + 1);
    let mut beta: Vec<Real> = Vec::with_capacity(n_max + 1);
    let mut p_integral = vec![zero.clone(), zero.clone()];
    let mut symmetry = zero.clone();

    for n in 0..=n_max {
        let mut hn = zero.clone();
        let mut odd = zero.clone();
        let mut shifted = zero.clone();
        for (i, (x, qw)) in nodes.iter().enumerate() {
            let pw = Float::with_val(p, &cur[i] * qw);
            hn += Float::with_val(p, &pw * &cur[i]);
            let xpw = Float::with_val(p, &pw * x);
            odd += Float::with_val(p, &xpw * &cur[i]);
            // x^(n+2) P_n w
            shifted += Float::with_val(p, &xpow[i] * &pw);
        }
        if !hn.is_finite() || hn <= 0 {
            return Err(Error::PrecisionExhausted(format!(
                "h_{n} = {} is not positive",
                num::to_decimal(&hn)
            )));
        }
        let sym = Float::with_val(p, odd.abs_ref()) / &hn;
        if sym > symmetry {
            symmetry = sym;
        }
        let b = if n == 0 {
            zero.clone()
        } else {
            Float::with_val(p, &hn / &h[n - 1])
        };
        // p(n + 2) = -(1/h_n) int x^(n+2) P_n w
        p_integral.push(-(shifted / &hn));
        for i in 0..nodes.len() {
            let x = &nodes[i].0;
            let next = Float::with_val(p, x * &cur[i]) - Float::with_val(p, &b * &prev[i]);
            prev[i] = std::mem::replace(&mut cur[i], next);
            xpow[i] *= x;
        }
        h.push(hn);
        beta.push(b);
    }
    p_integral.truncate(n_max + 2);
    Ok(Stieltjes { h, beta, p_integral, symmetry })
}

/// Largest `|fine - coarse| / l1` over the integrand families the ladder
/// quantities are built from.
fn ladder_family_defect(measure: &Measure, beta: &[Real]) -> Real {
    let params = measure.params();
    let p = params.prec();
    let n_max = beta.len() - 1;
    let with_t = !params.t.is_zero();
    let mut sums: Vec<[Sums; 5]> = (0..=n_max)
        .map(|_| [Sums::new(p), Sums::new(p), Sums::new(p), Sums::new(p), Sums::new(p)])
        .collect();
    for (node, w) in measure.iter() {
        let x = &node.at.x;
        let mut prev = num::int(p, 0);
        let mut cur = num::int(p, 1);
        for (n, s) in sums.iter_mut().enumerate() {
            let sq = Float::with_val(p, &cur * &cur);
            let cross = Float::with_val(p, x * &cur) * &prev;
            s[0].add(&node.qw, &Float::with_val(p, &sq * &w.w_omx2), node.coarse);
            s[1].add(&node.qw, &Float::with_val(p, &cross * &w.w_omx2), node.coarse);
            if with_t {
                s[2].add(&node.qw, &Float::with_val(p, &sq * &w.w_dk), node.coarse);
                s[3].add(&node.qw, &Float::with_val(p, &cross * &w.w_dk), node.coarse);
                s[4].add(&node.qw, &Float::with_val(p, &sq * &w.w_dk2), node.coarse);
            }
            let next = Float::with_val(p, x * &cur) - Float::with_val(p, &beta[n] * &prev);
            prev = std::mem::replace(&mut cur, next);
        }
    }
    let mut worst = num::int(p, 0);
    for s in sums.iter().flatten() {
        if s.l1.is_zero() {
            continue;
        }
        let d = s.error() / &s.l1;
        if d > worst {
            worst = d;
        }
    }
    worst
}

fn max_rel_defect(a: &[Real], b: &[Real]) -> Real {
    let p = a[0].prec();
    let mut worst = num::int(p, 0);
    for (x, y) in a.iter().zip(b) {
        let d = num::rel_diff(x, y);
        if d > worst {
            worst = d;
        }
    }
    worst
}

impl OrthoState {
    /// Runs the Stieltjes procedure, refining the discretisation until the
    /// fine and coarse sweeps (and, for ladder-eligible parameters, the
    /// ladder integrand families) agree to `ctx.rel_tol`.
    pub fn build(params: &ModelParams, ctx: &PrecisionContext) -> Result<Self> {
        if ctx.bits != params.prec() {
            return Err(Error::InvalidConfig(format!(
                "quadrature precision {} differs from parameter precision {}",
                ctx.bits,
                params.prec()
            )));
        }
        let n_max = params.n_max;
        let mut measure = Measure::new(params, ctx, START_LEVEL);
        loop {
            let fine = stieltjes(&measure, n_max, false)?;
            let coarse = stieltjes(&measure, n_max, true)?;
            let mut defect = max_rel_defect(&fine.h, &coarse.h);
            let d_beta = max_rel_defect(&fine.beta[1..], &coarse.beta[1..]);
            if d_beta > defect {
                defect = d_beta;
            }
            if params.ladder_eligible() && defect <= ctx.rel_tol {
                let d_family = ladder_family_defect(&measure, &fine.beta);
                if d_family > defect {
                    defect = d_family;
                }
            }
            if defect <= ctx.rel_tol {
                let mut p_sub = vec![num::int(params.prec(), 0); n_max + 2];
                for n in 1..=n_max {
                    p_sub[n + 1] = Float::with_val(params.prec(), &p_sub[n] - &fine.beta[n]);
                }
                return Ok(OrthoState {
                    params: params.clone(),
                    h: fine.h,
                    beta: fine.beta,
                    p_sub,
                    p_sub_integral: fine.p_integral,
                    symmetry_defect: fine.symmetry,
                    convergence: defect,
                    measure: Arc::new(measure),
                });
            }
            if measure.level() >= ctx.max_level {
                return Err(Error::NoConvergence {
                    estimate: num::to_decimal(&defect),
                    level: measure.level(),
                });
            }
            measure.refine();
        }
    }

    pub fn n_max(&self) -> usize {
        self.params.n_max
    }

    pub fn prec(&self) -> u32 {
        self.params.prec()
    }

    pub fn level(&self) -> u32 {
        self.measure.level()
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    fn check_degree(&self, n: usize) -> Result<()> {
        if n > self.n_max() + 1 {
            return Err(Error::IndexError(format!(
                "degree {n} exceeds n_max + 1 = {}",
                self.n_max() + 1
            )));
        }
        Ok(())
    }

    /// `P_0(z), ..., P_n(z)`.
    pub fn eval_monic_all(&self, n: usize, z: &Real) -> Result<Vec<Real>> {
        self.check_degree(n)?;
        let p = self.prec();
        let mut out = Vec::with_capacity(n + 1);
        out.push(num::int(p, 1));
        if n == 0 {
            return Ok(out);
        }
        out.push(Float::with_val(p, z));
        for k in 1..n {
            let next = Float::with_val(p, z * &out[k]) - Float::with_val(p, &self.beta[k] * &out[k - 1]);
            out.push(next);
        }
        Ok(out)
    }

    /// `P_n(z)` by forward recurrence.
    pub fn eval_monic(&self, n: usize, z: &Real) -> Result<Real> {
        Ok(self.eval_monic_all(n, z)?.pop().expect("non-empty"))
    }

    /// `P'_n(z)` from `P'_{k+1} = P_k + z P'_k - beta_k P'_{k-1}`.
    pub fn eval_monic_derivative(&self, n: usize, z: &Real) -> Result<Real> {
        let vals = self.eval_monic_all(n, z)?;
        let p = self.prec();
        let mut prev = num::int(p, 0);
        let mut cur = num::int(p, 0);
        for k in 0..n {
            let next = Float::with_val(p, &vals[k] + Float::with_val(p, z * &cur))
                - Float::with_val(p, &self.beta[k] * &prev);
            prev = std::mem::replace(&mut cur, next);
        }
        Ok(cur)
    }

    /// Coefficients of `P_n`, lowest degree first.
    pub fn monic_coefficients(&self, n: usize) -> Result<Vec<Real>> {
        self.check_degree(n)?;
        let p = self.prec();
        let mut prev: Vec<Real> = Vec::new();
        let mut cur = vec![num::int(p, 1)];
        for k in 0..n {
            let mut next = vec![num::int(p, 0); k + 2];
            for (i, c) in cur.iter().enumerate() {
                next[i + 1] += c;
            }
            for (i, c) in prev.iter().enumerate() {
                next[i] -= Float::with_val(p, &self.beta[k] * c);
            }
            prev = std::mem::replace(&mut cur, next);
        }
        Ok(cur)
    }

    /// `p(n, t)` read off the expanded polynomial.
    pub fn p_sub_direct(&self, n: usize) -> Result<Real> {
        if n < 2 {
            return Ok(num::int(self.prec(), 0));
        }
        Ok(self.monic_coefficients(n)?[n - 2].clone())
    }

    /// `|int P_m P_n w| / sqrt(h_m h_n)` with an independent adaptive
    /// quadrature; exactly zero when `m + n` is odd.
    pub fn orthogonality_residual(&self, ctx: &PrecisionContext, m: usize, n: usize) -> Result<Real> {
        let p = self.prec();
        if m == n {
            return Err(Error::IndexError("orthogonality residual needs m != n".into()));
        }
        if m > self.n_max() || n > self.n_max() {
            return Err(Error::IndexError(format!("degrees ({m}, {n}) exceed n_max")));
        }
        if (m + n) % 2 == 1 {
            return Ok(num::int(p, 0));
        }
        let top = m.max(n);
        let integral = quadrature::integrate_even(
            |a| {
                let vals = self.eval_monic_all(top, &a.x).expect("degree checked");
                let w = weight::weight_parts(&a.x, &a.omx2, &self.params).w;
                Float::with_val(p, &vals[m] * &vals[n]) * w
            },
            &self.params.support(),
            ctx,
        );
        let norm = Float::with_val(p, &self.h[m] * &self.h[n]).sqrt();
        Ok(integral.require()?.abs() / norm)
    }

    /// `max_n |beta_n - (p(n) - p(n+1))| / beta_n` with `beta_n = h_n/h_{n-1}`
    /// and `p` from the independent integral route.
    pub fn beta_route_defect(&self) -> Real {
        let p = self.prec();
        let mut worst = num::int(p, 0);
        for n in 1..=self.n_max() {
            let diff = Float::with_val(p, &self.p_sub_integral[n] - &self.p_sub_integral[n + 1]);
            let d = num::rel_diff(&diff, &self.beta[n]);
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    /// `max_n |sum_{j<n} beta_j + p(n)| / sum_{j<n} beta_j`, with `p` from the
    /// integral route.
    pub fn telescopic_defect(&self) -> Real {
        let p = self.prec();
        let mut worst = num::int(p, 0);
        let mut acc = num::int(p, 0);
        for n in 1..=self.n_max() + 1 {
            acc += &self.beta[n - 1];
            if acc.is_zero() {
                continue;
            }
            let d = Float::with_val(p, &acc + &self.p_sub_integral[n]).abs() / &acc;
            if d > worst {
                worst = d;
            }
        }
        worst
    }
}

/// Recurrence coefficient of the pure Jacobi (ultraspherical) weight
/// `(1 - z^2)^alpha`: `n (n + 2a) / ((2n + 2a + 1)(2n + 2a - 1))`.
pub fn ultraspherical_beta(n: usize, alpha: &Real) -> Real {
    let p = alpha.prec();
    let nn = num::int(p, n as i64);
    let two_a = Float::with_val(p, alpha * 2u32);
    let s = Float::with_val(p, &nn * 2u32) + &two_a;
    let numer = Float::with_val(p, &nn * Float::with_val(p, &nn + &two_a));
    let denom = Float::with_val(p, &s + 1u32) * Float::with_val(p, &s - 1u32);
    numer / denom
}

/// `mu_0` of the measure (equals `h_0`).
pub fn total_mass(state: &OrthoState) -> Real {
    state.h[0].clone()
}
