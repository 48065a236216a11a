//! Ladder-operator quantities.
//!
//! With `c = k2`:
//!
//! ```text
//! R_n = (2t/h_n)     int P_n^2 w / (y^2 - c)
//! a_n = (2a/h_n)     int P_n^2 w / (1 - y^2)
//! r_n = (2t/h_{n-1}) int y P_n P_{n-1} w / (y^2 - c)
//! b_n = (2a/h_{n-1}) int y P_n P_{n-1} w / (1 - y^2)
//! ```
//!
//! and the functions `A_n(z)`, `B_n(z)` both from their defining integrals
//! over the divided difference of `v'` and from the three-term rational
//! forms in `1/(1 - z^2)`, `1/(z^2 - c)` and `1/(z^2 - c)^2`.

use rug::Float;

use crate::num;
use crate::orthopoly::OrthoState;
use crate::quadrature::{PrecisionContext, Sums};
use crate::weight;
use crate::{Error, Real, Result};

/// `R_n, r_n, a_n, b_n` for `0 <= n <= n_max` at fixed `(params, t)`.
/// `r_0 = b_0 = 0`.
#[derive(Clone, Debug)]
pub struct LadderState {
    pub big_r: Vec<Real>,
    pub r: Vec<Real>,
    pub a: Vec<Real>,
    pub b: Vec<Real>,
    /// Largest relative fine/coarse disagreement over all integrals.
    pub max_error: Real,
}

impl LadderState {
    pub fn compute(ortho: &OrthoState, ctx: &PrecisionContext) -> Result<Self> {
        compute(ortho, ctx)
    }

    pub fn n_max(&self) -> usize {
        self.a.len() - 1
    }
}

pub fn compute(ortho: &OrthoState, ctx: &PrecisionContext) -> Result<LadderState> {
    let params = &ortho.params;
    params.require_ladder()?;
    let p = params.prec();
    let n_max = ortho.n_max();
    let with_t = !params.t.is_zero();
    // [a, b, R, r] sums per degree
    let mut sums: Vec<[Sums; 4]> = (0..=n_max)
        .map(|_| [Sums::new(p), Sums::new(p), Sums::new(p), Sums::new(p)])
        .collect();
    for (node, w) in ortho.measure().iter() {
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
            }
            let next = Float::with_val(p, x * &cur) - Float::with_val(p, &ortho.beta[n] * &prev);
            prev = std::mem::replace(&mut cur, next);
        }
    }

    let two_alpha = Float::with_val(p, &params.alpha * 2u32);
    let two_t = Float::with_val(p, &params.t * 2u32);
    let zero = num::int(p, 0);
    let mut state = LadderState {
        big_r: Vec::with_capacity(n_max + 1),
        r: Vec::with_capacity(n_max + 1),
        a: Vec::with_capacity(n_max + 1),
        b: Vec::with_capacity(n_max + 1),
        max_error: zero.clone(),
    };
    for (n, s) in sums.iter().enumerate() {
        for sum in s {
            if !sum.l1.is_zero() {
                let e = sum.error() / &sum.l1;
                if e > state.max_error {
                    state.max_error = e;
                }
            }
        }
        let hn = &ortho.h[n];
        state.a.push(Float::with_val(p, &two_alpha * &s[0].fine) / hn);
        state.big_r.push(if with_t {
            Float::with_val(p, &two_t * &s[2].fine) / hn
        } else {
            zero.clone()
        });
        if n == 0 {
            state.b.push(zero.clone());
            state.r.push(zero.clone());
        } else {
            let hm = &ortho.h[n - 1];
            state.b.push(Float::with_val(p, &two_alpha * &s[1].fine) / hm);
            state.r.push(if with_t {
                Float::with_val(p, &two_t * &s[3].fine) / hm
            } else {
                zero.clone()
            });
        }
    }
    if state.max_error > ctx.rel_tol {
        return Err(Error::NoConvergence {
            estimate: num::to_decimal(&state.max_error),
            level: ortho.level(),
        });
    }
    Ok(state)
}

fn check_index(n: usize, lad: &LadderState) -> Result<()> {
    if n > lad.n_max() {
        return Err(Error::IndexError(format!("n = {n} exceeds n_max = {}", lad.n_max())));
    }
    Ok(())
}

/// Denominators `1 - z^2` and `z^2 - c`, rejecting poles.
fn rational_denominators(z: &Real, ortho: &OrthoState) -> Result<(Real, Real)> {
    let params = &ortho.params;
    let p = params.prec();
    let z2 = Float::with_val(p, z * z);
    let omz2 = Float::with_val(p, 1 - &z2);
    let dk = Float::with_val(p, &z2 - &params.k2);
    let guard = params.pole_guard();
    if Float::with_val(p, omz2.abs_ref()) < guard {
        return Err(Error::PoleError(format!("z = {} at +-1", num::to_decimal(z))));
    }
    if Float::with_val(p, dk.abs_ref()) < guard {
        return Err(Error::PoleError(format!("z = {} at z^2 = k2", num::to_decimal(z))));
    }
    Ok((omz2, dk))
}

/// `a_n/(1 - z^2) + (a_n - 2n - 2a - 1)/(z^2 - c) + c R_n/(z^2 - c)^2`.
pub fn a_rational(n: usize, z: &Real, ortho: &OrthoState, lad: &LadderState) -> Result<Real> {
    check_index(n, lad)?;
    let params = &ortho.params;
    let p = params.prec();
    let (omz2, dk) = rational_denominators(z, ortho)?;
    let an = &lad.a[n];
    let shift = Float::with_val(p, &params.alpha * 2u32) + (2 * n + 1) as u64;
    let mid = Float::with_val(p, an - &shift) / &dk;
    let tail = Float::with_val(p, &params.k2 * &lad.big_r[n]) / Float::with_val(p, &dk * &dk);
    Ok(Float::with_val(p, an / &omz2) + mid + tail)
}

/// `z b_n/(1 - z^2) + z (b_n - n)/(z^2 - c) + z r_n/(z^2 - c)^2`.
pub fn b_rational(n: usize, z: &Real, ortho: &OrthoState, lad: &LadderState) -> Result<Real> {
    check_index(n, lad)?;
    let p = ortho.prec();
    let (omz2, dk) = rational_denominators(z, ortho)?;
    let bn = &lad.b[n];
    let first = Float::with_val(p, bn / &omz2);
    let mid = Float::with_val(p, bn - n as u64) / &dk;
    let tail = Float::with_val(p, &lad.r[n] / &dk) / &dk;
    Ok((first + mid + tail) * z)
}

/// `A_j(z)` and `B_j(z)` for `0 <= j <= n_max`, from the defining integrals.
#[derive(Clone, Debug)]
pub struct LadderFunctions {
    pub z: Real,
    pub a: Vec<Real>,
    pub b: Vec<Real>,
}

/// Evaluates every `A_j(z)`, `B_j(z)` in one pass over the measure.
pub fn ladder_functions(z: &Real, ortho: &OrthoState) -> Result<LadderFunctions> {
    let params = &ortho.params;
    params.require_ladder()?;
    // pole check on z
    weight::v_prime(z, params)?;
    let p = params.prec();
    let n_max = ortho.n_max();
    let with_t = !params.t.is_zero();
    let omz2 = Float::with_val(p, 1 - Float::with_val(p, z * z));
    let zero = num::int(p, 0);
    let mut a_sum = vec![zero.clone(); n_max + 1];
    let mut b_sum = vec![zero.clone(); n_max + 1];
    for (node, w) in ortho.measure().iter() {
        let y = &node.at.x;
        let mut kernel = weight::jacobi_dd_coefficient(z, y, &omz2, params) * &w.w_omx2;
        if with_t && !w.w_dk2.is_zero() {
            kernel += weight::perturbation_dd_coefficient(z, y, params) * &w.w_dk2;
        }
        kernel *= &node.qw;
        let mut prev = zero.clone();
        let mut cur = num::int(p, 1);
        for n in 0..=n_max {
            let kc = Float::with_val(p, &kernel * &cur);
            a_sum[n] += Float::with_val(p, &kc * &cur);
            b_sum[n] += Float::with_val(p, &kc * &prev);
            let next = Float::with_val(p, y * &cur) - Float::with_val(p, &ortho.beta[n] * &prev);
            prev = std::mem::replace(&mut cur, next);
        }
    }
    let a = a_sum.into_iter().enumerate().map(|(n, s)| s / &ortho.h[n]).collect();
    let b = b_sum
        .into_iter()
        .enumerate()
        .map(|(n, s)| if n == 0 { zero.clone() } else { s / &ortho.h[n - 1] })
        .collect();
    Ok(LadderFunctions { z: z.clone(), a, b })
}

/// `A_n(z) = (1/h_n) int (v'(z) - v'(y))/(z - y) P_n^2(y) w(y) dy`.
pub fn a_integral(n: usize, z: &Real, ortho: &OrthoState) -> Result<Real> {
    if n > ortho.n_max() {
        return Err(Error::IndexError(format!("n = {n} exceeds n_max")));
    }
    Ok(ladder_functions(z, ortho)?.a.swap_remove(n))
}

/// `B_n(z) = (1/h_{n-1}) int (v'(z) - v'(y))/(z - y) P_n(y) P_{n-1}(y) w(y) dy`.
pub fn b_integral(n: usize, z: &Real, ortho: &OrthoState) -> Result<Real> {
    if n > ortho.n_max() {
        return Err(Error::IndexError(format!("n = {n} exceeds n_max")));
    }
    Ok(ladder_functions(z, ortho)?.b.swap_remove(n))
}

/// Residual of `P'_n + B_n P_n - beta_n A_n P_{n-1} = 0`, divided by the
/// largest term.
pub fn lowering_residual(n: usize, ortho: &OrthoState, funcs: &LadderFunctions) -> Result<Real> {
    if n == 0 || n > ortho.n_max() {
        return Err(Error::IndexError(format!("lowering relation needs 1 <= n <= n_max, got {n}")));
    }
    let p = ortho.prec();
    let z = &funcs.z;
    let vals = ortho.eval_monic_all(n, z)?;
    let dp = ortho.eval_monic_derivative(n, z)?;
    let t1 = Float::with_val(p, &funcs.b[n] * &vals[n]);
    let t2 = Float::with_val(p, &ortho.beta[n] * &funcs.a[n]) * &vals[n - 1];
    Ok(term_residual(&[dp, t1, -t2]))
}

/// Residual of `P'_{n-1} - (B_n + v') P_{n-1} + A_{n-1} P_n = 0`, divided by
/// the largest term.
pub fn raising_residual(n: usize, ortho: &OrthoState, funcs: &LadderFunctions) -> Result<Real> {
    if n == 0 || n > ortho.n_max() {
        return Err(Error::IndexError(format!("raising relation needs 1 <= n <= n_max, got {n}")));
    }
    let p = ortho.prec();
    let z = &funcs.z;
    let vals = ortho.eval_monic_all(n, z)?;
    let dp = ortho.eval_monic_derivative(n - 1, z)?;
    let vp = weight::v_prime(z, &ortho.params)?;
    let t1 = Float::with_val(p, &funcs.b[n] + &vp) * &vals[n - 1];
    let t2 = Float::with_val(p, &funcs.a[n - 1] * &vals[n]);
    Ok(term_residual(&[dp, -t1, t2]))
}

/// `|sum terms| / max |term|` (zero when every term vanishes).
pub fn term_residual(terms: &[Real]) -> Real {
    let p = terms[0].prec();
    let mut sum = num::int(p, 0);
    let mut scale = num::int(p, 0);
    for t in terms {
        sum += t;
        let a = Float::with_val(p, t.abs_ref());
        if a > scale {
            scale = a;
        }
    }
    if scale.is_zero() {
        return scale;
    }
    sum.abs() / scale
}
