//! Suite execution: one quadrature build per `t` (plus the derivative
//! stencil around it), shared by every check at that `t`.

use rayon::prelude::*;
use rug::Float;

use super::formulas::{self, Measured};
use super::{sort_reports, IdentityId, IdentityReport, Status, Thresholds};
use crate::ladder::{self, LadderState};
use crate::num;
use crate::orthopoly::OrthoState;
use crate::quadrature::PrecisionContext;
use crate::weight::ModelParams;
use crate::{Error, Real, Result};

/// Polynomial and ladder data at one `t`.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub ortho: OrthoState,
    pub lad: LadderState,
}

impl Snapshot {
    /// Builds at `t` with degrees up to `n_max`.
    pub fn build(params: &ModelParams, ctx: &PrecisionContext, t: &Real, n_max: usize) -> Result<Self> {
        let params = params.with_t(t.clone())?.with_n_max(n_max)?;
        params.require_ladder()?;
        let ortho = OrthoState::build(&params, ctx)?;
        let lad = LadderState::compute(&ortho, ctx)?;
        Ok(Snapshot { ortho, lad })
    }
}

/// Finite-difference step `10^-6 max(t, 1)`.
pub fn fd_step(t: &Real) -> Real {
    let p = t.prec();
    let scale = num::max(num::int(p, 1), t);
    scale * num::parse(p, "1e-6").expect("literal")
}

/// Central differences around `mid` with step `h`.
pub(crate) struct Stencil<'a> {
    pub mid: &'a Snapshot,
    pub plus: &'a Snapshot,
    pub minus: &'a Snapshot,
    pub h: Real,
}

impl Stencil<'_> {
    pub fn d1(&self, f: impl Fn(&Snapshot) -> Real) -> Real {
        (f(self.plus) - f(self.minus)) / Float::with_val(self.h.prec(), &self.h * 2u32)
    }

    pub fn d2(&self, f: impl Fn(&Snapshot) -> Real) -> Real {
        let h2 = Float::with_val(self.h.prec(), &self.h * &self.h);
        (f(self.plus) - f(self.mid) * 2u32 + f(self.minus)) / h2
    }
}

/// States at `t`, `t +- h` and `t +- h/2`.
pub(crate) struct StencilSet {
    mid: Snapshot,
    plus: Snapshot,
    minus: Snapshot,
    plus_half: Snapshot,
    minus_half: Snapshot,
    h: Real,
}

impl StencilSet {
    pub fn build(params: &ModelParams, ctx: &PrecisionContext, n_max: usize, t: &Real) -> Result<Self> {
        let mid = Snapshot::build(params, ctx, t, n_max)?;
        Self::around(mid, params, ctx, t)
    }

    fn around(mid: Snapshot, params: &ModelParams, ctx: &PrecisionContext, t: &Real) -> Result<Self> {
        let h = fd_step(t);
        if Float::with_val(t.prec(), t - &h) <= 0 {
            return Err(Error::InvalidConfig(format!(
                "t = {} too close to 0 for a central stencil",
                num::to_decimal(t)
            )));
        }
        let half = Float::with_val(h.prec(), &h / 2u32);
        let n_max = mid.ortho.n_max();
        let offsets = [h.clone(), -h.clone(), half.clone(), -half];
        let built: Vec<Result<Snapshot>> = offsets
            .par_iter()
            .map(|d| Snapshot::build(params, ctx, &Float::with_val(t.prec(), t + d), n_max))
            .collect();
        let mut it = built.into_iter();
        let mut next = || it.next().expect("four offsets");
        Ok(StencilSet {
            plus: next()?,
            minus: next()?,
            plus_half: next()?,
            minus_half: next()?,
            mid,
            h,
        })
    }

    pub fn stencil(&self, half: bool) -> Stencil<'_> {
        if half {
            Stencil {
                mid: &self.mid,
                plus: &self.plus_half,
                minus: &self.minus_half,
                h: Float::with_val(self.h.prec(), &self.h / 2u32),
            }
        } else {
            Stencil { mid: &self.mid, plus: &self.plus, minus: &self.minus, h: self.h.clone() }
        }
    }
}

fn fill(report: &mut IdentityReport, m: Result<Measured>) {
    match m {
        Ok(m) => {
            report.residual = Some(m.residual);
            report.lhs_scale = m.scale;
        }
        Err(e) => report.status = Status::Error(e.to_string()),
    }
}

/// Runs every applicable `(id, n, t, z)` combination. Per-check failures
/// are recorded in the report status; the result is sorted by
/// `(id, n, t, z)`.
pub fn check_suite(
    params: &ModelParams,
    ctx: &PrecisionContext,
    ids: &[IdentityId],
    n_set: &[usize],
    t_grid: &[Real],
    z_samples: &[Real],
) -> Vec<IdentityReport> {
    let Some(&n_top) = n_set.iter().max() else {
        return Vec::new();
    };
    let thresholds = Thresholds::new(ctx);
    let mut reports: Vec<IdentityReport> = t_grid
        .par_iter()
        .flat_map_iter(|t| run_at_t(params, ctx, ids, n_set, n_top, t, z_samples))
        .collect();
    for r in &mut reports {
        thresholds.judge(r);
    }
    sort_reports(&mut reports);
    reports
}

fn applicable(id: IdentityId, n_set: &[usize]) -> Vec<usize> {
    n_set.iter().copied().filter(|&n| n >= id.min_n()).collect()
}

fn run_at_t(
    params: &ModelParams,
    ctx: &PrecisionContext,
    ids: &[IdentityId],
    n_set: &[usize],
    n_top: usize,
    t: &Real,
    z_samples: &[Real],
) -> Vec<IdentityReport> {
    let mut out = Vec::new();
    let blank = |id: IdentityId, n: usize, z: Option<&Real>, status: Status| IdentityReport::new(id, n, t, z, status);
    let mid = match Snapshot::build(params, ctx, t, n_top + 1) {
        Ok(s) => s,
        Err(e) => {
            for &id in ids {
                for n in applicable(id, n_set) {
                    out.push(blank(id, n, None, Status::Error(e.to_string())));
                }
            }
            return out;
        }
    };

    let z_ids: Vec<_> = ids.iter().copied().filter(|id| id.uses_z()).collect();
    if !z_ids.is_empty() {
        if z_samples.is_empty() {
            for &id in &z_ids {
                for n in applicable(id, n_set) {
                    out.push(blank(id, n, None, Status::Skipped("no z samples".into())));
                }
            }
        }
        let per_z: Vec<Vec<IdentityReport>> = z_samples
            .par_iter()
            .map(|z| {
                let funcs = ladder::ladder_functions(z, &mid.ortho);
                let mut rows = Vec::new();
                for &id in &z_ids {
                    for n in applicable(id, n_set) {
                        let mut rep = blank(id, n, Some(z), Status::Ok);
                        match &funcs {
                            Ok(f) => fill(&mut rep, formulas::at_z(id, n, &mid, f)),
                            Err(e) => rep.status = Status::Error(e.to_string()),
                        }
                        rows.push(rep);
                    }
                }
                rows
            })
            .collect();
        out.extend(per_z.into_iter().flatten());
    }

    for &id in ids.iter().filter(|id| !id.uses_z() && !id.uses_derivative()) {
        for n in applicable(id, n_set) {
            let mut rep = blank(id, n, None, Status::Ok);
            fill(&mut rep, formulas::at_t(id, n, &mid));
            out.push(rep);
        }
    }

    let d_ids: Vec<_> = ids.iter().copied().filter(|id| id.uses_derivative()).collect();
    if d_ids.is_empty() {
        return out;
    }
    match StencilSet::around(mid, params, ctx, t) {
        Ok(set) => {
            let full = set.stencil(false);
            let half = set.stencil(true);
            for id in d_ids {
                for n in applicable(id, n_set) {
                    let mut rep = blank(id, n, None, Status::Ok);
                    fill(&mut rep, formulas::with_stencil(id, n, &full));
                    if rep.status == Status::Ok {
                        match formulas::with_stencil(id, n, &half) {
                            Ok(m) => rep.residual_half_step = Some(m.residual),
                            Err(e) => rep.status = Status::Error(e.to_string()),
                        }
                    }
                    out.push(rep);
                }
            }
        }
        Err(e) => {
            let status = match e {
                Error::InvalidConfig(msg) => Status::Skipped(msg),
                other => Status::Error(other.to_string()),
            };
            for id in d_ids {
                for n in applicable(id, n_set) {
                    out.push(blank(id, n, None, status.clone()));
                }
            }
        }
    }
    out
}

/// One check at `(n, t, z)`. Out-of-range indices and `k2 = 0` for checks
/// that need `k2 != 0` are errors; numerical failures too.
pub fn check(
    id: IdentityId,
    params: &ModelParams,
    ctx: &PrecisionContext,
    n: usize,
    t: &Real,
    z: Option<&Real>,
) -> Result<IdentityReport> {
    if n < id.min_n() {
        return Err(Error::IndexError(format!("{id} needs n >= {}, got {n}", id.min_n())));
    }
    if id.needs_nonzero_k2() && params.k2.is_zero() {
        return Err(Error::SingularParams(format!("{id} needs k2 != 0")));
    }
    if id.uses_z() != z.is_some() {
        return Err(Error::InvalidConfig(format!(
            "{id} {}",
            if id.uses_z() { "needs a sample point z" } else { "takes no z" }
        )));
    }
    let mid = Snapshot::build(params, ctx, t, (n + id.lookahead()).max(1))?;
    let mut report = IdentityReport::new(id, n, t, z, Status::Ok);
    let measured = if let Some(z) = z {
        let funcs = ladder::ladder_functions(z, &mid.ortho)?;
        formulas::at_z(id, n, &mid, &funcs)?
    } else if id.uses_derivative() {
        let set = StencilSet::around(mid, params, ctx, t)?;
        report.residual_half_step = Some(formulas::with_stencil(id, n, &set.stencil(true))?.residual);
        formulas::with_stencil(id, n, &set.stencil(false))?
    } else {
        formulas::at_t(id, n, &mid)?
    };
    report.residual = Some(measured.residual);
    report.lhs_scale = measured.scale;
    Thresholds::new(ctx).judge(&mut report);
    Ok(report)
}
