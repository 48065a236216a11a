//! Residual checks for every identity linking the orthogonal polynomials,
//! the ladder quantities and the Painleve V equation for `Phi_n(t)`.
//!
//! Identities that hold for any smooth weight vanishing at its endpoints are
//! [`Tier::Required`] and carry a pass/fail verdict. Relations obtained by
//! coefficient comparison or the `k -> 0` limit are [`Tier::Diagnostic`]:
//! their residuals are measured and reported, never asserted.

mod formulas;
mod suite;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::num;
use crate::quadrature::PrecisionContext;
use crate::weight::ModelParams;
use crate::{Error, Real, Result};

pub use formulas::factor_split;
pub use formulas::pv_rhs;
pub use suite::{check, check_suite, fd_step, Snapshot};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    Required,
    Diagnostic,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Required => "REQUIRED",
            Tier::Diagnostic => "DIAGNOSTIC",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

macro_rules! identities {
    ($($variant:ident => $name:literal, $tier:ident;)*) => {
        /// Every checked identity. Declaration order is report order.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum IdentityId {
            $($variant,)*
        }

        impl IdentityId {
            pub const ALL: &'static [IdentityId] = &[$(IdentityId::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(IdentityId::$variant => $name,)*
                }
            }

            pub fn tier(self) -> Tier {
                match self {
                    $(IdentityId::$variant => Tier::$tier,)*
                }
            }
        }
    };
}

identities! {
    S1Func => "S1_FUNC", Required;
    S2Func => "S2_FUNC", Required;
    S2pFunc => "S2P_FUNC", Required;
    ARational => "A_RATIONAL", Required;
    BRational => "B_RATIONAL", Required;
    Lowering => "LOWERING", Required;
    Raising => "RAISING", Required;
    BetaRoutes => "BETA_ROUTES", Required;
    PTelescope => "P_TELESCOPE", Required;
    Dlnh => "DLNH", Required;
    Dbeta => "DBETA", Required;
    Dp => "DP", Required;
    CS1B => "C_S1_B", Diagnostic;
    CS1R => "C_S1_R", Diagnostic;
    CS2B => "C_S2_B", Diagnostic;
    CS2R => "C_S2_R", Diagnostic;
    CS2Mix => "C_S2_MIX", Diagnostic;
    Yj3 => "YJ3", Diagnostic;
    Yj4 => "YJ4", Diagnostic;
    TeleSum => "TELE_SUM", Diagnostic;
    Q1 => "Q1", Diagnostic;
    Q2 => "Q2", Diagnostic;
    Q3 => "Q3", Diagnostic;
    Q4 => "Q4", Diagnostic;
    Q5 => "Q5", Diagnostic;
    Q6 => "Q6", Diagnostic;
    Q7 => "Q7", Diagnostic;
    Qp1 => "QP1", Diagnostic;
    Qp2 => "QP2", Diagnostic;
    Qp3 => "QP3", Diagnostic;
    Qp4 => "QP4", Diagnostic;
    Qp5 => "QP5", Diagnostic;
    Qp6 => "QP6", Diagnostic;
    Qp7 => "QP7", Diagnostic;
    MutexWitness => "MUTEX_WITNESS", Diagnostic;
    Zhu232 => "ZHU232", Diagnostic;
    BetaExpr => "BETA_EXPR", Diagnostic;
    RicR => "RIC_R", Diagnostic;
    RicBigR => "RIC_BIGR", Diagnostic;
    RicElim => "RIC_ELIM", Diagnostic;
    FactorProd => "FACTOR_PROD", Diagnostic;
    OdeRn => "ODE_RN", Diagnostic;
    PvPhi => "PV_PHI", Diagnostic;
}

impl IdentityId {
    /// Checks evaluated at sampled points `z`.
    pub fn uses_z(self) -> bool {
        use IdentityId::*;
        matches!(self, S1Func | S2Func | S2pFunc | ARational | BRational | Lowering | Raising)
    }

    /// Checks built on finite-difference `t`-derivatives.
    pub fn uses_derivative(self) -> bool {
        use IdentityId::*;
        matches!(self, Dlnh | Dbeta | Dp | RicR | RicBigR | RicElim | FactorProd | OdeRn | PvPhi)
    }

    /// Checks whose formulas divide by `k2` (or lose their meaning at `k2 = 0`).
    pub fn needs_nonzero_k2(self) -> bool {
        use IdentityId::*;
        matches!(self, Q2 | Qp2 | BetaExpr | RicR | RicBigR | RicElim | FactorProd | OdeRn | PvPhi)
    }

    /// Smallest degree for which the check is defined.
    pub fn min_n(self) -> usize {
        use IdentityId::*;
        match self {
            S1Func | S2Func | ARational | BRational | Dlnh | CS1B | CS1R | Yj4 | RicBigR
            | RicElim | FactorProd | OdeRn | PvPhi => 0,
            _ => 1,
        }
    }

    /// Highest degree referenced relative to `n`.
    pub fn lookahead(self) -> usize {
        use IdentityId::*;
        match self {
            S1Func | S2Func | CS1B | CS1R | CS2B | CS2R | CS2Mix | Yj3 => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IdentityId::ALL
            .iter()
            .copied()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown identity {s:?}")))
    }
}

/// Which checks a suite runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteKind {
    Required,
    Diagnostic,
    All,
}

impl SuiteKind {
    pub fn ids(self) -> Vec<IdentityId> {
        IdentityId::ALL
            .iter()
            .copied()
            .filter(|id| match self {
                SuiteKind::Required => id.tier() == Tier::Required,
                SuiteKind::Diagnostic => id.tier() == Tier::Diagnostic,
                SuiteKind::All => true,
            })
            .collect()
    }
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Ok,
    Skipped(String),
    Error(String),
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Skipped(_) => "skipped",
            Status::Error(_) => "error",
        }
    }
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub id: IdentityId,
    pub n: usize,
    pub t: Real,
    pub z: Option<Real>,
    /// `max(|LHS|, |RHS|)`, or the largest term for relations written as `= 0`.
    pub lhs_scale: Option<Real>,
    pub residual: Option<Real>,
    /// Residual of the same check with the finite-difference step halved.
    pub residual_half_step: Option<Real>,
    pub status: Status,
    pub tier: Tier,
    /// Verdict for required checks; `None` for diagnostics.
    pub pass: Option<bool>,
}

impl IdentityReport {
    pub(crate) fn new(id: IdentityId, n: usize, t: &Real, z: Option<&Real>, status: Status) -> Self {
        IdentityReport {
            id,
            n,
            t: t.clone(),
            z: z.cloned(),
            lhs_scale: None,
            residual: None,
            residual_half_step: None,
            status,
            tier: id.tier(),
            pass: None,
        }
    }

    /// `residual_h / residual_{h/2}` for derivative checks.
    pub fn halving_ratio(&self) -> Option<f64> {
        let (a, b) = (self.residual.as_ref()?, self.residual_half_step.as_ref()?);
        if b.is_zero() {
            return None;
        }
        Some(Real::with_val(a.prec(), a / b).to_f64())
    }

    fn sort_key(&self) -> (IdentityId, usize) {
        (self.id, self.n)
    }
}

/// Orders reports by `(id, n, t, z)`.
pub fn sort_reports(reports: &mut [IdentityReport]) {
    reports.sort_by(|a, b| {
        a.sort_key()
            .cmp(&b.sort_key())
            .then_with(|| a.t.partial_cmp(&b.t).expect("finite t"))
            .then_with(|| match (&a.z, &b.z) {
                (Some(x), Some(y)) => x.partial_cmp(y).expect("finite z"),
                (None, Some(_)) => std::cmp::Ordering::Less,
                (Some(_), None) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            })
    });
}

/// Pass thresholds for required checks. At the default precision these are
/// the nominal values; a looser quadrature tolerance raises them to
/// `1000 rel_tol`.
#[derive(Clone, Debug)]
pub struct Thresholds {
    /// `S1`, `S2`, `S2'` in functional form.
    pub functional: Real,
    /// Rational against integral forms of `A_n`, `B_n`; lowering/raising.
    pub ladder: Real,
    /// `beta_n` two-route agreement and the telescopic sum.
    pub sum_rule: Real,
    /// Finite-difference derivative identities at step `h`.
    pub derivative: Real,
    /// Accepted band for `residual_h / residual_{h/2}`.
    pub halving_band: (f64, f64),
    /// Residuals below this are rounding noise; the halving test is vacuous.
    pub noise_floor: Real,
}

impl Thresholds {
    pub fn new(ctx: &PrecisionContext) -> Self {
        let p = ctx.bits;
        let floor = Real::with_val(p, &ctx.rel_tol * 1000u32);
        let at_least = |s: &str| num::max(num::parse(p, s).expect("literal"), &floor);
        Thresholds {
            functional: at_least("1e-15"),
            ladder: at_least("1e-20"),
            sum_rule: Real::with_val(p, &ctx.rel_tol * 10u32),
            derivative: at_least("1e-10"),
            halving_band: (3.0, 5.0),
            noise_floor: Real::with_val(p, &ctx.rel_tol * 1_000_000_000u32),
        }
    }

    pub fn for_id(&self, id: IdentityId) -> &Real {
        use IdentityId::*;
        match id {
            S1Func | S2Func | S2pFunc => &self.functional,
            ARational | BRational | Lowering | Raising => &self.ladder,
            BetaRoutes | PTelescope => &self.sum_rule,
            _ => &self.derivative,
        }
    }

    pub(crate) fn judge(&self, report: &mut IdentityReport) {
        if report.tier != Tier::Required {
            return;
        }
        let Some(res) = report.residual.as_ref() else {
            report.pass = match report.status {
                Status::Skipped(_) => None,
                _ => Some(false),
            };
            return;
        };
        let mut ok = res <= self.for_id(report.id);
        if report.id.uses_derivative() && *res > self.noise_floor {
            ok &= report
                .halving_ratio()
                .is_some_and(|r| r >= self.halving_band.0 && r <= self.halving_band.1);
        }
        report.pass = Some(ok);
    }
}

/// Checks among `ids` that cannot run at `k2 = 0`.
pub fn blocked_at_zero_k2(params: &ModelParams, ids: &[IdentityId]) -> Vec<IdentityId> {
    if !params.k2.is_zero() {
        return Vec::new();
    }
    ids.iter().copied().filter(|id| id.needs_nonzero_k2()).collect()
}

/// Minimum distance of sampled `z` from `+-1` and from the `k2` poles.
pub const POLE_DISTANCE: f64 = 0.05;

/// `count` deterministic sample points inside `[-1, 1]`, at least
/// [`POLE_DISTANCE`] from `+-1`, from `+-sqrt(k2)` and from the gap.
pub fn z_samples(params: &ModelParams, count: usize, seed: u64) -> Result<Vec<Real>> {
    let d = POLE_DISTANCE;
    let k2 = params.k2.to_f64();
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    let edge = 1.0 - d;
    let inner = if k2 > 0.0 {
        Some(k2.sqrt() + d)
    } else if k2 == 0.0 && !params.t.is_zero() {
        Some(d)
    } else {
        None
    };
    match inner {
        Some(lo) if lo < edge => {
            pieces.push((-edge, -lo));
            pieces.push((lo, edge));
        }
        Some(_) => {
            return Err(Error::InvalidConfig(format!(
                "no sample points at distance {d} from the poles for k2 = {k2}"
            )))
        }
        None => pieces.push((-edge, edge)),
    }
    let total: f64 = pieces.iter().map(|(a, b)| b - a).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = params.prec();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut u = rng.gen_range(0.0..total);
        let mut z = pieces[0].0;
        for &(a, b) in &pieces {
            if u <= b - a {
                z = a + u;
                break;
            }
            u -= b - a;
        }
        out.push(num::real(p, z));
    }
    Ok(out)
}

/// Ratio of the largest `RIC_ELIM` residual to the largest `ODE_RN`
/// residual over a report set (both measure the same elimination).
pub fn riccati_consistency(reports: &[IdentityReport]) -> Option<f64> {
    let worst = |id: IdentityId| {
        reports
            .iter()
            .filter(|r| r.id == id)
            .filter_map(|r| r.residual.as_ref())
            .map(|r| r.to_f64())
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    };
    let elim = worst(IdentityId::RicElim)?;
    let ode = worst(IdentityId::OdeRn)?;
    if ode == 0.0 {
        return None;
    }
    Some(elim / ode)
}
