//! One pipeline per subcommand.

use pv5_jacobi::ode::{self, Trajectory};
use pv5_jacobi::orthopoly::OrthoState;
use pv5_jacobi::quadrature;
use pv5_jacobi::verify::{self, IdentityId, IdentityReport, Snapshot, Tier};
use pv5_jacobi::{num, Error, ModelParams, Real};
use rayon::prelude::*;
use rug::Float;
use serde_json::{json, Map, Value};

use crate::config::{Command, RunConfig};
use crate::report::{Check, Summary};
use crate::CliError;

/// Sampled `z` per verify run.
pub const Z_SAMPLES: usize = 20;

/// CSV table produced by a command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
}

pub(crate) struct Output {
    pub checks: Vec<Check>,
    pub summary: Summary,
    pub table: Table,
    pub exit: u8,
}

fn dec(x: &Real) -> String {
    num::to_decimal(x)
}

fn params_at(cfg: &RunConfig, t: &Real) -> Result<ModelParams, CliError> {
    Ok(ModelParams::validate(cfg.alpha.clone(), cfg.k2.clone(), t.clone(), cfg.bits(), cfg.n_max.max(1))?)
}

fn base_params(cfg: &RunConfig) -> Result<ModelParams, CliError> {
    for t in &cfg.t_grid {
        params_at(cfg, t)?;
    }
    params_at(cfg, &cfg.t_grid[0])
}

fn plain(table: Table, diagnostics: Map<String, Value>) -> Output {
    Output {
        checks: Vec::new(),
        summary: Summary { required_pass: true, max_required_residual: None, diagnostics },
        table,
        exit: 0,
    }
}

pub(crate) fn dispatch(cfg: &RunConfig) -> Result<Output, CliError> {
    match cfg.command {
        Command::Moments => moments(cfg),
        Command::Recurrence => recurrence(cfg),
        Command::Ladder => ladder(cfg),
        Command::Verify => run_verify(cfg),
        Command::Ode => run_ode(cfg),
        Command::PvResidual => pv_residual(cfg),
    }
}

fn moments(cfg: &RunConfig) -> Result<Output, CliError> {
    base_params(cfg)?;
    let rows: Vec<Vec<Vec<String>>> = cfg
        .t_grid
        .par_iter()
        .map(|t| {
            let params = params_at(cfg, t)?;
            (0..=cfg.n_max as u32)
                .map(|j| Ok(vec![dec(t), j.to_string(), dec(&quadrature::moment(j, &params, &cfg.ctx)?)]))
                .collect()
        })
        .collect::<Result<_, CliError>>()?;
    let mut table = Table::new(&["t", "j", "mu_j"]);
    table.rows = rows.into_iter().flatten().collect();
    Ok(plain(table, Map::new()))
}

fn recurrence(cfg: &RunConfig) -> Result<Output, CliError> {
    base_params(cfg)?;
    let states: Vec<OrthoState> = cfg
        .t_grid
        .par_iter()
        .map(|t| Ok(OrthoState::build(&params_at(cfg, t)?, &cfg.ctx)?))
        .collect::<Result<_, CliError>>()?;
    let mut table = Table::new(&["t", "n", "h_n", "beta_n", "p_n"]);
    let p = cfg.bits();
    let (mut routes, mut tele, mut sym) = (num::int(p, 0), num::int(p, 0), num::int(p, 0));
    for (t, s) in cfg.t_grid.iter().zip(&states) {
        for n in 0..=cfg.n_max.min(s.n_max()) {
            table.rows.push(vec![dec(t), n.to_string(), dec(&s.h[n]), dec(&s.beta[n]), dec(&s.p_sub[n])]);
        }
        routes = num::max(routes, &s.beta_route_defect());
        tele = num::max(tele, &s.telescopic_defect());
        sym = num::max(sym, &s.symmetry_defect);
    }
    let mut diag = Map::new();
    diag.insert("beta_route_defect".into(), json!(dec(&routes)));
    diag.insert("telescopic_defect".into(), json!(dec(&tele)));
    diag.insert("symmetry_defect".into(), json!(dec(&sym)));
    Ok(plain(table, diag))
}

fn snapshots(cfg: &RunConfig, n_max: usize) -> Result<Vec<Snapshot>, CliError> {
    cfg.t_grid
        .par_iter()
        .map(|t| Ok(Snapshot::build(&params_at(cfg, t)?, &cfg.ctx, t, n_max)?))
        .collect()
}

fn ladder(cfg: &RunConfig) -> Result<Output, CliError> {
    base_params(cfg)?.require_ladder()?;
    let snaps = snapshots(cfg, cfg.n_max.max(1))?;
    let mut table = Table::new(&["t", "n", "R_n", "r_n", "a_n", "b_n"]);
    let mut worst = num::int(cfg.bits(), 0);
    for (t, s) in cfg.t_grid.iter().zip(&snaps) {
        let l = &s.lad;
        for n in 0..=cfg.n_max {
            table.rows.push(vec![dec(t), n.to_string(), dec(&l.big_r[n]), dec(&l.r[n]), dec(&l.a[n]), dec(&l.b[n])]);
        }
        worst = num::max(worst, &l.max_error);
    }
    let mut diag = Map::new();
    diag.insert("max_quadrature_error".into(), json!(dec(&worst)));
    Ok(plain(table, diag))
}

fn require_nonzero_k2(params: &ModelParams, ids: &[IdentityId]) -> Result<(), CliError> {
    let blocked = verify::blocked_at_zero_k2(params, ids);
    if blocked.is_empty() {
        return Ok(());
    }
    let names: Vec<String> = blocked.iter().map(|id| id.to_string()).collect();
    Err(CliError::Usage(format!("k2 = 0 but these checks need k2 != 0: {}", names.join(", "))))
}

fn verdict(reports: &[IdentityReport]) -> (bool, Option<Real>) {
    let required: Vec<_> = reports.iter().filter(|r| r.tier == Tier::Required).collect();
    let pass = required.iter().all(|r| r.pass != Some(false));
    let worst = required
        .iter()
        .filter_map(|r| r.residual.as_ref())
        .fold(None, |acc: Option<Real>, v| Some(acc.map_or(v.clone(), |a| num::max(a, v))));
    (pass, worst)
}

fn diagnostics(reports: &[IdentityReport]) -> Map<String, Value> {
    let mut out = Map::new();
    for id in IdentityId::ALL.iter().filter(|id| id.tier() == Tier::Diagnostic) {
        let rows: Vec<_> = reports.iter().filter(|r| r.id == *id).collect();
        if rows.is_empty() {
            continue;
        }
        let worst = rows
            .iter()
            .filter_map(|r| r.residual.as_ref())
            .fold(None, |acc: Option<Real>, v| Some(acc.map_or(v.clone(), |a| num::max(a, v))));
        let count = |label: &str| rows.iter().filter(|r| r.status.label() == label).count();
        out.insert(
            id.to_string(),
            json!({
                "max_residual": worst.as_ref().map(dec),
                "ok": count("ok"),
                "skipped": count("skipped"),
                "error": count("error"),
            }),
        );
    }
    if let Some(ratio) = verify::riccati_consistency(reports) {
        out.insert("riccati_consistency".into(), json!(format!("{ratio:e}")));
    }
    out
}

fn check_table(reports: &[IdentityReport]) -> Table {
    let mut table = Table::new(&["id", "tier", "n", "t", "z", "residual", "status", "pass"]);
    for r in reports {
        table.rows.push(vec![
            r.id.to_string(),
            r.tier.to_string(),
            r.n.to_string(),
            dec(&r.t),
            r.z.as_ref().map(dec).unwrap_or_default(),
            r.residual.as_ref().map(dec).unwrap_or_default(),
            r.status.label().to_string(),
            r.pass.map(|b| b.to_string()).unwrap_or_default(),
        ]);
    }
    table
}

fn run_verify(cfg: &RunConfig) -> Result<Output, CliError> {
    let params = base_params(cfg)?;
    params.require_ladder()?;
    let ids = cfg.suite.kind().ids();
    require_nonzero_k2(&params, &ids)?;
    let zs = verify::z_samples(&params, Z_SAMPLES, cfg.seed)?;
    let n_set: Vec<usize> = (0..=cfg.n_max).collect();
    let reports = verify::check_suite(&params, &cfg.ctx, &ids, &n_set, &cfg.t_grid, &zs);
    let (required_pass, worst) = verdict(&reports);
    Ok(Output {
        checks: reports.iter().map(Check::from_report).collect(),
        summary: Summary {
            required_pass,
            max_required_residual: worst.as_ref().map(dec),
            diagnostics: diagnostics(&reports),
        },
        table: check_table(&reports),
        exit: if required_pass { 0 } else { 1 },
    })
}

fn degree(cfg: &RunConfig) -> Result<usize, CliError> {
    if cfg.n_max == 0 {
        return Err(CliError::Usage("this command works at degree n = n_max >= 1".into()));
    }
    Ok(cfg.n_max)
}

fn phi(big_r: &Real, params: &ModelParams, n: usize) -> Real {
    let p = params.prec();
    let m = Float::with_val(p, &params.alpha * 2u32) + (2 * n + 1) as u32;
    (big_r.clone() + &m) / m
}

fn pv_residual(cfg: &RunConfig) -> Result<Output, CliError> {
    let params = base_params(cfg)?;
    params.require_ladder()?;
    let n = degree(cfg)?;
    require_nonzero_k2(&params, &[IdentityId::PvPhi])?;
    let reports = verify::check_suite(&params, &cfg.ctx, &[IdentityId::PvPhi], &[n], &cfg.t_grid, &[]);
    let snaps = snapshots(cfg, n)?;
    let mut table = Table::new(&["t", "R_n", "r_n", "beta_n", "phi_n", "pv_residual"]);
    for (t, s) in cfg.t_grid.iter().zip(&snaps) {
        let residual = reports.iter().find(|r| r.t == *t).and_then(|r| r.residual.as_ref());
        table.rows.push(vec![
            dec(t),
            dec(&s.lad.big_r[n]),
            dec(&s.lad.r[n]),
            dec(&s.ortho.beta[n]),
            dec(&phi(&s.lad.big_r[n], &params, n)),
            residual.map(dec).unwrap_or_default(),
        ]);
    }
    let (required_pass, _) = verdict(&reports);
    Ok(Output {
        checks: reports.iter().map(Check::from_report).collect(),
        summary: Summary { required_pass, max_required_residual: None, diagnostics: diagnostics(&reports) },
        table,
        exit: 0,
    })
}

fn trajectory_summary(cfg: &RunConfig, result: &Result<Trajectory, Error>, interior: &[Real]) -> Value {
    match result {
        Ok(tr) => {
            let end = ode::crosscheck(tr, &cfg.ctx, std::slice::from_ref(&tr.t_end));
            let inner = ode::crosscheck(tr, &cfg.ctx, interior);
            json!({
                "status": "ok",
                "steps": tr.stats.steps,
                "rejected": tr.stats.rejected,
                "min_step": dec(&tr.stats.min_step),
                "end_state": tr.end_state().iter().map(dec).collect::<Vec<_>>(),
                "endpoint_deviation": end.map(|d| dec(&d)).map_err(|e| e.to_string()).unwrap_or_else(|e| e),
                "interior_deviation": inner.map(|d| dec(&d)).map_err(|e| e.to_string()).unwrap_or_else(|e| e),
            })
        }
        Err(e) => {
            let (kind, at) = match e {
                Error::PoleHit { t, .. } => ("pole_hit", Some(t.clone())),
                Error::StepUnderflow { t, .. } => ("step_underflow", Some(t.clone())),
                _ => ("error", None),
            };
            json!({ "status": kind, "t": at, "detail": e.to_string() })
        }
    }
}

fn run_ode(cfg: &RunConfig) -> Result<Output, CliError> {
    let params = base_params(cfg)?;
    params.require_ladder()?;
    let n = degree(cfg)?;
    if params.k2.is_zero() {
        return Err(CliError::Usage("k2 = 0: the Riccati and Painleve V equations need k2 != 0".into()));
    }
    let t0 = cfg.t_grid[0].clone();
    let t1 = cfg.t_grid.last().expect("non-empty grid").clone();
    if !(t0 > 0) {
        return Err(CliError::Usage("ode needs the t-grid inside t > 0".into()));
    }
    let p0 = params_at(cfg, &t0)?;
    let ric_init = ode::riccati_init(&p0, &cfg.ctx, n, &t0)?;
    let pv_init = ode::pv_init(&p0, &cfg.ctx, n, &t0)?;
    let (ric, pv) = rayon::join(
        || ode::integrate_riccati(&p0, n, &t0, &t1, ric_init, &cfg.ode_tol),
        || ode::integrate_pv(&p0, n, &t0, &t1, pv_init, &cfg.ode_tol),
    );
    for r in [&ric, &pv] {
        if let Err(e) = r {
            if !e.is_numerical() {
                return Err(e.clone().into());
            }
        }
    }
    let interior: Vec<Real> = if cfg.t_grid.len() > 2 { cfg.t_grid[1..cfg.t_grid.len() - 1].to_vec() } else { Vec::new() };
    let mut diag = Map::new();
    diag.insert("n".into(), json!(n));
    diag.insert("ode_tol".into(), json!(dec(&cfg.ode_tol)));
    diag.insert("riccati".into(), trajectory_summary(cfg, &ric, &interior));
    diag.insert("painleve_v".into(), trajectory_summary(cfg, &pv, &interior));

    let mut table = Table::new(&["t", "R_n", "r_n", "beta_n", "phi_n", "pv_residual"]);
    let snaps = snapshots(cfg, n)?;
    let sample = |tr: &Result<Trajectory, Error>, t: &Real| tr.as_ref().ok().and_then(|tr| tr.sample(t).ok());
    for (t, s) in cfg.t_grid.iter().zip(&snaps) {
        let rr = sample(&ric, t);
        let pp = sample(&pv, t);
        let cell = |v: &Option<Vec<Real>>, k: usize| v.as_ref().map(|v| dec(&v[k])).unwrap_or_default();
        table.rows.push(vec![dec(t), cell(&rr, 0), cell(&rr, 1), dec(&s.ortho.beta[n]), cell(&pp, 0), String::new()]);
    }
    let failed = ric.is_err() || pv.is_err();
    Ok(Output {
        checks: Vec::new(),
        summary: Summary { required_pass: true, max_required_residual: None, diagnostics: diag },
        table,
        exit: if failed { 3 } else { 0 },
    })
}
