//! Tanh-sinh (double exponential) quadrature in configurable precision.
//!
//! Each interval `[a, b]` of a [`Support`] is mapped with
//! `x = (a + b)/2 + (b - a)/2 * tanh(pi/2 * sinh(s))` and the trapezoid rule
//! with step `2^-level` is applied in `s`. Levels nest: the nodes of level
//! `L - 1` are the even-indexed nodes of level `L`, so one pass over a
//! level-`L` node set yields both the fine sum and the coarse sum, and their
//! difference is the reported error estimate.
//!
//! Nodes carry the distance to the nearest interval end computed from the
//! complement `1 - tanh(u) = 2 / (1 + e^{2u})`, so `1 - x^2` is exact to
//! working precision even where `x` itself rounds to `+-1`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::ops::Pow;
use rug::Float;

use crate::num;
use crate::weight::{self, ModelParams, Support, WeightParts};
use crate::{Error, Real, Result};

/// Level at which adaptive integration starts.
pub const START_LEVEL: u32 = 3;

#[derive(Clone, Debug)]
pub struct PrecisionContext {
    pub bits: u32,
    pub rel_tol: Real,
    pub max_level: u32,
}

impl PrecisionContext {
    pub fn new(bits: u32, rel_tol: Real, max_level: u32) -> Result<Self> {
        if bits < 64 {
            return Err(Error::InvalidConfig(format!("bits = {bits}, need at least 64")));
        }
        if max_level > 16 || max_level < START_LEVEL + 1 {
            return Err(Error::InvalidConfig(format!(
                "max_level = {max_level}, need {} <= max_level <= 16",
                START_LEVEL + 1
            )));
        }
        let floor = num::pow2_neg(bits, bits - 16);
        if !rel_tol.is_finite() || rel_tol < floor {
            return Err(Error::InvalidConfig(format!(
                "rel_tol = {} is below 2^-(bits-16)",
                num::to_decimal(&rel_tol)
            )));
        }
        Ok(PrecisionContext { bits, rel_tol: Float::with_val(bits, rel_tol), max_level })
    }

    /// `rel_tol = 10^-40`, `max_level = 12` at the given precision.
    pub fn with_bits(bits: u32) -> Result<Self> {
        let tol = num::parse(bits, "1e-40")?;
        let floor = num::pow2_neg(bits, bits.saturating_sub(16));
        let tol = if tol < floor { floor * 16u32 } else { tol };
        Self::new(bits, tol, 12)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self::with_bits(256).expect("default precision context")
    }
}

/// Reference abscissae for one level: for `j = 0, 1, ..., J` the complement
/// `q_j = 1 - tanh(u_j)` and the derivative weight
/// `omega_j = (pi/2) cosh(s_j) / cosh^2(u_j)`, with `s_j = j 2^-level`.
#[derive(Debug)]
struct RefTable {
    q: Vec<Real>,
    omega: Vec<Real>,
}

fn s_max(bits: u32) -> f64 {
    // q(s) ~ 2 exp(-(pi/2) e^s); stop once q < 2^(-3 bits)
    let b = 3.0 * f64::from(bits) * std::f64::consts::LN_2;
    (2.0 * b / std::f64::consts::PI).ln() + 0.05
}

fn ref_table(bits: u32, level: u32) -> Arc<RefTable> {
    static TABLES: OnceLock<Mutex<HashMap<(u32, u32), Arc<RefTable>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = tables.lock().unwrap().get(&(bits, level)) {
        return Arc::clone(t);
    }
    let table = Arc::new(build_ref_table(bits, level));
    tables
        .lock()
        .unwrap()
        .entry((bits, level))
        .or_insert(table)
        .clone()
}

fn build_ref_table(bits: u32, level: u32) -> RefTable {
    let p = bits + 32;
    let half_pi = num::pi(p) / 2u32;
    // whole multiples of s so the tables of successive levels nest
    let count = s_max(bits).ceil() as usize * (1usize << level);
    let mut q = Vec::with_capacity(count + 1);
    let mut omega = Vec::with_capacity(count + 1);
    for j in 0..=count {
        let s = num::int(p, j as i64) >> level;
        let u = Float::with_val(p, s.sinh_ref()) * &half_pi;
        let eu = u.clone().exp();
        let e2u = Float::with_val(p, &eu * &eu);
        let qj = Float::with_val(p, 2u32) / (e2u + 1u32);
        let cosh_u = (Float::with_val(p, 1u32 / &eu) + &eu) / 2u32;
        let om = Float::with_val(p, s.cosh_ref()) * &half_pi / Float::with_val(p, &cosh_u * &cosh_u);
        q.push(Float::with_val(bits, qj));
        omega.push(Float::with_val(bits, om));
    }
    RefTable { q, omega }
}

/// A point `x` with `1 - x^2` known to full relative precision.
#[derive(Clone, Debug)]
pub struct Abscissa {
    pub x: Real,
    pub omx2: Real,
}

impl Abscissa {
    pub fn new(x: Real) -> Self {
        let p = x.prec();
        let omx2 = Float::with_val(p, 1 - Float::with_val(p, &x * &x));
        Abscissa { x, omx2 }
    }
}

/// One quadrature node of a nested tanh-sinh rule.
#[derive(Clone, Debug)]
pub struct Node {
    pub at: Abscissa,
    /// Quadrature weight at the current level.
    pub qw: Real,
    /// Whether the node also belongs to the next-coarser level.
    pub coarse: bool,
}

/// Tanh-sinh nodes for a support at a given level, refinable in place.
#[derive(Clone, Debug)]
pub struct NodeSet {
    bits: u32,
    level: u32,
    support: Support,
    nodes: Vec<Node>,
}

impl NodeSet {
    pub fn new(support: &Support, bits: u32, level: u32) -> Self {
        let table = ref_table(bits, level);
        let mut nodes = Vec::new();
        for iv in &support.intervals {
            for j in 0..table.q.len() {
                push_nodes(&mut nodes, iv, bits, level, &table, j, j % 2 == 0);
            }
        }
        NodeSet { bits, level, support: support.clone(), nodes }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    /// Moves to the next level: existing nodes become the coarse set and the
    /// odd-indexed nodes of the new level are appended. Returns the index of
    /// the first new node.
    pub fn refine(&mut self) -> usize {
        self.level += 1;
        for n in &mut self.nodes {
            n.qw /= 2u32;
            n.coarse = true;
        }
        let start = self.nodes.len();
        let table = ref_table(self.bits, self.level);
        for iv in &self.support.intervals {
            for j in (1..table.q.len()).step_by(2) {
                push_nodes(&mut self.nodes, iv, self.bits, self.level, &table, j, false);
            }
        }
        start
    }
}

fn push_nodes(
    out: &mut Vec<Node>,
    iv: &weight::Interval,
    bits: u32,
    level: u32,
    table: &RefTable,
    j: usize,
    coarse: bool,
) {
    let p = bits;
    let half = Float::with_val(p, &iv.hi - &iv.lo) / 2u32;
    let qw = Float::with_val(p, &half * &table.omega[j]) >> level;
    if j == 0 {
        let mid = Float::with_val(p, &iv.lo + &iv.hi) / 2u32;
        out.push(Node { at: Abscissa::new(mid), qw, coarse });
        return;
    }
    let d = Float::with_val(p, &half * &table.q[j]);
    // right of centre: distance d from hi
    let x_hi = Float::with_val(p, &iv.hi - &d);
    out.push(Node { at: abscissa_near(x_hi, &d, iv, true), qw: qw.clone(), coarse });
    let x_lo = Float::with_val(p, &iv.lo + &d);
    out.push(Node { at: abscissa_near(x_lo, &d, iv, false), qw, coarse });
}

/// Builds `1 - x^2 = (1 - x)(1 + x)` using the exact end distance when the
/// nearby interval end is `+-1`.
fn abscissa_near(x: Real, dist: &Real, iv: &weight::Interval, near_hi: bool) -> Abscissa {
    let p = x.prec();
    let one_minus = if near_hi && iv.hi == 1 {
        dist.clone()
    } else {
        Float::with_val(p, 1 - &x)
    };
    let one_plus = if !near_hi && iv.lo == -1 {
        dist.clone()
    } else {
        Float::with_val(p, 1 + &x)
    };
    Abscissa { x, omx2: one_minus * one_plus }
}

/// Result of a quadrature with its error estimate.
#[derive(Clone, Debug)]
pub struct Integral {
    pub value: Real,
    /// `|I_L - I_(L-1)|`, a conservative estimate of the error of `value`.
    pub error: Real,
    /// `sum |w_i f_i|`, the scale convergence is judged against.
    pub l1: Real,
    pub level: u32,
    pub converged: bool,
}

impl Integral {
    /// Value, or `NoConvergence` when the estimate stayed above tolerance.
    pub fn require(self) -> Result<Real> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NoConvergence { estimate: num::to_decimal(&self.error), level: self.level })
        }
    }
}

/// Fine sum, coarse sum and l1 norm of already weighted node values.
pub(crate) struct Sums {
    pub fine: Real,
    pub coarse: Real,
    pub l1: Real,
}

impl Sums {
    pub fn new(p: u32) -> Self {
        Sums { fine: num::int(p, 0), coarse: num::int(p, 0), l1: num::int(p, 0) }
    }

    /// Adds `qw * f` for a node.
    pub fn add(&mut self, qw: &Real, f: &Real, coarse: bool) {
        let p = self.fine.prec();
        let term = Float::with_val(p, qw * f);
        self.l1 += Float::with_val(p, term.abs_ref());
        if coarse {
            self.coarse += &term;
        }
        self.fine += term;
    }

    pub fn error(&self) -> Real {
        let p = self.fine.prec();
        let c = Float::with_val(p, &self.coarse * 2u32);
        Float::with_val(p, &self.fine - &c).abs()
    }

    pub fn converged(&self, rel_tol: &Real) -> bool {
        let bound = Float::with_val(self.l1.prec(), &self.l1 * rel_tol);
        self.error() <= bound
    }
}

/// Adaptive tanh-sinh integral of `f` over `support`. Refines from
/// [`START_LEVEL`] until `|I_L - I_(L-1)| <= rel_tol * sum |w f|` or
/// `max_level` is reached; the returned [`Integral`] carries the flag.
pub fn integrate<F>(f: F, support: &Support, ctx: &PrecisionContext) -> Integral
where
    F: Fn(&Abscissa) -> Real,
{
    let p = ctx.bits;
    let mut set = NodeSet::new(support, p, START_LEVEL);
    let mut values: Vec<Real> = set.nodes().iter().map(|n| f(&n.at)).collect();
    loop {
        let mut sums = Sums::new(p);
        for (n, v) in set.nodes().iter().zip(&values) {
            sums.add(&n.qw, v, n.coarse);
        }
        let converged = sums.converged(&ctx.rel_tol);
        if converged || set.level() >= ctx.max_level {
            return Integral {
                error: sums.error(),
                value: sums.fine,
                l1: sums.l1,
                level: set.level(),
                converged,
            };
        }
        let start = set.refine();
        values.extend(set.nodes()[start..].iter().map(|n| f(&n.at)));
    }
}

/// Integral of an even integrand over a symmetric support as twice the
/// integral over the right half.
pub fn integrate_even<F>(f: F, support: &Support, ctx: &PrecisionContext) -> Integral
where
    F: Fn(&Abscissa) -> Real,
{
    let mut half = integrate(f, &support.right_half(), ctx);
    half.value *= 2u32;
    half.error *= 2u32;
    half.l1 *= 2u32;
    half
}

/// `mu_j = int z^j w(z) dz`; odd moments are exactly zero.
pub fn moment(j: u32, params: &ModelParams, ctx: &PrecisionContext) -> Result<Real> {
    if j % 2 == 1 {
        return Ok(num::int(ctx.bits, 0));
    }
    let support = params.support();
    let integral = integrate_even(
        |a| {
            let parts = weight::weight_parts(&a.x, &a.omx2, params);
            Float::with_val(ctx.bits, (&a.x).pow(j)) * parts.w
        },
        &support,
        ctx,
    );
    integral.require()
}

/// A tanh-sinh node set with the weight (and the weight divided by its
/// singular factors) tabulated at every node. This is the discrete measure
/// the orthogonal polynomials are built on.
#[derive(Clone, Debug)]
pub struct Measure {
    params: ModelParams,
    set: NodeSet,
    parts: Vec<WeightParts>,
}

impl Measure {
    pub fn new(params: &ModelParams, ctx: &PrecisionContext, level: u32) -> Self {
        let set = NodeSet::new(&params.support(), ctx.bits, level);
        let parts = set
            .nodes()
            .iter()
            .map(|n| weight::weight_parts(&n.at.x, &n.at.omx2, params))
            .collect();
        Measure { params: params.clone(), set, parts }
    }

    pub fn refine(&mut self) {
        let start = self.set.refine();
        let params = &self.params;
        let new: Vec<WeightParts> = self.set.nodes()[start..]
            .iter()
            .map(|n| weight::weight_parts(&n.at.x, &n.at.omx2, params))
            .collect();
        self.parts.extend(new);
    }

    pub fn level(&self) -> u32 {
        self.set.level()
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Node, &WeightParts)> {
        self.set.nodes().iter().zip(self.parts.iter())
    }

    /// Fine/coarse sums of `f(node, parts)` already multiplied by the
    /// quadrature weight.
    pub fn integrate<F>(&self, f: F) -> Integral
    where
        F: Fn(&Abscissa, &WeightParts) -> Real,
    {
        let p = self.params.prec();
        let mut sums = Sums::new(p);
        for (n, w) in self.iter() {
            sums.add(&n.qw, &f(&n.at, w), n.coarse);
        }
        let error = sums.error();
        Integral { value: sums.fine, error, l1: sums.l1, level: self.level(), converged: true }
    }
}
