//! The singularly perturbed Jacobi weight
//! `w(z) = (1 - z^2)^alpha * exp(-t / (z^2 - k2))` on `[-1, 1]`, its support
//! and the potential derivative `v'(z) = -(ln w)'(z)`.
//!
//! For `k2 > 0` and `t > 0` the exponential factor blows up on
//! `(-sqrt(k2), sqrt(k2))`; the weight is defined to be identically zero on
//! the closed gap `[-sqrt(k2), sqrt(k2)]`. Approaching the gap from outside
//! the factor vanishes together with all of its derivatives, so the weight is
//! continuous and every boundary term produced by integration by parts is
//! zero.

use rug::ops::Pow;
use rug::Float;

use crate::num;
use crate::{Error, Real, Result};

/// Validated parameters of one weight instance.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub alpha: Real,
    pub k2: Real,
    pub t: Real,
    pub precision_bits: u32,
    pub n_max: usize,
}

impl ModelParams {
    /// Validates raw inputs. `alpha = 0` is accepted (moments only); use
    /// [`ModelParams::require_ladder`] before ladder work.
    pub fn validate(
        alpha: Real,
        k2: Real,
        t: Real,
        precision_bits: u32,
        n_max: usize,
    ) -> Result<Self> {
        if precision_bits < 64 {
            return Err(Error::InvalidConfig(format!(
                "precision_bits = {precision_bits}, need at least 64"
            )));
        }
        if n_max < 1 {
            return Err(Error::InvalidConfig("n_max must be at least 1".into()));
        }
        if !alpha.is_finite() || alpha < 0 {
            return Err(Error::AlphaOutOfRange(format!(
                "alpha = {} (need alpha >= 0)",
                num::to_decimal(&alpha)
            )));
        }
        if !k2.is_finite() || k2 >= 1 {
            return Err(Error::K2OutOfRange(num::to_decimal(&k2)));
        }
        if !t.is_finite() || t < 0 {
            return Err(Error::NegativeT(num::to_decimal(&t)));
        }
        Ok(ModelParams {
            alpha: Float::with_val(precision_bits, alpha),
            k2: Float::with_val(precision_bits, k2),
            t: Float::with_val(precision_bits, t),
            precision_bits,
            n_max,
        })
    }

    pub fn from_f64(alpha: f64, k2: f64, t: f64, precision_bits: u32, n_max: usize) -> Result<Self> {
        let p = precision_bits.max(2);
        Self::validate(
            num::real(p, alpha),
            num::real(p, k2),
            num::real(p, t),
            precision_bits,
            n_max,
        )
    }

    /// Parses decimal strings at full precision.
    pub fn from_decimal(
        alpha: &str,
        k2: &str,
        t: &str,
        precision_bits: u32,
        n_max: usize,
    ) -> Result<Self> {
        let p = precision_bits.max(2);
        Self::validate(
            num::parse(p, alpha)?,
            num::parse(p, k2)?,
            num::parse(p, t)?,
            precision_bits,
            n_max,
        )
    }

    pub fn prec(&self) -> u32 {
        self.precision_bits
    }

    /// Ladder quantities need `(1 - z^2)^alpha` to vanish at `z = +-1`.
    pub fn ladder_eligible(&self) -> bool {
        self.alpha > 0
    }

    pub fn require_ladder(&self) -> Result<()> {
        if self.ladder_eligible() {
            Ok(())
        } else {
            Err(Error::AlphaOutOfRange(format!(
                "alpha = {} is not eligible for ladder quantities (need alpha > 0)",
                num::to_decimal(&self.alpha)
            )))
        }
    }

    /// Same instance at another deformation time.
    pub fn with_t(&self, t: Real) -> Result<Self> {
        Self::validate(
            self.alpha.clone(),
            self.k2.clone(),
            t,
            self.precision_bits,
            self.n_max,
        )
    }

    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::validate(
            self.alpha.clone(),
            self.k2.clone(),
            self.t.clone(),
            self.precision_bits,
            n_max,
        )
    }

    /// True when the exponential factor cuts a gap out of `[-1, 1]`.
    pub fn has_gap(&self) -> bool {
        self.k2 > 0 && self.t > 0
    }

    /// `sqrt(k2)` for `k2 > 0`.
    pub fn k(&self) -> Option<Real> {
        if self.k2 > 0 {
            Some(self.k2.clone().sqrt())
        } else {
            None
        }
    }

    pub fn support(&self) -> Support {
        support(self)
    }

    /// Relative distance below which an evaluation point counts as a pole.
    pub fn pole_guard(&self) -> Real {
        let ten = num::int(self.prec(), 10);
        let e = -(f64::from(self.precision_bits) / 8.0).floor() as i32;
        ten.pow(e)
    }
}

/// A closed interval `[lo, hi]` inside `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    pub lo: Real,
    pub hi: Real,
}

/// One or two disjoint closed intervals, sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Support {
    pub intervals: Vec<Interval>,
}

impl Support {
    pub fn full(prec: u32) -> Self {
        Support {
            intervals: vec![Interval {
                lo: num::int(prec, -1),
                hi: num::int(prec, 1),
            }],
        }
    }

    /// The part of the support with `z >= 0`.
    pub fn right_half(&self) -> Support {
        let mut intervals = Vec::new();
        for iv in &self.intervals {
            if iv.hi <= 0 {
                continue;
            }
            let lo = if iv.lo < 0 { Float::with_val(iv.lo.prec(), 0) } else { iv.lo.clone() };
            intervals.push(Interval { lo, hi: iv.hi.clone() });
        }
        Support { intervals }
    }

    pub fn contains(&self, z: &Real) -> bool {
        self.intervals.iter().any(|iv| *z >= iv.lo && *z <= iv.hi)
    }
}

pub fn support(params: &ModelParams) -> Support {
    let p = params.prec();
    match params.k() {
        Some(k) if params.t > 0 => Support {
            intervals: vec![
                Interval { lo: num::int(p, -1), hi: Float::with_val(p, -&k) },
                Interval { lo: k, hi: num::int(p, 1) },
            ],
        },
        _ => Support::full(p),
    }
}

/// Exponential factor `exp(-t / (z^2 - k2))`, zero on the gap.
///
/// `dk` is `z^2 - k2`.
fn exp_factor(dk: &Real, params: &ModelParams) -> Real {
    let p = params.prec();
    if params.t.is_zero() {
        return num::int(p, 1);
    }
    if *dk <= 0 {
        // inside the gap (k2 > 0) or exactly at z = 0 when k2 = 0
        return num::int(p, 0);
    }
    let arg = Float::with_val(p, &params.t / dk);
    (-arg).exp()
}

/// `w(z)`.
pub fn weight(z: &Real, params: &ModelParams) -> Result<Real> {
    if z.clone().abs() > 1 {
        return Err(Error::DomainError(num::to_decimal(z)));
    }
    let p = params.prec();
    let z2 = Float::with_val(p, z * z);
    let omz2 = Float::with_val(p, 1 - &z2);
    let dk = Float::with_val(p, &z2 - &params.k2);
    if params.has_gap() && dk <= 0 {
        return Ok(num::int(p, 0));
    }
    let base = if omz2.is_zero() {
        if params.alpha.is_zero() { num::int(p, 1) } else { num::int(p, 0) }
    } else {
        omz2.pow(&params.alpha)
    };
    Ok(base * exp_factor(&dk, params))
}

/// The weight and the weight divided by each singular factor, evaluated at a
/// quadrature abscissa with accurately known `1 - x^2`.
#[derive(Clone, Debug)]
pub struct WeightParts {
    /// `w(x)`
    pub w: Real,
    /// `w(x) / (1 - x^2)`
    pub w_omx2: Real,
    /// `w(x) / (x^2 - k2)`, zero where the weight vanishes
    pub w_dk: Real,
    /// `w(x) / (x^2 - k2)^2`
    pub w_dk2: Real,
}

pub fn weight_parts(x: &Real, omx2: &Real, params: &ModelParams) -> WeightParts {
    let p = params.prec();
    let x2 = Float::with_val(p, x * x);
    let dk = Float::with_val(p, &x2 - &params.k2);
    let e = exp_factor(&dk, params);
    let zero = num::int(p, 0);
    if e.is_zero() || *omx2 <= 0 {
        return WeightParts { w: zero.clone(), w_omx2: zero.clone(), w_dk: zero.clone(), w_dk2: zero };
    }
    let am1 = Float::with_val(p, &params.alpha - 1u32);
    let w_omx2 = Float::with_val(p, omx2.pow(&am1)) * &e;
    let w = Float::with_val(p, &w_omx2 * omx2);
    let (w_dk, w_dk2) = if dk.is_zero() {
        (zero.clone(), zero)
    } else {
        let a = Float::with_val(p, &w / &dk);
        let b = Float::with_val(p, &a / &dk);
        (a, b)
    };
    WeightParts { w, w_omx2, w_dk, w_dk2 }
}

fn check_pole(z: &Real, params: &ModelParams) -> Result<()> {
    let p = params.prec();
    let guard = params.pole_guard();
    let az = z.clone().abs();
    let d1 = Float::with_val(p, &az - 1u32).abs();
    if d1 < guard {
        return Err(Error::PoleError(format!("z = {} at z = +-1", num::to_decimal(z))));
    }
    if !params.t.is_zero() {
        if let Some(k) = params.k() {
            let dk = Float::with_val(p, &az - &k).abs();
            if dk < Float::with_val(p, &guard * &k) {
                return Err(Error::PoleError(format!(
                    "z = {} at z = +-sqrt(k2)",
                    num::to_decimal(z)
                )));
            }
        } else if params.k2.is_zero() && az < guard {
            return Err(Error::PoleError("z = 0 with k2 = 0".into()));
        }
    }
    Ok(())
}

/// `v'(z) = 2 alpha z / (1 - z^2) - 2 t z / (z^2 - k2)^2`.
pub fn v_prime(z: &Real, params: &ModelParams) -> Result<Real> {
    check_pole(z, params)?;
    Ok(v_prime_unchecked(z, params))
}

pub(crate) fn v_prime_unchecked(z: &Real, params: &ModelParams) -> Real {
    let p = params.prec();
    let z2 = Float::with_val(p, z * z);
    let jac = Float::with_val(p, 2 * &params.alpha) * z / Float::with_val(p, 1 - &z2);
    if params.t.is_zero() {
        return jac;
    }
    let dk = Float::with_val(p, &z2 - &params.k2);
    let dk2 = Float::with_val(p, &dk * &dk);
    let pert = Float::with_val(p, 2 * &params.t) * z / dk2;
    jac - pert
}

/// `v''(z)`.
pub fn v_second(z: &Real, params: &ModelParams) -> Result<Real> {
    check_pole(z, params)?;
    let p = params.prec();
    let z2 = Float::with_val(p, z * z);
    let omz2 = Float::with_val(p, 1 - &z2);
    let jac = Float::with_val(p, 2 * &params.alpha) * Float::with_val(p, 1 + &z2)
        / Float::with_val(p, &omz2 * &omz2);
    if params.t.is_zero() {
        return Ok(jac);
    }
    let dk = Float::with_val(p, &z2 - &params.k2);
    let dk3 = Float::with_val(p, &dk * &dk) * &dk;
    let num3 = Float::with_val(p, 3 * &z2) + &params.k2;
    let pert = Float::with_val(p, 2 * &params.t) * num3 / dk3;
    Ok(jac + pert)
}

/// Divided difference `(v'(z) - v'(y)) / (z - y)` in closed form; equals
/// `v''(z)` at `y = z`.
pub fn dd_quotient(z: &Real, y: &Real, params: &ModelParams) -> Result<Real> {
    check_pole(z, params)?;
    check_pole(y, params)?;
    let p = params.prec();
    let omz2 = Float::with_val(p, 1 - Float::with_val(p, z * z));
    let omy2 = Float::with_val(p, 1 - Float::with_val(p, y * y));
    let jac = jacobi_dd_coefficient(z, y, &omz2, params) / omy2;
    if params.t.is_zero() {
        return Ok(jac);
    }
    let dky = Float::with_val(p, Float::with_val(p, y * y) - &params.k2);
    let pert = perturbation_dd_coefficient(z, y, params) / Float::with_val(p, &dky * &dky);
    Ok(jac + pert)
}

/// `2 alpha (1 + z y) / (1 - z^2)`: the Jacobi part of the divided difference
/// with the `1 / (1 - y^2)` factor removed.
pub(crate) fn jacobi_dd_coefficient(z: &Real, y: &Real, omz2: &Real, params: &ModelParams) -> Real {
    let p = params.prec();
    let zy1 = Float::with_val(p, z * y) + 1u32;
    Float::with_val(p, 2 * &params.alpha) * zy1 / omz2
}

/// `-2t [k2^2 + 2 k2 y z - y z (z^2 + z y + y^2)] / (z^2 - k2)^2`: the
/// perturbation part of the divided difference with the `1 / (y^2 - k2)^2`
/// factor removed.
pub(crate) fn perturbation_dd_coefficient(z: &Real, y: &Real, params: &ModelParams) -> Real {
    let p = params.prec();
    let c = &params.k2;
    let yz = Float::with_val(p, y * z);
    let z2 = Float::with_val(p, z * z);
    let y2 = Float::with_val(p, y * y);
    let quad = Float::with_val(p, &z2 + &yz) + &y2;
    let mut numer = Float::with_val(p, c * c);
    numer += Float::with_val(p, 2 * c) * &yz;
    numer -= Float::with_val(p, &yz * &quad);
    let dkz = Float::with_val(p, &z2 - c);
    let dkz2 = Float::with_val(p, &dkz * &dkz);
    -(Float::with_val(p, 2 * &params.t) * numer / dkz2)
}
