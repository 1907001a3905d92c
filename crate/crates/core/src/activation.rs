//! Scalar kernels for the soft exponential activation.
//!
//! For a real parameter `alpha` the activation is the three-branch function
//!
//! ```text
//!            | -ln(1 - alpha (x + alpha)) / alpha    alpha < 0   (log branch)
//! f(alpha,x) | x                                     alpha = 0
//!            | (e^(alpha x) - 1) / alpha + alpha     alpha > 0   (exp branch)
//! ```
//!
//! It is logarithmic at `alpha = -1`, the identity at `alpha = 0` and exponential at
//! `alpha = 1`. Negating `alpha` inverts the function in `x`.
//!
//! Complex parameters use the exponential form `(e^(alpha z) - 1) / alpha + alpha`
//! everywhere except on the negative real axis, where the log branch applies. For
//! `alpha = i w` and real `x` this gives `sin(w x) / w + i (w + (1 - cos(w x)) / w)`,
//! a sinusoid whose frequency is set by the imaginary part of `alpha`.
//!
//! Values are computed with `expm1`/`ln_1p` kernels so that `|alpha| << 1` does not
//! cancel. The `alpha`-derivatives switch to power series close to the seam at zero,
//! where the closed forms are `0/0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A complex value flowing through evaluation.
pub type CScalar = Complex64;

/// Below this magnitude of `alpha * x` (exp side) or `alpha * (x + alpha)` (log side)
/// the `alpha`-derivative is summed as a series instead of the closed form.
const SERIES_THRESHOLD: f64 = 0.1;
const SERIES_TERMS: usize = 40;

/// Activation parameter of one unit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Alpha {
    pub re: f64,
    pub im: f64,
}

impl Alpha {
    pub const ZERO: Alpha = Alpha { re: 0.0, im: 0.0 };
    /// Natural logarithm.
    pub const LOG: Alpha = Alpha { re: -1.0, im: 0.0 };
    /// Natural exponential.
    pub const EXP: Alpha = Alpha { re: 1.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::NonFiniteInput(format!("alpha = ({re}, {im})")));
        }
        Ok(Alpha { re, im })
    }

    pub const fn real(re: f64) -> Self {
        Alpha { re, im: 0.0 }
    }

    pub const fn imaginary(im: f64) -> Self {
        Alpha { re: 0.0, im }
    }

    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }

    pub fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn to_complex(self) -> CScalar {
        CScalar::new(self.re, self.im)
    }

    /// True when the log branch is active.
    fn uses_log_branch(&self) -> bool {
        self.is_real() && self.re < 0.0
    }
}

impl From<f64> for Alpha {
    fn from(re: f64) -> Self {
        Alpha::real(re)
    }
}

/// How the log branch treats arguments that leave the positive reals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EvalMode {
    /// A non-positive log-branch argument is a [`Error::Domain`].
    #[default]
    RealStrict,
    /// Continue through the principal complex logarithm. An argument of exactly
    /// zero is still an error.
    ComplexPrincipal,
}

/// Value and holomorphic partial derivatives of one unit at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPartials {
    pub value: CScalar,
    /// `df/dz`
    pub d_input: CScalar,
    /// `df/dalpha`
    pub d_alpha: CScalar,
}

/// The log branch is defined in `RealStrict` mode exactly for `x` strictly above
/// `1/alpha - alpha`.
pub fn real_domain_lower_bound(alpha: f64) -> f64 {
    alpha.recip() - alpha
}

/// Soft exponential for a real parameter and real input.
///
/// Returns a complex value only when `mode` is [`EvalMode::ComplexPrincipal`] and the
/// log-branch argument is negative; otherwise the imaginary part is zero.
pub fn softexp(alpha: f64, x: f64, mode: EvalMode) -> Result<CScalar> {
    check_finite(alpha, x)?;
    if alpha == 0.0 {
        return Ok(CScalar::new(x, 0.0));
    }
    let value = if alpha > 0.0 {
        CScalar::new(exp_form(alpha, x), 0.0)
    } else {
        -real_log_argument_ln(alpha, x, mode)? / alpha
    };
    finite_or_range(value, alpha, x)
}

/// [`softexp`] restricted to the real domain.
pub fn softexp_real(alpha: f64, x: f64) -> Result<f64> {
    softexp(alpha, x, EvalMode::RealStrict).map(|v| v.re)
}

/// Analytic continuation of soft exponential to complex `alpha` and `x`, using the
/// principal logarithm on the log branch.
pub fn softexp_complex(alpha: Alpha, x: CScalar) -> Result<CScalar> {
    activate(alpha, x, EvalMode::ComplexPrincipal)
}

/// Evaluates one unit. This is what the network applies to each pre-activation.
pub fn activate(alpha: Alpha, z: CScalar, mode: EvalMode) -> Result<CScalar> {
    check_finite_complex(alpha, z)?;
    if alpha.is_real() && z.im == 0.0 {
        return softexp(alpha.re, z.re, mode);
    }
    if alpha.is_zero() {
        return Ok(z);
    }
    let value = if alpha.uses_log_branch() {
        let a = alpha.re;
        let v = (z + a) * a;
        -ln1p_complex(-v) / a
    } else {
        exp_form_complex(alpha, z)
    };
    finite_or_range(value, alpha.re, z.re)
}

/// Value, `df/dz` and `df/dalpha` of one unit.
///
/// Real parameter and real input go through [`dsoftexp_dx`] and [`dsoftexp_dalpha`];
/// everything else uses the complex forms of the same expressions.
pub fn activate_partials(alpha: Alpha, z: CScalar, mode: EvalMode) -> Result<UnitPartials> {
    let value = activate(alpha, z, mode)?;
    if alpha.is_real() && z.im == 0.0 && value.im == 0.0 {
        return Ok(UnitPartials {
            value,
            d_input: CScalar::new(dsoftexp_dx(alpha.re, z.re)?, 0.0),
            d_alpha: CScalar::new(dsoftexp_dalpha(alpha.re, z.re)?, 0.0),
        });
    }
    let (d_input, d_alpha) = if alpha.uses_log_branch() {
        let a = alpha.re;
        let s = z + a;
        let v = s * a;
        let w = CScalar::new(1.0, 0.0) - v;
        let ln_w = if z.im == 0.0 {
            // negative real argument under the principal branch
            CScalar::new((-w.re).ln(), PI)
        } else {
            ln1p_complex(-v)
        };
        let psi = log_side_series_or(v, || (v / w + ln_w) / (v * v));
        (w.inv(), s * s * psi + w.inv())
    } else {
        let a = alpha.to_complex();
        let t = a * z;
        (t.exp(), CScalar::new(1.0, 0.0) + z * z * exp_side_factor_complex(t))
    };
    let partials = UnitPartials {
        value,
        d_input,
        d_alpha,
    };
    if !(partials.d_input.is_finite() && partials.d_alpha.is_finite()) {
        return Err(Error::Range(format!(
            "derivative overflow at alpha = ({}, {}), z = ({}, {})",
            alpha.re, alpha.im, z.re, z.im
        )));
    }
    Ok(partials)
}

/// `df/dx` for a real parameter, on the real domain.
pub fn dsoftexp_dx(alpha: f64, x: f64) -> Result<f64> {
    check_finite(alpha, x)?;
    let d = if alpha < 0.0 {
        let w = log_argument(alpha, x)?;
        w.recip()
    } else {
        (alpha * x).exp()
    };
    finite_or_range_real(d, alpha, x)
}

/// `df/dalpha` for a real parameter, on the real domain. Equals `x^2/2 + 1` at zero.
pub fn dsoftexp_dalpha(alpha: f64, x: f64) -> Result<f64> {
    check_finite(alpha, x)?;
    let d = if alpha < 0.0 {
        let w = log_argument(alpha, x)?;
        let s = x + alpha;
        let v = alpha * s;
        let psi = if v.abs() < SERIES_THRESHOLD {
            log_side_series(v)
        } else {
            (v / w + (-v).ln_1p()) / (v * v)
        };
        s * s * psi + w.recip()
    } else {
        1.0 + x * x * exp_side_factor(alpha * x)
    };
    finite_or_range_real(d, alpha, x)
}

/// `(e^(alpha x) - 1) / alpha + alpha`, the identity at `alpha = 0`.
pub fn g_linexp(alpha: f64, x: f64) -> Result<f64> {
    check_finite(alpha, x)?;
    if alpha == 0.0 {
        return Ok(x);
    }
    finite_or_range_real(exp_form(alpha, x), alpha, x)
}

/// `ln(1 + alpha (x - alpha)) / alpha`, the inverse of [`g_linexp`] in `x`.
pub fn g_loglin(alpha: f64, x: f64) -> Result<f64> {
    check_finite(alpha, x)?;
    if alpha == 0.0 {
        return Ok(x);
    }
    let u = alpha * (x - alpha);
    if u <= -1.0 {
        return Err(Error::Domain {
            alpha,
            x,
            argument: 1.0 + u,
        });
    }
    finite_or_range_real(u.ln_1p() / alpha, alpha, x)
}

/// Blends addition (`beta = 0`) into multiplication (`beta = 1`) by adding in the
/// space `f(-beta, .)` and mapping back with `f(beta, .)`.
pub fn addmul(beta: f64, p: f64, q: f64) -> Result<f64> {
    let inner = softexp_real(-beta, p)? + softexp_real(-beta, q)?;
    softexp_real(beta, inner)
}

fn check_finite(alpha: f64, x: f64) -> Result<()> {
    if !alpha.is_finite() {
        return Err(Error::NonFiniteInput(format!("alpha = {alpha}")));
    }
    if !x.is_finite() {
        return Err(Error::NonFiniteInput(format!("x = {x}")));
    }
    Ok(())
}

fn check_finite_complex(alpha: Alpha, z: CScalar) -> Result<()> {
    if !alpha.is_finite() {
        return Err(Error::NonFiniteInput(format!(
            "alpha = ({}, {})",
            alpha.re, alpha.im
        )));
    }
    if !z.is_finite() {
        return Err(Error::NonFiniteInput(format!("x = ({}, {})", z.re, z.im)));
    }
    Ok(())
}

fn finite_or_range(value: CScalar, alpha: f64, x: f64) -> Result<CScalar> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Range(format!("soft exponential overflow at alpha = {alpha}, x = {x}")))
    }
}

fn finite_or_range_real(value: f64, alpha: f64, x: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Range(format!("overflow at alpha = {alpha}, x = {x}")))
    }
}

/// `1 - alpha (x + alpha)`, checked to be strictly positive.
fn log_argument(alpha: f64, x: f64) -> Result<f64> {
    let w = 1.0 - alpha * (x + alpha);
    if w > 0.0 {
        Ok(w)
    } else {
        Err(Error::Domain {
            alpha,
            x,
            argument: w,
        })
    }
}

/// `ln(1 - alpha (x + alpha))` for `alpha < 0` under the given mode.
fn real_log_argument_ln(alpha: f64, x: f64, mode: EvalMode) -> Result<CScalar> {
    let v = alpha * (x + alpha);
    let w = 1.0 - v;
    if w > 0.0 {
        return Ok(CScalar::new((-v).ln_1p(), 0.0));
    }
    match mode {
        EvalMode::ComplexPrincipal if w != 0.0 => Ok(CScalar::new((-w).ln(), PI)),
        _ => Err(Error::Domain {
            alpha,
            x,
            argument: w,
        }),
    }
}

/// `(e^(alpha x) - 1) / alpha + alpha` for `alpha != 0`.
///
/// When `e^(alpha x) <= alpha^2` the equivalent `e^(alpha x) / alpha + (alpha - 1/alpha)`
/// carries less rounding error than the `expm1` form; at `alpha = 1` it is exactly `e^x`.
fn exp_form(alpha: f64, x: f64) -> f64 {
    let t = alpha * x;
    if alpha > 0.0 && t < 2.0 * alpha.ln() {
        t.exp() / alpha + (alpha - alpha.recip())
    } else {
        t.exp_m1() / alpha + alpha
    }
}

fn exp_form_complex(alpha: Alpha, z: CScalar) -> CScalar {
    if alpha.is_real() {
        let a = alpha.re;
        let t = z * a;
        if a > 0.0 && t.re < 2.0 * a.ln() {
            t.exp() / a + (a - a.recip())
        } else {
            expm1_complex(t) / a + a
        }
    } else {
        let a = alpha.to_complex();
        expm1_complex(a * z) / a + a
    }
}

/// `e^t - 1` without cancellation for small `|t|`.
fn expm1_complex(t: CScalar) -> CScalar {
    let (sin, cos) = t.im.sin_cos();
    let half = (0.5 * t.im).sin();
    let em1 = t.re.exp_m1();
    CScalar::new(em1 * cos - 2.0 * half * half, t.re.exp() * sin)
}

/// Principal `ln(1 + w)` without cancellation for small `|w|`.
fn ln1p_complex(w: CScalar) -> CScalar {
    let re = 0.5 * (2.0 * w.re + w.norm_sqr()).ln_1p();
    let im = w.im.atan2(1.0 + w.re);
    CScalar::new(re, im)
}

/// `(t e^t - e^t + 1) / t^2 = sum_{n>=2} (n-1) t^(n-2) / n!`
fn exp_side_factor(t: f64) -> f64 {
    if t.abs() < SERIES_THRESHOLD {
        let mut sum = 0.0;
        // t^(n-2) / n!
        let mut c = 0.5;
        for n in 2..SERIES_TERMS {
            let term = (n - 1) as f64 * c;
            sum += term;
            if term.abs() <= f64::EPSILON * 1e-3 * sum.abs() {
                break;
            }
            c *= t / (n + 1) as f64;
        }
        sum
    } else {
        (t * t.exp() - t.exp_m1()) / (t * t)
    }
}

fn exp_side_factor_complex(t: CScalar) -> CScalar {
    if t.norm() < SERIES_THRESHOLD {
        let mut sum = CScalar::new(0.0, 0.0);
        let mut c = CScalar::new(0.5, 0.0);
        for n in 2..SERIES_TERMS {
            let term = c * (n - 1) as f64;
            sum += term;
            if term.norm() <= f64::EPSILON * 1e-3 * sum.norm() {
                break;
            }
            c = c * t / (n + 1) as f64;
        }
        sum
    } else {
        (t * t.exp() - expm1_complex(t)) / (t * t)
    }
}

/// `(v / (1 - v) + ln(1 - v)) / v^2 = sum_{n>=2} (n-1)/n v^(n-2)`
fn log_side_series(v: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    for n in 2..SERIES_TERMS {
        let term = (n - 1) as f64 / n as f64 * power;
        sum += term;
        if term.abs() <= f64::EPSILON * 1e-3 * sum.abs() {
            break;
        }
        power *= v;
    }
    sum
}

fn log_side_series_or(v: CScalar, closed: impl FnOnce() -> CScalar) -> CScalar {
    if v.norm() >= SERIES_THRESHOLD {
        return closed();
    }
    let mut sum = CScalar::new(0.0, 0.0);
    let mut power = CScalar::new(1.0, 0.0);
    for n in 2..SERIES_TERMS {
        let term = power * ((n - 1) as f64 / n as f64);
        sum += term;
        if term.norm() <= f64::EPSILON * 1e-3 * sum.norm() {
            break;
        }
        power *= v;
    }
    sum
}
