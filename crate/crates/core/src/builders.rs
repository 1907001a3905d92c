//! Networks whose parameters are set analytically so that a forward pass computes a
//! closed-form function exactly.
//!
//! The constructions rely on three units: `alpha = -1` is `ln`, `alpha = 0` is the
//! identity and `alpha = 1` is `exp`. Products become sums of logarithms, powers
//! become scaled logarithms, and a unit with imaginary `alpha` is a sinusoid.
//!
//! On strictly positive log arguments everything stays real. Signed inputs need
//! [`EvalMode::ComplexPrincipal`](crate::EvalMode::ComplexPrincipal): the principal log
//! adds `i pi` per negative factor, integer powers cancel it, and the output layer's
//! real-part projection drops the rounding residue.

use std::fmt;
use std::str::FromStr;

use crate::activation::{Alpha, CScalar};
use crate::error::{Error, Result};
use crate::network::{CMatrix, Layer, Network, Projection};

/// What an RBF unit measures before `e^(-r s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbfSource {
    /// `s = p . q`
    InnerProduct,
    /// `s = |p - q|^2`
    SquaredDistance,
}

impl FromStr for RbfSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inner-product" => Ok(RbfSource::InnerProduct),
            "sq-distance" | "squared-distance" => Ok(RbfSource::SquaredDistance),
            other => Err(Error::InvalidConfig(format!(
                "unknown RBF source {other:?} (expected inner-product or sq-distance)"
            ))),
        }
    }
}

impl fmt::Display for RbfSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RbfSource::InnerProduct => "inner-product",
            RbfSource::SquaredDistance => "sq-distance",
        })
    }
}

/// `offset + sum_k sin_coeffs[k] sin(freqs[k] x) + cos_coeffs[k] cos(freqs[k] x)`
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpec {
    pub freqs: Vec<f64>,
    pub sin_coeffs: Vec<f64>,
    pub cos_coeffs: Vec<f64>,
    pub offset: f64,
}

impl FourierSpec {
    /// Direct evaluation of the sinusoid sum.
    pub fn eval(&self, x: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.sin_coeffs)
            .zip(&self.cos_coeffs)
            .fold(self.offset, |acc, ((&w, &a), &b)| {
                acc + a * (w * x).sin() + b * (w * x).cos()
            })
    }

    fn check(&self) -> Result<()> {
        let m = self.freqs.len();
        if m == 0 {
            return Err(Error::InvalidConfig("fourier: at least one frequency is required".into()));
        }
        if self.sin_coeffs.len() != m || self.cos_coeffs.len() != m {
            return Err(Error::InvalidConfig(format!(
                "fourier: {m} frequencies but {} sine and {} cosine coefficients",
                self.sin_coeffs.len(),
                self.cos_coeffs.len()
            )));
        }
        if let Some(w) = self.freqs.iter().find(|w| **w == 0.0 || !w.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "fourier: frequency {w} must be finite and nonzero"
            )));
        }
        let all = self.sin_coeffs.iter().chain(&self.cos_coeffs);
        if !(all.clone().all(|c| c.is_finite()) && self.offset.is_finite()) {
            return Err(Error::NonFiniteInput("fourier coefficients".into()));
        }
        Ok(())
    }
}

/// Parameters for any of the builders.
#[derive(Debug, Clone, PartialEq)]
pub enum BuilderSpec {
    InnerProduct { n: usize },
    SquaredDistance { n: usize },
    Euclidean { n: usize },
    /// `coeffs[k]` multiplies `x^k`.
    Polynomial { coeffs: Vec<f64> },
    Rbf { n: usize, r: f64, source: RbfSource },
    Fourier(FourierSpec),
}

impl BuilderSpec {
    pub fn build(&self) -> Result<Network> {
        match self {
            BuilderSpec::InnerProduct { n } => build_inner_product(*n),
            BuilderSpec::SquaredDistance { n } => build_squared_distance(*n),
            BuilderSpec::Euclidean { n } => build_euclidean_distance(*n),
            BuilderSpec::Polynomial { coeffs } => build_polynomial(coeffs),
            BuilderSpec::Rbf { n, r, source } => build_rbf(*n, *r, *source),
            BuilderSpec::Fourier(spec) => build_fourier(spec),
        }
    }
}

fn real(v: f64) -> CScalar {
    CScalar::new(v, 0.0)
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidConfig("vector dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn ones_row(n: usize) -> CMatrix {
    CMatrix::from_rows(vec![vec![real(1.0); n]]).expect("single row")
}

fn diagonal(n: usize, v: f64) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = real(v);
    }
    m
}

/// `p . q` on inputs `(p_1..p_n, q_1..q_n)`.
///
/// Logs of every component, `exp(ln p_i + ln q_i)` per pair, then a sum.
pub fn build_inner_product(n: usize) -> Result<Network> {
    check_dim(n)?;
    let mut pair = CMatrix::zeros(n, 2 * n);
    for i in 0..n {
        pair[(i, i)] = real(1.0);
        pair[(i, n + i)] = real(1.0);
    }
    Network::new(
        2 * n,
        vec![
            Layer::dense(CMatrix::identity(2 * n), Alpha::LOG),
            Layer::dense(pair, Alpha::EXP),
            Layer::dense(ones_row(n), Alpha::ZERO).with_projection(Projection::RealPart),
        ],
    )
}

/// Difference, log and doubled exp layers shared by both distance builders.
fn squared_terms(n: usize) -> Vec<Layer> {
    let mut diff = CMatrix::zeros(n, 2 * n);
    for i in 0..n {
        diff[(i, i)] = real(1.0);
        diff[(i, n + i)] = real(-1.0);
    }
    vec![
        Layer::dense(diff, Alpha::ZERO),
        Layer::dense(CMatrix::identity(n), Alpha::LOG),
        // e^(2 ln d) = d^2
        Layer::dense(diagonal(n, 2.0), Alpha::EXP),
    ]
}

/// `|p - q|^2` on inputs `(p, q)`.
pub fn build_squared_distance(n: usize) -> Result<Network> {
    check_dim(n)?;
    let mut layers = squared_terms(n);
    layers.push(Layer::dense(ones_row(n), Alpha::ZERO).with_projection(Projection::RealPart));
    Network::new(2 * n, layers)
}

/// `|p - q|`: the summing unit takes the log and one more unit computes `e^(0.5 ln s)`.
pub fn build_euclidean_distance(n: usize) -> Result<Network> {
    check_dim(n)?;
    let mut layers = squared_terms(n);
    layers.push(Layer::dense(ones_row(n), Alpha::LOG).with_projection(Projection::RealPart));
    layers.push(
        Layer::dense(CMatrix::from_real_rows(&[vec![0.5]])?, Alpha::EXP)
            .with_projection(Projection::RealPart),
    );
    Network::new(2 * n, layers)
}

/// `sum_k coeffs[k] x^k` as `exp(k ln x)` units feeding a linear unit whose bias is
/// the constant term.
pub fn build_polynomial(coeffs: &[f64]) -> Result<Network> {
    let (&constant, higher) = coeffs
        .split_first()
        .ok_or_else(|| Error::InvalidConfig("polynomial needs at least one coefficient".into()))?;
    if !coeffs.iter().all(|c| c.is_finite()) {
        return Err(Error::NonFiniteInput("polynomial coefficients".into()));
    }
    // degree 0 keeps one unit computing x^0 with a zero outgoing weight
    let (powers, out): (Vec<f64>, Vec<f64>) = if higher.is_empty() {
        (vec![0.0], vec![0.0])
    } else {
        higher
            .iter()
            .enumerate()
            .map(|(k, &c)| ((k + 1) as f64, c))
            .unzip()
    };
    let power_rows: Vec<Vec<f64>> = powers.iter().map(|&k| vec![k]).collect();
    Network::new(
        1,
        vec![
            Layer::dense(CMatrix::identity(1), Alpha::LOG),
            Layer::dense(CMatrix::from_real_rows(&power_rows)?, Alpha::EXP),
            Layer::dense(CMatrix::from_real_rows(&[out])?, Alpha::ZERO)
                .with_bias(vec![real(constant)])
                .with_projection(Projection::RealPart),
        ],
    )
}

/// `e^(-r s)` with `s` from an inner-product or squared-distance network.
pub fn build_rbf(n: usize, r: f64, source: RbfSource) -> Result<Network> {
    if !r.is_finite() {
        return Err(Error::NonFiniteInput(format!("rbf radius weight {r}")));
    }
    let mut net = match source {
        RbfSource::InnerProduct => build_inner_product(n)?,
        RbfSource::SquaredDistance => build_squared_distance(n)?,
    };
    net.push_layer(
        Layer::dense(CMatrix::from_real_rows(&[vec![-r]])?, Alpha::EXP)
            .with_projection(Projection::RealPart),
    )?;
    Ok(net)
}

/// A sum of sinusoids from units with imaginary `alpha`.
pub fn build_fourier(spec: &FourierSpec) -> Result<Network> {
    build_fourier_with_gain(spec, 1.0)
}

/// [`build_fourier`] with hidden units `alpha_k = i w_k / gain` fed through an input
/// weight `gain`. Each unit still oscillates at `w_k`, but its amplitude changes with
/// `gain`; the output weights are solved to compensate.
///
/// With `mu = w / gain`, a hidden unit outputs
/// `sin(w x) / mu + i (mu + (1 - cos(w x)) / mu)`. An output weight `mu (a + i b)` under
/// a real-part projection turns that into `a sin(w x) + b cos(w x) - b (mu^2 + 1)`, and
/// the bias cancels the constant.
pub fn build_fourier_with_gain(spec: &FourierSpec, gain: f64) -> Result<Network> {
    spec.check()?;
    if gain == 0.0 || !gain.is_finite() {
        return Err(Error::InvalidConfig(format!("fourier: gain {gain} must be finite and nonzero")));
    }
    let m = spec.freqs.len();
    let mut bias = spec.offset;
    let mut out = Vec::with_capacity(m);
    let mut alphas = Vec::with_capacity(m);
    for k in 0..m {
        let mu = spec.freqs[k] / gain;
        let (a, b) = (spec.sin_coeffs[k], spec.cos_coeffs[k]);
        out.push(CScalar::new(mu * a, mu * b));
        bias += b * (mu * mu + 1.0);
        alphas.push(Alpha::imaginary(mu));
    }
    let hidden = Layer::new(
        CMatrix::from_real_rows(&vec![vec![gain]; m])?,
        vec![real(0.0); m],
        alphas,
        Projection::None,
    )?;
    let output = Layer::dense(CMatrix::from_rows(vec![out])?, Alpha::ZERO)
        .with_bias(vec![real(bias)])
        .with_projection(Projection::RealPart);
    Network::new(1, vec![hidden, output])
}
