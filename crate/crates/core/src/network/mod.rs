//! Feed-forward networks of soft exponential units.
//!
//! Each layer computes `z = W a + b`, optionally keeps only the real part of `z`, and
//! applies `f(alpha_i, z_i)` per unit. Weights, biases and activations are complex so
//! that units with complex `alpha` can pass both channels of their output on; a layer
//! with [`Projection::RealPart`] collapses them back to real values.
//!
//! Gradients treat every complex quantity as two real coordinates. A gradient entry
//! `g` packs `ds/d(re)` in `g.re` and `ds/d(im)` in `g.im`.

mod document;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::activation::{activate, activate_partials, Alpha, CScalar, EvalMode};
use crate::error::{Error, Result};

pub use document::{from_document, to_document};

/// What a layer does to its affine output before the activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    #[default]
    None,
    RealPart,
}

impl Projection {
    fn apply(self, z: CScalar) -> CScalar {
        match self {
            Projection::None => z,
            Projection::RealPart => CScalar::new(z.re, 0.0),
        }
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<CScalar>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![CScalar::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<CScalar>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_cols) {
            return Err(Error::Shape(format!(
                "row {i} has {} entries, expected {n_cols}",
                row.len()
            )));
        }
        Ok(CMatrix {
            rows: n_rows,
            cols: n_cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| CScalar::new(v, 0.0)).collect())
                .collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = CScalar::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[CScalar] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[CScalar] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [CScalar] {
        &mut self.data
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|v| v.im == 0.0)
    }

    /// Real parts as nested rows.
    pub fn real_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|v| v.re).collect())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = CScalar;

    fn index(&self, (r, c): (usize, usize)) -> &CScalar {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut CScalar {
        &mut self.data[r * self.cols + c]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Shape `outputs x inputs`.
    pub weights: CMatrix,
    pub bias: Vec<CScalar>,
    pub alphas: Vec<Alpha>,
    pub projection: Projection,
}

impl Layer {
    pub fn new(
        weights: CMatrix,
        bias: Vec<CScalar>,
        alphas: Vec<Alpha>,
        projection: Projection,
    ) -> Result<Self> {
        if bias.len() != weights.rows() || alphas.len() != weights.rows() {
            return Err(Error::Shape(format!(
                "layer has {} weight rows, {} biases and {} alphas",
                weights.rows(),
                bias.len(),
                alphas.len()
            )));
        }
        Ok(Layer {
            weights,
            bias,
            alphas,
            projection,
        })
    }

    /// Zero bias, the same `alpha` on every unit, no projection.
    pub fn dense(weights: CMatrix, alpha: Alpha) -> Self {
        let n = weights.rows();
        Layer {
            weights,
            bias: vec![CScalar::new(0.0, 0.0); n],
            alphas: vec![alpha; n],
            projection: Projection::None,
        }
    }

    pub fn with_projection(mut self, projection: Projection) -> Self {
        self.projection = projection;
        self
    }

    pub fn with_bias(mut self, bias: Vec<CScalar>) -> Self {
        self.bias = bias;
        self
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    fn affine(&self, input: &[CScalar]) -> Vec<CScalar> {
        (0..self.outputs())
            .map(|i| {
                self.weights
                    .row(i)
                    .iter()
                    .zip(input)
                    .fold(self.bias[i], |acc, (w, a)| acc + w * a)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

/// One broken invariant found by [`Network::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// `None` for network-level findings.
    pub layer: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.layer {
            Some(k) => write!(f, "layers[{k}]: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Per-layer record of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    /// `W a + b`, before projection.
    pub affine: Vec<CScalar>,
    /// After projection; the argument of the activation.
    pub pre_activation: Vec<CScalar>,
    pub activation: Vec<CScalar>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<CScalar>,
    pub layers: Vec<LayerTrace>,
    pub mode: EvalMode,
}

impl ForwardTrace {
    pub fn output(&self) -> &[CScalar] {
        self.layers.last().map_or(&self.input[..], |l| &l.activation)
    }

    /// Largest `|im|` of the final affine map, before any projection drops it.
    pub fn output_imaginary_residual(&self) -> f64 {
        self.layers
            .last()
            .map_or(0.0, |l| l.affine.iter().fold(0.0, |m, z| m.max(z.im.abs())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub d_weights: CMatrix,
    pub d_bias: Vec<CScalar>,
    pub d_alpha: Vec<CScalar>,
}

impl LayerGradient {
    pub fn d_alpha_re(&self) -> Vec<f64> {
        self.d_alpha.iter().map(|g| g.re).collect()
    }

    pub fn d_alpha_im(&self) -> Vec<f64> {
        self.d_alpha.iter().map(|g| g.im).collect()
    }
}

/// Partials of a scalar with respect to every parameter, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<LayerGradient>,
}

impl GradientSet {
    pub fn zeros_like(net: &Network) -> Self {
        GradientSet {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    d_weights: CMatrix::zeros(l.outputs(), l.inputs()),
                    d_bias: vec![CScalar::new(0.0, 0.0); l.outputs()],
                    d_alpha: vec![CScalar::new(0.0, 0.0); l.outputs()],
                })
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> f64 {
        let layer = &self.layers[id.layer];
        let g = match id.kind {
            ParamKind::Weight { row, col } => layer.d_weights[(row, col)],
            ParamKind::Bias { unit } => layer.d_bias[unit],
            ParamKind::Alpha { unit } => layer.d_alpha[unit],
        };
        id.part.of(g)
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &GradientSet, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a
                .d_weights
                .as_mut_slice()
                .iter_mut()
                .zip(b.d_weights.as_slice())
            {
                *x += y * scale;
            }
            for (x, y) in a.d_bias.iter_mut().zip(&b.d_bias) {
                *x += y * scale;
            }
            for (x, y) in a.d_alpha.iter_mut().zip(&b.d_alpha) {
                *x += y * scale;
            }
        }
    }
}

/// Real or imaginary coordinate of a complex parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    Re,
    Im,
}

impl Part {
    fn of(self, z: CScalar) -> f64 {
        match self {
            Part::Re => z.re,
            Part::Im => z.im,
        }
    }

    fn set(self, z: &mut CScalar, v: f64) {
        match self {
            Part::Re => z.re = v,
            Part::Im => z.im = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Weight { row: usize, col: usize },
    Bias { unit: usize },
    Alpha { unit: usize },
}

/// Address of one real coordinate of one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId {
    pub layer: usize,
    pub kind: ParamKind,
    pub part: Part,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        let net = Network { input_dim, layers };
        let violations = net.validate();
        if violations.is_empty() {
            Ok(net)
        } else {
            Err(Error::Shape(
                violations
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            ))
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::outputs)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable access for parameter updates. Shapes must not be changed.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Appends a layer, checking that it fits the current output width.
    pub fn push_layer(&mut self, layer: Layer) -> Result<()> {
        if layer.inputs() != self.output_dim() {
            return Err(Error::Shape(format!(
                "layer expects {} inputs, network produces {}",
                layer.inputs(),
                self.output_dim()
            )));
        }
        self.layers.push(layer);
        Ok(())
    }

    /// Checks every structural invariant and reports all findings.
    pub fn validate(&self) -> Vec<Violation> {
        let mut found = Vec::new();
        let mut net_level = |message: String| {
            found.push(Violation {
                layer: None,
                message,
            })
        };
        if self.input_dim == 0 {
            net_level("input_dim must be positive".into());
        }
        if self.layers.is_empty() {
            net_level("network has no layers".into());
        }
        let mut width = self.input_dim;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut push = |message: String| {
                found.push(Violation {
                    layer: Some(k),
                    message,
                })
            };
            let rows = layer.weights.rows();
            if rows == 0 {
                push("layer has no units".into());
            }
            if layer.weights.cols() != width {
                push(format!(
                    "weights have {} columns, previous width is {width}",
                    layer.weights.cols()
                ));
            }
            if layer.weights.data.len() != rows * layer.weights.cols() {
                push("weight storage does not match its shape".into());
            }
            if layer.bias.len() != rows {
                push(format!("bias has length {}, expected {rows}", layer.bias.len()));
            }
            if layer.alphas.len() != rows {
                push(format!("alphas has length {}, expected {rows}", layer.alphas.len()));
            }
            if let Some(i) = layer.weights.data.iter().position(|w| !w.is_finite()) {
                push(format!(
                    "non-finite weight at row {}, column {}",
                    i / layer.weights.cols().max(1),
                    i % layer.weights.cols().max(1)
                ));
            }
            if let Some(i) = layer.bias.iter().position(|b| !b.is_finite()) {
                push(format!("non-finite bias at unit {i}"));
            }
            if let Some(i) = layer.alphas.iter().position(|a| !a.is_finite()) {
                push(format!("non-finite alpha at unit {i}"));
            }
            width = rows;
        }
        found
    }

    pub fn forward(&self, input: &[CScalar], mode: EvalMode) -> Result<Vec<CScalar>> {
        self.check_input(input)?;
        let mut a = input.to_vec();
        for layer in &self.layers {
            let z = layer.affine(&a);
            a = z
                .into_iter()
                .zip(&layer.alphas)
                .map(|(z, &alpha)| activate(alpha, layer.projection.apply(z), mode))
                .collect::<Result<_>>()?;
        }
        Ok(a)
    }

    pub fn forward_real(&self, input: &[f64], mode: EvalMode) -> Result<Vec<CScalar>> {
        let input: Vec<_> = input.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&input, mode)
    }

    /// Like [`Network::forward`], also recording what backpropagation needs.
    pub fn forward_traced(
        &self,
        input: &[CScalar],
        mode: EvalMode,
    ) -> Result<(Vec<CScalar>, ForwardTrace)> {
        self.check_input(input)?;
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut a = input.to_vec();
        for layer in &self.layers {
            let affine = layer.affine(&a);
            let pre_activation: Vec<_> =
                affine.iter().map(|&z| layer.projection.apply(z)).collect();
            let activation = pre_activation
                .iter()
                .zip(&layer.alphas)
                .map(|(&z, &alpha)| activate(alpha, z, mode))
                .collect::<Result<Vec<_>>>()?;
            a = activation.clone();
            layers.push(LayerTrace {
                affine,
                pre_activation,
                activation,
            });
        }
        Ok((
            a,
            ForwardTrace {
                input: input.to_vec(),
                layers,
                mode,
            },
        ))
    }

    /// Gradient of `s = sum_k Re(conj(g_k) y_k)` with respect to every parameter, where
    /// `y` is the traced output and `g = output_grad`. For real `g` this is `sum g_k Re(y_k)`
    /// plus, through `g.im`, the imaginary channel.
    pub fn backward(&self, trace: &ForwardTrace, output_grad: &[CScalar]) -> Result<GradientSet> {
        self.check_trace(trace)?;
        if output_grad.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "output gradient has length {}, network output is {}",
                output_grad.len(),
                self.output_dim()
            )));
        }
        let mut grads = GradientSet::zeros_like(self);
        let mut upstream = output_grad.to_vec();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let record = &trace.layers[k];
            let below = if k == 0 {
                &trace.input
            } else {
                &trace.layers[k - 1].activation
            };
            let out = &mut grads.layers[k];
            let mut d_affine = Vec::with_capacity(layer.outputs());
            for i in 0..layer.outputs() {
                let p = activate_partials(layer.alphas[i], record.pre_activation[i], trace.mode)?;
                let d_pre = upstream[i] * p.d_input.conj();
                out.d_alpha[i] = upstream[i] * p.d_alpha.conj();
                d_affine.push(match layer.projection {
                    Projection::None => d_pre,
                    Projection::RealPart => CScalar::new(d_pre.re, 0.0),
                });
            }
            let mut d_below = vec![CScalar::new(0.0, 0.0); layer.inputs()];
            for (i, &g) in d_affine.iter().enumerate() {
                out.d_bias[i] = g;
                for j in 0..layer.inputs() {
                    out.d_weights[(i, j)] = g * below[j].conj();
                    d_below[j] += g * layer.weights[(i, j)].conj();
                }
            }
            upstream = d_below;
        }
        Ok(grads)
    }

    /// Every real coordinate of every parameter, in a fixed order.
    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = Vec::new();
        for (layer, l) in self.layers.iter().enumerate() {
            let mut push = |kind| {
                for part in [Part::Re, Part::Im] {
                    ids.push(ParamId { layer, kind, part });
                }
            };
            for row in 0..l.outputs() {
                for col in 0..l.inputs() {
                    push(ParamKind::Weight { row, col });
                }
            }
            for unit in 0..l.outputs() {
                push(ParamKind::Bias { unit });
            }
            for unit in 0..l.outputs() {
                push(ParamKind::Alpha { unit });
            }
        }
        ids
    }

    pub fn param(&self, id: ParamId) -> f64 {
        let l = &self.layers[id.layer];
        match id.kind {
            ParamKind::Weight { row, col } => id.part.of(l.weights[(row, col)]),
            ParamKind::Bias { unit } => id.part.of(l.bias[unit]),
            ParamKind::Alpha { unit } => id.part.of(l.alphas[unit].to_complex()),
        }
    }

    pub fn set_param(&mut self, id: ParamId, value: f64) {
        let l = &mut self.layers[id.layer];
        match id.kind {
            ParamKind::Weight { row, col } => id.part.set(&mut l.weights[(row, col)], value),
            ParamKind::Bias { unit } => id.part.set(&mut l.bias[unit], value),
            ParamKind::Alpha { unit } => match id.part {
                Part::Re => l.alphas[unit].re = value,
                Part::Im => l.alphas[unit].im = value,
            },
        }
    }

    fn check_input(&self, input: &[CScalar]) -> Result<()> {
        if input.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "input has length {}, network expects {}",
                input.len(),
                self.input_dim
            )));
        }
        if let Some(i) = input.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(format!("input[{i}]")));
        }
        Ok(())
    }

    fn check_trace(&self, trace: &ForwardTrace) -> Result<()> {
        let consistent = trace.input.len() == self.input_dim
            && trace.layers.len() == self.layers.len()
            && trace.layers.iter().zip(&self.layers).all(|(t, l)| {
                t.affine.len() == l.outputs()
                    && t.pre_activation.len() == l.outputs()
                    && t.activation.len() == l.outputs()
            });
        if consistent {
            Ok(())
        } else {
            Err(Error::Shape("trace was not produced by this network".into()))
        }
    }
}
