//! JSON network document.
//!
//! ```text
//! {
//!   "format": "softexp-network",
//!   "version": 1,
//!   "input_dim": 2,
//!   "layers": [
//!     {
//!       "projection": "none" | "real_part",
//!       "alphas": [[re, im], ...],
//!       "bias": [[re, im], ...],
//!       "weights": [
//!         [[re, im], ...],   one row per unit
//!         ...
//!       ]
//!     }
//!   ]
//! }
//! ```
//!
//! Numbers are written with 17 significant digits so every parameter survives a
//! round-trip bit for bit.

use std::fmt::Write;

use serde::Deserialize;

use super::{CMatrix, Layer, Network, Projection};
use crate::activation::{Alpha, CScalar};
use crate::error::{Error, Location, Result};

const FORMAT: &str = "softexp-network";
const VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    #[serde(default)]
    format: Option<String>,
    #[serde(default)]
    version: Option<u32>,
    input_dim: usize,
    layers: Vec<LayerDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    weights: Vec<Vec<[f64; 2]>>,
    bias: Vec<[f64; 2]>,
    alphas: Vec<[f64; 2]>,
    projection: Projection,
}

fn number(out: &mut String, v: f64) {
    // `{:e}` never emits a leading `+`, and its output is valid JSON
    write!(out, "{v:.16e}").unwrap();
}

fn pair(out: &mut String, re: f64, im: f64) {
    out.push('[');
    number(out, re);
    out.push_str(", ");
    number(out, im);
    out.push(']');
}

fn pairs<'a>(out: &mut String, values: impl Iterator<Item = (f64, f64)> + 'a) {
    out.push('[');
    for (k, (re, im)) in values.enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        pair(out, re, im);
    }
    out.push(']');
}

/// Serializes a network. The network should be valid; non-finite parameters
/// cannot be represented.
pub fn to_document(net: &Network) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    writeln!(out, "  \"format\": \"{FORMAT}\",").unwrap();
    writeln!(out, "  \"version\": {VERSION},").unwrap();
    writeln!(out, "  \"input_dim\": {},", net.input_dim()).unwrap();
    out.push_str("  \"layers\": [\n");
    for (k, layer) in net.layers().iter().enumerate() {
        out.push_str("    {\n");
        let projection = match layer.projection {
            Projection::None => "none",
            Projection::RealPart => "real_part",
        };
        writeln!(out, "      \"projection\": \"{projection}\",").unwrap();
        out.push_str("      \"alphas\": ");
        pairs(&mut out, layer.alphas.iter().map(|a| (a.re, a.im)));
        out.push_str(",\n      \"bias\": ");
        pairs(&mut out, layer.bias.iter().map(|b| (b.re, b.im)));
        out.push_str(",\n      \"weights\": [\n");
        for r in 0..layer.weights.rows() {
            out.push_str("        ");
            pairs(&mut out, layer.weights.row(r).iter().map(|w| (w.re, w.im)));
            out.push_str(if r + 1 < layer.weights.rows() { ",\n" } else { "\n" });
        }
        out.push_str("      ]\n    }");
        out.push_str(if k + 1 < net.layers().len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

/// Parses and validates a network document.
pub fn from_document(text: &str) -> Result<Network> {
    let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: Location {
            line: e.line(),
            column: e.column(),
        },
        message: e.to_string(),
    })?;
    if let Some(format) = &doc.format {
        if format != FORMAT {
            return Err(Error::InvalidDocument(format!(
                "format: expected \"{FORMAT}\", found \"{format}\""
            )));
        }
    }
    if let Some(version) = doc.version {
        if version != VERSION {
            return Err(Error::InvalidDocument(format!(
                "version: unsupported version {version}"
            )));
        }
    }
    if doc.layers.is_empty() {
        return Err(Error::InvalidDocument("layers: list is empty".into()));
    }
    let to_c = |[re, im]: [f64; 2]| CScalar::new(re, im);
    let layers = doc
        .layers
        .into_iter()
        .enumerate()
        .map(|(k, l)| {
            let weights = CMatrix::from_rows(
                l.weights
                    .into_iter()
                    .map(|row| row.into_iter().map(to_c).collect())
                    .collect(),
            )
            .map_err(|e| Error::InvalidDocument(format!("layers[{k}].weights: {e}")))?;
            Layer::new(
                weights,
                l.bias.into_iter().map(to_c).collect(),
                l.alphas
                    .into_iter()
                    .map(|[re, im]| Alpha { re, im })
                    .collect(),
                l.projection,
            )
            .map_err(|e| Error::InvalidDocument(format!("layers[{k}]: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Network::new(doc.input_dim, layers).map_err(|e| match e {
        Error::Shape(msg) => Error::InvalidDocument(msg),
        other => other,
    })
}
