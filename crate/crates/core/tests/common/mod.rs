//! Helpers shared by the integration tests. Everything here is an independent
//! reference: nothing calls into the library's own gradient or training code.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softexp::network::{ParamKind, Part};
use softexp::{Alpha, CMatrix, CScalar, EvalMode, Layer, Network, ParamId, Projection};

pub fn c(re: f64) -> CScalar {
    CScalar::new(re, 0.0)
}

pub fn complex_input(x: &[f64]) -> Vec<CScalar> {
    x.iter().map(|&v| c(v)).collect()
}

/// `|a - b| / max(|a|, |b|, floor)`
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Pure relative error, exact zero only matching exact zero.
pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// A random network of 1..=3 layers, widths 1..=5, real weights and real `alpha`
/// drawn from [-0.5, 0.5] away from zero. The last layer projects to real parts.
pub fn random_real_net(rng: &mut ChaCha8Rng) -> Network {
    let depth = rng.random_range(1..=3);
    let mut widths = vec![rng.random_range(1..=5)];
    for _ in 0..depth {
        widths.push(rng.random_range(1..=5));
    }
    let mut layers = Vec::new();
    for (k, pair) in widths.windows(2).enumerate() {
        let rows: Vec<Vec<f64>> = (0..pair[1])
            .map(|_| (0..pair[0]).map(|_| rng.random_range(-0.6..0.6)).collect())
            .collect();
        let bias: Vec<CScalar> = (0..pair[1]).map(|_| c(rng.random_range(-0.3..0.3))).collect();
        let alphas: Vec<Alpha> = (0..pair[1])
            .map(|_| {
                let a: f64 = rng.random_range(0.01..0.5);
                Alpha::real(if rng.random_bool(0.5) { a } else { -a })
            })
            .collect();
        let projection = if k + 2 == widths.len() {
            Projection::RealPart
        } else {
            Projection::None
        };
        layers.push(
            Layer::new(CMatrix::from_real_rows(&rows).unwrap(), bias, alphas, projection).unwrap(),
        );
    }
    Network::new(widths[0], layers).unwrap()
}

/// Like [`random_real_net`] but hidden units get complex `alpha` and weights, and
/// the output layer has real `alpha` behind a real-part projection.
pub fn random_complex_net(rng: &mut ChaCha8Rng) -> Network {
    let widths = [
        rng.random_range(1..=4),
        rng.random_range(1..=4),
        rng.random_range(1..=3),
    ];
    let cplx = |rng: &mut ChaCha8Rng, s: f64| CScalar::new(rng.random_range(-s..s), rng.random_range(-s..s));
    let hidden = Layer::new(
        CMatrix::from_rows(
            (0..widths[1])
                .map(|_| (0..widths[0]).map(|_| cplx(rng, 0.6)).collect())
                .collect(),
        )
        .unwrap(),
        (0..widths[1]).map(|_| cplx(rng, 0.3)).collect(),
        (0..widths[1])
            .map(|_| Alpha::new(rng.random_range(0.01..0.5), rng.random_range(-0.5..0.5)).unwrap())
            .collect(),
        Projection::None,
    )
    .unwrap();
    let out = Layer::new(
        CMatrix::from_rows(
            (0..widths[2])
                .map(|_| (0..widths[1]).map(|_| cplx(rng, 0.6)).collect())
                .collect(),
        )
        .unwrap(),
        (0..widths[2]).map(|_| cplx(rng, 0.3)).collect(),
        (0..widths[2])
            .map(|_| Alpha::real(rng.random_range(-0.5..0.5)))
            .collect(),
        Projection::RealPart,
    )
    .unwrap();
    Network::new(widths[0], vec![hidden, out]).unwrap()
}

/// `s = sum_k g_k Re(y_k)`.
pub fn weighted_output(net: &Network, input: &[CScalar], g: &[f64], mode: EvalMode) -> f64 {
    net.forward(input, mode)
        .unwrap()
        .iter()
        .zip(g)
        .map(|(y, gk)| gk * y.re)
        .sum()
}

/// Central difference of [`weighted_output`] in one parameter coordinate.
pub fn central_difference(
    net: &Network,
    id: ParamId,
    input: &[CScalar],
    g: &[f64],
    step: f64,
    mode: EvalMode,
) -> f64 {
    let p = net.param(id);
    let mut probe = net.clone();
    probe.set_param(id, p + step);
    let up = weighted_output(&probe, input, g, mode);
    probe.set_param(id, p - step);
    let down = weighted_output(&probe, input, g, mode);
    (up - down) / (2.0 * step)
}

/// The imaginary coordinate of a negative real `alpha`: moving it switches the unit
/// from the log branch to the exponential form, so no derivative exists there.
pub fn is_branch_jump(net: &Network, id: ParamId) -> bool {
    match id.kind {
        ParamKind::Alpha { unit } => {
            let a = net.layers()[id.layer].alphas[unit];
            id.part == Part::Im && a.is_real() && a.re < 0.0
        }
        _ => false,
    }
}

/// Largest relative error between backprop and central differences over every
/// differentiable coordinate.
pub fn max_backprop_error(net: &Network, input: &[CScalar], g: &[f64], mode: EvalMode) -> (f64, usize) {
    let (_, trace) = net.forward_traced(input, mode).unwrap();
    let adj: Vec<CScalar> = g.iter().map(|&v| c(v)).collect();
    let grads = net.backward(&trace, &adj).unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for id in net.param_ids() {
        if is_branch_jump(net, id) {
            continue;
        }
        let fd = central_difference(net, id, input, g, 1e-6, mode);
        worst = worst.max(rel_err(grads.get(id), fd, 1e-3));
        checked += 1;
    }
    (worst, checked)
}

/// Random positive input for which every unit of `net` is inside its real domain,
/// including after any parameter step of `1e-6`.
pub fn in_domain_input(net: &Network, rng: &mut ChaCha8Rng) -> Option<Vec<CScalar>> {
    for _ in 0..200 {
        let x: Vec<CScalar> = (0..net.input_dim())
            .map(|_| c(rng.random_range(0.2..1.5)))
            .collect();
        if net.forward(&x, EvalMode::RealStrict).is_ok() && margin_ok(net, &x) {
            return Some(x);
        }
    }
    None
}

fn margin_ok(net: &Network, x: &[CScalar]) -> bool {
    let Ok((_, trace)) = net.forward_traced(x, EvalMode::RealStrict) else {
        return false;
    };
    // keep log arguments comfortably positive so finite differences stay in domain
    trace.layers.iter().zip(net.layers()).all(|(lt, layer)| {
        lt.pre_activation.iter().zip(&layer.alphas).all(|(z, a)| {
            a.re >= 0.0 || 1.0 - a.re * (z.re + a.re) > 0.05
        })
    })
}

/// Product task data: 200 samples uniform in [0.5, 2]^2, target `x1 x2`.
pub fn product_data(seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..200)
        .map(|_| vec![rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)])
        .collect();
    let ys = xs.iter().map(|x| vec![x[0] * x[1]]).collect();
    (xs, ys)
}

/// Least-squares affine fit `y ~ [x, 1] beta` by the normal equations. Returns the
/// fitted values for each row.
pub fn linear_fit_predictions(xs: &[Vec<f64>], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let d = xs[0].len() + 1;
    let a = DMatrix::from_fn(n, d, |i, j| if j + 1 == d { 1.0 } else { xs[i][j] });
    let b = DVector::from_column_slice(ys);
    let ata = a.transpose() * &a;
    let atb = a.transpose() * b;
    let beta = ata.cholesky().expect("normal matrix is positive definite").solve(&atb);
    (&a * beta).iter().copied().collect()
}

pub fn mse(pred: &[f64], ys: &[f64]) -> f64 {
    pred.iter().zip(ys).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / ys.len() as f64
}

/// Largest singular value from 200 power iterations on `W^H W`, as an oracle
/// independent of the library's stopping rule.
pub fn power_method_sigma(w: &CMatrix) -> f64 {
    let (m, n) = (w.rows(), w.cols());
    let mut v: Vec<CScalar> = (0..n).map(|j| CScalar::new(1.0 + j as f64 * 0.37, 0.1 * j as f64)).collect();
    let mut sigma2 = 0.0;
    for _ in 0..200 {
        let u: Vec<CScalar> = (0..m)
            .map(|r| (0..n).map(|cidx| w[(r, cidx)] * v[cidx]).sum())
            .collect();
        let mut next: Vec<CScalar> = (0..n)
            .map(|cidx| (0..m).map(|r| w[(r, cidx)].conj() * u[r]).sum())
            .collect();
        let norm = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        sigma2 = norm / vnorm;
        for z in &mut next {
            *z /= norm;
        }
        v = next;
    }
    sigma2.sqrt()
}

/// Largest singular value of a real matrix from nalgebra's SVD.
pub fn svd_sigma(rows: &[Vec<f64>]) -> f64 {
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    m.singular_values().max()
}
