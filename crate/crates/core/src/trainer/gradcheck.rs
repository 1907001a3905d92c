use crate::activation::{CScalar, EvalMode};
use crate::error::Result;
use crate::network::{Network, ParamId, ParamKind, Part};

use super::{mse_loss, mse_output_grad};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Coordinate with the largest error.
    pub worst: Option<ParamId>,
    pub checked: usize,
    /// Imaginary components of negative real `alpha`. The forward map jumps from the
    /// log branch to the exponential form there, so no finite difference exists.
    pub skipped: usize,
}

/// `|a - b| / max(|a|, |b|, 1)`
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Compares [`Network::backward`] on the MSE loss of one sample against finite
/// differences in every real parameter coordinate.
///
/// Differences are central, except for the real part of a real `alpha` whose stencil
/// would straddle zero: there the two branches meet with matching first but different
/// second derivatives, so one-sided second-order stencils are used (averaged from both
/// sides when `alpha` is exactly zero).
pub fn grad_check(
    net: &Network,
    input: &[f64],
    target: &[f64],
    step: f64,
    mode: EvalMode,
) -> Result<GradCheckReport> {
    let input: Vec<CScalar> = input.iter().map(|&v| CScalar::new(v, 0.0)).collect();
    let (output, trace) = net.forward_traced(&input, mode)?;
    mse_loss(&output, target)?;
    let analytic = net.backward(&trace, &mse_output_grad(&output, target))?;

    let loss_at = |id: ParamId, value: f64| -> Result<f64> {
        let mut probe = net.clone();
        probe.set_param(id, value);
        // probes score real parts only: a step in an output alpha's imaginary part
        // legitimately leaves a tiny imaginary residue
        let out = probe.forward(&input, mode)?;
        let n = out.len() as f64;
        Ok(out.iter().zip(target).map(|(y, t)| (y.re - t) * (y.re - t)).sum::<f64>() / n)
    };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        checked: 0,
        skipped: 0,
    };
    for id in net.param_ids() {
        let alpha = match id.kind {
            ParamKind::Alpha { unit } => Some(net.layers()[id.layer].alphas[unit]),
            _ => None,
        };
        if id.part == Part::Im && alpha.is_some_and(|a| a.is_real() && a.re < 0.0) {
            report.skipped += 1;
            continue;
        }
        let p = net.param(id);
        let h = step;
        let on_seam = id.part == Part::Re && alpha.is_some_and(|a| a.is_real()) && p.abs() < h;
        let numeric = if on_seam {
            let right = || -> Result<f64> {
                Ok((-3.0 * loss_at(id, p)? + 4.0 * loss_at(id, p + h)? - loss_at(id, p + 2.0 * h)?)
                    / (2.0 * h))
            };
            let left = || -> Result<f64> {
                Ok((3.0 * loss_at(id, p)? - 4.0 * loss_at(id, p - h)? + loss_at(id, p - 2.0 * h)?)
                    / (2.0 * h))
            };
            if p > 0.0 {
                right()?
            } else if p < 0.0 {
                left()?
            } else {
                0.5 * (right()? + left()?)
            }
        } else {
            (loss_at(id, p + h)? - loss_at(id, p - h)?) / (2.0 * h)
        };
        let err = relative_error(analytic.get(id), numeric);
        report.checked += 1;
        if err > report.max_relative_error || report.worst.is_none() {
            report.max_relative_error = report.max_relative_error.max(err);
            report.worst = Some(id);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Alpha;
    use crate::error::Error;
    use crate::network::{CMatrix, Layer, Projection};

    #[test]
    fn linear_network_checks_tightly() {
        let l1 = Layer::dense(
            CMatrix::from_real_rows(&[vec![0.5, -0.3], vec![0.2, 0.9], vec![-0.7, 0.1]]).unwrap(),
            Alpha::ZERO,
        );
        let l2 = Layer::dense(CMatrix::from_real_rows(&[vec![0.4, -0.6, 0.8]]).unwrap(), Alpha::ZERO)
            .with_projection(Projection::RealPart);
        let net = Network::new(2, vec![l1, l2]).unwrap();
        let r = grad_check(&net, &[0.8, -1.2], &[0.3], 1e-6, EvalMode::RealStrict).unwrap();
        assert!(r.max_relative_error <= 1e-8, "{r:?}");
        assert_eq!(r.checked, net.param_ids().len());
    }

    #[test]
    fn boundary_is_a_domain_error() {
        // log unit evaluated exactly where its argument reaches zero
        let layer = Layer::dense(CMatrix::identity(1), Alpha::LOG).with_projection(Projection::RealPart);
        let net = Network::new(1, vec![layer]).unwrap();
        let err = grad_check(&net, &[0.0], &[0.0], 1e-6, EvalMode::RealStrict).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
        // in-domain, but a weight step crosses the boundary
        let err = grad_check(&net, &[1e-7], &[0.0], 1e-6, EvalMode::RealStrict).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn negative_real_alpha_skips_imaginary_coordinate() {
        let layer = Layer::dense(CMatrix::identity(1), Alpha::real(-0.5))
            .with_projection(Projection::RealPart);
        let net = Network::new(1, vec![layer]).unwrap();
        let r = grad_check(&net, &[1.5], &[0.0], 1e-6, EvalMode::RealStrict).unwrap();
        assert_eq!(r.skipped, 1);
        assert!(r.max_relative_error <= 1e-6, "{r:?}");
    }
}
