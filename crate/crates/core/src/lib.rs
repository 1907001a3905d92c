//! Soft exponential activation and a small feed-forward network engine built on it.
//!
//! The activation `f(alpha, x)` slides continuously from `ln x` (`alpha = -1`) through
//! the identity (`alpha = 0`) to `e^x` (`alpha = 1`), and becomes sinusoidal for
//! imaginary `alpha`. `alpha` is a per-unit parameter trained like a weight.
//!
//! - [`activation`]: scalar kernels, derivatives and the complex continuation.
//! - [`network`]: layers, forward passes, backpropagation and the JSON document format.
//! - [`builders`]: networks that compute inner products, distances, polynomials,
//!   Gaussian RBF responses and sinusoid sums exactly.
//! - [`trainer`]: linear-at-init initialization, gradient descent with L1 shrinkage
//!   and gradient checking.

pub mod activation;
pub mod builders;
pub mod error;
pub mod network;
pub mod trainer;

pub use activation::{
    activate, activate_partials, addmul, dsoftexp_dalpha, dsoftexp_dx, g_linexp, g_loglin,
    real_domain_lower_bound, softexp, softexp_complex, softexp_real, Alpha, CScalar, EvalMode,
};
pub use error::{Error, Result};
pub use network::{
    from_document, to_document, CMatrix, ForwardTrace, GradientSet, Layer, Network, ParamId,
    Projection,
};
pub use trainer::{fit, init_network, Dataset, TrainConfig, TrainReport};
