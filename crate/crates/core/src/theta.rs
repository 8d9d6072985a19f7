//! Closed-form output weights.
//!
//! For a target value `f(x)`, hidden activation `g`, output activation `σ` and
//! any input weights `δ` with `g(⟨x,δ⟩) ≠ 0`, the output weight
//!
//! ```text
//! θ = σ⁻¹(f(x)) / g(⟨x,δ⟩)
//! ```
//!
//! makes `σ(g(⟨x,δ⟩)·θ) = f(x)`. Every function here re-evaluates that forward
//! expression after computing θ and records the floating-point residual.

use crate::activation::{ActivationSpec, VANISHING_THRESHOLD};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaResult {
    pub theta: f64,
    /// `g(⟨x,δ⟩)`, the hidden node's activation.
    pub hidden_preimage: f64,
    /// `σ⁻¹(f(x))`
    pub sigma_inverse_value: f64,
    /// `σ(hidden_preimage·theta) − f(x)` as evaluated.
    pub residual: f64,
}

/// Pointwise weight function Θ sampled on a grid, with the δ used at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaFunctionTable {
    pub xs: Vec<f64>,
    pub thetas: Vec<f64>,
    pub delta_values: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Inner product `Σ xₖ·δₖ`.
pub fn inner(x: &[f64], delta: &[f64]) -> f64 {
    x.iter().zip(delta).map(|(a, b)| a * b).sum()
}

/// Evaluates `g` at `preimage` and rejects values too close to zero.
pub fn hidden_activation(g: &ActivationSpec, preimage: f64) -> Result<f64> {
    let alpha = g.eval(preimage)?;
    if !(alpha.abs() > VANISHING_THRESHOLD) {
        return Err(Error::WeightUndefined {
            preimage,
            hidden: alpha,
        });
    }
    Ok(alpha)
}

// Shared by the scalar and multivariate entry points so both produce the same bits.
fn theta_at_preimage(f_value: f64, preimage: f64, g: &ActivationSpec, sigma: &ActivationSpec) -> Result<ThetaResult> {
    let sigma_inverse_value = sigma.invert(f_value)?;
    let alpha = hidden_activation(g, preimage)?;
    theta_with_alpha(f_value, alpha, sigma_inverse_value, sigma)
}

fn theta_with_alpha(
    f_value: f64,
    alpha: f64,
    sigma_inverse_value: f64,
    sigma: &ActivationSpec,
) -> Result<ThetaResult> {
    let theta = sigma_inverse_value / alpha;
    let reconstructed = sigma.eval(alpha * theta)?;
    Ok(ThetaResult {
        theta,
        hidden_preimage: alpha,
        sigma_inverse_value,
        residual: reconstructed - f_value,
    })
}

/// θ for a scalar input `x` with input weight `delta`.
pub fn compute_theta_scalar(
    f_value: f64,
    x: f64,
    delta: f64,
    g: &ActivationSpec,
    sigma: &ActivationSpec,
) -> Result<ThetaResult> {
    theta_at_preimage(f_value, inner(&[x], &[delta]), g, sigma)
}

/// θ for a vector input; the hidden node sees `⟨x, delta⟩`.
pub fn compute_theta_multivariate(
    f_value: f64,
    x: &[f64],
    delta: &[f64],
    g: &ActivationSpec,
    sigma: &ActivationSpec,
) -> Result<ThetaResult> {
    check_input_dims(x, delta)?;
    theta_at_preimage(f_value, inner(x, delta), g, sigma)
}

fn check_input_dims(x: &[f64], delta: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "input",
            expected: 1,
            found: 0,
        });
    }
    if x.len() != delta.len() {
        return Err(Error::DimensionMismatch {
            what: "delta",
            expected: x.len(),
            found: delta.len(),
        });
    }
    Ok(())
}

/// One θⱼ per output, each with its own output activation `sigmas[j]`.
/// The first failing output aborts the call and is named in the error.
pub fn compute_theta_vector(
    y: &[f64],
    x: &[f64],
    delta: &[f64],
    g: &ActivationSpec,
    sigmas: &[ActivationSpec],
) -> Result<Vec<ThetaResult>> {
    check_input_dims(x, delta)?;
    if y.is_empty() || sigmas.len() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "sigmas",
            expected: y.len().max(1),
            found: sigmas.len(),
        });
    }
    let preimage = inner(x, delta);
    // Range violations are reported ahead of a vanishing hidden node.
    let inverses = y
        .iter()
        .zip(sigmas)
        .enumerate()
        .map(|(j, (&yj, sigma))| sigma.invert(yj).map_err(|e| e.at_output(j)))
        .collect::<Result<Vec<_>>>()?;
    let alpha = hidden_activation(g, preimage)?;
    y.iter()
        .zip(sigmas)
        .zip(inverses)
        .enumerate()
        .map(|(j, ((&yj, sigma), inv))| theta_with_alpha(yj, alpha, inv, sigma).map_err(|e| e.at_output(j)))
        .collect()
}

/// Θ(x) = σ⁻¹(f(x)) / g(x·δ(x)) at every grid point.
pub fn compute_theta_function(
    f_values: &[f64],
    xs: &[f64],
    delta_values: &[f64],
    g: &ActivationSpec,
    sigma: &ActivationSpec,
) -> Result<ThetaFunctionTable> {
    if xs.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "xs",
            expected: 1,
            found: 0,
        });
    }
    for (what, len) in [("f_values", f_values.len()), ("delta_values", delta_values.len())] {
        if len != xs.len() {
            return Err(Error::DimensionMismatch {
                what,
                expected: xs.len(),
                found: len,
            });
        }
    }
    if let Some(i) = xs.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(format!(
            "xs must be strictly increasing (index {})",
            i + 1
        )));
    }

    let mut table = ThetaFunctionTable {
        xs: xs.to_vec(),
        thetas: Vec::with_capacity(xs.len()),
        delta_values: delta_values.to_vec(),
        residuals: Vec::with_capacity(xs.len()),
    };
    for (i, ((&f, &x), &d)) in f_values.iter().zip(xs).zip(delta_values).enumerate() {
        let r = compute_theta_scalar(f, x, d, g, sigma).map_err(|e| e.at_sample(i))?;
        table.thetas.push(r.theta);
        table.residuals.push(r.residual);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> ActivationSpec {
        ActivationSpec::sigmoid()
    }

    fn id() -> ActivationSpec {
        ActivationSpec::identity()
    }

    #[test]
    fn scalar_symmetry_point() {
        let r = compute_theta_scalar(0.5, 1.5, 1.0, &id(), &sig()).unwrap();
        assert_eq!(r.theta, 0.0);
        assert_eq!(r.hidden_preimage, 1.5);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn scalar_out_of_range() {
        let e = compute_theta_scalar(2.0, 1.0, 1.0, &id(), &sig()).unwrap_err();
        assert_eq!(e.name(), "RangeViolation");
    }

    #[test]
    fn scalar_singular_and_domain() {
        let e = compute_theta_scalar(0.6, 0.0, 1.0, &id(), &sig()).unwrap_err();
        assert_eq!(e.name(), "WeightUndefined");
        let g: ActivationSpec = "identity@-1,1".parse().unwrap();
        let e = compute_theta_scalar(0.6, 2.0, 1.0, &g, &sig()).unwrap_err();
        assert_eq!(e.name(), "DomainViolation");
    }

    #[test]
    fn multivariate_examples() {
        let r = compute_theta_multivariate(0.5, &[1.0, 1.0], &[0.5, 0.5], &id(), &sig()).unwrap();
        assert_eq!(r.theta, 0.0);
        let e = compute_theta_multivariate(0.6, &[1.0, -1.0], &[1.0, 1.0], &id(), &sig()).unwrap_err();
        assert_eq!(e.name(), "WeightUndefined");
        let e = compute_theta_multivariate(0.6, &[1.0, 2.0], &[1.0], &id(), &sig()).unwrap_err();
        assert_eq!(e.name(), "DimensionMismatch");
        let e = compute_theta_multivariate(0.6, &[], &[], &id(), &sig()).unwrap_err();
        assert_eq!(e.name(), "DimensionMismatch");
    }

    #[test]
    fn vector_examples() {
        let r = compute_theta_vector(&[0.5, 0.5], &[1.0], &[1.0], &id(), &[sig(), sig()]).unwrap();
        assert_eq!(r.iter().map(|t| t.theta).collect::<Vec<_>>(), vec![0.0, 0.0]);
        let r = compute_theta_vector(&[0.5, 0.0], &[1.0], &[1.0], &id(), &[sig(), ActivationSpec::tanh()]).unwrap();
        assert_eq!(r.iter().map(|t| t.theta).collect::<Vec<_>>(), vec![0.0, 0.0]);
    }

    #[test]
    fn vector_failure_names_output() {
        let e = compute_theta_vector(&[0.5, 1.5], &[1.0], &[1.0], &id(), &[sig(), sig()]).unwrap_err();
        assert_eq!(e.name(), "RangeViolation");
        assert_eq!(e.output_index(), Some(1));
        let e = compute_theta_vector(&[0.5], &[1.0], &[1.0], &id(), &[sig(), sig()]).unwrap_err();
        assert_eq!(e.name(), "DimensionMismatch");
    }

    #[test]
    fn function_table_examples() {
        let xs: Vec<f64> = (0..5).map(|i| 1.0 + i as f64 / 4.0).collect();
        let t = compute_theta_function(&[0.5; 5], &xs, &[1.0; 5], &id(), &sig()).unwrap();
        assert!(t.thetas.iter().all(|&th| th == 0.0));
        assert_eq!(t.xs.len(), t.delta_values.len());

        let e = compute_theta_function(&[0.5; 3], &[-1.0, 0.0, 1.0], &[1.0; 3], &id(), &sig()).unwrap_err();
        assert_eq!(e.name(), "WeightUndefined");
        assert_eq!(e.sample_index(), Some(1));

        let e = compute_theta_function(&[0.5; 2], &[1.0, 1.0], &[1.0; 2], &id(), &sig()).unwrap_err();
        assert_eq!(e.name(), "InvalidArgument");
        let e = compute_theta_function(&[0.5; 2], &[1.0, 2.0], &[1.0], &id(), &sig()).unwrap_err();
        assert_eq!(e.name(), "DimensionMismatch");
    }
}
