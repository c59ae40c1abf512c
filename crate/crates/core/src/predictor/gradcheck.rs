use super::MlpModel;
use crate::error::domain;
use crate::Result;

/// Gradients below this magnitude are compared in absolute terms.
const REL_FLOOR: f64 = 1e-7;
const MAX_SHRINK: usize = 6;

/// Largest relative disagreement between backpropagated MSE gradients and
/// central finite differences, over every parameter of `model`.
///
/// The relative error of a component is `|a - n| / max(|a|, |n|, 1e-7)`.
/// When a perturbation flips a hidden unit across the ReLU kink the step is
/// shrunk tenfold (up to six times) so both evaluations stay in one linear region.
pub fn gradient_check(model: &MlpModel, inputs: &[Vec<f64>], targets: &[f64], epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(domain("finite-difference step must be positive"));
    }
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(domain("gradient check needs a non-empty batch with one target per input"));
    }
    if let Some(x) = inputs.iter().find(|x| x.len() != model.n_inputs()) {
        return Err(domain(format!(
            "input of size {} for a model with {} inputs",
            x.len(),
            model.n_inputs()
        )));
    }

    let (_, analytic) = model.dense_gradient(inputs, targets);
    let base = model.params();
    let pattern = |m: &MlpModel| -> Vec<Vec<bool>> {
        inputs.iter().map(|x| m.activation_pattern(x)).collect()
    };
    let base_pattern = pattern(model);

    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (i, &a) in analytic.values.iter().enumerate() {
        let mut eps = epsilon;
        let numeric = loop {
            let mut params = base.clone();
            params[i] = base[i] + eps;
            probe.set_params(&params);
            let plus_pattern = pattern(&probe);
            let plus = probe.dense_loss(inputs, targets);
            params[i] = base[i] - eps;
            probe.set_params(&params);
            let minus_pattern = pattern(&probe);
            let minus = probe.dense_loss(inputs, targets);
            let same_region = plus_pattern == base_pattern && minus_pattern == base_pattern;
            if same_region || eps < epsilon * 0.1f64.powi(MAX_SHRINK as i32) {
                break (plus - minus) / (2.0 * eps);
            }
            eps *= 0.1;
        };
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
        worst = worst.max(rel);
    }
    Ok(worst)
}
