use super::{GradientSet, SrModel};
use crate::error::{Error, Result};

/// Adam moments and hyperparameters for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: GradientSet,
    pub second_moment: GradientSet,
    /// Number of updates applied so far.
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl AdamState {
    pub fn new(model: &SrModel, learning_rate: f64) -> Self {
        let zeros = GradientSet::zeros(model.architecture());
        Self {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            learning_rate,
        }
    }
}

/// One bias-corrected Adam update of `model` in place.
pub fn adam_step(model: &mut SrModel, grads: &GradientSet, state: &mut AdamState) -> Result<()> {
    let arch = model.architecture();
    if !grads.congruent_with(arch)
        || !state.first_moment.congruent_with(arch)
        || !state.second_moment.congruent_with(arch)
    {
        return Err(Error::ShapeMismatch(
            "gradients or optimizer state do not match the model".into(),
        ));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let correction1 = 1.0 - b1.powi(t);
    let correction2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate;
    let eps = state.epsilon;

    let params = model.parameter_values_mut();
    let m = state.first_moment.values_mut();
    let v = state.second_moment.values_mut();
    for (((p, &g), m), v) in params.zip(grads.values()).zip(m).zip(v) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tinysr::Architecture;

    fn tiny() -> SrModel {
        SrModel::initialized(Architecture::residual(1, &[2], 1, 2).unwrap(), 9).unwrap()
    }

    fn constant_grads(model: &SrModel, g: f64) -> GradientSet {
        let mut grads = GradientSet::zeros(model.architecture());
        grads.values_mut().for_each(|v| *v = g);
        grads
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut model = tiny();
        let before = model.clone();
        let mut state = AdamState::new(&model, 1e-3);
        let zeros = GradientSet::zeros(model.architecture());
        adam_step(&mut model, &zeros, &mut state).unwrap();
        assert_eq!(model, before);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_matches_closed_form() {
        // m_hat = g, v_hat = g², so Δθ = -lr g / (|g| + ε).
        for g in [0.37, -2.5e-3, 12.0] {
            let mut model = tiny();
            let before: Vec<f64> = model.parameter_values().copied().collect();
            let mut state = AdamState::new(&model, 1e-3);
            let grads = constant_grads(&model, g);
            adam_step(&mut model, &grads, &mut state).unwrap();
            let expected = -1e-3 * g / (g.abs() + 1e-8);
            for (a, b) in model.parameter_values().zip(&before) {
                assert!((a - b - expected).abs() < 1e-15, "g={g}");
            }
        }
    }

    #[test]
    fn constant_gradient_steps_approach_learning_rate() {
        // Scalar recurrence oracle, independent of the model plumbing.
        let (lr, b1, b2, eps, g) = (1e-3, 0.9f64, 0.999f64, 1e-8, 0.05);
        let (mut m, mut v) = (0.0, 0.0);
        let mut oracle = Vec::new();
        for t in 1..=500 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let step = lr * (m / (1.0 - b1.powi(t))) / ((v / (1.0 - b2.powi(t))).sqrt() + eps);
            oracle.push(step);
        }

        let mut model = tiny();
        let mut state = AdamState::new(&model, lr);
        let grads = constant_grads(&model, g);
        for expected in &oracle {
            let before = model.params()[0].weight[0];
            adam_step(&mut model, &grads, &mut state).unwrap();
            let moved = before - model.params()[0].weight[0];
            assert!((moved - expected).abs() < 1e-15);
        }
        let last = *oracle.last().unwrap();
        assert!((last - lr).abs() / lr < 1e-6);
    }

    #[test]
    fn mismatched_gradients_rejected() {
        let mut model = tiny();
        let mut state = AdamState::new(&model, 1e-3);
        let other = GradientSet::zeros(&Architecture::standard(1, 2));
        assert!(adam_step(&mut model, &other, &mut state).is_err());
        assert_eq!(state.step, 0);
    }
}
