//! Shared workloads for the criterion benches.

use ufa_core::{sample_builtin, sample_builtin_with, ActivationSpec, BuiltinTarget, GridLayout, SampleSet};

/// Sine-bump on interior anchors, paired with an identity hidden activation.
pub fn sine_task(per_axis: usize) -> (SampleSet, ActivationSpec, Vec<ActivationSpec>) {
    let samples = sample_builtin_with(BuiltinTarget::SineBump, per_axis, GridLayout::Interior).expect("grid");
    (samples, ActivationSpec::identity(), vec![ActivationSpec::sigmoid()])
}

pub fn gauss_task(per_axis: usize) -> (SampleSet, ActivationSpec, Vec<ActivationSpec>) {
    let samples = sample_builtin(BuiltinTarget::Gauss2d, per_axis).expect("grid");
    (samples, ActivationSpec::sigmoid(), vec![ActivationSpec::sigmoid()])
}

pub fn swirl_task(per_axis: usize) -> (SampleSet, ActivationSpec, Vec<ActivationSpec>) {
    let samples = sample_builtin(BuiltinTarget::Swirl2to2, per_axis).expect("grid");
    let tanh01 = "scale:0.5,0.5:tanh".parse().expect("activation");
    (samples, ActivationSpec::sigmoid(), vec![ActivationSpec::sigmoid(), tanh01])
}
