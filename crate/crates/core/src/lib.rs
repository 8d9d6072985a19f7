//! Closed-form construction of single-hidden-layer networks that reproduce
//! a sampled continuous function exactly at its samples.
//!
//! For every sample `(x, f(x))` the network dedicates one hidden node
//! `α = g(⟨x,δ⟩)` and output weights `θⱼ = σⱼ⁻¹(fⱼ(x)) / α`, so that
//! `σⱼ(α·θⱼ) = fⱼ(x)`. No iteration is involved; the only requirements are
//! that each `fⱼ(x)` lies inside the range of `σⱼ`, that `σⱼ` is invertible
//! there, and that `g` does not vanish at `⟨x,δ⟩`.
//!
//! ```
//! use ufa_core::{build_network, sample_builtin, verify_reconstruction, ActivationSpec, BuiltinTarget, DeltaPolicy};
//!
//! let samples = sample_builtin(BuiltinTarget::Gauss2d, 15).unwrap();
//! let net = build_network(&samples, &ActivationSpec::sigmoid(), &[ActivationSpec::sigmoid()], &DeltaPolicy::Default).unwrap();
//! let report = verify_reconstruction(&net, &samples, 1e-9).unwrap();
//! assert!(report.passed);
//! ```
//!
//! Modules:
//! - [`activation`]: activation functions, inverses and grid certificates.
//! - [`theta`]: the closed-form weight formulas.
//! - [`network`]: per-sample network assembly, evaluation, verification, `UFANET v1` files.
//! - [`validation`]: hypothesis checks ahead of a build.
//! - [`baseline`]: gradient-descent baseline for comparison.
//! - [`dataio`]: CSV ingestion, benchmark targets, plot data.

pub mod activation;
pub mod baseline;
pub mod dataio;
pub mod error;
pub mod network;
pub mod theta;
pub mod validation;

pub use activation::{
    check_invertible, check_nonvanishing, ActivationSpec, CertificationReport, InverseStrategy, Interval, Kind,
    ValueRange,
};
pub use baseline::{compare, gradient_check, train_gd, Comparison, GDConfig, GDModel, GDReport};
pub use dataio::{load_samples_csv, sample_builtin, sample_builtin_with, write_samples_csv, BuiltinTarget, GridLayout};
pub use error::{Error, Result};
pub use network::{
    architecture_counts, build_network, build_network_timed, load_network, save_network, verify_reconstruction,
    ArchitectureCounts, DeltaPolicy, EvalTrace, PointUnit, ReconstructionReport, Routing, Sample, SampleSet,
    ShallowNetwork,
};
pub use theta::{
    compute_theta_function, compute_theta_multivariate, compute_theta_scalar, compute_theta_vector,
    ThetaFunctionTable, ThetaResult,
};
pub use validation::{check_hypotheses, suggest_rescale, HypothesisReport};
