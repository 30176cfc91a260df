//! Single-photon linear optics and interaction-free measurement (IFM).
//!
//! The crate is organised bottom-up:
//!
//! * [`optics`]: exact single-photon engine (beamsplitters, phases,
//!   permutations, circuit composition, output distributions).
//! * [`mesh`]: Clements rectangular-mesh decomposition, reconstruction and
//!   phase-noise perturbation.
//! * [`protocols`]: IFM circuits (Elitzur-Vaidman, multimode `U·U†`,
//!   sequential cascades, binary trees), outcome classification and the
//!   closed-form efficiencies.
//! * [`estimation`]: shot sampling, efficiency estimates, randomized-phase
//!   error mitigation and present/absent baselines.
//! * [`robustness`]: reflectivity-noise Monte Carlo for multimode chains.
//! * [`optimizer`]: cascade reflectivity optimisation.

pub mod efficiency;
pub mod error;
pub mod estimation;
pub mod haar;
pub mod mesh;
pub mod optimizer;
pub mod optics;
pub mod protocols;
pub mod robustness;
pub mod rng;
pub mod tree;

pub use error::{Error, Result};
pub use estimation::{
    baseline_compare, ensemble_estimate, estimate_eta, mitigate, mitigated_estimate, randomized_phase_ensemble, run_ensemble, sample_counts,
    BaselinePair, CircuitProbabilities, EfficiencyEstimate, EnsembleConfig, NoiseConfig, ShotRecord,
};
pub use haar::haar_unitary;
pub use mesh::{decompose, perturb_mesh, reconstruct, MeshProgram, Mzi};
pub use optics::{
    bs_unitary, compose, embed, phase_unitary, simulate, single_photon_distribution, CircuitSpec,
    Element, PhotonState, Reflectivity, UnitaryMatrix,
};
pub use efficiency::{
    cascade_probabilities, eta_cascade, eta_cascade_balanced, eta_ev, eta_ev_t, eta_mismatch, eta_multimode, eta_zeno,
    CascadeProbabilities, Mismatch,
};
pub use protocols::{
    build_cascade, build_chain, build_ev, build_multimode, classify, DetectorLayout, OutcomeDistribution, Scheme,
};
pub use optimizer::{
    expected_trials, optimize_reflectivities, verify_prefix_property, OptimizationResult, OptimizerConfig, PrefixReport,
};
pub use robustness::{robustness_histogram, summarize_std, target_reflectivity, RobustnessConfig};
pub use tree::{build_tree, TreeLayout};
