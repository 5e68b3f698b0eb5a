//! The sparse-and-smooth mask solver.
//!
//! Given a trained classifier and an image, [`explain`] optimizes a
//! pixel-wise mask that keeps the masked image classified as the target
//! while staying sparse, smooth and confined to the image support. The
//! constrained problem is split ADMM-style into a gradient subproblem on
//! the raw mask, Euclidean projections onto the sparsity set (ℓ0 count or
//! ℓ1 mass) and the [0,1] box, and scaled dual updates.

mod project;
mod tv;

pub use project::{alpha1_from_state, project_box, project_l0, project_l1};
pub use tv::{tv_subgradient, tv_value};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Support};
use crate::model::{argmax, cross_entropy, Classifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsityNorm {
    L0,
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// M⁰ = X / ‖X‖_∞ : mask values proportional to pixel intensity.
    IntensityProportional,
    /// M⁰ = 1 on the image support, 0 elsewhere.
    OnesOnSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Explain the given label.
    Supervised(usize),
    /// Explain the model's own predicted class.
    Unsupervised,
}

/// How top-k selection ranks entries in the ℓ0 projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopKRule {
    /// Largest absolute value: the true Euclidean projection.
    Magnitude,
    /// Largest signed value.
    Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsplainConfig {
    pub sparsity_norm: SparsityNorm,
    /// Sparsity budget as a fraction of the image's nonzero pixel count:
    /// α₀ = round(alpha_fraction · ‖X‖₀), floored at 1.
    pub alpha_fraction: f64,
    /// Total-variation weight λ ≥ 0.
    pub lambda: f64,
    /// ADMM penalty ρ > 0.
    pub rho: f64,
    /// Number of outer ADMM iterations K.
    pub admm_iters: usize,
    /// Learning rate of the Adam subsolver.
    pub inner_lr: f64,
    /// Adam steps per ADMM iteration.
    pub inner_steps: usize,
    pub init_mode: InitMode,
    pub target_mode: TargetMode,
    pub seed: u64,
    pub topk_rule: TopKRule,
    /// Whether the sparsity constraint participates at all. Disabled by the
    /// ablation configurations; support and box constraints always apply.
    pub use_sparsity: bool,
    /// Clamp the returned mask into [0,1] on the support (for rendering).
    /// The raw final iterate is returned when false.
    pub box_output: bool,
}

impl Default for SsplainConfig {
    fn default() -> Self {
        SsplainConfig {
            sparsity_norm: SparsityNorm::L0,
            alpha_fraction: 0.5,
            lambda: 1e-5,
            rho: 0.01,
            admm_iters: 50,
            inner_lr: 0.01,
            inner_steps: 10,
            init_mode: InitMode::IntensityProportional,
            target_mode: TargetMode::Unsupervised,
            seed: 0,
            topk_rule: TopKRule::Magnitude,
            use_sparsity: true,
            box_output: false,
        }
    }
}

impl SsplainConfig {
    /// Preset used for 28×28 digit images: 20 ADMM iterations, Adam learning
    /// rate 0.1, ρ = 0.01, λ = 1e-3, α₀ = 25% of ‖X‖₀.
    pub fn mnist() -> Self {
        SsplainConfig {
            alpha_fraction: 0.25,
            lambda: 1e-3,
            admm_iters: 20,
            inner_lr: 0.1,
            ..SsplainConfig::default()
        }
    }

    /// Same as [`SsplainConfig::mnist`] with λ = 1e-4.
    pub fn fmnist() -> Self {
        SsplainConfig {
            lambda: 1e-4,
            ..SsplainConfig::mnist()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_fraction > 0.0 && self.alpha_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha_fraction must be in (0, 1], got {}",
                self.alpha_fraction
            )));
        }
        if !(self.rho > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if self.admm_iters == 0 || self.inner_steps == 0 {
            return Err(Error::InvalidConfig(
                "admm_iters and inner_steps must be positive".to_string(),
            ));
        }
        if !(self.inner_lr > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "inner_lr must be positive, got {}",
                self.inner_lr
            )));
        }
        Ok(())
    }
}

/// The solver's iterate bundle.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub m: Grid,
    pub m1: Grid,
    pub m2: Grid,
    pub u1: Grid,
    pub u2: Grid,
    /// Completed outer iterations.
    pub k: usize,
    pub alpha0: usize,
    /// Current ℓ1 budget; `None` under the ℓ0 norm.
    pub alpha1: Option<f64>,
}

/// Additive terms of the augmented Lagrangian at a state. The indicator
/// terms for the constraint sets are identically zero because the auxiliary
/// iterates are feasible by construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    /// Cross-entropy of the masked image.
    pub loss: f64,
    /// λ · ν(M).
    pub tv_term: f64,
    /// ρ · Tr(U₁ᵀ(M − M₁)).
    pub dual1: f64,
    /// (ρ/2) ‖M − M₁‖².
    pub penalty1: f64,
    pub dual2: f64,
    pub penalty2: f64,
    pub total: f64,
}

/// Per-iteration log row.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterationStats {
    pub k: usize,
    pub loss: f64,
    /// ν(M), unweighted.
    pub tv: f64,
    /// ‖M − M₁‖₂.
    pub residual1: f64,
    /// ‖M − M₂‖₂.
    pub residual2: f64,
    pub lagrangian: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplanationMeta {
    pub config: SsplainConfig,
    pub target: usize,
    pub alpha0: usize,
    pub final_objective: ObjectiveBreakdown,
    pub iterations: Vec<IterationStats>,
}

/// The solver output: the final mask iterate plus its run record.
#[derive(Debug, Clone)]
pub struct ExplanationMap {
    pub mask: Grid,
    pub meta: ExplanationMeta,
}

fn resolve_target(model: &Classifier, x: &Grid, mode: TargetMode) -> Result<usize> {
    match mode {
        TargetMode::Supervised(label) => {
            if label >= model.num_classes() {
                return Err(Error::InvalidLabel {
                    label,
                    num_classes: model.num_classes(),
                });
            }
            Ok(label)
        }
        TargetMode::Unsupervised => Ok(argmax(&model.forward(x)?)),
    }
}

fn add_scaled(dst: &mut [f64], src: &[f64], scale: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}

/// One M-subproblem solve: `inner_steps` Adam steps on
/// loss(f(X⊙M), y) + λν(M) + (ρ/2)·Σᵢ‖M − Mᵢ + Uᵢ‖², starting from the
/// current iterate. Out-of-support entries of the result are forced to 0.
pub fn inner_m_update(
    state: &AdmmState,
    model: &Classifier,
    x: &Grid,
    target: usize,
    support: &Support,
    config: &SsplainConfig,
) -> Result<Grid> {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    let n = x.len();
    let mut m = state.m.clone();
    // Fresh moment buffers: each outer iteration poses a new subproblem.
    let mut mom1 = vec![0.0; n];
    let mut mom2 = vec![0.0; n];

    for step in 1..=config.inner_steps {
        let masked = x.hadamard(&m)?;
        let (loss, grad_at_masked) = model.loss_and_input_gradient(&masked, target)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                what: "objective loss",
                outer_iter: state.k + 1,
                inner_step: step,
            });
        }

        // ∇_M loss = X ⊙ ∇ loss at (X ⊙ M)
        let mut grad: Vec<f64> = x
            .values()
            .iter()
            .zip(grad_at_masked.values())
            .map(|(xi, gi)| xi * gi)
            .collect();
        if config.lambda != 0.0 {
            add_scaled(&mut grad, tv_subgradient(&m).values(), config.lambda);
        }
        if config.use_sparsity {
            for i in 0..n {
                grad[i] +=
                    config.rho * (m.values()[i] - state.m1.values()[i] + state.u1.values()[i]);
            }
        }
        for i in 0..n {
            grad[i] += config.rho * (m.values()[i] - state.m2.values()[i] + state.u2.values()[i]);
        }

        let bc1 = 1.0 - BETA1.powi(step as i32);
        let bc2 = 1.0 - BETA2.powi(step as i32);
        let mv = m.values_mut();
        for i in 0..n {
            mom1[i] = BETA1 * mom1[i] + (1.0 - BETA1) * grad[i];
            mom2[i] = BETA2 * mom2[i] + (1.0 - BETA2) * grad[i] * grad[i];
            mv[i] -= config.inner_lr * (mom1[i] / bc1) / ((mom2[i] / bc2).sqrt() + EPS);
        }
        if !m.is_finite() {
            return Err(Error::NonFinite {
                what: "mask iterate",
                outer_iter: state.k + 1,
                inner_step: step,
            });
        }
    }

    support.zero_outside(&mut m);
    Ok(m)
}

/// Evaluate the augmented Lagrangian at a state, returning every additive
/// term for logging. Terms for the sparsity pair are zero when the
/// configuration disables it.
pub fn augmented_lagrangian(
    state: &AdmmState,
    model: &Classifier,
    x: &Grid,
    target: usize,
    config: &SsplainConfig,
) -> Result<ObjectiveBreakdown> {
    let masked = x.hadamard(&state.m)?;
    let probs = model.forward(&masked)?;
    let loss = cross_entropy(&probs, target)?;
    let tv_term = config.lambda * tv_value(&state.m);

    let pair_terms = |mi: &Grid, ui: &Grid| -> (f64, f64) {
        let mut dual = 0.0;
        let mut quad = 0.0;
        for ((m, mi), ui) in state.m.values().iter().zip(mi.values()).zip(ui.values()) {
            let diff = m - mi;
            dual += ui * diff;
            quad += diff * diff;
        }
        (config.rho * dual, 0.5 * config.rho * quad)
    };

    let (dual1, penalty1) = if config.use_sparsity {
        pair_terms(&state.m1, &state.u1)
    } else {
        (0.0, 0.0)
    };
    let (dual2, penalty2) = pair_terms(&state.m2, &state.u2);

    Ok(ObjectiveBreakdown {
        loss,
        tv_term,
        dual1,
        penalty1,
        dual2,
        penalty2,
        total: loss + tv_term + dual1 + penalty1 + dual2 + penalty2,
    })
}

fn init_mask(x: &Grid, support: &Support, mode: InitMode) -> Grid {
    match mode {
        InitMode::IntensityProportional => {
            let max = x.max_abs();
            let mut m = x.clone();
            m.values_mut().iter_mut().for_each(|v| *v /= max);
            m
        }
        InitMode::OnesOnSupport => {
            let mut m = Grid::zeros(x.height(), x.width());
            for i in support.indices() {
                m.values_mut()[i] = 1.0;
            }
            m
        }
    }
}

fn project_sparsity(v: &Grid, state: &AdmmState, support: &Support, config: &SsplainConfig) -> Result<Grid> {
    match config.sparsity_norm {
        SparsityNorm::L0 => project_l0(v, state.alpha0, support, config.topk_rule),
        SparsityNorm::L1 => project_l1(v, state.alpha1.expect("alpha1 set under L1"), support),
    }
}

fn grid_add(a: &Grid, b: &Grid) -> Grid {
    let mut out = a.clone();
    for (o, b) in out.values_mut().iter_mut().zip(b.values()) {
        *o += b;
    }
    out
}

#[cfg(debug_assertions)]
fn assert_feasible(state: &AdmmState, support: &Support, config: &SsplainConfig) {
    if config.use_sparsity {
        for (i, v) in state.m1.values().iter().enumerate() {
            debug_assert!(support.contains(i) || *v == 0.0, "m1 leaks outside support");
        }
        match config.sparsity_norm {
            SparsityNorm::L0 => debug_assert!(state.m1.norm_l0() <= state.alpha0),
            SparsityNorm::L1 => {
                debug_assert!(state.m1.norm_l1() <= state.alpha1.unwrap() + 1e-9)
            }
        }
    }
    for (i, v) in state.m2.values().iter().enumerate() {
        debug_assert!(support.contains(i) || *v == 0.0, "m2 leaks outside support");
        debug_assert!((0.0..=1.0).contains(v), "m2 outside [0,1]");
    }
}

/// Run the full solver on one image.
///
/// Deterministic: identical (model weights, image, config) produce a
/// bit-identical mask. Images with empty support are rejected, since no
/// admissible mask exists.
pub fn explain(model: &Classifier, x: &Grid, config: &SsplainConfig) -> Result<ExplanationMap> {
    Ok(explain_with_state(model, x, config)?.0)
}

/// [`explain`] plus the final solver state, for diagnostics that need the
/// auxiliary iterates and duals.
pub fn explain_with_state(
    model: &Classifier,
    x: &Grid,
    config: &SsplainConfig,
) -> Result<(ExplanationMap, AdmmState)> {
    config.validate()?;
    let support = x.support();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let target = resolve_target(model, x, config.target_mode)?;
    let alpha0 = ((config.alpha_fraction * x.norm_l0() as f64).round() as usize).max(1);

    let m = init_mask(x, &support, config.init_mode);
    let zeros = Grid::zeros(x.height(), x.width());
    let mut state = AdmmState {
        m,
        m1: zeros.clone(),
        m2: zeros.clone(),
        u1: zeros.clone(),
        u2: zeros,
        k: 0,
        alpha0,
        alpha1: None,
    };

    // Initial auxiliaries: immediate projection of M⁰ (duals start at zero).
    if config.use_sparsity {
        if config.sparsity_norm == SparsityNorm::L1 {
            state.alpha1 = Some(alpha1_from_state(&state.m, &state.u1, alpha0, &support)?);
        }
        state.m1 = project_sparsity(&state.m, &state, &support, config)?;
    }
    state.m2 = project_box(&state.m, &support)?;

    let mut iterations = Vec::with_capacity(config.admm_iters);
    for k in 1..=config.admm_iters {
        state.m = inner_m_update(&state, model, x, target, &support, config)?;

        if config.use_sparsity {
            if config.sparsity_norm == SparsityNorm::L1 {
                state.alpha1 = Some(alpha1_from_state(&state.m, &state.u1, alpha0, &support)?);
            }
            let v1 = grid_add(&state.m, &state.u1);
            state.m1 = project_sparsity(&v1, &state, &support, config)?;
        }
        let v2 = grid_add(&state.m, &state.u2);
        state.m2 = project_box(&v2, &support)?;

        // Scaled dual ascent.
        if config.use_sparsity {
            for i in 0..state.u1.len() {
                state.u1.values_mut()[i] +=
                    config.rho * (state.m.values()[i] - state.m1.values()[i]);
            }
        }
        for i in 0..state.u2.len() {
            state.u2.values_mut()[i] += config.rho * (state.m.values()[i] - state.m2.values()[i]);
        }
        state.k = k;

        #[cfg(debug_assertions)]
        assert_feasible(&state, &support, config);

        let breakdown = augmented_lagrangian(&state, model, x, target, config)?;
        let residual = |a: &Grid, b: &Grid| -> f64 {
            a.values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        iterations.push(IterationStats {
            k,
            loss: breakdown.loss,
            tv: tv_value(&state.m),
            residual1: if config.use_sparsity {
                residual(&state.m, &state.m1)
            } else {
                0.0
            },
            residual2: residual(&state.m, &state.m2),
            lagrangian: breakdown.total,
        });
    }

    let final_objective = augmented_lagrangian(&state, model, x, target, config)?;

    let mask = if config.box_output {
        project_box(&state.m, &support)?
    } else {
        state.m.clone()
    };

    let map = ExplanationMap {
        mask,
        meta: ExplanationMeta {
            config: config.clone(),
            target,
            alpha0,
            final_objective,
            iterations,
        },
    };
    Ok((map, state))
}
