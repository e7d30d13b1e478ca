//! Fitting a deep stencil network to one pair of snapshots `(φ₀, φ_k)`.
//!
//! `φ₀` is random noise and `φ_k` is `k` explicit steps of size `dt_s`
//! later, so the trained network advances the solution by `dt_L = k·dt_s`
//! per application. Optimization runs full-batch Adam on the summed squared
//! error until it drops to `epsilon` or the iteration budget runs out.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::fcnn::{backward, forward, DeepFcnn};
use crate::fdm::{stability_threshold, EquationParams, FdmStepper, REFERENCE_REFINEMENT};
use crate::grid::{Field, GridSpec};
use crate::initcond::random_uniform_with;
use crate::trajectory::advance;

/// How the target snapshot `φ_k` is produced from `φ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetStep {
    /// `k` steps of `dt_s`.
    #[default]
    Coarse,
    /// `100·k` steps of `dt_s / 100`.
    Fine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    /// All parameters i.i.d. `U[-scale, scale]`.
    Uniform { scale: f64 },
    /// Every layer starts as one explicit step of `dt_L / depth`.
    FdmEquivalent,
}

impl Default for InitMode {
    fn default() -> Self {
        InitMode::Uniform { scale: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Snapshot gap in units of `dt_s`.
    pub k: usize,
    pub dt_s: f64,
    pub dt_l: f64,
    /// Stop once the summed squared error is at most this.
    pub epsilon: f64,
    pub max_iters: usize,
    pub adam: AdamConfig,
    pub depth: usize,
    pub init: InitMode,
    pub target: TargetStep,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 3,
            dt_s: 2e-5,
            dt_l: 6e-5,
            epsilon: 1e-8,
            max_iters: 200_000,
            adam: AdamConfig::default(),
            depth: 3,
            init: InitMode::default(),
            target: TargetStep::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Checks `k·dt_s == dt_L` and `dt_s ≤ h²/(4α) ≤ dt_L`.
    pub fn validate(&self, h: f64, alpha: f64) -> Result<()> {
        if self.k == 0 {
            return Err(domain("snapshot gap k must be at least 1"));
        }
        if !(self.dt_s > 0.0 && self.dt_l > 0.0) {
            return Err(domain("time steps must be positive"));
        }
        let k_dt = self.k as f64 * self.dt_s;
        if (k_dt - self.dt_l).abs() > 1e-12 * self.dt_l {
            return Err(domain(format!("dt_L = {} is not k·dt_s = {k_dt}", self.dt_l)));
        }
        let threshold = stability_threshold(h, alpha)?;
        if !(self.dt_s <= threshold && threshold <= self.dt_l) {
            return Err(domain(format!(
                "need dt_s <= h²/(4α) <= dt_L, got {} <= {threshold} <= {}",
                self.dt_s, self.dt_l
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(domain("epsilon must be positive"));
        }
        if self.depth == 0 {
            return Err(domain("depth must be at least 1"));
        }
        Ok(())
    }

    /// RNG for parameter initialization; independent of the pair's stream.
    fn init_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub phi0: Field,
    pub phik: Field,
    pub eq: EquationParams,
    pub k: usize,
    pub dt_s: f64,
}

/// Random `φ₀ ~ U[-1, 1]` and the FDM solution `k·dt_s` later.
pub fn make_training_pair(eq: &EquationParams, spec: &GridSpec, cfg: &TrainConfig, seed: u64) -> Result<TrainingPair> {
    cfg.validate(spec.h(), eq.alpha())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi0 = random_uniform_with(spec, &mut rng);
    let (dt, n) = match cfg.target {
        TargetStep::Coarse => (cfg.dt_s, cfg.k),
        TargetStep::Fine => (cfg.dt_s / REFERENCE_REFINEMENT, cfg.k * REFERENCE_REFINEMENT as usize),
    };
    let phik = advance(&FdmStepper { eq: *eq, dt }, &phi0, n)?;
    Ok(TrainingPair {
        phi0,
        phik,
        eq: *eq,
        k: cfg.k,
        dt_s: cfg.dt_s,
    })
}

/// `Σ (pred − target)²` and its gradient `2(pred − target)`.
pub fn mse_loss(pred: &Field, target: &Field) -> Result<(f64, Field)> {
    let diff = pred.zip_map(target, |p, t| p - t)?;
    let loss = diff.values().iter().map(|d| d * d).sum();
    Ok((loss, diff.map(|d| 2.0 * d)))
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n_params: usize, cfg: AdamConfig) -> Self {
        Self {
            cfg,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Starting model for `eq` with the configured depth and the equation's polynomial order.
pub fn init_model(eq: &EquationParams, h: f64, cfg: &TrainConfig) -> Result<DeepFcnn> {
    let kind = eq.kind();
    match cfg.init {
        InitMode::Uniform { scale } => DeepFcnn::random(kind, cfg.depth, kind.poly_order(), scale, &mut cfg.init_rng()),
        InitMode::FdmEquivalent => {
            DeepFcnn::fdm_equivalent(eq, h, cfg.dt_l / cfg.depth as f64, cfg.depth, kind.poly_order())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iteration: usize,
    pub loss: f64,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: DeepFcnn,
    /// Loss before each update, plus the final evaluation.
    pub history: Vec<LossRecord>,
    pub updates: usize,
    pub converged: bool,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.loss)
    }

    pub fn losses(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.loss).collect()
    }

    /// `iteration,loss,wall_time` lines.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("iteration,loss,wall_time\n");
        for r in &self.history {
            out.push_str(&format!("{},{:e},{:.6}\n", r.iteration, r.loss, r.elapsed_secs));
        }
        out
    }
}

fn batch_loss(model: &DeepFcnn, pairs: &[TrainingPair], want_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
    let mut total = 0.0;
    let mut grads: Option<Vec<f64>> = None;
    for pair in pairs {
        let pass = forward(model, &pair.phi0);
        let (loss, g_out) = mse_loss(&pass.output, &pair.phik)?;
        total += loss;
        if want_grad && loss.is_finite() {
            let g = backward(model, &pass, &g_out)?.flatten();
            match &mut grads {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                None => grads = Some(g),
            }
        }
    }
    Ok((total, grads))
}

/// Minimizes `Σ_pairs ‖φ_k − model(φ₀)‖²`.
pub fn train(model: DeepFcnn, pairs: &[TrainingPair], cfg: &TrainConfig) -> Result<TrainOutcome> {
    let Some(first) = pairs.first() else {
        return Err(domain("training needs at least one snapshot pair"));
    };
    let kind = first.eq.kind();
    if model.kind() != kind || pairs.iter().any(|p| p.eq.kind() != kind) {
        return Err(Error::Validation(
            "model and training pairs disagree on the equation".into(),
        ));
    }
    if model.order() != kind.poly_order() {
        return Err(Error::Validation(format!(
            "{kind} models use polynomial order {}, got {}",
            kind.poly_order(),
            model.order()
        )));
    }
    for pair in pairs {
        pair.phi0.check_same_dims(&pair.phik)?;
    }

    let start = Instant::now();
    let mut model = model;
    let mut params = model.params();
    let mut adam = Adam::new(params.len(), cfg.adam);
    let mut history = Vec::new();
    let mut converged = false;
    let mut updates = 0;
    for iteration in 0..=cfg.max_iters {
        let want_grad = iteration < cfg.max_iters;
        let (loss, grads) = batch_loss(&model, pairs, want_grad)?;
        history.push(LossRecord {
            iteration,
            loss,
            elapsed_secs: start.elapsed().as_secs_f64(),
        });
        if !loss.is_finite() {
            return Err(Error::Diverged { iteration, loss });
        }
        if loss <= cfg.epsilon {
            converged = true;
            break;
        }
        let Some(grads) = grads else { break };
        adam.step(&mut params, &grads);
        model.set_params(&params)?;
        updates += 1;
    }
    Ok(TrainOutcome {
        model,
        history,
        updates,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdm::{fdm_rollout, EquationKind, TimeStepping};

    fn unit(n: usize) -> GridSpec {
        GridSpec::unit_square(n).unwrap()
    }

    #[test]
    fn config_validation() {
        let cfg = TrainConfig::default();
        assert!(cfg.validate(0.01, 1.0).is_ok());
        assert!(TrainConfig { dt_l: 7e-5, ..cfg }.validate(0.01, 1.0).is_err());
        assert!(TrainConfig {
            k: 1,
            dt_l: 2e-5,
            ..cfg
        }
        .validate(0.01, 1.0)
        .is_err());
        assert!(TrainConfig { epsilon: 0.0, ..cfg }.validate(0.01, 1.0).is_err());
        // threshold 6.25e-6 lies below dt_s
        assert!(cfg.validate(0.005, 1.0).is_err());
    }

    #[test]
    fn pair_is_deterministic_and_bounded() {
        let eq = EquationKind::Fisher.default_params();
        let cfg = TrainConfig::default();
        let a = make_training_pair(&eq, &unit(100), &cfg, 5).unwrap();
        let b = make_training_pair(&eq, &unit(100), &cfg, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.phi0.values().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn pair_target_is_k_fdm_steps() {
        let eq = EquationKind::Heat.default_params();
        let cfg = TrainConfig::default();
        let pair = make_training_pair(&eq, &unit(100), &cfg, 1).unwrap();
        let traj = fdm_rollout(&pair.phi0, &eq, TimeStepping::new(2e-5, 3).unwrap(), 1);
        assert_eq!(pair.phik, traj.last().field);
    }

    #[test]
    fn fine_target_uses_reference_step() {
        let eq = EquationKind::Heat.default_params();
        let cfg = TrainConfig {
            target: TargetStep::Fine,
            ..TrainConfig::default()
        };
        let fine = make_training_pair(
            &eq,
            &unit(30),
            &TrainConfig {
                dt_s: 2e-4,
                dt_l: 6e-4,
                ..cfg
            },
            1,
        )
        .unwrap();
        let coarse = make_training_pair(
            &eq,
            &unit(30),
            &TrainConfig {
                dt_s: 2e-4,
                dt_l: 6e-4,
                target: TargetStep::Coarse,
                ..cfg
            },
            1,
        )
        .unwrap();
        assert_eq!(fine.phi0, coarse.phi0);
        assert_ne!(fine.phik, coarse.phik);
    }

    #[test]
    fn mse_examples() {
        let spec = unit(100);
        let a = Field::constant(spec, 0.3);
        let (l, g) = mse_loss(&a, &a).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.values().iter().all(|&v| v == 0.0));
        let b = Field::constant(spec, 1.3);
        assert!((mse_loss(&b, &a).unwrap().0 - 10000.0).abs() < 1e-9);
        assert!(mse_loss(&a, &Field::zeros(unit(10))).is_err());
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut p = vec![1.0, -2.0];
        let mut adam = Adam::new(2, AdamConfig::default());
        adam.step(&mut p, &[3.0, -0.5]);
        assert!((p[0] - (1.0 - 1e-3)).abs() < 1e-9);
        assert!((p[1] - (-2.0 + 1e-3)).abs() < 1e-9);
    }

    #[test]
    fn converged_model_returns_without_updates() {
        let eq = EquationKind::Heat.default_params();
        // 40×40 grid: threshold 1.5625e-4 sits between dt_s and dt_L
        let cfg = TrainConfig {
            dt_s: 1.5e-4,
            dt_l: 4.5e-4,
            init: InitMode::FdmEquivalent,
            ..TrainConfig::default()
        };
        let pair = make_training_pair(&eq, &unit(40), &cfg, 2).unwrap();
        let model = init_model(&eq, 1.0 / 40.0, &cfg).unwrap();
        let out = train(model, std::slice::from_ref(&pair), &cfg).unwrap();
        assert_eq!(out.updates, 0);
        assert!(out.converged);
        assert_eq!(out.history.len(), 1);
        assert!(out.final_loss() <= 1e-18 * pair.phik.norm_l2().powi(2));
    }

    #[test]
    fn rejects_wrong_polynomial_order() {
        let eq = EquationKind::AllenCahn.default_params();
        let cfg = TrainConfig::default();
        let pair = make_training_pair(&eq, &unit(100), &cfg, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let model = DeepFcnn::random(EquationKind::AllenCahn, 3, 2, 0.1, &mut rng).unwrap();
        assert!(matches!(train(model, &[pair], &cfg), Err(Error::Validation(_))));
    }

    #[test]
    fn divergence_is_reported() {
        let eq = EquationKind::AllenCahn.default_params();
        let cfg = TrainConfig {
            max_iters: 5,
            ..TrainConfig::default()
        };
        let pair = make_training_pair(&eq, &unit(100), &cfg, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let model = DeepFcnn::random(EquationKind::AllenCahn, 3, 3, 1e80, &mut rng).unwrap();
        assert!(matches!(
            train(model, &[pair], &cfg),
            Err(Error::Diverged { iteration: 0, .. })
        ));
    }

    #[test]
    fn short_run_is_deterministic_and_leaves_pair_untouched() {
        let eq = EquationKind::Fisher.default_params();
        let cfg = TrainConfig {
            max_iters: 50,
            seed: 9,
            ..TrainConfig::default()
        };
        let pair = make_training_pair(&eq, &unit(100), &cfg, cfg.seed).unwrap();
        let before = pair.clone();
        let a = train(init_model(&eq, 0.01, &cfg).unwrap(), std::slice::from_ref(&pair), &cfg).unwrap();
        let b = train(init_model(&eq, 0.01, &cfg).unwrap(), std::slice::from_ref(&pair), &cfg).unwrap();
        assert_eq!(a.losses(), b.losses());
        assert_eq!(a.model, b.model);
        assert_eq!(a.updates, 50);
        assert_eq!(a.history.len(), 51);
        assert!(a.final_loss() < a.history[0].loss);
        assert_eq!(pair, before);
    }
}
