use serde::{Deserialize, Serialize};

use crate::autodiff::OptimizerKind;
use crate::error::{Error, Result};
use crate::nn::SeedPolicy;
use crate::regularizers::{AtkinsonUnitForm, RegularizerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dqn,
    Ddqn,
    Ensemble,
    Maxmin,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Dqn => "dqn",
            Algorithm::Ddqn => "ddqn",
            Algorithm::Ensemble => "ensemble",
            Algorithm::Maxmin => "maxmin",
        }
    }

    pub fn is_ensemble(self) -> bool {
        matches!(self, Algorithm::Ensemble | Algorithm::Maxmin)
    }
}

/// Regularizer as named in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerChoice {
    #[default]
    None,
    Atkinson,
    Gini,
    Theil,
    Vol,
    Meanvector,
}

impl RegularizerChoice {
    pub const ALL: [RegularizerChoice; 5] = [
        RegularizerChoice::Atkinson,
        RegularizerChoice::Gini,
        RegularizerChoice::Theil,
        RegularizerChoice::Vol,
        RegularizerChoice::Meanvector,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RegularizerChoice::None => "none",
            RegularizerChoice::Atkinson => "atkinson",
            RegularizerChoice::Gini => "gini",
            RegularizerChoice::Theil => "theil",
            RegularizerChoice::Vol => "vol",
            RegularizerChoice::Meanvector => "meanvector",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "none" | "baseline" => RegularizerChoice::None,
            "atkinson" => RegularizerChoice::Atkinson,
            "gini" => RegularizerChoice::Gini,
            "theil" => RegularizerChoice::Theil,
            "vol" => RegularizerChoice::Vol,
            "meanvector" => RegularizerChoice::Meanvector,
            other => return Err(Error::Config(format!("unknown regularizer `{other}`"))),
        })
    }
}

/// Which norm of the parameter vector feeds the regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormForm {
    /// `ℓᵢ = ‖ψᵢ‖²`.
    #[default]
    Squared,
    /// `ℓᵢ = ‖ψᵢ‖`, for ablations.
    Unsquared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    pub ensemble_size: usize,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Linear decay length; unset means 10% of the run's total steps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_decay_steps: Option<u64>,
    pub lambda: f64,
    pub regularizer: RegularizerChoice,
    pub atkinson_epsilon: f64,
    pub atkinson_unit_form: AtkinsonUnitForm,
    pub norm_form: NormForm,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Steps of uniformly random behaviour before learning starts.
    pub exploration_steps: u64,
    /// Gradient-norm clip; non-positive disables.
    pub grad_clip: f64,
    /// Updates between target-network syncs.
    pub target_sync_period: u64,
    pub seed_policy: SeedPolicy,
    pub hidden: Vec<usize>,
    pub eval_episodes: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            algorithm: Algorithm::Maxmin,
            ensemble_size: 2,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            epsilon_decay_steps: None,
            lambda: 0.0,
            regularizer: RegularizerChoice::None,
            atkinson_epsilon: 0.5,
            atkinson_unit_form: AtkinsonUnitForm::GeometricMean,
            norm_form: NormForm::Squared,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-4,
            batch_size: 32,
            buffer_capacity: 100_000,
            exploration_steps: 1_000,
            grad_clip: 5.0,
            target_sync_period: 200,
            seed_policy: SeedPolicy::Independent,
            hidden: vec![64, 64],
            eval_episodes: 10,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.ensemble_size == 0 {
            return fail("ensemble_size must be at least 1".into());
        }
        if !self.algorithm.is_ensemble() && self.ensemble_size != 1 {
            return fail(format!(
                "{} uses a single network; ensemble_size must be 1",
                self.algorithm.label()
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma {} outside [0, 1]", self.gamma));
        }
        for (name, e) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&e) {
                return fail(format!("{name} {e} outside [0, 1]"));
            }
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return fail(format!("lambda must be finite and ≥ 0, got {}", self.lambda));
        }
        if !(self.learning_rate > 0.0) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive".into());
        }
        if self.buffer_capacity < self.batch_size {
            return fail("buffer_capacity must be at least batch_size".into());
        }
        if self.target_sync_period == 0 {
            return fail("target_sync_period must be positive".into());
        }
        if self.eval_episodes == 0 {
            return fail("eval_episodes must be positive".into());
        }
        if self.hidden.contains(&0) {
            return fail("hidden layer widths must be positive".into());
        }
        if self.regularizer != RegularizerChoice::None {
            if !self.algorithm.is_ensemble() {
                return fail(format!(
                    "regularizers apply to ensemble algorithms, not {}",
                    self.algorithm.label()
                ));
            }
            if self.ensemble_size < 2 {
                return fail("a regularizer needs at least 2 ensemble members".into());
            }
        }
        self.regularizer_kind()?;
        Ok(())
    }

    pub fn regularizer_kind(&self) -> Result<Option<RegularizerKind>> {
        Ok(match self.regularizer {
            RegularizerChoice::None => None,
            RegularizerChoice::Atkinson => {
                let mut k = RegularizerKind::atkinson(self.atkinson_epsilon)?;
                if let RegularizerKind::Atkinson { unit_form, .. } = &mut k {
                    *unit_form = self.atkinson_unit_form;
                }
                Some(k)
            }
            RegularizerChoice::Gini => Some(RegularizerKind::Gini),
            RegularizerChoice::Theil => Some(RegularizerKind::Theil),
            RegularizerChoice::Vol => Some(RegularizerKind::VarianceOfLogarithms),
            RegularizerChoice::Meanvector => Some(RegularizerKind::MeanVector),
        })
    }

    /// ε for environment step `step` of a run lasting `total_steps`.
    pub fn epsilon_at(&self, step: u64, total_steps: u64) -> f64 {
        if step < self.exploration_steps {
            return 1.0;
        }
        let decay = self
            .epsilon_decay_steps
            .unwrap_or_else(|| (total_steps / 10).max(1));
        if step >= decay {
            return self.epsilon_end;
        }
        let frac = step as f64 / decay as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}
