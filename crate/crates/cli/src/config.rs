//! TOML run configuration.
//!
//! Every section except `[paths]` is optional and falls back to the wide
//! 50-level defaults (sigma 10 -> 0.01, 100 steps per level, epsilon 2.4e-6,
//! batch size 128, 200 epochs, lr 0.001 decayed by 0.95 per epoch). Desk-
//! scale runs override them with smaller schedules.
//!
//! ```toml
//! [model]
//! num_layers = 4
//! hidden_dim = 256
//! max_atomic_number = 10
//!
//! [schedule]
//! sigma_max = 10.0
//! sigma_min = 0.01
//! num_levels = 50
//!
//! [training]
//! epochs = 200
//! batch_size = 128
//! initial_lr = 0.001
//! lr_decay_rate = 0.95
//! seed = 0
//!
//! [langevin]
//! epsilon = 2.4e-6
//! steps_per_level = 100
//! prior_std = 1.0
//! clamp_distance = 0.001
//!
//! [paths]
//! dataset = "train.jsonl"
//! checkpoint = "model.ckpt"
//! loss_log = "loss.log"
//! ```

use std::path::{Path, PathBuf};

use gradconf_core::dsm::{make_schedule, NoiseSchedule, TrainConfig};
use gradconf_core::sampler::LangevinConfig;
use gradconf_core::scorenet::ScoreNetHyper;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub langevin: LangevinSection,
    #[serde(default)]
    pub paths: PathsSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "defaults::num_layers")]
    pub num_layers: usize,
    #[serde(default = "defaults::hidden_dim")]
    pub hidden_dim: usize,
    #[serde(default = "defaults::max_atomic_number")]
    pub max_atomic_number: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default = "defaults::sigma_max")]
    pub sigma_max: f64,
    #[serde(default = "defaults::sigma_min")]
    pub sigma_min: f64,
    #[serde(default = "defaults::num_levels")]
    pub num_levels: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::initial_lr")]
    pub initial_lr: f64,
    #[serde(default = "defaults::lr_decay_rate")]
    pub lr_decay_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LangevinSection {
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    #[serde(default = "defaults::steps_per_level")]
    pub steps_per_level: usize,
    #[serde(default = "defaults::prior_std")]
    pub prior_std: f64,
    #[serde(default = "defaults::clamp_distance")]
    pub clamp_distance: f64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub loss_log: Option<PathBuf>,
}

mod defaults {
    pub fn num_layers() -> usize {
        4
    }
    pub fn hidden_dim() -> usize {
        256
    }
    pub fn max_atomic_number() -> usize {
        10
    }
    pub fn sigma_max() -> f64 {
        10.0
    }
    pub fn sigma_min() -> f64 {
        0.01
    }
    pub fn num_levels() -> usize {
        50
    }
    pub fn epochs() -> usize {
        200
    }
    pub fn batch_size() -> usize {
        128
    }
    pub fn initial_lr() -> f64 {
        0.001
    }
    pub fn lr_decay_rate() -> f64 {
        0.95
    }
    pub fn epsilon() -> f64 {
        2.4e-6
    }
    pub fn steps_per_level() -> usize {
        100
    }
    pub fn prior_std() -> f64 {
        1.0
    }
    pub fn clamp_distance() -> f64 {
        1e-3
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            num_layers: defaults::num_layers(),
            hidden_dim: defaults::hidden_dim(),
            max_atomic_number: defaults::max_atomic_number(),
        }
    }
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection {
            sigma_max: defaults::sigma_max(),
            sigma_min: defaults::sigma_min(),
            num_levels: defaults::num_levels(),
        }
    }
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            epochs: defaults::epochs(),
            batch_size: defaults::batch_size(),
            initial_lr: defaults::initial_lr(),
            lr_decay_rate: defaults::lr_decay_rate(),
            seed: 0,
        }
    }
}

impl Default for LangevinSection {
    fn default() -> Self {
        LangevinSection {
            epsilon: defaults::epsilon(),
            steps_per_level: defaults::steps_per_level(),
            prior_std: defaults::prior_std(),
            clamp_distance: defaults::clamp_distance(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn hyper(&self) -> ScoreNetHyper {
        ScoreNetHyper::new(
            self.model.num_layers,
            self.model.hidden_dim,
            self.model.max_atomic_number,
        )
    }

    pub fn noise_schedule(&self) -> Result<NoiseSchedule, CliError> {
        make_schedule(
            self.schedule.sigma_max,
            self.schedule.sigma_min,
            self.schedule.num_levels,
        )
        .map_err(CliError::compute)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            batch_size: self.training.batch_size,
            initial_lr: self.training.initial_lr,
            lr_decay_rate: self.training.lr_decay_rate,
            seed: self.training.seed,
        }
    }

    pub fn langevin_config(&self, seed: u64) -> LangevinConfig {
        LangevinConfig {
            epsilon: self.langevin.epsilon,
            steps_per_level: self.langevin.steps_per_level,
            prior_std: self.langevin.prior_std,
            seed,
            clamp_distance: self.langevin.clamp_distance,
        }
    }
}
