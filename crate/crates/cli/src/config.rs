//! Run configuration: one JSON document with a section per pipeline stage.

use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use routekd::data::{BaselineTransform, ScenarioSpec, ALPHA_B, DEFAULT_TRAVEL_TIMES};
use routekd::distill::{DistillationConfig, TrainConfig, DEFAULT_STUDENT, DEFAULT_TEACHER};
use routekd::eval::Aggregation;
use routekd::gmm::EmConfig;
use routekd::nn::{HiddenStack, LayerSpec};
use routekd::NUM_EXITS;

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// Environment variable naming the config file when `--config` is absent.
pub const CONFIG_ENV: &str = "ROUTEKD_CONFIG";

/// Exit volumes of the synthetic reference: the default scenario generator's
/// population shares scaled to 10,000 vehicles.
pub const DEFAULT_REFERENCE_VOLUMES: [u64; 4] = [3394, 2340, 2054, 2213];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Directory receiving every artifact.
    pub out_dir: PathBuf,
    /// Master seed; each stage derives its own stream from it.
    pub seed: u64,
    pub travel_times: [f64; 4],
    pub alpha_b: f64,
    pub baseline_transform: BaselineTransform,
    pub basic: BasicSection,
    pub vr: VrSection,
    pub augment: AugmentSection,
    pub teacher: TeacherSection,
    pub student: StudentSection,
    pub evaluation: EvalSection,
    pub reference_volumes: [u64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasicSection {
    pub records: usize,
    pub train_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VrSection {
    pub participants: usize,
    pub scenario_spec: ScenarioSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSection {
    pub records: usize,
    /// Fixed component count; when absent `k` is chosen by BIC over `k_range`.
    #[serde(default)]
    pub components: Option<usize>,
    pub k_range: [usize; 2],
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherSection {
    /// Hidden layers in `10n-0.25DP-30n` notation; the 4-way head is implied.
    pub architecture: String,
    pub train_fraction: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudentSection {
    pub architecture: String,
    pub alpha: f64,
    pub beta: f64,
    pub temperature: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub aggregation: Aggregation,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            out_dir: PathBuf::from("routekd-out"),
            seed: 7,
            travel_times: DEFAULT_TRAVEL_TIMES,
            alpha_b: ALPHA_B,
            baseline_transform: BaselineTransform::Inverse,
            basic: BasicSection {
                records: 10_000,
                train_fraction: 0.8,
            },
            vr: VrSection {
                participants: 41,
                scenario_spec: ScenarioSpec::default(),
            },
            augment: AugmentSection {
                records: 10_000,
                components: None,
                k_range: [1, 10],
                max_iter: 200,
                tol: 1e-6,
            },
            teacher: TeacherSection {
                architecture: DEFAULT_TEACHER.to_owned(),
                train_fraction: 0.8,
                epochs: 20,
                batch_size: 32,
                learning_rate: 0.01,
                momentum: None,
            },
            student: StudentSection {
                architecture: DEFAULT_STUDENT.to_owned(),
                alpha: 0.5,
                beta: 0.5,
                temperature: 2.0,
                epochs: 10,
                batch_size: 32,
                learning_rate: 0.01,
                momentum: None,
            },
            evaluation: EvalSection {
                aggregation: Aggregation::ArgmaxCount,
            },
            reference_volumes: DEFAULT_REFERENCE_VOLUMES,
        }
    }
}

/// Independent seed streams for each stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Basic = 1,
    BasicSplit,
    Vr,
    Gmm,
    Augment,
    TeacherSplit,
    Teacher,
    Student,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn stage_seed(&self, stage: Stage) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stage as u64);
        rng.next_u64()
    }

    pub fn teacher_architecture(&self) -> Result<Vec<LayerSpec>, CliError> {
        parse_architecture(&self.teacher.architecture, "teacher")
    }

    pub fn student_architecture(&self) -> Result<Vec<LayerSpec>, CliError> {
        parse_architecture(&self.student.architecture, "student")
    }

    pub fn em_config(&self) -> EmConfig {
        EmConfig {
            max_iter: self.augment.max_iter,
            tol: self.augment.tol,
            seed: self.stage_seed(Stage::Gmm),
        }
    }

    pub fn teacher_training(&self) -> TrainConfig {
        let t = &self.teacher;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            seed: self.stage_seed(Stage::Teacher),
        }
    }

    pub fn distillation(&self) -> DistillationConfig {
        let s = &self.student;
        DistillationConfig {
            alpha: s.alpha,
            beta: s.beta,
            temperature: s.temperature,
            epochs: s.epochs,
            batch_size: s.batch_size,
            learning_rate: s.learning_rate,
            momentum: s.momentum,
            seed: self.stage_seed(Stage::Student),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if self.out_dir.as_os_str().is_empty() {
            return bad("out_dir is empty".into());
        }
        if let Some(parent) = self.out_dir.parent().filter(|p| !p.as_os_str().is_empty()) {
            if !parent.exists() {
                return bad(format!("parent of out_dir {} does not exist", self.out_dir.display()));
            }
        }
        routekd::data::baseline_distribution(&self.travel_times, self.alpha_b, self.baseline_transform)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.basic.records < 2 {
            return bad("basic.records must be at least 2 so both splits are nonempty".into());
        }
        for (name, f) in [("basic", self.basic.train_fraction), ("teacher", self.teacher.train_fraction)] {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("{name}.train_fraction must lie in (0, 1), got {f}"));
            }
        }
        if self.vr.participants == 0 {
            return bad("vr.participants must be at least 1".into());
        }
        self.vr.scenario_spec.validate().map_err(|e| CliError::Config(format!("vr.scenario_spec: {e}")))?;
        if self.vr.scenario_spec.travel_times != self.travel_times {
            return bad("vr.scenario_spec.travel_times must equal travel_times".into());
        }
        let a = &self.augment;
        if a.records == 0 {
            return bad("augment.records must be at least 1".into());
        }
        if a.k_range[0] == 0 || a.k_range[0] > a.k_range[1] {
            return bad(format!("augment.k_range {:?} is not a range of positive counts", a.k_range));
        }
        if a.components == Some(0) {
            return bad("augment.components must be at least 1".into());
        }
        if !(a.tol >= 0.0) || a.max_iter == 0 {
            return bad("augment needs max_iter >= 1 and a nonnegative tol".into());
        }
        self.teacher_architecture()?;
        self.student_architecture()?;
        self.teacher_training().validate().map_err(|e| CliError::Config(format!("teacher: {e}")))?;
        self.distillation().validate().map_err(|e| CliError::Config(format!("student: {e}")))?;
        routekd::data::real_probabilities(&self.reference_volumes)
            .map_err(|e| CliError::Config(format!("reference_volumes: {e}")))?;
        Ok(())
    }
}

fn parse_architecture(s: &str, role: &str) -> Result<Vec<LayerSpec>, CliError> {
    let stack: HiddenStack = s
        .parse()
        .map_err(|e| CliError::Config(format!("{role}.architecture: {e}")))?;
    Ok(stack.with_head(NUM_EXITS))
}
