//! Pipeline stages, in memory and as file-producing commands.

use std::path::{Path, PathBuf};

use serde::Serialize;

use routekd::data::{
    baseline_distribution, generate_synthetic_vr, load_csv, real_probabilities, sample_basic_data, save_csv,
    Dataset, FeatureScaler, OrdinalSchema, Provenance,
};
use routekd::distill::{distill, pretrain_teacher, train_standalone, TrainedModel};
use routekd::eval::{accuracy, predicted_exit_distribution, Accuracies, ComparisonReport};
use routekd::gmm::{fit_em, records_to_matrix, sample, select_k_by_bic};
use routekd::{Encoded, GmmModel, Mlp};

use crate::config::{RunConfig, Stage};
use crate::error::CliError;
use crate::manifest::{file_sha256, FileDigest, Manifest};

pub const BASIC_CSV: &str = "basic.csv";
pub const VR_CSV: &str = "vr.csv";
pub const GMM_JSON: &str = "gmm.json";
pub const AUGMENTED_CSV: &str = "augmented.csv";
pub const SCALER_JSON: &str = "scaler.json";
pub const TEACHER_JSON: &str = "teacher.json";
pub const TEACHER_TRACE_CSV: &str = "teacher_trace.csv";
pub const STUDENT_JSON: &str = "student.json";
pub const STUDENT_TRACE_CSV: &str = "student_trace.csv";
pub const STANDALONE_JSON: &str = "standalone.json";
pub const STANDALONE_TRACE_CSV: &str = "standalone_trace.csv";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_SVG: &str = "report.svg";
pub const SUMMARY_JSON: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GenBasic,
    GenVr,
    Augment,
    TrainTeacher,
    Distill,
    Eval,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::GenBasic,
        Command::GenVr,
        Command::Augment,
        Command::TrainTeacher,
        Command::Distill,
        Command::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::GenBasic => "gen-basic",
            Command::GenVr => "gen-vr",
            Command::Augment => "augment",
            Command::TrainTeacher => "train-teacher",
            Command::Distill => "distill",
            Command::Eval => "eval",
        }
    }

    pub fn run(self, cfg: &RunConfig) -> Result<Manifest, CliError> {
        match self {
            Command::GenBasic => cmd_gen_basic(cfg),
            Command::GenVr => cmd_gen_vr(cfg),
            Command::Augment => cmd_augment(cfg),
            Command::TrainTeacher => cmd_train_teacher(cfg),
            Command::Distill => cmd_distill(cfg),
            Command::Eval => cmd_eval(cfg),
        }
    }
}

pub fn basic_data(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let dist = baseline_distribution(&cfg.travel_times, cfg.alpha_b, cfg.baseline_transform)?;
    Ok(sample_basic_data(
        &dist,
        cfg.basic.records,
        &cfg.travel_times,
        cfg.stage_seed(Stage::Basic),
    )?)
}

pub fn vr_data(cfg: &RunConfig) -> Result<Dataset, CliError> {
    Ok(generate_synthetic_vr(
        &cfg.vr.scenario_spec,
        cfg.vr.participants,
        cfg.stage_seed(Stage::Vr),
    )?)
}

#[derive(Debug, Clone)]
pub struct Augmentation {
    pub gmm: GmmModel,
    pub k: usize,
    /// `(k, BIC)` for every candidate tried; empty when `k` was fixed.
    pub bic: Vec<(usize, f64)>,
    pub data: Dataset,
}

pub fn augment_data(cfg: &RunConfig, vr: &Dataset) -> Result<Augmentation, CliError> {
    let points = records_to_matrix(vr);
    let em = cfg.em_config();
    let (gmm, k, bic) = match cfg.augment.components {
        Some(k) => (fit_em(&points, k, &em)?.0, k, Vec::new()),
        None => {
            let [lo, hi] = cfg.augment.k_range;
            select_k_by_bic(&points, lo..=hi, &em)?
        }
    };
    let schema = OrdinalSchema::for_travel_times(&cfg.travel_times)?;
    let data = sample(&gmm, cfg.augment.records, &schema, cfg.stage_seed(Stage::Augment))?;
    Ok(Augmentation { gmm, k, bic, data })
}

#[derive(Debug, Clone)]
pub struct TeacherRun {
    /// Fitted on the teacher's training split and shared by every model.
    pub scaler: FeatureScaler,
    pub trained: TrainedModel<f64>,
}

pub fn teacher_run(cfg: &RunConfig, augmented: &Dataset) -> Result<TeacherRun, CliError> {
    let (train, test) = augmented.split(cfg.teacher.train_fraction, cfg.stage_seed(Stage::TeacherSplit))?;
    let scaler = FeatureScaler::fit(&train)?;
    let train: Encoded = scaler.encode_dataset(&train)?;
    let test: Encoded = scaler.encode_dataset(&test)?;
    let trained = pretrain_teacher(&cfg.teacher_architecture()?, &train, Some(&test), &cfg.teacher_training())?;
    Ok(TeacherRun { scaler, trained })
}

/// Basic data split and encoded for the students.
pub fn basic_splits(cfg: &RunConfig, basic: &Dataset, scaler: &FeatureScaler) -> Result<(Encoded, Encoded), CliError> {
    let (train, test) = basic.split(cfg.basic.train_fraction, cfg.stage_seed(Stage::BasicSplit))?;
    Ok((scaler.encode_dataset(&train)?, scaler.encode_dataset(&test)?))
}

#[derive(Debug, Clone)]
pub struct StudentRuns {
    pub distilled: TrainedModel<f64>,
    pub standalone: TrainedModel<f64>,
}

pub fn student_runs(
    cfg: &RunConfig,
    teacher: &Mlp,
    scaler: &FeatureScaler,
    basic: &Dataset,
) -> Result<StudentRuns, CliError> {
    let (train, test) = basic_splits(cfg, basic, scaler)?;
    let arch = cfg.student_architecture()?;
    let dc = cfg.distillation();
    Ok(StudentRuns {
        distilled: distill(teacher, &arch, &train, &test, &dc)?,
        standalone: train_standalone(&arch, &train, &test, &dc)?,
    })
}

/// Accuracies on the basic test split, and the distilled student's predicted
/// exit distribution there, set against the baseline, the reference volumes and
/// the VR corpus.
pub fn build_report(
    cfg: &RunConfig,
    teacher: &Mlp,
    distilled: &Mlp,
    standalone: &Mlp,
    scaler: &FeatureScaler,
    basic: &Dataset,
    vr: &Dataset,
) -> Result<ComparisonReport, CliError> {
    let (_, test) = basic_splits(cfg, basic, scaler)?;
    let accuracies = Accuracies {
        teacher_on_basic: accuracy(teacher, &test)?,
        student_standalone: accuracy(standalone, &test)?,
        distilled: accuracy(distilled, &test)?,
    };
    let baseline = baseline_distribution(&cfg.travel_times, cfg.alpha_b, cfg.baseline_transform)?;
    let model = predicted_exit_distribution(distilled, &test, cfg.evaluation.aggregation)?;
    let reference = real_probabilities(&cfg.reference_volumes)?;
    let vr_empirical = routekd::data::ExitProbabilities::new(vr.exit_frequencies()?)?;
    Ok(ComparisonReport::build(baseline, model, reference, vr_empirical, accuracies)?)
}

/// Headline numbers written next to the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub accuracies: Accuracies,
    pub l1_to_reference: L1Summary,
    pub distilled_best_epoch: usize,
    pub standalone_best_epoch: usize,
    pub distilled_best_test_accuracy: f64,
    pub standalone_best_test_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L1Summary {
    pub baseline: f64,
    pub model: f64,
    pub vr_empirical: f64,
}

impl Summary {
    pub fn new(seed: u64, report: &ComparisonReport, distilled: &TrainedModel<f64>, standalone: &TrainedModel<f64>) -> Self {
        Self {
            seed,
            accuracies: report.accuracies,
            l1_to_reference: L1Summary {
                baseline: report.baseline_l1(),
                model: report.model_l1(),
                vr_empirical: report.vr_l1(),
            },
            distilled_best_epoch: distilled.best_epoch,
            standalone_best_epoch: standalone.best_epoch,
            distilled_best_test_accuracy: distilled.trace.best_test_accuracy().unwrap_or(0.0),
            standalone_best_test_accuracy: standalone.trace.best_test_accuracy().unwrap_or(0.0),
        }
    }
}

/// Everything one seed of the default experiment produces, without touching disk.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub basic: Dataset,
    pub vr: Dataset,
    pub augmentation: Augmentation,
    pub teacher: TeacherRun,
    pub students: StudentRuns,
    pub report: ComparisonReport,
    pub summary: Summary,
}

pub fn run_experiment(cfg: &RunConfig) -> Result<Experiment, CliError> {
    cfg.validate()?;
    let basic = basic_data(cfg)?;
    let vr = vr_data(cfg)?;
    let augmentation = augment_data(cfg, &vr)?;
    let teacher = teacher_run(cfg, &augmentation.data)?;
    let students = student_runs(cfg, &teacher.trained.best, &teacher.scaler, &basic)?;
    let report = build_report(
        cfg,
        &teacher.trained.best,
        &students.distilled.best,
        &students.standalone.best,
        &teacher.scaler,
        &basic,
        &vr,
    )?;
    let summary = Summary::new(cfg.seed, &report, &students.distilled, &students.standalone);
    Ok(Experiment {
        basic,
        vr,
        augmentation,
        teacher,
        students,
        report,
        summary,
    })
}

struct Run<'a> {
    cfg: &'a RunConfig,
    manifest: Manifest,
}

impl<'a> Run<'a> {
    fn start(cfg: &'a RunConfig, command: Command, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
        Ok(Self {
            cfg,
            manifest: Manifest::new(command.name(), seed, &cfg.to_json()),
        })
    }

    fn path(&self, artifact: &str) -> PathBuf {
        self.cfg.out_dir.join(artifact)
    }

    /// Locates an input written by `producer`, checking it against that
    /// command's manifest.
    fn input(&mut self, artifact: &str, producer: Command) -> Result<PathBuf, CliError> {
        let path = self.path(artifact);
        if !path.exists() {
            return Err(CliError::MissingPrerequisite {
                artifact: path,
                step: producer.name(),
            });
        }
        let sha256 = file_sha256(&path)?;
        if let Some(m) = Manifest::load(&self.cfg.out_dir, producer.name())? {
            if m.output(artifact).is_some_and(|o| o.sha256 != sha256) {
                return Err(CliError::StaleInput {
                    artifact: path,
                    step: producer.name(),
                });
            }
        }
        self.manifest.inputs.push(FileDigest {
            artifact: artifact.to_owned(),
            sha256,
            rows: None,
        });
        Ok(path)
    }

    fn record(&mut self, artifact: &str, rows: Option<usize>) -> Result<(), CliError> {
        let sha256 = file_sha256(&self.path(artifact))?;
        self.manifest.outputs.push(FileDigest {
            artifact: artifact.to_owned(),
            sha256,
            rows,
        });
        Ok(())
    }

    fn write_dataset(&mut self, artifact: &str, ds: &Dataset) -> Result<(), CliError> {
        save_csv(ds, &self.path(artifact))?;
        self.record(artifact, Some(ds.len()))
    }

    fn write_text(&mut self, artifact: &str, text: &str) -> Result<(), CliError> {
        let path = self.path(artifact);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.record(artifact, None)
    }

    fn trained(&mut self, model: &str, trace: &str, t: &TrainedModel<f64>) -> Result<(), CliError> {
        t.best.save(&self.path(model))?;
        self.record(model, None)?;
        t.trace.save_csv(&self.path(trace))?;
        self.record(trace, Some(t.trace.epochs.len()))
    }

    fn finish(self) -> Result<Manifest, CliError> {
        self.manifest.save(&self.cfg.out_dir)?;
        Ok(self.manifest)
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Core(e.into()))
}

pub fn cmd_gen_basic(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let mut run = Run::start(cfg, Command::GenBasic, cfg.stage_seed(Stage::Basic))?;
    let ds = basic_data(cfg)?;
    run.write_dataset(BASIC_CSV, &ds)?;
    run.finish()
}

pub fn cmd_gen_vr(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let mut run = Run::start(cfg, Command::GenVr, cfg.stage_seed(Stage::Vr))?;
    let ds = vr_data(cfg)?;
    run.write_dataset(VR_CSV, &ds)?;
    run.finish()
}

pub fn cmd_augment(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let mut run = Run::start(cfg, Command::Augment, cfg.stage_seed(Stage::Augment))?;
    let vr = load_csv(&run.input(VR_CSV, Command::GenVr)?, Provenance::SyntheticVr)?;
    let aug = augment_data(cfg, &vr)?;
    log::info!("mixture has {} components; BIC {:?}", aug.k, aug.bic);
    aug.gmm.save(&run.path(GMM_JSON))?;
    run.record(GMM_JSON, None)?;
    run.write_dataset(AUGMENTED_CSV, &aug.data)?;
    run.finish()
}

pub fn cmd_train_teacher(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let mut run = Run::start(cfg, Command::TrainTeacher, cfg.stage_seed(Stage::Teacher))?;
    let augmented = load_csv(&run.input(AUGMENTED_CSV, Command::Augment)?, Provenance::Vr)?;
    let t = teacher_run(cfg, &augmented)?;
    let scaler = serde_json::to_string_pretty(&t.scaler).expect("scaler serializes") + "\n";
    run.write_text(SCALER_JSON, &scaler)?;
    run.trained(TEACHER_JSON, TEACHER_TRACE_CSV, &t.trained)?;
    run.finish()
}

pub fn cmd_distill(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let mut run = Run::start(cfg, Command::Distill, cfg.stage_seed(Stage::Student))?;
    let teacher = Mlp::load(&run.input(TEACHER_JSON, Command::TrainTeacher)?)?;
    let scaler: FeatureScaler = load_json(&run.input(SCALER_JSON, Command::TrainTeacher)?)?;
    let basic = load_csv(&run.input(BASIC_CSV, Command::GenBasic)?, Provenance::Basic)?;
    let s = student_runs(cfg, &teacher, &scaler, &basic)?;
    run.trained(STUDENT_JSON, STUDENT_TRACE_CSV, &s.distilled)?;
    run.trained(STANDALONE_JSON, STANDALONE_TRACE_CSV, &s.standalone)?;
    run.finish()
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let mut run = Run::start(cfg, Command::Eval, cfg.seed)?;
    let distilled = Mlp::load(&run.input(STUDENT_JSON, Command::Distill)?)?;
    let standalone = Mlp::load(&run.input(STANDALONE_JSON, Command::Distill)?)?;
    let distilled_trace = run.input(STUDENT_TRACE_CSV, Command::Distill)?;
    let standalone_trace = run.input(STANDALONE_TRACE_CSV, Command::Distill)?;
    let teacher = Mlp::load(&run.input(TEACHER_JSON, Command::TrainTeacher)?)?;
    let scaler: FeatureScaler = load_json(&run.input(SCALER_JSON, Command::TrainTeacher)?)?;
    let basic = load_csv(&run.input(BASIC_CSV, Command::GenBasic)?, Provenance::Basic)?;
    let vr = load_csv(&run.input(VR_CSV, Command::GenVr)?, Provenance::SyntheticVr)?;
    let report = build_report(cfg, &teacher, &distilled, &standalone, &scaler, &basic, &vr)?;

    report.save_csv(&run.path(REPORT_CSV))?;
    run.record(REPORT_CSV, Some(16 + 3 + 3))?;
    report.save_svg(&run.path(REPORT_SVG))?;
    run.record(REPORT_SVG, None)?;

    let best = |path: &Path| -> Result<(usize, f64), CliError> {
        let trace = routekd::distill::TrainingTrace::load_csv(path)?;
        Ok((
            trace.best_epoch().unwrap_or(0),
            trace.best_test_accuracy().unwrap_or(0.0),
        ))
    };
    let (d_epoch, d_acc) = best(&distilled_trace)?;
    let (s_epoch, s_acc) = best(&standalone_trace)?;
    let summary = Summary {
        seed: cfg.seed,
        accuracies: report.accuracies,
        l1_to_reference: L1Summary {
            baseline: report.baseline_l1(),
            model: report.model_l1(),
            vr_empirical: report.vr_l1(),
        },
        distilled_best_epoch: d_epoch,
        standalone_best_epoch: s_epoch,
        distilled_best_test_accuracy: d_acc,
        standalone_best_test_accuracy: s_acc,
    };
    run.write_text(SUMMARY_JSON, &(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"))?;
    run.finish()
}

/// Every command in order.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<Manifest>, CliError> {
    cfg.validate()?;
    Command::ALL.iter().map(|c| c.run(cfg)).collect()
}

/// Independent pipelines, one per seed, each in `<out_dir>/seed-<seed>`,
/// run on separate threads.
pub fn run_sweep(cfg: &RunConfig, seeds: &[u64]) -> Result<Vec<PathBuf>, CliError> {
    let configs: Vec<RunConfig> = seeds
        .iter()
        .map(|&s| RunConfig {
            seed: s,
            out_dir: cfg.out_dir.join(format!("seed-{s}")),
            ..cfg.clone()
        })
        .collect();
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    let results: Vec<Result<Vec<Manifest>, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs.iter().map(|c| scope.spawn(move || run_all(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("pipeline thread panicked"))
            .collect()
    });
    for r in results {
        r?;
    }
    Ok(configs.into_iter().map(|c| c.out_dir).collect())
}
