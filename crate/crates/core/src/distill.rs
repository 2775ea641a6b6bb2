//! Teacher pretraining and student training under the combined hard/soft
//! distillation loss.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Encoded;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{cross_entropy, one_hot, softmax, HiddenStack, LayerSpec, Mlp, Mode, Sgd, SgdConfig};
use crate::scalar::Scalar;
use crate::NUM_EXITS;

/// Hidden layers of the default teacher.
pub const DEFAULT_TEACHER: &str = "10n-0.25DP-30n-0.35DP-20n-0.25DP-50n-0.45DP";
/// Hidden layers of the default student: dense 10, then dense 20 with batch norm.
pub const DEFAULT_STUDENT: &str = "10n-20n-BN";

/// Shuffle stream, kept apart from weight initialization and dropout.
const SHUFFLE_STREAM: u64 = 1 << 32;

pub fn default_teacher() -> Vec<LayerSpec> {
    DEFAULT_TEACHER.parse::<HiddenStack>().expect("valid notation").with_head(NUM_EXITS)
}

pub fn default_student() -> Vec<LayerSpec> {
    DEFAULT_STUDENT.parse::<HiddenStack>().expect("valid notation").with_head(NUM_EXITS)
}

/// Plain supervised training settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("training needs at least one epoch"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        Sgd::<f64>::new(self.sgd()).map(|_| ())
    }

    fn sgd(&self) -> SgdConfig {
        SgdConfig {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistillationConfig {
    /// Weight of the hard-label loss.
    pub alpha: f64,
    /// Weight of the soft-target loss.
    pub beta: f64,
    pub temperature: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: Option<f64>,
    pub seed: u64,
}

impl Default for DistillationConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            alpha: 0.5,
            beta: 0.5,
            temperature: 2.0,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            seed: t.seed,
        }
    }
}

impl DistillationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !(self.beta >= 0.0) || !(self.alpha + self.beta > 0.0) {
            return Err(Error::invalid(format!(
                "loss weights must be nonnegative with a positive sum, got alpha {} beta {}",
                self.alpha, self.beta
            )));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::invalid(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        self.training().validate()
    }

    pub fn training(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            seed: self.seed,
        }
    }

    /// The same run with the soft term switched off.
    pub fn standalone(&self) -> Self {
        Self { beta: 0.0, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillationLoss<T> {
    pub hard: T,
    pub soft: T,
    /// `alpha * hard + beta * soft`.
    pub total: T,
    /// d total / d student logits.
    pub gradient: Matrix<T>,
}

/// `alpha * CE(softmax(s), onehot(y)) + beta * CE(softmax(s / T), softmax(t / T))`.
///
/// The teacher logits are treated as constants.
pub fn distillation_loss<T: Scalar>(
    student_logits: &Matrix<T>,
    teacher_logits: &Matrix<T>,
    labels: &[usize],
    alpha: f64,
    beta: f64,
    temperature: f64,
) -> Result<DistillationLoss<T>> {
    if student_logits.shape() != teacher_logits.shape() {
        return Err(Error::shape(format!(
            "student logits are {:?}, teacher logits are {:?}",
            student_logits.shape(),
            teacher_logits.shape()
        )));
    }
    let targets = softmax(teacher_logits, temperature)?;
    combined_loss(student_logits, Some(&targets), labels, alpha, beta, temperature)
}

fn combined_loss<T: Scalar>(
    logits: &Matrix<T>,
    soft_targets: Option<&Matrix<T>>,
    labels: &[usize],
    alpha: f64,
    beta: f64,
    temperature: f64,
) -> Result<DistillationLoss<T>> {
    if labels.len() != logits.rows() {
        return Err(Error::shape(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    let n = T::of(logits.rows() as f64);
    let (a, b, t) = (T::of(alpha), T::of(beta), T::of(temperature));

    let hard_targets = one_hot(labels, logits.cols())?;
    let p1 = softmax(logits, 1.0)?;
    let hard = cross_entropy(&p1, &hard_targets)?;
    let mut gradient = p1;
    for (g, &y) in gradient.as_mut_slice().iter_mut().zip(hard_targets.as_slice()) {
        *g = a * (*g - y) / n;
    }

    let mut soft = T::zero();
    if let Some(q) = soft_targets {
        let pt = softmax(logits, temperature)?;
        soft = cross_entropy(&pt, q)?;
        for ((g, &p), &qv) in gradient.as_mut_slice().iter_mut().zip(pt.as_slice()).zip(q.as_slice()) {
            *g += b * (p - qv) / (t * n);
        }
    }
    Ok(DistillationLoss {
        hard,
        soft,
        total: a * hard + b * soft,
        gradient,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub hard_loss: f64,
    pub soft_loss: f64,
    pub total_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochStats>,
}

pub const TRACE_HEADER: &str = "epoch,hard_loss,soft_loss,total_loss,train_acc,test_acc";

impl TrainingTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(TRACE_HEADER.split(','))
            .and_then(|_| {
                for e in &self.epochs {
                    w.serialize(e)?;
                }
                w.flush().map_err(csv::Error::from)
            })
            .map_err(|e| Error::invalid(format!("writing trace: {e}")))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r
            .headers()
            .map_err(|e| parse_error(0, e.to_string()))?
            .iter()
            .collect::<Vec<_>>()
            .join(",");
        if header != TRACE_HEADER {
            return Err(parse_error(0, format!("unexpected header `{header}`")));
        }
        let mut epochs = Vec::new();
        for (i, row) in r.deserialize().enumerate() {
            epochs.push(row.map_err(|e| parse_error(i + 1, e.to_string()))?);
        }
        Ok(Self { epochs })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f)
    }

    /// Epoch (1-based) with the highest test accuracy; ties go to the earliest.
    pub fn best_epoch(&self) -> Option<usize> {
        let mut best: Option<&EpochStats> = None;
        for e in &self.epochs {
            if best.is_none_or(|b| e.test_acc > b.test_acc) {
                best = Some(e);
            }
        }
        best.map(|e| e.epoch)
    }

    pub fn best_test_accuracy(&self) -> Option<f64> {
        self.epochs.iter().map(|e| e.test_acc).fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }
}

fn parse_error(row: usize, message: String) -> Error {
    Error::Parse {
        row,
        column: String::new(),
        message,
    }
}

/// A finished run: the model after the last epoch, the snapshot from the epoch
/// with the best test accuracy, and the per-epoch trace. Both models are in
/// eval mode.
#[derive(Debug, Clone)]
pub struct TrainedModel<T> {
    pub last: Mlp<T>,
    pub best: Mlp<T>,
    pub best_epoch: usize,
    pub trace: TrainingTrace,
}

/// Fraction of rows whose argmax logit (lowest index on ties) equals the label.
pub(crate) fn encoded_accuracy<T: Scalar>(model: &Mlp<T>, data: &Encoded<T>) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("accuracy of an empty dataset"));
    }
    let pred = model.infer(&data.features)?.argmax_rows();
    let hits = pred.iter().zip(&data.labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / data.len() as f64)
}

fn check_fit<T: Scalar>(model: &Mlp<T>, data: &Encoded<T>, role: &str) -> Result<()> {
    if model.input_dim() != data.width() {
        return Err(Error::invalid(format!(
            "{role} takes {} inputs but the data has {} features",
            model.input_dim(),
            data.width()
        )));
    }
    if model.output_dim() != NUM_EXITS {
        return Err(Error::invalid(format!(
            "{role} has {} outputs, expected {NUM_EXITS}",
            model.output_dim()
        )));
    }
    Ok(())
}

struct Objective<'a, T> {
    teacher: Option<&'a Mlp<T>>,
    alpha: f64,
    beta: f64,
    temperature: f64,
}

fn train_loop<T: Scalar>(
    mut model: Mlp<T>,
    objective: &Objective<'_, T>,
    train: &Encoded<T>,
    test: Option<&Encoded<T>>,
    config: &TrainConfig,
) -> Result<TrainedModel<T>> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let mut sgd = Sgd::new(config.sgd())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut trace = TrainingTrace::default();
    let mut best: Option<(Mlp<T>, f64, usize)> = None;

    for epoch in 1..=config.epochs {
        model.set_mode(Mode::Train);
        order.shuffle(&mut rng);
        let (mut hard, mut soft, mut total) = (0.0, 0.0, 0.0);
        for chunk in order.chunks(config.batch_size) {
            let (x, labels) = train.batch(chunk);
            let logits = model.forward(&x)?;
            let targets = match objective.teacher {
                Some(t) => Some(softmax(&t.infer(&x)?, objective.temperature)?),
                None => None,
            };
            let loss = combined_loss(
                &logits,
                targets.as_ref(),
                &labels,
                objective.alpha,
                objective.beta,
                objective.temperature,
            )?;
            let grads = model.backward(&loss.gradient)?;
            sgd.step(&mut model, &grads)?;
            let w = chunk.len() as f64;
            hard += loss.hard.as_f64() * w;
            soft += loss.soft.as_f64() * w;
            total += loss.total.as_f64() * w;
        }
        model.set_mode(Mode::Eval);
        let n = train.len() as f64;
        let train_acc = encoded_accuracy(&model, train)?;
        let test_acc = match test {
            Some(t) => encoded_accuracy(&model, t)?,
            None => train_acc,
        };
        let stats = EpochStats {
            epoch,
            hard_loss: hard / n,
            soft_loss: soft / n,
            total_loss: total / n,
            train_acc,
            test_acc,
        };
        if !stats.total_loss.is_finite() {
            return Err(Error::invalid(format!("training diverged at epoch {epoch}")));
        }
        log::debug!(
            "epoch {epoch}: loss {:.5} train {:.4} test {:.4}",
            stats.total_loss,
            train_acc,
            test_acc
        );
        trace.epochs.push(stats);
        if best.as_ref().is_none_or(|(_, acc, _)| test_acc > *acc) {
            best = Some((model.clone(), test_acc, epoch));
        }
    }
    let (best, _, best_epoch) = best.expect("at least one epoch");
    Ok(TrainedModel {
        last: model,
        best,
        best_epoch,
        trace,
    })
}

/// Trains a fresh network on hard labels only.
pub fn pretrain_teacher<T: Scalar>(
    architecture: &[LayerSpec],
    train: &Encoded<T>,
    test: Option<&Encoded<T>>,
    config: &TrainConfig,
) -> Result<TrainedModel<T>> {
    config.validate()?;
    let model = Mlp::new(train.width(), architecture, config.seed)?;
    check_fit(&model, train, "teacher")?;
    let objective = Objective {
        teacher: None,
        alpha: 1.0,
        beta: 0.0,
        temperature: 1.0,
    };
    train_loop(model, &objective, train, test, config)
}

/// Trains a fresh student against hard labels and the teacher's softened
/// outputs. The teacher is only read, always with inference semantics.
pub fn distill<T: Scalar>(
    teacher: &Mlp<T>,
    student_architecture: &[LayerSpec],
    train: &Encoded<T>,
    test: &Encoded<T>,
    config: &DistillationConfig,
) -> Result<TrainedModel<T>> {
    config.validate()?;
    if teacher.mode() != Mode::Eval {
        return Err(Error::invalid("teacher must be trained and in eval mode"));
    }
    check_fit(teacher, train, "teacher")?;
    let student = Mlp::new(train.width(), student_architecture, config.seed)?;
    check_fit(&student, train, "student")?;
    let objective = Objective {
        teacher: Some(teacher),
        alpha: config.alpha,
        beta: config.beta,
        temperature: config.temperature,
    };
    train_loop(student, &objective, train, Some(test), &config.training())
}

/// The student trained on `alpha`-weighted hard labels alone, with the same
/// seed, batches and updates as [`distill`] would use.
pub fn train_standalone<T: Scalar>(
    student_architecture: &[LayerSpec],
    train: &Encoded<T>,
    test: &Encoded<T>,
    config: &DistillationConfig,
) -> Result<TrainedModel<T>> {
    let config = config.standalone();
    config.validate()?;
    let student = Mlp::new(train.width(), student_architecture, config.seed)?;
    check_fit(&student, train, "student")?;
    let objective = Objective {
        teacher: None,
        alpha: config.alpha,
        beta: 0.0,
        temperature: config.temperature,
    };
    train_loop(student, &objective, train, Some(test), &config.training())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{compare_gradients, relative_error};
    use rand::Rng;

    fn random_logits(rows: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..rows * 4).map(|_| rng.random_range(-3.0..3.0)).collect();
        Matrix::from_vec(rows, 4, v).unwrap()
    }

    #[test]
    fn zero_beta_is_scaled_hard_loss() {
        let s = random_logits(6, 1);
        let t = random_logits(6, 2);
        let y = [0, 1, 2, 3, 1, 2];
        let l = distillation_loss(&s, &t, &y, 0.7, 0.0, 2.0).unwrap();
        let hard = cross_entropy(&softmax(&s, 1.0).unwrap(), &one_hot(&y, 4).unwrap()).unwrap();
        assert_eq!(l.total, 0.7 * hard);
        assert_eq!(l.hard, hard);
    }

    #[test]
    fn parts_add_up() {
        let s = random_logits(5, 3);
        let t = random_logits(5, 4);
        let y = [3, 3, 0, 1, 2];
        let l = distillation_loss(&s, &t, &y, 0.3, 0.9, 3.0).unwrap();
        let soft = cross_entropy(&softmax(&s, 3.0).unwrap(), &softmax(&t, 3.0).unwrap()).unwrap();
        assert_eq!(l.soft, soft);
        assert_eq!(l.total, 0.3 * l.hard + 0.9 * soft);
        assert!(l.total >= 0.0);
    }

    #[test]
    fn self_distillation_is_a_fixed_point() {
        let z = random_logits(8, 5);
        let y = [0; 8];
        let l = distillation_loss(&z, &z, &y, 0.0, 1.0, 2.0).unwrap();
        assert!(l.gradient.as_slice().iter().all(|g| g.abs() < 1e-10));
        let q = softmax(&z, 2.0).unwrap();
        let entropy: f64 = -q.as_slice().iter().map(|p| p * p.ln()).sum::<f64>() / 8.0;
        assert!((l.soft - entropy).abs() < 1e-12);
    }

    #[test]
    fn logit_gradient_matches_finite_differences() {
        let s = random_logits(4, 6);
        let t = random_logits(4, 7);
        let y = [2, 0, 3, 1];
        let l = distillation_loss(&s, &t, &y, 0.5, 0.5, 2.0).unwrap();
        let h = 1e-6;
        for i in 0..16 {
            let mut up = s.clone();
            up.as_mut_slice()[i] += h;
            let mut down = s.clone();
            down.as_mut_slice()[i] -= h;
            let f = |m: &Matrix<f64>| distillation_loss(m, &t, &y, 0.5, 0.5, 2.0).unwrap().total;
            let num = (f(&up) - f(&down)) / (2.0 * h);
            assert!((num - l.gradient.as_slice()[i]).abs() < 1e-4, "{i}");
        }
    }

    #[test]
    fn loss_rejects_mismatched_shapes() {
        let s = random_logits(3, 1);
        let t = random_logits(2, 1);
        assert!(matches!(distillation_loss(&s, &t, &[0, 0, 0], 0.5, 0.5, 2.0), Err(Error::Shape(_))));
        assert!(distillation_loss(&s, &s, &[0, 0], 0.5, 0.5, 2.0).is_err());
    }

    #[test]
    fn student_parameter_gradients_match_finite_differences() {
        let arch = default_student();
        let model = Mlp::<f64>::new(12, &arch, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = Matrix::from_vec(6, 12, (0..72).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let t = random_logits(6, 11);
        let y = [0, 1, 2, 3, 0, 1];
        let (a, n) = compare_gradients(&model, &x, 3, 1e-5, |z| {
            let l = distillation_loss(z, &t, &y, 0.5, 0.5, 2.0)?;
            Ok((l.total, l.gradient))
        })
        .unwrap();
        for (i, (a, n)) in a.iter().zip(&n).enumerate() {
            assert!(relative_error(*a, *n, 1e-6) < 1e-4, "param {i}: {a} vs {n}");
        }
    }

    fn toy(n: usize, seed: u64) -> Encoded<f64> {
        // two informative features, labels by quadrant-free linear rule
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            f.extend([a, b]);
            labels.push(if a + 0.5 * b > 0.0 { 3 } else { 0 });
        }
        Encoded::new(Matrix::from_vec(n, 2, f).unwrap(), labels).unwrap()
    }

    fn small_net() -> Vec<LayerSpec> {
        "8n".parse::<HiddenStack>().unwrap().with_head(4)
    }

    #[test]
    fn single_class_is_learned_quickly() {
        let data = Encoded::new(Matrix::filled(50, 2, 0.5), vec![1; 50]).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 10,
            learning_rate: 0.1,
            ..TrainConfig::default()
        };
        let out = pretrain_teacher(&small_net(), &data, None, &cfg).unwrap();
        assert_eq!(out.trace.epochs.last().unwrap().train_acc, 1.0);
        assert_eq!(out.last.mode(), Mode::Eval);
    }

    #[test]
    fn separable_toy_data() {
        let train = toy(800, 1);
        let test = toy(200, 2);
        let cfg = TrainConfig {
            epochs: 20,
            batch_size: 16,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let out = pretrain_teacher(&small_net(), &train, Some(&test), &cfg).unwrap();
        assert!(out.trace.best_test_accuracy().unwrap() >= 0.95, "{:?}", out.trace.epochs.last());
        assert_eq!(out.trace.epochs.len(), 20);
    }

    #[test]
    fn zero_epochs_rejected() {
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(pretrain_teacher(&small_net(), &toy(10, 1), None, &cfg).is_err());
        let bad = DistillationConfig {
            alpha: 0.0,
            beta: 0.0,
            ..DistillationConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let three = "8n".parse::<HiddenStack>().unwrap().with_head(3);
        assert!(pretrain_teacher(&three, &toy(10, 1), None, &TrainConfig::default()).is_err());
    }

    fn trained_teacher() -> Mlp<f64> {
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 16,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        pretrain_teacher(&small_net(), &toy(300, 3), None, &cfg).unwrap().last
    }

    #[test]
    fn zero_beta_matches_standalone_bitwise() {
        let teacher = trained_teacher();
        let cfg = DistillationConfig {
            beta: 0.0,
            epochs: 4,
            batch_size: 8,
            seed: 17,
            ..DistillationConfig::default()
        };
        let arch = "6n-5n-BN-0.2DP".parse::<HiddenStack>().unwrap().with_head(4);
        let d = distill(&teacher, &arch, &toy(200, 4), &toy(50, 5), &cfg).unwrap();
        let s = train_standalone(&arch, &toy(200, 4), &toy(50, 5), &cfg).unwrap();
        let bits = |m: &Mlp<f64>| m.parameters().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&d.last), bits(&s.last));
        assert_eq!(d.trace.epochs.iter().map(|e| e.hard_loss.to_bits()).collect::<Vec<_>>(),
                   s.trace.epochs.iter().map(|e| e.hard_loss.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn teacher_is_untouched() {
        let teacher = trained_teacher();
        let before = teacher.to_json().unwrap();
        let cfg = DistillationConfig {
            epochs: 2,
            ..DistillationConfig::default()
        };
        distill(&teacher, &small_net(), &toy(100, 6), &toy(20, 7), &cfg).unwrap();
        assert_eq!(before, teacher.to_json().unwrap());
    }

    #[test]
    fn teacher_must_be_in_eval_mode() {
        let mut teacher = trained_teacher();
        teacher.set_mode(Mode::Train);
        let r = distill(&teacher, &small_net(), &toy(10, 1), &toy(10, 2), &DistillationConfig::default());
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn runs_are_deterministic() {
        let teacher = trained_teacher();
        let cfg = DistillationConfig {
            epochs: 3,
            seed: 2,
            ..DistillationConfig::default()
        };
        let a = distill(&teacher, &default_student(), &toy(100, 6), &toy(30, 7), &cfg).unwrap();
        let b = distill(&teacher, &default_student(), &toy(100, 6), &toy(30, 7), &cfg).unwrap();
        assert_eq!(a.last.to_json().unwrap(), b.last.to_json().unwrap());
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn trace_csv_layout() {
        let trace = TrainingTrace {
            epochs: vec![EpochStats {
                epoch: 1,
                hard_loss: 0.5,
                soft_loss: 0.25,
                total_loss: 0.375,
                train_acc: 0.75,
                test_acc: 1.0,
            }],
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,hard_loss,soft_loss,total_loss,train_acc,test_acc\n1,0.5,0.25,0.375,0.75,1.0\n"
        );
        assert_eq!(trace.best_epoch(), Some(1));
        let text = {
            let mut b = Vec::new();
            trace.write_csv(&mut b).unwrap();
            b
        };
        assert_eq!(TrainingTrace::read_csv(&text[..]).unwrap(), trace);
        assert!(TrainingTrace::read_csv("epoch,loss\n1,2\n".as_bytes()).is_err());
    }
}
