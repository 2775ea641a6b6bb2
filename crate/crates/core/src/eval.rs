//! Accuracy, aggregated exit distributions and the comparison report.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Encoded, ExitProbabilities};
use crate::error::{Error, Result};
use crate::nn::{softmax, Mlp, Mode};
use crate::scalar::Scalar;
use crate::NUM_EXITS;

fn require_eval<T: Scalar>(model: &Mlp<T>) -> Result<()> {
    if model.mode() != Mode::Eval {
        return Err(Error::invalid("model must be in eval mode for evaluation"));
    }
    Ok(())
}

/// Fraction of records whose predicted exit (argmax logit, lowest index on
/// ties) equals the label.
pub fn accuracy<T: Scalar>(model: &Mlp<T>, data: &Encoded<T>) -> Result<f64> {
    require_eval(model)?;
    crate::distill::encoded_accuracy(model, data)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Share of records whose predicted exit is each exit.
    #[default]
    ArgmaxCount,
    /// Mean softmax probability per exit.
    MeanProb,
}

pub fn predicted_exit_distribution<T: Scalar>(
    model: &Mlp<T>,
    data: &Encoded<T>,
    mode: Aggregation,
) -> Result<ExitProbabilities> {
    require_eval(model)?;
    if data.is_empty() {
        return Err(Error::invalid("exit distribution of an empty dataset"));
    }
    if model.output_dim() != NUM_EXITS {
        return Err(Error::invalid(format!("model has {} outputs, expected {NUM_EXITS}", model.output_dim())));
    }
    let logits = model.infer(&data.features)?;
    let n = data.len() as f64;
    let mut p = [0.0; NUM_EXITS];
    match mode {
        Aggregation::ArgmaxCount => {
            let mut counts = [0usize; NUM_EXITS];
            for k in logits.argmax_rows() {
                counts[k] += 1;
            }
            for (pi, c) in p.iter_mut().zip(counts) {
                *pi = c as f64 / n;
            }
        }
        Aggregation::MeanProb => {
            let probs = softmax(&logits, 1.0)?;
            for row in probs.iter_rows() {
                for (pi, v) in p.iter_mut().zip(row) {
                    *pi += v.as_f64();
                }
            }
            for pi in p.iter_mut() {
                *pi /= n;
            }
        }
    }
    ExitProbabilities::new(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracies {
    pub teacher_on_basic: f64,
    pub student_standalone: f64,
    pub distilled: f64,
}

impl Accuracies {
    fn entries(&self) -> [(&'static str, f64); 3] {
        [
            ("teacher_on_basic", self.teacher_on_basic),
            ("student_standalone", self.student_standalone),
            ("distilled", self.distilled),
        ]
    }
}

/// The four exit distributions side by side, the three headline accuracies,
/// and each candidate's L1 distance to the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub baseline: ExitProbabilities,
    pub model: ExitProbabilities,
    pub reference: ExitProbabilities,
    pub vr_empirical: ExitProbabilities,
    pub accuracies: Accuracies,
}

pub const SERIES: [&str; 4] = ["baseline", "model", "reference", "vr_empirical"];

impl ComparisonReport {
    pub fn build(
        baseline: ExitProbabilities,
        model: ExitProbabilities,
        reference: ExitProbabilities,
        vr_empirical: ExitProbabilities,
        accuracies: Accuracies,
    ) -> Result<Self> {
        for (name, v) in accuracies.entries() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} accuracy {v} is outside [0, 1]")));
            }
        }
        // re-validate in case a caller built one through deserialization shortcuts
        for p in [&baseline, &model, &reference, &vr_empirical] {
            ExitProbabilities::new(p.as_array())?;
        }
        Ok(Self {
            baseline,
            model,
            reference,
            vr_empirical,
            accuracies,
        })
    }

    pub fn series(&self) -> [(&'static str, &ExitProbabilities); 4] {
        [
            (SERIES[0], &self.baseline),
            (SERIES[1], &self.model),
            (SERIES[2], &self.reference),
            (SERIES[3], &self.vr_empirical),
        ]
    }

    pub fn baseline_l1(&self) -> f64 {
        self.baseline.l1_distance(&self.reference)
    }

    pub fn model_l1(&self) -> f64 {
        self.model.l1_distance(&self.reference)
    }

    pub fn vr_l1(&self) -> f64 {
        self.vr_empirical.l1_distance(&self.reference)
    }

    /// Long-format CSV: `section,key,value`. Sections are the four series
    /// (keyed by exit number), `accuracy`, and `l1_to_reference`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut rows: Vec<(String, String, f64)> = Vec::new();
        for (name, p) in self.series() {
            for (e, v) in p.as_array().iter().enumerate() {
                rows.push((name.to_owned(), (e + 1).to_string(), *v));
            }
        }
        for (k, v) in self.accuracies.entries() {
            rows.push(("accuracy".to_owned(), k.to_owned(), v));
        }
        for (k, v) in [
            ("baseline", self.baseline_l1()),
            ("model", self.model_l1()),
            ("vr_empirical", self.vr_l1()),
        ] {
            rows.push(("l1_to_reference".to_owned(), k.to_owned(), v));
        }
        let csv_err = |e: csv::Error| Error::invalid(format!("writing report: {e}"));
        w.write_record(["section", "key", "value"]).map_err(csv_err)?;
        for (s, k, v) in rows {
            w.write_record([s, k, v.to_string()]).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::invalid(format!("writing report: {e}")))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(input);
        let mut series = [[f64::NAN; NUM_EXITS]; 4];
        let mut acc = [f64::NAN; 3];
        for (i, rec) in r.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| parse_error(row, "", e.to_string()))?;
            if rec.len() != 3 {
                return Err(parse_error(row, "", "expected three fields"));
            }
            let value: f64 = rec[2]
                .parse()
                .map_err(|_| parse_error(row, "value", format!("`{}` is not a number", &rec[2])))?;
            let (section, key) = (&rec[0], &rec[1]);
            if let Some(s) = SERIES.iter().position(|n| *n == section) {
                let e: usize = key
                    .parse()
                    .ok()
                    .filter(|e| (1..=NUM_EXITS).contains(e))
                    .ok_or_else(|| parse_error(row, "key", format!("bad exit `{key}`")))?;
                series[s][e - 1] = value;
            } else if section == "accuracy" {
                let a = ["teacher_on_basic", "student_standalone", "distilled"]
                    .iter()
                    .position(|n| *n == key)
                    .ok_or_else(|| parse_error(row, "key", format!("unknown accuracy `{key}`")))?;
                acc[a] = value;
            } else if section != "l1_to_reference" {
                return Err(parse_error(row, "section", format!("unknown section `{section}`")));
            }
        }
        if series.iter().flatten().chain(&acc).any(|v| v.is_nan()) {
            return Err(Error::invalid("report CSV is missing rows"));
        }
        let [b, m, rf, v] = series.map(ExitProbabilities::new);
        Self::build(
            b?,
            m?,
            rf?,
            v?,
            Accuracies {
                teacher_on_basic: acc[0],
                student_standalone: acc[1],
                distilled: acc[2],
            },
        )
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f)
    }

    /// Grouped bar chart: one group per exit, one bar per series.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const LEFT: f64 = 60.0;
        const RIGHT: f64 = 170.0;
        const TOP: f64 = 40.0;
        const BOTTOM: f64 = 50.0;
        const COLORS: [&str; 4] = ["#4c72b0", "#55a868", "#c44e52", "#8172b2"];
        let plot_w = W - LEFT - RIGHT;
        let plot_h = H - TOP - BOTTOM;
        let max = self
            .series()
            .iter()
            .flat_map(|(_, p)| p.as_array())
            .fold(0.0f64, f64::max);
        let top = ((max * 10.0).ceil() / 10.0).clamp(0.1, 1.0);
        let y = |v: f64| TOP + plot_h * (1.0 - v / top);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">Probability of leaving at each exit</text>"#,
            LEFT + plot_w / 2.0
        );
        let ticks = (top * 10.0).round() as usize;
        for i in 0..=ticks {
            let v = i as f64 / 10.0;
            svg_line(&mut s, LEFT, y(v), LEFT + plot_w, y(v), "#dddddd");
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
                LEFT - 6.0,
                y(v) + 4.0
            );
        }
        let group = plot_w / NUM_EXITS as f64;
        let bar = group * 0.8 / 4.0;
        for e in 0..NUM_EXITS {
            let gx = LEFT + group * e as f64 + group * 0.1;
            for (k, (name, p)) in self.series().iter().enumerate() {
                let v = p.get(e);
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{name} exit {}: {v:.4}</title></rect>"#,
                    gx + bar * k as f64,
                    y(v),
                    bar,
                    plot_h * v / top,
                    COLORS[k],
                    e + 1
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Exit {}</text>"#,
                gx + group * 0.4,
                TOP + plot_h + 20.0,
                e + 1
            );
        }
        svg_line(&mut s, LEFT, TOP + plot_h, LEFT + plot_w, TOP + plot_h, "black");
        svg_line(&mut s, LEFT, TOP, LEFT, TOP + plot_h, "black");
        for (k, (name, _)) in self.series().iter().enumerate() {
            let ly = TOP + 10.0 + 22.0 * k as f64;
            let lx = W - RIGHT + 20.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx:.1}" y="{:.1}" width="14" height="14" fill="{}"/>"#,
                ly - 11.0,
                COLORS[k]
            );
            let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">{name}</text>"#, lx + 20.0);
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn save_svg(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_svg()).map_err(|e| Error::io(path, e))
    }
}

fn svg_line(s: &mut String, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
    let _ = writeln!(
        s,
        r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"/>"#
    );
}

fn parse_error(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column: column.to_owned(),
        message: message.into(),
    }
}
