//! Record generators: basic data drawn from the aggregate baseline model and
//! a synthetic stand-in for stated-choice VR data.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::baseline::ExitProbabilities;
use super::dataset::{Dataset, Provenance};
use super::record::{
    DrivingRecord, ABSENT, CONTEXT_VARIABLES, DEFAULT_TRAVEL_TIMES, TRAFFIC_HEAVY, TRAFFIC_MEDIUM,
    TRAFFIC_NORMAL,
};
use crate::error::{Error, Result};

/// Urgency is 1 when a uniform draw on `1..=URGENCY_SCALE` is at most this.
pub const URGENCY_CUTOFF: u32 = 13;
pub const URGENCY_SCALE: u32 = 60;

pub const SCENARIO_SPEC_VERSION: u32 = 1;

/// Draws an exit index from `dist` given a uniform `u` in `[0, 1)`.
fn draw_exit(p: &[f64; 4], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // rounding left `u` above the cumulative sum: take the last exit with mass
    p.iter().rposition(|&v| v > 0.0).unwrap_or(3)
}

/// Records sampled from an aggregate exit distribution. Only urgency is drawn;
/// every other contextual variable is [`ABSENT`].
pub fn sample_basic_data(
    dist: &ExitProbabilities,
    n: usize,
    travel_times: &[f64; 4],
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("basic data needs at least one record"));
    }
    if travel_times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("travel times must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = dist.as_array();
    let records = (0..n)
        .map(|_| {
            let exit = draw_exit(&p, rng.random::<f64>());
            let latent = rng.random_range(1..=URGENCY_SCALE);
            let urgency = if latent <= URGENCY_CUTOFF { 1 } else { 2 };
            let mut codes = [ABSENT; 11];
            codes[1] = urgency;
            DrivingRecord::from_codes(codes, travel_times[exit], exit as u8 + 1)
        })
        .collect();
    Ok(Dataset::new(records, Provenance::Basic))
}

/// One presented combination of contextual factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub traffic: u8,
    pub urgency: u8,
    pub social_impact: u8,
}

/// Ground-truth multinomial logit for synthetic respondents.
///
/// The utility of exit `e` is
/// `asc[e] + travel_time * T[e] + sum_v effects[v][code_v - 1][e]`
/// over every contextual variable `v` listed in `effects`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceCoefficients {
    pub asc: [f64; 4],
    pub travel_time: f64,
    #[serde(default)]
    pub effects: BTreeMap<String, Vec<[f64; 4]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub version: u32,
    pub travel_times: [f64; 4],
    pub scenarios: Vec<Scenario>,
    pub coefficients: ChoiceCoefficients,
}

impl ScenarioSpec {
    /// The ten presented scenarios: normal traffic without social impact under
    /// both urgency levels, and medium and heavy traffic crossed with urgency and
    /// social impact.
    pub fn default_scenarios() -> Vec<Scenario> {
        let mut v = Vec::with_capacity(10);
        for urgency in [1, 2] {
            v.push(Scenario {
                traffic: TRAFFIC_NORMAL,
                urgency,
                social_impact: 1,
            });
        }
        for traffic in [TRAFFIC_MEDIUM, TRAFFIC_HEAVY] {
            for urgency in [1, 2] {
                for social_impact in [1, 2] {
                    v.push(Scenario {
                        traffic,
                        urgency,
                        social_impact,
                    });
                }
            }
        }
        v
    }

    pub fn default_coefficients() -> ChoiceCoefficients {
        let mut effects = BTreeMap::new();
        // heavy traffic pushes drivers off at the first exit; medium spreads them out
        effects.insert(
            "traffic".to_owned(),
            vec![[-0.5, 0.0, 0.2, 0.8], [1.0, 0.9, 0.5, 0.0], [3.6, 0.2, 0.0, -0.4]],
        );
        effects.insert("urgency".to_owned(), vec![[0.0, 0.0, 0.5, 0.9], [0.0; 4]]);
        effects.insert("social_impact".to_owned(), vec![[0.0; 4], [0.0, 1.0, 0.3, 0.0]]);
        effects.insert("age".to_owned(), vec![[0.4, 0.0, 0.0, -0.3], [0.0; 4]]);
        effects.insert(
            "familiarity".to_owned(),
            vec![
                [0.0, 0.3, 0.6, 0.0],
                [0.0; 4],
                [0.0, 0.2, 0.3, 0.0],
                [0.0, 0.4, 0.7, 0.0],
                [0.5, 0.0, -0.3, 0.0],
            ],
        );
        effects.insert(
            "financial".to_owned(),
            vec![[0.0; 4], [-0.4, 0.0, 0.0, 0.4], [-0.2, 0.0, 0.0, 0.2], [0.0; 4], [0.2, 0.0, 0.0, -0.2]],
        );
        effects.insert(
            "concern".to_owned(),
            vec![[0.0, 0.0, 0.0, 0.4], [0.5, 0.0, 0.0, 0.0], [0.0, 0.0, 0.3, 0.0], [0.0, 0.3, 0.0, 0.0]],
        );
        ChoiceCoefficients {
            asc: [0.0; 4],
            travel_time: -0.08,
            effects,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCENARIO_SPEC_VERSION {
            return Err(Error::invalid(format!(
                "unsupported scenario spec version {}",
                self.version
            )));
        }
        if self.scenarios.is_empty() {
            return Err(Error::invalid("scenario list is empty"));
        }
        if self.travel_times.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::invalid("travel times must be positive"));
        }
        for s in &self.scenarios {
            let r = DrivingRecord::from_codes(
                [s.traffic, s.urgency, s.social_impact, 1, 1, 1, 1, 1, 1, 1, 1],
                1.0,
                1,
            );
            if s.traffic == ABSENT || s.urgency == ABSENT || s.social_impact == ABSENT {
                return Err(Error::invalid(format!("scenario {s:?} uses the absent code")));
            }
            r.validate()?;
        }
        for (name, table) in &self.coefficients.effects {
            let Some(&(_, max)) = CONTEXT_VARIABLES.iter().find(|(n, _)| n == name) else {
                return Err(Error::invalid(format!("unknown contextual variable `{name}`")));
            };
            if table.len() != usize::from(max) {
                return Err(Error::invalid(format!(
                    "`{name}` needs {max} effect rows, got {}",
                    table.len()
                )));
            }
        }
        let c = &self.coefficients;
        let finite = c.asc.iter().all(|v| v.is_finite())
            && c.travel_time.is_finite()
            && c.effects.values().flatten().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("choice coefficients must be finite"));
        }
        Ok(())
    }

    /// Choice probabilities of a respondent with the given contextual codes.
    pub fn choice_probabilities(&self, codes: &[u8; 11]) -> [f64; 4] {
        let c = &self.coefficients;
        let mut u = [0.0; 4];
        for (e, ue) in u.iter_mut().enumerate() {
            *ue = c.asc[e] + c.travel_time * self.travel_times[e];
        }
        for (i, &(name, _)) in CONTEXT_VARIABLES.iter().enumerate() {
            if codes[i] == ABSENT {
                continue;
            }
            if let Some(table) = c.effects.get(name) {
                let row = table[usize::from(codes[i]) - 1];
                for (ue, d) in u.iter_mut().zip(row) {
                    *ue += d;
                }
            }
        }
        let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w = u.map(|v| (v - max).exp());
        let total: f64 = w.iter().sum();
        w.map(|v| v / total)
    }

    /// Exit shares of a population with uniformly distributed demographics,
    /// each respondent facing every scenario once. Exact enumeration.
    pub fn expected_shares(&self) -> Result<ExitProbabilities> {
        self.validate()?;
        let demo_ranges: Vec<u8> = CONTEXT_VARIABLES[3..].iter().map(|&(_, m)| m).collect();
        let mut acc = [0.0; 4];
        let mut count = 0usize;
        let mut demo = vec![1u8; demo_ranges.len()];
        loop {
            for s in &self.scenarios {
                let mut codes = [0u8; 11];
                codes[0] = s.traffic;
                codes[1] = s.urgency;
                codes[2] = s.social_impact;
                codes[3..].copy_from_slice(&demo);
                let p = self.choice_probabilities(&codes);
                for (a, v) in acc.iter_mut().zip(p) {
                    *a += v;
                }
                count += 1;
            }
            // odometer over the demographic codes
            let mut i = 0;
            loop {
                if i == demo.len() {
                    return ExitProbabilities::from_weights(acc.map(|v| v / count as f64));
                }
                if demo[i] < demo_ranges[i] {
                    demo[i] += 1;
                    break;
                }
                demo[i] = 1;
                i += 1;
            }
        }
    }
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            version: SCENARIO_SPEC_VERSION,
            travel_times: DEFAULT_TRAVEL_TIMES,
            scenarios: Self::default_scenarios(),
            coefficients: Self::default_coefficients(),
        }
    }
}

/// Synthetic stated-choice corpus: each participant gets uniformly drawn
/// demographics and answers every scenario once.
pub fn generate_synthetic_vr(spec: &ScenarioSpec, n_participants: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    if n_participants == 0 {
        return Err(Error::invalid("need at least one participant"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n_participants * spec.scenarios.len());
    for _ in 0..n_participants {
        let mut demo = [0u8; 8];
        for (d, &(_, max)) in demo.iter_mut().zip(&CONTEXT_VARIABLES[3..]) {
            *d = rng.random_range(1..=max);
        }
        for s in &spec.scenarios {
            let mut codes = [0u8; 11];
            codes[0] = s.traffic;
            codes[1] = s.urgency;
            codes[2] = s.social_impact;
            codes[3..].copy_from_slice(&demo);
            let p = spec.choice_probabilities(&codes);
            let exit = draw_exit(&p, rng.random::<f64>());
            records.push(DrivingRecord::from_codes(codes, spec.travel_times[exit], exit as u8 + 1));
        }
    }
    Ok(Dataset::new(records, Provenance::SyntheticVr))
}
