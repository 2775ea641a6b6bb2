use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contextual and demographic variables in column order, with the largest
/// valid code of each. Codes start at 1; 0 marks a variable that is absent.
pub const CONTEXT_VARIABLES: [(&str, u8); 11] = [
    ("traffic", 3),
    ("urgency", 2),
    ("social_impact", 2),
    ("age", 2),
    ("gender", 2),
    ("race", 3),
    ("education", 3),
    ("employment", 4),
    ("concern", 4),
    ("familiarity", 5),
    ("financial", 5),
];

/// Code reserved for a contextual variable that was not observed.
pub const ABSENT: u8 = 0;

/// Travel times in minutes on the alternative route after each exit.
pub const DEFAULT_TRAVEL_TIMES: [f64; 4] = [31.7, 18.9, 17.8, 13.9];

pub const TRAFFIC_NORMAL: u8 = 1;
pub const TRAFFIC_MEDIUM: u8 = 2;
pub const TRAFFIC_HEAVY: u8 = 3;

/// One trip: contextual codes, travel time on the chosen alternative route, and
/// the chosen exit (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivingRecord {
    pub traffic: u8,
    pub urgency: u8,
    pub social_impact: u8,
    pub age: u8,
    pub gender: u8,
    pub race: u8,
    pub education: u8,
    pub employment: u8,
    pub concern: u8,
    pub familiarity: u8,
    pub financial: u8,
    pub travel_time: f64,
    pub choice: u8,
}

impl DrivingRecord {
    /// The eleven contextual codes in [`CONTEXT_VARIABLES`] order.
    pub fn codes(&self) -> [u8; 11] {
        [
            self.traffic,
            self.urgency,
            self.social_impact,
            self.age,
            self.gender,
            self.race,
            self.education,
            self.employment,
            self.concern,
            self.familiarity,
            self.financial,
        ]
    }

    pub fn from_codes(codes: [u8; 11], travel_time: f64, choice: u8) -> Self {
        let [traffic, urgency, social_impact, age, gender, race, education, employment, concern, familiarity, financial] =
            codes;
        Self {
            traffic,
            urgency,
            social_impact,
            age,
            gender,
            race,
            education,
            employment,
            concern,
            familiarity,
            financial,
            travel_time,
            choice,
        }
    }

    /// Zero-based exit index.
    pub fn label(&self) -> usize {
        usize::from(self.choice) - 1
    }

    pub fn validate(&self) -> Result<()> {
        for (code, (name, max)) in self.codes().into_iter().zip(CONTEXT_VARIABLES) {
            if code > max {
                return Err(Error::invalid(format!(
                    "{name} code {code} is outside 0..={max}"
                )));
            }
        }
        if !(self.travel_time > 0.0) || !self.travel_time.is_finite() {
            return Err(Error::invalid(format!(
                "travel time must be positive, got {}",
                self.travel_time
            )));
        }
        if !(1..=4).contains(&self.choice) {
            return Err(Error::invalid(format!(
                "choice {} is outside 1..=4",
                self.choice
            )));
        }
        Ok(())
    }
}
