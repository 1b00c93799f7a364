use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Events per hour for each hour of the day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct HourlyProfile {
    rates: Vec<f64>,
}

#[derive(Deserialize)]
struct RawProfile {
    rates: Vec<f64>,
}

impl TryFrom<RawProfile> for HourlyProfile {
    type Error = Error;
    fn try_from(raw: RawProfile) -> Result<Self> {
        HourlyProfile::new(raw.rates)
    }
}

impl HourlyProfile {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.len() != 24 {
            return Err(Error::config(format!(
                "hourly profile needs 24 rates, got {}",
                rates.len()
            )));
        }
        if let Some((h, r)) = rates
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r >= 0.0))
        {
            return Err(Error::config(format!("hourly rate for hour {h} is invalid: {r}")));
        }
        Ok(HourlyProfile { rates })
    }

    pub fn constant(rate: f64) -> Result<Self> {
        Self::new(vec![rate; 24])
    }

    pub fn zero() -> Self {
        HourlyProfile { rates: vec![0.0; 24] }
    }

    pub fn rate(&self, hour_of_day: usize) -> f64 {
        self.rates[hour_of_day % 24]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.rates.iter().map(|r| r * factor).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_length_and_sign() {
        assert!(HourlyProfile::new(vec![1.0; 23]).is_err());
        let mut r = vec![1.0; 24];
        r[3] = -0.5;
        assert!(HourlyProfile::new(r).is_err());
        assert!(serde_json::from_str::<HourlyProfile>(r#"{"rates":[1,2]}"#).is_err());
        let p: HourlyProfile = serde_json::from_str(&format!(r#"{{"rates":{:?}}}"#, vec![2.0; 24])).unwrap();
        assert_eq!(p.total(), 48.0);
    }
}
