use serde::{Deserialize, Serialize};

use super::BenchReport;
use crate::error::{Error, Result};
use crate::labels::Attribute;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasTier {
    None,
    Light,
    Medium,
    Heavy,
}

/// Lower bounds, in points, of the light, medium and heavy tiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasTiers {
    pub light: f64,
    pub medium: f64,
    pub heavy: f64,
}

impl Default for BiasTiers {
    fn default() -> Self {
        BiasTiers { light: 1.0, medium: 2.5, heavy: 4.0 }
    }
}

impl BiasTiers {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.light, self.medium, self.heavy].iter().all(|t| t.is_finite())
            && 0.0 <= self.light
            && self.light < self.medium
            && self.medium < self.heavy;
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "bias tiers must satisfy 0 <= light < medium < heavy, got {} {} {}",
                self.light, self.medium, self.heavy
            )))
        }
    }

    pub fn classify(&self, deviation: f64) -> BiasTier {
        let d = deviation.abs();
        if d >= self.heavy {
            BiasTier::Heavy
        } else if d >= self.medium {
            BiasTier::Medium
        } else if d >= self.light {
            BiasTier::Light
        } else {
            BiasTier::None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasFlag {
    pub attribute: Attribute,
    pub bucket: String,
    pub deviation: f64,
    pub tier: BiasTier,
}

/// One flag per attribute cell, in report order.
pub fn flag_bias(report: &BenchReport, tiers: &BiasTiers) -> Result<Vec<BiasFlag>> {
    tiers.validate()?;
    Ok(report
        .by_attribute
        .iter()
        .flat_map(|(&attribute, row)| {
            row.cells.iter().map(move |(bucket, cell)| BiasFlag {
                attribute,
                bucket: bucket.clone(),
                deviation: cell.deviation,
                tier: tiers.classify(cell.deviation),
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tiers() {
        let t = BiasTiers::default();
        assert_eq!(t.classify(0.2), BiasTier::None);
        assert_eq!(t.classify(1.0), BiasTier::Light);
        assert_eq!(t.classify(3.0), BiasTier::Medium);
        assert_eq!(t.classify(-4.4), BiasTier::Heavy);
    }

    #[test]
    fn non_monotone_tiers_are_rejected() {
        assert!(BiasTiers { light: 2.0, medium: 1.0, heavy: 4.0 }.validate().is_err());
        assert!(BiasTiers { light: 1.0, medium: 2.0, heavy: f64::NAN }.validate().is_err());
    }
}
