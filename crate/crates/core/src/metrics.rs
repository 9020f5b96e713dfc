//! Trueness / precision / accuracy errors and the decision-time speed metric.
//!
//! For estimates `z_i`, collective mean `m` and truth `g`:
//!
//! * trueness  `E_T = (m - g)^2`
//! * precision `E_P = mean (z_i - m)^2` (population variance)
//! * accuracy  `E_A = mean (z_i - g)^2 = E_T + E_P`

use serde::{Deserialize, Serialize};

use crate::engine::RunRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSample {
    pub t: u64,
    pub e_t: f64,
    pub e_p: f64,
    pub e_a: f64,
    pub frac_switched: f64,
    pub collective_mean: f64,
}

fn non_empty(estimates: &[f64]) -> Result<()> {
    if estimates.is_empty() {
        Err(Error::Domain(
            "error metrics need at least one estimate".into(),
        ))
    } else {
        Ok(())
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn trueness_error(estimates: &[f64], z_gt: f64) -> Result<f64> {
    non_empty(estimates)?;
    let bias = mean(estimates) - z_gt;
    Ok(bias * bias)
}

pub fn precision_error(estimates: &[f64]) -> Result<f64> {
    non_empty(estimates)?;
    let m = mean(estimates);
    Ok(estimates.iter().map(|z| (z - m) * (z - m)).sum::<f64>() / estimates.len() as f64)
}

pub fn accuracy_error(estimates: &[f64], z_gt: f64) -> Result<f64> {
    non_empty(estimates)?;
    Ok(estimates
        .iter()
        .map(|z| (z - z_gt) * (z - z_gt))
        .sum::<f64>()
        / estimates.len() as f64)
}

impl MetricsSample {
    pub fn from_estimates(
        t: u64,
        estimates: &[f64],
        z_gt: f64,
        frac_switched: f64,
    ) -> Result<Self> {
        Ok(MetricsSample {
            t,
            e_t: trueness_error(estimates, z_gt)?,
            e_p: precision_error(estimates)?,
            e_a: accuracy_error(estimates, z_gt)?,
            frac_switched,
            collective_mean: mean(estimates),
        })
    }
}

/// Mean switching time over the agents that switched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionTime {
    /// `None` when no agent switched.
    pub mean: Option<f64>,
    pub switched: usize,
    pub never_switched: usize,
}

impl DecisionTime {
    /// Set when some agents never switched, so `mean` covers a subset.
    pub fn incomplete(&self) -> bool {
        self.never_switched > 0
    }
}

pub fn decision_time(record: &RunRecord) -> DecisionTime {
    let switched: Vec<f64> = record
        .switch_times
        .iter()
        .flatten()
        .map(|&t| t as f64)
        .collect();
    DecisionTime {
        mean: (!switched.is_empty()).then(|| mean(&switched)),
        switched: switched.len(),
        never_switched: record.switch_times.len() - switched.len(),
    }
}
