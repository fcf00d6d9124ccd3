use serde::Serialize;

use super::run::RunArtifact;
use crate::{Error, Result};

/// `envelope --assert` requires the fitted constant to be at most this.
pub const ENVELOPE_MAX_CONSTANT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeSample {
    pub t: f64,
    pub dist_hs: f64,
    /// `max(1, t)^(1 - s + eps) sigma`
    pub envelope: f64,
    /// `max(1, t)^((1 - s) / (3 - 2 s - eps)) sigma^(1 / (3 - 2 s - eps))`
    pub root_envelope: f64,
    /// `max(1, t)^(1 - s + eps) sigma^(1 + eps)`
    pub superlinear_envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub s: f64,
    pub sigma: f64,
    pub epsilon: f64,
    /// Smallest `C` with `dist_Hs(t) <= C * envelope(t)` on every sample.
    pub constant: f64,
    pub limit: f64,
    /// `limit / constant`; infinite when the distance vanishes identically.
    pub margin: f64,
    pub pass: bool,
    pub samples: Vec<EnvelopeSample>,
}

pub fn envelope_check(artifact: &RunArtifact, epsilon: f64) -> Result<EnvelopeReport> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::Config(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let s = artifact.config().s;
    let sigma = artifact.sigma();
    let samples: Vec<EnvelopeSample> = artifact
        .records
        .iter()
        .map(|r| {
            let clock = r.t.max(1.0);
            let exponent = 1.0 - s + epsilon;
            let denominator = 3.0 - 2.0 * s - epsilon;
            EnvelopeSample {
                t: r.t,
                dist_hs: r.dist_hs,
                envelope: clock.powf(exponent) * sigma,
                root_envelope: clock.powf((1.0 - s) / denominator) * sigma.powf(1.0 / denominator),
                superlinear_envelope: clock.powf(exponent) * sigma.powf(1.0 + epsilon),
            }
        })
        .collect();
    let constant = if sigma == 0.0 {
        0.0
    } else {
        samples.iter().map(|e| e.dist_hs / e.envelope).fold(0.0, f64::max)
    };
    let margin = if constant == 0.0 { f64::INFINITY } else { ENVELOPE_MAX_CONSTANT / constant };
    Ok(EnvelopeReport {
        s,
        sigma,
        epsilon,
        constant,
        limit: ENVELOPE_MAX_CONSTANT,
        margin,
        pass: constant <= ENVELOPE_MAX_CONSTANT,
        samples,
    })
}
