//! Two-step fusion of a full-reference and a no-reference score.
//!
//! The basic model multiplies MS-SSIM by a normalized NIQE factor:
//! `ms_ssim * (1 - niqe/alpha)` with `alpha = 100`, the scale NIQE spans
//! on typical content. The generalized model linearly rescales any FR
//! score to `[0, 1]` and any NR score to `[beta, 1]` from configured
//! extremal values, then multiplies; `beta` is picked by grid search
//! against rank correlation on training data.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::eval::srocc;

/// Affine rescaling coefficients and the extremal scores that induce them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleParams {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub r_hi: f64,
    pub r_low: f64,
    pub nr_hi: f64,
    pub nr_low: f64,
    pub beta: f64,
}

/// Extremal raw scores for a metric pair. `hi` is the value at best
/// quality, `low` at worst; either ordering is allowed, so inverse-polarity
/// metrics (like NIQE, where low is good) just swap the numbers.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct ScoreRange {
    pub hi: f64,
    pub low: f64,
}

/// Ranges for the FR and NR sides of a generalized two-step metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRanges {
    pub fr: ScoreRange,
    pub nr: ScoreRange,
}

impl MetricRanges {
    /// Shipped defaults for the MS-SSIM + NIQE pair: MS-SSIM spans
    /// `[0, 1]`, NIQE spans `[0, 100]` with reversed polarity.
    pub fn ms_ssim_niqe() -> Self {
        Self {
            fr: ScoreRange { hi: 1.0, low: 0.0 },
            nr: ScoreRange {
                hi: 0.0,
                low: 100.0,
            },
        }
    }
}

/// The basic product model: `ms_ssim * (1 - min(niqe, alpha)/alpha)`.
///
/// NIQE is clamped at `alpha` so the no-reference factor stays in
/// `[0, 1]` even on inputs beyond the nominal scale.
pub fn basic_2step(ms_ssim_score: f64, niqe_score: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&ms_ssim_score) {
        return Err(Error::InvalidConfig(format!(
            "ms_ssim score {ms_ssim_score} outside [0, 1]"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig(format!("alpha {alpha} must be positive")));
    }
    if !(niqe_score >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "niqe score {niqe_score} must be nonnegative"
        )));
    }
    let clamped = niqe_score.min(alpha);
    Ok(ms_ssim_score * (alpha - clamped) / alpha)
}

/// Solve the two 2x2 linear systems mapping `r_hi -> 1, r_low -> 0` and
/// `nr_hi -> 1, nr_low -> beta`.
pub fn derive_rescale(
    r_hi: f64,
    r_low: f64,
    nr_hi: f64,
    nr_low: f64,
    beta: f64,
) -> Result<RescaleParams> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidConfig(format!("beta {beta} outside [0, 1)")));
    }
    if r_hi == r_low {
        return Err(Error::CoincidentExtremes(format!(
            "r_hi == r_low == {r_hi}"
        )));
    }
    if nr_hi == nr_low {
        return Err(Error::CoincidentExtremes(format!(
            "nr_hi == nr_low == {nr_hi}"
        )));
    }
    let a1 = 1.0 / (r_hi - r_low);
    let b1 = -a1 * r_low;
    let a2 = (1.0 - beta) / (nr_hi - nr_low);
    let b2 = 1.0 - a2 * nr_hi;
    Ok(RescaleParams {
        a1,
        b1,
        a2,
        b2,
        r_hi,
        r_low,
        nr_hi,
        nr_low,
        beta,
    })
}

/// The generalized product: rescaled FR factor (clamped to `[0, 1]`)
/// times rescaled NR factor (clamped to `[beta, 1]`).
pub fn general_2step(q_r: f64, q_nr: f64, p: &RescaleParams) -> f64 {
    let fr = (p.a1 * q_r + p.b1).clamp(0.0, 1.0);
    let nr = (p.a2 * q_nr + p.b2).clamp(p.beta, 1.0);
    fr * nr
}

/// One training record for beta selection: raw FR score, raw NR score and
/// the subjective score.
#[derive(Debug, Clone, Copy)]
pub struct FusionSample {
    pub q_r: f64,
    pub q_nr: f64,
    pub mos: f64,
}

/// Grid-search beta in `{0, step, ...} < 1`, maximizing the rank
/// correlation of the fused prediction against MOS. Ties break toward the
/// smaller beta.
pub fn select_beta(samples: &[FusionSample], ranges: &MetricRanges, grid_step: f64) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples {
            need: 3,
            got: samples.len(),
        });
    }
    if !(grid_step > 0.0 && grid_step < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "grid step {grid_step} outside (0, 1)"
        )));
    }
    let mos: Vec<f64> = samples.iter().map(|s| s.mos).collect();
    let mut best: Option<(f64, f64)> = None;
    let steps = (1.0 / grid_step).ceil() as usize;
    for i in 0..steps {
        let beta = i as f64 * grid_step;
        if beta >= 1.0 {
            break;
        }
        let params = derive_rescale(
            ranges.fr.hi,
            ranges.fr.low,
            ranges.nr.hi,
            ranges.nr.low,
            beta,
        )?;
        let preds: Vec<f64> = samples
            .iter()
            .map(|s| general_2step(s.q_r, s.q_nr, &params))
            .collect();
        let Ok(rho) = srocc(&preds, &mos) else {
            continue; // constant predictions at this beta
        };
        match best {
            Some((best_rho, _)) if rho <= best_rho => {}
            _ => best = Some((rho, beta)),
        }
    }
    best.map(|(_, beta)| beta).ok_or_else(|| {
        Error::DegenerateInput("no beta produced a defined rank correlation".into())
    })
}

/// Per-metric-pair score ranges parsed from a small TOML config:
///
/// ```toml
/// [fr.ms_ssim]
/// hi = 1.0
/// low = 0.0
///
/// [nr.niqe]
/// hi = 0.0
/// low = 100.0
/// ```
#[derive(Debug, Clone, Deserialize)]
pub struct RangesConfig {
    #[serde(default)]
    pub fr: std::collections::BTreeMap<String, ScoreRange>,
    #[serde(default)]
    pub nr: std::collections::BTreeMap<String, ScoreRange>,
}

impl RangesConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("ranges config: {e}")))
    }

    pub fn ranges(&self, fr_metric: &str, nr_metric: &str) -> Result<MetricRanges> {
        let fr = self.fr.get(fr_metric).ok_or_else(|| {
            Error::InvalidConfig(format!("no FR range configured for {fr_metric:?}"))
        })?;
        let nr = self.nr.get(nr_metric).ok_or_else(|| {
            Error::InvalidConfig(format!("no NR range configured for {nr_metric:?}"))
        })?;
        Ok(MetricRanges { fr: *fr, nr: *nr })
    }
}
