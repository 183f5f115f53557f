//! Moment-matching estimators for the generalized Gaussian distribution
//! and its asymmetric variant.
//!
//! Shape parameters are recovered by inverting gamma-function ratios over
//! a fixed grid (0.2 to 10 in steps of 0.001), the standard approach for
//! natural-scene-statistics features. The grid and its gamma values are
//! computed once and cached.

use std::sync::OnceLock;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

pub const SHAPE_GRID_MIN: f64 = 0.2;
pub const SHAPE_GRID_MAX: f64 = 10.0;
pub const SHAPE_GRID_STEP: f64 = 0.001;

/// Minimum sample count accepted by the estimators.
pub const MIN_SAMPLES: usize = 100;

struct GridEntry {
    shape: f64,
    /// Gamma(1/s) * Gamma(3/s) / Gamma(2/s)^2
    ggd_ratio: f64,
    /// Gamma(2/s)^2 / (Gamma(1/s) * Gamma(3/s))
    aggd_ratio: f64,
    /// Gamma(2/s) / Gamma(1/s)
    g2_over_g1: f64,
    /// sqrt(Gamma(1/s) / Gamma(3/s))
    sqrt_g1_over_g3: f64,
}

fn grid() -> &'static [GridEntry] {
    static GRID: OnceLock<Vec<GridEntry>> = OnceLock::new();
    GRID.get_or_init(|| {
        let count = ((SHAPE_GRID_MAX - SHAPE_GRID_MIN) / SHAPE_GRID_STEP).round() as usize + 1;
        (0..count)
            .map(|i| {
                let shape = SHAPE_GRID_MIN + SHAPE_GRID_STEP * i as f64;
                let g1 = gamma(1.0 / shape);
                let g2 = gamma(2.0 / shape);
                let g3 = gamma(3.0 / shape);
                GridEntry {
                    shape,
                    ggd_ratio: g1 * g3 / (g2 * g2),
                    aggd_ratio: g2 * g2 / (g1 * g3),
                    g2_over_g1: g2 / g1,
                    sqrt_g1_over_g3: (g1 / g3).sqrt(),
                }
            })
            .collect()
    })
}

/// A symmetric generalized Gaussian fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdFit {
    /// Shape parameter; 2 is Gaussian, 1 is Laplacian.
    pub shape: f64,
    /// Sample second moment.
    pub variance: f64,
}

/// An asymmetric generalized Gaussian fit for pairwise-product samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggdFit {
    pub shape: f64,
    /// Scale of the negative lobe, from the one-sided second moment.
    pub left_scale: f64,
    /// Scale of the positive lobe.
    pub right_scale: f64,
    /// `(right_scale - left_scale) * Gamma(2/shape) / Gamma(1/shape)`.
    pub mean_param: f64,
}

/// Fit a zero-mean GGD by matching `E[x^2] / E[|x|]^2` against the
/// gamma-ratio curve.
pub fn fit_ggd(samples: &[f64]) -> Result<GgdFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            need: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let first = samples[0];
    if samples.iter().all(|&x| x == first) {
        return Err(Error::DegenerateInput(
            "zero-variance sample for GGD fit".into(),
        ));
    }
    let n = samples.len() as f64;
    let second_moment = samples.iter().map(|&x| x * x).sum::<f64>() / n;
    let mean_abs = samples.iter().map(|&x| x.abs()).sum::<f64>() / n;
    let rho = second_moment / (mean_abs * mean_abs);
    let entry = grid()
        .iter()
        .min_by(|a, b| {
            let da = (a.ggd_ratio - rho).abs();
            let db = (b.ggd_ratio - rho).abs();
            da.partial_cmp(&db).expect("finite ratios")
        })
        .expect("non-empty grid");
    Ok(GgdFit {
        shape: entry.shape,
        variance: second_moment,
    })
}

/// Fit an AGGD. Requires at least one strictly negative and one strictly
/// positive sample; scales come from the one-sided second moments.
pub fn fit_aggd(samples: &[f64]) -> Result<AggdFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            need: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let mut left_sq = 0.0;
    let mut left_n = 0usize;
    let mut right_sq = 0.0;
    let mut right_n = 0usize;
    let mut total_sq = 0.0;
    let mut total_abs = 0.0;
    for &x in samples {
        total_sq += x * x;
        total_abs += x.abs();
        if x < 0.0 {
            left_sq += x * x;
            left_n += 1;
        } else if x > 0.0 {
            right_sq += x * x;
            right_n += 1;
        }
    }
    if left_n == 0 || right_n == 0 {
        return Err(Error::DegenerateInput(
            "one-sided sample for AGGD fit".into(),
        ));
    }
    let n = samples.len() as f64;
    let left_std = (left_sq / left_n as f64).sqrt();
    let right_std = (right_sq / right_n as f64).sqrt();
    let gamma_hat = left_std / right_std;
    let r_hat = (total_abs / n).powi(2) / (total_sq / n);
    let r_hat_norm = r_hat * (gamma_hat.powi(3) + 1.0) * (gamma_hat + 1.0)
        / (gamma_hat * gamma_hat + 1.0).powi(2);

    let entry = grid()
        .iter()
        .min_by(|a, b| {
            let da = (a.aggd_ratio - r_hat_norm).powi(2);
            let db = (b.aggd_ratio - r_hat_norm).powi(2);
            da.partial_cmp(&db).expect("finite ratios")
        })
        .expect("non-empty grid");

    let left_scale = left_std * entry.sqrt_g1_over_g3;
    let right_scale = right_std * entry.sqrt_g1_over_g3;
    Ok(AggdFit {
        shape: entry.shape,
        left_scale,
        right_scale,
        mean_param: (right_scale - left_scale) * entry.g2_over_g1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    /// Draw from a zero-mean GGD with the given shape and unit scale:
    /// |x|^shape is Gamma(1/shape, 1) distributed.
    pub(crate) fn sample_ggd(shape: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gamma = Gamma::new(1.0 / shape, 1.0).unwrap();
        (0..n)
            .map(|_| {
                let magnitude = gamma.sample(&mut rng).powf(1.0 / shape);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            })
            .collect()
    }

    #[test]
    fn recovers_known_shapes() {
        for (shape, seed) in [(0.5, 11u64), (1.0, 12), (2.0, 13)] {
            let samples = sample_ggd(shape, 1_000_000, seed);
            let fit = fit_ggd(&samples).unwrap();
            assert!(
                (fit.shape - shape).abs() < 0.1,
                "shape {shape}: fitted {}",
                fit.shape
            );
        }
    }

    #[test]
    fn gaussian_variance_matches() {
        let samples = sample_ggd(2.0, 1_000_000, 21);
        let fit = fit_ggd(&samples).unwrap();
        // unit-scale GGD(2) has second moment Gamma(1.5)/Gamma(0.5) = 0.5
        assert!((fit.variance - 0.5).abs() < 0.01, "{}", fit.variance);
    }

    #[test]
    fn ggd_degenerate_and_small_inputs() {
        let flat = vec![3.0; 500];
        assert!(matches!(fit_ggd(&flat), Err(Error::DegenerateInput(_))));
        let zeros = vec![0.0; 500];
        assert!(matches!(fit_ggd(&zeros), Err(Error::DegenerateInput(_))));
        assert!(matches!(
            fit_ggd(&[1.0; 10]),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn aggd_symmetric_case() {
        let samples = sample_ggd(2.0, 1_000_000, 31);
        let fit = fit_aggd(&samples).unwrap();
        assert!(
            (fit.left_scale - fit.right_scale).abs() / fit.left_scale < 0.05,
            "left {} right {}",
            fit.left_scale,
            fit.right_scale
        );
        assert!(fit.mean_param.abs() < 0.05, "{}", fit.mean_param);
        assert!((fit.shape - 2.0).abs() < 0.15, "{}", fit.shape);
    }

    #[test]
    fn aggd_detects_asymmetry_sign() {
        let mut samples = sample_ggd(2.0, 500_000, 41);
        for x in samples.iter_mut() {
            if *x < 0.0 {
                *x *= 2.0;
            }
        }
        let fit = fit_aggd(&samples).unwrap();
        assert!(fit.left_scale > fit.right_scale);
        assert!(fit.mean_param < 0.0);
    }

    #[test]
    fn aggd_one_sided_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let positives: Vec<f64> = (0..1000).map(|_| rng.random_range(0.1..5.0)).collect();
        assert!(matches!(
            fit_aggd(&positives),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn shapes_stay_on_grid() {
        let samples = sample_ggd(0.3, 10_000, 51);
        let fit = fit_ggd(&samples).unwrap();
        assert!((SHAPE_GRID_MIN..=SHAPE_GRID_MAX).contains(&fit.shape));
        let fit = fit_aggd(&samples).unwrap();
        assert!((SHAPE_GRID_MIN..=SHAPE_GRID_MAX).contains(&fit.shape));
    }
}
