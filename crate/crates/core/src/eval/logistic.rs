//! The five-parameter monotone logistic mapping used before computing
//! linear correlation, fitted by least squares.
//!
//! `f(x) = p0 * (1/2 - 1/(1 + exp(p1 * (x - p2)))) + p3 * x + p4`
//!
//! Fitting runs a derivative-free Nelder-Mead search from a data-driven
//! start (saturations from the MOS extremes, midpoint at the score median,
//! slope from the range ratio, linear term zero), with a plain linear
//! least-squares candidate kept as the monotone fallback.

use crate::error::{Error, Result};

/// A fitted monotone mapping from objective scores to the MOS scale.
#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub params: [f64; 5],
    /// False when the optimizer hit its iteration budget or the fallback
    /// linear map won; the returned mapping is still usable.
    pub converged: bool,
    /// Root-mean-square residual of the winning candidate.
    pub residual: f64,
}

impl LogisticFit {
    pub fn map(&self, x: f64) -> f64 {
        logistic(&self.params, x)
    }
}

fn logistic(p: &[f64; 5], x: f64) -> f64 {
    let t = (p[1] * (x - p[2])).clamp(-500.0, 500.0);
    p[0] * (0.5 - 1.0 / (1.0 + t.exp())) + p[3] * x + p[4]
}

fn sse(p: &[f64; 5], scores: &[f64], mos: &[f64]) -> f64 {
    scores
        .iter()
        .zip(mos)
        .map(|(&x, &y)| {
            let d = logistic(p, x) - y;
            d * d
        })
        .sum()
}

/// True when `f` never reverses direction over the observed score range,
/// sampled densely plus at the data points themselves.
fn is_monotone(p: &[f64; 5], scores: &[f64]) -> bool {
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut xs: Vec<f64> = (0..=256).map(|i| lo + (hi - lo) * i as f64 / 256.0).collect();
    xs.extend_from_slice(scores);
    xs.sort_by(f64::total_cmp);
    let mut up = false;
    let mut down = false;
    for w in xs.windows(2) {
        let d = logistic(p, w[1]) - logistic(p, w[0]);
        if d > 0.0 {
            up = true;
        } else if d < 0.0 {
            down = true;
        }
    }
    !(up && down)
}

struct NelderMead {
    max_iter: usize,
    tol: f64,
}

impl NelderMead {
    fn minimize<F: Fn(&[f64; 5]) -> f64>(&self, start: [f64; 5], f: F) -> ([f64; 5], f64, bool) {
        const N: usize = 5;
        let mut simplex: Vec<[f64; 5]> = Vec::with_capacity(N + 1);
        simplex.push(start);
        for i in 0..N {
            let mut v = start;
            let step = if v[i].abs() > 1e-8 { 0.1 * v[i] } else { 0.05 };
            v[i] += step;
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(&f).collect();

        let mut converged = false;
        for _ in 0..self.max_iter {
            let mut order: Vec<usize> = (0..=N).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let best = order[0];
            let worst = order[N];
            let second_worst = order[N - 1];

            if (values[worst] - values[best]).abs() <= self.tol * (1.0 + values[best].abs()) {
                converged = true;
                break;
            }

            // centroid of all but the worst
            let mut centroid = [0.0; 5];
            for &idx in &order[..N] {
                for (c, v) in centroid.iter_mut().zip(&simplex[idx]) {
                    *c += v / N as f64;
                }
            }

            let blend = |a: f64| {
                let mut out = [0.0; 5];
                for i in 0..5 {
                    out[i] = centroid[i] + a * (simplex[worst][i] - centroid[i]);
                }
                out
            };

            let reflected = blend(-1.0);
            let f_reflected = f(&reflected);
            if f_reflected < values[best] {
                let expanded = blend(-2.0);
                let f_expanded = f(&expanded);
                if f_expanded < f_reflected {
                    simplex[worst] = expanded;
                    values[worst] = f_expanded;
                } else {
                    simplex[worst] = reflected;
                    values[worst] = f_reflected;
                }
            } else if f_reflected < values[second_worst] {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            } else {
                let contracted = if f_reflected < values[worst] {
                    blend(-0.5)
                } else {
                    blend(0.5)
                };
                let f_contracted = f(&contracted);
                if f_contracted < values[worst].min(f_reflected) {
                    simplex[worst] = contracted;
                    values[worst] = f_contracted;
                } else {
                    // shrink toward the best vertex
                    let anchor = simplex[best];
                    for idx in 0..=N {
                        if idx == best {
                            continue;
                        }
                        for i in 0..5 {
                            simplex[idx][i] = anchor[i] + 0.5 * (simplex[idx][i] - anchor[i]);
                        }
                        values[idx] = f(&simplex[idx]);
                    }
                }
            }
        }

        let mut best_idx = 0;
        for i in 1..=N {
            if values[i] < values[best_idx] {
                best_idx = i;
            }
        }
        (simplex[best_idx], values[best_idx], converged)
    }
}

/// Ordinary least squares line `y = a x + b`; always monotone.
fn linear_candidate(scores: &[f64], mos: &[f64]) -> [f64; 5] {
    let n = scores.len() as f64;
    let mx = scores.iter().sum::<f64>() / n;
    let my = mos.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (&x, &y) in scores.iter().zip(mos) {
        cov += (x - mx) * (y - my);
        var += (x - mx) * (x - mx);
    }
    let slope = if var > 0.0 { cov / var } else { 0.0 };
    [0.0, 0.0, 0.0, slope, my - slope * mx]
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Least-squares fit of the 5-parameter logistic. Needs at least 5 points
/// and a nonconstant score vector; falls back to a monotone linear map if
/// the search fails to produce a monotone improvement.
pub fn fit_logistic(scores: &[f64], mos: &[f64]) -> Result<LogisticFit> {
    if scores.len() != mos.len() {
        return Err(Error::LengthMismatch(scores.len(), mos.len()));
    }
    if scores.len() < 5 {
        return Err(Error::TooFewSamples {
            need: 5,
            got: scores.len(),
        });
    }
    if scores.iter().chain(mos.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteScore("logistic fit input".into()));
    }
    if scores.iter().all(|&v| v == scores[0]) {
        return Err(Error::ConstantInput("objective scores".into()));
    }

    let mos_min = mos.iter().cloned().fold(f64::INFINITY, f64::min);
    let mos_max = mos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let score_min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let score_max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let score_range = score_max - score_min;

    let mut sorted = scores.to_vec();
    let score_median = median(&mut sorted);

    // direction of the relationship decides the sigmoid sign
    let dir = {
        let mx = scores.iter().sum::<f64>() / scores.len() as f64;
        let my = mos.iter().sum::<f64>() / mos.len() as f64;
        let cov: f64 = scores
            .iter()
            .zip(mos)
            .map(|(&x, &y)| (x - mx) * (y - my))
            .sum();
        if cov < 0.0 {
            -1.0
        } else {
            1.0
        }
    };

    let amplitude = mos_max - mos_min;
    let offset = 0.5 * (mos_max + mos_min);
    let nm = NelderMead {
        max_iter: 2000,
        tol: 1e-12,
    };

    let objective = |p: &[f64; 5]| sse(p, scores, mos);

    // multi-start over slope scales; all deterministic
    let mut candidates: Vec<([f64; 5], f64, bool)> = Vec::new();
    for slope_scale in [2.0, 8.0, 32.0] {
        let start = [
            amplitude,
            dir * slope_scale / score_range,
            score_median,
            0.0,
            offset,
        ];
        candidates.push(nm.minimize(start, objective));
    }
    let linear = linear_candidate(scores, mos);
    candidates.push((linear, sse(&linear, scores, mos), true));

    let n = scores.len() as f64;
    let mut best: Option<(usize, f64)> = None;
    for (i, (params, value, _)) in candidates.iter().enumerate() {
        if !is_monotone(params, scores) {
            continue;
        }
        if best.map(|(_, v)| *value < v).unwrap_or(true) {
            best = Some((i, *value));
        }
    }
    // the linear candidate is always monotone, so a winner exists
    let (idx, value) = best.expect("linear candidate is monotone");
    let (params, _, nm_converged) = candidates[idx];
    Ok(LogisticFit {
        params,
        converged: nm_converged,
        residual: (value / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::corr::pcc;
    use rand::{Rng, SeedableRng};

    #[test]
    fn recovers_noiseless_logistic() {
        let truth = [60.0, 0.9, 5.0, 0.4, 40.0];
        let scores: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let mos: Vec<f64> = scores.iter().map(|&x| logistic(&truth, x)).collect();
        let fit = fit_logistic(&scores, &mos).unwrap();
        let mapped: Vec<f64> = scores.iter().map(|&x| fit.map(x)).collect();
        let rho = pcc(&mapped, &mos).unwrap();
        assert!(rho > 1.0 - 1e-6, "mapped PCC {rho}, residual {}", fit.residual);
    }

    #[test]
    fn linear_data_does_not_lose_correlation() {
        let scores: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let mos: Vec<f64> = scores.iter().map(|&x| 3.0 * x - 7.0).collect();
        let raw = pcc(&scores, &mos).unwrap();
        let fit = fit_logistic(&scores, &mos).unwrap();
        let mapped: Vec<f64> = scores.iter().map(|&x| fit.map(x)).collect();
        let rho = pcc(&mapped, &mos).unwrap();
        assert!(rho >= raw - 1e-9, "mapped {rho} < raw {raw}");
    }

    #[test]
    fn four_points_rejected() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            fit_logistic(&x, &x),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn constant_scores_rejected() {
        let x = [2.0; 8];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        assert!(matches!(fit_logistic(&x, &y), Err(Error::ConstantInput(_))));
    }

    #[test]
    fn fitted_map_is_monotone_on_noisy_data() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for _ in 0..10 {
            let scores: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..1.0)).collect();
            let mos: Vec<f64> = scores
                .iter()
                .map(|&x| 80.0 * x + rng.random_range(-10.0..10.0))
                .collect();
            let fit = fit_logistic(&scores, &mos).unwrap();
            assert!(is_monotone(&fit.params, &scores));
        }
    }

    #[test]
    fn inverse_polarity_handled() {
        // lower scores mean better quality here
        let scores: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let truth = [50.0, -0.5, 10.0, 0.0, 50.0];
        let mos: Vec<f64> = scores.iter().map(|&x| logistic(&truth, x)).collect();
        let fit = fit_logistic(&scores, &mos).unwrap();
        let mapped: Vec<f64> = scores.iter().map(|&x| fit.map(x)).collect();
        let rho = pcc(&mapped, &mos).unwrap();
        assert!(rho > 1.0 - 1e-6, "{rho}");
    }
}
