//! Rank and linear correlation between objective and subjective scores.

use crate::error::{Error, Result};

fn guard(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::TooFewSamples {
            need: 3,
            got: x.len(),
        });
    }
    for (label, seq) in [("x", x), ("y", y)] {
        if seq.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteScore(format!(
                "{label} contains a non-finite value"
            )));
        }
        let first = seq[0];
        if seq.iter().all(|&v| v == first) {
            return Err(Error::ConstantInput(label.into()));
        }
    }
    Ok(())
}

/// Pearson product-moment correlation, clamped to `[-1, 1]`.
pub fn pcc(x: &[f64], y: &[f64]) -> Result<f64> {
    guard(x, y)?;
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    Ok((cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0))
}

/// Fractional ranks with ties assigned their average rank, 1-based.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // items i..=j share the average of ranks i+1 ..= j+1
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank-order correlation: Pearson correlation of average ranks.
pub fn srocc(x: &[f64], y: &[f64]) -> Result<f64> {
    guard(x, y)?;
    pcc(&average_ranks(x), &average_ranks(y))
}
