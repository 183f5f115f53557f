//! The NIQE no-reference engine.
//!
//! Clean photographs have locally normalized luminance coefficients that
//! are close to Gaussian; distortions pull them away. The engine quantifies
//! that: the MSCN transform normalizes the image, GGD/AGGD fits summarize
//! the coefficient statistics of sharp patches at two scales into a
//! 36-dimensional feature vector, and quality is the statistical distance
//! between the image's feature population and a pristine multivariate
//! Gaussian model. Lower is better; zero means indistinguishable from the
//! pristine model.

mod ggd;
mod model;

pub use ggd::{fit_aggd, fit_ggd, AggdFit, GgdFit, MIN_SAMPLES};
pub use model::{NiqeModel, NiqeParams, FEATURE_DIM};

use std::path::{Path, PathBuf};

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::image_io::{decode_to_luma, LumaImage};
use crate::kernels::{downsample_dyadic, local_moments, Border, GaussianWindow};
use crate::par;

/// Divisive stabilizer in the MSCN denominator.
pub const MSCN_STABILIZER: f64 = 1.0;

/// Features per scale: 2 from the GGD fit of the MSCN field plus 4 per
/// orientation from the AGGD fits of pairwise products.
pub const FEATURES_PER_SCALE: usize = 18;

const MSCN_WINDOW_RADIUS: usize = 3;
const MSCN_WINDOW_SIGMA: f64 = 7.0 / 6.0;

/// Minimum usable corpus size for training.
pub const MIN_CORPUS: usize = 25;

/// Mean-subtracted, contrast-normalized coefficients.
#[derive(Debug, Clone)]
pub struct MscnField {
    pub coefficients: LumaImage,
    /// Always [`MSCN_STABILIZER`]; recorded for transparency.
    pub stabilizer: f64,
}

fn mscn_window() -> GaussianWindow {
    GaussianWindow::new(MSCN_WINDOW_RADIUS, MSCN_WINDOW_SIGMA).expect("valid window")
}

/// `(I - mu) / (sigma + 1)` with local moments under a 7-tap sigma 7/6
/// Gaussian window and reflected borders.
pub fn mscn(img: &LumaImage) -> Result<MscnField> {
    if img.width() < 15 || img.height() < 15 {
        return Err(Error::ImageTooSmall {
            got_w: img.width(),
            got_h: img.height(),
            need: "at least 15x15 for the MSCN transform".into(),
        });
    }
    let (mu, sigma) = local_moments(img, &mscn_window(), Border::Reflect)?;
    let data: Vec<f64> = img
        .data()
        .iter()
        .zip(mu.data().iter().zip(sigma.data()))
        .map(|(&v, (&m, &s))| (v - m) / (s + MSCN_STABILIZER))
        .collect();
    Ok(MscnField {
        coefficients: LumaImage::new(img.width(), img.height(), data)?,
        stabilizer: MSCN_STABILIZER,
    })
}

/// The four pairwise-product orientations, in feature order.
#[derive(Debug, Clone, Copy)]
enum Orientation {
    Horizontal,
    Vertical,
    MainDiagonal,
    SecondaryDiagonal,
}

const ORIENTATIONS: [Orientation; 4] = [
    Orientation::Horizontal,
    Orientation::Vertical,
    Orientation::MainDiagonal,
    Orientation::SecondaryDiagonal,
];

/// Neighbor products of a block of the MSCN field, without wrap-around.
fn block_products(
    field: &LumaImage,
    x0: usize,
    y0: usize,
    size: usize,
    orientation: Orientation,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(size * size);
    match orientation {
        Orientation::Horizontal => {
            for y in y0..y0 + size {
                for x in x0..x0 + size - 1 {
                    out.push(field.get(x, y) * field.get(x + 1, y));
                }
            }
        }
        Orientation::Vertical => {
            for y in y0..y0 + size - 1 {
                for x in x0..x0 + size {
                    out.push(field.get(x, y) * field.get(x, y + 1));
                }
            }
        }
        Orientation::MainDiagonal => {
            for y in y0..y0 + size - 1 {
                for x in x0..x0 + size - 1 {
                    out.push(field.get(x, y) * field.get(x + 1, y + 1));
                }
            }
        }
        Orientation::SecondaryDiagonal => {
            for y in y0 + 1..y0 + size {
                for x in x0..x0 + size - 1 {
                    out.push(field.get(x, y) * field.get(x + 1, y - 1));
                }
            }
        }
    }
    out
}

/// 18 features of one block: GGD shape and variance of the coefficients,
/// then AGGD shape, mean parameter and the two scales per orientation.
/// `None` if any fit is degenerate for this block.
fn block_features(field: &LumaImage, x0: usize, y0: usize, size: usize) -> Option<[f64; 18]> {
    let mut coeffs = Vec::with_capacity(size * size);
    for y in y0..y0 + size {
        for x in x0..x0 + size {
            coeffs.push(field.get(x, y));
        }
    }
    let ggd = fit_ggd(&coeffs).ok()?;
    let mut features = [0.0; 18];
    features[0] = ggd.shape;
    features[1] = ggd.variance;
    for (i, &orientation) in ORIENTATIONS.iter().enumerate() {
        let products = block_products(field, x0, y0, size, orientation);
        let aggd = fit_aggd(&products).ok()?;
        let base = 2 + 4 * i;
        features[base] = aggd.shape;
        features[base + 1] = aggd.mean_param;
        features[base + 2] = aggd.left_scale;
        features[base + 3] = aggd.right_scale;
    }
    Some(features)
}

/// Per-patch 36-vectors for an image.
///
/// The scale-1 image is tiled into `patch_size` squares anchored at (0,0);
/// trailing partial tiles are discarded. Tiles whose mean local sigma is
/// at least `sharpness_fraction` of the sharpest tile are kept, and the
/// same selection is reused at half resolution with half-sized tiles.
/// Tiles with degenerate statistics (e.g. perfectly flat content) are
/// dropped.
pub fn niqe_features(img: &LumaImage, params: &NiqeParams) -> Result<Vec<[f64; FEATURE_DIM]>> {
    params.validate()?;
    let p = params.patch_size;
    if img.width() < 2 * p || img.height() < 2 * p {
        return Err(Error::ImageTooSmall {
            got_w: img.width(),
            got_h: img.height(),
            need: format!("at least {0}x{0} (twice the patch size)", 2 * p),
        });
    }

    let (_, sigma) = local_moments(img, &mscn_window(), Border::Reflect)?;
    let field1 = mscn(img)?.coefficients;
    let half = downsample_dyadic(img)?;
    let field2 = mscn(&half)?.coefficients;

    let blocks_x = img.width() / p;
    let blocks_y = img.height() / p;

    // block sharpness at scale 1
    let mut sharpness = vec![0.0; blocks_x * blocks_y];
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let mut sum = 0.0;
            for y in by * p..(by + 1) * p {
                for x in bx * p..(bx + 1) * p {
                    sum += sigma.get(x, y);
                }
            }
            sharpness[by * blocks_x + bx] = sum / (p * p) as f64;
        }
    }
    let max_sharp = sharpness.iter().cloned().fold(0.0f64, f64::max);
    let selected: Vec<(usize, usize)> = (0..blocks_y)
        .flat_map(|by| (0..blocks_x).map(move |bx| (bx, by)))
        .filter(|&(bx, by)| sharpness[by * blocks_x + bx] >= params.sharpness_fraction * max_sharp)
        .collect();

    let vectors = par::map_slice(&selected, |&(bx, by)| {
        let fine = block_features(&field1, bx * p, by * p, p)?;
        let coarse = block_features(&field2, bx * p / 2, by * p / 2, p / 2)?;
        let mut v = [0.0; FEATURE_DIM];
        v[..FEATURES_PER_SCALE].copy_from_slice(&fine);
        v[FEATURES_PER_SCALE..].copy_from_slice(&coarse);
        Some(v)
    });
    let vectors: Vec<[f64; FEATURE_DIM]> = vectors.into_iter().flatten().collect();
    if vectors.is_empty() {
        return Err(Error::NoPatches);
    }
    Ok(vectors)
}

/// Sample mean and covariance (n-1 denominator) of feature vectors.
/// A single vector yields a zero covariance.
pub fn feature_stats(rows: &[[f64; FEATURE_DIM]]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len();
    let mut mean = vec![0.0; FEATURE_DIM];
    for row in rows {
        for (m, &v) in mean.iter_mut().zip(row.iter()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![0.0; FEATURE_DIM * FEATURE_DIM];
    if n > 1 {
        for row in rows {
            for i in 0..FEATURE_DIM {
                let di = row[i] - mean[i];
                for j in i..FEATURE_DIM {
                    cov[i * FEATURE_DIM + j] += di * (row[j] - mean[j]);
                }
            }
        }
        let denom = (n - 1) as f64;
        for i in 0..FEATURE_DIM {
            for j in i..FEATURE_DIM {
                let v = cov[i * FEATURE_DIM + j] / denom;
                cov[i * FEATURE_DIM + j] = v;
                cov[j * FEATURE_DIM + i] = v;
            }
        }
    }
    (mean, cov)
}

/// Outcome of [`train_pristine`]: the model plus a training summary.
#[derive(Debug)]
pub struct TrainedModel {
    pub model: NiqeModel,
    pub images_used: usize,
    pub patches_used: usize,
    /// Images that contributed nothing, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

/// Train the pristine model by pooling selected-patch features across a
/// corpus of clean images. Images that fail to decode or yield no patches
/// are skipped (reported in the summary); at least [`MIN_CORPUS`] images
/// must remain usable.
pub fn train_pristine(corpus: &[PathBuf], params: NiqeParams) -> Result<TrainedModel> {
    params.validate()?;
    let per_image: Vec<(PathBuf, std::result::Result<Vec<[f64; FEATURE_DIM]>, String>)> =
        par::map_slice(corpus, |path| {
            let outcome = decode_to_luma(path)
                .and_then(|img| niqe_features(&img, &params))
                .map_err(|e| e.to_string());
            (path.clone(), outcome)
        });

    let mut pooled: Vec<[f64; FEATURE_DIM]> = Vec::new();
    let mut skipped = Vec::new();
    let mut images_used = 0usize;
    for (path, outcome) in per_image {
        match outcome {
            Ok(vectors) => {
                images_used += 1;
                pooled.extend(vectors);
            }
            Err(reason) => skipped.push((path, reason)),
        }
    }
    if images_used < MIN_CORPUS {
        return Err(Error::CorpusTooSmall {
            got: images_used,
            need: MIN_CORPUS,
        });
    }
    let (mean, covariance) = feature_stats(&pooled);
    let model = NiqeModel::new(params, mean, covariance)?;
    Ok(TrainedModel {
        model,
        images_used,
        patches_used: pooled.len(),
        skipped,
    })
}

fn quadratic_form(diff: &DVector<f64>, pooled: &DMatrix<f64>) -> Option<f64> {
    // plain inverse when well-conditioned, Moore-Penrose otherwise
    if let Some(chol) = Cholesky::new(pooled.clone()) {
        let solved = chol.solve(diff);
        let q = diff.dot(&solved);
        if q.is_finite() {
            return Some(q);
        }
    }
    let svd = pooled.clone().svd(true, true);
    let max_singular = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let pinv = svd.pseudo_inverse(1e-10 * max_singular).ok()?;
    let q = diff.dot(&(&pinv * diff));
    q.is_finite().then_some(q)
}

/// Statistical distance between the image's patch-feature population and
/// the pristine model. Nonnegative; lower is better.
pub fn niqe_score(img: &LumaImage, model: &NiqeModel) -> Result<f64> {
    let features = niqe_features(img, &model.params)?;
    niqe_score_from_features(&features, model)
}

/// Score a precomputed feature population against the model.
pub fn niqe_score_from_features(
    features: &[[f64; FEATURE_DIM]],
    model: &NiqeModel,
) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::NoPatches);
    }
    let (sample_mean, sample_cov) = feature_stats(features);
    let diff = DVector::from_iterator(
        FEATURE_DIM,
        model.mean.iter().zip(&sample_mean).map(|(a, b)| a - b),
    );
    let pooled = (model.covariance_matrix()
        + DMatrix::from_row_slice(FEATURE_DIM, FEATURE_DIM, &sample_cov))
        * 0.5;
    let q = quadratic_form(&diff, &pooled)
        .ok_or_else(|| Error::NonFiniteScore("pooled covariance produced no finite form".into()))?;
    Ok(q.max(0.0).sqrt())
}

/// Decode every readable image in a directory, sorted by file name.
/// Convenience for corpus training.
pub fn list_corpus_dir(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| {
                    matches!(
                        e.to_ascii_lowercase().as_str(),
                        "png" | "jpg" | "jpeg" | "pgm" | "bmp"
                    )
                })
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    Ok(paths)
}
