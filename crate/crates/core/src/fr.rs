//! Full-reference quality scores: PSNR, single-scale SSIM and MS-SSIM.
//!
//! MS-SSIM follows the usual 5-scale formulation: contrast-structure terms
//! at every scale, the luminance term only at the coarsest, combined as a
//! weighted geometric product. All constants (scale exponents, K1/K2, the
//! 11x11 sigma 1.5 window) are the published defaults so scores line up
//! with other implementations.

use crate::error::{Error, Result};
use crate::image_io::LumaImage;
use crate::kernels::{convolve_separable, downsample_dyadic, Border, GaussianWindow};

/// Configuration for [`ssim`] and [`ms_ssim`].
#[derive(Debug, Clone)]
pub struct MsSsimConfig {
    pub scales: usize,
    pub scale_weights: Vec<f64>,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub window: GaussianWindow,
}

impl Default for MsSsimConfig {
    fn default() -> Self {
        // the published exponents, renormalized: as printed they sum to
        // 1.0001, and the weighted product needs an exact partition of
        // unity for ms_ssim(I, I) = 1
        let raw = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
        let sum: f64 = raw.iter().sum();
        Self {
            scales: 5,
            scale_weights: raw.iter().map(|w| w / sum).collect(),
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
            window: GaussianWindow::new(5, 1.5).expect("valid default window"),
        }
    }
}

impl MsSsimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scales == 0 {
            return Err(Error::InvalidConfig("scales must be >= 1".into()));
        }
        if self.scale_weights.len() != self.scales {
            return Err(Error::InvalidConfig(format!(
                "{} scale weights for {} scales",
                self.scale_weights.len(),
                self.scales
            )));
        }
        let sum: f64 = self.scale_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidConfig(format!(
                "scale weights sum to {sum}, expected 1"
            )));
        }
        if !(self.k1 > 0.0) || !(self.k2 > 0.0) {
            return Err(Error::InvalidConfig("k1 and k2 must be positive".into()));
        }
        if !(self.dynamic_range > 0.0) {
            return Err(Error::InvalidConfig("dynamic range must be positive".into()));
        }
        Ok(())
    }

    /// Smallest image side accepted by [`ms_ssim`] under this config.
    pub fn min_dimension(&self) -> usize {
        self.window.span() << (self.scales - 1)
    }
}

fn check_dims(a: &LumaImage, b: &LumaImage) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch {
            w1: a.width(),
            h1: a.height(),
            w2: b.width(),
            h2: b.height(),
        });
    }
    Ok(())
}

/// Peak signal-to-noise ratio in decibels against a 255 peak. Identical
/// images return `f64::INFINITY` so batch scoring never aborts on the
/// zero-MSE case.
pub fn psnr(reference: &LumaImage, distorted: &LumaImage) -> Result<f64> {
    check_dims(reference, distorted)?;
    let n = reference.data().len() as f64;
    let mse: f64 = reference
        .data()
        .iter()
        .zip(distorted.data())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * ((255.0 * 255.0) / mse).log10())
}

/// Per-scale means of the SSIM map and of its contrast-structure factor.
fn ssim_pass(reference: &LumaImage, distorted: &LumaImage, cfg: &MsSsimConfig) -> Result<(f64, f64)> {
    let w = &cfg.window;
    let c1 = (cfg.k1 * cfg.dynamic_range).powi(2);
    let c2 = (cfg.k2 * cfg.dynamic_range).powi(2);

    let mul = |a: &LumaImage, b: &LumaImage| -> LumaImage {
        LumaImage::new(
            a.width(),
            a.height(),
            a.data().iter().zip(b.data()).map(|(&x, &y)| x * y).collect(),
        )
        .expect("finite products")
    };

    let mu1 = convolve_separable(reference, w, Border::Valid)?;
    let mu2 = convolve_separable(distorted, w, Border::Valid)?;
    let e11 = convolve_separable(&mul(reference, reference), w, Border::Valid)?;
    let e22 = convolve_separable(&mul(distorted, distorted), w, Border::Valid)?;
    let e12 = convolve_separable(&mul(reference, distorted), w, Border::Valid)?;

    let n = mu1.data().len() as f64;
    let mut ssim_sum = 0.0;
    let mut cs_sum = 0.0;
    for i in 0..mu1.data().len() {
        let m1 = mu1.data()[i];
        let m2 = mu2.data()[i];
        let s11 = e11.data()[i] - m1 * m1;
        let s22 = e22.data()[i] - m2 * m2;
        let s12 = e12.data()[i] - m1 * m2;
        let cs = (2.0 * s12 + c2) / (s11 + s22 + c2);
        let lum = (2.0 * m1 * m2 + c1) / (m1 * m1 + m2 * m2 + c1);
        cs_sum += cs;
        ssim_sum += lum * cs;
    }
    Ok((ssim_sum / n, cs_sum / n))
}

/// Mean single-scale SSIM over the valid-mode local statistics map.
pub fn ssim(reference: &LumaImage, distorted: &LumaImage, cfg: &MsSsimConfig) -> Result<f64> {
    cfg.validate()?;
    check_dims(reference, distorted)?;
    let (mean_ssim, _) = ssim_pass(reference, distorted, cfg)?;
    Ok(mean_ssim)
}

/// Multi-scale SSIM in `[0, 1]`. Negative per-scale terms are clamped to 0
/// before the fractional exponent to keep the geometric product real.
pub fn ms_ssim(reference: &LumaImage, distorted: &LumaImage, cfg: &MsSsimConfig) -> Result<f64> {
    cfg.validate()?;
    check_dims(reference, distorted)?;
    let min_dim = reference.width().min(reference.height());
    if min_dim < cfg.min_dimension() {
        return Err(Error::ImageTooSmall {
            got_w: reference.width(),
            got_h: reference.height(),
            need: format!(
                "min side {} for {} scales of a {}-tap window",
                cfg.min_dimension(),
                cfg.scales,
                cfg.window.span()
            ),
        });
    }

    let mut a = reference.clone();
    let mut b = distorted.clone();
    let mut score = 1.0;
    for (scale, &weight) in cfg.scale_weights.iter().enumerate() {
        let (mean_ssim, mean_cs) = ssim_pass(&a, &b, cfg)?;
        let term = if scale + 1 == cfg.scales {
            mean_ssim
        } else {
            mean_cs
        };
        score *= term.max(0.0).powf(weight);
        if scale + 1 < cfg.scales {
            a = downsample_dyadic(&a)?;
            b = downsample_dyadic(&b)?;
        }
    }
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn noisy_pair(seed: u64, sigma: f64) -> (LumaImage, LumaImage) {
        let img = synth::scene(64, 64, seed);
        let noisy = synth::add_gaussian_noise(&img, sigma, seed + 1000);
        (img, noisy)
    }

    #[test]
    fn psnr_hand_cases() {
        let a = LumaImage::constant(8, 8, 100.0).unwrap();
        assert!(psnr(&a, &a).unwrap().is_infinite());

        let b = LumaImage::constant(8, 8, 101.0).unwrap();
        let db = psnr(&a, &b).unwrap();
        assert!((db - 48.1308).abs() < 1e-3, "{db}");

        let zero = LumaImage::constant(8, 8, 0.0).unwrap();
        let full = LumaImage::constant(8, 8, 255.0).unwrap();
        assert!((psnr(&zero, &full).unwrap() - 0.0).abs() < 1e-9);

        let tall = LumaImage::constant(8, 9, 0.0).unwrap();
        assert!(matches!(
            psnr(&a, &tall),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ssim_identity_is_one() {
        let img = synth::scene(64, 64, 5);
        let s = ssim(&img, &img, &MsSsimConfig::default()).unwrap();
        assert!((s - 1.0).abs() < 1e-9, "{s}");
    }

    /// Scalar per-pixel brute-force SSIM-map oracle, independent of the
    /// separable convolution path.
    fn ssim_oracle(a: &LumaImage, b: &LumaImage, cfg: &MsSsimConfig) -> f64 {
        let r = cfg.window.radius();
        let taps = cfg.window.taps();
        let c1 = (cfg.k1 * cfg.dynamic_range).powi(2);
        let c2 = (cfg.k2 * cfg.dynamic_range).powi(2);
        let mut sum = 0.0;
        let mut count = 0usize;
        for cy in r..a.height() - r {
            for cx in r..a.width() - r {
                let (mut m1, mut m2, mut e11, mut e22, mut e12) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for ky in 0..taps.len() {
                    for kx in 0..taps.len() {
                        let wgt = taps[ky] * taps[kx];
                        let x = a.get(cx + kx - r, cy + ky - r);
                        let y = b.get(cx + kx - r, cy + ky - r);
                        m1 += wgt * x;
                        m2 += wgt * y;
                        e11 += wgt * x * x;
                        e22 += wgt * y * y;
                        e12 += wgt * x * y;
                    }
                }
                let s11 = e11 - m1 * m1;
                let s22 = e22 - m2 * m2;
                let s12 = e12 - m1 * m2;
                sum += ((2.0 * m1 * m2 + c1) * (2.0 * s12 + c2))
                    / ((m1 * m1 + m2 * m2 + c1) * (s11 + s22 + c2));
                count += 1;
            }
        }
        sum / count as f64
    }

    #[test]
    fn ssim_matches_per_pixel_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let a = LumaImage::from_fn(64, 64, |_, _| rng.random_range(0.0..255.0)).unwrap();
        let b = synth::add_gaussian_noise(&a, 20.0, 78);
        let cfg = MsSsimConfig::default();
        let fast = ssim(&a, &b, &cfg).unwrap();
        let slow = ssim_oracle(&a, &b, &cfg);
        assert!((fast - slow).abs() < 1e-8, "{fast} vs {slow}");
    }

    #[test]
    fn inversion_hurts_more_than_matched_mse_noise() {
        let cfg = MsSsimConfig::default();
        for seed in [21u64, 22, 23] {
            let img = synth::scene(96, 96, seed);
            let inverted = LumaImage::new(
                96,
                96,
                img.data().iter().map(|&v| 255.0 - v).collect(),
            )
            .unwrap();
            // noise with the same MSE as the inversion
            let mse_inv = img
                .data()
                .iter()
                .zip(inverted.data())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / img.data().len() as f64;
            let noisy = synth::add_gaussian_noise(&img, mse_inv.sqrt(), seed + 50);
            let s_inv = ssim(&img, &inverted, &cfg).unwrap();
            let s_noise = ssim(&img, &noisy, &cfg).unwrap();
            assert!(
                s_inv < s_noise,
                "seed {seed}: inverted {s_inv} !< noisy {s_noise}"
            );
        }
    }

    #[test]
    fn ms_ssim_identity_is_one() {
        let img = synth::scene(192, 192, 2);
        let s = ms_ssim(&img, &img, &MsSsimConfig::default()).unwrap();
        assert!((s - 1.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn ms_ssim_orders_noise_severity() {
        let img = synth::scene(192, 192, 31);
        let light = synth::add_gaussian_noise(&img, 5.0, 1);
        let heavy = synth::add_gaussian_noise(&img, 30.0, 2);
        let cfg = MsSsimConfig::default();
        let s_light = ms_ssim(&img, &light, &cfg).unwrap();
        let s_heavy = ms_ssim(&img, &heavy, &cfg).unwrap();
        assert!(s_light > s_heavy, "{s_light} !> {s_heavy}");
    }

    #[test]
    fn ms_ssim_rejects_small_images() {
        let img = synth::scene(128, 128, 1);
        assert!(matches!(
            ms_ssim(&img, &img, &MsSsimConfig::default()),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = MsSsimConfig::default();
        cfg.scale_weights[0] += 0.5;
        assert!(cfg.validate().is_err());

        let mut cfg = MsSsimConfig::default();
        cfg.k2 = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = MsSsimConfig::default();
        cfg.scale_weights.pop();
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn psnr_is_symmetric(seed in 0u64..1000) {
            let (a, b) = noisy_pair(seed, 12.0);
            let ab = psnr(&a, &b).unwrap();
            let ba = psnr(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn ssim_stays_in_range(seed in 0u64..200, sigma in 0.0f64..60.0) {
            let (a, b) = noisy_pair(seed, sigma);
            let s = ssim(&a, &b, &MsSsimConfig::default()).unwrap();
            prop_assert!((-1.0..=1.0 + 1e-12).contains(&s));
        }
    }
}
