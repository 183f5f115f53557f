//! Deterministic procedural scenes for tests, benches and corpus
//! fabrication.
//!
//! The generator layers occluding shaded disks with a power-law size
//! distribution (a dead-leaves construction), adds multi-scale surface
//! texture under a smooth variance envelope, scatters a few strongly
//! detailed spots, then applies a small optical blur plus sensor grain.
//! The mix of smooth areas, occlusion edges and sparse detail is tuned so
//! locally normalized coefficients come out near-Gaussian (GGD shape
//! around 2), the statistic the no-reference engine expects of clean
//! photographic content.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image_io::LumaImage;
use crate::kernels::{convolve_separable, Border, GaussianWindow};

/// Render a deterministic scene. Same `(width, height, seed)` always
/// yields the same pixels. Intended sizes are 64x64 and up.
pub fn scene(width: usize, height: usize, seed: u64) -> LumaImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce9e_1ea5e5);
    let mut data = vec![128.0f64; width * height];

    // occluding leaves, p(r) ~ r^-3 so coverage is scale-invariant
    let r_min = 16.0f64;
    let r_max = (width.min(height) as f64) / 2.0;
    let mean_r2 = 2.0 * r_min * r_min * (r_max / r_min).max(1.5).ln();
    let count = ((3.0 * (width * height) as f64) / (std::f64::consts::PI * mean_r2)) as usize + 20;
    for _ in 0..count {
        let u: f64 = rng.random();
        let inv2 = u / (r_min * r_min) + (1.0 - u) / (r_max * r_max);
        let radius = (1.0 / inv2).sqrt();

        let cx = rng.random_range(-radius..width as f64 + radius);
        let cy = rng.random_range(-radius..height as f64 + radius);
        let base: f64 = 128.0 + 55.0 * rng.random_range(-1.0f64..1.0);
        // shallow linear shading across the disk
        let gx: f64 = rng.random_range(-8.0..8.0) / radius;
        let gy: f64 = rng.random_range(-8.0..8.0) / radius;

        let x0 = (cx - radius).floor().max(0.0) as usize;
        let x1 = ((cx + radius).ceil() as usize).min(width.saturating_sub(1));
        let y0 = (cy - radius).floor().max(0.0) as usize;
        let y1 = ((cy + radius).ceil() as usize).min(height.saturating_sub(1));
        let r2 = radius * radius;
        for y in y0..=y1 {
            let dy = y as f64 - cy;
            for x in x0..=x1 {
                let dx = x as f64 - cx;
                if dx * dx + dy * dy <= r2 {
                    data[y * width + x] = (base + gx * dx + gy * dy).clamp(5.0, 250.0);
                }
            }
        }
    }

    // multi-scale texture under a smooth envelope that clamps to zero over
    // large areas, leaving genuinely smooth regions like sky or walls
    let envelope: Vec<f64> = {
        let field = smoothed_noise(width, height, 10, 6.0, &mut rng);
        field.iter().map(|&v| (0.2 + v).clamp(0.0, 2.2)).collect()
    };
    for (amplitude, radius, sigma) in [(14.0, 1, 0.7), (18.0, 3, 1.8), (20.0, 6, 3.5)] {
        let octave = smoothed_noise(width, height, radius, sigma, &mut rng);
        for ((v, t), e) in data.iter_mut().zip(octave).zip(&envelope) {
            *v = (*v + amplitude * t * e).clamp(0.0, 255.0);
        }
    }

    // sparse strongly detailed spots; localized structure is what gives
    // natural bandpass statistics their heavy tails
    let n_spots = (width * height) / 4096 + 2;
    for _ in 0..n_spots {
        let radius: f64 = rng.random_range(8.0..20.0);
        let cx = rng.random_range(0.0..width as f64);
        let cy = rng.random_range(0.0..height as f64);
        let x0 = (cx - radius).floor().max(0.0) as usize;
        let x1 = ((cx + radius).ceil() as usize).min(width.saturating_sub(1));
        let y0 = (cy - radius).floor().max(0.0) as usize;
        let y1 = ((cy + radius).ceil() as usize).min(height.saturating_sub(1));
        let r2 = radius * radius;
        for y in y0..=y1 {
            let dy = y as f64 - cy;
            for x in x0..=x1 {
                let dx = x as f64 - cx;
                let d2 = dx * dx + dy * dy;
                if d2 <= r2 {
                    let falloff = 1.0 - d2 / r2;
                    let idx = y * width + x;
                    data[idx] =
                        (data[idx] + 45.0 * falloff * sample_standard_normal(&mut rng)).clamp(0.0, 255.0);
                }
            }
        }
    }

    let img = LumaImage::new(width, height, data).expect("finite by construction");

    // optical blur
    let psf = GaussianWindow::new(2, 0.6).expect("valid window");
    let blurred = convolve_separable(&img, &psf, Border::Reflect).expect("size checked by caller");

    // fine grain so flat regions are not digitally flat
    let mut noisy = blurred.into_data();
    for v in noisy.iter_mut() {
        let n: f64 = sample_standard_normal(&mut rng);
        *v = (*v + 0.7 * n).clamp(0.0, 255.0);
    }
    LumaImage::new(width, height, noisy).expect("finite by construction")
}

/// Add clamped Gaussian noise of standard deviation `sigma`.
pub fn add_gaussian_noise(img: &LumaImage, sigma: f64, seed: u64) -> LumaImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0a11_0f_5a17);
    let data: Vec<f64> = img
        .data()
        .iter()
        .map(|&v| (v + sigma * sample_standard_normal(&mut rng)).clamp(0.0, 255.0))
        .collect();
    LumaImage::new(img.width(), img.height(), data).expect("finite by construction")
}

/// Unit-variance low-passed white noise.
fn smoothed_noise(
    width: usize,
    height: usize,
    radius: usize,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let white: Vec<f64> = (0..width * height)
        .map(|_| sample_standard_normal(rng))
        .collect();
    let img = LumaImage::new(width, height, white).expect("finite by construction");
    let window = GaussianWindow::new(radius, sigma).expect("valid window");
    let smooth = convolve_separable(&img, &window, Border::Reflect).expect("dims preserved");
    // blurring scales the standard deviation by the tap energy
    let tap_energy: f64 = window.taps().iter().map(|t| t * t).sum();
    smooth.data().iter().map(|&v| v / tap_energy).collect()
}

/// Box-Muller standard normal draw; keeps rand_distr out of the library
/// build.
fn sample_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
