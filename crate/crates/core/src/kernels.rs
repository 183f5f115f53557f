//! Shared 2-D numerical kernels: separable Gaussian convolution, local
//! moment maps and dyadic downsampling.
//!
//! Both metric engines are built on these. The MS-SSIM path convolves in
//! `valid` mode with an 11-tap sigma 1.5 window; the NIQE path uses
//! `reflect` mode with a 7-tap sigma 7/6 window. Rows are processed in
//! parallel when the `parallel` feature is on.

use crate::error::{Error, Result};
use crate::image_io::LumaImage;
use crate::par;

/// Border handling for convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Border {
    /// Only fully-covered pixels; output shrinks by the window radius on
    /// every side.
    Valid,
    /// Symmetric half-sample extension (`[c b a | a b c | c b a]`); output
    /// keeps the input dimensions.
    Reflect,
}

/// A normalized, symmetric 1-D Gaussian window applied separably.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWindow {
    radius: usize,
    sigma: f64,
    taps: Vec<f64>,
}

impl GaussianWindow {
    pub fn new(radius: usize, sigma: f64) -> Result<Self> {
        if radius == 0 {
            return Err(Error::InvalidConfig("window radius must be >= 1".into()));
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "window sigma must be positive, got {sigma}"
            )));
        }
        let mut taps = vec![0.0; 2 * radius + 1];
        for off in 0..=radius {
            let w = (-((off * off) as f64) / (2.0 * sigma * sigma)).exp();
            taps[radius + off] = w;
            taps[radius - off] = w;
        }
        let sum: f64 = taps.iter().sum();
        for t in &mut taps {
            *t /= sum;
        }
        Ok(Self {
            radius,
            sigma,
            taps,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Full window span, `2 * radius + 1`.
    pub fn span(&self) -> usize {
        2 * self.radius + 1
    }
}

#[inline]
fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - 1 - i
    } else {
        i
    };
    debug_assert!(j >= 0 && j < n);
    j as usize
}

fn check_size(img: &LumaImage, w: &GaussianWindow, border: Border) -> Result<()> {
    let r = w.radius;
    let ok = match border {
        Border::Valid => img.width() > 2 * r && img.height() > 2 * r,
        // one reflection must be enough to cover the window
        Border::Reflect => img.width() > r && img.height() > r,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::ImageTooSmall {
            got_w: img.width(),
            got_h: img.height(),
            need: format!("radius-{r} window in {border:?} mode"),
        })
    }
}

/// Convolve with the separable window. `Valid` output is
/// `(width - 2r) x (height - 2r)`; `Reflect` preserves dimensions.
pub fn convolve_separable(
    img: &LumaImage,
    w: &GaussianWindow,
    border: Border,
) -> Result<LumaImage> {
    check_size(img, w, border)?;
    let r = w.radius;
    let taps = &w.taps;
    let (in_w, in_h) = (img.width(), img.height());

    match border {
        Border::Valid => {
            let (out_w, out_h) = (in_w - 2 * r, in_h - 2 * r);
            // horizontal pass: out_w x in_h
            let mut mid = vec![0.0; out_w * in_h];
            par::for_each_row_mut(&mut mid, out_w, |y, row| {
                let src = img.row(y);
                for (x, out) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, &t) in taps.iter().enumerate() {
                        acc += t * src[x + k];
                    }
                    *out = acc;
                }
            });
            // vertical pass: out_w x out_h
            let mut out = vec![0.0; out_w * out_h];
            par::for_each_row_mut(&mut out, out_w, |y, row| {
                for (x, o) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, &t) in taps.iter().enumerate() {
                        acc += t * mid[(y + k) * out_w + x];
                    }
                    *o = acc;
                }
            });
            LumaImage::new(out_w, out_h, out)
        }
        Border::Reflect => {
            let mut mid = vec![0.0; in_w * in_h];
            par::for_each_row_mut(&mut mid, in_w, |y, row| {
                let src = img.row(y);
                for (x, out) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, &t) in taps.iter().enumerate() {
                        let sx = reflect_index(x as isize + k as isize - r as isize, in_w);
                        acc += t * src[sx];
                    }
                    *out = acc;
                }
            });
            let mut out = vec![0.0; in_w * in_h];
            par::for_each_row_mut(&mut out, in_w, |y, row| {
                for (x, o) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, &t) in taps.iter().enumerate() {
                        let sy = reflect_index(y as isize + k as isize - r as isize, in_h);
                        acc += t * mid[sy * in_w + x];
                    }
                    *o = acc;
                }
            });
            LumaImage::new(in_w, in_h, out)
        }
    }
}

/// Weighted local mean and standard deviation under the window.
///
/// `sigma` is `sqrt(max(0, E[x^2] - mu^2))` pointwise; the clamp absorbs
/// negative rounding residue.
pub fn local_moments(
    img: &LumaImage,
    w: &GaussianWindow,
    border: Border,
) -> Result<(LumaImage, LumaImage)> {
    let mu = convolve_separable(img, w, border)?;
    let squared = LumaImage::new(
        img.width(),
        img.height(),
        img.data().iter().map(|&v| v * v).collect(),
    )?;
    let m2 = convolve_separable(&squared, w, border)?;
    let sigma: Vec<f64> = mu
        .data()
        .iter()
        .zip(m2.data())
        .map(|(&m, &e2)| (e2 - m * m).max(0.0).sqrt())
        .collect();
    let sigma = LumaImage::new(mu.width(), mu.height(), sigma)?;
    Ok((mu, sigma))
}

/// 2x2 box low-pass then decimate by 2 in each axis. Output dimensions are
/// `floor(dim / 2)`; a trailing odd row or column is dropped.
pub fn downsample_dyadic(img: &LumaImage) -> Result<LumaImage> {
    if img.width() < 2 || img.height() < 2 {
        return Err(Error::ImageTooSmall {
            got_w: img.width(),
            got_h: img.height(),
            need: "at least 2x2 for dyadic downsampling".into(),
        });
    }
    let (out_w, out_h) = (img.width() / 2, img.height() / 2);
    let in_w = img.width();
    let src = img.data();
    let mut out = vec![0.0; out_w * out_h];
    par::for_each_row_mut(&mut out, out_w, |y, row| {
        let top = 2 * y * in_w;
        let bot = top + in_w;
        for (x, o) in row.iter_mut().enumerate() {
            let c = 2 * x;
            *o = 0.25 * (src[top + c] + src[top + c + 1] + src[bot + c] + src[bot + c + 1]);
        }
    });
    LumaImage::new(out_w, out_h, out)
}
