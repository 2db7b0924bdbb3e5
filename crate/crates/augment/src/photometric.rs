use image::RgbImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use vinedmp_sim::color::{hsv_to_rgb, rgb_to_hsv};

/// Pixel-only perturbations, applied in field order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotometricParams {
    /// Multiplicative gain.
    pub brightness: f64,
    /// Gain about the mean image luma.
    pub contrast: f64,
    /// Gain about each pixel's luma.
    pub saturation: f64,
    /// Hue rotation in turns.
    pub hue: f64,
    /// Noise standard deviation in 8-bit units.
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

impl PhotometricParams {
    pub fn neutral() -> Self {
        Self {
            brightness: 1.0,
            contrast: 1.0,
            saturation: 1.0,
            hue: 0.0,
            noise_sigma: 0.0,
            noise_seed: 0,
        }
    }

    pub fn is_neutral(&self) -> bool {
        self.brightness == 1.0
            && self.contrast == 1.0
            && self.saturation == 1.0
            && self.hue == 0.0
            && self.noise_sigma == 0.0
    }
}

fn luma(p: [f64; 3]) -> f64 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

/// Applies color jitter then clipped Gaussian noise in place. Steps at their
/// neutral value are skipped, so neutral parameters leave the buffer intact.
pub fn apply_photometric(image: &mut RgbImage, params: &PhotometricParams) {
    let color = params.brightness != 1.0 || params.contrast != 1.0 || params.saturation != 1.0 || params.hue != 0.0;
    if color {
        let n = (image.width() * image.height()) as f64;
        let mean = image.pixels().map(|p| luma(p.0.map(f64::from))).sum::<f64>() / n * params.brightness;
        for px in image.pixels_mut() {
            let mut v = px.0.map(|c| c as f64 * params.brightness);
            if params.contrast != 1.0 {
                v = v.map(|c| mean + params.contrast * (c - mean));
            }
            if params.saturation != 1.0 {
                let y = luma(v);
                v = v.map(|c| y + params.saturation * (c - y));
            }
            if params.hue != 0.0 {
                let unit = v.map(|c| (c / 255.0).clamp(0.0, 1.0));
                let [h, s, val] = rgb_to_hsv(unit);
                v = hsv_to_rgb([h + params.hue, s, val]).map(|c| c * 255.0);
            }
            px.0 = v.map(|c| c.round().clamp(0.0, 255.0) as u8);
        }
    }
    if params.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.noise_seed);
        let normal = Normal::new(0.0, params.noise_sigma).expect("positive sigma");
        for px in image.pixels_mut() {
            for c in px.0.iter_mut() {
                *c = (*c as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn swatch() -> RgbImage {
        RgbImage::from_fn(8, 8, |x, y| Rgb([(x * 30) as u8, (y * 30) as u8, 90]))
    }

    #[test]
    fn neutral_is_noop() {
        let mut img = swatch();
        apply_photometric(&mut img, &PhotometricParams::neutral());
        assert_eq!(img, swatch());
    }

    #[test]
    fn brightness_scales_and_noise_is_seeded() {
        let mut img = swatch();
        apply_photometric(&mut img, &PhotometricParams { brightness: 0.5, ..PhotometricParams::neutral() });
        assert_eq!(img.get_pixel(2, 4).0, [30, 60, 45]);

        let noisy = |seed| {
            let mut img = swatch();
            apply_photometric(
                &mut img,
                &PhotometricParams { noise_sigma: 5.0, noise_seed: seed, ..PhotometricParams::neutral() },
            );
            img
        };
        assert_eq!(noisy(3), noisy(3));
        assert_ne!(noisy(3), noisy(4));
    }

    #[test]
    fn zero_saturation_is_gray() {
        let mut img = swatch();
        apply_photometric(&mut img, &PhotometricParams { saturation: 1e-12, ..PhotometricParams::neutral() });
        for p in img.pixels() {
            assert!(p.0[0].abs_diff(p.0[1]) <= 1 && p.0[1].abs_diff(p.0[2]) <= 1);
        }
    }
}
