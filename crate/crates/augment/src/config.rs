use serde::{Deserialize, Serialize};

use crate::AugmentError;

/// Sampling ranges for geometric and photometric augmentation. Symmetric
/// ranges are given by their half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationConfig {
    /// Translation as a fraction of each image dimension.
    pub translation_frac: f64,
    pub rotation_deg: f64,
    pub scale_range: (f64, f64),
    pub hflip_prob: f64,
    /// Largest corner displacement as a fraction of half the image extent.
    pub perspective_distortion: f64,
    /// Multiplicative brightness jitter, factor in `1 ± brightness`.
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    /// Hue rotation in turns.
    pub hue: f64,
    /// Standard deviation of additive noise, in 8-bit intensity units.
    pub gaussian_noise_sigma: f64,
    /// Augmented replicas per input sample.
    pub factor: usize,
    /// Color of pixels warped in from outside the source image.
    pub fill_color: [u8; 3],
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            translation_frac: 0.10,
            rotation_deg: 15.0,
            scale_range: (0.85, 1.15),
            hflip_prob: 0.5,
            perspective_distortion: 0.15,
            brightness: 0.2,
            contrast: 0.2,
            saturation: 0.2,
            hue: 0.05,
            gaussian_noise_sigma: 5.0,
            factor: 100,
            fill_color: vinedmp_sim::Palette::default().background,
        }
    }
}

impl AugmentationConfig {
    /// No geometric or photometric change at all.
    pub fn neutral(factor: usize) -> Self {
        Self {
            translation_frac: 0.0,
            rotation_deg: 0.0,
            scale_range: (1.0, 1.0),
            hflip_prob: 0.0,
            perspective_distortion: 0.0,
            brightness: 0.0,
            contrast: 0.0,
            saturation: 0.0,
            hue: 0.0,
            gaussian_noise_sigma: 0.0,
            factor,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        let bad = |m: &str| Err(AugmentError::InvalidConfig(m.into()));
        let (lo, hi) = self.scale_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad("scale_range needs 0 < lo ≤ hi");
        }
        if !(0.0..=1.0).contains(&self.hflip_prob) {
            return bad("hflip_prob must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.perspective_distortion) {
            return bad("perspective_distortion must lie in [0, 1)");
        }
        let jitters = [
            self.translation_frac,
            self.rotation_deg,
            self.brightness,
            self.contrast,
            self.saturation,
            self.hue,
            self.gaussian_noise_sigma,
        ];
        if jitters.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("jitter ranges must be finite and non-negative");
        }
        if self.brightness >= 1.0 || self.contrast >= 1.0 || self.saturation >= 1.0 {
            return bad("brightness, contrast and saturation jitter must stay below 1");
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = AugmentationConfig::default();
        c.validate().unwrap();
        let back: AugmentationConfig = serde_json::from_str(&c.to_json_pretty()).unwrap();
        assert_eq!(back, c);
        let partial: AugmentationConfig = serde_json::from_str(r#"{"factor": 3}"#).unwrap();
        assert_eq!(partial.factor, 3);
        assert_eq!(partial.rotation_deg, 15.0);
    }

    #[test]
    fn rejects_bad_ranges() {
        let c = AugmentationConfig {
            scale_range: (1.2, 1.1),
            ..AugmentationConfig::default()
        };
        assert!(c.validate().is_err());
        let c = AugmentationConfig {
            hflip_prob: 1.5,
            ..AugmentationConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
