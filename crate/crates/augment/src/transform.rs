use image::{Rgb, RgbImage};
use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vinedmp_core::{Frame, Trajectory};

use crate::photometric::{apply_photometric, PhotometricParams};
use crate::{AugmentError, AugmentationConfig};

const MIN_DET: f64 = 1e-12;
const MIN_W: f64 = 1e-9;

/// A plane homography acting on pixel coordinates (pixel centers at integers).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct GeometricTransform {
    matrix: Matrix3<f64>,
}

impl TryFrom<[[f64; 3]; 3]> for GeometricTransform {
    type Error = AugmentError;

    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self, Self::Error> {
        Self::new(Matrix3::from_fn(|r, c| rows[r][c]))
    }
}

impl From<GeometricTransform> for [[f64; 3]; 3] {
    fn from(t: GeometricTransform) -> Self {
        let m = t.matrix;
        [0, 1, 2].map(|r| [m[(r, 0)], m[(r, 1)], m[(r, 2)]])
    }
}

impl GeometricTransform {
    pub fn new(matrix: Matrix3<f64>) -> Result<Self, AugmentError> {
        let det = matrix.determinant();
        if !(det.abs() > MIN_DET) {
            return Err(AugmentError::SingularTransform(det));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
        }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            matrix: Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0),
        }
    }

    /// Mirror about the vertical center line: `x ↦ width − 1 − x`.
    pub fn hflip(width: u32) -> Self {
        Self {
            matrix: Matrix3::new(-1.0, 0.0, width as f64 - 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
        }
    }

    pub fn rotation_about(center: [f64; 2], angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let r = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        Self {
            matrix: about(center, r),
        }
    }

    pub fn scale_about(center: [f64; 2], factor: f64) -> Self {
        let m = Matrix3::new(factor, 0.0, 0.0, 0.0, factor, 0.0, 0.0, 0.0, 1.0);
        Self {
            matrix: about(center, m),
        }
    }

    /// The homography sending each `src[i]` to `dst[i]` (four points, no
    /// three collinear).
    pub fn from_correspondences(src: [[f64; 2]; 4], dst: [[f64; 2]; 4]) -> Result<Self, AugmentError> {
        let mut a = SMatrix::<f64, 8, 8>::zeros();
        let mut b = SVector::<f64, 8>::zeros();
        for i in 0..4 {
            let [x, y] = src[i];
            let [u, v] = dst[i];
            let r = 2 * i;
            a.row_mut(r).copy_from_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]);
            a.row_mut(r + 1).copy_from_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]);
            b[r] = u;
            b[r + 1] = v;
        }
        let h = a.lu().solve(&b).ok_or(AugmentError::SingularTransform(0.0))?;
        Self::new(Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == Matrix3::identity()
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix * other.matrix,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: self.matrix.try_inverse().expect("checked invertible"),
        }
    }

    /// Homogeneous image of `p`, or `None` when `w` is not safely positive.
    pub fn apply_point(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let v = self.matrix * Vector3::new(p[0], p[1], 1.0);
        if v[2] < MIN_W {
            return None;
        }
        Some([v[0] / v[2], v[1] / v[2]])
    }
}

fn about(center: [f64; 2], m: Matrix3<f64>) -> Matrix3<f64> {
    let to = Matrix3::new(1.0, 0.0, center[0], 0.0, 1.0, center[1], 0.0, 0.0, 1.0);
    let from = Matrix3::new(1.0, 0.0, -center[0], 0.0, 1.0, -center[1], 0.0, 0.0, 1.0);
    to * m * from
}

/// One sampled augmentation: a homography plus photometric parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub transform: GeometricTransform,
    pub photometric: PhotometricParams,
    /// Color of pixels warped in from outside the source image.
    pub fill_color: [u8; 3],
}

impl AugmentParams {
    pub fn identity() -> Self {
        Self {
            transform: GeometricTransform::identity(),
            photometric: PhotometricParams::neutral(),
            fill_color: vinedmp_sim::Palette::default().background,
        }
    }
}

fn symmetric(rng: &mut ChaCha8Rng, half: f64) -> f64 {
    half * (2.0 * rng.random::<f64>() - 1.0)
}

/// Draws an augmentation for an image of `(height, width)` pixels.
///
/// The homography is `flip ∘ perspective ∘ rotation ∘ scale ∘ translation`,
/// so translation acts first; rotation and scale are about the image center.
/// Every draw happens in a fixed order whatever the ranges, and factors at
/// their neutral value are left out of the product so that a neutral config
/// yields exactly the identity.
pub fn sample_transform(config: &AugmentationConfig, seed: u64, size: (u32, u32)) -> AugmentParams {
    let (height, width) = size;
    let (w, h) = (width as f64, height as f64);
    let center = [(w - 1.0) / 2.0, (h - 1.0) / 2.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let tx = symmetric(&mut rng, config.translation_frac) * w;
    let ty = symmetric(&mut rng, config.translation_frac) * h;
    let (lo, hi) = config.scale_range;
    let scale = lo + (hi - lo) * rng.random::<f64>();
    let angle = symmetric(&mut rng, config.rotation_deg).to_radians();
    let mut corners_dst = corners(width, height);
    for c in &mut corners_dst {
        c[0] += symmetric(&mut rng, config.perspective_distortion) * 0.5 * (w - 1.0);
        c[1] += symmetric(&mut rng, config.perspective_distortion) * 0.5 * (h - 1.0);
    }
    let flip = rng.random::<f64>() < config.hflip_prob;

    let photometric = PhotometricParams {
        brightness: 1.0 + symmetric(&mut rng, config.brightness),
        contrast: 1.0 + symmetric(&mut rng, config.contrast),
        saturation: 1.0 + symmetric(&mut rng, config.saturation),
        hue: symmetric(&mut rng, config.hue),
        noise_sigma: config.gaussian_noise_sigma,
        noise_seed: rng.random(),
    };

    let mut t = GeometricTransform::identity();
    if tx != 0.0 || ty != 0.0 {
        t = GeometricTransform::translation(tx, ty).compose(&t);
    }
    if scale != 1.0 {
        t = GeometricTransform::scale_about(center, scale).compose(&t);
    }
    if angle != 0.0 {
        t = GeometricTransform::rotation_about(center, angle).compose(&t);
    }
    if config.perspective_distortion > 0.0 {
        if let Ok(p) = GeometricTransform::from_correspondences(corners(width, height), corners_dst) {
            t = p.compose(&t);
        }
    }
    if flip {
        t = GeometricTransform::hflip(width).compose(&t);
    }
    AugmentParams {
        transform: t,
        photometric,
        fill_color: config.fill_color,
    }
}

fn corners(width: u32, height: u32) -> [[f64; 2]; 4] {
    let (w, h) = (width as f64 - 1.0, height as f64 - 1.0);
    [[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]]
}

/// Applies `params` to an image and its trajectory.
///
/// The image is inverse-warped with bilinear sampling (source pixels outside
/// the frame read as the fill color), then photometric jitter and noise are
/// applied. Trajectory points are mapped through the homography and clamped
/// to the frame.
pub fn apply(
    image: &RgbImage,
    traj: &Trajectory,
    params: &AugmentParams,
) -> Result<(RgbImage, Trajectory), AugmentError> {
    if traj.frame() != Frame::ImagePx {
        return Err(AugmentError::WrongFrame);
    }
    let (width, height) = image.dimensions();
    let (xmax, ymax) = (width as f64 - 1.0, height as f64 - 1.0);
    for (index, p) in traj.points().iter().enumerate() {
        if !(p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= xmax && p[1] <= ymax) {
            return Err(AugmentError::OutOfBounds { index, width, height });
        }
    }
    let t = &params.transform;
    let mut mapped = Vec::with_capacity(traj.len());
    for (index, p) in traj.points().iter().enumerate() {
        let v = t.matrix() * Vector3::new(p[0], p[1], 1.0);
        if v[2] < MIN_W {
            return Err(AugmentError::DegenerateHomography { index, w: v[2] });
        }
        mapped.push(vec![(v[0] / v[2]).clamp(0.0, xmax), (v[1] / v[2]).clamp(0.0, ymax)]);
    }
    let mut out_traj = Trajectory::new(Frame::ImagePx, mapped)?;
    if let Some(ts) = traj.timestamps() {
        out_traj = out_traj.with_timestamps(ts.to_vec())?;
    }

    let mut out = if t.is_identity() {
        image.clone()
    } else {
        warp(image, t, params.fill_color)
    };
    apply_photometric(&mut out, &params.photometric);
    Ok((out, out_traj))
}

/// Inverse-mapped bilinear warp of `image` by `t`.
pub(crate) fn warp(image: &RgbImage, t: &GeometricTransform, fill: [u8; 3]) -> RgbImage {
    let (width, height) = image.dimensions();
    let inv = t.inverse();
    let m = inv.matrix();
    let fill_f = fill.map(f64::from);
    let fetch = |x: i64, y: i64| -> [f64; 3] {
        if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
            fill_f
        } else {
            image.get_pixel(x as u32, y as u32).0.map(f64::from)
        }
    };
    let mut out = RgbImage::new(width, height);
    for row in 0..height {
        for col in 0..width {
            let (x, y) = (col as f64, row as f64);
            let wq = m[(2, 0)] * x + m[(2, 1)] * y + m[(2, 2)];
            let px = if wq <= MIN_W {
                fill
            } else {
                let sx = (m[(0, 0)] * x + m[(0, 1)] * y + m[(0, 2)]) / wq;
                let sy = (m[(1, 0)] * x + m[(1, 1)] * y + m[(1, 2)]) / wq;
                if sx <= -1.0 || sy <= -1.0 || sx >= width as f64 || sy >= height as f64 {
                    fill
                } else {
                    let (x0, y0) = (sx.floor(), sy.floor());
                    let (fx, fy) = (sx - x0, sy - y0);
                    let (x0, y0) = (x0 as i64, y0 as i64);
                    let a = fetch(x0, y0);
                    let b = fetch(x0 + 1, y0);
                    let c = fetch(x0, y0 + 1);
                    let d = fetch(x0 + 1, y0 + 1);
                    [0, 1, 2].map(|k| {
                        let top = a[k] + fx * (b[k] - a[k]);
                        let bottom = c[k] + fx * (d[k] - c[k]);
                        (top + fy * (bottom - top)).round().clamp(0.0, 255.0) as u8
                    })
                }
            };
            out.put_pixel(col, row, Rgb(px));
        }
    }
    out
}
