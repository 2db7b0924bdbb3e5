use image::imageops::{self, FilterType};
use image::RgbImage;
use vinedmp_core::{Frame, Trajectory};

use crate::LearnerError;

/// Center-crops to the shorter side, resizes to `size × size` with a
/// triangle (bilinear) filter and returns channel-major values in `[0, 1]`.
pub fn preprocess_image(image: &RgbImage, size: usize) -> Result<Vec<f64>, LearnerError> {
    let (w, h) = image.dimensions();
    if (w as usize) < size || (h as usize) < size {
        return Err(LearnerError::ImageTooSmall {
            width: w,
            height: h,
            size,
        });
    }
    let side = w.min(h);
    let crop = imageops::crop_imm(image, (w - side) / 2, (h - side) / 2, side, side).to_image();
    let resized = if side as usize == size {
        crop
    } else {
        imageops::resize(&crop, size as u32, size as u32, FilterType::Triangle)
    };
    let plane = size * size;
    let mut out = vec![0.0; 3 * plane];
    for (i, px) in resized.pixels().enumerate() {
        for c in 0..3 {
            out[c * plane + i] = px.0[c] as f64 / 255.0;
        }
    }
    Ok(out)
}

/// Resamples `traj` by arc length to `points` samples and divides each axis
/// by the matching dimension of the original `(height, width)` image.
/// Returns interleaved `[x_0, y_0, x_1, …]`.
pub fn normalize_trajectory(traj: &Trajectory, image_size: (u32, u32), points: usize) -> Result<Vec<f64>, LearnerError> {
    if traj.frame() != Frame::ImagePx {
        return Err(LearnerError::WrongFrame);
    }
    let (h, w) = (image_size.0 as f64, image_size.1 as f64);
    let resampled = traj.resample_arc_length(points)?;
    Ok(resampled.points().iter().flat_map(|p| [p[0] / w, p[1] / h]).collect())
}

/// Network input and normalized targets for one demonstration.
pub fn preprocess(
    image: &RgbImage,
    traj: &Trajectory,
    size: usize,
    points: usize,
) -> Result<(Vec<f64>, Vec<f64>), LearnerError> {
    let (w, h) = image.dimensions();
    Ok((preprocess_image(image, size)?, normalize_trajectory(traj, (h, w), points)?))
}
