use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::color::shift_hue;
use crate::geometry::{near_segment, Ellipse, Vec2};
use crate::scene::{Background, Scene};

/// Canonical stem half-thickness in pixels.
pub const STEM_HALF_WIDTH: f64 = 3.0;
const MIDRIB_HALF_WIDTH: f64 = 1.0;

/// Flat colors used by [`render`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Palette {
    pub background: [u8; 3],
    pub grape: [u8; 3],
    pub stem: [u8; 3],
    pub leaf: [u8; 3],
    pub midrib: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            background: [206, 214, 190],
            grape: [92, 38, 110],
            stem: [120, 84, 40],
            leaf: [60, 150, 55],
            midrib: [38, 104, 36],
        }
    }
}

impl Palette {
    /// The default palette with every color hue-rotated by the scene's shift.
    pub fn for_scene(scene: &Scene) -> Self {
        let p = Self::default();
        let s = scene.hue_shift;
        Self {
            background: shift_hue(p.background, s),
            grape: shift_hue(p.grape, s),
            stem: shift_hue(p.stem, s),
            leaf: shift_hue(p.leaf, s),
            midrib: shift_hue(p.midrib, s),
        }
    }
}

/// Canonical coordinates of the center of output pixel `(col, row)`.
#[inline]
fn canonical(col: u32, row: u32, sx: f64, sy: f64) -> Vec2 {
    [(col as f64 + 0.5) / sx - 0.5, (row as f64 + 0.5) / sy - 0.5]
}

/// Rasterizes `scene` at `(height, width)` output pixels.
///
/// Painter's order: background, grape, stem, then leaves in list order with
/// their midribs. Thin strokes keep at least about one output pixel of width
/// so they survive heavy downscaling.
pub fn render(scene: &Scene, size: (u32, u32)) -> RgbImage {
    let (height, width) = size;
    assert!(height >= 64 && width >= 64, "render size must be at least 64×64");
    let palette = Palette::for_scene(scene);
    let sx = width as f64 / scene.width as f64;
    let sy = height as f64 / scene.height as f64;
    let min_px = 0.75 / sx.min(sy);
    let stem_hw = STEM_HALF_WIDTH.max(min_px);
    let rib_hw = MIDRIB_HALF_WIDTH.max(0.5 * min_px);

    let mut img = RgbImage::from_pixel(width, height, Rgb(palette.background));
    if let Background::Busy { seed } = scene.background {
        paint_clutter(&mut img, scene, seed, sx, sy, &palette);
    }

    let grape = Ellipse {
        center: scene.grape_center,
        semi_major: scene.grape_radius,
        semi_minor: scene.grape_radius,
        angle: 0.0,
    };
    fill_ellipse(&mut img, &grape, sx, sy, palette.grape);

    let [a, b] = scene.stem;
    fill_where(&mut img, bbox_segment(a, b, stem_hw), sx, sy, palette.stem, |p| {
        near_segment(p, a, b, stem_hw)
    });

    for leaf in &scene.leaves {
        let e = leaf.ellipse();
        fill_ellipse(&mut img, &e, sx, sy, palette.leaf);
        let tip = leaf.tip_at(leaf.current_angle);
        let inner = [
            leaf.hinge[0] + 0.08 * (tip[0] - leaf.hinge[0]),
            leaf.hinge[1] + 0.08 * (tip[1] - leaf.hinge[1]),
        ];
        let outer = [
            leaf.hinge[0] + 0.85 * (tip[0] - leaf.hinge[0]),
            leaf.hinge[1] + 0.85 * (tip[1] - leaf.hinge[1]),
        ];
        fill_where(&mut img, bbox_segment(inner, outer, rib_hw), sx, sy, palette.midrib, |p| {
            near_segment(p, inner, outer, rib_hw)
        });
    }
    img
}

type BBox = [f64; 4];

fn bbox_segment(a: Vec2, b: Vec2, pad: f64) -> BBox {
    [a[0].min(b[0]) - pad, a[1].min(b[1]) - pad, a[0].max(b[0]) + pad, a[1].max(b[1]) + pad]
}

fn bbox_ellipse(e: &Ellipse) -> BBox {
    let (s, c) = e.angle.sin_cos();
    let hx = ((e.semi_major * c).powi(2) + (e.semi_minor * s).powi(2)).sqrt();
    let hy = ((e.semi_major * s).powi(2) + (e.semi_minor * c).powi(2)).sqrt();
    [e.center[0] - hx, e.center[1] - hy, e.center[0] + hx, e.center[1] + hy]
}

fn fill_ellipse(img: &mut RgbImage, e: &Ellipse, sx: f64, sy: f64, color: [u8; 3]) {
    fill_where(img, bbox_ellipse(e), sx, sy, color, |p| e.contains(p));
}

/// Sets every pixel whose canonical center lies in `bbox` and passes `inside`.
fn fill_where(
    img: &mut RgbImage,
    bbox: BBox,
    sx: f64,
    sy: f64,
    color: [u8; 3],
    inside: impl Fn(Vec2) -> bool,
) {
    let (w, h) = img.dimensions();
    let col = |x: f64, s: f64, n: u32| ((x + 0.5) * s - 0.5).clamp(0.0, (n - 1) as f64);
    let c0 = col(bbox[0], sx, w).floor() as u32;
    let c1 = col(bbox[2], sx, w).ceil() as u32;
    let r0 = col(bbox[1], sy, h).floor() as u32;
    let r1 = col(bbox[3], sy, h).ceil() as u32;
    for row in r0..=r1 {
        for c in c0..=c1 {
            if inside(canonical(c, row, sx, sy)) {
                img.put_pixel(c, row, Rgb(color));
            }
        }
    }
}

/// Seeded blobs and twigs in muted tones behind the scene.
fn paint_clutter(img: &mut RgbImage, scene: &Scene, seed: u64, sx: f64, sy: f64, palette: &Palette) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (scene.width as f64, scene.height as f64);
    let base = palette.background;
    for _ in 0..40 {
        let tone: i32 = rng.random_range(-40..=20);
        let color = base.map(|c| (c as i32 + tone).clamp(0, 255) as u8);
        let e = Ellipse {
            center: [rng.random_range(0.0..w), rng.random_range(0.0..h)],
            semi_major: rng.random_range(10.0..60.0),
            semi_minor: rng.random_range(5.0..25.0),
            angle: rng.random_range(0.0..std::f64::consts::PI),
        };
        fill_ellipse(img, &e, sx, sy, color);
    }
    for _ in 0..12 {
        let a = [rng.random_range(0.0..w), rng.random_range(0.0..h)];
        let b = [a[0] + rng.random_range(-120.0..120.0), a[1] + rng.random_range(-120.0..120.0)];
        let hw = rng.random_range(1.0..2.5);
        let color = [150, 130, 100];
        fill_where(img, bbox_segment(a, b, hw), sx, sy, color, |p| near_segment(p, a, b, hw));
    }
}
