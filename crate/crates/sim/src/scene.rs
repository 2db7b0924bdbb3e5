use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{norm, sub, unit, Ellipse, Vec2};
use crate::SimError;

/// Number of evenly spaced stem sample points used for occlusion.
pub const STEM_SAMPLES: usize = 100;

const MAX_GENERATION_ATTEMPTS: usize = 1000;

/// A leaf hinged at one end, modeled as a filled ellipse that spans from the
/// hinge to its tip along `current_angle`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub hinge: Vec2,
    /// Hinge-to-tip distance (full major axis).
    pub length: f64,
    /// Full minor axis.
    pub width: f64,
    pub rest_angle: f64,
    /// Torsional spring constant. Retained for a dynamic mode; the
    /// quasi-static contact model returns leaves to rest instantly.
    pub stiffness: f64,
    pub angle_limits: (f64, f64),
    pub current_angle: f64,
}

impl Leaf {
    pub fn ellipse_at(&self, angle: f64) -> Ellipse {
        let u = unit(angle);
        Ellipse {
            center: [
                self.hinge[0] + 0.5 * self.length * u[0],
                self.hinge[1] + 0.5 * self.length * u[1],
            ],
            semi_major: 0.5 * self.length,
            semi_minor: 0.5 * self.width,
            angle,
        }
    }

    pub fn ellipse(&self) -> Ellipse {
        self.ellipse_at(self.current_angle)
    }

    pub fn tip_at(&self, angle: f64) -> Vec2 {
        let u = unit(angle);
        [self.hinge[0] + self.length * u[0], self.hinge[1] + self.length * u[1]]
    }

    /// Half-width of the leaf at axial distance `rho` from the hinge.
    pub fn half_width_at(&self, rho: f64) -> f64 {
        let a = 0.5 * self.length;
        let l = (rho - a) / a;
        0.5 * self.width * (1.0 - l * l).max(0.0).sqrt()
    }

    pub fn at_rest(&self) -> bool {
        self.current_angle == self.rest_angle
    }

    fn valid(&self) -> bool {
        let (lo, hi) = self.angle_limits;
        self.length > 0.0
            && self.width > 0.0
            && self.width <= self.length
            && self.stiffness > 0.0
            && lo < self.rest_angle
            && self.rest_angle < hi
            && (lo..=hi).contains(&self.current_angle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Background {
    Plain,
    Busy { seed: u64 },
}

/// One grape, its stem and the leaves around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Canonical frame size in pixels.
    pub width: u32,
    pub height: u32,
    pub grape_center: Vec2,
    pub grape_radius: f64,
    /// `[lower, upper]`; the lower endpoint sits on the grape's boundary.
    pub stem: [Vec2; 2],
    pub leaves: Vec<Leaf>,
    pub background: Background,
    /// Per-scene hue offset of the palette, in turns.
    pub hue_shift: f64,
    pub rng_seed: u64,
}

impl Scene {
    pub fn stem_samples(&self) -> impl Iterator<Item = Vec2> + '_ {
        let [a, b] = self.stem;
        (0..STEM_SAMPLES).map(move |i| {
            let t = i as f64 / (STEM_SAMPLES - 1) as f64;
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
    }

    pub fn reset_leaves(&mut self) {
        for leaf in &mut self.leaves {
            leaf.current_angle = leaf.rest_angle;
        }
    }

    /// Copy of the scene with every leaf at its rest angle.
    pub fn at_rest(&self) -> Scene {
        let mut s = self.clone();
        s.reset_leaves();
        s
    }

    /// Fraction of stem samples covered by `leaf` alone, at `angle`.
    pub fn leaf_occlusion(&self, leaf: &Leaf, angle: f64) -> f64 {
        let e = leaf.ellipse_at(angle);
        let covered = self.stem_samples().filter(|p| e.contains(*p)).count();
        covered as f64 / STEM_SAMPLES as f64
    }

    pub fn in_bounds(&self, p: Vec2) -> bool {
        p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= (self.width - 1) as f64 && p[1] <= (self.height - 1) as f64
    }

    /// Maps a canonical point to pixel coordinates of a `(height, width)`
    /// rendering, with pixel centers at integer coordinates.
    pub fn to_image_px(&self, p: Vec2, size: (u32, u32)) -> Vec2 {
        let sx = size.1 as f64 / self.width as f64;
        let sy = size.0 as f64 / self.height as f64;
        [(p[0] + 0.5) * sx - 0.5, (p[1] + 0.5) * sy - 0.5]
    }

    /// Inverse of [`Scene::to_image_px`].
    pub fn from_image_px(&self, p: Vec2, size: (u32, u32)) -> Vec2 {
        let sx = size.1 as f64 / self.width as f64;
        let sy = size.0 as f64 / self.height as f64;
        [(p[0] + 0.5) / sx - 0.5, (p[1] + 0.5) / sy - 0.5]
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SimError> {
        serde_json::from_str(s).map_err(|e| SimError::Json(e.to_string()))
    }
}

/// Fraction of the stem's sample points inside any leaf at its current angle.
pub fn occlusion_fraction(scene: &Scene) -> f64 {
    let ellipses: Vec<Ellipse> = scene.leaves.iter().map(Leaf::ellipse).collect();
    let covered = scene
        .stem_samples()
        .filter(|p| ellipses.iter().any(|e| e.contains(*p)))
        .count();
    covered as f64 / STEM_SAMPLES as f64
}

/// Closed interval `[lo, hi]` sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }

    fn valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

/// Sampling ranges for [`generate_scene`]. Lengths are canonical pixels,
/// angles radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub width: u32,
    pub height: u32,
    /// Inclusive range of the total number of leaves (one of them occludes).
    pub leaf_count: (usize, usize),
    pub grape_x: Range,
    pub grape_y: Range,
    pub grape_radius: Range,
    pub stem_length: Range,
    /// Stem lean away from vertical.
    pub stem_tilt: Range,
    /// Occluder hinge offset sideways from the stem top.
    pub hinge_dx: Range,
    /// Occluder hinge height above the stem top.
    pub hinge_dy: Range,
    /// Where along the stem (0 = top, 1 = grape) the occluder's axis aims.
    pub aim_fraction: Range,
    /// Occluder length as a multiple of the hinge-to-aim-point distance.
    pub length_ratio: Range,
    pub occluder_width: Range,
    pub rest_jitter: Range,
    pub distractor_length: Range,
    pub distractor_width: Range,
    /// Deflection allowed on either side of the rest angle.
    pub limit_span: Range,
    pub stiffness: Range,
    pub hue_jitter: Range,
    /// Occlusion the occluder must produce at rest.
    pub min_rest_occlusion: f64,
    pub busy_background: bool,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            leaf_count: (1, 3),
            grape_x: Range::new(250.0, 390.0),
            grape_y: Range::new(290.0, 340.0),
            grape_radius: Range::new(34.0, 48.0),
            stem_length: Range::new(70.0, 95.0),
            stem_tilt: Range::new(-0.12, 0.12),
            hinge_dx: Range::new(40.0, 60.0),
            hinge_dy: Range::new(5.0, 25.0),
            aim_fraction: Range::new(0.35, 0.6),
            length_ratio: Range::new(1.6, 1.9),
            occluder_width: Range::new(44.0, 58.0),
            rest_jitter: Range::new(-0.06, 0.06),
            distractor_length: Range::new(70.0, 100.0),
            distractor_width: Range::new(34.0, 48.0),
            limit_span: Range::new(1.4, 1.7),
            stiffness: Range::new(0.5, 2.0),
            hue_jitter: Range::new(-0.03, 0.03),
            min_rest_occlusion: 0.4,
            busy_background: false,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let ranges = [
            self.grape_x,
            self.grape_y,
            self.grape_radius,
            self.stem_length,
            self.stem_tilt,
            self.hinge_dx,
            self.hinge_dy,
            self.aim_fraction,
            self.length_ratio,
            self.occluder_width,
            self.rest_jitter,
            self.distractor_length,
            self.distractor_width,
            self.limit_span,
            self.stiffness,
            self.hue_jitter,
        ];
        if ranges.iter().any(|r| !r.valid()) {
            return Err(SimError::InvalidConfig("every range needs lo ≤ hi".into()));
        }
        if self.leaf_count.0 < 1 || self.leaf_count.0 > self.leaf_count.1 {
            return Err(SimError::InvalidConfig("leaf_count must satisfy 1 ≤ min ≤ max".into()));
        }
        if self.width < 64 || self.height < 64 {
            return Err(SimError::InvalidConfig("frame must be at least 64×64".into()));
        }
        if self.limit_span.lo <= 0.0 || self.stiffness.lo <= 0.0 || self.grape_radius.lo <= 0.0 {
            return Err(SimError::InvalidConfig("spans, stiffness and radius must be positive".into()));
        }
        Ok(())
    }
}

/// Generates a scene as a pure function of `(seed, config)`.
///
/// The leaf count is drawn once; geometry is redrawn until the stem is
/// covered at rest by the occluder, no distractor covers it, and every leaf
/// lies inside the frame.
pub fn generate_scene(seed: u64, config: &SceneConfig) -> Result<Scene, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaf_count = rng.random_range(config.leaf_count.0..=config.leaf_count.1);
    let background = if config.busy_background {
        Background::Busy { seed: rng.random() }
    } else {
        Background::Plain
    };
    let hue_shift = config.hue_jitter.sample(&mut rng);
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        if let Some(scene) = try_generate(&mut rng, config, leaf_count, background, hue_shift, seed) {
            return Ok(scene);
        }
    }
    Err(SimError::ExhaustedAttempts(MAX_GENERATION_ATTEMPTS))
}

fn try_generate(
    rng: &mut ChaCha8Rng,
    cfg: &SceneConfig,
    leaf_count: usize,
    background: Background,
    hue_shift: f64,
    seed: u64,
) -> Option<Scene> {
    let grape_center = [cfg.grape_x.sample(rng), cfg.grape_y.sample(rng)];
    let grape_radius = cfg.grape_radius.sample(rng);
    let tilt = cfg.stem_tilt.sample(rng);
    let stem_len = cfg.stem_length.sample(rng);
    let up = [tilt.sin(), -tilt.cos()];
    let lower = [grape_center[0] + grape_radius * up[0], grape_center[1] + grape_radius * up[1]];
    let upper = [lower[0] + stem_len * up[0], lower[1] + stem_len * up[1]];

    let mut scene = Scene {
        width: cfg.width,
        height: cfg.height,
        grape_center,
        grape_radius,
        stem: [lower, upper],
        leaves: Vec::with_capacity(leaf_count),
        background,
        hue_shift,
        rng_seed: seed,
    };

    // Occluder: hinged beside and above the stem top, hanging across the stem.
    let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let hinge = [
        upper[0] + side * cfg.hinge_dx.sample(rng),
        upper[1] - cfg.hinge_dy.sample(rng),
    ];
    let f = cfg.aim_fraction.sample(rng);
    let aim = [upper[0] + f * (lower[0] - upper[0]), upper[1] + f * (lower[1] - upper[1])];
    let to_aim = sub(aim, hinge);
    let rest_angle = to_aim[1].atan2(to_aim[0]) + cfg.rest_jitter.sample(rng);
    let length = norm(to_aim) * cfg.length_ratio.sample(rng);
    let width = cfg.occluder_width.sample(rng).min(length);
    let occluder = make_leaf(rng, cfg, hinge, length, width, rest_angle);
    if scene.leaf_occlusion(&occluder, rest_angle) < cfg.min_rest_occlusion {
        return None;
    }
    if !leaf_in_frame(&scene, &occluder) {
        return None;
    }
    scene.leaves.push(occluder);

    // Distractors hang in the outer bands and must leave the stem visible.
    for _ in 1..leaf_count {
        let band_left = rng.random_bool(0.5);
        let x = if band_left {
            rng.random_range(90.0..=180.0)
        } else {
            rng.random_range(460.0..=550.0)
        } * cfg.width as f64
            / 640.0;
        let y = rng.random_range(90.0..=230.0) * cfg.height as f64 / 480.0;
        let angle = std::f64::consts::FRAC_PI_2 + rng.random_range(-0.6..=0.6);
        let length = cfg.distractor_length.sample(rng);
        let width = cfg.distractor_width.sample(rng).min(length);
        let leaf = make_leaf(rng, cfg, [x, y], length, width, angle);
        if scene.leaf_occlusion(&leaf, angle) > 0.0 || !leaf_in_frame(&scene, &leaf) {
            return None;
        }
        scene.leaves.push(leaf);
    }
    Some(scene)
}

fn make_leaf(rng: &mut ChaCha8Rng, cfg: &SceneConfig, hinge: Vec2, length: f64, width: f64, rest: f64) -> Leaf {
    let lo = cfg.limit_span.sample(rng);
    let hi = cfg.limit_span.sample(rng);
    Leaf {
        hinge,
        length,
        width,
        rest_angle: rest,
        stiffness: cfg.stiffness.sample(rng),
        angle_limits: (rest - lo, rest + hi),
        current_angle: rest,
    }
}

fn leaf_in_frame(scene: &Scene, leaf: &Leaf) -> bool {
    let margin = 8.0;
    let e = leaf.ellipse();
    let (s, c) = e.angle.sin_cos();
    // Axis-aligned half extents of the rotated ellipse.
    let hx = ((e.semi_major * c).powi(2) + (e.semi_minor * s).powi(2)).sqrt();
    let hy = ((e.semi_major * s).powi(2) + (e.semi_minor * c).powi(2)).sqrt();
    e.center[0] - hx >= margin
        && e.center[1] - hy >= margin
        && e.center[0] + hx <= scene.width as f64 - margin
        && e.center[1] + hy <= scene.height as f64 - margin
        && leaf.valid()
}
