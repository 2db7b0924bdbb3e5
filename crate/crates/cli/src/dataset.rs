use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use image::RgbImage;
use serde::{Deserialize, Serialize};
use vinedmp_augment::Split;
use vinedmp_core::{Frame, Trajectory};
use vinedmp_learner::{preprocess, Example};
use vinedmp_sim::{Scene, SceneConfig};

use crate::UserError;

pub const MANIFEST: &str = "manifest.json";
pub const AUG_CONFIG: &str = "aug_config.json";
pub const DEFAULT_IMAGE_SIZE: (u32, u32) = (480, 640);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    pub split: Split,
    /// Paths relative to the dataset root.
    pub image: String,
    pub trajectory: String,
    /// Absent for augmented replicas, which have no physical scene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

/// How the dataset was made; enough to regenerate every scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    /// Requested train/dev/test split weights.
    pub split: [u32; 3],
    pub augment_factor: usize,
    pub scene_config: SceneConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// `[height, width]` of every stored image.
    pub image_size: [u32; 2],
    pub provenance: Provenance,
    pub samples: Vec<Entry>,
}

impl Manifest {
    pub fn new(image_size: (u32, u32), provenance: Provenance) -> Self {
        Self {
            image_size: [image_size.0, image_size.1],
            provenance,
            samples: Vec::new(),
        }
    }

    pub fn image_size(&self) -> (u32, u32) {
        (self.image_size[0], self.image_size[1])
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Entry> {
        self.samples.iter().filter(move |e| e.split == split)
    }

    pub fn get(&self, id: &str) -> Option<&Entry> {
        self.samples.iter().find(|e| e.id == id)
    }
}

/// A dataset directory and its manifest.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST);
        let text = fs::read_to_string(&path)
            .map_err(|e| UserError(format!("cannot read {}: {e}", path.display())))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| UserError(format!("malformed {}: {e}", path.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
        })
    }

    /// Creates the directory layout with an empty manifest.
    pub fn create(root: &Path, manifest: Manifest) -> Result<Self> {
        for sub in ["images", "trajs", "scenes"] {
            fs::create_dir_all(root.join(sub)).with_context(|| format!("creating {}", root.display()))?;
        }
        let ds = Self {
            root: root.to_path_buf(),
            manifest,
        };
        ds.save_manifest()?;
        Ok(ds)
    }

    /// Opens `root`, creating an empty dataset there if it has no manifest.
    pub fn open_or_create(root: &Path) -> Result<Self> {
        if root.join(MANIFEST).exists() {
            Self::open(root)
        } else {
            let provenance = Provenance {
                seed: None,
                split: [80, 10, 10],
                augment_factor: 0,
                scene_config: SceneConfig::default(),
            };
            Self::create(root, Manifest::new(DEFAULT_IMAGE_SIZE, provenance))
        }
    }

    /// Writes the manifest through a temporary file so readers never see a
    /// partial one.
    pub fn save_manifest(&self) -> Result<()> {
        let tmp = self.root.join(format!("{MANIFEST}.tmp"));
        fs::write(&tmp, self.manifest.to_json()).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, self.root.join(MANIFEST))?;
        Ok(())
    }

    /// Writes the files of one sample and appends its manifest entry. The
    /// manifest itself is not saved.
    pub fn add(
        &mut self,
        id: &str,
        split: Split,
        image: &RgbImage,
        traj: &Trajectory,
        scene: Option<&Scene>,
        parent: Option<&str>,
    ) -> Result<()> {
        if self.manifest.get(id).is_some() {
            bail!("duplicate sample id {id}");
        }
        let entry = Entry {
            id: id.to_string(),
            split,
            image: format!("images/{id}.png"),
            trajectory: format!("trajs/{id}.json"),
            scene: scene.map(|_| format!("scenes/{id}.json")),
            parent: parent.map(str::to_string),
        };
        image.save(self.root.join(&entry.image))?;
        fs::write(self.root.join(&entry.trajectory), traj.to_json_pretty() + "\n")?;
        if let (Some(s), Some(path)) = (scene, &entry.scene) {
            fs::write(self.root.join(path), s.to_json_pretty() + "\n")?;
        }
        self.manifest.samples.push(entry);
        Ok(())
    }

    pub fn load_image(&self, e: &Entry) -> Result<RgbImage> {
        let path = self.root.join(&e.image);
        Ok(image::open(&path)
            .with_context(|| format!("reading {}", path.display()))?
            .to_rgb8())
    }

    pub fn load_trajectory(&self, e: &Entry) -> Result<Trajectory> {
        let path = self.root.join(&e.trajectory);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let t = Trajectory::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
        if t.frame() != Frame::ImagePx {
            bail!("{}: trajectory must be in image pixels", path.display());
        }
        Ok(t)
    }

    pub fn load_scene(&self, e: &Entry) -> Result<Option<Scene>> {
        let Some(rel) = &e.scene else { return Ok(None) };
        let path = self.root.join(rel);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Some(Scene::from_json(&text).with_context(|| format!("parsing {}", path.display()))?))
    }

    /// Preprocessed examples of one split, in manifest order.
    pub fn examples(&self, split: Split, input_size: usize, points: usize) -> Result<Vec<Example>> {
        self.examples_for(self.manifest.split(split), input_size, points)
    }

    pub fn examples_for<'a>(
        &self,
        entries: impl Iterator<Item = &'a Entry>,
        input_size: usize,
        points: usize,
    ) -> Result<Vec<Example>> {
        entries
            .map(|e| {
                let (input, target) = preprocess(&self.load_image(e)?, &self.load_trajectory(e)?, input_size, points)
                    .with_context(|| format!("sample {}", e.id))?;
                Ok(Example { input, target })
            })
            .collect()
    }

    /// Training demonstrations without their augmented replicas.
    pub fn original_train(&self) -> impl Iterator<Item = &Entry> {
        self.manifest.split(Split::Train).filter(|e| e.parent.is_none())
    }
}

/// Maps a trajectory between the simulator frame and a rendered image.
pub fn to_image(scene: &Scene, traj: &Trajectory, size: (u32, u32)) -> Result<Trajectory> {
    let pts: Vec<[f64; 2]> = (0..traj.len()).map(|i| scene.to_image_px(traj.xy(i), size)).collect();
    Ok(Trajectory::from_xy(Frame::ImagePx, &pts)?)
}

pub fn to_scene(scene: &Scene, traj: &Trajectory, size: (u32, u32)) -> Result<Trajectory> {
    let pts: Vec<[f64; 2]> = (0..traj.len()).map(|i| scene.from_image_px(traj.xy(i), size)).collect();
    Ok(Trajectory::from_xy(Frame::ImagePx, &pts)?)
}

/// Parses `HxW`.
pub fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let h: u32 = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    let w: u32 = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    if h < 64 || w < 64 {
        return Err(format!("image size {s} is below 64x64"));
    }
    Ok((h, w))
}

/// Parses split weights such as `80/10/10`.
pub fn parse_split(s: &str) -> Result<[u32; 3], String> {
    let parts: Vec<&str> = s.split('/').collect();
    if parts.len() != 3 {
        return Err(format!("expected train/dev/test weights, got {s:?}"));
    }
    let mut out = [0u32; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| format!("bad split weight {p:?}"))?;
    }
    if out.iter().sum::<u32>() == 0 {
        return Err("split weights sum to zero".into());
    }
    Ok(out)
}

/// Splits `n` items in proportion to `weights` by largest remainder, ties
/// going to the earlier split.
pub fn split_counts(n: usize, weights: [u32; 3]) -> [usize; 3] {
    let total: u64 = weights.iter().map(|&w| w as u64).sum();
    let mut counts = [0usize; 3];
    let mut rems = [0u64; 3];
    for i in 0..3 {
        let q = n as u64 * weights[i] as u64;
        counts[i] = (q / total) as usize;
        rems[i] = q % total;
    }
    let mut left = n - counts.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| rems[b].cmp(&rems[a]).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}
