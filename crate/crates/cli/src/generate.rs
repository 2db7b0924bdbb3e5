use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vinedmp_augment::{augment_sample, AugmentationConfig, Sample, Split};
use vinedmp_sim::{execute, generate_scene, oracle_demo, render, ExecuteConfig, OracleConfig, SceneConfig};

use crate::dataset::{split_counts, to_image, to_scene, Dataset, Manifest, Provenance, AUG_CONFIG};
use crate::UserError;

#[derive(Debug, Clone)]
pub struct GenOptions {
    pub count: usize,
    pub seed: u64,
    pub split: [u32; 3],
    pub augment_factor: usize,
    pub image_size: (u32, u32),
    pub scene: SceneConfig,
    pub augmentation: AugmentationConfig,
    /// Scenes tried per kept sample before giving up.
    pub max_attempts_per_sample: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            count: 100,
            seed: 0,
            split: [80, 10, 10],
            augment_factor: 0,
            image_size: (480, 640),
            scene: SceneConfig::default(),
            augmentation: AugmentationConfig::default(),
            max_attempts_per_sample: 20,
        }
    }
}

/// Counts reported after generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSummary {
    pub kept: usize,
    pub rejected: usize,
    pub augmented: usize,
    pub per_split: [usize; 3],
}

/// Generates a dataset into `out`, which must not exist or be empty. On
/// failure everything written is removed.
pub fn gen_dataset(out: &Path, opts: &GenOptions, mut log: impl FnMut(&str)) -> Result<GenSummary> {
    if out.exists() && fs::read_dir(out)?.next().is_some() {
        return Err(UserError(format!("{} exists and is not empty", out.display())).into());
    }
    let existed = out.exists();
    let result = write_dataset(out, opts, &mut log);
    if result.is_err() {
        if existed {
            for entry in fs::read_dir(out)?.flatten() {
                let p = entry.path();
                let _ = if p.is_dir() { fs::remove_dir_all(&p) } else { fs::remove_file(&p) };
            }
        } else {
            let _ = fs::remove_dir_all(out);
        }
    }
    result
}

fn write_dataset(out: &Path, opts: &GenOptions, log: &mut impl FnMut(&str)) -> Result<GenSummary> {
    opts.scene.validate()?;
    let mut aug = opts.augmentation.clone();
    aug.factor = opts.augment_factor;
    aug.validate()?;

    let provenance = Provenance {
        seed: Some(opts.seed),
        split: opts.split,
        augment_factor: opts.augment_factor,
        scene_config: opts.scene.clone(),
    };
    let mut ds = Dataset::create(out, Manifest::new(opts.image_size, provenance))?;
    fs::write(out.join(AUG_CONFIG), aug.to_json_pretty() + "\n")?;

    // Keep only demonstrations that unveil the stem when replayed from the
    // stored trajectory; otherwise draw another scene.
    let mut seeds = ChaCha8Rng::seed_from_u64(opts.seed);
    let exec = ExecuteConfig::default();
    let mut kept = Vec::with_capacity(opts.count);
    let mut rejected = 0;
    let budget = opts.count.max(1) * opts.max_attempts_per_sample;
    while kept.len() < opts.count {
        if kept.len() + rejected >= budget {
            anyhow::bail!("only {} of {} samples succeeded after {budget} scenes", kept.len(), opts.count);
        }
        let scene_seed = seeds.next_u64();
        let accepted = generate_scene(scene_seed, &opts.scene).ok().and_then(|scene| {
            let demo = oracle_demo(&scene, scene_seed, &OracleConfig::default()).ok()?;
            let traj = to_image(&scene, &demo, opts.image_size).ok()?;
            let replay = to_scene(&scene, &traj, opts.image_size).ok()?;
            let mut s = scene.clone();
            let report = execute(&mut s, &replay, &exec).ok()?;
            report.success.then_some((scene, traj))
        });
        match accepted {
            Some(pair) => kept.push(pair),
            None => rejected += 1,
        }
    }

    let counts = split_counts(opts.count, opts.split);
    let mut order: Vec<usize> = (0..opts.count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5EED_5911_7000_0001));
    let mut splits = vec![Split::Train; opts.count];
    for (rank, &i) in order.iter().enumerate() {
        splits[i] = if rank < counts[0] {
            Split::Train
        } else if rank < counts[0] + counts[1] {
            Split::Dev
        } else {
            Split::Test
        };
    }

    let mut augmented = 0;
    for (i, ((scene, traj), split)) in kept.iter().zip(&splits).enumerate() {
        let id = format!("s{i:05}");
        let image = render(scene, opts.image_size);
        ds.add(&id, *split, &image, traj, Some(scene), None)?;
        if *split == Split::Train && opts.augment_factor > 0 {
            let sample = Sample {
                id: id.clone(),
                split: *split,
                image,
                trajectory: traj.clone(),
            };
            for r in 1..=opts.augment_factor {
                let a = augment_sample(&sample, &aug, opts.seed, r).with_context(|| format!("augmenting {id}"))?;
                ds.add(&a.id, a.split, &a.image, &a.trajectory, None, Some(&id))?;
                augmented += 1;
            }
        }
        if (i + 1) % 50 == 0 {
            log(&format!("{} / {} samples written", i + 1, opts.count));
        }
    }
    ds.save_manifest()?;
    Ok(GenSummary {
        kept: kept.len(),
        rejected,
        augmented,
        per_split: counts,
    })
}
