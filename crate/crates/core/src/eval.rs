//! 3D scene-understanding metrics: room voxel IoU, free-space IoU, and
//! ground-plane localization mAP.
//!
//! Voxel metrics are evaluated on a fixed 0.1 m grid restricted to the
//! effective set: voxel centers between 0.5 and 5.5 m from the camera center
//! and inside the camera frustum. Localization mAP sweeps a ground-plane
//! centroid distance threshold over greedy one-to-one matches per category.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::detections::Category;
use crate::error::{Error, Result};
use crate::geom::{Camera, Vec2, Vec3};
use crate::layout::RoomBox;
use crate::placement::SceneObject;
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct VoxelSpec {
    /// Voxel side length, meters.
    pub resolution: f64,
    /// Distance band from the camera center, meters.
    pub near: f64,
    pub far: f64,
}

impl Default for VoxelSpec {
    fn default() -> Self {
        VoxelSpec {
            resolution: 0.1,
            near: 0.5,
            far: 5.5,
        }
    }
}

/// Centers of the effective voxels: lattice-aligned cells whose centers lie
/// within the distance band and project inside the image.
pub fn effective_voxels(camera: &Camera, spec: &VoxelSpec) -> Vec<Vec3> {
    let c = camera.center();
    let r = spec.resolution;
    let lo = |v: f64| ((v - spec.far) / r).floor() as i64;
    let hi = |v: f64| ((v + spec.far) / r).ceil() as i64;
    let (w, h) = camera.image_size;
    let mut out = Vec::new();
    for k in lo(c.z)..=hi(c.z) {
        for j in lo(c.y)..=hi(c.y) {
            for i in lo(c.x)..=hi(c.x) {
                let center = Vec3::new(
                    (i as f64 + 0.5) * r,
                    (j as f64 + 0.5) * r,
                    (k as f64 + 0.5) * r,
                );
                let d = (center - c).norm();
                if d < spec.near || d > spec.far {
                    continue;
                }
                let Ok(px) = camera.project(center) else {
                    continue;
                };
                if px.x >= 0.0 && px.x < w as f64 && px.y >= 0.0 && px.y < h as f64 {
                    out.push(center);
                }
            }
        }
    }
    out
}

fn iou_over<FP, FT>(voxels: &[Vec3], pred: FP, truth: FT) -> Result<f64>
where
    FP: Fn(Vec3) -> bool + Sync,
    FT: Fn(Vec3) -> bool + Sync,
{
    if voxels.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (inter, union) = voxels
        .par_iter()
        .map(|&v| {
            let p = pred(v);
            let t = truth(v);
            ((p && t) as u64, (p || t) as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if union == 0 {
        // both predicates empty on the effective set: identical emptiness
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// IoU of the inside-room predicates over the effective voxels (rooms are
/// compared empty, without objects).
pub fn room_voxel_iou(
    pred: &RoomBox,
    truth: &RoomBox,
    camera: &Camera,
    spec: &VoxelSpec,
) -> Result<f64> {
    let voxels = effective_voxels(camera, spec);
    iou_over(&voxels, |v| pred.contains(v), |v| truth.contains(v))
}

fn free_space(scene: &Scene, v: Vec3) -> bool {
    scene.room.contains(v) && !scene.objects.iter().any(|po| po.object.contains(v))
}

/// IoU of free space: inside the room and outside every object's oriented
/// bounding box.
pub fn freespace_iou(
    pred: &Scene,
    truth: &Scene,
    camera: &Camera,
    spec: &VoxelSpec,
) -> Result<f64> {
    let voxels = effective_voxels(camera, spec);
    iou_over(&voxels, |v| free_space(pred, v), |v| free_space(truth, v))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MapConfig {
    /// Distance threshold sweep: 0..=max_dist in steps of `step`, meters.
    pub max_dist: f64,
    pub step: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig {
            max_dist: 2.0,
            step: 0.05,
        }
    }
}

/// Greedy unique matching by ascending ground-plane centroid distance.
/// Returns (truth index, pred index, distance) triples.
pub fn greedy_match(truth: &[Vec2], pred: &[Vec2]) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(truth.len() * pred.len());
    for (ti, t) in truth.iter().enumerate() {
        for (pi, p) in pred.iter().enumerate() {
            pairs.push(((*t - *p).norm(), ti, pi));
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut t_used = vec![false; truth.len()];
    let mut p_used = vec![false; pred.len()];
    let mut matches = Vec::new();
    for (d, ti, pi) in pairs {
        if t_used[ti] || p_used[pi] {
            continue;
        }
        t_used[ti] = true;
        p_used[pi] = true;
        matches.push((ti, pi, d));
    }
    matches
}

#[derive(Debug, Clone)]
pub struct MapReport {
    pub map: f64,
    pub per_category: Vec<(Category, f64)>,
}

/// Localization mAP: per truth category, sweep the distance threshold over
/// the grid and average `TP(tau) / max(#pred, #truth)`; mAP is the mean over
/// categories present in the ground truth.
pub fn localization_map(
    pred: &[SceneObject],
    truth: &[SceneObject],
    cfg: &MapConfig,
) -> Result<MapReport> {
    if truth.is_empty() {
        return Err(Error::UndefinedMap);
    }
    let mut by_cat: BTreeMap<Category, (Vec<Vec2>, Vec<Vec2>)> = BTreeMap::new();
    for t in truth {
        by_cat.entry(t.category).or_default().0.push(t.ground_centroid());
    }
    for p in pred {
        if let Some(entry) = by_cat.get_mut(&p.category) {
            entry.1.push(p.ground_centroid());
        }
    }
    let n_thresholds = (cfg.max_dist / cfg.step).round() as usize + 1;
    let mut per_category = Vec::new();
    for (cat, (t_pts, p_pts)) in by_cat {
        let matches = greedy_match(&t_pts, &p_pts);
        let denom = t_pts.len().max(p_pts.len()) as f64;
        let mut acc = 0.0;
        for k in 0..n_thresholds {
            let tau = k as f64 * cfg.step;
            let tp = matches.iter().filter(|(_, _, d)| *d <= tau).count() as f64;
            acc += tp / denom;
        }
        per_category.push((cat, acc / n_thresholds as f64));
    }
    let map = per_category.iter().map(|(_, ap)| ap).sum::<f64>() / per_category.len() as f64;
    Ok(MapReport { map, per_category })
}
