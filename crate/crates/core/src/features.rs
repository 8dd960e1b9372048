//! Multi-layer image features and the cosine-distance objective between
//! feature stacks.
//!
//! The default extractor builds a Gaussian pyramid and computes dense
//! gradient-orientation histograms per level. Later layers have coarser
//! spatial resolution, so they tolerate larger displacements while the first
//! layers resolve fine alignment; the refinement objective averages one
//! minus cosine similarity over all layers.
//!
//! A stack can also be ingested from `F32MAP` files (`layer_0` ..
//! `layer_{L-1}`), which allows externally computed features to be scored
//! without linking any ML runtime.

use std::path::Path;

use crate::error::{Error, Result};
use crate::f32map::F32Map;
use crate::img::GrayImage;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLayer {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Row-major, channel-interleaved.
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    pub layers: Vec<FeatureLayer>,
}

impl FeatureStack {
    pub fn shapes(&self) -> Vec<(usize, usize, usize)> {
        self.layers
            .iter()
            .map(|l| (l.width, l.height, l.channels))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    /// Requested pyramid levels; trailing levels are dropped if their cell
    /// grid would not shrink strictly.
    pub levels: usize,
    /// Histogram cell side in pixels.
    pub cell: usize,
    /// Orientation bins over 180 degrees (unsigned gradients).
    pub bins: usize,
    /// Per-cell component clip applied after L2 normalization.
    pub clip: f32,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            levels: 5,
            cell: 8,
            bins: 8,
            clip: 0.4,
        }
    }
}

const MIN_IMAGE_SIDE: u32 = 64;

/// 5-tap binomial blur followed by stride-2 decimation.
pub(crate) fn downsample_image(src: &[f32], w: usize, h: usize) -> (Vec<f32>, usize, usize) {
    let k = [1.0f32, 4.0, 6.0, 4.0, 1.0];
    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let xi = (x as isize + i as isize - 2).clamp(0, w as isize - 1) as usize;
                acc += kv * src[y * w + xi];
            }
            tmp[y * w + x] = acc / 16.0;
        }
    }
    let mut blurred = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let yi = (y as isize + i as isize - 2).clamp(0, h as isize - 1) as usize;
                acc += kv * tmp[yi * w + x];
            }
            blurred[y * w + x] = acc / 16.0;
        }
    }
    let nw = w / 2;
    let nh = h / 2;
    let mut out = vec![0.0f32; nw * nh];
    for y in 0..nh {
        for x in 0..nw {
            out[y * nw + x] = blurred[(y * 2) * w + x * 2];
        }
    }
    (out, nw, nh)
}

/// Dense soft-assigned gradient-orientation histograms over a fixed cell
/// grid. Cells are L2-normalized and clipped; a textureless cell stays zero.
pub(crate) fn orientation_histograms(
    img: &[f32],
    w: usize,
    h: usize,
    cfg: &ExtractConfig,
) -> FeatureLayer {
    let cells_x = (w / cfg.cell).max(1);
    let cells_y = (h / cfg.cell).max(1);
    let bins = cfg.bins;
    let mut data = vec![0.0f32; cells_x * cells_y * bins];
    if w >= 3 && h >= 3 {
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let gx = (img[y * w + x + 1] - img[y * w + x - 1]) * 0.5;
                let gy = (img[(y + 1) * w + x] - img[(y - 1) * w + x]) * 0.5;
                let mag = (gx * gx + gy * gy).sqrt();
                if mag <= 0.0 {
                    continue;
                }
                // unsigned orientation in [0, pi)
                let mut theta = (gy as f64).atan2(gx as f64);
                if theta < 0.0 {
                    theta += std::f64::consts::PI;
                }
                if theta >= std::f64::consts::PI {
                    theta = 0.0;
                }
                let pos = theta / std::f64::consts::PI * bins as f64 - 0.5;
                let b0 = pos.floor();
                let t = (pos - b0) as f32;
                let b0 = (b0 as isize).rem_euclid(bins as isize) as usize;
                let b1 = (b0 + 1) % bins;
                let cx = (x / cfg.cell).min(cells_x - 1);
                let cy = (y / cfg.cell).min(cells_y - 1);
                let base = (cy * cells_x + cx) * bins;
                data[base + b0] += mag * (1.0 - t);
                data[base + b1] += mag * t;
            }
        }
    }
    for cell in data.chunks_exact_mut(bins) {
        let norm: f32 = cell.iter().map(|v| v * v).sum::<f32>().sqrt();
        if norm > 1e-6 {
            for v in cell.iter_mut() {
                *v = (*v / norm).min(cfg.clip);
            }
        }
    }
    FeatureLayer {
        width: cells_x,
        height: cells_y,
        channels: bins,
        data,
    }
}

/// Extract the multi-level feature stack of an image.
pub fn extract(img: &GrayImage, cfg: &ExtractConfig) -> Result<FeatureStack> {
    if img.width < MIN_IMAGE_SIDE || img.height < MIN_IMAGE_SIDE {
        return Err(Error::ImageTooSmall {
            width: img.width,
            height: img.height,
            min: MIN_IMAGE_SIDE,
        });
    }
    let mut layers = Vec::new();
    let mut level = img.to_f32();
    let mut w = img.width as usize;
    let mut h = img.height as usize;
    for i in 0..cfg.levels {
        let layer = orientation_histograms(&level, w, h, cfg);
        if let Some(prev) = layers.last() {
            let prev: &FeatureLayer = prev;
            if !(layer.width < prev.width && layer.height < prev.height) {
                break;
            }
        }
        layers.push(layer);
        if i + 1 < cfg.levels {
            let (next, nw, nh) = downsample_image(&level, w, h);
            level = next;
            w = nw;
            h = nh;
            if w < 3 || h < 3 {
                break;
            }
        }
    }
    Ok(FeatureStack { layers })
}

fn layer_cosine_term(a: &FeatureLayer, b: &FeatureLayer) -> f64 {
    if a.data == b.data {
        return 0.0;
    }
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (x, y) in a.data.iter().zip(&b.data) {
        dot += *x as f64 * *y as f64;
        na += *x as f64 * *x as f64;
        nb += *y as f64 * *y as f64;
    }
    let na = na.sqrt();
    let nb = nb.sqrt();
    // zero-norm convention: both zero -> 0, one zero -> 1
    if na < 1e-12 && nb < 1e-12 {
        0.0
    } else if na < 1e-12 || nb < 1e-12 {
        1.0
    } else {
        1.0 - (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

fn check_shapes(a: &FeatureStack, b: &FeatureStack) -> Result<()> {
    if a.shapes() != b.shapes() {
        return Err(Error::DimensionMismatch(format!(
            "feature stacks differ: {:?} vs {:?}",
            a.shapes(),
            b.shapes()
        )));
    }
    Ok(())
}

/// Per-layer terms of the objective: `1 - cos(a_i, b_i)` with each layer
/// flattened.
pub fn cosine_cost_per_layer(a: &FeatureStack, b: &FeatureStack) -> Result<Vec<f64>> {
    check_shapes(a, b)?;
    Ok(a.layers
        .iter()
        .zip(&b.layers)
        .map(|(x, y)| layer_cosine_term(x, y))
        .collect())
}

/// Mean over layers of one minus cosine similarity.
pub fn cosine_cost(a: &FeatureStack, b: &FeatureStack) -> Result<f64> {
    let terms = cosine_cost_per_layer(a, b)?;
    Ok(terms.iter().sum::<f64>() / terms.len() as f64)
}

/// Load a precomputed stack from `layer_0` .. `layer_{L-1}` F32MAP files.
pub fn load_stack_dir(dir: impl AsRef<Path>) -> Result<FeatureStack> {
    let dir = dir.as_ref();
    let mut layers = Vec::new();
    loop {
        let path = dir.join(format!("layer_{}", layers.len()));
        if !path.exists() {
            break;
        }
        let map = F32Map::load(&path)?;
        layers.push(FeatureLayer {
            width: map.width as usize,
            height: map.height as usize,
            channels: map.channels as usize,
            data: map.data,
        });
    }
    if layers.len() < 2 {
        return Err(Error::Parse(format!(
            "feature stack in {} has {} layers, need at least 2",
            dir.display(),
            layers.len()
        )));
    }
    Ok(FeatureStack { layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant_image(w: u32, h: u32, v: u8) -> GrayImage {
        GrayImage::from_pixels(w, h, vec![v; (w * h) as usize]).unwrap()
    }

    #[test]
    fn constant_image_gives_zero_features() {
        let stack = extract(&constant_image(128, 96, 137), &ExtractConfig::default()).unwrap();
        assert!(stack.layers.len() >= 2);
        for layer in &stack.layers {
            assert!(layer.data.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = GrayImage::from_pixels(
            160,
            120,
            (0..160 * 120).map(|_| rng.gen()).collect(),
        )
        .unwrap();
        let a = extract(&img, &ExtractConfig::default()).unwrap();
        let b = extract(&img.clone(), &ExtractConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn layer_sizes_strictly_decrease() {
        for (w, h) in [(320u32, 240u32), (64, 64), (100, 64), (640, 480)] {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let img =
                GrayImage::from_pixels(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap();
            let stack = extract(&img, &ExtractConfig::default()).unwrap();
            assert!(stack.layers.len() >= 2, "{}x{}", w, h);
            for pair in stack.layers.windows(2) {
                assert!(pair[1].width < pair[0].width);
                assert!(pair[1].height < pair[0].height);
            }
        }
    }

    #[test]
    fn too_small_image_rejected() {
        assert!(matches!(
            extract(&constant_image(63, 100, 0), &ExtractConfig::default()),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    /// Diagonal stripes rotated by 90 degrees permute the orientation bins
    /// by bins/2 = 4.
    #[test]
    fn rotation_shifts_bins_by_four() {
        let cfg = ExtractConfig::default();
        let n = 128u32;
        let mut img = GrayImage::new(n, n);
        let mut rot = GrayImage::new(n, n);
        for y in 0..n {
            for x in 0..n {
                // stripes at 45 degrees
                let v = if ((x + y) / 6) % 2 == 0 { 255 } else { 0 };
                img.set(x, y, v);
                // the same pattern rotated by 90 degrees: (x, y) -> (y, n-1-x)
                rot.set(y, n - 1 - x, v);
            }
        }
        let sa = extract(&img, &cfg).unwrap();
        let sb = extract(&rot, &cfg).unwrap();
        // aggregate histogram over all cells of the finest layer
        let agg = |l: &FeatureLayer| {
            let mut h = vec![0.0f64; l.channels];
            for cell in l.data.chunks_exact(l.channels) {
                for (i, v) in cell.iter().enumerate() {
                    h[i] += *v as f64;
                }
            }
            h
        };
        let ha = agg(&sa.layers[0]);
        let hb = agg(&sb.layers[0]);
        let total: f64 = ha.iter().sum();
        assert!(total > 1.0);
        for b in 0..8 {
            let shifted = hb[(b + 4) % 8];
            assert!(
                (ha[b] - shifted).abs() < 0.02 * total,
                "bin {}: {} vs {}",
                b,
                ha[b],
                shifted
            );
        }
    }

    #[test]
    fn cost_zero_for_identical_stacks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img =
            GrayImage::from_pixels(96, 96, (0..96 * 96).map(|_| rng.gen()).collect()).unwrap();
        let a = extract(&img, &ExtractConfig::default()).unwrap();
        let b = a.clone();
        assert_eq!(cosine_cost(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_layers_cost_one() {
        let layer = |data: Vec<f32>| FeatureLayer {
            width: 2,
            height: 1,
            channels: 2,
            data,
        };
        let a = FeatureStack {
            layers: vec![
                layer(vec![1.0, 0.0, 1.0, 0.0]),
                layer(vec![0.0, 2.0, 0.0, 2.0]),
            ],
        };
        let b = FeatureStack {
            layers: vec![
                layer(vec![0.0, 1.0, 0.0, 1.0]),
                layer(vec![3.0, 0.0, 3.0, 0.0]),
            ],
        };
        assert!((cosine_cost(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cost_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let mk = |rng: &mut ChaCha8Rng| FeatureStack {
                layers: (0..3)
                    .map(|i| {
                        let w = 8 >> i;
                        let h = 6 >> i;
                        FeatureLayer {
                            width: w,
                            height: h,
                            channels: 4,
                            data: (0..w * h * 4).map(|_| rng.gen_range(0.0..1.0)).collect(),
                        }
                    })
                    .collect(),
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            // brute-force scalar evaluation
            let mut total = 0.0f64;
            for (la, lb) in a.layers.iter().zip(&b.layers) {
                let dot: f64 = la
                    .data
                    .iter()
                    .zip(&lb.data)
                    .map(|(x, y)| *x as f64 * *y as f64)
                    .sum();
                let na: f64 = la.data.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
                let nb: f64 = lb.data.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
                total += 1.0 - dot / (na * nb);
            }
            total /= a.layers.len() as f64;
            assert!((cosine_cost(&a, &b).unwrap() - total).abs() < 1e-9);
        }
    }

    #[test]
    fn cost_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let img1 =
            GrayImage::from_pixels(96, 96, (0..96 * 96).map(|_| rng.gen()).collect()).unwrap();
        let img2 =
            GrayImage::from_pixels(96, 96, (0..96 * 96).map(|_| rng.gen()).collect()).unwrap();
        let a = extract(&img1, &ExtractConfig::default()).unwrap();
        let b = extract(&img2, &ExtractConfig::default()).unwrap();
        let ab = cosine_cost(&a, &b).unwrap();
        let ba = cosine_cost(&b, &a).unwrap();
        assert_eq!(ab, ba);
        assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn per_layer_scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        let layer = |rng: &mut ChaCha8Rng, scale: f32| FeatureLayer {
            width: 4,
            height: 3,
            channels: 2,
            data: (0..24).map(|_| rng.gen_range(0.0..1.0f32) * scale).collect(),
        };
        let mut r1 = ChaCha8Rng::seed_from_u64(99);
        let mut r2 = ChaCha8Rng::seed_from_u64(99);
        let a = FeatureStack {
            layers: vec![layer(&mut r1, 1.0), layer(&mut r1, 1.0)],
        };
        let a_scaled = FeatureStack {
            layers: vec![layer(&mut r2, 2.5), layer(&mut r2, 0.125)],
        };
        let b = FeatureStack {
            layers: vec![layer(&mut rng, 1.0), layer(&mut rng, 1.0)],
        };
        // scaling by powers of two keeps f32 values exact, so the costs agree tightly
        let c1 = cosine_cost(&a, &b).unwrap();
        let c2 = cosine_cost(&a_scaled, &b).unwrap();
        assert!((c1 - c2).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mk = |w| FeatureStack {
            layers: vec![
                FeatureLayer {
                    width: w,
                    height: 2,
                    channels: 1,
                    data: vec![0.0; w * 2],
                },
                FeatureLayer {
                    width: 1,
                    height: 1,
                    channels: 1,
                    data: vec![0.0],
                },
            ],
        };
        assert!(matches!(
            cosine_cost(&mk(4), &mk(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn stack_round_trips_through_f32map_files() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img =
            GrayImage::from_pixels(96, 80, (0..96 * 80).map(|_| rng.gen()).collect()).unwrap();
        let stack = extract(&img, &ExtractConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (i, layer) in stack.layers.iter().enumerate() {
            F32Map::new(
                layer.width as u32,
                layer.height as u32,
                layer.channels as u32,
                layer.data.clone(),
            )
            .unwrap()
            .save(dir.path().join(format!("layer_{i}")))
            .unwrap();
        }
        let loaded = load_stack_dir(dir.path()).unwrap();
        assert_eq!(stack, loaded);
    }
}
