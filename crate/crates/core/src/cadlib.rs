//! CAD model library: mesh loading and normalization, the 32-viewpoint
//! descriptor grid, and appearance-based retrieval for detection crops.
//!
//! Each normalized model is rendered orthographically from 16 azimuths and
//! two elevations (15 and 30 degrees). Retrieval ranks views by cosine
//! similarity between a fixed-length pyramid gradient-orientation descriptor
//! of the detection crop and of each silhouette rendering; the descriptor
//! uses a fixed cell grid so its length is independent of crop size and
//! aspect ratio.

pub mod builtin;

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::detections::Category;
use crate::error::{Error, Result};
use crate::features::{self, ExtractConfig};
use crate::geom::{Vec2, Vec3};
use crate::img::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle(pub Vec3, pub Vec3, pub Vec3);

impl Triangle {
    pub fn normal(&self) -> Vec3 {
        (self.1 - self.0).cross(self.2 - self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub triangles: Vec<Triangle>,
}

impl Mesh {
    pub fn bbox(&self) -> Option<(Vec3, Vec3)> {
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for t in &self.triangles {
            for p in [t.0, t.1, t.2] {
                lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
                hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
            }
        }
        if self.triangles.is_empty() {
            None
        } else {
            Some((lo, hi))
        }
    }
}

/// Translate and (anisotropically) scale a mesh so its bounding box is the
/// unit cube.
pub fn normalize(mesh: &Mesh) -> Result<Mesh> {
    let (lo, hi) = mesh.bbox().ok_or(Error::DegenerateMesh)?;
    let ext = hi - lo;
    if ext.x < 1e-9 || ext.y < 1e-9 || ext.z < 1e-9 {
        return Err(Error::DegenerateMesh);
    }
    let map = |p: Vec3| {
        Vec3::new(
            (p.x - lo.x) / ext.x,
            (p.y - lo.y) / ext.y,
            (p.z - lo.z) / ext.z,
        )
    };
    Ok(Mesh {
        triangles: mesh
            .triangles
            .iter()
            .map(|t| Triangle(map(t.0), map(t.1), map(t.2)))
            .collect(),
    })
}

/// A normalized CAD model (bounding box is exactly the unit cube).
#[derive(Debug, Clone, PartialEq)]
pub struct CadModel {
    pub id: String,
    pub category: Category,
    pub mesh: Mesh,
}

impl CadModel {
    pub fn new(id: impl Into<String>, category: Category, mesh: &Mesh) -> Result<CadModel> {
        Ok(CadModel {
            id: id.into(),
            category,
            mesh: normalize(mesh)?,
        })
    }
}

/// Wavefront-OBJ subset loader: `v` and `f` records only, polygons are
/// fan-triangulated, every other record type is ignored.
pub fn load_obj_str(text: &str) -> Result<Mesh> {
    let mut verts: Vec<Vec3> = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("v") => {
                let mut take = || -> Result<f64> {
                    words
                        .next()
                        .ok_or_else(|| Error::Parse(format!("obj line {}: short v record", lineno + 1)))?
                        .parse()
                        .map_err(|e| Error::Parse(format!("obj line {}: {e}", lineno + 1)))
                };
                let (x, y, z) = (take()?, take()?, take()?);
                verts.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for w in words {
                    let first = w.split('/').next().unwrap_or("");
                    let i: isize = first
                        .parse()
                        .map_err(|e| Error::Parse(format!("obj line {}: {e}", lineno + 1)))?;
                    let resolved = if i < 0 {
                        verts.len() as isize + i
                    } else {
                        i - 1
                    };
                    if resolved < 0 || resolved as usize >= verts.len() {
                        return Err(Error::Parse(format!(
                            "obj line {}: vertex index {i} out of range",
                            lineno + 1
                        )));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(Error::Parse(format!(
                        "obj line {}: face needs at least 3 vertices",
                        lineno + 1
                    )));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push(Triangle(verts[idx[0]], verts[idx[k]], verts[idx[k + 1]]));
                }
            }
            _ => {}
        }
    }
    Ok(Mesh { triangles })
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
    load_obj_str(&std::fs::read_to_string(path)?)
}

pub fn save_obj(path: impl AsRef<Path>, mesh: &Mesh) -> Result<()> {
    let mut out = String::new();
    for t in &mesh.triangles {
        for p in [t.0, t.1, t.2] {
            out.push_str(&format!("v {} {} {}\n", p.x, p.y, p.z));
        }
    }
    for i in 0..mesh.triangles.len() {
        out.push_str(&format!("f {} {} {}\n", 3 * i + 1, 3 * i + 2, 3 * i + 3));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// The full model library used for retrieval and rendering.
#[derive(Debug, Clone, Default)]
pub struct CadLibrary {
    pub models: Vec<CadModel>,
}

impl CadLibrary {
    /// The bundled procedural furniture set.
    pub fn builtin() -> CadLibrary {
        CadLibrary {
            models: builtin::builtin_models(),
        }
    }

    /// Load `<category_key>__<name>.obj` files from a directory.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<CadLibrary> {
        let mut paths: Vec<_> = std::fs::read_dir(dir.as_ref())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "obj"))
            .collect();
        paths.sort();
        let mut models = Vec::new();
        for path in paths {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Parse(format!("bad model file name {}", path.display())))?;
            let (cat_key, _) = stem.split_once("__").ok_or_else(|| {
                Error::Parse(format!(
                    "model file `{stem}.obj` must be named <category>__<name>.obj"
                ))
            })?;
            let category = Category::from_key(cat_key)?;
            let mesh = load_obj(&path)?;
            models.push(CadModel::new(stem, category, &mesh)?);
        }
        if models.is_empty() {
            return Err(Error::Parse("model directory contains no .obj files".into()));
        }
        Ok(CadLibrary { models })
    }

    pub fn get(&self, id: &str) -> Option<&CadModel> {
        self.models.iter().find(|m| m.id == id)
    }
}

/// One rendered viewpoint of a model: pose, descriptor, tight silhouette and
/// the projected unit-cube corners in silhouette coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewEntry {
    pub model_id: String,
    pub category: Category,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    /// Unit-norm descriptor.
    pub descriptor: Vec<f32>,
    pub sil_width: u32,
    pub sil_height: u32,
    /// Row-major binary silhouette (0/1) after tight cropping.
    pub silhouette: Vec<u8>,
    /// Unit-cube corners in cropped raster coordinates: bottom face
    /// (0,0,0),(1,0,0),(1,1,0),(0,1,0) then the top face in the same order.
    pub cube_corners: [Vec2; 8],
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ViewGridConfig {
    pub resolution: u32,
    pub azimuths: usize,
    pub elevations_deg: [f64; 2],
}

impl Default for ViewGridConfig {
    fn default() -> Self {
        ViewGridConfig {
            resolution: 128,
            azimuths: 16,
            elevations_deg: [15.0, 30.0],
        }
    }
}

/// Unit-cube corners in the canonical order used throughout placement.
pub fn unit_cube_corners() -> [Vec3; 8] {
    [
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(1.0, 1.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(1.0, 0.0, 1.0),
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(0.0, 1.0, 1.0),
    ]
}

/// Fill a 2D triangle into a binary mask (pixel-center coverage).
fn fill_triangle_mask(mask: &mut [u8], w: u32, h: u32, p0: Vec2, p1: Vec2, p2: Vec2) {
    let min_x = p0.x.min(p1.x).min(p2.x).floor().max(0.0) as i64;
    let max_x = (p0.x.max(p1.x).max(p2.x).ceil() as i64).min(w as i64 - 1);
    let min_y = p0.y.min(p1.y).min(p2.y).floor().max(0.0) as i64;
    let max_y = (p0.y.max(p1.y).max(p2.y).ceil() as i64).min(h as i64 - 1);
    let area = (p1 - p0).perp().dot(p2 - p0);
    if area.abs() < 1e-12 {
        return;
    }
    let sign = area.signum();
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            let c = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
            let e0 = (p1 - p0).perp().dot(c - p0) * sign;
            let e1 = (p2 - p1).perp().dot(c - p1) * sign;
            let e2 = (p0 - p2).perp().dot(c - p2) * sign;
            if e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0 {
                mask[(y as u32 * w + x as u32) as usize] = 1;
            }
        }
    }
}

/// Fixed-length silhouette descriptor: the crop is resampled to 56x56 and
/// centered on a 64x64 canvas (the border keeps boundary gradients even for
/// crops the shape fills completely), then two pyramid levels of 8-bin
/// orientation histograms are concatenated and L2-normalized.
pub fn descriptor(img: &GrayImage) -> Vec<f32> {
    const SIDE: u32 = 64;
    const INNER: u32 = 56;
    const PAD: u32 = (SIDE - INNER) / 2;
    let resized = img.resize(INNER, INNER);
    let mut canvas = GrayImage::new(SIDE, SIDE);
    for y in 0..INNER {
        for x in 0..INNER {
            canvas.set(x + PAD, y + PAD, resized.get(x, y));
        }
    }
    let cfg = ExtractConfig::default();
    let f0 = canvas.to_f32();
    let l0 = features::orientation_histograms(&f0, SIDE as usize, SIDE as usize, &cfg);
    let (f1, w1, h1) = features::downsample_image(&f0, SIDE as usize, SIDE as usize);
    let l1 = features::orientation_histograms(&f1, w1, h1, &cfg);
    let mut v: Vec<f32> = l0.data.into_iter().chain(l1.data).collect();
    let norm: f64 = v.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
    if norm > 1e-12 {
        for x in v.iter_mut() {
            *x = (*x as f64 / norm) as f32;
        }
    }
    v
}

/// Render the 32-viewpoint grid of a normalized model.
pub fn build_view_grid(model: &CadModel, cfg: &ViewGridConfig) -> Vec<ViewEntry> {
    let mut entries = Vec::with_capacity(cfg.azimuths * 2);
    for &elevation in &cfg.elevations_deg {
        for k in 0..cfg.azimuths {
            let azimuth = k as f64 * 360.0 / cfg.azimuths as f64;
            entries.push(render_view(model, azimuth, elevation, cfg.resolution));
        }
    }
    entries
}

fn render_view(model: &CadModel, azimuth_deg: f64, elevation_deg: f64, res: u32) -> ViewEntry {
    let az = azimuth_deg.to_radians();
    let el = elevation_deg.to_radians();
    // eye direction from the cube center; orthographic projection onto the
    // plane orthogonal to it, z-up preserved
    let eye = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
    let forward = -eye;
    let right = forward.cross(Vec3::new(0.0, 0.0, 1.0)).normalized();
    let up = right.cross(forward).normalized();
    let center = Vec3::new(0.5, 0.5, 0.5);
    let scale = res as f64 / 1.8;
    let project = |p: Vec3| {
        let q = p - center;
        Vec2::new(
            q.dot(right) * scale + res as f64 * 0.5,
            -q.dot(up) * scale + res as f64 * 0.5,
        )
    };
    let mut mask = vec![0u8; (res * res) as usize];
    for t in &model.mesh.triangles {
        fill_triangle_mask(&mut mask, res, res, project(t.0), project(t.1), project(t.2));
    }
    // tight crop
    let mut x0 = res;
    let mut x1 = 0u32;
    let mut y0 = res;
    let mut y1 = 0u32;
    for y in 0..res {
        for x in 0..res {
            if mask[(y * res + x) as usize] != 0 {
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        }
    }
    let (x0, y0, cw, ch) = if x0 <= x1 {
        (x0, y0, x1 - x0 + 1, y1 - y0 + 1)
    } else {
        (0, 0, 1, 1)
    };
    let mut silhouette = vec![0u8; (cw * ch) as usize];
    let mut crop_img = GrayImage::new(cw, ch);
    for y in 0..ch {
        for x in 0..cw {
            let v = mask[((y + y0) * res + (x + x0)) as usize];
            silhouette[(y * cw + x) as usize] = v;
            crop_img.set(x, y, v * 255);
        }
    }
    let mut cube_corners = [Vec2::default(); 8];
    for (i, c) in unit_cube_corners().into_iter().enumerate() {
        let p = project(c);
        cube_corners[i] = Vec2::new(p.x - x0 as f64, p.y - y0 as f64);
    }
    ViewEntry {
        model_id: model.id.clone(),
        category: model.category,
        azimuth_deg,
        elevation_deg,
        descriptor: descriptor(&crop_img),
        sil_width: cw,
        sil_height: ch,
        silhouette,
        cube_corners,
    }
}

/// All view entries of a library, in model order.
#[derive(Debug, Clone, Default)]
pub struct ViewGridDb {
    pub entries: Vec<ViewEntry>,
}

impl ViewGridDb {
    pub fn build(library: &CadLibrary, cfg: &ViewGridConfig) -> ViewGridDb {
        let grids: Vec<Vec<ViewEntry>> = library
            .models
            .par_iter()
            .map(|m| build_view_grid(m, cfg))
            .collect();
        ViewGridDb {
            entries: grids.into_iter().flatten().collect(),
        }
    }
}

/// Rank database views of a category by cosine similarity to the crop.
pub fn retrieve(
    crop: &GrayImage,
    category: Category,
    db: &ViewGridDb,
) -> Result<Vec<(usize, f64)>> {
    let q = descriptor(crop);
    let mut ranked: Vec<(usize, f64)> = db
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.category == category)
        .map(|(i, e)| {
            let sim: f64 = e
                .descriptor
                .iter()
                .zip(&q)
                .map(|(a, b)| *a as f64 * *b as f64)
                .sum();
            (i, sim)
        })
        .collect();
    if ranked.is_empty() {
        return Err(Error::NoModels(category.key().into()));
    }
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                let ea = &db.entries[a.0];
                let eb = &db.entries[b.0];
                ea.model_id
                    .cmp(&eb.model_id)
                    .then(
                        ea.azimuth_deg
                            .partial_cmp(&eb.azimuth_deg)
                            .unwrap_or(std::cmp::Ordering::Equal),
                    )
                    .then(
                        ea.elevation_deg
                            .partial_cmp(&eb.elevation_deg)
                            .unwrap_or(std::cmp::Ordering::Equal),
                    )
            })
    });
    Ok(ranked)
}

const CACHE_MAGIC: &[u8; 4] = b"RCVG";
const CACHE_VERSION: u32 = 1;

/// Serialize a view-grid database to the versioned binary cache format.
pub fn save_view_cache(db: &ViewGridDb, mut w: impl Write) -> Result<()> {
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&(db.entries.len() as u32).to_le_bytes())?;
    for e in &db.entries {
        let id = e.model_id.as_bytes();
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id)?;
        let cat = e.category.key().as_bytes();
        w.write_all(&(cat.len() as u32).to_le_bytes())?;
        w.write_all(cat)?;
        w.write_all(&e.azimuth_deg.to_le_bytes())?;
        w.write_all(&e.elevation_deg.to_le_bytes())?;
        w.write_all(&(e.descriptor.len() as u32).to_le_bytes())?;
        for v in &e.descriptor {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&e.sil_width.to_le_bytes())?;
        w.write_all(&e.sil_height.to_le_bytes())?;
        w.write_all(&e.silhouette)?;
        for c in &e.cube_corners {
            w.write_all(&c.x.to_le_bytes())?;
            w.write_all(&c.y.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_view_cache(mut r: impl Read) -> Result<ViewGridDb> {
    let mut m4 = [0u8; 4];
    r.read_exact(&mut m4)?;
    if &m4 != CACHE_MAGIC {
        return Err(Error::Parse("view cache: bad magic".into()));
    }
    r.read_exact(&mut m4)?;
    let version = u32::from_le_bytes(m4);
    if version != CACHE_VERSION {
        return Err(Error::Parse(format!(
            "view cache: unsupported version {version}"
        )));
    }
    fn read_u32(r: &mut dyn Read) -> Result<u32> {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)?;
        Ok(u32::from_le_bytes(buf))
    }
    fn read_f64(r: &mut dyn Read) -> Result<f64> {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        Ok(f64::from_le_bytes(buf))
    }
    fn read_f32(r: &mut dyn Read) -> Result<f32> {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)?;
        Ok(f32::from_le_bytes(buf))
    }
    let count = read_u32(&mut r)?;
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id_len = read_u32(&mut r)? as usize;
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id)?;
        let cat_len = read_u32(&mut r)? as usize;
        let mut cat = vec![0u8; cat_len];
        r.read_exact(&mut cat)?;
        let category = Category::from_key(
            std::str::from_utf8(&cat).map_err(|e| Error::Parse(e.to_string()))?,
        )?;
        let azimuth_deg = read_f64(&mut r)?;
        let elevation_deg = read_f64(&mut r)?;
        let d_len = read_u32(&mut r)? as usize;
        let mut descriptor = Vec::with_capacity(d_len);
        for _ in 0..d_len {
            descriptor.push(read_f32(&mut r)?);
        }
        let sil_width = read_u32(&mut r)?;
        let sil_height = read_u32(&mut r)?;
        let mut silhouette = vec![0u8; (sil_width * sil_height) as usize];
        r.read_exact(&mut silhouette)?;
        let mut cube_corners = [Vec2::default(); 8];
        for c in cube_corners.iter_mut() {
            c.x = read_f64(&mut r)?;
            c.y = read_f64(&mut r)?;
        }
        entries.push(ViewEntry {
            model_id: String::from_utf8(id).map_err(|e| Error::Parse(e.to_string()))?,
            category,
            azimuth_deg,
            elevation_deg,
            descriptor,
            sil_width,
            sil_height,
            silhouette,
            cube_corners,
        });
    }
    Ok(ViewGridDb { entries })
}
