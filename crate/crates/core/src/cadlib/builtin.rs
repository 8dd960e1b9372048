//! Bundled procedural furniture meshes: at least three box-composition
//! models per category, each deliberately carrying a small asymmetric marker
//! so no two views of one model render identical silhouettes.
//!
//! The same meshes ship as OBJ files under `assets/models/`; this module is
//! the in-code source of truth so the pipeline runs without any model files.

use crate::detections::Category;
use crate::geom::Vec3;

use super::{CadModel, Mesh, Triangle};

/// Build a mesh from axis-aligned boxes given as [x0, y0, z0, x1, y1, z1].
pub fn boxes_mesh(parts: &[[f64; 6]]) -> Mesh {
    let mut triangles = Vec::with_capacity(parts.len() * 12);
    for p in parts {
        let lo = Vec3::new(p[0], p[1], p[2]);
        let hi = Vec3::new(p[3], p[4], p[5]);
        let v = [
            Vec3::new(lo.x, lo.y, lo.z),
            Vec3::new(hi.x, lo.y, lo.z),
            Vec3::new(hi.x, hi.y, lo.z),
            Vec3::new(lo.x, hi.y, lo.z),
            Vec3::new(lo.x, lo.y, hi.z),
            Vec3::new(hi.x, lo.y, hi.z),
            Vec3::new(hi.x, hi.y, hi.z),
            Vec3::new(lo.x, hi.y, hi.z),
        ];
        const QUADS: [[usize; 4]; 6] = [
            [0, 3, 2, 1], // bottom
            [4, 5, 6, 7], // top
            [0, 1, 5, 4], // front (y = lo)
            [2, 3, 7, 6], // back
            [0, 4, 7, 3], // left
            [1, 2, 6, 5], // right
        ];
        for q in QUADS {
            triangles.push(Triangle(v[q[0]], v[q[1]], v[q[2]]));
            triangles.push(Triangle(v[q[0]], v[q[2]], v[q[3]]));
        }
    }
    Mesh { triangles }
}

/// Small off-center marker block; breaks rotational silhouette symmetry.
fn marker() -> [f64; 6] {
    [0.02, 0.03, 0.30, 0.07, 0.08, 0.36]
}

fn legs(x0: f64, y0: f64, x1: f64, y1: f64, t: f64, h: f64) -> Vec<[f64; 6]> {
    vec![
        [x0, y0, 0.0, x0 + t, y0 + t, h],
        [x1 - t, y0, 0.0, x1, y0 + t, h],
        [x1 - t, y1 - t, 0.0, x1, y1, h],
        [x0, y1 - t, 0.0, x0 + t, y1, h],
    ]
}

fn chair(seat_h: f64, back_t: f64, leg_t: f64, arms: bool) -> Mesh {
    let mut parts = legs(0.05, 0.05, 0.95, 0.95, leg_t, seat_h);
    parts.push([0.03, 0.03, seat_h, 0.97, 0.97, seat_h + 0.08]);
    // backrest along the y = 1 side
    parts.push([0.03, 1.0 - back_t, seat_h, 0.97, 1.0, 1.0]);
    if arms {
        parts.push([0.0, 0.15, seat_h, 0.08, 0.95, seat_h + 0.28]);
        parts.push([0.92, 0.15, seat_h, 1.0, 0.95, seat_h + 0.28]);
    }
    parts.push(marker());
    boxes_mesh(&parts)
}

fn table(top_h: f64, top_t: f64, leg_t: f64, pedestal: bool) -> Mesh {
    let mut parts = vec![[0.0, 0.0, top_h - top_t, 1.0, 1.0, top_h]];
    if pedestal {
        parts.push([0.42, 0.42, 0.0, 0.58, 0.58, top_h - top_t]);
        parts.push([0.25, 0.25, 0.0, 0.75, 0.75, 0.05]);
    } else {
        parts.extend(legs(0.06, 0.06, 0.94, 0.94, leg_t, top_h - top_t));
    }
    parts.push(marker());
    boxes_mesh(&parts)
}

fn sofa(back_t: f64, arm_w: f64, seat_h: f64) -> Mesh {
    let parts = vec![
        [0.0, 0.0, 0.05, 1.0, 1.0, seat_h],
        [0.0, 1.0 - back_t, 0.05, 1.0, 1.0, 1.0],
        [0.0, 0.0, seat_h, arm_w, 1.0, 0.72],
        [1.0 - arm_w, 0.0, seat_h, 1.0, 1.0, 0.72],
        [0.08, 0.02, 0.0, 0.16, 0.10, 0.05],
        [0.84, 0.02, 0.0, 0.92, 0.10, 0.05],
        marker(),
    ];
    boxes_mesh(&parts)
}

fn bookshelf(shelves: usize, side_t: f64) -> Mesh {
    let mut parts = vec![
        [0.0, 0.0, 0.0, side_t, 1.0, 1.0],
        [1.0 - side_t, 0.0, 0.0, 1.0, 1.0, 1.0],
        [0.0, 1.0 - 0.06, 0.0, 1.0, 1.0, 1.0], // back panel
        [side_t, 0.0, 0.0, 1.0 - side_t, 1.0, 0.04],
        [side_t, 0.0, 0.96, 1.0 - side_t, 1.0, 1.0],
    ];
    for i in 1..shelves {
        let z = i as f64 / shelves as f64;
        parts.push([side_t, 0.0, z - 0.02, 1.0 - side_t, 1.0, z + 0.02]);
    }
    parts.push(marker());
    boxes_mesh(&parts)
}

fn bed(head_h: f64, foot: bool) -> Mesh {
    let mut parts = vec![
        [0.0, 0.0, 0.12, 1.0, 1.0, 0.32],
        [0.03, 0.03, 0.32, 0.97, 0.97, 0.52],
        [0.0, 1.0 - 0.06, 0.0, 1.0, 1.0, head_h],
        [0.02, 0.02, 0.0, 0.10, 0.10, 0.12],
        [0.90, 0.02, 0.0, 0.98, 0.10, 0.12],
        [0.02, 0.90, 0.0, 0.10, 0.98, 0.12],
        [0.90, 0.90, 0.0, 0.98, 0.98, 0.12],
        [0.10, 0.15, 0.52, 0.45, 0.40, 0.60], // pillow
    ];
    if foot {
        parts.push([0.0, 0.0, 0.0, 1.0, 0.05, 0.45]);
    }
    parts.push(marker());
    boxes_mesh(&parts)
}

fn night_table(h: f64, drawer: bool) -> Mesh {
    let mut parts = vec![[0.0, 0.0, 0.15, 1.0, 1.0, h]];
    parts.extend(legs(0.05, 0.05, 0.95, 0.95, 0.12, 0.15));
    if drawer {
        parts.push([0.08, 0.0, h - 0.3, 0.92, 0.05, h - 0.08]);
    }
    parts.push([0.0, 0.0, h, 1.0, 1.0, h + 0.05]);
    parts.push(marker());
    boxes_mesh(&parts)
}

fn chest(ridges: usize) -> Mesh {
    let mut parts = vec![
        [0.0, 0.05, 0.08, 1.0, 1.0, 1.0],
        [0.02, 0.02, 0.0, 0.12, 0.12, 0.08],
        [0.88, 0.02, 0.0, 0.98, 0.12, 0.08],
        [0.02, 0.88, 0.0, 0.12, 0.98, 0.08],
        [0.88, 0.88, 0.0, 0.98, 0.98, 0.08],
    ];
    for i in 0..ridges {
        let z = 0.14 + i as f64 * (0.8 / ridges as f64);
        parts.push([0.05, 0.0, z, 0.95, 0.06, z + 0.04]);
    }
    parts.push(marker());
    boxes_mesh(&parts)
}

fn window(cols: usize, rows: usize) -> Mesh {
    let t = 0.06;
    let d = 0.6;
    let mut parts = vec![
        [0.0, 0.0, 0.0, 1.0, d, t],
        [0.0, 0.0, 1.0 - t, 1.0, d, 1.0],
        [0.0, 0.0, 0.0, t, d, 1.0],
        [1.0 - t, 0.0, 0.0, 1.0, d, 1.0],
    ];
    for c in 1..cols {
        let x = c as f64 / cols as f64;
        parts.push([x - 0.02, 0.1, t, x + 0.02, d - 0.1, 1.0 - t]);
    }
    for r in 1..rows {
        let z = r as f64 / rows as f64;
        parts.push([t, 0.1, z - 0.02, 1.0 - t, d - 0.1, z + 0.02]);
    }
    parts.push(marker());
    boxes_mesh(&parts)
}

/// All bundled models, normalized. IDs are `<category_key>__<variant>`.
pub fn builtin_models() -> Vec<CadModel> {
    let specs: Vec<(Category, &str, Mesh)> = vec![
        (Category::Chair, "basic", chair(0.45, 0.12, 0.09, false)),
        (Category::Chair, "thin", chair(0.40, 0.08, 0.05, false)),
        (Category::Chair, "arm", chair(0.42, 0.14, 0.08, true)),
        (Category::Chair, "low", chair(0.32, 0.18, 0.10, false)),
        (Category::Table, "dining", table(0.95, 0.08, 0.08, false)),
        (Category::Table, "coffee", table(0.55, 0.12, 0.10, false)),
        (Category::Table, "pedestal", table(0.90, 0.07, 0.0, true)),
        (Category::Table, "side", table(0.80, 0.15, 0.14, false)),
        (Category::Sofa, "boxy", sofa(0.22, 0.12, 0.42)),
        (Category::Sofa, "slim", sofa(0.15, 0.08, 0.38)),
        (Category::Sofa, "deep", sofa(0.28, 0.16, 0.46)),
        (Category::Bookshelf, "four", bookshelf(4, 0.05)),
        (Category::Bookshelf, "five", bookshelf(5, 0.04)),
        (Category::Bookshelf, "chunky", bookshelf(3, 0.09)),
        (Category::Bed, "plain", bed(0.9, false)),
        (Category::Bed, "tall", bed(1.0, false)),
        (Category::Bed, "framed", bed(0.85, true)),
        (Category::NightTable, "drawer", night_table(0.75, true)),
        (Category::NightTable, "open", night_table(0.70, false)),
        (Category::NightTable, "tall", night_table(0.85, true)),
        (Category::Chest, "three", chest(3)),
        (Category::Chest, "four", chest(4)),
        (Category::Chest, "five", chest(5)),
        (Category::Window, "single", window(1, 1)),
        (Category::Window, "double", window(2, 1)),
        (Category::Window, "quad", window(2, 2)),
        (Category::Window, "triple", window(3, 1)),
    ];
    specs
        .into_iter()
        .map(|(cat, name, mesh)| {
            CadModel::new(format!("{}__{}", cat.key(), name), cat, &mesh)
                .expect("builtin meshes are non-degenerate")
        })
        .collect()
}
