//! Line segment extraction, estimation of three mutually orthogonal
//! vanishing points, and camera calibration from them.
//!
//! The estimator scores candidate vanishing points (pairwise intersections
//! of strong segment lines) by the total strength of consistent segments,
//! enumerates orthogonality-compatible triples, and refines the winner by
//! alternating between least-squares vanishing point fits and snapping to
//! the calibrated orthogonal frame.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geom::{canonical_direction, cross_hom, line_through, Camera, HomLine, Mat3, Vec2, Vec3};
use crate::img::GrayImage;

/// Angular consistency threshold for inlier assignment, degrees.
const INLIER_TOL_DEG: f64 = 3.0;
/// Pairwise orthogonality tolerance for triple compatibility, degrees.
const ORTHO_TOL_DEG: f64 = 2.0;
/// Strongest segments used for candidate generation.
const CANDIDATE_SEGMENTS: usize = 64;
/// Candidates kept for the triple search.
const TRIPLE_CANDIDATES: usize = 48;

#[derive(Debug, Clone, PartialEq)]
pub struct LineSegment {
    pub a: Vec2,
    pub b: Vec2,
    /// Sum of gradient magnitudes along the segment (non-negative).
    pub strength: f64,
}

impl LineSegment {
    /// Endpoints are stored in lexicographic order so equal segments compare
    /// equal regardless of construction order.
    pub fn new(a: Vec2, b: Vec2, strength: f64) -> LineSegment {
        if (a.x, a.y) <= (b.x, b.y) {
            LineSegment { a, b, strength }
        } else {
            LineSegment {
                a: b,
                b: a,
                strength,
            }
        }
    }

    pub fn midpoint(&self) -> Vec2 {
        (self.a + self.b) * 0.5
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// Unit direction with canonical sign.
    pub fn direction(&self) -> Vec2 {
        canonical_direction(self.b - self.a)
    }

    /// Orientation in [0, pi).
    pub fn orientation(&self) -> f64 {
        let d = self.direction();
        let mut t = d.y.atan2(d.x);
        if t < 0.0 {
            t += std::f64::consts::PI;
        }
        if t >= std::f64::consts::PI {
            t = 0.0;
        }
        t
    }

    pub fn line(&self) -> HomLine {
        line_through(self.a, self.b)
    }
}

fn angle_diff_mod_pi(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d)
}

/// Angle in degrees between two unit-ish 2D directions, folded to [0, 90].
fn dir_angle_deg(a: Vec2, b: Vec2) -> f64 {
    let cosv = (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0);
    let deg = cosv.acos().to_degrees();
    deg.min(180.0 - deg)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    /// Absolute gradient magnitude threshold on 0..255 images.
    pub gradient_threshold: f32,
    /// Orientation coherence tolerance for region growing, degrees.
    pub orientation_tol_deg: f64,
    /// Minimum segment length as a fraction of max(width, height).
    pub min_length_frac: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            gradient_threshold: 18.0,
            orientation_tol_deg: 11.25,
            min_length_frac: 0.02,
        }
    }
}

/// Extract line segments by gradient-magnitude thresholding,
/// orientation-coherent region growing and a total-least-squares line fit
/// per region. Returns segments sorted by strength descending.
pub fn extract_segments(img: &GrayImage, cfg: &SegmentConfig) -> Vec<LineSegment> {
    let w = img.width as usize;
    let h = img.height as usize;
    if w < 32 || h < 32 {
        return Vec::new();
    }
    let gray = img.to_f32();
    let mut mag = vec![0.0f32; w * h];
    let mut ori = vec![0.0f64; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (gray[y * w + x + 1] - gray[y * w + x - 1]) * 0.5;
            let gy = (gray[(y + 1) * w + x] - gray[(y - 1) * w + x]) * 0.5;
            let m = (gx * gx + gy * gy).sqrt();
            mag[y * w + x] = m;
            if m > 0.0 {
                let mut t = (gy as f64).atan2(gx as f64);
                if t < 0.0 {
                    t += std::f64::consts::PI;
                }
                if t >= std::f64::consts::PI {
                    t = 0.0;
                }
                ori[y * w + x] = t;
            }
        }
    }

    let thr = cfg.gradient_threshold;
    let tol = cfg.orientation_tol_deg.to_radians();
    let min_len = cfg.min_length_frac * w.max(h) as f64;
    let mut visited = vec![false; w * h];
    let mut segments = Vec::new();
    let mut queue = Vec::new();
    let mut region = Vec::new();

    for seed_y in 1..h - 1 {
        for seed_x in 1..w - 1 {
            let seed = seed_y * w + seed_x;
            if visited[seed] || mag[seed] < thr {
                continue;
            }
            let seed_ori = ori[seed];
            visited[seed] = true;
            queue.clear();
            region.clear();
            queue.push(seed);
            while let Some(idx) = queue.pop() {
                region.push(idx);
                let x = idx % w;
                let y = idx / w;
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        let nx = x as i32 + dx;
                        let ny = y as i32 + dy;
                        if nx < 1 || ny < 1 || nx >= w as i32 - 1 || ny >= h as i32 - 1 {
                            continue;
                        }
                        let nidx = ny as usize * w + nx as usize;
                        if visited[nidx] || mag[nidx] < thr {
                            continue;
                        }
                        if angle_diff_mod_pi(ori[nidx], seed_ori) > tol {
                            continue;
                        }
                        visited[nidx] = true;
                        queue.push(nidx);
                    }
                }
            }
            if region.len() < 5 {
                continue;
            }
            if let Some(seg) = fit_segment(&region, &mag, w, min_len) {
                segments.push(seg);
            }
        }
    }

    segments.sort_by(|a, b| cmp_segments(a, b));
    segments
}

fn cmp_segments(a: &LineSegment, b: &LineSegment) -> Ordering {
    b.strength
        .partial_cmp(&a.strength)
        .unwrap_or(Ordering::Equal)
        .then_with(|| {
            (a.a.x, a.a.y, a.b.x, a.b.y)
                .partial_cmp(&(b.a.x, b.a.y, b.b.x, b.b.y))
                .unwrap_or(Ordering::Equal)
        })
}

/// Weighted total-least-squares line fit over region pixels.
fn fit_segment(region: &[usize], mag: &[f32], w: usize, min_len: f64) -> Option<LineSegment> {
    let mut sw = 0.0f64;
    let mut cx = 0.0f64;
    let mut cy = 0.0f64;
    for &idx in region {
        let m = mag[idx] as f64;
        cx += m * (idx % w) as f64;
        cy += m * (idx / w) as f64;
        sw += m;
    }
    if sw <= 0.0 {
        return None;
    }
    cx /= sw;
    cy /= sw;
    let (mut sxx, mut sxy, mut syy) = (0.0f64, 0.0, 0.0);
    for &idx in region {
        let m = mag[idx] as f64;
        let dx = (idx % w) as f64 - cx;
        let dy = (idx / w) as f64 - cy;
        sxx += m * dx * dx;
        sxy += m * dx * dy;
        syy += m * dy * dy;
    }
    // principal axis of the 2x2 scatter
    let tr = 0.5 * (sxx + syy);
    let det = ((sxx - syy) * 0.5).powi(2) + sxy * sxy;
    let lam = tr + det.sqrt();
    let dir = if (lam - sxx).abs() > (lam - syy).abs() {
        Vec2::new(sxy, lam - sxx)
    } else {
        Vec2::new(lam - syy, sxy)
    };
    if dir.norm() < 1e-12 {
        return None;
    }
    let dir = dir.normalized();
    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    for &idx in region {
        let t = dir.dot(Vec2::new((idx % w) as f64 - cx, (idx / w) as f64 - cy));
        t_min = t_min.min(t);
        t_max = t_max.max(t);
    }
    if t_max - t_min < min_len {
        return None;
    }
    let c = Vec2::new(cx, cy);
    Some(LineSegment::new(
        c + dir * t_min,
        c + dir * t_max,
        sw,
    ))
}

/// A vanishing point, possibly at infinity (stored as a canonical unit
/// direction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Vp {
    Finite(Vec2),
    Infinite(Vec2),
}

impl Vp {
    pub fn from_homogeneous(h: HomLine) -> Vp {
        let n = (h[0] * h[0] + h[1] * h[1]).sqrt();
        if h[2].abs() > n * 1e-8 {
            Vp::Finite(Vec2::new(h[0] / h[2], h[1] / h[2]))
        } else {
            Vp::Infinite(canonical_direction(Vec2::new(h[0], h[1])))
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Vp::Finite(_))
    }

    /// Image direction from a point toward this vanishing point.
    pub fn direction_from(&self, p: Vec2) -> Vec2 {
        match self {
            Vp::Finite(v) => {
                let d = *v - p;
                if d.norm() < 1e-9 {
                    Vec2::new(0.0, 0.0)
                } else {
                    d.normalized()
                }
            }
            Vp::Infinite(d) => *d,
        }
    }

    /// Back-projected (unnormalized) direction in the camera frame.
    pub fn camera_direction(&self, focal: f64, pp: Vec2) -> Vec3 {
        match self {
            Vp::Finite(v) => Vec3::new((v.x - pp.x) / focal, (v.y - pp.y) / focal, 1.0),
            Vp::Infinite(d) => Vec3::new(d.x, d.y, 0.0),
        }
    }

    /// Deterministic ordering key; finite points sort before directions.
    pub fn sort_key(&self) -> [f64; 3] {
        match self {
            Vp::Finite(v) => [0.0, v.x, v.y],
            Vp::Infinite(d) => [1.0, d.x, d.y],
        }
    }

    /// The image line through two vanishing points (e.g. the horizon).
    pub fn homogeneous(&self) -> HomLine {
        match self {
            Vp::Finite(v) => [v.x, v.y, 1.0],
            Vp::Infinite(d) => [d.x, d.y, 0.0],
        }
    }
}

fn cmp_keys(a: &[f64; 3], b: &[f64; 3]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

#[derive(Debug, Clone)]
pub struct VanishingTriple {
    /// First horizontal vanishing point (world x axis).
    pub vp_x: Vp,
    /// Second horizontal vanishing point (world y axis).
    pub vp_y: Vp,
    /// Vertical vanishing point (world z axis, floor normal).
    pub vp_z: Vp,
    /// Per-axis inlier segment indices into the caller's segment list.
    pub inliers: [Vec<usize>; 3],
}

impl VanishingTriple {
    pub fn vps(&self) -> [Vp; 3] {
        [self.vp_x, self.vp_y, self.vp_z]
    }
}

/// Angular deviation (degrees) between a segment's direction and the
/// direction from its midpoint toward the vanishing point.
pub fn deviation_deg(seg: &LineSegment, vp: &Vp) -> f64 {
    let toward = match vp {
        Vp::Finite(v) => *v - seg.midpoint(),
        Vp::Infinite(d) => *d,
    };
    if toward.norm() < 1e-9 {
        return 0.0;
    }
    dir_angle_deg(seg.direction(), toward)
}

fn candidate_score(vp: &Vp, segments: &[LineSegment]) -> f64 {
    segments
        .iter()
        .filter(|s| deviation_deg(s, vp) <= INLIER_TOL_DEG)
        .map(|s| s.strength)
        .sum()
}

fn triple_score(vps: &[Vp; 3], segments: &[LineSegment]) -> f64 {
    let mut total = 0.0;
    for seg in segments {
        let best = vps
            .iter()
            .map(|vp| deviation_deg(seg, vp))
            .fold(f64::INFINITY, f64::min);
        if best <= INLIER_TOL_DEG {
            total += seg.strength;
        }
    }
    total
}

fn assign_inliers(vps: &[Vp; 3], segments: &[LineSegment]) -> [Vec<usize>; 3] {
    let mut inliers: [Vec<usize>; 3] = Default::default();
    for (i, seg) in segments.iter().enumerate() {
        let mut best = (f64::INFINITY, 0usize);
        for (k, vp) in vps.iter().enumerate() {
            let d = deviation_deg(seg, vp);
            if d < best.0 {
                best = (d, k);
            }
        }
        if best.0 <= INLIER_TOL_DEG {
            inliers[best.1].push(i);
        }
    }
    inliers
}

/// Orthocenter of a triangle (the classic principal-point estimate when all
/// three vanishing points are finite).
fn orthocenter(a: Vec2, b: Vec2, c: Vec2) -> Option<Vec2> {
    // altitude from a: through a, perpendicular to (c - b)
    let d1 = c - b;
    let d2 = a - c;
    let l1 = [d1.x, d1.y, -(d1.x * a.x + d1.y * a.y)];
    let l2 = [d2.x, d2.y, -(d2.x * b.x + d2.y * b.y)];
    let p = cross_hom(l1, l2);
    if p[2].abs() < 1e-9 * (p[0].hypot(p[1])).max(1.0) {
        return None;
    }
    Some(Vec2::new(p[0] / p[2], p[1] / p[2]))
}

/// Geometric compatibility of a candidate triple: principal point, focal
/// length (when recoverable) and orthogonality checks.
fn triple_geometry(vps: &[Vp; 3], image_size: (u32, u32)) -> Option<(Option<f64>, Vec2)> {
    let center = Vec2::new(image_size.0 as f64 * 0.5, image_size.1 as f64 * 0.5);
    let max_dim = image_size.0.max(image_size.1) as f64;
    let finite: Vec<Vec2> = vps
        .iter()
        .filter_map(|v| match v {
            Vp::Finite(p) => Some(*p),
            _ => None,
        })
        .collect();
    let infinite: Vec<Vec2> = vps
        .iter()
        .filter_map(|v| match v {
            Vp::Infinite(d) => Some(*d),
            _ => None,
        })
        .collect();
    let tol = ORTHO_TOL_DEG;

    let pp = if finite.len() == 3 {
        orthocenter(finite[0], finite[1], finite[2])?
    } else {
        center
    };
    // the principal point must be near the image
    if (pp - center).norm() > 2.0 * max_dim {
        return None;
    }

    // two infinite directions must be orthogonal in the image
    for i in 0..infinite.len() {
        for j in i + 1..infinite.len() {
            if (90.0 - dir_angle_deg(infinite[i], infinite[j])).abs() > tol {
                return None;
            }
        }
    }
    // a finite VP direction from pp must be orthogonal to every infinite VP
    for v in &finite {
        let r = *v - pp;
        if r.norm() < 1.0 {
            continue;
        }
        for d in &infinite {
            if (90.0 - dir_angle_deg(r, *d)).abs() > tol {
                return None;
            }
        }
    }

    if finite.len() >= 2 {
        let f2 = -(finite[0] - pp).dot(finite[1] - pp);
        if f2 <= 0.0 {
            return None;
        }
        let f = f2.sqrt();
        if !(0.15 * max_dim..=25.0 * max_dim).contains(&f) {
            return None;
        }
        // with three finite points verify full pairwise 3D orthogonality
        if finite.len() == 3 {
            let dirs: Vec<Vec3> = vps
                .iter()
                .map(|v| v.camera_direction(f, pp).normalized())
                .collect();
            for i in 0..3 {
                for j in i + 1..3 {
                    let ang = dirs[i].dot(dirs[j]).clamp(-1.0, 1.0).acos().to_degrees();
                    if ((ang - 90.0).abs()).min((90.0 - ang).abs()) > tol {
                        return None;
                    }
                }
            }
        }
        Some((Some(f), pp))
    } else {
        Some((None, pp))
    }
}

/// Order a compatible triple into (x, y, z) roles: z is the most vertical
/// axis; x and y are chosen so the calibrated frame is right-handed, falling
/// back to the deterministic sort order when no focal length is available.
fn assign_roles(vps: [Vp; 3], focal: Option<f64>, pp: Vec2, image_size: (u32, u32)) -> [Vp; 3] {
    let f = focal.unwrap_or(image_size.0.max(image_size.1) as f64);
    let verticality = |vp: &Vp| -> f64 {
        match vp {
            Vp::Finite(v) => {
                let d = *v - pp;
                if d.norm() < 1e-9 {
                    0.0
                } else {
                    (d.y / d.norm()).abs()
                }
            }
            Vp::Infinite(d) => d.y.abs(),
        }
    };
    let mut iz = 0;
    for i in 1..3 {
        let (vi, vz) = (verticality(&vps[i]), verticality(&vps[iz]));
        if vi > vz || (vi == vz && cmp_keys(&vps[i].sort_key(), &vps[iz].sort_key()) == Ordering::Less)
        {
            iz = i;
        }
    }
    let rest: Vec<usize> = (0..3).filter(|&i| i != iz).collect();
    let (mut ia, mut ib) = (rest[0], rest[1]);
    if cmp_keys(&vps[ia].sort_key(), &vps[ib].sort_key()) == Ordering::Greater {
        std::mem::swap(&mut ia, &mut ib);
    }
    if focal.is_some() {
        // prefer the ordering that yields a right-handed frame
        if let Ok(cam) = calibrate_from_vps([vps[ia], vps[ib], vps[iz]], f, pp, image_size) {
            if cam.rotation.det() < 0.0 {
                std::mem::swap(&mut ia, &mut ib);
            }
        }
    }
    [vps[ia], vps[ib], vps[iz]]
}

fn calibrate_from_vps(
    ordered: [Vp; 3],
    focal: f64,
    pp: Vec2,
    image_size: (u32, u32),
) -> Result<Camera> {
    // raw axis directions in the camera frame
    let raw: Vec<Vec3> = ordered
        .iter()
        .map(|v| v.camera_direction(focal, pp).normalized())
        .collect();
    // orthonormalize, trusting finite vanishing points first
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by_key(|&i| usize::from(!ordered[i].is_finite()));
    let (ia, ib, ic) = (order[0], order[1], order[2]);
    let qa = raw[ia];
    let qb_raw = raw[ib] - qa * raw[ib].dot(qa);
    if qb_raw.norm() < 1e-9 {
        return Err(Error::DegenerateCalibration);
    }
    let qb = qb_raw.normalized();
    let mut cols = [Vec3::default(); 3];
    cols[ia] = qa;
    cols[ib] = qb;
    cols[ic] = match (ia, ib) {
        (0, 1) | (1, 0) => cols[0].cross(cols[1]),
        (1, 2) | (2, 1) => cols[1].cross(cols[2]),
        _ => cols[2].cross(cols[0]),
    };
    // re-derive so the cyclic identity x cross y = z holds regardless of
    // which column was derived
    match ic {
        0 => cols[0] = cols[1].cross(cols[2]),
        1 => cols[1] = cols[2].cross(cols[0]),
        _ => cols[2] = cols[0].cross(cols[1]),
    }

    // proper sign combinations: flip an even number of columns
    let combos = [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ];
    let mut best: Option<(f64, usize)> = None;
    for (ci, signs) in combos.iter().enumerate() {
        let cz = cols[2] * signs[2];
        let cx = cols[0] * signs[0];
        let cy = cols[1] * signs[1];
        // floor normal must point up (negative image-y component), the
        // horizontal axes should face the scene
        let penalty = if cz.y <= 1e-12 { 0.0 } else { 1e6 };
        let score = penalty - cx.z - cy.z;
        if best.map_or(true, |(s, _)| score < s) {
            best = Some((score, ci));
        }
    }
    let signs = combos[best.unwrap().1];
    let r = Mat3::from_cols(cols[0] * signs[0], cols[1] * signs[1], cols[2] * signs[2])
        .nearest_rotation();
    Ok(Camera::new(focal, pp, r, 1.0, image_size))
}

/// Estimate three orthogonal vanishing points from line segments.
///
/// Deterministic: permuting the input leaves the result unchanged.
pub fn estimate_vanishing_points(
    segments: &[LineSegment],
    image_size: (u32, u32),
) -> Result<VanishingTriple> {
    if segments.len() < 6 {
        return Err(Error::InsufficientStructure);
    }
    let spread = segments
        .iter()
        .flat_map(|a| {
            segments
                .iter()
                .map(move |b| angle_diff_mod_pi(a.orientation(), b.orientation()))
        })
        .fold(0.0f64, f64::max);
    if spread < 15.0f64.to_radians() {
        return Err(Error::InsufficientStructure);
    }

    // canonical processing order
    let mut sorted: Vec<LineSegment> = segments.to_vec();
    sorted.sort_by(cmp_segments);
    let top = &sorted[..sorted.len().min(CANDIDATE_SEGMENTS)];

    // candidate vanishing points: pairwise intersections, deduplicated on a
    // quantized grid
    let mut dedup: BTreeMap<(i64, i64, i64), Vp> = BTreeMap::new();
    for i in 0..top.len() {
        for j in i + 1..top.len() {
            let p = cross_hom(top[i].line(), top[j].line());
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if n < 1e-12 {
                continue;
            }
            let vp = Vp::from_homogeneous(p);
            let key = match vp {
                Vp::Finite(v) => (
                    0i64,
                    (v.x * 2.0).round() as i64,
                    (v.y * 2.0).round() as i64,
                ),
                Vp::Infinite(d) => (
                    1i64,
                    (d.x * 1e4).round() as i64,
                    (d.y * 1e4).round() as i64,
                ),
            };
            dedup.entry(key).or_insert(vp);
        }
    }

    let mut scored: Vec<(f64, Vp)> = dedup
        .values()
        .map(|vp| (candidate_score(vp, &sorted), *vp))
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| cmp_keys(&a.1.sort_key(), &b.1.sort_key()))
    });
    scored.truncate(TRIPLE_CANDIDATES);
    let cands: Vec<Vp> = scored.into_iter().map(|(_, v)| v).collect();

    // exhaustive triple search over the retained candidates
    let mut best: Option<(f64, [Vp; 3])> = None;
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            for k in j + 1..cands.len() {
                let vps = [cands[i], cands[j], cands[k]];
                let Some((focal, pp)) = triple_geometry(&vps, image_size) else {
                    continue;
                };
                let score = triple_score(&vps, &sorted);
                let ordered = assign_roles(vps, focal, pp, image_size);
                let replace = match &best {
                    None => true,
                    Some((s, b)) => {
                        score > *s
                            || (score == *s
                                && cmp_keys(&ordered[0].sort_key(), &b[0].sort_key())
                                    == Ordering::Less)
                    }
                };
                if replace {
                    best = Some((score, ordered));
                }
            }
        }
    }
    let (_, mut vps) = best.ok_or(Error::InsufficientStructure)?;

    // refinement: least-squares refit per axis, then snap to the calibrated
    // orthogonal frame
    for _ in 0..3 {
        let inliers = assign_inliers(&vps, &sorted);
        for axis in 0..3 {
            if inliers[axis].len() >= 2 {
                if let Some(vp) = refit_vp(&inliers[axis], &sorted) {
                    vps[axis] = vp;
                }
            }
        }
        if let Some((focal, pp)) = triple_geometry(&vps, image_size) {
            if let Some(f) = focal {
                if let Ok(cam) = calibrate_from_vps(vps, f, pp, image_size) {
                    for (axis, col) in [0usize, 1, 2].into_iter().enumerate() {
                        vps[axis] = Vp::from_homogeneous(
                            cam.project_direction(cam.rotation.col(col)),
                        );
                    }
                }
            }
        }
    }

    // map refined axes back to the caller's segment indices
    let order_map: Vec<usize> = {
        // position of each sorted segment in the original slice; duplicates
        // are matched greedily in order
        let mut used = vec![false; segments.len()];
        sorted
            .iter()
            .map(|s| {
                let idx = segments
                    .iter()
                    .enumerate()
                    .position(|(i, o)| !used[i] && o == s)
                    .expect("sorted segment must exist in input");
                used[idx] = true;
                idx
            })
            .collect()
    };
    let inliers_sorted = assign_inliers(&vps, &sorted);
    let mut inliers: [Vec<usize>; 3] = Default::default();
    for axis in 0..3 {
        let mut v: Vec<usize> = inliers_sorted[axis].iter().map(|&i| order_map[i]).collect();
        v.sort_unstable();
        inliers[axis] = v;
    }

    Ok(VanishingTriple {
        vp_x: vps[0],
        vp_y: vps[1],
        vp_z: vps[2],
        inliers,
    })
}

/// Weighted homogeneous least-squares vanishing point from inlier segment
/// lines (smallest eigenvector of the line scatter matrix).
fn refit_vp(inlier_idx: &[usize], segments: &[LineSegment]) -> Option<Vp> {
    let mut m = [[0.0f64; 3]; 3];
    for &i in inlier_idx {
        let l = segments[i].line();
        let n = (l[0] * l[0] + l[1] * l[1]).sqrt();
        if n < 1e-12 {
            continue;
        }
        let l = [l[0] / n, l[1] / n, l[2] / n];
        let w = segments[i].strength;
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += w * l[r] * l[c];
            }
        }
    }
    let v = smallest_eigenvector_sym3(m)?;
    Some(Vp::from_homogeneous(v))
}

/// Smallest-eigenvalue eigenvector of a symmetric 3x3 matrix via cyclic
/// Jacobi rotations.
fn smallest_eigenvector_sym3(mut a: [[f64; 3]; 3]) -> Option<HomLine> {
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    if scale <= 0.0 {
        return None;
    }
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..50 {
        // largest off-diagonal element
        let (mut p, mut q, mut off) = (0usize, 1usize, 0.0f64);
        for i in 0..3 {
            for j in i + 1..3 {
                if a[i][j].abs() > off {
                    off = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if off < 1e-14 * scale {
            break;
        }
        let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        for k in 0..3 {
            let akp = a[k][p];
            let akq = a[k][q];
            a[k][p] = c * akp - s * akq;
            a[k][q] = s * akp + c * akq;
        }
        for k in 0..3 {
            let apk = a[p][k];
            let aqk = a[q][k];
            a[p][k] = c * apk - s * aqk;
            a[q][k] = s * apk + c * aqk;
        }
        for k in 0..3 {
            let vkp = v[k][p];
            let vkq = v[k][q];
            v[k][p] = c * vkp - s * vkq;
            v[k][q] = s * vkp + c * vkq;
        }
    }
    let mut imin = 0;
    for i in 1..3 {
        if a[i][i] < a[imin][imin] {
            imin = i;
        }
    }
    Some([v[0][imin], v[1][imin], v[2][imin]])
}

/// Recover focal length, principal point and rotation from a vanishing
/// triple. The returned camera has a placeholder height of 1.0 which the
/// caller replaces with the configured value.
pub fn calibrate(triple: &VanishingTriple, image_size: (u32, u32)) -> Result<Camera> {
    let vps = triple.vps();
    let finite: Vec<Vec2> = vps
        .iter()
        .filter_map(|v| match v {
            Vp::Finite(p) => Some(*p),
            _ => None,
        })
        .collect();
    if finite.len() < 2 {
        return Err(Error::DegenerateCalibration);
    }
    let pp = if finite.len() == 3 {
        orthocenter(finite[0], finite[1], finite[2]).ok_or(Error::DegenerateCalibration)?
    } else {
        Vec2::new(image_size.0 as f64 * 0.5, image_size.1 as f64 * 0.5)
    };
    let f2 = -(finite[0] - pp).dot(finite[1] - pp);
    if f2 <= 0.0 {
        return Err(Error::DegenerateCalibration);
    }
    calibrate_from_vps(vps, f2.sqrt(), pp, image_size)
}
