//! Initial metric 3D placement of aligned detections: ground-plane
//! intersection of the cube's bottom corners for position and footprint,
//! the horizon-ratio construction for vertical scale, and largest-rectangle
//! window placement on walls.

use crate::cadlib::ViewEntry;
use crate::detections::{BBox, Category, Detection};
use crate::error::{Error, Result};
use crate::geom::{
    cross_hom, intersect_ray_plane, line_eval, line_through, Camera, Plane, Vec2, Vec3,
};
use crate::layout::{room_face_at, wall_roles, Face, RoomBox};

/// One placed CAD instance. The model's unit cube is anchored at the bottom
/// center: a local point q maps to
/// `position + R_z(yaw) * (diag(scale) * (q - (0.5, 0.5, 0)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub model_id: String,
    pub category: Category,
    /// Ground position (x, y) and base height z (normally 0), meters.
    pub position: Vec3,
    /// Per-axis extents of the unit cube, meters.
    pub scale: Vec3,
    /// Rotation about the world z axis, radians in [0, 2*pi).
    pub yaw: f64,
}

impl SceneObject {
    /// Local-to-world transform of a normalized model point.
    pub fn to_world(&self, q: Vec3) -> Vec3 {
        let centered = Vec3::new(
            (q.x - 0.5) * self.scale.x,
            (q.y - 0.5) * self.scale.y,
            q.z * self.scale.z,
        );
        let (s, c) = self.yaw.sin_cos();
        self.position
            + Vec3::new(
                c * centered.x - s * centered.y,
                s * centered.x + c * centered.y,
                centered.z,
            )
    }

    /// World positions of the unit-cube corners (bottom four, then top four).
    pub fn corners_world(&self) -> [Vec3; 8] {
        let mut out = [Vec3::default(); 8];
        for (i, c) in crate::cadlib::unit_cube_corners().into_iter().enumerate() {
            out[i] = self.to_world(c);
        }
        out
    }

    /// Ground-projected centroid of the object's 3D box.
    pub fn ground_centroid(&self) -> Vec2 {
        self.position.xy()
    }

    /// Oriented-box membership test.
    pub fn contains(&self, p: Vec3) -> bool {
        let d = p - self.position;
        let (s, c) = (-self.yaw).sin_cos();
        let local = Vec3::new(c * d.x - s * d.y, s * d.x + c * d.y, d.z);
        local.x.abs() <= self.scale.x * 0.5
            && local.y.abs() <= self.scale.y * 0.5
            && local.z >= 0.0
            && local.z <= self.scale.z
    }
}

/// Axis-aligned rectangle in wall-plane coordinates: `u` along the wall's
/// horizontal extent from its minimum corner, `v` up from the floor, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallRect {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub h: f64,
}

/// A window attached to a wall.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPlacement {
    pub wall: Face,
    pub rect: WallRect,
}

impl WindowPlacement {
    /// World-space corners of the window rectangle on its wall.
    pub fn corners_world(&self, room: &RoomBox, camera: &Camera) -> Result<[Vec3; 4]> {
        let roles = wall_roles(room, camera);
        let wall = (0..4)
            .find(|&w| roles.labels[w] == Some(self.wall))
            .ok_or(Error::WindowUnassigned)?;
        let (axis, value) = wall_axis_value_pub(room, wall);
        let lo = room.min();
        let base = |u: f64, v: f64| -> Vec3 {
            match axis {
                0 => Vec3::new(value, lo.y + u, v),
                _ => Vec3::new(lo.x + u, value, v),
            }
        };
        Ok([
            base(self.rect.u, self.rect.v),
            base(self.rect.u + self.rect.w, self.rect.v),
            base(self.rect.u + self.rect.w, self.rect.v + self.rect.h),
            base(self.rect.u, self.rect.v + self.rect.h),
        ])
    }
}

fn wall_axis_value_pub(room: &RoomBox, wall: usize) -> (usize, f64) {
    let lo = room.min();
    let hi = room.max();
    match wall {
        0 => (0, lo.x),
        1 => (0, hi.x),
        2 => (1, lo.y),
        _ => (1, hi.y),
    }
}

/// Map the view's unit-cube corner pixels into the detection box by the
/// similarity transform (uniform geometric-mean scale + center alignment)
/// from the silhouette box onto the detection box.
pub fn register_view_to_bbox(view: &ViewEntry, bbox: &BBox) -> [Vec2; 8] {
    let sw = view.sil_width.max(1) as f64;
    let sh = view.sil_height.max(1) as f64;
    let s = ((bbox.width() * bbox.height()) / (sw * sh)).sqrt();
    let sil_center = Vec2::new(sw * 0.5, sh * 0.5);
    let (bcx, bcy) = bbox.center();
    let bc = Vec2::new(bcx, bcy);
    let mut out = [Vec2::default(); 8];
    for (i, c) in view.cube_corners.iter().enumerate() {
        out[i] = bc + (*c - sil_center) * s;
    }
    out
}

/// World yaw that presents the model to the camera at the retrieved view's
/// azimuth, snapped to the 22.5-degree view grid.
pub fn yaw_from_azimuth(azimuth_deg: f64, object_ground: Vec2) -> f64 {
    let to_camera = -object_ground;
    let base = if to_camera.norm() < 1e-9 {
        0.0
    } else {
        to_camera.y.atan2(to_camera.x)
    };
    let yaw = base - azimuth_deg.to_radians();
    let step = 22.5f64.to_radians();
    ((yaw / step).round() * step).rem_euclid(std::f64::consts::TAU)
}

/// Vertical scale from one projected vertical edge: the ratio of the edge
/// length to the distance from its base to the horizon line along the same
/// image line, times the camera height (the horizon sits at camera height).
pub fn vertical_scale(bottom_px: Vec2, top_px: Vec2, camera: &Camera) -> Result<f64> {
    if (top_px - bottom_px).norm() < 1e-12 {
        return Ok(0.0);
    }
    if camera.below_horizon(bottom_px) <= 0.0 {
        return Err(Error::AboveHorizon);
    }
    let horizon = camera.horizon_line();
    let edge = line_through(bottom_px, top_px);
    let p = cross_hom(edge, horizon);
    if p[2].abs() < 1e-12 * p[0].hypot(p[1]).max(1.0) {
        return Err(Error::AboveHorizon);
    }
    let h_px = Vec2::new(p[0] / p[2], p[1] / p[2]);
    let denom = (h_px - bottom_px).norm();
    if denom < 1e-9 {
        return Err(Error::AboveHorizon);
    }
    Ok(camera.height * (top_px - bottom_px).norm() / denom)
}

/// Place an object from the eight projected unit-cube corner pixels
/// (canonical corner order) at a given yaw.
pub fn place_from_corners(
    corners_px: &[Vec2; 8],
    yaw: f64,
    camera: &Camera,
    room: &RoomBox,
    model_id: &str,
    category: Category,
) -> Result<SceneObject> {
    let ground = Plane::ground();
    let mut ground_pts = [Vec2::default(); 4];
    for i in 0..4 {
        let ray = camera.cast_ray(corners_px[i]);
        let hit = intersect_ray_plane(&ray, &ground).map_err(|_| Error::Unplaceable)?;
        ground_pts[i] = hit.xy();
    }
    let centroid = (ground_pts[0] + ground_pts[1] + ground_pts[2] + ground_pts[3]) * 0.25;
    // footprint: bounding rectangle of the ground points in the yaw frame
    let (s, c) = (-yaw).sin_cos();
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in ground_pts {
        let d = p - centroid;
        let r = Vec2::new(c * d.x - s * d.y, s * d.x + c * d.y);
        lo = Vec2::new(lo.x.min(r.x), lo.y.min(r.y));
        hi = Vec2::new(hi.x.max(r.x), hi.y.max(r.y));
    }
    let sx = (hi.x - lo.x).max(1e-3);
    let sy = (hi.y - lo.y).max(1e-3);
    // vertical scale averaged over the four vertical edges
    let mut sz_sum = 0.0;
    for i in 0..4 {
        sz_sum += vertical_scale(corners_px[i], corners_px[i + 4], camera)?;
    }
    let sz = (sz_sum / 4.0).max(1e-3);
    // clamp into the room with the standard margin so refinement starts
    // feasible
    let margin = 0.5;
    let rlo = room.min();
    let rhi = room.max();
    let pos = Vec3::new(
        centroid.x.clamp(rlo.x - margin, rhi.x + margin),
        centroid.y.clamp(rlo.y - margin, rhi.y + margin),
        0.0,
    );
    Ok(SceneObject {
        model_id: model_id.into(),
        category,
        position: pos,
        scale: Vec3::new(
            sx.clamp(0.05, 5.0),
            sy.clamp(0.05, 5.0),
            sz.clamp(0.05, 5.0),
        ),
        yaw,
    })
}

/// Full initial placement of a detection: register the retrieved view's cube
/// corners into the detection box, cast the bottom corners onto the floor,
/// and derive scale and yaw.
pub fn place_object(
    det: &Detection,
    view: &ViewEntry,
    camera: &Camera,
    room: &RoomBox,
) -> Result<SceneObject> {
    let corners = register_view_to_bbox(view, &det.bbox());
    // provisional ground centroid for the yaw
    let ground = Plane::ground();
    let mut centroid = Vec2::default();
    for px in corners.iter().take(4) {
        let hit = intersect_ray_plane(&camera.cast_ray(*px), &ground)
            .map_err(|_| Error::Unplaceable)?;
        centroid = centroid + hit.xy() * 0.25;
    }
    let yaw = yaw_from_azimuth(view.azimuth_deg, centroid);
    place_from_corners(&corners, yaw, camera, room, &view.model_id, det.category)
}

/// Assign a window detection to the wall with the largest pixel overlap and
/// place the largest axis-aligned rectangle inside the back-projected box.
pub fn place_window(det: &Detection, camera: &Camera, room: &RoomBox) -> Result<WindowPlacement> {
    let roles = wall_roles(room, camera);
    let bbox = det.bbox();
    let (iw, ih) = camera.image_size;
    let x0 = bbox.x_min.max(0.0) as u32;
    let x1 = (bbox.x_max.min(iw as f64) as u32).min(iw);
    let y0 = bbox.y_min.max(0.0) as u32;
    let y1 = (bbox.y_max.min(ih as f64) as u32).min(ih);
    let mut counts = [0usize; 3]; // left, middle, right
    for y in y0..y1 {
        for x in x0..x1 {
            let face = room_face_at(
                room,
                camera,
                &roles,
                Vec2::new(x as f64 + 0.5, y as f64 + 0.5),
            );
            match face {
                Face::LeftWall => counts[0] += 1,
                Face::MiddleWall => counts[1] += 1,
                Face::RightWall => counts[2] += 1,
                _ => {}
            }
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::WindowUnassigned);
    }
    let best = (0..3).max_by_key(|&i| counts[i]).unwrap();
    let wall_face = [Face::LeftWall, Face::MiddleWall, Face::RightWall][best];
    let wall = (0..4)
        .find(|&w| roles.labels[w] == Some(wall_face))
        .ok_or(Error::WindowUnassigned)?;
    let (axis, value) = wall_axis_value_pub(room, wall);
    // back-project the detection box corners onto the wall plane
    let plane = if axis == 0 {
        Plane::new(Vec3::new(1.0, 0.0, 0.0), value)
    } else {
        Plane::new(Vec3::new(0.0, 1.0, 0.0), value)
    };
    let lo = room.min();
    let hi = room.max();
    let mut quad = [(0.0f64, 0.0f64); 4];
    for (i, (px, py)) in [
        (bbox.x_min, bbox.y_max),
        (bbox.x_max, bbox.y_max),
        (bbox.x_max, bbox.y_min),
        (bbox.x_min, bbox.y_min),
    ]
    .into_iter()
    .enumerate()
    {
        let hit = intersect_ray_plane(&camera.cast_ray(Vec2::new(px, py)), &plane)
            .map_err(|_| Error::WindowUnassigned)?;
        let u = if axis == 0 { hit.y - lo.y } else { hit.x - lo.x };
        quad[i] = (u, hit.z);
    }
    // clip to the wall extents
    let wall_len = if axis == 0 { hi.y - lo.y } else { hi.x - lo.x };
    let poly: Vec<(f64, f64)> = clip_poly_rect(&quad, 0.0, 0.0, wall_len, room.height);
    if poly.len() < 3 {
        return Err(Error::WindowUnassigned);
    }
    let rect = largest_axis_aligned_rect(&poly);
    if rect.w <= 0.0 || rect.h <= 0.0 {
        return Err(Error::WindowUnassigned);
    }
    Ok(WindowPlacement {
        wall: wall_face,
        rect,
    })
}

fn clip_poly_rect(
    quad: &[(f64, f64); 4],
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
) -> Vec<(f64, f64)> {
    let mut poly: Vec<(f64, f64)> = quad.to_vec();
    let edges: [[f64; 3]; 4] = [
        [1.0, 0.0, -x0],
        [-1.0, 0.0, x1],
        [0.0, 1.0, -y0],
        [0.0, -1.0, y1],
    ];
    for e in edges {
        let input = poly;
        poly = Vec::new();
        let n = input.len();
        for i in 0..n {
            let a = input[i];
            let b = input[(i + 1) % n];
            let va = line_eval(e, Vec2::new(a.0, a.1));
            let vb = line_eval(e, Vec2::new(b.0, b.1));
            if va >= 0.0 {
                poly.push(a);
            }
            if (va >= 0.0) != (vb >= 0.0) {
                let t = va / (va - vb);
                poly.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
            }
        }
        if poly.is_empty() {
            break;
        }
    }
    poly
}

/// Largest axis-aligned rectangle inscribed in a convex polygon, to about
/// 1e-4 precision. For a fixed x-interval the admissible y-interval is the
/// intersection of the polygon's vertical slabs at both ends, so the search
/// reduces to a 2D optimization over (x_left, x_right).
pub fn largest_axis_aligned_rect(poly: &[(f64, f64)]) -> WallRect {
    // exact shortcut for axis-aligned rectangles
    if poly.len() == 4 {
        let xs: Vec<f64> = poly.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = poly.iter().map(|p| p.1).collect();
        let x_lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let x_hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let y_lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let y_hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let is_axis_rect = poly
            .iter()
            .all(|&(x, y)| {
                ((x - x_lo).abs() < 1e-9 || (x - x_hi).abs() < 1e-9)
                    && ((y - y_lo).abs() < 1e-9 || (y - y_hi).abs() < 1e-9)
            });
        if is_axis_rect {
            return WallRect {
                u: x_lo,
                v: y_lo,
                w: x_hi - x_lo,
                h: y_hi - y_lo,
            };
        }
    }
    let x_lo = poly.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_hi = poly.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    // vertical slab (y-interval) of the convex polygon at abscissa x
    let slab = |x: f64| -> Option<(f64, f64)> {
        let n = poly.len();
        let mut ys = Vec::new();
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            if (a.0 - b.0).abs() < 1e-12 {
                if (a.0 - x).abs() < 1e-9 {
                    ys.push(a.1);
                    ys.push(b.1);
                }
                continue;
            }
            let t = (x - a.0) / (b.0 - a.0);
            if (-1e-9..=1.0 + 1e-9).contains(&t) {
                ys.push(a.1 + t * (b.1 - a.1));
            }
        }
        if ys.is_empty() {
            return None;
        }
        let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    };
    let height = |a: f64, b: f64| -> f64 {
        match (slab(a), slab(b)) {
            (Some((l1, h1)), Some((l2, h2))) => (h1.min(h2) - l1.max(l2)).max(0.0),
            _ => 0.0,
        }
    };
    // coarse grid then local refinement
    let n = 96;
    let step = (x_hi - x_lo) / n as f64;
    let mut best = (0.0f64, x_lo, x_hi);
    for i in 0..n {
        for j in i + 1..=n {
            let a = x_lo + i as f64 * step;
            let b = x_lo + j as f64 * step;
            let area = (b - a) * height(a, b);
            if area > best.0 {
                best = (area, a, b);
            }
        }
    }
    let (mut a, mut b) = (best.1, best.2);
    let mut delta = step;
    while delta > 1e-5 {
        let mut improved = false;
        for (da, db) in [
            (-delta, 0.0),
            (delta, 0.0),
            (0.0, -delta),
            (0.0, delta),
            (-delta, delta),
            (delta, -delta),
        ] {
            let na = (a + da).max(x_lo);
            let nb = (b + db).min(x_hi);
            if nb <= na {
                continue;
            }
            let area = (nb - na) * height(na, nb);
            if area > best.0 + 1e-12 {
                best = (area, na, nb);
                a = na;
                b = nb;
                improved = true;
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    let (l1, h1) = slab(a).unwrap_or((0.0, 0.0));
    let (l2, h2) = slab(b).unwrap_or((0.0, 0.0));
    let v = l1.max(l2);
    let top = h1.min(h2);
    WallRect {
        u: a,
        v,
        w: b - a,
        h: (top - v).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn setup() -> (Camera, RoomBox) {
        let cam = synth::manhattan_camera(520.0, (640, 480), 0.25, 0.14, 0.02, 1.6);
        let room = RoomBox::from_min_size(Vec3::new(-3.0, 0.0, 0.0), Vec3::new(6.0, 5.0, 2.7));
        (cam, room)
    }

    /// Project the corners of a placed object with the camera.
    fn project_corners(obj: &SceneObject, cam: &Camera) -> [Vec2; 8] {
        let mut out = [Vec2::default(); 8];
        for (i, c) in obj.corners_world().into_iter().enumerate() {
            out[i] = cam.project(c).unwrap();
        }
        out
    }

    #[test]
    fn placement_round_trip_from_exact_corners() {
        // level camera: the horizon-ratio vertical scale is exact
        let cam = synth::manhattan_camera(520.0, (640, 480), 0.25, 0.0, 0.0, 1.6);
        let room = RoomBox::from_min_size(Vec3::new(-3.0, 0.0, 0.0), Vec3::new(6.0, 5.0, 2.7));
        let truth = SceneObject {
            model_id: "chair__basic".into(),
            category: Category::Chair,
            position: Vec3::new(0.4, 2.8, 0.0),
            scale: Vec3::new(0.6, 0.7, 0.9),
            yaw: 3.0 * 22.5f64.to_radians(),
        };
        let corners = project_corners(&truth, &cam);
        let placed = place_from_corners(
            &corners,
            truth.yaw,
            &cam,
            &room,
            &truth.model_id,
            truth.category,
        )
        .unwrap();
        assert!((placed.position - truth.position).norm() < 1e-3);
        assert!((placed.scale.x - truth.scale.x).abs() < 1e-3);
        assert!((placed.scale.y - truth.scale.y).abs() < 1e-3);
        assert!((placed.scale.z - truth.scale.z).abs() < 1e-3);
    }

    #[test]
    fn centered_object_matches_closed_form_ray_drop() {
        // level camera looking along +y, object on the optical axis ground
        let cam = synth::manhattan_camera(500.0, (640, 480), 0.0, 0.0, 0.0, 1.6);
        let truth = SceneObject {
            model_id: "chair__basic".into(),
            category: Category::Chair,
            position: Vec3::new(0.0, 3.0, 0.0),
            scale: Vec3::new(0.5, 0.5, 0.5),
            yaw: 0.0,
        };
        let room = RoomBox::from_min_size(Vec3::new(-3.0, 0.0, 0.0), Vec3::new(6.0, 5.0, 2.7));
        let corners = project_corners(&truth, &cam);
        let placed =
            place_from_corners(&corners, 0.0, &cam, &room, "chair__basic", Category::Chair)
                .unwrap();
        // closed form: the bottom-front edge center pixel drops to y = h*f'/(v-cy)...
        // by symmetry x must be exactly 0
        assert!(placed.position.x.abs() < 1e-9);
        assert!((placed.position.y - 3.0).abs() < 1e-9);
    }

    #[test]
    fn bbox_shift_moves_object_monotonically() {
        let (cam, room) = setup();
        let view = make_view();
        let det = |x0: f64| Detection {
            category: Category::Chair,
            bbox: [x0, 260.0, x0 + 80.0, 360.0],
            score: 0.9,
        };
        let a = place_object(&det(250.0), &view, &cam, &room).unwrap();
        let b = place_object(&det(260.0), &view, &cam, &room).unwrap();
        // moving the box right moves the object along the back-projected
        // direction of the image x axis
        let px_a = cam.project(a.position).unwrap();
        let px_b = cam.project(b.position).unwrap();
        assert!(px_b.x > px_a.x);
    }

    fn make_view() -> ViewEntry {
        let lib = crate::cadlib::CadLibrary::builtin();
        let model = &lib.models[0];
        crate::cadlib::build_view_grid(model, &crate::cadlib::ViewGridConfig::default())
            .into_iter()
            .next()
            .unwrap()
    }

    #[test]
    fn vertical_scale_edge_cases() {
        let (cam, _room) = setup();
        // edge reaching the horizon has exactly camera height
        let bottom = Vec2::new(320.0, 380.0);
        let horizon = cam.horizon_line();
        // intersection of the vertical image line x=320 with the horizon
        let h_y = -(horizon[0] * 320.0 + horizon[2]) / horizon[1];
        let h_px = Vec2::new(320.0, h_y);
        let sz = vertical_scale(bottom, h_px, &cam).unwrap();
        assert!((sz - cam.height).abs() < 1e-9);
        // degenerate zero-length edge
        assert_eq!(vertical_scale(bottom, bottom, &cam).unwrap(), 0.0);
        // bottom above the horizon is rejected
        let above = Vec2::new(320.0, h_y - 10.0);
        assert!(matches!(
            vertical_scale(above, above + Vec2::new(0.0, -5.0), &cam),
            Err(Error::AboveHorizon)
        ));
    }

    #[test]
    fn vertical_scale_recovers_known_height() {
        // level camera: the horizon-ratio construction is exact
        let cam = synth::manhattan_camera(500.0, (640, 480), 0.2, 0.0, 0.0, 1.5);
        let base = Vec3::new(0.4, 3.0, 0.0);
        let top = Vec3::new(0.4, 3.0, 0.8);
        let sz = vertical_scale(
            cam.project(base).unwrap(),
            cam.project(top).unwrap(),
            &cam,
        )
        .unwrap();
        assert!((sz - 0.8).abs() < 1e-3, "sz = {sz}");
    }

    #[test]
    fn vertical_scale_linear_in_camera_height() {
        let (cam, _) = setup();
        let b = Vec2::new(300.0, 400.0);
        let t = Vec2::new(302.0, 330.0);
        let s1 = vertical_scale(b, t, &cam).unwrap();
        let s2 = vertical_scale(b, t, &cam.with_height(cam.height * 2.0)).unwrap();
        assert!((s2 - 2.0 * s1).abs() < 1e-12);
    }

    #[test]
    fn window_on_fronto_parallel_wall_is_exact() {
        // camera looking straight at the far wall
        let cam = synth::manhattan_camera(500.0, (640, 480), 0.0, 0.0, 0.0, 1.5);
        let room = RoomBox::from_min_size(Vec3::new(-3.0, 0.0, 0.0), Vec3::new(6.0, 4.0, 2.5));
        // a rectangle on the far wall y = 4
        let wall_rect = [
            Vec3::new(-0.8, 4.0, 1.0),
            Vec3::new(0.9, 4.0, 1.0),
            Vec3::new(0.9, 4.0, 2.1),
            Vec3::new(-0.8, 4.0, 2.1),
        ];
        let px: Vec<Vec2> = wall_rect.iter().map(|p| cam.project(*p).unwrap()).collect();
        let det = Detection {
            category: Category::Window,
            bbox: [px[0].x, px[2].y, px[1].x, px[0].y],
            score: 0.9,
        };
        let win = place_window(&det, &cam, &room).unwrap();
        assert_eq!(win.wall, Face::MiddleWall);
        // wall u axis starts at room min x = -3
        assert!((win.rect.u - 2.2).abs() < 1e-6, "u = {}", win.rect.u);
        assert!((win.rect.v - 1.0).abs() < 1e-6);
        assert!((win.rect.w - 1.7).abs() < 1e-6);
        assert!((win.rect.h - 1.1).abs() < 1e-6);
    }

    #[test]
    fn window_assigned_to_majority_wall() {
        let cam = synth::manhattan_camera(500.0, (640, 480), 0.0, 0.0, 0.0, 1.5);
        let room = RoomBox::from_min_size(Vec3::new(-2.0, 0.0, 0.0), Vec3::new(4.0, 4.0, 2.5));
        // a box straddling the left wall / middle wall junction, mostly left
        let corner_px = cam.project(Vec3::new(-2.0, 4.0, 1.5)).unwrap();
        let det = Detection {
            category: Category::Window,
            bbox: [
                corner_px.x - 70.0,
                corner_px.y - 40.0,
                corner_px.x + 30.0,
                corner_px.y + 40.0,
            ],
            score: 0.9,
        };
        let win = place_window(&det, &cam, &room).unwrap();
        assert_eq!(win.wall, Face::LeftWall);
    }

    #[test]
    fn window_without_wall_overlap_errors() {
        let cam = synth::manhattan_camera(500.0, (640, 480), 0.0, 0.0, 0.0, 1.5);
        let room = RoomBox::from_min_size(Vec3::new(-3.0, 0.0, 0.0), Vec3::new(6.0, 4.0, 2.5));
        // a box entirely on the floor region (image bottom center)
        let det = Detection {
            category: Category::Window,
            bbox: [300.0, 460.0, 340.0, 478.0],
            score: 0.9,
        };
        assert!(matches!(
            place_window(&det, &cam, &room),
            Err(Error::WindowUnassigned)
        ));
    }

    #[test]
    fn largest_rect_matches_grid_oracle_on_trapezoid() {
        // trapezoid: wide base, narrower top
        let poly = vec![(0.0, 0.0), (2.0, 0.0), (1.6, 1.2), (0.5, 1.2)];
        let rect = largest_axis_aligned_rect(&poly);
        // dense grid oracle at 1 mm
        let inside = |x: f64, y: f64| -> bool {
            let n = poly.len();
            let mut ok = true;
            for i in 0..n {
                let a = poly[i];
                let b = poly[(i + 1) % n];
                let cross = (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0);
                if cross < -1e-9 {
                    ok = false;
                }
            }
            ok
        };
        let mut best = 0.0f64;
        let step = 0.02; // 2 cm grid for runtime; refined below
        let mut coarse = (0.0, 0.0, 0.0, 0.0);
        let nx = (2.0 / step) as usize;
        for i in 0..nx {
            for j in i + 1..=nx {
                let a = i as f64 * step;
                let b = j as f64 * step;
                // binary search max height at this x-pair
                let mut lo = 0.0;
                let mut hi = 1.2;
                for _ in 0..30 {
                    let mid = 0.5 * (lo + hi);
                    // bottom fixed at 0 for this polygon
                    if inside(a, mid) && inside(b, mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let area = (b - a) * lo;
                if area > best {
                    best = area;
                    coarse = (a, 0.0, b - a, lo);
                }
            }
        }
        let _ = coarse;
        let perimeter = 2.0 * (2.0 + 1.2);
        assert!(
            (rect.w * rect.h - best).abs() <= perimeter * 1e-3 + 2e-3,
            "impl area {} vs oracle {}",
            rect.w * rect.h,
            best
        );
        // containment: all four corners inside the polygon
        for (dx, dy) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)] {
            let x = rect.u + dx * rect.w;
            let y = rect.v + dy * rect.h;
            assert!(inside(x + 1e-9, y + 1e-9) || inside(x - 1e-9, y - 1e-9));
        }
    }

    #[test]
    fn yaw_snaps_to_grid() {
        let yaw = yaw_from_azimuth(45.0, Vec2::new(1.0, 3.0));
        let step = 22.5f64.to_radians();
        let ratio = yaw / step;
        assert!((ratio - ratio.round()).abs() < 1e-9);
    }
}
