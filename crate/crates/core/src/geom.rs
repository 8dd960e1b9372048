//! Shared geometric primitives: vectors, pinhole camera, rays, planes and
//! homogeneous 2D line operations.
//!
//! Conventions used throughout the crate:
//! * world frame is z-up with the floor plane at z = 0; the camera center sits
//!   at (0, 0, height),
//! * image coordinates have their origin at the top-left corner, x to the
//!   right and y down,
//! * `Camera::rotation` maps world directions into the camera frame
//!   (x right, y down, z forward).

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Homogeneous 2D line `a*x + b*y + c = 0` stored as `[a, b, c]`.
pub type HomLine = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise perpendicular (in y-down image coordinates this
    /// appears clockwise on screen).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        Vec3::new(self.x / n, self.y / n, self.z / n)
    }

    pub fn xy(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

macro_rules! impl_vec_ops {
    ($t:ty, $($f:ident),+) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t { Self { $($f: self.$f + o.$f),+ } }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t { Self { $($f: self.$f - o.$f),+ } }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, s: f64) -> $t { Self { $($f: self.$f * s),+ } }
        }
        impl Div<f64> for $t {
            type Output = $t;
            fn div(self, s: f64) -> $t { Self { $($f: self.$f / s),+ } }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t { Self { $($f: -self.$f),+ } }
        }
    };
}

impl_vec_ops!(Vec2, x, y);
impl_vec_ops!(Vec3, x, y, z);

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const fn identity() -> Mat3 {
        Mat3 {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Mat3 {
        Mat3 {
            m: [
                [r0.x, r0.y, r0.z],
                [r1.x, r1.y, r1.z],
                [r2.x, r2.y, r2.z],
            ],
        }
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Mat3 {
        Mat3::from_rows(c0, c1, c2).transpose()
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::new(self.m[i][0], self.m[i][1], self.m[i][2])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.m;
        Mat3 {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.row(i).dot(o.col(j));
            }
        }
        Mat3 { m: r }
    }

    pub fn det(&self) -> f64 {
        self.row(0).dot(self.row(1).cross(self.row(2)))
    }

    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        if d.abs() < 1e-300 {
            return None;
        }
        let c0 = self.col(0);
        let c1 = self.col(1);
        let c2 = self.col(2);
        // inverse rows are the reciprocal column cross products
        Some(Mat3::from_rows(
            c1.cross(c2) / d,
            c2.cross(c0) / d,
            c0.cross(c1) / d,
        ))
    }

    /// Rotation about the world z axis by `angle` radians (counter-clockwise
    /// looking down the +z axis).
    pub fn rotation_z(angle: f64) -> Mat3 {
        let (s, c) = angle.sin_cos();
        Mat3 {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Max absolute entry of `R^T R - I`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.transpose().mul_mat(self);
        let mut e: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                e = e.max((g.m[i][j] - target).abs());
            }
        }
        e
    }

    /// Nearest orthogonal matrix via the iterative polar decomposition
    /// `X <- (X + X^-T) / 2`. Preserves the determinant sign.
    pub fn nearest_rotation(&self) -> Mat3 {
        let mut x = *self;
        for _ in 0..30 {
            let Some(inv) = x.inverse() else { break };
            let it = inv.transpose();
            let mut next = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    next[i][j] = 0.5 * (x.m[i][j] + it.m[i][j]);
                }
            }
            x = Mat3 { m: next };
            if x.orthonormality_error() < 1e-15 {
                break;
            }
        }
        x
    }
}

/// Pinhole camera. The camera center is at world (0, 0, height).
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    /// Focal length in pixels.
    pub focal: f64,
    /// Principal point in pixels.
    pub principal_point: Vec2,
    /// World-to-camera rotation; orthonormal within 1e-9.
    pub rotation: Mat3,
    /// Camera height above the floor plane in meters.
    pub height: f64,
    /// Image (width, height) in pixels.
    pub image_size: (u32, u32),
}

impl Camera {
    pub fn new(
        focal: f64,
        principal_point: Vec2,
        rotation: Mat3,
        height: f64,
        image_size: (u32, u32),
    ) -> Camera {
        debug_assert!(focal > 0.0 && height > 0.0);
        debug_assert!(rotation.orthonormality_error() < 1e-9);
        Camera {
            focal,
            principal_point,
            rotation,
            height,
            image_size,
        }
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.height)
    }

    pub fn with_height(&self, height: f64) -> Camera {
        Camera {
            height,
            ..self.clone()
        }
    }

    /// Project a world point to pixel coordinates.
    ///
    /// Fails with `BehindCamera` when the point has non-positive depth.
    pub fn project(&self, point: Vec3) -> Result<Vec2> {
        let pc = self.rotation.mul_vec(point - self.center());
        if pc.z <= 1e-12 {
            return Err(Error::BehindCamera);
        }
        Ok(Vec2::new(
            self.focal * pc.x / pc.z + self.principal_point.x,
            self.focal * pc.y / pc.z + self.principal_point.y,
        ))
    }

    /// Ray from the camera center through a pixel, in world coordinates.
    pub fn cast_ray(&self, pixel: Vec2) -> Ray {
        let dc = Vec3::new(
            (pixel.x - self.principal_point.x) / self.focal,
            (pixel.y - self.principal_point.y) / self.focal,
            1.0,
        );
        let dw = self.rotation.transpose().mul_vec(dc);
        Ray::new(self.center(), dw)
    }

    /// Homogeneous image point of a world direction (the direction's
    /// vanishing point; w = 0 when the direction is parallel to the image
    /// plane).
    pub fn project_direction(&self, dir: Vec3) -> HomLine {
        let dc = self.rotation.mul_vec(dir);
        [
            self.focal * dc.x + self.principal_point.x * dc.z,
            self.focal * dc.y + self.principal_point.y * dc.z,
            dc.z,
        ]
    }

    /// Camera viewing direction (optical axis) in world coordinates.
    pub fn optical_axis(&self) -> Vec3 {
        self.rotation.row(2)
    }

    /// The horizon: image line of all vanishing points of horizontal world
    /// directions. A pixel p lies on it iff its ray direction has zero world
    /// z component.
    pub fn horizon_line(&self) -> HomLine {
        let cz = self.rotation.col(2);
        // (R^T d_c).z = cz . d_c with d_c = ((u-cx)/f, (v-cy)/f, 1)
        [
            cz.x / self.focal,
            cz.y / self.focal,
            cz.z - cz.x * self.principal_point.x / self.focal
                - cz.y * self.principal_point.y / self.focal,
        ]
    }

    /// Signed "below the horizon" value for a pixel: positive when the
    /// pixel's ray points downward (toward the floor).
    pub fn below_horizon(&self, pixel: Vec2) -> f64 {
        -self.cast_ray(pixel).direction.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit direction.
    pub direction: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, direction: Vec3) -> Ray {
        Ray {
            origin,
            direction: direction.normalized(),
        }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Plane `{ p : normal . p = offset }` with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    pub fn new(normal: Vec3, offset: f64) -> Plane {
        let n = normal.norm();
        Plane {
            normal: normal / n,
            offset: offset / n,
        }
    }

    /// The floor plane z = 0.
    pub fn ground() -> Plane {
        Plane {
            normal: Vec3::new(0.0, 0.0, 1.0),
            offset: 0.0,
        }
    }

    pub fn signed_distance(&self, p: Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Intersect a ray with a plane; the hit must lie strictly in front of the
/// ray origin.
pub fn intersect_ray_plane(ray: &Ray, plane: &Plane) -> Result<Vec3> {
    let denom = plane.normal.dot(ray.direction);
    if denom.abs() <= 1e-9 {
        return Err(Error::NoIntersection);
    }
    let t = (plane.offset - plane.normal.dot(ray.origin)) / denom;
    if t <= 0.0 {
        return Err(Error::BehindOrigin);
    }
    Ok(ray.at(t))
}

/// Result of intersecting two homogeneous 2D lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineIntersection {
    Point(Vec2),
    /// Parallel lines meet at infinity; the unit direction is canonicalized
    /// so its first non-zero component is positive.
    AtInfinity(Vec2),
}

fn normalize_line(l: HomLine) -> HomLine {
    let n = (l[0] * l[0] + l[1] * l[1]).sqrt();
    if n > 1e-300 {
        [l[0] / n, l[1] / n, l[2] / n]
    } else {
        let c = l[2].abs();
        if c > 1e-300 {
            [0.0, 0.0, l[2] / c]
        } else {
            l
        }
    }
}

pub fn cross_hom(a: HomLine, b: HomLine) -> HomLine {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Homogeneous line through two points.
pub fn line_through(a: Vec2, b: Vec2) -> HomLine {
    cross_hom([a.x, a.y, 1.0], [b.x, b.y, 1.0])
}

pub fn canonical_direction(d: Vec2) -> Vec2 {
    let d = d.normalized();
    if d.x < 0.0 || (d.x == 0.0 && d.y < 0.0) {
        -d
    } else {
        d
    }
}

/// Intersection of two homogeneous lines (their cross product).
/// Inputs are normalized to unit direction part, so the `|w| > 1e-9`
/// dehomogenization test is scale-invariant.
pub fn line_intersection_homogeneous(l1: HomLine, l2: HomLine) -> Result<LineIntersection> {
    let a = normalize_line(l1);
    let b = normalize_line(l2);
    let c = cross_hom(a, b);
    let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    if n < 1e-12 {
        return Err(Error::DegenerateLines);
    }
    if c[2].abs() > 1e-9 {
        Ok(LineIntersection::Point(Vec2::new(
            c[0] / c[2],
            c[1] / c[2],
        )))
    } else {
        Ok(LineIntersection::AtInfinity(canonical_direction(
            Vec2::new(c[0], c[1]),
        )))
    }
}

/// Signed value of a homogeneous line at a point (zero on the line).
pub fn line_eval(l: HomLine, p: Vec2) -> f64 {
    l[0] * p.x + l[1] * p.y + l[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn random_rotation(rng: &mut impl Rng) -> Mat3 {
        // random axis-angle, then orthonormalize for safety
        let axis = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
        .normalized();
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (s, c) = angle.sin_cos();
        let k = Mat3::from_rows(
            Vec3::new(0.0, -axis.z, axis.y),
            Vec3::new(axis.z, 0.0, -axis.x),
            Vec3::new(-axis.y, axis.x, 0.0),
        );
        let kk = k.mul_mat(&k);
        let mut m = Mat3::identity();
        for i in 0..3 {
            for j in 0..3 {
                m.m[i][j] += s * k.m[i][j] + (1.0 - c) * kk.m[i][j];
            }
        }
        m.nearest_rotation()
    }

    fn random_camera(rng: &mut impl Rng) -> Camera {
        Camera::new(
            rng.gen_range(300.0..900.0),
            Vec2::new(rng.gen_range(300.0..340.0), rng.gen_range(220.0..260.0)),
            random_rotation(rng),
            rng.gen_range(1.0..2.5),
            (640, 480),
        )
    }

    #[test]
    fn project_on_optical_axis() {
        // camera at origin height 1, identity rotation, f = 1, pp = (0, 0)
        let cam = Camera::new(1.0, Vec2::new(0.0, 0.0), Mat3::identity(), 1.0, (2, 2));
        // camera-frame point (0,0,1) corresponds to world point center + (0,0,1) rotated back; with
        // identity rotation camera z is world z... center (0,0,1), so world (0,0,2).
        let p = cam.project(Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert!(p.norm() < 1e-12);
    }

    #[test]
    fn project_textbook_pixel() {
        // f=500, pp=(320,240), camera-frame point (1,0,5): u = 500*1/5 + 320 = 420
        let cam = Camera::new(
            500.0,
            Vec2::new(320.0, 240.0),
            Mat3::identity(),
            1.0,
            (640, 480),
        );
        let world = Vec3::new(1.0, 0.0, 5.0) + cam.center();
        let p = cam.project(world).unwrap();
        assert!((p.x - 420.0).abs() < 1e-9);
        assert!((p.y - 240.0).abs() < 1e-9);
    }

    #[test]
    fn project_behind_camera_errors() {
        let cam = Camera::new(
            500.0,
            Vec2::new(320.0, 240.0),
            Mat3::identity(),
            1.0,
            (640, 480),
        );
        let world = Vec3::new(0.0, 0.0, -1.0) + cam.center();
        assert!(matches!(cam.project(world), Err(Error::BehindCamera)));
    }

    #[test]
    fn project_cast_ray_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let cam = random_camera(&mut rng);
            // point in front of the camera: center + R^T * (x, y, z>0)
            let pc = Vec3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.5..10.0),
            );
            let world = cam.rotation.transpose().mul_vec(pc) + cam.center();
            let px = cam.project(world).unwrap();
            let ray = cam.cast_ray(px);
            // scale the ray to the point's depth and reproject
            let depth = cam.rotation.mul_vec(world - cam.center()).z;
            let dir_depth = cam.rotation.mul_vec(ray.direction).z;
            let recon = ray.at(depth / dir_depth);
            let px2 = cam.project(recon).unwrap();
            assert!((px2 - px).norm() < 1e-6, "round trip {:?} vs {:?}", px, px2);
            assert!((recon - world).norm() < 1e-6);
        }
    }

    #[test]
    fn cast_ray_principal_point_is_optical_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let cam = random_camera(&mut rng);
            let ray = cam.cast_ray(cam.principal_point);
            assert!((ray.direction - cam.optical_axis().normalized()).norm() < 1e-12);
        }
    }

    #[test]
    fn cast_ray_distinct_pixels_not_parallel() {
        let cam = Camera::new(
            500.0,
            Vec2::new(320.0, 240.0),
            Mat3::identity(),
            1.5,
            (640, 480),
        );
        let r1 = cam.cast_ray(Vec2::new(100.0, 100.0));
        let r2 = cam.cast_ray(Vec2::new(101.0, 100.0));
        assert!(r1.direction.cross(r2.direction).norm() > 1e-9);
    }

    #[test]
    fn ray_plane_vertical_drop() {
        let ray = Ray::new(Vec3::new(0.0, 0.0, 1.5), Vec3::new(0.0, 0.0, -1.0));
        let hit = intersect_ray_plane(&ray, &Plane::ground()).unwrap();
        assert!((hit - Vec3::new(0.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ray_plane_45_degrees() {
        let d = 1.0 / 2.0f64.sqrt();
        let ray = Ray::new(Vec3::new(0.0, 0.0, 2.0), Vec3::new(d, 0.0, -d));
        let hit = intersect_ray_plane(&ray, &Plane::ground()).unwrap();
        assert!((hit - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn ray_plane_errors() {
        let ray = Ray::new(Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 0.0));
        assert!(matches!(
            intersect_ray_plane(&ray, &Plane::ground()),
            Err(Error::NoIntersection)
        ));
        let ray = Ray::new(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 1.0));
        assert!(matches!(
            intersect_ray_plane(&ray, &Plane::ground()),
            Err(Error::BehindOrigin)
        ));
    }

    #[test]
    fn ray_plane_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 1000 {
            let origin = Vec3::new(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            );
            let dir = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if dir.norm() < 1e-3 {
                continue;
            }
            let normal = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if normal.norm() < 1e-3 {
                continue;
            }
            let offset = rng.gen_range(-3.0..3.0);
            let ray = Ray::new(origin, dir);
            let plane = Plane::new(normal, offset);
            let denom = plane.normal.dot(ray.direction);
            if denom.abs() <= 1e-6 {
                continue;
            }
            let t = (plane.offset - plane.normal.dot(ray.origin)) / denom;
            if t <= 1e-6 {
                continue;
            }
            let hit = intersect_ray_plane(&ray, &plane).unwrap();
            assert!(plane.signed_distance(hit).abs() < 1e-9);
            assert!((hit - ray.at(t)).norm() < 1e-9);
            // rescaling (normal, offset) by a positive factor leaves the result unchanged
            let plane2 = Plane::new(normal * 3.25, offset * 3.25);
            let hit2 = intersect_ray_plane(&ray, &plane2).unwrap();
            assert!((hit - hit2).norm() < 1e-9);
            checked += 1;
        }
    }

    #[test]
    fn axes_intersection_is_origin() {
        // x-axis: y = 0 -> (0, 1, 0); y-axis: x = 0 -> (1, 0, 0)
        let r = line_intersection_homogeneous([0.0, 1.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(r, LineIntersection::Point(Vec2::new(0.0, 0.0)));
    }

    #[test]
    fn parallel_horizontals_meet_at_infinity() {
        // y = 0 and y = 1
        let r = line_intersection_homogeneous([0.0, 1.0, 0.0], [0.0, 1.0, -1.0]).unwrap();
        match r {
            LineIntersection::AtInfinity(d) => {
                assert!((d - Vec2::new(1.0, 0.0)).norm() < 1e-12);
            }
            _ => panic!("expected point at infinity"),
        }
    }

    #[test]
    fn identical_lines_degenerate() {
        assert!(matches!(
            line_intersection_homogeneous([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]),
            Err(Error::DegenerateLines)
        ));
    }

    #[test]
    fn intersection_matches_linear_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut checked = 0;
        while checked < 500 {
            let l1 = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-5.0..5.0),
            ];
            let l2 = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-5.0..5.0),
            ];
            let det: f64 = l1[0] * l2[1] - l1[1] * l2[0];
            let n1 = (l1[0] * l1[0] + l1[1] * l1[1]).sqrt();
            let n2 = (l2[0] * l2[0] + l2[1] * l2[1]).sqrt();
            if n1 < 0.1 || n2 < 0.1 || det.abs() < 1e-3 * n1 * n2 {
                continue;
            }
            // 2x2 solve of a1 x + b1 y = -c1; a2 x + b2 y = -c2
            let x = (-l1[2] * l2[1] + l2[2] * l1[1]) / det;
            let y = (-l1[0] * l2[2] + l2[0] * l1[2]) / det;
            match line_intersection_homogeneous(l1, l2).unwrap() {
                LineIntersection::Point(p) => {
                    assert!((p - Vec2::new(x, y)).norm() < 1e-8, "{:?} vs ({x},{y})", p);
                }
                _ => panic!("expected finite intersection"),
            }
            checked += 1;
        }
    }

    #[test]
    fn nearest_rotation_recovers_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let mut noisy = r;
            for i in 0..3 {
                for j in 0..3 {
                    noisy.m[i][j] += rng.gen_range(-1e-3..1e-3);
                }
            }
            let fixed = noisy.nearest_rotation();
            assert!(fixed.orthonormality_error() < 1e-12);
            assert!((fixed.det() - 1.0).abs() < 1e-9);
        }
    }
}
