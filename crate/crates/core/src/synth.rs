//! Synthetic fixture generation: Manhattan cameras, wireframe segment sets,
//! and fully furnished scenes with exact detections and label maps. Used by
//! the test suites and handy for experimenting without real data.

use rand::Rng;

use crate::cadlib::CadLibrary;
use crate::detections::{Category, Detection};
use crate::error::Result;
use crate::geom::{Camera, Mat3, Vec2, Vec3};
use crate::img::GrayImage;
use crate::layout::{LabelMap, RoomBox};
use crate::placement::SceneObject;
use crate::render::{rasterize, Raster};
use crate::scene::{PlacedObject, Scene};
use crate::vanishing::LineSegment;

/// World-to-camera rotation from yaw, pitch and roll.
///
/// Yaw 0 looks along +y; positive pitch tilts the view down; positive roll
/// turns the image counter-clockwise on screen.
pub fn camera_rotation(yaw: f64, pitch: f64, roll: f64) -> Mat3 {
    let (sy, cy) = yaw.sin_cos();
    // level camera: x right, y down (=-z world), z forward
    let base = Mat3::from_rows(
        Vec3::new(cy, -sy, 0.0),
        Vec3::new(0.0, 0.0, -1.0),
        Vec3::new(sy, cy, 0.0),
    );
    let (sp, cp) = pitch.sin_cos();
    let rx = Mat3::from_rows(
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, cp, -sp),
        Vec3::new(0.0, sp, cp),
    );
    let (sr, cr) = roll.sin_cos();
    let rz = Mat3::from_rows(
        Vec3::new(cr, -sr, 0.0),
        Vec3::new(sr, cr, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    );
    rz.mul_mat(&rx).mul_mat(&base)
}

/// A Manhattan camera with the principal point at the image center.
pub fn manhattan_camera(
    focal: f64,
    image_size: (u32, u32),
    yaw: f64,
    pitch: f64,
    roll: f64,
    height: f64,
) -> Camera {
    Camera::new(
        focal,
        Vec2::new(image_size.0 as f64 * 0.5, image_size.1 as f64 * 0.5),
        camera_rotation(yaw, pitch, roll),
        height,
        image_size,
    )
}

/// Random room-photography camera: moderate downward pitch, small roll, yaw
/// kept away from axis-aligned degeneracies.
pub fn random_manhattan_camera(rng: &mut impl Rng) -> Camera {
    let yaw_mag = rng.gen_range(0.17..1.40); // 10..80 degrees
    let yaw = if rng.gen_bool(0.5) { yaw_mag } else { -yaw_mag };
    let pitch = rng.gen_range(0.10..0.38); // 6..22 degrees down
    let roll_mag = rng.gen_range(0.035..0.14); // 2..8 degrees
    let roll = if rng.gen_bool(0.5) { roll_mag } else { -roll_mag };
    manhattan_camera(
        rng.gen_range(350.0..900.0),
        (640, 480),
        yaw,
        pitch,
        roll,
        rng.gen_range(1.2..2.0),
    )
}

fn clip_to_image(a: Vec2, b: Vec2, w: f64, h: f64) -> Option<(Vec2, Vec2)> {
    // Liang-Barsky
    let d = b - a;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-d.x, a.x),
        (d.x, w - a.x),
        (-d.y, a.y),
        (d.y, h - a.y),
    ] {
        if p.abs() < 1e-12 {
            if q < 0.0 {
                return None;
            }
            continue;
        }
        let r = q / p;
        if p < 0.0 {
            t0 = t0.max(r);
        } else {
            t1 = t1.min(r);
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((a + d * t0, a + d * t1))
}

fn project_world_segment(cam: &Camera, a: Vec3, b: Vec3) -> Option<LineSegment> {
    let pa = cam.project(a).ok()?;
    let pb = cam.project(b).ok()?;
    let (ca, cb) = clip_to_image(pa, pb, cam.image_size.0 as f64, cam.image_size.1 as f64)?;
    let len = (ca - cb).norm();
    if len < 15.0 {
        return None;
    }
    Some(LineSegment::new(ca, cb, len))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1).max(1) as f64)
        .collect()
}

/// Axis-aligned grid lines of a generic room-sized region, projected and
/// clipped; the synthetic stand-in for extracted segments.
pub fn manhattan_segments(cam: &Camera) -> Vec<LineSegment> {
    let room = RoomBox::from_min_size(Vec3::new(-3.5, 0.0, 0.0), Vec3::new(7.0, 7.0, 2.8));
    room_wireframe_segments(cam, &room)
}

/// Grid lines on all faces of a specific room box.
pub fn room_wireframe_segments(cam: &Camera, room: &RoomBox) -> Vec<LineSegment> {
    let lo = room.min();
    let hi = room.max();
    let h = room.height;
    let mut segs = Vec::new();
    let xs = linspace(lo.x, hi.x, 4);
    let ys = linspace(lo.y.max(0.4), hi.y, 4);
    let zs = linspace(0.0, h, 4);
    // lines along x on floor, ceiling and the y walls
    for &y in &ys {
        for &z in [0.0, h].iter() {
            if let Some(s) = project_world_segment(cam, Vec3::new(lo.x, y, z), Vec3::new(hi.x, y, z)) {
                segs.push(s);
            }
        }
    }
    for &z in &zs {
        for &y in [ys[0], hi.y].iter() {
            if let Some(s) = project_world_segment(cam, Vec3::new(lo.x, y, z), Vec3::new(hi.x, y, z)) {
                segs.push(s);
            }
        }
    }
    // lines along y on floor/ceiling and the x walls
    for &x in &xs {
        for &z in [0.0, h].iter() {
            if let Some(s) = project_world_segment(cam, Vec3::new(x, ys[0], z), Vec3::new(x, hi.y, z)) {
                segs.push(s);
            }
        }
        for &z in &zs {
            if let Some(s) = project_world_segment(cam, Vec3::new(x, ys[0], z), Vec3::new(x, hi.y, z)) {
                segs.push(s);
            }
        }
    }
    // vertical lines on the walls
    for &x in &xs {
        for &y in [ys[0], hi.y].iter() {
            if let Some(s) = project_world_segment(cam, Vec3::new(x, y, 0.0), Vec3::new(x, y, h)) {
                segs.push(s);
            }
        }
    }
    for &y in &ys {
        for &x in [lo.x, hi.x].iter() {
            if let Some(s) = project_world_segment(cam, Vec3::new(x, y, 0.0), Vec3::new(x, y, h)) {
                segs.push(s);
            }
        }
    }
    segs
}

/// Geodesic rotation distance in degrees.
pub fn rotation_geodesic_deg(a: &Mat3, b: &Mat3) -> f64 {
    let r = a.mul_mat(&b.transpose());
    let trace = r.m[0][0] + r.m[1][1] + r.m[2][2];
    (((trace - 1.0) * 0.5).clamp(-1.0, 1.0)).acos().to_degrees()
}

/// Compare a recovered calibration against the generating camera up to the
/// Manhattan relabeling ambiguity (rotations by multiples of 90 degrees
/// about the vertical axis).
pub fn calibration_close(truth: &Camera, est: &Camera, f_tol: f64, rot_tol_deg: f64) -> bool {
    if (est.focal - truth.focal).abs() > f_tol * truth.focal {
        return false;
    }
    let mut best = f64::INFINITY;
    for k in 0..4 {
        let m = Mat3::rotation_z(-(k as f64) * std::f64::consts::FRAC_PI_2);
        let candidate = est.rotation.mul_mat(&m);
        best = best.min(rotation_geodesic_deg(&candidate, &truth.rotation));
    }
    best <= rot_tol_deg
}

/// A furnished synthetic scene: room, two objects, calibrated camera.
pub fn furnished_scene(library: &CadLibrary) -> Scene {
    let camera = manhattan_camera(420.0, (320, 240), 0.32, 0.16, 0.04, 1.6);
    let room = RoomBox::from_min_size(Vec3::new(-2.6, 0.0, 0.0), Vec3::new(5.4, 4.6, 2.6));
    let mut scene = Scene::empty_room(camera, room);
    scene.face_colors = [
        [235, 235, 230], // ceiling
        [150, 110, 80],  // floor
        [205, 195, 185], // left
        [215, 205, 195], // middle
        [195, 185, 175], // right
    ];
    let _ = library;
    scene.objects.push(PlacedObject {
        object: SceneObject {
            model_id: "chest__three".into(),
            category: Category::Chest,
            position: Vec3::new(-0.9, 3.4, 0.0),
            scale: Vec3::new(1.0, 0.55, 1.0),
            yaw: 0.0,
        },
        color: [110, 70, 45],
    });
    scene.objects.push(PlacedObject {
        object: SceneObject {
            model_id: "chair__basic".into(),
            category: Category::Chair,
            position: Vec3::new(0.9, 2.6, 0.0),
            scale: Vec3::new(0.62, 0.64, 0.95),
            yaw: 22.5f64.to_radians() * 14.0,
        },
        color: [60, 60, 140],
    });
    scene
}

/// Render a scene and derive the exact-fixture pipeline inputs: photo,
/// detections (projected bounding boxes, score 0.9) and a one-hot label map
/// of the room faces.
pub struct SyntheticFixture {
    pub scene: Scene,
    pub raster: Raster,
    pub detections: Vec<Detection>,
    pub label_map: LabelMap,
    pub truth_labels: Vec<u8>,
}

pub fn render_fixture(library: &CadLibrary, scene: &Scene) -> Result<SyntheticFixture> {
    let camera = scene.camera.clone();
    let raster = rasterize(scene, &camera, library)?;
    let (w, h) = camera.image_size;
    let mut detections = Vec::new();
    for po in &scene.objects {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in po.object.corners_world() {
            if let Ok(px) = camera.project(c) {
                lo = Vec2::new(lo.x.min(px.x), lo.y.min(px.y));
                hi = Vec2::new(hi.x.max(px.x), hi.y.max(px.y));
            }
        }
        if lo.x < hi.x && lo.y < hi.y {
            detections.push(Detection {
                category: po.object.category,
                bbox: [
                    lo.x.max(0.0),
                    lo.y.max(0.0),
                    hi.x.min(w as f64),
                    hi.y.min(h as f64),
                ],
                score: 0.9,
            });
        }
    }
    let truth_labels = crate::layout::room_label_raster(&scene.room, &camera, w, h);
    let label_map = LabelMap::one_hot(w, h, &truth_labels)?;
    Ok(SyntheticFixture {
        scene: scene.clone(),
        raster,
        detections,
        label_map,
        truth_labels,
    })
}

/// The rendered photo as a grayscale image.
pub fn raster_to_gray(raster: &Raster) -> GrayImage {
    raster.to_color_image().to_gray()
}
