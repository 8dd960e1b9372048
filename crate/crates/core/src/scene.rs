//! The reconstructed scene and its human-readable file format.
//!
//! A scene file is a line-oriented text document (schema `roomcad-scene 1`)
//! holding the camera, the room box, placed objects and windows with their
//! colors. Every real number is written with 9 significant decimal digits;
//! parsing what was written reproduces the same bytes, and the pipeline
//! quantizes its final scene through one serialize/parse round trip so the
//! in-memory scene and the file agree exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::detections::Category;
use crate::error::{Error, Result};
use crate::geom::{Camera, Mat3, Vec2, Vec3};
use crate::layout::{Face, RoomBox, FACE_COUNT};
use crate::placement::{SceneObject, WallRect, WindowPlacement};

pub const SCENE_SCHEMA: &str = "roomcad-scene 1";

/// A placed object together with its medoid color.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedObject {
    pub object: SceneObject,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedWindow {
    pub window: WindowPlacement,
    pub color: [u8; 3],
}

/// Full reconstructed scene: camera, room, furniture and window placements,
/// and per-surface colors (indexed by [`Face`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub camera: Camera,
    pub room: RoomBox,
    pub objects: Vec<PlacedObject>,
    pub windows: Vec<PlacedWindow>,
    pub face_colors: [[u8; 3]; FACE_COUNT],
}

impl Scene {
    pub fn empty_room(camera: Camera, room: RoomBox) -> Scene {
        Scene {
            camera,
            room,
            objects: Vec::new(),
            windows: Vec::new(),
            face_colors: [[180, 180, 180]; FACE_COUNT],
        }
    }

    /// Serialize, then parse back: quantizes every real to the file
    /// precision so the in-memory scene equals its file representation.
    pub fn quantized(&self) -> Result<Scene> {
        parse(&serialize(self)?)
    }
}

/// 9 significant decimal digits, scientific notation.
fn fmt_real(x: f64) -> String {
    format!("{:.8e}", x)
}

fn write_reals(out: &mut String, xs: &[f64]) {
    for x in xs {
        let _ = write!(out, " {}", fmt_real(*x));
    }
}

pub fn serialize(scene: &Scene) -> Result<String> {
    let mut reals: Vec<f64> = vec![
        scene.camera.focal,
        scene.camera.principal_point.x,
        scene.camera.principal_point.y,
        scene.camera.height,
    ];
    reals.extend([
        scene.room.origin.x,
        scene.room.origin.y,
        scene.room.ex,
        scene.room.ey,
        scene.room.height,
    ]);
    for v in &reals {
        if !v.is_finite() {
            return Err(Error::Parse("scene contains non-finite values".into()));
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "{SCENE_SCHEMA}");
    let mut cam_line = String::from("camera");
    write_reals(
        &mut cam_line,
        &[
            scene.camera.focal,
            scene.camera.principal_point.x,
            scene.camera.principal_point.y,
            scene.camera.height,
        ],
    );
    let _ = writeln!(
        out,
        "{cam_line} {} {}",
        scene.camera.image_size.0, scene.camera.image_size.1
    );
    let mut rot_line = String::from("rotation");
    for i in 0..3 {
        for j in 0..3 {
            let _ = write!(rot_line, " {}", fmt_real(scene.camera.rotation.m[i][j]));
        }
    }
    let _ = writeln!(out, "{rot_line}");
    let mut room_line = String::from("room");
    write_reals(
        &mut room_line,
        &[
            scene.room.origin.x,
            scene.room.origin.y,
            scene.room.ex,
            scene.room.ey,
            scene.room.height,
        ],
    );
    let _ = writeln!(out, "{room_line}");
    let mut colors_line = String::from("surface-colors");
    for c in &scene.face_colors {
        let _ = write!(colors_line, " {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(out, "{colors_line}");
    let _ = writeln!(out, "objects {}", scene.objects.len());
    for po in &scene.objects {
        let o = &po.object;
        if o.model_id.contains(char::is_whitespace) || o.model_id.is_empty() {
            return Err(Error::Parse(format!(
                "model id `{}` must be a non-empty single token",
                o.model_id
            )));
        }
        let mut line = format!("object {} {}", o.model_id, o.category.key());
        write_reals(
            &mut line,
            &[
                o.position.x, o.position.y, o.position.z, o.scale.x, o.scale.y, o.scale.z, o.yaw,
            ],
        );
        let _ = writeln!(out, "{line} {} {} {}", po.color[0], po.color[1], po.color[2]);
    }
    let _ = writeln!(out, "windows {}", scene.windows.len());
    for pw in &scene.windows {
        let w = &pw.window;
        let mut line = format!("window {}", w.wall.key());
        write_reals(&mut line, &[w.rect.u, w.rect.v, w.rect.w, w.rect.h]);
        let _ = writeln!(out, "{line} {} {} {}", pw.color[0], pw.color[1], pw.color[2]);
    }
    Ok(out)
}

struct Tokens<'a> {
    words: std::str::SplitWhitespace<'a>,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.words
            .next()
            .ok_or_else(|| Error::Parse(format!("scene line {}: missing token", self.line)))
    }
    fn real(&mut self) -> Result<f64> {
        let w = self.next()?;
        w.parse()
            .map_err(|e| Error::Parse(format!("scene line {}: bad real `{w}`: {e}", self.line)))
    }
    fn int(&mut self) -> Result<u32> {
        let w = self.next()?;
        w.parse()
            .map_err(|e| Error::Parse(format!("scene line {}: bad integer `{w}`: {e}", self.line)))
    }
    fn byte(&mut self) -> Result<u8> {
        let w = self.next()?;
        w.parse()
            .map_err(|e| Error::Parse(format!("scene line {}: bad byte `{w}`: {e}", self.line)))
    }
    fn done(&mut self) -> Result<()> {
        if self.words.next().is_some() {
            return Err(Error::Parse(format!(
                "scene line {}: trailing tokens",
                self.line
            )));
        }
        Ok(())
    }
}

fn tok<'a>(
    expected: &str,
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<Tokens<'a>> {
    let (i, line) = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("scene: missing `{expected}` line")))?;
    let mut t = Tokens {
        words: line.split_whitespace(),
        line: i + 1,
    };
    let head = t.next()?;
    if head != expected {
        return Err(Error::Parse(format!(
            "scene line {}: expected `{expected}`, found `{head}`",
            i + 1
        )));
    }
    Ok(t)
}

pub fn parse(text: &str) -> Result<Scene> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("scene: empty file".into()))?;
    if header.trim() != SCENE_SCHEMA {
        return Err(Error::Parse(format!(
            "scene: unsupported schema `{}`",
            header.trim()
        )));
    }

    let mut t = tok("camera", &mut lines)?;
    let focal = t.real()?;
    let ppx = t.real()?;
    let ppy = t.real()?;
    let height = t.real()?;
    let iw = t.int()?;
    let ih = t.int()?;
    t.done()?;

    let mut t = tok("rotation", &mut lines)?;
    let mut m = [[0.0; 3]; 3];
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            *v = t.real()?;
        }
    }
    t.done()?;
    let rotation = Mat3 { m };
    if rotation.orthonormality_error() > 1e-6 {
        return Err(Error::Parse("scene: rotation is not orthonormal".into()));
    }
    if !(focal > 0.0 && height > 0.0) {
        return Err(Error::Parse("scene: focal and height must be positive".into()));
    }
    let camera = Camera {
        focal,
        principal_point: Vec2::new(ppx, ppy),
        rotation,
        height,
        image_size: (iw, ih),
    };

    let mut t = tok("room", &mut lines)?;
    let room = RoomBox {
        origin: Vec3::new(t.real()?, t.real()?, 0.0),
        ex: t.real()?,
        ey: t.real()?,
        height: t.real()?,
    };
    t.done()?;
    if room.ex == 0.0 || room.ey == 0.0 || room.height <= 0.0 {
        return Err(Error::Parse("scene: room extents must be non-zero".into()));
    }

    let mut t = tok("surface-colors", &mut lines)?;
    let mut face_colors = [[0u8; 3]; FACE_COUNT];
    for c in face_colors.iter_mut() {
        for v in c.iter_mut() {
            *v = t.byte()?;
        }
    }
    t.done()?;

    let mut t = tok("objects", &mut lines)?;
    let n_objects = t.int()?;
    t.done()?;
    let mut objects = Vec::with_capacity(n_objects as usize);
    for _ in 0..n_objects {
        let mut t = tok("object", &mut lines)?;
        let model_id = t.next()?.to_string();
        let category = Category::from_key(t.next()?)?;
        let position = Vec3::new(t.real()?, t.real()?, t.real()?);
        let scale = Vec3::new(t.real()?, t.real()?, t.real()?);
        let yaw = t.real()?;
        let color = [t.byte()?, t.byte()?, t.byte()?];
        t.done()?;
        if !(scale.x > 0.0 && scale.y > 0.0 && scale.z > 0.0) {
            return Err(Error::Parse(format!(
                "scene: object `{model_id}` has non-positive scale"
            )));
        }
        objects.push(PlacedObject {
            object: SceneObject {
                model_id,
                category,
                position,
                scale,
                yaw,
            },
            color,
        });
    }

    let mut t = tok("windows", &mut lines)?;
    let n_windows = t.int()?;
    t.done()?;
    let mut windows = Vec::with_capacity(n_windows as usize);
    for _ in 0..n_windows {
        let mut t = tok("window", &mut lines)?;
        let wall = Face::from_key(t.next()?)?;
        if !matches!(wall, Face::LeftWall | Face::MiddleWall | Face::RightWall) {
            return Err(Error::Parse("scene: window wall must be a wall face".into()));
        }
        let rect = WallRect {
            u: t.real()?,
            v: t.real()?,
            w: t.real()?,
            h: t.real()?,
        };
        let color = [t.byte()?, t.byte()?, t.byte()?];
        t.done()?;
        windows.push(PlacedWindow {
            window: WindowPlacement { wall, rect },
            color,
        });
    }

    Ok(Scene {
        camera,
        room,
        objects,
        windows,
        face_colors,
    })
}

pub fn save(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, serialize(scene)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Scene> {
    parse(&std::fs::read_to_string(path)?)
}
