//! End-to-end pipeline orchestration: vanishing points, calibration, layout
//! selection, detection ingestion, retrieval, placement, coloring,
//! refinement and serialization, plus the render and evaluate entry points
//! used by the CLI.

use std::path::{Path, PathBuf};

use crate::cadlib::{self, CadLibrary, ViewGridDb};
use crate::config::PipelineConfig;
use crate::detections::{self, BBox, Category, Detection};
use crate::error::{Error, Result};
use crate::eval;
use crate::f32map::F32Map;
use crate::geom::Mat3;
use crate::img::ColorImage;
use crate::layout::{self, Face, LabelMap, RoomBox};
use crate::optimize::{self, TraceRow};
use crate::placement;
use crate::render;
use crate::scene::{self, PlacedObject, PlacedWindow, Scene};
use crate::vanishing;

#[derive(Debug, Clone, Default)]
pub struct PipelineInputs {
    pub image: PathBuf,
    pub detections: Option<PathBuf>,
    pub labelmap: Option<PathBuf>,
    pub models_dir: Option<PathBuf>,
    pub viewgrid_cache: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub dump_intermediates: bool,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineArtifacts {
    pub scene_path: PathBuf,
    pub render_path: PathBuf,
    pub trace_path: Option<PathBuf>,
    pub warnings: Vec<String>,
}

/// Load a PNG or binary PPM image as RGB.
pub fn load_image(path: impl AsRef<Path>) -> Result<ColorImage> {
    let img = image::open(path.as_ref()).map_err(|e| Error::Image(e.to_string()))?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let pixels = rgb.pixels().map(|p| [p[0], p[1], p[2]]).collect();
    Ok(ColorImage {
        width: w,
        height: h,
        pixels,
    })
}

pub fn save_png(path: impl AsRef<Path>, img: &ColorImage) -> Result<()> {
    let mut out = image::RgbImage::new(img.width, img.height);
    for (i, p) in img.pixels.iter().enumerate() {
        let x = i as u32 % img.width;
        let y = i as u32 / img.width;
        out.put_pixel(x, y, image::Rgb(*p));
    }
    out.save_with_format(path.as_ref(), image::ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))
}

/// Load the model library from a directory, or fall back to the bundled set.
pub fn load_library(models_dir: Option<&Path>) -> Result<CadLibrary> {
    match models_dir {
        Some(dir) => CadLibrary::load_dir(dir),
        None => Ok(CadLibrary::builtin()),
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Pixel indices of the view silhouette registered into a detection box
/// (the object mask used for medoid coloring).
fn silhouette_mask_in_bbox(
    view: &cadlib::ViewEntry,
    bbox: &BBox,
    width: u32,
    height: u32,
) -> Vec<usize> {
    let sw = view.sil_width.max(1) as f64;
    let sh = view.sil_height.max(1) as f64;
    let s = ((bbox.width() * bbox.height()) / (sw * sh)).sqrt();
    let (bcx, bcy) = bbox.center();
    let mut mask = Vec::new();
    let x0 = bbox.x_min.max(0.0) as u32;
    let x1 = (bbox.x_max.min(width as f64)).max(0.0) as u32;
    let y0 = bbox.y_min.max(0.0) as u32;
    let y1 = (bbox.y_max.min(height as f64)).max(0.0) as u32;
    for y in y0..y1 {
        for x in x0..x1 {
            // inverse of the similarity registration
            let u = (x as f64 + 0.5 - bcx) / s + sw * 0.5;
            let v = (y as f64 + 0.5 - bcy) / s + sh * 0.5;
            if u < 0.0 || v < 0.0 || u >= sw || v >= sh {
                continue;
            }
            if view.silhouette[(v as u32 * view.sil_width + u as u32) as usize] != 0 {
                mask.push((y * width + x) as usize);
            }
        }
    }
    mask
}

fn bbox_mask(bbox: &BBox, width: u32, height: u32) -> Vec<usize> {
    let x0 = bbox.x_min.max(0.0) as u32;
    let x1 = (bbox.x_max.min(width as f64)).max(0.0) as u32;
    let y0 = bbox.y_min.max(0.0) as u32;
    let y1 = (bbox.y_max.min(height as f64)).max(0.0) as u32;
    let mut mask = Vec::new();
    for y in y0..y1 {
        for x in x0..x1 {
            mask.push((y * width + x) as usize);
        }
    }
    mask
}

const FALLBACK_COLOR: [u8; 3] = [180, 180, 180];

/// Run the full reconstruction and write the scene file, rendering and
/// convergence trace into the output directory.
pub fn run_pipeline(
    inputs: &PipelineInputs,
    config: &PipelineConfig,
) -> Result<(Scene, PipelineArtifacts)> {
    config.validate()?;
    std::fs::create_dir_all(&inputs.out_dir)?;
    let mut warnings = Vec::new();

    let color = load_image(&inputs.image)?;
    let gray = color.to_gray();
    let (w, h) = (color.width, color.height);

    // vanishing geometry and calibration
    let segments = vanishing::extract_segments(&gray, &config.segments);
    let triple = stage(
        "vanishing",
        vanishing::estimate_vanishing_points(&segments, (w, h)),
    )?;
    let camera = stage("calibrate", vanishing::calibrate(&triple, (w, h)))?
        .with_height(config.camera_height);

    // surface label map: ingested or classical fallback
    let labels = match &inputs.labelmap {
        Some(path) => LabelMap::from_f32map(&F32Map::load(path)?)?,
        None => {
            warnings.push("no label map supplied; using the classical fallback".into());
            layout::label_map_classical(&gray, &camera, Some(&triple))
        }
    };
    if (labels.width, labels.height) != (w, h) {
        return Err(Error::DimensionMismatch(format!(
            "label map {}x{} vs image {}x{}",
            labels.width, labels.height, w, h
        )));
    }

    // room layout
    let room = match layout::generate_hypotheses(&camera, &triple, &segments, config.rays_per_vp)
    {
        Ok(hyps) => stage("layout", layout::select_layout(&hyps, &labels))?.room,
        Err(Error::NoHypothesis) => {
            warnings.push(
                "no feasible layout hypothesis; falling back to a default room".into(),
            );
            RoomBox::from_min_size(
                crate::geom::Vec3::new(-5.0, 0.0, 0.0),
                crate::geom::Vec3::new(10.0, 4.0 * config.camera_height, 2.0 * config.camera_height),
            )
        }
        Err(e) => return Err(e.in_stage("layout")),
    };

    // detections
    let dets: Vec<Detection> = match &inputs.detections {
        Some(path) => {
            let raw = detections::load_detections(path)?;
            let kept = detections::threshold(&raw, config.detection_min_score);
            detections::nms(&kept, config.nms_iou)
        }
        None => {
            warnings.push("no detections supplied; reconstructing an empty room".into());
            Vec::new()
        }
    };

    // retrieval + placement
    let library = load_library(inputs.models_dir.as_deref())?;
    let needs_db = dets.iter().any(|d| d.category != Category::Window);
    let db = if needs_db {
        match &inputs.viewgrid_cache {
            Some(path) => {
                let f = std::fs::File::open(path)?;
                cadlib::load_view_cache(std::io::BufReader::new(f))?
            }
            None => ViewGridDb::build(&library, &config.viewgrid),
        }
    } else {
        ViewGridDb::default()
    };

    let mut objects: Vec<PlacedObject> = Vec::new();
    let mut windows: Vec<PlacedWindow> = Vec::new();
    for det in &dets {
        if det.category == Category::Window {
            match placement::place_window(det, &camera, &room) {
                Ok(window) => {
                    let mask = bbox_mask(&det.bbox(), w, h);
                    let color_m =
                        render::medoid_color(&color, &mask).unwrap_or(FALLBACK_COLOR);
                    windows.push(PlacedWindow {
                        window,
                        color: color_m,
                    });
                }
                Err(e) => warnings.push(format!("window skipped: {e}")),
            }
            continue;
        }
        let bbox = det.bbox();
        let crop = gray.crop(
            bbox.x_min.max(0.0) as u32,
            bbox.y_min.max(0.0) as u32,
            bbox.width().max(1.0) as u32,
            bbox.height().max(1.0) as u32,
        );
        let placed = stage("retrieve", cadlib::retrieve(&crop, det.category, &db))
            .and_then(|ranked| {
                let view = &db.entries[ranked[0].0];
                placement::place_object(det, view, &camera, &room).map(|o| (o, ranked[0].0))
            });
        match placed {
            Ok((object, view_idx)) => {
                let view = &db.entries[view_idx];
                let mask = silhouette_mask_in_bbox(view, &bbox, w, h);
                let color_m = render::medoid_color(&color, &mask).unwrap_or(FALLBACK_COLOR);
                objects.push(PlacedObject {
                    object,
                    color: color_m,
                });
            }
            Err(e) => warnings.push(format!("detection skipped ({}): {e}", det.category)),
        }
    }

    // wall / floor / ceiling colors from the layout labels, detection boxes
    // excluded
    let label_raster = layout::room_label_raster(&room, &camera, w, h);
    let bboxes: Vec<BBox> = dets.iter().map(|d| d.bbox()).collect();
    let mut face_colors = [FALLBACK_COLOR; 5];
    for face in Face::ALL {
        let mask: Vec<usize> = label_raster
            .iter()
            .enumerate()
            .filter(|(i, &l)| {
                let x = (*i as u32 % w) as f64 + 0.5;
                let y = (*i as u32 / w) as f64 + 0.5;
                l == face as u8 && !bboxes.iter().any(|b| b.contains(x, y))
            })
            .map(|(i, _)| i)
            .collect();
        face_colors[face.index()] =
            render::medoid_color(&color, &mask).unwrap_or(FALLBACK_COLOR);
    }

    let initial = Scene {
        camera: camera.clone(),
        room,
        objects,
        windows,
        face_colors,
    };

    if inputs.dump_intermediates {
        dump_intermediates(inputs, &initial, &segments, &triple, &labels, &dets)?;
    }

    // render-and-match refinement
    let (refined, trace) = if initial.objects.is_empty() {
        (initial.clone(), Vec::new())
    } else {
        let outcome = stage(
            "refine",
            optimize::refine_scene(
                &initial,
                &camera,
                &gray,
                &library,
                &config.features,
                &config.refine,
            ),
        )?;
        (outcome.scene, outcome.trace)
    };

    // quantize through the file format so the in-memory scene matches the
    // serialized one exactly
    let final_scene = refined.quantized()?;
    let scene_path = inputs.out_dir.join("scene.scene");
    scene::save(&final_scene, &scene_path)?;
    let raster = stage("render", render::rasterize(&final_scene, &camera, &library))?;
    let render_path = inputs.out_dir.join("render.png");
    save_png(&render_path, &raster.to_color_image())?;
    let trace_path = if trace.is_empty() {
        None
    } else {
        let p = inputs.out_dir.join("trace.csv");
        std::fs::write(&p, optimize::trace_to_csv(&trace))?;
        Some(p)
    };

    Ok((
        final_scene,
        PipelineArtifacts {
            scene_path,
            render_path,
            trace_path,
            warnings,
        },
    ))
}

fn dump_intermediates(
    inputs: &PipelineInputs,
    initial: &Scene,
    segments: &[vanishing::LineSegment],
    triple: &vanishing::VanishingTriple,
    labels: &LabelMap,
    dets: &[Detection],
) -> Result<()> {
    let dir = inputs.out_dir.join("intermediates");
    std::fs::create_dir_all(&dir)?;
    let mut seg_text = String::from("ax,ay,bx,by,strength\n");
    for s in segments {
        seg_text.push_str(&format!(
            "{},{},{},{},{}\n",
            s.a.x, s.a.y, s.b.x, s.b.y, s.strength
        ));
    }
    std::fs::write(dir.join("segments.csv"), seg_text)?;
    let mut vp_text = String::new();
    for (name, vp) in [("x", triple.vp_x), ("y", triple.vp_y), ("z", triple.vp_z)] {
        match vp {
            vanishing::Vp::Finite(v) => vp_text.push_str(&format!("vp_{name} finite {} {}\n", v.x, v.y)),
            vanishing::Vp::Infinite(d) => {
                vp_text.push_str(&format!("vp_{name} infinite {} {}\n", d.x, d.y))
            }
        }
    }
    std::fs::write(dir.join("vanishing_points.txt"), vp_text)?;
    labels.to_f32map().save(dir.join("labelmap.f32map"))?;
    detections::save_detections(dir.join("detections_nms.json"), dets)?;
    scene::save(&initial.clone().quantized()?, dir.join("initial_scene.scene"))?;
    Ok(())
}

/// Render a scene file, optionally yawing the camera in place (degrees,
/// about the vertical axis).
pub fn render_scene_file(
    scene_path: impl AsRef<Path>,
    out_path: impl AsRef<Path>,
    yaw_deg: Option<f64>,
    models_dir: Option<&Path>,
) -> Result<()> {
    let scene = scene::load(scene_path)?;
    let library = load_library(models_dir)?;
    let mut camera = scene.camera.clone();
    if let Some(deg) = yaw_deg {
        let theta = deg.to_radians();
        camera.rotation = camera.rotation.mul_mat(&Mat3::rotation_z(-theta));
    }
    let raster = render::rasterize(&scene, &camera, &library)?;
    save_png(out_path, &raster.to_color_image())
}

fn cameras_match(a: &crate::geom::Camera, b: &crate::geom::Camera) -> bool {
    let rot_close = (0..3).all(|i| {
        (0..3).all(|j| (a.rotation.m[i][j] - b.rotation.m[i][j]).abs() < 1e-6)
    });
    (a.focal - b.focal).abs() < 1e-6
        && (a.principal_point - b.principal_point).norm() < 1e-6
        && (a.height - b.height).abs() < 1e-6
        && a.image_size == b.image_size
        && rot_close
}

/// Metric report comparing a predicted scene file against ground truth.
/// Label rasters (5-channel F32MAP files) are optional; when both are given
/// the 2D pixel error is included.
pub fn evaluate_scenes(
    pred_path: impl AsRef<Path>,
    truth_path: impl AsRef<Path>,
    pred_labels: Option<&Path>,
    truth_labels: Option<&Path>,
    config: &PipelineConfig,
) -> Result<String> {
    let pred = scene::load(pred_path)?;
    let truth = scene::load(truth_path)?;
    if !cameras_match(&pred.camera, &truth.camera) {
        return Err(Error::CameraMismatch(
            "predicted and ground-truth scenes use different cameras".into(),
        ));
    }
    let camera = truth.camera.clone();
    let mut report = String::new();
    match (pred_labels, truth_labels) {
        (Some(p), Some(t)) => {
            let lp = LabelMap::from_f32map(&F32Map::load(p)?)?;
            let lt = LabelMap::from_f32map(&F32Map::load(t)?)?;
            let err = layout::pixel_error(&lp.argmax_labels(), &lt.argmax_labels())?;
            report.push_str(&format!("pixel_error_pct: {:.6}\n", err));
        }
        _ => report.push_str("pixel_error_pct: n/a\n"),
    }
    let room_iou = eval::room_voxel_iou(&pred.room, &truth.room, &camera, &config.voxels)?;
    report.push_str(&format!("room_voxel_iou: {:.6}\n", room_iou));
    let free_iou = eval::freespace_iou(&pred, &truth, &camera, &config.voxels)?;
    report.push_str(&format!("freespace_iou: {:.6}\n", free_iou));
    let pred_objects: Vec<_> = pred.objects.iter().map(|p| p.object.clone()).collect();
    let truth_objects: Vec<_> = truth.objects.iter().map(|p| p.object.clone()).collect();
    match eval::localization_map(&pred_objects, &truth_objects, &config.map) {
        Ok(r) => {
            report.push_str(&format!("map: {:.6}\n", r.map));
            for (cat, ap) in r.per_category {
                report.push_str(&format!("map[{}]: {:.6}\n", cat.key(), ap));
            }
        }
        Err(Error::UndefinedMap) => report.push_str("map: n/a (no ground-truth objects)\n"),
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// Draw a convergence-trace plot (total cost plus per-layer curves).
pub fn plot_trace(trace: &[TraceRow], width: u32, height: u32) -> ColorImage {
    let mut img = ColorImage::new(width, height);
    for p in img.pixels.iter_mut() {
        *p = [255, 255, 255];
    }
    if trace.is_empty() {
        return img;
    }
    let margin = 28i64;
    let plot_w = width as i64 - 2 * margin;
    let plot_h = height as i64 - 2 * margin;
    let max_cost = trace
        .iter()
        .flat_map(|r| r.per_layer.iter().copied().chain([r.cost]))
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let n = trace.len().max(2) as f64;
    let to_px = |i: usize, v: f64| -> (i64, i64) {
        let x = margin + (i as f64 / (n - 1.0) * plot_w as f64) as i64;
        let y = margin + plot_h - (v / max_cost * plot_h as f64) as i64;
        (x, y)
    };
    let draw_line = |img: &mut ColorImage, a: (i64, i64), b: (i64, i64), c: [u8; 3]| {
        let steps = (b.0 - a.0).abs().max((b.1 - a.1).abs()).max(1);
        for s in 0..=steps {
            let x = a.0 + (b.0 - a.0) * s / steps;
            let y = a.1 + (b.1 - a.1) * s / steps;
            if x >= 0 && y >= 0 && (x as u32) < width && (y as u32) < height {
                img.set(x as u32, y as u32, c);
            }
        }
    };
    // axes
    draw_line(
        &mut img,
        (margin, margin),
        (margin, margin + plot_h),
        [0, 0, 0],
    );
    draw_line(
        &mut img,
        (margin, margin + plot_h),
        (margin + plot_w, margin + plot_h),
        [0, 0, 0],
    );
    let layer_colors = [
        [200, 60, 60],
        [60, 160, 60],
        [60, 60, 200],
        [180, 140, 40],
        [140, 60, 180],
        [40, 160, 160],
    ];
    let layers = trace[0].per_layer.len();
    for l in 0..layers {
        let c = layer_colors[l % layer_colors.len()];
        for k in 1..trace.len() {
            draw_line(
                &mut img,
                to_px(k - 1, trace[k - 1].per_layer[l]),
                to_px(k, trace[k].per_layer[l]),
                c,
            );
        }
    }
    for k in 1..trace.len() {
        draw_line(
            &mut img,
            to_px(k - 1, trace[k - 1].cost),
            to_px(k, trace[k].cost),
            [0, 0, 0],
        );
    }
    img
}
