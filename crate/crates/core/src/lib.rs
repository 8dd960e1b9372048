//! Single-image indoor scene reconstruction.
//!
//! Given one photo of a room, the pipeline estimates a cuboid room layout
//! from three orthogonal vanishing points, ingests (or approximates) object
//! detections and per-pixel surface labels, retrieves and places CAD
//! furniture models, and jointly refines all object poses by minimizing a
//! multi-scale feature distance between software renderings of the scene and
//! the photo.

pub mod cadlib;
pub mod config;
pub mod detections;
pub mod error;
pub mod eval;
pub mod f32map;
pub mod features;
pub mod geom;
pub mod img;
pub mod layout;
pub mod optimize;
pub mod pipeline;
pub mod placement;
pub mod render;
pub mod scene;
pub mod synth;
pub mod vanishing;

pub use error::{Error, Result};
pub use geom::{Camera, Mat3, Plane, Ray, Vec2, Vec3};
pub use img::{ColorImage, GrayImage};
pub use layout::{Face, LabelMap, LayoutHypothesis, RoomBox};
pub use placement::{SceneObject, WindowPlacement};
pub use scene::Scene;
