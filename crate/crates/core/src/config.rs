//! Pipeline configuration: one structured place for every tunable constant.
//! The CLI deserializes this from a TOML file and applies flag overrides.

use serde::{Deserialize, Serialize};

use crate::cadlib::ViewGridConfig;
use crate::error::{Error, Result};
use crate::eval::{MapConfig, VoxelSpec};
use crate::features::ExtractConfig;
use crate::optimize::RefineConfig;
use crate::vanishing::SegmentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Camera height above the floor, meters; fixes the absolute scale.
    pub camera_height: f64,
    /// Detections with scores not strictly above this are dropped.
    pub detection_min_score: f64,
    /// Greedy NMS IoU threshold.
    pub nms_iou: f64,
    /// Junction rays sampled per vanishing point.
    pub rays_per_vp: usize,
    pub segments: SegmentConfig,
    pub features: ExtractConfig,
    pub refine: RefineConfig,
    pub viewgrid: ViewGridConfig,
    pub voxels: VoxelSpec,
    pub map: MapConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            camera_height: 1.6,
            detection_min_score: 0.5,
            nms_iou: 0.3,
            rays_per_vp: 10,
            segments: SegmentConfig::default(),
            features: ExtractConfig::default(),
            refine: RefineConfig::default(),
            viewgrid: ViewGridConfig::default(),
            voxels: VoxelSpec::default(),
            map: MapConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.camera_height <= 0.0 {
            return Err(Error::Parse("config: camera_height must be positive".into()));
        }
        if !(0.0 < self.nms_iou && self.nms_iou < 1.0) {
            return Err(Error::Parse("config: nms_iou must be in (0, 1)".into()));
        }
        if self.rays_per_vp < 2 {
            return Err(Error::Parse("config: rays_per_vp must be at least 2".into()));
        }
        if self.refine.budget < 2 {
            return Err(Error::Parse("config: refine.budget too small".into()));
        }
        Ok(())
    }
}
