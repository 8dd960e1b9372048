//! Object detection records: ingestion, score thresholding and greedy
//! per-category non-maximum suppression.
//!
//! Detection files are JSON arrays of records:
//! `[{"category": "chair", "bbox": [x_min, y_min, x_max, y_max], "score": 0.9}, ...]`
//! with pixel-unit boxes. Unknown categories are rejected at parse time.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "chair")]
    Chair,
    #[serde(rename = "table")]
    Table,
    #[serde(rename = "sofa")]
    Sofa,
    #[serde(rename = "bookshelf")]
    Bookshelf,
    #[serde(rename = "bed")]
    Bed,
    #[serde(rename = "night table")]
    NightTable,
    #[serde(rename = "chest")]
    Chest,
    #[serde(rename = "window")]
    Window,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::Chair,
        Category::Table,
        Category::Sofa,
        Category::Bookshelf,
        Category::Bed,
        Category::NightTable,
        Category::Chest,
        Category::Window,
    ];

    /// Stable identifier usable in file names and scene files.
    pub fn key(self) -> &'static str {
        match self {
            Category::Chair => "chair",
            Category::Table => "table",
            Category::Sofa => "sofa",
            Category::Bookshelf => "bookshelf",
            Category::Bed => "bed",
            Category::NightTable => "night_table",
            Category::Chest => "chest",
            Category::Window => "window",
        }
    }

    pub fn from_key(s: &str) -> Result<Category> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.key() == s)
            .ok_or_else(|| Error::Parse(format!("unknown category `{s}`")))
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// Axis-aligned pixel box, `x_min < x_max`, `y_min < y_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> BBox {
        BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let iy = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    fn lex_key(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

fn cmp_f64_slice(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    pub category: Category,
    /// [x_min, y_min, x_max, y_max] in pixels.
    pub bbox: [f64; 4],
    pub score: f64,
}

impl Detection {
    pub fn bbox(&self) -> BBox {
        BBox::new(self.bbox[0], self.bbox[1], self.bbox[2], self.bbox[3])
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.bbox();
        if !(b.x_min < b.x_max && b.y_min < b.y_max) {
            return Err(Error::Parse(format!(
                "detection bbox is not positive-area: {:?}",
                self.bbox
            )));
        }
        if !(0.0..=1.0).contains(&self.score) || !self.score.is_finite() {
            return Err(Error::Parse(format!("detection score {} not in [0,1]", self.score)));
        }
        Ok(())
    }
}

/// Parse and validate a JSON detections file.
pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<Detection>> {
    let text = std::fs::read_to_string(path)?;
    parse_detections(&text)
}

pub fn parse_detections(text: &str) -> Result<Vec<Detection>> {
    let dets: Vec<Detection> =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("detections: {e}")))?;
    for d in &dets {
        d.validate()?;
    }
    Ok(dets)
}

pub fn save_detections(path: impl AsRef<Path>, dets: &[Detection]) -> Result<()> {
    let text = serde_json::to_string_pretty(dets)
        .map_err(|e| Error::Parse(format!("detections: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Keep detections with score strictly greater than `min_score`, preserving
/// order.
pub fn threshold(dets: &[Detection], min_score: f64) -> Vec<Detection> {
    dets.iter()
        .filter(|d| d.score > min_score)
        .cloned()
        .collect()
}

/// Greedy per-category non-maximum suppression: repeatedly keep the
/// highest-score box and drop boxes of the same category with IoU above the
/// threshold. Ties in score break by lexicographic bbox comparison, making
/// the result independent of input order.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    assert!(
        iou_threshold > 0.0 && iou_threshold < 1.0,
        "iou_threshold must be in (0,1)"
    );
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&i, &j| {
        dets[j]
            .score
            .partial_cmp(&dets[i].score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| cmp_f64_slice(&dets[i].bbox().lex_key(), &dets[j].bbox().lex_key()))
            .then_with(|| dets[i].category.cmp(&dets[j].category))
    });
    let mut suppressed = vec![false; dets.len()];
    let mut keep = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        keep.push(dets[i].clone());
        for &j in &order[rank + 1..] {
            if suppressed[j] || dets[j].category != dets[i].category {
                continue;
            }
            if dets[i].bbox().iou(&dets[j].bbox()) > iou_threshold {
                suppressed[j] = true;
            }
        }
    }
    keep
}
