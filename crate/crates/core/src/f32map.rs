//! The `F32MAP` binary raster format: magic `F32MAP`, little-endian u32
//! width, height, channels, then `width * height * channels` little-endian
//! f32 values, row-major with interleaved channels.
//!
//! Label maps use the channel order ceiling, floor, left, middle, right.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"F32MAP";

#[derive(Debug, Clone, PartialEq)]
pub struct F32Map {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    pub data: Vec<f32>,
}

impl F32Map {
    pub fn new(width: u32, height: u32, channels: u32, data: Vec<f32>) -> Result<F32Map> {
        if data.len() != (width as usize) * (height as usize) * (channels as usize) {
            return Err(Error::DimensionMismatch(format!(
                "f32map: {}x{}x{} needs {} values, got {}",
                width,
                height,
                channels,
                width as usize * height as usize * channels as usize,
                data.len()
            )));
        }
        Ok(F32Map {
            width,
            height,
            channels,
            data,
        })
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: u32) -> f32 {
        self.data[((y * self.width + x) * self.channels + c) as usize]
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&self.width.to_le_bytes())?;
        w.write_all(&self.height.to_le_bytes())?;
        w.write_all(&self.channels.to_le_bytes())?;
        let mut bytes = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<F32Map> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("f32map: bad magic".into()));
        }
        let mut buf4 = [0u8; 4];
        r.read_exact(&mut buf4)?;
        let width = u32::from_le_bytes(buf4);
        r.read_exact(&mut buf4)?;
        let height = u32::from_le_bytes(buf4);
        r.read_exact(&mut buf4)?;
        let channels = u32::from_le_bytes(buf4);
        let count = width as usize * height as usize * channels as usize;
        if count > 1 << 30 {
            return Err(Error::Parse("f32map: implausible dimensions".into()));
        }
        let mut bytes = vec![0u8; count * 4];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        F32Map::new(width, height, channels, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<F32Map> {
        let f = std::fs::File::open(path)?;
        F32Map::read_from(std::io::BufReader::new(f))
    }
}
