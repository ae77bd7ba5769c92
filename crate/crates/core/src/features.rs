//! Feature files and synthetic feature generation.
//!
//! A feature file is little-endian binary:
//!
//! | offset | size | field            |
//! |--------|------|------------------|
//! | 0      | 4    | magic `RNTF`     |
//! | 4      | 4    | version (u32, 1) |
//! | 8      | 4    | feature_dim (u32)|
//! | 12     | 4    | frame_shift_ms (u32) |
//! | 16     | 8    | n_frames (u64)   |
//! | 24     | 4·n_frames·feature_dim | f32 body, row-major |

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::AudioFrame;

const MAGIC: &[u8; 4] = b"RNTF";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureHeader {
    pub feature_dim: usize,
    pub frame_shift_ms: u64,
    pub n_frames: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureFile {
    pub header: FeatureHeader,
    /// Row-major `n_frames × feature_dim`.
    pub body: Vec<f32>,
}

impl FeatureFile {
    pub fn new(feature_dim: usize, frame_shift_ms: u64, body: Vec<f32>) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::config("feature_dim must be at least 1"));
        }
        if !body.len().is_multiple_of(feature_dim) {
            return Err(Error::config(format!(
                "body of {} values is not a whole number of {feature_dim}-dim frames",
                body.len()
            )));
        }
        Ok(FeatureFile {
            header: FeatureHeader {
                feature_dim,
                frame_shift_ms,
                n_frames: body.len() / feature_dim,
            },
            body,
        })
    }

    pub fn from_frames(
        frames: &[AudioFrame],
        feature_dim: usize,
        frame_shift_ms: u64,
    ) -> Result<Self> {
        let body = frames
            .iter()
            .flat_map(|f| f.features.iter().copied())
            .collect();
        Self::new(feature_dim, frame_shift_ms, body)
    }

    pub fn frames(&self) -> Vec<AudioFrame> {
        let d = self.header.feature_dim;
        self.body
            .chunks_exact(d)
            .enumerate()
            .map(|(i, row)| AudioFrame {
                features: row.to_vec(),
                timestamp_ms: i as u64 * self.header.frame_shift_ms,
            })
            .collect()
    }

    pub fn audio_seconds(&self) -> f64 {
        self.header.n_frames as f64 * self.header.frame_shift_ms as f64 / 1000.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.body.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(h.feature_dim as u32).to_le_bytes());
        out.extend_from_slice(&(h.frame_shift_ms as u32).to_le_bytes());
        out.extend_from_slice(&(h.n_frames as u64).to_le_bytes());
        for v in &self.body {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(Error::schema("header.magic", "not a feature file"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::schema(
                "header.version",
                format!("unsupported version {version}"),
            ));
        }
        let feature_dim = u32_at(8) as usize;
        let frame_shift_ms = u64::from(u32_at(12));
        let n_frames = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        if feature_dim == 0 {
            return Err(Error::schema("header.feature_dim", "must be at least 1"));
        }
        if frame_shift_ms == 0 {
            return Err(Error::schema("header.frame_shift_ms", "must be positive"));
        }
        let expected = n_frames
            .checked_mul(feature_dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::schema("header.n_frames", "size overflow"))?;
        let body_bytes = &bytes[HEADER_LEN..];
        if body_bytes.len() != expected {
            return Err(Error::schema(
                "body",
                format!(
                    "expected {expected} bytes for {n_frames}x{feature_dim} frames, found {}",
                    body_bytes.len()
                ),
            ));
        }
        let body = body_bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(FeatureFile {
            header: FeatureHeader {
                feature_dim,
                frame_shift_ms,
                n_frames,
            },
            body,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Piecewise-stationary synthetic features: segments of 3 to 12 frames
/// around a random mean in `[-1, 1]`, plus small uniform noise.
pub fn synth_frames(
    n_frames: usize,
    feature_dim: usize,
    frame_shift_ms: u64,
    seed: u64,
) -> Vec<AudioFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(n_frames);
    let mut mean: Vec<f32> = Vec::new();
    let mut left = 0;
    for i in 0..n_frames {
        if left == 0 {
            mean = (0..feature_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            left = rng.gen_range(3..=12);
        }
        left -= 1;
        frames.push(AudioFrame {
            features: mean.iter().map(|m| m + rng.gen_range(-0.1..0.1)).collect(),
            timestamp_ms: i as u64 * frame_shift_ms,
        });
    }
    frames
}
