//! Crop dataset directories (`<root>/{open,closed}/<id>.pgm`) and per-video
//! crop directories described by a `manifest.csv`.

use std::fs;
use std::path::Path;

use super::train::LabeledCrop;
use crate::error::{Error, Result};
use crate::image::{GrayImage, CROP_SIZE};
use crate::types::{EyeCropPair, EyeState};

fn class_dir(state: EyeState) -> &'static str {
    match state {
        EyeState::Open => "open",
        EyeState::Closed => "closed",
    }
}

/// Loads every `.pgm` crop under `open/` and `closed/`, ordered by class
/// then file name.
pub fn load_crop_dataset(root: &Path) -> Result<Vec<LabeledCrop>> {
    let mut crops = Vec::new();
    for state in [EyeState::Open, EyeState::Closed] {
        let dir = root.join(class_dir(state));
        if !dir.is_dir() {
            return Err(Error::ValidationFailure(format!(
                "missing class directory {}",
                dir.display()
            )));
        }
        let mut paths: Vec<_> = fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        paths.retain(|p| p.extension().is_some_and(|e| e == "pgm"));
        paths.sort();
        for path in paths {
            let image = GrayImage::read_pgm(&path)?;
            if image.width() != CROP_SIZE || image.height() != CROP_SIZE {
                return Err(Error::Image {
                    path,
                    reason: format!(
                        "expected {CROP_SIZE}x{CROP_SIZE}, got {}x{}",
                        image.width(),
                        image.height()
                    ),
                });
            }
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            crops.push(LabeledCrop { id, image, state });
        }
    }
    Ok(crops)
}

pub fn write_crop_dataset(root: &Path, crops: &[LabeledCrop]) -> Result<()> {
    for state in [EyeState::Open, EyeState::Closed] {
        fs::create_dir_all(root.join(class_dir(state)))?;
    }
    for crop in crops {
        let path = root
            .join(class_dir(crop.state))
            .join(format!("{}.pgm", crop.id));
        crop.image.write_pgm(&path)?;
    }
    Ok(())
}

pub const CROP_MANIFEST: &str = "manifest.csv";
pub const CROP_MANIFEST_HEADER: [&str; 4] = ["frame", "left_file", "right_file", "skipped"];

/// The usable frames of one video's crop directory.
#[derive(Debug, Clone, PartialEq)]
pub struct CropVideo {
    pub video_id: String,
    pub fps: f64,
    pub pairs: Vec<EyeCropPair>,
    /// Frames the manifest marks as skipped; they are absent from `pairs`.
    pub skipped: usize,
}

fn parse_skipped(field: &str, line: usize) -> Result<bool> {
    match field {
        "" | "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        other => Err(Error::malformed(
            line,
            format!("bad skipped flag `{other}`"),
        )),
    }
}

/// Reads `<dir>/manifest.csv` and the crops it lists.
///
/// Left crops are expected already mirrored to right-eye orientation. The
/// `# video_id=` comment defaults to the directory name; `fps_override`
/// replaces the `# fps=` comment.
pub fn load_crop_video(dir: &Path, fps_override: Option<f64>) -> Result<CropVideo> {
    let text = fs::read_to_string(dir.join(CROP_MANIFEST))?;
    let mut video_id = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut fps = None;
    for (i, line) in text.lines().enumerate() {
        let Some(comment) = line.trim().strip_prefix('#') else {
            continue;
        };
        if let Some((key, value)) = comment.split_once('=') {
            match key.trim() {
                "video_id" => video_id = value.trim().to_string(),
                "fps" => {
                    fps = Some(value.trim().parse::<f64>().map_err(|_| {
                        Error::malformed(i + 1, format!("bad fps `{}`", value.trim()))
                    })?)
                }
                _ => {}
            }
        }
    }
    let fps = fps_override
        .or(fps)
        .ok_or_else(|| Error::malformed(1, "crop manifest has no `# fps=` comment"))?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::InvalidFps(fps));
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CROP_MANIFEST_HEADER {
        return Err(Error::malformed(
            1,
            format!(
                "expected header `{}`, got `{}`",
                CROP_MANIFEST_HEADER.join(","),
                header.join(",")
            ),
        ));
    }
    let mut pairs: Vec<EyeCropPair> = Vec::new();
    let mut skipped = 0;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let frame: u64 = record[0]
            .parse()
            .map_err(|_| Error::malformed(line, format!("bad frame index `{}`", &record[0])))?;
        if let Some(prev) = pairs.last() {
            if frame <= prev.frame_index {
                return Err(Error::NonMonotoneFrames {
                    line,
                    previous: prev.frame_index,
                    found: frame,
                });
            }
        }
        if parse_skipped(&record[3], line)? {
            skipped += 1;
            continue;
        }
        let left = GrayImage::read_pgm(&dir.join(&record[1]))?;
        let right = GrayImage::read_pgm(&dir.join(&record[2]))?;
        pairs.push(EyeCropPair::from_oriented(
            video_id.clone(),
            frame,
            left,
            right,
        )?);
    }
    if pairs.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(CropVideo {
        video_id,
        fps,
        pairs,
        skipped,
    })
}
