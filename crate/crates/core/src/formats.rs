//! Eye-state stream and feature table CSV files.
//!
//! Stream files carry their metadata in leading comment lines:
//!
//! ```text
//! # video_id=subject_01
//! # fps=30
//! frame,left,right
//! 0,0,0
//! 1,1,0
//! ```
//!
//! Eye states are `0` (open) and `1` (closed).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{BlinkFeature, EyeState, EyeStateSequence, FrameStates, SubjectLabel};

pub const STREAM_HEADER: [&str; 3] = ["frame", "left", "right"];
pub const FEATURE_HEADER: [&str; 6] = [
    "video_id",
    "ecf_left",
    "ecf_right",
    "frame_count",
    "bs",
    "label",
];

/// A feature record together with its ground-truth label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeature {
    pub feature: BlinkFeature,
    pub label: SubjectLabel,
}

/// Reads and validates an eye-state stream file.
///
/// When the file has no `video_id` comment the file stem is used.
pub fn read_eye_state_stream(path: &Path) -> Result<EyeStateSequence> {
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_eye_state_stream(BufReader::new(File::open(path)?), &fallback)
}

pub fn parse_eye_state_stream<R: BufRead>(
    mut reader: R,
    fallback_id: &str,
) -> Result<EyeStateSequence> {
    let mut video_id = None;
    let mut fps = None;
    let mut line_no = 0;
    let mut line = String::new();
    let header = loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::malformed(
                line_no + 1,
                "missing `frame,left,right` header",
            ));
        }
        line_no += 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "video_id" => video_id = Some(value.trim().to_string()),
                    "fps" => {
                        let parsed: f64 = value.trim().parse().map_err(|_| {
                            Error::malformed(line_no, format!("bad fps `{}`", value.trim()))
                        })?;
                        fps = Some(parsed);
                    }
                    _ => {}
                }
            }
            continue;
        }
        break trimmed.to_string();
    };
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns != STREAM_HEADER {
        return Err(Error::malformed(
            line_no,
            format!("expected header `frame,left,right`, got `{header}`"),
        ));
    }
    let fps = fps.ok_or_else(|| Error::malformed(line_no, "missing `# fps=` comment"))?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::InvalidFps(fps));
    }

    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut frames: Vec<FrameStates> = Vec::new();
    for record in csv_reader.records() {
        let record = record?;
        let at = line_no + record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::malformed(
                at,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let frame_index: u64 = record[0]
            .parse()
            .map_err(|_| Error::malformed(at, format!("bad frame index `{}`", &record[0])))?;
        let left = parse_state(&record[1], at)?;
        let right = parse_state(&record[2], at)?;
        if let Some(prev) = frames.last() {
            if frame_index <= prev.frame_index {
                return Err(Error::NonMonotoneFrames {
                    line: at,
                    previous: prev.frame_index,
                    found: frame_index,
                });
            }
        }
        frames.push(FrameStates {
            frame_index,
            left,
            right,
        });
    }
    EyeStateSequence::new(
        video_id.unwrap_or_else(|| fallback_id.to_string()),
        fps,
        frames,
    )
}

fn parse_state(field: &str, line: usize) -> Result<EyeState> {
    field
        .parse::<u8>()
        .ok()
        .and_then(EyeState::from_code)
        .ok_or_else(|| Error::malformed(line, format!("eye state must be 0 or 1, got `{field}`")))
}

pub fn write_eye_state_stream_to<W: Write>(seq: &EyeStateSequence, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "# video_id={}", seq.video_id())?;
    writeln!(out, "# fps={}", seq.fps())?;
    writeln!(out, "{}", STREAM_HEADER.join(","))?;
    for f in seq.frames() {
        writeln!(
            out,
            "{},{},{}",
            f.frame_index,
            f.left.code(),
            f.right.code()
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_eye_state_stream(seq: &EyeStateSequence, path: &Path) -> Result<()> {
    write_eye_state_stream_to(seq, File::create(path)?)
}

/// Writes the feature table after validating every record.
///
/// Nothing is written if any record is invalid.
pub fn write_feature_table_to<W: Write>(records: &[LabeledFeature], out: W) -> Result<()> {
    for r in records {
        r.feature.validate()?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(FEATURE_HEADER)?;
    for r in records {
        let f = &r.feature;
        writer.write_record([
            f.video_id.clone(),
            f.ecf_left.to_string(),
            f.ecf_right.to_string(),
            f.frame_count.to_string(),
            // `{}` on f64 is the shortest representation that parses back exactly.
            format!("{}", f.bs),
            r.label.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_feature_table(records: &[LabeledFeature], path: &Path) -> Result<()> {
    for r in records {
        r.feature.validate()?;
    }
    write_feature_table_to(records, File::create(path)?)
}

pub fn read_feature_table_from<R: Read>(input: R) -> Result<Vec<LabeledFeature>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != FEATURE_HEADER {
        return Err(Error::malformed(
            1,
            format!("expected header `{}`", FEATURE_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let int = |i: usize| -> Result<u64> {
            record[i].parse().map_err(|_| {
                Error::malformed(line, format!("bad {} `{}`", FEATURE_HEADER[i], &record[i]))
            })
        };
        let feature = BlinkFeature {
            video_id: record[0].to_string(),
            ecf_left: int(1)?,
            ecf_right: int(2)?,
            frame_count: int(3)?,
            bs: record[4]
                .parse()
                .map_err(|_| Error::malformed(line, format!("bad bs `{}`", &record[4])))?,
        };
        feature.validate()?;
        let label = record[5].parse()?;
        out.push(LabeledFeature { feature, label });
    }
    Ok(out)
}

pub fn read_feature_table(path: &Path) -> Result<Vec<LabeledFeature>> {
    read_feature_table_from(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;
    use EyeState::*;

    fn parse(text: &str) -> Result<EyeStateSequence> {
        parse_eye_state_stream(Cursor::new(text), "fallback")
    }

    #[test]
    fn minimal_stream() {
        let seq =
            parse("# video_id=v1\n# fps=30\nframe,left,right\n0,0,0\n1,0,0\n2,0,0\n").unwrap();
        assert_eq!(seq.frame_count(), 3);
        assert_eq!(seq.video_id(), "v1");
        assert_eq!(seq.fps(), 30.0);
    }

    #[test]
    fn repeated_frame_is_rejected() {
        let err = parse("# fps=30\nframe,left,right\n0,0,0\n0,1,0\n").unwrap_err();
        assert!(
            matches!(
                err,
                Error::NonMonotoneFrames {
                    previous: 0,
                    found: 0,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn empty_data_section() {
        let err = parse("# video_id=v\n# fps=25\nframe,left,right\n").unwrap_err();
        assert!(matches!(err, Error::EmptySequence));
    }

    #[test]
    fn bad_rows() {
        assert!(matches!(
            parse("# fps=30\nframe,left,right\n0,2,0\n"),
            Err(Error::MalformedRecord { .. })
        ));
        assert!(matches!(
            parse("# fps=30\nframe,left,right\n0,0\n"),
            Err(Error::MalformedRecord { .. })
        ));
        assert!(matches!(
            parse("frame,left,right\n0,0,0\n"),
            Err(Error::MalformedRecord { .. })
        ));
        assert!(matches!(
            parse("# fps=30\nidx,l,r\n0,0,0\n"),
            Err(Error::MalformedRecord { .. })
        ));
    }

    #[test]
    fn missing_video_id_uses_fallback() {
        let seq = parse("# fps=10\nframe,left,right\n3,1,0\n9,0,1\n").unwrap();
        assert_eq!(seq.video_id(), "fallback");
        assert_eq!(seq.frames()[1].frame_index, 9);
    }

    #[test]
    fn feature_table_round_trip() {
        let records = vec![LabeledFeature {
            feature: BlinkFeature {
                video_id: "p1".into(),
                ecf_left: 5,
                ecf_right: 10,
                frame_count: 100,
                bs: 0.5,
            },
            label: SubjectLabel::Palsy,
        }];
        let mut buf = Vec::new();
        write_feature_table_to(&records, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "video_id,ecf_left,ecf_right,frame_count,bs,label\np1,5,10,100,0.5,palsy\n"
        );
        assert_eq!(read_feature_table_from(&buf[..]).unwrap(), records);
    }

    #[test]
    fn empty_feature_table_is_header_only() {
        let mut buf = Vec::new();
        write_feature_table_to(&[], &mut buf).unwrap();
        assert_eq!(buf, b"video_id,ecf_left,ecf_right,frame_count,bs,label\n");
        assert!(read_feature_table_from(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn invalid_record_is_not_written() {
        let records = vec![LabeledFeature {
            feature: BlinkFeature {
                video_id: "bad".into(),
                ecf_left: 200,
                ecf_right: 10,
                frame_count: 100,
                bs: 0.05,
            },
            label: SubjectLabel::Normal,
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        let err = write_feature_table(&records, &path).unwrap_err();
        assert!(matches!(err, Error::ValidationFailure(_)));
        assert!(!path.exists());
    }

    fn state() -> impl Strategy<Value = EyeState> {
        prop_oneof![Just(Open), Just(Closed)]
    }

    proptest! {
        #[test]
        fn stream_round_trip(
            cols in proptest::collection::vec((state(), state(), 1u64..4), 1..60),
            fps in 1.0f64..120.0,
        ) {
            let mut idx = 0;
            let frames: Vec<FrameStates> = cols
                .iter()
                .map(|&(left, right, step)| {
                    idx += step;
                    FrameStates { frame_index: idx, left, right }
                })
                .collect();
            let seq = EyeStateSequence::new("round", fps, frames).unwrap();
            let mut buf = Vec::new();
            write_eye_state_stream_to(&seq, &mut buf).unwrap();
            let back = parse_eye_state_stream(Cursor::new(buf), "x").unwrap();
            prop_assert_eq!(back, seq);
        }

        #[test]
        fn feature_round_trip(lo in 0u64..500, extra in 1u64..500, pad in 0u64..500, palsy: bool) {
            let hi = lo + extra;
            let feature = BlinkFeature {
                video_id: format!("v{lo}"),
                ecf_left: hi,
                ecf_right: lo,
                frame_count: hi + pad,
                bs: lo as f64 / hi as f64,
            };
            let label = if palsy { SubjectLabel::Palsy } else { SubjectLabel::Normal };
            let records = vec![LabeledFeature { feature, label }];
            let mut buf = Vec::new();
            write_feature_table_to(&records, &mut buf).unwrap();
            let back = read_feature_table_from(&buf[..]).unwrap();
            prop_assert_eq!(back.len(), 1);
            prop_assert!((back[0].feature.bs - records[0].feature.bs).abs() <= 1e-12);
            prop_assert_eq!(&back, &records);
        }
    }
}
