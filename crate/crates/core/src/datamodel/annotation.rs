use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::geometry::{BBox, Bitmap, Dims, Pixel};
use super::rle;
use crate::error::{bail, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationKind {
    Point,
    Scribble,
    Box,
    Mask,
}

impl AnnotationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AnnotationKind::Point => "point",
            AnnotationKind::Scribble => "scribble",
            AnnotationKind::Box => "box",
            AnnotationKind::Mask => "mask",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "point" => AnnotationKind::Point,
            "scribble" => AnnotationKind::Scribble,
            "box" => AnnotationKind::Box,
            "mask" => AnnotationKind::Mask,
            other => bail!(Format, "unknown annotation kind {other:?}"),
        })
    }
}

impl fmt::Display for AnnotationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Point(Pixel),
    Scribble(Vec<Pixel>),
    Box(BBox),
    Mask(Bitmap),
}

impl Payload {
    pub fn kind(&self) -> AnnotationKind {
        match self {
            Payload::Point(_) => AnnotationKind::Point,
            Payload::Scribble(_) => AnnotationKind::Scribble,
            Payload::Box(_) => AnnotationKind::Box,
            Payload::Mask(_) => AnnotationKind::Mask,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub frame: u32,
    pub payload: Payload,
}

/// Sparse labels for one video: its class tag plus per-frame geometry.
///
/// An empty entry list is a tag-only annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub video_id: String,
    pub class: u32,
    pub entries: Vec<Entry>,
}

impl AnnotationRecord {
    pub fn tag_only(video_id: impl Into<String>, class: u32) -> Self {
        AnnotationRecord { video_id: video_id.into(), class, entries: Vec::new() }
    }

    pub fn is_tag_only(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct annotated frames (F').
    pub fn annotated_frames(&self) -> BTreeSet<u32> {
        self.entries.iter().map(|e| e.frame).collect()
    }

    pub fn kinds(&self) -> BTreeSet<AnnotationKind> {
        self.entries.iter().map(|e| e.payload.kind()).collect()
    }

    /// Entries of one kind, sorted by frame.
    pub fn entries_of(&self, kind: AnnotationKind) -> Vec<&Entry> {
        let mut v: Vec<&Entry> = self.entries.iter().filter(|e| e.payload.kind() == kind).collect();
        v.sort_by_key(|e| e.frame);
        v
    }

    /// Check every entry against the video geometry.
    pub fn validate(&self, dims: Dims) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            let ctx = || format!("video {:?} frame {}", self.video_id, e.frame);
            if e.frame as usize >= dims.depth {
                bail!(Validation, "{}: frame index out of range (video has {} frames)", ctx(), dims.depth);
            }
            if !seen.insert((e.frame, e.payload.kind())) {
                bail!(Validation, "{}: duplicate {} entry", ctx(), e.payload.kind());
            }
            let in_frame = |p: &Pixel| (p.x as usize) < dims.width && (p.y as usize) < dims.height;
            match &e.payload {
                Payload::Point(p) => {
                    if !in_frame(p) {
                        bail!(Validation, "{}: point ({},{}) out of bounds", ctx(), p.x, p.y);
                    }
                }
                Payload::Scribble(ps) => {
                    if ps.is_empty() {
                        bail!(Validation, "{}: empty scribble", ctx());
                    }
                    if let Some(p) = ps.iter().find(|p| !in_frame(p)) {
                        bail!(Validation, "{}: scribble pixel ({},{}) out of bounds", ctx(), p.x, p.y);
                    }
                }
                Payload::Box(b) => {
                    if b.x_min > b.x_max || b.y_min > b.y_max {
                        bail!(Validation, "{}: box has min greater than max", ctx());
                    }
                    if !b.within(dims.height, dims.width) {
                        bail!(Validation, "{}: box {:?} out of bounds", ctx(), b.as_array());
                    }
                }
                Payload::Mask(m) => {
                    if m.height() != dims.height || m.width() != dims.width {
                        bail!(Validation, "{}: mask is {}x{}, frame is {}x{}", ctx(), m.height(), m.width(), dims.height, dims.width);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|e| {
                let data = match &e.payload {
                    Payload::Point(p) => json!([p.x, p.y]),
                    Payload::Scribble(ps) => Value::Array(ps.iter().map(|p| json!([p.x, p.y])).collect()),
                    Payload::Box(b) => json!(b.as_array()),
                    Payload::Mask(m) => json!({ "rle": rle::encode(m.bits()) }),
                };
                json!({ "frame": e.frame, "kind": e.payload.kind().as_str(), "data": data })
            })
            .collect();
        json!({ "video_id": self.video_id, "class": self.class, "entries": entries })
    }

    /// Decode one JSON record. `dims` supplies the frame geometry needed to
    /// decode masks and bounds-check coordinates.
    pub fn from_json(value: &Value, dims: impl Fn(&str) -> Option<Dims>) -> Result<Self> {
        let raw: RawRecord = serde_json::from_value(value.clone()).map_err(|e| Error::Format(e.to_string()))?;
        let video_dims = dims(&raw.video_id)
            .ok_or_else(|| Error::Validation(format!("no frame geometry known for video {:?}", raw.video_id)))?;
        if raw.class < 0 || raw.class > u32::MAX as i64 {
            bail!(Validation, "video {:?}: class {} is not a valid class index", raw.video_id, raw.class);
        }
        let mut entries = Vec::with_capacity(raw.entries.len());
        for e in raw.entries {
            let kind = AnnotationKind::parse(&e.kind)?;
            if e.frame < 0 || e.frame >= video_dims.depth as i64 {
                bail!(Validation, "video {:?} frame {}: frame index out of range", raw.video_id, e.frame);
            }
            let ctx = format!("video {:?} frame {}", raw.video_id, e.frame);
            let payload = match kind {
                AnnotationKind::Point => Payload::Point(pixel(&e.data, &ctx)?),
                AnnotationKind::Scribble => {
                    let arr = e.data.as_array().ok_or_else(|| Error::Format(format!("{ctx}: scribble data must be an array")))?;
                    Payload::Scribble(arr.iter().map(|p| pixel(p, &ctx)).collect::<Result<_>>()?)
                }
                AnnotationKind::Box => {
                    let c: Vec<i64> = serde_json::from_value(e.data.clone())
                        .map_err(|_| Error::Format(format!("{ctx}: box data must be [xmin,ymin,xmax,ymax]")))?;
                    if c.len() != 4 {
                        bail!(Format, "{ctx}: box data must have 4 coordinates");
                    }
                    if c[0] > c[2] || c[1] > c[3] {
                        bail!(Validation, "{ctx}: box has min greater than max");
                    }
                    Payload::Box(BBox { x_min: c[0], y_min: c[1], x_max: c[2], y_max: c[3] })
                }
                AnnotationKind::Mask => {
                    let text = e
                        .data
                        .get("rle")
                        .and_then(Value::as_str)
                        .ok_or_else(|| Error::Format(format!("{ctx}: mask data must be {{\"rle\": str}}")))?;
                    let bits = rle::decode(text, video_dims.frame_len()).map_err(|err| Error::Format(format!("{ctx}: {err}")))?;
                    Payload::Mask(Bitmap::from_bits(video_dims.height, video_dims.width, bits)?)
                }
            };
            entries.push(Entry { frame: e.frame as u32, payload });
        }
        let rec = AnnotationRecord { video_id: raw.video_id, class: raw.class as u32, entries };
        rec.validate(video_dims)?;
        Ok(rec)
    }
}

fn pixel(v: &Value, ctx: &str) -> Result<Pixel> {
    let c: Vec<i64> = serde_json::from_value(v.clone()).map_err(|_| Error::Format(format!("{ctx}: pixel must be [x,y]")))?;
    if c.len() != 2 {
        bail!(Format, "{ctx}: pixel must be [x,y]");
    }
    if c[0] < 0 || c[1] < 0 || c[0] > u32::MAX as i64 || c[1] > u32::MAX as i64 {
        bail!(Validation, "{ctx}: coordinate ({},{}) out of bounds", c[0], c[1]);
    }
    Ok(Pixel::new(c[0] as u32, c[1] as u32))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    video_id: String,
    class: i64,
    #[serde(default)]
    entries: Vec<RawEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    frame: i64,
    kind: String,
    data: Value,
}

/// Read a JSON-lines annotation file. Blank lines are skipped.
///
/// Duplicate `(video, frame, kind)` triples are rejected across the whole
/// file, not only within a record.
pub fn parse_annotations(path: &Path, dims: impl Fn(&str) -> Option<Dims>) -> Result<Vec<AnnotationRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_annotations_from(BufReader::new(file), dims)
}

pub fn parse_annotations_from(reader: impl BufRead, dims: impl Fn(&str) -> Option<Dims>) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        let rec = AnnotationRecord::from_json(&value, &dims)?;
        for e in &rec.entries {
            if !seen.insert((rec.video_id.clone(), e.frame, e.payload.kind())) {
                bail!(Validation, "video {:?} frame {}: duplicate {} entry", rec.video_id, e.frame, e.payload.kind());
            }
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_annotations(records: &[AnnotationRecord], mut out: impl Write) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_json())?;
    }
    Ok(())
}
