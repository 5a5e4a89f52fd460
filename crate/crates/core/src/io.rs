//! File formats: frame ingestion (image directories and the raw planar RGB
//! stream), the suspicion event log, ground truth and report documents, and
//! raster output.
//!
//! Raw stream layout, all integers little-endian:
//!
//! ```text
//! offset 0   magic  b"RGBP"
//!        4   u32    width
//!        8   u32    height
//!        12  u32    frame count
//!        16  u8     bit depth (always 8)
//!        17  [u8;3] reserved, zero
//!        20  frames: width*height red bytes, then green, then blue
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channels::Frame;
use crate::error::{Error, Result};
use crate::ior::Region;
use crate::metrics::{EvalReport, GroundTruth};
use crate::spectral::SaliencyMap;
use crate::tracker::{SuspicionEvent, TrackRecord};

pub const RAW_MAGIC: [u8; 4] = *b"RGBP";
pub const RAW_HEADER_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawHeader {
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
}

impl RawHeader {
    pub fn to_bytes(&self) -> [u8; RAW_HEADER_LEN] {
        let mut b = [0u8; RAW_HEADER_LEN];
        b[..4].copy_from_slice(&RAW_MAGIC);
        b[4..8].copy_from_slice(&self.width.to_le_bytes());
        b[8..12].copy_from_slice(&self.height.to_le_bytes());
        b[12..16].copy_from_slice(&self.frame_count.to_le_bytes());
        b[16] = 8;
        b
    }

    pub fn parse(b: &[u8; RAW_HEADER_LEN]) -> Result<Self> {
        if b[..4] != RAW_MAGIC {
            return Err(Error::InvalidInput("not a raw RGB stream (bad magic)".into()));
        }
        if b[16] != 8 {
            return Err(Error::InvalidInput(format!(
                "unsupported bit depth {}",
                b[16]
            )));
        }
        let u = |i: usize| u32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]]);
        let h = RawHeader {
            width: u(4),
            height: u(8),
            frame_count: u(12),
        };
        if h.width == 0 || h.height == 0 {
            return Err(Error::InvalidInput("raw stream has a zero dimension".into()));
        }
        Ok(h)
    }

    fn plane_len(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Streams frames from a raw planar RGB file.
pub struct RawReader<R> {
    inner: R,
    header: RawHeader,
    next: u32,
    buf: Vec<u8>,
}

impl RawReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        RawReader::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> RawReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut hb = [0u8; RAW_HEADER_LEN];
        inner.read_exact(&mut hb)?;
        let header = RawHeader::parse(&hb)?;
        Ok(RawReader {
            inner,
            header,
            next: 0,
            buf: vec![0; header.plane_len() * 3],
        })
    }

    pub fn header(&self) -> RawHeader {
        self.header
    }
}

impl<R: Read> Iterator for RawReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.header.frame_count {
            return None;
        }
        let index = self.next as u64;
        self.next += 1;
        if let Err(e) = self.inner.read_exact(&mut self.buf) {
            self.next = self.header.frame_count;
            return Some(Err(e.into()));
        }
        let n = self.header.plane_len();
        let (r, rest) = self.buf.split_at(n);
        let (g, b) = rest.split_at(n);
        let pixels = (0..n)
            .map(|i| [r[i] as f64 / 255.0, g[i] as f64 / 255.0, b[i] as f64 / 255.0])
            .collect();
        Some(Frame::new(
            self.header.width as usize,
            self.header.height as usize,
            pixels,
            index,
        ))
    }
}

/// Writes frames in the raw planar format.
pub struct RawWriter<W: Write> {
    inner: W,
    header: RawHeader,
    written: u32,
}

impl RawWriter<BufWriter<File>> {
    pub fn create(path: &Path, header: RawHeader) -> Result<Self> {
        RawWriter::new(BufWriter::new(File::create(path)?), header)
    }
}

impl<W: Write> RawWriter<W> {
    pub fn new(mut inner: W, header: RawHeader) -> Result<Self> {
        inner.write_all(&header.to_bytes())?;
        Ok(RawWriter {
            inner,
            header,
            written: 0,
        })
    }

    pub fn write_frame(&mut self, frame: &Frame) -> Result<()> {
        if (frame.width(), frame.height())
            != (self.header.width as usize, self.header.height as usize)
        {
            return Err(Error::InvalidInput("frame size differs from stream header".into()));
        }
        if self.written >= self.header.frame_count {
            return Err(Error::InvalidState("stream already holds every frame".into()));
        }
        let rgb = frame.to_rgb8();
        for c in 0..3 {
            let plane: Vec<u8> = rgb.iter().skip(c).step_by(3).copied().collect();
            self.inner.write_all(&plane)?;
        }
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.frame_count {
            return Err(Error::InvalidState(format!(
                "header promises {} frames, wrote {}",
                self.header.frame_count, self.written
            )));
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Lexicographically ordered image files of a directory.
pub fn list_image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| {
                        matches!(
                            e.to_ascii_lowercase().as_str(),
                            "png" | "jpg" | "jpeg" | "bmp" | "ppm" | "pnm"
                        )
                    })
                    .unwrap_or(false)
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn read_image_frame(path: &Path, index: u64) -> Result<Frame> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    Frame::from_rgb8(w as usize, h as usize, img.as_raw(), index)
}

/// Lazily decoded frames from either an image directory or a raw stream.
pub enum FrameSource {
    Images { files: Vec<PathBuf>, next: usize },
    Raw(RawReader<BufReader<File>>),
}

impl FrameSource {
    pub fn open(path: &Path) -> Result<Self> {
        if path.is_dir() {
            let files = list_image_files(path)?;
            if files.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "no image files in {}",
                    path.display()
                )));
            }
            Ok(FrameSource::Images { files, next: 0 })
        } else {
            Ok(FrameSource::Raw(RawReader::open(path)?))
        }
    }
}

impl Iterator for FrameSource {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            FrameSource::Images { files, next } => {
                let path = files.get(*next)?;
                let index = *next as u64;
                *next += 1;
                Some(read_image_frame(path, index))
            }
            FrameSource::Raw(r) => r.next(),
        }
    }
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLine {
    pub frame_index: u64,
    pub track_id: u64,
    pub delta_speed: f64,
    pub threshold: f64,
    pub center_x: f64,
    pub center_y: f64,
}

impl From<&SuspicionEvent> for EventLine {
    fn from(e: &SuspicionEvent) -> Self {
        EventLine {
            frame_index: e.frame_index,
            track_id: e.track_id,
            delta_speed: e.delta_speed,
            threshold: e.threshold_used,
            center_x: e.center.0,
            center_y: e.center.1,
        }
    }
}

impl From<EventLine> for SuspicionEvent {
    fn from(l: EventLine) -> Self {
        SuspicionEvent {
            frame_index: l.frame_index,
            track_id: l.track_id,
            delta_speed: l.delta_speed,
            threshold_used: l.threshold,
            center: (l.center_x, l.center_y),
        }
    }
}

/// Appends events to `out` as JSON lines.
pub fn write_events<W: Write>(out: &mut W, events: &[SuspicionEvent]) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut *out, &EventLine::from(e))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events<R: BufRead>(input: R) -> Result<Vec<SuspicionEvent>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str::<EventLine>(&line)?.into());
    }
    Ok(out)
}

/// Snapshot row for one stored track, in the event-log line format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackLine {
    pub frame_index: u64,
    pub track_id: u64,
    pub size: usize,
    pub center_x: f64,
    pub center_y: f64,
    pub speed: Option<f64>,
    pub appear_count: u64,
    pub last_seen_frame: u64,
    pub first_seen_frame: u64,
}

pub fn write_tracks<W: Write>(out: &mut W, frame_index: u64, records: &[TrackRecord]) -> Result<()> {
    for r in records {
        let line = TrackLine {
            frame_index,
            track_id: r.id,
            size: r.size,
            center_x: r.last_center.0,
            center_y: r.last_center.1,
            speed: r.speed,
            appear_count: r.appear_count,
            last_seen_frame: r.last_seen_frame,
            first_seen_frame: r.first_seen_frame,
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_ground_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, truth)?;
    w.flush()?;
    Ok(())
}

pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(report)? + "\n")?;
    Ok(())
}

pub fn write_saliency_png(path: &Path, map: &SaliencyMap) -> Result<()> {
    let img = image::GrayImage::from_raw(map.width() as u32, map.height() as u32, map.to_gray8())
        .expect("buffer matches map size");
    img.save(path)?;
    Ok(())
}

pub const RED: [u8; 3] = [255, 0, 0];
pub const BLUE: [u8; 3] = [0, 0, 255];

/// Working frame upscaled by `scale` with region boxes outlined in red and
/// suspicious tracks in blue.
pub fn annotate(
    frame: &Frame,
    regions: &[Region],
    suspicious: &[(f64, f64, f64, f64)],
    scale: u32,
) -> image::RgbImage {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let rgb = frame.to_rgb8();
    let mut img = image::RgbImage::from_fn(w * scale, h * scale, |x, y| {
        let i = ((y / scale) * w + x / scale) as usize * 3;
        image::Rgb([rgb[i], rgb[i + 1], rgb[i + 2]])
    });
    for r in regions {
        let (x0, y0, x1, y1) = r.bbox;
        outline(&mut img, scale, (x0 as f64, y0 as f64, x1 as f64, y1 as f64), RED);
    }
    for &b in suspicious {
        outline(&mut img, scale, b, BLUE);
    }
    img
}

/// Draws the pixel-aligned outline around working-pixel box `b` (inclusive).
fn outline(img: &mut image::RgbImage, scale: u32, b: (f64, f64, f64, f64), color: [u8; 3]) {
    let (iw, ih) = (img.width() as i64, img.height() as i64);
    let s = scale as f64;
    let x0 = ((b.0 * s).floor() as i64).clamp(0, iw - 1);
    let y0 = ((b.1 * s).floor() as i64).clamp(0, ih - 1);
    let x1 = (((b.2 + 1.0) * s).ceil() as i64 - 1).clamp(0, iw - 1);
    let y1 = (((b.3 + 1.0) * s).ceil() as i64 - 1).clamp(0, ih - 1);
    let mut put = |x: i64, y: i64| img.put_pixel(x as u32, y as u32, image::Rgb(color));
    for x in x0..=x1 {
        put(x, y0);
        put(x, y1);
    }
    for y in y0..=y1 {
        put(x0, y);
        put(x1, y);
    }
}
