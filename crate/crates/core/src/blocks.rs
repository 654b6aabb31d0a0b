//! Frame-to-block dataset protocol: half-size reduction, zero padding to a
//! 50x50 grid, face-fraction labels and session-disjoint train/test splits.

use crate::dca::{fm_image_unit, ia_image_normalized, DcaEngine};
use crate::raster::GrayImage;
use crate::tensor::Tensor;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Block side in pixels.
pub const BLOCK: usize = 50;

/// Axis-aligned rectangle in pixel coordinates (x right, y down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxF {
    pub x: f32,
    pub y: f32,
    pub w: f32,
    pub h: f32,
}

impl BoxF {
    pub fn area(&self) -> f64 {
        self.w as f64 * self.h as f64
    }
}

/// One annotated source frame.
#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub session_id: String,
    pub frame_id: String,
    /// Grayscale frame, values in [0, 1], original resolution.
    pub image: GrayImage,
    /// Face boxes in original-frame pixels.
    pub face_boxes: Vec<BoxF>,
}

impl FrameRecord {
    pub fn validate(&self) -> Result<()> {
        if self.session_id.is_empty() {
            return Err(Error::Validation("empty session_id".into()));
        }
        if self.image.is_empty() {
            return Err(Error::Validation(format!(
                "{}/{}: empty frame",
                self.session_id, self.frame_id
            )));
        }
        for b in &self.face_boxes {
            let ok = b.w >= 0.0
                && b.h >= 0.0
                && b.x >= 0.0
                && b.y >= 0.0
                && (b.x + b.w) as f64 <= self.image.cols as f64 + 1e-6
                && (b.y + b.h) as f64 <= self.image.rows as f64 + 1e-6;
            if !ok {
                return Err(Error::Validation(format!(
                    "{}/{}: box {b:?} outside {}x{} frame",
                    self.session_id, self.frame_id, self.image.rows, self.image.cols
                )));
            }
        }
        Ok(())
    }
}

/// Input representation fed to the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Gray,
    Ia,
    Fm,
    IaFm,
}

impl Mode {
    pub fn channels(&self) -> usize {
        match self {
            Mode::IaFm => 2,
            _ => 1,
        }
    }

    pub fn needs_dca(&self) -> bool {
        !matches!(self, Mode::Gray)
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gray" => Ok(Mode::Gray),
            "ia" => Ok(Mode::Ia),
            "fm" => Ok(Mode::Fm),
            "ia_fm" | "ia+fm" => Ok(Mode::IaFm),
            other => Err(Error::Parameter(format!(
                "unknown mode '{other}' (expected gray|ia|fm|ia_fm)"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Gray => "gray",
            Mode::Ia => "ia",
            Mode::Fm => "fm",
            Mode::IaFm => "ia_fm",
        })
    }
}

/// One 50x50 training sample: channel-major pixel data plus provenance.
#[derive(Debug, Clone)]
pub struct BlockSample {
    /// Channel-major [c][50][50] values in [0, 1].
    pub data: Vec<f32>,
    pub channels: usize,
    /// Fraction of the block covered by the union of face boxes.
    pub label: f32,
    pub session_id: String,
    pub frame_id: String,
    pub grid_row: usize,
    pub grid_col: usize,
}

/// Dimensions after the 2x downscale (odd trailing row/col dropped).
pub fn downscaled_dims(rows: usize, cols: usize) -> (usize, usize) {
    (rows / 2, cols / 2)
}

/// Round-up to the block grid.
pub fn padded_dims(ds_rows: usize, ds_cols: usize) -> (usize, usize) {
    (
        ds_rows.div_ceil(BLOCK) * BLOCK,
        ds_cols.div_ceil(BLOCK) * BLOCK,
    )
}

/// Boxes scaled by 0.5 and clipped to the downscaled content area.
pub fn scale_boxes_half(boxes: &[BoxF], ds_rows: usize, ds_cols: usize) -> Vec<BoxF> {
    boxes
        .iter()
        .map(|b| {
            let x0 = (b.x * 0.5).clamp(0.0, ds_cols as f32);
            let y0 = (b.y * 0.5).clamp(0.0, ds_rows as f32);
            let x1 = ((b.x + b.w) * 0.5).clamp(0.0, ds_cols as f32);
            let y1 = ((b.y + b.h) * 0.5).clamp(0.0, ds_rows as f32);
            BoxF {
                x: x0,
                y: y0,
                w: (x1 - x0).max(0.0),
                h: (y1 - y0).max(0.0),
            }
        })
        .collect()
}

/// Downscales by exact 2x2 box averaging (odd trailing row/col dropped),
/// zero-pads bottom/right to the next multiple of 50 and rescales boxes by
/// 0.5 (clipped to the downscaled content area).
pub fn preprocess_frame(image: &GrayImage, boxes: &[BoxF]) -> Result<(GrayImage, Vec<BoxF>)> {
    if image.is_empty() {
        return Err(Error::Parameter("preprocess_frame: empty frame".into()));
    }
    let (ds_rows, ds_cols) = downscaled_dims(image.rows, image.cols);
    if ds_rows == 0 || ds_cols == 0 {
        return Err(Error::Parameter(format!(
            "frame {}x{} too small to halve",
            image.rows, image.cols
        )));
    }
    let (pad_rows, pad_cols) = padded_dims(ds_rows, ds_cols);
    let mut out = GrayImage::zeros(pad_rows, pad_cols);
    for r in 0..ds_rows {
        for c in 0..ds_cols {
            let v = 0.25
                * (image.at(2 * r, 2 * c)
                    + image.at(2 * r, 2 * c + 1)
                    + image.at(2 * r + 1, 2 * c)
                    + image.at(2 * r + 1, 2 * c + 1));
            *out.at_mut(r, c) = v;
        }
    }
    Ok((out, scale_boxes_half(boxes, ds_rows, ds_cols)))
}

/// Area of `rect ∩ (∪ boxes)` via a vertical strip sweep (exact for
/// axis-aligned boxes, overlaps counted once).
fn union_area_in_rect(x0: f64, y0: f64, x1: f64, y1: f64, boxes: &[BoxF]) -> f64 {
    let mut clipped: Vec<(f64, f64, f64, f64)> = Vec::new();
    for b in boxes {
        let cx0 = (b.x as f64).max(x0);
        let cy0 = (b.y as f64).max(y0);
        let cx1 = ((b.x + b.w) as f64).min(x1);
        let cy1 = ((b.y + b.h) as f64).min(y1);
        if cx1 > cx0 && cy1 > cy0 {
            clipped.push((cx0, cy0, cx1, cy1));
        }
    }
    if clipped.is_empty() {
        return 0.0;
    }
    let mut xs: Vec<f64> = clipped.iter().flat_map(|b| [b.0, b.2]).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let mut total = 0.0;
    for win in xs.windows(2) {
        let (xa, xb) = (win[0], win[1]);
        if xb <= xa {
            continue;
        }
        let mut ys: Vec<(f64, f64)> = clipped
            .iter()
            .filter(|b| b.0 <= xa && b.2 >= xb)
            .map(|b| (b.1, b.3))
            .collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut covered = 0.0;
        let mut cur: Option<(f64, f64)> = None;
        for (lo, hi) in ys {
            match cur {
                Some((clo, chi)) if lo <= chi => cur = Some((clo, chi.max(hi))),
                Some((clo, chi)) => {
                    covered += chi - clo;
                    cur = Some((lo, hi));
                }
                None => cur = Some((lo, hi)),
            }
        }
        if let Some((clo, chi)) = cur {
            covered += chi - clo;
        }
        total += covered * (xb - xa);
    }
    total
}

/// Face-fraction label for every block of a padded frame, row-major.
pub fn label_grid(rows: usize, cols: usize, boxes: &[BoxF]) -> Result<Vec<f32>> {
    if rows % BLOCK != 0 || cols % BLOCK != 0 {
        return Err(Error::Parameter(format!(
            "frame {rows}x{cols} is not a multiple of {BLOCK}"
        )));
    }
    let (gr, gc) = (rows / BLOCK, cols / BLOCK);
    let mut labels = Vec::with_capacity(gr * gc);
    let block_area = (BLOCK * BLOCK) as f64;
    for r in 0..gr {
        for c in 0..gc {
            let a = union_area_in_rect(
                (c * BLOCK) as f64,
                (r * BLOCK) as f64,
                ((c + 1) * BLOCK) as f64,
                ((r + 1) * BLOCK) as f64,
                boxes,
            );
            labels.push((a / block_area) as f32);
        }
    }
    Ok(labels)
}

/// Channel planes of a padded frame under the given input mode. DCA runs
/// once on the full frame so block borders carry no extra filtering
/// artifacts.
pub fn channel_planes(image: &GrayImage, mode: Mode, engine: &DcaEngine) -> Result<Vec<GrayImage>> {
    Ok(match mode {
        Mode::Gray => vec![image.clone()],
        Mode::Ia => {
            let d = engine.decompose(image)?;
            vec![ia_image_normalized(&d)]
        }
        Mode::Fm => {
            let d = engine.decompose(image)?;
            vec![fm_image_unit(&d)]
        }
        Mode::IaFm => {
            let d = engine.decompose(image)?;
            vec![ia_image_normalized(&d), fm_image_unit(&d)]
        }
    })
}

/// Cuts a padded frame into 50x50 samples (row-major grid order).
pub fn tile_blocks(
    image: &GrayImage,
    boxes: &[BoxF],
    mode: Mode,
    engine: &DcaEngine,
    session_id: &str,
    frame_id: &str,
) -> Result<Vec<BlockSample>> {
    let labels = label_grid(image.rows, image.cols, boxes)?;
    let planes = channel_planes(image, mode, engine)?;
    Ok(cut_blocks(&planes, &labels, session_id, frame_id))
}

fn cut_blocks(
    planes: &[GrayImage],
    labels: &[f32],
    session_id: &str,
    frame_id: &str,
) -> Vec<BlockSample> {
    let (rows, cols) = (planes[0].rows, planes[0].cols);
    let (gr, gc) = (rows / BLOCK, cols / BLOCK);
    let mut out = Vec::with_capacity(gr * gc);
    for r in 0..gr {
        for c in 0..gc {
            let mut data = Vec::with_capacity(planes.len() * BLOCK * BLOCK);
            for plane in planes {
                for br in 0..BLOCK {
                    let base = (r * BLOCK + br) * cols + c * BLOCK;
                    data.extend_from_slice(&plane.data[base..base + BLOCK]);
                }
            }
            out.push(BlockSample {
                data,
                channels: planes.len(),
                label: labels[r * gc + c],
                session_id: session_id.to_string(),
                frame_id: frame_id.to_string(),
                grid_row: r,
                grid_col: c,
            });
        }
    }
    out
}

/// Preprocess + tile one source frame.
pub fn tile_frame(rec: &FrameRecord, mode: Mode, engine: &DcaEngine) -> Result<Vec<BlockSample>> {
    rec.validate()?;
    let (padded, boxes) = preprocess_frame(&rec.image, &rec.face_boxes)?;
    tile_blocks(&padded, &boxes, mode, engine, &rec.session_id, &rec.frame_id)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub frame: PathBuf,
    pub boxes: PathBuf,
    pub session_id: String,
    pub frame_id: String,
}

/// Train/test file listing. Paths are relative to the manifest location.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub train: Vec<ManifestEntry>,
    pub test: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        m.validate_disjoint()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Hard-fails when any session appears in both splits.
    pub fn validate_disjoint(&self) -> Result<()> {
        let train: std::collections::BTreeSet<&str> =
            self.train.iter().map(|e| e.session_id.as_str()).collect();
        for e in &self.test {
            if train.contains(e.session_id.as_str()) {
                return Err(Error::Validation(format!(
                    "session '{}' appears in both train and test splits",
                    e.session_id
                )));
            }
        }
        Ok(())
    }
}

fn load_boxes(path: &Path) -> Result<Vec<BoxF>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn load_frame_record(entry: &ManifestEntry, base: &Path) -> Result<FrameRecord> {
    let rec = FrameRecord {
        session_id: entry.session_id.clone(),
        frame_id: entry.frame_id.clone(),
        image: GrayImage::load(&base.join(&entry.frame))?,
        face_boxes: load_boxes(&base.join(&entry.boxes))?,
    };
    rec.validate()?;
    Ok(rec)
}

/// Tiles both splits of a manifest. Frames fan out across the rayon pool and
/// merge back in manifest order, so the output is schedule-independent.
pub fn build_dataset(
    manifest: &Manifest,
    base: &Path,
    mode: Mode,
    engine: &DcaEngine,
) -> Result<(Vec<BlockSample>, Vec<BlockSample>)> {
    manifest.validate_disjoint()?;
    let tile_split = |entries: &[ManifestEntry]| -> Result<Vec<BlockSample>> {
        let per_frame: Vec<Result<Vec<BlockSample>>> = entries
            .par_iter()
            .map(|e| tile_frame(&load_frame_record(e, base)?, mode, engine))
            .collect();
        let mut out = Vec::new();
        for frame in per_frame {
            out.extend(frame?);
        }
        Ok(out)
    };
    Ok((tile_split(&manifest.train)?, tile_split(&manifest.test)?))
}

/// Tiles in-memory records (already split) in input order.
pub fn build_from_records(
    records: &[FrameRecord],
    mode: Mode,
    engine: &DcaEngine,
) -> Result<Vec<BlockSample>> {
    let per_frame: Vec<Result<Vec<BlockSample>>> = records
        .par_iter()
        .map(|rec| tile_frame(rec, mode, engine))
        .collect();
    let mut out = Vec::new();
    for frame in per_frame {
        out.extend(frame?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// On-disk dataset: one channel-plane tensor per frame plus an index.

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFrameMeta {
    pub session_id: String,
    pub frame_id: String,
    pub split: String,
    pub tensor: String,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub labels: Vec<f32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub mode: Mode,
    pub channels: usize,
    pub block: usize,
    pub filterbank: crate::filterbank::FilterbankConfig,
    pub dca: crate::dca::DcaConfig,
    pub frames: Vec<DatasetFrameMeta>,
}

/// Incremental writer: call `add_frame` per frame (any split order), then
/// `finish` to emit `index.json`.
pub struct DatasetWriter {
    dir: PathBuf,
    index: DatasetIndex,
}

impl DatasetWriter {
    pub fn create(dir: &Path, mode: Mode, engine: &DcaEngine) -> Result<Self> {
        std::fs::create_dir_all(dir.join("frames")).map_err(|e| Error::io(dir, e))?;
        Ok(DatasetWriter {
            dir: dir.to_path_buf(),
            index: DatasetIndex {
                mode,
                channels: mode.channels(),
                block: BLOCK,
                filterbank: engine.bank().config.clone(),
                dca: engine.config(),
                frames: Vec::new(),
            },
        })
    }

    /// Writes the frame's channel planes as a [C, H, W] tensor and records
    /// its label grid.
    pub fn add_frame(
        &mut self,
        rec: &FrameRecord,
        split: &str,
        engine: &DcaEngine,
    ) -> Result<Vec<BlockSample>> {
        rec.validate()?;
        let (padded, boxes) = preprocess_frame(&rec.image, &rec.face_boxes)?;
        let labels = label_grid(padded.rows, padded.cols, &boxes)?;
        let planes = channel_planes(&padded, self.index.mode, engine)?;
        self.add_planes(&rec.session_id, &rec.frame_id, split, &planes, &labels)
    }

    /// Same as `add_frame` for planes/labels computed elsewhere (lets
    /// callers fan the per-frame work out before writing in order).
    pub fn add_planes(
        &mut self,
        session_id: &str,
        frame_id: &str,
        split: &str,
        planes: &[GrayImage],
        labels: &[f32],
    ) -> Result<Vec<BlockSample>> {
        let (rows, cols) = (planes[0].rows, planes[0].cols);
        let name = format!("frames/{session_id}_{frame_id}.aft");
        let mut data = Vec::with_capacity(planes.len() * rows * cols);
        for p in planes {
            data.extend_from_slice(&p.data);
        }
        Tensor::new(vec![planes.len(), rows, cols], data)?.save(&self.dir.join(&name))?;
        self.index.frames.push(DatasetFrameMeta {
            session_id: session_id.to_string(),
            frame_id: frame_id.to_string(),
            split: split.to_string(),
            tensor: name,
            grid_rows: rows / BLOCK,
            grid_cols: cols / BLOCK,
            labels: labels.to_vec(),
        });
        Ok(cut_blocks(planes, labels, session_id, frame_id))
    }

    pub fn finish(self) -> Result<PathBuf> {
        let path = self.dir.join("index.json");
        let json =
            serde_json::to_string_pretty(&self.index).map_err(|e| Error::json(&path, e))?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Loads a dataset directory back into block samples per split.
pub fn load_dataset(
    index_path: &Path,
) -> Result<(DatasetIndex, Vec<BlockSample>, Vec<BlockSample>)> {
    let text = std::fs::read_to_string(index_path).map_err(|e| Error::io(index_path, e))?;
    let index: DatasetIndex =
        serde_json::from_str(&text).map_err(|e| Error::json(index_path, e))?;
    let base = index_path.parent().unwrap_or(Path::new("."));
    let mut train = Vec::new();
    let mut test = Vec::new();
    for fm in &index.frames {
        let t = Tensor::load(&base.join(&fm.tensor))?;
        if t.dims.len() != 3 || t.dims[0] != index.channels {
            return Err(Error::Validation(format!(
                "{}: expected [C, H, W] tensor with C = {}",
                fm.tensor, index.channels
            )));
        }
        let (rows, cols) = (t.dims[1], t.dims[2]);
        if rows != fm.grid_rows * BLOCK || cols != fm.grid_cols * BLOCK {
            return Err(Error::Validation(format!(
                "{}: dims {}x{} do not match grid {}x{}",
                fm.tensor, rows, cols, fm.grid_rows, fm.grid_cols
            )));
        }
        let plane_len = rows * cols;
        let planes: Vec<GrayImage> = (0..index.channels)
            .map(|ci| GrayImage {
                rows,
                cols,
                data: t.data[ci * plane_len..(ci + 1) * plane_len].to_vec(),
            })
            .collect();
        let samples = cut_blocks(&planes, &fm.labels, &fm.session_id, &fm.frame_id);
        match fm.split.as_str() {
            "train" => train.extend(samples),
            "test" => test.extend(samples),
            other => {
                return Err(Error::Validation(format!(
                    "{}: unknown split '{other}'",
                    fm.tensor
                )))
            }
        }
    }
    Ok((index, train, test))
}
