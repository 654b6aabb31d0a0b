//! End-to-end experiment driver: synthesize a face corpus, build gray and
//! FM block datasets, train the reduced LeNet on each, score both with
//! ROC/AUC and emit comparison artifacts.
//!
//! Determinism contract: for a fixed seed every artifact except
//! `timing.json` is byte-identical across runs (wall-clock measurements are
//! the only nondeterministic outputs, so they live in their own file).

use crate::blocks::{
    channel_planes, label_grid, load_frame_record, preprocess_frame, BlockSample, DatasetWriter,
    Manifest, ManifestEntry, Mode, BLOCK,
};
use crate::dca::{Boundary, DcaConfig, DcaEngine, ScaleSelection};
use crate::eval::{roc_curve, roc_svg, write_report_json, write_roc_csv, RocReport};
use crate::filterbank::{build_filterbank, export_dir, FilterbankConfig};
use crate::nn::{count_params, NetConfig, PoolGeometry, ReducedLeNet};
use crate::raster::GrayImage;
use crate::synthdata::{gen_face_dataset, write_corpus, FacesConfig};
use crate::train::{split_validation, train, LossKind, OptimizerKind, TrainConfig, TrainHistory};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Parameter count the architecture table reports; the faithful
/// implementation measures a different value and the summary carries both.
pub const PAPER_PARAM_CLAIM: usize = 9775;

#[derive(Debug, Clone)]
pub struct ReproduceConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub sessions_train: usize,
    pub sessions_test: usize,
    pub frames_per_session: usize,
    pub frame_width: usize,
    pub frame_height: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss: LossKind,
    pub tau_gt: f32,
    pub noise_sigma_min: f64,
    pub noise_sigma_max: f64,
    pub mask_sigma: f64,
    /// Channels competing in the DCA argmax when building IA/FM datasets.
    /// The bandpass-only selection keeps the FM image luminance-invariant.
    pub dca_scales: ScaleSelection,
    pub filterbank: FilterbankConfig,
}

impl ReproduceConfig {
    pub fn new(out_dir: PathBuf, seed: u64) -> Self {
        ReproduceConfig {
            seed,
            out_dir,
            sessions_train: 12,
            sessions_test: 6,
            frames_per_session: 12,
            frame_width: 900,
            frame_height: 500,
            epochs: 20,
            batch_size: 32,
            learning_rate: 1e-3,
            loss: LossKind::Mse,
            tau_gt: crate::eval::DEFAULT_TAU_GT,
            noise_sigma_min: 0.035,
            noise_sigma_max: 0.065,
            mask_sigma: 0.05,
            dca_scales: ScaleSelection::Second,
            filterbank: FilterbankConfig::default(),
        }
    }
}

/// Outcome of one trained mode.
#[derive(Debug, Clone)]
pub struct ModeOutcome {
    pub mode: Mode,
    pub roc: RocReport,
    pub history: TrainHistory,
    pub train_blocks: usize,
    pub val_blocks: usize,
    pub test_blocks: usize,
}

impl ModeOutcome {
    pub fn sec_per_epoch(&self) -> f64 {
        let n = self.history.epochs.len().max(1);
        self.history.epochs.iter().map(|e| e.seconds).sum::<f64>() / n as f64
    }
}

#[derive(Debug, Clone)]
pub struct ReproduceSummary {
    pub gray: ModeOutcome,
    pub fm: ModeOutcome,
    pub measured_params: usize,
    pub corpus_positive_rate: f64,
    pub stage_seconds: Vec<(String, f64)>,
}

#[derive(Serialize)]
struct SummaryJson {
    auc_gray: f64,
    auc_fm: f64,
    params: ParamsJson,
    paper_param_claim: usize,
    measured: usize,
    tau_gt: f64,
    seed: u64,
    blocks: BlocksJson,
    corpus_positive_rate: f64,
}

#[derive(Serialize)]
struct ParamsJson {
    c_in_1_pool_23: usize,
    c_in_2_pool_23: usize,
    c_in_1_pool_21: usize,
}

#[derive(Serialize)]
struct BlocksJson {
    train: usize,
    val: usize,
    test: usize,
}

#[derive(Serialize)]
struct TimingJson {
    sec_per_epoch_gray: f64,
    sec_per_epoch_fm: f64,
    epoch_seconds_gray: Vec<f64>,
    epoch_seconds_fm: Vec<f64>,
    stage_seconds: Vec<(String, f64)>,
}

/// Builds a dataset directory from a manifest; frames are processed in
/// parallel chunks and written in manifest order. Returns (train, test)
/// samples.
pub fn build_dataset_dir(
    manifest: &Manifest,
    base: &Path,
    mode: Mode,
    engine: &DcaEngine,
    out_dir: &Path,
) -> Result<(Vec<BlockSample>, Vec<BlockSample>)> {
    manifest.validate_disjoint()?;
    let mut writer = DatasetWriter::create(out_dir, mode, engine)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    let jobs: Vec<(&ManifestEntry, &str)> = manifest
        .train
        .iter()
        .map(|e| (e, "train"))
        .chain(manifest.test.iter().map(|e| (e, "test")))
        .collect();
    for chunk in jobs.chunks(16) {
        let processed: Vec<Result<_>> = chunk
            .par_iter()
            .map(|(entry, split)| {
                let rec = load_frame_record(entry, base)?;
                let (padded, boxes) = preprocess_frame(&rec.image, &rec.face_boxes)?;
                let labels = label_grid(padded.rows, padded.cols, &boxes)?;
                let planes = channel_planes(&padded, mode, engine)?;
                Ok((rec.session_id, rec.frame_id, *split, planes, labels))
            })
            .collect();
        for item in processed {
            let (session_id, frame_id, split, planes, labels) = item?;
            let samples = writer.add_planes(&session_id, &frame_id, split, &planes, &labels)?;
            match split {
                "train" => train.extend(samples),
                _ => test.extend(samples),
            }
        }
    }
    writer.finish()?;
    Ok((train, test))
}

/// Ordered test-set predictions.
pub fn predict(model: &ReducedLeNet<f32>, samples: &[BlockSample]) -> Vec<f32> {
    samples
        .par_iter()
        .map(|s| model.forward(&s.data))
        .collect()
}

fn frame_grids(samples: &[BlockSample]) -> Vec<(String, String, usize, usize)> {
    let mut frames: Vec<(String, String, usize, usize)> = Vec::new();
    for s in samples {
        match frames.last_mut() {
            Some((sid, fid, gr, gc)) if sid == &s.session_id && fid == &s.frame_id => {
                *gr = (*gr).max(s.grid_row + 1);
                *gc = (*gc).max(s.grid_col + 1);
            }
            _ => frames.push((
                s.session_id.clone(),
                s.frame_id.clone(),
                s.grid_row + 1,
                s.grid_col + 1,
            )),
        }
    }
    frames
}

/// Writes eval artifacts (roc.csv, report.json, per-frame overlays) for one
/// mode's test predictions.
pub fn write_eval_artifacts(
    dir: &Path,
    roc: &RocReport,
    samples: &[BlockSample],
    preds: &[f32],
    overlay_threshold: f32,
    max_overlays: usize,
) -> Result<()> {
    std::fs::create_dir_all(dir.join("overlays")).map_err(|e| Error::io(dir, e))?;
    write_roc_csv(roc, &dir.join("roc.csv"))?;
    write_report_json(roc, &dir.join("report.json"), None)?;
    let mut offset = 0usize;
    for (sid, fid, gr, gc) in frame_grids(samples).into_iter().take(max_overlays) {
        let n = gr * gc;
        let frame_samples = &samples[offset..offset + n];
        let frame_preds = &preds[offset..offset + n];
        let labels: Vec<f32> = frame_samples.iter().map(|s| s.label).collect();
        // reassemble the first channel plane as the overlay base
        let mut base = GrayImage::zeros(gr * BLOCK, gc * BLOCK);
        for s in frame_samples {
            for y in 0..BLOCK {
                for x in 0..BLOCK {
                    *base.at_mut(s.grid_row * BLOCK + y, s.grid_col * BLOCK + x) =
                        s.data[y * BLOCK + x];
                }
            }
        }
        let img = crate::eval::render_overlay(
            &base,
            frame_preds,
            &labels,
            overlay_threshold,
            crate::eval::DEFAULT_TAU_GT,
        )?;
        let path = dir.join(format!("overlays/{sid}_{fid}.png"));
        img.save(&path)
            .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        offset += n;
    }
    Ok(())
}

fn run_mode(
    cfg: &ReproduceConfig,
    mode: Mode,
    manifest: &Manifest,
    corpus_dir: &Path,
    engine: &DcaEngine,
    stage_seconds: &mut Vec<(String, f64)>,
) -> Result<ModeOutcome> {
    let t0 = Instant::now();
    let (train_all, test_samples) = build_dataset_dir(
        manifest,
        corpus_dir,
        mode,
        engine,
        &cfg.out_dir.join(format!("dataset_{mode}")),
    )?;
    stage_seconds.push((format!("dataset_{mode}"), t0.elapsed().as_secs_f64()));

    let (train_samples, val_samples) = split_validation(train_all);
    let train_cfg = TrainConfig {
        mode,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        optimizer: OptimizerKind::default(),
        loss: cfg.loss,
        seed: crate::rng::derive_seed(cfg.seed, &format!("train/{mode}")),
        pool: PoolGeometry::Table23,
    };
    let t0 = Instant::now();
    let (model, history) = train(&train_cfg, &train_samples, &val_samples)?;
    stage_seconds.push((format!("train_{mode}"), t0.elapsed().as_secs_f64()));

    let train_dir = cfg.out_dir.join(format!("train_{mode}"));
    model.save(&train_dir)?;
    history.save_csv_without_timing(&train_dir.join("history.csv"))?;
    let cfg_path = train_dir.join("train_config.json");
    let cfg_json =
        serde_json::to_string_pretty(&train_cfg).map_err(|e| Error::json(&cfg_path, e))?;
    std::fs::write(&cfg_path, cfg_json).map_err(|e| Error::io(&cfg_path, e))?;

    let preds = predict(&model, &test_samples);
    let labels: Vec<f32> = test_samples.iter().map(|s| s.label).collect();
    let roc = roc_curve(&preds, &labels, cfg.tau_gt)?;
    write_eval_artifacts(
        &cfg.out_dir.join(format!("eval_{mode}")),
        &roc,
        &test_samples,
        &preds,
        0.5,
        4,
    )?;
    Ok(ModeOutcome {
        mode,
        roc,
        history,
        train_blocks: train_samples.len(),
        val_blocks: val_samples.len(),
        test_blocks: test_samples.len(),
    })
}

/// Runs the full desk-scale experiment and writes every artifact under
/// `cfg.out_dir`.
pub fn run_reproduce(cfg: &ReproduceConfig) -> Result<ReproduceSummary> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let mut stage_seconds = Vec::new();

    let fb = build_filterbank(&cfg.filterbank)?;
    export_dir(&fb, &cfg.out_dir.join("filterbank"))?;

    let faces_cfg = FacesConfig {
        sessions: cfg.sessions_train + cfg.sessions_test,
        frames_per_session: cfg.frames_per_session,
        width: cfg.frame_width,
        height: cfg.frame_height,
        seed: cfg.seed,
        noise_sigma_min: cfg.noise_sigma_min,
        noise_sigma_max: cfg.noise_sigma_max,
        mask_sigma: cfg.mask_sigma,
    };
    let t0 = Instant::now();
    let records = gen_face_dataset(&faces_cfg)?;
    let corpus_dir = cfg.out_dir.join("corpus");
    let manifest = write_corpus(&records, &faces_cfg, cfg.sessions_train, &corpus_dir)?;
    // corpus positive rate, measured on what the pipeline will see
    let (mut pos, mut total) = (0usize, 0usize);
    for rec in &records {
        let (dr, dc) = crate::blocks::downscaled_dims(rec.image.rows, rec.image.cols);
        let (pr, pc) = crate::blocks::padded_dims(dr, dc);
        let labels = label_grid(
            pr,
            pc,
            &crate::blocks::scale_boxes_half(&rec.face_boxes, dr, dc),
        )?;
        pos += labels.iter().filter(|&&l| l >= cfg.tau_gt).count();
        total += labels.len();
    }
    drop(records);
    stage_seconds.push(("corpus".to_string(), t0.elapsed().as_secs_f64()));

    let engine = DcaEngine::new(
        fb,
        DcaConfig {
            boundary: Boundary::Reflect,
            scales: cfg.dca_scales,
        },
    );
    let gray = run_mode(cfg, Mode::Gray, &manifest, &corpus_dir, &engine, &mut stage_seconds)?;
    let fm = run_mode(cfg, Mode::Fm, &manifest, &corpus_dir, &engine, &mut stage_seconds)?;

    let svg = roc_svg(&[
        (&fm.roc, "FM component", "red"),
        (&gray.roc, "original image", "blue"),
    ]);
    let svg_path = cfg.out_dir.join("roc_compare.svg");
    std::fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;

    let measured_params = count_params(&NetConfig {
        c_in: 1,
        pool: PoolGeometry::Table23,
    });
    let summary = SummaryJson {
        auc_gray: gray.roc.auc,
        auc_fm: fm.roc.auc,
        params: ParamsJson {
            c_in_1_pool_23: measured_params,
            c_in_2_pool_23: count_params(&NetConfig {
                c_in: 2,
                pool: PoolGeometry::Table23,
            }),
            c_in_1_pool_21: count_params(&NetConfig {
                c_in: 1,
                pool: PoolGeometry::Valid21,
            }),
        },
        paper_param_claim: PAPER_PARAM_CLAIM,
        measured: measured_params,
        tau_gt: cfg.tau_gt as f64,
        seed: cfg.seed,
        blocks: BlocksJson {
            train: gray.train_blocks,
            val: gray.val_blocks,
            test: gray.test_blocks,
        },
        corpus_positive_rate: pos as f64 / total as f64,
    };
    let path = cfg.out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::json(&path, e))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;

    let timing = TimingJson {
        sec_per_epoch_gray: gray.sec_per_epoch(),
        sec_per_epoch_fm: fm.sec_per_epoch(),
        epoch_seconds_gray: gray.history.epochs.iter().map(|e| e.seconds).collect(),
        epoch_seconds_fm: fm.history.epochs.iter().map(|e| e.seconds).collect(),
        stage_seconds: stage_seconds.clone(),
    };
    let path = cfg.out_dir.join("timing.json");
    let json = serde_json::to_string_pretty(&timing).map_err(|e| Error::json(&path, e))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;

    Ok(ReproduceSummary {
        gray,
        fm,
        measured_params,
        corpus_positive_rate: pos as f64 / total as f64,
        stage_seconds,
    })
}
