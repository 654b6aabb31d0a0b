//! Deterministic synthetic corpora.
//!
//! Two generators: chirp frames with analytically known phase (oracles for
//! the DCA path) and a face-detection corpus where the class signal lives in
//! phase structure rather than intensity statistics.
//!
//! The face generator is deliberately intensity-uninformative. Faces are
//! elliptical patches of oriented mid-band texture whose mean matches the
//! local background exactly (the carrier is mean-corrected under its
//! envelope) and whose variance replaces, rather than adds to, background
//! texture of the same spectral band: the background carries isotropic
//! ring noise band-limited to the carrier annulus, and inside an ellipse
//! that noise is mixed out with weight sqrt(1 - env^2) while the stripe
//! amplitude is calibrated so the post-downscale variance equals what was
//! displaced. A white masking noise covers everything, faces included.
//! Per-block means, variances and even radial spectra therefore carry no
//! label signal; only the angular phase coherence of the texture does -
//! which is precisely what the oriented filterbank plus dominant-component
//! phase exposes. Do not "fix" the generator into an intensity-separable
//! task: the whole experiment rests on this.

use crate::blocks::{
    downscaled_dims, label_grid, padded_dims, scale_boxes_half, BoxF, FrameRecord, Manifest,
    ManifestEntry,
};
use crate::eval::DEFAULT_TAU_GT;
use crate::raster::GrayImage;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

// ---------------------------------------------------------------------------
// Chirp oracle frames

/// Amplitude profile of a chirp frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChirpAmplitude {
    /// a(x, y) = 1.
    Unit,
    /// a(x, y) = base + depth * sin(2*pi*y / rows), slowly varying across
    /// rows.
    SineY { base: f64, depth: f64 },
}

/// Chirp frame with exact ground truth.
#[derive(Debug, Clone)]
pub struct ChirpFrame {
    /// a(x,y) * cos(phi(x)), values in [-1, 1] (zero-mean test raster; remap
    /// to [0, 1] only for 8-bit export).
    pub image: GrayImage,
    /// phi(x, y) per pixel.
    pub phase: Vec<f64>,
    /// a(x, y) per pixel.
    pub amplitude: Vec<f64>,
    pub omega0: f64,
    pub chirp_rate: f64,
}

/// image = a(x,y) * cos(phi) with phi = omega0*x + chirp_rate/2 * x^2.
/// The instantaneous frequency omega0 + chirp_rate*x must stay inside the
/// filterbank coverage band (0.2*pi, 0.9*pi) across the frame.
pub fn gen_chirp_frame(
    rows: usize,
    cols: usize,
    omega0: f64,
    chirp_rate: f64,
    amplitude: ChirpAmplitude,
    _seed: u64,
) -> Result<ChirpFrame> {
    if rows == 0 || cols == 0 {
        return Err(Error::Parameter("gen_chirp_frame: empty frame".into()));
    }
    let lo = 0.2 * std::f64::consts::PI;
    let hi = 0.9 * std::f64::consts::PI;
    let f_start = omega0;
    let f_end = omega0 + chirp_rate * (cols as f64 - 1.0);
    for f in [f_start, f_end] {
        if f <= lo || f >= hi {
            return Err(Error::Parameter(format!(
                "instantaneous frequency {f:.4} leaves the coverage band ({lo:.4}, {hi:.4})"
            )));
        }
    }
    if let ChirpAmplitude::SineY { base, depth } = amplitude {
        if base - depth.abs() < 0.0 || base + depth.abs() > 1.0 {
            return Err(Error::Parameter(
                "chirp amplitude profile must stay within [0, 1]".into(),
            ));
        }
    }
    let mut image = Vec::with_capacity(rows * cols);
    let mut phase = Vec::with_capacity(rows * cols);
    let mut amp = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let a_row = match amplitude {
            ChirpAmplitude::Unit => 1.0,
            ChirpAmplitude::SineY { base, depth } => {
                base + depth * (2.0 * std::f64::consts::PI * r as f64 / rows as f64).sin()
            }
        };
        for c in 0..cols {
            let x = c as f64;
            let phi = omega0 * x + 0.5 * chirp_rate * x * x;
            phase.push(phi);
            amp.push(a_row);
            image.push((a_row * phi.cos()) as f32);
        }
    }
    Ok(ChirpFrame {
        image: GrayImage {
            rows,
            cols,
            data: image,
        },
        phase,
        amplitude: amp,
        omega0,
        chirp_rate,
    })
}

// ---------------------------------------------------------------------------
// Face corpus

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FacesConfig {
    pub sessions: usize,
    pub frames_per_session: usize,
    /// Original frame size in pixels (halved by preprocessing).
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    /// Std-dev range of the replaceable ring-noise field (drawn per frame):
    /// inside a face this variance is displaced by the stripe texture. The
    /// per-frame spread is a contrast nuisance that phase-normalized inputs
    /// ignore and pixel-domain detectors must absorb.
    pub noise_sigma_min: f64,
    pub noise_sigma_max: f64,
    /// Std-dev of the masking noise field that covers everything, faces
    /// included; it hides the stripes from pixel-domain detectors.
    pub mask_sigma: f64,
}

impl Default for FacesConfig {
    fn default() -> Self {
        FacesConfig {
            sessions: 18,
            frames_per_session: 12,
            width: 900,
            height: 500,
            seed: 0,
            noise_sigma_min: 0.035,
            noise_sigma_max: 0.065,
            mask_sigma: 0.05,
        }
    }
}

impl FacesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sessions == 0 || self.frames_per_session == 0 {
            return Err(Error::Parameter("corpus must hold at least one frame".into()));
        }
        let (dr, dc) = downscaled_dims(self.height, self.width);
        let (pr, pc) = padded_dims(dr, dc);
        if pr / crate::blocks::BLOCK < 2 || pc / crate::blocks::BLOCK < 2 {
            return Err(Error::Parameter(format!(
                "frame {}x{} yields a block grid smaller than 2x2",
                self.height, self.width
            )));
        }
        if !(self.noise_sigma_min > 0.0
            && self.noise_sigma_min <= self.noise_sigma_max
            && self.noise_sigma_max < 0.2)
        {
            return Err(Error::Parameter(
                "noise sigma range must satisfy 0 < min <= max < 0.2".into(),
            ));
        }
        if !(self.mask_sigma >= 0.0 && self.mask_sigma < 0.2) {
            return Err(Error::Parameter("mask_sigma must lie in [0, 0.2)".into()));
        }
        Ok(())
    }

    pub fn session_id(&self, s: usize) -> String {
        format!("s{s:03}")
    }

    pub fn frame_id(&self, f: usize) -> String {
        format!("f{f:03}")
    }
}

struct FacePatch {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    omega: f64,
    theta: f64,
    psi: f64,
    /// Bidirectional amplitude jitter around exact variance matching;
    /// uninformative for a variance detector but decalibrating for a
    /// learned pixel-domain template.
    amp_jitter: f64,
}

impl FacePatch {
    fn carrier(&self, x: f64, y: f64) -> f64 {
        let u = x * self.theta.cos() + y * self.theta.sin();
        (self.omega * u + self.psi).cos()
    }
}

impl FacePatch {
    fn bbox(&self) -> BoxF {
        BoxF {
            x: (self.cx - self.rx) as f32,
            y: (self.cy - self.ry) as f32,
            w: (2.0 * self.rx) as f32,
            h: (2.0 * self.ry) as f32,
        }
    }
}

/// Raised-cosine elliptical envelope: 1 inside 0.6 of the radius, cosine
/// taper to 0 at the rim.
fn envelope(rho: f64) -> f64 {
    if rho >= 1.0 {
        0.0
    } else if rho <= 0.6 {
        1.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (rho - 0.6) / 0.4).cos())
    }
}

/// Amplitude gain of the 2x2 box downscale for a cosine carrier.
fn downscale_gain(omega: f64, theta: f64) -> f64 {
    let wx = omega * theta.cos();
    let wy = omega * theta.sin();
    (wx / 2.0).cos() * (wy / 2.0).cos()
}

/// Carrier frequency band in the original frame: pi/4 within +-15%,
/// which lands on the bandpass scale after the 2x downscale.
const CARRIER_LO: f64 = std::f64::consts::FRAC_PI_4 * 0.9;
const CARRIER_HI: f64 = std::f64::consts::FRAC_PI_4 * 1.1;

/// rms downscale gain of the carrier annulus (isotropic average), used to
/// variance-match stripes against the ring noise they displace.
fn annulus_rms_gain() -> f64 {
    let mut acc = 0.0;
    let n = 64;
    for i in 0..n {
        let omega = CARRIER_LO + (CARRIER_HI - CARRIER_LO) * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let theta = std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
            let g = downscale_gain(omega, theta);
            acc += g * g;
        }
    }
    (acc / (n * n) as f64).sqrt()
}

/// Isotropic noise band-limited to the carrier annulus, unit variance,
/// deterministic for a given rng state.
fn ring_noise(rows: usize, cols: usize, rng: &mut impl Rng) -> Vec<f64> {
    use num_complex::Complex32;
    let normal = rand_distr::Normal::new(0.0f64, 1.0).unwrap();
    let mut field: Vec<Complex32> = (0..rows * cols)
        .map(|_| {
            Complex32::new(
                rand_distr::Distribution::sample(&normal, rng) as f32,
                0.0,
            )
        })
        .collect();
    let fft = crate::fft::Fft2::new(rows, cols);
    fft.forward(&mut field);
    for ky in 0..rows {
        // signed frequency in radians/pixel
        let fy = if ky <= rows / 2 { ky as f64 } else { ky as f64 - rows as f64 }
            * std::f64::consts::TAU
            / rows as f64;
        for kx in 0..cols {
            let fx = if kx <= cols / 2 { kx as f64 } else { kx as f64 - cols as f64 }
                * std::f64::consts::TAU
                / cols as f64;
            let r = (fx * fx + fy * fy).sqrt();
            if !(CARRIER_LO..=CARRIER_HI).contains(&r) {
                field[ky * cols + kx] = Complex32::ZERO;
            }
        }
    }
    fft.inverse(&mut field);
    let re: Vec<f64> = field.iter().map(|v| v.re as f64).collect();
    let mean = re.iter().sum::<f64>() / re.len() as f64;
    let var = re.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / re.len() as f64;
    let scale = 1.0 / var.sqrt().max(1e-12);
    re.into_iter().map(|v| (v - mean) * scale).collect()
}

/// One synthetic frame. The positive-block target steers face placement so
/// the corpus positive rate lands near 10%.
fn gen_frame(cfg: &FacesConfig, session: usize, frame: usize) -> FrameRecord {
    let (rows, cols) = (cfg.height, cfg.width);
    let mut rng = crate::rng::stream(
        cfg.seed,
        &format!("faces/{}/{}", cfg.session_id(session), cfg.frame_id(frame)),
    );

    // smooth shading: 0.45 +- two low-frequency waves, range ~[0.35, 0.55]
    let shade: Vec<(f64, f64, f64, f64, f64)> = (0..2)
        .map(|_| {
            (
                0.03 + 0.02 * rng.random::<f64>(),
                0.5 + rng.random::<f64>(),
                0.5 + rng.random::<f64>(),
                rng.random::<f64>() * std::f64::consts::TAU,
                if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 },
            )
        })
        .collect();
    let shading = |x: f64, y: f64| -> f64 {
        let mut b = 0.45;
        for &(amp, fx, fy, psi, sign) in &shade {
            b += sign
                * amp
                * (std::f64::consts::TAU * (fx * x / cols as f64 + fy * y / rows as f64) + psi)
                    .cos();
        }
        b
    };

    // per-frame texture/noise level (contrast nuisance)
    let sigma = cfg.noise_sigma_min
        + (cfg.noise_sigma_max - cfg.noise_sigma_min) * rng.random::<f64>();

    // face placement against the label grid the pipeline will compute
    let (dr, dc) = downscaled_dims(rows, cols);
    let (pr, pc) = padded_dims(dr, dc);
    let n_blocks = (pr / crate::blocks::BLOCK) * (pc / crate::blocks::BLOCK);
    let target = 4 + (rng.random::<f64>() < 0.5) as usize; // 4 or 5 of 45
    let target = target.min(n_blocks / 2);
    let positives = |boxes: &[BoxF]| -> usize {
        let scaled = scale_boxes_half(boxes, dr, dc);
        label_grid(pr, pc, &scaled)
            .expect("padded dims are block multiples")
            .iter()
            .filter(|&&l| l >= DEFAULT_TAU_GT)
            .count()
    };

    let mut patches: Vec<FacePatch> = Vec::new();
    let mut boxes: Vec<BoxF> = Vec::new();
    for _try in 0..400 {
        if positives(&boxes) >= target {
            break;
        }
        let rx = 50.0 + 20.0 * rng.random::<f64>();
        let ry = 50.0 + 20.0 * rng.random::<f64>();
        let cx = rx + 2.0 + (cols as f64 - 2.0 * rx - 4.0) * rng.random::<f64>();
        let cy = ry + 2.0 + (rows as f64 - 2.0 * ry - 4.0) * rng.random::<f64>();
        // carrier anywhere in the annulus, any orientation except a sliver
        // around pi/2 where the row-wise analytic construction keeps only
        // half the carrier energy
        let omega = CARRIER_LO + (CARRIER_HI - CARRIER_LO) * rng.random::<f64>();
        let mut theta = std::f64::consts::PI * rng.random::<f64>();
        if (theta - std::f64::consts::FRAC_PI_2).abs() < 0.03 {
            theta += 0.06;
        }
        let cand = FacePatch {
            cx,
            cy,
            rx,
            ry,
            omega,
            theta,
            psi: rng.random::<f64>() * std::f64::consts::TAU,
            amp_jitter: 0.85 + 0.35 * rng.random::<f64>(),
        };
        let cb = cand.bbox();
        let overlaps = boxes.iter().any(|b| {
            cb.x < b.x + b.w + 8.0
                && b.x < cb.x + cb.w + 8.0
                && cb.y < b.y + b.h + 8.0
                && b.y < cb.y + cb.h + 8.0
        });
        if overlaps {
            continue;
        }
        let mut with_cand = boxes.clone();
        with_cand.push(cb);
        if positives(&with_cand) <= target {
            boxes = with_cand;
            patches.push(cand);
        }
    }

    // background = shading + replaceable ring noise (same annulus as the
    // carriers, so the radial spectrum carries no label signal)
    let ring = ring_noise(rows, cols, &mut rng);
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            data.push(shading(c as f64, r as f64) + sigma * ring[r * cols + c]);
        }
    }

    // faces: displace the ring noise with a variance-matched oriented stripe
    let ring_gain = annulus_rms_gain();
    for p in &patches {
        // post-downscale variance match: stripe amplitude compensates the
        // downscale gains of the carrier vs the ring noise it replaces
        let amp = std::f64::consts::SQRT_2 * sigma * ring_gain * p.amp_jitter
            / downscale_gain(p.omega, p.theta);
        let y0 = (p.cy - p.ry).floor().max(0.0) as usize;
        let y1 = (p.cy + p.ry).ceil().min(rows as f64) as usize;
        let x0 = (p.cx - p.rx).floor().max(0.0) as usize;
        let x1 = (p.cx + p.rx).ceil().min(cols as f64) as usize;
        // first pass: envelope-weighted mean of the windowed carrier
        let mut t_sum = 0.0;
        let mut e_sum = 0.0;
        for y in y0..y1 {
            for x in x0..x1 {
                let dx = (x as f64 - p.cx) / p.rx;
                let dy = (y as f64 - p.cy) / p.ry;
                let env = envelope((dx * dx + dy * dy).sqrt());
                if env == 0.0 {
                    continue;
                }
                t_sum += env * p.carrier(x as f64, y as f64);
                e_sum += env;
            }
        }
        let mean_c = if e_sum > 0.0 { t_sum / e_sum } else { 0.0 };
        // second pass: mix the stripe in, retiring an equal noise variance
        for y in y0..y1 {
            for x in x0..x1 {
                let dx = (x as f64 - p.cx) / p.rx;
                let dy = (y as f64 - p.cy) / p.ry;
                let env = envelope((dx * dx + dy * dy).sqrt());
                if env == 0.0 {
                    continue;
                }
                let stripe = amp * env * (p.carrier(x as f64, y as f64) - mean_c);
                let idx = y * cols + x;
                let b = shading(x as f64, y as f64);
                let noise = data[idx] - b;
                data[idx] = b + (1.0 - env * env).sqrt() * noise + stripe;
            }
        }
    }

    // masking noise goes on top of everything, faces included
    if cfg.mask_sigma > 0.0 {
        let normal = rand_distr::Normal::new(0.0f64, 1.0).unwrap();
        for v in data.iter_mut() {
            let n: f64 = rand_distr::Distribution::sample(&normal, &mut rng);
            *v += cfg.mask_sigma * n;
        }
    }

    let image = GrayImage {
        rows,
        cols,
        data: data.into_iter().map(|v| (v as f32).clamp(0.0, 1.0)).collect(),
    };
    FrameRecord {
        session_id: cfg.session_id(session),
        frame_id: cfg.frame_id(frame),
        image,
        face_boxes: boxes,
    }
}

/// Generates the whole corpus (parallel over frames, per-frame seeds).
pub fn gen_face_dataset(cfg: &FacesConfig) -> Result<Vec<FrameRecord>> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.sessions)
        .flat_map(|s| (0..cfg.frames_per_session).map(move |f| (s, f)))
        .collect();
    let records: Vec<FrameRecord> = jobs
        .par_iter()
        .map(|&(s, f)| gen_frame(cfg, s, f))
        .collect();
    for rec in &records {
        rec.validate()?;
    }
    Ok(records)
}

/// Writes frames (PGM), box annotations (JSON) and a session-disjoint
/// manifest; the first `train_sessions` sessions go to the train split.
pub fn write_corpus(
    records: &[FrameRecord],
    cfg: &FacesConfig,
    train_sessions: usize,
    dir: &Path,
) -> Result<Manifest> {
    std::fs::create_dir_all(dir.join("frames")).map_err(|e| Error::io(dir, e))?;
    std::fs::create_dir_all(dir.join("boxes")).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest::default();
    for rec in records {
        let frame_rel = format!("frames/{}_{}.pgm", rec.session_id, rec.frame_id);
        let boxes_rel = format!("boxes/{}_{}.json", rec.session_id, rec.frame_id);
        rec.image.save_pgm(&dir.join(&frame_rel))?;
        let boxes_path = dir.join(&boxes_rel);
        let json = serde_json::to_string_pretty(&rec.face_boxes)
            .map_err(|e| Error::json(&boxes_path, e))?;
        std::fs::write(&boxes_path, json).map_err(|e| Error::io(&boxes_path, e))?;
        let entry = ManifestEntry {
            frame: frame_rel.into(),
            boxes: boxes_rel.into(),
            session_id: rec.session_id.clone(),
            frame_id: rec.frame_id.clone(),
        };
        let session_index: usize = rec.session_id[1..].parse().unwrap_or(usize::MAX);
        if session_index < train_sessions {
            manifest.train.push(entry);
        } else {
            manifest.test.push(entry);
        }
    }
    let _ = cfg;
    manifest.validate_disjoint()?;
    manifest.save(&dir.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dca::{DcaConfig, DcaEngine};
    use crate::filterbank::{build_filterbank, FilterbankConfig};

    #[test]
    fn chirp_values_and_range_checks() {
        let omega2 = std::f64::consts::FRAC_PI_2;
        let f = gen_chirp_frame(16, 200, omega2, 0.001, ChirpAmplitude::Unit, 0).unwrap();
        assert!(f.image.data.iter().all(|&v| (-1.0..=1.0).contains(&v)));
        assert_eq!(f.phase.len(), 16 * 200);
        // rate pushing past 0.9*pi is rejected
        assert!(gen_chirp_frame(16, 2000, omega2, 0.001, ChirpAmplitude::Unit, 0).is_err());
        // start below 0.2*pi is rejected
        assert!(gen_chirp_frame(16, 100, 0.1, 0.0, ChirpAmplitude::Unit, 0).is_err());
        // amplitude profile leaving [0, 1] is rejected
        assert!(gen_chirp_frame(
            16,
            100,
            omega2,
            0.0,
            ChirpAmplitude::SineY {
                base: 0.5,
                depth: 0.6
            },
            0
        )
        .is_err());
    }

    #[test]
    fn pure_cosine_demodulates_cleanly() {
        // bin-aligned carrier: omega = 2*pi*16/64 = pi/2
        let omega = 2.0 * std::f64::consts::PI * 16.0 / 64.0;
        let f = gen_chirp_frame(48, 64, omega, 0.0, ChirpAmplitude::Unit, 0).unwrap();
        let engine = DcaEngine::new(
            build_filterbank(&FilterbankConfig::default()).unwrap(),
            DcaConfig::default(),
        );
        let d = engine.decompose(&f.image).unwrap();
        let mut err = 0.0f64;
        let mut n = 0usize;
        for r in 5..43 {
            for c in 5..59 {
                err += (d.fm.at(r, c) as f64 - f.phase[r * 64 + c].cos()).abs();
                n += 1;
            }
        }
        let mae = err / n as f64;
        assert!(mae < 0.05, "interior MAE {mae}");
    }

    #[test]
    fn ia_tracks_the_amplitude_profile() {
        let omega = std::f64::consts::FRAC_PI_2;
        let f = gen_chirp_frame(
            96,
            128,
            omega,
            0.0,
            ChirpAmplitude::SineY {
                base: 0.5,
                depth: 0.4,
            },
            0,
        )
        .unwrap();
        let engine = DcaEngine::new(
            build_filterbank(&FilterbankConfig::default()).unwrap(),
            DcaConfig::default(),
        );
        let d = engine.decompose(&f.image).unwrap();
        // Pearson correlation between ia and the true amplitude, interior
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for r in 5..91 {
            for c in 5..123 {
                xs.push(d.ia.at(r, c) as f64);
                ys.push(f.amplitude[r * 128 + c]);
            }
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
        let r = sxy / (sxx * syy).sqrt();
        assert!(r > 0.9, "Pearson r = {r}");
    }

    #[test]
    fn corpus_is_deterministic() {
        let cfg = FacesConfig {
            sessions: 2,
            frames_per_session: 2,
            width: 432,
            height: 240,
            seed: 7,
            ..FacesConfig::default()
        };
        let a = gen_face_dataset(&cfg).unwrap();
        let b = gen_face_dataset(&cfg).unwrap();
        assert_eq!(a.len(), 4);
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.session_id, rb.session_id);
            assert_eq!(ra.face_boxes.len(), rb.face_boxes.len());
            for (x, y) in ra.image.data.iter().zip(&rb.image.data) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        // chirp and face corpora draw from distinct substreams
        let chirp_seed = crate::rng::derive_seed(7, "chirp/0");
        let face_seed = crate::rng::derive_seed(7, "faces/s000/f000");
        assert_ne!(chirp_seed, face_seed);
    }

    #[test]
    fn records_validate_and_positive_rate_lands_in_band() {
        let cfg = FacesConfig {
            sessions: 5,
            frames_per_session: 11, // 55 frames >= 50
            seed: 3,
            ..FacesConfig::default()
        };
        let records = gen_face_dataset(&cfg).unwrap();
        assert_eq!(records.len(), 55);
        let mut pos = 0usize;
        let mut total = 0usize;
        for rec in &records {
            rec.validate().unwrap();
            let (dr, dc) = downscaled_dims(rec.image.rows, rec.image.cols);
            let (pr, pc) = padded_dims(dr, dc);
            let labels =
                label_grid(pr, pc, &scale_boxes_half(&rec.face_boxes, dr, dc)).unwrap();
            pos += labels.iter().filter(|&&l| l >= DEFAULT_TAU_GT).count();
            total += labels.len();
        }
        let rate = pos as f64 / total as f64;
        assert!(
            (0.08..=0.12).contains(&rate),
            "positive rate {rate} outside [0.08, 0.12]"
        );
    }

    #[test]
    fn face_texture_is_mean_matched() {
        let cfg = FacesConfig {
            sessions: 5,
            frames_per_session: 10, // 50 frames
            seed: 11,
            ..FacesConfig::default()
        };
        let records = gen_face_dataset(&cfg).unwrap();
        let mut in_sum = 0.0f64;
        let mut in_n = 0usize;
        let mut out_sum = 0.0f64;
        let mut out_n = 0usize;
        for rec in &records {
            let inside = |x: usize, y: usize| -> bool {
                rec.face_boxes.iter().any(|b| {
                    (x as f32) >= b.x
                        && (x as f32) < b.x + b.w
                        && (y as f32) >= b.y
                        && (y as f32) < b.y + b.h
                })
            };
            for y in 0..rec.image.rows {
                for x in 0..rec.image.cols {
                    let v = rec.image.at(y, x) as f64;
                    if inside(x, y) {
                        in_sum += v;
                        in_n += 1;
                    } else {
                        out_sum += v;
                        out_n += 1;
                    }
                }
            }
        }
        let diff = (in_sum / in_n as f64 - out_sum / out_n as f64).abs();
        assert!(diff < 0.02, "mean(inside) - mean(outside) = {diff}");
    }

    #[test]
    fn face_texture_is_variance_matched_after_downscale() {
        // per-block standard deviations of face blocks vs background blocks
        // overlap: the generator replaces noise variance instead of adding
        let cfg = FacesConfig {
            sessions: 3,
            frames_per_session: 6,
            seed: 19,
            ..FacesConfig::default()
        };
        let records = gen_face_dataset(&cfg).unwrap();
        let mut face_vars = Vec::new();
        let mut bg_vars = Vec::new();
        for rec in &records {
            let (padded, boxes) = crate::blocks::preprocess_frame(&rec.image, &rec.face_boxes)
                .unwrap();
            let labels = label_grid(padded.rows, padded.cols, &boxes).unwrap();
            let gc = padded.cols / crate::blocks::BLOCK;
            for (bi, &label) in labels.iter().enumerate() {
                let (gr_i, gc_i) = (bi / gc, bi % gc);
                // skip zero-padding blocks on the grid rim
                if (gr_i + 1) * crate::blocks::BLOCK > downscaled_dims(rec.image.rows, 0).0
                    || (gc_i + 1) * crate::blocks::BLOCK
                        > downscaled_dims(0, rec.image.cols).1
                {
                    continue;
                }
                let mut vals = Vec::with_capacity(2500);
                for y in 0..crate::blocks::BLOCK {
                    for x in 0..crate::blocks::BLOCK {
                        vals.push(padded.at(
                            gr_i * crate::blocks::BLOCK + y,
                            gc_i * crate::blocks::BLOCK + x,
                        ) as f64);
                    }
                }
                let m = vals.iter().sum::<f64>() / vals.len() as f64;
                let var =
                    vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64;
                if label >= 0.5 {
                    face_vars.push(var);
                } else if label == 0.0 {
                    bg_vars.push(var);
                }
            }
        }
        assert!(!face_vars.is_empty() && !bg_vars.is_empty());
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let mf = mean(&face_vars);
        let mb = mean(&bg_vars);
        // within 35% of each other (shading adds block-level spread)
        let ratio = mf / mb;
        assert!(
            (0.65..=1.35).contains(&ratio),
            "variance ratio face/background = {ratio}"
        );
    }

    #[test]
    fn corpus_writer_produces_a_loadable_split() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = FacesConfig {
            sessions: 3,
            frames_per_session: 2,
            width: 432,
            height: 240,
            seed: 23,
            ..FacesConfig::default()
        };
        let records = gen_face_dataset(&cfg).unwrap();
        let manifest = write_corpus(&records, &cfg, 2, dir.path()).unwrap();
        assert_eq!(manifest.train.len(), 4);
        assert_eq!(manifest.test.len(), 2);
        let back = Manifest::load(&dir.path().join("manifest.json")).unwrap();
        let rec = crate::blocks::load_frame_record(&back.train[0], dir.path()).unwrap();
        assert_eq!(rec.session_id, "s000");
        assert_eq!(rec.image.rows, 240);
        assert_eq!(rec.face_boxes.len(), records[0].face_boxes.len());
    }
}
