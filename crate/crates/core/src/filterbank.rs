//! Low-parameter directional Gabor filterbank: two scales of eight oriented
//! 11x11 kernels. Scale 1 holds baseband directional Gaussians (unit DC
//! gain); scale 2 holds complex directional Gabors (zero DC, unit peak gain)
//! whose radial center frequency places the passbands over the mid band.

use crate::tensor::Tensor;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Grid used to locate every kernel's peak DFT magnitude for normalization
/// and the exported `peak_gain` metadata.
pub const PEAK_GRID: usize = 128;

/// Geometry of one filterbank kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// Odd pixel count per side.
    pub size: usize,
    /// Spatial std-dev along the rotated major axis (pixels).
    pub sigma_x: f64,
    /// Spatial std-dev along the rotated minor axis (pixels).
    pub sigma_y: f64,
    /// Orientation in radians, in [0, pi).
    pub theta: f64,
    /// Radial center frequency in radians/pixel; 0 for the baseband scale.
    pub omega: f64,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size < 3 || self.size % 2 == 0 {
            return Err(Error::Parameter(format!(
                "kernel size must be odd and >= 3, got {}",
                self.size
            )));
        }
        if !(self.sigma_x > 0.0) || !(self.sigma_y > 0.0) {
            return Err(Error::Parameter("kernel sigmas must be positive".into()));
        }
        if !(0.0..std::f64::consts::PI).contains(&self.theta) {
            return Err(Error::Parameter(format!(
                "theta must lie in [0, pi), got {}",
                self.theta
            )));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.omega) {
            return Err(Error::Parameter(format!(
                "omega must lie in [0, pi], got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// Square complex kernel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub size: usize,
    pub data: Vec<Complex64>,
}

impl Kernel {
    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.size + c]
    }

    pub fn sum(&self) -> Complex64 {
        self.data.iter().sum()
    }
}

/// One channel: spec, realized kernel and its measured peak DFT gain.
#[derive(Debug, Clone)]
pub struct Channel {
    pub spec: KernelSpec,
    pub kernel: Kernel,
    pub peak_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterbankConfig {
    pub size: usize,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub theta_step: f64,
    pub orientations_per_scale: usize,
    pub scales: usize,
    /// Radial center frequency of the second (bandpass) scale.
    pub omega2: f64,
}

impl Default for FilterbankConfig {
    fn default() -> Self {
        FilterbankConfig {
            size: 11,
            sigma_x: 1.5,
            sigma_y: 1.5 / 4.0,
            theta_step: 0.39,
            orientations_per_scale: 8,
            scales: 2,
            omega2: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl FilterbankConfig {
    /// Stable textual key for caching decompositions keyed by configuration.
    pub fn cache_key(&self) -> String {
        format!(
            "s{}x{:016x}y{:016x}t{:016x}o{}n{}w{:016x}",
            self.size,
            self.sigma_x.to_bits(),
            self.sigma_y.to_bits(),
            self.theta_step.to_bits(),
            self.orientations_per_scale,
            self.scales,
            self.omega2.to_bits()
        )
    }
}

/// Ordered channel set, scale-major then orientation.
#[derive(Debug, Clone)]
pub struct GaborFilterbank {
    pub config: FilterbankConfig,
    pub channels: Vec<Channel>,
}

impl GaborFilterbank {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Scale index (0-based) of a channel position.
    pub fn scale_of(&self, channel: usize) -> usize {
        channel / self.config.orientations_per_scale
    }
}

fn centered(i: usize, size: usize) -> f64 {
    i as f64 - (size as f64 - 1.0) / 2.0
}

/// Raw anisotropic Gaussian envelope (value 1 at the center pixel).
fn envelope(spec: &KernelSpec) -> Vec<f64> {
    let n = spec.size;
    let (sin_t, cos_t) = spec.theta.sin_cos();
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        let y = centered(r, n);
        for c in 0..n {
            let x = centered(c, n);
            let u = x * cos_t + y * sin_t;
            let v = -x * sin_t + y * cos_t;
            out.push(
                (-(u * u / (2.0 * spec.sigma_x * spec.sigma_x)
                    + v * v / (2.0 * spec.sigma_y * spec.sigma_y)))
                    .exp(),
            );
        }
    }
    out
}

/// Baseband directional Gaussian, normalized to unit coefficient sum
/// (unit DC gain). The imaginary part is zero.
pub fn make_directional_gaussian(spec: &KernelSpec) -> Result<Kernel> {
    spec.validate()?;
    if spec.omega != 0.0 {
        return Err(Error::Parameter(
            "directional Gaussian requires omega = 0".into(),
        ));
    }
    let env = envelope(spec);
    let total: f64 = env.iter().sum();
    let data = env
        .iter()
        .map(|&e| Complex64::new(e / total, 0.0))
        .collect();
    Ok(Kernel {
        size: spec.size,
        data,
    })
}

/// Directional Gabor: the Gaussian envelope modulated along the rotated
/// major axis by exp(j*omega*u), then the envelope-weighted complex mean is
/// subtracted (coefficient sum exactly zero, so the DC response vanishes
/// without an axis-aligned spectral residue) and the kernel is scaled so the
/// peak DFT magnitude equals 1.
pub fn make_gabor(spec: &KernelSpec) -> Result<Kernel> {
    spec.validate()?;
    if !(spec.omega > 0.0) {
        return Err(Error::Parameter("Gabor requires omega > 0".into()));
    }
    let n = spec.size;
    let env = envelope(spec);
    let (sin_t, cos_t) = spec.theta.sin_cos();
    let mut carrier = Vec::with_capacity(n * n);
    for r in 0..n {
        let y = centered(r, n);
        for c in 0..n {
            let x = centered(c, n);
            let u = x * cos_t + y * sin_t;
            let phase = spec.omega * u;
            carrier.push(Complex64::new(phase.cos(), phase.sin()));
        }
    }
    let env_sum: f64 = env.iter().sum();
    let mean = env
        .iter()
        .zip(&carrier)
        .map(|(&e, &w)| e * w)
        .sum::<Complex64>()
        / env_sum;
    let data = env
        .iter()
        .zip(&carrier)
        .map(|(&e, &w)| e * (w - mean))
        .collect();
    let mut kernel = Kernel { size: n, data };
    let peak = peak_dft_magnitude(&kernel, PEAK_GRID);
    if !(peak > 0.0) {
        return Err(Error::Numeric("Gabor kernel has zero peak gain".into()));
    }
    for v in kernel.data.iter_mut() {
        *v /= peak;
    }
    Ok(kernel)
}

/// Centered magnitude of the zero-padded 2-D DFT, `grid_size` x `grid_size`,
/// with DC at index (grid_size/2, grid_size/2). Row index maps to the
/// frequency-y axis, column index to frequency-x.
pub fn frequency_response(kernel: &Kernel, grid_size: usize) -> Result<Vec<f64>> {
    if grid_size < kernel.size {
        return Err(Error::Parameter(format!(
            "frequency grid {} smaller than kernel size {}",
            grid_size, kernel.size
        )));
    }
    let n = kernel.size;
    let g = grid_size;
    let freq = |i: usize| 2.0 * std::f64::consts::PI * (i as f64 - (g / 2) as f64) / g as f64;
    // Separable evaluation: partial transform over columns, then rows.
    let mut partial = vec![Complex64::new(0.0, 0.0); n * g];
    for r in 0..n {
        for ix in 0..g {
            let fx = freq(ix);
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..n {
                let x = centered(c, n);
                let ang = -fx * x;
                acc += kernel.at(r, c) * Complex64::new(ang.cos(), ang.sin());
            }
            partial[r * g + ix] = acc;
        }
    }
    let mut out = vec![0.0f64; g * g];
    for iy in 0..g {
        let fy = freq(iy);
        for ix in 0..g {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..n {
                let y = centered(r, n);
                let ang = -fy * y;
                acc += partial[r * g + ix] * Complex64::new(ang.cos(), ang.sin());
            }
            out[iy * g + ix] = acc.norm();
        }
    }
    Ok(out)
}

/// Max magnitude of the kernel's DFT sampled on a padded grid.
pub fn peak_dft_magnitude(kernel: &Kernel, grid_size: usize) -> f64 {
    frequency_response(kernel, grid_size.max(kernel.size))
        .expect("grid covers kernel")
        .into_iter()
        .fold(0.0, f64::max)
}

/// Builds the full bank: one baseband scale of directional Gaussians and
/// (for scales = 2) one bandpass scale of directional Gabors at `omega2`,
/// all at orientations theta = i * theta_step.
pub fn build_filterbank(config: &FilterbankConfig) -> Result<GaborFilterbank> {
    if config.scales == 0 || config.scales > 2 {
        return Err(Error::Parameter(format!(
            "scales must be 1 or 2, got {}",
            config.scales
        )));
    }
    if config.orientations_per_scale == 0 {
        return Err(Error::Parameter("orientations_per_scale must be >= 1".into()));
    }
    if config.orientations_per_scale as f64 * config.theta_step > std::f64::consts::PI + 1e-12 {
        return Err(Error::Parameter(
            "orientations * theta_step must stay within [0, pi)".into(),
        ));
    }
    let mut channels = Vec::with_capacity(config.scales * config.orientations_per_scale);
    for scale in 0..config.scales {
        for k in 0..config.orientations_per_scale {
            let spec = KernelSpec {
                size: config.size,
                sigma_x: config.sigma_x,
                sigma_y: config.sigma_y,
                theta: k as f64 * config.theta_step,
                omega: if scale == 0 { 0.0 } else { config.omega2 },
            };
            let kernel = if scale == 0 {
                make_directional_gaussian(&spec)?
            } else {
                make_gabor(&spec)?
            };
            let peak_gain = peak_dft_magnitude(&kernel, PEAK_GRID);
            channels.push(Channel {
                spec,
                kernel,
                peak_gain,
            });
        }
    }
    Ok(GaborFilterbank {
        config: config.clone(),
        channels,
    })
}

#[derive(Serialize, Deserialize)]
struct ChannelMeta {
    spec: KernelSpec,
    peak_gain: f64,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct BankMeta {
    config: FilterbankConfig,
    channels: Vec<ChannelMeta>,
}

/// Writes `filterbank.json` plus one binary tensor per channel
/// (dims [size, size, 2]; real then imaginary).
pub fn export_dir(fb: &GaborFilterbank, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut metas = Vec::with_capacity(fb.channels.len());
    for (i, ch) in fb.channels.iter().enumerate() {
        let file = format!("kernel_{i:02}.aft");
        let n = ch.kernel.size;
        let mut data = Vec::with_capacity(n * n * 2);
        for v in &ch.kernel.data {
            data.push(v.re as f32);
            data.push(v.im as f32);
        }
        Tensor::new(vec![n, n, 2], data)?.save(&dir.join(&file))?;
        metas.push(ChannelMeta {
            spec: ch.spec,
            peak_gain: ch.peak_gain,
            file,
        });
    }
    let meta = BankMeta {
        config: fb.config.clone(),
        channels: metas,
    };
    let path = dir.join("filterbank.json");
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::json(&path, e))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

pub fn import_dir(dir: &Path) -> Result<GaborFilterbank> {
    let path = dir.join("filterbank.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: BankMeta =
        serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    let expect = meta.config.scales * meta.config.orientations_per_scale;
    if meta.channels.len() != expect {
        return Err(Error::Validation(format!(
            "filterbank.json lists {} channels, config implies {}",
            meta.channels.len(),
            expect
        )));
    }
    let mut channels = Vec::with_capacity(meta.channels.len());
    for cm in meta.channels {
        let t = Tensor::load(&dir.join(&cm.file))?;
        let n = cm.spec.size;
        if t.dims != vec![n, n, 2] {
            return Err(Error::Validation(format!(
                "{}: expected dims [{n}, {n}, 2], got {:?}",
                cm.file, t.dims
            )));
        }
        if !(cm.peak_gain > 0.0) {
            return Err(Error::Validation(format!(
                "{}: peak_gain must be positive",
                cm.file
            )));
        }
        let data = t
            .data
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0] as f64, p[1] as f64))
            .collect();
        channels.push(Channel {
            spec: cm.spec,
            kernel: Kernel { size: n, data },
            peak_gain: cm.peak_gain,
        });
    }
    Ok(GaborFilterbank {
        config: meta.config,
        channels,
    })
}
