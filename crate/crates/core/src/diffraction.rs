//! Periodograms, theoretical spectra, and Bragg/flatness diagnostics.
//!
//! Frequencies live on the torus `[0, 1)²`, sampled at `(j/W, k/H)`. The comb is
//! supported on Z², so its diffraction is Z²-periodic and the torus carries all
//! of it; an integer frequency such as `(1, 0)` lands on grid index `(0, 0)`.
//!
//! Ordinates are `|Σ_x w_x e^{-2πi q·x}|² / (W·H)`, without taper, so the grid
//! mean equals the mean of `|w_x|²` exactly (Parseval).

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::fft2;
use crate::lattice::{SiteValues, WeightLaw};
use crate::samplers::{SamplerSpec, System};

/// Bins per axis in [`flatness_report`].
pub const FLATNESS_BINS: usize = 16;
/// Largest relative deviation of a bin mean for a grid to count as flat.
pub const FLATNESS_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodogramGrid {
    pub width: usize,
    pub height: usize,
    /// Row-major: index `k·width + j` holds frequency `(j/width, k/height)`.
    pub values: Vec<f64>,
}

impl PeriodogramGrid {
    pub fn value(&self, j: usize, k: usize) -> f64 {
        self.values[k * self.width + j]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Grid index nearest to frequency `q`, reduced modulo the lattice.
    pub fn nearest_index(&self, q: (f64, f64)) -> (usize, usize) {
        let wrap = |f: f64, n: usize| ((f * n as f64).round() as i64).rem_euclid(n as i64) as usize;
        (wrap(q.0, self.width), wrap(q.1, self.height))
    }

    pub fn ordinate_at(&self, q: (f64, f64)) -> f64 {
        let (j, k) = self.nearest_index(q);
        self.value(j, k)
    }

    /// Inverse DFT of the grid: `(1/WH) Σ_x conj(w_x)·w_{x+z}` with indices
    /// taken modulo the window (wrap-around), row-major in `z`.
    ///
    /// This is not the interior-pair estimator of the correlations module;
    /// the two differ by boundary terms.
    pub fn cyclic_autocorrelation(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&mut buf, self.width, self.height, FftDirection::Inverse);
        let scale = 1.0 / self.values.len() as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }
}

pub fn periodogram<S: SiteValues + ?Sized>(window: &S) -> PeriodogramGrid {
    let (width, height) = window.dims();
    let mut buf = window.complex_values();
    fft2(&mut buf, width, height, FftDirection::Forward);
    let scale = 1.0 / (width * height) as f64;
    PeriodogramGrid {
        width,
        height,
        values: buf.iter().map(|v| v.norm_sqr() * scale).collect(),
    }
}

/// Point mass at every integer frequency plus a constant Lebesgue density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalSpectrum {
    pub bragg_mass: f64,
    pub ac_density: f64,
}

impl TheoreticalSpectrum {
    /// Spectrum of a balanced ±1 comb after re-weighting `+1 ↦ φ₊`, `-1 ↦ φ₋`:
    /// `|φ₊+φ₋|²/4 · δ_{Z²} + |φ₊−φ₋|²/4 · γ̂`.
    pub fn reweighted(&self, phi_plus: Complex64, phi_minus: Complex64) -> TheoreticalSpectrum {
        let lattice = (phi_plus + phi_minus).norm_sqr() / 4.0;
        let scale = (phi_plus - phi_minus).norm_sqr() / 4.0;
        TheoreticalSpectrum {
            bragg_mass: lattice + scale * self.bragg_mass,
            ac_density: scale * self.ac_density,
        }
    }

    /// Unit-weight spectrum of a system's invariant measure.
    pub fn of_system(system: &System) -> TheoreticalSpectrum {
        match system {
            System::Bernoulli { law } => expected_spectrum(law, Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)),
            _ => TheoreticalSpectrum {
                bragg_mass: 0.0,
                ac_density: 1.0,
            },
        }
    }
}

/// Diffraction of the i.i.d. comb with site values `(φ₊+φ₋)/2 + (φ₊−φ₋)/2 · W`.
///
/// The Bragg mass is `|E(site value)|²` and the density is the site variance,
/// `|φ₊−φ₋|²/4 · cov(W)`. For balanced laws this coincides with
/// [`TheoreticalSpectrum::reweighted`] applied to the `(1, −1)` spectrum.
pub fn expected_spectrum(law: &WeightLaw, phi_plus: Complex64, phi_minus: Complex64) -> TheoreticalSpectrum {
    let mid = (phi_plus + phi_minus) * 0.5;
    let half = (phi_plus - phi_minus) * 0.5;
    TheoreticalSpectrum {
        bragg_mass: (mid + half * law.mean()).norm_sqr(),
        ac_density: half.norm_sqr() * law.covariance(),
    }
}

/// Periodogram ordinate at `frequency`, divided by the site count, for one
/// `size x size` window per entry of `sizes`.
pub fn bragg_estimate(
    spec: &SamplerSpec,
    phi: (Complex64, Complex64),
    frequency: (f64, f64),
    sizes: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let identity = phi == (Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0));
    sizes
        .iter()
        .map(|&n| {
            let window = spec.resized(n).sample()?;
            let grid = if identity {
                periodogram(&window)
            } else {
                periodogram(&window.comb_weights(phi.0, phi.1)?)
            };
            Ok((n, grid.ordinate_at(frequency) / (n * n) as f64))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    /// Mean ordinate with the `(0, 0)` ordinate excluded.
    pub mean: f64,
    pub expected_density: f64,
    /// `FLATNESS_BINS²` bin means, row-major in frequency.
    pub binned_means: Vec<f64>,
    /// `max |bin mean − expected| / expected`.
    pub max_bin_deviation: f64,
    /// Kolmogorov–Smirnov distance of `ordinate / mean` from the unit exponential law.
    pub ks_statistic: Option<f64>,
    pub flat: bool,
}

pub fn flatness_report(grid: &PeriodogramGrid, expected_density: f64, with_ks: bool) -> Result<FlatnessReport> {
    if grid.width < FLATNESS_BINS || grid.height < FLATNESS_BINS {
        return Err(Error::DegenerateGrid(format!(
            "{}x{} grid has fewer than {FLATNESS_BINS} frequencies per axis",
            grid.width, grid.height
        )));
    }
    if !(expected_density > 0.0 && expected_density.is_finite()) {
        return Err(Error::DegenerateGrid(format!(
            "expected density {expected_density} is not positive"
        )));
    }
    let mut sums = vec![0.0; FLATNESS_BINS * FLATNESS_BINS];
    let mut counts = vec![0usize; FLATNESS_BINS * FLATNESS_BINS];
    let mut background = Vec::with_capacity(grid.values.len() - 1);
    for k in 0..grid.height {
        let bk = k * FLATNESS_BINS / grid.height;
        for j in 0..grid.width {
            if j == 0 && k == 0 {
                continue;
            }
            let v = grid.value(j, k);
            let bin = bk * FLATNESS_BINS + j * FLATNESS_BINS / grid.width;
            sums[bin] += v;
            counts[bin] += 1;
            background.push(v);
        }
    }
    let binned_means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let max_bin_deviation = binned_means
        .iter()
        .map(|m| (m - expected_density).abs() / expected_density)
        .fold(0.0, f64::max);
    let mean = background.iter().sum::<f64>() / background.len() as f64;
    let ks_statistic = with_ks.then(|| exponential_ks(&mut background, mean));
    Ok(FlatnessReport {
        mean,
        expected_density,
        binned_means,
        max_bin_deviation,
        ks_statistic,
        flat: max_bin_deviation <= FLATNESS_TOLERANCE,
    })
}

fn exponential_ks(values: &mut [f64], mean: f64) -> f64 {
    if mean <= 0.0 {
        return 1.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let cdf = 1.0 - (-v / mean).exp();
            (cdf - i as f64 / n).max((i + 1) as f64 / n - cdf)
        })
        .fold(0.0, f64::max)
}
