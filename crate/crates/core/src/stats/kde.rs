//! Gaussian kernel density estimates on an evenly spaced grid.

use serde::Serialize;

use crate::error::{Error, Result};

/// Grid padding beyond the data range, in bandwidths.
pub const GRID_PADDING_BANDWIDTHS: f64 = 6.0;
pub const DEFAULT_GRID_POINTS: usize = 512;

/// Density evaluated on a grid.
///
/// When the fit was mean-centered, `center_offset` holds the subtracted mean
/// and `grid` is expressed relative to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    pub center_offset: f64,
}

impl DensityCurve {
    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Density at `x` by linear interpolation (zero outside the grid).
    pub fn at(&self, x: f64) -> f64 {
        let (first, last) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if x < first || x > last {
            return 0.0;
        }
        let pos = self.grid.partition_point(|&g| g <= x);
        if pos == 0 {
            return self.density[0];
        }
        if pos >= self.grid.len() {
            return self.density[self.grid.len() - 1];
        }
        let (x0, x1) = (self.grid[pos - 1], self.grid[pos]);
        let t = (x - x0) / (x1 - x0);
        self.density[pos - 1] * (1.0 - t) + self.density[pos] * t
    }
}

/// Options for [`kde`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeOptions {
    pub bandwidth: Option<f64>,
    pub grid_points: usize,
    pub mean_centered: bool,
}

impl Default for KdeOptions {
    fn default() -> Self {
        Self {
            bandwidth: None,
            grid_points: DEFAULT_GRID_POINTS,
            mean_centered: false,
        }
    }
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule of thumb, `0.9 min(sd, IQR/1.34) n^(-1/5)`.
///
/// Falls back to the standard deviation when the IQR is zero.
pub fn silverman_bandwidth(sample: &[f64]) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            found: sample.len(),
        });
    }
    let n = sample.len() as f64;
    let mean = crate::numeric::sum(sample.iter().copied()) / n;
    let var = crate::numeric::sum(sample.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return Err(Error::ZeroSpread);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * n.powf(-0.2))
}

/// Gaussian-kernel density estimate.
pub fn kde(sample: &[f64], options: KdeOptions) -> Result<DensityCurve> {
    if sample.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            found: sample.len(),
        });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("KDE sample contains non-finite values".into()));
    }
    if options.grid_points < 2 {
        return Err(Error::InvalidParameter("KDE grid needs at least two points".into()));
    }
    let silverman = silverman_bandwidth(sample)?;
    let bandwidth = match options.bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}"))),
        None => silverman,
    };
    let offset = if options.mean_centered {
        crate::numeric::sum(sample.iter().copied()) / sample.len() as f64
    } else {
        0.0
    };
    let data: Vec<f64> = sample.iter().map(|x| x - offset).collect();
    let (min, max) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    let lo = min - GRID_PADDING_BANDWIDTHS * bandwidth;
    let hi = max + GRID_PADDING_BANDWIDTHS * bandwidth;
    let step = (hi - lo) / (options.grid_points - 1) as f64;
    let norm = 1.0 / (data.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..options.grid_points).map(|i| lo + step * i as f64).collect();
    let density = grid
        .iter()
        .map(|&g| {
            let s: f64 = data
                .iter()
                .map(|&x| {
                    let z = (g - x) / bandwidth;
                    (-0.5 * z * z).exp()
                })
                .sum();
            s * norm
        })
        .collect();
    Ok(DensityCurve {
        grid,
        density,
        bandwidth,
        center_offset: offset,
    })
}
