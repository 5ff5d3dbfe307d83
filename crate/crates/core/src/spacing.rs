//! Nearest-neighbour spacing statistics and equidistribution discrepancy.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::circle::AngleSet;
use crate::error::{Error, Result};

/// Whether the gap from the last angle back to the first is included.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    /// `N - 1` consecutive gaps.
    #[default]
    Open,
    /// `N` gaps including the wrap-around gap.
    Wrapped,
}

/// Scale applied to raw angle gaps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GapScale {
    /// Divide by the mean spacing `(pi/2)/N`, so wrapped gaps average 1.
    #[default]
    MeanSpacing,
    /// Multiply by `N`.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    #[serde(rename = "N")]
    pub n_points: usize,
    pub gaps: Vec<f64>,
    pub mode: GapMode,
}

/// Empirical mass of an interval next to the exponential reference mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassComparison {
    pub mass: f64,
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingHistogram {
    pub bin_edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub reference: Vec<f64>,
}

fn raw_gaps(a: &AngleSet, mode: GapMode) -> Vec<f64> {
    let t = &a.angles;
    let mut out: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    if mode == GapMode::Wrapped {
        out.push(t[0] + FRAC_PI_2 - t[t.len() - 1]);
    }
    out
}

/// Normalized consecutive gaps of the sorted angles.
pub fn gaps(a: &AngleSet, mode: GapMode) -> Result<GapSample> {
    gaps_scaled(a, mode, GapScale::MeanSpacing)
}

pub fn gaps_scaled(a: &AngleSet, mode: GapMode, scale: GapScale) -> Result<GapSample> {
    let n = a.N();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let factor = match scale {
        GapScale::MeanSpacing => n as f64 / FRAC_PI_2,
        GapScale::Literal => n as f64,
    };
    Ok(GapSample {
        n_points: n,
        gaps: raw_gaps(a, mode).into_iter().map(|g| g * factor).collect(),
        mode,
    })
}

/// `int_lo^hi e^{-s} ds` for `0 <= lo <= hi <= inf`.
pub fn exp_mass(lo: f64, hi: f64) -> f64 {
    let lo = lo.max(0.0);
    let hi = hi.max(lo);
    (-lo).exp() - (-hi).exp()
}

/// Fraction of gaps in `[lo, hi)` (closed at `hi` when `hi` is infinite),
/// with the exponential reference.
pub fn spacing_mass(g: &GapSample, lo: f64, hi: f64) -> MassComparison {
    let inside = g.gaps.iter().filter(|&&s| s >= lo && s < hi).count();
    MassComparison {
        mass: inside as f64 / g.gaps.len().max(1) as f64,
        reference: exp_mass(lo, hi),
    }
}

/// Vectors of `l` consecutive normalized gaps (open chain), one for each
/// start index `j = 0 .. N - l - 1`.
pub fn joint_gaps(a: &AngleSet, l: usize) -> Result<Vec<Vec<f64>>> {
    if l == 0 {
        return Err(Error::InvalidArgument("l must be at least 1".into()));
    }
    if a.N() < l + 1 {
        return Err(Error::TooFewPoints { needed: l + 1, got: a.N() });
    }
    let g = gaps(a, GapMode::Open)?;
    Ok(g.gaps.windows(l).map(|w| w.to_vec()).collect())
}

/// Fraction of vectors in the box `prod [lo_i, hi_i)` with the product
/// exponential reference.
pub fn box_mass(vectors: &[Vec<f64>], bounds: &[(f64, f64)]) -> MassComparison {
    let inside = vectors
        .iter()
        .filter(|v| v.iter().zip(bounds).all(|(&s, &(lo, hi))| s >= lo && s < hi))
        .count();
    MassComparison {
        mass: inside as f64 / vectors.len().max(1) as f64,
        reference: bounds.iter().map(|&(lo, hi)| exp_mass(lo, hi)).product(),
    }
}

/// Histogram on `bins` uniform bins over `[lo, hi)`.
pub fn histogram(g: &GapSample, bins: usize, lo: f64, hi: f64) -> SpacingHistogram {
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &s in &g.gaps {
        if s >= lo && s < hi {
            let i = (((s - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
    }
    let total = g.gaps.len().max(1) as f64;
    SpacingHistogram {
        masses: counts.iter().map(|&c| c as f64 / total).collect(),
        reference: edges.windows(2).map(|w| exp_mass(w[0], w[1])).collect(),
        bin_edges: edges,
    }
}

/// Kolmogorov-Smirnov distance `sup_t |F_emp(t) - (1 - e^{-t})|`.
pub fn ks_exponential(g: &GapSample) -> f64 {
    let mut s = g.gaps.clone();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let cdf = 1.0 - (-x.max(0.0)).exp();
        d = d.max((i + 1) as f64 / n - cdf).max(cdf - i as f64 / n);
    }
    d.clamp(0.0, 1.0)
}

/// `sup` over intervals `I` in `[0, pi/2)` of `|#(angles in I)/N - |I|/(pi/2)|`.
pub fn star_discrepancy(a: &AngleSet) -> f64 {
    let n = a.N();
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for (i, &t) in a.angles.iter().enumerate() {
        let d = (i + 1) as f64 / nf - t / FRAC_PI_2;
        hi = hi.max(d);
        lo = lo.min(d);
    }
    (1.0 / nf + hi - lo).min(1.0)
}

/// `sup_t |#(angles < t)/N - t/(pi/2)|` over anchored intervals `[0, t)`.
pub fn anchored_discrepancy(a: &AngleSet) -> f64 {
    let n = a.N();
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    a.angles
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let u = t / FRAC_PI_2;
            ((i + 1) as f64 / nf - u).max(u - i as f64 / nf)
        })
        .fold(0.0, f64::max)
}

/// The Erdős-Hall / Kátai-Környei discrepancy exponent `log(pi/2) / log 2`.
pub const DISCREPANCY_EXPONENT: f64 = 0.651_496_129_472_318_7;

/// The three reference scales `N^{-1/2}`, `N^{-0.6515}`, `N^{-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    #[serde(rename = "N")]
    pub n_points: usize,
    pub inv_sqrt: f64,
    pub erdos_hall: f64,
    pub inv: f64,
}

pub fn scale_report(n_points: usize) -> ScaleReport {
    let n = n_points as f64;
    ScaleReport {
        n_points,
        inv_sqrt: n.powf(-0.5),
        erdos_hall: n.powf(-DISCREPANCY_EXPONENT),
        inv: 1.0 / n,
    }
}

/// `x` cut (not rounded) to `digits` decimals.
pub fn truncate_decimal(x: f64, digits: usize) -> String {
    let scale = 10f64.powi(digits as i32);
    let t = (x * scale * (1.0 + 1e-12)).floor() / scale;
    format!("{t:.digits$}")
}

impl ScaleReport {
    /// The three scales cut to seven decimals.
    pub fn truncated(&self) -> [String; 3] {
        [
            truncate_decimal(self.inv_sqrt, 7),
            truncate_decimal(self.erdos_hall, 7),
            truncate_decimal(self.inv, 7),
        ]
    }
}
