//! The random model: `M` independent uniform angles, their subset sums
//! `x_J`, random `lambda` coefficients, exact expectations and Monte Carlo
//! moments of smoothed correlations.

use std::f64::consts::FRAC_PI_2;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::cells::{alpha, rank, KVector};
use crate::circle::AngleSet;
use crate::error::{Error, Result};
use crate::kernels::{compensated_sum, correlation_direct, correlation_distinct, fourier_sum, SmoothingKernel};

/// Largest `M` for which the `2^M` subset angles are materialized.
pub const MAX_SUBSET_M: usize = 24;

/// A seeded realization of the `M` angles, uniform on `[0, pi/2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomRealization {
    #[serde(rename = "M")]
    pub m: usize,
    pub thetas: Vec<f64>,
    pub seed: u64,
    pub index: u64,
}

/// Generator for sample `index` of the run seeded by `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

impl RandomRealization {
    pub fn sample(m: usize, seed: u64, index: u64) -> Self {
        let mut rng = stream_rng(seed, index);
        let thetas = (0..m).map(|_| rng.gen::<f64>() * FRAC_PI_2).collect();
        RandomRealization { m, thetas, seed, index }
    }

    pub fn from_thetas(thetas: Vec<f64>) -> Self {
        RandomRealization { m: thetas.len(), thetas, seed: 0, index: 0 }
    }
}

/// `sum_{j in J} theta_j mod pi/2`, with `J` a bit mask over the angles.
pub fn x_j(rr: &RandomRealization, j: u64) -> f64 {
    rr.thetas
        .iter()
        .enumerate()
        .filter(|(i, _)| j >> i & 1 == 1)
        .map(|(_, t)| t)
        .sum::<f64>()
        .rem_euclid(FRAC_PI_2)
}

/// All `2^M` values `x_J`, indexed by mask.
pub fn subset_angles(rr: &RandomRealization) -> Result<Vec<f64>> {
    if rr.m > MAX_SUBSET_M {
        return Err(Error::TooLarge(format!("2^{} subset angles", rr.m)));
    }
    let mut x = vec![0.0f64; 1 << rr.m];
    for j in 1usize..1 << rr.m {
        let low = j.trailing_zeros() as usize;
        x[j] = (x[j & (j - 1)] + rr.thetas[low]).rem_euclid(FRAC_PI_2);
    }
    Ok(x)
}

/// `prod_l (1 + e^{4 i k theta_l})`.
pub fn random_lambda(rr: &RandomRealization, k: i64) -> Complex64 {
    rr.thetas
        .iter()
        .map(|&t| Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, 4.0 * k as f64 * t))
        .product()
}

/// `sum_J e^{4 i k x_J}`.
pub fn random_lambda_subsets(rr: &RandomRealization, k: i64) -> Result<Complex64> {
    let x = subset_angles(rr)?;
    Ok(x.iter().map(|&t| Complex64::from_polar(1.0, 4.0 * k as f64 * t)).sum())
}

/// `prod_{j=0}^{r-1} lambda_{4(k_{j+1}-k_j)}` for one realization.
pub fn random_lambda_product(rr: &RandomRealization, kv: &KVector) -> Complex64 {
    kv.steps().iter().map(|&m| random_lambda(rr, m)).product()
}

/// `E prod_j lambda_{4(k_{j+1}-k_j)} = (2 alpha(k))^M`.
pub fn expected_lambda_product(kv: &KVector, m: usize) -> BigUint {
    BigUint::from(2 * alpha(kv)).pow(m as u32)
}

/// The angles `x_J + beta` for every subset `J` and shift `beta`.
pub fn shifted_angle_set(rr: &RandomRealization, n0_angles: &[f64]) -> Result<AngleSet> {
    let x = subset_angles(rr)?;
    let mut out = Vec::with_capacity(x.len() * n0_angles.len());
    for &b in n0_angles {
        out.extend(x.iter().map(|&t| (t + b).rem_euclid(FRAC_PI_2)));
    }
    Ok(AngleSet::from_unsorted(BigUint::from(0u32), out))
}

/// `R_r` of the shifted random angle set, over all tuples.
pub fn r_r_random(
    rr: &RandomRealization,
    n0_angles: &[f64],
    kernel: &SmoothingKernel,
    r: usize,
) -> Result<f64> {
    correlation_direct(&shifted_angle_set(rr, n0_angles)?, kernel, r)
}

/// `R_r` restricted to pairwise-distinct `(J, beta)`.
pub fn r_r_star_random(
    rr: &RandomRealization,
    n0_angles: &[f64],
    kernel: &SmoothingKernel,
    r: usize,
) -> Result<f64> {
    correlation_distinct(&shifted_angle_set(rr, n0_angles)?, kernel, r)
}

/// `ell_k(n0) = prod_j sum_beta e^{4 i (k_{j+1}-k_j) beta}` for `k` with
/// implicit zero ends.
pub fn ell(n0_angles: &[f64], k: &[i64]) -> Complex64 {
    let mut prev = 0;
    let mut prod = Complex64::new(1.0, 0.0);
    for &kj in k.iter().chain(std::iter::once(&0)) {
        let m = (kj - prev) as f64;
        prod *= n0_angles.iter().map(|&b| Complex64::from_polar(1.0, 4.0 * m * b)).sum::<Complex64>();
        prev = kj;
    }
    prod
}

/// Fourier side of `R_r` for one realization:
/// `N^{-r} sum_k fhat(k/N) ell_k(n0) prod_j lambda_{4(k_{j+1}-k_j)}(rr)`.
pub fn r_r_random_fourier(
    rr: &RandomRealization,
    n0_angles: &[f64],
    kernel: &SmoothingKernel,
    r: usize,
    k_cutoff: i64,
) -> Result<f64> {
    check_dim(kernel, r)?;
    let n = (1usize << rr.m) * n0_angles.len();
    let needed = kernel.required_k_cutoff(n);
    if k_cutoff < needed {
        return Err(Error::CutoffTooSmall { cutoff: k_cutoff, needed });
    }
    let span = 2 * k_cutoff;
    let lam: Vec<Complex64> = (-span..=span).map(|m| random_lambda(rr, m)).collect();
    fourier_sum(n, kernel, k_cutoff, |k| {
        let mut prev = 0;
        let mut prod = ell(n0_angles, k);
        for &kj in k.iter().chain(std::iter::once(&0)) {
            prod *= lam[(kj - prev + span) as usize];
            prev = kj;
        }
        prod.re
    })
}

/// Exact `E R_r = N^{-r} sum_k fhat(k/N) ell_k(n0) (2 alpha(k))^M`.
pub fn expected_r_r(m: usize, n0_angles: &[f64], kernel: &SmoothingKernel, r: usize) -> Result<f64> {
    check_dim(kernel, r)?;
    let n = (1usize << m) * n0_angles.len();
    let k_cutoff = kernel.required_k_cutoff(n);
    fourier_sum(n, kernel, k_cutoff, |k| {
        let a = alpha(&KVector::new(k.to_vec())) as f64;
        ell(n0_angles, k).re * (2.0 * a).powi(m as i32)
    })
}

/// `E R_2* = fhat(0) (1 - 1/N)` for the unshifted model.
pub fn expected_r2_star(kernel: &SmoothingKernel, n: usize) -> f64 {
    kernel.fhat(&[0.0]) * (1.0 - 1.0 / n as f64)
}

fn check_dim(kernel: &SmoothingKernel, r: usize) -> Result<()> {
    if r < 2 || kernel.dim() != r - 1 {
        return Err(Error::InvalidArgument("kernel dimension must be r - 1".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl MCEstimate {
    /// Sample mean and unbiased variance, accumulated in index order.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = compensated_sum(xs.iter().copied()) / n.max(1) as f64;
        let variance = if n > 1 {
            compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64
        } else {
            0.0
        };
        MCEstimate { mean, variance, stderr: (variance / n.max(1) as f64).sqrt(), n_samples: n }
    }

    /// `|mean - target| <= max(floor, sigmas * stderr)`.
    pub fn agrees_with(&self, target: f64, sigmas: f64, floor: f64) -> bool {
        (self.mean - target).abs() <= floor.max(sigmas * self.stderr)
    }
}

/// JSON report of one Monte Carlo statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub statistic: String,
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed_base: u64,
    pub expected: Option<f64>,
    /// `exact` for finite-`M` identities, `asymptotic` for large-`M` limits.
    pub expected_kind: Option<String>,
}

/// Evaluates `f` on realizations `0..n_samples` in parallel; the reduction
/// is ordered by index.
pub fn monte_carlo<F>(m: usize, n_samples: usize, seed: u64, f: F) -> Result<MCEstimate>
where
    F: Fn(&RandomRealization) -> Result<f64> + Sync,
{
    let xs: Result<Vec<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| f(&RandomRealization::sample(m, seed, i)))
        .collect();
    Ok(MCEstimate::from_samples(&xs?))
}

/// Monte Carlo mean of `Re prod_j lambda_{4(k_{j+1}-k_j)}`.
pub fn mc_lambda_product(kv: &KVector, m: usize, n_samples: usize, seed: u64) -> Result<MCEstimate> {
    monte_carlo(m, n_samples, seed, |rr| Ok(random_lambda_product(rr, kv).re))
}

/// Which correlation sum a Monte Carlo run averages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TupleSum {
    All,
    Distinct,
}

/// Monte Carlo mean of `R_r` (or `R_r*`) raised to `moment`.
pub fn mc_correlation(
    m: usize,
    n0_angles: &[f64],
    kernel: &SmoothingKernel,
    r: usize,
    sum: TupleSum,
    moment: i32,
    n_samples: usize,
    seed: u64,
) -> Result<MCEstimate> {
    monte_carlo(m, n_samples, seed, |rr| {
        let v = match sum {
            TupleSum::All => r_r_random(rr, n0_angles, kernel, r)?,
            TupleSum::Distinct => r_r_star_random(rr, n0_angles, kernel, r)?,
        };
        Ok(v.powi(moment))
    })
}

/// Exhaustive enumeration or uniform sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CountMode {
    Exact,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleCount {
    pub fraction: f64,
    pub hits: u64,
    pub total: u64,
    pub exact: bool,
}

fn w_vectors(js: &[u64], m: usize) -> Vec<Vec<i64>> {
    js.windows(2)
        .map(|p| (0..m).map(|b| (p[0] >> b & 1) as i64 - (p[1] >> b & 1) as i64).collect())
        .collect()
}

fn pairwise_distinct(js: &[u64]) -> bool {
    (0..js.len()).all(|i| (0..i).all(|j| js[i] != js[j]))
}

/// Fraction of pairwise-distinct `r`-tuples of subsets whose consecutive
/// differences `w_i = 1_{J_i} - 1_{J_{i+1}}` have rank `r - 1`.
pub fn count_generic_tuples(m: usize, r: usize, mode: CountMode) -> Result<TupleCount> {
    if r < 2 || m == 0 {
        return Err(Error::InvalidArgument("need r >= 2 and M >= 1".into()));
    }
    let generic = |js: &[u64]| rank(&w_vectors(js, m)) == r - 1;
    match mode {
        CountMode::Exact => {
            if m * r > 30 {
                return Err(Error::InfeasibleExact(format!("2^{} tuples", m * r)));
            }
            let per = 1u64 << m;
            let (hits, total) = (0..per)
                .into_par_iter()
                .map(|first| {
                    let mut js = vec![first; r];
                    let (mut hits, mut total) = (0u64, 0u64);
                    let tail = per.pow(r as u32 - 1);
                    for t in 0..tail {
                        let mut rest = t;
                        for slot in js.iter_mut().skip(1) {
                            *slot = rest % per;
                            rest /= per;
                        }
                        if pairwise_distinct(&js) {
                            total += 1;
                            hits += generic(&js) as u64;
                        }
                    }
                    (hits, total)
                })
                .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            Ok(TupleCount { fraction: hits as f64 / total.max(1) as f64, hits, total, exact: true })
        }
        CountMode::Sampled { samples, seed } => {
            let hits: u64 = (0..samples as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, i);
                    loop {
                        let js: Vec<u64> = (0..r).map(|_| random_subset(&mut rng, m)).collect();
                        if pairwise_distinct(&js) {
                            return generic(&js) as u64;
                        }
                    }
                })
                .sum();
            Ok(TupleCount {
                fraction: hits as f64 / samples.max(1) as f64,
                hits,
                total: samples as u64,
                exact: false,
            })
        }
    }
}

fn random_subset(rng: &mut ChaCha8Rng, m: usize) -> u64 {
    let bits: u64 = rng.gen();
    if m >= 64 {
        bits
    } else {
        bits & ((1u64 << m) - 1)
    }
}

/// Variance-level degeneracy: 4-tuples `(J_1, J_2, J_3, J_4)` with
/// `J_1 != J_2`, `J_3 != J_4` and `rank(w_1, w_3) < 2`.
pub fn count_degenerate_pairs(m: usize, mode: CountMode) -> Result<TupleCount> {
    if m == 0 || m > 62 {
        return Err(Error::InvalidArgument("M must lie in 1..=62".into()));
    }
    let degenerate = |j: [u64; 4]| {
        let (p1, n1, p3, n3) = (j[0] & !j[1], j[1] & !j[0], j[2] & !j[3], j[3] & !j[2]);
        (p1 == p3 && n1 == n3) || (p1 == n3 && n1 == p3)
    };
    let n = 1u64 << m;
    let total = (n * (n - 1)).pow(2);
    match mode {
        CountMode::Exact => {
            if 4 * m > 30 {
                return Err(Error::InfeasibleExact(format!("2^{} tuples", 4 * m)));
            }
            let hits: u64 = (0..n * n)
                .into_par_iter()
                .map(|ab| {
                    let (a, b) = (ab / n, ab % n);
                    if a == b {
                        return 0;
                    }
                    let mut h = 0;
                    for c in 0..n {
                        for d in 0..n {
                            if c != d && degenerate([a, b, c, d]) {
                                h += 1;
                            }
                        }
                    }
                    h
                })
                .sum();
            Ok(TupleCount { fraction: hits as f64 / total as f64, hits, total, exact: true })
        }
        CountMode::Sampled { samples, seed } => {
            let hits: u64 = (0..samples as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, i);
                    let pair = |rng: &mut ChaCha8Rng| loop {
                        let (a, b) = (random_subset(rng, m), random_subset(rng, m));
                        if a != b {
                            return (a, b);
                        }
                    };
                    let (a, b) = pair(&mut rng);
                    let (c, d) = pair(&mut rng);
                    degenerate([a, b, c, d]) as u64
                })
                .sum();
            Ok(TupleCount {
                fraction: hits as f64 / samples.max(1) as f64,
                hits,
                total: samples as u64,
                exact: false,
            })
        }
    }
}

/// Closed form of the degenerate fraction: `2 (6^M - 4^M) / (2^M (2^M - 1))^2`.
pub fn degenerate_pair_fraction(m: usize) -> f64 {
    let n = 2f64.powi(m as i32);
    2.0 * (6f64.powi(m as i32) - 4f64.powi(m as i32)) / (n * (n - 1.0)).powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricDifferenceHistogram {
    #[serde(rename = "M")]
    pub m: usize,
    /// `counts[s]` = number of samples with `|J_1 Δ J_2| = s`.
    pub counts: Vec<u64>,
    pub mean: f64,
    pub stderr: f64,
    /// `(eps, mass of |Δ|/M in [1/2 - eps, 1/2 + eps])`.
    pub central_mass: Vec<(f64, f64)>,
}

/// Empirical law of `|J_1 Δ J_2| / M` for independent uniform subsets.
pub fn symmetric_difference_histogram(m: usize, n_samples: usize, seed: u64) -> Result<SymmetricDifferenceHistogram> {
    if m == 0 || m > 128 {
        return Err(Error::InvalidArgument("M must lie in 1..=128".into()));
    }
    let sizes: Vec<u32> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let mask = if m == 128 { u128::MAX } else { (1u128 << m) - 1 };
            let a: u128 = rng.gen::<u128>() & mask;
            let b: u128 = rng.gen::<u128>() & mask;
            (a ^ b).count_ones()
        })
        .collect();
    let mut counts = vec![0u64; m + 1];
    for &s in &sizes {
        counts[s as usize] += 1;
    }
    let ratios: Vec<f64> = sizes.iter().map(|&s| s as f64 / m as f64).collect();
    let est = MCEstimate::from_samples(&ratios);
    let central_mass = [0.05, 0.1]
        .iter()
        .map(|&eps| {
            let inside = ratios.iter().filter(|&&x| (x - 0.5).abs() <= eps + 1e-12).count();
            (eps, inside as f64 / n_samples.max(1) as f64)
        })
        .collect();
    Ok(SymmetricDifferenceHistogram { m, counts, mean: est.mean, stderr: est.stderr, central_mass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityTest {
    pub bins_per_axis: usize,
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

/// Chi-square test that `theta -> A theta mod 1` pushes the uniform
/// measure on `T^M` to the uniform measure on `T^m`.
pub fn uniformity_test(map_rows: &[Vec<i64>], n_samples: usize, seed: u64) -> Result<UniformityTest> {
    let m = map_rows.len();
    if m == 0 {
        return Err(Error::InvalidArgument("empty map".into()));
    }
    let cols = map_rows[0].len();
    let rk = rank(map_rows);
    if rk < m {
        return Err(Error::RankDeficient { rank: rk, expected: m });
    }
    let target_cells = (n_samples / 20).max(2) as f64;
    let bins = (target_cells.powf(1.0 / m as f64).floor() as usize).clamp(2, 64);
    let cells = bins.pow(m as u32);
    let mut counts = vec![0u64; cells];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = vec![0.0f64; cols];
    for _ in 0..n_samples {
        theta.iter_mut().for_each(|t| *t = rng.gen::<f64>());
        let mut cell = 0usize;
        for row in map_rows {
            let y: f64 = row.iter().zip(&theta).map(|(&a, &t)| a as f64 * t).sum::<f64>().rem_euclid(1.0);
            cell = cell * bins + ((y * bins as f64) as usize).min(bins - 1);
        }
        counts[cell] += 1;
    }
    let expected = n_samples as f64 / cells as f64;
    let statistic: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = (cells - 1) as f64;
    let dist = ChiSquared::new(dof).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(UniformityTest { bins_per_axis: bins, statistic, dof, p_value: 1.0 - dist.cdf(statistic) })
}

/// `(2 alpha(k))^M` as a float, for comparisons.
pub fn expected_lambda_product_f64(kv: &KVector, m: usize) -> f64 {
    expected_lambda_product(kv, m).to_f64().unwrap_or(f64::INFINITY)
}
