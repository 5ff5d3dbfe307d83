//! Arithmetic families `N_{M,n0}(x)`: enumeration, averages of
//! `lambda`-products, the predicted main term `(2 alpha)^M g(k; Y)`,
//! Hecke prime sums and `L(1, 4k)`.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{all_classes, alpha, k_s, KVector};
use crate::circle::{angles, lambda_prime_power, FactoredRadius};
use crate::error::{Error, Result};
use crate::gaussian::{primes_up_to, split_primes_up_to, PrecisionContext, SplitPrime};
use crate::kernels::{compensated_sum, correlation_direct, SmoothingKernel};

/// Largest `x` accepted for family enumeration.
pub const MAX_FAMILY_X: u64 = 1_000_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub x: u64,
    #[serde(rename = "M")]
    pub m: usize,
    pub n0: FactoredRadius,
}

impl FamilySpec {
    pub fn new(x: u64, m: usize, n0: FactoredRadius) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("M must be at least 1".into()));
        }
        if x > MAX_FAMILY_X {
            return Err(Error::TooLarge(format!("x = {x} exceeds {MAX_FAMILY_X}")));
        }
        Ok(FamilySpec { x, m, n0 })
    }

    /// Family with `n0 = 1`.
    pub fn coprime_to_one(x: u64, m: usize) -> Result<Self> {
        Self::new(x, m, FactoredRadius::new(0, Vec::new(), Vec::new())?)
    }

    /// `Y = (M - 1) / log log x`, defined for `x > e^e`.
    pub fn y_param(&self) -> Result<f64> {
        let ll = (self.x as f64).ln().ln();
        if ll <= 1.0 {
            return Err(Error::InvalidArgument(format!("log log x must exceed 1, got x = {}", self.x)));
        }
        Ok((self.m - 1) as f64 / ll)
    }

    fn excludes(&self, p: u64) -> bool {
        self.n0.split_factors.iter().any(|(sp, _)| sp.p == p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerProductConfig {
    pub prime_cutoff: u64,
    pub dirichlet_length: u64,
}

impl Default for EulerProductConfig {
    fn default() -> Self {
        EulerProductConfig { prime_cutoff: 1_000_000, dirichlet_length: 100_000 }
    }
}

impl EulerProductConfig {
    pub fn validate(&self) -> Result<()> {
        if self.prime_cutoff < 1000 {
            return Err(Error::InvalidArgument("prime cutoff must be at least 1000".into()));
        }
        Ok(())
    }
}

/// A truncated product with the change of its logarithm over the primes
/// in `(P/2, P]`, an empirical proxy for the neglected tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncated {
    pub value: f64,
    pub tail_estimate: f64,
}

/// `prod_j lambda_{4(k_{j+1}-k_j)}(p)` for a split prime.
pub fn local_product(theta: f64, kv: &KVector) -> f64 {
    kv.steps().iter().map(|&m| lambda_prime_power(theta, 1, m)).product()
}

/// `s(p; k) = sum_{[S], k_S != 0} 2 cos(8 k_S theta_p)`.
pub fn s_local(theta: f64, kv: &KVector) -> f64 {
    all_classes(kv.r())
        .iter()
        .map(|c| k_s(kv, c.rep))
        .filter(|&ks| ks != 0)
        .map(|ks| 2.0 * (8.0 * ks as f64 * theta).cos())
        .sum()
}

/// Nonzero `k_S` over the classes, for repeated evaluation of `s(p; k)`.
fn nonzero_ks(kv: &KVector) -> Vec<f64> {
    all_classes(kv.r())
        .iter()
        .map(|c| k_s(kv, c.rep))
        .filter(|&ks| ks != 0)
        .map(|ks| 8.0 * ks as f64)
        .collect()
}

fn s_from(ks: &[f64], theta: f64) -> f64 {
    ks.iter().map(|&w| 2.0 * (w * theta).cos()).sum()
}

/// Split primes up to a bound with their angles.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    bound: u64,
    primes: Vec<SplitPrime>,
}

impl PrimeTable {
    pub fn new(bound: u64) -> Self {
        PrimeTable { bound, primes: split_primes_up_to(bound) }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn primes(&self) -> &[SplitPrime] {
        &self.primes
    }

    fn upto(&self, x: u64) -> Result<&[SplitPrime]> {
        if x > self.bound {
            return Err(Error::InvalidArgument(format!("prime table stops at {}, need {x}", self.bound)));
        }
        Ok(&self.primes[..self.primes.partition_point(|sp| sp.p <= x)])
    }

    /// Truncated Euler product for `g(k; Y)`.
    pub fn g_euler(&self, kv: &KVector, y: f64, n0: &FactoredRadius, cutoff: u64) -> Result<Truncated> {
        let ks = nonzero_ks(kv);
        let a = alpha(kv) as f64;
        let ps = self.upto(cutoff)?;
        let logs: Vec<f64> = ps
            .iter()
            .filter(|sp| !n0.split_factors.iter().any(|(q, _)| q.p == sp.p))
            .map(|sp| {
                let p = sp.p as f64;
                (y * s_from(&ks, sp.theta) / (a * p * (1.0 + 2.0 * y / p))).ln_1p()
            })
            .collect();
        let half = ps.partition_point(|sp| sp.p <= cutoff / 2);
        let half = half.min(logs.len());
        Ok(Truncated {
            value: compensated_sum(logs.iter().copied()).exp(),
            tail_estimate: compensated_sum(logs[half..].iter().copied()).abs(),
        })
    }

    /// `g(k; Y)` as the Dirichlet polynomial over squarefree `m <= y_len`
    /// built from split primes coprime to `n0`.
    pub fn g_dirichlet(&self, kv: &KVector, y: f64, n0: &FactoredRadius, y_len: u64) -> Result<f64> {
        self.g_dirichlet_limited(kv, y, n0, y_len, y_len)
    }

    /// The Dirichlet polynomial using only primes up to `prime_cutoff`.
    pub fn g_dirichlet_limited(
        &self,
        kv: &KVector,
        y: f64,
        n0: &FactoredRadius,
        prime_cutoff: u64,
        y_len: u64,
    ) -> Result<f64> {
        let ks = nonzero_ks(kv);
        let a = alpha(kv) as f64;
        let ps = self.upto(prime_cutoff.min(y_len).max(1))?;
        let terms: Vec<(u64, f64)> = ps
            .iter()
            .filter(|sp| !n0.split_factors.iter().any(|(q, _)| q.p == sp.p))
            .map(|sp| {
                let p = sp.p as f64;
                (sp.p, y * s_from(&ks, sp.theta) / (a * p * (1.0 + 2.0 * y / p)))
            })
            .collect();
        let partial: Vec<f64> = (0..terms.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = Vec::new();
                squarefree_terms(&terms, i, y_len / terms[i].0, terms[i].1, &mut acc);
                compensated_sum(acc)
            })
            .collect();
        Ok(1.0 + compensated_sum(partial))
    }

    /// `sum_{p <= x, p split, p not dividing n0} prod_j lambda_{4(k_{j+1}-k_j)}(p) log p`.
    pub fn hecke_prime_sum(&self, x: u64, kv: &KVector, n0: &FactoredRadius) -> Result<HeckeSum> {
        let ps = self.upto(x)?;
        let terms = ps
            .iter()
            .filter(|sp| !n0.split_factors.iter().any(|(q, _)| q.p == sp.p))
            .map(|sp| local_product(sp.theta, kv) * (sp.p as f64).ln());
        let sum = compensated_sum(terms);
        let a = alpha(kv) as f64;
        Ok(HeckeSum { x, sum, alpha: alpha(kv), ratio: sum / (a * x as f64) })
    }

    /// Euler product for `L(1, 4k)` over primes up to the cutoff.
    pub fn l_one_euler(&self, k: i64, cutoff: u64) -> Result<Truncated> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let split = self.upto(cutoff)?;
        let mut logs: Vec<(u64, f64)> = Vec::with_capacity(2 * split.len());
        let two = if k % 2 == 0 { 1.0 } else { -1.0 };
        logs.push((2, -(1.0 - two / 2.0f64).ln()));
        for sp in split {
            let p = sp.p as f64;
            let lam = 2.0 * (4.0 * k as f64 * sp.theta).cos();
            logs.push((sp.p, -(1.0 - lam / p + 1.0 / (p * p)).ln()));
        }
        for q in primes_up_to(cutoff).into_iter().filter(|q| q % 4 == 3) {
            let q2 = (q as f64) * (q as f64);
            logs.push((q, -(1.0 - 1.0 / q2).ln()));
        }
        logs.sort_by_key(|t| t.0);
        let half = logs.partition_point(|t| t.0 <= cutoff / 2);
        Ok(Truncated {
            value: compensated_sum(logs.iter().map(|t| t.1)).exp(),
            tail_estimate: compensated_sum(logs[half..].iter().map(|t| t.1)).abs(),
        })
    }

    /// `sum_{m <= y} lambda_{4k}(m; 1) / m` with the coefficients built
    /// multiplicatively from a smallest-prime-factor sieve.
    pub fn l_one_dirichlet(&self, k: i64, y_len: u64) -> Result<f64> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let split = self.upto(y_len)?;
        let y = y_len as usize;
        let spf = smallest_prime_factors(y);
        let mut coef = vec![0.0f64; y + 1];
        if y >= 1 {
            coef[1] = 1.0;
        }
        for m in 2..=y {
            let p = spf[m] as usize;
            let mut rest = m;
            let mut e = 0u32;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            let local = if p == 2 {
                if (k * e as i64) % 2 == 0 { 1.0 } else { -1.0 }
            } else if p % 4 == 3 {
                if e % 2 == 0 { 1.0 } else { 0.0 }
            } else {
                let i = split.partition_point(|sp| (sp.p as usize) < p);
                lambda_prime_power(split[i].theta, e, k)
            };
            coef[m] = coef[rest] * local;
        }
        Ok(compensated_sum((1..=y).map(|m| coef[m] / m as f64)))
    }
}

fn smallest_prime_factors(y: usize) -> Vec<u32> {
    let mut spf = vec![0u32; y + 1];
    for i in 2..=y {
        if spf[i] == 0 {
            let mut j = i;
            while j <= y {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

fn squarefree_terms(terms: &[(u64, f64)], i: usize, budget: u64, value: f64, out: &mut Vec<f64>) {
    out.push(value);
    for j in i + 1..terms.len() {
        let p = terms[j].0;
        if p > budget {
            break;
        }
        squarefree_terms(terms, j, budget / p, value * terms[j].1, out);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeckeSum {
    pub x: u64,
    pub sum: f64,
    pub alpha: u64,
    /// `sum / (alpha(k) x)`.
    pub ratio: f64,
}

/// The members of a family, as indices into its prime list.
#[derive(Clone, Debug)]
pub struct Family {
    pub spec: FamilySpec,
    primes: Vec<SplitPrime>,
}

impl Family {
    pub fn new(spec: FamilySpec) -> Result<Self> {
        let table = PrimeTable::new(Self::prime_bound(&spec));
        Self::with_table(spec, &table)
    }

    /// Largest prime that can occur in a member.
    pub fn prime_bound(spec: &FamilySpec) -> u64 {
        let small: u64 = split_primes_up_to(1000)
            .iter()
            .filter(|sp| !spec.excludes(sp.p))
            .take(spec.m - 1)
            .map(|sp| sp.p)
            .product();
        spec.x / small.max(1)
    }

    pub fn with_table(spec: FamilySpec, table: &PrimeTable) -> Result<Self> {
        let bound = Self::prime_bound(&spec);
        let primes = table.upto(bound)?.iter().filter(|sp| !spec.excludes(sp.p)).copied().collect();
        Ok(Family { spec, primes })
    }

    pub fn primes(&self) -> &[SplitPrime] {
        &self.primes
    }

    /// `sum over members of prod_{p | n} c_p` and the number of members,
    /// partitioned by smallest prime and combined in ascending order.
    pub fn weighted_sum(&self, c: &[f64]) -> (f64, u64) {
        let ps: Vec<u64> = self.primes.iter().map(|sp| sp.p).collect();
        let mut prefix = Vec::with_capacity(c.len() + 1);
        prefix.push(0.0);
        let mut run = 0.0;
        let mut comp = 0.0;
        for &v in c {
            // Kahan prefix sums
            let y = v - comp;
            let t = run + y;
            comp = (t - run) - y;
            run = t;
            prefix.push(run);
        }
        let m = self.spec.m;
        let x = self.spec.x;
        let parts: Vec<(f64, u64)> = (0..ps.len())
            .into_par_iter()
            .map(|i| {
                let p = ps[i];
                if m == 1 {
                    return if p <= x { (c[i], 1) } else { (0.0, 0) };
                }
                if p.checked_pow(m as u32).map_or(true, |v| v > x) {
                    return (0.0, 0);
                }
                let mut acc = Vec::new();
                let mut count = 0;
                dfs(&ps, &prefix, c, i + 1, m - 1, x / p, c[i], &mut acc, &mut count);
                (compensated_sum(acc), count)
            })
            .collect();
        (compensated_sum(parts.iter().map(|t| t.0)), parts.iter().map(|t| t.1).sum())
    }

    pub fn size(&self) -> u64 {
        self.weighted_sum(&vec![1.0; self.primes.len()]).1
    }

    /// Members as lists of prime indices, sorted by `n`.
    pub fn member_indices(&self) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        collect(&self.primes, 0, self.spec.m, self.spec.x, &mut stack, &mut out);
        let ps = &self.primes;
        out.sort_by_key(|idx| idx.iter().map(|&i| ps[i as usize].p).product::<u64>());
        out
    }

    pub fn member(&self, idx: &[u32]) -> FactoredRadius {
        FactoredRadius {
            two_exp: 0,
            inert_factors: Vec::new(),
            split_factors: idx.iter().map(|&i| (self.primes[i as usize], 1)).collect(),
        }
    }

    pub fn empirical_average(&self, kv: &KVector) -> Result<f64> {
        let c: Vec<f64> = self.primes.iter().map(|sp| local_product(sp.theta, kv)).collect();
        let (sum, count) = self.weighted_sum(&c);
        if count == 0 {
            return Err(Error::EmptyFamily);
        }
        Ok(sum / count as f64)
    }
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    ps: &[u64],
    prefix: &[f64],
    c: &[f64],
    start: usize,
    depth: usize,
    budget: u64,
    weight: f64,
    acc: &mut Vec<f64>,
    count: &mut u64,
) {
    if depth == 1 {
        let end = ps.partition_point(|&q| q <= budget);
        if end > start {
            acc.push(weight * (prefix[end] - prefix[start]));
            *count += (end - start) as u64;
        }
        return;
    }
    for j in start..ps.len() {
        let q = ps[j];
        if q.checked_pow(depth as u32).map_or(true, |v| v > budget) {
            break;
        }
        dfs(ps, prefix, c, j + 1, depth - 1, budget / q, weight * c[j], acc, count);
    }
}

fn collect(ps: &[SplitPrime], start: usize, depth: usize, budget: u64, stack: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if depth == 0 {
        out.push(stack.clone());
        return;
    }
    for j in start..ps.len() {
        let q = ps[j].p;
        if q.checked_pow(depth as u32).map_or(true, |v| v > budget) {
            break;
        }
        stack.push(j as u32);
        collect(ps, j + 1, depth - 1, budget / q, stack, out);
        stack.pop();
    }
}

/// Members of the family in increasing order of `n`.
pub fn enumerate_family(spec: &FamilySpec) -> Result<Vec<FactoredRadius>> {
    let fam = Family::new(spec.clone())?;
    Ok(fam.member_indices().iter().map(|idx| fam.member(idx)).collect())
}

/// `(1/#family) sum_n prod_j lambda_{4(k_{j+1}-k_j)}(n)`.
pub fn empirical_average(spec: &FamilySpec, kv: &KVector) -> Result<f64> {
    Family::new(spec.clone())?.empirical_average(kv)
}

pub fn g_euler(kv: &KVector, y: f64, n0: &FactoredRadius, cfg: &EulerProductConfig) -> Result<Truncated> {
    cfg.validate()?;
    PrimeTable::new(cfg.prime_cutoff).g_euler(kv, y, n0, cfg.prime_cutoff)
}

pub fn g_dirichlet(kv: &KVector, y: f64, n0: &FactoredRadius, cfg: &EulerProductConfig) -> Result<f64> {
    PrimeTable::new(cfg.dirichlet_length).g_dirichlet(kv, y, n0, cfg.dirichlet_length)
}

pub fn l_one_euler(k: i64, cfg: &EulerProductConfig) -> Result<Truncated> {
    cfg.validate()?;
    PrimeTable::new(cfg.prime_cutoff).l_one_euler(k, cfg.prime_cutoff)
}

pub fn l_one_dirichlet(k: i64, cfg: &EulerProductConfig) -> Result<f64> {
    PrimeTable::new(cfg.dirichlet_length).l_one_dirichlet(k, cfg.dirichlet_length)
}

pub fn hecke_prime_sum(x: u64, kv: &KVector, n0: &FactoredRadius) -> Result<HeckeSum> {
    PrimeTable::new(x).hecke_prime_sum(x, kv, n0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsdComparison {
    pub k: Vec<i64>,
    pub empirical: f64,
    pub predicted: f64,
    pub ratio: f64,
    pub family_size: u64,
    #[serde(rename = "Y")]
    pub y: f64,
    pub g: f64,
    pub alpha: u64,
}

/// Family average against `(2 alpha(k))^M g(k; Y)` with `Y = (M-1)/log log x`.
pub fn lsd_compare_with(
    fam: &Family,
    kv: &KVector,
    table: &PrimeTable,
    cutoff: u64,
) -> Result<LsdComparison> {
    let c: Vec<f64> = fam.primes().iter().map(|sp| local_product(sp.theta, kv)).collect();
    let (sum, count) = fam.weighted_sum(&c);
    if count == 0 {
        return Err(Error::EmptyFamily);
    }
    let empirical = sum / count as f64;
    let y = fam.spec.y_param()?;
    let g = table.g_euler(kv, y, &fam.spec.n0, cutoff)?.value;
    let a = alpha(kv);
    let main = BigUint::from(2 * a).pow(fam.spec.m as u32).to_f64().unwrap_or(f64::INFINITY);
    let predicted = main * g;
    Ok(LsdComparison {
        k: kv.k.clone(),
        empirical,
        predicted,
        ratio: empirical / predicted,
        family_size: count,
        y,
        g,
        alpha: a,
    })
}

pub fn lsd_compare(spec: &FamilySpec, kv: &KVector, cfg: &EulerProductConfig) -> Result<LsdComparison> {
    cfg.validate()?;
    let bound = Family::prime_bound(spec).max(cfg.prime_cutoff);
    let table = PrimeTable::new(bound);
    let fam = Family::with_table(spec.clone(), &table)?;
    lsd_compare_with(&fam, kv, &table, cfg.prime_cutoff)
}

/// Family average of `R_{r,n0}(n; F_N)^moment` with `N = 2^M r(n0)`.
pub fn corr_family_average(
    spec: &FamilySpec,
    kernel: &SmoothingKernel,
    r: usize,
    moment: i32,
) -> Result<f64> {
    let fam = Family::new(spec.clone())?;
    corr_family_average_with(&fam, kernel, r, moment)
}

pub fn corr_family_average_with(fam: &Family, kernel: &SmoothingKernel, r: usize, moment: i32) -> Result<f64> {
    if !(1..=2).contains(&moment) {
        return Err(Error::InvalidArgument("moment must be 1 or 2".into()));
    }
    let members = fam.member_indices();
    if members.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let values: Result<Vec<f64>> = members
        .par_iter()
        .map(|idx| {
            let fr = fam.member(idx).combine(&fam.spec.n0)?;
            let a = angles(&fr, PrecisionContext::default());
            Ok(correlation_direct(&a, kernel, r)?.powi(moment))
        })
        .collect();
    let values = values?;
    Ok(compensated_sum(values.iter().copied()) / values.len() as f64)
}
