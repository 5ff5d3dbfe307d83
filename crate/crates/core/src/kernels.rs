//! Smoothing kernels, their periodization `F_N`, and `r`-level
//! correlation sums computed directly and through the Fourier side.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{lambda, r_of, AngleSet, FactoredRadius};
use crate::error::{Error, Result};

/// Tail level below which kernel values are treated as zero.
pub const TAIL: f64 = 1e-12;

/// Largest number of neighbour entries precomputed by the direct sums.
const NEIGHBOUR_BUDGET: usize = 50_000_000;

/// Even piecewise-linear profile through `(nodes[i], values[i])`, vanishing
/// from the last node on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableProfile {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl TableProfile {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(Error::InvalidArgument("table needs at least two matching nodes".into()));
        }
        if nodes[0] != 0.0 || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("table nodes must start at 0 and increase".into()));
        }
        if *values.last().unwrap() != 0.0 {
            return Err(Error::InvalidArgument("table must end with value 0".into()));
        }
        Ok(TableProfile { nodes, values })
    }

    fn slopes(&self) -> Vec<f64> {
        self.nodes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    /// Jumps of `f'` at `0` (one node) and at `+-nodes[i]`, `i >= 1`.
    fn kinks(&self) -> Vec<f64> {
        let s = self.slopes();
        let m = self.nodes.len() - 1;
        (0..=m)
            .map(|i| match i {
                0 => 2.0 * s[0],
                i if i == m => -s[m - 1],
                i => s[i] - s[i - 1],
            })
            .collect()
    }

    fn eval(&self, u: f64) -> f64 {
        let u = u.abs();
        let last = *self.nodes.last().unwrap();
        if u >= last {
            return 0.0;
        }
        let i = self.nodes.partition_point(|&x| x <= u) - 1;
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        y0 + (y1 - y0) * (u - x0) / (x1 - x0)
    }

    /// `int u^p f(u) du` over the real line for `p` in `{0, 2}`.
    fn moment(&self, p: i32) -> f64 {
        let s = self.slopes();
        let mut acc = 0.0;
        for i in 0..s.len() {
            let (a, b) = (self.nodes[i], self.nodes[i + 1]);
            let c0 = self.values[i] - s[i] * a;
            let q = (p + 1) as f64;
            acc += c0 * (b.powi(p + 1) - a.powi(p + 1)) / q
                + s[i] * (b.powi(p + 2) - a.powi(p + 2)) / (q + 1.0);
        }
        2.0 * acc
    }

    fn fourier(&self, t: f64) -> f64 {
        let width = *self.nodes.last().unwrap();
        if (t * width).abs() < 1e-3 {
            return self.moment(0) - 2.0 * PI * PI * t * t * self.moment(2);
        }
        let c = self.kinks();
        let mut acc = c[0];
        for i in 1..c.len() {
            acc += 2.0 * c[i] * (2.0 * PI * t * self.nodes[i]).cos();
        }
        -acc / (4.0 * PI * PI * t * t)
    }

    fn kink_variation(&self) -> f64 {
        let c = self.kinks();
        c[0].abs() + 2.0 * c[1..].iter().map(|x| x.abs()).sum::<f64>()
    }
}

/// A one-dimensional even profile with known Fourier transform
/// `fhat(t) = int f(u) e^{-2 pi i u t} du`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Profile {
    /// `f(u) = exp(-pi (u/sigma)^2)`, `fhat(t) = sigma exp(-pi sigma^2 t^2)`.
    Gaussian { sigma: f64 },
    /// `fhat(t) = max(0, 1 - |t|/t_max)`, `f(u) = t_max sinc^2(t_max u)`.
    Fejer { t_max: f64 },
    Table(TableProfile),
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

impl Profile {
    pub fn f(&self, u: f64) -> f64 {
        match self {
            Profile::Gaussian { sigma } => (-PI * (u / sigma).powi(2)).exp(),
            Profile::Fejer { t_max } => t_max * sinc(t_max * u).powi(2),
            Profile::Table(tp) => tp.eval(u),
        }
    }

    pub fn fhat(&self, t: f64) -> f64 {
        match self {
            Profile::Gaussian { sigma } => sigma * (-PI * (sigma * t).powi(2)).exp(),
            Profile::Fejer { t_max } => (1.0 - t.abs() / t_max).max(0.0),
            Profile::Table(tp) => tp.fourier(t),
        }
    }

    /// `|f(u)| <= TAIL` for `|u|` beyond this radius.
    pub fn support_radius(&self) -> f64 {
        match self {
            Profile::Gaussian { sigma } => sigma * (-(TAIL.ln()) / PI).sqrt(),
            Profile::Fejer { t_max } => 1.0 / (PI * (t_max * TAIL).sqrt()),
            Profile::Table(tp) => *tp.nodes.last().unwrap(),
        }
    }

    /// `|fhat(t)| <= TAIL` for `|t|` beyond this cutoff.
    pub fn fhat_cutoff(&self) -> f64 {
        match self {
            Profile::Gaussian { sigma } => {
                let l = (sigma / TAIL).ln();
                if l <= 0.0 {
                    0.0
                } else {
                    (l / PI).sqrt() / sigma
                }
            }
            Profile::Fejer { t_max } => *t_max,
            Profile::Table(tp) => (tp.kink_variation() / (4.0 * PI * PI * TAIL)).sqrt(),
        }
    }

    /// Support of `fhat` when it is compact.
    pub fn fhat_support(&self) -> Option<f64> {
        match self {
            Profile::Fejer { t_max } => Some(*t_max),
            _ => None,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            Profile::Table(tp) => tp.values.iter().all(|&v| v >= 0.0),
            _ => true,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Profile::Gaussian { sigma } => sigma.is_finite() && *sigma > 0.0,
            Profile::Fejer { t_max } => t_max.is_finite() && *t_max > 0.0,
            Profile::Table(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("kernel width must be positive".into()))
        }
    }

    /// The periodized value `sum_j f(u + j n)`.
    pub fn periodized(&self, u: f64, n: usize) -> f64 {
        let nf = n as f64;
        let u = u - nf * (u / nf).round();
        match self {
            Profile::Fejer { t_max } => fejer_periodized(*t_max, u, n),
            _ => {
                let rad = self.support_radius();
                let jmax = ((rad + u.abs()) / nf).ceil() as i64;
                (-jmax..=jmax).map(|j| self.f(u + j as f64 * nf)).sum()
            }
        }
    }
}

/// `sum_j T sinc^2(T(u + jN)) = (1/N) sum_{|k| < TN} (1 - |k|/(TN)) cos(2 pi k u / N)`,
/// in closed form when `TN` is an integer.
fn fejer_periodized(t: f64, u: f64, n: usize) -> f64 {
    let nf = n as f64;
    let l = t * nf;
    let s = (PI * u / nf).sin();
    if (l - l.round()).abs() < 1e-12 && s.abs() > 1e-4 {
        let num = (PI * l.round() * u / nf).sin();
        return num * num / (nf * l.round() * s * s);
    }
    let kmax = l.ceil() as i64 - 1;
    let mut acc = 1.0;
    for k in 1..=kmax {
        acc += 2.0 * (1.0 - k as f64 / l) * (2.0 * PI * k as f64 * u / nf).cos();
    }
    acc / nf
}

/// A product kernel `f(x) = prod_i f_i(x_i)` on `R^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingKernel {
    pub factors: Vec<Profile>,
}

impl SmoothingKernel {
    pub fn new(factors: Vec<Profile>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("kernel dimension must be positive".into()));
        }
        for p in &factors {
            p.validate()?;
        }
        Ok(SmoothingKernel { factors })
    }

    pub fn gaussian(dim: usize, sigma: f64) -> Result<Self> {
        Self::new(vec![Profile::Gaussian { sigma }; dim])
    }

    pub fn fejer(dim: usize, t_max: f64) -> Result<Self> {
        Self::new(vec![Profile::Fejer { t_max }; dim])
    }

    pub fn table(dim: usize, profile: TableProfile) -> Result<Self> {
        Self::new(vec![Profile::Table(profile); dim])
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.factors.iter().zip(x).map(|(p, &u)| p.f(u)).product()
    }

    pub fn fhat(&self, t: &[f64]) -> f64 {
        self.factors.iter().zip(t).map(|(p, &s)| p.fhat(s)).product()
    }

    pub fn effective_support_radius(&self) -> f64 {
        self.factors.iter().map(Profile::support_radius).fold(0.0, f64::max)
    }

    pub fn effective_fhat_cutoff(&self) -> f64 {
        self.factors.iter().map(Profile::fhat_cutoff).fold(0.0, f64::max)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.factors.iter().all(Profile::is_nonnegative)
    }

    /// Largest `|k|` with `fhat(k/n) != 0` on some axis, or the tail cutoff
    /// scaled by `n` when `fhat` is not compactly supported.
    pub fn required_k_cutoff(&self, n: usize) -> i64 {
        self.factors
            .iter()
            .map(|p| match p.fhat_support() {
                Some(t) => (t * n as f64 - 1e-9).ceil() as i64 - 1,
                None => (p.fhat_cutoff() * n as f64).ceil() as i64,
            })
            .max()
            .unwrap_or(0)
            .max(0)
    }
}

/// `h` on `R^{2r-1}` with `h(x, 0, y) = fhat(x) fhat(y)`, returned as the
/// kernel whose transform is `h`.
pub fn second_moment_kernel(kernel: &SmoothingKernel) -> Result<SmoothingKernel> {
    let middle = match kernel.factors[0] {
        Profile::Gaussian { .. } => Profile::Gaussian { sigma: 1.0 },
        Profile::Fejer { .. } => Profile::Fejer { t_max: 1.0 },
        Profile::Table(_) => return Err(Error::Unsupported("table kernels have no product lift".into())),
    };
    if kernel.factors.iter().any(|p| matches!(p, Profile::Table(_))) {
        return Err(Error::Unsupported("table kernels have no product lift".into()));
    }
    let mut factors = kernel.factors.clone();
    factors.push(middle);
    factors.extend(kernel.factors.iter().cloned());
    SmoothingKernel::new(factors)
}

/// `F_N(x) = sum_j f((N/(pi/2)) (x + j pi/2))`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodizedKernel {
    pub kernel: SmoothingKernel,
    pub n: usize,
}

impl PeriodizedKernel {
    pub fn new(kernel: SmoothingKernel, n: usize) -> Self {
        PeriodizedKernel { kernel, n }
    }

    /// One periodized factor, coordinate `i`, at angle difference `x`.
    pub fn factor(&self, i: usize, x: f64) -> f64 {
        self.kernel.factors[i].periodized(x * self.n as f64 / FRAC_PI_2, self.n)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (0..self.kernel.dim()).map(|i| self.factor(i, x[i])).product()
    }

    /// `N^{-(r-1)} sum_k fhat(k/N) e^{4i k.x}` over `|k_i| <= k_cutoff`.
    pub fn eval_fourier(&self, x: &[f64], k_cutoff: i64) -> f64 {
        let nf = self.n as f64;
        (0..self.kernel.dim())
            .map(|i| {
                let p = &self.kernel.factors[i];
                let mut acc = p.fhat(0.0);
                for k in 1..=k_cutoff {
                    acc += 2.0 * p.fhat(k as f64 / nf) * (4.0 * k as f64 * x[i]).cos();
                }
                acc / nf
            })
            .product()
    }
}

/// Neumaier-compensated sum in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in it {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

struct Neighbours {
    /// `start[i]..start[i+1]` indexes the neighbours of point `i`.
    start: Vec<usize>,
    idx: Vec<u32>,
    val: Vec<f64>,
}

fn neighbour_indices(angles: &[f64], window: f64, i: usize, out: &mut Vec<u32>) {
    let n = angles.len();
    out.push(i as u32);
    if window >= FRAC_PI_4 {
        out.extend((0..n).filter(|&j| j != i).map(|j| j as u32));
        return;
    }
    let mut step = 1;
    while step < n {
        let j = (i + step) % n;
        let d = (angles[j] - angles[i]).rem_euclid(FRAC_PI_2);
        if d > window {
            break;
        }
        out.push(j as u32);
        step += 1;
    }
    let fwd = step - 1;
    let mut step = 1;
    while step + fwd < n {
        let j = (i + n - step) % n;
        let d = (angles[i] - angles[j]).rem_euclid(FRAC_PI_2);
        if d > window {
            break;
        }
        out.push(j as u32);
        step += 1;
    }
}

fn build_neighbours(angles: &[f64], pk: &PeriodizedKernel, coord: usize) -> Result<Neighbours> {
    let n = angles.len();
    let radius = pk.kernel.factors[coord].support_radius();
    let window = radius * FRAC_PI_2 / n as f64;
    let per_point = if window >= FRAC_PI_4 { n } else { (2.0 * radius + 3.0) as usize };
    if n.saturating_mul(per_point) > NEIGHBOUR_BUDGET {
        return Err(Error::TooLarge(format!(
            "direct sum over {n} points needs about {} neighbour pairs",
            n.saturating_mul(per_point)
        )));
    }
    let lists: Vec<(Vec<u32>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut idx = Vec::new();
            neighbour_indices(angles, window, i, &mut idx);
            let val = idx.iter().map(|&j| pk.factor(coord, angles[i] - angles[j as usize])).collect();
            (idx, val)
        })
        .collect();
    let mut start = Vec::with_capacity(n + 1);
    let mut idx = Vec::new();
    let mut val = Vec::new();
    start.push(0);
    for (i, v) in lists {
        idx.extend(i);
        val.extend(v);
        start.push(idx.len());
    }
    Ok(Neighbours { start, idx, val })
}

/// Estimated neighbour-pair work for a direct sum, used for feasibility checks.
pub fn direct_sum_work(n: usize, kernel: &SmoothingKernel, r: usize) -> f64 {
    let radius = kernel.effective_support_radius();
    let window = radius * FRAC_PI_2 / n as f64;
    let k = if window >= FRAC_PI_4 { n as f64 } else { 2.0 * radius + 1.0 };
    n as f64 * k.powi(r as i32 - 1)
}

fn tuple_sum(a: &AngleSet, kernel: &SmoothingKernel, r: usize, distinct: bool) -> Result<f64> {
    if r < 2 {
        return Err(Error::InvalidArgument("r must be at least 2".into()));
    }
    if kernel.dim() != r - 1 {
        return Err(Error::InvalidArgument(format!(
            "kernel dimension {} does not match r - 1 = {}",
            kernel.dim(),
            r - 1
        )));
    }
    let n = a.N();
    if n == 0 {
        return Ok(0.0);
    }
    let pk = PeriodizedKernel::new(kernel.clone(), n);
    let mut lists: Vec<Neighbours> = Vec::new();
    let mut which = Vec::with_capacity(r - 1);
    for c in 0..r - 1 {
        match (0..c).find(|&d| kernel.factors[d] == kernel.factors[c]) {
            Some(d) => which.push(which[d]),
            None => {
                which.push(lists.len());
                lists.push(build_neighbours(&a.angles, &pk, c)?);
            }
        }
    }
    let nbs: Vec<&Neighbours> = which.iter().map(|&w| &lists[w]).collect();
    let partial: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut stack = vec![i as u32];
            let mut acc = 0.0;
            descend(&nbs, 0, i, 1.0, distinct, &mut stack, &mut acc);
            acc
        })
        .collect();
    Ok(compensated_sum(partial) / n as f64)
}

fn descend(
    nbs: &[&Neighbours],
    depth: usize,
    i: usize,
    weight: f64,
    distinct: bool,
    stack: &mut Vec<u32>,
    acc: &mut f64,
) {
    let nb = nbs[depth];
    let range = nb.start[i]..nb.start[i + 1];
    let last = depth + 1 == nbs.len();
    for e in range {
        let j = nb.idx[e];
        if distinct && stack.contains(&j) {
            continue;
        }
        let w = weight * nb.val[e];
        if last {
            *acc += w;
        } else {
            stack.push(j);
            descend(nbs, depth + 1, j as usize, w, distinct, stack, acc);
            stack.pop();
        }
    }
}

/// `R_r = (1/N) sum over all r-tuples of F_N(consecutive differences)`.
pub fn correlation_direct(a: &AngleSet, kernel: &SmoothingKernel, r: usize) -> Result<f64> {
    tuple_sum(a, kernel, r, false)
}

/// The same sum restricted to pairwise-distinct indices.
pub fn correlation_distinct(a: &AngleSet, kernel: &SmoothingKernel, r: usize) -> Result<f64> {
    if a.N() < r {
        return Err(Error::TooFewPoints { needed: r, got: a.N() });
    }
    tuple_sum(a, kernel, r, true)
}

/// `N^{-r} sum_{|k_i| <= k_cutoff} fhat(k/N) weight(k)` in lexicographic
/// order with compensated accumulation.
pub fn fourier_sum<W>(n: usize, kernel: &SmoothingKernel, k_cutoff: i64, weight: W) -> Result<f64>
where
    W: Fn(&[i64]) -> f64 + Sync,
{
    let d = kernel.dim();
    let side = (2 * k_cutoff + 1) as f64;
    if side.powi(d as i32) > 2e9 {
        return Err(Error::TooLarge(format!("Fourier box of side {side} in dimension {d}")));
    }
    let nf = n as f64;
    let side = (2 * k_cutoff + 1) as usize;
    // fhat factor tables per coordinate
    let tables: Vec<Vec<f64>> = kernel
        .factors
        .iter()
        .map(|p| (-k_cutoff..=k_cutoff).map(|k| p.fhat(k as f64 / nf)).collect())
        .collect();
    let partial: Vec<f64> = (0..side)
        .into_par_iter()
        .map(|first| {
            let mut k = vec![-k_cutoff; d];
            k[0] = first as i64 - k_cutoff;
            let mut terms = Vec::new();
            let total = side.pow(d as u32 - 1);
            for _ in 0..total {
                let w: f64 = (0..d).map(|i| tables[i][(k[i] + k_cutoff) as usize]).product();
                if w != 0.0 {
                    terms.push(w * weight(&k));
                }
                for i in (1..d).rev() {
                    k[i] += 1;
                    if k[i] <= k_cutoff {
                        break;
                    }
                    k[i] = -k_cutoff;
                }
            }
            compensated_sum(terms)
        })
        .collect();
    Ok(compensated_sum(partial) / nf.powi(d as i32 + 1))
}

/// `R_r` through the Fourier coefficients:
/// `N^{-r} sum_k fhat(k/N) prod_j lambda_{4(k_{j+1}-k_j)}(n)`.
pub fn correlation_fourier(
    fr: &FactoredRadius,
    kernel: &SmoothingKernel,
    r: usize,
    k_cutoff: i64,
) -> Result<f64> {
    if kernel.dim() != r - 1 {
        return Err(Error::InvalidArgument("kernel dimension must be r - 1".into()));
    }
    let n = r_of(fr) as usize;
    let needed = kernel.required_k_cutoff(n);
    if k_cutoff < needed {
        return Err(Error::CutoffTooSmall { cutoff: k_cutoff, needed });
    }
    let span = 2 * k_cutoff;
    let lam: Vec<f64> = (-span..=span).map(|m| lambda(fr, m)).collect();
    fourier_sum(n, kernel, k_cutoff, |k| {
        let mut prev = 0;
        let mut prod = 1.0;
        for &kj in k.iter().chain(std::iter::once(&0)) {
            prod *= lam[(kj - prev + span) as usize];
            prev = kj;
        }
        prod
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::angles;
    use crate::gaussian::PrecisionContext;

    fn set(n: u64) -> (FactoredRadius, AngleSet) {
        let fr = FactoredRadius::from_small(n).unwrap();
        let a = angles(&fr, PrecisionContext::default());
        (fr, a)
    }

    fn brute(a: &AngleSet, kernel: &SmoothingKernel, r: usize, distinct: bool) -> f64 {
        let n = a.N();
        let pk = PeriodizedKernel::new(kernel.clone(), n);
        let mut idx = vec![0usize; r];
        let mut acc = 0.0;
        loop {
            let ok = !distinct || (0..r).all(|i| (0..i).all(|j| idx[i] != idx[j]));
            if ok {
                let x: Vec<f64> = idx.windows(2).map(|w| a.angles[w[0]] - a.angles[w[1]]).collect();
                acc += pk.eval(&x);
            }
            let mut p = r;
            loop {
                if p == 0 {
                    return acc / n as f64;
                }
                p -= 1;
                idx[p] += 1;
                if idx[p] < n {
                    break;
                }
                idx[p] = 0;
            }
        }
    }

    #[test]
    fn profile_transforms_match_quadrature() {
        let tp = TableProfile::new(vec![0.0, 0.5, 1.2, 2.0], vec![1.0, 0.7, 0.2, 0.0]).unwrap();
        let profiles = [
            Profile::Gaussian { sigma: 0.7 },
            Profile::Fejer { t_max: 1.5 },
            Profile::Table(tp),
        ];
        for p in &profiles {
            for &t in &[0.0, 1e-4, 0.13, 0.6, 1.1] {
                let h = 1e-3;
                let lim = 400.0;
                let steps = (2.0 * lim / h) as usize;
                let quad: f64 = (0..=steps)
                    .map(|i| {
                        let u = -lim + i as f64 * h;
                        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                        w * p.f(u) * (2.0 * PI * u * t).cos()
                    })
                    .sum::<f64>()
                    * h;
                let tol = if matches!(p, Profile::Fejer { .. }) { 2e-3 } else { 1e-6 };
                assert!((quad - p.fhat(t)).abs() < tol, "{p:?} {t}: {quad} vs {}", p.fhat(t));
            }
        }
    }

    #[test]
    fn tail_bounds_hold() {
        let tp = TableProfile::new(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        for p in [
            Profile::Gaussian { sigma: 1.0 },
            Profile::Gaussian { sigma: 0.3 },
            Profile::Fejer { t_max: 2.0 },
            Profile::Table(tp),
        ] {
            let r = p.support_radius();
            let c = p.fhat_cutoff();
            for s in [1.0, 1.5, 3.0, 10.0] {
                assert!(p.f(r * s).abs() <= TAIL * 1.0001, "{p:?}");
                assert!(p.fhat(c * s).abs() <= TAIL * 1.0001, "{p:?}");
            }
        }
        assert!((Profile::Gaussian { sigma: 1.0 }.support_radius() - 2.965_675).abs() < 1e-5);
    }

    #[test]
    fn periodization() {
        let pk = PeriodizedKernel::new(SmoothingKernel::gaussian(2, 1.0).unwrap(), 1000);
        assert!((pk.eval(&[0.0, 0.0]) - 1.0).abs() < 1e-12);
        let x = [0.3, -0.01];
        assert!((pk.eval(&[FRAC_PI_2, 0.0]) - pk.eval(&[0.0, 0.0])).abs() < 1e-12);
        assert!((pk.eval(&[x[0] + FRAC_PI_2, x[1]]) - pk.eval(&x)).abs() < 1e-12);
        for t in [0.5, 1.0, 1.37] {
            for n in [4usize, 7, 16] {
                let pk = PeriodizedKernel::new(SmoothingKernel::fejer(2, t).unwrap(), n);
                let k = pk.kernel.required_k_cutoff(n);
                for x in [[0.0, 0.0], [0.1, 0.7], [1.2, -0.4], [1e-9, 0.0]] {
                    let a = pk.eval(&x);
                    let b = pk.eval_fourier(&x, k);
                    assert!((a - b).abs() < 1e-9, "{t} {n} {x:?}: {a} vs {b}");
                }
                // truncated translates converge to the same value
                let p = &pk.kernel.factors[0];
                let u = 0.37 * n as f64;
                let direct: f64 = (-200_000i64..=200_000).map(|j| p.f(u + (j * n as i64) as f64)).sum();
                assert!((direct - p.periodized(u, n)).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn direct_matches_brute_force() {
        let g = SmoothingKernel::gaussian(1, 1.0).unwrap();
        for n in [5u64, 65, 325, 1105, 5525] {
            let (_, a) = set(n);
            for distinct in [false, true] {
                let got = tuple_sum(&a, &g, 2, distinct).unwrap();
                assert!((got - brute(&a, &g, 2, distinct)).abs() < 1e-10);
            }
        }
        let g3 = SmoothingKernel::gaussian(2, 0.8).unwrap();
        let (_, a) = set(5 * 13 * 17 * 29);
        assert!((correlation_direct(&a, &g3, 3).unwrap() - brute(&a, &g3, 3, false)).abs() < 1e-10);
        assert!((correlation_distinct(&a, &g3, 3).unwrap() - brute(&a, &g3, 3, true)).abs() < 1e-10);
        // windowing engaged: many points, narrow window
        let (_, a) = set(5 * 13 * 17 * 29 * 37 * 41 * 53);
        let narrow = SmoothingKernel::gaussian(1, 0.5).unwrap();
        assert!((correlation_direct(&a, &narrow, 2).unwrap() - brute(&a, &narrow, 2, false)).abs() < 1e-10);
    }

    #[test]
    fn diagonal_identity() {
        let g = SmoothingKernel::gaussian(1, 1.0).unwrap();
        let (_, a) = set(5 * 13 * 17);
        let pk = PeriodizedKernel::new(g.clone(), a.N());
        let d = correlation_direct(&a, &g, 2).unwrap() - correlation_distinct(&a, &g, 2).unwrap();
        assert!((d - pk.eval(&[0.0])).abs() < 1e-12);
        let one = AngleSet::equally_spaced(1);
        let pk1 = PeriodizedKernel::new(g.clone(), 1);
        assert!((correlation_direct(&one, &g, 2).unwrap() - pk1.eval(&[0.0])).abs() < 1e-12);
        // N = r distinct angles and a constant kernel count r! ordered tuples
        let flat = SmoothingKernel::fejer(2, 1e-6).unwrap();
        let a3 = AngleSet::equally_spaced(3);
        let pk3 = PeriodizedKernel::new(flat.clone(), 3);
        let c = pk3.eval(&[0.0, 0.0]);
        let got = correlation_distinct(&a3, &flat, 3).unwrap() / c;
        assert!((got - 6.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn fourier_matches_direct() {
        for n in [5u64, 65, 325, 1105, 4 * 65, 9 * 5 * 13] {
            let (fr, a) = set(n);
            let nn = a.N();
            for r in [2usize, 3] {
                for t in [0.5, 1.0] {
                    let kern = SmoothingKernel::fejer(r - 1, t).unwrap();
                    let k = kern.required_k_cutoff(nn);
                    let f = correlation_fourier(&fr, &kern, r, k).unwrap();
                    let d = correlation_direct(&a, &kern, r).unwrap();
                    assert!((f - d).abs() < 1e-8, "{n} {r} {t}: {f} vs {d}");
                }
            }
        }
        let (fr, _) = set(65);
        let kern = SmoothingKernel::fejer(1, 1.0).unwrap();
        assert!(matches!(correlation_fourier(&fr, &kern, 2, 1), Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn second_moment_lift() {
        let g = SmoothingKernel::gaussian(2, 1.3).unwrap();
        let h = second_moment_kernel(&g).unwrap();
        assert_eq!(h.dim(), 5);
        for i in 0..100 {
            let x = [0.01 * i as f64, -0.3];
            let y = [0.2, 0.005 * i as f64];
            let v = h.fhat(&[x[0], x[1], 0.0, y[0], y[1]]);
            assert!((v - g.fhat(&x) * g.fhat(&y)).abs() < 1e-12);
        }
        assert!((h.fhat(&[0.0; 5]) - g.fhat(&[0.0; 2]).powi(2)).abs() < 1e-12);
        let tp = TableProfile::new(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            second_moment_kernel(&SmoothingKernel::table(1, tp).unwrap()),
            Err(Error::Unsupported(_))
        ));
    }
}
