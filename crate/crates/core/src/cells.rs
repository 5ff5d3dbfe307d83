//! Subset combinatorics: `k_S`, the bilinear form, `alpha(k)`, the
//! matrices `M_S`, integer kernels and the cell decomposition of
//! `Z^{r-1}` on which `alpha` is constant.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(k_1, ..., k_{r-1})` with the convention `k_0 = k_r = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KVector {
    pub k: Vec<i64>,
}

impl KVector {
    pub fn new(k: Vec<i64>) -> Self {
        KVector { k }
    }

    pub fn zero(r: usize) -> Self {
        KVector { k: vec![0; r - 1] }
    }

    pub fn r(&self) -> usize {
        self.k.len() + 1
    }

    /// `k_{j+1} - k_j` for `j = 0 .. r-1`.
    pub fn steps(&self) -> Vec<i64> {
        let mut prev = 0;
        let mut out = Vec::with_capacity(self.r());
        for &x in self.k.iter().chain(std::iter::once(&0)) {
            out.push(x - prev);
            prev = x;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.k.iter().all(|&x| x == 0)
    }
}

/// `k_S = sum_{j in S} (k_{j+1} - k_j)` for the subset encoded by `s`.
pub fn k_s(kv: &KVector, s: u32) -> i64 {
    kv.steps()
        .iter()
        .enumerate()
        .filter(|(j, _)| s >> j & 1 == 1)
        .map(|(_, m)| m)
        .sum()
}

/// `sum_j l_j (k_{j+1} - k_j)`.
pub fn bilinear(l: &[i64], kv: &KVector) -> i64 {
    l.iter().zip(kv.steps()).map(|(a, b)| a * b).sum()
}

/// Half the number of corners `l` of `{0,1}^r` with `<l, k> = 0`.
pub fn alpha(kv: &KVector) -> u64 {
    let r = kv.r();
    let steps = kv.steps();
    let count = (0u32..1 << r)
        .filter(|&l| {
            let s: i64 = (0..r).filter(|j| l >> j & 1 == 1).map(|j| steps[j]).sum();
            s == 0
        })
        .count();
    (count / 2) as u64
}

/// Number of classes `[S]` with `k_S = 0`.
pub fn alpha_class_sum(kv: &KVector) -> u64 {
    all_classes(kv.r()).iter().filter(|c| k_s(kv, c.rep) == 0).count() as u64
}

/// A subset of `{0, ..., r-1}` standing for its class modulo complement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsetClass {
    pub r: usize,
    pub rep: u32,
}

impl SubsetClass {
    /// Keeps `rep` as the chosen representative.
    pub fn new(r: usize, rep: u32) -> Self {
        SubsetClass { r, rep: rep & full_mask(r) }
    }

    /// The representative not containing `r - 1`.
    pub fn canonical(r: usize, s: u32) -> Self {
        let s = s & full_mask(r);
        let rep = if s >> (r - 1) & 1 == 1 { !s & full_mask(r) } else { s };
        SubsetClass { r, rep }
    }

    pub fn complement(&self) -> Self {
        SubsetClass { r: self.r, rep: !self.rep & full_mask(self.r) }
    }

    pub fn to_canonical(&self) -> Self {
        Self::canonical(self.r, self.rep)
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.r).filter(|j| self.rep >> j & 1 == 1).collect()
    }
}

fn full_mask(r: usize) -> u32 {
    if r >= 32 {
        u32::MAX
    } else {
        (1u32 << r) - 1
    }
}

/// The `2^{r-1}` classes with canonical representatives, in mask order.
pub fn all_classes(r: usize) -> Vec<SubsetClass> {
    (0u32..1 << (r - 1)).map(|s| SubsetClass { r, rep: s }).collect()
}

/// Coefficients of `k_1 .. k_{r-1}` in `k_S`: `[m-1 in S] - [m in S]`.
pub fn ms_row(r: usize, s: u32) -> Vec<i64> {
    (1..r)
        .map(|m| (s >> (m - 1) & 1) as i64 - (s >> m & 1) as i64)
        .collect()
}

/// The matrix `M_S` with one row per class (using the given representatives).
pub fn build_ms(classes: &[SubsetClass]) -> Vec<Vec<i64>> {
    classes.iter().map(|c| ms_row(c.r, c.rep)).collect()
}

fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    // returns (g, x, y) with a x + b y = g >= 0
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Row Hermite normal form (positive pivots, reduced above), zero rows removed.
pub fn hermite_rows(rows: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut pr = 0;
    for c in 0..ncols {
        if pr == m.len() {
            break;
        }
        for i in pr + 1..m.len() {
            if m[i][c] == 0 {
                continue;
            }
            let (a, b) = (m[pr][c], m[i][c]);
            let (g, x, y) = egcd(a, b);
            let (ag, bg) = (a / g, b / g);
            for j in 0..ncols {
                let (u, v) = (m[pr][j], m[i][j]);
                m[pr][j] = x * u + y * v;
                m[i][j] = -bg * u + ag * v;
            }
        }
        if m[pr][c] == 0 {
            continue;
        }
        if m[pr][c] < 0 {
            m[pr].iter_mut().for_each(|x| *x = -*x);
        }
        let p = m[pr][c];
        for i in 0..pr {
            let q = m[i][c].div_euclid(p);
            if q != 0 {
                for j in 0..ncols {
                    m[i][j] -= q * m[pr][j];
                }
            }
        }
        pr += 1;
    }
    m.truncate(pr);
    m.into_iter()
        .map(|r| r.into_iter().map(|x| x as i64).collect())
        .collect()
}

/// Rank over the rationals.
pub fn rank(rows: &[Vec<i64>]) -> usize {
    hermite_rows(rows).len()
}

/// A basis of the saturated lattice `ker(M) cap Z^ncols`, in row Hermite
/// normal form.
pub fn integer_kernel(m: &[Vec<i64>], ncols: usize) -> Vec<Vec<i64>> {
    let mut w: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut u: Vec<Vec<i128>> = (0..ncols)
        .map(|i| (0..ncols).map(|j| (i == j) as i128).collect())
        .collect();
    // column operations act on columns of w and of u (u stored column-major as rows)
    let mut pc = 0;
    for row in 0..w.len() {
        if pc == ncols {
            break;
        }
        for j in pc + 1..ncols {
            let b = w[row][j];
            if b == 0 {
                continue;
            }
            let a = w[row][pc];
            let (g, x, y) = egcd(a, b);
            let (ag, bg) = (a / g, b / g);
            for r2 in w.iter_mut() {
                let (p, q) = (r2[pc], r2[j]);
                r2[pc] = x * p + y * q;
                r2[j] = -bg * p + ag * q;
            }
            let (cp, cj) = (u[pc].clone(), u[j].clone());
            for t in 0..ncols {
                u[pc][t] = x * cp[t] + y * cj[t];
                u[j][t] = -bg * cp[t] + ag * cj[t];
            }
        }
        if w[row][pc] != 0 {
            pc += 1;
        }
    }
    let basis: Vec<Vec<i64>> = u[pc..]
        .iter()
        .map(|c| c.iter().map(|&x| x as i64).collect())
        .collect();
    hermite_rows(&basis)
}

/// A set of hyperplanes `{k : row . k = 0}` in `Q^dim`, one per class.
struct Arrangement {
    dim: usize,
    rows: Vec<Vec<i64>>,
}

struct Flat {
    closure: u128,
    basis: Vec<Vec<i64>>,
    children: Vec<usize>,
}

impl Arrangement {
    fn rows_of(&self, mask: u128) -> Vec<Vec<i64>> {
        (0..self.rows.len())
            .filter(|&c| mask >> c & 1 == 1)
            .map(|c| self.rows[c].clone())
            .collect()
    }

    fn closure_of(&self, basis: &[Vec<i64>]) -> u128 {
        let mut mask = 0u128;
        for (c, row) in self.rows.iter().enumerate() {
            if basis.iter().all(|b| dot(row, b) == 0) {
                mask |= 1 << c;
            }
        }
        mask
    }

    fn zero_mask(&self, k: &[i64]) -> u128 {
        let mut mask = 0u128;
        for (c, row) in self.rows.iter().enumerate() {
            if dot(row, k) == 0 {
                mask |= 1 << c;
            }
        }
        mask
    }

    fn flat(&self, mask: u128) -> (u128, Vec<Vec<i64>>) {
        let basis = integer_kernel(&self.rows_of(mask), self.dim);
        (self.closure_of(&basis), basis)
    }

    /// All flats inside the flat generated by `start`, breadth first.
    fn flats(&self, start: u128) -> Vec<Flat> {
        let (c0, b0) = self.flat(start);
        let mut out = vec![Flat { closure: c0, basis: b0, children: Vec::new() }];
        let mut seen: HashMap<u128, usize> = HashMap::from([(c0, 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let cl = out[i].closure;
            let mut kids = Vec::new();
            for c in 0..self.rows.len() {
                if cl >> c & 1 == 1 {
                    continue;
                }
                let (closure, basis) = self.flat(cl | 1 << c);
                let idx = *seen.entry(closure).or_insert_with(|| {
                    out.push(Flat { closure, basis, children: Vec::new() });
                    queue.push_back(out.len() - 1);
                    out.len() - 1
                });
                if !kids.contains(&idx) {
                    kids.push(idx);
                }
            }
            kids.sort_unstable();
            out[i].children = kids;
        }
        out
    }
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One starred piece `V*` of the decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCell {
    /// Every class `[S]` with `k_S = 0` on the cell (canonical representatives).
    pub defining_classes: Vec<SubsetClass>,
    pub kernel_basis: Vec<Vec<i64>>,
    pub d: usize,
    pub alpha: u64,
    /// The defining set is closed: no further class vanishes on the kernel.
    pub maximal: bool,
    /// Indices of the cells one dimension lower whose closures contain this one.
    pub subcells: Vec<usize>,
}

/// The cells of `Z^{r-1}`, sorted by decreasing dimension then by class set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellTable {
    pub r: usize,
    pub cells: Vec<KernelCell>,
    #[serde(skip)]
    index: HashMap<u128, usize>,
}

fn mask_classes(r: usize, mask: u128) -> Vec<SubsetClass> {
    (0..1u32 << (r - 1))
        .filter(|&c| mask >> c & 1 == 1)
        .map(|c| SubsetClass { r, rep: c })
        .collect()
}

fn class_mask(classes: &[SubsetClass]) -> u128 {
    classes.iter().fold(0u128, |m, c| m | 1 << c.to_canonical().rep)
}

fn build_table(r: usize, flats: Vec<Flat>, class_count: usize) -> (Vec<KernelCell>, HashMap<u128, usize>) {
    let mut order: Vec<usize> = (0..flats.len()).collect();
    order.sort_by(|&a, &b| {
        flats[b].basis.len().cmp(&flats[a].basis.len()).then(flats[a].closure.cmp(&flats[b].closure))
    });
    let mut pos = vec![0; flats.len()];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let cells: Vec<KernelCell> = order
        .iter()
        .map(|&i| {
            let f = &flats[i];
            let mut subcells: Vec<usize> = f.children.iter().map(|&c| pos[c]).collect();
            subcells.sort_unstable();
            KernelCell {
                defining_classes: if class_count <= 32 {
                    mask_classes(r, f.closure)
                } else {
                    Vec::new()
                },
                kernel_basis: f.basis.clone(),
                d: f.basis.len(),
                alpha: f.closure.count_ones() as u64,
                maximal: true,
                subcells,
            }
        })
        .collect();
    let index = order.iter().enumerate().map(|(p, &i)| (flats[i].closure, p)).collect();
    (cells, index)
}

/// The decomposition of `Z^{r-1}` into starred kernels, for `2 <= r <= 6`.
pub fn enumerate_cells(r: usize) -> Result<CellTable> {
    if r < 2 {
        return Err(Error::InvalidArgument("r must be at least 2".into()));
    }
    if r > 6 {
        return Err(Error::InfeasibleR(r));
    }
    let classes = all_classes(r);
    let arr = Arrangement { dim: r - 1, rows: build_ms(&classes) };
    let flats = arr.flats(1);
    let (cells, index) = build_table(r, flats, classes.len());
    Ok(CellTable { r, cells, index })
}

impl CellTable {
    fn zero_mask(&self, kv: &KVector) -> u128 {
        all_classes(self.r)
            .iter()
            .filter(|c| k_s(kv, c.rep) == 0)
            .fold(0u128, |m, c| m | 1 << c.rep)
    }

    /// The unique starred cell containing `kv`.
    pub fn classify(&self, kv: &KVector) -> &KernelCell {
        &self.cells[self.index[&self.zero_mask(kv)]]
    }

    /// Membership in the starred cell: in the kernel, outside every subcell.
    pub fn contains_starred(&self, cell: usize, kv: &KVector) -> bool {
        let c = &self.cells[cell];
        let m = build_ms(&c.defining_classes);
        if m.iter().any(|row| dot(row, &kv.k) != 0) {
            return false;
        }
        c.subcells.iter().all(|&s| {
            let sub = build_ms(&self.cells[s].defining_classes);
            sub.iter().any(|row| dot(row, &kv.k) != 0)
        })
    }

    pub fn cell_index(&self, classes: &[SubsetClass]) -> Option<usize> {
        self.index.get(&class_mask(classes)).copied()
    }
}

/// `classify` as a free function.
pub fn classify<'a>(kv: &KVector, cells: &'a CellTable) -> &'a KernelCell {
    cells.classify(kv)
}

/// Number of points of `{0,1}^n` in the rational span of `basis`.
pub fn hypercube_intersection_count(basis: &[Vec<i64>]) -> Result<u64> {
    if basis.is_empty() {
        return Ok(1);
    }
    let n = basis[0].len();
    if basis.iter().any(|b| b.len() != n) {
        return Err(Error::InvalidArgument("basis vectors differ in length".into()));
    }
    if n > 24 {
        return Err(Error::InfeasibleN(n));
    }
    let d = basis.len();
    let rk = rank(basis);
    if rk != d {
        return Err(Error::RankDeficient { rank: rk, expected: d });
    }
    // choose d independent coordinates
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..n {
        let mut trial = chosen.clone();
        trial.push(i);
        let rows: Vec<Vec<i64>> = trial.iter().map(|&t| basis.iter().map(|b| b[t]).collect()).collect();
        if rank(&rows) == trial.len() {
            chosen = trial;
            if chosen.len() == d {
                break;
            }
        }
    }
    // C = A B^{-1}, scaled to integers by the common denominator
    let b_mat: Vec<Vec<BigRational>> = chosen
        .iter()
        .map(|&t| basis.iter().map(|b| BigRational::from_integer(BigInt::from(b[t]))).collect())
        .collect();
    let inv = invert(b_mat);
    let mut c_rat = vec![vec![BigRational::zero(); d]; n];
    for i in 0..n {
        for j in 0..d {
            let mut s = BigRational::zero();
            for t in 0..d {
                s += BigRational::from_integer(BigInt::from(basis[t][i])) * &inv[t][j];
            }
            c_rat[i][j] = s;
        }
    }
    let mut den = BigInt::one();
    for row in &c_rat {
        for x in row {
            den = den.lcm(x.denom());
        }
    }
    let scale = den.to_i128().ok_or_else(|| Error::InvalidArgument("denominator overflow".into()))?;
    let c: Vec<Vec<i128>> = c_rat
        .iter()
        .map(|row| {
            row.iter()
                .map(|x| (x * BigRational::from_integer(den.clone())).to_integer().to_i128().unwrap())
                .collect()
        })
        .collect();
    // Gray-code walk over x in {0,1}^d, keeping v = C x
    let mut v = vec![0i128; n];
    let in_cube = |v: &[i128]| v.iter().all(|&y| y == 0 || y == scale);
    let mut count = in_cube(&v) as u64;
    let mut x = vec![false; d];
    for step in 1u64..1 << d {
        let j = step.trailing_zeros() as usize;
        x[j] = !x[j];
        let sign = if x[j] { 1 } else { -1 };
        for i in 0..n {
            v[i] += sign * c[i][j];
        }
        if in_cube(&v) {
            count += 1;
        }
    }
    Ok(count)
}

fn invert(mut m: Vec<Vec<BigRational>>) -> Vec<Vec<BigRational>> {
    let d = m.len();
    let mut inv: Vec<Vec<BigRational>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect();
    for col in 0..d {
        let p = (col..d).find(|&r| !m[r][col].is_zero()).expect("nonsingular");
        m.swap(col, p);
        inv.swap(col, p);
        let pivot = m[col][col].clone();
        for j in 0..d {
            m[col][j] = &m[col][j] / &pivot;
            inv[col][j] = &inv[col][j] / &pivot;
        }
        for r in 0..d {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in 0..d {
                    let a = &m[col][j] * &f;
                    m[r][j] -= a;
                    let b = &inv[col][j] * &f;
                    inv[r][j] -= b;
                }
            }
        }
    }
    inv
}

/// The subspace `{l in Q^r : <l, k> = 0 for all k in span(basis)}`.
pub fn corner_space(r: usize, basis: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let rows: Vec<Vec<i64>> = basis
        .iter()
        .map(|b| {
            (0..r)
                .map(|j| {
                    let up = if j + 1 <= r - 1 { b[j] } else { 0 };
                    let down = if j >= 1 { b[j - 1] } else { 0 };
                    up - down
                })
                .collect()
        })
        .collect();
    integer_kernel(&rows, r)
}

/// `alpha` of a cell recomputed as half the hypercube count of its corner space.
pub fn cell_alpha_by_hypercube(r: usize, cell: &KernelCell) -> Result<u64> {
    Ok(hypercube_intersection_count(&corner_space(r, &cell.kernel_basis))? / 2)
}

/// Cells of `Z^{2r-1}` (the `2r`-point arrangement) inside the slice `k_r = 0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftedCells {
    pub r: usize,
    /// False when the cells were discovered by sampling.
    pub exhaustive: bool,
    pub cells: Vec<KernelCell>,
    #[serde(skip)]
    index: HashMap<u128, usize>,
}

impl LiftedCells {
    pub fn classify(&self, kv: &KVector) -> Option<&KernelCell> {
        let arr = lifted_arrangement(self.r);
        self.index.get(&arr.zero_mask(&kv.k)).map(|&i| &self.cells[i])
    }
}

fn lifted_arrangement(r: usize) -> Arrangement {
    let rr = 2 * r;
    Arrangement { dim: rr - 1, rows: (0u32..1 << (rr - 1)).map(|s| ms_row(rr, s)).collect() }
}

/// Index of the class `[{0, ..., r-1}]` in the lifted arrangement.
fn mu_class(r: usize) -> usize {
    (1usize << r) - 1
}

/// Lifted cells for `r <= 3` exhaustively, for `r = 4` by sampling
/// `samples` random lattice points of random flats.
pub fn lifted_cells(r: usize, samples: usize, seed: u64) -> Result<LiftedCells> {
    if r < 2 {
        return Err(Error::InvalidArgument("r must be at least 2".into()));
    }
    if r > 4 {
        return Err(Error::InfeasibleR(r));
    }
    let arr = lifted_arrangement(r);
    let mu = 1u128 << mu_class(r);
    let class_count = arr.rows.len();
    if r <= 3 {
        let flats = arr.flats(mu);
        let (cells, index) = build_table(2 * r, flats, class_count);
        return Ok(LiftedCells { r, exhaustive: true, cells, index });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found: HashMap<u128, Vec<Vec<i64>>> = HashMap::new();
    for _ in 0..samples {
        let mut mask = mu;
        let extra = rng.gen_range(0..arr.dim);
        for _ in 0..extra {
            mask |= 1 << rng.gen_range(0..class_count);
        }
        let (_, basis) = arr.flat(mask);
        let mut k = vec![0i64; arr.dim];
        for b in &basis {
            let c = rng.gen_range(-6i64..=6);
            for (x, y) in k.iter_mut().zip(b) {
                *x += c * y;
            }
        }
        let z = arr.zero_mask(&k);
        found.entry(z).or_insert_with(|| arr.flat(z).1);
    }
    let flats: Vec<Flat> = found
        .into_iter()
        .map(|(closure, basis)| Flat { closure, basis, children: Vec::new() })
        .collect();
    let (cells, index) = build_table(2 * r, flats, class_count);
    Ok(LiftedCells { r, exhaustive: false, cells, index })
}

/// Lifted-cell `alpha` bound `alpha <= 2^{2r-d-1}`.
pub fn lifted_alpha_bound(r: usize, d: usize) -> u64 {
    1u64 << (2 * r - d - 1)
}

impl KernelCell {
    /// Nonzero entries of the basis are bounded by this magnitude.
    pub fn max_entry(&self) -> i64 {
        self.kernel_basis.iter().flatten().map(|x| x.abs()).max().unwrap_or(0)
    }
}

/// Whether `v` lies in the rational span of `basis`.
pub fn in_span(basis: &[Vec<i64>], v: &[i64]) -> bool {
    let mut rows = basis.to_vec();
    let before = rank(&rows);
    rows.push(v.to_vec());
    rank(&rows) == before
}
