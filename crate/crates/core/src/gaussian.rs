//! Gaussian-integer arithmetic: split primes, prime angles and the
//! repulsion inequality.

use astro_float::{BigFloat, Consts, RoundingMode};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SEGMENT: usize = 1 << 18;

/// All primes `<= x` in ascending order (segmented odd-only sieve).
pub fn primes_up_to(x: u64) -> Vec<u64> {
    if x < 2 {
        return Vec::new();
    }
    let root = (x as f64).sqrt() as u64 + 1;
    let base = small_sieve(root.min(x));
    let mut out = vec![2u64];
    // segment covers odd numbers lo, lo+2, ..., indexed by (n - lo) / 2
    let mut lo = 3u64;
    let mut seg = vec![true; SEGMENT];
    while lo <= x {
        let hi = (lo + 2 * SEGMENT as u64 - 2).min(x | 1);
        let len = ((hi - lo) / 2 + 1) as usize;
        seg[..len].iter_mut().for_each(|s| *s = true);
        for &p in base.iter().skip(1) {
            let sq = p * p;
            if sq > hi {
                break;
            }
            let mut start = if sq >= lo { sq } else { lo.div_ceil(p) * p };
            if start % 2 == 0 {
                start += p;
            }
            let mut i = ((start - lo) / 2) as usize;
            while i < len {
                seg[i] = false;
                i += p as usize;
            }
        }
        for (i, &s) in seg[..len].iter().enumerate() {
            let n = lo + 2 * i as u64;
            if s && n <= x {
                out.push(n);
            }
        }
        lo = hi + 2;
    }
    out
}

fn small_sieve(n: u64) -> Vec<u64> {
    let n = n as usize;
    let mut comp = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !comp[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                comp[j] = true;
                j += i;
            }
        }
    }
    out
}

/// The primes `p <= x` with `p = 1 (mod 4)`, ascending.
pub fn sieve_split_primes(x: u64) -> Vec<u64> {
    primes_up_to(x).into_iter().filter(|p| p % 4 == 1).collect()
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for all 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &w in &WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'outer: for &w in &WITNESSES {
        let mut x = pow_mod(w, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// A square root of -1 modulo the prime `p = 1 (mod 4)`, taken as
/// `c^((p-1)/4)` for the smallest quadratic non-residue `c`.
pub fn sqrt_minus_one(p: u64) -> u64 {
    let half = (p - 1) / 2;
    let mut c = 2;
    while pow_mod(c, half, p) != p - 1 {
        c += 1;
    }
    pow_mod(c, (p - 1) / 4, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Gint {
    re: i128,
    im: i128,
}

impl Gint {
    fn norm(self) -> i128 {
        self.re * self.re + self.im * self.im
    }

    fn rem(self, d: Gint) -> Gint {
        // nearest-integer quotient of self * conj(d) / |d|^2
        let n = d.norm();
        let re = self.re * d.re + self.im * d.im;
        let im = self.im * d.re - self.re * d.im;
        let q = Gint {
            re: div_round(re, n),
            im: div_round(im, n),
        };
        Gint {
            re: self.re - (q.re * d.re - q.im * d.im),
            im: self.im - (q.re * d.im + q.im * d.re),
        }
    }
}

fn div_round(a: i128, b: i128) -> i128 {
    (2 * a + b).div_euclid(2 * b)
}

/// A rational prime `p = 1 (mod 4)` with its Gaussian factor `a + bi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPrime {
    pub p: u64,
    pub a: u64,
    pub b: u64,
    /// `atan(b / a)`, in `(0, pi/4)`.
    pub theta: f64,
}

impl SplitPrime {
    /// `theta` evaluated with `bits` of mantissa.
    pub fn theta_big(&self, bits: usize, cc: &mut Consts) -> BigFloat {
        let rm = RoundingMode::ToEven;
        let ratio = BigFloat::from_u64(self.b, bits).div(&BigFloat::from_u64(self.a, bits), bits, rm);
        ratio.atan(bits, rm, cc)
    }

    /// `e^{2i theta}` as the exact rational pair `((a^2 - b^2)/p, 2ab/p)`
    /// returned as numerators over the common denominator `p`.
    pub fn double_angle(&self) -> (i128, i128) {
        let (a, b) = (self.a as i128, self.b as i128);
        (a * a - b * b, 2 * a * b)
    }
}

/// Solves `a^2 + b^2 = p` with `a > b >= 1`.
pub fn split_prime(p: u64) -> Result<SplitPrime> {
    if p >= 1 << 62 {
        return Err(Error::InvalidArgument(format!("{p} exceeds the supported range")));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p % 4 != 1 {
        return Err(Error::NotSplit(p));
    }
    Ok(solve_split(p))
}

/// Every split prime `p <= x` with its Gaussian factor, ascending.
pub fn split_primes_up_to(x: u64) -> Vec<SplitPrime> {
    sieve_split_primes(x).into_iter().map(solve_split).collect()
}

fn solve_split(p: u64) -> SplitPrime {
    let t = sqrt_minus_one(p);
    let mut x = Gint { re: p as i128, im: 0 };
    let mut y = Gint { re: t as i128, im: 1 };
    while y.norm() != 0 {
        let r = x.rem(y);
        x = y;
        y = r;
    }
    let (u, v) = (x.re.unsigned_abs() as u64, x.im.unsigned_abs() as u64);
    let (a, b) = if u > v { (u, v) } else { (v, u) };
    debug_assert_eq!(a as u128 * a as u128 + b as u128 * b as u128, p as u128);
    SplitPrime {
        p,
        a,
        b,
        theta: (b as f64).atan2(a as f64),
    }
}

/// Indicator that `n` is a sum of two squares: every prime `3 (mod 4)`
/// divides `n` to an even power.
pub fn is_sum_of_two_squares(n: u64) -> bool {
    if n == 0 {
        return true;
    }
    let mut m = n >> n.trailing_zeros();
    let mut q = 3u64;
    while q * q <= m {
        if m % q == 0 {
            let mut e = 0;
            while m % q == 0 {
                m /= q;
                e += 1;
            }
            if q % 4 == 3 && e % 2 == 1 {
                return false;
            }
        }
        q += 2;
    }
    m % 4 != 3
}

/// Working precision for high-precision angle computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionContext {
    pub mantissa_bits: usize,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext { mantissa_bits: 64 }
    }
}

impl PrecisionContext {
    pub const REPULSION_MIN_BITS: usize = 256;

    pub fn new(mantissa_bits: usize) -> Self {
        PrecisionContext { mantissa_bits }
    }

    /// Error bound for a chain of `ops` elementary operations on values of
    /// magnitude at most `scale`.
    pub fn error_bound(&self, ops: usize, scale: f64) -> f64 {
        ops as f64 * scale.max(1.0) * 2f64.powi(3 - self.mantissa_bits as i32)
    }
}

/// Outcome of a repulsion check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Repulsion {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub lhs_positive: bool,
    pub error_bound: f64,
}

pub(crate) fn big_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    x.to_string().parse().unwrap_or(f64::NAN)
}

/// Evaluates `|exp(i sum c_j theta_j) - 1|` against `prod p_j^{-|c_j|/2}`.
pub fn check_repulsion(
    primes: &[SplitPrime],
    coeffs: &[i64],
    ctx: PrecisionContext,
) -> Result<Repulsion> {
    if primes.len() != coeffs.len() || primes.is_empty() {
        return Err(Error::InvalidArgument(
            "primes and coefficients must be nonempty and of equal length".into(),
        ));
    }
    if coeffs.iter().any(|&c| c == 0) {
        return Err(Error::InvalidArgument("coefficients must be nonzero".into()));
    }
    for (i, p) in primes.iter().enumerate() {
        if primes[..i].iter().any(|q| q.p == p.p) {
            return Err(Error::InvalidArgument(format!("repeated prime {}", p.p)));
        }
    }
    let bits = ctx.mantissa_bits;
    if bits < PrecisionContext::REPULSION_MIN_BITS {
        return Err(Error::PrecisionInsufficient(format!(
            "repulsion checks need at least {} bits, got {bits}",
            PrecisionContext::REPULSION_MIN_BITS
        )));
    }
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().map_err(|e| Error::PrecisionInsufficient(format!("{e:?}")))?;

    let mut sum = BigFloat::from_u64(0, bits);
    let mut norm = BigFloat::from_u64(1, bits);
    let mut weight = 0.0;
    for (sp, &c) in primes.iter().zip(coeffs) {
        let theta = sp.theta_big(bits, &mut cc);
        sum = sum.add(&theta.mul(&BigFloat::from_i64(c, bits), bits, rm), bits, rm);
        for _ in 0..c.unsigned_abs() {
            norm = norm.mul(&BigFloat::from_u64(sp.p, bits), bits, rm);
        }
        weight += c.unsigned_abs() as f64;
    }
    let half = sum.div(&BigFloat::from_u64(2, bits), bits, rm);
    let lhs = half.sin(bits, rm, &mut cc).abs().mul(&BigFloat::from_u64(2, bits), bits, rm);
    let rhs = norm.sqrt(bits, rm).reciprocal(bits, rm);
    if lhs.is_nan() || rhs.is_nan() {
        return Err(Error::PrecisionInsufficient("evaluation produced NaN".into()));
    }

    let ops = 4 * primes.len() + 4 + weight as usize;
    let bound = ctx.error_bound(ops, weight);
    let diff = big_to_f64(&lhs.sub(&rhs, bits, rm));
    if diff.abs() <= bound {
        return Err(Error::PrecisionInsufficient(format!(
            "|lhs - rhs| = {:e} is within the error bound {:e}",
            diff.abs(),
            bound
        )));
    }
    let lhs_f = big_to_f64(&lhs);
    Ok(Repulsion {
        lhs: lhs_f,
        rhs: big_to_f64(&rhs),
        holds: diff > 0.0,
        lhs_positive: lhs_f > bound,
        error_bound: bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn small_sieves() {
        assert!(sieve_split_primes(4).is_empty());
        assert_eq!(sieve_split_primes(50), vec![5, 13, 17, 29, 37, 41]);
        let s = sieve_split_primes(100);
        assert_eq!(s.len(), 11);
        assert_eq!(*s.last().unwrap(), 97);
    }

    #[test]
    fn sieve_matches_trial_division() {
        let x = 100_000;
        let want: Vec<u64> = (2..=x).filter(|&n| trial_prime(n)).collect();
        assert_eq!(primes_up_to(x), want);
        for x in [2, 3, 9, 25, 523, 524, 525] {
            let want: Vec<u64> = (2..=x).filter(|&n| trial_prime(n)).collect();
            assert_eq!(primes_up_to(x), want);
        }
    }

    #[test]
    fn segment_boundaries() {
        // pi(2^20) = 82025, pi(10^7) = 664579
        assert_eq!(primes_up_to(1 << 20).len(), 82025);
        assert_eq!(primes_up_to(10_000_000).len(), 664_579);
    }

    #[test]
    fn miller_rabin() {
        for n in 0..5000u64 {
            assert_eq!(is_prime(n), trial_prime(n), "{n}");
        }
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn split_examples() {
        let s = split_prime(5).unwrap();
        assert_eq!((s.a, s.b), (2, 1));
        assert!((s.theta - 0.4636476090).abs() < 1e-10);
        let s = split_prime(13).unwrap();
        assert_eq!((s.a, s.b), (3, 2));
        assert!((s.theta - 0.5880026035).abs() < 1e-10);
        assert_eq!(split_prime(3), Err(Error::NotSplit(3)));
        assert_eq!(split_prime(2), Err(Error::NotSplit(2)));
        assert_eq!(split_prime(21), Err(Error::NotPrime(21)));
    }

    #[test]
    fn split_all_small() {
        for p in sieve_split_primes(200_000) {
            let s = split_prime(p).unwrap();
            assert_eq!(s.a * s.a + s.b * s.b, p);
            assert!(s.a > s.b && s.b >= 1);
            assert!(s.theta > 0.0 && s.theta < std::f64::consts::FRAC_PI_4);
        }
        let big = 1_000_000_000_000_037u64;
        if is_prime(big) && big % 4 == 1 {
            let s = split_prime(big).unwrap();
            assert_eq!(s.a as u128 * s.a as u128 + s.b as u128 * s.b as u128, big as u128);
        }
    }

    #[test]
    fn sums_of_two_squares() {
        let brute = |n: u64| (0..=n).take_while(|x| x * x <= n).any(|x| {
            let r = n - x * x;
            let y = (r as f64).sqrt().round() as u64;
            y * y == r
        });
        for n in 1..3000 {
            assert_eq!(is_sum_of_two_squares(n), brute(n), "{n}");
        }
        assert!(is_sum_of_two_squares(1));
        assert!(!is_sum_of_two_squares(21));
        assert!(is_sum_of_two_squares(65));
    }

    #[test]
    fn repulsion_examples() {
        let ctx = PrecisionContext::new(256);
        let p5 = split_prime(5).unwrap();
        let p13 = split_prime(13).unwrap();
        let r = check_repulsion(&[p5], &[1], ctx).unwrap();
        assert!((r.lhs - 0.45951).abs() < 1e-5 && (r.rhs - 0.44721).abs() < 1e-5 && r.holds);
        let r = check_repulsion(&[p5], &[2], ctx).unwrap();
        assert!((r.lhs - 0.89443).abs() < 1e-5 && (r.rhs - 0.2).abs() < 1e-12 && r.holds);
        let r = check_repulsion(&[p5, p13], &[1, -1], ctx).unwrap();
        assert!((r.lhs - 0.124_274_883).abs() < 1e-8 && (r.rhs - 0.124_034_735).abs() < 1e-8 && r.holds);
        assert!((r.lhs / r.rhs - 1.002).abs() < 1e-3);
        assert!(r.lhs_positive);
    }

    #[test]
    fn repulsion_rejects_low_precision() {
        let p5 = split_prime(5).unwrap();
        assert!(matches!(
            check_repulsion(&[p5], &[1], PrecisionContext::default()),
            Err(Error::PrecisionInsufficient(_))
        ));
        assert!(check_repulsion(&[p5, p5], &[1, 1], PrecisionContext::new(256)).is_err());
        assert!(check_repulsion(&[p5], &[0], PrecisionContext::new(256)).is_err());
    }
}
