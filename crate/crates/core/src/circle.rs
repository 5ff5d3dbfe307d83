//! Radii in factored form, the angles of their lattice points modulo
//! `pi/2`, and the Fourier coefficients `lambda_{4k}(n)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::io::{self, Write};

use astro_float::{BigFloat, Consts, RoundingMode};
use num_bigint::{BigInt, BigUint};
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gaussian::{big_to_f64, is_prime, sieve_split_primes, split_prime, PrecisionContext, SplitPrime};

const PIO2_LO: f64 = 6.123_233_995_736_766e-17;

/// An integer `n = 2^a * prod q^(2b) * prod p^e` with every `q = 3 (mod 4)`
/// and every `p = 1 (mod 4)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactoredRadius {
    pub two_exp: u32,
    pub inert_factors: Vec<(u64, u32)>,
    pub split_factors: Vec<(SplitPrime, u32)>,
}

impl FactoredRadius {
    pub fn new(
        two_exp: u32,
        inert_factors: Vec<(u64, u32)>,
        split_factors: Vec<(SplitPrime, u32)>,
    ) -> Result<Self> {
        for (i, &(q, e)) in inert_factors.iter().enumerate() {
            if q % 4 != 3 || !is_prime(q) {
                return Err(Error::InvalidRadius(format!("{q} is not a prime 3 mod 4")));
            }
            if e % 2 != 0 || e == 0 {
                return Err(Error::InvalidRadius(format!("inert prime {q} has exponent {e}")));
            }
            if inert_factors[..i].iter().any(|f| f.0 == q) {
                return Err(Error::InvalidRadius(format!("repeated prime {q}")));
            }
        }
        for (i, (sp, e)) in split_factors.iter().enumerate() {
            if *e == 0 {
                return Err(Error::InvalidRadius(format!("split prime {} has exponent 0", sp.p)));
            }
            if split_factors[..i].iter().any(|f| f.0.p == sp.p) {
                return Err(Error::InvalidRadius(format!("repeated prime {}", sp.p)));
            }
        }
        Ok(FactoredRadius {
            two_exp,
            inert_factors,
            split_factors,
        })
    }

    /// Squarefree product of distinct primes `1 (mod 4)`.
    pub fn from_split_primes(primes: &[u64]) -> Result<Self> {
        let split = primes
            .iter()
            .map(|&p| split_prime(p).map(|sp| (sp, 1)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(0, Vec::new(), split)
    }

    /// Factors `n` by trial division.
    pub fn from_small(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidRadius("n must be positive".into()));
        }
        if n > 1_000_000_000_000 {
            return Err(Error::InvalidRadius(format!("{n} is too large to factor by trial division")));
        }
        let two_exp = n.trailing_zeros();
        let mut m = n >> two_exp;
        let mut inert = Vec::new();
        let mut split = Vec::new();
        let mut q = 3u64;
        let mut push = |q: u64, e: u32| -> Result<()> {
            if q % 4 == 3 {
                if e % 2 == 1 {
                    return Err(Error::InvalidRadius(format!("{n} is not a sum of two squares")));
                }
                inert.push((q, e));
            } else {
                split.push((split_prime(q)?, e));
            }
            Ok(())
        };
        while q * q <= m {
            if m % q == 0 {
                let mut e = 0;
                while m % q == 0 {
                    m /= q;
                    e += 1;
                }
                push(q, e)?;
            }
            q += 2;
        }
        if m > 1 {
            push(m, 1)?;
        }
        Self::new(two_exp, inert, split)
    }

    /// Product with a radius sharing no prime factor with `self`.
    pub fn combine(&self, other: &FactoredRadius) -> Result<Self> {
        let mut inert = self.inert_factors.clone();
        inert.extend(other.inert_factors.iter().copied());
        let mut split = self.split_factors.clone();
        split.extend(other.split_factors.iter().copied());
        Self::new(self.two_exp + other.two_exp, inert, split)
    }

    pub fn n(&self) -> BigUint {
        let mut n = BigUint::one() << self.two_exp;
        for &(q, e) in &self.inert_factors {
            n *= BigUint::from(q).pow(e);
        }
        for (sp, e) in &self.split_factors {
            n *= BigUint::from(sp.p).pow(*e);
        }
        n
    }

    pub fn r(&self) -> u64 {
        r_of(self)
    }
}

/// `r(n)`: a quarter of the number of lattice points on `x^2 + y^2 = n`.
pub fn r_of(fr: &FactoredRadius) -> u64 {
    fr.split_factors.iter().map(|&(_, e)| e as u64 + 1).product()
}

/// The sorted angles modulo `pi/2` of the lattice points on a circle.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleSet {
    pub n: BigUint,
    pub angles: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct AngleSetRecord {
    n: String,
    #[serde(rename = "N")]
    count: usize,
    angles: Vec<f64>,
}

impl Serialize for AngleSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AngleSetRecord {
            n: self.n.to_string(),
            count: self.angles.len(),
            angles: self.angles.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AngleSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = AngleSetRecord::deserialize(d)?;
        let n = rec.n.parse().map_err(serde::de::Error::custom)?;
        if rec.count != rec.angles.len() {
            return Err(serde::de::Error::custom("N does not match the number of angles"));
        }
        Ok(AngleSet::from_unsorted(n, rec.angles))
    }
}

impl AngleSet {
    /// Reduces every angle into `[0, pi/2)` and sorts.
    pub fn from_unsorted(n: BigUint, mut angles: Vec<f64>) -> Self {
        for a in angles.iter_mut() {
            *a = reduce_quarter(*a, 0.0);
        }
        angles.sort_by(f64::total_cmp);
        AngleSet { n, angles }
    }

    /// `count` equally spaced angles `j (pi/2) / count`.
    pub fn equally_spaced(count: usize) -> Self {
        let step = FRAC_PI_2 / count as f64;
        AngleSet {
            n: BigUint::zero(),
            angles: (0..count).map(|j| j as f64 * step).collect(),
        }
    }

    #[allow(non_snake_case)]
    pub fn N(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// One angle per line with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "angle")?;
        for a in &self.angles {
            writeln!(w, "{a:.16e}")?;
        }
        Ok(())
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Reduces the double-double value `hi + lo` into `[0, pi/2)`.
pub(crate) fn reduce_quarter(hi: f64, lo: f64) -> f64 {
    let q = ((hi + lo) / FRAC_PI_2).floor();
    let mut r = (-q).mul_add(FRAC_PI_2, hi);
    r = (-q).mul_add(PIO2_LO, r) + lo;
    if r < 0.0 {
        r += FRAC_PI_2;
    }
    if r >= FRAC_PI_2 {
        r -= FRAC_PI_2;
    }
    r
}

/// The multiset `{ a pi/4 + sum_t (2 l_t - a_t) theta_t mod pi/2 }` of
/// lattice-point angles, sorted.
pub fn angles(fr: &FactoredRadius, ctx: PrecisionContext) -> AngleSet {
    if ctx.mantissa_bits > 64 {
        return angles_big(fr, ctx.mantissa_bits);
    }
    let n_total = r_of(fr) as usize;
    let mut acc: Vec<(f64, f64)> = Vec::with_capacity(n_total);
    acc.push(two_sum((fr.two_exp % 2) as f64 * FRAC_PI_4, 0.0));
    for (sp, e) in &fr.split_factors {
        let e = *e as i64;
        let mut next = Vec::with_capacity(acc.len() * (e as usize + 1));
        for &(hi, lo) in &acc {
            for l in 0..=e {
                let (s, err) = two_sum(hi, (2 * l - e) as f64 * sp.theta);
                next.push((s, err + lo));
            }
        }
        acc = next;
    }
    let mut out: Vec<f64> = acc.into_iter().map(|(h, l)| reduce_quarter(h, l)).collect();
    out.sort_by(f64::total_cmp);
    AngleSet {
        n: fr.n(),
        angles: out,
    }
}

fn angles_big(fr: &FactoredRadius, bits: usize) -> AngleSet {
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().expect("constant cache");
    let quarter = cc.pi(bits, rm).div(&BigFloat::from_u64(2, bits), bits, rm);
    let eighth = quarter.div(&BigFloat::from_u64(2, bits), bits, rm);
    let mut acc = vec![eighth.mul(&BigFloat::from_u64(fr.two_exp as u64 % 2, bits), bits, rm)];
    for (sp, e) in &fr.split_factors {
        let theta = sp.theta_big(bits, &mut cc);
        let e = *e as i64;
        let mut next = Vec::with_capacity(acc.len() * (e as usize + 1));
        for v in &acc {
            for l in 0..=e {
                let t = theta.mul(&BigFloat::from_i64(2 * l - e, bits), bits, rm);
                next.push(v.add(&t, bits, rm));
            }
        }
        acc = next;
    }
    let mut out: Vec<f64> = acc
        .iter()
        .map(|v| {
            let q = v.div(&quarter, bits, rm).floor();
            let r = v.sub(&q.mul(&quarter, bits, rm), bits, rm);
            let f = big_to_f64(&r);
            if f >= FRAC_PI_2 {
                f - FRAC_PI_2
            } else {
                f.max(0.0)
            }
        })
        .collect();
    out.sort_by(f64::total_cmp);
    AngleSet {
        n: fr.n(),
        angles: out,
    }
}

/// Angles of the lattice points on `x^2 + y^2 = n` found by direct search,
/// one per quarter-turn orbit (the representative with `x > 0, y >= 0`).
pub fn brute_force_angles(n: u64) -> AngleSet {
    let mut out = Vec::new();
    let top = n.sqrt();
    for x in 1..=top {
        let rest = n - x * x;
        let y = rest.sqrt();
        if y * y == rest {
            out.push((y as f64).atan2(x as f64));
        }
    }
    out.sort_by(f64::total_cmp);
    AngleSet {
        n: BigUint::from(n),
        angles: out,
    }
}

/// `lambda_{4k}(n) = sum_beta e^{4 i k theta_beta}`, which is real.
pub fn lambda(fr: &FactoredRadius, k: i64) -> f64 {
    let mut acc = if (k * fr.two_exp as i64) % 2 == 0 { 1.0 } else { -1.0 };
    for (sp, e) in &fr.split_factors {
        acc *= lambda_prime_power(sp.theta, *e, k);
    }
    acc
}

/// `sum_{l=0..e} cos(4k (2l - e) theta)`.
pub fn lambda_prime_power(theta: f64, e: u32, k: i64) -> f64 {
    let e = e as i64;
    (0..=e)
        .map(|l| (4.0 * k as f64 * (2 * l - e) as f64 * theta).cos())
        .sum()
}

/// `lambda_{4k}(n)` as an exact rational, from powers of `a + bi`.
pub fn lambda_exact(fr: &FactoredRadius, k: i64) -> BigRational {
    let sign = if (k * fr.two_exp as i64) % 2 == 0 { 1 } else { -1 };
    let mut acc = BigRational::from_integer(BigInt::from(sign));
    let kk = k.unsigned_abs() as u32;
    for (sp, e) in &fr.split_factors {
        // e^{4i k theta} = (a + bi)^{4k} / p^{2k}; only real parts survive
        let (re, im) = gauss_pow(sp.a as i64, sp.b as i64, 4 * kk);
        let mut term = BigRational::zero();
        for l in 0..=*e as i64 {
            let m = (2 * l - *e as i64).unsigned_abs() as u32;
            let (pr, _) = gauss_pow_big(&re, &im, m);
            let den = BigInt::from(sp.p).pow(2 * kk * m);
            term += BigRational::new(pr, den);
        }
        acc *= term;
    }
    acc
}

fn gauss_pow(a: i64, b: i64, e: u32) -> (BigInt, BigInt) {
    gauss_pow_big(&BigInt::from(a), &BigInt::from(b), e)
}

fn gauss_pow_big(a: &BigInt, b: &BigInt, mut e: u32) -> (BigInt, BigInt) {
    let (mut rr, mut ri) = (BigInt::one(), BigInt::zero());
    let (mut br, mut bi) = (a.clone(), b.clone());
    while e > 0 {
        if e & 1 == 1 {
            let nr = &rr * &br - &ri * &bi;
            let ni = &rr * &bi + &ri * &br;
            rr = nr;
            ri = ni;
        }
        let nr = &br * &br - &bi * &bi;
        let ni = BigInt::from(2) * &br * &bi;
        br = nr;
        bi = ni;
        e >>= 1;
    }
    (rr, ri)
}

/// Product of `m` distinct split primes `<= max_prime`, drawn uniformly
/// with the given seed.
pub fn random_split_radius(m: usize, max_prime: u64, seed: u64) -> Result<FactoredRadius> {
    let pool = sieve_split_primes(max_prime);
    if pool.len() < m {
        return Err(Error::InvalidArgument(format!(
            "only {} split primes up to {max_prime}, need {m}",
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, pool.len(), m).into_vec();
    idx.sort_unstable();
    let primes: Vec<u64> = idx.iter().map(|&i| pool[i]).collect();
    FactoredRadius::from_split_primes(&primes)
}

/// The first `count` primes of the form `m^2 + 1`.
pub fn m2plus1_primes(count: usize) -> Vec<u64> {
    (1u64..)
        .map(|m| 2 * m)
        .map(|m| m * m + 1)
        .filter(|&p| is_prime(p))
        .take(count)
        .collect()
}

/// The first `count` primes `1 (mod 4)` that are at least `start`.
pub fn consecutive_split_primes(start: u64, count: usize) -> Vec<u64> {
    (start.max(5)..)
        .filter(|&p| p % 4 == 1 && is_prime(p))
        .take(count)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    #[test]
    fn r_examples() {
        assert_eq!(FactoredRadius::from_small(65).unwrap().r(), 4);
        assert_eq!(FactoredRadius::from_small(325).unwrap().r(), 6);
        assert_eq!(FactoredRadius::from_small(9).unwrap().r(), 1);
        assert!(FactoredRadius::from_small(21).is_err());
        assert_eq!(FactoredRadius::from_small(325).unwrap().n(), BigUint::from(325u32));
    }

    #[test]
    fn angle_examples() {
        let a = angles(&FactoredRadius::from_small(65).unwrap(), ctx());
        let want = [0.1243550, 0.5191461, 1.0516502, 1.4464413];
        assert_eq!(a.N(), 4);
        for (x, y) in a.angles.iter().zip(want) {
            assert!((x - y).abs() < 1e-7);
        }
        let a = angles(&FactoredRadius::from_small(5).unwrap(), ctx());
        assert!((a.angles[0] - 0.4636476).abs() < 1e-7 && (a.angles[1] - 1.1071487).abs() < 1e-7);
        assert_eq!(angles(&FactoredRadius::from_small(9).unwrap(), ctx()).angles, vec![0.0]);
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_angles(65).N(), 4);
        assert_eq!(brute_force_angles(2).angles, vec![FRAC_PI_4]);
        assert_eq!(brute_force_angles(7).N(), 0);
    }

    #[test]
    fn matches_brute_force() {
        for n in 1..3000u64 {
            let Ok(fr) = FactoredRadius::from_small(n) else {
                assert_eq!(brute_force_angles(n).N(), 0);
                continue;
            };
            let a = angles(&fr, ctx());
            let b = brute_force_angles(n);
            assert_eq!(a.N(), b.N(), "{n}");
            for (x, y) in a.angles.iter().zip(&b.angles) {
                assert!((x - y).abs() < 1e-12, "{n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn high_precision_path_agrees() {
        let fr = FactoredRadius::from_small(5 * 5 * 13 * 17 * 2 * 9).unwrap();
        let a = angles(&fr, ctx());
        let b = angles(&fr, PrecisionContext::new(256));
        for (x, y) in a.angles.iter().zip(&b.angles) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn lambda_examples() {
        let f5 = FactoredRadius::from_small(5).unwrap();
        let f13 = FactoredRadius::from_small(13).unwrap();
        assert_eq!(lambda(&f5, 0), 2.0);
        assert!((lambda(&f5, 1) + 0.56).abs() < 1e-14);
        assert!((lambda(&f13, 1) + 238.0 / 169.0).abs() < 1e-14);
        assert_eq!(lambda_exact(&f5, 1), BigRational::new((-14).into(), 25.into()));
        assert_eq!(lambda_exact(&f13, 1), BigRational::new((-238).into(), 169.into()));
    }

    #[test]
    fn lambda_is_cosine_sum_of_angles() {
        for n in [2u64, 10, 65, 325, 1105, 5525, 4 * 9 * 5 * 5 * 13] {
            let fr = FactoredRadius::from_small(n).unwrap();
            let a = angles(&fr, ctx());
            for k in -7..=7 {
                let direct: f64 = a.angles.iter().map(|t| (4.0 * k as f64 * t).cos()).sum();
                assert!((direct - lambda(&fr, k)).abs() < 1e-10, "{n} {k}");
                let exact = lambda_exact(&fr, k).to_f64().unwrap();
                assert!((exact - lambda(&fr, k)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let fr = FactoredRadius::from_small(5 * 13 * 17 * 29).unwrap();
        let a = angles(&fr, ctx());
        let mut mirrored: Vec<f64> =
            a.angles.iter().map(|t| reduce_quarter(FRAC_PI_2 - t, 0.0)).collect();
        mirrored.sort_by(f64::total_cmp);
        for (x, y) in a.angles.iter().zip(&mirrored) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn angle_set_json_round_trip() {
        let a = angles(&FactoredRadius::from_small(65).unwrap(), ctx());
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"N\":4"));
        let b: AngleSet = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn special_radii() {
        assert_eq!(
            m2plus1_primes(16),
            vec![5, 17, 37, 101, 197, 257, 401, 577, 677, 1297, 1601, 2917, 3137, 4357, 5477, 7057]
        );
        let a = random_split_radius(14, 1_000_000, 3).unwrap();
        assert_eq!(a.r(), 1 << 14);
        assert_eq!(a, random_split_radius(14, 1_000_000, 3).unwrap());
        assert!(random_split_radius(5, 20, 0).is_err());
        assert_eq!(consecutive_split_primes(277, 3), vec![277, 281, 293]);
        assert_eq!(consecutive_split_primes(0, 3), vec![5, 13, 17]);
    }

    #[test]
    fn consecutive_and_m2plus1_radii() {
        let lead = |ps: &[u64]| {
            let n = FactoredRadius::from_split_primes(ps).unwrap().n().to_string();
            (n[..8].to_string(), n.len() - 1)
        };
        assert_eq!(lead(&consecutive_split_primes(277, 14)), ("37366813".to_string(), 35));
        assert_eq!(lead(&m2plus1_primes(27)[11..]), ("91943528".to_string(), 63));
    }
}
