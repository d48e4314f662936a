//! Brute-force reference arithmetic and the sweep driver that checks the
//! channel units against it.
//!
//! Nothing here depends on the converters or the ALU. Everything is computed
//! with arbitrary-precision integers, straight from the definitions.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RnsError};
use crate::residue::ChannelSign;

/// `z mod m`, for `m >= 2`.
pub fn ref_mod(z: &BigUint, m: &BigUint) -> BigUint {
    assert!(*m >= BigUint::from(2u32), "modulus must be at least 2");
    z % m
}

/// Oracle state for one channel width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleContext {
    n: u32,
    modulus_22n1: BigUint,
}

impl OracleContext {
    pub fn new(n: u32) -> Self {
        let base = BigUint::one() << n;
        OracleContext {
            n,
            modulus_22n1: &base * &base + 1u32,
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus_22n1
    }

    /// `z mod (2^2n + 1)`.
    pub fn reduce(&self, z: impl Into<BigUint>) -> BigUint {
        ref_mod(&z.into(), &self.modulus_22n1)
    }

    /// Reduces a signed integer into `[0, 2^2n + 1)`.
    pub fn reduce_signed(&self, z: &BigInt) -> BigUint {
        let m = BigInt::from(self.modulus_22n1.clone());
        z.mod_floor(&m).to_biguint().expect("mod_floor is non-negative")
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        to_u64(&self.reduce(BigUint::from(a) + b))
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        to_u64(&self.reduce(BigUint::from(a) * b))
    }

    /// The Gaussian modulus `2^n - j` (Minus) or `2^n + j` (Plus).
    pub fn gaussian_modulus(&self, sign: ChannelSign) -> GaussianInt {
        let base = BigInt::one() << self.n;
        GaussianInt::new(base, -j_image_sign(sign))
    }

    /// Integer image of a Gaussian residue under `j -> 2^n` (Minus) or
    /// `j -> -2^n` (Plus), reduced mod `2^2n + 1`.
    pub fn to_integer(&self, q: &GaussianInt, sign: ChannelSign) -> BigUint {
        let j = (BigInt::one() << self.n) * j_image_sign(sign);
        self.reduce_signed(&(&q.re + &q.im * j))
    }

    /// Canonical residue of `x` modulo `2^n -/+ j`.
    ///
    /// `x` is divided by the modulus with a round-to-nearest Gaussian
    /// quotient, then the remainder is moved by multiples of the modulus onto
    /// the representative with real part in `[1, 2^n]` and imaginary magnitude
    /// in `[0, 2^n)` (or onto `0`).
    pub fn gaussian_mod(&self, x: &BigUint, sign: ChannelSign) -> GaussianInt {
        let m = self.gaussian_modulus(sign);
        let norm = m.norm();
        let x = GaussianInt::new(BigInt::from(x.clone()), BigInt::zero());

        let scaled = &x * &m.conj();
        let q = GaussianInt::new(
            round_div(&scaled.re, &norm),
            round_div(&scaled.im, &norm),
        );
        let rem = &x - &(&q * &m);
        let canon = self.canonicalize(rem, sign);
        debug_assert!((&x - &canon).is_divisible_by(&m));
        canon
    }

    fn canonicalize(&self, mut e: GaussianInt, sign: ChannelSign) -> GaussianInt {
        let m = self.gaussian_modulus(sign);
        let jm = &GaussianInt::j() * &m;
        let base = BigInt::one() << self.n;
        let s = j_image_sign(sign);
        for _ in 0..256 {
            if e.is_zero() {
                return e;
            }
            // Imaginary part scaled by the image sign must land in [0, 2^n).
            let t = &e.im * &s;
            let k = t.div_floor(&base);
            if !k.is_zero() {
                e = &e - &jm.scale(&(&k * &s));
                continue;
            }
            let k = (&e.re - BigInt::one()).div_floor(&base);
            if !k.is_zero() {
                e = &e - &m.scale(&k);
                continue;
            }
            return e;
        }
        unreachable!("canonicalization did not settle for {e}");
    }
}

fn j_image_sign(sign: ChannelSign) -> BigInt {
    match sign {
        ChannelSign::Minus => BigInt::one(),
        ChannelSign::Plus => -BigInt::one(),
    }
}

/// `a / b` rounded to nearest, ties toward zero. `b > 0`.
fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let mag = (a.abs() * 2u32 + b - 1u32) / (b * 2u32);
    if a.is_negative() {
        -mag
    } else {
        mag
    }
}

fn to_u64(v: &BigUint) -> u64 {
    u64::try_from(v).expect("oracle value exceeds 64 bits")
}

/// Exact Gaussian integer `re + im * j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GaussianInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussianInt {
    pub fn new(re: impl Into<BigInt>, im: impl Into<BigInt>) -> Self {
        GaussianInt {
            re: re.into(),
            im: im.into(),
        }
    }

    pub fn j() -> Self {
        GaussianInt::new(0, 1)
    }

    pub fn conj(&self) -> Self {
        GaussianInt::new(self.re.clone(), -&self.im)
    }

    pub fn norm(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        GaussianInt::new(&self.re * k, &self.im * k)
    }

    /// Whether `self = q * d` for some Gaussian integer `q`.
    pub fn is_divisible_by(&self, d: &GaussianInt) -> bool {
        let norm = d.norm();
        let t = self * &d.conj();
        (&t.re % &norm).is_zero() && (&t.im % &norm).is_zero()
    }
}

impl fmt::Display for GaussianInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.im.sign() {
            Sign::Minus => write!(f, "{} - {}j", self.re, -&self.im),
            _ => write!(f, "{} + {}j", self.re, self.im),
        }
    }
}

impl<'a> Add for &'a GaussianInt {
    type Output = GaussianInt;
    fn add(self, rhs: &'a GaussianInt) -> GaussianInt {
        GaussianInt::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl<'a> Sub for &'a GaussianInt {
    type Output = GaussianInt;
    fn sub(self, rhs: &'a GaussianInt) -> GaussianInt {
        GaussianInt::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl<'a> Mul for &'a GaussianInt {
    type Output = GaussianInt;
    fn mul(self, rhs: &'a GaussianInt) -> GaussianInt {
        GaussianInt::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

// ---------------------------------------------------------------------------
// Sweep driver
// ---------------------------------------------------------------------------

/// Cases per work unit. Fixed so random streams do not depend on the worker
/// count.
pub const CHUNK: u64 = 4096;

/// Expected/actual pair reported by a failing case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub expected: String,
    pub actual: String,
}

impl Mismatch {
    pub fn new(expected: impl ToString, actual: impl ToString) -> Self {
        Mismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

/// A unit wired to the oracle: how to enumerate its inputs and how to judge
/// one of them.
pub trait UnitCheck: Sync {
    type Input: fmt::Debug;

    fn unit(&self) -> &'static str;

    /// Size of the full input space, `None` if it does not fit in a `u64`.
    fn exhaustive_cases(&self) -> Option<u64>;

    /// The `index`-th input of the exhaustive enumeration.
    fn nth(&self, index: u64) -> Self::Input;

    fn sample(&self, rng: &mut ChaCha8Rng) -> Self::Input;

    fn check(&self, input: &Self::Input) -> std::result::Result<(), Mismatch>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Exhaustive,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Exhaustive,
    Random { samples: u64, seed: u64 },
}

impl SweepMode {
    pub fn kind(&self) -> SweepKind {
        match self {
            SweepMode::Exhaustive => SweepKind::Exhaustive,
            SweepMode::Random { .. } => SweepKind::Random,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            SweepMode::Exhaustive => None,
            SweepMode::Random { seed, .. } => Some(seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Position of the case in the sweep.
    #[serde(with = "crate::report::json_u64")]
    pub index: u64,
    pub input: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub cases: u64,
    pub failures: u64,
    /// Lowest-index failing case.
    pub first: Option<Counterexample>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs `unit` over the requested inputs on `workers` threads.
///
/// A failing or panicking case is recorded, never propagated. Only an
/// exhaustive space too large to count is an error.
pub fn check_unit<U: UnitCheck>(unit: &U, mode: &SweepMode, workers: usize) -> Result<CheckOutcome> {
    let cases = match *mode {
        SweepMode::Exhaustive => unit
            .exhaustive_cases()
            .ok_or(RnsError::ExhaustiveTooLarge { unit: unit.unit() })?,
        SweepMode::Random { samples, .. } => samples,
    };
    let chunks = cases.div_ceil(CHUNK);
    let next = AtomicU64::new(0);
    let merged = Mutex::new((0u64, None::<Counterexample>));

    let run_chunk = |chunk: u64| -> (u64, Option<Counterexample>) {
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(cases);
        let mut rng = match *mode {
            SweepMode::Random { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(chunk);
                Some(rng)
            }
            SweepMode::Exhaustive => None,
        };
        let mut failures = 0;
        let mut first = None;
        for index in start..end {
            let input = match rng.as_mut() {
                Some(rng) => unit.sample(rng),
                None => unit.nth(index),
            };
            let verdict = panic::catch_unwind(AssertUnwindSafe(|| unit.check(&input)))
                .unwrap_or_else(|payload| Err(Mismatch::new("no panic", panic_message(&payload))));
            if let Err(m) = verdict {
                failures += 1;
                if first.is_none() {
                    first = Some(Counterexample {
                        index,
                        input: format!("{input:?}"),
                        expected: m.expected,
                        actual: m.actual,
                    });
                }
            }
        }
        (failures, first)
    };

    let worker = || loop {
        let chunk = next.fetch_add(1, Ordering::Relaxed);
        if chunk >= chunks {
            break;
        }
        let (failures, first) = run_chunk(chunk);
        if failures > 0 {
            let mut guard = merged.lock().unwrap_or_else(|e| e.into_inner());
            guard.0 += failures;
            let replace = match (&guard.1, &first) {
                (None, Some(_)) => true,
                (Some(old), Some(new)) => new.index < old.index,
                _ => false,
            };
            if replace {
                guard.1 = first;
            }
        }
    };

    let workers = workers.max(1).min(chunks.max(1) as usize);
    std::thread::scope(|scope| {
        for _ in 1..workers {
            scope.spawn(worker);
        }
        worker();
    });

    let (failures, first) = merged.into_inner().unwrap_or_else(|e| e.into_inner());
    Ok(CheckOutcome {
        cases,
        failures,
        first,
    })
}

fn panic_message(payload: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn ref_mod_examples() {
        assert_eq!(ref_mod(&big(1000), &big(17)), big(14));
        assert_eq!(ref_mod(&big(0), &big(17)), big(0));
        assert_eq!(ref_mod(&big(62_496), &big(62_496)), big(0));
    }

    #[test]
    fn ref_mod_matches_native_remainder() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20_000 {
            let z: u64 = rng.gen_range(0..1u64 << 63);
            let bits = rng.gen_range(2..63);
            let m: u64 = rng.gen_range(2..1u64 << bits);
            assert_eq!(ref_mod(&big(z), &big(m)), big(z % m));
        }
    }

    #[test]
    fn context_modulus() {
        for n in 2..=31 {
            let ctx = OracleContext::new(n);
            let base = BigUint::one() << n;
            assert_eq!(ctx.modulus(), &(&base * &base + 1u32));
            assert_eq!(
                BigInt::from(ctx.modulus().clone()),
                ctx.gaussian_modulus(ChannelSign::Minus).norm()
            );
        }
    }

    #[test]
    fn gaussian_mod_examples() {
        let ctx = OracleContext::new(2);
        assert_eq!(ctx.gaussian_mod(&big(5), ChannelSign::Minus), GaussianInt::new(1, 1));
        assert_eq!(ctx.gaussian_mod(&big(5), ChannelSign::Plus), GaussianInt::new(1, -1));
        for sign in ChannelSign::BOTH {
            assert!(ctx.gaussian_mod(&big(0), sign).is_zero());
        }
        assert!(ctx.gaussian_mod(&big(17), ChannelSign::Minus).is_zero());
    }

    #[test]
    fn gaussian_residue_is_divisible_remainder() {
        let ctx = OracleContext::new(3);
        for x in 0..500u64 {
            for sign in ChannelSign::BOTH {
                let q = ctx.gaussian_mod(&big(x), sign);
                let diff = &GaussianInt::new(x as i64, 0) - &q;
                assert!(diff.is_divisible_by(&ctx.gaussian_modulus(sign)), "x={x} {sign}");
            }
        }
    }

    #[test]
    fn ring_isomorphism_exhaustive() {
        for n in 2..=5 {
            let ctx = OracleContext::new(n);
            let top = 1u64 << (2 * n);
            for x in 0..=top {
                for sign in ChannelSign::BOTH {
                    let q = ctx.gaussian_mod(&big(x), sign);
                    assert_eq!(ctx.to_integer(&q, sign), big(x), "n={n} x={x} {sign}");
                }
            }
        }
    }

    #[test]
    fn canonical_residues_are_in_digit_form() {
        let ctx = OracleContext::new(3);
        for x in 1..=64u64 {
            let q = ctx.gaussian_mod(&big(x), ChannelSign::Minus);
            assert!(q.re >= BigInt::one() && q.re <= BigInt::from(8));
            assert!(q.im >= BigInt::zero() && q.im < BigInt::from(8));
            let p = ctx.gaussian_mod(&big(x), ChannelSign::Plus);
            assert_eq!(p, q.conj());
        }
    }

    struct Modular {
        m: u64,
        fault_at: Option<u64>,
    }

    impl UnitCheck for Modular {
        type Input = u64;
        fn unit(&self) -> &'static str {
            "modular"
        }
        fn exhaustive_cases(&self) -> Option<u64> {
            Some(20_000)
        }
        fn nth(&self, index: u64) -> u64 {
            index
        }
        fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
            rng.gen_range(0..20_000)
        }
        fn check(&self, x: &u64) -> std::result::Result<(), Mismatch> {
            let got = if Some(*x) == self.fault_at { x % self.m + 1 } else { x % self.m };
            if *x == 12_345 && self.fault_at == Some(0) {
                panic!("boom");
            }
            let want = ref_mod(&big(*x), &big(self.m));
            if want == big(got) {
                Ok(())
            } else {
                Err(Mismatch::new(want, got))
            }
        }
    }

    #[test]
    fn sweep_passes_and_counts() {
        let unit = Modular { m: 17, fault_at: None };
        let out = check_unit(&unit, &SweepMode::Exhaustive, 3).unwrap();
        assert_eq!((out.cases, out.failures, out.first), (20_000, 0, None));
        let out = check_unit(&unit, &SweepMode::Random { samples: 9_999, seed: 1 }, 2).unwrap();
        assert_eq!(out.cases, 9_999);
        assert!(out.passed());
    }

    #[test]
    fn sweep_reports_lowest_counterexample_regardless_of_workers() {
        let unit = Modular { m: 17, fault_at: Some(0) };
        for workers in [1, 2, 7] {
            let out = check_unit(&unit, &SweepMode::Exhaustive, workers).unwrap();
            assert_eq!(out.failures, 2);
            let first = out.first.unwrap();
            assert_eq!(first.index, 0);
            assert_eq!((first.expected.as_str(), first.actual.as_str()), ("0", "1"));
        }
    }

    #[test]
    fn sweep_captures_panics() {
        let unit = Modular { m: 17, fault_at: Some(0) };
        let out = check_unit(&unit, &SweepMode::Exhaustive, 1).unwrap();
        assert_eq!(out.failures, 2);
    }

    #[test]
    fn random_streams_independent_of_workers() {
        struct Record;
        impl UnitCheck for Record {
            type Input = u64;
            fn unit(&self) -> &'static str {
                "record"
            }
            fn exhaustive_cases(&self) -> Option<u64> {
                None
            }
            fn nth(&self, index: u64) -> u64 {
                index
            }
            fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
                rng.gen()
            }
            fn check(&self, x: &u64) -> std::result::Result<(), Mismatch> {
                if x.is_multiple_of(&5) {
                    Err(Mismatch::new("", x))
                } else {
                    Ok(())
                }
            }
        }
        let mode = SweepMode::Random { samples: 30_000, seed: 99 };
        let a = check_unit(&Record, &mode, 1).unwrap();
        let b = check_unit(&Record, &mode, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.failures > 0);
        assert!(check_unit(&Record, &SweepMode::Exhaustive, 1).is_err());
    }
}
