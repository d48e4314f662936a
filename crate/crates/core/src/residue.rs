//! Residue encodings and channel parameterisation shared by every unit.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RnsError};

/// Smallest supported channel width.
pub const MIN_WIDTH: u32 = 2;
/// Largest supported channel width; every internal sum of the channel units
/// stays inside a 64-bit word up to this width.
pub const MAX_WIDTH: u32 = 31;

/// Channel width `n` and power-of-two extension `p` of the balanced set
/// `{2^(n+p), 2^n - 1, 2^n + 1, 2^n - j, 2^n + j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Params {
    n: u32,
    p: u32,
}

impl Params {
    pub fn new(n: u32, p: u32) -> Result<Self> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&n) {
            return Err(RnsError::InvalidWidth(n));
        }
        if p > n {
            return Err(RnsError::InvalidExtension { p, n });
        }
        Ok(Params { n, p })
    }

    /// Parameters for a lone complex channel pair (`p = 0`).
    pub fn channel(n: u32) -> Result<Self> {
        Params::new(n, 0)
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    /// `2^n - 1`, the mask of one channel word.
    #[inline]
    pub fn mask(&self) -> u64 {
        (1u64 << self.n) - 1
    }

    /// `2^2n - 1`, the mask of the low 2n bits of a flagged residue.
    #[inline]
    pub fn wide_mask(&self) -> u64 {
        (1u64 << (2 * self.n)) - 1
    }

    /// `2^2n`, the largest value of a modulo-(2^2n+1) residue.
    #[inline]
    pub fn max_value(&self) -> u64 {
        1u64 << (2 * self.n)
    }

    /// `2^2n + 1`.
    #[inline]
    pub fn modulus(&self) -> u64 {
        self.max_value() + 1
    }

    /// Dynamic range `2^(n+p) * (2^4n - 1)` of the balanced set.
    pub fn balanced_range(&self) -> BigUint {
        let four_n = BigUint::one() << (4 * self.n);
        (BigUint::one() << (self.n + self.p)) * (four_n - 1u32)
    }
}

/// A modulo-(2^2n+1) residue as `bits + NOT(zflag)`.
///
/// `zflag` is the extra top bit `x_2n`; when it is set the low bits are all
/// zero and the residue is 0. Every value in `[0, 2^2n]` has exactly one legal
/// encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dim1Residue {
    bits: u64,
    zflag: bool,
}

impl Dim1Residue {
    pub const ZERO: Dim1Residue = Dim1Residue {
        bits: 0,
        zflag: true,
    };

    /// Builds an encoding from raw fields, rejecting illegal combinations.
    pub fn from_fields(bits: u64, zflag: bool, params: &Params) -> Result<Self> {
        if bits > params.wide_mask() {
            return Err(RnsError::out_of_range("bits", bits, params.wide_mask()));
        }
        if zflag && bits != 0 {
            return Err(RnsError::out_of_range("bits with zero flag", bits, 0));
        }
        Ok(Dim1Residue { bits, zflag })
    }

    /// Encodes `x` in `[0, 2^2n]`.
    pub fn encode(x: u64, params: &Params) -> Result<Self> {
        if x > params.max_value() {
            return Err(RnsError::out_of_range("x", x, params.max_value()));
        }
        Ok(if x == 0 {
            Dim1Residue::ZERO
        } else {
            Dim1Residue {
                bits: x - 1,
                zflag: false,
            }
        })
    }

    /// Reads the `2n+1`-bit word `x_2n x_2n-1 ... x_0` produced by a
    /// modulo-(2^2n+1) adder as an encoding, i.e. value `word + 1 mod 2^2n+1`.
    pub(crate) fn from_adder_word(word: u64, params: &Params) -> Self {
        debug_assert!(word <= params.max_value());
        Dim1Residue {
            bits: word & params.wide_mask(),
            zflag: word >> (2 * params.n()) == 1,
        }
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn zflag(&self) -> bool {
        self.zflag
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.bits + u64::from(!self.zflag)
    }

    /// High half `X_I`.
    #[inline]
    pub fn high(&self, params: &Params) -> u64 {
        self.bits >> params.n()
    }

    /// Low half `X_R`.
    #[inline]
    pub fn low(&self, params: &Params) -> u64 {
        self.bits & params.mask()
    }
}

/// Which conjugate modulus a channel works in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelSign {
    /// Modulus `2^n - j`, where `j = 2^n`.
    Minus,
    /// Modulus `2^n + j`, where `j = -2^n`.
    Plus,
}

impl ChannelSign {
    pub const BOTH: [ChannelSign; 2] = [ChannelSign::Minus, ChannelSign::Plus];

    pub fn conjugate(self) -> Self {
        match self {
            ChannelSign::Minus => ChannelSign::Plus,
            ChannelSign::Plus => ChannelSign::Minus,
        }
    }
}

impl fmt::Display for ChannelSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSign::Minus => f.write_str("2^n-j"),
            ChannelSign::Plus => f.write_str("2^n+j"),
        }
    }
}

/// A channel operand straight out of the forward converter:
/// `X_R + NOT(x_2n) -/+ j X_I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FreshOperand {
    /// `X_R`, low n bits.
    pub real: u64,
    /// `X_I`, high n bits.
    pub imag: u64,
    /// `x_2n`; set only for the value 0.
    pub zero: bool,
    pub sign: ChannelSign,
}

impl FreshOperand {
    /// Encodes `x` in `[0, 2^2n]` and routes it onto a channel.
    pub fn from_value(x: u64, sign: ChannelSign, params: &Params) -> Result<Self> {
        let r = Dim1Residue::encode(x, params)?;
        Ok(FreshOperand {
            real: r.low(params),
            imag: r.high(params),
            zero: r.zflag(),
            sign,
        })
    }

    pub fn is_legal(&self, params: &Params) -> bool {
        self.real <= params.mask()
            && self.imag <= params.mask()
            && !(self.zero && (self.real | self.imag) != 0)
    }

    /// Integer value `2^n X_I + X_R + NOT(x_2n)` in `[0, 2^2n]`.
    pub fn value(&self, params: &Params) -> u64 {
        (self.imag << params.n()) + self.real + u64::from(!self.zero)
    }

    pub fn with_sign(self, sign: ChannelSign) -> Self {
        FreshOperand { sign, ..self }
    }
}

/// An accumulated channel residue `r - borrow -/+ j (i + carry)` in
/// stored-borrow (real) / stored-carry (imaginary) form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComplexChannelResidue {
    pub r: u64,
    pub borrow: bool,
    pub i: u64,
    pub carry: bool,
    pub sign: ChannelSign,
}

impl ComplexChannelResidue {
    pub fn zero(sign: ChannelSign) -> Self {
        ComplexChannelResidue {
            r: 0,
            borrow: false,
            i: 0,
            carry: false,
            sign,
        }
    }

    pub fn new(r: u64, borrow: bool, i: u64, carry: bool, sign: ChannelSign, params: &Params) -> Result<Self> {
        let res = ComplexChannelResidue {
            r,
            borrow,
            i,
            carry,
            sign,
        };
        if res.is_legal(params) {
            Ok(res)
        } else {
            Err(RnsError::out_of_range(
                "channel word",
                r.max(i),
                params.mask(),
            ))
        }
    }

    /// Accumulator state holding `v` in `[0, 2^2n]` with no pending borrow or
    /// carry, except `2^2n` which is stored as `0 - 1`.
    pub fn from_value(v: u64, sign: ChannelSign, params: &Params) -> Result<Self> {
        if v > params.max_value() {
            return Err(RnsError::out_of_range("accumulator value", v, params.max_value()));
        }
        if v == params.max_value() {
            return Ok(ComplexChannelResidue {
                borrow: true,
                ..ComplexChannelResidue::zero(sign)
            });
        }
        Ok(ComplexChannelResidue {
            r: v & params.mask(),
            borrow: false,
            i: v >> params.n(),
            carry: false,
            sign,
        })
    }

    /// The `index`-th of the `4 * 2^2n` field combinations, packed as
    /// `(i, carry, r, borrow)` from most significant. Only the low `2n + 2`
    /// bits of `index` are read, so a uniform random word gives a uniform
    /// state.
    pub fn nth_state(index: u64, sign: ChannelSign, params: &Params) -> Self {
        let n = params.n();
        ComplexChannelResidue {
            borrow: index & 1 == 1,
            r: (index >> 1) & params.mask(),
            carry: (index >> (n + 1)) & 1 == 1,
            i: (index >> (n + 2)) & params.mask(),
            sign,
        }
    }

    /// Number of distinct field combinations, `4 * 2^2n`.
    /// `None` once the count no longer fits a `u64` (n = 31).
    pub fn state_count(params: &Params) -> Option<u64> {
        1u64.checked_shl(2 * params.n() + 2)
    }

    pub fn is_legal(&self, params: &Params) -> bool {
        self.r <= params.mask() && self.i <= params.mask()
    }

    pub fn is_canonical_zero(&self) -> bool {
        self.r == 0 && !self.borrow && self.i == 0 && !self.carry
    }

    /// Same fields, other conjugate channel.
    pub fn with_sign(self, sign: ChannelSign) -> Self {
        ComplexChannelResidue { sign, ..self }
    }

    /// Integer image `(r - borrow + 2^n (i + carry)) mod (2^2n + 1)`.
    ///
    /// Both conjugate channels map to the same integer since `j` is `2^n`
    /// modulo `2^n - j` and `-2^n` modulo `2^n + j`.
    pub fn value(&self, params: &Params) -> u64 {
        let m = params.modulus();
        let high = (self.i + u64::from(self.carry)) << params.n();
        // high + r < 2^(2n+1) < 2m, and the borrow is at most 1.
        let raw = high + self.r + m - u64::from(self.borrow);
        raw % m
    }
}

/// One channel of a moduli set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelDescriptor {
    /// Modulus `2^k`.
    PowerOfTwo(u32),
    /// Odd integer modulus.
    IntModulus(u64),
    /// The conjugate pair `2^n -/+ j`, jointly worth `2^2n + 1`.
    GaussianPair(u32),
}

impl ChannelDescriptor {
    pub fn power_of_two(k: u32) -> Result<Self> {
        if k == 0 || k > 63 {
            return Err(RnsError::out_of_range("power-of-two exponent", k, 63));
        }
        Ok(ChannelDescriptor::PowerOfTwo(k))
    }

    pub fn int_modulus(m: u64) -> Result<Self> {
        if m < 3 || m.is_multiple_of(2) {
            return Err(RnsError::InvalidModulus(m));
        }
        Ok(ChannelDescriptor::IntModulus(m))
    }

    pub fn gaussian_pair(n: u32) -> Result<Self> {
        Params::channel(n)?;
        Ok(ChannelDescriptor::GaussianPair(n))
    }

    /// Integer modulus this channel contributes to the dynamic range.
    pub fn modulus(&self) -> u64 {
        match *self {
            ChannelDescriptor::PowerOfTwo(k) => 1u64 << k,
            ChannelDescriptor::IntModulus(m) => m,
            ChannelDescriptor::GaussianPair(n) => (1u64 << (2 * n)) + 1,
        }
    }

    /// Bits needed to hold one residue of this channel. Complex channels
    /// count one n-bit part.
    pub fn width(&self) -> u32 {
        match *self {
            ChannelDescriptor::PowerOfTwo(k) => k,
            ChannelDescriptor::IntModulus(m) => 64 - (m - 1).leading_zeros(),
            ChannelDescriptor::GaussianPair(n) => n,
        }
    }
}

impl fmt::Display for ChannelDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ChannelDescriptor::PowerOfTwo(k) => write!(f, "{}", 1u64 << k),
            ChannelDescriptor::IntModulus(m) => write!(f, "{m}"),
            ChannelDescriptor::GaussianPair(n) => write!(f, "g{n}"),
        }
    }
}

impl FromStr for ChannelDescriptor {
    type Err = RnsError;

    /// `g<n>` for a complex pair, `2^k` for a power of two, otherwise a
    /// decimal integer (powers of two are recognised, other values must be
    /// odd).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(rest) = t.strip_prefix('g').or_else(|| t.strip_prefix('G')) {
            let n = rest
                .parse::<u32>()
                .map_err(|e| RnsError::parse(s, e.to_string()))?;
            return ChannelDescriptor::gaussian_pair(n);
        }
        if let Some(rest) = t.strip_prefix("2^") {
            let k = rest
                .parse::<u32>()
                .map_err(|e| RnsError::parse(s, e.to_string()))?;
            return ChannelDescriptor::power_of_two(k);
        }
        let m = t
            .replace('_', "")
            .parse::<u64>()
            .map_err(|e| RnsError::parse(s, e.to_string()))?;
        if m >= 2 && m.is_power_of_two() {
            ChannelDescriptor::power_of_two(m.trailing_zeros())
        } else {
            ChannelDescriptor::int_modulus(m)
        }
    }
}

/// Parses a set written either as a comma-separated descriptor list
/// (`7,9,16,g3`) or as the balanced family `f:n=<n>[,p=<p>]`.
pub fn parse_descriptors(s: &str) -> Result<Vec<ChannelDescriptor>> {
    let t = s.trim();
    if let Some(rest) = t.strip_prefix("f:").or_else(|| t.strip_prefix("F:")) {
        let mut n = None;
        let mut p = 0;
        for kv in rest.split(',') {
            let (key, val) = kv
                .split_once('=')
                .ok_or_else(|| RnsError::parse(s, "expected key=value"))?;
            let val: u32 = val
                .trim()
                .parse()
                .map_err(|e: std::num::ParseIntError| RnsError::parse(s, e.to_string()))?;
            match key.trim() {
                "n" => n = Some(val),
                "p" => p = val,
                other => return Err(RnsError::parse(s, format!("unknown key {other:?}"))),
            }
        }
        let n = n.ok_or_else(|| RnsError::parse(s, "missing n"))?;
        return Ok(ModuliSet::balanced_descriptors(&Params::new(n, p)?).to_vec());
    }
    let list = t
        .split(',')
        .filter(|tok| !tok.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>>>()?;
    if list.is_empty() {
        return Err(RnsError::EmptySet);
    }
    Ok(list)
}

/// An ordered, pairwise co-prime list of channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuliSet {
    channels: Vec<ChannelDescriptor>,
    dynamic_range: BigUint,
}

impl ModuliSet {
    pub fn build(channels: Vec<ChannelDescriptor>) -> Result<Self> {
        let analysis = RangeAnalysis::of(&channels)?;
        if let Some((a, b)) = analysis.violation {
            return Err(RnsError::CoprimalityViolation {
                first: a.to_string(),
                second: b.to_string(),
            });
        }
        Ok(ModuliSet {
            channels,
            dynamic_range: analysis.product,
        })
    }

    fn balanced_descriptors(params: &Params) -> [ChannelDescriptor; 4] {
        let n = params.n();
        [
            ChannelDescriptor::PowerOfTwo(n + params.p()),
            ChannelDescriptor::IntModulus((1u64 << n) - 1),
            ChannelDescriptor::IntModulus((1u64 << n) + 1),
            ChannelDescriptor::GaussianPair(n),
        ]
    }

    /// `{2^(n+p), 2^n - 1, 2^n + 1, 2^n -/+ j}`, power of two first.
    pub fn balanced(params: &Params) -> Self {
        let channels = ModuliSet::balanced_descriptors(params).to_vec();
        ModuliSet {
            channels,
            dynamic_range: params.balanced_range(),
        }
    }

    pub fn channels(&self) -> &[ChannelDescriptor] {
        &self.channels
    }

    pub fn dynamic_range(&self) -> &BigUint {
        &self.dynamic_range
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn moduli(&self) -> impl Iterator<Item = u64> + '_ {
        self.channels.iter().map(ChannelDescriptor::modulus)
    }
}

impl fmt::Display for ModuliSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_descriptors(f, &self.channels)
    }
}

pub(crate) fn write_descriptors(f: &mut impl fmt::Write, channels: &[ChannelDescriptor]) -> fmt::Result {
    f.write_char('{')?;
    for (k, c) in channels.iter().enumerate() {
        if k > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{c}")?;
    }
    f.write_char('}')
}

/// Dynamic-range arithmetic of a descriptor list, computed whether or not the
/// channels are co-prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeAnalysis {
    /// Product of all channel moduli.
    pub product: BigUint,
    /// Least common multiple of the moduli; the number of distinct residue
    /// vectors that actually occur.
    pub distinct: BigUint,
    /// First pair (in list order) sharing a factor.
    pub violation: Option<(ChannelDescriptor, ChannelDescriptor)>,
}

impl RangeAnalysis {
    pub fn of(channels: &[ChannelDescriptor]) -> Result<Self> {
        if channels.is_empty() {
            return Err(RnsError::EmptySet);
        }
        let mut violation = None;
        'outer: for (k, a) in channels.iter().enumerate() {
            for b in &channels[k + 1..] {
                if a.modulus().gcd(&b.modulus()) != 1 {
                    violation = Some((*a, *b));
                    break 'outer;
                }
            }
        }
        let mut product = BigUint::one();
        let mut distinct = BigUint::one();
        for c in channels {
            let m = BigUint::from(c.modulus());
            distinct = distinct.lcm(&m);
            product *= m;
        }
        Ok(RangeAnalysis {
            product,
            distinct,
            violation,
        })
    }
}
