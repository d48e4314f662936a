//! Forward conversion: binary inputs to modulo-(2^2n+1) residues, complex
//! channel operands and residue vectors of a whole moduli set.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RnsError};
use crate::residue::{ChannelDescriptor, ChannelSign, Dim1Residue, FreshOperand, ModuliSet, Params};

/// A binary input inside the range of the balanced 4-moduli set,
/// `0 <= z < 2^n (2^4n - 1)`, held as its three digit groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WideInput {
    /// `Z_2`, bits `5n-1 .. 4n`.
    pub high: u64,
    /// `Z_1`, bits `4n-1 .. 2n`.
    pub mid: u64,
    /// `Z_0`, bits `2n-1 .. 0`.
    pub low: u64,
}

impl WideInput {
    pub fn new(z: &BigUint, params: &Params) -> Result<Self> {
        let range = Params::channel(params.n())?.balanced_range();
        if *z >= range {
            return Err(RnsError::RangeExceeded {
                value: z.to_string(),
                range: range.to_string(),
            });
        }
        let limbs = z.to_u64_digits();
        let two_n = 2 * params.n();
        Ok(WideInput {
            high: extract_bits(&limbs, 2 * two_n, params.n()),
            mid: extract_bits(&limbs, two_n, two_n),
            low: extract_bits(&limbs, 0, two_n),
        })
    }

    pub fn from_u64(z: u64, params: &Params) -> Result<Self> {
        WideInput::new(&BigUint::from(z), params)
    }

    pub fn to_biguint(&self, params: &Params) -> BigUint {
        let two_n = 2 * params.n();
        (BigUint::from(self.high) << (2 * two_n)) + (BigUint::from(self.mid) << two_n) + self.low
    }
}

/// `(Z_2, Z_1, Z_0)` with `z = 2^4n Z_2 + 2^2n Z_1 + Z_0`.
pub fn split_input(w: &WideInput) -> (u64, u64, u64) {
    (w.high, w.mid, w.low)
}

/// Sum and carry words of the modulo-(2^2n+1) carry-save adder.
///
/// `v` holds the shifted carries with the inverted end-around carry in its
/// least significant bit, so `u + v = Z_2 + NOT(Z_1) + Z_0 + 1 (mod 2^2n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsaPair {
    pub u: u64,
    pub v: u64,
}

pub fn csa_mod_22n1(high: u64, mid: u64, low: u64, params: &Params) -> CsaPair {
    let mask = params.wide_mask();
    let a = high;
    let b = !mid & mask;
    let c = low;
    let sum = a ^ b ^ c;
    let carry = (a & b) | (a & c) | (b & c);
    let top = (carry >> (2 * params.n() - 1)) & 1;
    CsaPair {
        u: sum,
        v: ((carry << 1) & mask) | (top ^ 1),
    }
}

/// Modulo-(2^2n+1) adder on two 2n-bit words: the result is the
/// `2n+1`-bit word `x_2n ... x_0` in `[0, 2^2n]`.
pub fn mod_add_22n1(u: u64, v: u64, params: &Params) -> u64 {
    let s = u + v;
    if s > params.max_value() {
        s - params.modulus()
    } else {
        s
    }
}

/// `z mod (2^2n + 1)` in flagged form.
///
/// The three digit groups go through the carry-save adder (which folds in
/// one of the two correction units), the modulo adder produces
/// `x_2n ... x_0`, and the second correction unit is the `NOT(x_2n)` of the
/// flagged encoding itself.
pub fn forward_22n1(w: &WideInput, params: &Params) -> Dim1Residue {
    let (high, mid, low) = split_input(w);
    let csa = csa_mod_22n1(high, mid, low, params);
    let word = mod_add_22n1(csa.u, csa.v, params);
    Dim1Residue::from_adder_word(word, params)
}

/// Pure field routing of a flagged residue onto one complex channel.
pub fn to_channel_operand(r: &Dim1Residue, sign: ChannelSign, params: &Params) -> FreshOperand {
    FreshOperand {
        real: r.low(params),
        imag: r.high(params),
        zero: r.zflag(),
        sign,
    }
}

/// A single channel's entry in a residue vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelResidue {
    Plain(u64),
    /// Both conjugate operands of a `2^n -/+ j` pair.
    Complex {
        n: u32,
        minus: FreshOperand,
        plus: FreshOperand,
    },
}

impl ChannelResidue {
    fn complex(r: &Dim1Residue, params: &Params) -> Self {
        ChannelResidue::Complex {
            n: params.n(),
            minus: to_channel_operand(r, ChannelSign::Minus, params),
            plus: to_channel_operand(r, ChannelSign::Plus, params),
        }
    }

    /// Integer residue of this channel.
    pub fn value(&self) -> u64 {
        match *self {
            ChannelResidue::Plain(v) => v,
            ChannelResidue::Complex { n, minus, .. } => {
                let params = Params::channel(n).expect("width checked when built");
                minus.value(&params)
            }
        }
    }
}

/// Residues of `z` in every channel of `set`.
pub fn forward_std(z: &BigUint, set: &ModuliSet) -> Result<Vec<ChannelResidue>> {
    if z >= set.dynamic_range() {
        return Err(RnsError::RangeExceeded {
            value: z.to_string(),
            range: set.dynamic_range().to_string(),
        });
    }
    let limbs = z.to_u64_digits();
    let bits = z.bits() as u32;
    set.channels()
        .iter()
        .map(|c| channel_residue(z, &limbs, bits, c))
        .collect()
}

fn channel_residue(z: &BigUint, limbs: &[u64], bits: u32, channel: &ChannelDescriptor) -> Result<ChannelResidue> {
    Ok(match *channel {
        ChannelDescriptor::PowerOfTwo(k) => ChannelResidue::Plain(extract_bits(limbs, 0, k)),
        ChannelDescriptor::IntModulus(m) => ChannelResidue::Plain(reduce_int(z, limbs, bits, m)),
        ChannelDescriptor::GaussianPair(n) => {
            let params = Params::channel(n)?;
            let r = match WideInput::new(z, &params) {
                Ok(w) => forward_22n1(&w, &params),
                Err(_) => {
                    let v = fold_plus_one(digit_groups(limbs, bits, 2 * n), 2 * n);
                    Dim1Residue::encode(v, &params)?
                }
            };
            ChannelResidue::complex(&r, &params)
        }
    })
}

fn reduce_int(z: &BigUint, limbs: &[u64], bits: u32, m: u64) -> u64 {
    if (m + 1).is_power_of_two() {
        let k = (m + 1).trailing_zeros();
        fold_minus_one(digit_groups(limbs, bits, k), k)
    } else if (m - 1).is_power_of_two() && m - 1 <= 1 << 62 {
        let k = (m - 1).trailing_zeros();
        fold_plus_one(digit_groups(limbs, bits, k), k)
    } else {
        u64::try_from(z % m).expect("remainder below a u64 modulus")
    }
}

/// `k`-bit digits of `z`, least significant first.
fn digit_groups(limbs: &[u64], bits: u32, k: u32) -> Vec<u64> {
    (0..bits.div_ceil(k))
        .map(|d| extract_bits(limbs, d * k, k))
        .collect()
}

/// Modulo `2^k - 1`: sum the digits, fold the sum with end-around carry.
fn fold_minus_one(digits: Vec<u64>, k: u32) -> u64 {
    let mask = (1u128 << k) - 1;
    let mut acc: u128 = digits.iter().map(|&d| u128::from(d)).sum();
    while acc > mask {
        acc = (acc & mask) + (acc >> k);
    }
    if acc == mask {
        0
    } else {
        acc as u64
    }
}

/// Modulo `2^k + 1`: alternating digit sum, folded until it fits.
fn fold_plus_one(digits: Vec<u64>, k: u32) -> u64 {
    let m = (1i128 << k) + 1;
    let mut acc: i128 = digits
        .iter()
        .enumerate()
        .map(|(d, &v)| if d % 2 == 0 { i128::from(v) } else { -i128::from(v) })
        .sum();
    let mask = (1i128 << k) - 1;
    while acc.unsigned_abs() > 1u128 << k {
        let neg = acc < 0;
        let mut mag = acc.unsigned_abs() as i128;
        let mut folded = 0i128;
        let mut even = true;
        while mag > 0 {
            let d = mag & mask;
            folded += if even { d } else { -d };
            even = !even;
            mag >>= k;
        }
        acc = if neg { -folded } else { folded };
    }
    if acc < 0 {
        acc += m;
    }
    acc as u64
}

/// Bits `[pos, pos + len)` of a little-endian limb slice, `len <= 63`.
fn extract_bits(limbs: &[u64], pos: u32, len: u32) -> u64 {
    debug_assert!(len <= 63);
    let limb = (pos / 64) as usize;
    let off = pos % 64;
    let lo = limbs.get(limb).copied().unwrap_or(0) >> off;
    let hi = if off == 0 {
        0
    } else {
        limbs.get(limb + 1).copied().unwrap_or(0) << (64 - off)
    };
    (lo | hi) & ((1u64 << len) - 1)
}
