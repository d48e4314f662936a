//! Word-level dataflow of the modulo-(2^n -/+ j) channel adder and multiplier.
//!
//! Each LUT of the FPGA realisation is a method of [`Luts`]. [`WordLuts`]
//! evaluates them as plain word arithmetic for any supported width;
//! [`TableLuts`] materialises every table for small widths, the way the
//! LUT fabric would hold them.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RnsError};
use crate::residue::{ComplexChannelResidue, FreshOperand, Params};

/// Widest channel whose LUTs can be materialised.
pub const MAX_TABLE_WIDTH: u32 = 5;

/// Lookup stages of the channel units.
pub trait Luts {
    fn params(&self) -> &Params;

    /// `2^n c_n + S_R = X_R + Y_R + NOT(b_y) NOT(x_2n)`.
    fn adder_real(&self, xr: u64, yr: u64, x_zero: bool, borrow: bool) -> u64;

    /// `2^n c'_n + S_I = X_I + Y_I + c_y NOT(x_2n)`.
    fn adder_imag(&self, xi: u64, yi: u64, x_zero: bool, carry: bool) -> u64;

    /// `(1 + X_R)(1 + Y_R)`, `2n+1` bits.
    fn real_by_real(&self, xr: u64, yr: u64) -> u64;

    /// `(1 + X_R) Y_I`.
    fn real_by_imag(&self, xr: u64, yi: u64) -> u64;

    /// `X_I (1 + Y_R)`.
    fn imag_by_real(&self, xi: u64, yr: u64) -> u64;

    /// `X_I Y_I`.
    fn imag_by_imag(&self, xi: u64, yi: u64) -> u64;

    /// `W + Z + 1`, `n+1` bits.
    fn final_real(&self, w: u64, z: u64) -> u64;

    /// `W' + Z'`, `n+1` bits.
    fn final_imag(&self, w: u64, z: u64) -> u64;
}

/// LUT contents computed on the fly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordLuts {
    params: Params,
}

impl WordLuts {
    pub fn new(params: Params) -> Self {
        WordLuts { params }
    }
}

impl Luts for WordLuts {
    fn params(&self) -> &Params {
        &self.params
    }

    #[inline]
    fn adder_real(&self, xr: u64, yr: u64, x_zero: bool, borrow: bool) -> u64 {
        xr + yr + u64::from(!borrow && !x_zero)
    }

    #[inline]
    fn adder_imag(&self, xi: u64, yi: u64, x_zero: bool, carry: bool) -> u64 {
        xi + yi + u64::from(carry && !x_zero)
    }

    #[inline]
    fn real_by_real(&self, xr: u64, yr: u64) -> u64 {
        (1 + xr) * (1 + yr)
    }

    #[inline]
    fn real_by_imag(&self, xr: u64, yi: u64) -> u64 {
        (1 + xr) * yi
    }

    #[inline]
    fn imag_by_real(&self, xi: u64, yr: u64) -> u64 {
        xi * (1 + yr)
    }

    #[inline]
    fn imag_by_imag(&self, xi: u64, yi: u64) -> u64 {
        xi * yi
    }

    #[inline]
    fn final_real(&self, w: u64, z: u64) -> u64 {
        w + z + 1
    }

    #[inline]
    fn final_imag(&self, w: u64, z: u64) -> u64 {
        w + z
    }
}

/// Every LUT stored as a table indexed by its concatenated input bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableLuts {
    params: Params,
    adder_real: Vec<u64>,
    adder_imag: Vec<u64>,
    real_by_real: Vec<u64>,
    real_by_imag: Vec<u64>,
    imag_by_real: Vec<u64>,
    imag_by_imag: Vec<u64>,
    final_real: Vec<u64>,
    final_imag: Vec<u64>,
}

impl TableLuts {
    pub fn new(params: Params) -> Result<Self> {
        let n = params.n();
        if n > MAX_TABLE_WIDTH {
            return Err(RnsError::out_of_range("table width", n, MAX_TABLE_WIDTH));
        }
        let words = WordLuts::new(params);
        let pair = |f: &dyn Fn(u64, u64) -> u64| -> Vec<u64> {
            (0..1u64 << (2 * n))
                .map(|k| f(k >> n, k & params.mask()))
                .collect()
        };
        let adder = |f: &dyn Fn(u64, u64, bool, bool) -> u64| -> Vec<u64> {
            (0..1u64 << (2 * n + 2))
                .map(|k| {
                    let (a, b) = ((k >> (n + 2)), (k >> 2) & params.mask());
                    f(a, b, k & 2 != 0, k & 1 != 0)
                })
                .collect()
        };
        Ok(TableLuts {
            params,
            adder_real: adder(&|a, b, z, s| words.adder_real(a, b, z, s)),
            adder_imag: adder(&|a, b, z, s| words.adder_imag(a, b, z, s)),
            real_by_real: pair(&|a, b| words.real_by_real(a, b)),
            real_by_imag: pair(&|a, b| words.real_by_imag(a, b)),
            imag_by_real: pair(&|a, b| words.imag_by_real(a, b)),
            imag_by_imag: pair(&|a, b| words.imag_by_imag(a, b)),
            final_real: pair(&|a, b| words.final_real(a, b)),
            final_imag: pair(&|a, b| words.final_imag(a, b)),
        })
    }

    /// Total number of stored entries.
    pub fn entries(&self) -> usize {
        [
            &self.adder_real,
            &self.adder_imag,
            &self.real_by_real,
            &self.real_by_imag,
            &self.imag_by_real,
            &self.imag_by_imag,
            &self.final_real,
            &self.final_imag,
        ]
        .iter()
        .map(|t| t.len())
        .sum()
    }

    #[inline]
    fn pair_index(&self, a: u64, b: u64) -> usize {
        ((a << self.params.n()) | b) as usize
    }

    #[inline]
    fn adder_index(&self, a: u64, b: u64, flag: bool, bit: bool) -> usize {
        ((a << (self.params.n() + 2)) | (b << 2) | (u64::from(flag) << 1) | u64::from(bit)) as usize
    }
}

impl Luts for TableLuts {
    fn params(&self) -> &Params {
        &self.params
    }

    fn adder_real(&self, xr: u64, yr: u64, x_zero: bool, borrow: bool) -> u64 {
        self.adder_real[self.adder_index(xr, yr, x_zero, borrow)]
    }

    fn adder_imag(&self, xi: u64, yi: u64, x_zero: bool, carry: bool) -> u64 {
        self.adder_imag[self.adder_index(xi, yi, x_zero, carry)]
    }

    fn real_by_real(&self, xr: u64, yr: u64) -> u64 {
        self.real_by_real[self.pair_index(xr, yr)]
    }

    fn real_by_imag(&self, xr: u64, yi: u64) -> u64 {
        self.real_by_imag[self.pair_index(xr, yi)]
    }

    fn imag_by_real(&self, xi: u64, yr: u64) -> u64 {
        self.imag_by_real[self.pair_index(xi, yr)]
    }

    fn imag_by_imag(&self, xi: u64, yi: u64) -> u64 {
        self.imag_by_imag[self.pair_index(xi, yi)]
    }

    fn final_real(&self, w: u64, z: u64) -> u64 {
        self.final_real[self.pair_index(w, z)]
    }

    fn final_imag(&self, w: u64, z: u64) -> u64 {
        self.final_imag[self.pair_index(w, z)]
    }
}

// ---------------------------------------------------------------------------
// Adder
// ---------------------------------------------------------------------------

/// Intermediate words of one addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddTrace {
    /// `2^n c_n + S_R`.
    pub real_sum: u64,
    /// `2^n c'_n + S_I`.
    pub imag_sum: u64,
    pub result: ComplexChannelResidue,
}

/// Adds a fresh operand to an accumulated residue.
///
/// The real carry-out `c_n` lands in the imaginary stored carry and the
/// imaginary carry-out `c'_n` in the real stored borrow. When `x` is zero its
/// words are zero, neither sum can carry, and the pending borrow/carry of `y`
/// pass straight through.
pub fn add_fresh(x: &FreshOperand, y: &ComplexChannelResidue, params: &Params) -> ComplexChannelResidue {
    add_fresh_with(x, y, &WordLuts::new(*params)).result
}

pub fn add_fresh_with<L: Luts>(x: &FreshOperand, y: &ComplexChannelResidue, luts: &L) -> AddTrace {
    assert_eq!(x.sign, y.sign, "operands on different conjugate channels");
    let params = luts.params();
    let n = params.n();
    let real_sum = luts.adder_real(x.real, y.r, x.zero, y.borrow);
    let imag_sum = luts.adder_imag(x.imag, y.i, x.zero, y.carry);
    let c_n = real_sum >> n == 1;
    let c_n_imag = imag_sum >> n == 1;
    let result = ComplexChannelResidue {
        r: real_sum & params.mask(),
        borrow: c_n_imag || (y.borrow && x.zero),
        i: imag_sum & params.mask(),
        carry: c_n || (y.carry && x.zero),
        sign: x.sign,
    };
    AddTrace {
        real_sum,
        imag_sum,
        result,
    }
}

// ---------------------------------------------------------------------------
// Multiplier
// ---------------------------------------------------------------------------

/// High/low halves of the four partial products.
///
/// `(1+X_R)(1+Y_R) = 2^2n c + 2^n H_RR + L_RR`, `(1+X_R) Y_I = 2^n H_RI + L_RI`,
/// `X_I (1+Y_R) = 2^n H_IR + L_IR`, `X_I Y_I = 2^n H_II + L_II`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialProducts {
    pub c: bool,
    pub h_rr: u64,
    pub l_rr: u64,
    pub h_ri: u64,
    pub l_ri: u64,
    pub h_ir: u64,
    pub l_ir: u64,
    pub h_ii: u64,
    pub l_ii: u64,
}

pub fn lut_partials<L: Luts>(x: &FreshOperand, y: &FreshOperand, luts: &L) -> PartialProducts {
    debug_assert!(!x.zero && !y.zero, "zero operands bypass the partial products");
    let params = luts.params();
    let n = params.n();
    let mask = params.mask();
    let rr = luts.real_by_real(x.real, y.real);
    let ri = luts.real_by_imag(x.real, y.imag);
    let ir = luts.imag_by_real(x.imag, y.real);
    let ii = luts.imag_by_imag(x.imag, y.imag);
    PartialProducts {
        c: rr >> (2 * n) == 1,
        h_rr: (rr >> n) & mask,
        l_rr: rr & mask,
        h_ri: ri >> n,
        l_ri: ri & mask,
        h_ir: ir >> n,
        l_ir: ir & mask,
        h_ii: ii >> n,
        l_ii: ii & mask,
    }
}

/// Outputs of an n-bit (4;2) compressor row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressorOutput {
    /// Column sums.
    pub u: u64,
    /// Column carries shifted one place left; bit 0 holds the second carry-in.
    pub v: u64,
    /// Inter-cell carry leaving the top column.
    pub c_out: bool,
    /// Carry of the top column.
    pub v_out: bool,
}

impl CompressorOutput {
    pub fn total(&self, params: &Params) -> u64 {
        self.u + self.v + ((u64::from(self.c_out) + u64::from(self.v_out)) << params.n())
    }
}

/// Compresses four n-bit words plus up to two carry-in bits.
///
/// Each column is a (4;2) cell built from two full adders. The first carry-in
/// enters the cell chain at column 0; the second occupies bit 0 of `v`, which
/// the shifted carries leave free.
pub fn compress42(a: u64, b: u64, c: u64, d: u64, carry_ins: &[bool], params: &Params) -> CompressorOutput {
    assert!(carry_ins.len() <= 2, "a compressor row takes at most two carry-ins");
    let n = params.n();
    let mut cin = carry_ins.first().copied().map_or(0, u64::from);
    let mut u = 0;
    let mut v = carry_ins.get(1).copied().map_or(0, u64::from);
    let mut v_out = false;
    for col in 0..n {
        let (ab, bb, cb, db) = (a >> col & 1, b >> col & 1, c >> col & 1, d >> col & 1);
        let s1 = ab ^ bb ^ cb;
        let cout = (ab & bb) | (ab & cb) | (bb & cb);
        let sum = s1 ^ db ^ cin;
        let carry = (s1 & db) | (s1 & cin) | (db & cin);
        u |= sum << col;
        if col + 1 < n {
            v |= carry << (col + 1);
        } else {
            v_out = carry == 1;
        }
        cin = cout;
    }
    CompressorOutput {
        u,
        v,
        c_out: cin == 1,
        v_out,
    }
}

/// Three-operand n-bit carry-save adder: sum word, carries shifted one place
/// left (bit 0 clear) and the carry leaving the top column.
pub fn carry_save(a: u64, b: u64, c: u64, params: &Params) -> (u64, u64, bool) {
    let sum = a ^ b ^ c;
    let carry = (a & b) | (a & c) | (b & c);
    (
        sum,
        (carry << 1) & params.mask(),
        carry >> (params.n() - 1) & 1 == 1,
    )
}

/// Operands of the two final n-bit adders after the carry-save rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarrySaveRows {
    /// `W`.
    pub w: u64,
    /// `Z`; bit 0 is `NOT(w'_n)` from the imaginary row.
    pub z: u64,
    /// `W'`.
    pub w_imag: u64,
    /// `Z'`; bit 0 is the top carry of the real row.
    pub z_imag: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MulStages {
    pub partials: PartialProducts,
    pub real: CompressorOutput,
    pub imag: CompressorOutput,
    pub rows: CarrySaveRows,
    /// `W + Z + 1`.
    pub real_sum: u64,
    /// `W' + Z'`.
    pub imag_sum: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MulTrace {
    /// Absent when either operand is zero and the datapath is gated off.
    pub stages: Option<MulStages>,
    pub product: ComplexChannelResidue,
}

/// Multiplies two fresh operands.
pub fn mul(x: &FreshOperand, y: &FreshOperand, params: &Params) -> ComplexChannelResidue {
    mul_with(x, y, &WordLuts::new(*params)).product
}

pub fn mul_with<L: Luts>(x: &FreshOperand, y: &FreshOperand, luts: &L) -> MulTrace {
    assert_eq!(x.sign, y.sign, "operands on different conjugate channels");
    if x.zero || y.zero {
        return MulTrace {
            stages: None,
            product: ComplexChannelResidue::zero(x.sign),
        };
    }
    let params = luts.params();
    let n = params.n();
    let mask = params.mask();
    let pp = lut_partials(x, y, luts);

    // R - 3 = L_RR + ~L_II + ~H_RI + ~H_IR + ~c
    let real = compress42(
        pp.l_rr,
        !pp.l_ii & mask,
        !pp.h_ri & mask,
        !pp.h_ir & mask,
        &[!pp.c],
        params,
    );
    // I + 2 + c_n + v_n = H_RR + L_RI + L_IR + ~H_II + c_n + v_n
    let imag = compress42(
        pp.h_rr,
        pp.l_ri,
        pp.l_ir,
        !pp.h_ii & mask,
        &[real.c_out, real.v_out],
        params,
    );

    // Real row: U + (V with ~v'_n in bit 0) + ~c'_n.
    let (w, real_carries, real_top) = carry_save(
        real.u,
        real.v | u64::from(!imag.v_out),
        u64::from(!imag.c_out),
        params,
    );
    // Imaginary row: U' + V' + (2^n - 2).
    let (w_imag, imag_carries, imag_top) = carry_save(imag.u, imag.v, mask - 1, params);

    // Top carries cross over: weight 2^n moves to the imaginary side as +1,
    // weight 2^2n returns to the real side as -1 = ~w'_n - 1, the -1 being
    // absorbed by the +2 already carried in the real part.
    let rows = CarrySaveRows {
        w,
        z: real_carries | u64::from(!imag_top),
        w_imag,
        z_imag: imag_carries | u64::from(real_top),
    };

    let real_sum = luts.final_real(rows.w, rows.z);
    let imag_sum = luts.final_imag(rows.w_imag, rows.z_imag);
    let product = ComplexChannelResidue {
        r: real_sum & mask,
        borrow: imag_sum >> n == 1,
        i: imag_sum & mask,
        carry: real_sum >> n == 1,
        sign: x.sign,
    };
    MulTrace {
        stages: Some(MulStages {
            partials: pp,
            real,
            imag,
            rows,
            real_sum,
            imag_sum,
        }),
        product,
    }
}

/// Real and imaginary word sums of the product before compression:
/// `R = L_RR + ~L_II + ~H_RI + ~H_IR + ~c + 3` and
/// `I = H_RR + L_RI + L_IR + ~H_II - 2`.
///
/// `(R + 2^n I) mod (2^2n + 1)` is the product of the operand values. Both
/// operands must be non-zero; zero is gated around the datapath.
pub fn intermediate_ri(x: &FreshOperand, y: &FreshOperand, params: &Params) -> (i64, i64) {
    let pp = lut_partials(x, y, &WordLuts::new(*params));
    let mask = params.mask();
    let not = |w: u64| (!w & mask) as i64;
    let r = pp.l_rr as i64 + not(pp.l_ii) + not(pp.h_ri) + not(pp.h_ir) + i64::from(!pp.c) + 3;
    let i = pp.h_rr as i64 + pp.l_ri as i64 + pp.l_ir as i64 + not(pp.h_ii) - 2;
    (r, i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residue::ChannelSign;

    const S: ChannelSign = ChannelSign::Minus;

    fn p(n: u32) -> Params {
        Params::channel(n).unwrap()
    }

    fn fresh(x: u64, params: &Params) -> FreshOperand {
        FreshOperand::from_value(x, S, params).unwrap()
    }

    fn modp(v: i128, params: &Params) -> i128 {
        v.rem_euclid(i128::from(params.modulus()))
    }

    #[test]
    fn add_examples() {
        let n2 = p(2);
        let y = ComplexChannelResidue::new(3, false, 1, false, S, &n2).unwrap();
        let s = add_fresh(&fresh(5, &n2), &y, &n2);
        assert_eq!((s.r, s.borrow, s.i, s.carry), (0, false, 2, true));
        assert_eq!(s.value(&n2), 12);

        let y = ComplexChannelResidue::new(0, false, 3, true, S, &n2).unwrap();
        let s = add_fresh(&fresh(16, &n2), &y, &n2);
        assert_eq!((s.r, s.borrow, s.i, s.carry), (0, true, 3, true));
        assert_eq!(s.value(&n2), 15);
    }

    #[test]
    fn adding_zero_passes_fields_through() {
        let params = p(3);
        let zero = fresh(0, &params);
        for k in 0..ComplexChannelResidue::state_count(&params).unwrap() {
            let y = ComplexChannelResidue::nth_state(k, S, &params);
            assert_eq!(add_fresh(&zero, &y, &params), y);
        }
    }

    #[test]
    fn partial_product_examples() {
        let n2 = p(2);
        let op = |re: u64, im: u64| FreshOperand {
            real: re,
            imag: im,
            zero: false,
            sign: S,
        };
        let luts = WordLuts::new(n2);
        let pp = lut_partials(&op(0, 0), &op(0, 0), &luts);
        assert_eq!(
            pp,
            PartialProducts {
                c: false,
                h_rr: 0,
                l_rr: 1,
                h_ri: 0,
                l_ri: 0,
                h_ir: 0,
                l_ir: 0,
                h_ii: 0,
                l_ii: 0
            }
        );
        let pp = lut_partials(&op(3, 0), &op(3, 0), &luts);
        assert_eq!((pp.c, pp.h_rr, pp.l_rr), (true, 0, 0));
        let pp = lut_partials(&op(0, 3), &op(0, 3), &luts);
        assert_eq!((pp.h_ii, pp.l_ii), (2, 1));
    }

    #[test]
    fn partial_product_invariants_exhaustive() {
        for n in 2..=4 {
            let params = p(n);
            let luts = WordLuts::new(params);
            let m = params.mask();
            for xv in 1..=params.max_value() {
                for yv in (1..=params.max_value()).step_by(3) {
                    let (x, y) = (fresh(xv, &params), fresh(yv, &params));
                    let pp = lut_partials(&x, &y, &luts);
                    for w in [pp.h_rr, pp.l_rr, pp.h_ri, pp.l_ri, pp.h_ir, pp.l_ir, pp.h_ii, pp.l_ii] {
                        assert!(w <= m);
                    }
                    let two_n = 2 * n;
                    assert_eq!(
                        (1 + x.real) * (1 + y.real),
                        (u64::from(pp.c) << two_n) + (pp.h_rr << n) + pp.l_rr
                    );
                    assert_eq!((1 + x.real) * y.imag, (pp.h_ri << n) + pp.l_ri);
                    assert_eq!(x.imag * (1 + y.real), (pp.h_ir << n) + pp.l_ir);
                    assert_eq!(x.imag * y.imag, (pp.h_ii << n) + pp.l_ii);
                }
            }
        }
    }

    #[test]
    fn compressor_examples() {
        let n2 = p(2);
        let out = compress42(0, 0, 0, 0, &[true], &n2);
        assert_eq!(out.total(&n2), 1);
        let out = compress42(3, 3, 3, 3, &[true, true], &n2);
        assert_eq!(out.total(&n2), 14);
        assert!(out.u <= 3 && out.v <= 3);
    }

    #[test]
    fn compressor_preserves_value_exhaustive_n2() {
        let n2 = p(2);
        let carry_sets: [&[bool]; 7] = [
            &[],
            &[false],
            &[true],
            &[false, false],
            &[false, true],
            &[true, false],
            &[true, true],
        ];
        for k in 0..256u64 {
            let (a, b, c, d) = (k & 3, k >> 2 & 3, k >> 4 & 3, k >> 6 & 3);
            for cins in carry_sets {
                let out = compress42(a, b, c, d, cins, &n2);
                let expect = a + b + c + d + cins.iter().map(|&x| u64::from(x)).sum::<u64>();
                assert_eq!(out.total(&n2), expect);
                if cins.len() < 2 {
                    assert_eq!(out.v & 1, 0);
                }
            }
        }
    }

    #[test]
    fn mul_examples() {
        let n2 = p(2);
        assert_eq!(mul(&fresh(3, &n2), &fresh(5, &n2), &n2).value(&n2), 15);
        let z = mul(&fresh(0, &n2), &fresh(9, &n2), &n2);
        assert!(z.is_canonical_zero());
        assert_eq!(mul(&fresh(16, &n2), &fresh(16, &n2), &n2).value(&n2), 1);
    }

    #[test]
    fn intermediate_checkpoint_examples() {
        let n2 = p(2);
        let (r, i) = intermediate_ri(&fresh(1, &n2), &fresh(1, &n2), &n2);
        assert_eq!(modp(i128::from(r) + 4 * i128::from(i), &n2), 1);
        let (r, i) = intermediate_ri(&fresh(3, &n2), &fresh(5, &n2), &n2);
        assert_eq!(modp(i128::from(r) + 4 * i128::from(i), &n2), 15);
    }

    #[test]
    fn intermediate_checkpoint_exhaustive_n2() {
        let n2 = p(2);
        for xv in 1..=16 {
            for yv in 1..=16 {
                let (r, i) = intermediate_ri(&fresh(xv, &n2), &fresh(yv, &n2), &n2);
                assert_eq!(
                    modp(i128::from(r) + 4 * i128::from(i), &n2),
                    i128::from(xv * yv % 17)
                );
            }
        }
    }

    #[test]
    fn mul_exhaustive_n3() {
        let params = p(3);
        for xv in 0..=64 {
            for yv in 0..=64 {
                let prod = mul(&fresh(xv, &params), &fresh(yv, &params), &params);
                assert!(prod.is_legal(&params));
                assert_eq!(prod.value(&params), xv * yv % 65, "{xv}*{yv}");
            }
        }
    }

    #[test]
    fn mul_dataflow_is_sign_independent() {
        let params = p(3);
        for xv in (0..=64).step_by(5) {
            for yv in 0..=64 {
                let a = mul(&fresh(xv, &params), &fresh(yv, &params), &params);
                let xp = fresh(xv, &params).with_sign(ChannelSign::Plus);
                let yp = fresh(yv, &params).with_sign(ChannelSign::Plus);
                let b = mul(&xp, &yp, &params);
                assert_eq!(b, a.with_sign(ChannelSign::Plus));
            }
        }
    }

    #[test]
    fn table_luts_match_word_luts() {
        for n in 2..=MAX_TABLE_WIDTH {
            let params = p(n);
            let table = TableLuts::new(params).unwrap();
            let words = WordLuts::new(params);
            for xv in 0..=params.max_value() {
                let x = fresh(xv, &params);
                for k in (0..ComplexChannelResidue::state_count(&params).unwrap()).step_by(7) {
                    let y = ComplexChannelResidue::nth_state(k, S, &params);
                    assert_eq!(add_fresh_with(&x, &y, &table), add_fresh_with(&x, &y, &words));
                }
                for yv in (0..=params.max_value()).step_by(3) {
                    let y = fresh(yv, &params);
                    assert_eq!(mul_with(&x, &y, &table), mul_with(&x, &y, &words));
                }
            }
        }
        assert!(TableLuts::new(p(6)).is_err());
        assert_eq!(TableLuts::new(p(2)).unwrap().entries(), 2 * 64 + 6 * 16);
    }

    #[test]
    fn widest_channel_stays_in_range() {
        let params = p(31);
        let top = params.max_value();
        for (xv, yv) in [(top, top), (top - 1, top), (1, top), (top / 3, top / 5 + 7)] {
            let prod = mul(&fresh(xv, &params), &fresh(yv, &params), &params);
            let want = (u128::from(xv) * u128::from(yv) % u128::from(params.modulus())) as u64;
            assert_eq!(prod.value(&params), want);
            let acc = ComplexChannelResidue::new(params.mask(), true, params.mask(), true, S, &params).unwrap();
            let sum = add_fresh(&fresh(xv, &params), &acc, &params);
            let want = (u128::from(xv) + u128::from(acc.value(&params))) % u128::from(params.modulus());
            assert_eq!(u128::from(sum.value(&params)), want);
        }
    }
}
