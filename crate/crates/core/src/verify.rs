//! Each channel unit wired to the oracle as a sweepable check.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alu;
use crate::error::{Result, RnsError};
use crate::forward::{self, csa_mod_22n1, forward_22n1, WideInput};
use crate::oracle::{check_unit, Mismatch, OracleContext, SweepMode, UnitCheck};
use crate::report::VerifyReport;
use crate::residue::{ChannelSign, ComplexChannelResidue, FreshOperand, ModuliSet, Params};
use crate::reverse::{self, NcrtPlan};

type Verdict = std::result::Result<(), Mismatch>;

pub type AdderFn = fn(&FreshOperand, &ComplexChannelResidue, &Params) -> ComplexChannelResidue;
pub type MulFn = fn(&FreshOperand, &FreshOperand, &Params) -> ComplexChannelResidue;

const SIGN: ChannelSign = ChannelSign::Minus;

/// Integer image of an accumulator state, computed from its fields with the
/// oracle's own arithmetic.
fn oracle_state_value(ctx: &OracleContext, s: &ComplexChannelResidue) -> BigUint {
    let n = ctx.n();
    let raw = BigInt::from(s.r) - i64::from(s.borrow) + (BigInt::from(s.i + u64::from(s.carry)) << n);
    ctx.reduce_signed(&raw)
}

fn fresh(x: u64, params: &Params) -> FreshOperand {
    FreshOperand::from_value(x, SIGN, params).expect("operand drawn from [0, 2^2n]")
}

fn compare(expected: BigUint, actual: u64) -> Verdict {
    if expected == BigUint::from(actual) {
        Ok(())
    } else {
        Err(Mismatch::new(expected, actual))
    }
}

/// Same fields on the conjugate channel.
fn conjugate_coherent(minus: &ComplexChannelResidue, plus: &ComplexChannelResidue) -> Verdict {
    if *plus == minus.with_sign(ChannelSign::Plus) {
        Ok(())
    } else {
        Err(Mismatch::new(format!("{minus:?} on 2^n+j"), format!("{plus:?}")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AddCase {
    pub x: u64,
    pub y: ComplexChannelResidue,
}

/// Fresh operand plus accumulator state against `(x + phi(y)) mod (2^2n+1)`.
pub struct AdderCheck {
    params: Params,
    ctx: OracleContext,
    adder: AdderFn,
}

impl AdderCheck {
    pub fn new(params: Params) -> Self {
        AdderCheck::with_unit(params, alu::add_fresh)
    }

    pub fn with_unit(params: Params, adder: AdderFn) -> Self {
        AdderCheck {
            params,
            ctx: OracleContext::new(params.n()),
            adder,
        }
    }
}

impl UnitCheck for AdderCheck {
    type Input = AddCase;

    fn unit(&self) -> &'static str {
        "adder"
    }

    fn exhaustive_cases(&self) -> Option<u64> {
        ComplexChannelResidue::state_count(&self.params)?.checked_mul(self.params.modulus())
    }

    fn nth(&self, index: u64) -> AddCase {
        let states = ComplexChannelResidue::state_count(&self.params).expect("exhaustive only below n = 31");
        AddCase {
            x: index / states,
            y: ComplexChannelResidue::nth_state(index % states, SIGN, &self.params),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> AddCase {
        AddCase {
            x: rng.gen_range(0..=self.params.max_value()),
            y: ComplexChannelResidue::nth_state(rng.gen(), SIGN, &self.params),
        }
    }

    fn check(&self, case: &AddCase) -> Verdict {
        let x = fresh(case.x, &self.params);
        let sum = (self.adder)(&x, &case.y, &self.params);
        if !sum.is_legal(&self.params) {
            return Err(Mismatch::new("legal channel words", format!("{sum:?}")));
        }
        let expected = self.ctx.reduce(BigUint::from(case.x) + oracle_state_value(&self.ctx, &case.y));
        compare(expected, sum.value(&self.params))?;
        let plus = (self.adder)(&x.with_sign(ChannelSign::Plus), &case.y.with_sign(ChannelSign::Plus), &self.params);
        conjugate_coherent(&sum, &plus)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MulCase {
    pub x: u64,
    pub y: u64,
}

/// All operand pairs against `x * y mod (2^2n+1)`.
pub struct MultiplierCheck {
    params: Params,
    ctx: OracleContext,
    multiplier: MulFn,
}

impl MultiplierCheck {
    pub fn new(params: Params) -> Self {
        MultiplierCheck::with_unit(params, alu::mul)
    }

    pub fn with_unit(params: Params, multiplier: MulFn) -> Self {
        MultiplierCheck {
            params,
            ctx: OracleContext::new(params.n()),
            multiplier,
        }
    }
}

impl UnitCheck for MultiplierCheck {
    type Input = MulCase;

    fn unit(&self) -> &'static str {
        "multiplier"
    }

    fn exhaustive_cases(&self) -> Option<u64> {
        let m = self.params.modulus();
        m.checked_mul(m)
    }

    fn nth(&self, index: u64) -> MulCase {
        let m = self.params.modulus();
        MulCase {
            x: index / m,
            y: index % m,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> MulCase {
        let top = self.params.max_value();
        MulCase {
            x: rng.gen_range(0..=top),
            y: rng.gen_range(0..=top),
        }
    }

    fn check(&self, case: &MulCase) -> Verdict {
        let (x, y) = (fresh(case.x, &self.params), fresh(case.y, &self.params));
        let prod = (self.multiplier)(&x, &y, &self.params);
        if !prod.is_legal(&self.params) {
            return Err(Mismatch::new("legal channel words", format!("{prod:?}")));
        }
        if (x.zero || y.zero) && !prod.is_canonical_zero() {
            return Err(Mismatch::new("canonical zero", format!("{prod:?}")));
        }
        compare(
            self.ctx.reduce(BigUint::from(case.x) * case.y),
            prod.value(&self.params),
        )?;
        let plus = (self.multiplier)(
            &x.with_sign(ChannelSign::Plus),
            &y.with_sign(ChannelSign::Plus),
            &self.params,
        );
        conjugate_coherent(&prod, &plus)
    }
}

/// Product word sums `R`, `I` against `x * y` over all non-zero pairs.
pub struct CheckpointCheck {
    params: Params,
    ctx: OracleContext,
}

impl CheckpointCheck {
    pub fn new(params: Params) -> Self {
        CheckpointCheck {
            params,
            ctx: OracleContext::new(params.n()),
        }
    }
}

impl UnitCheck for CheckpointCheck {
    type Input = MulCase;

    fn unit(&self) -> &'static str {
        "checkpoint"
    }

    fn exhaustive_cases(&self) -> Option<u64> {
        let top = self.params.max_value();
        top.checked_mul(top)
    }

    fn nth(&self, index: u64) -> MulCase {
        let top = self.params.max_value();
        MulCase {
            x: index / top + 1,
            y: index % top + 1,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> MulCase {
        let top = self.params.max_value();
        MulCase {
            x: rng.gen_range(1..=top),
            y: rng.gen_range(1..=top),
        }
    }

    fn check(&self, case: &MulCase) -> Verdict {
        let (x, y) = (fresh(case.x, &self.params), fresh(case.y, &self.params));
        let (r, i) = alu::intermediate_ri(&x, &y, &self.params);
        let combined = BigInt::from(r) + (BigInt::from(i) << self.params.n());
        let got = self.ctx.reduce_signed(&combined);
        let want = self.ctx.reduce(BigUint::from(case.x) * case.y);
        if got == want {
            Ok(())
        } else {
            Err(Mismatch::new(want, format!("{got} (R={r}, I={i})")))
        }
    }
}

/// Digit-group converter over the balanced set's range against `z mod
/// (2^2n+1)`, including the carry-save pair invariant on the way.
pub struct ForwardCheck {
    params: Params,
    ctx: OracleContext,
    range: u64,
}

impl ForwardCheck {
    pub fn new(params: Params) -> Self {
        let range = Params::channel(params.n())
            .expect("width already validated")
            .balanced_range();
        ForwardCheck {
            params,
            ctx: OracleContext::new(params.n()),
            range: u64::try_from(&range).unwrap_or(u64::MAX),
        }
    }

    fn range_fits(&self) -> bool {
        5 * self.params.n() < 64
    }
}

impl UnitCheck for ForwardCheck {
    type Input = u64;

    fn unit(&self) -> &'static str {
        "forward"
    }

    fn exhaustive_cases(&self) -> Option<u64> {
        self.range_fits().then_some(self.range)
    }

    fn nth(&self, index: u64) -> u64 {
        index
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        rng.gen_range(0..self.range)
    }

    fn check(&self, z: &u64) -> Verdict {
        let w = WideInput::from_u64(*z, &self.params).map_err(|e| Mismatch::new("input in range", e))?;
        let (high, mid, low) = forward::split_input(&w);
        let csa = csa_mod_22n1(high, mid, low, &self.params);
        let want_pair = self
            .ctx
            .reduce(BigUint::from(high) + (self.params.wide_mask() - mid) + low + 1u32);
        let got_pair = self.ctx.reduce(BigUint::from(csa.u) + csa.v);
        if got_pair != want_pair {
            return Err(Mismatch::new(format!("u + v = {want_pair}"), format!("{csa:?}")));
        }
        compare(self.ctx.reduce(*z), forward_22n1(&w, &self.params).value())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CsaCase {
    pub high: u64,
    pub mid: u64,
    pub low: u64,
}

/// Carry-save pair invariant over every digit triple.
pub struct CsaCheck {
    params: Params,
    ctx: OracleContext,
}

impl CsaCheck {
    pub fn new(params: Params) -> Self {
        CsaCheck {
            params,
            ctx: OracleContext::new(params.n()),
        }
    }
}

impl UnitCheck for CsaCheck {
    type Input = CsaCase;

    fn unit(&self) -> &'static str {
        "csa"
    }

    fn exhaustive_cases(&self) -> Option<u64> {
        (5 * self.params.n() < 64).then(|| 1u64 << (5 * self.params.n()))
    }

    fn nth(&self, index: u64) -> CsaCase {
        let two_n = 2 * self.params.n();
        CsaCase {
            low: index & self.params.wide_mask(),
            mid: (index >> two_n) & self.params.wide_mask(),
            high: index >> (2 * two_n),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> CsaCase {
        CsaCase {
            high: rng.gen_range(0..=self.params.mask()),
            mid: rng.gen_range(0..=self.params.wide_mask()),
            low: rng.gen_range(0..=self.params.wide_mask()),
        }
    }

    fn check(&self, c: &CsaCase) -> Verdict {
        let pair = csa_mod_22n1(c.high, c.mid, c.low, &self.params);
        if pair.u > self.params.wide_mask() || pair.v > self.params.wide_mask() {
            return Err(Mismatch::new("2n-bit words", format!("{pair:?}")));
        }
        let want = self
            .ctx
            .reduce(BigUint::from(c.high) + (self.params.wide_mask() - c.mid) + c.low + 1u32);
        let got = self.ctx.reduce(BigUint::from(pair.u) + pair.v);
        if got == want {
            Ok(())
        } else {
            Err(Mismatch::new(want, got))
        }
    }
}

/// Forward conversion followed by New-CRT reconstruction over the balanced
/// set's whole range.
pub struct RoundTripCheck {
    set: ModuliSet,
    plan: NcrtPlan,
}

impl RoundTripCheck {
    pub fn new(params: Params) -> Self {
        RoundTripCheck::for_set(ModuliSet::balanced(&params)).expect("balanced sets are co-prime")
    }

    pub fn for_set(set: ModuliSet) -> Result<Self> {
        let plan = reverse::ncrt_plan(&set)?;
        Ok(RoundTripCheck { set, plan })
    }

    pub fn set(&self) -> &ModuliSet {
        &self.set
    }
}

impl UnitCheck for RoundTripCheck {
    type Input = BigUint;

    fn unit(&self) -> &'static str {
        "roundtrip"
    }

    fn exhaustive_cases(&self) -> Option<u64> {
        u64::try_from(self.set.dynamic_range()).ok()
    }

    fn nth(&self, index: u64) -> BigUint {
        BigUint::from(index)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> BigUint {
        let limbs = self.set.dynamic_range().to_u64_digits().len() + 2;
        let raw: Vec<u32> = (0..2 * limbs).map(|_| rng.gen()).collect();
        BigUint::new(raw) % self.set.dynamic_range()
    }

    fn check(&self, z: &BigUint) -> Verdict {
        let res = forward::forward_std(z, &self.set).map_err(|e| Mismatch::new("forward conversion", e))?;
        for (r, m) in res.iter().zip(self.set.moduli()) {
            if BigUint::from(r.value()) != crate::oracle::ref_mod(z, &BigUint::from(m)) {
                return Err(Mismatch::new(format!("residue mod {m}"), r.value()));
            }
        }
        let back = reverse::reverse_std(&res, &self.plan).map_err(|e| Mismatch::new(z, e))?;
        if back == *z {
            Ok(())
        } else {
            Err(Mismatch::new(z, back))
        }
    }
}

const CARRY_CONFIGS: [&[bool]; 7] = [
    &[],
    &[false],
    &[true],
    &[false, false],
    &[false, true],
    &[true, false],
    &[true, true],
];

#[derive(Debug, Clone, Copy)]
pub struct CompressCase {
    pub words: [u64; 4],
    pub carry_ins: &'static [bool],
}

/// (4;2) compressor value preservation over all word tuples and carry-ins.
pub struct CompressorCheck {
    params: Params,
}

impl CompressorCheck {
    pub fn new(params: Params) -> Self {
        CompressorCheck { params }
    }
}

impl UnitCheck for CompressorCheck {
    type Input = CompressCase;

    fn unit(&self) -> &'static str {
        "compressor"
    }

    fn exhaustive_cases(&self) -> Option<u64> {
        let n = self.params.n();
        (4 * n < 61).then(|| (CARRY_CONFIGS.len() as u64) << (4 * n))
    }

    fn nth(&self, index: u64) -> CompressCase {
        let n = self.params.n();
        let m = self.params.mask();
        let cfg = (index % CARRY_CONFIGS.len() as u64) as usize;
        let rest = index / CARRY_CONFIGS.len() as u64;
        CompressCase {
            words: [rest & m, (rest >> n) & m, (rest >> (2 * n)) & m, (rest >> (3 * n)) & m],
            carry_ins: CARRY_CONFIGS[cfg],
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> CompressCase {
        let m = self.params.mask();
        CompressCase {
            words: [
                rng.gen_range(0..=m),
                rng.gen_range(0..=m),
                rng.gen_range(0..=m),
                rng.gen_range(0..=m),
            ],
            carry_ins: CARRY_CONFIGS[rng.gen_range(0..CARRY_CONFIGS.len())],
        }
    }

    fn check(&self, c: &CompressCase) -> Verdict {
        let [a, b, cc, d] = c.words;
        let out = alu::compress42(a, b, cc, d, c.carry_ins, &self.params);
        let m = self.params.mask();
        if out.u > m || out.v > m {
            return Err(Mismatch::new("n-bit words", format!("{out:?}")));
        }
        let want = c.words.iter().map(|&w| BigUint::from(w)).sum::<BigUint>()
            + c.carry_ins.iter().filter(|&&b| b).count();
        compare(want, out.total(&self.params))
    }
}

/// Accumulator states through the sparse reverse adder and re-split.
pub struct NormalizeCheck {
    params: Params,
    ctx: OracleContext,
}

impl NormalizeCheck {
    pub fn new(params: Params) -> Self {
        NormalizeCheck {
            params,
            ctx: OracleContext::new(params.n()),
        }
    }
}

impl UnitCheck for NormalizeCheck {
    type Input = ComplexChannelResidue;

    fn unit(&self) -> &'static str {
        "normalize"
    }

    fn exhaustive_cases(&self) -> Option<u64> {
        ComplexChannelResidue::state_count(&self.params)
    }

    fn nth(&self, index: u64) -> ComplexChannelResidue {
        ComplexChannelResidue::nth_state(index, SIGN, &self.params)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> ComplexChannelResidue {
        ComplexChannelResidue::nth_state(rng.gen(), SIGN, &self.params)
    }

    fn check(&self, s: &ComplexChannelResidue) -> Verdict {
        let want = oracle_state_value(&self.ctx, s);
        compare(want.clone(), reverse::channel_to_dim1(s, &self.params).value())?;
        let f = reverse::normalize(s, &self.params);
        if !f.is_legal(&self.params) {
            return Err(Mismatch::new("legal fresh operand", format!("{f:?}")));
        }
        compare(want, f.value(&self.params))
    }
}

/// Sweepable units by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Adder,
    Multiplier,
    Checkpoint,
    Forward,
    Csa,
    Roundtrip,
    Compressor,
    Normalize,
}

impl Unit {
    pub const ALL: [Unit; 8] = [
        Unit::Adder,
        Unit::Multiplier,
        Unit::Checkpoint,
        Unit::Forward,
        Unit::Csa,
        Unit::Roundtrip,
        Unit::Compressor,
        Unit::Normalize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Unit::Adder => "adder",
            Unit::Multiplier => "multiplier",
            Unit::Checkpoint => "checkpoint",
            Unit::Forward => "forward",
            Unit::Csa => "csa",
            Unit::Roundtrip => "roundtrip",
            Unit::Compressor => "compressor",
            Unit::Normalize => "normalize",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Unit {
    type Err = RnsError;

    fn from_str(s: &str) -> Result<Self> {
        Unit::ALL
            .into_iter()
            .find(|u| u.name() == s)
            .ok_or_else(|| RnsError::parse(s, "unknown unit"))
    }
}

fn timed<U: UnitCheck>(check: &U, n: u32, mode: &SweepMode, workers: usize) -> Result<VerifyReport> {
    let start = Instant::now();
    let outcome = check_unit(check, mode, workers)?;
    Ok(VerifyReport::new(
        check.unit(),
        n,
        mode.kind(),
        mode.seed(),
        outcome,
        start.elapsed().as_secs_f64(),
    ))
}

/// Sweeps one unit and times it.
pub fn run(unit: Unit, params: Params, mode: &SweepMode, workers: usize) -> Result<VerifyReport> {
    let n = params.n();
    match unit {
        Unit::Adder => timed(&AdderCheck::new(params), n, mode, workers),
        Unit::Multiplier => timed(&MultiplierCheck::new(params), n, mode, workers),
        Unit::Checkpoint => timed(&CheckpointCheck::new(params), n, mode, workers),
        Unit::Forward => timed(&ForwardCheck::new(params), n, mode, workers),
        Unit::Csa => timed(&CsaCheck::new(params), n, mode, workers),
        Unit::Roundtrip => timed(&RoundTripCheck::new(params), n, mode, workers),
        Unit::Compressor => timed(&CompressorCheck::new(params), n, mode, workers),
        Unit::Normalize => timed(&NormalizeCheck::new(params), n, mode, workers),
    }
}
