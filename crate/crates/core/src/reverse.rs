//! Reverse conversion: complex channel results back to modulo-(2^2n+1) form,
//! and residue vectors back to integers with the New CRT.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Result, RnsError};
use crate::forward::{to_channel_operand, ChannelResidue};
use crate::residue::{ComplexChannelResidue, Dim1Residue, FreshOperand, ModuliSet, Params};

/// Flagged modulo-(2^2n+1) form of a channel residue.
///
/// Realised as a sparse modulo-(2^2n+1) addition: the `2n+1`-bit main
/// operand `2^2n + 2^n s_I + s_R` plus two injected bits, `NOT(b_s)` at
/// position 0 and `c_s` at position n. The `2^2n` offset keeps the borrow
/// non-negative; the result word is then read in flagged form.
pub fn channel_to_dim1(s: &ComplexChannelResidue, params: &Params) -> Dim1Residue {
    let n = params.n();
    let m = params.modulus();
    let main = params.max_value() | (s.i << n) | s.r;
    let sparse = (u64::from(s.carry) << n) | u64::from(!s.borrow);
    // The flagged form stores value - 1 in its adder word.
    let mut word = main + sparse - 1;
    while word > params.max_value() {
        word -= m;
    }
    Dim1Residue::from_adder_word(word, params)
}

/// Re-splits an accumulated or product residue into a fresh operand so it can
/// feed the multiplier again.
pub fn normalize(s: &ComplexChannelResidue, params: &Params) -> FreshOperand {
    to_channel_operand(&channel_to_dim1(s, params), s.sign, params)
}

/// `a^-1 mod m` by the extended Euclidean algorithm.
pub fn mod_inverse(a: &BigUint, m: &BigUint) -> Result<BigUint> {
    let not_invertible = || RnsError::NotInvertible {
        value: a.to_string(),
        modulus: m.to_string(),
    };
    if *m < BigUint::from(2u32) {
        return Err(not_invertible());
    }
    let (mut old_r, mut r) = (BigInt::from(a % m), BigInt::from(m.clone()));
    let (mut old_s, mut s) = (BigInt::one(), BigInt::zero());
    while !r.is_zero() {
        let q = &old_r / &r;
        let next_r = &old_r - &q * &r;
        old_r = std::mem::replace(&mut r, next_r);
        let next_s = &old_s - &q * &s;
        old_s = std::mem::replace(&mut s, next_s);
    }
    if !old_r.is_one() {
        return Err(not_invertible());
    }
    let m = BigInt::from(m.clone());
    Ok(old_s.mod_floor(&m).to_biguint().expect("non-negative after mod_floor"))
}

/// Precomputed New-CRT constants for one moduli set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NcrtPlan {
    moduli: Vec<BigUint>,
    /// `mu_i = (m_2 ... m_i) * |(m_1 ... m_i)^-1|_(m_(i+1) ... m_k)`.
    mu: Vec<BigUint>,
    /// `M / m_1`.
    m1_cofactor: BigUint,
}

impl NcrtPlan {
    pub fn from_moduli(moduli: Vec<BigUint>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(RnsError::EmptySet);
        }
        let k = moduli.len();
        let mut mu = Vec::with_capacity(k - 1);
        let mut prefix = BigUint::one(); // m_1 ... m_i
        for i in 0..k - 1 {
            prefix *= &moduli[i];
            let suffix: BigUint = moduli[i + 1..].iter().product();
            let inv = mod_inverse(&prefix, &suffix)?;
            let inner: BigUint = moduli[1..=i].iter().product();
            mu.push(inner * inv);
        }
        let m1_cofactor = moduli[1..].iter().product();
        Ok(NcrtPlan {
            moduli,
            mu,
            m1_cofactor,
        })
    }

    pub fn moduli(&self) -> &[BigUint] {
        &self.moduli
    }

    pub fn mu(&self) -> &[BigUint] {
        &self.mu
    }

    pub fn m1_cofactor(&self) -> &BigUint {
        &self.m1_cofactor
    }
}

/// Plan for `set` in its listed channel order; a complex pair counts as the
/// single modulus `2^2n + 1`.
pub fn ncrt_plan(set: &ModuliSet) -> Result<NcrtPlan> {
    NcrtPlan::from_moduli(set.moduli().map(BigUint::from).collect())
}

/// `X = x_1 + m_1 |sum_i mu_i (x_(i+1) - x_i)|_(M / m_1)`.
pub fn ncrt_reverse(residues: &[BigUint], plan: &NcrtPlan) -> Result<BigUint> {
    if residues.len() != plan.moduli.len() {
        return Err(RnsError::DimensionMismatch {
            expected: plan.moduli.len(),
            actual: residues.len(),
        });
    }
    for (x, m) in residues.iter().zip(&plan.moduli) {
        if x >= m {
            return Err(RnsError::out_of_range("residue", x, m - 1u32));
        }
    }
    let mut acc = BigInt::zero();
    for (i, mu) in plan.mu.iter().enumerate() {
        let diff = BigInt::from(residues[i + 1].clone()) - BigInt::from(residues[i].clone());
        acc += BigInt::from(mu.clone()) * diff;
    }
    let folded = acc.mod_floor(&BigInt::from(plan.m1_cofactor.clone()));
    debug_assert!(!folded.is_negative());
    let folded = folded.to_biguint().expect("non-negative after mod_floor");
    Ok(&residues[0] + &plan.moduli[0] * folded)
}

/// Reverse conversion of a residue vector produced by
/// [`forward_std`](crate::forward::forward_std).
pub fn reverse_std(residues: &[ChannelResidue], plan: &NcrtPlan) -> Result<BigUint> {
    let values: Vec<BigUint> = residues.iter().map(|r| BigUint::from(r.value())).collect();
    ncrt_reverse(&values, plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::forward_std;
    use crate::residue::{parse_descriptors, ChannelSign};

    fn p(n: u32) -> Params {
        Params::channel(n).unwrap()
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn channel_to_dim1_examples() {
        let n2 = p(2);
        let s = ComplexChannelResidue::new(0, true, 3, true, ChannelSign::Minus, &n2).unwrap();
        let d = channel_to_dim1(&s, &n2);
        assert_eq!((d.bits(), d.zflag()), (14, false));
        assert_eq!(channel_to_dim1(&ComplexChannelResidue::zero(ChannelSign::Plus), &n2), Dim1Residue::ZERO);
        let s = ComplexChannelResidue::new(3, false, 1, false, ChannelSign::Minus, &n2).unwrap();
        assert_eq!(channel_to_dim1(&s, &n2).bits(), 6);
    }

    #[test]
    fn channel_to_dim1_matches_value_map_exhaustive() {
        for n in 2..=5 {
            let params = p(n);
            for k in 0..ComplexChannelResidue::state_count(&params).unwrap() {
                let s = ComplexChannelResidue::nth_state(k, ChannelSign::Minus, &params);
                assert_eq!(channel_to_dim1(&s, &params).value(), s.value(&params));
                let f = normalize(&s, &params);
                assert!(f.is_legal(&params));
                assert_eq!(f.value(&params), s.value(&params));
            }
        }
    }

    #[test]
    fn normalize_zero() {
        let n2 = p(2);
        let f = normalize(&ComplexChannelResidue::zero(ChannelSign::Minus), &n2);
        assert!(f.zero);
        assert_eq!(f.value(&n2), 0);
    }

    #[test]
    fn mod_inverse_examples() {
        assert_eq!(mod_inverse(&big(4), &big(255)).unwrap(), big(64));
        assert_eq!(mod_inverse(&big(1), &big(97)).unwrap(), big(1));
        assert_eq!(mod_inverse(&big(17), &big(60)).unwrap(), big(53));
        assert!(matches!(
            mod_inverse(&big(6), &big(9)),
            Err(RnsError::NotInvertible { .. })
        ));
    }

    #[test]
    fn mod_inverse_brute_force() {
        for m in 2u64..120 {
            for a in 0..m {
                let brute = (1..m).find(|t| a * t % m == 1);
                match mod_inverse(&big(a), &big(m)) {
                    Ok(t) => assert_eq!(Some(t), brute.map(big)),
                    Err(_) => assert_eq!(brute, None, "a={a} m={m}"),
                }
            }
        }
    }

    #[test]
    fn plan_constants_satisfy_congruences() {
        let set = ModuliSet::build(parse_descriptors("4,3,5,g2").unwrap()).unwrap();
        let plan = ncrt_plan(&set).unwrap();
        assert_eq!(plan.m1_cofactor(), &big(255));
        let m = plan.moduli().to_vec();
        for (i, mu) in plan.mu().iter().enumerate() {
            let inner: BigUint = m[1..=i].iter().product();
            let prefix: BigUint = m[..=i].iter().product();
            let suffix: BigUint = m[i + 1..].iter().product();
            assert_eq!(mu % &inner, BigUint::zero());
            assert_eq!((mu / &inner) * prefix % &suffix, BigUint::one() % &suffix);
        }
    }

    #[test]
    fn balanced_plan_cofactor() {
        for n in 2..=8 {
            let plan = ncrt_plan(&ModuliSet::balanced(&p(n))).unwrap();
            assert_eq!(plan.m1_cofactor(), &((BigUint::one() << (4 * n)) - 1u32));
        }
    }

    #[test]
    fn single_modulus_plan() {
        let plan = NcrtPlan::from_moduli(vec![big(17)]).unwrap();
        assert!(plan.mu().is_empty());
        assert_eq!(ncrt_reverse(&[big(9)], &plan).unwrap(), big(9));
    }

    #[test]
    fn reverse_examples() {
        let set = ModuliSet::build(parse_descriptors("4,3,5,g2").unwrap()).unwrap();
        let plan = ncrt_plan(&set).unwrap();
        assert_eq!(ncrt_reverse(&[big(0), big(1), big(0), big(15)], &plan).unwrap(), big(100));
        assert_eq!(ncrt_reverse(&vec![big(0); 4], &plan).unwrap(), big(0));
        assert_eq!(ncrt_reverse(&[big(3), big(2), big(4), big(16)], &plan).unwrap(), big(1019));
        assert!(matches!(
            ncrt_reverse(&vec![big(0); 3], &plan),
            Err(RnsError::DimensionMismatch { expected: 4, actual: 3 })
        ));
        assert!(ncrt_reverse(&[big(4), big(0), big(0), big(0)], &plan).is_err());
    }

    #[test]
    fn round_trip_exhaustive_n2() {
        let set = ModuliSet::balanced(&p(2));
        let plan = ncrt_plan(&set).unwrap();
        for z in 0..1020u64 {
            let res = forward_std(&big(z), &set).unwrap();
            assert_eq!(reverse_std(&res, &plan).unwrap(), big(z));
        }
    }
}
