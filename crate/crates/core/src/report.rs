//! Machine-readable verification and dynamic-range reports.
//!
//! Integers at or above 2^53 are written as decimal strings so that every
//! JSON consumer reads them exactly.

use std::fmt::Write as _;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::oracle::{CheckOutcome, Counterexample, SweepKind};
use crate::residue::{write_descriptors, ChannelDescriptor, RangeAnalysis};

/// Largest integer every JSON reader represents exactly, plus one.
pub const JSON_SAFE_LIMIT: u64 = 1 << 53;

/// `u64` as a JSON number below 2^53 and as a decimal string above.
pub mod json_u64 {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        if *v < super::JSON_SAFE_LIMIT {
            s.serialize_u64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = u64;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an unsigned integer or a decimal string")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<u64, E> {
                Ok(v)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<u64, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
            #[derive(Deserialize)]
            struct Wrap(#[serde(with = "super")] u64);
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}

/// `BigUint` with the same number-or-string convention.
pub mod json_biguint {
    use num_bigint::BigUint;
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        match u64::try_from(v) {
            Ok(small) if small < super::JSON_SAFE_LIMIT => s.serialize_u64(small),
            _ => s.serialize_str(&v.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = BigUint;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an unsigned integer or a decimal string")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<BigUint, E> {
                Ok(BigUint::from(v))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<BigUint, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub unit: String,
    pub n: u32,
    pub mode: SweepKind,
    #[serde(with = "json_u64")]
    pub cases: u64,
    #[serde(with = "json_u64")]
    pub failures: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "json_u64::option"
    )]
    pub seed: Option<u64>,
    pub wall_time_s: f64,
}

impl VerifyReport {
    pub fn new(unit: &str, n: u32, mode: SweepKind, seed: Option<u64>, outcome: CheckOutcome, wall_time_s: f64) -> Self {
        VerifyReport {
            unit: unit.to_owned(),
            n,
            mode,
            cases: outcome.cases,
            failures: outcome.failures,
            counterexample: outcome.first,
            seed,
            wall_time_s,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// One pipeline stage of the complex-channel multiplier with its gate-delay
/// annotation, where one is given.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLevel {
    pub stage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<String>,
}

/// Multiplier stage schedule of an n-bit complex channel.
pub fn multiplier_stages() -> Vec<StageLevel> {
    [
        ("LUT partial products (1+X_R)(1+Y_R), (1+X_R)Y_I, X_I(1+Y_R), X_I*Y_I", None),
        ("(4;2) compressors, real and imaginary rows", Some("6ΔG")),
        ("carry-save adders with cross-fed carries and 2^n-2", Some("2ΔG")),
        ("n-bit final adders P_R = |W+Z+1|, P_I = |W'+Z'|", None),
    ]
    .into_iter()
    .map(|(stage, delay)| StageLevel {
        stage: stage.to_owned(),
        delay: delay.map(str::to_owned),
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrReport {
    pub set: String,
    #[serde(with = "json_biguint")]
    pub dynamic_range: BigUint,
    pub bit_coverage: u64,
    pub max_channel_width: u32,
    pub coprime: bool,
    /// Offending pair when the channels are not pairwise co-prime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation: Option<[String; 2]>,
    /// Number of distinct residue vectors (lcm of the moduli); below the
    /// dynamic range exactly when `coprime` is false.
    #[serde(with = "json_biguint")]
    pub distinct_values: BigUint,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stage_levels: Vec<StageLevel>,
}

impl DrReport {
    pub fn analyze(channels: &[ChannelDescriptor]) -> Result<Self> {
        let analysis = RangeAnalysis::of(channels)?;
        let mut set = String::new();
        write_descriptors(&mut set, channels).expect("writing to a String");
        let has_complex = channels
            .iter()
            .any(|c| matches!(c, ChannelDescriptor::GaussianPair(_)));
        Ok(DrReport {
            set,
            bit_coverage: analysis.product.bits() - 1,
            max_channel_width: channels.iter().map(ChannelDescriptor::width).max().unwrap_or(0),
            coprime: analysis.violation.is_none(),
            violation: analysis
                .violation
                .map(|(a, b)| [a.to_string(), b.to_string()]),
            dynamic_range: analysis.product,
            distinct_values: analysis.distinct,
            stage_levels: if has_complex { multiplier_stages() } else { Vec::new() },
        })
    }
}

/// Side-by-side text table of dynamic-range reports.
pub fn dr_table(reports: &[DrReport]) -> String {
    let set_w = reports.iter().map(|r| r.set.len()).max().unwrap_or(0).max(3);
    let dr_w = reports
        .iter()
        .map(|r| group_thousands(&r.dynamic_range).len())
        .max()
        .unwrap_or(0)
        .max(2);
    let mut out = String::new();
    let _ = writeln!(out, "{:<set_w$}  {:>dr_w$}  {:>4}  {:>5}  note", "set", "DR", "bits", "width");
    for r in reports {
        let note = match &r.violation {
            Some([a, b]) => format!(
                "not co-prime ({a}, {b}); {} distinct values",
                group_thousands(&r.distinct_values)
            ),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "{:<set_w$}  {:>dr_w$}  {:>4}  {:>5}  {note}",
            r.set,
            group_thousands(&r.dynamic_range),
            r.bit_coverage,
            r.max_channel_width,
        );
    }
    out
}

/// `1234567` as `1,234,567`.
pub fn group_thousands(v: &BigUint) -> String {
    let digits = v.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (k, ch) in digits.chars().enumerate() {
        if k > 0 && (digits.len() - k).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}
