//! JSON instance files.
//!
//! Delays are numbers or the string `"inf"`. Unknown fields are rejected so a
//! typo never silently drops a constraint.

use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use twosided_core::{Bound, CostKind, ProblemInstance};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delay(pub Bound);

impl Serialize for Delay {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Bound::Finite(v) => s.serialize_f64(v),
            Bound::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Delay {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct DelayVisitor;

        impl Visitor<'_> for DelayVisitor {
            type Value = Delay;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Delay, E> {
                Ok(Delay(Bound::Finite(v)))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Delay, E> {
                Ok(Delay(Bound::Finite(v as f64)))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Delay, E> {
                Ok(Delay(Bound::Finite(v as f64)))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Delay, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(Delay(Bound::Unbounded)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }

        d.deserialize_any(DelayVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostName {
    Inverse,
    Shannon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub kind: CostName,
    /// Bits per packet for the Shannon model; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<f64>,
}

impl CostSpec {
    pub fn to_kind(self) -> Result<CostKind, CliError> {
        match self.kind {
            CostName::Inverse => Ok(CostKind::Inverse),
            CostName::Shannon => {
                let bits = self.bits.unwrap_or(1.0);
                if !(bits > 0.0 && bits.is_finite()) {
                    return Err(CliError::Input(format!("cost.bits must be positive, got {bits}")));
                }
                Ok(CostKind::Shannon { bits })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub arrivals: Vec<f64>,
    pub pre_delays: Vec<Delay>,
    pub post_delays: Vec<Delay>,
    pub reference_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_max: Option<f64>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Input(inner.to_string())
            } else {
                CliError::Input(format!("{path}: {inner}"))
            }
        })?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    #[cfg(test)]
    pub fn from_instance(instance: &ProblemInstance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            arrivals: instance.arrivals().to_vec(),
            pre_delays: instance.pre_delays().iter().map(|&b| Delay(b)).collect(),
            post_delays: instance.post_delays().iter().map(|&b| Delay(b)).collect(),
            reference_time: instance.reference_time(),
            cost: None,
            w_max: None,
        }
    }

    pub fn instance(&self) -> Result<ProblemInstance, CliError> {
        ProblemInstance::new(
            self.arrivals.clone(),
            self.pre_delays.iter().map(|d| d.0).collect(),
            self.post_delays.iter().map(|d| d.0).collect(),
            self.reference_time,
        )
        .map_err(|e| CliError::Input(format!("invalid instance: {e}")))
    }

    pub fn cost_kind(&self) -> Result<CostKind, CliError> {
        self.cost.map_or(Ok(CostKind::Inverse), CostSpec::to_kind)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG4: &str = r#"{
        "schema_version": 1,
        "arrivals": [0, 4, 10, 18],
        "pre_delays": [24, 16, 34, 23],
        "post_delays": [37, 31, 8, 24],
        "reference_time": 41
    }"#;

    #[test]
    fn parses_numbers_and_inf() {
        let f = InstanceFile::parse(
            r#"{"schema_version":1,"arrivals":[0,3],"pre_delays":["inf",2.5],"post_delays":[4,"inf"],"reference_time":10}"#,
        )
        .unwrap();
        assert_eq!(f.pre_delays, vec![Delay(Bound::Unbounded), Delay(Bound::Finite(2.5))]);
        assert_eq!(f.post_delays[1], Delay(Bound::Unbounded));
        assert!(f.instance().is_ok());
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let once = InstanceFile::parse(FIG4).unwrap().to_json();
        let twice = InstanceFile::parse(&once).unwrap().to_json();
        assert_eq!(once, twice);
        let inst = InstanceFile::parse(FIG4).unwrap().instance().unwrap();
        assert_eq!(InstanceFile::from_instance(&inst).to_json(), once);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = FIG4.replace("[24, 16, 34, 23]", r#"[24, "never", 34, 23]"#);
        let msg = InstanceFile::parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("pre_delays[1]"), "{msg}");
        assert!(msg.contains("line 4"), "{msg}");

        let msg = InstanceFile::parse(&FIG4.replace("reference_time", "reference")).unwrap_err().to_string();
        assert!(msg.contains("reference"), "{msg}");

        let msg = InstanceFile::parse(&FIG4.replace("\"schema_version\": 1", "\"schema_version\": 2"))
            .unwrap_err()
            .to_string();
        assert!(msg.contains("schema_version"), "{msg}");
    }

    #[test]
    fn shannon_bits_default_to_one() {
        let spec = CostSpec { kind: CostName::Shannon, bits: None };
        assert_eq!(spec.to_kind().unwrap(), CostKind::Shannon { bits: 1.0 });
        assert!(CostSpec { kind: CostName::Shannon, bits: Some(-1.0) }.to_kind().is_err());
    }
}
