use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    #[serde(with = "float_repr")]
    pub estimate: f64,
    #[serde(with = "float_repr")]
    pub std_error: f64,
    #[serde(with = "float_repr")]
    pub threshold: f64,
    pub verdict: Verdict,
    pub n_samples: usize,
}

impl Statistic {
    pub fn new(name: impl Into<String>, estimate: f64, std_error: f64, threshold: f64, verdict: Verdict, n_samples: usize) -> Self {
        Statistic {
            name: name.into(),
            estimate,
            std_error,
            threshold,
            verdict,
            n_samples,
        }
    }

    /// Exact statistic that passes when `estimate ≤ threshold`.
    pub fn at_most(name: impl Into<String>, estimate: f64, threshold: f64) -> Self {
        Self::new(name, estimate, 0.0, threshold, Verdict::from_bool(estimate <= threshold), 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub statistics: Vec<Statistic>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, seed: u64) -> Self {
        ExperimentReport {
            name: name.into(),
            parameters: BTreeMap::new(),
            statistics: Vec::new(),
            seed,
            runtime_ms: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.parameters.insert(key.to_string(), v);
        self
    }

    pub fn push(&mut self, stat: Statistic) {
        self.statistics.push(stat);
    }

    /// `Fail` if any statistic fails, else `Inconclusive` if any is, else `Pass`.
    pub fn verdict(&self) -> Verdict {
        let any = |v| self.statistics.iter().any(|s| s.verdict == v);
        if any(Verdict::Fail) {
            Verdict::Fail
        } else if any(Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict() == Verdict::Pass
    }

    pub fn statistic(&self, name: &str) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.name == name)
    }
}

/// Finite floats as JSON numbers, non-finite ones as `"inf"`, `"-inf"`, `"nan"`.
mod float_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("invalid float {other:?}"))),
            },
        }
    }
}
