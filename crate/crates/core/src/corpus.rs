//! Spec records for batch construction: a generating function `B` or a
//! fraction `f1/(f2 x + f3 t + f4)`, a gauge term `f(t)`, a sampling box
//! and extra guards. Files hold either a JSON array or one record per line.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::construct::{build_nonstandard_null, build_null, FractionSpec};
use crate::error::{Error, Result};
use crate::expr::{parse, Domain, Expr, Guard, GuardKind, Interval};
use crate::variational::NullPair;
use crate::Settings;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    Generating {
        #[serde(rename = "B")]
        b: String,
    },
    Fraction {
        f1: String,
        f2: String,
        #[serde(default = "zero")]
        f3: String,
        #[serde(default = "zero")]
        f4: String,
    },
}

fn zero() -> String {
    "0".into()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoxSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xdot: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, [f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuardSpec {
    pub expr: String,
    pub kind: GuardKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(flatten)]
    pub generator: Generator,
    #[serde(default = "zero")]
    pub f: String,
    #[serde(default, rename = "box")]
    pub domain: BoxSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guards: Vec<GuardSpec>,
}

impl Record {
    pub fn generating(name: &str, b: &str, f: &str) -> Self {
        Record {
            name: name.into(),
            generator: Generator::Generating { b: b.into() },
            f: f.into(),
            domain: BoxSpec::default(),
            guards: Vec::new(),
        }
    }

    pub fn fraction(name: &str, fs: [&str; 4], f: &str) -> Self {
        Record {
            name: name.into(),
            generator: Generator::Fraction {
                f1: fs[0].into(),
                f2: fs[1].into(),
                f3: fs[2].into(),
                f4: fs[3].into(),
            },
            f: f.into(),
            domain: BoxSpec::default(),
            guards: Vec::new(),
        }
    }

    pub fn domain(&self) -> Result<Domain> {
        let mut d = Domain::default();
        let iv = |[lo, hi]: [f64; 2]| {
            if lo <= hi && lo.is_finite() && hi.is_finite() {
                Ok(Interval::new(lo, hi))
            } else {
                Err(Error::Input(format!("bad interval [{lo}, {hi}]")))
            }
        };
        if let Some(v) = self.domain.t {
            d.t = iv(v)?;
        }
        if let Some(v) = self.domain.x {
            d.x = iv(v)?;
        }
        if let Some(v) = self.domain.xdot {
            d.xdot = iv(v)?;
        }
        for (n, v) in &self.domain.params {
            d = d.with_param(n, iv(*v)?);
        }
        for g in &self.guards {
            d.push_guard(Guard { expr: parse(&g.expr)?, kind: g.kind });
        }
        Ok(d)
    }

    pub fn build(&self, s: &Settings) -> Result<NullPair> {
        let domain = self.domain()?;
        let f = parse(&self.f)?;
        match &self.generator {
            Generator::Generating { b } => build_null(&parse(b)?, &f, &domain, s),
            Generator::Fraction { f1, f2, f3, f4 } => {
                let spec = FractionSpec::new(parse(f1)?, parse(f2)?, parse(f3)?, parse(f4)?)?;
                build_nonstandard_null(&spec, &f, &domain, s)
            }
        }
    }

    /// The generating function `B`.
    pub fn b(&self) -> Result<Expr> {
        match &self.generator {
            Generator::Generating { b } => parse(b),
            Generator::Fraction { f1, f2, f3, f4 } => {
                Ok(FractionSpec::new(parse(f1)?, parse(f2)?, parse(f3)?, parse(f4)?)?.generating_function())
            }
        }
    }
}

/// Reads a JSON array or newline-delimited records; blank lines and lines
/// starting with `#` are skipped.
pub fn parse_records(text: &str) -> Result<Vec<Record>> {
    let bad = |line: usize, e: serde_json::Error| Error::Input(format!("record {line}: {e}"));
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| bad(1, e));
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| bad(i + 1, e)))
        .collect()
}

/// Generating functions worked through in the accompanying material.
pub fn builtin() -> Vec<Record> {
    let mut oscillator = Record::generating("tied_oscillator", "B0*exp(b0*t/2)", "0");
    oscillator.domain.params.insert("b0".into(), [0.5, 3.0]);
    vec![
        Record::generating("constant", "c1", "c3"),
        Record::generating("linear", "f1(t)*x + f2(t)*t + f3(t)", "f4(t)"),
        Record::generating("quadratic", "f1(t)*x^2 + f2(t)*t + f3(t)", "f4(t)"),
        Record::generating("trig_exp", "f1(t)*sin(x) + f2(t)*exp(x)*t + f3(t)", "f4(t)"),
        Record::generating("quadratic_damping", "B0*exp(a0*x)", "0"),
        oscillator,
        Record::fraction("log_gauge", ["a1", "a2", "0", "a4"], "0"),
        Record::fraction("fraction", ["f1(t)", "f2(t)", "f3(t)", "f4(t)"], "f(t)"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variational::is_null;

    #[test]
    fn builtin_records_are_null() {
        let s = Settings::default();
        for r in builtin() {
            let pair = r.build(&s).unwrap();
            assert!(is_null(&pair.lagrangian(), &s).unwrap().is_null(), "{}", r.name);
        }
    }

    #[test]
    fn record_round_trip() {
        let mut r = Record::fraction("ns", ["a1", "a2", "0", "a4"], "0");
        r.domain.x = Some([1.0, 2.0]);
        r.guards.push(GuardSpec { expr: "x".into(), kind: GuardKind::Positive });
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains(r#""kind":"fraction""#));
        assert_eq!(parse_records(&text).unwrap(), vec![r.clone()]);
        assert_eq!(parse_records(&format!("[{text}]")).unwrap(), vec![r]);
    }

    #[test]
    fn line_records() {
        let text = "# corpus\n{\"kind\":\"generating\",\"B\":\"1\"}\n\n{\"kind\":\"generating\",\"B\":\"x\",\"f\":\"t\"}\n";
        let rs = parse_records(text).unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[1].f, "t");
        assert!(parse_records("{\"kind\":\"other\"}").is_err());
    }

    #[test]
    fn bad_interval() {
        let mut r = Record::generating("g", "1", "0");
        r.domain.t = Some([2.0, 1.0]);
        assert!(r.build(&Settings::default()).is_err());
    }
}
