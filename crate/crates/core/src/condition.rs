//! Data-driven predicates over named numeric facts.
//!
//! A condition is a small comparison tree, authored in JSON:
//!
//! ```json
//! {"all": [
//!   {"compare": {"field": "distance", "op": "lt", "value": 10}},
//!   {"fact": "opponent_attacking"}
//! ]}
//! ```

use serde::{Deserialize, Serialize};

use crate::engine::Observation;

/// Anything that can answer "what is the value of fact `name`".
pub trait Facts {
    fn fact(&self, name: &str) -> Option<f64>;
}

impl Facts for Observation {
    fn fact(&self, name: &str) -> Option<f64> {
        Observation::fact(self, name)
    }
}

impl Facts for std::collections::HashMap<String, f64> {
    fn fact(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

/// A single named event: the fact with that name is 1, every other fact is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event<'a>(pub &'a str);

impl Facts for Event<'_> {
    fn fact(&self, name: &str) -> Option<f64> {
        Some(if name == self.0 { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub field: String,
    pub op: CmpOp,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    #[default]
    Always,
    Never,
    /// True iff the named fact is non-zero.
    Fact(String),
    Compare(Comparison),
    All(Vec<Condition>),
    Any(Vec<Condition>),
    Not(Box<Condition>),
}

impl Condition {
    pub fn compare(field: &str, op: CmpOp, value: f64) -> Self {
        Condition::Compare(Comparison {
            field: field.to_string(),
            op,
            value,
        })
    }

    pub fn fact(name: &str) -> Self {
        Condition::Fact(name.to_string())
    }

    /// Evaluates against `facts`. Unknown facts read as 0, so evaluation is total.
    pub fn eval<F: Facts + ?Sized>(&self, facts: &F) -> bool {
        match self {
            Condition::Always => true,
            Condition::Never => false,
            Condition::Fact(name) => facts.fact(name).unwrap_or(0.0) != 0.0,
            Condition::Compare(c) => c.op.apply(facts.fact(&c.field).unwrap_or(0.0), c.value),
            Condition::All(cs) => cs.iter().all(|c| c.eval(facts)),
            Condition::Any(cs) => cs.iter().any(|c| c.eval(facts)),
            Condition::Not(c) => !c.eval(facts),
        }
    }

    /// Every fact name the condition mentions.
    pub fn fields(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_fields(&mut out);
        out
    }

    fn collect_fields<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Condition::Always | Condition::Never => {}
            Condition::Fact(n) => out.push(n),
            Condition::Compare(c) => out.push(&c.field),
            Condition::All(cs) | Condition::Any(cs) => cs.iter().for_each(|c| c.collect_fields(out)),
            Condition::Not(c) => c.collect_fields(out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let c: Condition = serde_json::from_str(
            r#"{"all": [{"compare": {"field": "distance", "op": "lt", "value": 10}}, {"fact": "opponent_attacking"}]}"#,
        )
        .unwrap();
        let mut obs = Observation {
            distance: 5,
            opponent_attacking: true,
            ..Default::default()
        };
        assert!(c.eval(&obs));
        obs.distance = 10;
        assert!(!c.eval(&obs));
        let always: Condition = serde_json::from_str(r#""always""#).unwrap();
        assert_eq!(always, Condition::Always);
        assert_eq!(c.fields(), vec!["distance", "opponent_attacking"]);
    }

    #[test]
    fn unknown_fact_reads_zero() {
        let obs = Observation::default();
        assert!(Condition::compare("nonsense", CmpOp::Eq, 0.0).eval(&obs));
        assert!(!Condition::fact("nonsense").eval(&obs));
    }

    #[test]
    fn events() {
        assert!(Condition::fact("coin").eval(&Event("coin")));
        assert!(!Condition::fact("coin").eval(&Event("push")));
        assert!(Condition::Not(Box::new(Condition::fact("coin"))).eval(&Event("push")));
    }

    #[test]
    fn ops() {
        use CmpOp::*;
        let table = [(Lt, [true, false, false]), (Le, [true, true, false]), (Gt, [false, false, true]),
            (Ge, [false, true, true]), (Eq, [false, true, false]), (Ne, [true, false, true])];
        for (op, want) in table {
            for (a, w) in [1.0, 2.0, 3.0].into_iter().zip(want) {
                assert_eq!(op.apply(a, 2.0), w, "{op:?} {a}");
            }
        }
    }
}
