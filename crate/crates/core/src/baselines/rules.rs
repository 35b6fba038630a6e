//! Structured-pattern matching over extracted text.

use std::collections::HashSet;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// One named pattern. `validator` names an extra check run on each match.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRule {
    pub name: String,
    pub pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validator: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Validator {
    /// Mod-10 checksum over the digits of the match.
    Luhn,
    /// 7 to 15 digits in the match.
    PhoneDigits,
}

impl Validator {
    pub fn from_name(name: &str) -> Option<Validator> {
        match name {
            "luhn" => Some(Validator::Luhn),
            "phone-digits" => Some(Validator::PhoneDigits),
            _ => None,
        }
    }

    pub fn accepts(self, span: &str) -> bool {
        let digits: Vec<u8> = span.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();
        match self {
            Validator::Luhn => luhn_valid(&digits),
            Validator::PhoneDigits => (7..=15).contains(&digits.len()),
        }
    }
}

/// Luhn check over digit values, rightmost digit first.
pub fn luhn_valid(digits: &[u8]) -> bool {
    if digits.len() < 2 {
        return false;
    }
    let sum: u32 = digits
        .iter()
        .rev()
        .enumerate()
        .map(|(i, &d)| {
            let d = u32::from(d);
            if i % 2 == 1 {
                let x = d * 2;
                if x > 9 { x - 9 } else { x }
            } else {
                d
            }
        })
        .sum();
    sum % 10 == 0
}

#[derive(Debug, thiserror::Error)]
pub enum RuleError {
    #[error("rule {name}: {source}")]
    Pattern {
        name: String,
        #[source]
        source: regex::Error,
    },
    #[error("rule {name}: unknown validator {validator:?}")]
    Validator { name: String, validator: String },
    #[error("duplicate rule name {0}")]
    DuplicateName(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("rule file: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Clone, Debug)]
struct CompiledRule {
    spec: PatternRule,
    regex: Regex,
    validator: Option<Validator>,
}

/// A compiled, name-unique set of rules.
#[derive(Clone, Debug)]
pub struct RuleSet {
    rules: Vec<CompiledRule>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleMatch {
    pub rule: String,
    pub span: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleVerdict {
    pub risk: bool,
    pub matches: Vec<RuleMatch>,
}

impl RuleSet {
    pub fn new(rules: Vec<PatternRule>) -> Result<RuleSet, RuleError> {
        let mut names = HashSet::new();
        let mut compiled = Vec::with_capacity(rules.len());
        for spec in rules {
            if !names.insert(spec.name.clone()) {
                return Err(RuleError::DuplicateName(spec.name));
            }
            let regex = Regex::new(&spec.pattern).map_err(|source| RuleError::Pattern { name: spec.name.clone(), source })?;
            let validator = match &spec.validator {
                None => None,
                Some(v) => Some(Validator::from_name(v).ok_or_else(|| RuleError::Validator {
                    name: spec.name.clone(),
                    validator: v.clone(),
                })?),
            };
            compiled.push(CompiledRule { spec, regex, validator });
        }
        Ok(RuleSet { rules: compiled })
    }

    /// Credit-card numbers, ID numbers and phone numbers, in that priority.
    pub fn standard() -> RuleSet {
        RuleSet::new(standard_rules()).expect("built-in rules compile")
    }

    pub fn load(path: &Path) -> Result<RuleSet, RuleError> {
        let text = std::fs::read_to_string(path).map_err(|e| RuleError::Io(path.display().to_string(), e))?;
        RuleSet::new(serde_json::from_str(&text)?)
    }

    pub fn specs(&self) -> Vec<PatternRule> {
        self.rules.iter().map(|r| r.spec.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

pub fn standard_rules() -> Vec<PatternRule> {
    vec![
        PatternRule {
            name: "credit-card".into(),
            pattern: r"\b\d(?:[ -]?\d){12,18}\b".into(),
            validator: Some("luhn".into()),
        },
        PatternRule {
            name: "id-number".into(),
            pattern: r"(?i)\b(?:id|ssn|passport)(?:\s*(?:no\.?|number|#))?\s*[:#]\s*[a-z0-9][a-z0-9-]{4,}\b|\b\d{3}-\d{2}-\d{4}\b".into(),
            validator: None,
        },
        PatternRule {
            name: "phone-number".into(),
            pattern: r"(?:\+\d{1,3}[ .-]?)?(?:\(\d{2,4}\)[ .-]?)?\b\d{2,4}(?:[ .-]\d{2,4}){1,4}\b".into(),
            validator: Some("phone-digits".into()),
        },
    ]
}

/// Flags `text` when any rule matches and its validator (if any) accepts.
/// Rules are tried in set order; an accepted span is not reported again by a later rule.
pub fn rule_based_classify(text: &str, rules: &RuleSet) -> RuleVerdict {
    let mut claimed: Vec<std::ops::Range<usize>> = Vec::new();
    let mut matches = Vec::new();
    for rule in &rules.rules {
        for m in rule.regex.find_iter(text) {
            let overlaps = claimed.iter().any(|r| m.start() < r.end && r.start < m.end());
            if !overlaps && rule.validator.is_none_or(|v| v.accepts(m.as_str())) {
                claimed.push(m.range());
                matches.push(RuleMatch { rule: rule.spec.name.clone(), span: m.as_str().to_string() });
            }
        }
    }
    RuleVerdict { risk: !matches.is_empty(), matches }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule_names(text: &str) -> Vec<String> {
        rule_based_classify(text, &RuleSet::standard()).matches.into_iter().map(|m| m.rule).collect()
    }

    #[test]
    fn examples() {
        assert_eq!(rule_based_classify("", &RuleSet::standard()), RuleVerdict::default());
        assert_eq!(rule_names("4111 1111 1111 1111"), vec!["credit-card"]);
        assert!(rule_names("meeting at noon").is_empty());
    }

    #[test]
    fn luhn_gate_and_other_categories() {
        assert!(rule_names("4111 1111 1111 1112").is_empty());
        assert_eq!(rule_names("ID: 123-45-6789"), vec!["id-number"]);
        assert_eq!(rule_names("call 555-123-4567 today"), vec!["phone-number"]);
        assert_eq!(rule_names("Passport No: X1234567"), vec!["id-number"]);
        assert!(rule_names("my password is sunflower").is_empty());
        assert!(rule_names("page 12 of 300").is_empty());
    }

    #[test]
    fn bad_rule_sets_rejected() {
        let r = |n: &str, p: &str, v: Option<&str>| PatternRule { name: n.into(), pattern: p.into(), validator: v.map(Into::into) };
        assert!(matches!(RuleSet::new(vec![r("a", "(", None)]), Err(RuleError::Pattern { .. })));
        assert!(matches!(RuleSet::new(vec![r("a", "x", Some("crc"))]), Err(RuleError::Validator { .. })));
        assert!(matches!(RuleSet::new(vec![r("a", "x", None), r("a", "y", None)]), Err(RuleError::DuplicateName(_))));
    }

    #[test]
    fn rule_file_round_trip() {
        let json = serde_json::to_string(&standard_rules()).unwrap();
        let back: Vec<PatternRule> = serde_json::from_str(&json).unwrap();
        assert_eq!(RuleSet::new(back).unwrap().specs(), standard_rules());
    }
}
