use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid topic pattern {pattern:?}: {reason}")]
pub struct PatternError {
    pub pattern: String,
    pub reason: &'static str,
}

/// Subscription filter: an exact topic, `prefix/*`, or `*` for everything.
///
/// `prefix/*` matches any topic that starts with `prefix/` and has at least
/// one more character, so `/sensors/*` covers `/sensors/ahrs` and
/// `/sensors/a/b` but not `/sensors` or `/sensors/`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TopicPattern {
    Exact(String),
    /// Stored with its trailing `/`.
    Prefix(String),
    All,
}

impl TopicPattern {
    pub fn parse(pattern: &str) -> Result<Self, PatternError> {
        let err = |reason| Err(PatternError { pattern: pattern.to_string(), reason });
        if pattern.is_empty() {
            return err("empty");
        }
        if pattern == "*" {
            return Ok(TopicPattern::All);
        }
        match pattern.find('*') {
            None => Ok(TopicPattern::Exact(pattern.to_string())),
            Some(i) if i + 1 == pattern.len() && pattern[..i].ends_with('/') => {
                Ok(TopicPattern::Prefix(pattern[..i].to_string()))
            }
            Some(_) => err("wildcard allowed only as a whole final segment"),
        }
    }

    pub fn matches(&self, topic: &str) -> bool {
        match self {
            TopicPattern::Exact(t) => t == topic,
            TopicPattern::Prefix(p) => topic.len() > p.len() && topic.starts_with(p.as_str()),
            TopicPattern::All => !topic.is_empty(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, TopicPattern::Exact(_))
    }
}

impl fmt::Display for TopicPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopicPattern::Exact(t) => f.write_str(t),
            TopicPattern::Prefix(p) => write!(f, "{p}*"),
            TopicPattern::All => f.write_str("*"),
        }
    }
}
