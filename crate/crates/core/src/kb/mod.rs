//! In-memory triple store, alias-based linking, grounding of query graphs
//! into triple patterns, and pattern execution.

mod alias;
mod execute;
mod ground;
mod store;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::query::LiteralType;

pub use alias::{link, AliasCandidate, AliasDictionary, AliasError, LinkKind, NodeOption};
pub use execute::execute;
pub use ground::{ground, GroundLimits, GroundedQuery, PatternTerm, Provenance, TriplePattern};
pub use store::{StoreError, TripleStore};

/// Predicate relating an instance to its class.
pub const TYPE_PREDICATE: &str = "type.object.type";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Id(String),
    Literal { value: String, ty: LiteralType },
}

impl Term {
    pub fn id(s: impl Into<String>) -> Self {
        Term::Id(s.into())
    }

    pub fn literal(value: impl Into<String>, ty: LiteralType) -> Self {
        Term::Literal { value: value.into(), ty }
    }

    pub fn as_id(&self) -> Option<&str> {
        match self {
            Term::Id(s) => Some(s),
            Term::Literal { .. } => None,
        }
    }

    /// The id, or the bare literal value; the form used for answer sets.
    pub fn answer_string(&self) -> String {
        match self {
            Term::Id(s) => s.clone(),
            Term::Literal { value, .. } => value.clone(),
        }
    }

    /// Parses `"value"^^type`, a bare quoted string, or a kb id.
    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('"') {
            let close = rest.rfind('"').ok_or_else(|| format!("unterminated literal {s}"))?;
            let value = &rest[..close];
            let ty = match &rest[close + 1..] {
                "" | "^^string" => LiteralType::String,
                "^^number" => LiteralType::Number,
                "^^date" => LiteralType::Date,
                other => return Err(format!("unknown literal suffix `{other}`")),
            };
            return Ok(Term::literal(value, ty));
        }
        if s.is_empty() || s.contains(char::is_whitespace) {
            return Err(format!("bad kb id `{s}`"));
        }
        Ok(Term::id(s))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Id(s) => f.write_str(s),
            Term::Literal { value, ty } => write!(f, "\"{value}\"^^{}", ty.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub s: String,
    pub p: String,
    pub o: Term,
}

impl Triple {
    pub fn new(s: impl Into<String>, p: impl Into<String>, o: Term) -> Self {
        Triple { s: s.into(), p: p.into(), o }
    }
}
