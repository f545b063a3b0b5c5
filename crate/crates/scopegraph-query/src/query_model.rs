//! The four query parameters: path well-formedness (a label regex), data
//! well-formedness, the label order, and data equivalence.
//!
//! Label orders are given as generator pairs and closed transitively; the
//! closure must be irreflexive (a strict partial order). The end-of-path
//! label `$` may participate in the order — `$ < P` makes a local declaration
//! shadow anything reachable through a parent edge — but never in the regex.
//!
//! The data predicates come in small serializable forms, which is what the
//! CLI and all fixtures use. The resolution engines also accept arbitrary
//! predicate closures through their `*_with_hooks` entry points.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label_regex::{parse_regex, LabelRegEx, PathLabel, RegexParseError};
use crate::scope_graph::{Datum, GraphError, ScopeId};

/// A strict partial order over path labels, stored as its transitive
/// closure.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelOrder {
    generators: BTreeSet<(PathLabel, PathLabel)>,
    closure: BTreeSet<(PathLabel, PathLabel)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrderError {
    #[error("label order is cyclic: `{0}` < `{0}` in the transitive closure")]
    Cycle(String),
}

/// Computes the transitive closure of the generator pairs and checks it is
/// irreflexive.
pub fn validate_order(
    pairs: impl IntoIterator<Item = (PathLabel, PathLabel)>,
) -> Result<LabelOrder, OrderError> {
    let generators: BTreeSet<(PathLabel, PathLabel)> = pairs.into_iter().collect();
    let mut closure = generators.clone();
    loop {
        let mut added = Vec::new();
        for (a, b) in &closure {
            for (c, d) in &closure {
                if b == c && !closure.contains(&(a.clone(), d.clone())) {
                    added.push((a.clone(), d.clone()));
                }
            }
        }
        if added.is_empty() {
            break;
        }
        closure.extend(added);
    }
    for (a, b) in &closure {
        if a == b {
            return Err(OrderError::Cycle(a.to_string()));
        }
    }
    Ok(LabelOrder {
        generators,
        closure,
    })
}

impl LabelOrder {
    pub fn empty() -> LabelOrder {
        LabelOrder::default()
    }

    /// Builds an order from generator pairs; see [`validate_order`].
    pub fn new(
        pairs: impl IntoIterator<Item = (PathLabel, PathLabel)>,
    ) -> Result<LabelOrder, OrderError> {
        validate_order(pairs)
    }

    pub fn generators(&self) -> impl Iterator<Item = &(PathLabel, PathLabel)> {
        self.generators.iter()
    }

    /// Whether `a < b` in the transitive closure.
    pub fn lt(&self, a: &PathLabel, b: &PathLabel) -> bool {
        self.closure.contains(&(a.clone(), b.clone()))
    }

    /// The labels of `ls` with no greater label in `ls`: these are traversed
    /// last, after everything that can shadow them.
    pub fn max_set(&self, ls: &BTreeSet<PathLabel>) -> BTreeSet<PathLabel> {
        ls.iter()
            .filter(|l| !ls.iter().any(|m| self.lt(l, m)))
            .cloned()
            .collect()
    }

    /// The labels of `ls` strictly below `l`: results over these shadow
    /// results over `l`.
    pub fn smaller_set(&self, ls: &BTreeSet<PathLabel>, l: &PathLabel) -> BTreeSet<PathLabel> {
        ls.iter().filter(|m| self.lt(m, l)).cloned().collect()
    }
}

/// Data well-formedness: the unary predicate selecting valid declarations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DataWf {
    /// Matches every datum, including `NoDatum`.
    #[serde(rename = "any")]
    Any,
    /// Matches a datum whose leading name equals the atom: `Atom(a)` itself,
    /// or a tuple whose first element is `Atom(a)`.
    #[serde(rename = "name-eq")]
    NameEq { atom: String },
    /// Matches every datum except `NoDatum`.
    #[serde(rename = "has-datum")]
    HasDatum,
}

impl DataWf {
    pub fn name_eq(atom: impl Into<String>) -> DataWf {
        DataWf::NameEq { atom: atom.into() }
    }

    pub fn matches(&self, d: &Datum) -> bool {
        match self {
            DataWf::Any => true,
            DataWf::NameEq { atom } => d.leading_name() == Some(atom.as_str()),
            DataWf::HasDatum => !d.is_no_datum(),
        }
    }
}

/// Data equivalence: the grouping predicate shadowing is restricted to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DataEquiv {
    /// Every pair of datums is equivalent; any path can shadow any other.
    #[serde(rename = "true")]
    AlwaysTrue,
    /// Two datums are equivalent when both carry a leading name and the
    /// names are equal. Declarations of different names never shadow each
    /// other.
    #[serde(rename = "same-name")]
    SameName,
}

impl DataEquiv {
    pub fn relates(&self, d1: &Datum, d2: &Datum) -> bool {
        match self {
            DataEquiv::AlwaysTrue => true,
            DataEquiv::SameName => match (d1.leading_name(), d2.leading_name()) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            },
        }
    }

    /// Whether the equivalence is trivially satisfied; the specializer emits
    /// `else` instead of `shadow` in that case.
    pub fn is_trivially_true(&self) -> bool {
        matches!(self, DataEquiv::AlwaysTrue)
    }
}

/// A resolution query: start scope plus the four parameters. The regex is
/// kept canonical and the order validated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub start: ScopeId,
    pub regex: LabelRegEx,
    pub wf: DataWf,
    pub order: LabelOrder,
    pub equiv: DataEquiv,
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("invalid regex: {0}")]
    Regex(#[from] RegexParseError),
    #[error("invalid label order: {0}")]
    Order(#[from] OrderError),
    #[error("invalid scope id: {0}")]
    Scope(#[from] GraphError),
    #[error("invalid path label: {0}")]
    Label(#[from] crate::label_regex::LabelError),
    #[error("malformed query JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Serialize, Deserialize)]
struct QueryFile {
    start: String,
    regex: String,
    #[serde(default = "default_wf")]
    wf: DataWf,
    #[serde(default)]
    order: Vec<(String, String)>,
    #[serde(default = "default_equiv")]
    equiv: DataEquiv,
}

fn default_wf() -> DataWf {
    DataWf::Any
}

fn default_equiv() -> DataEquiv {
    DataEquiv::AlwaysTrue
}

impl Query {
    pub fn new(
        start: ScopeId,
        regex: LabelRegEx,
        wf: DataWf,
        order: LabelOrder,
        equiv: DataEquiv,
    ) -> Query {
        Query {
            start,
            regex: regex.canonicalize(),
            wf,
            order,
            equiv,
        }
    }

    /// Parses the JSON form:
    ///
    /// ```json
    /// {"start": "sE", "regex": "P* I? VAR",
    ///  "wf": {"kind": "name-eq", "atom": "x"},
    ///  "order": [["VAR", "P"], ["VAR", "I"]],
    ///  "equiv": {"kind": "true"}}
    /// ```
    ///
    /// `wf` defaults to `any`, `order` to the empty order, and `equiv` to
    /// `true`. Order pairs may use `$`.
    pub fn from_json(json: &str) -> Result<Query, QueryError> {
        let file: QueryFile = serde_json::from_str(json)?;
        let mut pairs = Vec::new();
        for (a, b) in file.order {
            pairs.push((PathLabel::parse(&a)?, PathLabel::parse(&b)?));
        }
        Ok(Query::new(
            ScopeId::new(file.start)?,
            parse_regex(&file.regex)?,
            file.wf,
            validate_order(pairs)?,
            file.equiv,
        ))
    }

    pub fn to_json(&self) -> String {
        let file = QueryFile {
            start: self.start.as_str().to_string(),
            regex: self.regex.to_string(),
            wf: self.wf.clone(),
            order: self
                .order
                .generators()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            equiv: self.equiv.clone(),
        };
        serde_json::to_string_pretty(&file).expect("query serialization cannot fail")
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "query(start={}, regex={})", self.start, self.regex)
    }
}
