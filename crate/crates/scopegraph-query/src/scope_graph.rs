//! The scope-graph data model: scopes, labeled edges, scope data, resolution
//! paths, environments, and the JSON serialization.
//!
//! Graphs are immutable after construction and validated on the way in, so
//! every edge endpoint and every data key is a declared scope. The datum map
//! is total: scopes without declared data carry [`Datum::NoDatum`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label_regex::{Label, LabelError};

/// Identifier of a scope, unique within one graph.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ScopeId(String);

impl ScopeId {
    pub fn new(name: impl Into<String>) -> Result<Self, GraphError> {
        let name = name.into();
        if name.is_empty() {
            return Err(GraphError::EmptyScopeId);
        }
        Ok(ScopeId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ScopeId {
    type Error = GraphError;
    fn try_from(s: String) -> Result<Self, GraphError> {
        ScopeId::new(s)
    }
}

impl From<ScopeId> for String {
    fn from(s: ScopeId) -> String {
        s.0
    }
}

impl fmt::Display for ScopeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Data attached to a scope, typically a declaration's name and type.
///
/// In JSON, a string is an `Atom`, an array is a `Tuple` of recursively
/// parsed datums, and `null` (or simply omitting the scope from the data
/// map) is `NoDatum`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Datum {
    #[default]
    NoDatum,
    Atom(String),
    Tuple(Vec<Datum>),
}

impl Datum {
    pub fn atom(s: impl Into<String>) -> Datum {
        Datum::Atom(s.into())
    }

    pub fn is_no_datum(&self) -> bool {
        matches!(self, Datum::NoDatum)
    }

    /// The leading name of a declaration datum: the atom itself, or the
    /// first element of a tuple when that element is an atom.
    pub fn leading_name(&self) -> Option<&str> {
        match self {
            Datum::Atom(a) => Some(a),
            Datum::Tuple(items) => match items.first() {
                Some(Datum::Atom(a)) => Some(a),
                _ => None,
            },
            Datum::NoDatum => None,
        }
    }

    fn validate(&self) -> Result<(), GraphError> {
        match self {
            Datum::NoDatum => Ok(()),
            Datum::Atom(a) if a.is_empty() => Err(GraphError::EmptyAtom),
            Datum::Atom(_) => Ok(()),
            Datum::Tuple(items) => items.iter().try_for_each(Datum::validate),
        }
    }
}

impl Serialize for Datum {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Datum::NoDatum => ser.serialize_none(),
            Datum::Atom(a) => ser.serialize_str(a),
            Datum::Tuple(items) => items.serialize(ser),
        }
    }
}

impl<'de> Deserialize<'de> for Datum {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let value = serde_json::Value::deserialize(de)?;
        datum_from_value(&value).map_err(D::Error::custom)
    }
}

fn datum_from_value(v: &serde_json::Value) -> Result<Datum, String> {
    match v {
        serde_json::Value::Null => Ok(Datum::NoDatum),
        serde_json::Value::String(s) => Ok(Datum::Atom(s.clone())),
        serde_json::Value::Array(items) => items
            .iter()
            .map(datum_from_value)
            .collect::<Result<Vec<_>, _>>()
            .map(Datum::Tuple),
        other => Err(format!("datum must be a string or an array, got {other}")),
    }
}

/// A labeled directed edge.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: ScopeId,
    #[serde(rename = "lbl")]
    pub label: Label,
    pub dst: ScopeId,
}

impl Edge {
    pub fn new(src: ScopeId, label: Label, dst: ScopeId) -> Edge {
        Edge { src, label, dst }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("scope id must be non-empty")]
    EmptyScopeId,
    #[error("datum atoms must be non-empty")]
    EmptyAtom,
    #[error("duplicate scope id `{0}`")]
    DuplicateScope(String),
    #[error("edge endpoint `{0}` is not a declared scope")]
    UnknownEdgeEndpoint(String),
    #[error("datum attached to undeclared scope `{0}`")]
    UnknownDatumScope(String),
    #[error("unknown scope `{0}`")]
    UnknownScope(String),
    #[error("scope `{0}` is already on the path")]
    CyclicStep(String),
    #[error("invalid label: {0}")]
    Label(#[from] LabelError),
    #[error("malformed graph JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// An immutable scope graph: a scope set, a labeled edge set, and a total
/// datum map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScopeGraph {
    scopes: BTreeSet<ScopeId>,
    edges: BTreeSet<Edge>,
    data: BTreeMap<ScopeId, Datum>,
    // (src, label) -> sorted targets, for deterministic edge iteration.
    out_index: BTreeMap<ScopeId, BTreeMap<Label, BTreeSet<ScopeId>>>,
}

static NO_DATUM: Datum = Datum::NoDatum;

impl ScopeGraph {
    /// Builds and validates a graph. Rejects duplicate scope ids, edges with
    /// undeclared endpoints, data on undeclared scopes, and empty atoms.
    pub fn new(
        scopes: Vec<ScopeId>,
        edges: Vec<Edge>,
        data: BTreeMap<ScopeId, Datum>,
    ) -> Result<ScopeGraph, GraphError> {
        let mut scope_set = BTreeSet::new();
        for s in scopes {
            if !scope_set.insert(s.clone()) {
                return Err(GraphError::DuplicateScope(s.0));
            }
        }
        for e in &edges {
            for endpoint in [&e.src, &e.dst] {
                if !scope_set.contains(endpoint) {
                    return Err(GraphError::UnknownEdgeEndpoint(endpoint.0.clone()));
                }
            }
        }
        for (s, d) in &data {
            if !scope_set.contains(s) {
                return Err(GraphError::UnknownDatumScope(s.0.clone()));
            }
            d.validate()?;
        }
        let mut out_index: BTreeMap<ScopeId, BTreeMap<Label, BTreeSet<ScopeId>>> = BTreeMap::new();
        let edge_set: BTreeSet<Edge> = edges.into_iter().collect();
        for e in &edge_set {
            out_index
                .entry(e.src.clone())
                .or_default()
                .entry(e.label.clone())
                .or_default()
                .insert(e.dst.clone());
        }
        let data = data.into_iter().filter(|(_, d)| !d.is_no_datum()).collect();
        Ok(ScopeGraph {
            scopes: scope_set,
            edges: edge_set,
            data,
            out_index,
        })
    }

    pub fn scopes(&self) -> impl Iterator<Item = &ScopeId> {
        self.scopes.iter()
    }

    pub fn scope_count(&self) -> usize {
        self.scopes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn contains_scope(&self, s: &ScopeId) -> bool {
        self.scopes.contains(s)
    }

    fn check_scope(&self, s: &ScopeId) -> Result<(), GraphError> {
        if self.contains_scope(s) {
            Ok(())
        } else {
            Err(GraphError::UnknownScope(s.0.clone()))
        }
    }

    /// Target scopes of the `l`-labeled edges out of `s`, in name order.
    pub fn get_edges(
        &self,
        s: &ScopeId,
        l: &Label,
    ) -> Result<impl Iterator<Item = &ScopeId> + '_, GraphError> {
        self.check_scope(s)?;
        Ok(self
            .out_index
            .get(s)
            .and_then(|by_label| by_label.get(l))
            .into_iter()
            .flatten())
    }

    /// All outgoing edges of `s` as (label, target) pairs, sorted by label
    /// then target.
    pub fn out_edges(
        &self,
        s: &ScopeId,
    ) -> Result<impl Iterator<Item = (&Label, &ScopeId)> + '_, GraphError> {
        self.check_scope(s)?;
        Ok(self
            .out_index
            .get(s)
            .into_iter()
            .flatten()
            .flat_map(|(l, targets)| targets.iter().map(move |t| (l, t))))
    }

    /// The datum of `s`, defaulting to [`Datum::NoDatum`].
    pub fn datum_of(&self, s: &ScopeId) -> Result<&Datum, GraphError> {
        self.check_scope(s)?;
        Ok(self.data.get(s).unwrap_or(&NO_DATUM))
    }
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    scopes: Vec<ScopeId>,
    #[serde(default)]
    edges: Vec<Edge>,
    #[serde(default)]
    data: BTreeMap<ScopeId, Datum>,
}

/// Loads a graph from its JSON form:
///
/// ```json
/// {"scopes": ["s", "sA"],
///  "edges": [{"src": "sA", "lbl": "P", "dst": "s"}],
///  "data": {"sA": "A", "sx": ["x", "Nat"]}}
/// ```
pub fn load_graph(json: &str) -> Result<ScopeGraph, GraphError> {
    let file: GraphFile = serde_json::from_str(json)?;
    ScopeGraph::new(file.scopes, file.edges, file.data)
}

/// Serializes a graph back to the JSON form; `load_graph` of the result is
/// structurally identical to the input graph.
pub fn save_graph(g: &ScopeGraph) -> String {
    let file = GraphFile {
        scopes: g.scopes.iter().cloned().collect(),
        edges: g.edges.iter().cloned().collect(),
        data: g.data.clone(),
    };
    serde_json::to_string_pretty(&file).expect("graph serialization cannot fail")
}

/// A resolution path: a start scope followed by (label, scope) steps.
/// Paths are acyclic; no scope occurs twice.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResolutionPath {
    start: ScopeId,
    steps: Vec<(Label, ScopeId)>,
}

impl ResolutionPath {
    pub fn new(start: ScopeId) -> ResolutionPath {
        ResolutionPath {
            start,
            steps: Vec::new(),
        }
    }

    pub fn source(&self) -> &ScopeId {
        &self.start
    }

    /// The target of a zero-step path is its start scope.
    pub fn target(&self) -> &ScopeId {
        self.steps.last().map(|(_, s)| s).unwrap_or(&self.start)
    }

    pub fn steps(&self) -> &[(Label, ScopeId)] {
        &self.steps
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn scopes(&self) -> impl Iterator<Item = &ScopeId> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|(_, s)| s))
    }

    pub fn contains_scope(&self, s: &ScopeId) -> bool {
        self.scopes().any(|t| t == s)
    }

    pub fn word(&self) -> Vec<Label> {
        self.steps.iter().map(|(l, _)| l.clone()).collect()
    }

    /// Extends the path by one step. Fails when `s` already occurs on the
    /// path: resolution never revisits a scope.
    pub fn append(&self, l: Label, s: ScopeId) -> Result<ResolutionPath, GraphError> {
        if self.contains_scope(&s) {
            return Err(GraphError::CyclicStep(s.0));
        }
        let mut steps = self.steps.clone();
        steps.push((l, s));
        Ok(ResolutionPath {
            start: self.start.clone(),
            steps,
        })
    }
}

impl fmt::Display for ResolutionPath {
    /// Renders as `sE -I-> sC -VAR-> s2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for (l, s) in &self.steps {
            write!(f, " -{l}-> {s}")?;
        }
        Ok(())
    }
}

/// An environment: the set of resolution paths a query answer consists of.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    paths: BTreeSet<ResolutionPath>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn singleton(p: ResolutionPath) -> Env {
        Env {
            paths: [p].into_iter().collect(),
        }
    }

    pub fn insert(&mut self, p: ResolutionPath) {
        self.paths.insert(p);
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn contains(&self, p: &ResolutionPath) -> bool {
        self.paths.contains(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ResolutionPath> {
        self.paths.iter()
    }

    /// Target scopes of all paths, mostly a test convenience.
    pub fn targets(&self) -> BTreeSet<ScopeId> {
        self.paths.iter().map(|p| p.target().clone()).collect()
    }
}

impl Extend<ResolutionPath> for Env {
    fn extend<T: IntoIterator<Item = ResolutionPath>>(&mut self, iter: T) {
        self.paths.extend(iter);
    }
}

impl FromIterator<ResolutionPath> for Env {
    fn from_iter<T: IntoIterator<Item = ResolutionPath>>(iter: T) -> Env {
        Env {
            paths: iter.into_iter().collect(),
        }
    }
}

impl IntoIterator for Env {
    type Item = ResolutionPath;
    type IntoIter = std::collections::btree_set::IntoIter<ResolutionPath>;
    fn into_iter(self) -> Self::IntoIter {
        self.paths.into_iter()
    }
}

impl<'a> IntoIterator for &'a Env {
    type Item = &'a ResolutionPath;
    type IntoIter = std::collections::btree_set::Iter<'a, ResolutionPath>;
    fn into_iter(self) -> Self::IntoIter {
        self.paths.iter()
    }
}
