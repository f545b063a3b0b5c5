//! Shared test fixtures: the two worked-example graphs and their queries.

use std::collections::BTreeMap;

use crate::label_regex::{parse_regex, Label, PathLabel};
use crate::query_model::{validate_order, DataEquiv, DataWf, Query};
use crate::scope_graph::{Datum, Edge, ScopeGraph, ScopeId};

pub fn sid(s: &str) -> ScopeId {
    ScopeId::new(s).unwrap()
}

pub fn lbl(s: &str) -> Label {
    Label::new(s).unwrap()
}

pub fn pl(s: &str) -> PathLabel {
    PathLabel::parse(s).unwrap()
}

fn graph(scopes: &[&str], edges: &[(&str, &str, &str)], data: &[(&str, Datum)]) -> ScopeGraph {
    let scopes = scopes.iter().map(|s| sid(s)).collect();
    let edges = edges
        .iter()
        .map(|(src, l, dst)| Edge::new(sid(src), lbl(l), sid(dst)))
        .collect();
    let data: BTreeMap<ScopeId, Datum> = data.iter().map(|(s, d)| (sid(s), d.clone())).collect();
    ScopeGraph::new(scopes, edges, data).unwrap()
}

/// The module-language example: ten scopes, seventeen edges, `x` declared in
/// three modules, two of which are visible from `sE`.
pub fn lm_graph() -> ScopeGraph {
    graph(
        &["s", "sA", "sB", "sC", "sD", "sE", "s1", "s2", "s3", "sy"],
        &[
            ("s", "MOD", "sA"),
            ("sA", "MOD", "sB"),
            ("sB", "MOD", "sC"),
            ("s", "MOD", "sD"),
            ("sD", "MOD", "sE"),
            ("sA", "P", "s"),
            ("sB", "P", "sA"),
            ("sC", "P", "sB"),
            ("sD", "P", "s"),
            ("sE", "P", "sD"),
            ("sB", "I", "sA"),
            ("sE", "I", "sB"),
            ("sE", "I", "sC"),
            ("sA", "VAR", "s1"),
            ("sC", "VAR", "s2"),
            ("sD", "VAR", "s3"),
            ("sE", "VAR", "sy"),
        ],
        &[
            ("sA", Datum::atom("A")),
            ("sB", Datum::atom("B")),
            ("sC", Datum::atom("C")),
            ("sD", Datum::atom("D")),
            ("sE", Datum::atom("E")),
            ("s1", Datum::atom("x")),
            ("s2", Datum::atom("x")),
            ("s3", Datum::atom("x")),
            ("sy", Datum::atom("y")),
        ],
    )
}

/// Resolving `x` from `sE` over `P* I? VAR` with `VAR` below `P` and `I`.
pub fn lm_query() -> Query {
    Query::new(
        sid("sE"),
        parse_regex("P* I? VAR").unwrap(),
        DataWf::name_eq("x"),
        validate_order([(pl("VAR"), pl("P")), (pl("VAR"), pl("I"))]).unwrap(),
        DataEquiv::AlwaysTrue,
    )
}

fn typed(name: &str, ty: &str) -> Datum {
    Datum::Tuple(vec![Datum::atom(name), Datum::atom(ty)])
}

/// The PCF example: two nested lets and a lambda body, with typed datums.
pub fn pcf_graph() -> ScopeGraph {
    graph(
        &["sl", "slp", "slam", "sx", "sf", "sy"],
        &[
            ("slp", "P", "sl"),
            ("slam", "P", "sl"),
            ("sl", "VAR", "sx"),
            ("slp", "VAR", "sf"),
            ("slam", "VAR", "sy"),
        ],
        &[
            ("sx", typed("x", "Nat")),
            ("sf", typed("f", "Nat->Nat")),
            ("sy", typed("y", "Nat")),
        ],
    )
}

/// Resolving `x` from the lambda body over `P* VAR` with `VAR < P`.
pub fn pcf_query() -> Query {
    Query::new(
        sid("slam"),
        parse_regex("P* VAR").unwrap(),
        DataWf::name_eq("x"),
        validate_order([(pl("VAR"), pl("P"))]).unwrap(),
        DataEquiv::AlwaysTrue,
    )
}
