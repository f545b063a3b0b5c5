//! Build a scope graph for a small module language and resolve a reference.
//!
//! Two module trees declare `x`; from module E's body one declaration is
//! visible through an import and one through the lexical parent, and the
//! label order makes the local `y` declaration irrelevant. Run with:
//!
//! ```bash
//! cargo run --example resolve_query
//! ```

use std::collections::BTreeMap;

use scopegraph_query::label_regex::parse_regex;
use scopegraph_query::query_model::{validate_order, DataEquiv, DataWf, Query};
use scopegraph_query::scope_graph::{Datum, Edge, ScopeGraph, ScopeId};
use scopegraph_query::{resolve, Label, PathLabel};

fn main() {
    let scope = |s: &str| ScopeId::new(s).unwrap();
    let label = |l: &str| Label::new(l).unwrap();

    // Global scope `s`; modules A/B/C on one side, D/E on the other. Every
    // module body has a parent edge; E imports B and C.
    let scopes: Vec<ScopeId> = ["s", "sA", "sB", "sC", "sD", "sE", "s1", "s2", "s3", "sy"]
        .iter()
        .map(|s| scope(s))
        .collect();
    let edges = [
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
    ]
    .map(|(src, l, dst)| Edge::new(scope(src), label(l), scope(dst)));
    let data: BTreeMap<ScopeId, Datum> = [
        ("sA", "A"),
        ("sB", "B"),
        ("sC", "C"),
        ("sD", "D"),
        ("sE", "E"),
        ("s1", "x"),
        ("s2", "x"),
        ("s3", "x"),
        ("sy", "y"),
    ]
    .map(|(s, d)| (scope(s), Datum::atom(d)))
    .into();
    let graph = ScopeGraph::new(scopes, edges.to_vec(), data).unwrap();

    // Resolve `x` from sE: climb parents, optionally cross one import, end
    // at a variable declaration. Declarations found over VAR shadow the
    // rest; imports and parents do not shadow each other.
    let query = Query::new(
        scope("sE"),
        parse_regex("P* I? VAR").unwrap(),
        DataWf::name_eq("x"),
        validate_order([
            (PathLabel::Edge(label("VAR")), PathLabel::Edge(label("P"))),
            (PathLabel::Edge(label("VAR")), PathLabel::Edge(label("I"))),
        ])
        .unwrap(),
        DataEquiv::AlwaysTrue,
    );

    let (env, stats) = resolve(&graph, &query).unwrap();
    println!("query: {query}");
    println!("resolved {} path(s):", env.len());
    for path in &env {
        println!("  {path}");
    }
    println!(
        "work: {} scopes visited, {} edges traversed, {} derivatives, {} order queries, {} shadows",
        stats.scopes_visited,
        stats.edges_traversed,
        stats.derivative_count,
        stats.order_query_count,
        stats.shadow_calls
    );
}
