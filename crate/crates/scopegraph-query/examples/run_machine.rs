//! Interpret a resolution machine written by hand in its textual form.
//!
//! The machine encodes "prefer the local declaration, otherwise look up the
//! lexical chain"; with `else`, the lookup is skipped entirely once a local
//! declaration exists. Run with:
//!
//! ```bash
//! cargo run --example run_machine
//! ```

use std::collections::BTreeMap;

use scopegraph_query::ir::parse_machine;
use scopegraph_query::query_model::{DataEquiv, DataWf};
use scopegraph_query::scope_graph::{Datum, Edge, ScopeGraph, ScopeId};
use scopegraph_query::{run_machine, Label};

const MACHINE: &str = "\
state machine
  n0:
    e0 := subenv VAR n1
    e1 := else e0 (subenv P n0)
  n1:
    e0 := resolve
";

fn main() {
    let scope = |s: &str| ScopeId::new(s).unwrap();
    let label = |l: &str| Label::new(l).unwrap();

    // inner -P-> outer, each scope declaring `x` via a VAR leaf.
    let graph = ScopeGraph::new(
        vec![
            scope("outer"),
            scope("inner"),
            scope("x_outer"),
            scope("x_inner"),
        ],
        vec![
            Edge::new(scope("inner"), label("P"), scope("outer")),
            Edge::new(scope("outer"), label("VAR"), scope("x_outer")),
            Edge::new(scope("inner"), label("VAR"), scope("x_inner")),
        ],
        BTreeMap::from([
            (scope("x_outer"), Datum::atom("x")),
            (scope("x_inner"), Datum::atom("x")),
        ]),
    )
    .unwrap();

    let machine = parse_machine(MACHINE).unwrap();
    println!("machine under interpretation:\n{MACHINE}");

    let wf = DataWf::name_eq("x");
    let eq = DataEquiv::AlwaysTrue;

    for start in ["inner", "outer"] {
        let (env, stats) = run_machine(&machine, &graph, &scope(start), &wf, &eq).unwrap();
        println!("from `{start}`:");
        for path in &env {
            println!("  {path}");
        }
        println!(
            "  ({} edges traversed; the parent edge is {})",
            stats.edges_traversed,
            if stats.edges_traversed > 1 {
                "walked"
            } else {
                "skipped by else"
            }
        );
    }
}
