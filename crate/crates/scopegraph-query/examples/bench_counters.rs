//! Instrumented comparison of generic versus specialized resolution.
//!
//! Two workloads: a deep lexical chain where `else` answers locally without
//! touching a single edge, and a 2000-scope module-language graph where a
//! full traversal shows the cost of per-scope derivative and label-order
//! computation. Run with:
//!
//! ```bash
//! cargo run --release --example bench_counters
//! ```

use std::time::Instant;

use scopegraph_query::cli::{gen_chain_graph, gen_lm_motif};
use scopegraph_query::query_model::Query;
use scopegraph_query::specializer::compile_query;
use scopegraph_query::{resolve, run_machine};

fn main() {
    // Workload 1: chain of 200 parent edges, every scope declares `x`,
    // local declarations shadow everything ($ < P).
    let chain = gen_chain_graph(200);
    let query = Query::from_json(
        r#"{"start":"c0","regex":"P*",
            "wf":{"kind":"name-eq","atom":"x"},
            "order":[["$","P"]],
            "equiv":{"kind":"true"}}"#,
    )
    .unwrap();
    let machine = compile_query(&query, None, true).unwrap();
    let (env, generic) = resolve(&chain, &query).unwrap();
    let (env2, specialized) =
        run_machine(&machine, &chain, &query.start, &query.wf, &query.equiv).unwrap();
    assert_eq!(env, env2);
    println!("chain-200, local match, $ < P:");
    println!(
        "  generic:     {} edges, {} derivatives, {} order queries",
        generic.edges_traversed, generic.derivative_count, generic.order_query_count
    );
    println!(
        "  specialized: {} edges, {} derivatives, {} order queries  (else stops at the start scope)",
        specialized.edges_traversed, specialized.derivative_count, specialized.order_query_count
    );

    // Workload 2: module-language motif, 2000 scopes, name that resolves
    // nowhere, so both modes traverse everything reachable.
    let (graph, query) = gen_lm_motif(2000);
    let machine = compile_query(&query, None, true).unwrap();
    let iters = 10;

    let started = Instant::now();
    let mut generic = Default::default();
    for _ in 0..iters {
        generic = resolve(&graph, &query).unwrap().1;
    }
    let generic_ns = started.elapsed().as_nanos() / iters;

    let started = Instant::now();
    let mut specialized = Default::default();
    for _ in 0..iters {
        specialized = run_machine(&machine, &graph, &query.start, &query.wf, &query.equiv)
            .unwrap()
            .1;
    }
    let specialized_ns = started.elapsed().as_nanos() / iters;

    println!("\nlm-motif 2000 scopes, absent name, {iters} iterations:");
    println!(
        "  generic:     {generic_ns} ns/iter, {} edges, {} derivatives, {} order queries",
        generic.edges_traversed, generic.derivative_count, generic.order_query_count
    );
    println!(
        "  specialized: {specialized_ns} ns/iter, {} edges, {} derivatives, {} order queries",
        specialized.edges_traversed, specialized.derivative_count, specialized.order_query_count
    );
    println!(
        "  speedup: {:.2}x",
        generic_ns as f64 / specialized_ns as f64
    );
}
