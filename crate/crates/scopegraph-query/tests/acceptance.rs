//! Acceptance suite. Each test covers one criterion end to end and prints a
//! single `[criterion N] PASS` line (visible with `--nocapture`).
//!
//! Run with: `cargo test --test acceptance -- --nocapture`

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scopegraph_query::cli::{
    cmd_bench, cmd_fuzz, gen_chain_graph, gen_fuzz_case, gen_lm_motif, render_env, resolve_in_mode,
    run_all_modes, BenchOptions, FuzzOptions, Mode,
};
use scopegraph_query::ir::{parse_machine, rename_canonical, run_machine, validate_machine};
use scopegraph_query::label_regex::{parse_regex, Label, LabelRegEx};
use scopegraph_query::query_model::{validate_order, Query};
use scopegraph_query::scope_graph::load_graph;
use scopegraph_query::specializer::{eliminate_common_subenvs, optimize_machine, specialize};
use scopegraph_query::PathLabel;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn load_fixture_pair(graph: &str, query: &str) -> (scopegraph_query::ScopeGraph, Query) {
    let g = load_graph(&std::fs::read_to_string(fixture(graph)).unwrap()).unwrap();
    let q = Query::from_json(&std::fs::read_to_string(fixture(query)).unwrap()).unwrap();
    (g, q)
}

/// Deep-recursion cases run on a dedicated thread with a large stack.
fn with_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(64 << 20)
        .spawn(f)
        .expect("spawn")
        .join()
        .expect("join")
}

fn pl(s: &str) -> PathLabel {
    PathLabel::parse(s).unwrap()
}

#[test]
fn criterion_1_golden_traces() {
    let started = Instant::now();

    let (g, q) = load_fixture_pair("pcf_graph.json", "pcf_query.json");
    let expected = vec!["slam -P-> sl -VAR-> sx".to_string()];
    for mode in [Mode::Generic, Mode::Specialized, Mode::BruteForce] {
        let (env, _) = resolve_in_mode(&g, &q, mode, None).unwrap();
        assert_eq!(render_env(&env), expected, "example 1, mode {mode}");
    }

    let (g, q) = load_fixture_pair("lm_graph.json", "lm_query.json");
    assert_eq!(g.scope_count(), 10);
    assert_eq!(g.edge_count(), 17);
    let expected = vec![
        "sE -I-> sC -VAR-> s2".to_string(),
        "sE -P-> sD -VAR-> s3".to_string(),
    ];
    for mode in [Mode::Generic, Mode::Specialized, Mode::BruteForce] {
        let (env, _) = resolve_in_mode(&g, &q, mode, None).unwrap();
        assert_eq!(render_env(&env), expected, "example 2, mode {mode}");
    }

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("[criterion 1] PASS golden traces exact in all three modes ({elapsed:?})");
}

#[test]
fn criterion_2_compilation_golds() {
    let compile = |regex: &str, order: &[(&str, &str)], use_else: bool| {
        let r = parse_regex(regex).unwrap();
        let ord = validate_order(order.iter().map(|(a, b)| (pl(a), pl(b)))).unwrap();
        let m = specialize(&r, &ord, use_else).unwrap();
        assert!(validate_machine(&m).is_empty());
        rename_canonical(&optimize_machine(&m))
    };
    let expect = |text: &str| rename_canonical(&parse_machine(text).unwrap());

    // Single label, no order: two states.
    let first = compile("L", &[], false);
    assert_eq!(first.states().len(), 2);
    assert_eq!(
        first,
        expect("state machine\n n0:\n  e0 := subenv L n1\n n1:\n  e0 := resolve\n")
    );

    // Closure, no order: one state combining with merge.
    let second = compile("L*", &[], false);
    assert_eq!(second.states().len(), 1);
    assert_eq!(
        second,
        expect("state machine\n n0:\n  e0 := resolve\n  e1 := subenv L n0\n  e2 := merge e0 e1\n")
    );

    // Closure with local-first order: one state combining with shadow.
    let third = compile("L*", &[("$", "L")], false);
    assert_eq!(third.states().len(), 1);
    assert_eq!(
        third,
        expect("state machine\n n0:\n  e0 := resolve\n  e1 := subenv L n0\n  e2 := shadow e0 e1\n")
    );

    // The else variant replaces the shadow+subenv pair with one guard.
    let third_else = compile("L*", &[("$", "L")], true);
    assert_eq!(
        third_else,
        expect("state machine\n n0:\n  e0 := resolve\n  e1 := else e0 (subenv L n0)\n")
    );

    println!("[criterion 2] PASS compiled machines match the three reference listings and the else variant");
}

#[test]
fn criterion_3_cse_count() {
    let left = parse_machine(
        "state machine
         n:
           e0 := subenv L1 n
           e1 := subenv L2 n
           e2 := shadow e0 e1
           e3 := subenv L1 n
           e4 := subenv L3 n
           e5 := shadow e3 e4
           e6 := merge e2 e5
        ",
    )
    .unwrap();
    let right = parse_machine(
        "state machine
         n:
           e0 := subenv L1 n
           e1 := subenv L2 n
           e2 := shadow e0 e1
           e3 := subenv L3 n
           e4 := shadow e0 e3
           e5 := merge e2 e4
        ",
    )
    .unwrap();
    let (_, state) = &left.states()[0];
    assert_eq!(state.len(), 7);
    let optimized = eliminate_common_subenvs(state);
    assert_eq!(optimized.len(), 6);
    assert_eq!(
        rename_canonical(&optimize_machine(&left)),
        rename_canonical(&right),
    );
    println!("[criterion 3] PASS duplicate sub-environment eliminated: 7 assignments -> 6, matching the optimized listing");
}

#[test]
fn criterion_4_differential_fuzz() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    // The real binary with the stated flags must exit 0.
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_sgq"))
        .current_dir(dir.path())
        .args([
            "fuzz",
            "--seed",
            "42",
            "--cases",
            "1000",
            "--max-scopes",
            "12",
            "--max-labels",
            "3",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "fuzz exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout)
    );

    // Same stream through the library surface, for the structured outcome.
    let opts = FuzzOptions {
        seed: 42,
        cases: 1000,
        max_scopes: 12,
        max_labels: 3,
        reproducer_dir: dir.path().to_path_buf(),
    };
    let mut buf = Vec::new();
    let outcome = cmd_fuzz(&opts, &mut buf).unwrap();
    assert_eq!(
        outcome.mismatch,
        None,
        "fuzz mismatch: {}",
        String::from_utf8_lossy(&buf)
    );
    assert_eq!(outcome.cases_run, 1000);

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    println!("[criterion 4] PASS 1000 fuzz cases: generic = specialized (all variants) = brute force ({elapsed:?})");
}

// -- criterion 5 support: independent oracles ------------------------------

fn arb_label(rng: &mut ChaCha8Rng) -> Label {
    let names = ["A", "B", "C"];
    Label::new(names[rng.random_range(0..names.len())]).unwrap()
}

fn arb_regex(rng: &mut ChaCha8Rng, budget: usize) -> LabelRegEx {
    if budget <= 1 {
        return LabelRegEx::Lit(arb_label(rng));
    }
    match rng.random_range(0..10u32) {
        0..=2 => LabelRegEx::Lit(arb_label(rng)),
        3 => LabelRegEx::Epsilon,
        4 | 5 => LabelRegEx::concat(
            arb_regex(rng, budget / 2),
            arb_regex(rng, budget - budget / 2 - 1),
        ),
        6 | 7 => LabelRegEx::union(
            arb_regex(rng, budget / 2),
            arb_regex(rng, budget - budget / 2 - 1),
        ),
        8 => LabelRegEx::star(arb_regex(rng, budget - 1)),
        _ => LabelRegEx::question(arb_regex(rng, budget - 1)),
    }
}

fn arb_word(rng: &mut ChaCha8Rng) -> Vec<Label> {
    let len = rng.random_range(0..=6);
    (0..len).map(|_| arb_label(rng)).collect()
}

/// Structural emptiness: true iff the language is empty. No derivatives.
fn lang_empty(r: &LabelRegEx) -> bool {
    match r {
        LabelRegEx::Empty => true,
        LabelRegEx::Epsilon
        | LabelRegEx::Lit(_)
        | LabelRegEx::Star(_)
        | LabelRegEx::Question(_) => false,
        LabelRegEx::Concat(a, b) => lang_empty(a) || lang_empty(b),
        LabelRegEx::Union(a, b) => lang_empty(a) && lang_empty(b),
    }
}

/// Structural FIRST set: the labels some word of the language starts with.
fn first_set(r: &LabelRegEx) -> BTreeSet<Label> {
    match r {
        LabelRegEx::Empty | LabelRegEx::Epsilon => BTreeSet::new(),
        LabelRegEx::Lit(l) => [l.clone()].into_iter().collect(),
        LabelRegEx::Star(inner) | LabelRegEx::Question(inner) => first_set(inner),
        LabelRegEx::Union(a, b) => first_set(a).union(&first_set(b)).cloned().collect(),
        LabelRegEx::Concat(a, b) => {
            if lang_empty(a) || lang_empty(b) {
                BTreeSet::new()
            } else {
                let mut out = first_set(a);
                if a.nullable() {
                    out.extend(first_set(b));
                }
                out
            }
        }
    }
}

#[test]
fn criterion_5_regex_property_suite() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..10_000u32 {
        let regex = arb_regex(&mut rng, 8);
        let word = arb_word(&mut rng);

        // Derivative/membership coherence: w ∈ L(r) iff folding derivatives
        // over w leaves a nullable residual.
        let structural = regex.matches(&word);
        let residual = word
            .iter()
            .fold(regex.canonicalize(), |acc, l| acc.derive(l));
        assert_eq!(
            structural,
            residual.nullable(),
            "sample {i}: {regex} / {word:?}"
        );

        // Canonicalization preserves membership.
        assert_eq!(
            structural,
            regex.canonicalize().matches(&word),
            "sample {i}: canonicalize changed the language of {regex}"
        );

        // Head set is exactly the FIRST set (soundness and completeness of
        // the ∃w. l·w ∈ L(r) characterization).
        assert_eq!(regex.head_set(), first_set(&regex), "sample {i}: {regex}");
        if structural && !word.is_empty() {
            assert!(regex.head_set().contains(&word[0]), "sample {i}: {regex}");
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!("[criterion 5] PASS 10000 regex samples: derivative coherence, head sets, canonicalization ({elapsed:?})");
}

#[test]
fn criterion_6_instrumentation() {
    // Specialized runs never compute derivatives or order queries; the
    // generic runs pay at least one derivative per traversed edge.
    for case in 0..1000u64 {
        let fc = gen_fuzz_case(42, case, 12, 3);
        let runs = run_all_modes(&fc.graph, &fc.query, None).unwrap();
        for run in &runs {
            if run.name.starts_with("specialized") {
                assert_eq!(run.stats.derivative_count, 0, "case {case} [{}]", run.name);
                assert_eq!(run.stats.order_query_count, 0, "case {case} [{}]", run.name);
            }
            if run.name == "generic" {
                assert!(
                    run.stats.derivative_count >= run.stats.edges_traversed,
                    "case {case}: {} derivatives < {} edges",
                    run.stats.derivative_count,
                    run.stats.edges_traversed
                );
            }
        }
    }

    // Deep chain with a local match and `$ < P`: the else-compiled machine
    // answers without traversing a single edge, while the generic algorithm
    // walks the whole chain.
    let (else_stats, generic_stats) = with_big_stack(|| {
        let g = gen_chain_graph(200);
        let q = Query::from_json(
            r#"{"start":"c0","regex":"P*",
                "wf":{"kind":"name-eq","atom":"x"},
                "order":[["$","P"]],
                "equiv":{"kind":"true"}}"#,
        )
        .unwrap();
        let machine = scopegraph_query::specializer::compile_query(&q, None, true).unwrap();
        let (env, else_stats) = run_machine(&machine, &g, &q.start, &q.wf, &q.equiv).unwrap();
        assert_eq!(render_env(&env), vec!["c0".to_string()]);
        let (generic_env, generic_stats) = scopegraph_query::resolve(&g, &q).unwrap();
        assert_eq!(env, generic_env);
        (else_stats, generic_stats)
    });
    assert_eq!(else_stats.edges_traversed, 0);
    assert_eq!(generic_stats.edges_traversed, 200);

    println!(
        "[criterion 6] PASS specialized counters structurally zero on 1000 cases; chain-200 else machine traverses 0 edges (generic: {})",
        generic_stats.edges_traversed
    );
}

#[test]
fn criterion_7_speedup_direction() {
    let started = Instant::now();
    let summary = with_big_stack(|| {
        let (graph, query) = gen_lm_motif(2000);
        let dir = tempfile::tempdir().unwrap();
        let graph_path = dir.path().join("bench_graph.json");
        let query_path = dir.path().join("bench_query.json");
        std::fs::write(&graph_path, scopegraph_query::save_graph(&graph)).unwrap();
        std::fs::write(&query_path, query.to_json()).unwrap();
        let mut out = Vec::new();
        let summary = cmd_bench(
            &graph_path,
            &query_path,
            &BenchOptions {
                iters: 20,
                warmup: 5,
                csv: None,
            },
            &mut out,
        )
        .unwrap();
        print!("{}", String::from_utf8_lossy(&out));
        summary
    });
    assert!(
        summary.median >= 1.0,
        "median speedup {} < 1.0",
        summary.median
    );
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    println!(
        "[criterion 7] PASS median specialized/generic speedup {:.2}x on a 2000-scope graph over 20 iterations ({elapsed:?})",
        summary.median
    );
}
