//! Specialize path regexes and label orders into resolution machines.
//!
//! Shows how the states mirror the regex's derivatives, how the label order
//! chooses between `merge`, `shadow`, and `else`, and what the
//! common-sub-environment pass removes. Run with:
//!
//! ```bash
//! cargo run --example compile_query
//! ```

use scopegraph_query::ir::{print_machine, rename_canonical};
use scopegraph_query::label_regex::{gen_states, parse_regex};
use scopegraph_query::query_model::validate_order;
use scopegraph_query::specializer::{optimize_machine, specialize};
use scopegraph_query::{LabelOrder, PathLabel};

fn show(title: &str, regex: &str, order: &LabelOrder, use_else: bool) {
    let r = parse_regex(regex).unwrap();
    let raw = specialize(&r, order, use_else).unwrap();
    let optimized = rename_canonical(&optimize_machine(&raw));
    println!("== {title}: regex `{regex}` ==");
    print!("{}", print_machine(&optimized));
    println!();
}

fn main() {
    let pl = |s: &str| PathLabel::parse(s).unwrap();

    // The regex `P* I? VAR` has three derivative classes; each becomes one
    // machine state.
    println!("derivative automaton of `P* I? VAR`:");
    for state in gen_states(&parse_regex("P* I? VAR").unwrap()) {
        let transitions: Vec<String> = state
            .transitions
            .iter()
            .map(|(l, n)| format!("{l} -> {n}"))
            .collect();
        println!(
            "  {}: {}  [{}]",
            state.name,
            state.regex,
            transitions.join(", ")
        );
    }
    println!();

    let unordered = LabelOrder::empty();
    show("single edge, no shadowing", "L", &unordered, false);
    show("closure, unordered: merge", "L*", &unordered, false);

    let local_first = validate_order([(pl("$"), pl("L"))]).unwrap();
    show("closure, local first: shadow", "L*", &local_first, false);
    show(
        "same, trivially-true equivalence: else",
        "L*",
        &local_first,
        true,
    );

    let lm = validate_order([(pl("VAR"), pl("P")), (pl("VAR"), pl("I"))]).unwrap();
    show("module-language lookup", "P* I? VAR", &lm, true);

    // Without the optimization pass the scheme spells out each layer,
    // including the recomputed sub-environments.
    let raw = specialize(&parse_regex("P* I? VAR").unwrap(), &lm, true).unwrap();
    println!(
        "raw scheme output has {} assignments; after elimination: {}",
        raw.assignment_count(),
        optimize_machine(&raw).assignment_count()
    );
}
