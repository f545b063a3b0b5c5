//! Differential testing: the generic resolver, every specialization
//! variant, and the brute-force oracle must agree on random instances.
//!
//! Run with:
//!
//! ```bash
//! cargo run --example differential
//! ```

use scopegraph_query::cli::{gen_fuzz_case, run_all_modes};

fn main() {
    let seed = 2024;
    let cases = 200;
    let mut total_paths = 0usize;
    for case in 0..cases {
        let instance = gen_fuzz_case(seed, case, 12, 3);
        let runs = run_all_modes(&instance.graph, &instance.query, None).unwrap();
        let agree = runs.iter().all(|r| r.env == runs[0].env);
        if !agree {
            println!("case {case} disagrees:");
            for run in &runs {
                println!("  [{}] {:?}", run.name, run.env);
            }
            println!(
                "\ngraph:\n{}",
                scopegraph_query::save_graph(&instance.graph)
            );
            println!("query:\n{}", instance.query.to_json());
            std::process::exit(1);
        }
        total_paths += runs[0].env.len();
    }
    println!(
        "{cases} random instances (seed {seed}): all modes agree, {total_paths} paths resolved in total"
    );
    println!("modes compared per case: generic, brute force, specialized with/without CSE (and with/without else when the equivalence is trivially true)");
}
