//! Name resolution in scope graphs, three ways.
//!
//! A scope graph models the binding structure of a program: scopes are nodes,
//! visibility relations are labeled edges, and declarations carry data. A
//! *query* resolves a reference by searching for paths from a start scope to
//! matching declarations, guided by four parameters: a regular expression
//! over edge labels (path well-formedness), a predicate on declaration data
//! (data well-formedness), a strict partial order on labels (shadowing
//! priority), and an equivalence on data (shadowing applies only within a
//! group).
//!
//! This crate provides:
//!
//! * [`generic_resolver`] — the reference resolution algorithm, driven by
//!   Brzozowski derivatives of the path regex, plus a brute-force oracle used
//!   for differential testing.
//! * [`ir`] — a small state-machine language (`resolve`, `subenv`, `merge`,
//!   `shadow`, `else`) with an interpreter.
//! * [`specializer`] — partial evaluation of the regex and label order into
//!   that language, so resolution at run time performs no derivative or
//!   order computations at all.
//! * [`cli`] — batch commands for compiling, resolving, differential
//!   fuzzing, and instrumented benchmarking; the `sgq` binary is a thin
//!   wrapper over these.
//!
//! The `examples/` directory contains one runnable example per capability;
//! start with `cargo run --example resolve_query`.

pub mod cli;
pub mod generic_resolver;
pub mod ir;
pub mod label_regex;
pub mod query_model;
pub mod scope_graph;
pub mod specializer;

#[cfg(test)]
pub(crate) mod testutil;

pub use generic_resolver::{brute_force_resolve, path_less, resolve, ResolveStats};
pub use ir::{run_machine, StateMachine};
pub use label_regex::{gen_states, parse_regex, Label, LabelRegEx, PathLabel};
pub use query_model::{DataEquiv, DataWf, LabelOrder, Query};
pub use scope_graph::{load_graph, save_graph, Datum, Env, ResolutionPath, ScopeGraph, ScopeId};
pub use specializer::{eliminate_common_subenvs, specialize};
