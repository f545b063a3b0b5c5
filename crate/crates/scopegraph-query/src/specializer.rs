//! Partial evaluation of queries: compiles a path well-formedness regex and
//! a label order into a resolution state machine.
//!
//! The regex is expanded into its derivative automaton
//! ([`crate::label_regex::gen_states`]); each automaton state becomes one
//! machine state whose assignment sequence reproduces, fixed in straight-line
//! code, exactly what the generic resolver would compute there: one
//! sub-environment per admissible path label, combined innermost-first along
//! the label order, with `shadow` between ordered layers and a final `merge`
//! of the unordered maxima.
//!
//! When data equivalence is trivially true, shadowing degenerates to "first
//! non-empty environment wins", and the `else` form of the layer combinator
//! is emitted instead; the shadowed alternative is then never even computed
//! at run time.
//!
//! [`eliminate_common_subenvs`] removes the redundant recomputation the
//! scheme inherits from the generic algorithm (identical sub-environments
//! appear once per maximal label above them) by forward common-subexpression
//! elimination, plus a peephole that collapses single-operand merges.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::ir::{IrExpr, IrState, StateMachine, StateName, Var};
use crate::label_regex::{gen_states, DfaState, LabelRegEx, PathLabel};
use crate::query_model::{LabelOrder, Query};

/// Allocates names, one counter per namespace; a name is never issued twice
/// within one specialization.
#[derive(Debug, Default)]
pub struct FreshNamer {
    vars: usize,
    states: usize,
}

impl FreshNamer {
    pub fn new() -> FreshNamer {
        FreshNamer::default()
    }

    pub fn fresh_var(&mut self) -> Var {
        let v = Var::new(format!("e{}", self.vars));
        self.vars += 1;
        v
    }

    pub fn fresh_state(&mut self) -> StateName {
        let n = StateName::new(format!("n{}", self.states));
        self.states += 1;
        n
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpecializeError {
    #[error("empty path well-formedness: the query can never resolve")]
    EmptyRegex,
}

/// Compiles `(regex, order)` into a state machine.
///
/// `use_else` selects the `else` layer combinator; callers set it exactly
/// when the query's data equivalence is trivially true. The output is the
/// unoptimized scheme; apply [`optimize_machine`] for the compact form.
pub fn specialize(
    regex: &LabelRegEx,
    order: &LabelOrder,
    use_else: bool,
) -> Result<StateMachine, SpecializeError> {
    let canonical = regex.canonicalize();
    if canonical == LabelRegEx::Empty {
        return Err(SpecializeError::EmptyRegex);
    }
    let dfa = gen_states(&canonical);
    let mut namer = FreshNamer::new();
    let mut name_map: BTreeMap<String, StateName> = BTreeMap::new();
    for d in &dfa {
        name_map.insert(d.name.clone(), namer.fresh_state());
    }
    let states = dfa
        .iter()
        .map(|d| {
            (
                name_map[&d.name].clone(),
                compile_state(d, order, &mut namer, use_else, &name_map),
            )
        })
        .collect();
    Ok(StateMachine::new(states))
}

/// Compiles one automaton state: the ordered environment of its head set,
/// plus `$` when its regex accepts the empty word.
fn compile_state(
    d: &DfaState,
    order: &LabelOrder,
    namer: &mut FreshNamer,
    use_else: bool,
    names: &BTreeMap<String, StateName>,
) -> IrState {
    let mut labels: BTreeSet<PathLabel> =
        d.transitions.keys().cloned().map(PathLabel::Edge).collect();
    if d.regex.nullable() {
        labels.insert(PathLabel::End);
    }
    let (assignments, _) = compile_labels(&labels, order, namer, d, names, use_else);
    IrState::new(assignments)
}

/// The label-set combinator: one layer per maximal label (`$` first, then
/// lexicographic), merged at the end. An empty label set compiles to an
/// empty merge, which denotes ∅.
fn compile_labels(
    labels: &BTreeSet<PathLabel>,
    order: &LabelOrder,
    namer: &mut FreshNamer,
    d: &DfaState,
    names: &BTreeMap<String, StateName>,
    use_else: bool,
) -> (Vec<(Var, IrExpr)>, Var) {
    let mut block = Vec::new();
    let mut results = Vec::new();
    for max_label in order.max_set(labels) {
        let smaller = order.smaller_set(labels, &max_label);
        let (layer, var) =
            compile_label_layer(&smaller, &max_label, order, namer, d, names, use_else);
        block.extend(layer);
        results.push(var);
    }
    let out = namer.fresh_var();
    block.push((out.clone(), IrExpr::Merge(results)));
    (block, out)
}

/// One shadowing layer: the environment of `label`, shadowed by the
/// environment of everything below it. With nothing below, the single
/// expression stands alone; with `use_else`, the shadowed expression is
/// guarded instead of computed and filtered.
fn compile_label_layer(
    smaller: &BTreeSet<PathLabel>,
    label: &PathLabel,
    order: &LabelOrder,
    namer: &mut FreshNamer,
    d: &DfaState,
    names: &BTreeMap<String, StateName>,
    use_else: bool,
) -> (Vec<(Var, IrExpr)>, Var) {
    let single = compile_single(label, d, names);
    if smaller.is_empty() {
        let var = namer.fresh_var();
        return (vec![(var.clone(), single)], var);
    }
    let (mut block, shadowing) = compile_labels(smaller, order, namer, d, names, use_else);
    if use_else {
        let out = namer.fresh_var();
        block.push((out.clone(), IrExpr::Else(shadowing, Box::new(single))));
        (block, out)
    } else {
        let single_var = namer.fresh_var();
        block.push((single_var.clone(), single));
        let out = namer.fresh_var();
        block.push((out.clone(), IrExpr::Shadow(shadowing, single_var)));
        (block, out)
    }
}

/// `$` resolves the current path; an edge label traverses into the state
/// holding the derivative of this state's regex.
fn compile_single(label: &PathLabel, d: &DfaState, names: &BTreeMap<String, StateName>) -> IrExpr {
    match label {
        PathLabel::End => IrExpr::Resolve,
        PathLabel::Edge(l) => IrExpr::subenv(l.clone(), names[&d.transitions[l]].clone()),
    }
}

/// Forward available-expression pass over one state.
///
/// An assignment whose (rewritten) expression already occurred is dropped
/// and later reads are redirected to the earlier variable. Single-operand
/// merges are aliases and are dropped the same way. The state's result value
/// is preserved; if its defining assignment was dropped and something else
/// now ends the sequence, a trailing merge re-establishes it. Idempotent,
/// never adds net assignments, and keeps the state valid.
pub fn eliminate_common_subenvs(state: &IrState) -> IrState {
    let mut alias: BTreeMap<Var, Var> = BTreeMap::new();
    let mut available: BTreeMap<IrExpr, Var> = BTreeMap::new();
    let mut kept: Vec<(Var, IrExpr)> = Vec::new();

    for (var, expr) in state.assignments() {
        let mut expr = rewrite_reads(expr, &alias);
        if let IrExpr::Merge(vars) = &expr {
            let mut seen = BTreeSet::new();
            let deduped: Vec<Var> = vars
                .iter()
                .filter(|v| seen.insert((*v).clone()))
                .cloned()
                .collect();
            if deduped.len() == 1 {
                alias.insert(var.clone(), deduped.into_iter().next().unwrap());
                continue;
            }
            expr = IrExpr::Merge(deduped);
        }
        if let Some(earlier) = available.get(&expr) {
            alias.insert(var.clone(), earlier.clone());
            continue;
        }
        available.insert(expr.clone(), var.clone());
        kept.push((var.clone(), expr));
    }

    if let Some(result) = state.result() {
        let target = alias.get(result).unwrap_or(result).clone();
        if kept.last().map(|(v, _)| v) != Some(&target) {
            kept.push((result.clone(), IrExpr::Merge(vec![target])));
        }
    }
    IrState::new(kept)
}

fn rewrite_reads(expr: &IrExpr, alias: &BTreeMap<Var, Var>) -> IrExpr {
    let subst = |v: &Var| alias.get(v).cloned().unwrap_or_else(|| v.clone());
    match expr {
        IrExpr::Resolve => IrExpr::Resolve,
        IrExpr::Subenv { label, state } => IrExpr::Subenv {
            label: label.clone(),
            state: state.clone(),
        },
        IrExpr::Merge(vars) => IrExpr::Merge(vars.iter().map(subst).collect()),
        IrExpr::Shadow(a, b) => IrExpr::Shadow(subst(a), subst(b)),
        IrExpr::Else(v, fallback) => {
            IrExpr::Else(subst(v), Box::new(rewrite_reads(fallback, alias)))
        }
    }
}

/// Applies [`eliminate_common_subenvs`] to every state.
pub fn optimize_machine(m: &StateMachine) -> StateMachine {
    StateMachine::new(
        m.states()
            .iter()
            .map(|(n, y)| (n.clone(), eliminate_common_subenvs(y)))
            .collect(),
    )
}

/// Compiles a query with the usual defaults: `use_else` follows the query's
/// data equivalence unless overridden, and optimized machines are renamed
/// canonically.
pub fn compile_query(
    q: &Query,
    use_else: Option<bool>,
    cse: bool,
) -> Result<StateMachine, SpecializeError> {
    let use_else = use_else.unwrap_or_else(|| q.equiv.is_trivially_true());
    let m = specialize(&q.regex, &q.order, use_else)?;
    Ok(if cse {
        crate::ir::rename_canonical(&optimize_machine(&m))
    } else {
        m
    })
}
