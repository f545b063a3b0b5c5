//! The intermediate resolution language: state machines of single-assignment
//! expression sequences, their textual format, and the interpreter.
//!
//! A compiled query is a [`StateMachine`]. Each state is a straight-line
//! sequence of assignments over five expression forms:
//!
//! * `resolve` — the current path, if its target datum is well-formed;
//! * `subenv l n` — the union of residual queries in state `n` over all
//!   non-cyclic `l`-edges out of the path target;
//! * `merge x…` — union of previously computed environments;
//! * `shadow x1 x2` — `x1` plus the paths of `x2` not shadowed by it;
//! * `else x (E)` — `x` if non-empty, otherwise `E`, which is then not
//!   evaluated at all (observable in [`ResolveStats::edges_traversed`]).
//!
//! Running a machine performs no derivative or label-order computation;
//! `derivative_count` and `order_query_count` stay zero structurally.
//!
//! Textual form (two-space indent per level, first state is initial):
//!
//! ```text
//! state machine
//!   n0:
//!     e0 := subenv L n1
//!   n1:
//!     e0 := resolve
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::generic_resolver::{shadow, ResolveStats};
use crate::label_regex::{Label, LabelError};
use crate::query_model::{DataEquiv, DataWf};
use crate::scope_graph::{Datum, Env, ResolutionPath, ScopeGraph, ScopeId};

/// A variable holding an environment within one state, conventionally
/// `e0`, `e1`, ...
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Var {
        Var(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Name of a machine state, conventionally `n0`, `n1`, ...
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateName(String);

impl StateName {
    pub fn new(name: impl Into<String>) -> StateName {
        StateName(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A resolution expression.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IrExpr {
    Resolve,
    Subenv {
        label: Label,
        state: StateName,
    },
    Merge(Vec<Var>),
    Shadow(Var, Var),
    /// `else x (E)`; the fallback is never another `else`.
    Else(Var, Box<IrExpr>),
}

impl IrExpr {
    pub fn subenv(label: Label, state: StateName) -> IrExpr {
        IrExpr::Subenv { label, state }
    }

    /// Variables the expression reads.
    pub fn reads(&self) -> Vec<&Var> {
        match self {
            IrExpr::Resolve | IrExpr::Subenv { .. } => Vec::new(),
            IrExpr::Merge(vars) => vars.iter().collect(),
            IrExpr::Shadow(a, b) => vec![a, b],
            IrExpr::Else(v, fallback) => {
                let mut out = vec![v];
                out.extend(fallback.reads());
                out
            }
        }
    }
}

impl fmt::Display for IrExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrExpr::Resolve => f.write_str("resolve"),
            IrExpr::Subenv { label, state } => write!(f, "subenv {label} {state}"),
            IrExpr::Merge(vars) => {
                f.write_str("merge")?;
                for v in vars {
                    write!(f, " {v}")?;
                }
                Ok(())
            }
            IrExpr::Shadow(a, b) => write!(f, "shadow {a} {b}"),
            IrExpr::Else(v, fallback) => write!(f, "else {v} ({fallback})"),
        }
    }
}

/// One state: an ordered sequence of single assignments. The state's result
/// is the value of its final assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrState {
    assignments: Vec<(Var, IrExpr)>,
}

impl IrState {
    pub fn new(assignments: Vec<(Var, IrExpr)>) -> IrState {
        IrState { assignments }
    }

    pub fn assignments(&self) -> &[(Var, IrExpr)] {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// The result variable: the final assignment's target.
    pub fn result(&self) -> Option<&Var> {
        self.assignments.last().map(|(v, _)| v)
    }
}

/// A machine: named states in order; the first listed state is initial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateMachine {
    states: Vec<(StateName, IrState)>,
}

impl StateMachine {
    pub fn new(states: Vec<(StateName, IrState)>) -> StateMachine {
        StateMachine { states }
    }

    pub fn states(&self) -> &[(StateName, IrState)] {
        &self.states
    }

    pub fn initial(&self) -> Option<&StateName> {
        self.states.first().map(|(n, _)| n)
    }

    pub fn get(&self, name: &StateName) -> Option<&IrState> {
        self.states.iter().find(|(n, _)| n == name).map(|(_, y)| y)
    }

    /// Total assignment count, a convenience for optimization tests.
    pub fn assignment_count(&self) -> usize {
        self.states.iter().map(|(_, y)| y.len()).sum()
    }
}

/// Checks the structural invariants; returns one message per violation,
/// naming the offending state and variable. An empty list means valid.
pub fn validate_machine(m: &StateMachine) -> Vec<String> {
    let mut diags = Vec::new();
    if m.states.is_empty() {
        diags.push("machine has no states".to_string());
    }
    let mut names = BTreeSet::new();
    for (name, _) in &m.states {
        if !names.insert(name.clone()) {
            diags.push(format!("duplicate state name `{name}`"));
        }
    }
    for (name, state) in &m.states {
        if state.is_empty() {
            diags.push(format!("state `{name}` has no assignments"));
            continue;
        }
        let mut defined: BTreeSet<&Var> = BTreeSet::new();
        for (var, expr) in state.assignments() {
            for read in expr.reads() {
                if !defined.contains(read) {
                    diags.push(format!(
                        "state `{name}`: `{var}` reads `{read}` before it is assigned"
                    ));
                }
            }
            if let IrExpr::Else(_, fallback) = expr {
                if matches!(**fallback, IrExpr::Else(..)) {
                    diags.push(format!("state `{name}`: `{var}` nests `else` in `else`"));
                }
            }
            if let IrExpr::Subenv { state: target, .. } = expr {
                if !names.contains(target) {
                    diags.push(format!(
                        "state `{name}`: `{var}` targets undeclared state `{target}`"
                    ));
                }
            }
            if !defined.insert(var) {
                diags.push(format!("state `{name}`: `{var}` is assigned twice"));
            }
        }
    }
    diags
}

#[derive(Debug, Error)]
pub enum MachineError {
    #[error("invalid machine:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("unknown scope `{0}`")]
    UnknownScope(String),
    #[error("undefined variable `{0}`")]
    UndefinedVar(String),
    #[error("variable `{0}` assigned twice")]
    DoubleAssignment(String),
    #[error("undefined state `{0}`")]
    UndefinedState(String),
    #[error("state has no assignments")]
    EmptyState,
}

/// The store built up while one state evaluates: a write-once map from
/// variables to environments.
#[derive(Clone, Debug, Default)]
pub struct EvalStore {
    values: BTreeMap<Var, Env>,
}

impl EvalStore {
    pub fn new() -> EvalStore {
        EvalStore::default()
    }

    pub fn insert(&mut self, var: Var, env: Env) -> Result<(), MachineError> {
        if self.values.contains_key(&var) {
            return Err(MachineError::DoubleAssignment(var.0));
        }
        self.values.insert(var, env);
        Ok(())
    }

    pub fn get(&self, var: &Var) -> Result<&Env, MachineError> {
        self.values
            .get(var)
            .ok_or_else(|| MachineError::UndefinedVar(var.0.clone()))
    }
}

/// Evaluates one expression against a store, at path prefix `p`.
#[allow(clippy::too_many_arguments)]
pub fn eval_expr(
    expr: &IrExpr,
    store: &EvalStore,
    m: &StateMachine,
    g: &ScopeGraph,
    p: &ResolutionPath,
    wf: &DataWf,
    eq: &DataEquiv,
    stats: &mut ResolveStats,
) -> Result<Env, MachineError> {
    eval_expr_with_hooks(
        expr,
        store,
        m,
        g,
        p,
        &|d| wf.matches(d),
        &|a, b| eq.relates(a, b),
        stats,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn eval_expr_with_hooks(
    expr: &IrExpr,
    store: &EvalStore,
    m: &StateMachine,
    g: &ScopeGraph,
    p: &ResolutionPath,
    wf: &dyn Fn(&Datum) -> bool,
    eq: &dyn Fn(&Datum, &Datum) -> bool,
    stats: &mut ResolveStats,
) -> Result<Env, MachineError> {
    match expr {
        IrExpr::Resolve => {
            let datum = g
                .datum_of(p.target())
                .expect("path targets are graph scopes");
            Ok(if wf(datum) {
                Env::singleton(p.clone())
            } else {
                Env::new()
            })
        }
        IrExpr::Subenv { label, state } => {
            let target_state = m
                .get(state)
                .ok_or_else(|| MachineError::UndefinedState(state.0.clone()))?;
            let targets: Vec<ScopeId> = g
                .get_edges(p.target(), label)
                .expect("path targets are graph scopes")
                .cloned()
                .collect();
            let mut acc = Env::new();
            for next in targets {
                if p.contains_scope(&next) {
                    continue;
                }
                stats.edges_traversed += 1;
                let extended = p.append(label.clone(), next).expect("cycle checked above");
                acc.extend(eval_state_with_hooks(
                    m,
                    target_state,
                    g,
                    &extended,
                    wf,
                    eq,
                    stats,
                )?);
            }
            Ok(acc)
        }
        IrExpr::Merge(vars) => {
            let mut acc = Env::new();
            for v in vars {
                acc.extend(store.get(v)?.iter().cloned());
            }
            Ok(acc)
        }
        IrExpr::Shadow(a, b) => {
            let shadowing = store.get(a)?;
            let shadowed = store.get(b)?;
            stats.shadow_calls += 1;
            Ok(shadow(g, shadowing, shadowed, eq))
        }
        IrExpr::Else(v, fallback) => {
            let env = store.get(v)?;
            if env.is_empty() {
                eval_expr_with_hooks(fallback, store, m, g, p, wf, eq, stats)
            } else {
                Ok(env.clone())
            }
        }
    }
}

/// Evaluates a state: runs its assignments in order against a fresh store
/// and returns the final assignment's value.
pub fn eval_state(
    m: &StateMachine,
    state: &IrState,
    g: &ScopeGraph,
    p: &ResolutionPath,
    wf: &DataWf,
    eq: &DataEquiv,
    stats: &mut ResolveStats,
) -> Result<Env, MachineError> {
    eval_state_with_hooks(
        m,
        state,
        g,
        p,
        &|d| wf.matches(d),
        &|a, b| eq.relates(a, b),
        stats,
    )
}

pub fn eval_state_with_hooks(
    m: &StateMachine,
    state: &IrState,
    g: &ScopeGraph,
    p: &ResolutionPath,
    wf: &dyn Fn(&Datum) -> bool,
    eq: &dyn Fn(&Datum, &Datum) -> bool,
    stats: &mut ResolveStats,
) -> Result<Env, MachineError> {
    stats.scopes_visited += 1;
    let mut store = EvalStore::new();
    let mut last = Env::new();
    for (var, expr) in state.assignments() {
        last = eval_expr_with_hooks(expr, &store, m, g, p, wf, eq, stats)?;
        store.insert(var.clone(), last.clone())?;
    }
    if state.is_empty() {
        return Err(MachineError::EmptyState);
    }
    Ok(last)
}

/// Runs a machine: validates it, then evaluates the initial state with the
/// start scope as zero-step path.
pub fn run_machine(
    m: &StateMachine,
    g: &ScopeGraph,
    start: &ScopeId,
    wf: &DataWf,
    eq: &DataEquiv,
) -> Result<(Env, ResolveStats), MachineError> {
    run_machine_with_hooks(m, g, start, &|d| wf.matches(d), &|a, b| eq.relates(a, b))
}

pub fn run_machine_with_hooks(
    m: &StateMachine,
    g: &ScopeGraph,
    start: &ScopeId,
    wf: &dyn Fn(&Datum) -> bool,
    eq: &dyn Fn(&Datum, &Datum) -> bool,
) -> Result<(Env, ResolveStats), MachineError> {
    let diags = validate_machine(m);
    if !diags.is_empty() {
        return Err(MachineError::Invalid(diags));
    }
    if !g.contains_scope(start) {
        return Err(MachineError::UnknownScope(start.as_str().to_string()));
    }
    let initial = m.initial().expect("validated non-empty");
    let state = m.get(initial).expect("initial state is declared");
    let mut stats = ResolveStats::default();
    let env = eval_state_with_hooks(
        m,
        state,
        g,
        &ResolutionPath::new(start.clone()),
        wf,
        eq,
        &mut stats,
    )?;
    Ok((env, stats))
}

/// Prints the textual form; `parse_machine` reads it back.
pub fn print_machine(m: &StateMachine) -> String {
    let mut out = String::from("state machine\n");
    for (name, state) in m.states() {
        out.push_str(&format!("  {name}:\n"));
        for (var, expr) in state.assignments() {
            out.push_str(&format!("    {var} := {expr}\n"));
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct MachineParseError {
    pub line: usize,
    pub message: String,
}

fn parse_err(line: usize, message: impl Into<String>) -> MachineParseError {
    MachineParseError {
        line,
        message: message.into(),
    }
}

/// Parses the textual machine format. Indentation is free-form: a line
/// ending in `:` opens a state, any other non-blank line is an assignment.
pub fn parse_machine(text: &str) -> Result<StateMachine, MachineParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (header_line, header) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| parse_err(1, "empty input, expected `state machine`"))?;
    if header != "state machine" {
        return Err(parse_err(
            header_line,
            format!("expected `state machine`, got `{header}`"),
        ));
    }

    let mut states: Vec<(StateName, IrState)> = Vec::new();
    let mut current: Option<(StateName, Vec<(Var, IrExpr)>)> = None;
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_suffix(':') {
            let name = name.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(parse_err(lineno, "state name must be a single identifier"));
            }
            if let Some((n, assigns)) = current.take() {
                states.push((n, IrState::new(assigns)));
            }
            current = Some((StateName::new(name), Vec::new()));
        } else {
            let (_, assigns) = current
                .as_mut()
                .ok_or_else(|| parse_err(lineno, "assignment before any state header"))?;
            assigns.push(parse_assignment(line, lineno)?);
        }
    }
    if let Some((n, assigns)) = current.take() {
        states.push((n, IrState::new(assigns)));
    }
    if states.is_empty() {
        return Err(parse_err(1, "machine has no states"));
    }
    Ok(StateMachine::new(states))
}

fn parse_assignment(line: &str, lineno: usize) -> Result<(Var, IrExpr), MachineParseError> {
    let (lhs, rhs) = line
        .split_once(":=")
        .ok_or_else(|| parse_err(lineno, format!("expected `var := expr`, got `{line}`")))?;
    let var = lhs.trim();
    if var.is_empty() || var.contains(char::is_whitespace) {
        return Err(parse_err(
            lineno,
            "assignment target must be a single identifier",
        ));
    }
    let tokens: Vec<String> = tokenize_expr(rhs);
    let (expr, used) = parse_expr(&tokens, 0, lineno)?;
    if used != tokens.len() {
        return Err(parse_err(
            lineno,
            format!(
                "trailing tokens after expression: `{}`",
                tokens[used..].join(" ")
            ),
        ));
    }
    Ok((Var::new(var), expr))
}

fn tokenize_expr(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_expr(
    tokens: &[String],
    at: usize,
    lineno: usize,
) -> Result<(IrExpr, usize), MachineParseError> {
    let head = tokens
        .get(at)
        .ok_or_else(|| parse_err(lineno, "expected an expression"))?;
    match head.as_str() {
        "resolve" => Ok((IrExpr::Resolve, at + 1)),
        "subenv" => {
            let label = tokens
                .get(at + 1)
                .ok_or_else(|| parse_err(lineno, "subenv needs a label"))?;
            let state = tokens
                .get(at + 2)
                .ok_or_else(|| parse_err(lineno, "subenv needs a target state"))?;
            let label = Label::new(label.clone())
                .map_err(|e: LabelError| parse_err(lineno, e.to_string()))?;
            Ok((IrExpr::subenv(label, StateName::new(state.clone())), at + 3))
        }
        "merge" => {
            let mut vars = Vec::new();
            let mut i = at + 1;
            while let Some(tok) = tokens.get(i) {
                if tok == "(" || tok == ")" {
                    break;
                }
                vars.push(Var::new(tok.clone()));
                i += 1;
            }
            Ok((IrExpr::Merge(vars), i))
        }
        "shadow" => {
            let a = tokens
                .get(at + 1)
                .ok_or_else(|| parse_err(lineno, "shadow needs two variables"))?;
            let b = tokens
                .get(at + 2)
                .ok_or_else(|| parse_err(lineno, "shadow needs two variables"))?;
            Ok((
                IrExpr::Shadow(Var::new(a.clone()), Var::new(b.clone())),
                at + 3,
            ))
        }
        "else" => {
            let v = tokens
                .get(at + 1)
                .ok_or_else(|| parse_err(lineno, "else needs a variable"))?;
            if tokens.get(at + 2).map(String::as_str) != Some("(") {
                return Err(parse_err(lineno, "else needs a parenthesized fallback"));
            }
            let (fallback, next) = parse_expr(tokens, at + 3, lineno)?;
            if matches!(fallback, IrExpr::Else(..)) {
                return Err(parse_err(lineno, "else cannot nest inside else"));
            }
            if tokens.get(next).map(String::as_str) != Some(")") {
                return Err(parse_err(lineno, "unclosed `(` in else fallback"));
            }
            Ok((
                IrExpr::Else(Var::new(v.clone()), Box::new(fallback)),
                next + 1,
            ))
        }
        other => Err(parse_err(
            lineno,
            format!("expected resolve/subenv/merge/shadow/else, got `{other}`"),
        )),
    }
}

/// Renames states to `n0, n1, ...` in listing order and, per state,
/// variables to `e0, e1, ...` in definition order. Two machines are
/// α-equivalent exactly when their canonical renamings are equal.
pub fn rename_canonical(m: &StateMachine) -> StateMachine {
    let state_map: BTreeMap<StateName, StateName> = m
        .states()
        .iter()
        .enumerate()
        .map(|(i, (n, _))| (n.clone(), StateName::new(format!("n{i}"))))
        .collect();
    let states = m
        .states()
        .iter()
        .map(|(name, state)| {
            let mut var_map: BTreeMap<Var, Var> = BTreeMap::new();
            let assignments = state
                .assignments()
                .iter()
                .map(|(var, expr)| {
                    let expr = rename_expr(expr, &var_map, &state_map);
                    let fresh = Var::new(format!("e{}", var_map.len()));
                    var_map.insert(var.clone(), fresh.clone());
                    (fresh, expr)
                })
                .collect();
            (state_map[name].clone(), IrState::new(assignments))
        })
        .collect();
    StateMachine::new(states)
}

fn rename_expr(
    expr: &IrExpr,
    vars: &BTreeMap<Var, Var>,
    states: &BTreeMap<StateName, StateName>,
) -> IrExpr {
    let v = |x: &Var| vars.get(x).cloned().unwrap_or_else(|| x.clone());
    match expr {
        IrExpr::Resolve => IrExpr::Resolve,
        IrExpr::Subenv { label, state } => IrExpr::Subenv {
            label: label.clone(),
            state: states.get(state).cloned().unwrap_or_else(|| state.clone()),
        },
        IrExpr::Merge(xs) => IrExpr::Merge(xs.iter().map(v).collect()),
        IrExpr::Shadow(a, b) => IrExpr::Shadow(v(a), v(b)),
        IrExpr::Else(x, fallback) => {
            IrExpr::Else(v(x), Box::new(rename_expr(fallback, vars, states)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{lbl, lm_graph, pcf_graph, sid};

    fn var(s: &str) -> Var {
        Var::new(s)
    }

    fn st(s: &str) -> StateName {
        StateName::new(s)
    }

    fn path(start: &str, steps: &[(&str, &str)]) -> ResolutionPath {
        let mut p = ResolutionPath::new(sid(start));
        for (l, s) in steps {
            p = p.append(lbl(l), sid(s)).unwrap();
        }
        p
    }

    /// The first compiled-query example: traverse one L edge, then resolve.
    fn two_state_machine() -> StateMachine {
        StateMachine::new(vec![
            (
                st("n0"),
                IrState::new(vec![(var("e0"), IrExpr::subenv(lbl("L"), st("n1")))]),
            ),
            (st("n1"), IrState::new(vec![(var("e0"), IrExpr::Resolve)])),
        ])
    }

    #[test]
    fn exp_resolve_matches_wf() {
        let g = lm_graph();
        let m = two_state_machine();
        let p = path("sE", &[("I", "sC"), ("VAR", "s2")]);
        let mut stats = ResolveStats::default();
        let env = eval_expr(
            &IrExpr::Resolve,
            &EvalStore::new(),
            &m,
            &g,
            &p,
            &DataWf::name_eq("x"),
            &DataEquiv::AlwaysTrue,
            &mut stats,
        )
        .unwrap();
        assert_eq!(env, Env::singleton(p.clone()));

        let env = eval_expr(
            &IrExpr::Resolve,
            &EvalStore::new(),
            &m,
            &g,
            &p,
            &DataWf::name_eq("y"),
            &DataEquiv::AlwaysTrue,
            &mut stats,
        )
        .unwrap();
        assert!(env.is_empty());
    }

    #[test]
    fn exp_merge_unions_store_values() {
        let g = lm_graph();
        let m = two_state_machine();
        let p1 = path("sE", &[("VAR", "sy")]);
        let p2 = path("sE", &[("I", "sC")]);
        let mut store = EvalStore::new();
        store.insert(var("a"), Env::singleton(p1.clone())).unwrap();
        store.insert(var("b"), Env::singleton(p2.clone())).unwrap();
        let mut stats = ResolveStats::default();
        let env = eval_expr(
            &IrExpr::Merge(vec![var("a"), var("b")]),
            &store,
            &m,
            &g,
            &ResolutionPath::new(sid("sE")),
            &DataWf::Any,
            &DataEquiv::AlwaysTrue,
            &mut stats,
        )
        .unwrap();
        assert_eq!(env, [p1, p2].into_iter().collect());

        // Empty merge is the empty environment.
        let env = eval_expr(
            &IrExpr::Merge(vec![]),
            &store,
            &m,
            &g,
            &ResolutionPath::new(sid("sE")),
            &DataWf::Any,
            &DataEquiv::AlwaysTrue,
            &mut stats,
        )
        .unwrap();
        assert!(env.is_empty());
    }

    #[test]
    fn exp_shadow_filters_by_equivalence() {
        let g = lm_graph();
        let m = two_state_machine();
        let winner = path("sE", &[("I", "sC"), ("VAR", "s2")]); // datum x
        let equal = path("sE", &[("P", "sD"), ("VAR", "s3")]); // datum x
        let other = path("sE", &[("VAR", "sy")]); // datum y
        let mut store = EvalStore::new();
        store
            .insert(var("a"), Env::singleton(winner.clone()))
            .unwrap();
        store
            .insert(
                var("b"),
                [equal.clone(), other.clone()].into_iter().collect(),
            )
            .unwrap();
        let mut stats = ResolveStats::default();
        let env = eval_expr(
            &IrExpr::Shadow(var("a"), var("b")),
            &store,
            &m,
            &g,
            &ResolutionPath::new(sid("sE")),
            &DataWf::Any,
            &DataEquiv::SameName,
            &mut stats,
        )
        .unwrap();
        assert_eq!(env, [winner, other].into_iter().collect());
        assert_eq!(stats.shadow_calls, 1);
    }

    #[test]
    fn exp_subenv_launches_residuals_with_cycle_guard() {
        // a -L-> b and b -L-> a: from the path [a], only the edge to b is
        // taken, and from [a, b] the back-edge is skipped.
        use crate::scope_graph::{Edge, ScopeGraph};
        let g = ScopeGraph::new(
            vec![sid("a"), sid("b")],
            vec![
                Edge::new(sid("a"), lbl("L"), sid("b")),
                Edge::new(sid("b"), lbl("L"), sid("a")),
            ],
            Default::default(),
        )
        .unwrap();
        let m = StateMachine::new(vec![(
            st("n0"),
            IrState::new(vec![
                (var("e0"), IrExpr::Resolve),
                (var("e1"), IrExpr::subenv(lbl("L"), st("n0"))),
                (var("e2"), IrExpr::Merge(vec![var("e0"), var("e1")])),
            ]),
        )]);
        let (env, stats) =
            run_machine(&m, &g, &sid("a"), &DataWf::Any, &DataEquiv::AlwaysTrue).unwrap();
        assert_eq!(
            env,
            [path("a", &[]), path("a", &[("L", "b")])]
                .into_iter()
                .collect()
        );
        assert_eq!(stats.edges_traversed, 1);
        assert_eq!(stats.derivative_count, 0);
        assert_eq!(stats.order_query_count, 0);
    }

    #[test]
    fn exp_else_short_circuits_without_traversal() {
        let g = lm_graph();
        let m = two_state_machine();
        let p = path("sE", &[]);
        let local = path("sE", &[("VAR", "sy")]);
        let mut store = EvalStore::new();
        store
            .insert(var("a"), Env::singleton(local.clone()))
            .unwrap();
        let mut stats = ResolveStats::default();
        let else_expr = IrExpr::Else(var("a"), Box::new(IrExpr::subenv(lbl("VAR"), st("n1"))));
        let env = eval_expr(
            &else_expr,
            &store,
            &m,
            &g,
            &p,
            &DataWf::Any,
            &DataEquiv::AlwaysTrue,
            &mut stats,
        )
        .unwrap();
        assert_eq!(env, Env::singleton(local));
        assert_eq!(stats.edges_traversed, 0, "fallback must not be evaluated");

        // With an empty store value the fallback runs.
        let mut store = EvalStore::new();
        store.insert(var("a"), Env::new()).unwrap();
        let env = eval_expr(
            &else_expr,
            &store,
            &m,
            &g,
            &p,
            &DataWf::Any,
            &DataEquiv::AlwaysTrue,
            &mut stats,
        )
        .unwrap();
        assert!(stats.edges_traversed > 0);
        assert!(!env.is_empty());
    }

    #[test]
    fn merge_and_shadow_states_on_a_chain() {
        // a -L-> b, both scopes declared: the merge combination keeps both
        // paths, the shadow combination keeps only the local one.
        use crate::scope_graph::{Edge, ScopeGraph};
        let g = ScopeGraph::new(
            vec![sid("a"), sid("b")],
            vec![Edge::new(sid("a"), lbl("L"), sid("b"))],
            [(sid("a"), Datum::atom("d")), (sid("b"), Datum::atom("d"))]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let state = |combine: &str| {
            parse_machine(&format!(
                "state machine\n n0:\n  e0 := resolve\n  e1 := subenv L n0\n  e2 := {combine} e0 e1\n"
            ))
            .unwrap()
        };

        let (env, _) = run_machine(
            &state("merge"),
            &g,
            &sid("a"),
            &DataWf::Any,
            &DataEquiv::AlwaysTrue,
        )
        .unwrap();
        assert_eq!(
            env,
            [path("a", &[]), path("a", &[("L", "b")])]
                .into_iter()
                .collect()
        );

        let (env, _) = run_machine(
            &state("shadow"),
            &g,
            &sid("a"),
            &DataWf::Any,
            &DataEquiv::AlwaysTrue,
        )
        .unwrap();
        assert_eq!(env, Env::singleton(path("a", &[])));
    }

    #[test]
    fn eval_state_returns_last_assignment() {
        let g = lm_graph();
        let m = two_state_machine();
        let state = IrState::new(vec![(var("e0"), IrExpr::Resolve)]);
        let mut stats = ResolveStats::default();
        let env = eval_state(
            &m,
            &state,
            &g,
            &path("sE", &[]),
            &DataWf::name_eq("E"),
            &DataEquiv::AlwaysTrue,
            &mut stats,
        )
        .unwrap();
        assert_eq!(env, Env::singleton(path("sE", &[])));
    }

    #[test]
    fn run_machine_first_example_on_chain() {
        use crate::scope_graph::{Edge, ScopeGraph};
        let g = ScopeGraph::new(
            vec![sid("a"), sid("b")],
            vec![Edge::new(sid("a"), lbl("L"), sid("b"))],
            Default::default(),
        )
        .unwrap();
        let (env, _) = run_machine(
            &two_state_machine(),
            &g,
            &sid("a"),
            &DataWf::Any,
            &DataEquiv::AlwaysTrue,
        )
        .unwrap();
        assert_eq!(env, Env::singleton(path("a", &[("L", "b")])));
    }

    #[test]
    fn run_machine_trivial_resolve() {
        let g = pcf_graph();
        let m = StateMachine::new(vec![(
            st("n0"),
            IrState::new(vec![(var("e0"), IrExpr::Resolve)]),
        )]);
        let (env, stats) =
            run_machine(&m, &g, &sid("sl"), &DataWf::Any, &DataEquiv::AlwaysTrue).unwrap();
        assert_eq!(env, Env::singleton(path("sl", &[])));
        assert_eq!(stats.derivative_count, 0);
        assert_eq!(stats.order_query_count, 0);
    }

    #[test]
    fn run_machine_rejects_invalid_machines_and_scopes() {
        let g = pcf_graph();
        let bad = StateMachine::new(vec![(
            st("n0"),
            IrState::new(vec![(var("e0"), IrExpr::Merge(vec![var("missing")]))]),
        )]);
        assert!(matches!(
            run_machine(&bad, &g, &sid("sl"), &DataWf::Any, &DataEquiv::AlwaysTrue),
            Err(MachineError::Invalid(_))
        ));
        assert!(matches!(
            run_machine(
                &two_state_machine(),
                &g,
                &sid("nope"),
                &DataWf::Any,
                &DataEquiv::AlwaysTrue
            ),
            Err(MachineError::UnknownScope(_))
        ));
    }

    #[test]
    fn validate_reports_all_invariants() {
        let m = StateMachine::new(vec![(
            st("n0"),
            IrState::new(vec![
                (var("e0"), IrExpr::Merge(vec![var("e9")])),
                (var("e0"), IrExpr::subenv(lbl("L"), st("n7"))),
            ]),
        )]);
        let diags = validate_machine(&m);
        assert!(diags.iter().any(|d| d.contains("reads `e9`")));
        assert!(diags.iter().any(|d| d.contains("assigned twice")));
        assert!(diags.iter().any(|d| d.contains("undeclared state `n7`")));

        assert!(validate_machine(&two_state_machine()).is_empty());
    }

    #[test]
    fn parse_print_roundtrip_on_figure_text() {
        let text = "state machine\n  n0:\n    e0 := subenv L n1\n  n1:\n    e0 := resolve\n";
        let m = parse_machine(text).unwrap();
        assert_eq!(m, two_state_machine());
        assert_eq!(print_machine(&m), text);

        let shadow_text = "state machine\n  n0:\n    e0 := resolve\n    e1 := subenv L n0\n    e2 := shadow e0 e1\n";
        let m = parse_machine(shadow_text).unwrap();
        assert_eq!(print_machine(&m), shadow_text);

        let else_text =
            "state machine\n  n0:\n    e0 := resolve\n    e1 := else e0 (subenv L n0)\n";
        let m = parse_machine(else_text).unwrap();
        assert_eq!(print_machine(&m), else_text);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_machine("state machine\n  n0:\n    e0 = resolve\n").unwrap_err();
        assert_eq!(err.line, 3);
        let err = parse_machine("nope\n").unwrap_err();
        assert_eq!(err.line, 1);
        let err = parse_machine("state machine\n  n0:\n    e0 := else e0 (else e1 (resolve))\n")
            .unwrap_err();
        assert!(err.message.contains("nest"));
    }

    #[test]
    fn rename_canonical_gives_alpha_equivalence() {
        let a = parse_machine(
            "state machine\n  start:\n    x := subenv L done\n  done:\n    y := resolve\n",
        )
        .unwrap();
        assert_eq!(rename_canonical(&a), two_state_machine());
    }
}
