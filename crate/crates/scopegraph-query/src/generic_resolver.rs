//! The generic query resolution algorithm, plus an independent brute-force
//! oracle for differential testing.
//!
//! Resolution walks the graph outward from the start scope. At every visited
//! path prefix it computes the set of path labels still admissible — the
//! head set of the residual regex, plus `$` when the residual accepts the
//! empty word — and traverses them in label-order layers: for each maximal
//! label, everything strictly smaller is resolved first and used to shadow
//! the results obtained over that label. Traversing an edge launches a
//! residual query with the Brzozowski derivative of the current regex.
//!
//! All of the derivative and order computations happen per visited scope,
//! every time; that is what makes this resolver "generic", and what the
//! [`crate::specializer`] lifts to compile time. [`ResolveStats`] counts
//! them so the difference is observable.
//!
//! The brute-force oracle takes the long way around: enumerate every acyclic
//! path whose word is in the regex language (checked by structural
//! membership, not derivatives), filter by data well-formedness, then apply
//! pairwise shadowing via the prefix order on paths ([`path_less`]). It
//! shares no environment logic with the resolver, which is the point.

use serde::Serialize;
use thiserror::Error;

use std::collections::BTreeSet;

use crate::label_regex::{Label, LabelRegEx, PathLabel};
use crate::query_model::{LabelOrder, Query};
use crate::scope_graph::{Datum, Env, ResolutionPath, ScopeGraph, ScopeId};

/// Instrumentation counters for one resolution run.
///
/// `derivative_count` and `order_query_count` are the costs specialization
/// removes; a compiled state machine reports zero for both, structurally.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ResolveStats {
    /// Brzozowski derivatives computed (head-set probes and edge
    /// traversals).
    pub derivative_count: u64,
    /// `max`/`smaller` label-order evaluations.
    pub order_query_count: u64,
    /// Path prefixes whose label sets were examined.
    pub scopes_visited: u64,
    /// Shadow operations applied.
    pub shadow_calls: u64,
    /// Residual queries launched over an edge.
    pub edges_traversed: u64,
}

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("unknown start scope `{0}`")]
    UnknownStartScope(String),
    #[error("paths starting in `{0}` and `{1}` are incomparable")]
    DifferentStarts(String, String),
}

/// Resolves a query with the serializable predicate forms.
pub fn resolve(g: &ScopeGraph, q: &Query) -> Result<(Env, ResolveStats), ResolveError> {
    resolve_with_hooks(
        g,
        &q.start,
        &q.regex,
        &q.order,
        |d| q.wf.matches(d),
        |a, b| q.equiv.relates(a, b),
    )
}

/// Resolves with caller-supplied data well-formedness and data equivalence
/// predicates.
pub fn resolve_with_hooks(
    g: &ScopeGraph,
    start: &ScopeId,
    regex: &LabelRegEx,
    order: &LabelOrder,
    wf: impl Fn(&Datum) -> bool,
    equiv: impl Fn(&Datum, &Datum) -> bool,
) -> Result<(Env, ResolveStats), ResolveError> {
    if !g.contains_scope(start) {
        return Err(ResolveError::UnknownStartScope(start.as_str().to_string()));
    }
    let mut r = Resolver {
        graph: g,
        order,
        wf: &wf,
        equiv: &equiv,
        stats: ResolveStats::default(),
    };
    let env = r.resolve_all(&ResolutionPath::new(start.clone()), &regex.canonicalize());
    Ok((env, r.stats))
}

struct Resolver<'a> {
    graph: &'a ScopeGraph,
    order: &'a LabelOrder,
    wf: &'a dyn Fn(&Datum) -> bool,
    equiv: &'a dyn Fn(&Datum, &Datum) -> bool,
    stats: ResolveStats,
}

impl Resolver<'_> {
    /// Full environment of the path prefix `p` under residual regex `r`:
    /// the ordered environment of `head(r) ∪ { $ | ε ∈ L(r) }`.
    fn resolve_all(&mut self, p: &ResolutionPath, r: &LabelRegEx) -> Env {
        self.stats.scopes_visited += 1;
        let mut labels: BTreeSet<PathLabel> = BTreeSet::new();
        for l in r.labels() {
            self.stats.derivative_count += 1;
            if r.derive(&l) != LabelRegEx::Empty {
                labels.insert(PathLabel::Edge(l));
            }
        }
        if r.nullable() {
            labels.insert(PathLabel::End);
        }
        self.resolve_label_set(p, &labels, r)
    }

    /// Environment of a label set, shadowed according to the order: the
    /// union, over maximal labels, of that label's environment shadowed by
    /// the environment of its smaller set.
    fn resolve_label_set(
        &mut self,
        p: &ResolutionPath,
        labels: &BTreeSet<PathLabel>,
        r: &LabelRegEx,
    ) -> Env {
        self.stats.order_query_count += 1;
        let maxes = self.order.max_set(labels);
        let mut acc = Env::new();
        for max_label in &maxes {
            self.stats.order_query_count += 1;
            let smaller = self.order.smaller_set(labels, max_label);
            // Recomputed per maximal label, never memoized; this shared work
            // is what common-sub-environment elimination recovers after
            // specialization.
            let shadowing = self.resolve_label_set(p, &smaller, r);
            let shadowed = self.resolve_path_label(p, max_label, r);
            self.stats.shadow_calls += 1;
            acc.extend(shadow(self.graph, &shadowing, &shadowed, self.equiv));
        }
        acc
    }

    fn resolve_path_label(&mut self, p: &ResolutionPath, l: &PathLabel, r: &LabelRegEx) -> Env {
        match l {
            PathLabel::End => self.resolve_end_of_path(p),
            PathLabel::Edge(l) => self.resolve_edge_label(p, l, r),
        }
    }

    /// `{p}` when the datum at the end of the path is well-formed, else ∅.
    fn resolve_end_of_path(&mut self, p: &ResolutionPath) -> Env {
        let datum = self
            .graph
            .datum_of(p.target())
            .expect("path targets are graph scopes");
        if (self.wf)(datum) {
            Env::singleton(p.clone())
        } else {
            Env::new()
        }
    }

    /// Residual queries over every non-cyclic `l`-edge out of the path
    /// target, each with the derivative of `r`.
    fn resolve_edge_label(&mut self, p: &ResolutionPath, l: &Label, r: &LabelRegEx) -> Env {
        let targets: Vec<ScopeId> = self
            .graph
            .get_edges(p.target(), l)
            .expect("path targets are graph scopes")
            .cloned()
            .collect();
        let mut acc = Env::new();
        for next in targets {
            if p.contains_scope(&next) {
                continue;
            }
            self.stats.edges_traversed += 1;
            self.stats.derivative_count += 1;
            let residual = r.derive(l);
            let extended = p.append(l.clone(), next).expect("cycle checked above");
            acc.extend(self.resolve_all(&extended, &residual));
        }
        acc
    }
}

/// `shadowing ∪ { p ∈ shadowed | no p' in `shadowing` has an equivalent
/// target datum }`: paths over smaller labels win within their data group.
pub(crate) fn shadow(
    g: &ScopeGraph,
    shadowing: &Env,
    shadowed: &Env,
    equiv: &dyn Fn(&Datum, &Datum) -> bool,
) -> Env {
    let datum = |p: &ResolutionPath| {
        g.datum_of(p.target())
            .expect("path targets are graph scopes")
    };
    let mut out = shadowing.clone();
    for p in shadowed {
        let blocked = shadowing.iter().any(|w| equiv(datum(w), datum(p)));
        if !blocked {
            out.insert(p.clone());
        }
    }
    out
}

/// The prefix order on same-source paths: strip the longest common prefix of
/// steps, then compare the first diverging labels in the label order, where
/// an exhausted path contributes `$`.
///
/// With `$ < P`, a path is smaller than its own `P`-extension. Paths that
/// diverge on incomparable labels (or on the same label toward different
/// scopes) are unordered.
pub fn path_less(
    p1: &ResolutionPath,
    p2: &ResolutionPath,
    order: &LabelOrder,
) -> Result<bool, ResolveError> {
    if p1.source() != p2.source() {
        return Err(ResolveError::DifferentStarts(
            p1.source().as_str().to_string(),
            p2.source().as_str().to_string(),
        ));
    }
    let (s1, s2) = (p1.steps(), p2.steps());
    let mut i = 0;
    while i < s1.len() && i < s2.len() && s1[i] == s2[i] {
        i += 1;
    }
    let at = |steps: &[(Label, ScopeId)]| match steps.get(i) {
        Some((l, _)) => PathLabel::Edge(l.clone()),
        None => PathLabel::End,
    };
    Ok(order.lt(&at(s1), &at(s2)))
}

/// Brute-force resolution, used as the oracle in differential tests.
///
/// Enumerates every acyclic path from the start whose word the regex
/// accepts (structural membership; derivatives are used only to prune
/// extensions that can no longer reach the language), keeps the well-formed
/// ones, and removes every path that some kept path both precedes in the
/// prefix order and matches under the data equivalence.
pub fn brute_force_resolve(g: &ScopeGraph, q: &Query) -> Result<Env, ResolveError> {
    if !g.contains_scope(&q.start) {
        return Err(ResolveError::UnknownStartScope(
            q.start.as_str().to_string(),
        ));
    }

    let mut candidates: Vec<ResolutionPath> = Vec::new();
    let mut stack: Vec<(ResolutionPath, LabelRegEx)> =
        vec![(ResolutionPath::new(q.start.clone()), q.regex.clone())];
    while let Some((p, residual)) = stack.pop() {
        if q.regex.matches(&p.word()) {
            candidates.push(p.clone());
        }
        let out: Vec<(Label, ScopeId)> = g
            .out_edges(p.target())
            .expect("path targets are graph scopes")
            .map(|(l, s)| (l.clone(), s.clone()))
            .collect();
        for (l, next) in out {
            if p.contains_scope(&next) {
                continue;
            }
            let d = residual.derive(&l);
            if d == LabelRegEx::Empty {
                continue;
            }
            stack.push((p.append(l, next).expect("cycle checked above"), d));
        }
    }

    let datum = |p: &ResolutionPath| {
        g.datum_of(p.target())
            .expect("path targets are graph scopes")
    };
    let kept: Vec<ResolutionPath> = candidates
        .into_iter()
        .filter(|p| q.wf.matches(datum(p)))
        .collect();

    Ok(kept
        .iter()
        .filter(|p| {
            !kept.iter().any(|winner| {
                path_less(winner, p, &q.order).expect("same start by construction")
                    && q.equiv.relates(datum(winner), datum(p))
            })
        })
        .cloned()
        .collect())
}
