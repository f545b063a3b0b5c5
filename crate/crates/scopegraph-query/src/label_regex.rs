//! Regular expressions over edge labels, with Brzozowski derivatives.
//!
//! Path well-formedness conditions are regular expressions over the edge
//! labels of a scope graph. Resolution needs three operations on them:
//! [`LabelRegEx::nullable`] (is the path walked so far already a full match),
//! [`LabelRegEx::derive`] (what must still be matched after traversing one
//! label), and [`LabelRegEx::head_set`] (which labels are worth traversing at
//! all). [`gen_states`] iterates derivatives to closure, yielding the finite
//! automaton that the specializer compiles queries against.
//!
//! Derivatives are kept canonical (see [`LabelRegEx::canonicalize`]) so the
//! closure is finite and so that the empty language is represented only by
//! the `Empty` constructor, which makes the head-set test a structural
//! comparison.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An edge label, e.g. `P`, `I`, `VAR`, `MOD`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Label(String);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelError {
    #[error("label must match [A-Za-z][A-Za-z0-9_]*, got `{0}`")]
    Invalid(String),
}

impl Label {
    /// Labels are identifier atoms: `[A-Za-z][A-Za-z0-9_]*`. The end-of-path
    /// token `$` is not a label (see [`PathLabel`]).
    pub fn new(name: impl Into<String>) -> Result<Self, LabelError> {
        let name = name.into();
        let mut chars = name.chars();
        let head_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic());
        let tail_ok = chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if head_ok && tail_ok {
            Ok(Label(name))
        } else {
            Err(LabelError::Invalid(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Label {
    type Error = LabelError;
    fn try_from(s: String) -> Result<Self, LabelError> {
        Label::new(s)
    }
}

impl From<Label> for String {
    fn from(l: Label) -> String {
        l.0
    }
}

impl FromStr for Label {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, LabelError> {
        Label::new(s)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A path label: an edge label, or the end-of-path marker `$`.
///
/// `$` participates in label orders (`$ < P` makes a scope shadow its own
/// lexical parents) but never occurs in a regex. `End` sorts before every
/// edge label, which fixes the iteration order wherever a set of path labels
/// is walked deterministically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PathLabel {
    End,
    Edge(Label),
}

impl PathLabel {
    pub fn parse(s: &str) -> Result<Self, LabelError> {
        if s == "$" {
            Ok(PathLabel::End)
        } else {
            Label::new(s).map(PathLabel::Edge)
        }
    }

    pub fn is_end(&self) -> bool {
        matches!(self, PathLabel::End)
    }
}

impl From<Label> for PathLabel {
    fn from(l: Label) -> Self {
        PathLabel::Edge(l)
    }
}

impl TryFrom<String> for PathLabel {
    type Error = LabelError;
    fn try_from(s: String) -> Result<Self, LabelError> {
        PathLabel::parse(&s)
    }
}

impl From<PathLabel> for String {
    fn from(l: PathLabel) -> String {
        l.to_string()
    }
}

impl fmt::Display for PathLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathLabel::End => f.write_str("$"),
            PathLabel::Edge(l) => write!(f, "{l}"),
        }
    }
}

/// A regular expression over edge labels.
///
/// The variant order defines the total structural order used to normalize
/// unions: `Empty < Epsilon < Lit < Star < Concat < Union < Question`.
/// `Question` never survives canonicalization (it rewrites to
/// `Union(Epsilon, _)`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelRegEx {
    /// The empty language.
    Empty,
    /// The language containing only the empty word.
    Epsilon,
    /// A single label.
    Lit(Label),
    /// Zero or more repetitions.
    Star(Box<LabelRegEx>),
    /// Juxtaposition.
    Concat(Box<LabelRegEx>, Box<LabelRegEx>),
    /// Alternation.
    Union(Box<LabelRegEx>, Box<LabelRegEx>),
    /// Zero or one; sugar for `Union(Epsilon, _)`.
    Question(Box<LabelRegEx>),
}

use LabelRegEx::*;

impl LabelRegEx {
    pub fn lit(l: Label) -> Self {
        Lit(l)
    }

    pub fn star(r: LabelRegEx) -> Self {
        Star(Box::new(r))
    }

    pub fn concat(a: LabelRegEx, b: LabelRegEx) -> Self {
        Concat(Box::new(a), Box::new(b))
    }

    pub fn union(a: LabelRegEx, b: LabelRegEx) -> Self {
        Union(Box::new(a), Box::new(b))
    }

    pub fn question(r: LabelRegEx) -> Self {
        Question(Box::new(r))
    }

    /// Whether the empty word is in the language.
    pub fn nullable(&self) -> bool {
        match self {
            Empty | Lit(_) => false,
            Epsilon | Star(_) | Question(_) => true,
            Concat(a, b) => a.nullable() && b.nullable(),
            Union(a, b) => a.nullable() || b.nullable(),
        }
    }

    /// The labels occurring syntactically in the regex.
    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut BTreeSet<Label>) {
        match self {
            Empty | Epsilon => {}
            Lit(l) => {
                out.insert(l.clone());
            }
            Star(r) | Question(r) => r.collect_labels(out),
            Concat(a, b) | Union(a, b) => {
                a.collect_labels(out);
                b.collect_labels(out);
            }
        }
    }

    /// The Brzozowski derivative with respect to `l`, canonicalized:
    /// the language of the result is `{ w | l·w ∈ L(self) }`.
    pub fn derive(&self, l: &Label) -> LabelRegEx {
        self.derive_raw(l).canonicalize()
    }

    fn derive_raw(&self, l: &Label) -> LabelRegEx {
        match self {
            Empty | Epsilon => Empty,
            Lit(a) => {
                if a == l {
                    Epsilon
                } else {
                    Empty
                }
            }
            Star(r) => Self::concat(r.derive_raw(l), Star(r.clone())),
            Concat(a, b) => {
                let left = Self::concat(a.derive_raw(l), (**b).clone());
                if a.nullable() {
                    Self::union(left, b.derive_raw(l))
                } else {
                    left
                }
            }
            Union(a, b) => Self::union(a.derive_raw(l), b.derive_raw(l)),
            Question(r) => r.derive_raw(l),
        }
    }

    /// Labels `l` with a non-empty derivative: exactly the labels some word
    /// of the language can start with, and hence the edges worth traversing.
    /// Only labels occurring in the regex are candidates; all others have the
    /// empty derivative.
    pub fn head_set(&self) -> BTreeSet<Label> {
        self.labels()
            .into_iter()
            .filter(|l| self.derive(l) != Empty)
            .collect()
    }

    /// Rewrites to the canonical form used for derivative-closure
    /// deduplication:
    ///
    /// * `Question(r)` becomes `Union(Epsilon, r)`;
    /// * unions are flattened, sorted by the structural order, de-duplicated,
    ///   and stripped of `Empty` operands (a union of nothing is `Empty`);
    /// * concatenations are right-associated, `Epsilon` units dropped, and
    ///   annihilated by `Empty`;
    /// * `Star(Empty)` and `Star(Epsilon)` become `Epsilon`, and nested stars
    ///   collapse.
    ///
    /// In the resulting form the only term denoting the empty language is
    /// `Empty` itself: literals, stars, and canonical unions/concats of
    /// non-empty languages are non-empty.
    pub fn canonicalize(&self) -> LabelRegEx {
        match self {
            Empty => Empty,
            Epsilon => Epsilon,
            Lit(l) => Lit(l.clone()),
            Star(r) => mk_star(r.canonicalize()),
            Concat(a, b) => mk_concat(a.canonicalize(), b.canonicalize()),
            Union(a, b) => {
                let mut parts = Vec::new();
                flatten_union(a.canonicalize(), &mut parts);
                flatten_union(b.canonicalize(), &mut parts);
                mk_union(parts)
            }
            Question(r) => {
                let mut parts = vec![Epsilon];
                flatten_union(r.canonicalize(), &mut parts);
                mk_union(parts)
            }
        }
    }

    /// Word membership, decided by structural recursion on the regex tree.
    ///
    /// Deliberately does not go through `derive`/`nullable`; the brute-force
    /// resolver and the property suites use this as an independent check on
    /// the derivative-based machinery.
    pub fn matches(&self, word: &[Label]) -> bool {
        match self {
            Empty => false,
            Epsilon => word.is_empty(),
            Lit(l) => word.len() == 1 && &word[0] == l,
            Star(r) => {
                word.is_empty()
                    || (1..=word.len()).any(|i| r.matches(&word[..i]) && self.matches(&word[i..]))
            }
            Concat(a, b) => {
                (0..=word.len()).any(|i| a.matches(&word[..i]) && b.matches(&word[i..]))
            }
            Union(a, b) => a.matches(word) || b.matches(word),
            Question(r) => word.is_empty() || r.matches(word),
        }
    }
}

fn mk_star(r: LabelRegEx) -> LabelRegEx {
    match r {
        Empty | Epsilon => Epsilon,
        Star(_) => r,
        _ => Star(Box::new(r)),
    }
}

fn mk_concat(a: LabelRegEx, b: LabelRegEx) -> LabelRegEx {
    let mut parts = Vec::new();
    flatten_concat(a, &mut parts);
    flatten_concat(b, &mut parts);
    if parts.contains(&Empty) {
        return Empty;
    }
    parts.retain(|p| *p != Epsilon);
    let mut iter = parts.into_iter().rev();
    match iter.next() {
        None => Epsilon,
        Some(last) => iter.fold(last, |acc, p| LabelRegEx::concat(p, acc)),
    }
}

fn flatten_concat(r: LabelRegEx, out: &mut Vec<LabelRegEx>) {
    match r {
        Concat(a, b) => {
            flatten_concat(*a, out);
            flatten_concat(*b, out);
        }
        other => out.push(other),
    }
}

fn flatten_union(r: LabelRegEx, out: &mut Vec<LabelRegEx>) {
    match r {
        Union(a, b) => {
            flatten_union(*a, out);
            flatten_union(*b, out);
        }
        other => out.push(other),
    }
}

fn mk_union(mut parts: Vec<LabelRegEx>) -> LabelRegEx {
    parts.retain(|p| *p != Empty);
    parts.sort();
    parts.dedup();
    let mut iter = parts.into_iter().rev();
    match iter.next() {
        None => Empty,
        Some(last) => iter.fold(last, |acc, p| LabelRegEx::union(p, acc)),
    }
}

impl fmt::Display for LabelRegEx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, 0, f)
    }
}

// Precedence: 0 union, 1 concat, 2 postfix.
fn fmt_prec(r: &LabelRegEx, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let own = match r {
        Empty | Epsilon | Lit(_) => 3,
        Star(_) | Question(_) => 2,
        Concat(..) => 1,
        Union(..) => 0,
    };
    if own < prec {
        f.write_str("(")?;
        fmt_prec(r, 0, f)?;
        return f.write_str(")");
    }
    match r {
        Empty => f.write_str("0"),
        Epsilon => f.write_str("e"),
        Lit(l) => write!(f, "{l}"),
        Star(inner) => {
            fmt_prec(inner, 3, f)?;
            f.write_str("*")
        }
        Question(inner) => {
            fmt_prec(inner, 3, f)?;
            f.write_str("?")
        }
        Concat(a, b) => {
            fmt_prec(a, 1, f)?;
            f.write_str(" ")?;
            fmt_prec(b, 2, f)
        }
        Union(a, b) => {
            fmt_prec(a, 1, f)?;
            f.write_str(" | ")?;
            fmt_prec(b, 1, f)
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("syntax error at byte {offset}: {message}")]
pub struct RegexParseError {
    pub offset: usize,
    pub message: String,
}

impl FromStr for LabelRegEx {
    type Err = RegexParseError;
    fn from_str(s: &str) -> Result<Self, RegexParseError> {
        parse_regex(s)
    }
}

/// Parses the textual regex grammar:
///
/// ```text
/// regex   := union
/// union   := concat ('|' concat)*
/// concat  := postfix+
/// postfix := atom ('*' | '?')*
/// atom    := LABEL | 'e' | '0' | '(' regex ')'
/// ```
///
/// `e` is epsilon and `0` the empty language; both are reserved and not
/// usable as labels. Whitespace separates tokens.
pub fn parse_regex(text: &str) -> Result<LabelRegEx, RegexParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let r = p.union()?;
    match p.peek() {
        None => Ok(r),
        Some((off, t)) => Err(RegexParseError {
            offset: off,
            message: format!("unexpected `{t}`"),
        }),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Label(String),
    Epsilon,
    EmptySet,
    Pipe,
    Star,
    Question,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Label(s) => f.write_str(s),
            Tok::Epsilon => f.write_str("e"),
            Tok::EmptySet => f.write_str("0"),
            Tok::Pipe => f.write_str("|"),
            Tok::Star => f.write_str("*"),
            Tok::Question => f.write_str("?"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, RegexParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            c if c.is_ascii_whitespace() => i += 1,
            '|' => {
                out.push((i, Tok::Pipe));
                i += 1;
            }
            '*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            '?' => {
                out.push((i, Tok::Question));
                i += 1;
            }
            '(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = match word {
                    "e" => Tok::Epsilon,
                    _ => Tok::Label(word.to_string()),
                };
                out.push((start, tok));
            }
            '0' => {
                out.push((i, Tok::EmptySet));
                i += 1;
            }
            _ => {
                return Err(RegexParseError {
                    offset: i,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<(usize, &Tok)> {
        self.tokens.get(self.pos).map(|(o, t)| (*o, t))
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn end_offset(&self) -> usize {
        self.tokens
            .last()
            .map(|(o, t)| o + t.to_string().len())
            .unwrap_or(0)
    }

    fn union(&mut self) -> Result<LabelRegEx, RegexParseError> {
        let mut r = self.concat()?;
        while matches!(self.peek(), Some((_, Tok::Pipe))) {
            self.bump();
            r = LabelRegEx::union(r, self.concat()?);
        }
        Ok(r)
    }

    fn concat(&mut self) -> Result<LabelRegEx, RegexParseError> {
        let mut r = self.postfix()?;
        while matches!(
            self.peek(),
            Some((
                _,
                Tok::Label(_) | Tok::Epsilon | Tok::EmptySet | Tok::LParen
            ))
        ) {
            r = LabelRegEx::concat(r, self.postfix()?);
        }
        Ok(r)
    }

    fn postfix(&mut self) -> Result<LabelRegEx, RegexParseError> {
        let mut r = self.atom()?;
        loop {
            match self.peek() {
                Some((_, Tok::Star)) => {
                    self.bump();
                    r = LabelRegEx::star(r);
                }
                Some((_, Tok::Question)) => {
                    self.bump();
                    r = LabelRegEx::question(r);
                }
                _ => return Ok(r),
            }
        }
    }

    fn atom(&mut self) -> Result<LabelRegEx, RegexParseError> {
        match self.bump() {
            Some((_, Tok::Label(name))) => {
                // Tokenizer guarantees the shape, so this cannot fail.
                Ok(Lit(Label::new(name).expect("tokenized label")))
            }
            Some((_, Tok::Epsilon)) => Ok(Epsilon),
            Some((_, Tok::EmptySet)) => Ok(Empty),
            Some((_, Tok::LParen)) => {
                let r = self.union()?;
                match self.bump() {
                    Some((_, Tok::RParen)) => Ok(r),
                    Some((off, t)) => Err(RegexParseError {
                        offset: off,
                        message: format!("expected `)`, got `{t}`"),
                    }),
                    None => Err(RegexParseError {
                        offset: self.end_offset(),
                        message: "expected `)`".to_string(),
                    }),
                }
            }
            Some((off, t)) => Err(RegexParseError {
                offset: off,
                message: format!("expected a label, `e`, `0`, or `(`, got `{t}`"),
            }),
            None => Err(RegexParseError {
                offset: self.end_offset(),
                message: "unexpected end of input".to_string(),
            }),
        }
    }
}

/// One state of the derivative automaton of a regex.
///
/// `transitions` is defined for exactly the head set of `regex`, and the
/// state reached over `l` carries `regex.derive(l)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DfaState {
    pub name: String,
    pub regex: LabelRegEx,
    pub transitions: BTreeMap<Label, String>,
}

/// Expands a regex into the list of its canonical derivatives and the
/// transitions between them.
///
/// Element 0 is the canonicalized input. States are de-duplicated by
/// canonical-regex equality and named `n0`, `n1`, ... in breadth-first
/// discovery order (neighbors visited in label order), so identical input
/// yields an identical listing. States with the `Empty` regex are never
/// created: transitions only follow the head set.
pub fn gen_states(r: &LabelRegEx) -> Vec<DfaState> {
    let start = r.canonicalize();
    let mut regexes: Vec<LabelRegEx> = vec![start.clone()];
    let mut transitions: Vec<BTreeMap<Label, usize>> = vec![BTreeMap::new()];
    let mut index: BTreeMap<LabelRegEx, usize> = BTreeMap::new();
    index.insert(start, 0);
    let mut queue: VecDeque<usize> = VecDeque::from([0]);

    while let Some(i) = queue.pop_front() {
        let re = regexes[i].clone();
        for l in re.head_set() {
            let d = re.derive(&l);
            let j = match index.get(&d) {
                Some(&j) => j,
                None => {
                    let j = regexes.len();
                    index.insert(d.clone(), j);
                    regexes.push(d);
                    transitions.push(BTreeMap::new());
                    queue.push_back(j);
                    j
                }
            };
            transitions[i].insert(l, j);
        }
    }

    regexes
        .into_iter()
        .zip(transitions)
        .enumerate()
        .map(|(i, (regex, trans))| DfaState {
            name: format!("n{i}"),
            regex,
            transitions: trans
                .into_iter()
                .map(|(l, j)| (l, format!("n{j}")))
                .collect(),
        })
        .collect()
}
