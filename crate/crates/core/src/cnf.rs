//! Core CNF types: literals, clauses, formulas, partial assignments, and the
//! operations on them (cofactor, resolution, QDIMACS parsing, DIMACS output).
//!
//! Variables are dense positive integers `1..=num_vars`. A clause is an
//! ordered set of literals (sorted by variable, no duplicate or complementary
//! literals) with a stable id that survives cofactoring, so a clause can be
//! tracked across subproblems. The empty clause is representable.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub type Var = u32;
pub type ClauseId = usize;
pub type VarSet = BTreeSet<Var>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("clause contains both polarities of variable {var}")]
    Tautology { var: Var },
    #[error("variable {var} out of range 1..={num_vars}")]
    VarOutOfRange { var: Var, num_vars: u32 },
    #[error("duplicate clause id {id}")]
    DuplicateClauseId { id: ClauseId },
    #[error("clauses do not clash exactly on variable {var}")]
    NotResolvable { var: Var },
    #[error("assignments conflict on variable {var}")]
    IncompatibleAssignments { var: Var },
    #[error("quantified variable {var} not among declared variables")]
    QuantifiedVarOutOfRange { var: Var },
}

/// A literal: a variable together with a polarity. Stored as a nonzero
/// DIMACS-style integer (positive = the variable, negative = its negation).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        debug_assert!(var > 0);
        Lit(if positive { var as i32 } else { -(var as i32) })
    }

    /// Parses a DIMACS literal code; returns `None` for the terminator 0.
    pub fn from_dimacs(code: i32) -> Option<Lit> {
        if code == 0 {
            None
        } else {
            Some(Lit(code))
        }
    }

    pub fn var(self) -> Var {
        self.0.unsigned_abs()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn negated(self) -> Lit {
        Lit(-self.0)
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    /// True if assigning `value` to this literal's variable satisfies it.
    pub fn satisfied_by(self, value: bool) -> bool {
        self.is_positive() == value
    }

    /// The variable value that falsifies this literal.
    pub fn falsifying_value(self) -> bool {
        !self.is_positive()
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A partial assignment: a set of (variable, value) bindings, at most one
/// value per variable. Kept sorted by variable for cheap set operations and
/// deterministic iteration.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Assignment {
    bindings: Vec<(Var, bool)>,
}

impl Assignment {
    pub fn empty() -> Assignment {
        Assignment::default()
    }

    pub fn single(var: Var, value: bool) -> Assignment {
        Assignment {
            bindings: vec![(var, value)],
        }
    }

    /// Builds an assignment from pairs; duplicate pairs collapse, conflicting
    /// values for the same variable are an error.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, bool)>) -> Result<Assignment, CnfError> {
        let mut bindings: Vec<(Var, bool)> = pairs.into_iter().collect();
        bindings.sort_unstable();
        bindings.dedup();
        for w in bindings.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(CnfError::IncompatibleAssignments { var: w[0].0 });
            }
        }
        Ok(Assignment { bindings })
    }

    pub fn value(&self, var: Var) -> Option<bool> {
        self.bindings
            .binary_search_by_key(&var, |&(v, _)| v)
            .ok()
            .map(|i| self.bindings[i].1)
    }

    pub fn assigns(&self, var: Var) -> bool {
        self.value(var).is_some()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, bool)> + '_ {
        self.bindings.iter().copied()
    }

    /// The assigned variables, ascending.
    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.bindings.iter().map(|&(v, _)| v)
    }

    pub fn var_set(&self) -> VarSet {
        self.vars().collect()
    }

    /// True if every binding of `self` also appears in `other`.
    pub fn is_subset_of(&self, other: &Assignment) -> bool {
        self.iter().all(|(v, b)| other.value(v) == Some(b))
    }

    /// True if no variable is assigned opposite values by the two assignments.
    pub fn is_compatible_with(&self, other: &Assignment) -> bool {
        self.iter()
            .all(|(v, b)| other.value(v).map_or(true, |ob| ob == b))
    }

    /// Union of two compatible assignments.
    pub fn union(&self, other: &Assignment) -> Result<Assignment, CnfError> {
        let mut bindings = self.bindings.clone();
        for (v, b) in other.iter() {
            match self.value(v) {
                Some(own) if own != b => return Err(CnfError::IncompatibleAssignments { var: v }),
                Some(_) => {}
                None => bindings.push((v, b)),
            }
        }
        bindings.sort_unstable();
        Ok(Assignment { bindings })
    }

    /// The sub-assignment over the given variables.
    pub fn restrict_to(&self, vars: &VarSet) -> Assignment {
        Assignment {
            bindings: self
                .bindings
                .iter()
                .copied()
                .filter(|(v, _)| vars.contains(v))
                .collect(),
        }
    }

    /// The variables on which the two assignments hold opposite values.
    pub fn clash_vars(&self, other: &Assignment) -> Vec<Var> {
        self.iter()
            .filter(|&(v, b)| other.value(v) == Some(!b))
            .map(|(v, _)| v)
            .collect()
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, b)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}={}", v, if b { 1 } else { 0 })?;
        }
        write!(f, "}}")
    }
}

/// Resolves two assignments that clash on exactly `var`: the union of both
/// minus their bindings of `var`. Mirrors clause resolution on the
/// falsifying-assignment side.
pub fn resolve_assignments(q1: &Assignment, q2: &Assignment, var: Var) -> Result<Assignment, CnfError> {
    let clashes = q1.clash_vars(q2);
    if clashes != [var] {
        return Err(CnfError::NotResolvable { var });
    }
    let bindings = q1
        .iter()
        .chain(q2.iter())
        .filter(|&(v, _)| v != var)
        .collect::<Vec<_>>();
    Assignment::from_pairs(bindings)
}

/// A clause: an ordered set of literals with a stable id. Construction sorts
/// by variable, drops duplicate literals, and rejects tautologies.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    id: ClauseId,
    lits: Vec<Lit>,
}

impl Clause {
    pub fn new(id: ClauseId, mut lits: Vec<Lit>) -> Result<Clause, CnfError> {
        lits.sort_unstable_by_key(|l| (l.var(), l.is_positive()));
        lits.dedup();
        for w in lits.windows(2) {
            if w[0].var() == w[1].var() {
                return Err(CnfError::Tautology { var: w[0].var() });
            }
        }
        Ok(Clause { id, lits })
    }

    /// Convenience constructor from DIMACS codes (no zero terminator).
    pub fn from_dimacs(id: ClauseId, codes: &[i32]) -> Result<Clause, CnfError> {
        let lits = codes
            .iter()
            .map(|&c| Lit::from_dimacs(c).expect("zero literal in clause body"))
            .collect();
        Clause::new(id, lits)
    }

    pub fn id(&self) -> ClauseId {
        self.id
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.lits.iter().map(|l| l.var())
    }

    pub fn contains_var(&self, var: Var) -> bool {
        self.lit_on(var).is_some()
    }

    /// The literal of this clause on `var`, if any.
    pub fn lit_on(&self, var: Var) -> Option<Lit> {
        self.lits
            .binary_search_by_key(&var, |l| l.var())
            .ok()
            .map(|i| self.lits[i])
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.lits
            .iter()
            .any(|l| a.value(l.var()).map_or(false, |v| l.satisfied_by(v)))
    }

    pub fn is_falsified_by(&self, a: &Assignment) -> bool {
        self.lits
            .iter()
            .all(|l| a.value(l.var()) == Some(l.falsifying_value()))
    }

    /// The smallest assignment falsifying this clause.
    pub fn falsifying_assignment(&self) -> Assignment {
        Assignment {
            bindings: self
                .lits
                .iter()
                .map(|l| (l.var(), l.falsifying_value()))
                .collect(),
        }
    }

    /// Evaluation against a dense value table indexed by variable.
    pub fn is_satisfied_by_values(&self, values: &[Option<bool>]) -> bool {
        self.lits
            .iter()
            .any(|l| values[l.var() as usize].map_or(false, |v| l.satisfied_by(v)))
    }

    pub fn same_literals(&self, other: &Clause) -> bool {
        self.lits == other.lits
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}(", self.id)?;
        for (i, l) in self.lits.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", l)?;
        }
        write!(f, ")")
    }
}

/// Resolves `c1` and `c2` on `var`. The clauses must clash on exactly that
/// variable; the resolvent gets the caller-chosen `new_id`.
pub fn resolve_clauses(c1: &Clause, c2: &Clause, var: Var, new_id: ClauseId) -> Result<Clause, CnfError> {
    let mut clash = 0u32;
    for l in c1.lits() {
        if let Some(o) = c2.lit_on(l.var()) {
            if o != *l {
                clash += 1;
                if l.var() != var {
                    return Err(CnfError::NotResolvable { var });
                }
            }
        }
    }
    if clash != 1 || c1.lit_on(var).is_none() {
        return Err(CnfError::NotResolvable { var });
    }
    let lits = c1
        .lits()
        .iter()
        .chain(c2.lits())
        .copied()
        .filter(|l| l.var() != var)
        .collect();
    Clause::new(new_id, lits)
}

/// A CNF formula: declared variable count plus a list of clauses with unique
/// ids. Clause ids are stable under cofactoring but need not be contiguous.
#[derive(Clone, PartialEq, Eq)]
pub struct Cnf {
    num_vars: u32,
    clauses: Vec<Clause>,
}

impl Cnf {
    pub fn new(num_vars: u32, clauses: Vec<Clause>) -> Result<Cnf, CnfError> {
        let mut seen = BTreeSet::new();
        for c in &clauses {
            for v in c.vars() {
                if v == 0 || v > num_vars {
                    return Err(CnfError::VarOutOfRange { var: v, num_vars });
                }
            }
            if !seen.insert(c.id()) {
                return Err(CnfError::DuplicateClauseId { id: c.id() });
            }
        }
        Ok(Cnf { num_vars, clauses })
    }

    pub fn empty(num_vars: u32) -> Cnf {
        Cnf {
            num_vars,
            clauses: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn clause_by_id(&self, id: ClauseId) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id() == id)
    }

    /// The variables actually occurring in clauses.
    pub fn vars_used(&self) -> VarSet {
        self.clauses.iter().flat_map(|c| c.vars()).collect()
    }

    /// The cofactor F|q: clauses satisfied by `q` are dropped, literals
    /// falsified by `q` are removed, clause ids are preserved.
    pub fn cofactor(&self, q: &Assignment) -> Cnf {
        let mut clauses = Vec::with_capacity(self.clauses.len());
        for c in &self.clauses {
            if c.is_satisfied_by(q) {
                continue;
            }
            let lits: Vec<Lit> = c
                .lits()
                .iter()
                .copied()
                .filter(|l| !q.assigns(l.var()))
                .collect();
            clauses.push(Clause { id: c.id(), lits });
        }
        Cnf {
            num_vars: self.num_vars,
            clauses,
        }
    }

    /// Ids of clauses containing at least one variable of `z`.
    pub fn z_clause_ids(&self, z: &VarSet) -> Vec<ClauseId> {
        self.clauses
            .iter()
            .filter(|c| c.vars().any(|v| z.contains(&v)))
            .map(|c| c.id())
            .collect()
    }

    /// The formula with every clause containing a variable of `z` removed.
    pub fn without_var_clauses(&self, z: &VarSet) -> Cnf {
        Cnf {
            num_vars: self.num_vars,
            clauses: self
                .clauses
                .iter()
                .filter(|c| !c.vars().any(|v| z.contains(&v)))
                .cloned()
                .collect(),
        }
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.is_satisfied_by(a))
    }
}

impl fmt::Debug for Cnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cnf(n={}, {:?})", self.num_vars, self.clauses)
    }
}

/// An existentially quantified CNF formula ∃X[F]. The free variables are the
/// declared variables outside X.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EcnfFormula {
    cnf: Cnf,
    quantified: VarSet,
}

impl EcnfFormula {
    pub fn new(cnf: Cnf, quantified: VarSet) -> Result<EcnfFormula, CnfError> {
        if let Some(&v) = quantified.iter().find(|&&v| v == 0 || v > cnf.num_vars()) {
            return Err(CnfError::QuantifiedVarOutOfRange { var: v });
        }
        Ok(EcnfFormula { cnf, quantified })
    }

    pub fn cnf(&self) -> &Cnf {
        &self.cnf
    }

    pub fn quantified(&self) -> &VarSet {
        &self.quantified
    }

    pub fn is_quantified(&self, var: Var) -> bool {
        self.quantified.contains(&var)
    }

    pub fn num_vars(&self) -> u32 {
        self.cnf.num_vars()
    }

    /// The free (non-quantified) declared variables, ascending.
    pub fn free_vars(&self) -> VarSet {
        (1..=self.cnf.num_vars())
            .filter(|v| !self.quantified.contains(v))
            .collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("expected `p cnf <vars> <clauses>` header before this line")]
    MissingHeader,
    #[error("malformed header")]
    BadHeader,
    #[error("universal quantifiers are not supported")]
    UniversalQuantifier,
    #[error("quantifier line after first clause")]
    QuantifierAfterClause,
    #[error("bad token `{0}`")]
    BadToken(String),
    #[error("literal {0} out of declared range")]
    LitOutOfRange(i64),
    #[error("clause line not terminated by 0")]
    UnterminatedClause,
    #[error("clause is tautological (variable {0} in both polarities)")]
    TautologicalClause(Var),
    #[error("duplicate header")]
    DuplicateHeader,
}

/// Parses the QDIMACS subset used by this crate: optional `c` comment lines,
/// one `p cnf <vars> <clauses>` header, zero or more `e <vars...> 0` lines
/// (before any clause), then one clause per line, each terminated by 0.
/// The header clause count is advisory and not checked.
pub fn parse_qdimacs(text: &str) -> Result<EcnfFormula, ParseError> {
    let mut num_vars: Option<u32> = None;
    let mut quantified = VarSet::new();
    let mut clauses: Vec<Clause> = Vec::new();

    let err = |line: usize, kind: ParseErrorKind| ParseError { line, kind };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            if num_vars.is_some() {
                return Err(err(line_no, ParseErrorKind::DuplicateHeader));
            }
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 3 || toks[0] != "cnf" {
                return Err(err(line_no, ParseErrorKind::BadHeader));
            }
            let n: u32 = toks[1]
                .parse()
                .map_err(|_| err(line_no, ParseErrorKind::BadHeader))?;
            let _m: u64 = toks[2]
                .parse()
                .map_err(|_| err(line_no, ParseErrorKind::BadHeader))?;
            num_vars = Some(n);
            continue;
        }
        let n = num_vars.ok_or_else(|| err(line_no, ParseErrorKind::MissingHeader))?;
        if line.starts_with('a') {
            return Err(err(line_no, ParseErrorKind::UniversalQuantifier));
        }
        if let Some(rest) = line.strip_prefix('e') {
            if !clauses.is_empty() {
                return Err(err(line_no, ParseErrorKind::QuantifierAfterClause));
            }
            let mut terminated = false;
            for tok in rest.split_whitespace() {
                let v: i64 = tok
                    .parse()
                    .map_err(|_| err(line_no, ParseErrorKind::BadToken(tok.to_string())))?;
                if v == 0 {
                    terminated = true;
                    break;
                }
                if v < 0 || v > n as i64 {
                    return Err(err(line_no, ParseErrorKind::LitOutOfRange(v)));
                }
                quantified.insert(v as Var);
            }
            if !terminated {
                return Err(err(line_no, ParseErrorKind::UnterminatedClause));
            }
            continue;
        }
        // Clause line.
        let mut lits: Vec<Lit> = Vec::new();
        let mut terminated = false;
        for tok in line.split_whitespace() {
            let code: i64 = tok
                .parse()
                .map_err(|_| err(line_no, ParseErrorKind::BadToken(tok.to_string())))?;
            if code == 0 {
                terminated = true;
                break;
            }
            if code.unsigned_abs() > n as u64 {
                return Err(err(line_no, ParseErrorKind::LitOutOfRange(code)));
            }
            lits.push(Lit::from_dimacs(code as i32).unwrap());
        }
        if !terminated {
            return Err(err(line_no, ParseErrorKind::UnterminatedClause));
        }
        let id = clauses.len();
        match Clause::new(id, lits) {
            Ok(c) => clauses.push(c),
            Err(CnfError::Tautology { var }) => {
                return Err(err(line_no, ParseErrorKind::TautologicalClause(var)))
            }
            Err(_) => unreachable!("clause construction only fails on tautology"),
        }
    }

    let n = num_vars.ok_or_else(|| err(text.lines().count().max(1), ParseErrorKind::MissingHeader))?;
    let cnf = Cnf::new(n, clauses).expect("parsed clauses are in range with unique ids");
    Ok(EcnfFormula::new(cnf, quantified).expect("quantified vars checked during parse"))
}

/// Plain DIMACS output for a CNF formula (quantifier-free).
pub fn emit_dimacs(f: &Cnf) -> String {
    let mut out = format!("p cnf {} {}\n", f.num_vars(), f.len());
    for c in f.clauses() {
        for l in c.lits() {
            out.push_str(&l.to_dimacs().to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}

/// QDIMACS output: header, one `e` line when X is nonempty, then clauses.
pub fn emit_qdimacs(phi: &EcnfFormula) -> String {
    let mut out = format!("p cnf {} {}\n", phi.num_vars(), phi.cnf().len());
    if !phi.quantified().is_empty() {
        out.push('e');
        for v in phi.quantified() {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push_str(" 0\n");
    }
    for c in phi.cnf().clauses() {
        for l in c.lits() {
            out.push_str(&l.to_dimacs().to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}
