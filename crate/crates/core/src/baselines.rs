//! Reference quantifier eliminators used to cross-check the main engine and
//! to anchor benchmark comparisons.
//!
//! Three algorithms, in increasing order of sophistication:
//!
//! * [`dp_resolution_qe`]: Davis-Putnam variable elimination. Each quantified
//!   variable is resolved away in a caller-chosen order; clause growth is the
//!   known failure mode, so a clause cap guards it.
//! * [`enum_sa_qe`]: enumerates satisfying assignments with a small DPLL
//!   search, records the projection of each model onto the free variables,
//!   and emits the complement of the recorded projections as CNF. Exponential
//!   in the number of distinct projections by construction.
//! * [`qe_gbl_qe`]: eliminates one variable at a time by scanning for
//!   removable boundary points and adding a resolvent falsified by each, then
//!   dropping the variable's clauses once no such point remains. Global
//!   (point-driven) where the main engine is local, hence scan-budget-bound.
//!
//! All three return formulas over the free variables only and are checked
//! against the semantic oracle in tests.

use std::collections::HashSet;

use thiserror::Error;

use crate::cnf::{
    resolve_clauses, Clause, ClauseId, Cnf, CnfError, EcnfFormula, Lit, Var, VarSet,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("elimination order does not match the quantified variable set")]
    OrderMismatch,
    #[error("resolution produced more than {cap} clauses")]
    ClauseCapExceeded { cap: usize },
    #[error("more than {cap} distinct free-variable projections")]
    ModelCapExceeded { cap: u64 },
    #[error("complement over {y_vars} free variables exceeds the table limit {max}")]
    TableTooLarge { y_vars: usize, max: u32 },
    #[error("point scan over {vars} variables exceeds the budget {max}")]
    ScanBudgetExceeded { vars: usize, max: u32 },
    #[error("variable {var} is not quantified")]
    NotQuantified { var: Var },
}

/// Limits for [`dp_resolution_qe`].
#[derive(Debug, Clone)]
pub struct DpConfig {
    /// Maximum number of live clauses at any point during elimination.
    pub clause_cap: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig { clause_cap: 200_000 }
    }
}

/// Davis-Putnam elimination: for each quantified variable in `order`, adds
/// every non-tautological resolvent on it between current clauses, then
/// deletes all clauses containing it. The result mentions free variables
/// only. `order` must be a permutation of the quantified set.
pub fn dp_resolution_qe(
    phi: &EcnfFormula,
    order: &[Var],
    cfg: &DpConfig,
) -> Result<Cnf, BaselineError> {
    let order_set: VarSet = order.iter().copied().collect();
    if order_set != *phi.quantified() || order_set.len() != order.len() {
        return Err(BaselineError::OrderMismatch);
    }

    let mut working: Vec<Clause> = phi.cnf().clauses().to_vec();
    let mut seen: HashSet<Vec<Lit>> = working.iter().map(|c| c.lits().to_vec()).collect();
    let mut next_id: ClauseId = working.iter().map(|c| c.id() + 1).max().unwrap_or(0);

    let components = debug_components(phi.cnf());

    for &x in order {
        let (with_x, mut rest): (Vec<Clause>, Vec<Clause>) =
            working.into_iter().partition(|c| c.contains_var(x));
        let pos: Vec<&Clause> = with_x
            .iter()
            .filter(|c| c.lit_on(x) == Some(Lit::new(x, true)))
            .collect();
        let neg: Vec<&Clause> = with_x
            .iter()
            .filter(|c| c.lit_on(x) == Some(Lit::new(x, false)))
            .collect();
        for a in &pos {
            for b in &neg {
                let r = match resolve_clauses(a, b, x, next_id) {
                    Ok(r) => r,
                    // A second clashing variable would make the resolvent a
                    // tautology; those are dropped.
                    Err(CnfError::NotResolvable { .. }) => continue,
                    Err(e) => unreachable!("resolution on a shared variable: {e}"),
                };
                if seen.insert(r.lits().to_vec()) {
                    debug_assert!(
                        components.same_component(&r),
                        "resolvent {:?} spans input components",
                        r.lits()
                    );
                    rest.push(r);
                    next_id += 1;
                    if rest.len() > cfg.clause_cap {
                        return Err(BaselineError::ClauseCapExceeded { cap: cfg.clause_cap });
                    }
                }
            }
        }
        working = rest;
    }

    Ok(Cnf::new(phi.num_vars(), working).expect("ids stay unique and vars stay declared"))
}

/// Union-find over the variables of the input clauses, used to assert that
/// resolution never manufactures a clause spanning two variable-disjoint
/// components of the input.
struct DebugComponents {
    parent: Vec<u32>,
}

fn debug_components(f: &Cnf) -> DebugComponents {
    let mut dc = DebugComponents {
        parent: (0..=f.num_vars()).collect(),
    };
    for c in f.clauses() {
        let vars: Vec<Var> = c.vars().into_iter().collect();
        for w in vars.windows(2) {
            dc.union(w[0], w[1]);
        }
    }
    dc
}

impl DebugComponents {
    fn find(&self, v: Var) -> Var {
        let mut r = v;
        while self.parent[r as usize] != r {
            r = self.parent[r as usize];
        }
        r
    }

    fn union(&mut self, a: Var, b: Var) {
        let ra = self.find(a);
        let rb = self.find(b);
        self.parent[ra as usize] = rb;
    }

    fn same_component(&self, c: &Clause) -> bool {
        let vars: Vec<Var> = c.vars().into_iter().collect();
        match vars.split_first() {
            None => true,
            Some((&first, tail)) => {
                let root = self.find(first);
                tail.iter().all(|&v| self.find(v) == root)
            }
        }
    }
}

/// Limits and switches for [`enum_sa_qe`].
#[derive(Debug, Clone)]
pub struct EnumSaConfig {
    /// Maximum number of distinct free-variable projections to record.
    pub model_cap: u64,
    /// Whether to materialize the complement CNF (the count alone is cheaper).
    pub build_g: bool,
    /// Complement construction walks all 2^|Y| rows; refuse beyond this width.
    pub max_table_y: u32,
}

impl Default for EnumSaConfig {
    fn default() -> Self {
        EnumSaConfig {
            model_cap: 100_000,
            build_g: true,
            max_table_y: 24,
        }
    }
}

/// Outcome of [`enum_sa_qe`].
#[derive(Debug, Clone)]
pub struct EnumSaResult {
    /// Complement CNF over the free variables; `None` when `build_g` is off.
    pub g: Option<Cnf>,
    /// Number of distinct free-variable projections of models.
    pub models: u64,
}

/// Model enumeration: a DPLL search decides the free variables first; at each
/// full free-variable assignment that extends to a model of the matrix, the
/// projection is recorded. The answer is the CNF whose clauses exclude
/// exactly the unrecorded projections. Unsatisfiable input yields the empty
/// clause and zero models.
pub fn enum_sa_qe(phi: &EcnfFormula, cfg: &EnumSaConfig) -> Result<EnumSaResult, BaselineError> {
    let y_vars: Vec<Var> = phi.free_vars().into_iter().collect();
    let mut search = EnumSearch {
        clauses: phi.cnf().clauses(),
        values: vec![None; phi.num_vars() as usize + 1],
        trail: Vec::new(),
        y_vars: &y_vars,
        seen: HashSet::new(),
        cap: cfg.model_cap,
    };
    search.enumerate()?;

    let models = search.seen.len() as u64;
    let g = if !cfg.build_g {
        None
    } else if models == 0 {
        let empty = Clause::new(0, Vec::new()).expect("empty clause");
        Some(Cnf::new(phi.num_vars(), vec![empty]).expect("one clause, no vars"))
    } else {
        if y_vars.len() as u32 > cfg.max_table_y {
            return Err(BaselineError::TableTooLarge {
                y_vars: y_vars.len(),
                max: cfg.max_table_y,
            });
        }
        Some(complement_of_projections(
            phi.num_vars(),
            &y_vars,
            &search.seen,
        ))
    };
    Ok(EnumSaResult { g, models })
}

struct EnumSearch<'a> {
    clauses: &'a [Clause],
    values: Vec<Option<bool>>,
    trail: Vec<Var>,
    y_vars: &'a [Var],
    seen: HashSet<Vec<bool>>,
    cap: u64,
}

impl EnumSearch<'_> {
    fn assign(&mut self, v: Var, val: bool) {
        debug_assert!(self.values[v as usize].is_none());
        self.values[v as usize] = Some(val);
        self.trail.push(v);
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            self.values[v as usize] = None;
        }
    }

    /// Unit propagation to fixpoint. Returns false on a falsified clause.
    fn propagate(&mut self) -> bool {
        loop {
            let mut changed = false;
            for c in self.clauses {
                let mut unassigned = None;
                let mut sat = false;
                let mut open = 0;
                for l in c.lits() {
                    match self.values[l.var() as usize] {
                        Some(v) => {
                            if l.satisfied_by(v) {
                                sat = true;
                                break;
                            }
                        }
                        None => {
                            open += 1;
                            unassigned = Some(*l);
                        }
                    }
                }
                if sat {
                    continue;
                }
                match (open, unassigned) {
                    (0, _) => return false,
                    (1, Some(l)) => {
                        self.assign(l.var(), !l.falsifying_value());
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn first_unassigned_y(&self) -> Option<Var> {
        self.y_vars
            .iter()
            .copied()
            .find(|&v| self.values[v as usize].is_none())
    }

    fn first_unassigned(&self) -> Option<Var> {
        (1..self.values.len() as Var).find(|&v| self.values[v as usize].is_none())
    }

    fn enumerate(&mut self) -> Result<(), BaselineError> {
        let mark = self.trail.len();
        if !self.propagate() {
            self.undo_to(mark);
            return Ok(());
        }
        if let Some(y) = self.first_unassigned_y() {
            for val in [false, true] {
                let branch = self.trail.len();
                self.assign(y, val);
                let r = self.enumerate();
                self.undo_to(branch);
                r?;
            }
        } else {
            let proj: Vec<bool> = self
                .y_vars
                .iter()
                .map(|&v| self.values[v as usize].expect("all free variables decided"))
                .collect();
            if !self.seen.contains(&proj) && self.extends_to_model() {
                if self.seen.len() as u64 >= self.cap {
                    self.undo_to(mark);
                    return Err(BaselineError::ModelCapExceeded { cap: self.cap });
                }
                self.seen.insert(proj);
            }
        }
        self.undo_to(mark);
        Ok(())
    }

    /// Sub-search over the remaining (quantified) variables; true iff the
    /// current partial assignment extends to a model of the matrix.
    fn extends_to_model(&mut self) -> bool {
        let mark = self.trail.len();
        if !self.propagate() {
            self.undo_to(mark);
            return false;
        }
        let found = match self.first_unassigned() {
            // Total and conflict-free, hence every clause is satisfied.
            None => true,
            Some(v) => [false, true].into_iter().any(|val| {
                let branch = self.trail.len();
                self.assign(v, val);
                let r = self.extends_to_model();
                self.undo_to(branch);
                r
            }),
        };
        self.undo_to(mark);
        found
    }
}

/// The CNF over `y_vars` that is true exactly on the recorded projections:
/// one clause per unrecorded row, falsified only there.
fn complement_of_projections(num_vars: u32, y_vars: &[Var], seen: &HashSet<Vec<bool>>) -> Cnf {
    let mut clauses = Vec::new();
    let mut next_id: ClauseId = 0;
    let mut row = vec![false; y_vars.len()];
    loop {
        if !seen.contains(&row) {
            let lits = y_vars
                .iter()
                .zip(&row)
                .map(|(&v, &bit)| Lit::new(v, !bit))
                .collect();
            clauses.push(Clause::new(next_id, lits).expect("distinct variables"));
            next_id += 1;
        }
        // Binary increment over the row, most significant digit last.
        let mut i = 0;
        loop {
            if i == row.len() {
                return Cnf::new(num_vars, clauses).expect("ids unique, vars declared");
            }
            row[i] = !row[i];
            if row[i] {
                break;
            }
            i += 1;
        }
    }
}

/// Budget for [`qe_gbl_step`]'s exhaustive point scans.
#[derive(Debug, Clone)]
pub struct QeGblConfig {
    /// Scans enumerate all points over the occurring variables; refuse beyond
    /// this many.
    pub max_scan_vars: u32,
}

impl Default for QeGblConfig {
    fn default() -> Self {
        QeGblConfig { max_scan_vars: 20 }
    }
}

/// Eliminates the single quantified variable `x`: while a point exists whose
/// falsified clauses all contain `x` (an `{x}`-boundary point) and whose
/// `x`-flip also falsifies the formula (removable), add the resolvent on `x`
/// of the two falsified clauses, which is falsified at the point. When no
/// such point remains, `x`'s clauses are redundant and are dropped, and `x`
/// leaves the quantifier prefix.
pub fn qe_gbl_step(
    phi: &EcnfFormula,
    x: Var,
    cfg: &QeGblConfig,
) -> Result<EcnfFormula, BaselineError> {
    if !phi.is_quantified(x) {
        return Err(BaselineError::NotQuantified { var: x });
    }
    let mut scan_vars: VarSet = phi.cnf().vars_used();
    scan_vars.insert(x);
    let scan_vars: Vec<Var> = scan_vars.into_iter().collect();
    if scan_vars.len() as u32 > cfg.max_scan_vars {
        return Err(BaselineError::ScanBudgetExceeded {
            vars: scan_vars.len(),
            max: cfg.max_scan_vars,
        });
    }

    let mut clauses: Vec<Clause> = phi.cnf().clauses().to_vec();
    let mut next_id: ClauseId = clauses.iter().map(|c| c.id() + 1).max().unwrap_or(0);

    // Unused declared variables cannot affect falsification, so scanning the
    // occurring variables covers every case; the rest stay pinned false.
    let mut values: Vec<Option<bool>> = vec![Some(false); phi.num_vars() as usize + 1];
    for mask in 0u64..(1u64 << scan_vars.len()) {
        for (i, &v) in scan_vars.iter().enumerate() {
            values[v as usize] = Some(mask >> i & 1 == 1);
        }
        let falsified_at = |clauses: &[Clause], values: &[Option<bool>]| -> Vec<usize> {
            clauses
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_satisfied_by_values(values))
                .map(|(i, _)| i)
                .collect()
        };
        let here = falsified_at(&clauses, &values);
        if here.is_empty() || here.iter().any(|&i| !clauses[i].contains_var(x)) {
            continue;
        }
        values[x as usize] = values[x as usize].map(|b| !b);
        let there = falsified_at(&clauses, &values);
        values[x as usize] = values[x as usize].map(|b| !b);
        if there.is_empty() {
            // The x-flip satisfies the formula: the point is not removable
            // and needs no resolvent.
            continue;
        }
        // Both sides falsify some clause. The two clauses agree with the
        // point everywhere except on x, where they disagree with each other,
        // so they clash exactly on x and their resolvent is falsified here.
        let b = &clauses[here[0]];
        let a = &clauses[there[0]];
        debug_assert!(a.contains_var(x));
        let r = resolve_clauses(a, b, x, next_id).expect("clash only on the flipped variable");
        debug_assert!(!r.is_satisfied_by_values(&values) || r.is_empty());
        clauses.push(r);
        next_id += 1;
        // Points below this mask stayed clean: the new clause is x-free, so
        // it can only shrink later boundary sets, never create one. This
        // point itself now falsifies the x-free resolvent. One pass suffices.
    }

    let remaining: Vec<Clause> = clauses.into_iter().filter(|c| !c.contains_var(x)).collect();
    let cnf = Cnf::new(phi.num_vars(), remaining).expect("ids unique, vars declared");
    let mut quantified = phi.quantified().clone();
    quantified.remove(&x);
    Ok(EcnfFormula::new(cnf, quantified).expect("quantified vars stay declared"))
}

/// Full elimination via [`qe_gbl_step`], taking quantified variables in
/// ascending order.
pub fn qe_gbl_qe(phi: &EcnfFormula, cfg: &QeGblConfig) -> Result<Cnf, BaselineError> {
    let order: Vec<Var> = phi.quantified().iter().copied().collect();
    let mut cur = phi.clone();
    for x in order {
        cur = qe_gbl_step(&cur, x, cfg)?;
    }
    Ok(cur.cnf().clone())
}
