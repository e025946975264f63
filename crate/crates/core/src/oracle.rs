//! Brute-force semantic checks used to validate every other component.
//!
//! Everything here works by explicit enumeration over truth tables and is
//! intentionally independent of the engine's data structures: the only shared
//! vocabulary is the plain CNF types. All entry points enforce configurable
//! size caps and fail loudly instead of silently truncating.

use crate::cnf::{Assignment, Clause, Cnf, EcnfFormula, ClauseId, Var, VarSet};
use crate::dseq::DSequent;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{count} variables exceed the table cap of {max}")]
    TooManyVars { count: usize, max: u32 },
    #[error("point scan needs {needed} evaluations, cap is {max}")]
    ScanBudgetExceeded { needed: u128, max: u64 },
    #[error("flip set of {count} variables exceeds the cap of {max}")]
    FlipBudgetExceeded { count: usize, max: u32 },
    #[error("point does not assign variable {var}")]
    PointNotTotal { var: Var },
    #[error("result formula mentions quantified variable {var}")]
    QuantifiedVarInResult { var: Var },
    #[error("result formula mentions undeclared variable {var}")]
    ResultVarOutOfRange { var: Var },
    #[error("table domain is missing variable {var}")]
    TableDomainMissingVar { var: Var },
    #[error("malformed D-sequent: {0}")]
    MalformedDSequent(String),
    #[error("malformed scope query: {0}")]
    MalformedScope(String),
}

/// Enumeration caps. The defaults keep every check comfortably under a
/// second; raise them explicitly for bigger desk experiments.
#[derive(Clone, Copy, Debug)]
pub struct OracleConfig {
    /// Max variables in any truth table (2^n rows).
    pub max_table_vars: u32,
    /// Max evaluations in any point scan.
    pub max_point_scans: u64,
    /// Max variables in a removability flip set (2^n flips per point).
    pub max_flip_vars: u32,
}

impl Default for OracleConfig {
    fn default() -> OracleConfig {
        OracleConfig {
            max_table_vars: 20,
            max_point_scans: 1 << 20,
            max_flip_vars: 20,
        }
    }
}

/// A Boolean function as an explicit truth table over an ascending variable
/// list. Row index bit i holds the value of the i-th variable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BooleanFunctionTable {
    vars: Vec<Var>,
    bits: Vec<u64>,
}

impl BooleanFunctionTable {
    fn with_rows(vars: Vec<Var>) -> BooleanFunctionTable {
        let rows = 1usize << vars.len();
        BooleanFunctionTable {
            vars,
            bits: vec![0; rows.div_ceil(64)],
        }
    }

    /// Tabulates a CNF formula over `domain`, which must cover its variables.
    pub fn from_cnf(f: &Cnf, domain: &VarSet, cfg: &OracleConfig) -> Result<BooleanFunctionTable, OracleError> {
        if domain.len() > cfg.max_table_vars as usize {
            return Err(OracleError::TooManyVars {
                count: domain.len(),
                max: cfg.max_table_vars,
            });
        }
        if let Some(&var) = f.vars_used().iter().find(|v| !domain.contains(v)) {
            return Err(OracleError::TableDomainMissingVar { var });
        }
        let vars: Vec<Var> = domain.iter().copied().collect();
        let mut table = BooleanFunctionTable::with_rows(vars);
        let mut values: Vec<Option<bool>> = vec![None; f.num_vars() as usize + 1];
        for row in 0..table.rows() {
            set_point(&mut values, &table.vars, row);
            if eval_cnf(f, &values) {
                table.set(row);
            }
        }
        Ok(table)
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn rows(&self) -> u64 {
        1u64 << self.vars.len()
    }

    pub fn get(&self, row: u64) -> bool {
        self.bits[(row / 64) as usize] >> (row % 64) & 1 == 1
    }

    fn set(&mut self, row: u64) {
        self.bits[(row / 64) as usize] |= 1 << (row % 64);
    }

    /// The assignment encoded by a row index.
    pub fn row_assignment(&self, row: u64) -> Assignment {
        Assignment::from_pairs(
            self.vars
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, row >> i & 1 == 1)),
        )
        .expect("table vars are distinct")
    }

    /// First row where the two tables differ; they must share the domain.
    pub fn first_difference(&self, other: &BooleanFunctionTable) -> Option<u64> {
        assert_eq!(self.vars, other.vars, "tables over different domains");
        (0..self.rows()).find(|&row| self.get(row) != other.get(row))
    }
}

fn set_point(values: &mut [Option<bool>], vars: &[Var], mask: u64) {
    for (i, &v) in vars.iter().enumerate() {
        values[v as usize] = Some(mask >> i & 1 == 1);
    }
}

fn eval_cnf(f: &Cnf, values: &[Option<bool>]) -> bool {
    f.clauses().iter().all(|c| c.is_satisfied_by_values(values))
}

fn clause_falsified(c: &Clause, values: &[Option<bool>]) -> bool {
    c.lits()
        .iter()
        .all(|l| values[l.var() as usize] == Some(l.falsifying_value()))
}

/// The quantified formula's truth table over its free variables, computed by
/// scanning every assignment of the quantified variables for each row.
pub fn oracle_qe(phi: &EcnfFormula, cfg: &OracleConfig) -> Result<BooleanFunctionTable, OracleError> {
    if phi.num_vars() > cfg.max_table_vars {
        return Err(OracleError::TooManyVars {
            count: phi.num_vars() as usize,
            max: cfg.max_table_vars,
        });
    }
    let y: Vec<Var> = phi.free_vars().into_iter().collect();
    let x: Vec<Var> = phi.quantified().iter().copied().collect();
    let mut table = BooleanFunctionTable::with_rows(y);
    let mut values: Vec<Option<bool>> = vec![None; phi.num_vars() as usize + 1];
    for row in 0..table.rows() {
        set_point(&mut values, &table.vars, row);
        for xmask in 0..1u64 << x.len() {
            set_point(&mut values, &x, xmask);
            if eval_cnf(phi.cnf(), &values) {
                table.set(row);
                break;
            }
        }
    }
    Ok(table)
}

/// First free-variable assignment on which `g` disagrees with the quantified
/// formula, or `None` if `g` is a correct elimination result.
pub fn first_counterexample(
    g: &Cnf,
    phi: &EcnfFormula,
    cfg: &OracleConfig,
) -> Result<Option<Assignment>, OracleError> {
    for v in g.vars_used() {
        if phi.is_quantified(v) {
            return Err(OracleError::QuantifiedVarInResult { var: v });
        }
        if v > phi.num_vars() {
            return Err(OracleError::ResultVarOutOfRange { var: v });
        }
    }
    let domain = phi.free_vars();
    let expected = oracle_qe(phi, cfg)?;
    let actual = BooleanFunctionTable::from_cnf(g, &domain, cfg)?;
    Ok(expected
        .first_difference(&actual)
        .map(|row| expected.row_assignment(row)))
}

/// True iff `g` is equivalent to the quantified formula over the free
/// variables.
pub fn equivalent_to_oracle(g: &Cnf, phi: &EcnfFormula, cfg: &OracleConfig) -> Result<bool, OracleError> {
    Ok(first_counterexample(g, phi, cfg)?.is_none())
}

/// True iff no satisfying point of `f` falsifies `c` (the clause is implied).
pub fn cnf_implies_clause(f: &Cnf, c: &Clause, cfg: &OracleConfig) -> Result<bool, OracleError> {
    let mut domain = f.vars_used();
    domain.extend(c.vars());
    let vars: Vec<Var> = domain.into_iter().collect();
    check_scan_budget(vars.len(), cfg)?;
    let max_var = vars.iter().copied().max().unwrap_or(0);
    let mut values: Vec<Option<bool>> = vec![None; max_var as usize + 1];
    for mask in 0..1u64 << vars.len() {
        set_point(&mut values, &vars, mask);
        if clause_falsified(c, &values) && eval_cnf(f, &values) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_scan_budget(num_vars: usize, cfg: &OracleConfig) -> Result<(), OracleError> {
    let needed: u128 = 1u128.checked_shl(num_vars as u32).unwrap_or(u128::MAX);
    if needed > cfg.max_point_scans as u128 {
        return Err(OracleError::ScanBudgetExceeded {
            needed,
            max: cfg.max_point_scans,
        });
    }
    Ok(())
}

fn require_total(f: &Cnf, p: &Assignment) -> Result<(), OracleError> {
    match f.vars_used().into_iter().find(|&v| !p.assigns(v)) {
        Some(var) => Err(OracleError::PointNotTotal { var }),
        None => Ok(()),
    }
}

fn dense_values(p: &Assignment, num_vars: u32) -> Vec<Option<bool>> {
    let mut values = vec![None; num_vars as usize + 1];
    for (v, b) in p.iter() {
        values[v as usize] = Some(b);
    }
    values
}

/// Tests whether the total point `p` is a `z`-boundary point of `f`: `p`
/// falsifies `f`, every falsified clause contains a variable of `z`, and `z`
/// is minimal for that in the element-wise sense (each of its variables is
/// the sole `z`-variable of some falsified clause).
pub fn is_z_boundary_point(f: &Cnf, p: &Assignment, z: &VarSet) -> Result<bool, OracleError> {
    require_total(f, p)?;
    if z.is_empty() {
        return Ok(false);
    }
    let values = dense_values(p, f.num_vars());
    let falsified: Vec<&Clause> = f
        .clauses()
        .iter()
        .filter(|c| clause_falsified(c, &values))
        .collect();
    if falsified.is_empty() {
        return Ok(false);
    }
    for c in &falsified {
        if !c.vars().any(|v| z.contains(&v)) {
            return Ok(false);
        }
    }
    // Minimality: dropping any single variable of z must leave some falsified
    // clause uncovered, i.e. each z-variable is the only z-variable of some
    // falsified clause.
    for &zv in z {
        let witnessed = falsified.iter().any(|c| {
            let mut in_z = c.vars().filter(|v| z.contains(v));
            in_z.next() == Some(zv) && in_z.next().is_none()
        });
        if !witnessed {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Everything there is to know about a falsifying point: which clauses it
/// falsifies and the minimal variable sets `z` for which it is a `z`-boundary
/// point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryClassification {
    pub point: Assignment,
    pub falsified_clause_ids: Vec<ClauseId>,
    pub minimal_z_sets: Vec<VarSet>,
}

pub fn classify_boundary(f: &Cnf, p: &Assignment) -> Result<BoundaryClassification, OracleError> {
    require_total(f, p)?;
    let values = dense_values(p, f.num_vars());
    let falsified: Vec<&Clause> = f
        .clauses()
        .iter()
        .filter(|c| clause_falsified(c, &values))
        .collect();
    let families: Vec<VarSet> = falsified.iter().map(|c| c.vars().collect()).collect();
    let mut minimal_z_sets = if falsified.is_empty() {
        Vec::new()
    } else {
        minimal_hitting_sets(&families)
    };
    minimal_z_sets.sort();
    Ok(BoundaryClassification {
        point: p.clone(),
        falsified_clause_ids: falsified.iter().map(|c| c.id()).collect(),
        minimal_z_sets,
    })
}

/// All minimal sets hitting every family (exact, exponential; desk scale).
fn minimal_hitting_sets(families: &[VarSet]) -> Vec<VarSet> {
    fn recurse(families: &[VarSet], chosen: &mut VarSet, out: &mut Vec<VarSet>) {
        match families
            .iter()
            .find(|fam| fam.intersection(chosen).next().is_none())
        {
            None => out.push(chosen.clone()),
            Some(fam) => {
                for &v in fam {
                    chosen.insert(v);
                    recurse(families, chosen, out);
                    chosen.remove(&v);
                }
            }
        }
    }
    let mut all = Vec::new();
    recurse(families, &mut VarSet::new(), &mut all);
    all.sort();
    all.dedup();
    // Drop non-minimal hits produced by different branch orders.
    let copy = all.clone();
    all.retain(|s| !copy.iter().any(|t| t != s && t.is_subset(s)));
    all
}

/// True iff no point agreeing with `p` outside `flip_vars` satisfies `f`:
/// flipping values inside `flip_vars` cannot rescue the point.
pub fn is_removable(
    f: &Cnf,
    p: &Assignment,
    flip_vars: &VarSet,
    cfg: &OracleConfig,
) -> Result<bool, OracleError> {
    require_total(f, p)?;
    if flip_vars.len() > cfg.max_flip_vars as usize {
        return Err(OracleError::FlipBudgetExceeded {
            count: flip_vars.len(),
            max: cfg.max_flip_vars,
        });
    }
    let mut values = dense_values(p, f.num_vars());
    let flips: Vec<Var> = flip_vars.iter().copied().collect();
    for mask in 0..1u64 << flips.len() {
        set_point(&mut values, &flips, mask);
        if eval_cnf(f, &values) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Semantic validity of scoped redundancy: under the branch assignment `q`,
/// the variables `z` are redundant with robustness scope `w` iff the cofactor
/// has no point that falsifies only `z`-clauses and cannot be rescued by any
/// flip inside `w`.
pub fn check_scoped_redundancy(
    phi: &EcnfFormula,
    q: &Assignment,
    z: &VarSet,
    w: &VarSet,
    cfg: &OracleConfig,
) -> Result<bool, OracleError> {
    if !z.is_subset(w) {
        return Err(OracleError::MalformedScope(format!(
            "z {:?} is not contained in w {:?}",
            z, w
        )));
    }
    for &v in w {
        if !phi.is_quantified(v) {
            return Err(OracleError::MalformedScope(format!(
                "scope variable {} is not quantified",
                v
            )));
        }
        if q.assigns(v) {
            return Err(OracleError::MalformedScope(format!(
                "scope variable {} is assigned by the condition",
                v
            )));
        }
    }
    if z.is_empty() {
        return Ok(true);
    }
    let g = phi.cnf().cofactor(q);
    if w.len() > cfg.max_flip_vars as usize {
        return Err(OracleError::FlipBudgetExceeded {
            count: w.len(),
            max: cfg.max_flip_vars,
        });
    }
    // Only variables of the cofactor and the scope matter; all other
    // unassigned variables influence neither falsification nor flips.
    let mut domain = g.vars_used();
    domain.extend(w.iter().copied());
    let vars: Vec<Var> = domain.into_iter().collect();
    check_scan_budget(vars.len(), cfg)?;
    let flips: Vec<Var> = w.iter().copied().collect();
    let mut values: Vec<Option<bool>> = vec![None; phi.num_vars() as usize + 1];
    'points: for mask in 0..1u64 << vars.len() {
        set_point(&mut values, &vars, mask);
        let mut any_falsified = false;
        for c in g.clauses() {
            if clause_falsified(c, &values) {
                any_falsified = true;
                if !c.vars().any(|v| z.contains(&v)) {
                    // Falsified clause without a z-variable: this point is
                    // no z-boundary point, move on.
                    continue 'points;
                }
            }
        }
        if !any_falsified {
            continue;
        }
        let mut rescued = false;
        for flip in 0..1u64 << flips.len() {
            set_point(&mut values, &flips, flip);
            if eval_cnf(&g, &values) {
                rescued = true;
                break;
            }
        }
        if !rescued {
            return Ok(false);
        }
        // Restore the scope part of the point for the next iteration.
        set_point(&mut values, &vars, mask);
    }
    Ok(true)
}

/// Semantic validity of a D-sequent against a formula: structural checks,
/// then scoped redundancy of its variables under its condition.
pub fn check_dsequent(
    ds: &DSequent,
    phi: &EcnfFormula,
    cfg: &OracleConfig,
) -> Result<bool, OracleError> {
    for &v in ds.scope() {
        if !phi.is_quantified(v) {
            return Err(OracleError::MalformedDSequent(format!(
                "scope variable {} is not quantified",
                v
            )));
        }
    }
    for v in ds.condition().vars() {
        if v == 0 || v > phi.num_vars() {
            return Err(OracleError::MalformedDSequent(format!(
                "condition variable {} is out of range",
                v
            )));
        }
    }
    check_scoped_redundancy(phi, ds.condition(), ds.vars(), ds.scope(), cfg)
}
