//! Dependency sequents (D-sequents) and the operations that derive and
//! combine them.
//!
//! A D-sequent `(condition, scope) -> vars` states: in the subspace where
//! `condition` holds, the quantified variables in `vars` are redundant (the
//! clauses containing them can be dropped without changing the quantified
//! formula), and the redundancy is robust under any value flips confined to
//! `scope`. Structurally `vars ⊆ scope` and `scope` is disjoint from the
//! condition's variables; the scope tracking is what makes independently
//! derived D-sequents safe to combine.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cnf::{resolve_assignments, Assignment, Clause, ClauseId, Var, VarSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DseqError {
    #[error("D-sequent has no target variables")]
    NoVars,
    #[error("target variables are not contained in the scope")]
    VarsOutsideScope,
    #[error("scope variable {var} appears in the condition")]
    ScopeOverlapsCondition { var: Var },
    #[error("clause {clause} contains the target variable {var}")]
    ClauseContainsVar { clause: ClauseId, var: Var },
    #[error("no neutralizer available for a clause pair on variable {var}")]
    EmptyJustification { var: Var },
    #[error("justifications bind variable {var} to conflicting values")]
    InconsistentJustification { var: Var },
    #[error("joined D-sequents target different variable sets")]
    VarsMismatch,
    #[error("conditions do not clash exactly on variable {var}")]
    NotJoinable { var: Var },
    #[error("variable {var} already has an active D-sequent")]
    DuplicateVar { var: Var },
}

/// How a D-sequent came into being. Each variant carries the material its
/// validity rests on, so staleness after clause deletion can be detected by
/// walking the origin tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DSequentOrigin {
    /// Derived from a clause falsified by the branch assignment.
    FalsifiedClause(ClauseId),
    /// The variable had no resolvable clause pair left in the marked
    /// cofactor; carries the D-sequents whose redundancies justified it.
    BlockedVar(Vec<DSequent>),
    /// Like `BlockedVar`, but discovered after merging the two branches on
    /// the variable itself (one polarity died with the branches).
    Monotone(Vec<DSequent>),
    /// Join of two D-sequents whose conditions clash on one variable.
    Join(Box<DSequent>, Box<DSequent>),
}

impl DSequentOrigin {
    /// Short tag used in traces and stats.
    pub fn tag(&self) -> &'static str {
        match self {
            DSequentOrigin::FalsifiedClause(_) => "clause",
            DSequentOrigin::BlockedVar(_) => "blocked",
            DSequentOrigin::Monotone(_) => "monotone",
            DSequentOrigin::Join(_, _) => "join",
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct DSequent {
    condition: Assignment,
    scope: VarSet,
    vars: VarSet,
    origin: DSequentOrigin,
}

impl DSequent {
    pub fn new(
        condition: Assignment,
        scope: VarSet,
        vars: VarSet,
        origin: DSequentOrigin,
    ) -> Result<DSequent, DseqError> {
        if vars.is_empty() {
            return Err(DseqError::NoVars);
        }
        if !vars.is_subset(&scope) {
            return Err(DseqError::VarsOutsideScope);
        }
        if let Some(&var) = scope.iter().find(|&&v| condition.assigns(v)) {
            return Err(DseqError::ScopeOverlapsCondition { var });
        }
        Ok(DSequent {
            condition,
            scope,
            vars,
            origin,
        })
    }

    pub fn condition(&self) -> &Assignment {
        &self.condition
    }

    pub fn scope(&self) -> &VarSet {
        &self.scope
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn origin(&self) -> &DSequentOrigin {
        &self.origin
    }

    /// The single target variable; panics if the D-sequent targets several.
    pub fn var(&self) -> Var {
        debug_assert_eq!(self.vars.len(), 1);
        *self.vars.iter().next().expect("nonempty vars")
    }

    /// True if the condition does not assign `v`, so the D-sequent survives
    /// flipping the branch on `v`.
    pub fn is_symmetric_in(&self, v: Var) -> bool {
        !self.condition.assigns(v)
    }

    /// Widens the scope (a valid weakening: robustness under a larger flip
    /// set is implied). The added variables must not appear in the condition.
    pub fn widen_scope(&self, extra: &VarSet) -> Result<DSequent, DseqError> {
        if let Some(&var) = extra.iter().find(|&&v| self.condition.assigns(v)) {
            return Err(DseqError::ScopeOverlapsCondition { var });
        }
        let mut scope = self.scope.clone();
        scope.extend(extra.iter().copied());
        Ok(DSequent {
            condition: self.condition.clone(),
            scope,
            vars: self.vars.clone(),
            origin: self.origin.clone(),
        })
    }
}

impl std::fmt::Debug for DSequent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:?} -> {:?} [scope {:?}, {}]",
            self.condition,
            self.vars,
            self.scope,
            self.origin.tag()
        )
    }
}

/// D-sequent for `x` from a clause falsified by the branch assignment: in the
/// subspace falsifying the clause the whole formula is false, so every
/// variable not mentioned by the clause is trivially redundant there.
pub fn atomic_from_falsified_clause(clause: &Clause, x: Var) -> Result<DSequent, DseqError> {
    if clause.contains_var(x) {
        return Err(DseqError::ClauseContainsVar {
            clause: clause.id(),
            var: x,
        });
    }
    DSequent::new(
        clause.falsifying_assignment(),
        VarSet::from([x]),
        VarSet::from([x]),
        DSequentOrigin::FalsifiedClause(clause.id()),
    )
}

/// Why one clause pair resolvable on the target variable cannot currently
/// produce a resolvent: either some single assignment of the branch satisfies
/// one of the two clauses, or one of them contains a variable that is
/// redundant under an active D-sequent (given in full).
#[derive(Clone, Debug, Default)]
pub struct PairNeutralizers {
    pub satisfying: Vec<(Var, bool)>,
    pub redundant: Vec<DSequent>,
}

fn blocked(
    v: Var,
    pairs: &[PairNeutralizers],
    monotone: bool,
) -> Result<DSequent, DseqError> {
    let mut condition = Assignment::empty();
    let mut scope = VarSet::from([v]);
    let mut deps: Vec<DSequent> = Vec::new();
    for pair in pairs {
        if let Some(&(var, value)) = pair.satisfying.iter().min_by_key(|&&(var, _)| var) {
            condition = condition
                .union(&Assignment::single(var, value))
                .map_err(|_| DseqError::InconsistentJustification { var })?;
        } else if let Some(ds) = pair.redundant.iter().min_by_key(|ds| ds.var()) {
            condition = condition
                .union(ds.condition())
                .map_err(|_| DseqError::InconsistentJustification { var: ds.var() })?;
            scope.extend(ds.scope().iter().copied());
            if !deps.iter().any(|d| d.var() == ds.var()) {
                deps.push(ds.clone());
            }
        } else {
            return Err(DseqError::EmptyJustification { var: v });
        }
    }
    let origin = if monotone {
        DSequentOrigin::Monotone(deps)
    } else {
        DSequentOrigin::BlockedVar(deps)
    };
    DSequent::new(condition, scope, VarSet::from([v]), origin)
}

/// D-sequent for a variable with no resolvable clause pair left in the marked
/// cofactor. Each pair resolvable on `v` in the full formula must come with
/// at least one neutralizer; the condition is the union of one neutralizer
/// per pair (smallest satisfying variable preferred, then smallest redundant
/// variable), the scope is `v` plus the scopes of the redundancies used.
pub fn atomic_from_blocked_var(v: Var, pairs: &[PairNeutralizers]) -> Result<DSequent, DseqError> {
    blocked(v, pairs, false)
}

/// Same construction as [`atomic_from_blocked_var`], recorded with the
/// monotone origin: used for the branch variable itself when, after both
/// branches are merged, only one polarity of it survives in the marked
/// cofactor.
pub fn monotone_from_blocked_var(v: Var, pairs: &[PairNeutralizers]) -> Result<DSequent, DseqError> {
    blocked(v, pairs, true)
}

/// Joins two D-sequents for the same variables whose conditions clash on
/// exactly `on`: the new condition is the resolvent of the two conditions,
/// the new scope their union. Requires each condition to avoid the other's
/// scope, which is what makes the combination sound.
pub fn join_dsequents(s0: &DSequent, s1: &DSequent, on: Var) -> Result<DSequent, DseqError> {
    if s0.vars() != s1.vars() {
        return Err(DseqError::VarsMismatch);
    }
    if let Some(&var) = s1.scope().iter().find(|&&v| s0.condition.assigns(v)) {
        return Err(DseqError::ScopeOverlapsCondition { var });
    }
    if let Some(&var) = s0.scope().iter().find(|&&v| s1.condition.assigns(v)) {
        return Err(DseqError::ScopeOverlapsCondition { var });
    }
    let condition = resolve_assignments(s0.condition(), s1.condition(), on)
        .map_err(|_| DseqError::NotJoinable { var: on })?;
    let scope: VarSet = s0.scope().union(s1.scope()).copied().collect();
    DSequent::new(
        condition,
        scope,
        s0.vars().clone(),
        DSequentOrigin::Join(Box::new(s0.clone()), Box::new(s1.clone())),
    )
}

/// Partitions D-sequents by whether their condition mentions `v`: symmetric
/// ones survive flipping the branch on `v`, asymmetric ones do not.
pub fn split_sym_asym(dss: Vec<DSequent>, v: Var) -> (Vec<DSequent>, Vec<DSequent>) {
    dss.into_iter().partition(|ds| ds.is_symmetric_in(v))
}

/// The currently active D-sequents, at most one per variable. All conditions
/// are sub-assignments of the current branch assignment.
#[derive(Clone, Debug, Default)]
pub struct ActiveDSequentSet {
    by_var: BTreeMap<Var, DSequent>,
}

impl ActiveDSequentSet {
    pub fn new() -> ActiveDSequentSet {
        ActiveDSequentSet::default()
    }

    pub fn insert(&mut self, ds: DSequent) -> Result<(), DseqError> {
        if let Some(&var) = ds.vars().iter().find(|v| self.by_var.contains_key(v)) {
            return Err(DseqError::DuplicateVar { var });
        }
        for &v in ds.vars().clone().iter() {
            self.by_var.insert(v, ds.clone());
        }
        Ok(())
    }

    pub fn get(&self, var: Var) -> Option<&DSequent> {
        self.by_var.get(&var)
    }

    pub fn contains(&self, var: Var) -> bool {
        self.by_var.contains_key(&var)
    }

    pub fn remove(&mut self, var: Var) -> Option<DSequent> {
        self.by_var.remove(&var)
    }

    pub fn len(&self) -> usize {
        self.by_var.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_var.is_empty()
    }

    /// Covered variables, ascending.
    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.by_var.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &DSequent)> + '_ {
        self.by_var.iter().map(|(&v, ds)| (v, ds))
    }

    /// Removes and returns the D-sequents whose condition assigns `v`.
    pub fn drain_condition_mentioning(&mut self, v: Var) -> Vec<DSequent> {
        let vars: Vec<Var> = self
            .by_var
            .iter()
            .filter(|(_, ds)| ds.condition().assigns(v))
            .map(|(&var, _)| var)
            .collect();
        vars.into_iter()
            .filter_map(|var| self.by_var.remove(&var))
            .collect()
    }

    /// Removes and returns the D-sequents whose scope contains `v`. Called
    /// when `v` gets assigned, to keep every active scope free of assigned
    /// variables.
    pub fn drain_scope_containing(&mut self, v: Var) -> Vec<DSequent> {
        let vars: Vec<Var> = self
            .by_var
            .iter()
            .filter(|(_, ds)| ds.scope().contains(&v))
            .map(|(&var, _)| var)
            .collect();
        vars.into_iter()
            .filter_map(|var| self.by_var.remove(&var))
            .collect()
    }

    /// True if every active condition is contained in `q`.
    pub fn conditions_within(&self, q: &Assignment) -> bool {
        self.by_var.values().all(|ds| ds.condition().is_subset_of(q))
    }
}
