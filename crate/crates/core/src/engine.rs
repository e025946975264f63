//! The branching quantifier-elimination engine.
//!
//! The solver explores variable assignments depth-first. At each node it
//! first harvests "atomic" D-sequents: if the assignment falsifies a clause,
//! every unassigned quantified variable outside that clause is redundant in
//! the subspace falsifying it; otherwise quantified variables with no
//! resolvable clause pair left in the marked cofactor are blocked and get a
//! D-sequent built from per-pair neutralizers. When every unassigned
//! quantified variable carries an active D-sequent the node is done.
//! Otherwise the node branches, explores both values, and merges: conflict
//! clauses from the two branches are resolved on the branch variable, and
//! D-sequents conditioned on the branch variable are joined pairwise. On a
//! normal return every quantified variable has an unconditional D-sequent,
//! so the clauses mentioning quantified variables can be dropped; what
//! remains is the quantifier-free result.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cnf::{Assignment, Clause, ClauseId, Cnf, EcnfFormula, Var, VarSet};
use crate::dseq::{
    atomic_from_blocked_var, atomic_from_falsified_clause, join_dsequents,
    monotone_from_blocked_var, ActiveDSequentSet, DSequent, DSequentOrigin, PairNeutralizers,
};

/// Resource limits and feature toggles for a single run.
#[derive(Clone, Debug, Default)]
pub struct EngineConfig {
    pub node_cap: Option<u64>,
    pub time_cap: Option<Duration>,
    /// Keep every derived D-sequent in a per-variable store and reactivate a
    /// stored one instead of re-deriving when its condition holds again.
    pub reuse_dseqs: bool,
    /// Delete an intermediate conflict resolvent once a shallower resolvent
    /// supersedes it at the enclosing merge.
    pub conflict_retention: bool,
    pub record_trace: bool,
    /// Recompute all incremental counters from scratch after every backtrack
    /// and compare them with the maintained state.
    pub debug_checks: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    NodeCapExceeded,
    TimeCapExceeded,
}

/// Search counters. Wall-clock time is deliberately not part of the stats so
/// that two runs with the same input and flags compare equal byte for byte.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub nodes: u64,
    pub max_depth: u64,
    pub resolvents_added: u64,
    pub dseqs_from_clause: u64,
    pub dseqs_from_blocked: u64,
    pub dseqs_monotone: u64,
    pub joins: u64,
    pub dseqs_reused: u64,
}

impl Stats {
    /// Number of D-sequents derived, across all origins.
    pub fn dseqs_total(&self) -> u64 {
        self.dseqs_from_clause + self.dseqs_from_blocked + self.dseqs_monotone + self.joins
    }
}

/// A D-sequent as it appears in traces: the condition as signed variable
/// codes (positive means assigned true), the scope and target variables, and
/// the derivation tag. The source clause id is present for clause-derived
/// D-sequents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DseqRecord {
    pub var: Var,
    pub condition: Vec<i32>,
    pub scope: Vec<Var>,
    pub vars: Vec<Var>,
    pub origin: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clause_id: Option<ClauseId>,
}

impl DseqRecord {
    pub fn from_dsequent(ds: &DSequent) -> DseqRecord {
        DseqRecord {
            var: ds.var(),
            condition: ds
                .condition()
                .iter()
                .map(|(v, val)| if val { v as i32 } else { -(v as i32) })
                .collect(),
            scope: ds.scope().iter().copied().collect(),
            vars: ds.vars().iter().copied().collect(),
            origin: ds.origin().tag(),
            clause_id: match ds.origin() {
                DSequentOrigin::FalsifiedClause(id) => Some(*id),
                _ => None,
            },
        }
    }

    /// The condition as an assignment, for replaying traces through the
    /// semantic checker.
    pub fn condition_assignment(&self) -> Assignment {
        Assignment::from_pairs(
            self.condition
                .iter()
                .map(|&code| (code.unsigned_abs(), code > 0)),
        )
        .expect("trace conditions are consistent")
    }

    pub fn scope_set(&self) -> VarSet {
        self.scope.iter().copied().collect()
    }

    pub fn vars_set(&self) -> VarSet {
        self.vars.iter().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Branch {
        depth: u64,
        var: Var,
        value: bool,
    },
    Backtrack {
        depth: u64,
        var: Var,
    },
    Dseq {
        depth: u64,
        #[serde(flatten)]
        dseq: DseqRecord,
    },
    Resolvent {
        depth: u64,
        clause_id: ClauseId,
        lits: Vec<i32>,
    },
    Join {
        depth: u64,
        on: Var,
        #[serde(flatten)]
        dseq: DseqRecord,
    },
    ClauseDeleted {
        depth: u64,
        clause_id: ClauseId,
    },
}

#[derive(Clone, Debug)]
pub struct QeResult {
    /// The quantifier-free result: every surviving clause that mentions no
    /// quantified variable. On an incomplete (capped) run this is only the
    /// partial clause set accumulated so far.
    pub g: Cnf,
    /// When the input has no free variables the result is a constant.
    pub answer_for_empty_y: Option<bool>,
    pub stats: Stats,
    pub status: RunStatus,
    pub trace: Vec<TraceEvent>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Answer {
    Sat,
    Unsat(ClauseId),
}

enum Abort {
    Node,
    Time,
}

enum AtomicOutcome {
    Sat,
    Unsat(ClauseId),
    Unknown,
}

fn clause_key(c: &Clause) -> Vec<i32> {
    c.lits().iter().map(|l| l.to_dimacs()).collect()
}

struct Solver<'a> {
    cfg: &'a EngineConfig,
    num_vars: u32,
    is_x: Vec<bool>,
    x_vars: Vec<Var>,
    clauses: Vec<Clause>,
    alive: Vec<bool>,
    transient: Vec<bool>,
    n_sat: Vec<u32>,
    n_fals: Vec<u32>,
    red_cnt: Vec<u32>,
    occ: Vec<Vec<(ClauseId, bool)>>,
    value: Vec<Option<bool>>,
    trail: Vec<Var>,
    active: ActiveDSequentSet,
    redundant: Vec<bool>,
    pi: Vec<Vec<DSequent>>,
    by_lits: HashMap<Vec<i32>, ClauseId>,
    /// Conflict clauses currently referenced by an enclosing merge; they must
    /// not be deleted even when superseded elsewhere.
    pinned: Vec<ClauseId>,
    /// D-sequents parked because a branch assignment landed inside their
    /// scope, keyed by that branch variable. They are put back on backtrack,
    /// which keeps every active scope disjoint from the assignment.
    drained: Vec<(Var, Vec<DSequent>)>,
    stats: Stats,
    trace: Vec<TraceEvent>,
    deadline: Option<Instant>,
}

impl<'a> Solver<'a> {
    fn new(phi: &EcnfFormula, cfg: &'a EngineConfig) -> Solver<'a> {
        let num_vars = phi.num_vars();
        let n = num_vars as usize + 1;
        let mut is_x = vec![false; n];
        for &x in phi.quantified() {
            is_x[x as usize] = true;
        }
        let clauses: Vec<Clause> = phi.cnf().clauses().to_vec();
        let mut occ = vec![Vec::new(); n];
        let mut by_lits = HashMap::new();
        for (cid, c) in clauses.iter().enumerate() {
            for lit in c.lits() {
                occ[lit.var() as usize].push((cid, lit.is_positive()));
            }
            by_lits.entry(clause_key(c)).or_insert(cid);
        }
        let count = clauses.len();
        Solver {
            cfg,
            num_vars,
            is_x,
            x_vars: phi.quantified().iter().copied().collect(),
            clauses,
            alive: vec![true; count],
            transient: vec![false; count],
            n_sat: vec![0; count],
            n_fals: vec![0; count],
            red_cnt: vec![0; count],
            occ,
            value: vec![None; n],
            trail: Vec::new(),
            active: ActiveDSequentSet::new(),
            redundant: vec![false; n],
            pi: vec![Vec::new(); n],
            by_lits,
            pinned: Vec::new(),
            drained: Vec::new(),
            stats: Stats::default(),
            trace: Vec::new(),
            deadline: cfg.time_cap.map(|d| Instant::now() + d),
        }
    }

    fn depth(&self) -> u64 {
        self.trail.len() as u64
    }

    fn clause_active(&self, cid: ClauseId) -> bool {
        self.alive[cid] && self.n_sat[cid] == 0 && self.red_cnt[cid] == 0
    }

    fn clause_falsified(&self, cid: ClauseId) -> bool {
        self.clause_active(cid) && self.n_fals[cid] as usize == self.clauses[cid].len()
    }

    fn assign(&mut self, v: Var, val: bool) {
        let vi = v as usize;
        debug_assert!(self.value[vi].is_none() && !self.redundant[vi]);
        self.value[vi] = Some(val);
        self.trail.push(v);
        for i in 0..self.occ[vi].len() {
            let (cid, positive) = self.occ[vi][i];
            if positive == val {
                self.n_sat[cid] += 1;
            } else {
                self.n_fals[cid] += 1;
            }
        }
    }

    fn unassign(&mut self) {
        let v = self.trail.pop().expect("assignment to undo");
        let vi = v as usize;
        let val = self.value[vi].take().expect("variable was assigned");
        for i in 0..self.occ[vi].len() {
            let (cid, positive) = self.occ[vi][i];
            if positive == val {
                self.n_sat[cid] -= 1;
            } else {
                self.n_fals[cid] -= 1;
            }
        }
    }

    /// Activates a D-sequent for its target variable: the variable is marked
    /// redundant and every clause containing it is ignored while the mark
    /// lasts. Freshly derived D-sequents also go to the reuse store.
    fn activate(&mut self, ds: DSequent, fresh: bool) {
        let v = ds.var();
        let vi = v as usize;
        debug_assert!(self.value[vi].is_none() && !self.redundant[vi]);
        if fresh && self.cfg.reuse_dseqs {
            self.pi[vi].push(ds.clone());
        }
        self.redundant[vi] = true;
        for i in 0..self.occ[vi].len() {
            let cid = self.occ[vi][i].0;
            self.red_cnt[cid] += 1;
        }
        self.active
            .insert(ds)
            .expect("at most one active D-sequent per variable");
    }

    fn deactivate(&mut self, v: Var) -> DSequent {
        let ds = self.active.remove(v).expect("variable has an active D-sequent");
        let vi = v as usize;
        self.redundant[vi] = false;
        for i in 0..self.occ[vi].len() {
            let cid = self.occ[vi][i].0;
            self.red_cnt[cid] -= 1;
        }
        ds
    }

    /// Removes the active D-sequents whose condition assigns `v`; they do not
    /// survive flipping the branch on `v`. Returned in ascending variable
    /// order.
    fn deactivate_asymmetric(&mut self, v: Var) -> Vec<DSequent> {
        let vars: Vec<Var> = self
            .active
            .iter()
            .filter(|(_, ds)| !ds.is_symmetric_in(v))
            .map(|(var, _)| var)
            .collect();
        vars.into_iter().map(|var| self.deactivate(var)).collect()
    }

    /// Parks every active D-sequent whose scope contains the just-assigned
    /// branch variable. A scope variable must stay free for the robustness
    /// flips it promises, so such D-sequents go dormant for the branch.
    fn drain_scoped(&mut self, v: Var) {
        let vars: Vec<Var> = self
            .active
            .iter()
            .filter(|(_, ds)| ds.scope().contains(&v))
            .map(|(var, _)| var)
            .collect();
        let batch: Vec<DSequent> = vars.into_iter().map(|var| self.deactivate(var)).collect();
        self.drained.push((v, batch));
    }

    /// Puts the D-sequents parked at the assignment of `v` back, displacing
    /// any cover derived for their variable in the meantime: the restored
    /// D-sequent predates the branch, so it stays valid on both sides of it.
    fn restore_drained(&mut self, v: Var) {
        let (var, batch) = self.drained.pop().expect("drain stack entry to restore");
        debug_assert_eq!(var, v);
        for ds in batch {
            if self.active.contains(ds.var()) {
                self.deactivate(ds.var());
            }
            self.activate(ds, false);
        }
    }

    fn trace_dseq(&mut self, ds: &DSequent) {
        if self.cfg.record_trace {
            self.trace.push(TraceEvent::Dseq {
                depth: self.depth(),
                dseq: DseqRecord::from_dsequent(ds),
            });
        }
    }

    /// True when the pair clashes on exactly one variable. Both clauses are
    /// known to clash on the variable whose occurrence lists produced the
    /// pair, so one clash means that variable.
    fn resolvable(&self, a: ClauseId, b: ClauseId) -> bool {
        let cb = &self.clauses[b];
        let mut clashes = 0;
        for lit in self.clauses[a].lits() {
            if cb.lit_on(lit.var()) == Some(lit.negated()) {
                clashes += 1;
                if clashes > 1 {
                    return false;
                }
            }
        }
        clashes == 1
    }

    /// If `v` is blocked (no resolvable pair on `v` with both clauses active),
    /// returns one neutralizer set per resolvable pair on `v` in the full
    /// formula; otherwise `None`. A pair is neutralized by a single branch
    /// assignment satisfying one of its clauses or by a redundant variable
    /// occurring in one of them.
    fn blocked_pairs(&self, v: Var) -> Option<Vec<PairNeutralizers>> {
        let vi = v as usize;
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for &(cid, positive) in &self.occ[vi] {
            if !self.alive[cid] {
                continue;
            }
            if positive {
                pos.push(cid);
            } else {
                neg.push(cid);
            }
        }
        for &a in &pos {
            for &b in &neg {
                if self.clause_active(a) && self.clause_active(b) && self.resolvable(a, b) {
                    return None;
                }
            }
        }
        let mut pairs = Vec::new();
        for &a in &pos {
            for &b in &neg {
                if !self.resolvable(a, b) {
                    continue;
                }
                let mut pair = PairNeutralizers::default();
                for cid in [a, b] {
                    for lit in self.clauses[cid].lits() {
                        let u = lit.var() as usize;
                        if let Some(val) = self.value[u] {
                            if lit.satisfied_by(val) {
                                pair.satisfying.push((lit.var(), val));
                            }
                        }
                        if self.redundant[u] {
                            let ds = self
                                .active
                                .get(lit.var())
                                .expect("redundant variables carry an active D-sequent");
                            pair.redundant.push(ds.clone());
                        }
                    }
                }
                pairs.push(pair);
            }
        }
        Some(pairs)
    }

    /// Derives a clause D-sequent from a falsified clause for every
    /// unassigned, non-redundant quantified variable: the subspace falsifying
    /// the clause falsifies the whole formula, so each such variable is
    /// trivially redundant there.
    fn process_unsat_clause(&mut self, cid: ClauseId) {
        debug_assert!(self.clause_falsified(cid));
        for i in 0..self.x_vars.len() {
            let x = self.x_vars[i];
            if self.value[x as usize].is_some() || self.redundant[x as usize] {
                continue;
            }
            let ds = atomic_from_falsified_clause(&self.clauses[cid], x)
                .expect("a falsified clause mentions no unassigned variable");
            self.stats.dseqs_from_clause += 1;
            self.trace_dseq(&ds);
            self.activate(ds, true);
        }
    }

    /// True when every literal of `a` occurs in `b`. Deleting a clause is
    /// only allowed while an alive subsuming clause remains: any point
    /// falsifying the deleted clause then still falsifies a clause over no
    /// more variables, which keeps every derived D-sequent valid.
    fn clause_subsumes(&self, a: ClauseId, b: ClauseId) -> bool {
        let cb = &self.clauses[b];
        self.clauses[a]
            .lits()
            .iter()
            .all(|l| cb.lit_on(l.var()) == Some(*l))
    }

    /// Reactivates stored D-sequents whose condition holds under the current
    /// assignment. Only entries whose scope is the bare target variable are
    /// eligible: such a scope can never go stale, so every later join and
    /// justification that touches the entry stays sound.
    fn reuse_pass(&mut self) {
        for i in 0..self.x_vars.len() {
            let x = self.x_vars[i];
            let xi = x as usize;
            if self.value[xi].is_some() || self.redundant[xi] {
                continue;
            }
            let mut found = None;
            for e in &self.pi[xi] {
                if e.scope().len() != 1 {
                    continue;
                }
                if !e
                    .condition()
                    .iter()
                    .all(|(v, val)| self.value[v as usize] == Some(val))
                {
                    continue;
                }
                found = Some(e.clone());
                break;
            }
            if let Some(ds) = found {
                self.stats.dseqs_reused += 1;
                self.activate(ds, false);
            }
        }
    }

    /// One round of atomic derivations: falsified clause first, then stored
    /// reactivations, then the blocked-variable fixpoint. Reports whether the
    /// unassigned quantified variables are now fully covered.
    fn atomic_dseqs(&mut self) -> AtomicOutcome {
        if let Some(cid) = (0..self.clauses.len()).find(|&c| self.clause_falsified(c)) {
            self.process_unsat_clause(cid);
            return AtomicOutcome::Unsat(cid);
        }
        if self.cfg.reuse_dseqs {
            self.reuse_pass();
        }
        loop {
            let mut changed = false;
            for i in 0..self.x_vars.len() {
                let x = self.x_vars[i];
                if self.value[x as usize].is_some() || self.redundant[x as usize] {
                    continue;
                }
                if let Some(pairs) = self.blocked_pairs(x) {
                    let ds = atomic_from_blocked_var(x, &pairs)
                        .expect("every resolvable pair of a blocked variable has a neutralizer");
                    self.stats.dseqs_from_blocked += 1;
                    self.trace_dseq(&ds);
                    self.activate(ds, true);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if self
            .x_vars
            .iter()
            .all(|&x| self.value[x as usize].is_some() || self.redundant[x as usize])
        {
            AtomicOutcome::Sat
        } else {
            AtomicOutcome::Unknown
        }
    }

    /// The branch variable after both branches returned satisfiable answers
    /// is blocked: an effectively-unit clause on it would have falsified one
    /// of the branches. Derives its D-sequent from the pair neutralizers.
    fn derive_monotone(&mut self, v: Var) {
        let pairs = self
            .blocked_pairs(v)
            .expect("branch variable is blocked after satisfiable branches");
        let ds = monotone_from_blocked_var(v, &pairs)
            .expect("every resolvable pair on the branch variable has a neutralizer");
        self.stats.dseqs_monotone += 1;
        self.trace_dseq(&ds);
        self.activate(ds, true);
    }

    /// Adds the resolvent of the two branch conflict clauses, reusing an
    /// existing clause with the same literals when one is alive.
    fn add_resolvent(&mut self, c0: ClauseId, c1: ClauseId, v: Var) -> ClauseId {
        let id = self.clauses.len();
        let r = crate::cnf::resolve_clauses(&self.clauses[c0], &self.clauses[c1], v, id)
            .expect("branch conflict clauses resolve on the branch variable");
        let key = clause_key(&r);
        if let Some(&existing) = self.by_lits.get(&key) {
            if self.alive[existing] {
                return existing;
            }
        }
        let mut n_sat = 0;
        let mut n_fals = 0;
        let mut red = 0;
        for lit in r.lits() {
            let u = lit.var() as usize;
            match self.value[u] {
                Some(val) if lit.satisfied_by(val) => n_sat += 1,
                Some(_) => n_fals += 1,
                None => {}
            }
            if self.redundant[u] {
                red += 1;
            }
        }
        for lit in r.lits() {
            self.occ[lit.var() as usize].push((id, lit.is_positive()));
        }
        if self.cfg.record_trace {
            self.trace.push(TraceEvent::Resolvent {
                depth: self.depth(),
                clause_id: id,
                lits: key.clone(),
            });
        }
        self.clauses.push(r);
        self.alive.push(true);
        self.transient.push(self.cfg.conflict_retention);
        self.n_sat.push(n_sat);
        self.n_fals.push(n_fals);
        self.red_cnt.push(red);
        self.by_lits.insert(key, id);
        self.stats.resolvents_added += 1;
        if self.cfg.conflict_retention {
            for c in 0..id {
                if self.alive[c]
                    && self.transient[c]
                    && !self.pinned.contains(&c)
                    && self.clause_subsumes(id, c)
                {
                    self.tombstone_clause(c);
                }
            }
        }
        id
    }

    /// Deletes a conflict resolvent subsumed by another alive clause. The
    /// subsumption requirement makes the deletion invisible to every derived
    /// D-sequent, so none has to be retired.
    fn tombstone_clause(&mut self, cid: ClauseId) {
        debug_assert!(self.alive[cid]);
        self.alive[cid] = false;
        let key = clause_key(&self.clauses[cid]);
        if self.by_lits.get(&key) == Some(&cid) {
            self.by_lits.remove(&key);
        }
        if self.cfg.record_trace {
            self.trace.push(TraceEvent::ClauseDeleted {
                depth: self.depth(),
                clause_id: cid,
            });
        }
    }

    /// All clauses of the marked cofactor that share `y` with an unassigned
    /// quantified variable are redundant, so branching on `y` cannot help
    /// eliminate anything.
    fn is_detached(&self, y: Var) -> bool {
        !self.occ[y as usize].iter().any(|&(cid, _)| {
            self.clause_active(cid)
                && self.clauses[cid]
                    .lits()
                    .iter()
                    .any(|l| self.is_x[l.var() as usize] && self.value[l.var() as usize].is_none())
        })
    }

    /// Unit clauses first (the falsifying value is explored first), with
    /// unit clauses over free variables beating unit clauses over quantified
    /// ones; then the lowest free non-detached free-variable; quantified
    /// variables only once no such variable remains.
    fn pick_variable(&self) -> (Var, bool) {
        let mut x_unit = None;
        for cid in 0..self.clauses.len() {
            if !self.clause_active(cid) {
                continue;
            }
            let c = &self.clauses[cid];
            if c.len() != self.n_fals[cid] as usize + 1 {
                continue;
            }
            let lit = c
                .lits()
                .iter()
                .find(|l| self.value[l.var() as usize].is_none())
                .copied()
                .expect("a unit clause has one unassigned literal");
            if self.is_x[lit.var() as usize] {
                if x_unit.is_none() {
                    x_unit = Some((lit.var(), lit.falsifying_value()));
                }
            } else {
                return (lit.var(), lit.falsifying_value());
            }
        }
        let free_y = (1..=self.num_vars).find(|&v| {
            !self.is_x[v as usize] && self.value[v as usize].is_none() && !self.is_detached(v)
        });
        if free_y.is_none() {
            if let Some(unit) = x_unit {
                return unit;
            }
        }
        if let Some(y) = free_y {
            return (y, false);
        }
        let x = self
            .x_vars
            .iter()
            .copied()
            .find(|&x| self.value[x as usize].is_none() && !self.redundant[x as usize])
            .expect("an uncovered quantified variable remains while branching");
        (x, false)
    }

    fn explore(&mut self, v: Var, val: bool) -> Result<Answer, Abort> {
        self.assign(v, val);
        self.drain_scoped(v);
        if self.cfg.record_trace {
            self.trace.push(TraceEvent::Branch {
                depth: self.depth(),
                var: v,
                value: val,
            });
        }
        let ans = self.node()?;
        if self.cfg.record_trace {
            self.trace.push(TraceEvent::Backtrack {
                depth: self.depth(),
                var: v,
            });
        }
        self.unassign();
        self.restore_drained(v);
        if self.cfg.debug_checks {
            // Conditions may still mention the just-unassigned branch
            // variable until the caller splits the active set on it.
            self.check_consistency(Some(v));
        }
        Ok(ans)
    }

    fn node(&mut self) -> Result<Answer, Abort> {
        self.stats.nodes += 1;
        if self.num_vars <= 60 {
            assert!(
                self.stats.nodes <= 3u64 << self.num_vars,
                "node count exceeded the structural bound"
            );
        }
        self.stats.max_depth = self.stats.max_depth.max(self.depth());
        if let Some(cap) = self.cfg.node_cap {
            if self.stats.nodes > cap {
                return Err(Abort::Node);
            }
        }
        if let Some(deadline) = self.deadline {
            if Instant::now() > deadline {
                return Err(Abort::Time);
            }
        }

        match self.atomic_dseqs() {
            AtomicOutcome::Sat => return Ok(Answer::Sat),
            AtomicOutcome::Unsat(cid) => return Ok(Answer::Unsat(cid)),
            AtomicOutcome::Unknown => {}
        }

        let (v, first) = self.pick_variable();
        let ans0 = self.explore(v, first)?;
        let asym0 = self.deactivate_asymmetric(v);

        // The right branch is skipped when no D-sequent depends on the branch
        // value and the left answer carries over: a satisfiable left branch
        // left only symmetric D-sequents, and a conflict clause not
        // mentioning the branch variable is falsified on both sides.
        let skip = asym0.is_empty()
            && match ans0 {
                Answer::Sat => true,
                Answer::Unsat(c0) => !self.clauses[c0].contains_var(v),
            };
        if skip {
            return Ok(match ans0 {
                Answer::Unsat(c0) => {
                    self.process_unsat_clause(c0);
                    Answer::Unsat(c0)
                }
                Answer::Sat => {
                    if self.is_x[v as usize] {
                        self.derive_monotone(v);
                    }
                    Answer::Sat
                }
            });
        }

        if let Answer::Unsat(c0) = ans0 {
            if self.cfg.conflict_retention {
                self.pinned.push(c0);
            }
        }
        let ans1 = self.explore(v, !first)?;
        if let Answer::Unsat(_) = ans0 {
            if self.cfg.conflict_retention {
                self.pinned.pop();
            }
        }
        let asym1 = self.deactivate_asymmetric(v);
        Ok(self.merge(v, first, ans0, ans1, asym0, asym1))
    }

    fn merge(
        &mut self,
        v: Var,
        first: bool,
        ans0: Answer,
        ans1: Answer,
        asym0: Vec<DSequent>,
        asym1: Vec<DSequent>,
    ) -> Answer {
        match (ans0, ans1) {
            (Answer::Unsat(c0), Answer::Unsat(c1)) => {
                // Both stashes are dropped: the merged conflict clause is
                // falsified here, so every variable they covered is re-covered
                // from it with a condition free of the branch variable.
                drop(asym0);
                drop(asym1);
                let ans = if !self.clauses[c0].contains_var(v) {
                    c0
                } else if !self.clauses[c1].contains_var(v) {
                    c1
                } else {
                    self.add_resolvent(c0, c1, v)
                };
                if self.cfg.conflict_retention {
                    for c in [c0, c1] {
                        if c != ans
                            && self.alive[c]
                            && self.transient[c]
                            && !self.pinned.contains(&c)
                            && self.clause_subsumes(ans, c)
                        {
                            self.tombstone_clause(c);
                        }
                    }
                }
                self.process_unsat_clause(ans);
                Answer::Unsat(ans)
            }
            _ => {
                let mut right: HashMap<Var, DSequent> =
                    asym1.into_iter().map(|d| (d.var(), d)).collect();
                for s0 in asym0 {
                    let x = s0.var();
                    if let Some(s1) = right.remove(&x) {
                        self.join_at(v, &s0, &s1);
                    } else if matches!(ans0, Answer::Unsat(_)) {
                        // The right branch kept this variable covered by a
                        // symmetric D-sequent, and the left subspace has no
                        // satisfying extensions; the cover stays as is.
                        debug_assert!(self.redundant[x as usize]);
                    } else {
                        // Anchor the symmetric right-branch D-sequent to the
                        // right branch value so it can be joined; extending
                        // the condition of a valid D-sequent keeps it valid.
                        let s1 = self
                            .active
                            .get(x)
                            .cloned()
                            .expect("the right branch re-covers every asymmetric variable");
                        let extended = DSequent::new(
                            s1.condition()
                                .union(&Assignment::single(v, !first))
                                .expect("branch variable is unassigned in a symmetric condition"),
                            s1.scope().clone(),
                            s1.vars().clone(),
                            s1.origin().clone(),
                        )
                        .expect("anchoring preserves D-sequent shape");
                        self.join_at(v, &s0, &extended);
                    }
                }
                debug_assert!(
                    right.is_empty(),
                    "right branch derived asymmetric D-sequents only for stashed variables"
                );
                if self.is_x[v as usize] {
                    self.derive_monotone(v);
                }
                Answer::Sat
            }
        }
    }

    fn join_at(&mut self, v: Var, s0: &DSequent, s1: &DSequent) {
        let x = s0.var();
        let joined = join_dsequents(s0, s1, v)
            .expect("join side conditions hold for branch-local D-sequents");
        self.stats.joins += 1;
        if self.cfg.record_trace {
            self.trace.push(TraceEvent::Join {
                depth: self.depth(),
                on: v,
                dseq: DseqRecord::from_dsequent(&joined),
            });
        }
        if self.redundant[x as usize] {
            if self.cfg.reuse_dseqs {
                self.pi[x as usize].push(joined.clone());
            }
            self.active.remove(x);
            self.active
                .insert(joined)
                .expect("the joined D-sequent replaces the right-branch one");
        } else {
            // The right-branch parent was unmarked by the post-branch split;
            // activating the join restores the redundancy marks.
            self.activate(joined, true);
        }
    }

    /// Recomputes every maintained counter from scratch and compares: any
    /// drift means a backtrack failed to restore state exactly.
    fn check_consistency(&self, pending: Option<Var>) {
        for (cid, c) in self.clauses.iter().enumerate() {
            let mut n_sat = 0;
            let mut n_fals = 0;
            let mut red = 0;
            for lit in c.lits() {
                let u = lit.var() as usize;
                match self.value[u] {
                    Some(val) if lit.satisfied_by(val) => n_sat += 1,
                    Some(_) => n_fals += 1,
                    None => {}
                }
                if self.redundant[u] {
                    red += 1;
                }
            }
            assert_eq!(self.n_sat[cid], n_sat, "clause {} satisfied-count drift", cid);
            assert_eq!(self.n_fals[cid], n_fals, "clause {} falsified-count drift", cid);
            assert_eq!(self.red_cnt[cid], red, "clause {} redundancy-count drift", cid);
        }
        for v in 1..=self.num_vars {
            assert_eq!(
                self.redundant[v as usize],
                self.active.contains(v),
                "redundancy mark of variable {} out of sync",
                v
            );
        }
        for (v, ds) in self.active.iter() {
            assert!(self.is_x[v as usize]);
            for (cv, cval) in ds.condition().iter() {
                if pending == Some(cv) {
                    continue;
                }
                assert_eq!(
                    self.value[cv as usize],
                    Some(cval),
                    "active D-sequent condition not contained in the assignment: {:?}",
                    ds
                );
            }
            for &s in ds.scope() {
                assert!(
                    self.value[s as usize].is_none(),
                    "active D-sequent scope contains an assigned variable"
                );
            }
        }
    }
}

/// Eliminates the quantified variables of `phi`, returning a quantifier-free
/// formula over the remaining variables together with run statistics and an
/// optional event trace.
pub fn run_qe(phi: &EcnfFormula, cfg: &EngineConfig) -> QeResult {
    let y_empty = (1..=phi.num_vars()).all(|v| phi.is_quantified(v));
    if phi.quantified().is_empty() {
        // Nothing to eliminate; the input already is the answer.
        let constant = if y_empty { Some(phi.cnf().is_empty()) } else { None };
        return QeResult {
            g: phi.cnf().clone(),
            answer_for_empty_y: constant,
            stats: Stats::default(),
            status: RunStatus::Complete,
            trace: Vec::new(),
        };
    }
    if phi.cnf().is_empty() {
        return QeResult {
            g: Cnf::empty(phi.num_vars()),
            answer_for_empty_y: if y_empty { Some(true) } else { None },
            stats: Stats::default(),
            status: RunStatus::Complete,
            trace: Vec::new(),
        };
    }

    let mut solver = Solver::new(phi, cfg);
    let outcome = solver.node();
    let (status, answer) = match outcome {
        Ok(ans) => (RunStatus::Complete, Some(ans)),
        Err(Abort::Node) => (RunStatus::NodeCapExceeded, None),
        Err(Abort::Time) => (RunStatus::TimeCapExceeded, None),
    };
    if let Some(Answer::Sat) = answer {
        debug_assert!(
            solver
                .x_vars
                .iter()
                .all(|&x| solver.active.get(x).is_some_and(|ds| ds.condition().is_empty())),
            "a completed run leaves an unconditional D-sequent per quantified variable"
        );
    }
    let g = match answer {
        Some(Answer::Unsat(_)) => Cnf::new(
            phi.num_vars(),
            vec![Clause::new(0, vec![]).expect("empty clause")],
        )
        .expect("a lone empty clause is well-formed"),
        _ => {
            let kept: Vec<Clause> = solver
                .clauses
                .iter()
                .enumerate()
                .filter(|&(cid, c)| {
                    solver.alive[cid] && !c.vars().any(|u| solver.is_x[u as usize])
                })
                .map(|(_, c)| c.clone())
                .collect();
            Cnf::new(phi.num_vars(), kept).expect("surviving clauses keep unique ids")
        }
    };
    QeResult {
        g,
        answer_for_empty_y: if y_empty {
            answer.map(|a| matches!(a, Answer::Sat))
        } else {
            None
        },
        stats: solver.stats,
        status,
        trace: solver.trace,
    }
}
