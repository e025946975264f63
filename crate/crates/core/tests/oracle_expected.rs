//! Frozen expected values for the semantic oracle, all derived by hand on
//! desk-size formulas. These pin the semantics down before anything is built
//! on top of the oracle.

use qe_core::cnf::{parse_qdimacs, Assignment, Clause, Cnf, EcnfFormula, Var, VarSet};
use qe_core::dseq::{DSequent, DSequentOrigin};
use qe_core::oracle::{
    check_dsequent, check_scoped_redundancy, classify_boundary, cnf_implies_clause,
    equivalent_to_oracle, first_counterexample, is_removable, is_z_boundary_point, oracle_qe,
    BooleanFunctionTable, OracleConfig,
};

fn cfg() -> OracleConfig {
    OracleConfig::default()
}

fn asg(pairs: &[(Var, bool)]) -> Assignment {
    Assignment::from_pairs(pairs.iter().copied()).unwrap()
}

fn clause(id: usize, codes: &[i32]) -> Clause {
    Clause::from_dimacs(id, codes).unwrap()
}

/// Running example: vars y1=1, y2=2, x=3, F = (¬y1∨¬x)(y2∨x), X = {x}.
/// By hand, ∃x[F] is false exactly at y1=1, y2=0, i.e. equivalent to
/// (¬y1 ∨ y2).
fn example() -> EcnfFormula {
    parse_qdimacs("p cnf 3 2\ne 3 0\n-1 -3 0\n2 3 0\n").unwrap()
}

/// The same formula after adding the resolvent of its two clauses on x.
fn example_with_resolvent() -> EcnfFormula {
    parse_qdimacs("p cnf 3 3\ne 3 0\n-1 -3 0\n2 3 0\n-1 2 0\n").unwrap()
}

#[test]
fn quantified_table_of_example_is_implication() {
    let phi = example();
    let expected =
        BooleanFunctionTable::from_cnf(
            &Cnf::new(3, vec![clause(0, &[-1, 2])]).unwrap(),
            &VarSet::from([1, 2]),
            &cfg(),
        )
        .unwrap();
    assert_eq!(oracle_qe(&phi, &cfg()).unwrap(), expected);
}

#[test]
fn example_equivalences() {
    let phi = example();
    let g = Cnf::new(3, vec![clause(0, &[-1, 2])]).unwrap();
    assert!(equivalent_to_oracle(&g, &phi, &cfg()).unwrap());

    // Claiming "true" misses the falsifying row y1=1, y2=0.
    let truth = Cnf::empty(3);
    assert_eq!(
        first_counterexample(&truth, &phi, &cfg()).unwrap(),
        Some(asg(&[(1, true), (2, false)]))
    );

    // (y1) alone is wrong already at the first row y1=0, y2=0.
    let wrong = Cnf::new(3, vec![clause(0, &[1])]).unwrap();
    assert_eq!(
        first_counterexample(&wrong, &phi, &cfg()).unwrap(),
        Some(asg(&[(1, false), (2, false)]))
    );
}

#[test]
fn boundary_point_single_clause() {
    // f = (x1 ∨ x2), p = all-false.
    let f = Cnf::new(2, vec![clause(0, &[1, 2])]).unwrap();
    let p = asg(&[(1, false), (2, false)]);
    assert!(is_z_boundary_point(&f, &p, &VarSet::from([1])).unwrap());
    assert!(is_z_boundary_point(&f, &p, &VarSet::from([2])).unwrap());
    // {x1, x2} is not minimal: no falsified clause has exactly one of them.
    assert!(!is_z_boundary_point(&f, &p, &VarSet::from([1, 2])).unwrap());
    // A satisfying point is no boundary point.
    let sat = asg(&[(1, true), (2, false)]);
    assert!(!is_z_boundary_point(&f, &sat, &VarSet::from([1])).unwrap());
}

#[test]
fn boundary_point_two_units() {
    // f = (x1)(x2), p = all-false: both clauses falsified.
    let f = Cnf::new(2, vec![clause(0, &[1]), clause(1, &[2])]).unwrap();
    let p = asg(&[(1, false), (2, false)]);
    // {x1} leaves the falsified clause (x2) uncovered.
    assert!(!is_z_boundary_point(&f, &p, &VarSet::from([1])).unwrap());
    // {x1, x2} covers both and each variable has its own witness clause.
    assert!(is_z_boundary_point(&f, &p, &VarSet::from([1, 2])).unwrap());
}

#[test]
fn boundary_classification_lists_minimal_sets() {
    // f = (x1 ∨ y)(x2 ∨ y), p = all-false: minimal covers are {y} and
    // {x1, x2}. Vars: x1=1, x2=2, y=3.
    let f = Cnf::new(3, vec![clause(0, &[1, 3]), clause(1, &[2, 3])]).unwrap();
    let p = asg(&[(1, false), (2, false), (3, false)]);
    let c = classify_boundary(&f, &p).unwrap();
    assert_eq!(c.falsified_clause_ids, vec![0, 1]);
    assert_eq!(c.minimal_z_sets, vec![VarSet::from([1, 2]), VarSet::from([3])]);

    // A satisfying point classifies as nothing.
    let sat = asg(&[(1, true), (2, true), (3, false)]);
    let c = classify_boundary(&f, &sat).unwrap();
    assert!(c.falsified_clause_ids.is_empty());
    assert!(c.minimal_z_sets.is_empty());
}

#[test]
fn removability_depends_on_flip_set() {
    // f = (x ∨ y)(¬x ∨ y), vars x=1, y=2, p = all-false.
    let f = Cnf::new(2, vec![clause(0, &[1, 2]), clause(1, &[-1, 2])]).unwrap();
    let p = asg(&[(1, false), (2, false)]);
    // Flipping x alone cannot rescue p: y=0 falsifies one of the clauses
    // either way.
    assert!(is_removable(&f, &p, &VarSet::from([1]), &cfg()).unwrap());
    // Flipping y rescues it.
    assert!(!is_removable(&f, &p, &VarSet::from([2]), &cfg()).unwrap());
    assert!(!is_removable(&f, &p, &VarSet::from([1, 2]), &cfg()).unwrap());
    // The empty flip set only looks at p itself, which falsifies f.
    assert!(is_removable(&f, &p, &VarSet::new(), &cfg()).unwrap());

    // Single clause: flipping x rescues all-false.
    let g = Cnf::new(2, vec![clause(0, &[1, 2])]).unwrap();
    assert!(!is_removable(&g, &p, &VarSet::from([1]), &cfg()).unwrap());
}

#[test]
fn scoped_redundancy_single_unit() {
    // ∃x[(x)]: dropping the x-clause leaves "true", which is equivalent.
    let phi = parse_qdimacs("p cnf 1 1\ne 1 0\n1 0\n").unwrap();
    let x = VarSet::from([1]);
    assert!(check_scoped_redundancy(&phi, &Assignment::empty(), &x, &x, &cfg()).unwrap());
}

#[test]
fn scoped_redundancy_contradictory_units() {
    // ∃x[(x)(¬x)] is false; dropping both clauses would say true.
    let phi = parse_qdimacs("p cnf 1 2\ne 1 0\n1 0\n-1 0\n").unwrap();
    let x = VarSet::from([1]);
    assert!(!check_scoped_redundancy(&phi, &Assignment::empty(), &x, &x, &cfg()).unwrap());
}

#[test]
fn scoped_redundancy_on_example_branches() {
    let phi = example();
    let x = VarSet::from([3]);

    // Under y1=0 the remaining clause (y2∨x) is rescuable by flipping x.
    assert!(check_scoped_redundancy(&phi, &asg(&[(1, false)]), &x, &x, &cfg()).unwrap());
    // Under y2=1 only (¬y1∨¬x) remains, rescuable by flipping x.
    assert!(check_scoped_redundancy(&phi, &asg(&[(2, true)]), &x, &x, &cfg()).unwrap());
    // Under y1=1, y2=0 the cofactor is (¬x)(x): x is not redundant without
    // the resolvent.
    assert!(!check_scoped_redundancy(&phi, &asg(&[(1, true), (2, false)]), &x, &x, &cfg()).unwrap());
    // Nor at the empty condition.
    assert!(!check_scoped_redundancy(&phi, &Assignment::empty(), &x, &x, &cfg()).unwrap());

    // Adding the resolvent (¬y1∨y2) flips both of those to redundant: the
    // unsatisfiable subspace is now witnessed by an x-free clause.
    let phi2 = example_with_resolvent();
    assert!(check_scoped_redundancy(&phi2, &asg(&[(1, true), (2, false)]), &x, &x, &cfg()).unwrap());
    assert!(check_scoped_redundancy(&phi2, &asg(&[(1, true)]), &x, &x, &cfg()).unwrap());
    assert!(check_scoped_redundancy(&phi2, &Assignment::empty(), &x, &x, &cfg()).unwrap());
}

#[test]
fn dsequents_of_the_example_run() {
    let phi = example();
    let phi2 = example_with_resolvent();
    let x = VarSet::from([3]);
    let mk = |cond: &[(Var, bool)]| {
        DSequent::new(asg(cond), x.clone(), x.clone(), DSequentOrigin::BlockedVar(Vec::new())).unwrap()
    };

    // ({y1=0}) -> {x} and ({y2=1}) -> {x} hold for the original formula.
    assert!(check_dsequent(&mk(&[(1, false)]), &phi, &cfg()).unwrap());
    assert!(check_dsequent(&mk(&[(2, true)]), &phi, &cfg()).unwrap());

    // ({y1=1, y2=0}) -> {x}, ({y1=1}) -> {x} and (∅) -> {x} only hold once
    // the resolvent is part of the formula.
    assert!(!check_dsequent(&mk(&[(1, true), (2, false)]), &phi, &cfg()).unwrap());
    assert!(check_dsequent(&mk(&[(1, true), (2, false)]), &phi2, &cfg()).unwrap());
    assert!(check_dsequent(&mk(&[(1, true)]), &phi2, &cfg()).unwrap());
    assert!(check_dsequent(&mk(&[]), &phi2, &cfg()).unwrap());
}

#[test]
fn plain_redundancy_matches_table_comparison() {
    // Dropping all x-clauses of the original example changes the quantified
    // function; after adding the resolvent it does not.
    let phi = example();
    let x = VarSet::from([3]);
    let remainder = phi.cnf().without_var_clauses(&x);
    assert!(remainder.is_empty());
    let as_formula = EcnfFormula::new(remainder, x.clone()).unwrap();
    assert_ne!(
        oracle_qe(&phi, &cfg()).unwrap(),
        oracle_qe(&as_formula, &cfg()).unwrap()
    );

    let phi2 = example_with_resolvent();
    let remainder2 = phi2.cnf().without_var_clauses(&x);
    assert_eq!(remainder2.len(), 1);
    let as_formula2 = EcnfFormula::new(remainder2, x.clone()).unwrap();
    assert_eq!(
        oracle_qe(&phi2, &cfg()).unwrap(),
        oracle_qe(&as_formula2, &cfg()).unwrap()
    );
}

#[test]
fn implication_check() {
    let phi2 = example_with_resolvent();
    // The resolvent is implied by the first two clauses.
    let f = Cnf::new(3, phi2.cnf().clauses()[..2].to_vec()).unwrap();
    assert!(cnf_implies_clause(&f, &phi2.cnf().clauses()[2], &cfg()).unwrap());
    // (y2) is not implied.
    assert!(!cnf_implies_clause(&f, &clause(9, &[2]), &cfg()).unwrap());
}

#[test]
fn degenerate_quantifications() {
    // Empty formula: ∃x[true] is true everywhere.
    let phi = EcnfFormula::new(Cnf::empty(2), VarSet::from([2])).unwrap();
    let t = oracle_qe(&phi, &cfg()).unwrap();
    assert_eq!(t.vars(), &[1]);
    assert!(t.get(0) && t.get(1));

    // Formula with the empty clause: false everywhere.
    let f = Cnf::new(2, vec![Clause::new(0, vec![]).unwrap()]).unwrap();
    let phi = EcnfFormula::new(f, VarSet::from([2])).unwrap();
    let t = oracle_qe(&phi, &cfg()).unwrap();
    assert!(!t.get(0) && !t.get(1));

    // No quantified variables at all: the table is the formula's own.
    let f = Cnf::new(2, vec![clause(0, &[1, -2])]).unwrap();
    let phi = EcnfFormula::new(f.clone(), VarSet::new()).unwrap();
    assert!(equivalent_to_oracle(&f, &phi, &cfg()).unwrap());

    // All variables quantified: the table has a single row.
    let f = Cnf::new(1, vec![clause(0, &[1])]).unwrap();
    let phi = EcnfFormula::new(f, VarSet::from([1])).unwrap();
    let t = oracle_qe(&phi, &cfg()).unwrap();
    assert_eq!(t.rows(), 1);
    assert!(t.get(0));
}
