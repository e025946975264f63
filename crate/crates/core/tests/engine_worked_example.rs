//! Pins the engine's behavior on the two-clause example with one quantified
//! variable down to the exact event sequence: which D-sequents are derived,
//! in which order, with which conditions, and which resolvent is added.

use std::time::Instant;

use qe_core::cnf::{parse_qdimacs, Cnf, EcnfFormula};
use qe_core::engine::{run_qe, EngineConfig, QeResult, RunStatus, TraceEvent};
use qe_core::oracle::{check_scoped_redundancy, equivalent_to_oracle, OracleConfig};

const EXAMPLE: &str = "p cnf 3 2\ne 3 0\n-1 -3 0\n2 3 0\n";

fn example() -> EcnfFormula {
    parse_qdimacs(EXAMPLE).expect("example parses")
}

fn run_traced() -> QeResult {
    let cfg = EngineConfig {
        record_trace: true,
        debug_checks: true,
        ..EngineConfig::default()
    };
    run_qe(&example(), &cfg)
}

#[test]
fn result_is_the_single_resolvent() {
    let res = run_traced();
    assert_eq!(res.status, RunStatus::Complete);
    assert_eq!(res.answer_for_empty_y, None);
    let clauses: Vec<Vec<i32>> = res
        .g
        .clauses()
        .iter()
        .map(|c| c.lits().iter().map(|l| l.to_dimacs()).collect())
        .collect();
    assert_eq!(clauses, vec![vec![-1, 2]]);
    assert!(equivalent_to_oracle(&res.g, &example(), &OracleConfig::default()).unwrap());
}

#[test]
fn search_counters_are_exact() {
    let res = run_traced();
    assert_eq!(res.stats.nodes, 7);
    assert_eq!(res.stats.max_depth, 3);
    assert_eq!(res.stats.resolvents_added, 1);
    assert_eq!(res.stats.dseqs_from_clause, 1);
    assert_eq!(res.stats.dseqs_from_blocked, 2);
    assert_eq!(res.stats.dseqs_monotone, 0);
    assert_eq!(res.stats.joins, 2);
    assert_eq!(res.stats.dseqs_reused, 0);
}

#[test]
fn trace_is_the_frozen_event_sequence() {
    let res = run_traced();
    let mut lines = Vec::new();
    for ev in &res.trace {
        lines.push(match ev {
            TraceEvent::Branch { depth, var, value } => {
                format!("branch d{} v{}={}", depth, var, u8::from(*value))
            }
            TraceEvent::Backtrack { depth, var } => format!("backtrack d{} v{}", depth, var),
            TraceEvent::Dseq { depth, dseq } => format!(
                "dseq d{} var{} cond{:?} scope{:?} {}",
                depth, dseq.var, dseq.condition, dseq.scope, dseq.origin
            ),
            TraceEvent::Resolvent {
                depth,
                clause_id,
                lits,
            } => format!("resolvent d{} id{} {:?}", depth, clause_id, lits),
            TraceEvent::Join { depth, on, dseq } => format!(
                "join d{} on{} var{} cond{:?} scope{:?}",
                depth, on, dseq.var, dseq.condition, dseq.scope
            ),
            TraceEvent::ClauseDeleted { depth, clause_id } => {
                format!("deleted d{} id{}", depth, clause_id)
            }
        });
    }
    let expected = vec![
        "branch d1 v1=0",
        "dseq d1 var3 cond[-1] scope[3] blocked",
        "backtrack d1 v1",
        "branch d1 v1=1",
        "branch d2 v2=0",
        "branch d3 v3=1",
        "backtrack d3 v3",
        "branch d3 v3=0",
        "backtrack d3 v3",
        "resolvent d2 id2 [-1, 2]",
        "dseq d2 var3 cond[1, -2] scope[3] clause",
        "backtrack d2 v2",
        "branch d2 v2=1",
        "dseq d2 var3 cond[2] scope[3] blocked",
        "backtrack d2 v2",
        "join d1 on2 var3 cond[1] scope[3]",
        "backtrack d1 v1",
        "join d0 on1 var3 cond[] scope[3]",
    ];
    assert_eq!(lines, expected);
}

#[test]
fn clause_dsequent_cites_the_resolvent() {
    let res = run_traced();
    let clause_records: Vec<_> = res
        .trace
        .iter()
        .filter_map(|ev| match ev {
            TraceEvent::Dseq { dseq, .. } if dseq.origin == "clause" => Some(dseq.clone()),
            _ => None,
        })
        .collect();
    assert_eq!(clause_records.len(), 1);
    assert_eq!(clause_records[0].clause_id, Some(2));
}

#[test]
fn every_traced_dsequent_checks_against_the_oracle() {
    let res = run_traced();
    let phi = example();
    let mut clauses = phi.cnf().clauses().to_vec();
    let oracle_cfg = OracleConfig::default();
    let mut checked = 0;
    for ev in &res.trace {
        match ev {
            TraceEvent::Resolvent {
                clause_id, lits, ..
            } => {
                clauses.push(
                    qe_core::cnf::Clause::from_dimacs(*clause_id, lits).expect("traced resolvent"),
                );
            }
            TraceEvent::Dseq { dseq, .. } | TraceEvent::Join { dseq, .. } => {
                let f_prime = EcnfFormula::new(
                    Cnf::new(phi.num_vars(), clauses.clone()).unwrap(),
                    phi.quantified().clone(),
                )
                .unwrap();
                assert!(
                    check_scoped_redundancy(
                        &f_prime,
                        &dseq.condition_assignment(),
                        &dseq.vars_set(),
                        &dseq.scope_set(),
                        &oracle_cfg,
                    )
                    .unwrap(),
                    "D-sequent from trace fails the semantic check: {:?}",
                    dseq
                );
                checked += 1;
            }
            _ => {}
        }
    }
    assert_eq!(checked, 5);
}

#[test]
fn solves_in_under_a_millisecond() {
    let phi = example();
    let cfg = EngineConfig::default();
    // Warm up caches and lazy allocations, then time a fresh run.
    run_qe(&phi, &cfg);
    let start = Instant::now();
    let res = run_qe(&phi, &cfg);
    let elapsed = start.elapsed();
    assert_eq!(res.status, RunStatus::Complete);
    assert!(
        elapsed.as_micros() < 1000,
        "took {:?}, expected under a millisecond",
        elapsed
    );
}
