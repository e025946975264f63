//! Engine-level validation on random instances: results must match the
//! exhaustive oracle under every feature combination, every traced D-sequent
//! must pass the semantic redundancy check, runs must be deterministic, and
//! resource caps must abort cleanly.

use std::time::Duration;

use qe_core::benchgen::{base_block, copies_node_bound, gen_copies, gen_random_ecnf};
use qe_core::cnf::{parse_qdimacs, Clause, Cnf, EcnfFormula};
use qe_core::engine::{run_qe, EngineConfig, RunStatus, TraceEvent};
use qe_core::oracle::{
    check_scoped_redundancy, cnf_implies_clause, equivalent_to_oracle, OracleConfig,
};

fn sweep_instances() -> Vec<EcnfFormula> {
    let mut out = Vec::new();
    for n_vars in 4..=10u32 {
        for seed in 0..12u64 {
            let n_clauses = if seed % 2 == 0 { 2 * n_vars } else { 3 * n_vars } as usize;
            out.push(gen_random_ecnf(
                1000 * n_vars as u64 + seed,
                n_vars,
                n_clauses,
                3,
                0.5,
            ));
        }
    }
    out
}

fn assert_matches_oracle(cfg: &EngineConfig, instances: &[EcnfFormula]) -> u64 {
    let oracle_cfg = OracleConfig::default();
    let mut reused = 0;
    for (i, phi) in instances.iter().enumerate() {
        let res = run_qe(phi, cfg);
        assert_eq!(res.status, RunStatus::Complete, "instance {} capped", i);
        for c in res.g.clauses() {
            assert!(
                !c.vars().any(|v| phi.is_quantified(v)),
                "instance {}: result clause {:?} mentions a quantified variable",
                i,
                c
            );
        }
        assert!(
            equivalent_to_oracle(&res.g, phi, &oracle_cfg).unwrap(),
            "instance {}: result differs from the oracle",
            i
        );
        reused += res.stats.dseqs_reused;
    }
    reused
}

#[test]
fn default_run_matches_oracle_on_random_instances() {
    let cfg = EngineConfig {
        debug_checks: true,
        ..EngineConfig::default()
    };
    assert_matches_oracle(&cfg, &sweep_instances());
}

#[test]
fn reuse_matches_oracle_and_reactivates_dsequents() {
    let cfg = EngineConfig {
        reuse_dseqs: true,
        debug_checks: true,
        ..EngineConfig::default()
    };
    let reused = assert_matches_oracle(&cfg, &sweep_instances());
    assert!(
        reused > 0,
        "the sweep never exercised D-sequent reactivation"
    );
}

#[test]
fn conflict_retention_matches_oracle() {
    let cfg = EngineConfig {
        conflict_retention: true,
        debug_checks: true,
        record_trace: true,
        ..EngineConfig::default()
    };
    let instances = sweep_instances();
    assert_matches_oracle(&cfg, &instances);
    // The flag must actually delete something somewhere in the sweep.
    let deleted: usize = instances
        .iter()
        .map(|phi| {
            run_qe(phi, &cfg)
                .trace
                .iter()
                .filter(|ev| matches!(ev, TraceEvent::ClauseDeleted { .. }))
                .count()
        })
        .sum();
    assert!(deleted > 0, "the sweep never deleted a superseded resolvent");
}

#[test]
fn retention_combined_with_reuse_matches_oracle() {
    let cfg = EngineConfig {
        reuse_dseqs: true,
        conflict_retention: true,
        debug_checks: true,
        ..EngineConfig::default()
    };
    assert_matches_oracle(&cfg, &sweep_instances());
}

#[test]
fn result_clauses_are_implied_by_the_input() {
    let oracle_cfg = OracleConfig::default();
    for phi in sweep_instances().iter().take(40) {
        let res = run_qe(phi, &EngineConfig::default());
        for c in res.g.clauses() {
            assert!(
                cnf_implies_clause(phi.cnf(), c, &oracle_cfg).unwrap(),
                "result clause {:?} is not implied by the input",
                c
            );
        }
    }
}

/// Replays a trace: accumulates resolvents into a growing clause list and
/// checks every derived or joined D-sequent against the semantic redundancy
/// oracle at the moment of its derivation. Deleted clauses stay in the
/// accumulated formula; they are implied, and validity survives implied
/// clauses.
fn check_trace(phi: &EcnfFormula, trace: &[TraceEvent], oracle_cfg: &OracleConfig) -> usize {
    let mut clauses = phi.cnf().clauses().to_vec();
    let mut checked = 0;
    for ev in trace {
        match ev {
            TraceEvent::Resolvent {
                clause_id, lits, ..
            } => {
                clauses.push(Clause::from_dimacs(*clause_id, lits).expect("traced resolvent"));
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
                        oracle_cfg,
                    )
                    .unwrap(),
                    "trace D-sequent fails the semantic check: {:?}",
                    dseq
                );
                checked += 1;
            }
            _ => {}
        }
    }
    checked
}

#[test]
fn every_traced_dsequent_passes_the_semantic_check() {
    let oracle_cfg = OracleConfig::default();
    let mut checked = 0;
    for n_vars in 4..=9u32 {
        for seed in 0..8u64 {
            let phi = gen_random_ecnf(7000 + 100 * n_vars as u64 + seed, n_vars, 2 * n_vars as usize, 3, 0.5);
            for cfg in [
                EngineConfig {
                    record_trace: true,
                    ..EngineConfig::default()
                },
                EngineConfig {
                    record_trace: true,
                    reuse_dseqs: true,
                    conflict_retention: true,
                    ..EngineConfig::default()
                },
            ] {
                let res = run_qe(&phi, &cfg);
                checked += check_trace(&phi, &res.trace, &oracle_cfg);
            }
        }
    }
    assert!(checked > 500, "only {} D-sequents checked", checked);
}

#[test]
fn identical_runs_give_identical_results() {
    let configs = [
        EngineConfig {
            record_trace: true,
            ..EngineConfig::default()
        },
        EngineConfig {
            record_trace: true,
            reuse_dseqs: true,
            ..EngineConfig::default()
        },
        EngineConfig {
            record_trace: true,
            conflict_retention: true,
            ..EngineConfig::default()
        },
    ];
    for phi in sweep_instances().iter().step_by(7) {
        for cfg in &configs {
            let a = run_qe(phi, cfg);
            let b = run_qe(phi, cfg);
            assert_eq!(
                qe_core::cnf::emit_dimacs(&a.g),
                qe_core::cnf::emit_dimacs(&b.g)
            );
            assert_eq!(a.stats, b.stats);
            assert_eq!(
                serde_json::to_string(&a.trace).unwrap(),
                serde_json::to_string(&b.trace).unwrap()
            );
        }
    }
}

#[test]
fn node_cap_aborts_with_partial_result() {
    let phi = gen_random_ecnf(42, 10, 30, 3, 0.5);
    let full = run_qe(&phi, &EngineConfig::default());
    assert!(full.stats.nodes > 4);
    let capped = run_qe(
        &phi,
        &EngineConfig {
            node_cap: Some(4),
            ..EngineConfig::default()
        },
    );
    assert_eq!(capped.status, RunStatus::NodeCapExceeded);
    assert_eq!(capped.stats.nodes, 5);
    assert!(capped
        .g
        .clauses()
        .iter()
        .all(|c| !c.vars().any(|v| phi.is_quantified(v))));
}

#[test]
fn time_cap_aborts_immediately_when_expired() {
    let phi = gen_random_ecnf(43, 10, 30, 3, 0.5);
    let res = run_qe(
        &phi,
        &EngineConfig {
            time_cap: Some(Duration::ZERO),
            ..EngineConfig::default()
        },
    );
    assert_eq!(res.status, RunStatus::TimeCapExceeded);
}

#[test]
fn no_quantified_variables_returns_the_input() {
    let phi = parse_qdimacs("p cnf 3 2\n1 2 0\n-2 3 0\n").unwrap();
    assert!(phi.quantified().is_empty());
    let res = run_qe(&phi, &EngineConfig::default());
    assert_eq!(
        qe_core::cnf::emit_dimacs(&res.g),
        qe_core::cnf::emit_dimacs(phi.cnf())
    );
    assert_eq!(res.stats.nodes, 0);
    assert_eq!(res.answer_for_empty_y, None);
}

#[test]
fn empty_formula_returns_true() {
    let phi = parse_qdimacs("p cnf 3 0\ne 1 2 0\n").unwrap();
    let res = run_qe(&phi, &EngineConfig::default());
    assert!(res.g.is_empty());
    assert_eq!(res.answer_for_empty_y, None);
}

#[test]
fn unsatisfiable_input_yields_the_empty_clause() {
    // (x1) and (not x1): no satisfying assignment exists for any value of
    // the (empty) free part.
    let phi = parse_qdimacs("p cnf 1 2\ne 1 0\n1 0\n-1 0\n").unwrap();
    let res = run_qe(&phi, &EngineConfig::default());
    assert_eq!(res.g.len(), 1);
    assert!(res.g.clauses()[0].is_empty());
    assert_eq!(res.answer_for_empty_y, Some(false));
}

#[test]
fn satisfiable_input_without_free_variables_returns_true() {
    let phi = parse_qdimacs("p cnf 2 2\ne 1 2 0\n1 2 0\n-1 2 0\n").unwrap();
    let res = run_qe(&phi, &EngineConfig::default());
    assert!(res.g.is_empty());
    assert_eq!(res.answer_for_empty_y, Some(true));
}

#[test]
fn unsat_subspace_from_free_variables_is_reflected() {
    // y1 must be false: (¬y1 ∨ x), (¬y1 ∨ ¬x).
    let phi = parse_qdimacs("p cnf 2 2\ne 2 0\n-1 2 0\n-1 -2 0\n").unwrap();
    let res = run_qe(&phi, &EngineConfig::default());
    assert!(equivalent_to_oracle(&res.g, &phi, &OracleConfig::default()).unwrap());
    let clauses: Vec<Vec<i32>> = res
        .g
        .clauses()
        .iter()
        .map(|c| c.lits().iter().map(|l| l.to_dimacs()).collect())
        .collect();
    assert_eq!(clauses, vec![vec![-1]]);
}

#[test]
fn copies_stay_within_the_node_bound_and_match_the_oracle() {
    let base = base_block();
    let cfg = EngineConfig {
        reuse_dseqs: true,
        debug_checks: true,
        ..EngineConfig::default()
    };
    for k in [1u32, 2, 3, 4] {
        let phi = gen_copies(&base, k);
        let res = run_qe(&phi, &cfg);
        assert_eq!(res.status, RunStatus::Complete);
        assert!(
            u128::from(res.stats.nodes) <= copies_node_bound(k),
            "k={}: {} nodes exceeds the budget {}",
            k,
            res.stats.nodes,
            copies_node_bound(k)
        );
        assert!(
            equivalent_to_oracle(&res.g, &phi, &OracleConfig::default()).unwrap(),
            "k={}: result differs from the oracle",
            k
        );
    }
}

#[test]
fn copies_dsequents_stay_inside_their_block() {
    // On variable-disjoint copies, every D-sequent the engine derives must
    // involve variables of a single copy only.
    let phi = gen_copies(&base_block(), 5);
    let cfg = EngineConfig {
        record_trace: true,
        reuse_dseqs: true,
        ..EngineConfig::default()
    };
    let res = run_qe(&phi, &cfg);
    assert_eq!(res.status, RunStatus::Complete);
    let block_of = |v: u32| (v - 1) / 4;
    let mut seen = 0;
    for ev in &res.trace {
        if let TraceEvent::Dseq { dseq, .. } | TraceEvent::Join { dseq, .. } = ev {
            let home = block_of(dseq.var);
            for &code in &dseq.condition {
                assert_eq!(
                    block_of(code.unsigned_abs()),
                    home,
                    "D-sequent for variable {} conditioned outside its block",
                    dseq.var
                );
            }
            for &v in &dseq.vars {
                assert_eq!(block_of(v), home);
            }
            seen += 1;
        }
    }
    assert!(seen >= 10);
}
