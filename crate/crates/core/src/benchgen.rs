//! Benchmark instance generators: a fixed gate-pair base block, disjoint
//! k-copy composition, and seeded random ∃CNF instances.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cnf::{Clause, Cnf, EcnfFormula, Lit, Var, VarSet};

/// The base block: free vars y1=1, y2=2, quantified x1=3, x2=4, with
/// y1 <-> (x1 ∧ x2) and y2 <-> (x1 ∨ x2). Eliminating x1, x2 leaves exactly
/// (¬y1 ∨ y2), and the block has 3 satisfiable projections onto {y1, y2}.
pub fn base_block() -> EcnfFormula {
    let codes: [&[i32]; 6] = [
        &[-1, 3],
        &[-1, 4],
        &[1, -3, -4],
        &[2, -3],
        &[2, -4],
        &[-2, 3, 4],
    ];
    let clauses = codes
        .iter()
        .enumerate()
        .map(|(id, c)| Clause::from_dimacs(id, c).expect("fixed clauses are well formed"))
        .collect();
    let cnf = Cnf::new(4, clauses).expect("fixed block is well formed");
    EcnfFormula::new(cnf, VarSet::from([3, 4])).expect("quantified vars in range")
}

/// The expected elimination result for copy `i` (1-based) of the base block.
pub fn base_block_copy_result(i: u32) -> Clause {
    let off = ((i - 1) * 4) as i32;
    Clause::from_dimacs((i - 1) as usize, &[-(1 + off), 2 + off]).unwrap()
}

/// `k` variable-disjoint renamed copies of `base`, conjoined. Copy `i`
/// (1-based) maps variable v to (i-1)·numVars(base) + v; clause ids run
/// copy-major in base order.
pub fn gen_copies(base: &EcnfFormula, k: u32) -> EcnfFormula {
    assert!(k > 0, "at least one copy");
    let n = base.num_vars();
    let mut clauses = Vec::with_capacity(base.cnf().len() * k as usize);
    let mut quantified = VarSet::new();
    for i in 0..k {
        let off = i * n;
        for c in base.cnf().clauses() {
            let lits: Vec<Lit> = c
                .lits()
                .iter()
                .map(|l| Lit::new(l.var() + off, l.is_positive()))
                .collect();
            clauses.push(Clause::new(clauses.len(), lits).expect("renaming preserves shape"));
        }
        quantified.extend(base.quantified().iter().map(|&v| v + off));
    }
    let cnf = Cnf::new(n * k, clauses).expect("renamed copies stay in range");
    EcnfFormula::new(cnf, quantified).expect("renamed quantified vars stay in range")
}

/// Search-size budget for one block: 2 · 3^vars · projections, where
/// `projections` counts the block's satisfiable assignments projected onto
/// its free variables.
pub fn block_eta(num_vars: u32, projections: u128) -> u128 {
    2 * 3u128.pow(num_vars) * projections
}

/// Engine-independent node budget for `k` copies of the base block:
/// total vars times the summed per-block budgets. The engine's node count on
/// these instances must stay below this.
pub fn copies_node_bound(k: u32) -> u128 {
    let eta = block_eta(4, 3);
    (4 * k as u128) * (k as u128 * eta)
}

/// Seeded random ∃CNF: `n_clauses` clauses of `clause_len` distinct
/// variables with random polarities (never tautological), quantifying the
/// `round(x_fraction · n_vars)` lowest-numbered variables. Identical seeds
/// and parameters give identical instances.
pub fn gen_random_ecnf(
    seed: u64,
    n_vars: u32,
    n_clauses: usize,
    clause_len: usize,
    x_fraction: f64,
) -> EcnfFormula {
    assert!(n_vars > 0);
    let len = clause_len.clamp(1, n_vars as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clauses = Vec::with_capacity(n_clauses);
    for id in 0..n_clauses {
        let vars = sample(&mut rng, n_vars as usize, len);
        let lits: Vec<Lit> = vars
            .iter()
            .map(|v| Lit::new(v as Var + 1, rng.gen::<bool>()))
            .collect();
        clauses.push(Clause::new(id, lits).expect("distinct vars, no tautology"));
    }
    let n_x = (x_fraction * n_vars as f64).round().clamp(0.0, n_vars as f64) as u32;
    let quantified: VarSet = (1..=n_x).collect();
    let cnf = Cnf::new(n_vars, clauses).expect("sampled vars in range");
    EcnfFormula::new(cnf, quantified).expect("lowest-id vars in range")
}

/// Provenance record emitted next to generated instances.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub copies: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clause_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_fraction: Option<f64>,
    pub num_vars: u32,
    pub num_clauses: usize,
    pub quantified: Vec<Var>,
}

impl Manifest {
    pub fn for_copies(k: u32, phi: &EcnfFormula) -> Manifest {
        Manifest {
            kind: "copies",
            copies: Some(k),
            seed: None,
            clause_len: None,
            x_fraction: None,
            num_vars: phi.num_vars(),
            num_clauses: phi.cnf().len(),
            quantified: phi.quantified().iter().copied().collect(),
        }
    }

    pub fn for_random(
        seed: u64,
        clause_len: usize,
        x_fraction: f64,
        phi: &EcnfFormula,
    ) -> Manifest {
        Manifest {
            kind: "random",
            copies: None,
            seed: Some(seed),
            clause_len: Some(clause_len),
            x_fraction: Some(x_fraction),
            num_vars: phi.num_vars(),
            num_clauses: phi.cnf().len(),
            quantified: phi.quantified().iter().copied().collect(),
        }
    }
}
