//! Quantifier elimination for existentially quantified CNF formulas.
//!
//! Given a formula ∃X[F] with F in CNF, produce a CNF formula G over the free
//! variables Y = V(F) \ X such that G is logically equivalent to ∃X[F].
//!
//! - [`cnf`]: literals, clauses, CNF and ∃CNF formulas, partial assignments,
//!   cofactoring, resolution, and (Q)DIMACS I/O.
//! - [`oracle`]: brute-force semantic checks (truth tables, boundary points,
//!   removability, scoped redundancy, D-sequent validation) used to validate
//!   everything else. Deliberately independent of the engine.
//! - [`dseq`]: dependency sequents (D-sequents) and the operations that
//!   derive and combine them.
//! - [`engine`]: the branching QE engine that derives D-sequents until every
//!   quantified variable is redundant.
//! - [`baselines`]: DP resolution elimination, model enumeration (EnumSA),
//!   and a boundary-point-guided eliminator, for cross-checking and benchmarks.
//! - [`benchgen`]: benchmark instance generators and the bench harness.

pub mod baselines;
pub mod benchgen;
pub mod cnf;
pub mod dseq;
pub mod engine;
pub mod oracle;
