//! Assign students to classes from ranked preference lists.
//!
//! The engine turns a capacitated assignment instance into an integral
//! minimum-cost flow problem and solves it exactly. Different utility
//! vectors over received ranks express different policies: plain
//! maximum-utility scales, rank-restricted variants that forbid low
//! choices via penalties, and lexicographic weight stacks for fair,
//! rank-maximal and hybrid matchings. Deferred acceptance and the Boston
//! mechanism are included for comparison, and an exhaustive oracle
//! verifies optimality on small instances.
//!
//! See the `book/` guide for a narrative tour; the `classmatch` binary
//! wires everything into a CSV-driven command line.

pub mod analyze;
pub mod assign;
pub mod flow;
pub mod io;
pub mod mechanisms;
pub mod model;
pub mod oracle;
pub mod rng;

#[doc(hidden)]
pub mod testgen;

pub use analyze::{average_rank, average_utility, compare, profile_of, Rational};
pub use assign::{build_network, preset, restrict, solve_assignment, Preset};
pub use mechanisms::{boston, check_stability, deferred_acceptance, single_tie_break};
pub use model::{
    ClassId, ClassInfo, Instance, Matching, MatchingKind, PenaltyConstants, Profile, StudentId,
    UtilityVector,
};
pub use oracle::{enumerate_matchings, oracle_optimum, oracle_stable_set};

// Every code block in the guide compiles and runs under `cargo test --doc`,
// so the book cannot drift from the library. The `doctest` cfg keeps these
// out of normal builds.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub struct $name;
        };
    }
    chapter!(Introduction, "../../../book/src/introduction.md");
    chapter!(Model, "../../../book/src/model.md");
    chapter!(Flow, "../../../book/src/flow.md");
    chapter!(Models, "../../../book/src/models.md");
    chapter!(Mechanisms, "../../../book/src/mechanisms.md");
    chapter!(Reports, "../../../book/src/reports.md");
    chapter!(Cli, "../../../book/src/cli.md");
    chapter!(Verification, "../../../book/src/verification.md");
}
