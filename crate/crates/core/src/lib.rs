//! Proving unrealizability of syntax-guided synthesis problems over linear
//! integer arithmetic (with conditionals) by solving grammar flow equations
//! on a finite set of examples.
//!
//! The usual entry points are [`frontend::parse_problem`],
//! [`cegis::check_unrealizable`] and [`cegis::run_cegis`].

pub mod approx;
pub mod booldom;
pub mod cegis;
pub mod clia;
pub mod frontend;
pub mod gfa;
pub mod grammar;
pub mod ilp;
pub mod logic;
pub mod newton;
pub mod rewrite;
pub mod semilinear;
pub mod synth;

pub use approx::PredicateDomain;
pub use booldom::{BoolVec, BoolVecSet};
pub use cegis::{check_unrealizable, run_cegis, Backend, CegisConfig, CheckResult, Verdict, VerdictKind};
pub use frontend::{parse_examples, parse_problem, PointSpec, Problem, SpecFormula};
pub use gfa::{AbsValue, PolynomialSystem};
pub use grammar::{ExampleSet, NtId, Rtg, Sort, Symbol, Term};
pub use ilp::{IlpError, IlpSolver, Oracle};
pub use semilinear::{LinearSet, SemiLinearSet};

/// Any failure surfaced to a caller of the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at {0}")]
    Parse(#[from] frontend::ParseError),
    #[error(transparent)]
    Check(#[from] cegis::CheckError),
    #[error(transparent)]
    Examples(#[from] grammar::ExampleError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
