//! Fixtures shared by the benchmarks.

use unreal_core::{parse_problem, Problem};

pub const G1: &str = include_str!("../../../problems/g1.sy");
pub const G2: &str = include_str!("../../../problems/g2.sy");
pub const GCONST: &str = include_str!("../../../problems/gconst.sy");

pub fn load(src: &str) -> Problem {
    parse_problem(src).expect("bundled problem parses")
}
