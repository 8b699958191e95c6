//! Bundled coefficient files.

use crate::certify::{parse_decimal_heights, RationalHeights};
use crate::coeffs::parse_heights;
use crate::stepfn::StepFunction;

/// The published 559-interval step function, eight decimals per height.
pub const APPENDIX_A: &str = include_str!("../fixtures/appendix_a.txt");

/// The same table in its original LaTeX `longtable` form.
pub const APPENDIX_A_TEX: &str = include_str!("../fixtures/appendix_a.tex");

/// Best 50-interval function from a `search --n 50 --batch 256 --iters 30000 --seed 7` run.
pub const SEARCH_N50: &str = include_str!("../fixtures/search_n50.txt");

pub fn appendix_a() -> StepFunction {
    StepFunction::new(parse_heights(APPENDIX_A).expect("bundled fixture parses"))
        .expect("bundled fixture is valid")
}

pub fn appendix_a_exact() -> RationalHeights {
    parse_decimal_heights(APPENDIX_A).expect("bundled fixture parses")
}

/// Text of an `n`-interval indicator in the coefficient format.
pub fn ones_text(n: usize) -> String {
    let mut s = format!("# indicator on {n} intervals\n");
    for _ in 0..n {
        s.push_str("1\n");
    }
    s
}
