//! Quench the Néel state and the optimized initial state into PXP at L = 12
//! and compare their effective dimensions and first echo revival.

use scarquench::basis::neel;
use scarquench::quench::{default_time_grid, effective_dimension, loschmidt, OverlapDistribution};
use scarquench::scan::{reoptimize, PrequenchSolver};
use scarquench::{PostQuench, PrequenchParams, Route, DEFAULT_ZFIELD_EPS};

fn summarize(name: &str, ov: &OverlapDistribution) {
    let echo = loschmidt(ov, &default_time_grid());
    let revival = echo.first_revival(0.05);
    println!("{name:>10}: D_eff = {:8.4}, first revival {:?}", effective_dimension(ov), revival);
}

fn main() -> scarquench::Result<()> {
    let len = 12;
    let post = PostQuench::new(len, DEFAULT_ZFIELD_EPS, Route::Sectors)?;
    summarize("Neel", &post.overlaps(&post.basis.product_state(neel(len))?)?);

    let solver = PrequenchSolver::new(&post);
    let best = reoptimize(&post, &solver, 1.0, 0.1, 0.02)?;
    let state = solver.resolve(PrequenchParams::new(best.g2x, best.g2y, -1.0))?.state;
    println!("optimum at g2x = {}, g2y = {}", best.g2x, best.g2y);
    summarize("optimized", &post.overlaps(&state)?);
    Ok(())
}
