//! Quick timing probe for the full-size sector. Not part of the test suite.

use edchain::{lowest_k, ModelParams, ParitySector, SectorBasis, SparseHamiltonian};
use std::time::Instant;

fn main() {
    let w: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(13.9);
    let k: usize = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(6);
    let tol: f64 = std::env::args()
        .nth(3)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1e-10);

    let t0 = Instant::now();
    let basis = SectorBasis::enumerate(7, 7, ParitySector::Even).unwrap();
    println!("basis dim {} in {:.2?}", basis.dim(), t0.elapsed());

    let t1 = Instant::now();
    let h = SparseHamiltonian::build(&ModelParams::preset(w), &basis).unwrap();
    println!("assembly nnz {} in {:.2?}", h.nnz(), t1.elapsed());

    let t2 = Instant::now();
    match lowest_k(&h, k, tol, 1) {
        Ok(r) => {
            println!(
                "lowest {k} at W={w}: {:?} ({} matvecs, {:.2?})",
                r.eigenvalues,
                r.iterations,
                t2.elapsed()
            );
            println!("residuals {:?}", r.residuals);
        }
        Err(e) => println!("solve failed after {:.2?}: {e}", t2.elapsed()),
    }
}
