//! Prints edge Green functions per channel and per state at given couplings.
//! Usage: greens [W ...]

use edchain::{
    lowest_k, ModeIndex, ModelParams, ParitySector, SectorBasis, SparseHamiltonian, Species,
};

fn main() {
    let ws: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("W value"))
        .collect();
    let ws = if ws.is_empty() { vec![10.0, 16.0] } else { ws };
    let basis = SectorBasis::enumerate(7, 7, ParitySector::Even).unwrap();
    for w in ws {
        let h = SparseHamiltonian::build(&ModelParams::preset(w), &basis).unwrap();
        let res = lowest_k(&h, 4, 1e-10, 1).unwrap();
        println!("W = {w}");
        for (s, vec) in res.eigenvectors.iter().enumerate() {
            print!("  state {s} E={:+.6}", res.eigenvalues[s]);
            for (label, cross) in [("same ^+", false), ("orb ^-", true)] {
                let g: Vec<String> = (1..=7)
                    .map(|j| {
                        let v = edchain::green_function(vec, &basis, Species::UpPlus, j, cross)
                            .unwrap();
                        format!("{v:+.3e}")
                    })
                    .collect();
                print!("  [{label}] {}", g.join(" "));
            }
            // parity-partner channel: create (up,+) at 1, annihilate (down,-) at j
            let g: Vec<String> = (1..=7)
                .map(|j| {
                    let v = edchain::green_general(
                        vec,
                        &basis,
                        ModeIndex::new(Species::UpPlus, 1),
                        ModeIndex::new(Species::DownMinus, j),
                    )
                    .unwrap();
                    format!("{v:+.3e}")
                })
                .collect();
            println!("  [dn -] {}", g.join(" "));
        }
    }
}
