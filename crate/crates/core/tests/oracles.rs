//! Cross-checks of the bit-set operator algebra against an independent
//! dense Jordan-Wigner construction, and of the reduced-density-matrix
//! machinery against brute-force partial traces with explicit reordering
//! signs.

mod common;

use common::*;
use edchain::obs::{self, RegionSpec};
use edchain::{
    dense_all, fock, ModelParams, ParitySector, SectorBasis, SparseHamiltonian, Species,
};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn jw_hamiltonian_matches_all_sectors_l1_l2() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for l in 1..=2usize {
        let mut param_sets = vec![ModelParams::preset(4.0)];
        for _ in 0..5 {
            param_sets.push(random_params(&mut rng));
        }
        for params in &param_sets {
            let full = oracle_hamiltonian(params, l);
            for (n, parity) in all_sectors(l) {
                let basis = SectorBasis::enumerate(l, n, parity).unwrap();
                if basis.dim() == 0 {
                    continue;
                }
                let h = SparseHamiltonian::build(params, &basis).unwrap().to_dense();
                let idx: Vec<usize> = basis.iter().map(|s| s.0 as usize).collect();
                let mut sub = DMatrix::zeros(idx.len(), idx.len());
                for (a, &ia) in idx.iter().enumerate() {
                    for (b, &ib) in idx.iter().enumerate() {
                        sub[(a, b)] = full[(ia, ib)];
                    }
                }
                let d = max_abs_diff(&h, &sub);
                assert!(
                    d <= 1e-12,
                    "L={l} N={n} {:?}: max deviation {d} from the JW oracle",
                    parity
                );
            }
        }
    }
}

#[test]
fn pair_exchange_sign_frozen() {
    // the matrix element between the two on-site pair configurations is -W
    // under the site-major mode layout; freeze it against the oracle
    let w = 3.0;
    let params = ModelParams {
        t: 0.0,
        so_fwd: 0.0,
        ..ModelParams::preset(w)
    };
    let full = oracle_hamiltonian(&params, 1);
    let (a, b) = w_partner_states();
    assert_eq!(full[(a.0 as usize, b.0 as usize)], -w);

    let basis = SectorBasis::enumerate(1, 2, ParitySector::Even).unwrap();
    let h = SparseHamiltonian::build(&params, &basis).unwrap();
    let ia = basis.index_of(a).unwrap();
    let ib = basis.index_of(b).unwrap();
    assert_eq!(h.entry(ia, ib), -w);
}

#[test]
fn anticommutators_of_jw_matrices() {
    // {c_m, c_n^dag} = delta_mn, {c_m, c_n} = 0 on the 2-site full space
    let nm = 8;
    for m in 0..nm {
        for n in 0..nm {
            let cm = jw_annihilator(nm, m);
            let cnd = jw_creator(nm, n);
            let anti = &cm * &cnd + &cnd * &cm;
            let want = if m == n {
                DMatrix::identity(1 << nm, 1 << nm)
            } else {
                DMatrix::zeros(1 << nm, 1 << nm)
            };
            assert!(max_abs_diff(&anti, &want) <= 1e-14, "({m},{n})");
            let cn = jw_annihilator(nm, n);
            let anti2 = &cm * &cn + &cn * &cm;
            assert!(anti2.iter().all(|x| x.abs() <= 1e-14), "({m},{n})");
        }
    }
}

#[test]
fn parity_operator_matches_oracle() {
    // P_+ counts (up,+) and (down,-) occupations mod 2
    let l = 2;
    let nm = 4 * l;
    let mut diag = vec![0u32; 1 << nm];
    for j in 1..=l {
        for s in [Species::UpPlus, Species::DownMinus] {
            let n_op = jw_number(nm, mode(s, j));
            for (i, d) in diag.iter_mut().enumerate() {
                *d += n_op[(i, i)] as u32;
            }
        }
    }
    for (i, d) in diag.iter().enumerate() {
        assert_eq!(
            fock::parity_plus(edchain::FockState(i as u64)),
            (*d % 2) as u8,
            "state {i:#x}"
        );
    }
}

#[test]
fn green_function_matches_jw_sandwich() {
    let l = 2;
    let nm = 4 * l;
    let basis = SectorBasis::enumerate(l, 2, ParitySector::Even).unwrap();
    let params = ModelParams::preset(2.5);
    let h = SparseHamiltonian::build(&params, &basis).unwrap();
    let eig = dense_all(&h).unwrap();
    for state in 0..3usize {
        let vec = &eig.eigenvectors[state];
        let full = embed_full(vec, &basis);
        let fv = nalgebra::DVector::from_vec(full);
        for j in 1..=l {
            for (species, cross) in [
                (Species::UpPlus, false),
                (Species::DownMinus, false),
                (Species::UpPlus, true),
            ] {
                let ann_species = if cross {
                    species.orbital_flipped()
                } else {
                    species
                };
                let op = jw_creator(nm, mode(species, 1)) * jw_annihilator(nm, mode(ann_species, j));
                let want = (fv.transpose() * &op * &fv)[(0, 0)];
                let got = obs::green_function(vec, &basis, species, j, cross).unwrap();
                assert!(
                    (got - want).abs() <= 1e-12,
                    "state {state} j={j} {species:?} cross={cross}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn density_matches_jw_number() {
    let l = 2;
    let nm = 4 * l;
    let basis = SectorBasis::enumerate(l, 3, ParitySector::Odd).unwrap();
    let vec = random_unit(basis.dim(), 77);
    let fv = nalgebra::DVector::from_vec(embed_full(&vec, &basis));
    for j in 1..=l {
        for s in [
            Species::UpPlus,
            Species::DownPlus,
            Species::UpMinus,
            Species::DownMinus,
        ] {
            let op = jw_number(nm, mode(s, j));
            let want = (fv.transpose() * &op * &fv)[(0, 0)];
            let got = obs::density(&vec, &basis, s, j).unwrap();
            assert!((got - want).abs() <= 1e-13);
        }
    }
}

fn rdm_to_dense(rho: &obs::ReducedDensityMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rho.dim, rho.dim);
    for b in &rho.blocks {
        for (pa, &ca) in b.configs.iter().enumerate() {
            for (pb, &cb) in b.configs.iter().enumerate() {
                out[(ca as usize, cb as usize)] = b.matrix[(pa, pb)];
            }
        }
    }
    out
}

#[test]
fn rdm_matches_brute_force_partial_trace() {
    // explicit reordering signs in the oracle; the library omits them on
    // the grounds that they cancel at fixed N, so agreement validates that
    for (l, n, parity, seed) in [
        (2, 2, ParitySector::Even, 1u64),
        (2, 3, ParitySector::Odd, 2),
        (3, 3, ParitySector::Even, 3),
        (3, 3, ParitySector::Odd, 4),
        (3, 5, ParitySector::Even, 5),
        (3, 7, ParitySector::Unrestricted, 6),
    ] {
        let basis = SectorBasis::enumerate(l, n, parity).unwrap();
        let vec = random_unit(basis.dim(), 300 + seed);
        for (j_lo, j_hi) in [(1, 1), (2, 2), (l, l), (1, 2), (2, l)] {
            if j_hi > l || j_lo > j_hi {
                continue;
            }
            let brute = brute_force_rdm(&vec, &basis, j_lo, j_hi);
            let lib = rdm_to_dense(&obs::rdm(&vec, &basis, RegionSpec::new(j_lo, j_hi)).unwrap());
            let d = max_abs_diff(&brute, &lib);
            assert!(
                d <= 1e-12,
                "L={l} N={n} {parity:?} region [{j_lo},{j_hi}]: deviation {d}"
            );
        }
    }
}

#[test]
fn region_entropy_matches_brute_force() {
    for (l, n, parity, seed) in [
        (2, 4, ParitySector::Even, 11u64),
        (3, 4, ParitySector::Even, 12),
        (3, 6, ParitySector::Odd, 13),
    ] {
        let basis = SectorBasis::enumerate(l, n, parity).unwrap();
        let vec = random_unit(basis.dim(), 400 + seed);
        for (j_lo, j_hi) in [(1, 1), (2, 2), (1, l - 1), (2, l)] {
            if j_hi > l || j_lo > j_hi {
                continue;
            }
            let brute = dense_entropy(&brute_force_rdm(&vec, &basis, j_lo, j_hi));
            let lib = obs::region_entropy(&vec, &basis, RegionSpec::new(j_lo, j_hi)).unwrap();
            assert!(
                (brute - lib).abs() <= 1e-10,
                "L={l} N={n} region [{j_lo},{j_hi}]: {lib} vs brute {brute}"
            );
        }
    }
}

#[test]
fn local_parity_matches_brute_force() {
    let l = 3;
    let basis = SectorBasis::enumerate(l, 4, ParitySector::Even).unwrap();
    let vec = random_unit(basis.dim(), 55);
    for l_a in 1..=l {
        let mut want = 0.0;
        for (i, s) in basis.iter().enumerate() {
            let mut count = 0;
            for j in 1..=l_a {
                for sp in [Species::UpPlus, Species::DownMinus] {
                    if s.occupied(edchain::ModeIndex::new(sp, j)) {
                        count += 1;
                    }
                }
            }
            let sign = if count % 2 == 1 { -1.0 } else { 1.0 };
            want += sign * vec[i] * vec[i];
        }
        let got = obs::local_parity_expectation(&vec, &basis, l_a).unwrap();
        assert!((got - want).abs() <= 1e-13);
    }
}
