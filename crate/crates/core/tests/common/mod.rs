//! Independent dense oracles used by the integration tests.
//!
//! Everything here is built from scratch on the full 2^(4L) space with
//! explicit Jordan-Wigner strings and Kronecker products, sharing no code
//! with the library's bit-twiddling operator application, so agreement is
//! meaningful evidence for the sign conventions.

#![allow(dead_code)]

use edchain::{FockState, ModelParams, ParitySector, SectorBasis, Species};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mode index used by the oracle, derived independently from the layout
/// contract: four species per site, site-major.
pub fn mode(species: Species, site: usize) -> usize {
    4 * (site - 1) + species.index()
}

fn annihilator_2x2() -> DMatrix<f64> {
    // |0><1| in the (empty, occupied) basis
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])
}

fn jw_z_2x2() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

fn id_2x2() -> DMatrix<f64> {
    DMatrix::identity(2, 2)
}

/// Dense annihilation operator for mode `m` of `n_modes`, with the
/// Jordan-Wigner string on all lower modes. Bit `m` of the vector index is
/// the occupation of mode `m`, so higher modes are the slower Kronecker
/// factors.
pub fn jw_annihilator(n_modes: usize, m: usize) -> DMatrix<f64> {
    let mut op = DMatrix::identity(1, 1);
    for i in (0..n_modes).rev() {
        let factor = if i > m {
            id_2x2()
        } else if i == m {
            annihilator_2x2()
        } else {
            jw_z_2x2()
        };
        op = op.kronecker(&factor);
    }
    op
}

pub fn jw_creator(n_modes: usize, m: usize) -> DMatrix<f64> {
    jw_annihilator(n_modes, m).transpose()
}

pub fn jw_number(n_modes: usize, m: usize) -> DMatrix<f64> {
    let c = jw_annihilator(n_modes, m);
    c.transpose() * c
}

/// Full-space Hamiltonian transcribed term by term:
/// tunneling t within each species, two intra-orbital and one inter-orbital
/// density-density coupling, directional spin-orbital hops, and the on-site
/// pair-exchange W term.
pub fn oracle_hamiltonian(params: &ModelParams, l: usize) -> DMatrix<f64> {
    let nm = 4 * l;
    let dim = 1usize << nm;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let cr = |s: Species, j: usize| jw_creator(nm, mode(s, j));
    let an = |s: Species, j: usize| jw_annihilator(nm, mode(s, j));
    let num = |s: Species, j: usize| jw_number(nm, mode(s, j));

    let add_hop = |h: &mut DMatrix<f64>, coef: f64, s_to: Species, j_to: usize, s_from: Species, j_from: usize| {
        if coef != 0.0 {
            let term = cr(s_to, j_to) * an(s_from, j_from);
            *h += coef * (&term + term.transpose());
        }
    };

    for j in 1..=l {
        if j < l {
            for s in [
                Species::UpPlus,
                Species::DownPlus,
                Species::UpMinus,
                Species::DownMinus,
            ] {
                add_hop(&mut h, params.t, s, j + 1, s, j);
            }
            add_hop(&mut h, params.so_fwd, Species::UpPlus, j, Species::DownMinus, j + 1);
            add_hop(&mut h, params.so_fwd, Species::UpMinus, j, Species::DownPlus, j + 1);
            add_hop(&mut h, params.so_bwd, Species::UpPlus, j + 1, Species::DownMinus, j);
            add_hop(&mut h, params.so_bwd, Species::UpMinus, j + 1, Species::DownPlus, j);
        }
        if params.u_plus != 0.0 {
            h += params.u_plus * num(Species::UpPlus, j) * num(Species::DownPlus, j);
        }
        if params.u_minus != 0.0 {
            h += params.u_minus * num(Species::DownMinus, j) * num(Species::UpMinus, j);
        }
        if params.u != 0.0 {
            let n_minus = num(Species::UpMinus, j) + num(Species::DownMinus, j);
            let n_plus = num(Species::UpPlus, j) + num(Species::DownPlus, j);
            h += params.u * n_minus * n_plus;
        }
        if params.w != 0.0 {
            let term = cr(Species::UpPlus, j)
                * cr(Species::DownMinus, j)
                * an(Species::DownPlus, j)
                * an(Species::UpMinus, j);
            h += params.w * (&term + term.transpose());
        }
    }
    h
}

/// Sector Hamiltonian as the submatrix of the full-space oracle at the
/// sector's basis-state indices.
pub fn oracle_sector_matrix(params: &ModelParams, basis: &SectorBasis) -> DMatrix<f64> {
    let full = oracle_hamiltonian(params, basis.l());
    let idx: Vec<usize> = basis.iter().map(|s| s.0 as usize).collect();
    let d = idx.len();
    let mut out = DMatrix::zeros(d, d);
    for (a, &ia) in idx.iter().enumerate() {
        for (b, &ib) in idx.iter().enumerate() {
            out[(a, b)] = full[(ia, ib)];
        }
    }
    out
}

/// Brute-force reduced density matrix over sites [j_lo, j_hi] as a full
/// 2^(4 width) matrix, with the mode-reordering signs carried explicitly:
/// splitting |state> into |region> (x) |rest> costs
/// (-1)^(n_region * n_below_region).
pub fn brute_force_rdm(
    vec: &[f64],
    basis: &SectorBasis,
    j_lo: usize,
    j_hi: usize,
) -> DMatrix<f64> {
    let lo = 4 * (j_lo - 1);
    let wb = 4 * (j_hi - j_lo + 1);
    let rdim = 1usize << wb;
    let mut groups: std::collections::HashMap<u64, Vec<(usize, f64)>> =
        std::collections::HashMap::new();
    for (i, s) in basis.iter().enumerate() {
        let bits = s.0;
        let region = ((bits >> lo) & ((1u64 << wb) - 1)) as usize;
        let low = bits & ((1u64 << lo) - 1);
        let rest = low | ((bits >> (lo + wb)) << lo);
        let n_region = (region as u64).count_ones();
        let n_below = low.count_ones();
        let sign = if (n_region * n_below) % 2 == 0 { 1.0 } else { -1.0 };
        groups.entry(rest).or_default().push((region, sign * vec[i]));
    }
    let mut rho = DMatrix::zeros(rdim, rdim);
    for entries in groups.values() {
        for &(a, va) in entries {
            for &(b, vb) in entries {
                rho[(a, b)] += va * vb;
            }
        }
    }
    rho
}

/// -Tr rho ln rho of a dense density matrix, clipping tiny negatives.
pub fn dense_entropy(rho: &DMatrix<f64>) -> f64 {
    // A density matrix is positive semidefinite, so rows with a zero
    // diagonal are entirely zero; restricting to the nonzero support is
    // exact and keeps the eigensolver away from huge mostly-zero matrices
    // (nalgebra's symmetric_eigen can emit non-finite eigenvalues there).
    let support: Vec<usize> = (0..rho.nrows()).filter(|&i| rho[(i, i)] > 1e-14).collect();
    let mut sub = DMatrix::zeros(support.len(), support.len());
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            sub[(a, b)] = rho[(i, j)];
        }
    }
    let mut s = 0.0;
    for lam in sub.symmetric_eigen().eigenvalues.iter() {
        assert!(lam.is_finite(), "non-finite density-matrix eigenvalue");
        if *lam > 1e-14 {
            s -= lam * lam.ln();
        }
    }
    s
}

/// Embed a sector vector into the full 2^(4L) space by basis-state index.
pub fn embed_full(vec: &[f64], basis: &SectorBasis) -> Vec<f64> {
    let mut full = vec![0.0; 1usize << (4 * basis.l())];
    for (i, s) in basis.iter().enumerate() {
        full[s.0 as usize] = vec[i];
    }
    full
}

pub fn random_unit(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= n;
    }
    v
}

pub fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams {
        t: rng.random_range(-2.0..2.0),
        u_plus: rng.random_range(-3.0..3.0),
        u_minus: rng.random_range(-3.0..3.0),
        u: rng.random_range(-3.0..3.0),
        w: rng.random_range(-10.0..10.0),
        so_fwd: rng.random_range(-8.0..8.0),
        so_bwd: rng.random_range(-8.0..8.0),
    }
}

/// All (N, parity) sectors of an L-site chain, including unrestricted N.
pub fn all_sectors(l: usize) -> Vec<(usize, ParitySector)> {
    let mut v = Vec::new();
    for n in 0..=4 * l {
        for p in [ParitySector::Even, ParitySector::Odd, ParitySector::Unrestricted] {
            v.push((n, p));
        }
    }
    v
}

/// The two pair-exchange partner states on a single site, as full basis
/// states: the (up,+)(down,-) pair and the (up,-)(down,+) pair.
pub fn w_partner_states() -> (FockState, FockState) {
    use edchain::ModeIndex;
    let a = FockState::from_modes(&[
        ModeIndex::new(Species::UpPlus, 1),
        ModeIndex::new(Species::DownMinus, 1),
    ]);
    let b = FockState::from_modes(&[
        ModeIndex::new(Species::UpMinus, 1),
        ModeIndex::new(Species::DownPlus, 1),
    ]);
    (a, b)
}
