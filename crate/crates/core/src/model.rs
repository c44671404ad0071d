//! Hamiltonian assembly over a sector basis, plus the model's symmetry
//! transforms and a residual-based symmetry checker.
//!
//! The Hamiltonian is a sum of four term families per site: nearest-neighbor
//! tunneling, on-site density-density couplings, spin-orbit hops, and the
//! on-site two-body spin-exchange term. All couplings are real, so the
//! matrix is real-symmetric; every Hermitian-conjugate pair of operator
//! strings is added explicitly.

use crate::error::{Error, Result};
use crate::fock::{
    apply_string, parity_plus, FockState, ModeIndex, OpKind, SectorBasis, Species,
};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// Coupling set, in units of |T|.
///
/// `so_fwd` and `so_bwd` are the two spin-orbit amplitudes `b + alpha_R`
/// and `b - alpha_R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    pub t: f64,
    pub u_plus: f64,
    pub u_minus: f64,
    pub u: f64,
    pub w: f64,
    pub so_fwd: f64,
    pub so_bwd: f64,
}

impl ModelParams {
    /// The reference parameter set: T=-1, (U+-, U, b+aR, b-aR) = (0,0,8,0).
    pub fn preset(w: f64) -> ModelParams {
        ModelParams {
            t: -1.0,
            u_plus: 0.0,
            u_minus: 0.0,
            u: 0.0,
            w,
            so_fwd: 8.0,
            so_bwd: 0.0,
        }
    }

    pub fn with_w(mut self, w: f64) -> ModelParams {
        self.w = w;
        self
    }

    /// Zeeman amplitude b = (so_fwd + so_bwd)/2.
    pub fn b(&self) -> f64 {
        0.5 * (self.so_fwd + self.so_bwd)
    }

    /// Rashba amplitude alpha_R = (so_fwd - so_bwd)/2.
    pub fn alpha_r(&self) -> f64 {
        0.5 * (self.so_fwd - self.so_bwd)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::preset(0.0)
    }
}

/// One off-diagonal operator string with its coupling.
#[derive(Clone, Debug)]
struct OpString {
    coeff: f64,
    ops: Vec<(OpKind, ModeIndex)>,
}

fn two_op(coeff: f64, create: ModeIndex, annihilate: ModeIndex) -> OpString {
    OpString {
        coeff,
        ops: vec![(OpKind::Create, create), (OpKind::Annihilate, annihilate)],
    }
}

/// All off-diagonal operator strings of the model on an open chain of `l`
/// sites, Hermitian-conjugate partners included. Strings with zero coupling
/// are dropped.
fn op_strings(params: &ModelParams, l: usize) -> Vec<OpString> {
    let mut terms = Vec::new();
    let mut push_pair = |coeff: f64, create: ModeIndex, annihilate: ModeIndex| {
        if coeff != 0.0 {
            terms.push(two_op(coeff, create, annihilate));
            terms.push(two_op(coeff, annihilate, create));
        }
    };

    for j in 1..l {
        // tunneling: T (a†_{s,j+1} a_{s,j} + h.c.)
        for sp in Species::ALL {
            push_pair(
                params.t,
                ModeIndex::new(sp, j + 1),
                ModeIndex::new(sp, j),
            );
        }
        // spin-orbit, forward: (b+aR)(a†_{up+,j} a_{down-,j+1} + a†_{up-,j} a_{down+,j+1} + h.c.)
        push_pair(
            params.so_fwd,
            ModeIndex::new(Species::UpPlus, j),
            ModeIndex::new(Species::DownMinus, j + 1),
        );
        push_pair(
            params.so_fwd,
            ModeIndex::new(Species::UpMinus, j),
            ModeIndex::new(Species::DownPlus, j + 1),
        );
        // spin-orbit, backward: (b-aR)(a†_{up+,j+1} a_{down-,j} + a†_{up-,j+1} a_{down+,j} + h.c.)
        push_pair(
            params.so_bwd,
            ModeIndex::new(Species::UpPlus, j + 1),
            ModeIndex::new(Species::DownMinus, j),
        );
        push_pair(
            params.so_bwd,
            ModeIndex::new(Species::UpMinus, j + 1),
            ModeIndex::new(Species::DownPlus, j),
        );
    }

    // spin exchange: W (a†_{up+,j} a†_{down-,j} a_{down+,j} a_{up-,j} + h.c.)
    if params.w != 0.0 {
        for j in 1..=l {
            terms.push(OpString {
                coeff: params.w,
                ops: vec![
                    (OpKind::Create, ModeIndex::new(Species::UpPlus, j)),
                    (OpKind::Create, ModeIndex::new(Species::DownMinus, j)),
                    (OpKind::Annihilate, ModeIndex::new(Species::DownPlus, j)),
                    (OpKind::Annihilate, ModeIndex::new(Species::UpMinus, j)),
                ],
            });
            terms.push(OpString {
                coeff: params.w,
                ops: vec![
                    (OpKind::Create, ModeIndex::new(Species::UpMinus, j)),
                    (OpKind::Create, ModeIndex::new(Species::DownPlus, j)),
                    (OpKind::Annihilate, ModeIndex::new(Species::DownMinus, j)),
                    (OpKind::Annihilate, ModeIndex::new(Species::UpPlus, j)),
                ],
            });
        }
    }
    terms
}

/// On-site density-density energy of a state.
fn diagonal_energy(params: &ModelParams, state: FockState, l: usize) -> f64 {
    let mut e = 0.0;
    for j in 0..l {
        let nib = (state.0 >> (4 * j)) & 0xF;
        let n_up = (nib & 1) as f64; // (up,+)
        let n_dp = ((nib >> 1) & 1) as f64; // (down,+)
        let n_um = ((nib >> 2) & 1) as f64; // (up,-)
        let n_dm = ((nib >> 3) & 1) as f64; // (down,-)
        e += params.u_plus * n_up * n_dp;
        e += params.u_minus * n_dm * n_um;
        e += params.u * (n_um + n_dm) * (n_up + n_dp);
    }
    e
}

/// Entry-count budget for explicit storage (~1.8 GB of column/value data).
const MAX_EXPLICIT_NNZ: usize = 150_000_000;

/// Real-symmetric sparse Hamiltonian in CSR form over a sector basis.
///
/// No explicit zeros are stored and columns within a row are strictly
/// increasing. Immutable after construction.
pub struct SparseHamiltonian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseHamiltonian {
    /// Assemble the matrix of `<s'|H|s>` over the sector, term by term.
    ///
    /// Every term conserves particle number and the pair parity, so each
    /// generated state must land back in the basis.
    pub fn build(params: &ModelParams, basis: &SectorBasis) -> Result<SparseHamiltonian> {
        let dim = basis.dim();
        if dim == 0 {
            return Err(Error::Domain("empty sector basis".into()));
        }
        let terms = op_strings(params, basis.l());
        let estimate = dim
            .checked_mul(terms.len() + 1)
            .ok_or_else(|| Error::Resource("nnz estimate overflow".into()))?;
        if estimate > MAX_EXPLICIT_NNZ {
            return Err(Error::Resource(format!(
                "estimated {estimate} entries exceeds explicit-storage budget; \
                 use the matrix-free path"
            )));
        }

        let l = basis.l();
        let rows: Vec<Vec<(u32, f64)>> = (0..dim)
            .into_par_iter()
            .map(|r| {
                let state = basis.state(r);
                let mut entries: Vec<(u32, f64)> = Vec::with_capacity(terms.len() / 2);
                let diag = diagonal_energy(params, state, l);
                if diag != 0.0 {
                    entries.push((r as u32, diag));
                }
                for term in &terms {
                    if let Some((sign, target)) = apply_string(&term.ops, state) {
                        let c = basis
                            .index_of(target)
                            .expect("hamiltonian term left the sector");
                        entries.push((c as u32, term.coeff * sign as f64));
                    }
                }
                entries.sort_unstable_by_key(|e| e.0);
                // merge duplicate columns, drop exact zeros
                let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
                for (c, v) in entries {
                    match merged.last_mut() {
                        Some(last) if last.0 == c => last.1 += v,
                        _ => merged.push((c, v)),
                    }
                }
                merged.retain(|e| e.1 != 0.0);
                merged
            })
            .collect();

        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseHamiltonian {
            dim,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    /// y = H x, parallel over rows.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        y.par_iter_mut().enumerate().for_each(|(r, yr)| {
            let (cols, vals) = {
                let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
                (&self.cols[lo..hi], &self.vals[lo..hi])
            };
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c as usize];
            }
            *yr = acc;
        });
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(i) => vals[i],
            Err(_) => 0.0,
        }
    }

    /// Largest |H[r,c] - H[c,r]| over stored entries; exactly 0 by construction.
    pub fn symmetry_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.entry(c as usize, r)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                m[(r, c as usize)] = v;
            }
        }
        m
    }

    /// Write the matrix in Matrix Market coordinate format (general, real),
    /// 1-based indices, for external cross-checks.
    pub fn write_matrix_market<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.dim, self.dim, self.nnz())?;
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(out, "{} {} {:.17e}", r + 1, c as usize + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Matrix-free action of the Hamiltonian, for sectors whose explicit form
/// would exceed the storage budget. Same matrix elements as
/// [`SparseHamiltonian::build`], evaluated on the fly per row.
pub struct MatrixFreeHamiltonian<'a> {
    basis: &'a SectorBasis,
    terms: Vec<OpString>,
    diag: Vec<f64>,
}

impl<'a> MatrixFreeHamiltonian<'a> {
    pub fn new(params: &ModelParams, basis: &'a SectorBasis) -> MatrixFreeHamiltonian<'a> {
        let terms = op_strings(params, basis.l());
        let l = basis.l();
        let diag = (0..basis.dim())
            .map(|r| diagonal_energy(params, basis.state(r), l))
            .collect();
        MatrixFreeHamiltonian { basis, terms, diag }
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// y = H x. Row-gather form: y_r = sum over strings of <r|H|s'> x_{s'},
    /// using symmetry of the explicitly Hermitian term list.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(r, yr)| {
            let state = self.basis.state(r);
            let mut acc = self.diag[r] * x[r];
            for term in &self.terms {
                if let Some((sign, target)) = apply_string(&term.ops, state) {
                    let c = self
                        .basis
                        .index_of(target)
                        .expect("hamiltonian term left the sector");
                    acc += term.coeff * sign as f64 * x[c];
                }
            }
            *yr = acc;
        });
    }
}

/// Chiral transform: flip pseudo-spin and reflect the chain, j -> L+1-j.
/// Sign is the parity of re-sorting the image modes into canonical order.
pub fn chiral_transform(state: FockState, l: usize) -> (i32, FockState) {
    signed_mode_permutation(state, |m| {
        let site = m.site();
        ModeIndex::new(m.species().spin_flipped(), l + 1 - site)
    })
}

/// On-site species swap (up,+)<->(down,-), (down,+)<->(up,-), with
/// reordering sign. It exchanges the forward and backward spin-orbital
/// hops and the two intra-orbital interactions, so it is a symmetry on
/// its own only when those coefficients are pairwise equal; combined with
/// spatial inversion the hop exchange cancels and only U_+ = U_- remains.
pub fn spin_orbital_flip(state: FockState) -> (i32, FockState) {
    signed_mode_permutation(state, |m| {
        ModeIndex::new(m.species().spin_orbital_flipped(), m.site())
    })
}

/// Relabel every occupied mode through a permutation and compute the
/// fermionic sign from the inversion count of the image sequence.
fn signed_mode_permutation(
    state: FockState,
    map: impl Fn(ModeIndex) -> ModeIndex,
) -> (i32, FockState) {
    let mut images: Vec<u32> = Vec::with_capacity(state.count() as usize);
    let mut bits = state.0;
    while bits != 0 {
        let m = bits.trailing_zeros();
        images.push(map(ModeIndex(m)).0);
        bits &= bits - 1;
    }
    let mut inversions = 0usize;
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            if images[i] > images[j] {
                inversions += 1;
            }
        }
    }
    let mut out = 0u64;
    for m in &images {
        debug_assert_eq!(out & (1u64 << m), 0, "permutation must be injective");
        out |= 1u64 << m;
    }
    let sign = if inversions % 2 == 0 { 1 } else { -1 };
    (sign, FockState(out))
}

/// Result of a commutator-residual symmetry check.
#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub name: String,
    /// Max-norm residual over sampled columns; exactly 0 for a true
    /// signed-permutation symmetry.
    pub max_violation: f64,
    /// Whether the transform swaps the parity sector.
    pub sector_swapped: bool,
    pub columns_checked: usize,
}

/// Check `H_img * Sigma = Sigma * H_src` column by column, where `Sigma` is
/// the signed permutation induced by `transform`. Pass the same Hamiltonian
/// and basis twice when the transform preserves the sector.
pub fn check_symmetry(
    name: &str,
    h_src: &SparseHamiltonian,
    basis_src: &SectorBasis,
    h_img: &SparseHamiltonian,
    basis_img: &SectorBasis,
    transform: impl Fn(FockState) -> (i32, FockState),
) -> Result<SymmetryReport> {
    let dim = basis_src.dim();
    let sample: Vec<usize> = if dim <= 4096 {
        (0..dim).collect()
    } else {
        let step = dim / 512;
        (0..512).map(|i| i * step).collect()
    };

    let mut sector_swapped = None;
    let mut worst: f64 = 0.0;
    for &s in &sample {
        let src_state = basis_src.state(s);
        let (sgn_s, img_state) = transform(src_state);
        let swapped = parity_plus(img_state) != parity_plus(src_state);
        match sector_swapped {
            None => sector_swapped = Some(swapped),
            Some(prev) if prev != swapped => {
                return Err(Error::Domain(format!(
                    "transform '{name}' maps states inconsistently across parity sectors"
                )))
            }
            _ => {}
        }
        let s_img = basis_img.index_of(img_state).ok_or_else(|| {
            Error::Domain(format!(
                "transform '{name}' leaves the (N, parity) family of the image basis"
            ))
        })?;

        // u = Sigma * (H_src e_s), sparse
        let mut u: Vec<(usize, f64)> = Vec::new();
        let (cols, vals) = h_src.row(s);
        for (&c, &v) in cols.iter().zip(vals) {
            let (sgn_c, img_c) = transform(basis_src.state(c as usize));
            let idx = basis_img.index_of(img_c).ok_or_else(|| {
                Error::Domain(format!(
                    "transform '{name}' leaves the (N, parity) family of the image basis"
                ))
            })?;
            u.push((idx, sgn_c as f64 * v));
        }
        u.sort_unstable_by_key(|e| e.0);

        // w = H_img (Sigma e_s) = sgn_s * column s_img of H_img
        let (icols, ivals) = h_img.row(s_img);
        let mut ui = 0;
        let mut wi = 0;
        while ui < u.len() || wi < icols.len() {
            let (urow, uval) = u.get(ui).copied().unwrap_or((usize::MAX, 0.0));
            let (wrow, wval) = if wi < icols.len() {
                (icols[wi] as usize, sgn_s as f64 * ivals[wi])
            } else {
                (usize::MAX, 0.0)
            };
            let diff = if urow == wrow {
                ui += 1;
                wi += 1;
                uval - wval
            } else if urow < wrow {
                ui += 1;
                uval
            } else {
                wi += 1;
                -wval
            };
            worst = worst.max(diff.abs());
        }
    }

    Ok(SymmetryReport {
        name: name.to_string(),
        max_violation: worst,
        sector_swapped: sector_swapped.unwrap_or(false),
        columns_checked: sample.len(),
    })
}
