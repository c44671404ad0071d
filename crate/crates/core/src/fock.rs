//! Fermionic Fock basis: species labels, mode linearization, sector
//! enumeration and elementary creation/annihilation strings with signs.
//!
//! Modes are linearized site-major: mode `m = 4*(j-1) + species` for site
//! `j = 1..L`, so the four species of one site occupy one contiguous nibble
//! and a left-edge site region is a contiguous low-bit prefix. All fermionic
//! signs are defined relative to this fixed order.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt;

/// The four single-site species, ordered (up,+)=0, (down,+)=1, (up,-)=2, (down,-)=3.
///
/// `up/down` is the pseudo-spin, `+/-` the orbital label.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
#[repr(u8)]
pub enum Species {
    UpPlus = 0,
    DownPlus = 1,
    UpMinus = 2,
    DownMinus = 3,
}

impl Species {
    pub const ALL: [Species; 4] = [
        Species::UpPlus,
        Species::DownPlus,
        Species::UpMinus,
        Species::DownMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Species {
        Species::ALL[i]
    }

    /// Flip pseudo-spin only: (up,p) <-> (down,p).
    pub fn spin_flipped(self) -> Species {
        match self {
            Species::UpPlus => Species::DownPlus,
            Species::DownPlus => Species::UpPlus,
            Species::UpMinus => Species::DownMinus,
            Species::DownMinus => Species::UpMinus,
        }
    }

    /// Flip both pseudo-spin and orbital: (a,p) <-> (-a,-p).
    pub fn spin_orbital_flipped(self) -> Species {
        match self {
            Species::UpPlus => Species::DownMinus,
            Species::DownMinus => Species::UpPlus,
            Species::DownPlus => Species::UpMinus,
            Species::UpMinus => Species::DownPlus,
        }
    }

    /// Flip orbital only: (a,p) -> (a,-p).
    pub fn orbital_flipped(self) -> Species {
        match self {
            Species::UpPlus => Species::UpMinus,
            Species::UpMinus => Species::UpPlus,
            Species::DownPlus => Species::DownMinus,
            Species::DownMinus => Species::DownPlus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Species::UpPlus => "up+",
            Species::DownPlus => "down+",
            Species::UpMinus => "up-",
            Species::DownMinus => "down-",
        }
    }

    pub fn from_label(s: &str) -> Option<Species> {
        match s {
            "up+" => Some(Species::UpPlus),
            "down+" => Some(Species::DownPlus),
            "up-" => Some(Species::UpMinus),
            "down-" => Some(Species::DownMinus),
            _ => None,
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Linearized single-particle mode index, `0 <= m < 4L`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ModeIndex(pub u32);

impl ModeIndex {
    /// Mode for `species` at 1-based site `j`.
    pub fn new(species: Species, site: usize) -> ModeIndex {
        debug_assert!(site >= 1);
        ModeIndex((4 * (site - 1) + species.index()) as u32)
    }

    /// 1-based site.
    pub fn site(self) -> usize {
        (self.0 / 4) as usize + 1
    }

    pub fn species(self) -> Species {
        Species::from_index((self.0 % 4) as usize)
    }
}

/// Occupation bit-set over the `4L` modes; bit `m` set <=> mode `m` occupied.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FockState(pub u64);

// Site-major nibble patterns selecting the (up,+)/(down,-) pair (bits 0 and 3
// of every nibble) and the complementary (down,+)/(up,-) pair (bits 1 and 2).
const PLUS_PAIR_MASK: u64 = 0x9999_9999_9999_9999;
const MINUS_PAIR_MASK: u64 = 0x6666_6666_6666_6666;

impl FockState {
    pub fn vacuum() -> FockState {
        FockState(0)
    }

    pub fn occupied(self, m: ModeIndex) -> bool {
        self.0 & (1u64 << m.0) != 0
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    /// Build a state from a set of occupied modes (pure bit union, no sign).
    pub fn from_modes(modes: &[ModeIndex]) -> FockState {
        let mut bits = 0u64;
        for m in modes {
            bits |= 1u64 << m.0;
        }
        FockState(bits)
    }
}

/// (sum_j n_{up,+,j} + n_{down,-,j}) mod 2.
pub fn parity_plus(state: FockState) -> u8 {
    ((state.0 & PLUS_PAIR_MASK).count_ones() & 1) as u8
}

/// (sum_j n_{up,-,j} + n_{down,+,j}) mod 2.
pub fn parity_minus(state: FockState) -> u8 {
    ((state.0 & MINUS_PAIR_MASK).count_ones() & 1) as u8
}

/// Parity of the (up,+)/(down,-) pair restricted to sites `1..=l_a`.
pub fn parity_plus_prefix(state: FockState, l_a: usize) -> u8 {
    let mask = PLUS_PAIR_MASK & low_bits(4 * l_a);
    ((state.0 & mask).count_ones() & 1) as u8
}

fn low_bits(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OpKind {
    Create,
    Annihilate,
}

/// Apply a single creation/annihilation operator. Returns `None` when the
/// occupancy forbids the action; otherwise the flipped state and the sign
/// `(-1)^(# occupied modes below m)`.
pub fn apply_mode_op(kind: OpKind, m: ModeIndex, state: FockState) -> Option<(i32, FockState)> {
    let bit = 1u64 << m.0;
    let occ = state.0 & bit != 0;
    match kind {
        OpKind::Create if occ => return None,
        OpKind::Annihilate if !occ => return None,
        _ => {}
    }
    let below = (state.0 & (bit - 1)).count_ones();
    let sign = if below & 1 == 0 { 1 } else { -1 };
    Some((sign, FockState(state.0 ^ bit)))
}

/// Apply an operator string written left-to-right; the rightmost operator
/// acts first, matching written operator order. `None` if any step fails.
pub fn apply_string(ops: &[(OpKind, ModeIndex)], state: FockState) -> Option<(i32, FockState)> {
    let mut sign = 1i32;
    let mut s = state;
    for &(kind, m) in ops.iter().rev() {
        let (sg, next) = apply_mode_op(kind, m, s)?;
        sign *= sg;
        s = next;
    }
    Some((sign, s))
}

/// Parity sector selector for basis enumeration.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ParitySector {
    Even,
    Odd,
    Unrestricted,
}

impl ParitySector {
    fn admits(self, state: FockState) -> bool {
        match self {
            ParitySector::Even => parity_plus(state) == 0,
            ParitySector::Odd => parity_plus(state) == 1,
            ParitySector::Unrestricted => true,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ParitySector::Even => "even",
            ParitySector::Odd => "odd",
            ParitySector::Unrestricted => "all",
        }
    }
}

/// Ordered enumeration of the Fock states of one `(L, N, parity)` sector,
/// with exact state -> index lookup.
///
/// Immutable after construction; enumeration order (ascending bit patterns)
/// is part of the contract.
pub struct SectorBasis {
    l: usize,
    n: usize,
    parity: ParitySector,
    states: Vec<u64>,
    index: HashMap<u64, u32>,
}

impl SectorBasis {
    /// Enumerate all weight-`n` bit-sets over `4l` modes, filtered by parity
    /// during generation, sorted strictly ascending.
    pub fn enumerate(l: usize, n: usize, parity: ParitySector) -> Result<SectorBasis> {
        if l == 0 || 4 * l > 60 {
            return Err(Error::Domain(format!(
                "site count L={l} out of supported range 1..=15"
            )));
        }
        if n > 4 * l {
            return Err(Error::Domain(format!(
                "particle number N={n} out of range 0..={}",
                4 * l
            )));
        }
        let mut states = Vec::new();
        if n == 0 {
            if parity.admits(FockState(0)) {
                states.push(0u64);
            }
        } else {
            let mut v: u64 = (1u64 << n) - 1;
            let last: u64 = v << (4 * l - n);
            loop {
                if parity.admits(FockState(v)) {
                    states.push(v);
                }
                if v == last {
                    break;
                }
                // Gosper's hack: next higher integer with the same popcount.
                let c = v & v.wrapping_neg();
                let r = v + c;
                v = (((r ^ v) >> 2) / c) | r;
            }
        }
        let index = states
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i as u32))
            .collect();
        Ok(SectorBasis {
            l,
            n,
            parity,
            states,
            index,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parity(&self) -> ParitySector {
        self.parity
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> FockState {
        FockState(self.states[i])
    }

    pub fn index_of(&self, state: FockState) -> Option<usize> {
        self.index.get(&state.0).map(|&i| i as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = FockState> + '_ {
        self.states.iter().map(|&s| FockState(s))
    }
}
