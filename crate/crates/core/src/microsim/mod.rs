//! Agent-level two-word listener-only Naming Game.
//!
//! Each agent holds A (`+1`), B (`-1`) or the neutral union AB (`0`). In one
//! interaction a speaker utters a word and only the listener updates:
//! `s ← clamp(s + c, -1, 1)`.

mod io;
mod state;

pub use io::{write_observables_csv, write_spin_snapshot, OBSERVABLES_HEADER};
pub use state::{
    alpha_consensus_time, local_mean_field_micro, run, seed_committed, Initializer, MicroState,
    Observables, PairSelection, RunRecord,
};

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(i8)]
pub enum Spin {
    B = -1,
    AB = 0,
    A = 1,
}

impl Spin {
    pub fn value(self) -> i8 {
        self as i8
    }

    pub fn from_value(v: i8) -> Option<Spin> {
        match v {
            -1 => Some(Spin::B),
            0 => Some(Spin::AB),
            1 => Some(Spin::A),
            _ => None,
        }
    }

    /// A ↔ B; AB maps to itself.
    pub fn opposite(self) -> Spin {
        match self {
            Spin::A => Spin::B,
            Spin::B => Spin::A,
            Spin::AB => Spin::AB,
        }
    }

    pub(crate) fn index(self) -> usize {
        (self.value() + 1) as usize
    }
}

/// A word on the wire: `+1` for A, `-1` for B.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i8)]
pub enum Word {
    B = -1,
    A = 1,
}

impl Word {
    pub fn value(self) -> i8 {
        self as i8
    }
}

/// Committed opinions are uttered as-is; a neutral speaker flips a fair coin
/// (one draw from `rng`, only in that case).
pub fn speak<R: Rng + ?Sized>(s: Spin, rng: &mut R) -> Word {
    match s {
        Spin::A => Word::A,
        Spin::B => Word::B,
        Spin::AB => {
            if rng.gen::<bool>() {
                Word::A
            } else {
                Word::B
            }
        }
    }
}

pub fn listen(s: Spin, c: Word) -> Spin {
    match (s.value() + c.value()).clamp(-1, 1) {
        1 => Spin::A,
        0 => Spin::AB,
        _ => Spin::B,
    }
}
