//! Exact continuous-time Markov chains of the polling system (model I) and
//! of the priority queue with `N`-policy vacation (model II), truncated
//! generator assembly and stationary solves.
//!
//! The truncated stationary distribution is the ground truth every
//! analytic formula and the simulator are checked against.

mod generator;
mod model1;
mod model2;
mod solve;

use std::fmt::Debug;
use std::hash::Hash;

use crate::error::{Error, Result};

pub use generator::{build_truncated_generator, Generator, DEFAULT_STATE_BUDGET};
pub use model1::{dispatch, model1_transitions, Model1Aggregate, Model1State, ModelI, ServerPos};
pub use model2::{model2_transitions, Mode, Model2Aggregate, Model2State, ModelII};
pub use solve::{stationary_distribution, stationary_distribution_with, SolverMethod, SolverOptions, StationaryDist};

/// A state of a chain that can be laid out level by level.
///
/// Generators order states by `(level, state)`, so transitions that change
/// the level by one stay within a narrow band.
pub trait ChainState: Clone + Eq + Hash + Ord + Debug + Send + Sync {
    fn level(&self) -> usize;

    /// Header and per-state leading columns of the CSV export.
    fn csv_header() -> &'static str;
    fn csv_fields(&self) -> String;
}

/// A countable chain together with the box used to truncate it.
pub trait TruncatedModel {
    type State: ChainState;

    /// A state inside every admissible box, used as the enumeration root.
    fn initial_state(&self) -> Self::State;

    /// Outgoing transitions of the untruncated chain.
    fn transitions(&self, s: &Self::State) -> Result<Vec<(Self::State, f64)>>;

    fn within(&self, s: &Self::State, caps: &TruncationCaps) -> bool;
}

/// Per-coordinate maximum counts of a truncated chain. Model II uses
/// `cap1` (high priority) and `cap2` (low priority) only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationCaps {
    pub cap1: usize,
    pub cap2: usize,
    pub cap3: usize,
}

impl TruncationCaps {
    /// Any positive caps; tiny boxes are useful for structural tests.
    pub fn new(cap1: usize, cap2: usize, cap3: usize) -> Result<Self> {
        if cap1 == 0 || cap2 == 0 || cap3 == 0 {
            return Err(Error::InvalidParameter("truncation caps must be positive".into()));
        }
        Ok(Self { cap1, cap2, cap3 })
    }

    pub fn model2(cap1: usize, cap2: usize) -> Result<Self> {
        Self::new(cap1, cap2, 1)
    }

    /// Caps fit for quantitative work with threshold `n`: every used cap at
    /// least `max(n + 2, 4)`.
    pub fn analysis(cap1: usize, cap2: usize, cap3: usize, n: usize) -> Result<Self> {
        let caps = Self::new(cap1, cap2, cap3)?;
        caps.check_analysis(n, true)?;
        Ok(caps)
    }

    pub fn check_analysis(&self, n: usize, with_cap3: bool) -> Result<()> {
        let min = (n + 2).max(4);
        let mut used = vec![self.cap1, self.cap2];
        if with_cap3 {
            used.push(self.cap3);
        }
        if used.iter().any(|&c| c < min) {
            return Err(Error::InvalidParameter(format!(
                "caps {:?} too small for threshold {n}: each must be at least {min}",
                used
            )));
        }
        Ok(())
    }
}
