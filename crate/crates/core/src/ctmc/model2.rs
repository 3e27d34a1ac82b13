use std::fmt;
use std::str::FromStr;

use super::{ChainState, StationaryDist, TruncatedModel, TruncationCaps};
use crate::error::{Error, Result};
use crate::model::VacationRates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Vacation sorts first so the vacation state leads its level.
    Vacation,
    Busy,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Vacation => write!(f, "vacation"),
            Mode::Busy => write!(f, "busy"),
        }
    }
}

/// `i` high-priority and `j` low-priority customers.
///
/// Busy with `i > 0` is the server attending the high class, busy with
/// `i = 0` the low class; vacation states have `i = 0` and `j < N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Model2State {
    pub j: usize,
    pub mode: Mode,
    pub i: usize,
}

impl Model2State {
    pub fn busy(i: usize, j: usize) -> Self {
        Self { i, j, mode: Mode::Busy }
    }

    pub fn vacation(j: usize) -> Self {
        Self { i: 0, j, mode: Mode::Vacation }
    }

    pub fn is_valid(&self, n: usize) -> bool {
        match self.mode {
            Mode::Vacation => self.i == 0 && self.j < n,
            Mode::Busy => self.i + self.j > 0,
        }
    }

    pub fn serving_high(&self) -> bool {
        self.mode == Mode::Busy && self.i > 0
    }

    pub fn serving_low(&self) -> bool {
        self.mode == Mode::Busy && self.i == 0
    }
}

impl ChainState for Model2State {
    fn level(&self) -> usize {
        self.j
    }

    fn csv_header() -> &'static str {
        "i,j,mode"
    }

    fn csv_fields(&self) -> String {
        format!("{},{},{}", self.i, self.j, self.mode)
    }
}

/// Outgoing transitions of the untruncated vacation model. A high-priority
/// arrival, or the low class reaching `N`, ends a vacation; the server
/// leaves on vacation whenever the system empties.
pub fn model2_transitions(s: &Model2State, p: &VacationRates) -> Result<Vec<(Model2State, f64)>> {
    let n = p.threshold_n;
    if !s.is_valid(n) {
        return Err(Error::ContractViolation(format!("{s:?} violates the model II invariants (N = {n})")));
    }
    let mut out = Vec::with_capacity(3);
    match s.mode {
        Mode::Vacation => {
            out.push((Model2State::busy(1, s.j), p.lambda1));
            let next = if s.j + 1 >= n { Model2State::busy(0, s.j + 1) } else { Model2State::vacation(s.j + 1) };
            out.push((next, p.lambda2));
        }
        Mode::Busy => {
            out.push((Model2State::busy(s.i + 1, s.j), p.lambda1));
            out.push((Model2State::busy(s.i, s.j + 1), p.lambda2));
            let done = if s.i > 0 { Some(((s.i - 1, s.j), p.mu1)) } else { Some(((0, s.j - 1), p.mu2)) };
            if let Some(((i, j), rate)) = done {
                let target = if i + j == 0 { Model2State::vacation(0) } else { Model2State::busy(i, j) };
                out.push((target, rate));
            }
        }
    }
    Ok(out)
}

/// The vacation model as a truncatable chain over `cap1 x cap2`.
#[derive(Debug, Clone, Copy)]
pub struct ModelII(pub VacationRates);

impl TruncatedModel for ModelII {
    type State = Model2State;

    fn initial_state(&self) -> Model2State {
        Model2State::vacation(0)
    }

    fn transitions(&self, s: &Model2State) -> Result<Vec<(Model2State, f64)>> {
        model2_transitions(s, &self.0)
    }

    fn within(&self, s: &Model2State, caps: &TruncationCaps) -> bool {
        s.i <= caps.cap1 && s.j <= caps.cap2
    }
}

/// Named views of a model II distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model2Aggregate {
    /// High-priority count, every mode.
    High,
    /// Low-priority count, every mode including vacation.
    Low,
    /// Low-priority count while the server works (vacation excluded).
    LowBusy,
    /// Low-priority count restricted to serving the high class.
    LowServingHigh,
    /// Low-priority count restricted to serving the low class.
    LowServingLow,
    /// Low-priority count restricted to vacation.
    LowVacation,
    /// `i + j`.
    Total,
}

impl Model2Aggregate {
    pub fn key(self, s: &Model2State) -> Option<usize> {
        match self {
            Model2Aggregate::High => Some(s.i),
            Model2Aggregate::Low => Some(s.j),
            Model2Aggregate::LowBusy => (s.mode == Mode::Busy).then_some(s.j),
            Model2Aggregate::LowServingHigh => s.serving_high().then_some(s.j),
            Model2Aggregate::LowServingLow => s.serving_low().then_some(s.j),
            Model2Aggregate::LowVacation => (s.mode == Mode::Vacation).then_some(s.j),
            Model2Aggregate::Total => Some(s.i + s.j),
        }
    }

    /// Whether the vector sums to one (the restricted views do not).
    pub fn is_complete(self) -> bool {
        matches!(self, Model2Aggregate::High | Model2Aggregate::Low | Model2Aggregate::Total)
    }
}

impl FromStr for Model2Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "high" | "i" => Model2Aggregate::High,
            "low" | "j" => Model2Aggregate::Low,
            "low_busy" => Model2Aggregate::LowBusy,
            "low_serving_high" => Model2Aggregate::LowServingHigh,
            "low_serving_low" => Model2Aggregate::LowServingLow,
            "low_vacation" => Model2Aggregate::LowVacation,
            "total" => Model2Aggregate::Total,
            other => return Err(Error::Domain(format!("unknown model II coordinate `{other}`"))),
        })
    }
}

impl StationaryDist<Model2State> {
    pub fn model2_marginal(&self, agg: Model2Aggregate) -> Vec<f64> {
        self.marginal(|s| agg.key(s))
    }

    pub fn prob_busy(&self, i: usize, j: usize) -> f64 {
        self.prob(&Model2State::busy(i, j))
    }

    pub fn prob_vacation(&self, j: usize) -> f64 {
        self.prob(&Model2State::vacation(j))
    }

    /// Joint `(i, j)` table over all modes.
    pub fn joint_table(&self) -> Vec<Vec<f64>> {
        let (m1, m2) = self.states().iter().fold((0, 0), |(a, b), s| (a.max(s.i), b.max(s.j)));
        let mut table = vec![vec![0.0; m2 + 1]; m1 + 1];
        for (s, &p) in self.iter() {
            table[s.i][s.j] += p;
        }
        table
    }
}
