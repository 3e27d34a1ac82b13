use std::fmt;
use std::str::FromStr;

use super::{ChainState, StationaryDist, TruncatedModel, TruncationCaps};
use crate::error::{Error, Result};
use crate::model::PollingParams;

/// Queue the server is attending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ServerPos {
    Q1,
    Q2,
    Q3,
}

impl ServerPos {
    pub fn index(self) -> usize {
        match self {
            ServerPos::Q1 => 0,
            ServerPos::Q2 => 1,
            ServerPos::Q3 => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(ServerPos::Q1),
            1 => Some(ServerPos::Q2),
            2 => Some(ServerPos::Q3),
            _ => None,
        }
    }
}

impl fmt::Display for ServerPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

/// Queue contents and server position of the polling system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Model1State {
    pub x1: usize,
    pub x2: usize,
    pub x3: usize,
    pub server: ServerPos,
}

impl Model1State {
    pub fn new(x1: usize, x2: usize, x3: usize, server: ServerPos) -> Self {
        Self { x1, x2, x3, server }
    }

    pub fn counts(&self) -> [usize; 3] {
        [self.x1, self.x2, self.x3]
    }

    /// Whether the state can be occupied for positive time under the
    /// dispatch rule with threshold `n`.
    pub fn is_reachable(&self, n: usize) -> bool {
        match self.server {
            ServerPos::Q1 => self.x1 > 0 || (self.x2 == 0 && self.x3 == 0),
            ServerPos::Q2 => self.x1 == 0 && self.x2 > 0,
            ServerPos::Q3 => self.x1 == 0 && self.x2 < n && (self.x3 > 0 || self.x2 == 0),
        }
    }
}

impl ChainState for Model1State {
    fn level(&self) -> usize {
        self.x3
    }

    fn csv_header() -> &'static str {
        "x1,x2,x3,server"
    }

    fn csv_fields(&self) -> String {
        format!("{},{},{},{}", self.x1, self.x2, self.x3, self.server)
    }
}

/// Server position after an event, given the new counts and the position
/// before the event.
///
/// Queue 1 preempts everything. From queue 1 the server moves to queue 2,
/// or to queue 3 when queue 2 is empty. Queue 2 is served exhaustively and
/// then left for queue 3. Queue 3 is left for queue 2 when queue 2 reaches
/// the threshold or queue 3 empties. With every queue empty the server
/// parks where it is. Switches are instantaneous, so the states the server
/// passes through have zero sojourn and never appear in the chain.
pub fn dispatch(x1: usize, x2: usize, x3: usize, prev: ServerPos, threshold_n: usize) -> ServerPos {
    if x1 > 0 {
        return ServerPos::Q1;
    }
    match prev {
        ServerPos::Q1 => {
            if x2 > 0 {
                ServerPos::Q2
            } else if x3 > 0 {
                ServerPos::Q3
            } else {
                ServerPos::Q1
            }
        }
        ServerPos::Q2 => {
            if x2 > 0 {
                ServerPos::Q2
            } else {
                ServerPos::Q3
            }
        }
        ServerPos::Q3 => {
            if x2 > 0 && (x2 >= threshold_n || x3 == 0) {
                ServerPos::Q2
            } else {
                ServerPos::Q3
            }
        }
    }
}

/// Outgoing transitions of the untruncated polling chain.
///
/// A queue-3 customer pushed back by the threshold restarts its service
/// from scratch; with exponential service that is a fresh exponential and
/// needs no extra state.
pub fn model1_transitions(s: &Model1State, p: &PollingParams) -> Result<Vec<(Model1State, f64)>> {
    let n = p.threshold_n;
    if !s.is_reachable(n) {
        return Err(Error::ContractViolation(format!("{s:?} is not reachable with threshold {n}")));
    }
    let mut out = Vec::with_capacity(4);
    let mut push = |x1: usize, x2: usize, x3: usize, rate: f64| {
        if rate > 0.0 {
            let server = dispatch(x1, x2, x3, s.server, n);
            out.push((Model1State::new(x1, x2, x3, server), rate));
        }
    };
    push(s.x1 + 1, s.x2, s.x3, p.lambda1);
    push(s.x1, s.x2 + 1, s.x3, p.lambda2);
    push(s.x1, s.x2, s.x3 + 1, p.lambda3);
    match s.server {
        ServerPos::Q1 if s.x1 > 0 => push(s.x1 - 1, s.x2, s.x3, p.mu1),
        ServerPos::Q2 if s.x2 > 0 => push(s.x1, s.x2 - 1, s.x3, p.mu2),
        ServerPos::Q3 if s.x3 > 0 => push(s.x1, s.x2, s.x3 - 1, p.mu3),
        _ => {}
    }
    Ok(out)
}

/// The polling system as a truncatable chain; `cap3` bounds queue 3.
#[derive(Debug, Clone, Copy)]
pub struct ModelI(pub PollingParams);

impl TruncatedModel for ModelI {
    type State = Model1State;

    fn initial_state(&self) -> Model1State {
        Model1State::new(0, 0, 0, ServerPos::Q1)
    }

    fn transitions(&self, s: &Model1State) -> Result<Vec<(Model1State, f64)>> {
        model1_transitions(s, &self.0)
    }

    fn within(&self, s: &Model1State, caps: &TruncationCaps) -> bool {
        s.x1 <= caps.cap1 && s.x2 <= caps.cap2 && s.x3 <= caps.cap3
    }
}

/// Named one-dimensional views of a model I distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model1Aggregate {
    X1,
    X2,
    X3,
    /// Indexed by `ServerPos::index`.
    Server,
}

impl Model1Aggregate {
    pub fn key(self, s: &Model1State) -> usize {
        match self {
            Model1Aggregate::X1 => s.x1,
            Model1Aggregate::X2 => s.x2,
            Model1Aggregate::X3 => s.x3,
            Model1Aggregate::Server => s.server.index(),
        }
    }
}

impl FromStr for Model1Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x1" => Ok(Model1Aggregate::X1),
            "x2" => Ok(Model1Aggregate::X2),
            "x3" => Ok(Model1Aggregate::X3),
            "server" => Ok(Model1Aggregate::Server),
            other => Err(Error::Domain(format!("unknown model I coordinate `{other}`"))),
        }
    }
}

impl StationaryDist<Model1State> {
    pub fn model1_marginal(&self, agg: Model1Aggregate) -> Vec<f64> {
        self.marginal(|s| Some(agg.key(s)))
    }

    /// Joint distribution of `(x1, x2)` as a dense `[x1][x2]` table.
    pub fn stable_queues_joint(&self) -> Vec<Vec<f64>> {
        let (m1, m2) = self.states().iter().fold((0, 0), |(a, b), s| (a.max(s.x1), b.max(s.x2)));
        let mut table = vec![vec![0.0; m2 + 1]; m1 + 1];
        for (s, &p) in self.iter() {
            table[s.x1][s.x2] += p;
        }
        table
    }
}
