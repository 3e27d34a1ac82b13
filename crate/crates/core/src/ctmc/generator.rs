use std::collections::{HashMap, VecDeque};

use super::{ChainState, TruncatedModel, TruncationCaps};
use crate::error::{Error, Result};

/// Default ceiling on the number of enumerated states.
pub const DEFAULT_STATE_BUDGET: usize = 5_000_000;

/// Sparse generator of a finite chain, rows in CSR layout.
///
/// Off-diagonal entries are stored without the diagonal; the diagonal is
/// the negated row sum. States are ordered by `(level, state)`.
#[derive(Debug, Clone)]
pub struct Generator<S> {
    states: Vec<S>,
    index: HashMap<S, usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    rates: Vec<f64>,
    diag: Vec<f64>,
}

impl<S: ChainState> Generator<S> {
    /// Assembles a generator from per-state outgoing rates. Self loops are
    /// dropped, duplicate targets merged and targets outside `states`
    /// rejected.
    pub fn from_transitions(states: Vec<S>, mut outgoing: impl FnMut(&S) -> Vec<(S, f64)>) -> Result<Self> {
        let index: HashMap<S, usize> = states.iter().cloned().enumerate().map(|(k, s)| (s, k)).collect();
        if index.len() != states.len() {
            return Err(Error::InvalidParameter("duplicate states in generator".into()));
        }
        let mut row_ptr = Vec::with_capacity(states.len() + 1);
        let mut cols = Vec::new();
        let mut rates = Vec::new();
        let mut diag = Vec::with_capacity(states.len());
        row_ptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for (k, s) in states.iter().enumerate() {
            row.clear();
            for (t, r) in outgoing(s) {
                if !(r.is_finite() && r >= 0.0) {
                    return Err(Error::InvalidParameter(format!("rate {r} out of {s:?}")));
                }
                let &c = index
                    .get(&t)
                    .ok_or_else(|| Error::ContractViolation(format!("target {t:?} of {s:?} is not enumerated")))?;
                if c != k && r > 0.0 {
                    row.push((c, r));
                }
            }
            row.sort_by_key(|e| e.0);
            let start = cols.len();
            for &(c, r) in &row {
                if cols.len() > start && *cols.last().unwrap() == c {
                    *rates.last_mut().unwrap() += r;
                } else {
                    cols.push(c);
                    rates.push(r);
                }
            }
            diag.push(-rates[start..].iter().sum::<f64>());
            row_ptr.push(cols.len());
        }
        Ok(Self { states, index, row_ptr, cols, rates, diag })
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn index_of(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub(crate) fn index_map(&self) -> &HashMap<S, usize> {
        &self.index
    }

    /// Off-diagonal entries `(column, rate)` of row `k`.
    pub fn row(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[k]..self.row_ptr[k + 1];
        self.cols[r.clone()].iter().copied().zip(self.rates[r].iter().copied())
    }

    pub fn diagonal(&self, k: usize) -> f64 {
        self.diag[k]
    }

    pub fn nnz(&self) -> usize {
        self.cols.len() + self.diag.len()
    }

    /// Rate `q(from -> to)`, diagonal included.
    pub fn rate(&self, from: &S, to: &S) -> f64 {
        match (self.index_of(from), self.index_of(to)) {
            (Some(a), Some(b)) if a == b => self.diag[a],
            (Some(a), Some(b)) => self.row(a).find(|e| e.0 == b).map_or(0.0, |e| e.1),
            _ => 0.0,
        }
    }

    /// Largest `|sum_j q(i, j)|` over rows.
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.dimension()).map(|k| (self.row(k).map(|e| e.1).sum::<f64>() + self.diag[k]).abs()).fold(0.0, f64::max)
    }

    /// Largest `|i - j|` over nonzero entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.dimension()).flat_map(|k| self.row(k).map(move |(c, _)| c.abs_diff(k))).max().unwrap_or(0)
    }

    /// `pi Q` for a row vector `pi`.
    pub fn left_multiply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = pi.iter().zip(&self.diag).map(|(p, d)| p * d).collect();
        for (k, &p) in pi.iter().enumerate() {
            if p != 0.0 {
                for (c, r) in self.row(k) {
                    out[c] += p * r;
                }
            }
        }
        out
    }

    /// Incoming rates in CSC layout: for column `j`, `(i, q(i, j))`.
    pub(crate) fn incoming(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let n = self.dimension();
        let mut count = vec![0usize; n + 1];
        for &c in &self.cols {
            count[c + 1] += 1;
        }
        for k in 0..n {
            count[k + 1] += count[k];
        }
        let mut fill = count.clone();
        let mut src = vec![0usize; self.cols.len()];
        let mut val = vec![0.0; self.cols.len()];
        for k in 0..n {
            for (c, r) in self.row(k) {
                src[fill[c]] = k;
                val[fill[c]] = r;
                fill[c] += 1;
            }
        }
        (count, src, val)
    }
}

/// Enumerates the states reachable from the model's initial state without
/// leaving `caps`, and assembles their generator. Transitions that would
/// leave the box are rejected (their rate is dropped).
pub fn build_truncated_generator<M: TruncatedModel>(
    model: &M,
    caps: &TruncationCaps,
    budget: usize,
) -> Result<Generator<M::State>> {
    let root = model.initial_state();
    if !model.within(&root, caps) {
        return Err(Error::InvalidParameter("initial state lies outside the truncation box".into()));
    }
    let mut seen: HashMap<M::State, Vec<(M::State, f64)>> = HashMap::new();
    let mut queue = VecDeque::from([root]);
    let mut pending = std::collections::HashSet::new();
    pending.insert(queue[0].clone());
    while let Some(s) = queue.pop_front() {
        let out: Vec<_> = model.transitions(&s)?.into_iter().filter(|(t, _)| model.within(t, caps)).collect();
        for (t, _) in &out {
            if pending.insert(t.clone()) {
                if pending.len() > budget {
                    return Err(Error::Capacity { states: pending.len(), budget });
                }
                queue.push_back(t.clone());
            }
        }
        seen.insert(s, out);
    }
    let mut states: Vec<M::State> = seen.keys().cloned().collect();
    states.sort_by(|a, b| a.level().cmp(&b.level()).then_with(|| a.cmp(b)));
    Generator::from_transitions(states, |s| seen.remove(s).unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::{Model1State, Model2State, ModelI, ModelII, ServerPos};
    use crate::model::{PollingParams, VacationRates};

    #[test]
    fn model2_small_box_is_conservative() {
        let p = VacationRates::new(0.1, 0.3, 0.5, 1.0, 1).unwrap();
        let g = build_truncated_generator(&ModelII(p), &TruncationCaps::model2(2, 2).unwrap(), 1000).unwrap();
        assert!(g.max_abs_row_sum() <= 1e-12);
        // (i, j) in {0,1,2}^2 busy minus the empty one, plus vacation at 0
        assert_eq!(g.dimension(), 9);
        assert!(g.index_of(&Model2State::vacation(0)).is_some());
    }

    #[test]
    fn model1_unit_box_rate_bound() {
        let p = PollingParams::reference(0.45).unwrap();
        let g = build_truncated_generator(&ModelI(p), &TruncationCaps::new(1, 1, 1).unwrap(), 1000).unwrap();
        let bound = p.lambda1 + p.lambda2 + p.lambda3 + p.mu1.max(p.mu2).max(p.mu3);
        for k in 0..g.dimension() {
            assert!(-g.diagonal(k) <= bound + 1e-15);
            assert!(g.row(k).all(|(_, r)| r > 0.0));
            assert!(g.states()[k].is_reachable(p.threshold_n));
        }
        assert!(g.max_abs_row_sum() <= 1e-12);
    }

    #[test]
    fn zero_dwell_states_never_enumerated() {
        let p = PollingParams::new(0.1, 0.3, 0.45, 0.5, 1.0, 1.5, 3).unwrap();
        let g = build_truncated_generator(&ModelI(p), &TruncationCaps::new(5, 6, 6).unwrap(), 100_000).unwrap();
        assert!(g.states().iter().all(|s| !(s.server == ServerPos::Q3 && s.x2 >= 3)));
        assert!(g.index_of(&Model1State::new(0, 4, 2, ServerPos::Q2)).is_some());
    }

    #[test]
    fn levels_are_sorted_and_budget_enforced() {
        let p = VacationRates::new(0.1, 0.3, 0.5, 1.0, 4).unwrap();
        let caps = TruncationCaps::model2(6, 8).unwrap();
        let g = build_truncated_generator(&ModelII(p), &caps, 1000).unwrap();
        assert!(g.states().windows(2).all(|w| w[0].j <= w[1].j));
        assert!(matches!(build_truncated_generator(&ModelII(p), &caps, 10), Err(Error::Capacity { .. })));
    }
}
