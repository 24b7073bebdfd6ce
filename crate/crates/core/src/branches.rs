//! Weighted ensembles of post-measurement pure states.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::entanglement::Measure;
use crate::error::{Error, Result};
use crate::povm::{kraus_matrix, Direction, Outcome};
use crate::qcore::{apply_op_to_slice, PureState, C64, EPS_PROB};

/// Fidelity deficit below which two branch states are merged.
pub const EPS_STATE: f64 = 1e-8;

/// Target pair plus the assisting qubits that get measured.
///
/// Assisting qubits are kept in ascending order; per-round unsharpness and
/// direction lists index into that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    num_qubits: usize,
    pair: (usize, usize),
    assisting: Vec<usize>,
}

impl Target {
    pub fn new(num_qubits: usize, pair: (usize, usize), assisting: &[usize]) -> Result<Self> {
        let check = |q: usize| {
            if q >= num_qubits {
                Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits,
                })
            } else {
                Ok(())
            }
        };
        check(pair.0)?;
        check(pair.1)?;
        if pair.0 == pair.1 {
            return Err(Error::QubitCollision(pair.0));
        }
        if assisting.is_empty() {
            return Err(Error::EmptyAssisting);
        }
        let mut sorted = assisting.to_vec();
        sorted.sort_unstable();
        for (i, &q) in sorted.iter().enumerate() {
            check(q)?;
            if q == pair.0 || q == pair.1 || (i > 0 && sorted[i - 1] == q) {
                return Err(Error::QubitCollision(q));
            }
        }
        Ok(Self {
            num_qubits,
            pair,
            assisting: sorted,
        })
    }

    /// Pair `(0, 1)` with every other qubit assisting.
    pub fn standard(num_qubits: usize) -> Result<Self> {
        let assisting: Vec<usize> = (2..num_qubits).collect();
        Self::new(num_qubits, (0, 1), &assisting)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn pair(&self) -> (usize, usize) {
        self.pair
    }

    pub fn assisting(&self) -> &[usize] {
        &self.assisting
    }

    pub fn num_assisting(&self) -> usize {
        self.assisting.len()
    }

    /// Qubits that are neither in the pair nor assisting.
    pub fn spectators(&self) -> Vec<usize> {
        (0..self.num_qubits)
            .filter(|q| *q != self.pair.0 && *q != self.pair.1 && !self.assisting.contains(q))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub probability: f64,
    pub state: PureState,
    /// Outcomes in round-major order: round 1 for each assisting qubit
    /// (ascending), then round 2, and so on.
    pub outcome_history: Vec<Outcome>,
}

impl Branch {
    /// Outcome of the `row`-th assisting qubit in round `round` (both 0-based).
    pub fn outcome(&self, row: usize, round: usize, num_assisting: usize) -> Outcome {
        self.outcome_history[round * num_assisting + row]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    branches: Vec<Branch>,
    rounds_applied: usize,
    pruned_mass: f64,
}

impl Ensemble {
    pub fn singleton(state: PureState) -> Result<Self> {
        let n2 = state.norm_squared();
        if (n2 - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self {
            branches: vec![Branch {
                probability: 1.0,
                state,
                outcome_history: Vec::new(),
            }],
            rounds_applied: 0,
            pruned_mass: 0.0,
        })
    }

    /// Builds an ensemble from explicit branches; probabilities must sum to one.
    pub fn from_branches(branches: Vec<Branch>, rounds_applied: usize) -> Result<Self> {
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::OutOfRange(format!("branch probabilities sum to {total}")));
        }
        Ok(Self {
            branches,
            rounds_applied,
            pruned_mass: 0.0,
        })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn rounds_applied(&self) -> usize {
        self.rounds_applied
    }

    /// Probability mass dropped so far by the `EPS_PROB` threshold.
    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    /// Applies one round of unsharp measurements to every assisting qubit.
    ///
    /// Children appear in a fixed order: parents in order, and within a parent
    /// the outcome tuple counts up with the lowest assisting qubit most
    /// significant and `+1` before `−1`.
    pub fn measure_round(
        &self,
        target: &Target,
        etas: &[f64],
        dirs: &[Direction],
    ) -> Result<Ensemble> {
        let nb = target.num_assisting();
        if etas.len() != nb || dirs.len() != nb {
            return Err(Error::ShapeMismatch(format!(
                "{nb} assisting qubits but {} unsharpness values and {} directions",
                etas.len(),
                dirs.len()
            )));
        }
        if let Some(b) = self.branches.first() {
            if b.state.num_qubits() != target.num_qubits() {
                return Err(Error::OutOfRange(format!(
                    "target built for {} qubits, state has {}",
                    target.num_qubits(),
                    b.state.num_qubits()
                )));
            }
        }
        for &eta in etas {
            if eta.is_nan() {
                return Err(Error::NotANumber("unsharpness"));
            }
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::EtaOutOfRange(eta));
            }
        }
        let n = target.num_qubits();
        let kraus: Vec<[_; 2]> = etas
            .iter()
            .zip(dirs)
            .map(|(&eta, &d)| {
                [
                    kraus_matrix(Outcome::Plus, eta, d),
                    kraus_matrix(Outcome::Minus, eta, d),
                ]
            })
            .collect();
        let shifts: Vec<usize> = target.assisting().iter().map(|q| n - 1 - q).collect();

        let children: Vec<(Vec<Branch>, f64)> = self
            .branches
            .par_iter()
            .map(|parent| {
                let mut kept = Vec::with_capacity(1 << nb);
                let mut pruned = 0.0;
                for code in 0..1usize << nb {
                    let mut amps = parent.state.amplitudes().to_vec();
                    let mut history = parent.outcome_history.clone();
                    for (k, (ops, &s)) in kraus.iter().zip(&shifts).enumerate() {
                        let bit = code >> (nb - 1 - k) & 1;
                        apply_op_to_slice(&mut amps, s, &ops[bit]);
                        history.push(Outcome::BOTH[bit]);
                    }
                    let n2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                    let p = parent.probability * n2;
                    if p <= EPS_PROB {
                        pruned += p;
                        continue;
                    }
                    let inv = 1.0 / n2.sqrt();
                    amps.iter_mut().for_each(|a| *a *= inv);
                    kept.push(Branch {
                        probability: p,
                        state: PureState::new(amps).expect("dimension preserved"),
                        outcome_history: history,
                    });
                }
                (kept, pruned)
            })
            .collect();

        let mut branches = Vec::with_capacity(self.branches.len() << nb);
        let mut pruned_mass = self.pruned_mass;
        for (kids, pruned) in children {
            branches.extend(kids);
            pruned_mass += pruned;
        }
        Ok(Ensemble {
            branches,
            rounds_applied: self.rounds_applied + 1,
            pruned_mass,
        })
    }

    /// Merges branches whose states agree up to a global phase.
    ///
    /// States are phase-canonicalized (largest amplitude real positive),
    /// bucketed by amplitudes rounded to six decimals, and candidates in a
    /// bucket are confirmed by overlap. The survivor keeps the first-seen
    /// position and the smallest outcome history.
    pub fn dedup(&self) -> Ensemble {
        let mut out: Vec<Branch> = Vec::with_capacity(self.branches.len());
        let mut canon: Vec<Vec<C64>> = Vec::with_capacity(self.branches.len());
        let mut buckets: HashMap<Vec<(i64, i64)>, Vec<usize>> = HashMap::new();
        for b in &self.branches {
            let c = canonical_phase(b.state.amplitudes());
            let key: Vec<(i64, i64)> = c
                .iter()
                .map(|a| ((a.re * 1e6).round() as i64, (a.im * 1e6).round() as i64))
                .collect();
            let slot = buckets.entry(key).or_default();
            let hit = slot.iter().copied().find(|&i| {
                let ov: C64 = canon[i].iter().zip(&c).map(|(x, y)| x.conj() * y).sum();
                ov.norm_sqr() > 1.0 - EPS_STATE
            });
            match hit {
                Some(i) => {
                    out[i].probability += b.probability;
                    if b.outcome_history < out[i].outcome_history {
                        out[i].outcome_history = b.outcome_history.clone();
                    }
                }
                None => {
                    slot.push(out.len());
                    out.push(b.clone());
                    canon.push(c);
                }
            }
        }
        Ensemble {
            branches: out,
            rounds_applied: self.rounds_applied,
            pruned_mass: self.pruned_mass,
        }
    }

    /// `Σ p·E(ϱ)` over branches, in branch order.
    pub fn average_entanglement(&self, pair: (usize, usize), measure: Measure) -> Result<f64> {
        let terms: Vec<f64> = self
            .branches
            .par_iter()
            .map(|b| {
                let rho = b.state.reduced_density(pair.0, pair.1)?;
                Ok(b.probability * measure.evaluate(&rho))
            })
            .collect::<Result<_>>()?;
        Ok(terms.iter().sum())
    }
}

fn canonical_phase(amps: &[C64]) -> Vec<C64> {
    let max = amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let pivot = amps
        .iter()
        .position(|a| a.norm() >= max - 1e-9)
        .unwrap_or(0);
    let rot = if amps[pivot].norm() > 0.0 {
        amps[pivot].conj() / amps[pivot].norm()
    } else {
        C64::new(1.0, 0.0)
    };
    amps.iter().map(|a| a * rot).collect()
}

/// Free-function form of [`Ensemble::measure_round`].
pub fn measure_round(
    ens: &Ensemble,
    target: &Target,
    etas: &[f64],
    dirs: &[Direction],
) -> Result<Ensemble> {
    ens.measure_round(target, etas, dirs)
}

pub fn dedup(ens: &Ensemble) -> Ensemble {
    ens.dedup()
}

pub fn average_entanglement(ens: &Ensemble, pair: (usize, usize), measure: Measure) -> Result<f64> {
    ens.average_entanglement(pair, measure)
}
