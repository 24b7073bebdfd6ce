//! Single-round, sequential and global optimization of localizable
//! entanglement, plus restricted search spaces and closed-form references.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branches::{Ensemble, Target};
use crate::entanglement::{negativity_of, Measure};
use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::povm::{Direction, MeasurementMatrix, UnsharpnessMatrix};
use crate::qcore::{apply_op_to_slice, DensityMatrix2Q, Mat2, Mat4, PureState, C64, EPS_PROB, ZERO};
use crate::states::StateFamily;

/// Candidates whose values differ by less than this are treated as tied.
pub const TIE_TOL: f64 = 1e-9;

/// Default cap on the number of amplitudes an ensemble may hold.
pub const DEFAULT_BUDGET: usize = 1 << 25;

/// Largest `R·N_B` accepted by [`global_le`].
pub const GLOBAL_LIMIT: usize = 4;

const PAULIS: [Direction; 3] = [Direction::Z, Direction::X, Direction::Y];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SearchKind {
    FullSphere,
    Pauli,
    Ops,
    FixedPattern,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub kind: SearchKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<MeasurementMatrix>,
}

impl SearchSpace {
    pub fn full_sphere() -> Self {
        Self {
            kind: SearchKind::FullSphere,
            pattern: None,
        }
    }

    pub fn pauli() -> Self {
        Self {
            kind: SearchKind::Pauli,
            pattern: None,
        }
    }

    pub fn ops() -> Self {
        Self {
            kind: SearchKind::Ops,
            pattern: None,
        }
    }

    pub fn fixed_pattern(mm: MeasurementMatrix) -> Self {
        Self {
            kind: SearchKind::FixedPattern,
            pattern: Some(mm),
        }
    }

    fn check(&self, nb: usize, rounds: usize) -> Result<()> {
        if self.kind != SearchKind::FixedPattern {
            return Ok(());
        }
        let mm = self
            .pattern
            .as_ref()
            .ok_or_else(|| Error::ShapeMismatch("fixed-pattern search without a pattern".into()))?;
        if mm.rows() != nb || mm.cols() < rounds {
            return Err(Error::ShapeMismatch(format!(
                "pattern is {}x{}, need {nb} rows and at least {rounds} columns",
                mm.rows(),
                mm.cols()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub optimal_dirs: Vec<Direction>,
    pub sle_value: f64,
    /// Branches after the round, before deduplication.
    pub ensemble_size: usize,
    pub dedup_size: usize,
    pub pruned_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub r: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SleOptions {
    pub dedup: bool,
    /// Maximum number of amplitudes held by one ensemble.
    pub budget: usize,
    pub measure: Measure,
}

impl Default for SleOptions {
    fn default() -> Self {
        Self {
            dedup: true,
            budget: DEFAULT_BUDGET,
            measure: Measure::Negativity,
        }
    }
}

/// Branch amplitudes rearranged as `[pair (4)][spectators][assisting]`, each
/// scaled by `√p`, so one round's objective `Σ p·E` is a sum of
/// homogeneous terms over outcome leaves.
pub struct RoundKernel {
    nb: usize,
    inner: usize,
    block: usize,
    data: Vec<C64>,
    measure: Measure,
}

const PAR_MIN_BRANCHES: usize = 64;
const CHUNK: usize = 64;

impl RoundKernel {
    pub fn new(ens: &Ensemble, target: &Target) -> Self {
        Self::with_measure(ens, target, Measure::Negativity)
    }

    pub fn with_measure(ens: &Ensemble, target: &Target, measure: Measure) -> Self {
        let n = target.num_qubits();
        let nb = target.num_assisting();
        let (p0, p1) = target.pair();
        let spect = target.spectators();
        let inner = 1usize << (n - 2);
        let block = 4 * inner;
        // perm[new] = old computational index
        let mut perm = vec![0usize; block];
        for (new, slot) in perm.iter_mut().enumerate() {
            let a = new / inner;
            let c = (new % inner) >> nb;
            let b = new & ((1 << nb) - 1);
            let mut old = 0usize;
            let mut set = |q: usize, bit: usize| {
                if bit == 1 {
                    old |= 1 << (n - 1 - q);
                }
            };
            set(p0, a >> 1 & 1);
            set(p1, a & 1);
            for (k, &q) in spect.iter().enumerate() {
                set(q, c >> (spect.len() - 1 - k) & 1);
            }
            for (k, &q) in target.assisting().iter().enumerate() {
                set(q, b >> (nb - 1 - k) & 1);
            }
            *slot = old;
        }
        let mut data = Vec::with_capacity(ens.len() * block);
        for br in ens.branches() {
            let s = br.probability.sqrt();
            let amps = br.state.amplitudes();
            data.extend(perm.iter().map(|&o| amps[o] * s));
        }
        Self {
            nb,
            inner,
            block,
            data,
            measure,
        }
    }

    pub fn num_branches(&self) -> usize {
        self.data.len() / self.block
    }

    pub fn num_assisting(&self) -> usize {
        self.nb
    }

    /// `Σ_branches Σ_outcomes p·E(ϱ)` for one round with the given settings.
    pub fn evaluate(&self, etas: &[f64], dirs: &[Direction]) -> f64 {
        let ops: Vec<Mat2> = dirs.iter().map(pauli_dot).collect();
        let work = |chunk: &[C64]| -> f64 {
            let mut scratch = vec![ZERO; self.block * (2 * self.nb + 1)];
            chunk
                .chunks_exact(self.block)
                .map(|psi| self.branch_value(psi, etas, &ops, &mut scratch))
                .sum()
        };
        let stride = self.block * CHUNK;
        if self.num_branches() >= PAR_MIN_BRANCHES {
            let parts: Vec<f64> = self.data.par_chunks(stride).map(work).collect();
            parts.iter().sum()
        } else {
            self.data.chunks(stride).map(work).sum()
        }
    }

    fn branch_value(&self, psi: &[C64], etas: &[f64], ops: &[Mat2], scratch: &mut [C64]) -> f64 {
        let (node, rest) = scratch.split_at_mut(self.block);
        node.copy_from_slice(psi);
        self.descend(psi, node, rest, 0, etas, ops)
    }

    fn descend(
        &self,
        psi: &[C64],
        node: &[C64],
        scratch: &mut [C64],
        level: usize,
        etas: &[f64],
        ops: &[Mat2],
    ) -> f64 {
        if level == self.nb {
            return self.leaf_value(psi, node);
        }
        let (u, rest) = scratch.split_at_mut(self.block);
        let (child, rest) = rest.split_at_mut(self.block);
        u.copy_from_slice(node);
        apply_op_to_slice(u, self.nb - 1 - level, &ops[level]);
        let h = etas[level] * 0.5;
        let mut total = 0.0;
        for sign in [1.0, -1.0] {
            for ((c, &v), &w) in child.iter_mut().zip(node.iter()).zip(u.iter()) {
                *c = v * 0.5 + w * (sign * h);
            }
            total += self.descend(psi, child, rest, level + 1, etas, ops);
        }
        total
    }

    fn leaf_value(&self, psi: &[C64], w: &[C64]) -> f64 {
        let n = self.inner;
        let mut m: Mat4 = [[ZERO; 4]; 4];
        for i in 0..4 {
            let wi = &w[i * n..(i + 1) * n];
            for j in i..4 {
                let pj = &psi[j * n..(j + 1) * n];
                let mut acc = ZERO;
                for (a, b) in wi.iter().zip(pj) {
                    acc += a * b.conj();
                }
                m[i][j] = acc;
            }
        }
        let tr = m[0][0].re + m[1][1].re + m[2][2].re + m[3][3].re;
        if tr <= EPS_PROB {
            return 0.0;
        }
        for i in 0..4 {
            m[i][i] = C64::new(m[i][i].re, 0.0);
            for j in 0..i {
                m[i][j] = m[j][i].conj();
            }
        }
        match self.measure {
            Measure::Negativity => negativity_of(&m),
            other => {
                let inv = 1.0 / tr;
                let scaled = m.map(|row| row.map(|x| x * inv));
                tr * other.evaluate(&DensityMatrix2Q(scaled))
            }
        }
    }
}

fn pauli_dot(d: &Direction) -> Mat2 {
    let [x, y, z] = d.unit_vector();
    [
        [C64::new(z, 0.0), C64::new(x, -y)],
        [C64::new(x, y), C64::new(-z, 0.0)],
    ]
}

#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    dirs: Vec<Direction>,
}

fn dirs_key(dirs: &[Direction]) -> Vec<(i64, i64)> {
    dirs.iter().map(Direction::order_key).collect()
}

/// Highest value, ties within `TIE_TOL` broken by the smallest angles.
fn pick(cands: &[Candidate]) -> Option<Candidate> {
    let best = cands.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
    cands
        .iter()
        .filter(|c| c.value >= best - TIE_TOL)
        .min_by_key(|c| dirs_key(&c.dirs))
        .cloned()
}

fn evaluate_all(kernel: &RoundKernel, etas: &[f64], sets: Vec<Vec<Direction>>) -> Vec<Candidate> {
    let eval = |dirs: Vec<Direction>| Candidate {
        value: kernel.evaluate(etas, &dirs),
        dirs,
    };
    if kernel.num_branches() >= PAR_MIN_BRANCHES {
        sets.into_iter().map(eval).collect()
    } else {
        sets.into_par_iter().map(eval).collect()
    }
}

fn pauli_products(nb: usize) -> Vec<Vec<Direction>> {
    (0..3usize.pow(nb as u32))
        .map(|mut code| {
            let mut v = vec![Direction::Z; nb];
            for slot in v.iter_mut().rev() {
                *slot = PAULIS[code % 3];
                code /= 3;
            }
            v
        })
        .collect()
}

/// Pauli axes orthogonal to `d`, in Z, X, Y order.
fn orthogonal_paulis(d: &Direction) -> Vec<Direction> {
    PAULIS
        .iter()
        .copied()
        .filter(|p| (p.angle_to(d) - FRAC_PI_2).abs() < 1e-9)
        .collect()
}

fn sphere_grid(n_theta: usize, n_phi: usize) -> Vec<Direction> {
    let mut out = vec![Direction::Z];
    for i in 1..n_theta {
        for j in 0..n_phi {
            out.push(Direction::new(
                i as f64 * PI / n_theta as f64,
                j as f64 * TAU / n_phi as f64,
            ));
        }
    }
    out
}

fn dirs_from_params(x: &[f64]) -> Vec<Direction> {
    x.chunks_exact(2).map(|p| Direction::new(p[0], p[1])).collect()
}

fn params_from_dirs(dirs: &[Direction]) -> Vec<f64> {
    dirs.iter().flat_map(|d| [d.theta(), d.phi()]).collect()
}

fn refine(kernel: &RoundKernel, etas: &[f64], start: &[Direction]) -> Candidate {
    let nm = NelderMead {
        initial_step: 0.15,
        diameter_tol: 1e-8,
        max_evals: 4000,
    };
    let m = nm.maximize(
        |x| kernel.evaluate(etas, &dirs_from_params(x)),
        &params_from_dirs(start),
    );
    Candidate {
        value: m.value,
        dirs: dirs_from_params(&m.x),
    }
}

const SEEDS_ONE_QUBIT: usize = 4;

fn optimize_full_sphere(kernel: &RoundKernel, etas: &[f64]) -> Candidate {
    let nb = kernel.num_assisting();
    let (grid, seeds): (Vec<Candidate>, Vec<Candidate>) = if nb == 1 {
        let sets = sphere_grid(12, 24).into_iter().map(|d| vec![d]).collect();
        let all = evaluate_all(kernel, etas, sets);
        let mut order: Vec<usize> = (0..all.len()).collect();
        order.sort_by(|&a, &b| all[b].value.total_cmp(&all[a].value).then(a.cmp(&b)));
        let seeds = order
            .iter()
            .take(SEEDS_ONE_QUBIT)
            .map(|&i| all[i].clone())
            .collect();
        (all, seeds)
    } else {
        let mut all = evaluate_all(kernel, etas, pauli_products(nb));
        let mut current = pick(&all).expect("nonempty");
        let coarse = sphere_grid(6, 12);
        for q in 0..nb {
            let sets = coarse
                .iter()
                .map(|&d| {
                    let mut v = current.dirs.clone();
                    v[q] = d;
                    v
                })
                .collect();
            let swept = evaluate_all(kernel, etas, sets);
            all.extend(swept);
            current = pick(&all).expect("nonempty");
        }
        (all, vec![current])
    };
    let mut best = pick(&grid).expect("nonempty grid");
    for seed in &seeds {
        let r = refine(kernel, etas, &seed.dirs);
        if r.value > best.value + TIE_TOL {
            best = r;
        }
    }
    best
}

fn optimize_round(
    kernel: &RoundKernel,
    etas: &[f64],
    space: &SearchSpace,
    round: usize,
    previous: Option<&[Direction]>,
) -> Candidate {
    match space.kind {
        SearchKind::FullSphere => optimize_full_sphere(kernel, etas),
        SearchKind::Pauli => {
            let all = evaluate_all(kernel, etas, pauli_products(kernel.num_assisting()));
            pick(&all).expect("nonempty")
        }
        SearchKind::Ops => match previous {
            None => {
                let all = evaluate_all(kernel, etas, pauli_products(kernel.num_assisting()));
                pick(&all).expect("nonempty")
            }
            Some(prev) => {
                let choices: Vec<Vec<Direction>> = prev.iter().map(orthogonal_paulis).collect();
                let nb = prev.len();
                let sets = (0..1usize << nb)
                    .map(|code| {
                        (0..nb)
                            .map(|k| choices[k][code >> (nb - 1 - k) & 1])
                            .collect()
                    })
                    .collect();
                let all = evaluate_all(kernel, etas, sets);
                pick(&all).expect("nonempty")
            }
        },
        SearchKind::FixedPattern => {
            let dirs = space
                .pattern
                .as_ref()
                .expect("checked by SearchSpace::check")
                .column(round);
            Candidate {
                value: kernel.evaluate(etas, &dirs),
                dirs,
            }
        }
    }
}

fn check_etas(etas: &[f64], nb: usize) -> Result<()> {
    if etas.len() != nb {
        return Err(Error::ShapeMismatch(format!(
            "{} unsharpness values for {nb} assisting qubits",
            etas.len()
        )));
    }
    for &e in etas {
        if e.is_nan() {
            return Err(Error::NotANumber("unsharpness"));
        }
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::EtaOutOfRange(e));
        }
    }
    Ok(())
}

fn check_state(state: &PureState, target: &Target) -> Result<()> {
    if state.num_qubits() != target.num_qubits() {
        return Err(Error::OutOfRange(format!(
            "target built for {} qubits, state has {}",
            target.num_qubits(),
            state.num_qubits()
        )));
    }
    Ok(())
}

/// Best one-round average negativity over `space`, with the attaining
/// directions (one per assisting qubit).
pub fn single_round_le(
    state: &PureState,
    target: &Target,
    etas: &[f64],
    space: &SearchSpace,
) -> Result<(f64, Vec<Direction>)> {
    check_state(state, target)?;
    check_etas(etas, target.num_assisting())?;
    space.check(target.num_assisting(), 1)?;
    let ens = Ensemble::singleton(state.clone())?;
    let kernel = RoundKernel::new(&ens, target);
    let c = optimize_round(&kernel, etas, space, 0, None);
    Ok((c.value, c.dirs))
}

/// Localizable entanglement under sharp measurements, optimized over the
/// whole sphere.
pub fn projective_le(state: &PureState, target: &Target) -> Result<f64> {
    let ones = vec![1.0; target.num_assisting()];
    Ok(single_round_le(state, target, &ones, &SearchSpace::full_sphere())?.0)
}

/// Round-by-round greedy optimization; each call to [`SleRun::step`]
/// optimizes one more round on the ensemble left by the previous ones.
pub struct SleRun<'a> {
    target: &'a Target,
    um: &'a UnsharpnessMatrix,
    space: &'a SearchSpace,
    options: SleOptions,
    ensemble: Ensemble,
    previous: Option<Vec<Direction>>,
    round: usize,
    dim: usize,
}

impl<'a> SleRun<'a> {
    pub fn new(
        state: &PureState,
        target: &'a Target,
        um: &'a UnsharpnessMatrix,
        space: &'a SearchSpace,
        options: SleOptions,
    ) -> Result<Self> {
        check_state(state, target)?;
        let nb = target.num_assisting();
        if um.rows() != nb {
            return Err(Error::ShapeMismatch(format!(
                "unsharpness matrix has {} rows for {nb} assisting qubits",
                um.rows()
            )));
        }
        space.check(nb, um.cols())?;
        Ok(Self {
            target,
            um,
            space,
            options,
            ensemble: Ensemble::singleton(state.clone())?,
            previous: None,
            round: 0,
            dim: state.dim(),
        })
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn rounds_done(&self) -> usize {
        self.round
    }

    pub fn step(&mut self) -> Result<RoundRecord> {
        let r = self.round;
        if r >= self.um.cols() {
            return Err(Error::ShapeMismatch(format!(
                "unsharpness matrix has only {} rounds",
                self.um.cols()
            )));
        }
        let nb = self.target.num_assisting();
        let needed = self
            .ensemble
            .len()
            .saturating_mul(1 << nb)
            .saturating_mul(self.dim);
        if needed > self.options.budget {
            return Err(Error::BudgetExceeded {
                needed,
                budget: self.options.budget,
            });
        }
        let etas = self.um.column(r);
        check_etas(&etas, nb)?;
        let kernel = RoundKernel::with_measure(&self.ensemble, self.target, self.options.measure);
        let best = optimize_round(&kernel, &etas, self.space, r, self.previous.as_deref());
        drop(kernel);
        let next = self.ensemble.measure_round(self.target, &etas, &best.dirs)?;
        let ensemble_size = next.len();
        self.ensemble = if self.options.dedup { next.dedup() } else { next };
        self.previous = Some(best.dirs.clone());
        self.round += 1;
        Ok(RoundRecord {
            round: self.round,
            optimal_dirs: best.dirs,
            sle_value: best.value,
            ensemble_size,
            dedup_size: self.ensemble.len(),
            pruned_mass: self.ensemble.pruned_mass(),
        })
    }
}

/// Sequentially optimized LE for rounds `1..=rounds`.
pub fn sequential_le(
    state: &PureState,
    target: &Target,
    um: &UnsharpnessMatrix,
    rounds: usize,
    space: &SearchSpace,
) -> Result<Vec<RoundRecord>> {
    sequential_le_with(state, target, um, rounds, space, SleOptions::default())
}

pub fn sequential_le_with(
    state: &PureState,
    target: &Target,
    um: &UnsharpnessMatrix,
    rounds: usize,
    space: &SearchSpace,
    options: SleOptions,
) -> Result<Vec<RoundRecord>> {
    if um.cols() != rounds {
        return Err(Error::ShapeMismatch(format!(
            "unsharpness matrix has {} columns for {rounds} rounds",
            um.cols()
        )));
    }
    let mut run = SleRun::new(state, target, um, space, options)?;
    (0..rounds).map(|_| run.step()).collect()
}

/// Average entanglement after running every round of `mm` on `state`.
pub fn evaluate_plan(
    state: &PureState,
    target: &Target,
    um: &UnsharpnessMatrix,
    mm: &MeasurementMatrix,
) -> Result<f64> {
    check_state(state, target)?;
    crate::povm::validate_plan(um.clone(), mm.clone())?;
    if mm.rows() != target.num_assisting() {
        return Err(Error::ShapeMismatch(format!(
            "plan has {} rows for {} assisting qubits",
            mm.rows(),
            target.num_assisting()
        )));
    }
    let mut ens = Ensemble::singleton(state.clone())?;
    let mut value = 0.0;
    for r in 0..mm.cols() {
        let etas = um.column(r);
        let dirs = mm.column(r);
        value = RoundKernel::new(&ens, target).evaluate(&etas, &dirs);
        if r + 1 < mm.cols() {
            ens = ens.measure_round(target, &etas, &dirs)?.dedup();
        }
    }
    Ok(value)
}

const GLOBAL_RANDOM_STARTS: usize = 24;
const GLOBAL_SEED: u64 = 0x910b_a1e5;
const GLOBAL_REFINED: usize = 4;

/// Joint optimization of all `R·N_B` directions at once.
pub fn global_le(
    state: &PureState,
    target: &Target,
    um: &UnsharpnessMatrix,
    rounds: usize,
) -> Result<(f64, MeasurementMatrix)> {
    let nb = target.num_assisting();
    if rounds * nb > GLOBAL_LIMIT {
        return Err(Error::InstanceTooLarge {
            params: 2 * rounds * nb,
            limit: 2 * GLOBAL_LIMIT,
        });
    }
    if um.rows() != nb || um.cols() != rounds {
        return Err(Error::ShapeMismatch(format!(
            "unsharpness matrix is {}x{}, need {nb}x{rounds}",
            um.rows(),
            um.cols()
        )));
    }
    check_state(state, target)?;
    let to_mm = |flat: &[Direction]| -> MeasurementMatrix {
        let cols: Vec<Vec<Direction>> = flat.chunks(nb).map(|c| c.to_vec()).collect();
        MeasurementMatrix::from_columns(&cols).expect("rectangular")
    };
    let value_of = |flat: &[Direction]| evaluate_plan(state, target, um, &to_mm(flat)).unwrap_or(0.0);

    let mut seeds: Vec<Vec<Direction>> = pauli_products(nb * rounds);
    let sle = sequential_le(state, target, um, rounds, &SearchSpace::full_sphere())?;
    seeds.push(sle.iter().flat_map(|r| r.optimal_dirs.clone()).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(GLOBAL_SEED);
    for _ in 0..GLOBAL_RANDOM_STARTS {
        seeds.push(
            (0..nb * rounds)
                .map(|_| {
                    let z: f64 = rng.gen_range(-1.0..=1.0);
                    Direction::new(z.acos(), rng.gen_range(0.0..TAU))
                })
                .collect(),
        );
    }
    let cands: Vec<Candidate> = seeds
        .into_par_iter()
        .map(|dirs| Candidate {
            value: value_of(&dirs),
            dirs,
        })
        .collect();
    let sle_idx = 3usize.pow((nb * rounds) as u32);
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| cands[b].value.total_cmp(&cands[a].value).then(a.cmp(&b)));
    let mut starts: Vec<usize> = order.into_iter().take(GLOBAL_REFINED).collect();
    if !starts.contains(&sle_idx) {
        starts.push(sle_idx);
    }
    let nm = NelderMead {
        initial_step: 0.15,
        diameter_tol: 1e-8,
        max_evals: 20_000,
    };
    let refined: Vec<Candidate> = starts
        .par_iter()
        .map(|&i| {
            let m = nm.maximize(
                |x| value_of(&dirs_from_params(x)),
                &params_from_dirs(&cands[i].dirs),
            );
            Candidate {
                value: m.value,
                dirs: dirs_from_params(&m.x),
            }
        })
        .collect();
    let mut best = pick(&cands).expect("nonempty");
    for r in refined {
        if r.value > best.value + TIE_TOL {
            best = r;
        }
    }
    Ok((best.value, to_mm(&best.dirs)))
}

/// Sharp-measurement LE of the three-qubit reference for a gGHZ or gW
/// family: `|c0 c1|` or `|c2 c3|`.
pub fn pv_oracle(family: &StateFamily) -> Result<f64> {
    match family {
        StateFamily::GghzN { c0, c1, .. } => Ok((c0 * c1).norm()),
        StateFamily::Gw { c } => Ok((c[1] * c[2]).norm()),
        other => Err(Error::UnsupportedFamily(other.tag().to_string())),
    }
}

/// One noisy round on a gGHZ state: `η|c0 c1|`.
pub fn gghz_one_round(c0c1: f64, eta: f64) -> f64 {
    eta * c0c1
}

/// Two greedy noisy rounds on a three-qubit gGHZ state: `η√(2−η²)|c0 c1|`.
pub fn gghz_two_rounds(c0c1: f64, eta: f64) -> f64 {
    eta * (2.0 - eta * eta).sqrt() * c0c1
}

/// Relative shortfall `Δ_r` of the sequential LE from the sharp reference,
/// for rounds `1..=rounds` on a three-qubit gGHZ or gW state.
pub fn delta_series(family: &StateFamily, eta: f64, rounds: usize) -> Result<Vec<DeltaRecord>> {
    match family {
        StateFamily::GghzN { n: 3, .. } | StateFamily::Gw { .. } => {}
        other => return Err(Error::UnsupportedFamily(other.tag().to_string())),
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::EtaOutOfRange(eta));
    }
    let pv = pv_oracle(family)?;
    if pv < 1e-12 {
        return Err(Error::UndefinedRatio);
    }
    let state = family.state()?;
    let target = Target::standard(3)?;
    let um = UnsharpnessMatrix::constant(1, rounds, eta)?;
    let recs = sequential_le(&state, &target, &um, rounds, &SearchSpace::full_sphere())?;
    Ok(recs
        .iter()
        .map(|r| DeltaRecord {
            r: r.round,
            delta: (pv - r.sle_value).abs() / pv,
        })
        .collect())
}

/// `f_r(η) = (1 − Δ_r)/η`.
pub fn f_r(delta: f64, eta: f64) -> f64 {
    (1.0 - delta) / eta
}

/// Smallest `r ≤ r_max` with `reference − ℰ_r ≤ epsilon`, where the reference
/// is the sharp-measurement LE; `None` if not reached.
pub fn rounds_to_threshold(
    state: &PureState,
    target: &Target,
    eta: f64,
    epsilon: f64,
    r_max: usize,
    space: &SearchSpace,
) -> Result<Option<usize>> {
    let reference = projective_le(state, target)?;
    rounds_to_reach(state, target, eta, reference, epsilon, r_max, space)
}

/// As [`rounds_to_threshold`] with an explicit reference value.
pub fn rounds_to_reach(
    state: &PureState,
    target: &Target,
    eta: f64,
    reference: f64,
    epsilon: f64,
    r_max: usize,
    space: &SearchSpace,
) -> Result<Option<usize>> {
    if !(epsilon > 0.0) {
        return Err(Error::OutOfRange(format!("epsilon must be positive, got {epsilon}")));
    }
    let um = UnsharpnessMatrix::constant(target.num_assisting(), r_max, eta)?;
    let mut run = SleRun::new(state, target, &um, space, SleOptions::default())?;
    for _ in 0..r_max {
        let rec = run.step()?;
        if reference - rec.sle_value <= epsilon {
            return Ok(Some(rec.round));
        }
    }
    Ok(None)
}

/// Sharp single-round LE maximized over the directions that occur in each
/// row of `pattern`.
pub fn sharp_pattern_le(state: &PureState, target: &Target, pattern: &MeasurementMatrix) -> Result<f64> {
    check_state(state, target)?;
    let nb = target.num_assisting();
    if pattern.rows() != nb {
        return Err(Error::ShapeMismatch(format!(
            "pattern has {} rows for {nb} assisting qubits",
            pattern.rows()
        )));
    }
    let choices: Vec<Vec<Direction>> = (0..nb)
        .map(|k| {
            let mut v: Vec<Direction> = Vec::new();
            for d in pattern.row(k) {
                if !v.iter().any(|e| e.angle_to(d) < 1e-9) {
                    v.push(*d);
                }
            }
            v
        })
        .collect();
    let mut sets = vec![Vec::new()];
    for ch in &choices {
        sets = sets
            .into_iter()
            .flat_map(|s: Vec<Direction>| {
                ch.iter().map(move |d| {
                    let mut t = s.clone();
                    t.push(*d);
                    t
                })
            })
            .collect();
    }
    let kernel = RoundKernel::new(&Ensemble::singleton(state.clone())?, target);
    let ones = vec![1.0; nb];
    let all = evaluate_all(&kernel, &ones, sets);
    Ok(pick(&all).map(|c| c.value).unwrap_or(0.0))
}

/// Lazily enumerates every `nb × rounds` matrix of Pauli axes whose
/// consecutive entries in each row are orthogonal.
pub fn ops_enumerate(nb: usize, rounds: usize) -> OpsIter {
    let per = 3usize * (1usize << (rounds.max(1) - 1));
    let total = if nb == 0 || rounds == 0 {
        0
    } else {
        per.checked_pow(nb as u32).unwrap_or(usize::MAX)
    };
    OpsIter {
        nb,
        rounds,
        per,
        next: 0,
        total,
    }
}

#[derive(Debug, Clone)]
pub struct OpsIter {
    nb: usize,
    rounds: usize,
    per: usize,
    next: usize,
    total: usize,
}

impl OpsIter {
    fn row(&self, mut code: usize) -> Vec<Direction> {
        let mut bits = Vec::with_capacity(self.rounds);
        for _ in 1..self.rounds {
            bits.push(code & 1);
            code >>= 1;
        }
        let mut row = vec![PAULIS[code]];
        for bit in bits.into_iter().rev() {
            let last = *row.last().expect("nonempty");
            row.push(orthogonal_paulis(&last)[bit]);
        }
        row
    }
}

impl Iterator for OpsIter {
    type Item = MeasurementMatrix;

    fn next(&mut self) -> Option<MeasurementMatrix> {
        if self.next >= self.total {
            return None;
        }
        let mut code = self.next;
        self.next += 1;
        let mut rows = vec![Vec::new(); self.nb];
        for row in rows.iter_mut().rev() {
            *row = self.row(code % self.per);
            code /= self.per;
        }
        Some(MeasurementMatrix::new(rows).expect("rectangular"))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.total - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for OpsIter {}

/// The optimal measurement matrices reported for gGHZ, W and Dicke states,
/// cycled out to `rounds` columns.
pub fn pattern_oracle(family: &StateFamily, rounds: usize) -> Result<MeasurementMatrix> {
    let cycle = |pat: &str| -> String { pat.chars().cycle().take(rounds).collect() };
    let rows: Vec<String> = match family {
        StateFamily::GghzN { n, .. } => (0..n - 2)
            .map(|k| cycle(if k % 2 == 0 { "xy" } else { "yx" }))
            .collect(),
        StateFamily::Gw { .. } => vec![cycle("zxy")],
        StateFamily::Dicke { n, n1 } => {
            let (n, n1) = (*n, *n1);
            if n < 3 {
                return Err(Error::OutOfRange(format!("Dicke pattern needs N >= 3, got {n}")));
            }
            let balanced = if n % 2 == 0 {
                2 * n1 == n
            } else {
                2 * n1 + 1 == n || 2 * n1 == n + 1
            };
            (0..n - 2)
                .map(|k| {
                    cycle(if balanced {
                        "zx"
                    } else if k % 2 == 0 {
                        "xyz"
                    } else {
                        "yxz"
                    })
                })
                .collect()
        }
        other => return Err(Error::UnsupportedFamily(other.tag().to_string())),
    };
    let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
    MeasurementMatrix::from_labels(&refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_dicke, make_gghz, make_gw};

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn ghz(n: usize) -> PureState {
        make_gghz(n, c(H), c(H)).unwrap()
    }

    #[test]
    fn kernel_matches_ensemble_average() {
        let t = 1.0 / 3f64.sqrt();
        let w = make_gw(c(t), c(t), c(t)).unwrap();
        let target = Target::new(3, (0, 2), &[1]).unwrap();
        let ens = Ensemble::singleton(w).unwrap();
        let dirs = [Direction::new(0.7, 1.9)];
        let direct = ens
            .measure_round(&target, &[0.6], &dirs)
            .unwrap()
            .average_entanglement((0, 2), Measure::Negativity)
            .unwrap();
        let k = RoundKernel::new(&ens, &target).evaluate(&[0.6], &dirs);
        assert!((direct - k).abs() < 1e-12, "{direct} vs {k}");
    }

    #[test]
    fn kernel_handles_spectators_and_order() {
        let d = make_dicke(5, 2).unwrap();
        let target = Target::new(5, (3, 1), &[4, 0]).unwrap();
        let ens = Ensemble::singleton(d).unwrap();
        let dirs = [Direction::new(1.1, 0.4), Direction::new(2.0, 5.0)];
        let etas = [0.7, 0.9];
        let direct = ens
            .measure_round(&target, &etas, &dirs)
            .unwrap()
            .average_entanglement((3, 1), Measure::Negativity)
            .unwrap();
        let k = RoundKernel::new(&ens, &target).evaluate(&etas, &dirs);
        assert!((direct - k).abs() < 1e-12, "{direct} vs {k}");
        let sharp = RoundKernel::with_measure(&ens, &target, Measure::Ggm).evaluate(&[1.0, 1.0], &dirs);
        let want = ens
            .measure_round(&target, &[1.0, 1.0], &dirs)
            .unwrap()
            .average_entanglement((3, 1), Measure::Ggm)
            .unwrap();
        assert!((sharp - want).abs() < 1e-9);
    }

    #[test]
    fn single_round_examples() {
        let t3 = Target::standard(3).unwrap();
        let (v, dirs) = single_round_le(&ghz(3), &t3, &[1.0], &SearchSpace::full_sphere()).unwrap();
        assert!((v - 0.5).abs() < 1e-9);
        assert!((dirs[0].theta() - FRAC_PI_2).abs() < 1e-3);
        let (v, _) = single_round_le(&ghz(3), &t3, &[0.8], &SearchSpace::full_sphere()).unwrap();
        assert!((v - 0.4).abs() < 1e-9);
        let gw = make_gw(c(0.6), c(0.48), c(0.64)).unwrap();
        for d in [Direction::X, Direction::Z, Direction::new(1.0, 2.0)] {
            let k = RoundKernel::new(&Ensemble::singleton(gw.clone()).unwrap(), &t3);
            assert!((k.evaluate(&[1.0], &[d]) - 0.48 * 0.64).abs() < 1e-12);
        }
        assert!(matches!(
            Target::new(3, (0, 1), &[]),
            Err(Error::EmptyAssisting)
        ));
    }

    #[test]
    fn two_round_orthogonality() {
        let t3 = Target::standard(3).unwrap();
        let s = make_gghz(3, c(0.6), c(0.8)).unwrap();
        let um = UnsharpnessMatrix::constant(1, 2, 0.7).unwrap();
        let recs = sequential_le(&s, &t3, &um, 2, &SearchSpace::full_sphere()).unwrap();
        assert!((recs[0].sle_value - 0.7 * 0.48).abs() < 1e-6);
        assert!((recs[1].sle_value - gghz_two_rounds(0.48, 0.7)).abs() < 1e-6);
        let ang = recs[0].optimal_dirs[0].angle_to(&recs[1].optimal_dirs[0]);
        assert!((ang - FRAC_PI_2).abs() < 1e-3, "{ang}");
    }

    #[test]
    fn plan_shape_errors() {
        let t3 = Target::standard(3).unwrap();
        let um = UnsharpnessMatrix::constant(2, 2, 0.7).unwrap();
        assert!(matches!(
            sequential_le(&ghz(3), &t3, &um, 2, &SearchSpace::pauli()),
            Err(Error::ShapeMismatch(_))
        ));
        let um = UnsharpnessMatrix::constant(1, 3, 0.7).unwrap();
        assert!(matches!(
            sequential_le(&ghz(3), &t3, &um, 2, &SearchSpace::pauli()),
            Err(Error::ShapeMismatch(_))
        ));
        let um = UnsharpnessMatrix::constant(1, 2, 0.7).unwrap();
        let short = MeasurementMatrix::from_labels(&["x"]).unwrap();
        assert!(matches!(
            sequential_le(&ghz(3), &t3, &um, 2, &SearchSpace::fixed_pattern(short)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn budget_is_enforced() {
        let t = Target::standard(4).unwrap();
        let um = UnsharpnessMatrix::constant(2, 2, 0.8).unwrap();
        let opts = SleOptions {
            budget: 100,
            ..SleOptions::default()
        };
        let res = sequential_le_with(&ghz(4), &t, &um, 2, &SearchSpace::pauli(), opts);
        assert!(matches!(res, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn global_examples() {
        let t3 = Target::standard(3).unwrap();
        let um = UnsharpnessMatrix::constant(1, 1, 0.8).unwrap();
        let (v, _) = global_le(&ghz(3), &t3, &um, 1).unwrap();
        assert!((v - 0.4).abs() < 1e-6);
        let t5 = Target::standard(5).unwrap();
        let um = UnsharpnessMatrix::constant(3, 2, 0.8).unwrap();
        assert!(matches!(
            global_le(&ghz(5), &t5, &um, 2),
            Err(Error::InstanceTooLarge { params: 12, limit: 8 })
        ));
    }

    #[test]
    fn delta_examples() {
        let fam = StateFamily::gghz_real(3, 0.6);
        let d = delta_series(&fam, 0.8, 2).unwrap();
        assert!((d[0].delta - 0.2).abs() < 1e-6);
        assert!((d[1].delta - (1.0 - 0.8 * 1.36f64.sqrt())).abs() < 1e-6);
        assert!(matches!(
            delta_series(&StateFamily::gghz_real(3, 1.0), 0.8, 2),
            Err(Error::UndefinedRatio)
        ));
        assert!(matches!(
            delta_series(&StateFamily::Dicke { n: 4, n1: 1 }, 0.8, 2),
            Err(Error::UnsupportedFamily(_))
        ));
    }

    #[test]
    fn product_state_threshold() {
        let t3 = Target::standard(3).unwrap();
        let p = PureState::basis(3, 0).unwrap();
        assert_eq!(
            rounds_to_threshold(&p, &t3, 0.8, 5e-3, 6, &SearchSpace::full_sphere()).unwrap(),
            Some(1)
        );
        assert!(rounds_to_threshold(&p, &t3, 0.8, 0.0, 6, &SearchSpace::full_sphere()).is_err());
    }

    #[test]
    fn ops_counts_and_members() {
        assert_eq!(ops_enumerate(1, 1).count(), 3);
        assert_eq!(ops_enumerate(1, 4).len(), 24);
        assert_eq!(ops_enumerate(2, 3).count(), 144);
        let labels: Vec<String> = ops_enumerate(1, 4).map(|m| m.labels()[0].clone()).collect();
        assert!(labels.contains(&"zxyz".to_string()));
        assert!(labels.contains(&"zxzx".to_string()));
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 24);
        for m in ops_enumerate(2, 3) {
            for r in 0..2 {
                for k in 1..3 {
                    let a = m.get(r, k - 1).angle_to(&m.get(r, k));
                    assert!((a - FRAC_PI_2).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn pattern_examples() {
        let g = pattern_oracle(&StateFamily::ghz(3), 6).unwrap();
        assert_eq!(g.labels(), vec!["xyxyxy"]);
        let g = pattern_oracle(&StateFamily::ghz(5), 6).unwrap();
        assert_eq!(g.labels(), vec!["xyxyxy", "yxyxyx", "xyxyxy"]);
        let d = pattern_oracle(&StateFamily::Dicke { n: 4, n1: 2 }, 6).unwrap();
        assert_eq!(d.labels(), vec!["zxzxzx", "zxzxzx"]);
        let d = pattern_oracle(&StateFamily::Dicke { n: 4, n1: 1 }, 6).unwrap();
        assert_eq!(d.labels(), vec!["xyzxyz", "yxzyxz"]);
        let d = pattern_oracle(&StateFamily::Dicke { n: 5, n1: 2 }, 6).unwrap();
        assert_eq!(d.labels()[0], "zxzxzx");
        let d = pattern_oracle(&StateFamily::Dicke { n: 5, n1: 1 }, 6).unwrap();
        assert_eq!(d.labels()[0], "xyzxyz");
        assert_eq!(pattern_oracle(&StateFamily::w(), 4).unwrap().labels(), vec!["zxyz"]);
        assert!(matches!(
            pattern_oracle(&StateFamily::GhzClass { c: vec![c(1.0); 8] }, 6),
            Err(Error::UnsupportedFamily(_))
        ));
    }

    #[test]
    fn sharp_pattern_reference() {
        let d = make_dicke(4, 2).unwrap();
        let t = Target::standard(4).unwrap();
        let p = pattern_oracle(&StateFamily::Dicke { n: 4, n1: 2 }, 6).unwrap();
        let v = sharp_pattern_le(&d, &t, &p).unwrap();
        assert!(v > 0.0 && v <= 0.5 + 1e-12);
    }
}
