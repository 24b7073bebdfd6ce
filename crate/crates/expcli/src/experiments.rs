//! Experiment runners. Each returns one or more [`Table`]s whose rows are
//! emitted in a fixed order independent of thread scheduling.

use std::f64::consts::FRAC_1_SQRT_2;
use std::time::Instant;

use entloc::localize::{
    f_r, global_le, rounds_to_reach, sharp_pattern_le, SearchKind, SleRun,
};
use entloc::{
    bell_fidelity, delta_series, ggm, kraus_operator, pattern_oracle, projective_le, Direction, Ensemble,
    HaarFamily, HaarSampler, MeasurementMatrix, Outcome, PureState, RoundRecord, SearchSpace, SleOptions,
    StateFamily, Target, UnsharpnessMatrix, C64,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind, FidelityCase, Grid};
use crate::error::{Error, Result};
use crate::table::{Table, Value};

const PRUNE_TOL: f64 = 1e-9;
const GGM_TOL: f64 = 1e-6;

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Rounding residue below this is reported as zero.
const NOISE_FLOOR: f64 = 1e-12;

fn snap(x: f64) -> f64 {
    if x.abs() < NOISE_FLOOR {
        0.0
    } else {
        x
    }
}

fn default_eta_grid() -> Grid {
    Grid::Range {
        start: 0.05,
        stop: 1.0,
        step: 0.05,
    }
}

/// Directions of one round, `x`/`y`/`z` or `(θ,φ)`, separated by `;`.
pub fn dirs_label(dirs: &[Direction]) -> String {
    dirs.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";")
}

pub fn family_label(f: &StateFamily) -> String {
    match f {
        StateFamily::GghzN { n, c0, c1 } => {
            if (c0 - c1).norm() < 1e-12 {
                format!("GHZ{n}")
            } else {
                format!("GGHZ{n}(c0={})", crate::table::format_sig(c0.norm(), 6))
            }
        }
        StateFamily::Dicke { n, n1 } => format!("DICKE{n}_{n1}"),
        StateFamily::Gw { c } => {
            let w = 1.0 / 3f64.sqrt();
            if c.iter().all(|x| (x - C64::new(w, 0.0)).norm() < 1e-12) {
                "W3".to_string()
            } else {
                "GW".to_string()
            }
        }
        other => other.tag().to_string(),
    }
}

fn options(cfg: &ExperimentConfig) -> SleOptions {
    SleOptions {
        dedup: cfg.dedup,
        budget: cfg.budget(),
        ..SleOptions::default()
    }
}

/// Runs `rounds` greedy rounds and returns every round record.
fn sle_records(
    state: &PureState,
    target: &Target,
    eta: f64,
    rounds: usize,
    space: &SearchSpace,
    opts: SleOptions,
) -> Result<Vec<(RoundRecord, f64)>> {
    let um = UnsharpnessMatrix::constant(target.num_assisting(), rounds, eta)?;
    let mut run = SleRun::new(state, target, &um, space, opts)?;
    let mut out = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let t = Instant::now();
        let rec = run.step()?;
        out.push((rec, ms(t)));
    }
    Ok(out)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Table1 => run_table1(cfg).map(|t| vec![t]),
        ExperimentKind::FrCurve => run_f_r_curve(cfg).map(|t| vec![t]),
        ExperimentKind::DeltaSweep => run_delta_sweep(cfg).map(|t| vec![t]),
        ExperimentKind::RoundsVsGgm => run_rounds_vs_ggm(cfg).map(|t| vec![t]),
        ExperimentKind::ClassFraction => run_class_fraction(cfg).map(|t| vec![t]),
        ExperimentKind::FidelitySweep => run_fidelity_sweep(cfg),
        ExperimentKind::SleCurve => run_sle_curve(cfg).map(|t| vec![t]),
        ExperimentKind::Custom => run_custom(cfg).map(|t| vec![t]),
    }
}

/// Columns: `n, eta, rounds, e1_seq, eR_seq, directions_last, branch_count,
/// dedup_size, method, exact`.
///
/// With `factorized`, N > 3 rows are derived from the three-qubit run as
/// `½·g_R^(N−2)`, `g_R = 2ℰ_R(3)`.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<Table> {
    let eta = cfg.eta_value()?;
    let rounds = cfg.rounds_max(6);
    let ns = cfg.n.clone().unwrap_or_else(|| vec![3, 4, 5]);
    let mut table = Table::new(
        "table1",
        cfg.seed_or_zero(),
        &[
            "n",
            "eta",
            "rounds",
            "e1_seq",
            "eR_seq",
            "directions_last",
            "branch_count",
            "dedup_size",
            "method",
            "exact",
        ],
    );
    let space = cfg.search_space(SearchKind::FullSphere)?;

    let mut base: Option<(Vec<(RoundRecord, f64)>, f64)> = None;
    for &n in &ns {
        let t = Instant::now();
        if cfg.factorized && n > 3 {
            if base.is_none() {
                let s = StateFamily::ghz(3).state()?;
                let recs = sle_records(&s, &Target::standard(3)?, eta, rounds, &space, options(cfg))?;
                base = Some((recs, ms(t)));
            }
            let (recs, _) = base.as_ref().expect("three-qubit base run");
            let g1 = 2.0 * recs[0].0.sle_value;
            let gr = 2.0 * recs[rounds - 1].0.sle_value;
            let k = n as i32 - 2;
            table.push(
                vec![
                    n.into(),
                    eta.into(),
                    rounds.into(),
                    (0.5 * g1.powi(k)).into(),
                    (0.5 * gr.powi(k)).into(),
                    Value::Empty,
                    Value::Empty,
                    Value::Empty,
                    "factorized".into(),
                    (recs.iter().all(|(r, _)| r.pruned_mass <= PRUNE_TOL)).into(),
                ],
                ms(t),
            );
            continue;
        }
        let s = StateFamily::ghz(n).state()?;
        let recs = sle_records(&s, &Target::standard(n)?, eta, rounds, &space, options(cfg))?;
        let last = &recs[rounds - 1].0;
        if n == 3 {
            base = Some((recs.clone(), ms(t)));
        }
        table.push(
            vec![
                n.into(),
                eta.into(),
                rounds.into(),
                recs[0].0.sle_value.into(),
                last.sle_value.into(),
                dirs_label(&last.optimal_dirs).into(),
                last.ensemble_size.into(),
                last.dedup_size.into(),
                "sequential".into(),
                (last.pruned_mass <= PRUNE_TOL).into(),
            ],
            ms(t),
        );
    }
    Ok(table)
}

/// Columns: `eta, r, delta, f_r`.
pub fn run_f_r_curve(cfg: &ExperimentConfig) -> Result<Table> {
    let etas = cfg.eta_values(&default_eta_grid())?;
    let r_max = cfg.rounds_max(6);
    let r_min = cfg.r_min.unwrap_or(1);
    let family = cfg.family.clone().unwrap_or_else(|| StateFamily::gghz_real(3, FRAC_1_SQRT_2));
    let rows: Vec<(f64, Vec<entloc::DeltaRecord>, f64)> = etas
        .par_iter()
        .map(|&eta| {
            let t = Instant::now();
            let d = delta_series(&family, eta, r_max)?;
            Ok((eta, d, ms(t)))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new("f_r_curve", cfg.seed_or_zero(), &["eta", "r", "delta", "f_r"]).with_plot(
        "eta",
        "f_r",
        Some("r"),
        "f_r(eta)",
    );
    for (eta, d, wall) in rows {
        for rec in d.iter().filter(|rec| rec.r >= r_min) {
            table.push(
                vec![
                    eta.into(),
                    rec.r.into(),
                    snap(rec.delta).into(),
                    f_r(snap(rec.delta), eta).into(),
                ],
                wall,
            );
        }
    }
    Ok(table)
}

/// Columns: `c0, eta, r, delta, delta_c0c1`.
pub fn run_delta_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    let eta = cfg.eta_value()?;
    let r_max = cfg.rounds_max(6);
    let r_min = cfg.r_min.unwrap_or(1);
    let c0s = cfg
        .c0_grid
        .clone()
        .unwrap_or(Grid::Range {
            start: 0.05,
            stop: 0.95,
            step: 0.05,
        })
        .values()?;
    let rows: Vec<(f64, Vec<entloc::DeltaRecord>, f64)> = c0s
        .par_iter()
        .map(|&c0| {
            let t = Instant::now();
            let d = delta_series(&StateFamily::gghz_real(3, c0), eta, r_max)?;
            Ok((c0, d, ms(t)))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        "delta_sweep",
        cfg.seed_or_zero(),
        &["c0", "eta", "r", "delta", "delta_c0c1"],
    )
    .with_plot("c0", "delta_c0c1", Some("r"), "Delta_r |c0 c1| vs c0");
    for (c0, d, wall) in rows {
        let c0c1 = c0 * (1.0 - c0 * c0).sqrt();
        for rec in d.iter().filter(|rec| rec.r >= r_min) {
            table.push(
                vec![
                    c0.into(),
                    eta.into(),
                    rec.r.into(),
                    snap(rec.delta).into(),
                    snap(rec.delta * c0c1).into(),
                ],
                wall,
            );
        }
    }
    Ok(table)
}

/// The default GGM grid for the rounds-vs-GGM comparison.
pub fn default_ggm_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 1.0 / 3.0, 0.4, 0.5]
}

/// gGHZ with GGM `g`: `c0 = √g`.
pub fn gghz_with_ggm(g: f64) -> StateFamily {
    StateFamily::gghz_real(3, g.sqrt())
}

/// gW with GGM `g` (needs `g ≤ 1/3`): `c2 = c3 = √g`, `c1 = √(1−2g)`.
pub fn gw_with_ggm(g: f64) -> Option<StateFamily> {
    if g > 1.0 / 3.0 + 1e-12 {
        return None;
    }
    let r = |x: f64| C64::new(x.max(0.0).sqrt(), 0.0);
    Some(StateFamily::Gw {
        c: [r(1.0 - 2.0 * g), r(g), r(g)],
    })
}

fn matched_ggm(f: &StateFamily, g: f64) -> Result<PureState> {
    let s = f.state()?;
    let got = ggm(&s)?;
    if (got - g).abs() > GGM_TOL {
        return Err(Error::config(format!(
            "{} has GGM {got}, expected {g}",
            family_label(f)
        )));
    }
    Ok(s)
}

/// Columns: `ggm, c0, r_gghz, r_gw`. An empty cell means the family has no
/// member at that GGM; `NOT_REACHED` means the threshold was not met by `R_max`.
pub fn run_rounds_vs_ggm(cfg: &ExperimentConfig) -> Result<Table> {
    let eta = cfg.eta_value()?;
    let r_max = cfg.rounds_max(10);
    let grid = match &cfg.ggm_grid {
        Some(g) => g.values()?,
        None => default_ggm_grid(),
    };
    let eps = cfg.epsilon;
    let space = cfg.search_space(SearchKind::FullSphere)?;
    let target = Target::standard(3)?;
    let rounds = |s: &PureState| -> Result<Value> {
        let reference = projective_le(s, &target)?;
        Ok(match rounds_to_reach(s, &target, eta, reference, eps, r_max, &space)? {
            Some(r) => r.into(),
            None => "NOT_REACHED".into(),
        })
    };
    let rows: Vec<(f64, Value, Value, f64)> = grid
        .par_iter()
        .map(|&g| {
            let t = Instant::now();
            let gh = matched_ggm(&gghz_with_ggm(g), g)?;
            let r_gghz = rounds(&gh)?;
            let r_gw = match gw_with_ggm(g) {
                Some(f) => rounds(&matched_ggm(&f, g)?)?,
                None => Value::Empty,
            };
            Ok((g, r_gghz, r_gw, ms(t)))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        "rounds_vs_ggm",
        cfg.seed_or_zero(),
        &["ggm", "eta", "epsilon", "c0", "r_gghz", "r_gw"],
    )
    .with_plot("ggm", "r_gghz", None, "rounds to threshold vs GGM (gGHZ)");
    for (g, a, b, wall) in rows {
        table.push(
            vec![g.into(), eta.into(), eps.into(), g.sqrt().into(), a, b],
            wall,
        );
    }
    Ok(table)
}

fn class_label(c: HaarFamily) -> &'static str {
    match c {
        HaarFamily::GhzClass => "GHZ_CLASS",
        HaarFamily::WClass => "W_CLASS",
        HaarFamily::Gw => "GW",
    }
}

/// First round at which each seeded sample comes within `epsilon` of its
/// sharp-measurement LE, or `None`.
pub fn class_first_rounds(
    class: HaarFamily,
    class_index: u64,
    seed: u64,
    samples: usize,
    eta: f64,
    epsilon: f64,
    r_max: usize,
    space: &SearchSpace,
) -> Result<Vec<Option<usize>>> {
    let target = Target::standard(3)?;
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let fam = HaarSampler::substream(seed, (class_index << 32) | i).sample(class);
            let s = fam.state()?;
            let reference = projective_le(&s, &target)?;
            Ok(rounds_to_reach(&s, &target, eta, reference, epsilon, r_max, space)?)
        })
        .collect()
}

/// Columns: `class, eta, epsilon, r, reached, samples, fraction`.
pub fn run_class_fraction(cfg: &ExperimentConfig) -> Result<Table> {
    let seed = cfg
        .seed
        .ok_or_else(|| Error::config("class fractions sample random states; pass --seed"))?;
    let eta = cfg.eta_value()?;
    let r_max = cfg.rounds_max(6);
    let space = cfg.search_space(SearchKind::Pauli)?;
    let classes = cfg
        .classes
        .clone()
        .unwrap_or_else(|| vec![HaarFamily::GhzClass, HaarFamily::WClass]);
    let mut table = Table::new(
        "class_fraction",
        seed,
        &["class", "eta", "epsilon", "r", "reached", "samples", "fraction"],
    )
    .with_plot("r", "fraction", Some("class"), "fraction of states within epsilon");
    for (ci, &class) in classes.iter().enumerate() {
        let t = Instant::now();
        let first = class_first_rounds(
            class,
            ci as u64,
            seed,
            cfg.sample_size,
            eta,
            cfg.epsilon,
            r_max,
            &space,
        )?;
        let wall = ms(t);
        for r in 1..=r_max {
            let reached = first.iter().filter(|f| matches!(f, Some(k) if *k <= r)).count();
            table.push(
                vec![
                    class_label(class).into(),
                    eta.into(),
                    cfg.epsilon.into(),
                    r.into(),
                    reached.into(),
                    cfg.sample_size.into(),
                    (reached as f64 / cfg.sample_size as f64).into(),
                ],
                wall,
            );
        }
    }
    Ok(table)
}

pub fn default_fidelity_cases() -> Vec<FidelityCase> {
    vec![
        FidelityCase {
            name: "GHZ3_R6".into(),
            family: StateFamily::ghz(3),
            pattern: "xyxyxy".into(),
            threshold: 0.99,
        },
        FidelityCase {
            name: "GHZ3_R7".into(),
            family: StateFamily::ghz(3),
            pattern: "xyxyxyy".into(),
            threshold: 0.98,
        },
        FidelityCase {
            name: "W3_R4".into(),
            family: StateFamily::w(),
            pattern: "zxyz".into(),
            threshold: 0.95,
        },
    ]
}

/// One outcome branch of a fixed-pattern run on a three-qubit state.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityBranch {
    /// `+`/`-` per round.
    pub outcomes: String,
    pub probability: f64,
    pub fidelity: f64,
}

/// Every branch of the full outcome tree (no merging), sorted by outcome string.
pub fn fidelity_branches(family: &StateFamily, pattern: &str, eta: f64) -> Result<Vec<FidelityBranch>> {
    if family.num_qubits() != 3 {
        return Err(Error::config("fidelity cases are three-qubit states"));
    }
    let target = Target::standard(3)?;
    let mm = MeasurementMatrix::from_labels(&[pattern])?;
    let mut ens = Ensemble::singleton(family.state()?)?;
    for r in 0..mm.cols() {
        ens = ens.measure_round(&target, &[eta], &mm.column(r))?;
    }
    let mut out: Vec<FidelityBranch> = ens
        .branches()
        .iter()
        .map(|b| {
            Ok(FidelityBranch {
                outcomes: b
                    .outcome_history
                    .iter()
                    .map(|o| if *o == Outcome::Plus { '+' } else { '-' })
                    .collect(),
                probability: b.probability,
                fidelity: bell_fidelity(&b.state.reduced_density(0, 1)?),
            })
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.outcomes.cmp(&b.outcomes));
    Ok(out)
}

/// Bell fidelity and probability of the branch where every outcome is `+1`.
pub fn all_plus_branch(family: &StateFamily, pattern: &str, eta: f64) -> Result<(f64, f64)> {
    let mm = MeasurementMatrix::from_labels(&[pattern])?;
    let mut s = family.state()?;
    for r in 0..mm.cols() {
        let k = kraus_operator(Outcome::Plus, eta, mm.get(0, r))?;
        s.apply_single_qubit_op_in_place(2, &k.matrix)?;
    }
    let p = s.norm_squared();
    let s = s.normalize()?;
    Ok((bell_fidelity(&s.reduced_density(0, 1)?), p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelitySummary {
    pub branches: usize,
    pub above: usize,
    pub fraction: f64,
    pub rest_min: Option<f64>,
    pub rest_max: Option<f64>,
}

pub fn summarize(branches: &[FidelityBranch], threshold: f64, weighted: bool) -> FidelitySummary {
    let above: Vec<&FidelityBranch> = branches.iter().filter(|b| b.fidelity > threshold).collect();
    let rest = branches.iter().filter(|b| b.fidelity <= threshold).map(|b| b.fidelity);
    let fraction = if weighted {
        above.iter().map(|b| b.probability).sum::<f64>() / branches.iter().map(|b| b.probability).sum::<f64>()
    } else {
        above.len() as f64 / branches.len() as f64
    };
    FidelitySummary {
        branches: branches.len(),
        above: above.len(),
        fraction,
        rest_min: rest.clone().reduce(f64::min),
        rest_max: rest.reduce(f64::max),
    }
}

/// Three tables: `fidelity_branches`, `fidelity_summary` and `fidelity_eta`.
///
/// Branch columns: `case, eta, rounds, outcomes, probability, fidelity,
/// above_threshold, lambda31_plus`. Summary columns: `case, eta, rounds,
/// threshold, weighted, branches, above, fraction, rest_min, rest_max`. The
/// η-sweep columns: `case, eta, fidelity, probability` for the all-`+1` branch.
pub fn run_fidelity_sweep(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let eta = cfg.eta_value()?;
    let cases = cfg.cases.clone().unwrap_or_else(default_fidelity_cases);
    let sweep = cfg.sweep_eta.clone().unwrap_or_else(default_eta_grid).values()?;
    let seed = cfg.seed_or_zero();
    let mut br = Table::new(
        "fidelity_branches",
        seed,
        &[
            "case",
            "eta",
            "rounds",
            "outcomes",
            "probability",
            "fidelity",
            "above_threshold",
            "lambda31_plus",
        ],
    );
    let mut sum = Table::new(
        "fidelity_summary",
        seed,
        &[
            "case",
            "eta",
            "rounds",
            "threshold",
            "weighted",
            "branches",
            "above",
            "fraction",
            "rest_min",
            "rest_max",
        ],
    );
    let mut sw = Table::new("fidelity_eta", seed, &["case", "eta", "fidelity", "probability"]).with_plot(
        "eta",
        "fidelity",
        Some("case"),
        "Bell fidelity of the all-plus branch",
    );
    for case in &cases {
        let t = Instant::now();
        let branches = fidelity_branches(&case.family, &case.pattern, eta)?;
        let rounds = case.pattern.len();
        let wall = ms(t);
        for b in &branches {
            br.push(
                vec![
                    case.name.as_str().into(),
                    eta.into(),
                    rounds.into(),
                    b.outcomes.as_str().into(),
                    b.probability.into(),
                    b.fidelity.into(),
                    (b.fidelity > case.threshold).into(),
                    b.outcomes.starts_with('+').into(),
                ],
                wall,
            );
        }
        let s = summarize(&branches, case.threshold, cfg.weighted);
        sum.push(
            vec![
                case.name.as_str().into(),
                eta.into(),
                rounds.into(),
                case.threshold.into(),
                cfg.weighted.into(),
                s.branches.into(),
                s.above.into(),
                s.fraction.into(),
                s.rest_min.into(),
                s.rest_max.into(),
            ],
            wall,
        );
        for &e in &sweep {
            let t = Instant::now();
            let (f, p) = all_plus_branch(&case.family, &case.pattern, e)?;
            sw.push(vec![case.name.as_str().into(), e.into(), f.into(), p.into()], ms(t));
        }
    }
    Ok(vec![br, sum, sw])
}

/// Families swept by `SLE_CURVE`: explicit `families`, otherwise GHZ on `n`.
fn curve_families(cfg: &ExperimentConfig) -> Vec<StateFamily> {
    match &cfg.families {
        Some(f) => f.clone(),
        None => cfg
            .n
            .clone()
            .unwrap_or_else(|| vec![3, 4, 5])
            .into_iter()
            .map(StateFamily::ghz)
            .collect(),
    }
}

pub fn dicke_families() -> Vec<StateFamily> {
    [(4, 1), (4, 2), (5, 1), (5, 2)]
        .into_iter()
        .map(|(n, n1)| StateFamily::Dicke { n, n1 })
        .collect()
}

/// Columns: `family, n, eta, r, value, reference, gap, directions,
/// branch_count, dedup_size, exact`.
///
/// Dicke families use their pattern matrices unless `space` is set, with the
/// reference taken as the sharp LE over the pattern's directions; every other
/// family uses the full-sphere sharp LE.
pub fn run_sle_curve(cfg: &ExperimentConfig) -> Result<Table> {
    let eta = cfg.eta_value()?;
    let r_max = cfg.rounds_max(6);
    let mut table = Table::new(
        "sle_curve",
        cfg.seed_or_zero(),
        &[
            "family",
            "n",
            "eta",
            "r",
            "value",
            "reference",
            "gap",
            "directions",
            "branch_count",
            "dedup_size",
            "exact",
        ],
    )
    .with_plot("r", "value", Some("family"), "sequential LE vs rounds");
    for fam in curve_families(cfg) {
        let n = fam.num_qubits();
        let s = fam.state()?;
        let target = Target::standard(n)?;
        let pattern_run = cfg.space.is_none() && cfg.pattern.is_none() && matches!(fam, StateFamily::Dicke { .. });
        let (space, reference) = if pattern_run {
            let mm = pattern_oracle(&fam, r_max)?;
            let reference = sharp_pattern_le(&s, &target, &mm)?;
            (SearchSpace::fixed_pattern(mm), reference)
        } else {
            (cfg.search_space(SearchKind::FullSphere)?, projective_le(&s, &target)?)
        };
        for (rec, wall) in sle_records(&s, &target, eta, r_max, &space, options(cfg))? {
            table.push(
                vec![
                    family_label(&fam).into(),
                    n.into(),
                    eta.into(),
                    rec.round.into(),
                    rec.sle_value.into(),
                    reference.into(),
                    (reference - rec.sle_value).into(),
                    dirs_label(&rec.optimal_dirs).into(),
                    rec.ensemble_size.into(),
                    rec.dedup_size.into(),
                    (rec.pruned_mass <= PRUNE_TOL).into(),
                ],
                wall,
            );
        }
    }
    Ok(table)
}

/// Columns: `family, eta, r, value, directions, branch_count, dedup_size,
/// pruned_mass, exact`.
pub fn run_custom(cfg: &ExperimentConfig) -> Result<Table> {
    let fam = cfg
        .family
        .clone()
        .ok_or_else(|| Error::config("CUSTOM needs a `family`"))?;
    sle_table(&fam, cfg.eta_value()?, cfg.rounds_max(6), &cfg.search_space(SearchKind::FullSphere)?, cfg)
}

pub fn sle_table(
    fam: &StateFamily,
    eta: f64,
    rounds: usize,
    space: &SearchSpace,
    cfg: &ExperimentConfig,
) -> Result<Table> {
    let s = fam.state()?;
    let target = Target::standard(fam.num_qubits())?;
    let mut table = Table::new(
        "sle",
        cfg.seed_or_zero(),
        &[
            "family",
            "eta",
            "r",
            "value",
            "directions",
            "branch_count",
            "dedup_size",
            "pruned_mass",
            "exact",
        ],
    )
    .with_plot("r", "value", None, "sequential LE vs rounds");
    for (rec, wall) in sle_records(&s, &target, eta, rounds, space, options(cfg))? {
        table.push(
            vec![
                family_label(fam).into(),
                eta.into(),
                rec.round.into(),
                rec.sle_value.into(),
                dirs_label(&rec.optimal_dirs).into(),
                rec.ensemble_size.into(),
                rec.dedup_size.into(),
                rec.pruned_mass.into(),
                (rec.pruned_mass <= PRUNE_TOL).into(),
            ],
            wall,
        );
    }
    Ok(table)
}

/// Columns: `family, eta, value, directions, sharp_reference`.
pub fn le_table(fam: &StateFamily, eta: f64, space: &SearchSpace, seed: u64) -> Result<Table> {
    let t = Instant::now();
    let s = fam.state()?;
    let target = Target::standard(fam.num_qubits())?;
    let etas = vec![eta; target.num_assisting()];
    let (v, dirs) = entloc::single_round_le(&s, &target, &etas, space)?;
    let reference = projective_le(&s, &target)?;
    let mut table = Table::new("le", seed, &["family", "eta", "value", "directions", "sharp_reference"]);
    table.push(
        vec![
            family_label(fam).into(),
            eta.into(),
            v.into(),
            dirs_label(&dirs).into(),
            reference.into(),
        ],
        ms(t),
    );
    Ok(table)
}

/// Columns: `family, eta, rounds, gle, sle, difference, gle_pattern`.
pub fn gle_table(fam: &StateFamily, eta: f64, rounds: usize, seed: u64) -> Result<Table> {
    let t = Instant::now();
    let s = fam.state()?;
    let target = Target::standard(fam.num_qubits())?;
    let um = UnsharpnessMatrix::constant(target.num_assisting(), rounds, eta)?;
    let (g, mm) = global_le(&s, &target, &um, rounds)?;
    let sle = entloc::sequential_le(&s, &target, &um, rounds, &SearchSpace::full_sphere())?;
    let sv = sle[rounds - 1].sle_value;
    let mut table = Table::new(
        "gle",
        seed,
        &["family", "eta", "rounds", "gle", "sle", "difference", "gle_pattern"],
    );
    table.push(
        vec![
            family_label(fam).into(),
            eta.into(),
            rounds.into(),
            g.into(),
            sv.into(),
            (g - sv).into(),
            mm.labels().join("/").into(),
        ],
        ms(t),
    );
    Ok(table)
}
