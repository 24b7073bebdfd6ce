//! Entanglement and fidelity functionals.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::qcore::{jacobi4, partial_transpose, Bipartition, DensityMatrix2Q, Mat2, Mat4, PureState, C64};

/// Sum of the magnitudes of the negative eigenvalues of the partial transpose.
///
/// Homogeneous of degree one, so an unnormalized branch matrix `p·ϱ` yields
/// `p·E(ϱ)` directly.
pub fn negativity(dm: &DensityMatrix2Q) -> f64 {
    negativity_of(&dm.0)
}

pub(crate) fn negativity_of(m: &Mat4) -> f64 {
    jacobi4(partial_transpose(m))
        .iter()
        .filter(|&&e| e < 0.0)
        .map(|e| -e)
        .sum()
}

/// Generalized geometric measure: `1 − max_{A:B} λ_max(ρ_A)`.
pub fn ggm(state: &PureState) -> Result<f64> {
    let n = state.num_qubits();
    if n < 2 {
        return Err(Error::OutOfRange("GGM needs at least two qubits".into()));
    }
    let mut best = 0.0f64;
    for bp in Bipartition::all(n) {
        let spec = state.schmidt_spectrum(&bp)?;
        best = best.max(spec[0]);
    }
    Ok((1.0 - best).max(0.0))
}

const BELL_RESTARTS: usize = 24;
const BELL_SEED: u64 = 0x5eed_be11;

/// Maximal overlap with `(|00⟩+|11⟩)/√2` under local unitaries `U1 ⊗ U2`.
pub fn bell_fidelity(dm: &DensityMatrix2Q) -> f64 {
    let nm = NelderMead {
        initial_step: 0.5,
        diameter_tol: 1e-9,
        max_evals: 10_000,
    };
    let objective = |x: &[f64]| overlap(&dm.0, x);
    let mut rng = ChaCha8Rng::seed_from_u64(BELL_SEED);
    let mut starts = vec![vec![0.0; 6]];
    for _ in 0..BELL_RESTARTS {
        starts.push((0..6).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect());
    }
    let mut best = f64::NEG_INFINITY;
    for s in &starts {
        let m = nm.maximize(objective, s);
        if m.value > best {
            best = m.value;
        }
    }
    best.min(1.0)
}

/// Overlap of `dm` with `(U1⊗U2)|Φ+⟩` for ZYZ Euler angles `x[0..3]`, `x[3..6]`.
fn overlap(dm: &Mat4, x: &[f64]) -> f64 {
    let u1 = euler_zyz(x[0], x[1], x[2]);
    let u2 = euler_zyz(x[3], x[4], x[5]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut phi = [C64::new(0.0, 0.0); 4];
    // (U1⊗U2)(|00⟩+|11⟩)/√2: component (i,j) = Σ_k U1[i][k] U2[j][k] / √2
    for i in 0..2 {
        for j in 0..2 {
            phi[(i << 1) | j] = (u1[i][0] * u2[j][0] + u1[i][1] * u2[j][1]) * h;
        }
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..4 {
        let mut row = C64::new(0.0, 0.0);
        for j in 0..4 {
            row += dm[i][j] * phi[j];
        }
        acc += phi[i].conj() * row;
    }
    acc.re
}

/// `Rz(a) Ry(b) Rz(c)`.
pub fn euler_zyz(a: f64, b: f64, c: f64) -> Mat2 {
    let (sb, cb) = (b / 2.0).sin_cos();
    let e = |t: f64| C64::from_polar(1.0, t);
    [
        [e(-(a + c) / 2.0) * cb, -e(-(a - c) / 2.0) * sb],
        [e((a - c) / 2.0) * sb, e((a + c) / 2.0) * cb],
    ]
}

/// A two-qubit entanglement functional selectable by tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Measure {
    Negativity,
    /// For pure pair states: `1 − λ_max` of either single-qubit marginal.
    Ggm,
    BellFidelity,
}

impl Measure {
    pub fn evaluate(&self, dm: &DensityMatrix2Q) -> f64 {
        match self {
            Measure::Negativity => negativity(dm),
            Measure::Ggm => pair_ggm(dm),
            Measure::BellFidelity => bell_fidelity(dm),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Negativity => "NEGATIVITY",
            Measure::Ggm => "GGM",
            Measure::BellFidelity => "BELL_FIDELITY",
        })
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "NEGATIVITY" => Ok(Measure::Negativity),
            "GGM" => Ok(Measure::Ggm),
            "BELL_FIDELITY" | "FIDELITY" => Ok(Measure::BellFidelity),
            _ => Err(Error::UnknownMeasure(s.to_string())),
        }
    }
}

/// Looks up a measure by tag.
pub fn entanglement_functional(tag: &str) -> Result<Measure> {
    tag.parse()
}

fn pair_ggm(dm: &DensityMatrix2Q) -> f64 {
    let m = &dm.0;
    let tr = dm.trace();
    // marginal of the first qubit
    let a = m[0][0].re + m[1][1].re;
    let d = m[2][2].re + m[3][3].re;
    let b = m[0][2] + m[1][3];
    let disc = ((a - d) * (a - d) / 4.0 + b.norm_sqr()).sqrt();
    let lmax = (a + d) / 2.0 + disc;
    (tr - lmax).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{hermitian_eigen, kron2, mat2_adjoint, ZERO};

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn state(amps: &[(usize, f64)], n: usize) -> PureState {
        let mut a = vec![ZERO; 1 << n];
        for &(i, v) in amps {
            a[i] = c(v);
        }
        PureState::new(a).unwrap()
    }

    /// Fully entangled fraction from the magic basis: the largest eigenvalue
    /// of Re(ρ) expressed in that basis.
    fn fef_oracle(dm: &DensityMatrix2Q) -> f64 {
        let i = C64::new(0.0, 1.0);
        let magic: [[C64; 4]; 4] = [
            [c(H), ZERO, ZERO, c(H)],
            [i * H, ZERO, ZERO, -i * H],
            [ZERO, i * H, i * H, ZERO],
            [ZERO, c(H), c(-H), ZERO],
        ];
        let mut re = vec![vec![ZERO; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = ZERO;
                for k in 0..4 {
                    for l in 0..4 {
                        acc += magic[a][k].conj() * dm.0[k][l] * magic[b][l];
                    }
                }
                re[a][b] = c(acc.re);
            }
        }
        *hermitian_eigen(re, false).unwrap().values.last().unwrap()
    }

    #[test]
    fn negativity_examples() {
        let bell = DensityMatrix2Q::from_pure([c(H), ZERO, ZERO, c(H)]);
        assert!((negativity(&bell) - 0.5).abs() < 1e-12);
        let prod = DensityMatrix2Q::from_pure([c(1.0), ZERO, ZERO, ZERO]);
        assert_eq!(negativity(&prod), 0.0);
        let t = 1.0 / 3f64.sqrt();
        let w = state(&[(1, t), (2, t), (4, t)], 3);
        let rho = w.reduced_density(0, 1).unwrap();
        assert!((negativity(&rho) - (5f64.sqrt() - 1.0) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn negativity_is_homogeneous() {
        let bell = DensityMatrix2Q::from_pure([c(H), ZERO, ZERO, c(H)]);
        assert!((negativity(&bell.scaled(0.3)) - 0.15).abs() < 1e-12);
    }

    #[test]
    fn ggm_examples() {
        assert!(ggm(&PureState::basis(3, 6).unwrap()).unwrap().abs() < 1e-12);
        let ghz = state(&[(0, H), (7, H)], 3);
        assert!((ggm(&ghz).unwrap() - 0.5).abs() < 1e-12);
        let t = 1.0 / 3f64.sqrt();
        let w = state(&[(1, t), (2, t), (4, t)], 3);
        assert!((ggm(&w).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bell_fidelity_examples() {
        let bell = DensityMatrix2Q::from_pure([c(H), ZERO, ZERO, c(H)]);
        assert!((bell_fidelity(&bell) - 1.0).abs() < 1e-9);
        let minus = DensityMatrix2Q::from_pure([c(H), ZERO, ZERO, c(-H)]);
        assert!((bell_fidelity(&minus) - 1.0).abs() < 1e-9);
        let mut mixed = [[ZERO; 4]; 4];
        for (k, row) in mixed.iter_mut().enumerate() {
            row[k] = c(0.25);
        }
        assert!((bell_fidelity(&DensityMatrix2Q(mixed)) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bell_fidelity_matches_magic_basis_oracle() {
        let i = C64::new(0.0, 1.0);
        let psi_plus = DensityMatrix2Q::from_pure([ZERO, c(H), c(H), ZERO]);
        let psi_minus = DensityMatrix2Q::from_pure([ZERO, c(H), c(-H), ZERO]);
        let prod = DensityMatrix2Q::from_pure([c(0.6), ZERO, c(0.8), ZERO]);
        let t = 1.0 / 3f64.sqrt();
        let w = state(&[(1, t), (2, t), (4, t)], 3).reduced_density(0, 1).unwrap();
        let skew = DensityMatrix2Q::from_pure([c(0.8), ZERO, ZERO, i * 0.6]);
        for dm in [psi_plus, psi_minus, prod, w, skew] {
            let f = bell_fidelity(&dm);
            let oracle = fef_oracle(&dm);
            assert!((f - oracle).abs() < 1e-6, "{f} vs {oracle}");
        }
    }

    #[test]
    fn bell_fidelity_at_least_unrotated_overlap() {
        let t = 1.0 / 3f64.sqrt();
        let w = state(&[(1, t), (2, t), (4, t)], 3).reduced_density(0, 2).unwrap();
        assert!(bell_fidelity(&w) >= overlap(&w.0, &[0.0; 6]) - 1e-12);
    }

    #[test]
    fn euler_is_unitary() {
        let u = euler_zyz(0.3, 1.1, -2.0);
        let uu = crate::qcore::mat2_mul(&mat2_adjoint(&u), &u);
        assert!((uu[0][0] - c(1.0)).norm() < 1e-15 && uu[0][1].norm() < 1e-15);
        let _ = kron2(&u, &u);
    }

    #[test]
    fn functional_lookup() {
        assert_eq!(entanglement_functional("NEGATIVITY").unwrap(), Measure::Negativity);
        assert_eq!(entanglement_functional("bell_fidelity").unwrap(), Measure::BellFidelity);
        assert!(matches!(
            entanglement_functional("concurrence"),
            Err(Error::UnknownMeasure(_))
        ));
        // pure two-qubit pair: 1 − max Schmidt eigenvalue
        let psi = [c(0.6), ZERO, ZERO, c(0.8)];
        let g = Measure::Ggm.evaluate(&DensityMatrix2Q::from_pure(psi));
        assert!((g - 0.36).abs() < 1e-12);
    }
}
