//! State families and seeded Haar sampling.
//!
//! Kets are written `|q0 q1 q2 ...⟩` with qubit 0 the most significant bit.
//! Three-qubit conventions:
//!
//! | family  | coefficient | ket    | index |
//! |---------|-------------|--------|-------|
//! | gW      | `c1`        | `|001⟩` | 1 |
//! | gW      | `c2`        | `|010⟩` | 2 |
//! | gW      | `c3`        | `|100⟩` | 4 |
//! | W class | `c0`        | `|000⟩` | 0 |
//! | W class | `c1`        | `|100⟩` | 4 |
//! | W class | `c2`        | `|010⟩` | 2 |
//! | W class | `c3`        | `|001⟩` | 1 |
//!
//! With the pair `(0, 1)` as target and qubit 2 assisting, the projective
//! localizable entanglement is `|c0 c1|` for gGHZ and `|c2 c3|` for gW.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::qcore::{PureState, C64, ZERO};

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StateFamily {
    /// `c0|0…0⟩ + c1|1…1⟩` on `n` qubits.
    GghzN { n: usize, c0: C64, c1: C64 },
    /// `c1|001⟩ + c2|010⟩ + c3|100⟩`.
    Gw { c: [C64; 3] },
    /// Arbitrary three-qubit state, coefficients in computational order.
    GhzClass { c: Vec<C64> },
    /// `c0|000⟩ + c1|100⟩ + c2|010⟩ + c3|001⟩`.
    WClass { c: Vec<C64> },
    Dicke { n: usize, n1: usize },
}

impl StateFamily {
    pub fn state(&self) -> Result<PureState> {
        match self {
            StateFamily::GghzN { n, c0, c1 } => make_gghz(*n, *c0, *c1),
            StateFamily::Gw { c } => make_gw(c[0], c[1], c[2]),
            StateFamily::GhzClass { c } => make_ghz_class(c),
            StateFamily::WClass { c } => make_w_class(c),
            StateFamily::Dicke { n, n1 } => make_dicke(*n, *n1),
        }
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            StateFamily::GghzN { n, .. } | StateFamily::Dicke { n, .. } => *n,
            _ => 3,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            StateFamily::GghzN { .. } => "GGHZ_N",
            StateFamily::Gw { .. } => "GW",
            StateFamily::GhzClass { .. } => "GHZ_CLASS",
            StateFamily::WClass { .. } => "W_CLASS",
            StateFamily::Dicke { .. } => "DICKE",
        }
    }

    /// Coefficient vector for the coefficient-parametrized families.
    pub fn coefficients(&self) -> Vec<C64> {
        match self {
            StateFamily::GghzN { c0, c1, .. } => vec![*c0, *c1],
            StateFamily::Gw { c } => c.to_vec(),
            StateFamily::GhzClass { c } | StateFamily::WClass { c } => c.clone(),
            StateFamily::Dicke { .. } => Vec::new(),
        }
    }

    /// Real-amplitude symmetric gGHZ, `c0 = c1 = 1/√2`.
    pub fn ghz(n: usize) -> Self {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        StateFamily::GghzN { n, c0: h, c1: h }
    }

    /// `c0|0…0⟩ + √(1−c0²)|1…1⟩` for real `c0 ∈ [0, 1]`.
    pub fn gghz_real(n: usize, c0: f64) -> Self {
        StateFamily::GghzN {
            n,
            c0: C64::new(c0, 0.0),
            c1: C64::new((1.0 - c0 * c0).max(0.0).sqrt(), 0.0),
        }
    }

    pub fn w() -> Self {
        let t = C64::new(1.0 / 3f64.sqrt(), 0.0);
        StateFamily::Gw { c: [t, t, t] }
    }

    pub fn gw_angles(beta1: f64, beta2: f64) -> Self {
        StateFamily::Gw {
            c: gw_angle_coefficients(beta1, beta2),
        }
    }
}

fn check_norm(coeffs: &[C64]) -> Result<()> {
    let n2: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if coeffs.iter().any(|c| c.re.is_nan() || c.im.is_nan()) {
        return Err(Error::NotANumber("state coefficients"));
    }
    if (n2 - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(n2));
    }
    Ok(())
}

pub fn make_gghz(n: usize, c0: C64, c1: C64) -> Result<PureState> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("gGHZ needs N >= 2, got {n}")));
    }
    check_norm(&[c0, c1])?;
    let dim = 1usize << n;
    let mut amps = vec![ZERO; dim];
    amps[0] = c0;
    amps[dim - 1] = c1;
    PureState::new(amps)
}

pub fn make_gw(c1: C64, c2: C64, c3: C64) -> Result<PureState> {
    check_norm(&[c1, c2, c3])?;
    let mut amps = vec![ZERO; 8];
    amps[0b001] = c1;
    amps[0b010] = c2;
    amps[0b100] = c3;
    PureState::new(amps)
}

fn gw_angle_coefficients(beta1: f64, beta2: f64) -> [C64; 3] {
    let (s2, c2) = (beta2 / 2.0).sin_cos();
    let (s1, c1) = (beta1 / 2.0).sin_cos();
    [
        C64::new(c2, 0.0),
        C64::new(s2 * c1, 0.0),
        C64::new(s2 * s1, 0.0),
    ]
}

/// `c1 = cos(β2/2)`, `c2 = sin(β2/2)cos(β1/2)`, `c3 = sin(β2/2)sin(β1/2)`.
pub fn make_gw_angles(beta1: f64, beta2: f64) -> Result<PureState> {
    let [a, b, c] = gw_angle_coefficients(beta1, beta2);
    make_gw(a, b, c)
}

pub fn make_ghz_class(coeffs: &[C64]) -> Result<PureState> {
    if coeffs.len() != 8 {
        return Err(Error::ShapeMismatch(format!(
            "GHZ-class state needs 8 coefficients, got {}",
            coeffs.len()
        )));
    }
    check_norm(coeffs)?;
    PureState::new(coeffs.to_vec())
}

pub fn make_w_class(coeffs: &[C64]) -> Result<PureState> {
    if coeffs.len() != 4 {
        return Err(Error::ShapeMismatch(format!(
            "W-class state needs 4 coefficients, got {}",
            coeffs.len()
        )));
    }
    check_norm(coeffs)?;
    let mut amps = vec![ZERO; 8];
    amps[0b000] = coeffs[0];
    amps[0b100] = coeffs[1];
    amps[0b010] = coeffs[2];
    amps[0b001] = coeffs[3];
    PureState::new(amps)
}

/// Equal superposition of all `N`-qubit basis states of Hamming weight `n1`.
pub fn make_dicke(n: usize, n1: usize) -> Result<PureState> {
    if n == 0 || n1 > n || n > 24 {
        return Err(Error::OutOfRange(format!("Dicke state D({n},{n1})")));
    }
    let dim = 1usize << n;
    let count = (0..dim).filter(|i| i.count_ones() as usize == n1).count();
    let amp = C64::new(1.0 / (count as f64).sqrt(), 0.0);
    let amps = (0..dim)
        .map(|i| if i.count_ones() as usize == n1 { amp } else { ZERO })
        .collect();
    PureState::new(amps)
}

/// Families that can be Haar-sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HaarFamily {
    GhzClass,
    WClass,
    Gw,
}

impl HaarFamily {
    pub fn dimension(&self) -> usize {
        match self {
            HaarFamily::GhzClass => 8,
            HaarFamily::WClass => 4,
            HaarFamily::Gw => 3,
        }
    }
}

/// Seeded sampler drawing coefficient vectors uniformly from the complex
/// unit sphere (normalized i.i.d. complex Gaussians).
#[derive(Debug, Clone)]
pub struct HaarSampler {
    rng: ChaCha8Rng,
}

impl HaarSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent generator for sample `index` of a seeded sweep, so parallel
    /// workers reproduce the sequential draw for each index.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { rng }
    }

    pub fn unit_vector(&mut self, dim: usize) -> Vec<C64> {
        loop {
            let v: Vec<C64> = (0..dim)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut self.rng);
                    let im: f64 = StandardNormal.sample(&mut self.rng);
                    C64::new(re, im)
                })
                .collect();
            let n2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            if n2 > 1e-300 {
                let inv = 1.0 / n2.sqrt();
                return v.into_iter().map(|c| c * inv).collect();
            }
        }
    }

    pub fn sample(&mut self, family: HaarFamily) -> StateFamily {
        let c = self.unit_vector(family.dimension());
        match family {
            HaarFamily::GhzClass => StateFamily::GhzClass { c },
            HaarFamily::WClass => StateFamily::WClass { c },
            HaarFamily::Gw => StateFamily::Gw {
                c: [c[0], c[1], c[2]],
            },
        }
    }
}

/// One Haar-uniform draw from `family` under `seed`.
pub fn sample_haar(family: HaarFamily, seed: u64) -> StateFamily {
    HaarSampler::new(seed).sample(family)
}
