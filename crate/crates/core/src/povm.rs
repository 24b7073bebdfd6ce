//! White-noise unsharp qubit measurements.
//!
//! An outcome `λ = ±1` of a measurement with unsharpness `η` along `n̂` has the
//! POVM element `½(I + λ η n̂·σ)` and the positive Kraus operator
//! `√((1+λη)/2) |χ+⟩⟨χ+| + √((1−λη)/2) |χ−⟩⟨χ−|` where
//! `|χ+⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩` and
//! `|χ−⟩ = sin(θ/2)|0⟩ − e^{iφ} cos(θ/2)|1⟩`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{Mat2, C64, ZERO};

/// Measurement direction on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    pub const X: Direction = Direction {
        theta: FRAC_PI_2,
        phi: 0.0,
    };
    pub const Y: Direction = Direction {
        theta: FRAC_PI_2,
        phi: FRAC_PI_2,
    };
    pub const Z: Direction = Direction {
        theta: 0.0,
        phi: 0.0,
    };

    /// Builds a direction from arbitrary real angles, folding them into
    /// `θ ∈ [0, π]`, `φ ∈ [0, 2π)`. At the poles `φ` is set to 0.
    pub fn new(theta: f64, phi: f64) -> Self {
        let (x, y, z) = (
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        );
        Self::from_vector([x, y, z])
    }

    /// Direction of a nonzero 3-vector.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let z = (v[2] / r).clamp(-1.0, 1.0);
        let theta = z.acos();
        let rho = (v[0] * v[0] + v[1] * v[1]).sqrt() / r;
        let phi = if rho < 1e-12 {
            0.0
        } else {
            let mut p = v[1].atan2(v[0]);
            if p < 0.0 {
                p += TAU;
            }
            if p >= TAU - 1e-12 {
                p = 0.0;
            }
            p
        };
        Self { theta, phi }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Angle between the two axes, in `[0, π]`.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        dot.clamp(-1.0, 1.0).acos()
    }

    /// `(|χ+⟩, |χ−⟩)` as column vectors.
    pub fn eigenbasis(&self) -> ([C64; 2], [C64; 2]) {
        let (s, c) = (self.theta / 2.0).sin_cos();
        let e = C64::from_polar(1.0, self.phi);
        ([C64::new(c, 0.0), e * s], [C64::new(s, 0.0), -e * c])
    }

    /// Unitary sending `|0⟩, |1⟩` to `|χ+⟩, |χ−⟩`.
    pub fn frame(&self) -> Mat2 {
        let (p, m) = self.eigenbasis();
        [[p[0], m[0]], [p[1], m[1]]]
    }

    /// Key for lexicographic tie-breaking, with angles rounded to 1e-6 rad.
    pub fn order_key(&self) -> (i64, i64) {
        ((self.theta * 1e6).round() as i64, (self.phi * 1e6).round() as i64)
    }

    pub fn pauli_label(&self) -> Option<char> {
        let close = |d: &Direction| self.angle_to(d) < 1e-9 || self.angle_to(d) > PI - 1e-9;
        if close(&Direction::X) {
            Some('x')
        } else if close(&Direction::Y) {
            Some('y')
        } else if close(&Direction::Z) {
            Some('z')
        } else {
            None
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pauli_label() {
            Some(l) => write!(f, "{l}"),
            None => write!(f, "({:.6},{:.6})", self.theta, self.phi),
        }
    }
}

/// Measurement outcome `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta.is_nan() {
        return Err(Error::NotANumber("unsharpness"));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::EtaOutOfRange(eta));
    }
    Ok(())
}

/// `½(I + λ η n̂·σ)`.
pub fn povm_element(outcome: Outcome, eta: f64, dir: Direction) -> Result<Mat2> {
    check_eta(eta)?;
    let [nx, ny, nz] = dir.unit_vector();
    let k = 0.5 * outcome.sign() * eta;
    Ok([
        [C64::new(0.5 + k * nz, 0.0), C64::new(k * nx, -k * ny)],
        [C64::new(k * nx, k * ny), C64::new(0.5 - k * nz, 0.0)],
    ])
}

/// Positive square root of a POVM element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausOperator {
    pub matrix: Mat2,
    pub outcome: Outcome,
    pub eta: f64,
    pub direction: Direction,
}

pub fn kraus_operator(outcome: Outcome, eta: f64, dir: Direction) -> Result<KrausOperator> {
    check_eta(eta)?;
    Ok(KrausOperator {
        matrix: kraus_matrix(outcome, eta, dir),
        outcome,
        eta,
        direction: dir,
    })
}

/// Unchecked Kraus matrix; `eta` must already be in `[0, 1]`.
pub(crate) fn kraus_matrix(outcome: Outcome, eta: f64, dir: Direction) -> Mat2 {
    let l = outcome.sign();
    let a = ((1.0 + l * eta) / 2.0).max(0.0).sqrt();
    let b = ((1.0 - l * eta) / 2.0).max(0.0).sqrt();
    let (p, m) = dir.eigenbasis();
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = p[i] * p[j].conj() * a + m[i] * m[j].conj() * b;
        }
    }
    out
}

/// `N_B × R` matrix of unsharpness values, row = assisting qubit, column = round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnsharpnessMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl UnsharpnessMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let (r, c, entries) = flatten(rows, "unsharpness matrix")?;
        for &e in &entries {
            check_eta(e)?;
        }
        Ok(Self {
            rows: r,
            cols: c,
            entries,
        })
    }

    /// Same unsharpness for every qubit and round.
    pub fn constant(nb: usize, rounds: usize, eta: f64) -> Result<Self> {
        Self::new(vec![vec![eta; rounds]; nb])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, qubit_row: usize, round: usize) -> f64 {
        self.entries[qubit_row * self.cols + round]
    }

    pub fn column(&self, round: usize) -> Vec<f64> {
        (0..self.rows).map(|b| self.get(b, round)).collect()
    }
}

/// `N_B × R` matrix of measurement directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Direction>,
}

impl MeasurementMatrix {
    pub fn new(rows: Vec<Vec<Direction>>) -> Result<Self> {
        let (r, c, entries) = flatten(rows, "measurement matrix")?;
        for d in &entries {
            if d.theta.is_nan() || d.phi.is_nan() {
                return Err(Error::NotANumber("measurement matrix"));
            }
        }
        Ok(Self {
            rows: r,
            cols: c,
            entries,
        })
    }

    pub fn from_columns(cols: &[Vec<Direction>]) -> Result<Self> {
        let nb = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != nb) {
            return Err(Error::ShapeMismatch("ragged columns".into()));
        }
        Self::new(
            (0..nb)
                .map(|b| cols.iter().map(|c| c[b]).collect())
                .collect(),
        )
    }

    /// Parses rows of Pauli labels such as `["xyxy", "yxyx"]`.
    pub fn from_labels(rows: &[&str]) -> Result<Self> {
        let parsed: Result<Vec<Vec<Direction>>> = rows
            .iter()
            .map(|row| {
                row.chars()
                    .map(|ch| match ch.to_ascii_lowercase() {
                        'x' => Ok(Direction::X),
                        'y' => Ok(Direction::Y),
                        'z' => Ok(Direction::Z),
                        other => Err(Error::OutOfRange(format!("pauli label `{other}`"))),
                    })
                    .collect()
            })
            .collect();
        Self::new(parsed?)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, qubit_row: usize, round: usize) -> Direction {
        self.entries[qubit_row * self.cols + round]
    }

    pub fn column(&self, round: usize) -> Vec<Direction> {
        (0..self.rows).map(|b| self.get(b, round)).collect()
    }

    pub fn row(&self, qubit_row: usize) -> &[Direction] {
        &self.entries[qubit_row * self.cols..(qubit_row + 1) * self.cols]
    }

    /// Pauli-label rendering of each row; non-Pauli entries print as angles.
    pub fn labels(&self) -> Vec<String> {
        (0..self.rows)
            .map(|b| self.row(b).iter().map(|d| d.to_string()).collect())
            .collect()
    }

    /// Leading `rounds` columns.
    pub fn truncated(&self, rounds: usize) -> Result<Self> {
        if rounds > self.cols {
            return Err(Error::ShapeMismatch(format!(
                "requested {rounds} rounds from a {}-column pattern",
                self.cols
            )));
        }
        Self::new(
            (0..self.rows)
                .map(|b| self.row(b)[..rounds].to_vec())
                .collect(),
        )
    }
}

/// `N_B × R` matrix of ±1 outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutcomeMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Outcome>,
}

impl OutcomeMatrix {
    pub fn new(rows: Vec<Vec<Outcome>>) -> Result<Self> {
        let (r, c, entries) = flatten(rows, "outcome matrix")?;
        Ok(Self {
            rows: r,
            cols: c,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, qubit_row: usize, round: usize) -> Outcome {
        self.entries[qubit_row * self.cols + round]
    }

    /// All `2^(rows·cols)` outcome matrices, `+1` before `−1` in row-major order.
    pub fn enumerate(rows: usize, cols: usize) -> impl Iterator<Item = OutcomeMatrix> {
        let n = rows * cols;
        (0..1usize << n).map(move |code| OutcomeMatrix {
            rows,
            cols,
            entries: (0..n)
                .map(|k| {
                    if code >> (n - 1 - k) & 1 == 0 {
                        Outcome::Plus
                    } else {
                        Outcome::Minus
                    }
                })
                .collect(),
        })
    }
}

fn flatten<T: Copy>(rows: Vec<Vec<T>>, what: &str) -> Result<(usize, usize, Vec<T>)> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::ShapeMismatch(format!("{what} is empty")));
    }
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::ShapeMismatch(format!("{what} has ragged rows")));
    }
    Ok((r, c, rows.into_iter().flatten().collect()))
}

/// Dimension-checked pairing of an unsharpness matrix with a measurement matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    um: UnsharpnessMatrix,
    mm: MeasurementMatrix,
}

impl MeasurementPlan {
    pub fn unsharpness(&self) -> &UnsharpnessMatrix {
        &self.um
    }

    pub fn directions(&self) -> &MeasurementMatrix {
        &self.mm
    }

    pub fn num_assisting(&self) -> usize {
        self.um.rows()
    }

    pub fn rounds(&self) -> usize {
        self.um.cols()
    }
}

pub fn validate_plan(um: UnsharpnessMatrix, mm: MeasurementMatrix) -> Result<MeasurementPlan> {
    if um.rows() != mm.rows() || um.cols() != mm.cols() {
        return Err(Error::ShapeMismatch(format!(
            "unsharpness {}x{} vs directions {}x{}",
            um.rows(),
            um.cols(),
            mm.rows(),
            mm.cols()
        )));
    }
    Ok(MeasurementPlan { um, mm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{identity2 as identity, mat2_adjoint, mat2_mul, ONE};

    fn max_diff(a: &Mat2, b: &Mat2) -> f64 {
        let mut d = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((a[i][j] - b[i][j]).norm());
            }
        }
        d
    }

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn test_directions() -> Vec<Direction> {
        (0..32)
            .map(|k| {
                let t = (k as f64 + 0.5) / 32.0;
                Direction::new(PI * t, TAU * (0.618_033_988_7 * k as f64).fract())
            })
            .chain([Direction::X, Direction::Y, Direction::Z])
            .collect()
    }

    #[test]
    fn povm_examples() {
        let p = povm_element(Outcome::Plus, 1.0, Direction::Z).unwrap();
        assert!(max_diff(&p, &[[ONE, ZERO], [ZERO, ZERO]]) < 1e-15);

        for d in test_directions() {
            for o in Outcome::BOTH {
                let p = povm_element(o, 0.0, d).unwrap();
                assert!(max_diff(&p, &[[re(0.5), ZERO], [ZERO, re(0.5)]]) < 1e-15);
            }
        }

        let p = povm_element(Outcome::Plus, 0.8, Direction::X).unwrap();
        let want = [[re(0.5), re(0.4)], [re(0.4), re(0.5)]];
        assert!(max_diff(&p, &want) < 1e-15);
        // eigenvalues 0.5 ± 0.4
        let tr = p[0][0].re + p[1][1].re;
        let det = (p[0][0] * p[1][1] - p[0][1] * p[1][0]).re;
        let disc = (tr * tr / 4.0 - det).sqrt();
        assert!((tr / 2.0 + disc - 0.9).abs() < 1e-12);
        assert!((tr / 2.0 - disc - 0.1).abs() < 1e-12);
    }

    #[test]
    fn eta_out_of_range() {
        assert!(matches!(
            povm_element(Outcome::Plus, 1.2, Direction::X),
            Err(Error::EtaOutOfRange(_))
        ));
        assert!(kraus_operator(Outcome::Minus, -0.1, Direction::X).is_err());
        assert!(matches!(
            kraus_operator(Outcome::Minus, f64::NAN, Direction::X),
            Err(Error::NotANumber(_))
        ));
    }

    #[test]
    fn kraus_examples() {
        let k = kraus_operator(Outcome::Plus, 1.0, Direction::Z).unwrap();
        assert!(max_diff(&k.matrix, &[[ONE, ZERO], [ZERO, ZERO]]) < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        for o in Outcome::BOTH {
            let k = kraus_operator(o, 0.0, Direction::new(1.0, 2.0)).unwrap();
            assert!(max_diff(&k.matrix, &[[re(h), ZERO], [ZERO, re(h)]]) < 1e-12);
        }

        // √0.9 |+⟩⟨+| + √0.1 |−⟩⟨−|
        let k = kraus_operator(Outcome::Plus, 0.8, Direction::X).unwrap();
        let (a, b) = (0.9f64.sqrt(), 0.1f64.sqrt());
        let want = [
            [re((a + b) / 2.0), re((a - b) / 2.0)],
            [re((a - b) / 2.0), re((a + b) / 2.0)],
        ];
        assert!(max_diff(&k.matrix, &want) < 1e-15);
    }

    #[test]
    fn kraus_squares_to_povm_and_completeness() {
        for eta in [0.0, 0.25, 0.5, 0.8, 1.0] {
            for d in test_directions() {
                let mut sum = [[ZERO; 2]; 2];
                for o in Outcome::BOTH {
                    let k = kraus_operator(o, eta, d).unwrap().matrix;
                    let kk = mat2_mul(&mat2_adjoint(&k), &k);
                    assert!(max_diff(&kk, &povm_element(o, eta, d).unwrap()) < 1e-12);
                    assert!(max_diff(&k, &mat2_adjoint(&k)) < 1e-15);
                    for i in 0..2 {
                        for j in 0..2 {
                            sum[i][j] += kk[i][j];
                        }
                    }
                }
                assert!(max_diff(&sum, &identity()) < 1e-12);
            }
        }
    }

    #[test]
    fn sharp_limit_is_rank_one() {
        for d in test_directions() {
            let (p, m) = d.eigenbasis();
            let kp = kraus_operator(Outcome::Plus, 1.0, d).unwrap().matrix;
            let km = kraus_operator(Outcome::Minus, 1.0, d).unwrap().matrix;
            for i in 0..2 {
                for j in 0..2 {
                    assert!((kp[i][j] - p[i] * p[j].conj()).norm() < 1e-15);
                    assert!((km[i][j] - m[i] * m[j].conj()).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn unitary_covariance() {
        for eta in [0.25, 0.8] {
            for d in test_directions() {
                let v = d.frame();
                for o in Outcome::BOTH {
                    let kz = kraus_operator(o, eta, Direction::Z).unwrap().matrix;
                    let rotated = mat2_mul(&mat2_mul(&v, &kz), &mat2_adjoint(&v));
                    let k = kraus_operator(o, eta, d).unwrap().matrix;
                    assert!(max_diff(&k, &rotated) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn direction_folding() {
        let d = Direction::new(-FRAC_PI_2, 0.0);
        assert!((d.theta() - FRAC_PI_2).abs() < 1e-12);
        assert!((d.phi() - PI).abs() < 1e-12);
        let d = Direction::new(FRAC_PI_2, TAU - 1e-14);
        assert_eq!(d.phi(), 0.0);
        assert_eq!(Direction::new(1e-15, 2.0).phi(), 0.0);
        for d in test_directions() {
            let v = d.unit_vector();
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((n - 1.0).abs() < 1e-12);
            assert!((0.0..=PI).contains(&d.theta()));
            assert!((0.0..TAU).contains(&d.phi()));
        }
        assert!((Direction::X.angle_to(&Direction::Y) - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn plan_validation() {
        let um = UnsharpnessMatrix::constant(1, 6, 0.8).unwrap();
        let mm = MeasurementMatrix::from_labels(&["xyxyxy"]).unwrap();
        let plan = validate_plan(um, mm).unwrap();
        assert_eq!((plan.num_assisting(), plan.rounds()), (1, 6));

        let um = UnsharpnessMatrix::constant(2, 3, 0.8).unwrap();
        let mm = MeasurementMatrix::from_labels(&["xyz"]).unwrap();
        assert!(matches!(
            validate_plan(um, mm),
            Err(Error::ShapeMismatch(_))
        ));

        let um = UnsharpnessMatrix::constant(1, 4, 0.8).unwrap();
        let mm = MeasurementMatrix::from_labels(&["zxzx"]).unwrap();
        assert!(validate_plan(um, mm).is_ok());

        assert!(matches!(
            UnsharpnessMatrix::new(vec![vec![0.5, f64::NAN]]),
            Err(Error::NotANumber(_))
        ));
        assert!(MeasurementMatrix::new(vec![vec![Direction::new(f64::NAN, 0.0)]]).is_err());
    }

    #[test]
    fn outcome_enumeration() {
        let all: Vec<_> = OutcomeMatrix::enumerate(1, 3).collect();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0].get(0, 0), Outcome::Plus);
        assert_eq!(all[1].get(0, 2), Outcome::Minus);
        assert_eq!(all[7].get(0, 0), Outcome::Minus);
    }

    #[test]
    fn labels_roundtrip() {
        let mm = MeasurementMatrix::from_labels(&["zxyz", "xyxy"]).unwrap();
        assert_eq!(mm.labels(), vec!["zxyz".to_string(), "xyxy".to_string()]);
        assert_eq!(mm.column(1), vec![Direction::X, Direction::Y]);
        assert!(MeasurementMatrix::from_labels(&["xq"]).is_err());
    }
}
