//! Dense complex linear algebra for small qubit registers.
//!
//! Qubit 0 is the most significant bit of the amplitude index, so the basis
//! ket `|q0 q1 ... q(N-1)>` sits at index `q0 * 2^(N-1) + ... + q(N-1)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = [[C64; 2]; 2];
pub type Mat4 = [[C64; 4]; 4];

/// Probability below which a branch is treated as impossible.
pub const EPS_PROB: f64 = 1e-12;

/// Off-diagonal Frobenius norm at which Jacobi iteration stops.
pub const JACOBI_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity2() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn mat4_adjoint(a: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// Kronecker product `a ⊗ b` with `a` on the more significant factor.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[i >> 1][j >> 1] * b[i & 1][j & 1];
        }
    }
    out
}

/// Pure state of an N-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::BadDimension { len });
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if num_qubits == 0 || index >= dim {
            return Err(Error::OutOfRange(format!(
                "basis index {index} for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_squared() - 1.0).abs() <= tol
    }

    /// Rescales to unit norm; fails on branches below [`EPS_PROB`].
    pub fn normalize(mut self) -> Result<Self> {
        let n2 = self.norm_squared();
        if n2 <= EPS_PROB {
            return Err(Error::DegenerateBranch(n2));
        }
        let inv = 1.0 / n2.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        Ok(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|^2` for normalized states.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Applies `op` to one tensor factor. The result is not renormalized.
    pub fn apply_single_qubit_op(&self, qubit: usize, op: &Mat2) -> Result<PureState> {
        let mut out = self.clone();
        out.apply_single_qubit_op_in_place(qubit, op)?;
        Ok(out)
    }

    pub fn apply_single_qubit_op_in_place(&mut self, qubit: usize, op: &Mat2) -> Result<()> {
        self.check_qubit(qubit)?;
        apply_op_to_slice(&mut self.amplitudes, self.num_qubits - 1 - qubit, op);
        Ok(())
    }

    /// Two-qubit reduced density matrix with row/column order `q1 ⊗ q2`.
    pub fn reduced_density(&self, q1: usize, q2: usize) -> Result<DensityMatrix2Q> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(Error::QubitCollision(q1));
        }
        let s1 = self.num_qubits - 1 - q1;
        let s2 = self.num_qubits - 1 - q2;
        let mask = (1usize << s1) | (1usize << s2);
        let mut m = [[ZERO; 4]; 4];
        for rest in 0..self.dim() {
            if rest & mask != 0 {
                continue;
            }
            let mut col = [ZERO; 4];
            for (a, slot) in col.iter_mut().enumerate() {
                let idx = rest | ((a >> 1) << s1) | ((a & 1) << s2);
                *slot = self.amplitudes[idx];
            }
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] += col[i] * col[j].conj();
                }
            }
        }
        Ok(DensityMatrix2Q(m))
    }

    /// Reduced density matrix of an arbitrary qubit subset, in the order given.
    pub fn reduced_density_of(&self, keep: &[usize]) -> Result<Vec<Vec<C64>>> {
        for (i, &q) in keep.iter().enumerate() {
            self.check_qubit(q)?;
            if keep[..i].contains(&q) {
                return Err(Error::QubitCollision(q));
            }
        }
        let k = keep.len();
        let shifts: Vec<usize> = keep.iter().map(|&q| self.num_qubits - 1 - q).collect();
        let mask: usize = shifts.iter().map(|s| 1usize << s).sum();
        let sub = 1usize << k;
        let mut rho = vec![vec![ZERO; sub]; sub];
        let mut col = vec![ZERO; sub];
        for rest in 0..self.dim() {
            if rest & mask != 0 {
                continue;
            }
            for (a, slot) in col.iter_mut().enumerate() {
                let mut idx = rest;
                for (bit, s) in shifts.iter().enumerate() {
                    idx |= ((a >> (k - 1 - bit)) & 1) << s;
                }
                *slot = self.amplitudes[idx];
            }
            for i in 0..sub {
                for j in 0..sub {
                    rho[i][j] += col[i] * col[j].conj();
                }
            }
        }
        Ok(rho)
    }

    /// Schmidt coefficients squared across `bipartition`, descending.
    ///
    /// Computed from the reduced density matrix of the smaller side.
    pub fn schmidt_spectrum(&self, bipartition: &Bipartition) -> Result<Vec<f64>> {
        if bipartition.num_qubits() != self.num_qubits {
            return Err(Error::InvalidBipartition(format!(
                "bipartition over {} qubits applied to {}-qubit state",
                bipartition.num_qubits(),
                self.num_qubits
            )));
        }
        let smaller = if bipartition.side_a().len() <= bipartition.side_b().len() {
            bipartition.side_a()
        } else {
            bipartition.side_b()
        };
        let rho = self.reduced_density_of(smaller)?;
        let mut vals = hermitian_eigen(rho, false)?.values;
        vals.reverse();
        Ok(vals)
    }
}

/// Applies a 2x2 operator to the bit at position `shift` (0 = least significant)
/// of every index of `amps`.
pub(crate) fn apply_op_to_slice(amps: &mut [C64], shift: usize, op: &Mat2) {
    let stride = 1usize << shift;
    let block = stride << 1;
    for base in (0..amps.len()).step_by(block) {
        for off in base..base + stride {
            let a0 = amps[off];
            let a1 = amps[off + stride];
            amps[off] = op[0][0] * a0 + op[0][1] * a1;
            amps[off + stride] = op[1][0] * a0 + op[1][1] * a1;
        }
    }
}

/// Two-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2Q(pub Mat4);

impl DensityMatrix2Q {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: Mat4) -> Result<Self> {
        let dev = hermiticity_deviation4(&m);
        if dev > 1e-9 {
            return Err(Error::NotHermitian(dev));
        }
        let tr: f64 = (0..4).map(|i| m[i][i].re).sum();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(tr));
        }
        let min = hermitian_eigenvalues(&m)?[0];
        if min < -1e-8 {
            return Err(Error::OutOfRange(format!(
                "density matrix has eigenvalue {min:e}"
            )));
        }
        Ok(Self(m))
    }

    pub fn from_pure(amps: [C64; 4]) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = amps[i] * amps[j].conj();
            }
        }
        Self(m)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.0[i][i].re).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.0;
        m.iter_mut().flatten().for_each(|x| *x *= s);
        Self(m)
    }

    pub fn partial_transpose(&self) -> Mat4 {
        partial_transpose(&self.0)
    }

    /// `(u1 ⊗ u2) ρ (u1 ⊗ u2)†`.
    pub fn conjugate_local(&self, u1: &Mat2, u2: &Mat2) -> Self {
        let u = kron2(u1, u2);
        Self(mat4_mul(&mat4_mul(&u, &self.0), &mat4_adjoint(&u)))
    }
}

/// Transposes the first tensor factor: `<i j|ρ^T1|k l> = <k j|ρ|i l>`.
pub fn partial_transpose(m: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for row in 0..4 {
        for col in 0..4 {
            let (i, j) = (row >> 1, row & 1);
            let (k, l) = (col >> 1, col & 1);
            out[row][col] = m[(k << 1) | j][(i << 1) | l];
        }
    }
    out
}

pub fn hermiticity_deviation4(m: &Mat4) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            dev = dev.max((m[i][j] - m[j][i].conj()).norm());
        }
    }
    dev
}

/// Eigenvalues of a 4x4 Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &Mat4) -> Result<[f64; 4]> {
    let dev = hermiticity_deviation4(m);
    if dev > 1e-9 {
        return Err(Error::NotHermitian(dev));
    }
    Ok(jacobi4(*m))
}

/// Cyclic Jacobi on a fixed 4x4 array; assumes a Hermitian input.
pub(crate) fn jacobi4(mut a: Mat4) -> [f64; 4] {
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..4 {
            for q in p + 1..4 {
                off += a[p][q].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() < JACOBI_TOL {
            break;
        }
        for p in 0..3 {
            for q in p + 1..4 {
                let g = a[p][q].norm();
                if g < 1e-300 {
                    continue;
                }
                let (c, s, phase) = rotation(a[p][p].re, a[q][q].re, a[p][q], g);
                // columns: A <- A G
                for row in a.iter_mut() {
                    let ap = row[p];
                    let aq = row[q] * phase;
                    row[p] = ap * c - aq * s;
                    row[q] = ap * s + aq * c;
                }
                // rows: A <- G† A
                let phase_c = phase.conj();
                for col in 0..4 {
                    let ap = a[p][col];
                    let aq = a[q][col] * phase_c;
                    a[p][col] = ap * c - aq * s;
                    a[q][col] = ap * s + aq * c;
                }
                a[p][q] = ZERO;
                a[q][p] = ZERO;
            }
        }
    }
    let mut vals = [a[0][0].re, a[1][1].re, a[2][2].re, a[3][3].re];
    vals.sort_by(f64::total_cmp);
    vals
}

/// Jacobi rotation zeroing the (p, q) entry. Returns `(c, s, e^{-i arg a_pq})`
/// such that `G = diag(1, phase) · [[c, s], [-s, c]]` on the (p, q) plane.
fn rotation(app: f64, aqq: f64, apq: C64, g: f64) -> (f64, f64, C64) {
    let phase = (apq / g).conj();
    let zeta = (aqq - app) / (2.0 * g);
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (zeta * zeta + 1.0).sqrt())
    } else {
        -1.0 / (-zeta + (zeta * zeta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    (c, t * c, phase)
}

#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the eigenvector for `values[k]`.
    pub vectors: Vec<Vec<C64>>,
}

/// Cyclic Jacobi diagonalization of a square Hermitian matrix.
pub fn hermitian_eigen(mut a: Vec<Vec<C64>>, want_vectors: bool) -> Result<Eigen> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::ShapeMismatch("matrix is not square".into()));
    }
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((a[i][j] - a[j][i].conj()).norm());
        }
    }
    if dev > 1e-9 {
        return Err(Error::NotHermitian(dev));
    }
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { ONE } else { ZERO }).collect())
        .collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q].norm_sqr())
            .sum();
        if (2.0 * off).sqrt() < JACOBI_TOL {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let g = a[p][q].norm();
                if g < 1e-300 {
                    continue;
                }
                let (c, s, phase) = rotation(a[p][p].re, a[q][q].re, a[p][q], g);
                for row in a.iter_mut() {
                    let ap = row[p];
                    let aq = row[q] * phase;
                    row[p] = ap * c - aq * s;
                    row[q] = ap * s + aq * c;
                }
                let phase_c = phase.conj();
                for col in 0..n {
                    let ap = a[p][col];
                    let aq = a[q][col] * phase_c;
                    a[p][col] = ap * c - aq * s;
                    a[q][col] = ap * s + aq * c;
                }
                a[p][q] = ZERO;
                a[q][p] = ZERO;
                if want_vectors {
                    for row in v.iter_mut() {
                        let vp = row[p];
                        let vq = row[q] * phase;
                        row[p] = vp * c - vq * s;
                        row[q] = vp * s + vq * c;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].re.total_cmp(&a[j][j].re));
    let values = order.iter().map(|&i| a[i][i].re).collect();
    let vectors = if want_vectors {
        order
            .iter()
            .map(|&k| (0..n).map(|row| v[row][k]).collect())
            .collect()
    } else {
        Vec::new()
    };
    Ok(Eigen { values, vectors })
}

/// A split of the register into two nonempty complementary sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    num_qubits: usize,
    side_a: Vec<usize>,
    side_b: Vec<usize>,
}

impl Bipartition {
    pub fn new(num_qubits: usize, side_a: &[usize]) -> Result<Self> {
        let mut a = side_a.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.len() != side_a.len() {
            return Err(Error::InvalidBipartition("repeated qubit".into()));
        }
        if a.is_empty() || a.len() >= num_qubits {
            return Err(Error::InvalidBipartition(
                "side A must be a nonempty proper subset".into(),
            ));
        }
        if let Some(&q) = a.iter().find(|&&q| q >= num_qubits) {
            return Err(Error::QubitOutOfRange {
                index: q,
                num_qubits,
            });
        }
        let b = (0..num_qubits).filter(|q| !a.contains(q)).collect();
        Ok(Self {
            num_qubits,
            side_a: a,
            side_b: b,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn side_a(&self) -> &[usize] {
        &self.side_a
    }

    pub fn side_b(&self) -> &[usize] {
        &self.side_b
    }

    pub fn swapped(&self) -> Self {
        Self {
            num_qubits: self.num_qubits,
            side_a: self.side_b.clone(),
            side_b: self.side_a.clone(),
        }
    }

    /// All `2^(N-1) - 1` unordered bipartitions; qubit 0 is always on side A.
    pub fn all(num_qubits: usize) -> Vec<Bipartition> {
        if num_qubits < 2 {
            return Vec::new();
        }
        let half = 1usize << (num_qubits - 1);
        (0..half - 1)
            .map(|mask| {
                let side: Vec<usize> = std::iter::once(0)
                    .chain((1..num_qubits).filter(|q| mask >> (q - 1) & 1 == 1))
                    .collect();
                Bipartition::new(num_qubits, &side).expect("proper subset by construction")
            })
            .collect()
    }
}
