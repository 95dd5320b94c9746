//! Two-qubit states, Pauli algebra and fidelity measures.
//!
//! The computational basis is ordered `|00>, |01>, |10>, |11>` with the
//! control qubit as the left tensor factor, so a product state is
//! `control (x) target` and basis index `2*c + t`.

use num_complex::Complex64;

use crate::linalg::{
    c, cr, dagger, from_rows, hermitian_deviation, hermitian_eigen, kron, rebuild_hermitian,
    square_dim, trace, CMatrix, CVector,
};
use crate::{Error, Result};

/// Tolerance for Hermitian symmetry of density matrices.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance below which a negative eigenvalue is treated as round-off and
/// floored to zero.
pub const EIGENVALUE_FLOOR: f64 = 1e-9;
/// Tolerance for unit trace of density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Tolerance for unit norm of pure states.
pub const NORM_TOL: f64 = 1e-10;

/// A normalized pure state of two qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState2Q {
    amplitudes: [Complex64; 4],
}

impl PureState2Q {
    /// Builds a state from four amplitudes, requiring unit norm.
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::BadNorm { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Builds a state from unnormalized amplitudes by rescaling.
    pub fn normalized(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::BadNorm { norm });
        }
        let scaled = amplitudes.map(|a| a / norm);
        Ok(Self { amplitudes: scaled })
    }

    /// The computational-basis state `|ct>`.
    pub fn basis(control: u8, target: u8) -> Self {
        assert!(control < 2 && target < 2, "qubit values must be 0 or 1");
        let mut amplitudes = [c(0.0, 0.0); 4];
        amplitudes[(2 * control + target) as usize] = cr(1.0);
        Self { amplitudes }
    }

    /// Product state `control (x) target` from two single-qubit vectors.
    pub fn product(control: [Complex64; 2], target: [Complex64; 2]) -> Result<Self> {
        Self::new([
            control[0] * target[0],
            control[0] * target[1],
            control[1] * target[0],
            control[1] * target[1],
        ])
    }

    /// Amplitudes in basis order `|00>, |01>, |10>, |11>`.
    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }

    /// The state as a column vector.
    pub fn vector(&self) -> CVector {
        CVector::from_row_slice(&self.amplitudes)
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Applies a 4x4 operator and renormalizes; errors if the image is zero.
    pub fn apply(&self, op: &CMatrix) -> Result<Self> {
        let v = op * self.vector();
        let mut amplitudes = [c(0.0, 0.0); 4];
        for i in 0..4 {
            amplitudes[i] = v[i];
        }
        Self::normalized(amplitudes)
    }
}

/// A validated two-qubit density matrix: Hermitian, positive semidefinite
/// (after flooring round-off negatives) and unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates and wraps a 4x4 matrix.
    ///
    /// Eigenvalues in `[-EIGENVALUE_FLOOR, 0)` are treated as numerical noise
    /// and floored to zero; anything more negative is rejected with the
    /// offending eigenvalue in the error.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        square_dim(&matrix, "4x4 density")?;
        if matrix.nrows() != 4 {
            return Err(Error::BadShape {
                expected: "4x4 density",
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = trace(&matrix).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace { trace: tr });
        }
        let (vals, vecs) = hermitian_eigen(&matrix, HERMITIAN_TOL)?;
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -EIGENVALUE_FLOOR {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        let matrix = if min < 0.0 {
            let floored = rebuild_hermitian(&vals, &vecs, |w| w.max(0.0));
            let tr = trace(&floored).re;
            floored.scale(1.0 / tr)
        } else {
            matrix
        };
        Ok(Self { matrix })
    }

    /// Density matrix of a pure state.
    pub fn from_pure(psi: &PureState2Q) -> Self {
        let v = psi.vector();
        Self {
            matrix: &v
                * dagger(&CMatrix::from_columns(std::slice::from_ref(&v))).rows(0, 1)
                * cr(1.0),
        }
    }

    /// The maximally mixed state `I/4`.
    pub fn maximally_mixed() -> Self {
        Self {
            matrix: CMatrix::identity(4, 4).scale(0.25),
        }
    }

    /// The underlying matrix.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Probability of projecting onto a pure state, `<psi|rho|psi>`.
    pub fn projection(&self, psi: &PureState2Q) -> f64 {
        let v = psi.vector();
        (dagger(&CMatrix::from_columns(std::slice::from_ref(&v))) * &self.matrix * v)[(0, 0)].re
    }

    /// Conjugates by a unitary: `U rho U^H`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        Self::new(u * &self.matrix * dagger(u))
    }
}

/// The CNOT unitary in the computational basis (control = left qubit).
pub fn cnot_unitary() -> CMatrix {
    from_rows(
        4,
        &[
            cr(1.0),
            cr(0.0),
            cr(0.0),
            cr(0.0),
            cr(0.0),
            cr(1.0),
            cr(0.0),
            cr(0.0),
            cr(0.0),
            cr(0.0),
            cr(0.0),
            cr(1.0),
            cr(0.0),
            cr(0.0),
            cr(1.0),
            cr(0.0),
        ],
    )
}

/// The four Bell states, in the order `Phi+, Phi-, Psi+, Psi-`.
pub fn bell_states() -> [PureState2Q; 4] {
    let s = cr(std::f64::consts::FRAC_1_SQRT_2);
    let z = cr(0.0);
    [
        PureState2Q::new([s, z, z, s]).expect("unit norm"),
        PureState2Q::new([s, z, z, -s]).expect("unit norm"),
        PureState2Q::new([z, s, s, z]).expect("unit norm"),
        PureState2Q::new([z, s, -s, z]).expect("unit norm"),
    ]
}

/// Conventional names matching the order of [`bell_states`].
pub const BELL_NAMES: [&str; 4] = ["phi_plus", "phi_minus", "psi_plus", "psi_minus"];

/// Single-qubit Pauli matrices `I, X, Y, Z`.
pub fn pauli_1q() -> [CMatrix; 4] {
    [
        from_rows(2, &[cr(1.0), cr(0.0), cr(0.0), cr(1.0)]),
        from_rows(2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]),
        from_rows(2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)]),
        from_rows(2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]),
    ]
}

/// Two-qubit Pauli basis `Gamma_m = sigma_i (x) sigma_j` with `m = 4*i + j`
/// and `sigma_0..3 = I, X, Y, Z`, so `Tr(Gamma_m Gamma_n) = 4 delta_mn`.
pub fn pauli_basis() -> Vec<CMatrix> {
    let p = pauli_1q();
    let mut basis = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            basis.push(kron(&p[i], &p[j]));
        }
    }
    basis
}

/// Human-readable labels for the two-qubit Pauli basis, `II, IX, ..., ZZ`.
pub fn pauli_labels() -> Vec<String> {
    let names = ["I", "X", "Y", "Z"];
    let mut labels = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            labels.push(format!("{}{}", names[i], names[j]));
        }
    }
    labels
}

/// Expands a 4x4 operator in the two-qubit Pauli basis:
/// `u = sum_m c_m Gamma_m` with `c_m = Tr(Gamma_m^H u) / 4`.
pub fn pauli_expansion(u: &CMatrix) -> Result<Vec<Complex64>> {
    let n = square_dim(u, "4x4 operator")?;
    if n != 4 {
        return Err(Error::BadShape {
            expected: "4x4 operator",
            rows: u.nrows(),
            cols: u.ncols(),
        });
    }
    Ok(pauli_basis()
        .iter()
        .map(|g| trace(&(dagger(g) * u)) / cr(4.0))
        .collect())
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues within `EIGENVALUE_FLOOR` of zero are clipped to zero first;
/// more negative eigenvalues are rejected.
pub fn matrix_sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eigen(m, HERMITIAN_TOL)?;
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -EIGENVALUE_FLOOR {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(rebuild_hermitian(&vals, &vecs, |w| w.max(0.0).sqrt()))
}

/// Uhlmann fidelity between two density matrices:
/// `F(a, b) = (Tr sqrt(sqrt(a) b sqrt(a)))^2`, clamped to `[0, 1]`.
pub fn state_fidelity(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let sa = matrix_sqrt_psd(a.matrix()).expect("validated density matrix");
    let inner = &sa * b.matrix() * &sa;
    // Round-off in the product can leave tiny negative eigenvalues; they are
    // clipped inside the square root.
    let (vals, _) = hermitian_eigen(&((&inner + dagger(&inner)).scale(0.5)), 1e-6)
        .expect("symmetrized product is Hermitian");
    let root_sum = crate::linalg::sqrt_eigenvalue_sum(&vals);
    (root_sum * root_sum).clamp(0.0, 1.0)
}

/// Fidelity of a density matrix against a pure target, `<psi|rho|psi>`.
pub fn fidelity_to_pure(rho: &DensityMatrix, psi: &PureState2Q) -> f64 {
    rho.projection(psi).clamp(0.0, 1.0)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() < tol, "{what}: {a} vs {b}");
    }

    pub(crate) fn random_pure(rng: &mut StdRng) -> PureState2Q {
        let amps = [(); 4].map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        PureState2Q::normalized(amps).unwrap()
    }

    /// Random full-rank density matrix via a Ginibre-like construction.
    pub(crate) fn random_density(rng: &mut StdRng) -> DensityMatrix {
        let g = CMatrix::from_fn(4, 4, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let m = &g * dagger(&g);
        let tr = trace(&m).re;
        DensityMatrix::new(m.scale(1.0 / tr)).unwrap()
    }

    /// Random 4x4 unitary: eigenvectors of a random Hermitian matrix.
    pub(crate) fn random_unitary(rng: &mut StdRng) -> CMatrix {
        let g = CMatrix::from_fn(4, 4, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let h = (&g + dagger(&g)).scale(0.5);
        let (_, vecs) = hermitian_eigen(&h, 1e-9).unwrap();
        vecs
    }

    #[test]
    fn cnot_is_the_expected_permutation() {
        let u = cnot_unitary();
        let rows = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]];
        for (i, row) in rows.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert_eq!(u[(i, j)], cr(e as f64), "entry ({i}, {j})");
            }
        }
        // Unitary: U^H U = I.
        assert!(max_abs_diff(&(dagger(&u) * &u), &CMatrix::identity(4, 4)) < 1e-15);
    }

    #[test]
    fn bell_states_are_orthonormal() {
        let bells = bell_states();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_close(
                    bells[i].inner(&bells[j]).norm(),
                    expected,
                    1e-12,
                    "Bell overlap",
                );
            }
        }
    }

    #[test]
    fn cnot_maps_plus_zero_to_phi_plus() {
        // Oracle: apply the permutation by hand to (|00> + |10>)/sqrt(2):
        // |00> stays, |10> -> |11>, giving (|00> + |11>)/sqrt(2) = Phi+.
        let s = cr(std::f64::consts::FRAC_1_SQRT_2);
        let z = cr(0.0);
        let plus_zero = PureState2Q::new([s, z, s, z]).unwrap();
        let out = plus_zero.apply(&cnot_unitary()).unwrap();
        let phi_plus = &bell_states()[0];
        assert_close(out.inner(phi_plus).norm(), 1.0, 1e-12, "overlap with Phi+");
    }

    #[test]
    fn fidelity_of_state_with_itself_is_one() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let rho = random_density(&mut rng);
            assert_close(state_fidelity(&rho, &rho), 1.0, 1e-9, "self fidelity");
        }
    }

    #[test]
    fn fidelity_of_orthogonal_pure_states_is_zero() {
        let a = DensityMatrix::from_pure(&PureState2Q::basis(0, 0));
        let b = DensityMatrix::from_pure(&PureState2Q::basis(1, 1));
        assert_close(state_fidelity(&a, &b), 0.0, 1e-9, "orthogonal fidelity");
    }

    #[test]
    fn fidelity_of_bell_with_maximally_mixed_is_quarter() {
        // Oracle: for pure psi and any sigma, F = <psi|sigma|psi>; with
        // sigma = I/4 that is 1/4 regardless of psi.
        let phi_plus = DensityMatrix::from_pure(&bell_states()[0]);
        let mixed = DensityMatrix::maximally_mixed();
        let oracle = mixed.projection(&bell_states()[0]);
        assert_close(oracle, 0.25, 1e-12, "projection oracle");
        assert_close(
            state_fidelity(&phi_plus, &mixed),
            0.25,
            1e-9,
            "Uhlmann vs oracle",
        );
    }

    #[test]
    fn fidelity_is_symmetric_and_in_range() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..200 {
            let a = random_density(&mut rng);
            let b = random_density(&mut rng);
            let fab = state_fidelity(&a, &b);
            let fba = state_fidelity(&b, &a);
            assert_close(fab, fba, 1e-8, "symmetry");
            assert!((0.0..=1.0).contains(&fab));
        }
    }

    #[test]
    fn fidelity_pure_vs_mixed_reduces_to_projection() {
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..50 {
            let psi = random_pure(&mut rng);
            let rho = DensityMatrix::from_pure(&psi);
            let sigma = random_density(&mut rng);
            let oracle = sigma.projection(&psi);
            assert_close(
                state_fidelity(&rho, &sigma),
                oracle,
                1e-8,
                "pure-state reduction",
            );
        }
    }

    #[test]
    fn pauli_basis_is_orthogonal() {
        let basis = pauli_basis();
        for (m, gm) in basis.iter().enumerate() {
            for (n, gn) in basis.iter().enumerate() {
                let t = trace(&(gm * gn));
                let expected = if m == n { 4.0 } else { 0.0 };
                assert_close(t.re, expected, 1e-12, "Tr(Gm Gn)");
                assert_close(t.im, 0.0, 1e-12, "Tr(Gm Gn) imaginary part");
            }
        }
    }

    #[test]
    fn pauli_expansion_of_identity_is_delta() {
        let coeffs = pauli_expansion(&CMatrix::identity(4, 4)).unwrap();
        assert_close(coeffs[0].re, 1.0, 1e-12, "II coefficient");
        for (m, co) in coeffs.iter().enumerate().skip(1) {
            assert_close(co.norm(), 0.0, 1e-12, &format!("coefficient {m}"));
        }
    }

    #[test]
    fn pauli_expansion_of_cnot_has_four_terms() {
        // Oracle: reassemble (II + IX + ZI - ZX)/2 from the basis and check
        // it reproduces the permutation matrix, then compare coefficients.
        let basis = pauli_basis();
        let labels = pauli_labels();
        let ii = labels.iter().position(|l| l == "II").unwrap();
        let ix = labels.iter().position(|l| l == "IX").unwrap();
        let zi = labels.iter().position(|l| l == "ZI").unwrap();
        let zx = labels.iter().position(|l| l == "ZX").unwrap();
        let rebuilt = (&basis[ii] + &basis[ix] + &basis[zi] - &basis[zx]).scale(0.5);
        assert!(max_abs_diff(&rebuilt, &cnot_unitary()) < 1e-12);

        let coeffs = pauli_expansion(&cnot_unitary()).unwrap();
        for (m, co) in coeffs.iter().enumerate() {
            let expected = if m == ii || m == ix || m == zi {
                0.5
            } else if m == zx {
                -0.5
            } else {
                0.0
            };
            assert_close(co.re, expected, 1e-12, &labels[m]);
            assert_close(co.im, 0.0, 1e-12, &labels[m]);
        }
    }

    #[test]
    fn pauli_expansion_of_xx_is_single_unit_coefficient() {
        let basis = pauli_basis();
        let labels = pauli_labels();
        let xx = labels.iter().position(|l| l == "XX").unwrap();
        let coeffs = pauli_expansion(&basis[xx]).unwrap();
        for (m, co) in coeffs.iter().enumerate() {
            let expected = if m == xx { 1.0 } else { 0.0 };
            assert_close(co.re, expected, 1e-12, &labels[m]);
        }
    }

    #[test]
    fn pauli_coefficients_of_unitaries_have_unit_weight() {
        // For any unitary, sum_m |c_m|^2 = Tr(U^H U)/4 = 1.
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..200 {
            let u = random_unitary(&mut rng);
            let coeffs = pauli_expansion(&u).unwrap();
            let weight: f64 = coeffs.iter().map(|co| co.norm_sqr()).sum();
            assert_close(weight, 1.0, 1e-9, "Pauli weight of unitary");
        }
    }

    #[test]
    fn matrix_sqrt_of_identity_is_identity() {
        let i4 = CMatrix::identity(4, 4);
        assert!(max_abs_diff(&matrix_sqrt_psd(&i4).unwrap(), &i4) < 1e-12);
    }

    #[test]
    fn matrix_sqrt_of_diagonal_takes_square_roots() {
        let m = CMatrix::from_diagonal(&CVector::from_row_slice(&[
            cr(4.0),
            cr(9.0),
            cr(16.0),
            cr(25.0),
        ]));
        let s = matrix_sqrt_psd(&m).unwrap();
        for (i, expected) in [2.0, 3.0, 4.0, 5.0].iter().enumerate() {
            assert_close(s[(i, i)].re, *expected, 1e-12, "sqrt of diagonal");
        }
    }

    #[test]
    fn matrix_sqrt_squares_back() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..50 {
            let rho = random_density(&mut rng);
            let s = matrix_sqrt_psd(rho.matrix()).unwrap();
            assert!(max_abs_diff(&(&s * &s), rho.matrix()) < 1e-9);
        }
    }

    #[test]
    fn matrix_sqrt_rejects_indefinite() {
        let m = CMatrix::from_diagonal(&CVector::from_row_slice(&[
            cr(1.0),
            cr(-0.5),
            cr(1.0),
            cr(1.0),
        ]));
        assert!(matches!(
            matrix_sqrt_psd(&m),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn density_matrix_rejects_bad_inputs() {
        // Non-Hermitian.
        let mut m = CMatrix::identity(4, 4).scale(0.25);
        m[(0, 1)] = cr(0.1);
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::NotHermitian { .. })
        ));
        // Wrong trace.
        let m = CMatrix::identity(4, 4);
        assert!(matches!(DensityMatrix::new(m), Err(Error::BadTrace { .. })));
        // Significantly negative eigenvalue, trace still 1.
        let m = CMatrix::from_diagonal(&CVector::from_row_slice(&[
            cr(0.7),
            cr(0.5),
            cr(-0.2),
            cr(0.0),
        ]));
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn density_matrix_floors_round_off_negatives() {
        let eps = 0.5e-9;
        let m = CMatrix::from_diagonal(&CVector::from_row_slice(&[
            cr(0.6),
            cr(0.4 + eps),
            cr(-eps),
            cr(0.0),
        ]));
        let rho = DensityMatrix::new(m).unwrap();
        let (vals, _) = hermitian_eigen(rho.matrix(), 1e-9).unwrap();
        assert!(vals.iter().all(|&w| w >= 0.0));
        assert_close(trace(rho.matrix()).re, 1.0, 1e-12, "renormalized trace");
    }

    #[test]
    fn from_pure_projects_correctly() {
        let mut rng = StdRng::seed_from_u64(31);
        let psi = random_pure(&mut rng);
        let rho = DensityMatrix::from_pure(&psi);
        assert_close(trace(rho.matrix()).re, 1.0, 1e-12, "pure trace");
        assert_close(rho.projection(&psi), 1.0, 1e-12, "self projection");
    }
}
