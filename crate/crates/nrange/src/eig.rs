//! Hermitian eigendecomposition by cyclic Jacobi rotations.
//!
//! Jacobi is slower than tridiagonalization + QL for large orders but the
//! matrices here are small (<= 64), the accumulated transformation is
//! unitary to machine precision, and a matrix that is already diagonal is
//! returned untouched with its tie order preserved. That last property is
//! load bearing: reduction steps rely on diagonal inputs keeping their
//! coordinate basis exactly.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, Complex64, HermitianMatrix};

const MAX_SWEEPS: usize = 50;
const OFF_TOL: f64 = 1e-14;
const PHASE_EPS: f64 = 1e-12;

/// Eigenvalues ascending; `vectors` holds the matching orthonormal
/// eigenvectors as columns. Each column is phase fixed so its first
/// component above 1e-12 in modulus is real positive.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }

    /// max_k ||M v_k - lambda_k v_k||, for checks.
    pub fn residual(&self, m: &HermitianMatrix) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.n() {
            let v = self.vector(k);
            let mv = m.as_complex().matvec(&v);
            let r: f64 = mv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b * Complex::new(self.values[k], 0.0)).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }

    /// max |V* V - I| entrywise.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint().mul(&self.vectors);
        g.max_abs_diff(&ComplexMatrix::identity(self.n()))
    }
}

/// Cyclic Jacobi. Errors only if the off-diagonal mass refuses to decay
/// within the sweep cap, which for Hermitian input indicates corrupted data
/// (NaN and friends are rejected earlier at the JSON boundary).
pub fn eig_hermitian(m: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = m.n();
    let mut a = m.as_complex().clone();
    let mut v = ComplexMatrix::identity(n);
    let norm = a.fro_norm();

    if n == 1 {
        return Ok(EigenDecomposition {
            values: vec![a[(0, 0)].re],
            vectors: v,
        });
    }

    let off = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > OFF_TOL * norm.max(f64::MIN_POSITIVE) {
        if sweeps >= MAX_SWEEPS {
            return Err(Error::EigNoConvergence {
                sweeps,
                off: off(&a),
                norm,
            });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let alpha = apq.norm();
                if alpha <= 1e-300 {
                    a[(p, q)] = Complex::new(0.0, 0.0);
                    a[(q, p)] = Complex::new(0.0, 0.0);
                    continue;
                }
                let phase = apq / alpha; // e^{i phi}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * alpha);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary on the (p, q) plane: columns
                //   p: (c, -s e^{-i phi}),  q: (s, c e^{-i phi})
                let sp = Complex::new(s, 0.0) * phase.conj();
                let cp = Complex::new(c, 0.0) * phase.conj();

                a[(p, p)] = Complex::new(app - t * alpha, 0.0);
                a[(q, q)] = Complex::new(aqq + t * alpha, 0.0);
                a[(p, q)] = Complex::new(0.0, 0.0);
                a[(q, p)] = Complex::new(0.0, 0.0);
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    let new_rp = arp * c - arq * sp;
                    let new_rq = arp * s + arq * cp;
                    a[(r, p)] = new_rp;
                    a[(p, r)] = new_rp.conj();
                    a[(r, q)] = new_rq;
                    a[(q, r)] = new_rq.conj();
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp * c - vrq * sp;
                    v[(r, q)] = vrp * s + vrq * cp;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep their basis order, so diagonal input stays put
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());

    let mut values = Vec::with_capacity(n);
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(a[(src, src)].re);
        let mut col = v.column(src);
        if let Some(lead) = col.iter().find(|z| z.norm() > PHASE_EPS) {
            let ph = lead / lead.norm();
            for z in col.iter_mut() {
                *z *= ph.conj();
            }
        }
        vectors.set_column(dst, &col);
    }

    Ok(EigenDecomposition { values, vectors })
}

/// Inverse of a positive definite Hermitian matrix through its
/// eigendecomposition. Any eigenvalue at or below tol times the spectral
/// scale is treated as a defect and reported, not inverted through.
pub fn pd_inverse(m: &HermitianMatrix, tol: f64) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(m)?;
    let scale = eig
        .values
        .iter()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let min_eig = *eig
        .values
        .first()
        .ok_or_else(|| Error::Internal("empty matrix".into()))?;
    if min_eig <= tol * scale || scale == 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig, scale, tol });
    }
    let n = m.n();
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let v = eig.vector(k);
        let w = 1.0 / eig.values[k];
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += v[i] * v[j].conj() * w;
            }
        }
    }
    Ok(HermitianMatrix::symmetrize(&out))
}

/// Unitary irreducibility via the commutant: A is unitarily reducible
/// exactly when some non-scalar Hermitian X commutes with both Hermitian
/// parts of A. The solution space of [X, H] = [X, K] = 0 is computed as the
/// null space of the constraint Gram matrix over an orthonormal real basis
/// of Hermitian matrices; dimension one (the identity alone) means
/// irreducible. Singular values at or below tol times the largest are
/// counted as zero.
pub fn is_unitarily_irreducible(a: &ComplexMatrix, tol: f64) -> Result<bool> {
    let n = a.n();
    if n == 1 {
        return Ok(true);
    }
    let (h, k) = crate::matrix::hermitian_parts(a);

    let mut basis: Vec<ComplexMatrix> = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut b = ComplexMatrix::zeros(n, n);
        b[(i, i)] = Complex::new(1.0, 0.0);
        basis.push(b);
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut sym = ComplexMatrix::zeros(n, n);
            sym[(i, j)] = Complex::new(inv_sqrt2, 0.0);
            sym[(j, i)] = Complex::new(inv_sqrt2, 0.0);
            basis.push(sym);
            let mut skew = ComplexMatrix::zeros(n, n);
            skew[(i, j)] = Complex::new(0.0, inv_sqrt2);
            skew[(j, i)] = Complex::new(0.0, -inv_sqrt2);
            basis.push(skew);
        }
    }

    let commutator = |b: &ComplexMatrix, m: &HermitianMatrix| -> ComplexMatrix {
        b.mul(m.as_complex()).sub(&m.as_complex().mul(b))
    };
    let commutators: Vec<(ComplexMatrix, ComplexMatrix)> = basis
        .iter()
        .map(|b| (commutator(b, &h), commutator(b, &k)))
        .collect();

    let dim = n * n;
    let mut gram = ComplexMatrix::zeros(dim, dim);
    let dot = |x: &ComplexMatrix, y: &ComplexMatrix| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (x[(i, j)].conj() * y[(i, j)]).re;
            }
        }
        acc
    };
    for p in 0..dim {
        for q in p..dim {
            let g = dot(&commutators[p].0, &commutators[q].0)
                + dot(&commutators[p].1, &commutators[q].1);
            gram[(p, q)] = Complex::new(g, 0.0);
            gram[(q, p)] = Complex::new(g, 0.0);
        }
    }

    let eig = eig_hermitian(&HermitianMatrix::symmetrize(&gram))?;
    let sigmas: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let sigma_max = sigmas.last().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        // both parts scalar: every Hermitian matrix commutes
        return Ok(dim == 1);
    }
    let null = sigmas.iter().filter(|&&s| s <= tol * sigma_max).count();
    Ok(null == 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn seeded_hermitian(n: usize, seed: u64) -> HermitianMatrix {
        // splitmix64 stream; plenty for test matrices
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z = z ^ (z >> 31);
            (z as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = c(next(), next());
            }
        }
        HermitianMatrix::symmetrize(&m)
    }

    #[test]
    fn diagonal_matrix_sorted_with_identity_vectors() {
        let m = HermitianMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        let eig = eig_hermitian(&m).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);
        // columns are e2, e3, e1 exactly
        assert_eq!(eig.vectors[(1, 0)], c(1.0, 0.0));
        assert_eq!(eig.vectors[(2, 1)], c(1.0, 0.0));
        assert_eq!(eig.vectors[(0, 2)], c(1.0, 0.0));
        assert_eq!(eig.residual(&m), 0.0);
    }

    #[test]
    fn diagonal_ties_keep_coordinate_order() {
        let m = HermitianMatrix::from_diagonal(&[0.0, 0.0, 1.0, 1.0]);
        let eig = eig_hermitian(&m).unwrap();
        assert_eq!(eig.values, vec![0.0, 0.0, 1.0, 1.0]);
        assert!(eig.vectors.max_abs_diff(&ComplexMatrix::identity(4)) == 0.0);
    }

    #[test]
    fn off_diagonal_half_pair() {
        let m = HermitianMatrix::symmetrize(
            &ComplexMatrix::from_rows(vec![
                vec![c(0.0, 0.0), c(0.5, 0.0)],
                vec![c(0.5, 0.0), c(0.0, 0.0)],
            ])
            .unwrap(),
        );
        let eig = eig_hermitian(&m).unwrap();
        assert!((eig.values[0] + 0.5).abs() < 1e-15);
        assert!((eig.values[1] - 0.5).abs() < 1e-15);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        // phase fixing puts the first component real positive
        assert!((eig.vectors[(0, 0)] - c(inv_sqrt2, 0.0)).norm() < 1e-14);
        assert!((eig.vectors[(1, 0)] - c(-inv_sqrt2, 0.0)).norm() < 1e-14);
        assert!((eig.vectors[(1, 1)] - c(inv_sqrt2, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn random_hermitian_invariants() {
        for n in 1..=8 {
            let m = seeded_hermitian(n, 17 * n as u64 + 1);
            let eig = eig_hermitian(&m).unwrap();
            let norm = m.fro_norm();
            assert!(eig.residual(&m) <= 1e-12 * norm.max(1.0), "n = {n}");
            assert!(eig.orthonormality_defect() <= 1e-12, "n = {n}");
            for w in eig.values.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn eigenvalues_invariant_under_unitary_conjugation() {
        let m = seeded_hermitian(5, 99);
        // a unitary, borrowed from another decomposition
        let u = eig_hermitian(&seeded_hermitian(5, 7)).unwrap().vectors;
        let conj = HermitianMatrix::symmetrize(
            &u.adjoint().mul(m.as_complex()).mul(&u),
        );
        let e1 = eig_hermitian(&m).unwrap();
        let e2 = eig_hermitian(&conj).unwrap();
        for (a, b) in e1.values.iter().zip(&e2.values) {
            assert!((a - b).abs() <= 1e-9 * m.fro_norm().max(1.0));
        }
    }

    #[test]
    fn pd_inverse_two_by_two() {
        let m = HermitianMatrix::symmetrize(
            &ComplexMatrix::from_rows(vec![
                vec![c(2.0, 0.0), c(1.0, 0.0)],
                vec![c(1.0, 0.0), c(2.0, 0.0)],
            ])
            .unwrap(),
        );
        let inv = pd_inverse(&m, 1e-9).unwrap();
        let expected = [
            [2.0 / 3.0, -1.0 / 3.0],
            [-1.0 / 3.0, 2.0 / 3.0],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[(i, j)].re - expected[i][j]).abs() < 1e-12);
                assert!(inv[(i, j)].im.abs() < 1e-14);
            }
        }
        let prod = m.as_complex().mul(inv.as_complex());
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(2)) <= 1e-12);
    }

    #[test]
    fn pd_inverse_rejects_indefinite_and_near_singular() {
        let m = HermitianMatrix::from_diagonal(&[1.0, -0.5]);
        assert!(matches!(
            pd_inverse(&m, 1e-9),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let nearly = HermitianMatrix::from_diagonal(&[1.0, 1e-12]);
        assert!(pd_inverse(&nearly, 1e-9).is_err());
        // and with a tolerance below the small eigenvalue it goes through
        assert!(pd_inverse(&nearly, 1e-14).is_ok());
    }

    #[test]
    fn irreducibility_of_small_cases() {
        // jordan block: commutant is scalars only
        let j = ComplexMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        assert!(is_unitarily_irreducible(&j, 1e-9).unwrap());

        // normal with distinct eigenvalues: reducible
        let d = ComplexMatrix::from_rows(vec![
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(2.0, 1.0)],
        ])
        .unwrap();
        assert!(!is_unitarily_irreducible(&d, 1e-9).unwrap());

        // direct sum of two jordan blocks: reducible
        let mut s = ComplexMatrix::zeros(4, 4);
        s[(0, 1)] = c(1.0, 0.0);
        s[(2, 3)] = c(1.0, 0.0);
        assert!(!is_unitarily_irreducible(&s, 1e-9).unwrap());
    }

    #[test]
    fn irreducibility_survives_unitary_conjugation() {
        let j = ComplexMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let u = eig_hermitian(&seeded_hermitian(2, 3)).unwrap().vectors;
        let conj = u.adjoint().mul(&j).mul(&u);
        assert!(is_unitarily_irreducible(&conj, 1e-9).unwrap());
    }

    #[test]
    fn residual_meets_contract_scale() {
        // the documented contract is 1e-10 * ||M||; jacobi lands well under
        let m = seeded_hermitian(12, 4242);
        let eig = eig_hermitian(&m).unwrap();
        assert!(eig.residual(&m) <= 1e-10 * m.fro_norm());
        assert!(eig.orthonormality_defect() <= 1e-10);
    }
}
