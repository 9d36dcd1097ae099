//! Dense complex matrices and their Hermitian parts.
//!
//! Everything downstream works with the Cartesian decomposition
//! A = H + iK, H = (A + A*)/2, K = (A - A*)/(2i), and with the rotated
//! Hermitian pencil Re(e^{-i theta} A) = H cos(theta) + K sin(theta).
//! Matrices are small (order <= 64) and dense; storage is row major.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

pub const MAX_ORDER: usize = 64;

/// Dense complex matrix, row major. Square in the wire format; rectangular
/// blocks show up internally (compressions, off-diagonal blocks).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(ComplexMatrix { rows: r, cols: c, data })
    }

    /// Convenience constructor from (re, im) pairs, mostly for tests and
    /// the built-in examples.
    pub fn from_re_im(rows: &[Vec<(f64, f64)>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Order of a square matrix.
    pub fn n(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(l, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len());
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self[(i, j)] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// x* M y.
    pub fn sesquilinear(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let my = self.matvec(y);
        inner(x, &my)
    }

    /// Rayleigh value x* M x for a unit vector x; the numerical range map.
    pub fn rayleigh(&self, x: &[Complex64]) -> Complex64 {
        self.sesquilinear(x, x)
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Complex64]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self[(row0 + i, col0 + j)];
            }
        }
        out
    }

    /// Largest |entry| difference, for closeness checks.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(x: &mut [Complex64]) {
    let n = vec_norm(x);
    if n > 0.0 {
        for a in x.iter_mut() {
            *a /= n;
        }
    }
}

/// Hermitian matrix with the symmetry enforced in storage: the constructor
/// averages M against M* so that m[j][i] == conj(m[i][j]) holds exactly and
/// diagonals are exactly real.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    inner: ComplexMatrix,
}

impl HermitianMatrix {
    pub fn symmetrize(m: &ComplexMatrix) -> Self {
        assert!(m.is_square(), "Hermitian matrices are square");
        let n = m.n();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let v = (m[(i, j)] + m[(j, i)].conj()).scale(0.5);
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        HermitianMatrix { inner: out }
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix { inner: ComplexMatrix::zeros(n, n) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = ComplexMatrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        HermitianMatrix { inner: m }
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn as_complex(&self) -> &ComplexMatrix {
        &self.inner
    }

    pub fn fro_norm(&self) -> f64 {
        self.inner.fro_norm()
    }

    /// Real quadratic form x* M x.
    pub fn quadratic_form(&self, x: &[Complex64]) -> f64 {
        self.inner.rayleigh(x).re
    }

    /// a*self + b*other, re-symmetrized only in the trivial sense (the
    /// combination of Hermitian storage with real coefficients is exact).
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Self {
        let n = self.n();
        assert_eq!(n, other.n());
        let mut m = ComplexMatrix::zeros(n, n);
        let (ca, cb) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = ca * self.inner[(i, j)] + cb * other.inner[(i, j)];
            }
        }
        HermitianMatrix { inner: m }
    }

    /// Compression B* M B for a (typically orthonormal) n x m basis B.
    pub fn compress(&self, basis: &ComplexMatrix) -> HermitianMatrix {
        let mb = self.inner.mul(basis);
        let c = basis.adjoint().mul(&mb);
        HermitianMatrix::symmetrize(&c)
    }

    pub fn shift(&self, s: f64) -> HermitianMatrix {
        let n = self.n();
        let mut m = self.inner.clone();
        for i in 0..n {
            m[(i, i)] += Complex64::new(s, 0.0);
        }
        HermitianMatrix { inner: m }
    }
}

impl std::ops::Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.inner[idx]
    }
}

/// Cartesian decomposition A = H + iK with H, K Hermitian.
pub fn hermitian_parts(a: &ComplexMatrix) -> (HermitianMatrix, HermitianMatrix) {
    assert!(a.is_square());
    let adj = a.adjoint();
    let h = HermitianMatrix::symmetrize(&a.add(&adj).scale(Complex64::new(0.5, 0.0)));
    // (A - A*)/(2i) = -i/2 (A - A*)
    let k = HermitianMatrix::symmetrize(&a.sub(&adj).scale(Complex64::new(0.0, -0.5)));
    (h, k)
}

/// The rotated-real-part family H cos(theta) + K sin(theta).
#[derive(Clone, Debug)]
pub struct HermitianPencil {
    pub h: HermitianMatrix,
    pub k: HermitianMatrix,
}

impl HermitianPencil {
    pub fn from_matrix(a: &ComplexMatrix) -> Self {
        let (h, k) = hermitian_parts(a);
        HermitianPencil { h, k }
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    /// Re(e^{-i theta} A) = H cos(theta) + K sin(theta).
    pub fn at(&self, theta: f64) -> HermitianMatrix {
        self.h.linear_combination(theta.cos(), &self.k, theta.sin())
    }

    /// d/d theta of the pencil, which is also Im(e^{-i theta} A).
    pub fn derivative_at(&self, theta: f64) -> HermitianMatrix {
        self.h.linear_combination(-theta.sin(), &self.k, theta.cos())
    }

    /// H + iK, the matrix the pencil came from.
    pub fn matrix(&self) -> ComplexMatrix {
        self.h
            .as_complex()
            .add(&self.k.as_complex().scale(Complex64::new(0.0, 1.0)))
    }

    /// Scale used by grid-relative tolerances.
    pub fn scale(&self) -> f64 {
        self.h.fro_norm() + self.k.fro_norm()
    }

    /// Numerical range map of the original matrix, assembled from the two
    /// real quadratic forms so no copy of A needs to be carried around.
    pub fn range_value(&self, x: &[Complex64]) -> Complex64 {
        Complex64::new(self.h.quadratic_form(x), self.k.quadratic_form(x))
    }
}

/// Wire format for matrices: {"n": 2, "entries": [[[re, im], ...], ...]},
/// row major, entries exactly n x n. Unknown extra fields are tolerated so
/// generators can attach metadata.
#[derive(Serialize, Deserialize)]
struct MatrixWire {
    n: usize,
    entries: Vec<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

pub fn matrix_from_json(text: &str) -> Result<ComplexMatrix> {
    let wire: MatrixWire = serde_json::from_str(text)?;
    if wire.n == 0 || wire.n > MAX_ORDER {
        return Err(Error::UnsupportedOrder { n: wire.n });
    }
    if wire.entries.len() != wire.n {
        return Err(Error::SizeMismatch {
            declared: wire.n,
            found: wire.entries.len(),
        });
    }
    let mut rows = Vec::with_capacity(wire.n);
    for (i, row) in wire.entries.iter().enumerate() {
        if row.len() != wire.n {
            return Err(Error::RaggedRow {
                row: i,
                expected: wire.n,
                found: row.len(),
            });
        }
        let mut out = Vec::with_capacity(wire.n);
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            out.push(Complex64::new(re, im));
        }
        rows.push(out);
    }
    ComplexMatrix::from_rows(rows)
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Result<String> {
    matrix_to_json_with_meta(m, None)
}

pub fn matrix_to_json_with_meta(
    m: &ComplexMatrix,
    meta: Option<serde_json::Value>,
) -> Result<String> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let wire = MatrixWire {
        n: m.n(),
        entries: (0..m.n())
            .map(|i| (0..m.n()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect(),
        meta,
    };
    Ok(serde_json::to_string_pretty(&wire)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_parts_recompose() {
        let a = ComplexMatrix::from_rows(vec![
            vec![c(1.0, 2.0), c(3.0, -1.0)],
            vec![c(0.0, 0.5), c(-2.0, 1.0)],
        ])
        .unwrap();
        let (h, k) = hermitian_parts(&a);
        assert_eq!(h.as_complex().hermiticity_defect(), 0.0);
        assert_eq!(k.as_complex().hermiticity_defect(), 0.0);
        let back = h
            .as_complex()
            .add(&k.as_complex().scale(c(0.0, 1.0)));
        assert!(back.max_abs_diff(&a) <= 1e-12 * a.fro_norm());
    }

    #[test]
    fn hermitian_parts_of_hermitian_matrix() {
        let m = ComplexMatrix::from_rows(vec![
            vec![c(2.0, 0.0), c(1.0, 1.0)],
            vec![c(1.0, -1.0), c(-1.0, 0.0)],
        ])
        .unwrap();
        let (h, k) = hermitian_parts(&m);
        assert!(h.as_complex().max_abs_diff(&m) < 1e-15);
        assert!(k.fro_norm() < 1e-15);
    }

    #[test]
    fn pencil_at_zero_and_quarter_turn() {
        let a = ComplexMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let p = HermitianPencil::from_matrix(&a);
        let at0 = p.at(0.0);
        assert!(at0.as_complex().max_abs_diff(p.h.as_complex()) < 1e-15);
        let at_quarter = p.at(std::f64::consts::FRAC_PI_2);
        assert!(
            at_quarter.as_complex().max_abs_diff(p.k.as_complex()) < 1e-15
        );
        // period 2 pi, antiperiod pi
        let at_pi = p.at(std::f64::consts::PI);
        let neg_h = p.h.linear_combination(-1.0, &p.k, 0.0);
        assert!(at_pi.as_complex().max_abs_diff(neg_h.as_complex()) < 1e-15);
    }

    #[test]
    fn pencil_derivative_matches_difference_quotient() {
        let a = ComplexMatrix::from_rows(vec![
            vec![c(0.3, -0.4), c(1.0, 2.0)],
            vec![c(-0.2, 0.1), c(0.8, 0.9)],
        ])
        .unwrap();
        let p = HermitianPencil::from_matrix(&a);
        let theta = 0.7;
        let h = 1e-6;
        let fd = p
            .at(theta + h)
            .as_complex()
            .sub(p.at(theta - h).as_complex())
            .scale(c(1.0 / (2.0 * h), 0.0));
        assert!(fd.max_abs_diff(p.derivative_at(theta).as_complex()) < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let a = ComplexMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, -0.5)],
            vec![c(2.5, 0.0), c(0.0, 3.0)],
        ])
        .unwrap();
        let text = matrix_to_json(&a).unwrap();
        let b = matrix_from_json(&text).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn json_rejects_ragged_rows() {
        let text = r#"{"n": 2, "entries": [[[0,0],[1,0]], [[0,0]]]}"#;
        match matrix_from_json(text) {
            Err(Error::RaggedRow { row: 1, expected: 2, found: 1 }) => {}
            other => panic!("expected ragged-row error, got {other:?}"),
        }
    }

    #[test]
    fn json_rejects_size_mismatch_and_bad_order() {
        let text = r#"{"n": 3, "entries": [[[0,0]]]}"#;
        assert!(matches!(
            matrix_from_json(text),
            Err(Error::SizeMismatch { declared: 3, found: 1 })
        ));
        let text = r#"{"n": 0, "entries": []}"#;
        assert!(matches!(
            matrix_from_json(text),
            Err(Error::UnsupportedOrder { n: 0 })
        ));
    }

    #[test]
    fn json_rejects_non_finite() {
        let text = r#"{"n": 1, "entries": [[[1e999, 0]]]}"#;
        // serde_json parses 1e999 as infinity rather than failing
        assert!(matrix_from_json(text).is_err());
    }

    #[test]
    fn json_parse_error_carries_position() {
        let text = r#"{"n": 2, "entries": [[[0,0],[1,0]],"#;
        match matrix_from_json(text) {
            Err(Error::Json(e)) => {
                assert!(e.line() >= 1);
            }
            other => panic!("expected JSON error, got {other:?}"),
        }
    }

    #[test]
    fn compression_of_identity_basis_is_block() {
        let m = HermitianMatrix::symmetrize(
            &ComplexMatrix::from_rows(vec![
                vec![c(1.0, 0.0), c(0.5, 0.5), c(0.0, 1.0)],
                vec![c(0.5, -0.5), c(2.0, 0.0), c(1.0, 0.0)],
                vec![c(0.0, -1.0), c(1.0, 0.0), c(3.0, 0.0)],
            ])
            .unwrap(),
        );
        let mut basis = ComplexMatrix::zeros(3, 2);
        basis[(0, 0)] = c(1.0, 0.0);
        basis[(1, 1)] = c(1.0, 0.0);
        let comp = m.compress(&basis);
        assert_eq!(comp.n(), 2);
        assert!((comp[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((comp[(0, 1)] - c(0.5, 0.5)).norm() < 1e-15);
    }
}
