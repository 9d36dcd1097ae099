//! Built-in example matrices used by the test corpus and the CLI.
//!
//! Each builder returns a small matrix whose boundary behaviour is known in
//! closed form, covering the interesting continuity cases: an even-order
//! branch split where strong continuity fails but weak continuity survives
//! (`example1`), an odd third-order split where weak continuity fails too
//! (`example2`), a disk generated entirely by doubled branches where strong
//! continuity holds at every boundary point (`example3`), a plain disk with
//! simple branches (`jordan2`), and a square with four flat edges and four
//! corners (`normal4`).

use crate::error::{Error, Result};
use crate::matrix::{Complex64, ComplexMatrix};

/// Names accepted by [`by_name`], in the order the CLI lists them.
pub const EXAMPLE_NAMES: [&str; 5] =
    ["example1", "example2", "example3", "jordan2", "normal4"];

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn im(x: f64) -> Complex64 {
    Complex64::new(0.0, x)
}

const O: Complex64 = Complex64::new(0.0, 0.0);

/// 4-by-4 matrix whose numerical range touches the imaginary axis only at
/// the origin, where two eigenvalue branches meet and split at second
/// order with distinct quadratic coefficients -k1^2 and -k2^2.
///
/// Requires k1 > k2 > 0 and r > 0; the strict inequality keeps the split
/// coefficients apart and r couples the lower block enough to make the
/// matrix unitarily irreducible. Defaults used by the CLI: k1=2, k2=1, r=1.
pub fn example1(k1: f64, k2: f64, r: f64) -> Result<ComplexMatrix> {
    if !(k1.is_finite() && k2.is_finite() && r.is_finite()) {
        return Err(Error::ExampleParams("example1 parameters must be finite".into()));
    }
    if !(k1 > k2 && k2 > 0.0 && r > 0.0) {
        return Err(Error::ExampleParams(format!(
            "example1 needs k1 > k2 > 0 and r > 0, got k1={k1}, k2={k2}, r={r}"
        )));
    }
    ComplexMatrix::from_rows(vec![
        vec![O, O, im(k1), O],
        vec![O, O, O, im(k2)],
        vec![im(k1), O, re(1.0), im(r)],
        vec![O, im(k2), im(r), re(1.0)],
    ])
}

/// 4-by-4 unitarily irreducible matrix whose two minimal branches at the
/// origin agree through second order and separate only at third order, so
/// the boundary arcs on either side of 0 belong to different analytic
/// branches and weak continuity fails there.
pub fn example2() -> ComplexMatrix {
    ComplexMatrix::from_rows(vec![
        vec![O, O, im(1.0), O],
        vec![O, O, O, im(2.0)],
        vec![im(1.0), O, Complex64::new(1.0, 1.0), im(2.0)],
        vec![O, im(2.0), im(2.0), Complex64::new(4.0, 3.0)],
    ])
    .expect("fixed 4x4 layout")
}

/// 6-by-6 matrix whose numerical range is the closed unit disk while every
/// pencil spectrum is constant in the angle: +-1 with multiplicity two and
/// +-c*eta/2. The doubled branches generate every boundary point, yet they
/// never split, so strong continuity holds everywhere on the circle.
///
/// Requires w, y, xi, eta, c > 0 with w^2 + y^2 = xi^2 + eta^2 = 4 and
/// c < 1. Defaults used by the CLI: w = y = xi = eta = sqrt(2), c = 1/2.
pub fn example3(w: f64, y: f64, xi: f64, eta: f64, c: f64) -> Result<ComplexMatrix> {
    let params = [w, y, xi, eta, c];
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::ExampleParams("example3 parameters must be finite".into()));
    }
    if params.iter().any(|&p| p <= 0.0) {
        return Err(Error::ExampleParams(format!(
            "example3 needs all of w, y, xi, eta, c positive, got \
             w={w}, y={y}, xi={xi}, eta={eta}, c={c}"
        )));
    }
    if c >= 1.0 {
        return Err(Error::ExampleParams(format!("example3 needs c < 1, got c={c}")));
    }
    let tol = 1e-9;
    if (w * w + y * y - 4.0).abs() > tol {
        return Err(Error::ExampleParams(format!(
            "example3 needs w^2 + y^2 = 4, got {}",
            w * w + y * y
        )));
    }
    if (xi * xi + eta * eta - 4.0).abs() > tol {
        return Err(Error::ExampleParams(format!(
            "example3 needs xi^2 + eta^2 = 4, got {}",
            xi * xi + eta * eta
        )));
    }
    let s = (1.0 - c * c).sqrt();
    ComplexMatrix::from_rows(vec![
        vec![O, re(w), O, re(c * y), O, O],
        vec![O, O, re(y), O, O, O],
        vec![O, O, O, O, O, O],
        vec![O, O, re(-c * w), O, re(s * xi), O],
        vec![O, O, O, O, O, re(eta)],
        vec![O, O, O, O, O, O],
    ])
}

/// 2-by-2 nilpotent Jordan block; its numerical range is the closed disk of
/// radius 1/2 and both branches are the constants +-1/2.
pub fn jordan2() -> ComplexMatrix {
    ComplexMatrix::from_rows(vec![vec![O, re(1.0)], vec![O, O]]).expect("fixed 2x2 layout")
}

/// Normal 4-by-4 matrix with eigenvalues 1, i, -1, -i; its numerical range
/// is the square spanned by them, all boundary structure is flat edges and
/// corners, and strong continuity holds everywhere.
pub fn normal4() -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(4, 4);
    a[(0, 0)] = re(1.0);
    a[(1, 1)] = im(1.0);
    a[(2, 2)] = re(-1.0);
    a[(3, 3)] = im(-1.0);
    a
}

/// Builds the named example with its default parameters. Unknown names list
/// the valid ones in the error.
pub fn by_name(name: &str) -> Result<ComplexMatrix> {
    let rt2 = 2.0_f64.sqrt();
    match name {
        "example1" => example1(2.0, 1.0, 1.0),
        "example2" => Ok(example2()),
        "example3" => example3(rt2, rt2, rt2, rt2, 0.5),
        "jordan2" => Ok(jordan2()),
        "normal4" => Ok(normal4()),
        other => Err(Error::ExampleParams(format!(
            "unknown example {other:?}; valid names: {}",
            EXAMPLE_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::{eig_hermitian, is_unitarily_irreducible};
    use crate::matrix::{hermitian_parts, HermitianPencil};

    #[test]
    fn example1_splits_into_the_expected_parts() {
        let a = example1(2.0, 1.0, 1.0).unwrap();
        let (h, k) = hermitian_parts(&a);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j && i >= 2 { 1.0 } else { 0.0 };
                assert_eq!(h[(i, j)], Complex64::new(want, 0.0));
            }
        }
        assert_eq!(k[(0, 2)], re(2.0));
        assert_eq!(k[(1, 3)], re(1.0));
        assert_eq!(k[(2, 3)], re(1.0));
        assert_eq!(k[(0, 1)], O);
        assert!(is_unitarily_irreducible(&a, 1e-9).unwrap());
    }

    #[test]
    fn example1_rejects_bad_parameters() {
        assert!(example1(1.0, 1.0, 1.0).is_err());
        assert!(example1(1.0, 2.0, 1.0).is_err());
        assert!(example1(2.0, 1.0, 0.0).is_err());
        assert!(example1(2.0, -1.0, 1.0).is_err());
        assert!(example1(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn example2_matches_its_hermitian_parts() {
        let a = example2();
        let (h, k) = hermitian_parts(&a);
        let h_want = [0.0, 0.0, 1.0, 4.0];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { h_want[i] } else { 0.0 };
                assert!((h[(i, j)] - re(want)).norm() < 1e-15);
            }
        }
        let k_want = [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 2.0],
            [1.0, 0.0, 1.0, 2.0],
            [0.0, 2.0, 2.0, 3.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((k[(i, j)] - re(k_want[i][j])).norm() < 1e-15);
            }
        }
        assert!(is_unitarily_irreducible(&a, 1e-9).unwrap());
    }

    #[test]
    fn example3_spectrum_is_constant_in_the_angle() {
        let rt2 = 2.0_f64.sqrt();
        let a = example3(rt2, rt2, rt2, rt2, 0.5).unwrap();
        let pencil = HermitianPencil::from_matrix(&a);
        let want = [-1.0, -1.0, -rt2 / 4.0, rt2 / 4.0, 1.0, 1.0];
        for j in 0..7 {
            let theta = 0.9 * j as f64;
            let e = eig_hermitian(&pencil.at(theta)).unwrap();
            for (got, expect) in e.values.iter().zip(want) {
                assert!(
                    (got - expect).abs() < 1e-10,
                    "theta={theta}: {:?} vs {:?}",
                    e.values,
                    want
                );
            }
        }
        assert!(is_unitarily_irreducible(&a, 1e-9).unwrap());
    }

    #[test]
    fn example3_rejects_constraint_violations() {
        let rt2 = 2.0_f64.sqrt();
        assert!(example3(1.0, 1.0, rt2, rt2, 0.5).is_err());
        assert!(example3(rt2, rt2, 1.0, 1.0, 0.5).is_err());
        assert!(example3(rt2, rt2, rt2, rt2, 1.0).is_err());
        assert!(example3(rt2, rt2, rt2, rt2, -0.5).is_err());
        assert!(example3(2.0, 0.0, rt2, rt2, 0.5).is_err());
    }

    #[test]
    fn by_name_covers_every_listed_example() {
        for name in EXAMPLE_NAMES {
            let a = by_name(name).unwrap();
            assert!(a.is_square());
        }
        let err = by_name("example9").unwrap_err();
        assert!(err.to_string().contains("example1"));
    }
}
