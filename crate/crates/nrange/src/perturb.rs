//! Local eigenvalue expansions at a boundary point.
//!
//! Everything here works in a rotated and shifted frame: for a boundary
//! point `z` supported at angle `theta0`, the matrix `exp(-i theta0) (A - zI)`
//! has a real part that is positive semidefinite with kernel of dimension
//! `m`, the multiplicity of the support minimum. In a basis adapted to that
//! kernel the real part becomes `diag(0, H1)` with `H1` positive definite,
//! and the low orders of the eigenvalue branches through the minimum can be
//! read off from small Hermitian blocks built out of the imaginary part.
//!
//! Two independent routes to the same coefficients are provided: an exact
//! block reduction ([`reduction_chain`], [`exact_low_order_coefficients`])
//! valid through order three in favourable cases, and a least-squares fit of
//! traced branch values ([`fit_split_order`]) that works at any order and
//! also decides which branch is minimal on each side of the angle.

use num_complex::Complex64;

use crate::branches::EigenBranchSet;
use crate::eig::{eig_hermitian, is_unitarily_irreducible, pd_inverse};
use crate::error::{Error, Result};
use crate::matrix::{hermitian_parts, ComplexMatrix, HermitianMatrix};

/// Relative tolerance for deciding that a shifted boundary point still lies
/// on its support line.
const SUPPORT_TOL: f64 = 1e-7;

/// Relative floor added to every coefficient comparison so that exact zeros
/// do not produce spurious splits.
const COEF_FLOOR: f64 = 1e-10;

/// A matrix rotated and shifted so that a chosen boundary point sits at the
/// origin with its support line vertical through it.
///
/// `h_prime` is exactly diagonal with `multiplicity` leading zeros, and
/// `k_prime` is the imaginary part in the same adapted basis.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub theta0: f64,
    /// The boundary point that was moved to the origin.
    pub shift: Complex64,
    pub h_prime: HermitianMatrix,
    pub k_prime: HermitianMatrix,
    /// Dimension of the kernel of the rotated real part.
    pub multiplicity: usize,
    /// Orthonormal kernel basis in the original coordinates, n x m.
    pub basis: ComplexMatrix,
}

impl NormalForm {
    /// Builds the adapted frame for `a` at boundary point `z` supported at
    /// angle `theta0`. `tol` controls the eigenvalue clustering that fixes
    /// the kernel dimension.
    pub fn new(a: &ComplexMatrix, z: Complex64, theta0: f64, tol: f64) -> Result<NormalForm> {
        if !a.is_square() {
            return Err(Error::Dimension {
                context: format!("normal form needs a square matrix, got {}x{}", a.rows(), a.cols()),
            });
        }
        let n = a.n();
        let phase = Complex64::from_polar(1.0, -theta0);
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] -= z;
        }
        let b = shifted.scale(phase);
        let (hb, kb) = hermitian_parts(&b);
        let scale = hb.fro_norm() + kb.fro_norm();

        let e = eig_hermitian(&hb)?;
        let lambda0 = e.values[0];
        let on_line_tol = SUPPORT_TOL * (1.0 + scale);
        if lambda0.abs() > on_line_tol {
            return Err(Error::NotOnSupportLine {
                re: z.re,
                im: z.im,
                theta: theta0,
                offset: lambda0.abs(),
                tol: on_line_tol,
            });
        }

        let et = tol * (1.0 + scale);
        let m = e.values.iter().take_while(|&&v| v - lambda0 <= et).count();
        if m == n {
            return Err(Error::DegenerateNormalForm {
                detail: "the rotated real part vanishes, so the range is a vertical segment"
                    .into(),
            });
        }
        let gap = e.values[m] - lambda0;
        if gap <= et {
            return Err(Error::DegenerateNormalForm {
                detail: format!(
                    "trailing block not positive definite: gap {gap:.3e} at tolerance {et:.3e}"
                ),
            });
        }

        // The eigenbasis diagonalizes the real part, so take the diagonal
        // directly instead of conjugating; this keeps the kernel block an
        // exact zero and H1 exactly diagonal.
        let diag: Vec<f64> = e
            .values
            .iter()
            .enumerate()
            .map(|(j, &v)| if j < m { 0.0 } else { v - lambda0 })
            .collect();
        let h_prime = HermitianMatrix::from_diagonal(&diag);
        let k_prime = kb.compress(&e.vectors);
        let basis = e.vectors.block(0, 0, n, m);

        Ok(NormalForm { theta0, shift: z, h_prime, k_prime, multiplicity: m, basis })
    }

    pub fn n(&self) -> usize {
        self.h_prime.n()
    }

    /// Upper-left m x m block of the imaginary part: first-order coefficients.
    pub fn k00(&self) -> HermitianMatrix {
        let m = self.multiplicity;
        HermitianMatrix::symmetrize(&self.k_prime.as_complex().block(0, 0, m, m))
    }

    /// Off-diagonal coupling block, m x (n - m).
    pub fn k0(&self) -> ComplexMatrix {
        let m = self.multiplicity;
        self.k_prime.as_complex().block(0, m, m, self.n() - m)
    }

    /// Trailing block of the imaginary part, (n - m) square.
    pub fn k1(&self) -> HermitianMatrix {
        let m = self.multiplicity;
        let k = self.n() - m;
        HermitianMatrix::symmetrize(&self.k_prime.as_complex().block(m, m, k, k))
    }

    /// Positive definite trailing block of the real part.
    pub fn h1(&self) -> HermitianMatrix {
        let m = self.multiplicity;
        let k = self.n() - m;
        HermitianMatrix::symmetrize(&self.h_prime.as_complex().block(m, m, k, k))
    }

    /// Maps kernel coordinates back to a unit vector in the original frame.
    pub fn lift(&self, w: &[Complex64]) -> Vec<Complex64> {
        let mut x = self.basis.matvec(w);
        crate::matrix::normalize(&mut x);
        x
    }

    /// Support coordinate of the shifted point: the eigenvalue all group
    /// branches share at `theta0` in the original frame.
    pub fn lambda_star(&self) -> f64 {
        (self.shift * Complex64::from_polar(1.0, -self.theta0)).re
    }

    /// Derivative coordinate of the shifted point in the original frame.
    pub fn slope_star(&self) -> f64 {
        (self.shift * Complex64::from_polar(1.0, -self.theta0)).im
    }
}

/// Hermitian blocks of the eigenvalue reduction at a support minimum.
///
/// With `P` the kernel projection and `S` the pseudo-inverse of the real
/// part, the restriction of the branch expansion to the kernel is governed
/// by `t1 = P K P` at first order and `t2 = -P K S K P` at second order.
/// `order2_block` and `order3_block` are the corresponding m x m corners.
#[derive(Clone, Debug)]
pub struct ReductionChain {
    pub multiplicity: usize,
    pub p: HermitianMatrix,
    pub s: HermitianMatrix,
    pub t1: HermitianMatrix,
    pub t2: HermitianMatrix,
    /// m x m corner of `t2`.
    pub order2_block: HermitianMatrix,
    /// Third-order block `K0 H1^-1 K1 H1^-1 K0*`, valid as stated when the
    /// first-order block vanishes; see `exact_low_order_coefficients` for
    /// the shifted variant.
    pub order3_block: HermitianMatrix,
    k0: ComplexMatrix,
    h1_inv: HermitianMatrix,
    k1: HermitianMatrix,
}

/// Builds the reduction blocks from an adapted frame.
pub fn reduction_chain(nf: &NormalForm, tol: f64) -> Result<ReductionChain> {
    let n = nf.n();
    let m = nf.multiplicity;
    let k = n - m;

    let mut p_diag = vec![0.0; n];
    for d in p_diag.iter_mut().take(m) {
        *d = 1.0;
    }
    let p = HermitianMatrix::from_diagonal(&p_diag);

    let h1_inv = pd_inverse(&nf.h1(), tol)?;
    let mut s_full = ComplexMatrix::zeros(n, n);
    for i in 0..k {
        for j in 0..k {
            s_full[(m + i, m + j)] = h1_inv[(i, j)];
        }
    }
    let s = HermitianMatrix::symmetrize(&s_full);

    let kp = nf.k_prime.as_complex();
    let pc = p.as_complex();
    let t1 = HermitianMatrix::symmetrize(&pc.mul(kp).mul(pc));
    let t2 = HermitianMatrix::symmetrize(
        &pc.mul(kp).mul(s.as_complex()).mul(kp).mul(pc).scale(Complex64::new(-1.0, 0.0)),
    );
    let order2_block = HermitianMatrix::symmetrize(&t2.as_complex().block(0, 0, m, m));

    let k0 = nf.k0();
    let k1 = nf.k1();
    let order3_block = HermitianMatrix::symmetrize(
        &k0.mul(h1_inv.as_complex())
            .mul(k1.as_complex())
            .mul(h1_inv.as_complex())
            .mul(&k0.adjoint()),
    );

    Ok(ReductionChain {
        multiplicity: m,
        p,
        s,
        t1,
        t2,
        order2_block,
        order3_block,
        k0,
        h1_inv,
        k1,
    })
}

/// Exact low-order expansion coefficients for the branch group through a
/// support minimum, in the pencil parameter `t` of `H' + t K'`.
///
/// `order1` is the common first-order coefficient; `order2` lists the
/// second-order coefficients in ascending order. `order3` is present only
/// when every second-order coefficient coincides, in which case the group
/// stays together through order two and the third order separates it.
#[derive(Clone, Debug)]
pub struct ExactCoefficients {
    pub order1: f64,
    pub order2: Vec<f64>,
    /// Kernel-frame eigenvectors pairing with `order2`, m x m.
    pub order2_vectors: ComplexMatrix,
    pub order3: Option<Vec<f64>>,
    pub order3_vectors: Option<ComplexMatrix>,
}

impl ExactCoefficients {
    /// Converts the pencil-parameter coefficients into angle coefficients
    /// of the branch functions lambda_k(theta) near theta0. The matrix
    /// rotation behind `nf` contributes a cosine factor whose curvature
    /// shows up from order two on.
    pub fn theta_coefficients(&self, nf: &NormalForm) -> (f64, Vec<f64>, Option<Vec<f64>>) {
        let b1 = self.order1 + nf.slope_star();
        let b2: Vec<f64> = self.order2.iter().map(|c| c - nf.lambda_star() / 2.0).collect();
        let b3 = self
            .order3
            .as_ref()
            .map(|c3| c3.iter().map(|c| c - b1 / 6.0).collect());
        (b1, b2, b3)
    }
}

/// Reads the order-1..3 coefficients off the reduction blocks.
///
/// Requires the first-order block to be scalar (a group that separates at
/// first order should be cut into its first-order cells before coming
/// here). Fails with `UnsupportedExactOrder` when the minimal second-order
/// coefficient repeats without the whole second-order block being scalar;
/// the numeric fit has no such restriction.
pub fn exact_low_order_coefficients(chain: &ReductionChain, tol: f64) -> Result<ExactCoefficients> {
    let m = chain.multiplicity;
    let k00 = HermitianMatrix::symmetrize(&chain.t1.as_complex().block(0, 0, m, m));
    let scale = k00.fro_norm() + chain.order2_block.fro_norm();
    let et = tol * (1.0 + scale);

    let mut c1 = 0.0;
    for j in 0..m {
        c1 += k00[(j, j)].re;
    }
    c1 /= m as f64;
    let mut scalar_defect: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let expected = if i == j { Complex64::new(c1, 0.0) } else { Complex64::new(0.0, 0.0) };
            scalar_defect = scalar_defect.max((k00[(i, j)] - expected).norm());
        }
    }
    if scalar_defect > et {
        return Err(Error::DegenerateNormalForm {
            detail: format!(
                "first-order block is not scalar (defect {scalar_defect:.3e}); \
                 the group already separates at order one"
            ),
        });
    }

    let e2 = eig_hermitian(&chain.order2_block)?;
    let spread = e2.values[m - 1] - e2.values[0];

    if spread <= et {
        // The whole group runs together through order two. Shifting the
        // pencil by the common slope kills the first-order block, and the
        // third-order coefficients are the eigenvalues of the shifted block
        // K0 H1^-1 (K1 - c1 I) H1^-1 K0*.
        let k1_shifted = chain.k1.shift(-c1);
        let third = HermitianMatrix::symmetrize(
            &chain
                .k0
                .mul(chain.h1_inv.as_complex())
                .mul(k1_shifted.as_complex())
                .mul(chain.h1_inv.as_complex())
                .mul(&chain.k0.adjoint()),
        );
        let e3 = eig_hermitian(&third)?;
        return Ok(ExactCoefficients {
            order1: c1,
            order2: e2.values.clone(),
            order2_vectors: e2.vectors,
            order3: Some(e3.values.clone()),
            order3_vectors: Some(e3.vectors),
        });
    }

    if m >= 2 && e2.values[1] - e2.values[0] <= et {
        return Err(Error::UnsupportedExactOrder);
    }

    Ok(ExactCoefficients {
        order1: c1,
        order2: e2.values.clone(),
        order2_vectors: e2.vectors,
        order3: None,
        order3_vectors: None,
    })
}

/// First order at which two branches of one fit differ, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairSplit {
    pub a: usize,
    pub b: usize,
    pub order: Option<usize>,
}

/// Parity of the leading split order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitParity {
    Even,
    Odd,
}

impl SplitParity {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitParity::Even => "even",
            SplitParity::Odd => "odd",
        }
    }
}

/// Least-squares expansion of a branch group around one angle.
///
/// `coefficients[i][p]` is the order-p angle coefficient of branch
/// `branches[i]`; `threshold[p]` is the resolution below which two order-p
/// coefficients count as equal.
#[derive(Clone, Debug)]
pub struct SplitReport {
    pub theta0: f64,
    pub branches: Vec<usize>,
    pub coefficients: Vec<Vec<f64>>,
    pub threshold: Vec<f64>,
    pub pairwise: Vec<PairSplit>,
    /// First order at which any two branches of the group differ.
    pub split_order: Option<usize>,
    pub parity: Option<SplitParity>,
    /// Whether some branch is minimal on both sides of the angle at once.
    /// The group parametrizes both one-sided boundary neighbourhoods with a
    /// single eigenfunction exactly when this holds.
    pub minimal_branch_same_both_sides: bool,
    /// Root-mean-square fit residual, for diagnostics.
    pub residual_scale: f64,
}

/// Fits polynomial expansions to the named branches around `theta0` and
/// locates the first order separating them.
///
/// Branch values are sampled at `theta0 + j delta` for j = -(max_order+2)
/// ..= max_order+2 excluding zero, each resolved against the traced grid,
/// so the expansion follows analytic branches through their crossing rather
/// than the sorted eigenvalues.
pub fn fit_split_order(
    set: &EigenBranchSet,
    theta0: f64,
    branches: &[usize],
    max_order: usize,
    delta: f64,
) -> Result<SplitReport> {
    let n = set.n();
    if branches.is_empty() {
        return Err(Error::Config("split fit needs at least one branch".into()));
    }
    for &k in branches {
        if k >= n {
            return Err(Error::Config(format!("branch index {k} out of range for n = {n}")));
        }
    }
    let mut sorted = branches.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != branches.len() {
        return Err(Error::Config("split fit branch list has duplicates".into()));
    }
    if max_order < 3 {
        return Err(Error::Config(format!("max_order must be at least 3, got {max_order}")));
    }
    if !(delta > 0.0 && delta <= 0.1) {
        return Err(Error::Config(format!("delta must lie in (0, 0.1], got {delta}")));
    }

    // Chain the stencil samples outward from a seed at theta0 on each side,
    // so the labels stay those of one analytic branch even when the stencil
    // straddles the angle where the closed-circle grid labelling wraps.
    let j_max = max_order + 2;
    let seed = set.eig_matched_at(theta0)?;
    let g = branches.len();
    let mut offsets = Vec::with_capacity(2 * j_max);
    let mut samples = vec![Vec::with_capacity(2 * j_max); g];
    for side in [-1.0, 1.0] {
        let mut prev = seed.vectors.clone();
        for j in 1..=j_max {
            let phi = side * j as f64 * delta;
            let ms = set.eig_matched_from(&prev, theta0 + phi)?;
            offsets.push(phi);
            for (i, &k) in branches.iter().enumerate() {
                samples[i].push(ms.values[k]);
            }
            prev = ms.vectors;
        }
    }

    // Fit on the scaled variable u = phi / (j_max delta) so the design stays
    // well conditioned, then unscale the coefficients.
    let width = j_max as f64 * delta;
    let cols = max_order + 1;
    let rows = offsets.len();
    let mut design = vec![vec![0.0; cols]; rows];
    for (s, &phi) in offsets.iter().enumerate() {
        let u = phi / width;
        let mut pw = 1.0;
        for p in 0..cols {
            design[s][p] = pw;
            pw *= u;
        }
    }

    let fit = lstsq(&design, &samples)?;
    let scale = set.pencil().scale();

    let mut coefficients = vec![vec![0.0; cols]; g];
    for i in 0..g {
        let mut wp = 1.0;
        for p in 0..cols {
            coefficients[i][p] = fit.coef[i][p] / wp;
            wp *= width;
        }
    }
    let mut threshold = vec![0.0; cols];
    {
        let mut wp = 1.0;
        for p in 0..cols {
            threshold[p] = 10.0 * fit.sigma[p] / wp + COEF_FLOOR * (1.0 + scale);
            wp *= width;
        }
    }

    let lead = coefficients
        .iter()
        .flat_map(|c| c.iter().skip(1))
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let lead_scale = lead.max(1e-9 * (1.0 + scale));
    if fit.residual > 1e-4 * lead_scale {
        return Err(Error::IllConditionedFit { residual: fit.residual, scale: lead_scale });
    }

    let mut pairwise = Vec::new();
    let mut split_order: Option<usize> = None;
    for a in 0..g {
        for b in (a + 1)..g {
            let mut order = None;
            for p in 1..cols {
                if (coefficients[a][p] - coefficients[b][p]).abs() > threshold[p] {
                    order = Some(p);
                    break;
                }
            }
            if let Some(p) = order {
                split_order = Some(split_order.map_or(p, |q: usize| q.min(p)));
            }
            pairwise.push(PairSplit { a: branches[a], b: branches[b], order });
        }
    }
    let parity = split_order.map(|p| if p % 2 == 0 { SplitParity::Even } else { SplitParity::Odd });

    let minimal_branch_same_both_sides =
        minimal_path_intersects(&coefficients, &threshold, cols);

    Ok(SplitReport {
        theta0,
        branches: branches.to_vec(),
        coefficients,
        threshold,
        pairwise,
        split_order,
        parity,
        minimal_branch_same_both_sides,
        residual_scale: fit.residual,
    })
}

/// Walks the coefficient lists order by order, keeping on the right side the
/// branches minimal for increasing angle and on the left side those minimal
/// for decreasing angle, where odd orders flip sign. Returns whether one
/// branch survives both selections.
fn minimal_path_intersects(coef: &[Vec<f64>], threshold: &[f64], cols: usize) -> bool {
    let g = coef.len();
    let mut right: Vec<usize> = (0..g).collect();
    let mut left: Vec<usize> = (0..g).collect();

    for p in 1..cols {
        let refine = |set: &mut Vec<usize>, sign: f64| {
            if set.len() <= 1 {
                return;
            }
            let best = set
                .iter()
                .map(|&i| sign * coef[i][p])
                .fold(f64::INFINITY, f64::min);
            set.retain(|&i| sign * coef[i][p] <= best + threshold[p]);
        };
        refine(&mut right, 1.0);
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        refine(&mut left, sign);
        if right.len() == 1 && left.len() == 1 {
            break;
        }
    }
    right.iter().any(|i| left.contains(i))
}

struct LstsqFit {
    coef: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    residual: f64,
}

/// Householder QR least squares with a shared design matrix and one right
/// hand side per row of `ys`. Returns per-column coefficient uncertainties
/// scaled by the worst residual.
fn lstsq(design: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<LstsqFit> {
    let rows = design.len();
    let cols = design[0].len();
    if rows <= cols {
        return Err(Error::Config(format!(
            "least squares needs more samples than coefficients: {rows} rows, {cols} columns"
        )));
    }
    let m = ys.len();
    let mut a: Vec<Vec<f64>> = design.to_vec();
    let mut b: Vec<Vec<f64>> = (0..rows).map(|s| ys.iter().map(|y| y[s]).collect()).collect();

    for j in 0..cols {
        let mut norm = 0.0f64;
        for i in j..rows {
            norm += a[i][j] * a[i][j];
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            return Err(Error::Internal("rank-deficient fit design".into()));
        }
        let alpha = if a[j][j] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..rows).map(|i| a[i][j]).collect();
        v[0] -= alpha;
        let vnsq: f64 = v.iter().map(|x| x * x).sum();
        if vnsq == 0.0 {
            continue;
        }
        for c in j..cols {
            let dot: f64 = (j..rows).map(|i| v[i - j] * a[i][c]).sum();
            let f = 2.0 * dot / vnsq;
            for i in j..rows {
                a[i][c] -= f * v[i - j];
            }
        }
        for c in 0..m {
            let dot: f64 = (j..rows).map(|i| v[i - j] * b[i][c]).sum();
            let f = 2.0 * dot / vnsq;
            for i in j..rows {
                b[i][c] -= f * v[i - j];
            }
        }
        a[j][j] = alpha;
    }

    let mut coef = vec![vec![0.0; cols]; m];
    for c in 0..m {
        for j in (0..cols).rev() {
            let mut s = b[j][c];
            for l in (j + 1)..cols {
                s -= a[j][l] * coef[c][l];
            }
            coef[c][j] = s / a[j][j];
        }
    }

    let dof = (rows - cols) as f64;
    let mut residual = 0.0f64;
    for c in 0..m {
        let rss: f64 = (cols..rows).map(|i| b[i][c] * b[i][c]).sum();
        residual = residual.max((rss / dof).sqrt());
    }

    // R^-1 row norms give the per-coefficient sensitivity to residual noise.
    let mut rinv = vec![vec![0.0; cols]; cols];
    for j in (0..cols).rev() {
        rinv[j][j] = 1.0 / a[j][j];
        for c in (j + 1)..cols {
            let mut s = 0.0;
            for l in (j + 1)..=c {
                s += a[j][l] * rinv[l][c];
            }
            rinv[j][c] = -s / a[j][j];
        }
    }
    let sigma: Vec<f64> = (0..cols)
        .map(|p| {
            let row: f64 = (p..cols).map(|c| rinv[p][c] * rinv[p][c]).sum();
            row.sqrt() * residual
        })
        .collect();

    Ok(LstsqFit { coef, sigma, residual })
}

/// Outcome of the spectral-gap test for weak continuity at a round boundary
/// point with vanishing first-order block.
#[derive(Clone, Copy, Debug)]
pub struct WeakCriterion {
    /// Whether the gap criterion guarantees weak continuity at the point.
    pub sufficient_weak: bool,
    /// Gap between the two largest eigenvalues of `K0 H1^-1 K0*`.
    pub largest_eig_gap: f64,
    /// For 4 x 4 unitarily irreducible matrices the criterion is also
    /// necessary, so a failed gap decides the point.
    pub exact_for_dim4: bool,
}

/// Tests the spectral-gap criterion: weak continuity of the inverse at `z`
/// holds when the largest eigenvalue of `K0 H1^-1 K0*` is simple.
pub fn weak_criterion(
    a: &ComplexMatrix,
    z: Complex64,
    theta0: f64,
    tol: f64,
) -> Result<WeakCriterion> {
    let nf = NormalForm::new(a, z, theta0, tol)?;
    let scale = nf.k_prime.fro_norm();
    let k00_norm = nf.k00().fro_norm();
    if k00_norm > 1e-8 * (1.0 + scale) {
        return Err(Error::DegenerateNormalForm {
            detail: format!(
                "gap criterion needs a vanishing first-order block, found norm {k00_norm:.3e}"
            ),
        });
    }
    let chain = reduction_chain(&nf, tol)?;
    let m = nf.multiplicity;
    if m == 1 {
        return Ok(WeakCriterion {
            sufficient_weak: true,
            largest_eig_gap: f64::INFINITY,
            exact_for_dim4: false,
        });
    }
    // The positive block is the negative of the order-two corner.
    let g = chain.order2_block.linear_combination(-1.0, &chain.order2_block, 0.0);
    let e = eig_hermitian(&g)?;
    let top = e.values[m - 1];
    let gap = top - e.values[m - 2];
    let sufficient_weak = gap > 1e-8 * (1.0 + top.abs());
    let exact_for_dim4 = a.n() == 4 && is_unitarily_irreducible(a, tol)?;
    Ok(WeakCriterion { sufficient_weak, largest_eig_gap: gap, exact_for_dim4 })
}
