//! Eigenvalue branches of the rotated real part, traced around the circle.
//!
//! The pencil P(theta) = H cos(theta) + K sin(theta) has n eigenvalue
//! functions that continue analytically in theta. Tracing follows the
//! eigenvector of each branch from one grid angle to the next by overlap,
//! so branch labels keep their identity through value crossings. A label
//! can still hop between analytic branches at an avoided crossing narrower
//! than the clustering resolution; refining the grid separates those.
//!
//! On top of the traced set sit the two structural queries downstream code
//! needs: the exceptional angles where branches collide (crossings found by
//! sign change and bisection, tangencies by bisecting the derivative gap),
//! and the flat boundary portions, which live exactly at collisions that
//! attain the support minimum with a genuine spread in the derivative
//! compression. Branch pairs that agree along the whole circle are the same
//! analytic function twice; they are excluded from collision detection and
//! reported as identical groups instead.

use std::f64::consts::TAU;

use crate::eig::{eig_hermitian, EigenDecomposition};
use crate::error::{Error, Result};
use crate::matrix::{inner, Complex64, ComplexMatrix, HermitianMatrix, HermitianPencil};

/// Relative width under which adjacent eigenvalues are treated as one
/// degenerate cluster while matching vectors across a grid step.
const CLUSTER_TOL: f64 = 1e-8;
/// Smallest squared overlap a branch vector may keep across one step.
const OVERLAP_FLOOR: f64 = 0.35;
/// Fraction of grid points on which two branches must agree to be declared
/// identical. Distinct analytic branches agree only near their finitely many
/// crossings, so even a quarter of the grid is far beyond reach for them.
const IDENTICAL_FRACTION: f64 = 0.25;
/// Collision angles this close to a grid node are snapped onto it, provided
/// the node itself passes the collision tolerance. Bisection locates an
/// order-p tangency only to about eps^(1/p), so the snap radius is generous.
const THETA_SNAP: f64 = 3e-5;
/// Refined collision angles closer than this are merged into one point.
const THETA_MERGE: f64 = 1e-6;
/// Relative spread of the derivative compression above which a degenerate
/// support minimum carries a flat boundary portion.
const FLAT_SPREAD_TOL: f64 = 1e-6;

/// Uniform grid theta_j = 2 pi j / count.
#[derive(Clone, Debug)]
pub struct AngleGrid {
    count: usize,
}

impl AngleGrid {
    pub fn new(count: usize) -> Self {
        assert!(count >= 4, "angle grid needs at least 4 points");
        AngleGrid { count }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn delta(&self) -> f64 {
        TAU / self.count as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        TAU * j as f64 / self.count as f64
    }

    /// theta(j) shifted by a signed number of steps; may leave [0, 2 pi).
    pub fn theta_offset(&self, j: usize, steps: i64) -> f64 {
        self.theta(j) + steps as f64 * self.delta()
    }

    /// Index of the grid node nearest to theta, reduced mod count.
    pub fn nearest(&self, theta: f64) -> usize {
        let j = (theta / self.delta()).round() as i64;
        j.rem_euclid(self.count as i64) as usize
    }
}

/// Spectrum at one angle with eigenvalues and eigenvectors indexed by
/// branch label rather than by sorted position.
#[derive(Clone, Debug)]
pub struct MatchedSpectrum {
    pub theta: f64,
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl MatchedSpectrum {
    /// Branch derivatives lambda_k'(theta) at this angle, computed from the
    /// derivative pencil and the matched vectors.
    pub fn derivative_values(&self, pencil: &HermitianPencil) -> Vec<f64> {
        let d = pencil.derivative_at(self.theta);
        (0..self.values.len())
            .map(|k| d.quadratic_form(&self.vectors.column(k)))
            .collect()
    }
}

/// A set of branches that collide at one exceptional angle and share an
/// eigenvalue there.
#[derive(Clone, Debug)]
pub struct CollisionGroup {
    pub branches: Vec<usize>,
    pub value: f64,
    /// Largest in-group eigenvalue spread left after refining the angle.
    pub residual: f64,
    /// Whether the shared value is the support minimum at this angle.
    pub attains_min: bool,
}

/// One exceptional angle together with every collision happening there.
#[derive(Clone, Debug)]
pub struct ExceptionalPoint {
    pub theta: f64,
    pub groups: Vec<CollisionGroup>,
}

#[derive(Clone, Debug, Default)]
pub struct ExceptionalReport {
    pub points: Vec<ExceptionalPoint>,
    /// Branches indistinguishable along the whole circle, grouped.
    pub identical_groups: Vec<Vec<usize>>,
}

/// A straight segment of the boundary, supported at a single angle.
#[derive(Clone, Debug)]
pub struct FlatPortion {
    pub theta: f64,
    pub branches: Vec<usize>,
    /// Common eigenvalue of the colliding branches (the support minimum).
    pub support_value: f64,
    /// Eigenvalues of the derivative compression on the group eigenspace,
    /// ascending. These are the branch derivatives at the collision.
    pub derivative_values: Vec<f64>,
    pub z_start: Complex64,
    pub z_end: Complex64,
}

impl FlatPortion {
    pub fn length(&self) -> f64 {
        (self.z_end - self.z_start).norm()
    }
}

/// The full set of traced branches on a grid.
pub struct EigenBranchSet {
    pencil: HermitianPencil,
    grid: AngleGrid,
    /// values[j][k] = lambda_k(theta_j), j = 0..=count.
    values: Vec<Vec<f64>>,
    /// vectors[j] holds x_k(theta_j) as column k.
    vectors: Vec<ComplexMatrix>,
    /// Branch k continued past 2 pi lands on branch wrap[k] at 0.
    wrap: Vec<usize>,
}

impl EigenBranchSet {
    pub fn trace(pencil: HermitianPencil, count: usize) -> Result<Self> {
        let grid = AngleGrid::new(count);
        let scale = pencil.scale();
        let n = pencil.n();

        let mut values: Vec<Vec<f64>> = Vec::with_capacity(count + 1);
        let mut vectors: Vec<ComplexMatrix> = Vec::with_capacity(count + 1);

        let e0 = eig_hermitian(&pencil.at(0.0))?;
        values.push(e0.values.clone());
        vectors.push(e0.vectors);

        for j in 1..=count {
            let theta = grid.theta(j);
            let m = pencil.at(theta);
            let e = eig_hermitian(&m)?;
            let (vals, vecs) = match_to(&vectors[j - 1], &e, &m, scale, theta)?;
            values.push(vals);
            vectors.push(vecs);
        }

        // monodromy: where each label lands after a full turn
        let mut overlaps: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
        for k in 0..n {
            let end = vectors[count].column(k);
            for l in 0..n {
                let w = inner(&end, &vectors[0].column(l)).norm_sqr();
                overlaps.push((w, k, l));
            }
        }
        overlaps.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut wrap = vec![usize::MAX; n];
        let mut taken = vec![false; n];
        for (_, k, l) in overlaps {
            if wrap[k] == usize::MAX && !taken[l] {
                wrap[k] = l;
                taken[l] = true;
            }
        }

        Ok(EigenBranchSet { pencil, grid, values, vectors, wrap })
    }

    pub fn n(&self) -> usize {
        self.pencil.n()
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    pub fn pencil(&self) -> &HermitianPencil {
        &self.pencil
    }

    pub fn wrap(&self) -> &[usize] {
        &self.wrap
    }

    pub fn value(&self, j: usize, k: usize) -> f64 {
        self.values[j][k]
    }

    pub fn values_at(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn vector(&self, j: usize, k: usize) -> Vec<Complex64> {
        self.vectors[j].column(k)
    }

    /// lambda_k'(theta_j) via the derivative pencil.
    pub fn derivative_value(&self, j: usize, k: usize) -> f64 {
        let d = self.pencil.derivative_at(self.grid.theta(j));
        d.quadratic_form(&self.vectors[j].column(k))
    }

    /// z_k(theta_j) = x_k* A x_k, the critical curve sample of branch k.
    pub fn curve_point(&self, j: usize, k: usize) -> Complex64 {
        self.pencil.range_value(&self.vectors[j].column(k))
    }

    /// Label of the branch attaining the support minimum at grid node j.
    pub fn min_branch(&self, j: usize) -> usize {
        let row = &self.values[j];
        let mut best = 0;
        for k in 1..row.len() {
            if row[k] < row[best] {
                best = k;
            }
        }
        best
    }

    pub fn support_minimum(&self, j: usize) -> f64 {
        self.values[j][self.min_branch(j)]
    }

    /// Smallest gap between the two lowest eigenvalues over the grid. Zero
    /// means the support minimum degenerates somewhere (or everywhere).
    pub fn min_support_gap(&self) -> f64 {
        let mut best = f64::INFINITY;
        for j in 0..self.grid.count() {
            let mut row = self.values[j].clone();
            row.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if row.len() > 1 {
                best = best.min(row[1] - row[0]);
            }
        }
        best
    }

    /// Boundary samples z_min(theta_j) for j = 0..=count, a closed polyline.
    pub fn boundary_polyline(&self) -> Vec<Complex64> {
        (0..=self.grid.count())
            .map(|j| self.curve_point(j, self.min_branch(j)))
            .collect()
    }

    /// Full critical curve, one closed polyline per branch.
    pub fn critical_curve(&self) -> Vec<Vec<Complex64>> {
        (0..self.n())
            .map(|k| {
                (0..=self.grid.count())
                    .map(|j| self.curve_point(j, k))
                    .collect()
            })
            .collect()
    }

    /// Spectrum at an arbitrary angle with branch labels carried over from
    /// the nearest grid node. The angle may lie outside [0, 2 pi).
    pub fn eig_matched_at(&self, theta: f64) -> Result<MatchedSpectrum> {
        let anchor = self.grid.nearest(theta);
        self.eig_matched_from(&self.vectors[anchor], theta)
    }

    /// Spectrum at `theta` with labels matched against caller-provided
    /// vectors. Lets callers chain their own samples across a stretch of
    /// angles, which keeps labels consistent where the closed-circle grid
    /// labelling would wrap with a permutation.
    pub fn eig_matched_from(
        &self,
        prev: &ComplexMatrix,
        theta: f64,
    ) -> Result<MatchedSpectrum> {
        let m = self.pencil.at(theta);
        let e = eig_hermitian(&m)?;
        let (values, vectors) = match_to(prev, &e, &m, self.pencil.scale(), theta)?;
        Ok(MatchedSpectrum { theta, values, vectors })
    }

    /// Branch pairs that agree on at least a quarter of the grid, merged
    /// into groups. Such pairs are one analytic function listed twice.
    pub fn identical_groups(&self, tol: f64) -> Vec<Vec<usize>> {
        let n = self.n();
        let count = self.grid.count();
        let et = tol * (1.0 + self.pencil.scale());
        let need = ((count as f64) * IDENTICAL_FRACTION).ceil() as usize;

        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }

        let mut parent: Vec<usize> = (0..n).collect();
        for k in 0..n {
            for l in (k + 1)..n {
                let close = (0..count)
                    .filter(|&j| (self.values[j][k] - self.values[j][l]).abs() <= et)
                    .count();
                if close >= need {
                    let (rk, rl) = (find(&mut parent, k), find(&mut parent, l));
                    if rk != rl {
                        parent[rk.max(rl)] = rk.min(rl);
                    }
                }
            }
        }

        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
        for k in 0..n {
            let r = find(&mut parent, k);
            groups[r].push(k);
        }
        groups.retain(|g| g.len() >= 2);
        groups
    }

    /// Locate every angle where distinct branches collide. Sign changes of
    /// the gap are refined by bisection; tangencies (the gap touches zero
    /// without crossing) by bisecting the gap derivative. Results within
    /// the snap radius of a grid node are snapped onto it so that exact
    /// collisions at grid angles come out exact.
    pub fn find_exceptional_points(&self, tol: f64) -> Result<ExceptionalReport> {
        let n = self.n();
        let count = self.grid.count();
        let scale = self.pencil.scale();
        let et = tol * (1.0 + scale);
        let screen = 10.0 * (1.0 + scale) * self.grid.delta().powi(2);

        let identical_groups = self.identical_groups(tol);
        let mut ident_id = vec![usize::MAX; n];
        for (gi, g) in identical_groups.iter().enumerate() {
            for &k in g {
                ident_id[k] = gi;
            }
        }

        let mut raw: Vec<f64> = Vec::new();
        for k in 0..n {
            for l in (k + 1)..n {
                if ident_id[k] != usize::MAX && ident_id[k] == ident_id[l] {
                    continue;
                }
                let g: Vec<f64> = (0..count)
                    .map(|j| self.values[j][k] - self.values[j][l])
                    .collect();
                let gv = |j: usize| g[j % count];
                for j in 0..count {
                    let gj = g[j];
                    let prev = gv(j + count - 1);
                    let next = gv(j + 1);
                    if gj.abs() <= et {
                        if prev.abs() <= et {
                            continue; // interior of a plateau, leftmost node handles it
                        }
                        let mut steps = 1usize;
                        while gv(j + steps).abs() <= et && steps < count {
                            steps += 1;
                        }
                        if steps >= count {
                            continue;
                        }
                        let a = self.grid.theta_offset(j, -1);
                        let b = self.grid.theta_offset(j, steps as i64);
                        let right = gv(j + steps);
                        let refined = if prev * right < 0.0 {
                            self.bisect_gap(k, l, a, b, prev)?
                        } else {
                            match self.bisect_gap_derivative(k, l, a, b)? {
                                Some(t) => t,
                                None => 0.5 * (a + b),
                            }
                        };
                        raw.push(self.snap(refined, k, l, et));
                    } else if gj * next < 0.0 && next.abs() > et {
                        let a = self.grid.theta(j);
                        let b = self.grid.theta(j + 1);
                        let t = self.bisect_gap(k, l, a, b, gj)?;
                        raw.push(self.snap(t, k, l, et));
                    } else if gj.abs() <= screen
                        && gj.abs() < prev.abs()
                        && gj.abs() <= next.abs()
                    {
                        // shallow dip: possibly a tangency between nodes
                        let a = self.grid.theta_offset(j, -1);
                        let b = self.grid.theta_offset(j, 1);
                        if let Some(t) = self.bisect_gap_derivative(k, l, a, b)? {
                            if self.gap_at(t, k, l)?.abs() <= et {
                                raw.push(self.snap(t, k, l, et));
                            }
                        }
                    }
                }
            }
        }

        // merge refined angles and rebuild the groups from the spectrum
        let mut ts: Vec<f64> = raw
            .into_iter()
            .map(|t| {
                let x = t.rem_euclid(TAU);
                if x > TAU - THETA_MERGE {
                    x - TAU
                } else {
                    x
                }
            })
            .collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut points = Vec::new();
        let mut i = 0;
        while i < ts.len() {
            let mut j = i + 1;
            while j < ts.len() && ts[j] - ts[j - 1] <= THETA_MERGE {
                j += 1;
            }
            let slice = &ts[i..j];
            let on_grid = slice
                .iter()
                .copied()
                .find(|&t| t == self.grid.theta(self.grid.nearest(t)));
            let rep = on_grid
                .unwrap_or_else(|| slice.iter().sum::<f64>() / slice.len() as f64)
                .rem_euclid(TAU);
            if let Some(pt) = self.collision_groups_at(rep, et, &ident_id)? {
                points.push(pt);
            }
            i = j;
        }
        points.dedup_by(|a, b| (a.theta - b.theta).abs() <= THETA_MERGE);

        Ok(ExceptionalReport { points, identical_groups })
    }

    /// Flat boundary portions: collisions attaining the support minimum
    /// whose derivative compression has a genuine eigenvalue spread. The
    /// segment endpoints are e^{i theta} (lambda + i c) for the extreme
    /// compression eigenvalues c.
    pub fn find_flat_portions(
        &self,
        report: &ExceptionalReport,
        tol: f64,
    ) -> Result<Vec<FlatPortion>> {
        let _ = tol;
        let n = self.n();
        let ftol = FLAT_SPREAD_TOL * (1.0 + self.pencil.scale());
        let mut flats = Vec::new();
        for pt in &report.points {
            let ms = self.eig_matched_at(pt.theta)?;
            for grp in &pt.groups {
                if !grp.attains_min || grp.branches.len() < 2 {
                    continue;
                }
                let m = grp.branches.len();
                let mut basis = ComplexMatrix::zeros(n, m);
                for (i, &k) in grp.branches.iter().enumerate() {
                    basis.set_column(i, &ms.vectors.column(k));
                }
                let d = self.pencil.derivative_at(pt.theta).compress(&basis);
                let de = eig_hermitian(&d)?;
                let spread = de.values[m - 1] - de.values[0];
                if spread > ftol {
                    let rot = Complex64::from_polar(1.0, pt.theta);
                    flats.push(FlatPortion {
                        theta: pt.theta,
                        branches: grp.branches.clone(),
                        support_value: grp.value,
                        derivative_values: de.values.clone(),
                        z_start: rot * Complex64::new(grp.value, de.values[0]),
                        z_end: rot * Complex64::new(grp.value, de.values[m - 1]),
                    });
                }
            }
        }
        flats.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());
        Ok(flats)
    }

    fn gap_at(&self, theta: f64, k: usize, l: usize) -> Result<f64> {
        let ms = self.eig_matched_at(theta)?;
        Ok(ms.values[k] - ms.values[l])
    }

    fn gap_derivative_at(&self, theta: f64, k: usize, l: usize) -> Result<f64> {
        let ms = self.eig_matched_at(theta)?;
        let d = self.pencil.derivative_at(theta);
        Ok(d.quadratic_form(&ms.vectors.column(k))
            - d.quadratic_form(&ms.vectors.column(l)))
    }

    fn bisect_gap(&self, k: usize, l: usize, a: f64, b: f64, fa: f64) -> Result<f64> {
        let mut lo = a;
        let mut hi = b;
        let lo_positive = fa > 0.0;
        for _ in 0..120 {
            if (hi - lo).abs() <= 1e-13 * (1.0 + lo.abs() + hi.abs()) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let fm = self.gap_at(mid, k, l)?;
            if fm == 0.0 {
                return Ok(mid);
            }
            if (fm > 0.0) == lo_positive {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn bisect_gap_derivative(
        &self,
        k: usize,
        l: usize,
        a: f64,
        b: f64,
    ) -> Result<Option<f64>> {
        let fa = self.gap_derivative_at(a, k, l)?;
        let fb = self.gap_derivative_at(b, k, l)?;
        if fa == 0.0 {
            return Ok(Some(a));
        }
        if fb == 0.0 {
            return Ok(Some(b));
        }
        if fa * fb > 0.0 {
            return Ok(None);
        }
        let mut lo = a;
        let mut hi = b;
        let lo_positive = fa > 0.0;
        for _ in 0..120 {
            if (hi - lo).abs() <= 1e-13 * (1.0 + lo.abs() + hi.abs()) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let fm = self.gap_derivative_at(mid, k, l)?;
            if fm == 0.0 {
                return Ok(Some(mid));
            }
            if (fm > 0.0) == lo_positive {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }

    /// Snap a refined collision angle onto the nearest grid node when the
    /// node itself already collides within tolerance.
    fn snap(&self, theta: f64, k: usize, l: usize, et: f64) -> f64 {
        let tn = theta.rem_euclid(TAU);
        let j = self.grid.nearest(tn);
        let tg = self.grid.theta(j);
        let mut d = (tn - tg).abs();
        d = d.min(TAU - d);
        if d <= THETA_SNAP && (self.values[j][k] - self.values[j][l]).abs() <= et {
            return tg;
        }
        theta
    }

    fn collision_groups_at(
        &self,
        theta: f64,
        et: f64,
        ident_id: &[usize],
    ) -> Result<Option<ExceptionalPoint>> {
        let ms = self.eig_matched_at(theta)?;
        let n = self.n();
        let gtol = 10.0 * et;
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| ms.values[a].partial_cmp(&ms.values[b]).unwrap());
        let min_val = ms.values[idx[0]];

        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            let split = i == n
                || ms.values[idx[i]] - ms.values[idx[i - 1]] > gtol;
            if !split {
                continue;
            }
            let members = &idx[start..i];
            start = i;
            if members.len() < 2 {
                continue;
            }
            let first_ident = ident_id[members[0]];
            let pure_identical = first_ident != usize::MAX
                && members.iter().all(|&k| ident_id[k] == first_ident);
            if pure_identical {
                continue; // not a collision, the same function listed twice
            }
            let value =
                members.iter().map(|&k| ms.values[k]).sum::<f64>() / members.len() as f64;
            let residual = ms.values[members[members.len() - 1]] - ms.values[members[0]];
            let mut branches = members.to_vec();
            branches.sort_unstable();
            groups.push(CollisionGroup {
                branches,
                value,
                residual,
                attains_min: value - min_val <= gtol,
            });
        }

        if groups.is_empty() {
            Ok(None)
        } else {
            Ok(Some(ExceptionalPoint { theta, groups }))
        }
    }
}

/// Minimal eigenvalue of the pencil at one angle, together with an
/// orthonormal basis of its eigenspace and the multiplicity, both taken
/// under the cluster tolerance `tol` scaled by the pencil norm.
pub fn support_data(
    pencil: &HermitianPencil,
    theta: f64,
    tol: f64,
) -> Result<(f64, ComplexMatrix, usize)> {
    let e = eig_hermitian(&pencil.at(theta))?;
    let et = tol * (1.0 + pencil.scale());
    let lambda_min = e.values[0];
    let m = e.values.iter().take_while(|&&v| v - lambda_min <= et).count();
    let n = pencil.n();
    let mut basis = ComplexMatrix::zeros(n, m);
    for j in 0..m {
        basis.set_column(j, &e.vector(j));
    }
    Ok((lambda_min, basis, m))
}

/// Ranges of equal-within-tol runs in an ascending value list.
fn clusters_of(values: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            out.push((start, i));
            start = i;
        }
    }
    out
}

/// Match freshly computed eigenpairs to the branch labels of a previous
/// vector set. Non-degenerate eigenvalues are assigned greedily by squared
/// overlap and phase-aligned; degenerate clusters are rotated as a block
/// onto the previous basis (the eigenvectors inside a cluster are only
/// defined up to a unitary mix, so alignment is the right notion there).
fn match_to(
    prev: &ComplexMatrix,
    eig: &EigenDecomposition,
    m: &HermitianMatrix,
    scale: f64,
    theta: f64,
) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = prev.n();
    let ctol = CLUSTER_TOL * (1.0 + scale);
    let clusters = clusters_of(&eig.values, ctol);

    let prev_cols: Vec<Vec<Complex64>> = (0..n).map(|k| prev.column(k)).collect();
    let new_cols: Vec<Vec<Complex64>> = (0..n).map(|l| eig.vectors.column(l)).collect();

    let mut w = vec![vec![0.0f64; clusters.len()]; n];
    for k in 0..n {
        for (ci, &(a, b)) in clusters.iter().enumerate() {
            for col in new_cols.iter().take(b).skip(a) {
                w[k][ci] += inner(&prev_cols[k], col).norm_sqr();
            }
        }
    }

    let mut order: Vec<(f64, usize, usize)> = Vec::with_capacity(n * clusters.len());
    for (k, row) in w.iter().enumerate() {
        for (ci, &wt) in row.iter().enumerate() {
            order.push((wt, k, ci));
        }
    }
    order.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut capacity: Vec<usize> = clusters.iter().map(|&(a, b)| b - a).collect();
    let mut assigned: Vec<Option<usize>> = vec![None; n];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); clusters.len()];
    for (_, k, ci) in order {
        if assigned[k].is_none() && capacity[ci] > 0 {
            assigned[k] = Some(ci);
            capacity[ci] -= 1;
            members[ci].push(k);
        }
    }

    for k in 0..n {
        let ci = assigned[k].expect("every branch is assigned");
        if w[k][ci] < OVERLAP_FLOOR {
            return Err(Error::GridTooCoarse {
                theta,
                detail: format!(
                    "branch {k} keeps squared overlap {:.3} across one step",
                    w[k][ci]
                ),
            });
        }
    }

    let mut values = vec![0.0f64; n];
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (ci, &(a, b)) in clusters.iter().enumerate() {
        let mut ks = members[ci].clone();
        ks.sort_unstable();
        if b - a == 1 {
            let k = ks[0];
            let mut col = new_cols[a].clone();
            let ph = inner(&prev_cols[k], &col);
            if ph.norm() > 1e-14 {
                let u = ph / ph.norm();
                for z in col.iter_mut() {
                    *z *= u.conj();
                }
            }
            values[k] = eig.values[a];
            vectors.set_column(k, &col);
        } else {
            let size = b - a;
            let mut pmat = ComplexMatrix::zeros(n, size);
            for (i, &k) in ks.iter().enumerate() {
                pmat.set_column(i, &prev_cols[k]);
            }
            let mut vmat = ComplexMatrix::zeros(n, size);
            for (i, l) in (a..b).enumerate() {
                vmat.set_column(i, &new_cols[l]);
            }
            let aligned = procrustes_align(&pmat, &vmat, theta)?;
            for (i, &k) in ks.iter().enumerate() {
                let col = aligned.column(i);
                values[k] = m.quadratic_form(&col);
                vectors.set_column(k, &col);
            }
        }
    }

    Ok((values, vectors))
}

/// Rotate the columns of `v` by a unitary so they are as close as possible
/// to the columns of `p` (both orthonormal, same span up to perturbation).
fn procrustes_align(
    p: &ComplexMatrix,
    v: &ComplexMatrix,
    theta: f64,
) -> Result<ComplexMatrix> {
    let m = p.cols();
    let c = v.adjoint().mul(p);
    let ctc = HermitianMatrix::symmetrize(&c.adjoint().mul(&c));
    let e = eig_hermitian(&ctc)?;
    let sigma_min = e.values[0].max(0.0).sqrt();
    if sigma_min < 1e-3 {
        return Err(Error::GridTooCoarse {
            theta,
            detail: format!(
                "degenerate cluster of size {m} lost alignment (sigma_min = {sigma_min:.2e})"
            ),
        });
    }
    let wv = &e.vectors;
    let mut u = c.mul(wv);
    for i in 0..m {
        let s = e.values[i].max(0.0).sqrt();
        for r in 0..m {
            u[(r, i)] /= s;
        }
    }
    let q = u.mul(&wv.adjoint());
    Ok(v.mul(&q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::hermitian_parts;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn seeded_matrix(n: usize, seed: u64) -> ComplexMatrix {
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
        m
    }

    fn jordan2() -> ComplexMatrix {
        ComplexMatrix::from_re_im(&[
            vec![(0.0, 0.0), (1.0, 0.0)],
            vec![(0.0, 0.0), (0.0, 0.0)],
        ])
        .unwrap()
    }

    /// H = diag(0, 0, 1, 1) and K coupling the two blocks, the degenerate
    /// tangency workhorse used across the crate.
    fn tangent_pair_matrix() -> ComplexMatrix {
        crate::corpus::example1(2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn jordan_block_boundary_is_a_circle() {
        let set =
            EigenBranchSet::trace(HermitianPencil::from_matrix(&jordan2()), 512).unwrap();
        for j in 0..=512 {
            let theta = set.grid().theta(j);
            assert!((set.value(j, 0) + 0.5).abs() < 1e-12);
            assert!((set.value(j, 1) - 0.5).abs() < 1e-12);
            let z = set.curve_point(j, set.min_branch(j));
            let expected = -Complex64::from_polar(0.5, theta);
            assert!((z - expected).norm() < 1e-10, "j = {j}");
        }
        assert_eq!(set.wrap(), &[0, 1]);
        assert!((set.min_support_gap() - 1.0).abs() < 1e-12);
        let report = set.find_exceptional_points(1e-9).unwrap();
        assert!(report.points.is_empty());
        assert!(report.identical_groups.is_empty());
    }

    #[test]
    fn nilpotent_chain_needs_a_fine_grid() {
        let mut a = ComplexMatrix::zeros(6, 6);
        for i in 0..5 {
            a[(i, i + 1)] = c(1.0, 0.0);
        }
        let pencil = HermitianPencil::from_matrix(&a);
        // eigenvectors carry phases e^{i j theta}, so six steps around the
        // circle rotate them past recognition
        match EigenBranchSet::trace(pencil.clone(), 6) {
            Err(Error::GridTooCoarse { .. }) => {}
            other => panic!("expected GridTooCoarse, got {:?}", other.is_ok()),
        }
        let set = EigenBranchSet::trace(pencil, 512).unwrap();
        let r = (std::f64::consts::PI / 7.0).cos();
        for j in (0..512).step_by(37) {
            let z = set.curve_point(j, set.min_branch(j));
            let expected = -Complex64::from_polar(r, set.grid().theta(j));
            assert!((z - expected).norm() < 1e-8);
        }
    }

    #[test]
    fn normal_matrix_flats_and_collisions() {
        let a = ComplexMatrix::from_re_im(&[
            vec![(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)],
            vec![(0.0, 0.0), (0.0, 1.0), (0.0, 0.0), (0.0, 0.0)],
            vec![(0.0, 0.0), (0.0, 0.0), (-1.0, 0.0), (0.0, 0.0)],
            vec![(0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, -1.0)],
        ])
        .unwrap();
        let set = EigenBranchSet::trace(HermitianPencil::from_matrix(&a), 1024).unwrap();
        let report = set.find_exceptional_points(1e-9).unwrap();

        // branches are cos, sin, -cos, -sin: collisions at every multiple
        // of pi/4, those at odd multiples attain the minimum in pairs
        assert_eq!(report.points.len(), 8);
        for pt in &report.points {
            let j = set.grid().nearest(pt.theta);
            assert_eq!(pt.theta, set.grid().theta(j), "snapped to the grid");
        }
        let odd: Vec<&ExceptionalPoint> = report
            .points
            .iter()
            .filter(|pt| pt.groups.iter().any(|g| g.attains_min))
            .collect();
        assert_eq!(odd.len(), 4);
        for pt in &odd {
            assert_eq!(pt.groups.len(), 2);
        }

        let flats = set.find_flat_portions(&report, 1e-9).unwrap();
        assert_eq!(flats.len(), 4);
        let first = &flats[0];
        assert!((first.theta - TAU / 8.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((first.support_value + s).abs() < 1e-9);
        assert!((first.derivative_values[0] + s).abs() < 1e-9);
        assert!((first.derivative_values[1] - s).abs() < 1e-9);
        // the flat between the eigenvalues -1 and -i
        let endpoints = [first.z_start, first.z_end];
        assert!(endpoints.iter().any(|z| (z - c(-1.0, 0.0)).norm() < 1e-7));
        assert!(endpoints.iter().any(|z| (z - c(0.0, -1.0)).norm() < 1e-7));
        assert!((first.length() - 2.0f64.sqrt()).abs() < 1e-7);

        assert!(set.min_support_gap() < 1e-12);
    }

    #[test]
    fn tangency_detected_exactly_at_zero() {
        let a = tangent_pair_matrix();
        let set = EigenBranchSet::trace(HermitianPencil::from_matrix(&a), 2048).unwrap();
        let report = set.find_exceptional_points(1e-9).unwrap();

        let at_zero = report
            .points
            .iter()
            .find(|pt| pt.theta == 0.0)
            .expect("collision at theta = 0");
        assert_eq!(at_zero.groups.len(), 2);
        let low = &at_zero.groups[0];
        assert_eq!(low.branches, vec![0, 1]);
        assert!(low.value.abs() < 1e-9);
        assert!(low.attains_min);
        let high = &at_zero.groups[1];
        assert_eq!(high.branches, vec![2, 3]);
        assert!((high.value - 1.0).abs() < 1e-9);
        assert!(!high.attains_min);

        // the tangency at 0 has zero derivative spread (no flat); the
        // crossing pair at pi does spread, giving the segment 1 -+ i
        let flats = set.find_flat_portions(&report, 1e-9).unwrap();
        assert!(!flats.is_empty());
        for f in &flats {
            assert!(
                (f.theta - std::f64::consts::PI).abs() < 1e-9,
                "unexpected flat at theta = {}",
                f.theta
            );
        }
        let f = &flats[0];
        let endpoints = [f.z_start, f.z_end];
        assert!(endpoints.iter().any(|z| (z - c(1.0, 1.0)).norm() < 1e-7));
        assert!(endpoints.iter().any(|z| (z - c(1.0, -1.0)).norm() < 1e-7));
    }

    #[test]
    fn identical_pair_reported_not_collided() {
        let mut a = ComplexMatrix::zeros(4, 4);
        a[(0, 1)] = c(1.0, 0.0);
        a[(2, 3)] = c(1.0, 0.0);
        let set = EigenBranchSet::trace(HermitianPencil::from_matrix(&a), 512).unwrap();
        let report = set.find_exceptional_points(1e-9).unwrap();
        assert_eq!(report.identical_groups, vec![vec![0, 1], vec![2, 3]]);
        assert!(report.points.is_empty());
        assert!(set.find_flat_portions(&report, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn half_turn_negates_the_spectrum() {
        let a = seeded_matrix(5, 2024);
        let set = EigenBranchSet::trace(HermitianPencil::from_matrix(&a), 720).unwrap();
        let tol = 1e-9 * (1.0 + set.pencil().scale());
        for j in 0..360 {
            let mut here: Vec<f64> = set.values_at(j).to_vec();
            let mut there: Vec<f64> =
                set.values_at(j + 360).iter().map(|v| -v).collect();
            here.sort_by(|x, y| x.partial_cmp(y).unwrap());
            there.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (x, y) in here.iter().zip(&there) {
                assert!((x - y).abs() <= tol, "j = {j}");
            }
        }
    }

    #[test]
    fn branch_steps_bounded_by_pencil_scale() {
        let a = seeded_matrix(6, 77);
        let set = EigenBranchSet::trace(HermitianPencil::from_matrix(&a), 512).unwrap();
        let bound = set.pencil().scale() * set.grid().delta() * 1.01 + 1e-9;
        for j in 0..512 {
            for k in 0..6 {
                let step = (set.value(j + 1, k) - set.value(j, k)).abs();
                assert!(step <= bound, "j = {j}, k = {k}, step = {step}");
            }
        }
    }

    #[test]
    fn matched_spectrum_agrees_with_grid() {
        let a = seeded_matrix(4, 4096);
        let set = EigenBranchSet::trace(HermitianPencil::from_matrix(&a), 360).unwrap();
        let ms = set.eig_matched_at(set.grid().theta(17)).unwrap();
        for k in 0..4 {
            assert!((ms.values[k] - set.value(17, k)).abs() < 1e-10);
        }
        // off-grid values stay between the neighbouring grid samples up to
        // the Lipschitz bound
        let mid = set.grid().theta_offset(100, 0) + 0.5 * set.grid().delta();
        let ms = set.eig_matched_at(mid).unwrap();
        let lip = set.pencil().scale() * set.grid().delta();
        for k in 0..4 {
            assert!((ms.values[k] - set.value(100, k)).abs() <= lip);
        }
        // derivatives from the matched vectors track finite differences
        let dv = ms.derivative_values(set.pencil());
        let h = 1e-6;
        let up = set.eig_matched_at(mid + h).unwrap();
        let down = set.eig_matched_at(mid - h).unwrap();
        for k in 0..4 {
            let fd = (up.values[k] - down.values[k]) / (2.0 * h);
            assert!((dv[k] - fd).abs() < 1e-5);
        }
    }

    #[test]
    fn hermitian_input_keeps_real_axis_boundary() {
        // hermitian matrix: numerical range is a real interval, branches
        // are cosine multiples
        let m = seeded_matrix(3, 9);
        let (h, _) = hermitian_parts(&m);
        let a = h.as_complex().clone();
        let set = EigenBranchSet::trace(HermitianPencil::from_matrix(&a), 512).unwrap();
        for j in (0..=512).step_by(11) {
            let z = set.curve_point(j, set.min_branch(j));
            assert!(z.im.abs() < 1e-9);
        }
    }
}
