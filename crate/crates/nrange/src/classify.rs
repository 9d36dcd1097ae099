//! Boundary point taxonomy and inverse-continuity verdicts.
//!
//! The boundary map sends a unit vector x to x*Ax. Away from flat portions
//! and branch collisions its multivalued inverse behaves tamely, so the
//! analysis concentrates on a finite candidate set: boundary points carved
//! out at exceptional angles by the minimal branch group, plus the
//! endpoints of flat portions. Every candidate receives a strong and a weak
//! continuity verdict with the clause that decided it:
//!
//! * strong holds at flat interiors, at non-round points, and wherever the
//!   branches corresponding to the point do not split;
//! * weak holds on flat portions (endpoints included) and wherever one
//!   branch stays minimal on both sides of the support angle, which is the
//!   no-odd-split condition in operational form.

use std::collections::HashSet;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::branches::{CollisionGroup, EigenBranchSet, ExceptionalReport, FlatPortion};
use crate::config::RunConfig;
use crate::eig::{eig_hermitian, is_unitarily_irreducible};
use crate::error::{Error, Result};
use crate::matrix::{matrix_to_json, ComplexMatrix, HermitianPencil};
use crate::perturb::{fit_split_order, weak_criterion, NormalForm, SplitParity, SplitReport};

/// Relative tolerance for point-to-point geometry on the traced boundary.
const GEO_TOL: f64 = 1e-7;

/// Relative tolerance for clustering branch derivatives into cells sharing
/// one boundary point. Matches the flat-portion spread threshold.
const CELL_TOL: f64 = 1e-6;

/// Relative tolerance for "this point lies on its support line".
const ON_LINE_TOL: f64 = 1e-7;

pub const CLAUSE_NON_ROUND: &str = "non-round";
pub const CLAUSE_FLAT_INTERIOR: &str = "flat-interior";
pub const CLAUSE_NO_SPLIT: &str = "no-split";
pub const CLAUSE_EVEN_SPLIT: &str = "even-split";
pub const CLAUSE_ODD_SPLIT: &str = "odd-split";
pub const CLAUSE_FLAT_ENDPOINT: &str = "flat-endpoint";
pub const CLAUSE_GENERIC: &str = "non-round-or-generic";

/// Local shape of the boundary at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointKind {
    Corner,
    FlatInterior,
    FlatEndpoint,
    FullyRound,
}

impl PointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::Corner => "corner",
            PointKind::FlatInterior => "flat_interior",
            PointKind::FlatEndpoint => "flat_endpoint",
            PointKind::FullyRound => "fully_round",
        }
    }
}

/// A classified boundary point with its continuity verdicts.
#[derive(Clone, Debug)]
pub struct BoundaryPoint {
    pub z: Complex64,
    pub theta0: f64,
    pub kind: PointKind,
    /// Eigenvalue multiplicity of the support minimum at theta0.
    pub multiplicity: usize,
    /// Branch labels of the cell generating this point.
    pub branches: Vec<usize>,
    pub multiply_generated: bool,
    /// Isolated within the set of multiply generated boundary points.
    pub isolated_mg: bool,
    pub split_order: Option<usize>,
    pub parity: Option<SplitParity>,
    pub strong: bool,
    pub weak: bool,
    pub clause: String,
    pub flags: Vec<String>,
}

impl BoundaryPoint {
    fn to_json(&self) -> Value {
        json!({
            "z": {"re": self.z.re, "im": self.z.im},
            "theta0": self.theta0,
            "kind": self.kind.as_str(),
            "multiplicity": self.multiplicity,
            "branches": self.branches,
            "multiply_generated": self.multiply_generated,
            "isolated_mg": self.isolated_mg,
            "split": {
                "order": self.split_order,
                "parity": self.parity.map(SplitParity::as_str),
            },
            "strong": verdict_str(self.strong),
            "weak": verdict_str(self.weak),
            "clause": self.clause,
            "flags": self.flags,
        })
    }
}

fn verdict_str(holds: bool) -> &'static str {
    if holds {
        "holds"
    } else {
        "fails"
    }
}

/// Serializable result of a full boundary analysis.
#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub matrix: Value,
    pub irreducible: bool,
    pub flat_portions: Vec<FlatPortion>,
    pub candidates: Vec<BoundaryPoint>,
    pub notes: Vec<String>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> Value {
        let flats: Vec<Value> = self
            .flat_portions
            .iter()
            .map(|f| {
                json!({
                    "theta": f.theta,
                    "start": {"re": f.z_start.re, "im": f.z_start.im},
                    "end": {"re": f.z_end.re, "im": f.z_end.im},
                    "branches": f.branches,
                    "length": f.length(),
                })
            })
            .collect();
        json!({
            "matrix": self.matrix,
            "irreducible": self.irreducible,
            "flat_portions": flats,
            "candidates": self.candidates.iter().map(BoundaryPoint::to_json).collect::<Vec<_>>(),
            "elsewhere": {
                "strong": "holds",
                "weak": "holds",
                "clause": CLAUSE_GENERIC,
            },
            "notes": self.notes,
        })
    }
}

/// Full analysis state: the traced branches plus the derived report.
#[derive(Clone, Debug)]
pub struct BoundaryAnalysis {
    pub set: EigenBranchSet,
    pub exceptional: ExceptionalReport,
    pub report: AnalysisReport,
}

impl BoundaryAnalysis {
    pub fn flats(&self) -> &[FlatPortion] {
        &self.report.flat_portions
    }
}

/// Traces the branches of `a` and classifies every continuity-failure
/// candidate on the boundary.
pub fn analyze_all(a: &ComplexMatrix, cfg: &RunConfig) -> Result<BoundaryAnalysis> {
    cfg.validate()?;
    let set = EigenBranchSet::trace(HermitianPencil::from_matrix(a), cfg.grid_count)?;
    analyze_traced(a, set, cfg)
}

/// Classification pipeline on an already traced branch set.
pub fn analyze_traced(
    a: &ComplexMatrix,
    set: EigenBranchSet,
    cfg: &RunConfig,
) -> Result<BoundaryAnalysis> {
    let exceptional = set.find_exceptional_points(cfg.tol)?;
    let flats = set.find_flat_portions(&exceptional, cfg.tol)?;
    let irreducible = is_unitarily_irreducible(a, cfg.tol)?;
    let gtol = geometry_tol(&set);

    let ident: HashSet<usize> =
        exceptional.identical_groups.iter().flatten().copied().collect();

    let mut candidates = Vec::new();
    for pt in &exceptional.points {
        for grp in &pt.groups {
            if !grp.attains_min || grp.branches.len() < 2 {
                continue;
            }
            candidates.extend(group_candidates(a, &set, pt.theta, grp, &flats, gtol, cfg)?);
        }
    }
    dedupe(&mut candidates, 10.0 * gtol);
    for c in &mut candidates {
        c.isolated_mg = c.multiply_generated
            && c.kind == PointKind::FullyRound
            && !c.branches.iter().any(|k| ident.contains(k));
    }
    candidates.sort_by(|p, q| {
        (p.theta0, p.z.im)
            .partial_cmp(&(q.theta0, q.z.im))
            .unwrap()
    });

    let mut notes = Vec::new();
    for g in &exceptional.identical_groups {
        notes.push(format!(
            "branches {g:?} coincide along the whole circle; every boundary point \
             they generate is multiply generated and none of them is isolated"
        ));
    }

    let matrix: Value = serde_json::from_str(&matrix_to_json(a)?)
        .map_err(|e| Error::Internal(format!("matrix echo: {e}")))?;
    let report = AnalysisReport { matrix, irreducible, flat_portions: flats, candidates, notes };
    Ok(BoundaryAnalysis { set, exceptional, report })
}

/// Lists every candidate violating the rule that strong continuity fails at
/// isolated, fully round, multiply generated points. Non-empty output means
/// the classifier and the theory disagree, which is a bug sentinel.
pub fn crosscheck_verdicts(report: &AnalysisReport) -> Vec<String> {
    report
        .candidates
        .iter()
        .filter(|c| {
            c.isolated_mg
                && c.kind == PointKind::FullyRound
                && c.multiply_generated
                && c.strong
        })
        .map(|c| {
            format!(
                "strong continuity reported to hold at the isolated multiply generated \
                 round point ({:.6}, {:.6})",
                c.z.re, c.z.im
            )
        })
        .collect()
}

/// Classifies one boundary point of `a`, reusing a finished analysis.
///
/// The point must lie on the boundary of the numerical range; interior and
/// exterior points are rejected with the support-line offset in the error.
pub fn classify_boundary_point(
    a: &ComplexMatrix,
    analysis: &BoundaryAnalysis,
    z: Complex64,
    cfg: &RunConfig,
) -> Result<BoundaryPoint> {
    let set = &analysis.set;
    let gtol = geometry_tol(set);
    if let Some(c) = analysis
        .report
        .candidates
        .iter()
        .find(|c| (c.z - z).norm() <= 10.0 * gtol)
    {
        return Ok(c.clone());
    }

    let flats = analysis.flats();
    let theta0 = support_angle(set, z)?;
    let pencil = set.pencil();
    let scale = pencil.scale();
    let et = cfg.tol * (1.0 + scale);

    let ms = set.eig_matched_at(theta0)?;
    let lambda_min = ms
        .values
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v));
    let min_branches: Vec<usize> = (0..set.n())
        .filter(|&k| ms.values[k] - lambda_min <= et)
        .collect();
    let m = min_branches.len();
    let kind = kind_at(z, flats, gtol);

    match kind {
        PointKind::Corner => {
            let mg = multiply_generated(a, z, theta0, m, kind, scale);
            Ok(BoundaryPoint {
                z,
                theta0,
                kind,
                multiplicity: m,
                branches: min_branches,
                multiply_generated: mg,
                isolated_mg: false,
                split_order: None,
                parity: None,
                strong: true,
                weak: true,
                clause: CLAUSE_NON_ROUND.into(),
                flags: Vec::new(),
            })
        }
        PointKind::FlatInterior => Ok(BoundaryPoint {
            z,
            theta0,
            kind,
            multiplicity: m,
            branches: min_branches,
            multiply_generated: m >= 2,
            isolated_mg: false,
            split_order: None,
            parity: None,
            strong: true,
            weak: true,
            clause: CLAUSE_FLAT_INTERIOR.into(),
            flags: Vec::new(),
        }),
        PointKind::FlatEndpoint | PointKind::FullyRound => {
            if m == 1 {
                return Ok(BoundaryPoint {
                    z,
                    theta0,
                    kind,
                    multiplicity: 1,
                    branches: min_branches,
                    multiply_generated: false,
                    isolated_mg: false,
                    split_order: None,
                    parity: None,
                    strong: true,
                    weak: true,
                    clause: CLAUSE_NO_SPLIT.into(),
                    flags: Vec::new(),
                });
            }
            // A degenerate support minimum away from the candidate list:
            // either an identical-branch doubling or a collision we are
            // being asked about directly. Fit the group and pick the cell
            // whose curve point is z.
            let fit =
                fit_split_order(set, theta0, &min_branches, cfg.max_split_order, cfg.fit_delta)?;
            let cells = cells_by_slope(&fit, set);
            let rot = Complex64::from_polar(1.0, theta0);
            let cell = cells
                .iter()
                .min_by(|p, q| {
                    let zp = rot * Complex64::new(lambda_min, slope_mean(&fit, p));
                    let zq = rot * Complex64::new(lambda_min, slope_mean(&fit, q));
                    (zp - z).norm().partial_cmp(&(zq - z).norm()).unwrap()
                })
                .cloned()
                .unwrap_or_else(|| (0..min_branches.len()).collect());
            let grp = CollisionGroup {
                branches: min_branches,
                value: lambda_min,
                residual: 0.0,
                attains_min: true,
            };
            let ident: HashSet<usize> = analysis
                .exceptional
                .identical_groups
                .iter()
                .flatten()
                .copied()
                .collect();
            let mut bp = cell_candidate(a, set, theta0, &grp, &fit, &cell, flats, gtol, cells.len())?;
            bp.isolated_mg = bp.multiply_generated
                && bp.kind == PointKind::FullyRound
                && !bp.branches.iter().any(|k| ident.contains(k));
            Ok(bp)
        }
    }
}

/// Support angle of a boundary point: the angle maximizing the signed
/// distance from the rotated point to the support minimum. Rejects points
/// that end up strictly inside or outside the range.
pub fn support_angle(set: &EigenBranchSet, z: Complex64) -> Result<f64> {
    let grid = set.grid();
    let count = grid.count();
    let h_node = |j: usize| {
        let t = grid.theta(j);
        (z * Complex64::from_polar(1.0, -t)).re - set.support_minimum(j)
    };
    let mut best = 0;
    let mut best_h = f64::NEG_INFINITY;
    for j in 0..count {
        let h = h_node(j);
        if h > best_h {
            best_h = h;
            best = j;
        }
    }

    let pencil = set.pencil();
    let h_at = |t: f64| -> Result<f64> {
        let e = eig_hermitian(&pencil.at(t))?;
        Ok((z * Complex64::from_polar(1.0, -t)).re - e.values[0])
    };
    let mut lo = grid.theta_offset(best, -1);
    let mut hi = grid.theta_offset(best, 1);
    for _ in 0..90 {
        let t1 = lo + (hi - lo) / 3.0;
        let t2 = hi - (hi - lo) / 3.0;
        if h_at(t1)? < h_at(t2)? {
            lo = t1;
        } else {
            hi = t2;
        }
    }
    let theta0 = 0.5 * (lo + hi);
    let offset = h_at(theta0)?;
    let tol = ON_LINE_TOL * (1.0 + pencil.scale());
    if offset.abs() > tol {
        return Err(Error::NotOnSupportLine {
            re: z.re,
            im: z.im,
            theta: theta0,
            offset: offset.abs(),
            tol,
        });
    }
    Ok(theta0.rem_euclid(std::f64::consts::TAU))
}

fn geometry_tol(set: &EigenBranchSet) -> f64 {
    let poly = set.boundary_polyline();
    let mut diam = 0.0f64;
    for p in &poly {
        for q in [poly[0], poly[poly.len() / 2]] {
            diam = diam.max((p - q).norm());
        }
    }
    GEO_TOL * (1.0 + diam)
}

fn dist_to_segment(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let den = ab.norm_sqr();
    if den == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / den).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

/// Decides the local boundary shape at `z` from the flat-portion list.
pub fn kind_at(z: Complex64, flats: &[FlatPortion], gtol: f64) -> PointKind {
    let mut endpoint_hits = 0usize;
    let mut interior_hit = false;
    for f in flats {
        let d_start = (z - f.z_start).norm();
        let d_end = (z - f.z_end).norm();
        if d_start.min(d_end) <= gtol {
            endpoint_hits += 1;
            continue;
        }
        if dist_to_segment(z, f.z_start, f.z_end) <= gtol {
            interior_hit = true;
        }
    }
    if endpoint_hits >= 2 {
        PointKind::Corner
    } else if interior_hit {
        PointKind::FlatInterior
    } else if endpoint_hits == 1 {
        PointKind::FlatEndpoint
    } else {
        PointKind::FullyRound
    }
}

/// Whether the preimage of `z` spans more than one complex dimension:
/// flat interiors with a degenerate support minimum always do, otherwise
/// the kernel compression of the shifted imaginary part must vanish in at
/// least two directions.
fn multiply_generated(
    a: &ComplexMatrix,
    z: Complex64,
    theta0: f64,
    m: usize,
    kind: PointKind,
    scale: f64,
) -> bool {
    if m < 2 {
        return false;
    }
    if kind == PointKind::FlatInterior {
        return true;
    }
    let nf = match NormalForm::new(a, z, theta0, CELL_TOL) {
        Ok(nf) => nf,
        Err(_) => return false,
    };
    let k00 = nf.k00();
    let e = match eig_hermitian(&k00) {
        Ok(e) => e,
        Err(_) => return false,
    };
    let zero_tol = CELL_TOL * (1.0 + scale);
    e.values.iter().filter(|v| v.abs() <= zero_tol).count() >= 2
}

/// Splits fit rows into cells of equal first-order coefficient. Returns
/// positions into the fit's branch list, cells ordered by ascending slope.
fn cells_by_slope(fit: &SplitReport, set: &EigenBranchSet) -> Vec<Vec<usize>> {
    let g = fit.branches.len();
    let tol = fit.threshold[1].max(CELL_TOL * (1.0 + set.pencil().scale()));
    let mut order: Vec<usize> = (0..g).collect();
    order.sort_by(|&p, &q| fit.coefficients[p][1].partial_cmp(&fit.coefficients[q][1]).unwrap());
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for pos in order {
        match cells.last_mut() {
            Some(cell)
                if fit.coefficients[pos][1] - fit.coefficients[*cell.last().unwrap()][1]
                    <= tol =>
            {
                cell.push(pos);
            }
            _ => cells.push(vec![pos]),
        }
    }
    cells
}

fn slope_mean(fit: &SplitReport, cell: &[usize]) -> f64 {
    cell.iter().map(|&p| fit.coefficients[p][1]).sum::<f64>() / cell.len() as f64
}

/// First order at which the cell's own coefficients separate, ignoring the
/// shared slope.
fn cell_split(fit: &SplitReport, cell: &[usize]) -> (Option<usize>, Option<SplitParity>) {
    if cell.len() < 2 {
        return (None, None);
    }
    let cols = fit.coefficients[0].len();
    for p in 2..cols {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &pos in cell {
            lo = lo.min(fit.coefficients[pos][p]);
            hi = hi.max(fit.coefficients[pos][p]);
        }
        if hi - lo > fit.threshold[p] {
            let parity = if p % 2 == 0 { SplitParity::Even } else { SplitParity::Odd };
            return (Some(p), Some(parity));
        }
    }
    (None, None)
}

/// All boundary points one minimal collision group generates, classified.
fn group_candidates(
    a: &ComplexMatrix,
    set: &EigenBranchSet,
    theta: f64,
    grp: &CollisionGroup,
    flats: &[FlatPortion],
    gtol: f64,
    cfg: &RunConfig,
) -> Result<Vec<BoundaryPoint>> {
    let fit = fit_split_order(set, theta, &grp.branches, cfg.max_split_order, cfg.fit_delta)?;
    let cells = cells_by_slope(&fit, set);
    let mut out = Vec::with_capacity(cells.len());
    for cell in &cells {
        out.push(cell_candidate(a, set, theta, grp, &fit, cell, flats, gtol, cells.len())?);
    }
    Ok(out)
}

/// Builds the classified record for one cell of a collision group.
#[allow(clippy::too_many_arguments)]
fn cell_candidate(
    a: &ComplexMatrix,
    set: &EigenBranchSet,
    theta: f64,
    grp: &CollisionGroup,
    fit: &SplitReport,
    cell: &[usize],
    flats: &[FlatPortion],
    gtol: f64,
    cell_count: usize,
) -> Result<BoundaryPoint> {
    let scale = set.pencil().scale();
    let rot = Complex64::from_polar(1.0, theta);
    let z = rot * Complex64::new(grp.value, slope_mean(fit, cell));
    let branches: Vec<usize> = cell.iter().map(|&p| fit.branches[p]).collect();
    let kind = kind_at(z, flats, gtol);
    let mut flags = Vec::new();

    // Whole-group data decides round points; cell-restricted data decides
    // flat endpoints, where the flat family already settles weak.
    let (split_order, parity, strong, weak, clause) = if cell_count == 1 {
        if kind != PointKind::FullyRound {
            flags.push(format!(
                "single-cell collision classified as {} by the flat geometry",
                kind.as_str()
            ));
        }
        let strong = fit.split_order.is_none();
        let mut weak = fit.minimal_branch_same_both_sides;
        let parity_weak = fit.parity != Some(SplitParity::Odd);
        if weak != parity_weak {
            flags.push(format!(
                "parity-minimal-branch-disagreement: group parity {:?} vs shared minimal \
                 branch {}",
                fit.parity.map(SplitParity::as_str),
                weak
            ));
        }
        if strong && !weak {
            weak = true;
            flags.push("strong-implies-weak-enforced".into());
        }
        let clause = if strong {
            CLAUSE_NO_SPLIT
        } else if weak {
            CLAUSE_EVEN_SPLIT
        } else {
            CLAUSE_ODD_SPLIT
        };
        (fit.split_order, fit.parity, strong, weak, clause)
    } else {
        let (order, parity) = cell_split(fit, cell);
        match kind {
            PointKind::Corner => (order, parity, true, true, CLAUSE_NON_ROUND),
            PointKind::FlatInterior => (order, parity, true, true, CLAUSE_FLAT_INTERIOR),
            _ => {
                if kind == PointKind::FullyRound {
                    flags.push(
                        "cell of a flat-generating group not matched to a flat portion".into(),
                    );
                }
                let strong = order.is_none();
                let clause = if strong {
                    CLAUSE_NO_SPLIT
                } else if parity == Some(SplitParity::Even) {
                    CLAUSE_EVEN_SPLIT
                } else {
                    CLAUSE_FLAT_ENDPOINT
                };
                (order, parity, strong, true, clause)
            }
        }
    };

    let m = grp.branches.len();
    let mg = multiply_generated(a, z, theta, m, kind, scale);

    // Corroborate round multiply generated points with the spectral-gap
    // test on the coupling block when its preconditions hold.
    if kind == PointKind::FullyRound && mg {
        match weak_criterion(a, z, theta, CELL_TOL) {
            Ok(w) => {
                if w.sufficient_weak && !weak {
                    flags.push("block-gap-disagreement: gap criterion says weak holds".into());
                } else if !w.sufficient_weak && w.exact_for_dim4 && weak {
                    flags.push(
                        "block-gap-disagreement: zero gap is decisive in dimension 4".into(),
                    );
                } else if w.sufficient_weak {
                    flags.push("block-gap-sufficient".into());
                } else if w.exact_for_dim4 {
                    flags.push("block-gap-necessary-dim4".into());
                }
            }
            Err(_) => flags.push("block-gap-unavailable".into()),
        }
    }

    Ok(BoundaryPoint {
        z,
        theta0: theta,
        kind,
        multiplicity: m,
        branches,
        multiply_generated: mg,
        isolated_mg: false,
        split_order,
        parity,
        strong,
        weak,
        clause: clause.into(),
        flags,
    })
}

/// Merges candidates that are the same boundary point, e.g. a corner seen
/// as an endpoint of two different flats.
fn dedupe(cands: &mut Vec<BoundaryPoint>, tol: f64) {
    let mut i = 0;
    while i < cands.len() {
        let mut j = i + 1;
        while j < cands.len() {
            if (cands[i].z - cands[j].z).norm() <= tol {
                let other = cands.remove(j);
                let keep = &mut cands[i];
                if other.kind == PointKind::Corner {
                    keep.kind = PointKind::Corner;
                    keep.strong = true;
                    keep.weak = true;
                    keep.clause = CLAUSE_NON_ROUND.into();
                }
                for f in other.flags {
                    if !keep.flags.contains(&f) {
                        keep.flags.push(f);
                    }
                }
                for b in other.branches {
                    if !keep.branches.contains(&b) {
                        keep.branches.push(b);
                    }
                }
                keep.branches.sort_unstable();
            } else {
                j += 1;
            }
        }
        i += 1;
    }
}
