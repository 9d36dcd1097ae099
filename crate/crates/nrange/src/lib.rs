//! Numerical range boundary analysis.
//!
//! For a complex square matrix A the numerical range F(A) is the set of
//! values x*Ax over unit vectors x. Its boundary is swept by eigenvalue
//! branches of the rotated real part Re(e^{-i theta} A): for each support
//! angle theta the minimal eigenvalue marks the supporting line, and the
//! curve traced by the corresponding eigenvectors generates the boundary.
//!
//! This crate traces those branches around the full circle, locates the
//! exceptional angles where branches collide, measures how the colliding
//! eigenvalue functions split (the splitting order), classifies boundary
//! points (corner, flat side, round arc), and from that decides whether the
//! inverse of the boundary map x -> x*Ax is strongly or weakly continuous
//! at each point of interest. A small CLI (`nrange`) exposes the analysis,
//! CSV/SVG export, and a Monte Carlo probe that tests the continuity
//! verdicts empirically.

pub mod error;
pub mod matrix;
pub mod eig;
pub mod branches;
pub mod corpus;
pub mod perturb;

pub use error::{Error, Result};
pub use matrix::{Complex64, ComplexMatrix, HermitianMatrix, HermitianPencil};
pub use eig::{eig_hermitian, is_unitarily_irreducible, pd_inverse, EigenDecomposition};
pub use branches::{
    support_data, AngleGrid, CollisionGroup, EigenBranchSet, ExceptionalPoint,
    ExceptionalReport, FlatPortion, MatchedSpectrum,
};
pub use perturb::{
    exact_low_order_coefficients, fit_split_order, reduction_chain, weak_criterion,
    ExactCoefficients, NormalForm, PairSplit, ReductionChain, SplitParity, SplitReport,
    WeakCriterion,
};
