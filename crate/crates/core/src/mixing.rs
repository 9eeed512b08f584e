//! Choice of the mixing step ε.
//!
//! For `W(t) = I − ε L̃(t)` the expected squared mixing matrix is
//! `E[W²] = I − 2ε E[L̃] + ε² E[L̃ᵀL̃]`, and the design objective is
//!
//! ```text
//! s(ε) = λ_max(E[W²] − J),   J = u uᵀ / N.
//! ```
//!
//! Every realization satisfies `W²(t) − J = (W(t) − J)² ⪰ 0`, so `s ≥ 0`.
//! For fixed unit `x` the Rayleigh quotient is a convex quadratic in ε
//! (its ε² coefficient `xᵀE[L̃ᵀL̃]x` is nonnegative), so `s` is a supremum
//! of convex functions and a golden-section search finds its minimum.

use crate::error::MixingError;
use crate::graph::Topology;
use crate::linalg::{lambda_max, symmetric_eigenvalues, Matrix};
use crate::moments::MomentSet;
use crate::scalar::Real;
use crate::scheduler::mixing_matrix;

const SYMMETRY_TOL: f64 = 1e-9;
const BRACKET_DOUBLINGS: usize = 4;

#[derive(Clone, Debug)]
pub struct SpectralObjective<T> {
    e_l: Matrix<T>,
    e_ltl: Matrix<T>,
    j: Matrix<T>,
}

impl<T: Real> SpectralObjective<T> {
    pub fn new(e_l: Matrix<T>, e_ltl: Matrix<T>) -> Result<Self, MixingError> {
        if !e_l.is_square() || e_l.rows() != e_ltl.rows() || e_l.cols() != e_ltl.cols() {
            return Err(MixingError::ShapeMismatch);
        }
        for m in [&e_l, &e_ltl] {
            let tol = T::of_f64(SYMMETRY_TOL) * T::one().max_of(m.max_abs());
            let asym = m.asymmetry();
            if asym > tol || asym.is_nan() {
                return Err(MixingError::NotSymmetric(asym.as_f64()));
            }
        }
        let j = Matrix::averaging(e_l.rows());
        Ok(Self { e_l, e_ltl, j })
    }

    pub fn from_moments(m: &MomentSet<T>) -> Result<Self, MixingError> {
        Self::new(m.e_l.clone(), m.e_ltl.clone())
    }

    /// Deterministic case: `E[L̃] = L`, `E[L̃ᵀL̃] = L²`.
    pub fn fixed_topology(t: &Topology) -> Result<Self, MixingError> {
        let l = t.laplacian::<T>();
        let l2 = &l * &l;
        Self::new(l, l2)
    }

    pub fn n(&self) -> usize {
        self.e_l.rows()
    }

    pub fn e_l(&self) -> &Matrix<T> {
        &self.e_l
    }

    pub fn e_ltl(&self) -> &Matrix<T> {
        &self.e_ltl
    }

    pub fn j(&self) -> &Matrix<T> {
        &self.j
    }

    /// `E[W²] − J` at step `eps`.
    pub fn expected_w2_minus_j(&self, eps: T) -> Matrix<T> {
        let two = T::one() + T::one();
        let mut m = Matrix::identity(self.n());
        m.add_scaled(&self.e_l, -two * eps);
        m.add_scaled(&self.e_ltl, eps * eps);
        m.add_scaled(&self.j, -T::one());
        m
    }

    /// `s(ε)`.
    pub fn objective(&self, eps: T) -> Result<T, MixingError> {
        if eps < T::zero() {
            return Err(MixingError::NegativeEpsilon(eps.as_f64()));
        }
        Ok(lambda_max(&self.expected_w2_minus_j(eps))?)
    }

    /// `ρ(I − ε E[L̃] − J)`: the fixed-matrix contraction factor of the mean
    /// mixing matrix, reported next to `s(ε)`.
    pub fn mean_matrix_rho(&self, eps: T) -> Result<T, MixingError> {
        let w = mixing_matrix(&self.e_l, eps);
        let eig = symmetric_eigenvalues(&(&w - &self.j))?;
        Ok(eig.iter().fold(T::zero(), |acc, v| acc.max_of(v.abs())))
    }

    /// Right end of the initial search bracket: `2 / λ_max(E[L̃])`, or 1 when
    /// `E[L̃]` vanishes.
    pub fn upper_bracket(&self) -> Result<T, MixingError> {
        let lmax = lambda_max(&self.e_l)?;
        let two = T::one() + T::one();
        Ok(if lmax > T::zero() { two / lmax } else { T::one() })
    }

    /// Minimizes `s(ε)` over `ε ≥ 0` to within `tol` in ε.
    pub fn optimize_epsilon(&self, tol: T) -> Result<EpsilonOptimum<T>, MixingError> {
        if !(tol > T::zero()) {
            return Err(MixingError::BadTolerance(tol.as_f64()));
        }
        if self.e_l.max_abs() == T::zero() {
            return Ok(EpsilonOptimum {
                epsilon: T::zero(),
                value: T::one(),
                upper: T::one(),
                degenerate: true,
                at_boundary: false,
            });
        }
        let mut hi = self.upper_bracket()?;
        let mut doublings = 0;
        loop {
            let (eps, value) = golden_section(|e| self.objective(e), T::zero(), hi, tol)?;
            let at_boundary = hi - eps <= tol;
            if !at_boundary || doublings == BRACKET_DOUBLINGS {
                return Ok(EpsilonOptimum {
                    epsilon: eps,
                    value,
                    upper: hi,
                    degenerate: false,
                    at_boundary,
                });
            }
            hi = hi + hi;
            doublings += 1;
        }
    }

    /// Best of `points` evenly spaced values of ε in `[lo, hi]`.
    pub fn grid_minimum(&self, lo: T, hi: T, points: usize) -> Result<(T, T), MixingError> {
        assert!(points >= 2, "grid needs at least two points");
        let step = (hi - lo) / T::of_usize(points - 1);
        let mut best = (lo, self.objective(lo)?);
        for k in 1..points {
            let eps = lo + step * T::of_usize(k);
            let v = self.objective(eps)?;
            if v < best.1 {
                best = (eps, v);
            }
        }
        Ok(best)
    }
}

/// Result of [`SpectralObjective::optimize_epsilon`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonOptimum<T> {
    pub epsilon: T,
    /// `s(ε*)`.
    pub value: T,
    /// Right end of the final search bracket.
    pub upper: T,
    /// `E[L̃] = 0`: no link is ever used, the result is `(0, 1)`.
    pub degenerate: bool,
    /// The minimizer sits on the right end even after widening the bracket.
    pub at_boundary: bool,
}

fn golden_section<T: Real, E>(
    f: impl Fn(T) -> Result<T, E>,
    lo: T,
    hi: T,
    tol: T,
) -> Result<(T, T), E> {
    let inv_phi = T::of_f64((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    // Best of the final bracket and its ends.
    let two = T::one() + T::one();
    let mid = (a + b) / two;
    let mut best = (mid, f(mid)?);
    for (x, fx) in [(c, fc), (d, fd), (a, f(a)?), (b, f(b)?)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Ok(best)
}

/// Fixed-topology weights `W = I − ε L`.
pub fn fixed_weight_matrix<T: Real>(t: &Topology, eps: T) -> Matrix<T> {
    mixing_matrix(&t.laplacian::<T>(), eps)
}
