//! Finite unitary restrictions of the electric walk with reflective boundary
//! coins, their resolvents, compatible solutions and eigenfunction diagnostics.
//!
//! The restriction to cells `[a, b]` replaces the coins at `a` and `b` by `ασ₁`
//! and `βσ₁` and acts on the interleaved indices `2a+1 ..= 2b`. Dense linear
//! algebra runs in `f64` through faer.

use std::ops::Range;

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;
use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Result, WalkError};
use crate::linalg::{Banded, Mat2};
use crate::walk::{factor_m, window_from_coins, WalkSpec};
use crate::xfer::{finite_lyapunov, transfer_mat2, Cocycle2x2};

type C64 = Complex<f64>;

/// Default distance to the spectrum below which resolvents are refused.
pub const EPS_SPEC: f64 = 1e-8;
/// Largest window handed to the dense eigensolver.
pub const MAX_DENSE_INDICES: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteRestriction {
    pub a: i64,
    pub b: i64,
    pub alpha: C64,
    pub beta: C64,
    pub spec: WalkSpec<f64>,
    pub matrix: Banded<f64>,
}

fn unit(z: C64, what: &str) -> Result<()> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(WalkError::InvalidParameter(format!("boundary phase {what} must lie on the unit circle")));
    }
    Ok(())
}

/// `W^{[a,b]}_{α,β}`.
pub fn build_restriction(spec: &WalkSpec<f64>, a: i64, b: i64, alpha: C64, beta: C64) -> Result<FiniteRestriction> {
    if b < a + 2 {
        return Err(WalkError::DegenerateInterval(a, b));
    }
    unit(alpha, "alpha")?;
    unit(beta, "beta")?;
    let coin_at = |x: i64| {
        if x == a {
            Mat2::sigma1().scale(alpha)
        } else if x == b {
            Mat2::sigma1().scale(beta)
        } else {
            spec.cell_coin(x)
        }
    };
    let matrix = window_from_coins(2 * a + 1..2 * b + 1, coin_at);
    let r = FiniteRestriction { a, b, alpha, beta, spec: *spec, matrix };
    let defect = r.unitarity_defect();
    if defect > 1e-12 {
        return Err(WalkError::NonUnitaryCoin(defect));
    }
    Ok(r)
}

/// Eigenvalues and unit eigenvectors (columns), ordered by eigenvalue argument.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<C64>,
    pub vectors: Mat<C64>,
}

/// Dense eigen-decomposition of a banded matrix.
pub fn eigen_banded(m: &Banded<f64>) -> Result<Eigenpairs> {
    if m.len() > MAX_DENSE_INDICES {
        return Err(WalkError::WindowTooLarge(m.len(), MAX_DENSE_INDICES));
    }
    let dense = m.to_faer();
    let evd = dense.eigen().map_err(|_| WalkError::EigenFailure)?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let n = m.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].arg().total_cmp(&s[j].arg()).then(i.cmp(&j)));
    let values = order.iter().map(|&i| s[i]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| u[(r, order[c])]);
    let mut vectors = vectors;
    for c in 0..n {
        let nrm = (0..n).map(|r| vectors[(r, c)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..n {
            vectors[(r, c)] /= nrm;
        }
    }
    Ok(Eigenpairs { values, vectors })
}

pub fn eigenvalues_banded(m: &Banded<f64>) -> Result<Vec<C64>> {
    if m.len() > MAX_DENSE_INDICES {
        return Err(WalkError::WindowTooLarge(m.len(), MAX_DENSE_INDICES));
    }
    let mut v = m.to_faer().eigenvalues().map_err(|_| WalkError::EigenFailure)?;
    v.sort_by(|p, q| p.arg().total_cmp(&q.arg()));
    Ok(v)
}

impl FiniteRestriction {
    pub fn window(&self) -> Range<i64> {
        2 * self.a + 1..2 * self.b + 1
    }

    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    pub fn cells(&self) -> usize {
        (self.b - self.a + 1) as usize
    }

    /// `‖M*M − 1‖_max` over the whole window.
    pub fn unitarity_defect(&self) -> f64 {
        self.matrix.unitarity_defect_on(self.window())
    }

    pub fn eigen(&self) -> Result<Eigenpairs> {
        eigen_banded(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        eigenvalues_banded(&self.matrix)
    }

    pub fn spectral_distance(&self, z: C64) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().map(|l| (l - z).norm()).fold(f64::INFINITY, f64::min))
    }

    /// Position of interleaved index `k` in the dense window.
    pub fn local(&self, k: i64) -> usize {
        (k - self.window().start) as usize
    }

    /// `ℒ` on the window: `C_x σ₁` on interior cells, `α` at `2a+1`, `β` at `2b`.
    pub fn factor_l(&self) -> Banded<f64> {
        let mut l = Banded::zeros(self.window(), 1);
        l.set(2 * self.a + 1, 2 * self.a + 1, self.alpha);
        l.set(2 * self.b, 2 * self.b, self.beta);
        for x in self.a + 1..self.b {
            let blk = (self.spec.cell_coin(x) * Mat2::sigma1()).m;
            for i in 0..2 {
                for j in 0..2 {
                    l.set(2 * x + i, 2 * x + j, blk[i as usize][j as usize]);
                }
            }
        }
        l
    }

    /// `ℳ`: the swaps `2y-1 ↔ 2y` for `a < y ≤ b`.
    pub fn factor_m(&self) -> Banded<f64> {
        factor_m(self.window())
    }
}

/// `(W − z)⁻¹` by LU solve with `ε_spec` guard.
pub fn resolvent_direct(r: &FiniteRestriction, z: C64) -> Result<Mat<C64>> {
    resolvent_direct_eps(r, z, EPS_SPEC)
}

pub fn resolvent_direct_eps(r: &FiniteRestriction, z: C64, eps: f64) -> Result<Mat<C64>> {
    let distance = r.spectral_distance(z)?;
    if distance <= eps {
        return Err(WalkError::NearSpectrum { distance });
    }
    let n = r.len();
    let mut m = r.matrix.to_faer();
    for i in 0..n {
        m[(i, i)] -= z;
    }
    Ok(m.partial_piv_lu().inverse())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Generalized eigenvector satisfying the boundary condition on one side only.
#[derive(Clone, Debug, PartialEq)]
pub struct CompatibleSolution {
    pub side: Side,
    /// Boundary pair: `(φ_{2a+1}, φ_{2a+2})` on the left, `(φ_{2b-1}, φ_{2b})` on the right.
    pub seed: [C64; 2],
    /// `φ_k` for `k` in the restriction window.
    pub amps: Vec<C64>,
    lo: i64,
}

impl CompatibleSolution {
    pub fn get(&self, k: i64) -> C64 {
        self.amps[(k - self.lo) as usize]
    }
}

/// Left-compatible solution: `zφ_{2a+1} = αφ_{2a+2}`, seeded as `(1, z/α)`
/// and transported to the right.
pub fn left_solution(r: &FiniteRestriction, z: C64) -> Result<CompatibleSolution> {
    let seed = [C64::one(), z / r.alpha];
    let amps = crate::xfer::propagate_pairs(&r.spec, z, r.a + 1, r.b - 1, seed)?;
    Ok(CompatibleSolution { side: Side::Left, seed, amps, lo: 2 * r.a + 1 })
}

/// Right-compatible solution: `zφ_{2b} = βφ_{2b-1}`, seeded as `(1, β/z)`
/// and transported to the left.
pub fn right_solution(r: &FiniteRestriction, z: C64) -> Result<CompatibleSolution> {
    let seed = [C64::one(), r.beta / z];
    let n = r.len();
    let mut amps = vec![C64::zero(); n];
    amps[n - 2] = seed[0];
    amps[n - 1] = seed[1];
    let mut v = seed;
    for x in (r.a + 1..r.b).rev() {
        let t = transfer_mat2(&r.spec, x, z)?.inverse().ok_or(WalkError::ZeroSpectralParameter)?;
        v = t.apply(v);
        let i = (2 * x - 1 - (2 * r.a + 1)) as usize;
        amps[i] = v[0];
        amps[i + 1] = v[1];
    }
    Ok(CompatibleSolution { side: Side::Right, seed, amps, lo: 2 * r.a + 1 })
}

/// `φ⁺_{2k} φ⁻_{2k-1} − φ⁺_{2k-1} φ⁻_{2k}` for `a < k ≤ b`.
pub fn wronskian(left: &CompatibleSolution, right: &CompatibleSolution, k: i64) -> C64 {
    right.get(2 * k) * left.get(2 * k - 1) - right.get(2 * k - 1) * left.get(2 * k)
}

/// `|R(2x−i, 2y−j)| = |φ⁺_{2y−1+j} φ⁻_{2x−i}| / (|z| · |Wronskian_k|)` for
/// `a < x < y ≤ b`, `i, j ∈ {0, 1}`, `a < k ≤ b`.
#[allow(clippy::too_many_arguments)]
pub fn resolvent_via_solutions(
    r: &FiniteRestriction,
    z: C64,
    x: i64,
    y: i64,
    i: i64,
    j: i64,
    k: i64,
) -> Result<f64> {
    if !(r.a < x && x < y && y <= r.b) || !(0..2).contains(&i) || !(0..2).contains(&j) || !(r.a < k && k <= r.b) {
        return Err(WalkError::InvalidParameter(format!(
            "need a < x < y <= b and a < k <= b (a={}, b={}, x={x}, y={y}, k={k})",
            r.a, r.b
        )));
    }
    let left = left_solution(r, z)?;
    let right = right_solution(r, z)?;
    Ok(resolvent_entry(&left, &right, z, x, y, i, j, k)?)
}

#[allow(clippy::too_many_arguments)]
fn resolvent_entry(
    left: &CompatibleSolution,
    right: &CompatibleSolution,
    z: C64,
    x: i64,
    y: i64,
    i: i64,
    j: i64,
    k: i64,
) -> Result<f64> {
    let w = wronskian(left, right, k);
    let denom = z.norm() * w.norm();
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(WalkError::VanishingWronskian);
    }
    Ok((right.get(2 * y - 1 + j) * left.get(2 * x - i)).norm() / denom)
}

/// All formula values `|R(2x−i, 2y−j)|` for `a < x < y ≤ b` paired with the
/// direct inverse, as `(row, col, formula, direct)`.
pub fn resolvent_cross_check(r: &FiniteRestriction, z: C64, k: i64) -> Result<Vec<(i64, i64, f64, f64)>> {
    let direct = resolvent_direct(r, z)?;
    let left = left_solution(r, z)?;
    let right = right_solution(r, z)?;
    let mut out = Vec::new();
    for x in r.a + 1..=r.b {
        for y in x + 1..=r.b {
            for i in 0..2 {
                for j in 0..2 {
                    let (row, col) = (2 * x - i, 2 * y - j);
                    let f = resolvent_entry(&left, &right, z, x, y, i, j, k)?;
                    out.push((row, col, f, direct[(r.local(row), r.local(col))].norm()));
                }
            }
        }
    }
    Ok(out)
}

/// `A = zℒ* − ℳ` from its entry formulas, checked against the factor construction.
pub fn tridiagonal_a(r: &FiniteRestriction, z: C64) -> Result<Banded<f64>> {
    let formula = tridiagonal_a_formula(r, z);
    let factors = tridiagonal_a_factors(r, z);
    let d = formula.max_abs_diff(&factors);
    if d > 1e-12 {
        return Err(WalkError::ConventionMismatch(d));
    }
    Ok(formula)
}

/// Entry formulas: `A_{2x,2x} = z b̄_x`, `A_{2x,2x+1} = z d̄_x`, `A_{2x+1,2x} = z ā_x`,
/// `A_{2x+1,2x+1} = z c̄_x`, `A_{2x−1,2x} = A_{2x,2x−1} = −1`, and `zᾱ`, `zβ̄`
/// at the two boundary indices.
pub fn tridiagonal_a_formula(r: &FiniteRestriction, z: C64) -> Banded<f64> {
    let mut m = Banded::zeros(r.window(), 1);
    m.set(2 * r.a + 1, 2 * r.a + 1, z * r.alpha.conj());
    m.set(2 * r.b, 2 * r.b, z * r.beta.conj());
    for x in r.a + 1..r.b {
        let [[a, b], [c, d]] = r.spec.cell_coin(x).m;
        m.set(2 * x, 2 * x, z * b.conj());
        m.set(2 * x, 2 * x + 1, z * d.conj());
        m.set(2 * x + 1, 2 * x, z * a.conj());
        m.set(2 * x + 1, 2 * x + 1, z * c.conj());
    }
    for y in r.a + 1..=r.b {
        m.set(2 * y - 1, 2 * y, -C64::one());
        m.set(2 * y, 2 * y - 1, -C64::one());
    }
    m
}

pub fn tridiagonal_a_factors(r: &FiniteRestriction, z: C64) -> Banded<f64> {
    let l = r.factor_l().adjoint();
    let m = r.factor_m();
    let mut out = Banded::zeros(r.window(), 1);
    for row in r.window() {
        for col in out.row_cols(row) {
            out.set(row, col, z * l.get(row, col) - m.get(row, col));
        }
    }
    out
}

/// `G_z = A⁻¹`.
pub fn green_matrix(r: &FiniteRestriction, z: C64) -> Result<Mat<C64>> {
    let distance = r.spectral_distance(z)?;
    if distance <= EPS_SPEC {
        return Err(WalkError::NearSpectrum { distance });
    }
    Ok(tridiagonal_a(r, z)?.to_faer().partial_piv_lu().inverse())
}

/// Boundary amplitudes `(ψ_{2a+1}, ψ_{2a+2}, ψ_{2b−1}, ψ_{2b})` of a solution on a larger domain.
pub type BoundaryData = [C64; 4];

/// Interior of a solution of `Wψ = zψ` from its four boundary amplitudes:
/// `ψ = G(·,2a+1)(zᾱψ_{2a+1} − ψ_{2a+2}) + G(·,2b)(zβ̄ψ_{2b} − ψ_{2b−1})`.
pub fn reconstruct_eigenfunction(r: &FiniteRestriction, z: C64, boundary: BoundaryData) -> Result<Vec<C64>> {
    let g = green_matrix(r, z)?;
    let [p1, p2, q1, q2] = boundary;
    let f_left = z * r.alpha.conj() * p1 - p2;
    let f_right = z * r.beta.conj() * q2 - q1;
    let (cl, cr) = (r.local(2 * r.a + 1), r.local(2 * r.b));
    Ok((0..r.len()).map(|i| g[(i, cl)] * f_left + g[(i, cr)] * f_right).collect())
}

/// Solves `(W − z)x = rhs` directly.
pub fn solve_shifted(r: &FiniteRestriction, z: C64, rhs: &[C64]) -> Result<Vec<C64>> {
    let mut m = r.matrix.to_faer();
    for i in 0..r.len() {
        m[(i, i)] -= z;
    }
    let b = Mat::from_fn(r.len(), 1, |i, _| rhs[i]);
    let x = m.partial_piv_lu().solve(&b);
    Ok((0..r.len()).map(|i| x[(i, 0)]).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub eigenvalue: C64,
    /// Cell of largest weight.
    pub center: i64,
    /// Fitted exponential decay rate per cell; `NaN` if too few points survived the noise floor.
    pub rate: f64,
    pub participation: f64,
}

/// Relative amplitude below which points are left out of decay fits.
pub const DECAY_NOISE_FLOOR: f64 = 1e-10;

/// Per-cell weights `√(|ψ_{2x}|² + |ψ_{2x+1}|²)` of a window vector, with the first cell.
pub fn cell_weights(r: &FiniteRestriction, v: impl Fn(usize) -> C64) -> (i64, Vec<f64>) {
    let mut w = vec![0.0; r.cells()];
    for k in r.window() {
        w[(k.div_euclid(2) - r.a) as usize] += v(r.local(k)).norm_sqr();
    }
    (r.a, w.into_iter().map(f64::sqrt).collect())
}

/// Least-squares slope of `log w` against distance from the peak over the
/// middle 60% of the window, above the noise floor.
pub fn fit_decay(first_cell: i64, weights: &[f64]) -> (i64, f64) {
    let (imax, wmax) = weights
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &w)| if w > acc.1 { (i, w) } else { acc });
    let n = weights.len();
    let margin = n / 5;
    let pts: Vec<(f64, f64)> = (margin..n - margin)
        .filter(|&i| weights[i] > DECAY_NOISE_FLOOR * wmax)
        .map(|i| ((i as f64 - imax as f64).abs(), weights[i].ln()))
        .collect();
    let center = first_cell + imax as i64;
    if pts.len() < 5 {
        return (center, f64::NAN);
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |s, p| (s.0 + (p.0 - mx) * (p.1 - my), s.1 + (p.0 - mx).powi(2)));
    if sxx == 0.0 {
        return (center, f64::NAN);
    }
    (center, -sxy / sxx)
}

/// Localization center, decay rate and participation ratio of every eigenvector.
pub fn eigenfunction_decay_fit(r: &FiniteRestriction) -> Result<Vec<DecayFit>> {
    if r.cells() < 100 {
        return Err(WalkError::InsufficientData(format!("{} cells, need at least 100", r.cells())));
    }
    let ep = r.eigen()?;
    let n = r.len();
    Ok((0..n)
        .map(|c| {
            let (first, w) = cell_weights(r, |i| ep.vectors[(i, c)]);
            let (center, rate) = fit_decay(first, &w);
            let amps: Vec<C64> = (0..n).map(|i| ep.vectors[(i, c)]).collect();
            DecayFit { eigenvalue: ep.values[c], center, rate, participation: participation_of(&amps) }
        })
        .collect())
}

fn participation_of(v: &[C64]) -> f64 {
    let (s2, s4) = v.iter().fold((0.0, 0.0), |s, z| (s.0 + z.norm_sqr(), s.1 + z.norm_sqr().powi(2)));
    s2 * s2 / s4
}

/// Median of the finite entries.
pub fn median(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = xs.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignChoice {
    pub alpha: C64,
    pub beta: C64,
    /// `None` when z is within `ε_spec` of this restriction's spectrum.
    pub max_excess: Option<f64>,
    /// `|φ^{α,β}(z)|`: the Wronskian of the compatible solutions.
    pub wronskian: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayScan {
    pub gamma_n: f64,
    pub choices: Vec<SignChoice>,
    /// Index of the choice with the smallest excess.
    pub best: usize,
    /// `max_{x,y} (log|R(x,y)| + |x−y| γ_n)` for the best choice.
    pub best_excess: f64,
    pub slack: f64,
    pub holds: bool,
    /// `‖T_{b-1} ··· T_{a+1}‖`.
    pub transfer_norm: f64,
    /// `max_choices |φ^{α,β}| / ‖T_{b-1} ··· T_{a+1}‖`.
    pub wronskian_ratio: f64,
}

/// Runs the four boundary sign choices `(±α, ±β)` on cells `[a, a+n]` and
/// compares `log|R|` with `−|x−y|γ_n + slack`.
#[allow(clippy::too_many_arguments)]
pub fn resolvent_decay_scan(
    spec: &WalkSpec<f64>,
    a: i64,
    n: i64,
    z: C64,
    alpha: C64,
    beta: C64,
    slack: f64,
    theta_samples: usize,
) -> Result<DecayScan> {
    let b = a + n;
    let gamma_n = finite_lyapunov(spec, z / z.norm(), n as usize, theta_samples)?.gamma;
    let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    let choices: Vec<Result<SignChoice>> = signs
        .par_iter()
        .map(|&(sa, sb)| {
            let (al, be) = (alpha * sa, beta * sb);
            let r = build_restriction(spec, a, b, al, be)?;
            let res = match resolvent_direct(&r, z) {
                Ok(m) => m,
                Err(WalkError::NearSpectrum { .. }) => {
                    return Ok(SignChoice { alpha: al, beta: be, max_excess: None, wronskian: None })
                }
                Err(e) => return Err(e),
            };
            let mut worst = f64::NEG_INFINITY;
            for row in r.window() {
                for col in r.window() {
                    let v = res[(r.local(row), r.local(col))].norm();
                    let dist = (row.div_euclid(2) - col.div_euclid(2)).abs() as f64;
                    worst = worst.max(v.ln() + dist * gamma_n);
                }
            }
            let w = wronskian(&left_solution(&r, z)?, &right_solution(&r, z)?, b).norm();
            Ok(SignChoice { alpha: al, beta: be, max_excess: Some(worst), wronskian: Some(w) })
        })
        .collect();
    let choices = choices.into_iter().collect::<Result<Vec<_>>>()?;
    let (best, best_excess) = choices
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.max_excess.map(|e| (i, e)))
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .ok_or(WalkError::NearSpectrum { distance: 0.0 })?;
    let mut t = Cocycle2x2::identity();
    for x in a + 1..b {
        t.push(&transfer_mat2(spec, x, z)?);
    }
    let transfer_norm = t.op_norm();
    let wmax = choices.iter().filter_map(|c| c.wronskian).fold(0.0, f64::max);
    Ok(DecayScan {
        gamma_n,
        best,
        best_excess,
        slack,
        holds: best_excess <= slack,
        transfer_norm,
        wronskian_ratio: wmax / transfer_norm,
        choices,
    })
}
