//! Transfer matrices of the generalized eigenvalue equation `Wψ = zψ`, their
//! renormalized products, Lyapunov exponents and related averages.

use num_complex::Complex;
use num_traits::One;
use rayon::prelude::*;

use crate::error::{Result, WalkError};
use crate::linalg::Mat2;
use crate::numtheory::diophantine_check;
use crate::scalar::{mean_stderr, pairwise_sum, Real, C};
use crate::walk::WalkSpec;

/// `e^{log_scale} · entries`, with the entries rescaled whenever their
/// Frobenius norm leaves `[1/2, 2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cocycle2x2<T> {
    entries: Mat2<T>,
    log_scale: T,
}

impl<T: Real> From<Mat2<T>> for Cocycle2x2<T> {
    fn from(m: Mat2<T>) -> Self {
        let mut c = Cocycle2x2 { entries: m, log_scale: T::zero() };
        c.renormalize();
        c
    }
}

impl<T: Real> Cocycle2x2<T> {
    pub fn identity() -> Self {
        Cocycle2x2 { entries: Mat2::identity(), log_scale: T::zero() }
    }

    pub fn entries(&self) -> &Mat2<T> {
        &self.entries
    }

    pub fn log_scale(&self) -> T {
        self.log_scale
    }

    /// The represented matrix; overflows for long products.
    pub fn matrix(&self) -> Mat2<T> {
        self.entries.scale(self.log_scale.exp().into())
    }

    #[inline]
    fn renormalize(&mut self) {
        let f = self.entries.frobenius_sqr();
        let (lo, hi) = (T::lit(0.25), T::lit(4.0));
        if f < lo || f > hi {
            if f == T::zero() || !f.is_finite() {
                return;
            }
            let s = f.sqrt();
            self.entries = self.entries.scale(s.recip().into());
            self.log_scale += s.ln();
        }
    }

    /// `self ← m · self`.
    #[inline]
    pub fn push(&mut self, m: &Mat2<T>) {
        self.entries = *m * self.entries;
        self.renormalize();
    }

    pub fn compose(&self, later: &Self) -> Self {
        let mut c = Cocycle2x2 { entries: later.entries * self.entries, log_scale: self.log_scale + later.log_scale };
        c.renormalize();
        c
    }

    /// `log ‖·‖` in operator norm.
    pub fn log_norm(&self) -> T {
        self.log_scale + self.entries.op_norm().ln()
    }

    pub fn op_norm(&self) -> T {
        self.log_norm().exp()
    }

    pub fn det(&self) -> C<T> {
        self.entries.det() * (T::lit(2.0) * self.log_scale).exp()
    }

    pub fn inverse(&self) -> Option<Self> {
        self.entries
            .inverse()
            .map(|e| Cocycle2x2 { entries: e, log_scale: -self.log_scale })
            .map(|mut c| {
                c.renormalize();
                c
            })
    }

    pub fn apply(&self, v: [C<T>; 2]) -> [C<T>; 2] {
        let w = self.entries.apply(v);
        let s: C<T> = self.log_scale.exp().into();
        [w[0] * s, w[1] * s]
    }
}

fn check_z<T: Real>(z: C<T>) -> Result<()> {
    if z.norm() == T::zero() {
        Err(WalkError::ZeroSpectralParameter)
    } else {
        Ok(())
    }
}

/// Raw transfer matrix at cell `x` mapping `(ψ_{2x-1}, ψ_{2x})` to
/// `(ψ_{2x+1}, ψ_{2x+2})`. For a cell coin `((a,b),(c,d))` this is
/// `(1/a)((det/z, c), (-b, z))`, which for an SU(2) coin with electric phase φ
/// reads `(1/a)((z⁻¹e^{iφ}, -b*), (-b, z e^{-iφ}))`.
pub fn transfer_mat2<T: Real>(spec: &WalkSpec<T>, x: i64, z: C<T>) -> Result<Mat2<T>> {
    check_z(z)?;
    let cx = spec.cell_coin(x);
    let [[a, b], [c, _]] = cx.m;
    if a.norm() == T::zero() {
        return Err(WalkError::OffDiagonalCoin);
    }
    let ia = a.inv();
    Ok(Mat2::new(cx.det() / z * ia, c * ia, -b * ia, z * ia))
}

pub fn transfer_matrix<T: Real>(spec: &WalkSpec<T>, x: i64, z: C<T>) -> Result<Cocycle2x2<T>> {
    transfer_mat2(spec, x, z).map(Cocycle2x2::from)
}

/// `T_{x1} ··· T_{x0}` (identity when `x1 < x0`).
pub fn cocycle_span<T: Real>(spec: &WalkSpec<T>, z: C<T>, x0: i64, x1: i64) -> Result<Cocycle2x2<T>> {
    check_z(z)?;
    if spec.coin.a().norm() == T::zero() {
        return Err(WalkError::OffDiagonalCoin);
    }
    let mut acc = Cocycle2x2::identity();
    for x in x0..=x1 {
        acc.push(&transfer_mat2(spec, x, z)?);
    }
    Ok(acc)
}

/// Amplitudes on `[2x0-1, 2x1+2]` obtained by transporting the pair
/// `(ψ_{2x0-1}, ψ_{2x0})` with `T_{x0}, ..., T_{x1}`.
pub fn propagate_pairs<T: Real>(spec: &WalkSpec<T>, z: C<T>, x0: i64, x1: i64, seed: [C<T>; 2]) -> Result<Vec<C<T>>> {
    let mut out = Vec::with_capacity(2 * (x1 - x0 + 2).max(1) as usize);
    out.extend_from_slice(&seed);
    let mut v = seed;
    for x in x0..=x1 {
        v = transfer_mat2(spec, x, z)?.apply(v);
        out.extend_from_slice(&v);
    }
    Ok(out)
}

/// `T(θ+(n-1)Φ, z) ··· T(θ, z)`: cells `0..n` of the walk with offset `θ_start`.
pub fn cocycle_product<T: Real>(spec: &WalkSpec<T>, z: C<T>, theta_start: T, n: usize) -> Result<Cocycle2x2<T>> {
    if n == 0 {
        return Err(WalkError::InvalidParameter("cocycle length must be at least 1".into()));
    }
    cocycle_span(&spec.with_offset(theta_start), z, 0, n as i64 - 1)
}

fn log_norm_per_step<T: Real>(spec: &WalkSpec<T>, z: C<T>, theta: T, n: usize) -> T {
    let c = cocycle_product(spec, z, theta, n).expect("validated by caller");
    c.log_norm() / T::from_usize(n).unwrap()
}

fn validate<T: Real>(spec: &WalkSpec<T>, z: C<T>, n: usize, samples: usize) -> Result<()> {
    check_z(z)?;
    if spec.coin.a().norm() == T::zero() {
        return Err(WalkError::OffDiagonalCoin);
    }
    if n == 0 || samples == 0 {
        return Err(WalkError::InvalidParameter("n and sample count must be positive".into()));
    }
    Ok(())
}

/// `θ_k = 2πk/K`.
pub fn theta_grid<T: Real>(samples: usize) -> Vec<T> {
    let k = T::from_usize(samples).unwrap();
    (0..samples).map(|j| T::TAU() * T::from_usize(j).unwrap() / k).collect()
}

fn per_theta<T: Real>(spec: &WalkSpec<T>, z: C<T>, n: usize, thetas: &[T]) -> Vec<T> {
    thetas.par_iter().map(|&th| log_norm_per_step(spec, z, th, n)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovEstimate<T> {
    pub n: usize,
    pub gamma: T,
    pub stderr: T,
    pub samples: usize,
}

/// θ-grid average of `(1/n) log ‖T_n ··· T_1‖`. The offset stored in `spec` is ignored.
pub fn finite_lyapunov<T: Real>(spec: &WalkSpec<T>, z: C<T>, n: usize, samples: usize) -> Result<LyapunovEstimate<T>> {
    validate(spec, z, n, samples)?;
    let vals = per_theta(spec, z, n, &theta_grid(samples));
    let (gamma, stderr) = mean_stderr(&vals);
    Ok(LyapunovEstimate { n, gamma, stderr, samples })
}

/// `T · det(T)^{-1/2}`.
pub fn unimodular<T: Real>(t: &Mat2<T>) -> Mat2<T> {
    t.scale(t.det().sqrt().inv())
}

/// `Q = -(1+i)⁻¹ ((1, -i), (1, i))`.
pub fn q_matrix<T: Real>() -> Mat2<T> {
    let i = Complex::i();
    let pre = -Complex::new(T::one(), T::one()).inv();
    Mat2::new(C::one(), -i, C::one(), i).scale(pre)
}

/// Conjugates a unimodular SU(1,1) transfer matrix into SL(2,ℝ) as `Q* T Q`.
pub fn su11_to_sl2r<T: Real>(t: &Mat2<T>, z: C<T>) -> Result<Mat2<T>> {
    let tol = T::lit(1e3) * T::unitarity_tol();
    let off = (z.norm() - T::one()).abs();
    if off > tol {
        return Err(WalkError::OffCircle(z.norm().to_f64().unwrap()));
    }
    let dd = (t.det() - C::one()).norm();
    if dd > tol * t.frobenius_sqr().max(T::one()) {
        return Err(WalkError::NotUnimodular(dd.to_f64().unwrap()));
    }
    let q = q_matrix::<T>();
    Ok(q.adjoint() * *t * q)
}

/// Both sides of the Herman–Avila–Bochi identity. `lhs` averages `γ_n` over
/// `z_samples` points of the circle; `rhs` is the θ-average of
/// `log((‖A‖ + ‖A‖⁻¹)/2)` for the SL(2,ℝ) conjugate `A`.
pub fn herman_avila_bochi_check<T: Real>(
    spec: &WalkSpec<T>,
    n: usize,
    theta_samples: usize,
    z_samples: usize,
) -> Result<(T, T)> {
    validate(spec, C::one(), n, theta_samples.min(z_samples))?;
    let zs = theta_grid::<T>(z_samples);
    let mut lhs_parts = Vec::with_capacity(z_samples);
    for phi in zs {
        lhs_parts.push(finite_lyapunov(spec, crate::scalar::cis(phi), n, theta_samples)?.gamma);
    }
    let lhs = pairwise_sum(&lhs_parts) / T::from_usize(z_samples).unwrap();
    let rhs_parts: Vec<T> = theta_grid::<T>(theta_samples)
        .par_iter()
        .map(|&th| {
            let t = transfer_mat2(&spec.with_offset(th), 0, C::one()).unwrap();
            let a = su11_to_sl2r(&unimodular(&t), C::one()).unwrap();
            let nm = a.op_norm();
            ((nm + nm.recip()) / T::lit(2.0)).ln()
        })
        .collect();
    let rhs = pairwise_sum(&rhs_parts) / T::from_usize(theta_samples).unwrap();
    Ok((lhs, rhs))
}

/// `(1/J) Σ_j (1/n) log ‖T_n(θ + jΦ, z) ···‖` along the shift orbit of the
/// spec's offset. Warns when `J ≤ n^{2A}`.
pub fn orbit_average<T: Real>(spec: &WalkSpec<T>, z: C<T>, n: usize, j: usize, dioph_a: T) -> Result<T> {
    validate(spec, z, n, j)?;
    let need = T::from_usize(n).unwrap().powf(T::lit(2.0) * dioph_a);
    if T::from_usize(j).unwrap() <= need {
        log::warn!("orbit average with J = {j} <= n^(2A) = {need}; the averaging estimate is not guaranteed");
    }
    let thetas: Vec<T> = (0..j)
        .map(|k| spec.offset() + T::from_usize(k).unwrap() * spec.field())
        .collect();
    let vals = per_theta(spec, z, n, &thetas);
    Ok(pairwise_sum(&vals) / T::from_usize(j).unwrap())
}

/// Grid fraction of θ with `|(1/n) log ‖T_n···T_1‖ − γ_n| > κ`.
pub fn deviation_measure<T: Real>(spec: &WalkSpec<T>, z: C<T>, n: usize, kappa: T, samples: usize) -> Result<T> {
    validate(spec, z, n, samples)?;
    if !(kappa > T::zero()) {
        return Err(WalkError::InvalidParameter("kappa must be positive".into()));
    }
    let vals = per_theta(spec, z, n, &theta_grid(samples));
    let (gamma, _) = mean_stderr(&vals);
    let bad = vals.iter().filter(|&&v| (v - gamma).abs() > kappa).count();
    Ok(T::from_usize(bad).unwrap() / T::from_usize(samples).unwrap())
}

/// Parameters of the finite Diophantine condition `‖kΦ/2π‖ > c|k|^{-A}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiophantineParams {
    pub c: f64,
    pub a: f64,
    pub kmax: i64,
}

impl Default for DiophantineParams {
    fn default() -> Self {
        DiophantineParams { c: 0.1, a: 2.0, kmax: 10_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperBoundReport<T> {
    pub holds: bool,
    pub gamma: T,
    /// Largest `(1/n) log‖T_n‖ − γ_n − κC` over the grid; negative when the bound holds.
    pub worst_excess: T,
}

/// Checks `(1/n) log ‖T_n ··· T_1‖ < γ_n + κC` on every grid θ. Refuses fields
/// that fail the finite Diophantine condition.
pub fn lyap_upper_bound_check<T: Real>(
    spec: &WalkSpec<T>,
    z: C<T>,
    n: usize,
    kappa: T,
    samples: usize,
    c_const: T,
    dioph: DiophantineParams,
) -> Result<UpperBoundReport<T>> {
    validate(spec, z, n, samples)?;
    let dc = diophantine_check(spec.field().to_f64().unwrap(), dioph.c, dioph.a, dioph.kmax)?;
    if !dc.holds {
        return Err(WalkError::NotDiophantine { k: dc.worst_k });
    }
    let vals = per_theta(spec, z, n, &theta_grid(samples));
    let (gamma, _) = mean_stderr(&vals);
    let top = vals.iter().copied().fold(T::neg_infinity(), T::max);
    let worst_excess = top - gamma - kappa * c_const;
    Ok(UpperBoundReport { holds: worst_excess < T::zero(), gamma, worst_excess })
}

/// `C_a = log 2 − log a − log ρ`, as the constant is printed.
pub fn c_a_log_rho(a: f64, rho: f64) -> f64 {
    2f64.ln() - a.ln() - rho.ln()
}

/// `C_a = log 2 − log a − ρ`, as implied by `sup |a(θ+iλ)| = a e^{ρ}`.
pub fn c_a_linear_rho(a: f64, rho: f64) -> f64 {
    2f64.ln() - a.ln() - rho
}

/// `log sup_θ ‖T(θ, z)‖`, a uniform bound on every `(1/n) log ‖T_n‖`.
pub fn log_sup_transfer_norm<T: Real>(spec: &WalkSpec<T>, z: C<T>, samples: usize) -> Result<T> {
    validate(spec, z, 1, samples)?;
    let mut top = T::neg_infinity();
    for th in theta_grid::<T>(samples) {
        top = top.max(transfer_mat2(&spec.with_offset(th), 0, z)?.op_norm().ln());
    }
    Ok(top)
}
