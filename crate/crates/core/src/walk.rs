//! Coins, electric walk specifications, states and the one-step update.
//!
//! Cell `x` owns the interleaved indices `2x` and `2x+1`. One step of the
//! electric walk acts per cell as
//!
//! ```text
//! (Wψ)_{2x}, (Wψ)_{2x+1} = e^{i(xΦ+θ)} C₀ · (ψ_{2x+2}, ψ_{2x-1})
//! ```
//!
//! so the even component travels one cell to the left and the odd component one
//! cell to the right before the coin mixes them.

use std::ops::Range;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Result, WalkError};
use crate::linalg::{Banded, Mat2};
use crate::scalar::{cis, wrap_angle, Real, C};

/// Cell coin `e^{iη}((a,b),(c,d))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coin<T> {
    a: C<T>,
    b: C<T>,
    c: C<T>,
    d: C<T>,
    eta: T,
}

impl<T: Real> Coin<T> {
    pub fn new(a: C<T>, b: C<T>, c: C<T>, d: C<T>, eta: T) -> Result<Self> {
        let coin = Coin { a, b, c, d, eta: wrap_angle(eta) };
        let defect = Mat2::new(a, b, c, d).unitarity_defect();
        if !(defect <= T::unitarity_tol()) {
            return Err(WalkError::NonUnitaryCoin(defect.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(coin)
    }

    /// `e^{iη}((a,b),(-b*,a*))`; requires `|a|²+|b|² = 1`.
    pub fn su2(a: C<T>, b: C<T>, eta: T) -> Result<Self> {
        Self::new(a, b, -b.conj(), a.conj(), eta)
    }

    /// SU(2) coin from `|a|`, `arg a`, `arg b` (with `|b| = √(1-|a|²)`).
    pub fn su2_polar(abs_a: T, arg_a: T, arg_b: T, eta: T) -> Result<Self> {
        if !(abs_a >= T::zero() && abs_a <= T::one()) {
            return Err(WalkError::InvalidParameter(format!("|a| = {abs_a} outside [0,1]")));
        }
        let abs_b = (T::one() - abs_a * abs_a).max(T::zero()).sqrt();
        Self::su2(Complex::from_polar(abs_a, arg_a), Complex::from_polar(abs_b, arg_b), eta)
    }

    /// `a = b = 1/√2`, `c = -1/√2`, `d = 1/√2`.
    pub fn hadamard() -> Self {
        let s = T::FRAC_1_SQRT_2();
        Self::su2(s.into(), s.into(), T::zero()).unwrap()
    }

    pub fn identity() -> Self {
        Self::su2(C::one(), C::zero(), T::zero()).unwrap()
    }

    pub fn a(&self) -> C<T> {
        self.a
    }
    pub fn b(&self) -> C<T> {
        self.b
    }
    pub fn c(&self) -> C<T> {
        self.c
    }
    pub fn d(&self) -> C<T> {
        self.d
    }
    pub fn eta(&self) -> T {
        self.eta
    }

    /// The full unitary `e^{iη}((a,b),(c,d))`.
    pub fn matrix(&self) -> Mat2<T> {
        Mat2::new(self.a, self.b, self.c, self.d).scale(cis(self.eta))
    }

    pub fn is_su2_form(&self) -> bool {
        let tol = T::unitarity_tol();
        (self.c + self.b.conj()).norm() <= tol && (self.d - self.a.conj()).norm() <= tol
    }

    pub fn cast<U: Real>(&self) -> Coin<U> {
        let cv = |z: C<T>| Complex::new(U::lit(z.re.to_f64().unwrap()), U::lit(z.im.to_f64().unwrap()));
        Coin { a: cv(self.a), b: cv(self.b), c: cv(self.c), d: cv(self.d), eta: U::lit(self.eta.to_f64().unwrap()) }
    }
}

/// Electric walk `W_Φ = (⊕_x C₀ e^{i(xΦ+θ)}) S`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkSpec<T> {
    pub coin: Coin<T>,
    field: T,
    offset: T,
}

impl<T: Real> WalkSpec<T> {
    pub fn new(coin: Coin<T>, field: T, offset: T) -> Self {
        WalkSpec { coin, field: wrap_angle(field), offset: wrap_angle(offset) }
    }

    pub fn field(&self) -> T {
        self.field
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn with_offset(&self, offset: T) -> Self {
        Self::new(self.coin, self.field, offset)
    }

    pub fn with_field(&self, field: T) -> Self {
        Self::new(self.coin, field, self.offset)
    }

    /// `e^{i(xΦ+θ)}`.
    pub fn cell_phase(&self, x: i64) -> C<T> {
        cis(crate::scalar::int_angle(x, self.field) + self.offset)
    }

    /// Full coin acting at cell `x`, electric phase included.
    pub fn cell_coin(&self, x: i64) -> Mat2<T> {
        self.coin.matrix().scale(self.cell_phase(x))
    }

    /// Same operator with the coin written as an SU(2) matrix and the leftover
    /// global phase moved into the offset.
    pub fn su2_normalized(&self) -> Self {
        let full = self.coin.matrix();
        let half = full.det().arg() / T::lit(2.0);
        let u = full.scale(cis(-half));
        let coin = Coin { a: u.m[0][0], b: u.m[0][1], c: u.m[1][0], d: u.m[1][1], eta: T::zero() };
        Self::new(coin, self.field, self.offset + half)
    }
}

/// Finitely supported state, stored cell by cell.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    first_cell: i64,
    amps: Vec<C<T>>,
}

impl<T: Real> StateVector<T> {
    /// Amplitudes for interleaved indices `lo, lo+1, ...`.
    pub fn from_amplitudes(lo: i64, amps: &[C<T>]) -> Self {
        let first_cell = lo.div_euclid(2);
        let pad = (lo - 2 * first_cell) as usize;
        let mut v = vec![C::zero(); pad];
        v.extend_from_slice(amps);
        if v.len() % 2 == 1 {
            v.push(C::zero());
        }
        StateVector { first_cell, amps: v }
    }

    pub fn from_cells(first_cell: i64, amps: Vec<C<T>>) -> Self {
        assert!(amps.len() % 2 == 0, "cell storage needs an even length");
        StateVector { first_cell, amps }
    }

    /// Basis vector at interleaved index `k`.
    pub fn delta(k: i64) -> Self {
        Self::from_amplitudes(k, &[C::one()])
    }

    /// `δ_cell ⊗ e_spin` with spin 0 ↦ index 2x, spin 1 ↦ 2x+1.
    pub fn localized(cell: i64, spin: [C<T>; 2]) -> Self {
        StateVector { first_cell: cell, amps: spin.to_vec() }
    }

    pub fn first_cell(&self) -> i64 {
        self.first_cell
    }

    pub fn cells(&self) -> Range<i64> {
        self.first_cell..self.first_cell + (self.amps.len() / 2) as i64
    }

    /// Inclusive interleaved support `[lo, hi]` of the storage.
    pub fn lo(&self) -> i64 {
        2 * self.first_cell
    }
    pub fn hi(&self) -> i64 {
        2 * self.first_cell + self.amps.len() as i64 - 1
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amps
    }

    pub fn get(&self, k: i64) -> C<T> {
        let i = k - self.lo();
        if i < 0 || i as usize >= self.amps.len() {
            C::zero()
        } else {
            self.amps[i as usize]
        }
    }

    pub fn norm_sqr(&self) -> T {
        crate::scalar::pairwise_sum(&self.amps.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn inner(&self, other: &Self) -> C<T> {
        let lo = self.lo().max(other.lo());
        let hi = self.hi().min(other.hi());
        (lo..=hi).fold(C::zero(), |s, k| s + self.get(k).conj() * other.get(k))
    }

    /// `|ψ_{2x}|² + |ψ_{2x+1}|²` for each stored cell.
    pub fn cell_probabilities(&self) -> Vec<T> {
        self.amps.chunks(2).map(|p| p[0].norm_sqr() + p[1].norm_sqr()).collect()
    }
}

/// Pure shift: index `2x` moves to `2x-2`, index `2x+1` to `2x+3`.
pub fn apply_shift<T: Real>(state: &StateVector<T>) -> StateVector<T> {
    let mut out = Vec::new();
    step_into(&Mat2::identity(), |_| C::one(), state.first_cell, &state.amps, &mut out);
    StateVector { first_cell: state.first_cell - 1, amps: out }
}

/// One step of the electric walk.
pub fn apply_electric_step<T: Real>(spec: &WalkSpec<T>, state: &StateVector<T>) -> StateVector<T> {
    let mut out = Vec::new();
    let c0 = spec.coin.matrix();
    step_into(&c0, |x| spec.cell_phase(x), state.first_cell, &state.amps, &mut out);
    StateVector { first_cell: state.first_cell - 1, amps: out }
}

/// Writes the image of `src` (cells starting at `first`) into `dst`, whose
/// cells start at `first - 1`. `phase(x)` supplies the electric phase of cell x.
pub(crate) fn step_into<T: Real>(
    c0: &Mat2<T>,
    phase: impl Fn(i64) -> C<T>,
    first: i64,
    src: &[C<T>],
    dst: &mut Vec<C<T>>,
) {
    let n = src.len() / 2;
    dst.clear();
    dst.resize(src.len() + 4, C::zero());
    let m = c0.m;
    // localized tails decay into the subnormal range, which is very slow to compute on;
    // amplitudes below sqrt(min positive) carry probability under 1e-300 and are dropped
    let tiny = T::min_positive_value().sqrt();
    let flush = |z: C<T>| if z.re.abs() < tiny && z.im.abs() < tiny { C::zero() } else { z };
    for j in 0..n + 2 {
        let up = if j < n { src[2 * j] } else { C::zero() };
        let down = if (2..n + 2).contains(&j) { src[2 * (j - 2) + 1] } else { C::zero() };
        if up == C::zero() && down == C::zero() {
            continue;
        }
        let ph = phase(first - 1 + j as i64);
        dst[2 * j] = flush(ph * (m[0][0] * up + m[0][1] * down));
        dst[2 * j + 1] = flush(ph * (m[1][0] * up + m[1][1] * down));
    }
}

/// Matrix of the walk restricted to the interleaved indices in `range`, keeping
/// only couplings inside the range.
pub fn window_matrix<T: Real>(spec: &WalkSpec<T>, range: Range<i64>) -> Banded<T> {
    window_from_coins(range, |x| spec.cell_coin(x))
}

/// Walk matrix on `range` built from an arbitrary per-cell coin.
pub fn window_from_coins<T: Real>(range: Range<i64>, coin_at: impl Fn(i64) -> Mat2<T>) -> Banded<T> {
    let mut m = Banded::zeros(range.clone(), 2);
    if range.is_empty() {
        return m;
    }
    for x in range.start.div_euclid(2)..=(range.end - 1).div_euclid(2) {
        let cx = coin_at(x).m;
        let (e, o) = (2 * x, 2 * x + 1);
        m.set(e, e + 2, cx[0][0]);
        m.set(e, e - 1, cx[0][1]);
        m.set(o, e + 2, cx[1][0]);
        m.set(o, e - 1, cx[1][1]);
    }
    m
}

/// The walk on interleaved indices `[2a+1, 2b]` (the window of the finite
/// restriction to cells `[a, b]`), truncated rather than made unitary.
pub fn dense_window_matrix<T: Real>(spec: &WalkSpec<T>, a: i64, b: i64) -> Result<Banded<T>> {
    if b <= a {
        return Err(WalkError::DegenerateInterval(a, b));
    }
    Ok(window_matrix(spec, 2 * a + 1..2 * b + 1))
}

/// `ℒ = C(⊕σ₁)`: block `C_x σ₁` on the pair `(2x, 2x+1)`.
pub fn factor_l<T: Real>(spec: &WalkSpec<T>, range: Range<i64>) -> Banded<T> {
    let mut m = Banded::zeros(range.clone(), 1);
    if range.is_empty() {
        return m;
    }
    for x in range.start.div_euclid(2)..=(range.end - 1).div_euclid(2) {
        let blk = (spec.cell_coin(x) * Mat2::sigma1()).m;
        for i in 0..2 {
            for j in 0..2 {
                m.set(2 * x + i, 2 * x + j, blk[i as usize][j as usize]);
            }
        }
    }
    m
}

/// `ℳ = (⊕σ₁)S`: the swap `2y-1 ↔ 2y`.
pub fn factor_m<T: Real>(range: Range<i64>) -> Banded<T> {
    let mut m = Banded::zeros(range.clone(), 1);
    for k in range {
        let partner = if k.rem_euclid(2) == 0 { k - 1 } else { k + 1 };
        m.set(k, partner, C::one());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    type St = StateVector<f64>;

    #[test]
    fn shift_moves_components() {
        let s = apply_shift(&St::delta(0));
        assert_eq!(s.get(-2), C::one());
        assert!(s.norm_sqr() == 1.0);
        let s = apply_shift(&St::delta(1));
        assert_eq!(s.get(3), C::one());
        let s = apply_shift(&St::delta(-3));
        assert_eq!(s.get(-1), C::one());
    }

    #[test]
    fn identity_coin_is_pure_shift() {
        let spec = WalkSpec::new(Coin::<f64>::identity(), 0.0, 0.0);
        let psi = St::from_amplitudes(-3, &[Complex::new(0.3, 0.1), Complex::new(-0.2, 0.5), Complex::new(0.7, 0.0)]);
        assert_eq!(apply_electric_step(&spec, &psi), apply_shift(&psi));
    }

    #[test]
    fn hadamard_first_step_values() {
        let spec = WalkSpec::new(Coin::<f64>::hadamard(), 0.0, 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let up = apply_electric_step(&spec, &St::delta(0));
        // even component lands in cell -1 and is mixed by the first column of C₀
        assert!((up.get(-2) - C::from(s)).norm() < 1e-15);
        assert!((up.get(-1) - C::from(-s)).norm() < 1e-15);
        let down = apply_electric_step(&spec, &St::delta(1));
        assert!((down.get(2) - C::from(s)).norm() < 1e-15);
        assert!((down.get(3) - C::from(s)).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_unitary() {
        let r = Coin::<f64>::new(C::one(), C::one(), C::zero(), C::one(), 0.0);
        assert!(matches!(r, Err(WalkError::NonUnitaryCoin(_))));
        assert!(Coin::<f64>::su2(Complex::new(0.6, 0.0), Complex::new(0.6, 0.0), 0.0).is_err());
    }

    #[test]
    fn su2_normalization_preserves_operator() {
        let coin = Coin::<f64>::su2_polar(0.6, 0.4, -1.1, 0.9).unwrap();
        let spec = WalkSpec::new(coin, 1.3, 0.2);
        let norm = spec.su2_normalized();
        assert!(norm.coin.is_su2_form());
        for x in -5..5 {
            let d = spec.cell_coin(x).max_abs_diff(&norm.cell_coin(x));
            assert!(d < 1e-14, "x={x}: {d}");
        }
    }

    #[test]
    fn window_bandwidth() {
        let spec = WalkSpec::new(Coin::<f64>::hadamard(), 0.7, 0.1);
        let m = dense_window_matrix(&spec, 0, 5).unwrap();
        assert_eq!(m.range(), 1..11);
        for r in m.range() {
            for c in m.range() {
                if (r - c).abs() > 2 {
                    assert_eq!(m.get(r, c), C::zero());
                }
            }
        }
        assert!(dense_window_matrix(&spec, 3, 3).is_err());
    }

    #[test]
    fn f32_step_runs() {
        let spec = WalkSpec::new(Coin::<f32>::hadamard(), 0.5, 0.0);
        let mut psi = StateVector::<f32>::delta(0);
        for _ in 0..50 {
            psi = apply_electric_step(&spec, &psi);
        }
        assert!((psi.norm() - 1.0).abs() < 1e-5);
    }
}
