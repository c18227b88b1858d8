//! CMV matrices from Verblunsky coefficients, the gauge that turns the
//! electric walk into one, sieving, and the band-matrix form of `W²`.

use std::ops::Range;

use num_traits::Zero;

use crate::error::{Result, WalkError};
use crate::linalg::{Banded, Mat2};
use crate::scalar::{cis, int_angle, Real, C};
use crate::walk::{window_matrix, Coin, WalkSpec};

/// `Θ(α) = ((α*, ρ), (ρ, −α))` with `ρ = √(1 − |α|²)`.
pub fn theta_block<T: Real>(alpha: C<T>) -> Result<Mat2<T>> {
    let r2 = alpha.norm_sqr();
    if !(r2 < T::one()) {
        return Err(WalkError::VerblunskyOutOfDisk { index: 0, modulus: alpha.norm().to_f64().unwrap() });
    }
    let rho: C<T> = (T::one() - r2).sqrt().into();
    Ok(Mat2::new(alpha.conj(), rho, rho, -alpha))
}

/// Verblunsky coefficient of the gauged electric walk at interleaved index `k`:
/// `α_{2x} = −c e^{−i(x²Φ + x(arg a + arg d) + 2xθ + arg a)}`, `α_{2x+1} = 0`.
/// The coin entries include the phase `e^{iη}`.
pub fn electric_verblunsky<T: Real>(coin: &Coin<T>, field: T, offset: T, k: i64) -> C<T> {
    if k.rem_euclid(2) == 1 {
        return C::zero();
    }
    let x = k.div_euclid(2);
    let [[a, _], [c, d]] = coin.matrix().m;
    let lin = a.arg() + d.arg() + T::lit(2.0) * offset;
    let ph = int_angle(x * x, field) + int_angle(x, lin) + a.arg();
    -c * cis(-ph)
}

/// Diagonal entry of the gauge `Λ` at interleaved index `k`:
/// `e^{−i(x(x−1)Φ/2 + x(arg a + θ))}` on `2x` and `e^{i(x(x+1)Φ/2 + x(arg d + θ))}` on `2x+1`.
pub fn gauge_lambda<T: Real>(coin: &Coin<T>, field: T, offset: T, k: i64) -> C<T> {
    let x = k.div_euclid(2);
    let [[a, _], [_, d]] = coin.matrix().m;
    if k.rem_euclid(2) == 0 {
        cis(-(int_angle(x * (x - 1) / 2, field) + int_angle(x, a.arg() + offset)))
    } else {
        cis(int_angle(x * (x + 1) / 2, field) + int_angle(x, d.arg() + offset))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(k: i64) -> Self {
        if k.rem_euclid(2) == 0 { Parity::Even } else { Parity::Odd }
    }
    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Generators of Verblunsky sequences, indexed by the integer `k`.
#[derive(Clone, Debug, PartialEq)]
pub enum VerblunskySeq<T> {
    Constant(C<T>),
    /// `λ e^{−i(kΦ + θ)}`.
    QuasiPeriodic { lambda: T, field: T, theta: T },
    /// `λ e^{−i(k²Φ + k(θ+ξ) + ζ)}`.
    SkewShift { lambda: T, field: T, theta: T, xi: T, zeta: T },
    /// Coefficients of the gauged electric walk.
    Electric { coin: Coin<T>, field: T, offset: T },
    /// `inner(m)` placed at `k = 2m` (parity `Even`) or `k = 2m+1` (`Odd`), zero elsewhere.
    Sparse { inner: Box<VerblunskySeq<T>>, parity: Parity },
    /// `values[k - start]`, zero outside.
    Explicit { start: i64, values: Vec<C<T>> },
}

impl<T: Real> VerblunskySeq<T> {
    pub fn alpha(&self, k: i64) -> C<T> {
        match self {
            VerblunskySeq::Constant(a) => *a,
            VerblunskySeq::QuasiPeriodic { lambda, field, theta } => {
                cis(-(int_angle(k, *field) + *theta)) * *lambda
            }
            VerblunskySeq::SkewShift { lambda, field, theta, xi, zeta } => {
                cis(-(int_angle(k * k, *field) + int_angle(k, *theta + *xi) + *zeta)) * *lambda
            }
            VerblunskySeq::Electric { coin, field, offset } => electric_verblunsky(coin, *field, *offset, k),
            VerblunskySeq::Sparse { inner, parity } => {
                if Parity::of(k) == *parity {
                    inner.alpha(k.div_euclid(2))
                } else {
                    C::zero()
                }
            }
            VerblunskySeq::Explicit { start, values } => {
                let i = k - start;
                if i < 0 || i as usize >= values.len() { C::zero() } else { values[i as usize] }
            }
        }
    }
}

/// Banded unitary built as a product of two Θ-layers. `first_layer` names the
/// parity of the left factor, so `Even` is the CMV ordering and `Odd` its transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedUnitary<T> {
    pub mat: Banded<T>,
    pub first_layer: Parity,
}

impl<T: Real> BandedUnitary<T> {
    pub fn range(&self) -> Range<i64> {
        self.mat.range()
    }

    /// Range with `margin` indices dropped at each end.
    pub fn interior(&self, margin: i64) -> Range<i64> {
        let r = self.range();
        r.start + margin..(r.end - margin).max(r.start + margin)
    }
}

/// `⊕ Θ(α_k)` on the pairs `(k, k+1)` with `k` of the given parity that fit in `range`.
pub fn theta_layer<T: Real>(seq: &VerblunskySeq<T>, range: Range<i64>, parity: Parity) -> Result<Banded<T>> {
    let mut m = Banded::zeros(range.clone(), 1);
    for k in range.start..range.end - 1 {
        if Parity::of(k) != parity {
            continue;
        }
        let alpha = seq.alpha(k);
        let blk = theta_block(alpha).map_err(|_| WalkError::VerblunskyOutOfDisk {
            index: k,
            modulus: alpha.norm().to_f64().unwrap(),
        })?;
        for i in 0..2 {
            for j in 0..2 {
                m.set(k + i, k + j, blk.m[i as usize][j as usize]);
            }
        }
    }
    Ok(m)
}

/// `ℰ = (⊕_{k even} Θ_k)(⊕_{k odd} Θ_k)` on an even-aligned half-open range.
/// Odd blocks straddling the ends are dropped, so only the interior is exact.
pub fn build_cmv<T: Real>(seq: &VerblunskySeq<T>, range: Range<i64>) -> Result<BandedUnitary<T>> {
    if range.start.rem_euclid(2) != 0 || range.end.rem_euclid(2) != 0 || range.end <= range.start {
        return Err(WalkError::Misaligned(range.start, range.end));
    }
    let even = theta_layer(seq, range.clone(), Parity::Even)?;
    let odd = theta_layer(seq, range, Parity::Odd)?;
    Ok(BandedUnitary { mat: even.matmul(&odd), first_layer: Parity::Even })
}

/// Diagonal gauge as a banded matrix on `range`.
pub fn gauge_matrix<T: Real>(spec: &WalkSpec<T>, range: Range<i64>) -> Banded<T> {
    let mut g = Banded::zeros(range.clone(), 0);
    for k in range {
        g.set(k, k, gauge_lambda(&spec.coin, spec.field(), spec.offset(), k));
    }
    g
}

/// `Λ* W Λ` on `range` (exact away from the ends).
pub fn gauged_walk<T: Real>(spec: &WalkSpec<T>, range: Range<i64>) -> Banded<T> {
    let g = gauge_matrix(spec, range.clone());
    g.adjoint().matmul(&window_matrix(spec, range)).matmul(&g).reshaped(g.range(), 2)
}

/// A split of the integers into a sublattice and its complement, each
/// relabelled onto consecutive integers by `map`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sublattice {
    /// `{0, 3 mod 4}` vs `{1, 2 mod 4}`, `m = ⌊k/2⌋`.
    ZeroThree,
    /// `{0, 1 mod 4}` vs `{2, 3 mod 4}`, `m = ⌊(k+1)/2⌋`.
    ZeroOne,
}

impl Sublattice {
    pub fn contains(self, k: i64) -> bool {
        let r = k.rem_euclid(4);
        match self {
            Sublattice::ZeroThree => r == 0 || r == 3,
            Sublattice::ZeroOne => r == 0 || r == 1,
        }
    }

    pub fn map(self, k: i64) -> i64 {
        match self {
            Sublattice::ZeroThree => k.div_euclid(2),
            Sublattice::ZeroOne => (k + 1).div_euclid(2),
        }
    }

    /// Indices `k` in `range` (of the sublattice or its complement) together with `map(k)`.
    fn members(self, range: Range<i64>, complement: bool) -> Vec<(i64, i64)> {
        range.filter(|&k| self.contains(k) != complement).map(|k| (k, self.map(k))).collect()
    }
}

/// Largest entry of `big` coupling the sublattice to its complement, rows and columns in `interior`.
fn cross_block<T: Real>(big: &Banded<T>, split: Sublattice, interior: Range<i64>) -> T {
    let mut out = T::zero();
    for r in interior.clone() {
        for c in big.row_cols(r) {
            if interior.contains(&c) && split.contains(r) != split.contains(c) {
                out = out.max(big.get(r, c).norm());
            }
        }
    }
    out
}

/// Pulls the block of `big` on one side of `split` back to relabelled indices.
fn extract<T: Real>(big: &Banded<T>, split: Sublattice, interior: Range<i64>, complement: bool) -> Banded<T> {
    let members = split.members(interior, complement);
    let lo = members.first().map_or(0, |m| m.1);
    let hi = members.last().map_or(0, |m| m.1 + 1);
    let w = big.half_bandwidth().div_ceil(2) + 1;
    let mut out = Banded::zeros(lo..hi, w);
    for &(r, mr) in &members {
        for &(c, mc) in &members {
            if (mr - mc).unsigned_abs() as usize <= w {
                out.set(mr, mc, big.get(r, c));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sieved<T> {
    /// Block of `ℰ²` on the sublattice, relabelled.
    pub tilde: BandedUnitary<T>,
    /// Block on the complement, relabelled.
    pub tilde_t: BandedUnitary<T>,
    /// Parity of the nonvanishing coefficients of the input.
    pub parity: Parity,
    pub split: Sublattice,
    /// `max(cross blocks, ‖complement block − tildeᵀ‖)` on the interior.
    pub residual: T,
}

/// Splits `ℰ²` as `Ẽ ⊕ Ẽᵀ` for a CMV matrix whose Verblunsky coefficients
/// vanish on every second index. The vanishing parity is detected from `ℰ²`.
pub fn sieve<T: Real>(e: &BandedUnitary<T>) -> Result<Sieved<T>> {
    let sq = e.mat.matmul(&e.mat);
    let interior = e.interior(4);
    let scale = T::lit(1e3) * T::unitarity_tol();
    let candidates = [(Sublattice::ZeroThree, Parity::Odd), (Sublattice::ZeroOne, Parity::Even)];
    let (split, parity, cross) = candidates
        .iter()
        .map(|&(s, p)| (s, p, cross_block(&sq, s, interior.clone())))
        .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
        .unwrap();
    if !(cross <= scale) {
        return Err(WalkError::NotSparse);
    }
    let tilde = extract(&sq, split, interior.clone(), false);
    let comp = extract(&sq, split, interior, true);
    // both relabelled ranges are compared on their overlap, away from the ends
    let lo = tilde.range().start.max(comp.range().start) + 1;
    let hi = tilde.range().end.min(comp.range().end) - 1;
    let tt = tilde.transpose();
    let common = lo..hi.max(lo);
    let r = |m: &Banded<T>| m.reshaped(common.clone(), m.half_bandwidth());
    let resid = r(&comp).max_abs_diff_on(&r(&tt), common.clone()).max(cross);
    Ok(Sieved {
        tilde: BandedUnitary { mat: tilde, first_layer: Parity::Even },
        tilde_t: BandedUnitary { mat: comp, first_layer: Parity::Odd },
        parity,
        split,
        residual: resid,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandSquare<T> {
    /// `U = L M` on the cells of even parity, relabelled by `m = ⌊(k+1)/2⌋`.
    pub u: BandedUnitary<T>,
    /// `Ũ = M L` on the odd cells.
    pub u_tilde: BandedUnitary<T>,
    /// `‖W² − (U ⊕ Ũ)‖_max` on the interior, cross blocks included.
    pub residual: T,
    /// `‖Ũ − M U M*‖_max` on the interior.
    pub conjugation_residual: T,
}

/// Builds the layers `L = ⊕_{m even} B_m`, `M = ⊕_{m odd} B_m` with
/// `B_m = C_m σ₁` placed on `(m, m+1)`.
fn b_layer<T: Real>(spec: &WalkSpec<T>, range: Range<i64>, parity: Parity) -> Banded<T> {
    let mut out = Banded::zeros(range.clone(), 1);
    for m in range.start..range.end - 1 {
        if Parity::of(m) != parity {
            continue;
        }
        let b = (spec.cell_coin(m) * Mat2::sigma1()).m;
        for i in 0..2 {
            for j in 0..2 {
                out.set(m + i, m + j, b[i as usize][j as usize]);
            }
        }
    }
    out
}

/// Decomposes `W²` on cells `cells` into the two unitary band matrices acting on
/// cells of even and odd parity.
pub fn band_square<T: Real>(spec: &WalkSpec<T>, cells: Range<i64>) -> Result<BandSquare<T>> {
    if cells.end - cells.start < 8 {
        return Err(WalkError::DegenerateInterval(cells.start, cells.end));
    }
    let w = window_matrix(spec, 2 * cells.start..2 * cells.end);
    let sq = w.matmul(&w);
    let interior = 2 * cells.start + 6..2 * cells.end - 6;
    let split = Sublattice::ZeroOne;
    let cross = cross_block(&sq, split, interior.clone());

    let ev = extract(&sq, split, interior.clone(), false);
    let od = extract(&sq, split, interior, true);
    let mrange = ev.range().start.min(od.range().start) - 2..ev.range().end.max(od.range().end) + 2;
    let l = b_layer(spec, mrange.clone(), Parity::Even);
    let m = b_layer(spec, mrange.clone(), Parity::Odd);
    let u = l.matmul(&m);
    let ut = m.matmul(&l);

    let shrink = |r: Range<i64>| r.start + 1..r.end - 1;
    let diff = |got: &Banded<T>, want: &Banded<T>| {
        let rg = shrink(got.range());
        got.reshaped(rg.clone(), 2).max_abs_diff_on(&want.reshaped(rg.clone(), 2), rg)
    };
    let residual = diff(&ev, &u).max(diff(&od, &ut)).max(cross);
    let conj = m.matmul(&u).matmul(&m.adjoint());
    let rg = mrange.start + 3..mrange.end - 3;
    let conjugation_residual = ut.max_abs_diff_on(&conj, rg);
    Ok(BandSquare {
        u: BandedUnitary { mat: ev, first_layer: Parity::Even },
        u_tilde: BandedUnitary { mat: od, first_layer: Parity::Odd },
        residual,
        conjugation_residual,
    })
}

/// Unit-circle distance `|e^{ia} − e^{ib}|`, safe across branch cuts.
pub fn phase_distance<T: Real>(a: T, b: T) -> T {
    (cis(a) - cis(b)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use num_traits::One;

    #[test]
    fn theta_block_values() {
        let s = theta_block::<f64>(C::zero()).unwrap();
        assert_eq!(s, Mat2::sigma1());
        let h = theta_block::<f64>(C::from(0.5)).unwrap();
        let r = 3f64.sqrt() / 2.0;
        assert!(h.max_abs_diff(&Mat2::from_real(0.5, r, r, -0.5)) < 1e-15);
        assert!(theta_block::<f64>(C::from(1.0)).is_err());
        let g = theta_block(Complex::new(0.3, -0.8)).unwrap();
        assert!(g.unitarity_defect() < 1e-15);
    }

    #[test]
    fn hadamard_verblunsky() {
        let coin = Coin::<f64>::hadamard();
        let phi = 0.77;
        let th = 0.31;
        for x in -4i64..5 {
            let want = cis(-((x * x) as f64 * phi + 2.0 * x as f64 * th)) * std::f64::consts::FRAC_1_SQRT_2;
            assert!((electric_verblunsky(&coin, phi, th, 2 * x) - want).norm() < 1e-14);
            assert_eq!(electric_verblunsky(&coin, phi, th, 2 * x + 1), C::zero());
        }
    }

    #[test]
    fn gauge_is_identity_at_origin() {
        let coin = Coin::<f64>::su2_polar(0.6, 1.0, 0.3, 0.2).unwrap();
        assert_eq!(gauge_lambda(&coin, 1.0, 0.4, 0), C::one());
        assert_eq!(gauge_lambda(&coin, 1.0, 0.4, 1), C::one());
    }

    #[test]
    fn misaligned_range_rejected() {
        let seq = VerblunskySeq::<f64>::Constant(C::zero());
        assert!(matches!(build_cmv(&seq, 1..10), Err(WalkError::Misaligned(1, 10))));
    }

    #[test]
    fn sparse_placement() {
        let seq = VerblunskySeq::Sparse {
            inner: Box::new(VerblunskySeq::<f64>::Constant(C::from(0.5))),
            parity: Parity::Odd,
        };
        assert_eq!(seq.alpha(3), C::from(0.5));
        assert_eq!(seq.alpha(-2), C::zero());
    }
}
