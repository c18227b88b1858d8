//! Identity checks shared by `ewalk verify` and the acceptance harness. Each
//! function returns a residual; tolerances live in [`TOLERANCES`].

use ewalk_core::cmv::{band_square, build_cmv, gauged_walk, sieve, Parity, VerblunskySeq};
use ewalk_core::restrict::{
    build_restriction, resolvent_cross_check, resolvent_via_solutions, tridiagonal_a, tridiagonal_a_factors,
    tridiagonal_a_formula, reconstruct_eigenfunction,
};
use ewalk_core::xfer::propagate_pairs;
use ewalk_core::{Coin64, Result, WalkSpec64};
use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

type C64 = Complex<f64>;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        Check { name: name.into(), residual, tolerance, pass: residual < tolerance }
    }
}

pub const TOLERANCES: &[(&str, f64)] = &[
    ("cmv_gauge", 1e-12),
    ("sieving", 1e-12),
    ("band_square", 1e-12),
    ("band_square_conjugation", 1e-12),
    ("resolvent_formula", 1e-8),
    ("resolvent_k_independence", 1e-10),
    ("tridiagonal_guard", 1e-12),
    ("tridiagonal_substitution", 1e-10),
    ("poisson_reconstruction", 1e-9),
    ("restriction_unitarity", 1e-12),
    ("spectral_shift", 1e-10),
];

pub fn tolerance(name: &str) -> f64 {
    TOLERANCES.iter().find(|(n, _)| *n == name).map(|p| p.1).expect("documented tolerance")
}

fn phase(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(1.0, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
}

fn random_spec(rng: &mut ChaCha8Rng) -> WalkSpec64 {
    let coin = Coin64::su2_polar(rng.gen_range(0.2..0.95), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.0..6.0))
        .expect("|a| in range");
    WalkSpec64::new(coin, rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..std::f64::consts::TAU))
}

/// `max ‖Λ*W_ΦΛ − ℰ‖_max` on the 100-cell interior `[-100, 100)` over random `(Φ, θ)`.
pub fn cmv_gauge(coin: &Coin64, rng: &mut ChaCha8Rng, pairs: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let spec = WalkSpec64::new(*coin, rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..std::f64::consts::TAU));
        let range = -104..104;
        let e = build_cmv(&VerblunskySeq::Electric { coin: spec.coin, field: spec.field(), offset: spec.offset() }, range.clone())?;
        worst = worst.max(gauged_walk(&spec, range).max_abs_diff_on(&e.mat, -100..100));
    }
    Ok(worst)
}

/// `‖ℰ² − (Ẽ ⊕ Ẽᵀ)‖_max` on 80 indices for a sparse skew-shift sequence, both parities.
pub fn sieving(lambda: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for parity in [Parity::Odd, Parity::Even] {
        let inner = VerblunskySeq::SkewShift { lambda, field: 2.3, theta: 0.7, xi: 0.1, zeta: 1.9 };
        let e = build_cmv(&VerblunskySeq::Sparse { inner: Box::new(inner), parity }, -40..40)?;
        worst = worst.max(sieve(&e)?.residual);
    }
    Ok(worst)
}

/// `(‖W² − (U ⊕ Ũ)‖_max, ‖Ũ − MUM*‖_max)` on 100 cells.
pub fn band_square_residuals(spec: &WalkSpec64) -> Result<(f64, f64)> {
    let bs = band_square(spec, -50..50)?;
    Ok((bs.residual, bs.conjugation_residual))
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ResolventStats {
    /// Largest relative error between formula and direct inverse.
    pub rel_err: f64,
    /// Largest relative spread of a formula entry over the Wronskian cell `k`.
    pub k_spread: f64,
    pub windows: usize,
}

/// Random windows of 12–30 cells and random `z` with `dist(z, σ) > 1e-2`.
pub fn resolvent_oracle(rng: &mut ChaCha8Rng, trials: usize) -> Result<ResolventStats> {
    let mut st = ResolventStats::default();
    while st.windows < trials {
        let spec = random_spec(rng);
        let cells = rng.gen_range(12..=30);
        let r = build_restriction(&spec, 0, cells, phase(rng), phase(rng))?;
        let z = C64::from_polar(rng.gen_range(0.7..1.4), rng.gen_range(-3.14..3.14));
        if r.spectral_distance(z)? <= 1e-2 {
            continue;
        }
        for (_, _, f, d) in resolvent_cross_check(&r, z, r.b)? {
            st.rel_err = st.rel_err.max((f - d).abs() / d);
        }
        let (x, y) = (rng.gen_range(1..cells - 1), cells);
        let (x, y) = (x, rng.gen_range(x + 1..=y));
        let (i, j) = (rng.gen_range(0..2), rng.gen_range(0..2));
        let reference = resolvent_via_solutions(&r, z, x, y, i, j, r.b)?;
        for k in r.a + 1..=r.b {
            let v = resolvent_via_solutions(&r, z, x, y, i, j, k)?;
            st.k_spread = st.k_spread.max((v - reference).abs() / reference);
        }
        st.windows += 1;
    }
    Ok(st)
}

/// `(formula vs factor construction of A, max ‖Aψ‖ over eigenvectors ψ)`.
pub fn tridiagonal(spec: &WalkSpec64, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
    let r = build_restriction(spec, 0, 20, phase(rng), phase(rng))?;
    let z = C64::from_polar(1.1, 0.4);
    let guard = tridiagonal_a_formula(&r, z).max_abs_diff(&tridiagonal_a_factors(&r, z));
    let ep = r.eigen()?;
    let mut sub: f64 = 0.0;
    for c in 0..r.len() {
        let a = tridiagonal_a(&r, ep.values[c])?;
        let v: Vec<C64> = (0..r.len()).map(|i| ep.vectors[(i, c)]).collect();
        sub = sub.max(a.matvec(&v).iter().map(|x| x.norm()).fold(0.0, f64::max));
    }
    Ok((guard, sub))
}

/// Relative error of reconstructing eigenvectors of `[0, 30]` on `[8, 22]` from
/// four boundary amplitudes, also compared against transfer-matrix propagation.
pub fn poisson(spec: &WalkSpec64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let big = build_restriction(spec, 0, 30, phase(rng), phase(rng))?;
    let (a, b) = (8, 22);
    let sub = build_restriction(spec, a, b, phase(rng), phase(rng))?;
    let ep = big.eigen()?;
    let mut worst: f64 = 0.0;
    for c in 0..big.len() {
        let z = ep.values[c];
        if sub.spectral_distance(z)? < 1e-3 {
            continue;
        }
        let psi = |k: i64| ep.vectors[(big.local(k), c)];
        let bd = [psi(2 * a + 1), psi(2 * a + 2), psi(2 * b - 1), psi(2 * b)];
        let rec = reconstruct_eigenfunction(&sub, z, bd)?;
        let prop = propagate_pairs(spec, z, a + 1, b - 1, [bd[0], bd[1]])?;
        let scale = (2 * a + 1..=2 * b).map(|k| psi(k).norm()).fold(0.0, f64::max);
        for (i, k) in (2 * a + 1..=2 * b).enumerate() {
            worst = worst.max((rec[i] - psi(k)).norm() / scale);
            worst = worst.max((rec[i] - prop[i]).norm() / scale);
        }
    }
    Ok(worst)
}

/// Largest `‖M*M − 𝟙‖_max` over random restrictions.
pub fn restriction_unitarity(rng: &mut ChaCha8Rng, trials: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let spec = random_spec(rng);
        let a = rng.gen_range(-50..50);
        let r = build_restriction(&spec, a, a + rng.gen_range(2..60), phase(rng), phase(rng))?;
        worst = worst.max(r.unitarity_defect());
    }
    Ok(worst)
}

/// `σ(θ) = e^{iθ}σ(0)` for restrictions whose boundary phases rotate with θ.
pub fn spectral_shift(spec: &WalkSpec64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (al, be) = (phase(rng), phase(rng));
    let base_spec = spec.with_offset(0.0);
    let base = build_restriction(&base_spec, 0, 25, al, be)?.eigenvalues()?;
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let rot = C64::from_polar(1.0, th);
        let moved = build_restriction(&base_spec.with_offset(th), 0, 25, al * rot, be * rot)?.eigenvalues()?;
        for l in moved {
            let back = l / rot;
            worst = worst.max(base.iter().map(|m| (m - back).norm()).fold(f64::INFINITY, f64::min));
        }
    }
    Ok(worst)
}

/// Every identity for one configuration, in a fixed order.
pub fn run_all(spec: &WalkSpec64, rng: &mut ChaCha8Rng, trials: usize) -> Result<Vec<Check>> {
    let t = tolerance;
    let mut out = vec![Check::new("cmv_gauge", cmv_gauge(&spec.coin, rng, trials)?, t("cmv_gauge"))];
    for lambda in [0.3, 0.7] {
        out.push(Check::new(&format!("sieving_lambda_{lambda}"), sieving(lambda)?, t("sieving")));
    }
    let (bs, conj) = band_square_residuals(spec)?;
    out.push(Check::new("band_square", bs, t("band_square")));
    out.push(Check::new("band_square_conjugation", conj, t("band_square_conjugation")));
    let rs = resolvent_oracle(rng, 4 * trials)?;
    out.push(Check::new("resolvent_formula", rs.rel_err, t("resolvent_formula")));
    out.push(Check::new("resolvent_k_independence", rs.k_spread, t("resolvent_k_independence")));
    let (guard, sub) = tridiagonal(spec, rng)?;
    out.push(Check::new("tridiagonal_guard", guard, t("tridiagonal_guard")));
    out.push(Check::new("tridiagonal_substitution", sub, t("tridiagonal_substitution")));
    out.push(Check::new("poisson_reconstruction", poisson(spec, rng)?, t("poisson_reconstruction")));
    out.push(Check::new("restriction_unitarity", restriction_unitarity(rng, 4 * trials)?, t("restriction_unitarity")));
    out.push(Check::new("spectral_shift", spectral_shift(spec, rng)?, t("spectral_shift")));
    Ok(out)
}
