use ewalk_core::xfer::*;
use ewalk_core::{Coin, Field, WalkSpec};
use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{Signed, ToPrimitive, Zero};

type C64 = Complex<f64>;

fn golden() -> f64 {
    Field::Golden.phi()
}

fn coin_with_abs_a(abs_a: f64) -> Coin<f64> {
    Coin::su2_polar(abs_a, 0.4, -0.9, 0.0).unwrap()
}

// Exact dyadic complex numbers m·2^e with a shared exponent.
#[derive(Clone, Debug)]
struct Dy {
    re: BigInt,
    im: BigInt,
    e: i64,
}

fn split(x: f64) -> (BigInt, i64) {
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.abs().to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = if exp == 0 { (bits & ((1 << 52) - 1)) << 1 } else { (bits & ((1 << 52) - 1)) | (1 << 52) };
    let m = BigInt::from(mant) * if x < 0.0 { -1 } else { 1 };
    (m, exp.max(1) - 1075)
}

impl Dy {
    fn from_c(z: C64) -> Dy {
        let (mr, er) = split(z.re);
        let (mi, ei) = split(z.im);
        let e = er.min(ei);
        Dy { re: mr << (er - e) as usize, im: mi << (ei - e) as usize, e }
    }
    fn zero() -> Dy {
        Dy { re: BigInt::zero(), im: BigInt::zero(), e: 0 }
    }
    fn mul(&self, o: &Dy) -> Dy {
        Dy { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re, e: self.e + o.e }
    }
    fn add(&self, o: &Dy) -> Dy {
        let e = self.e.min(o.e);
        let s = |x: &BigInt, k: i64| x << (k - e) as usize;
        Dy { re: s(&self.re, self.e) + s(&o.re, o.e), im: s(&self.im, self.e) + s(&o.im, o.e), e }
    }
    fn to_c(&self) -> C64 {
        let cv = |m: &BigInt| {
            let shift = (m.bits() as i64 - 60).max(0);
            let top = (m.abs() >> shift as usize).to_f64().unwrap() * if m.is_negative() { -1.0 } else { 1.0 };
            top * 2f64.powi((self.e + shift) as i32)
        };
        C64::new(cv(&self.re), cv(&self.im))
    }
}

// One cell of the eigenvalue equation Wψ = zψ, solved for (ψ_{2x+1}, ψ_{2x+2})
// from (ψ_{2x-1}, ψ_{2x}) without using the closed form of the transfer matrix.
fn transfer_from_eigen_equation(spec: &WalkSpec<f64>, x: i64, z: C64) -> [[C64; 2]; 2] {
    let c = spec.coin;
    let phase = C64::from_polar(1.0, x as f64 * spec.field() + spec.offset() + c.eta());
    let solve = |m: C64, p: C64| {
        let next_even = (z * p / phase - c.b() * m) / c.a();
        let next_odd = phase * (c.c() * next_even + c.d() * m) / z;
        [next_odd, next_even]
    };
    let e1 = solve(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let e2 = solve(C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    [[e1[0], e2[0]], [e1[1], e2[1]]]
}

fn op_norm_plain(m: [[C64; 2]; 2]) -> f64 {
    let g00 = m[0][0].norm_sqr() + m[1][0].norm_sqr();
    let g11 = m[0][1].norm_sqr() + m[1][1].norm_sqr();
    let g01 = (m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1]).norm();
    let tr = g00 + g11;
    let disc = ((g00 - g11).powi(2) + 4.0 * g01 * g01).sqrt();
    ((tr + disc) / 2.0).sqrt()
}

#[test]
fn renormalized_product_matches_exact_dyadic_product() {
    for (abs_a, theta, z) in [(0.5, 0.3, C64::from_polar(1.0, 0.7)), (0.9, 1.9, C64::from_polar(1.0, -2.0)), (0.6, 0.0, C64::new(1.3, 0.4))] {
        let spec = WalkSpec::new(coin_with_abs_a(abs_a), golden(), theta);
        let n = 50;
        let mut acc = [[Dy::from_c(C64::new(1.0, 0.0)), Dy::zero()], [Dy::zero(), Dy::from_c(C64::new(1.0, 0.0))]];
        for x in 0..n {
            let t = transfer_from_eigen_equation(&spec, x, z);
            let td = t.map(|r| r.map(Dy::from_c));
            acc = [0, 1].map(|i| [0, 1].map(|j| td[i][0].mul(&acc[0][j]).add(&td[i][1].mul(&acc[1][j]))));
        }
        let exact = acc.map(|r| r.map(|d| d.to_c()));
        let want = op_norm_plain(exact).ln();
        let got = cocycle_product(&spec, z, theta, n as usize).unwrap().log_norm();
        assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "|a| = {abs_a}: {got} vs {want}");
    }
}

#[test]
fn lyapunov_matches_log_inverse_a() {
    for abs_a in [0.5, std::f64::consts::FRAC_1_SQRT_2, 0.9] {
        let spec = WalkSpec::new(coin_with_abs_a(abs_a), golden(), 0.0);
        let est = finite_lyapunov(&spec, C64::new(1.0, 0.0), 2000, 64).unwrap();
        let want = -abs_a.ln();
        assert!((est.gamma - want).abs() < 0.02, "|a| = {abs_a}: {} vs {want}", est.gamma);
    }
}

#[test]
fn lyapunov_is_independent_of_spectral_parameter_on_circle() {
    let spec = WalkSpec::new(Coin::hadamard(), golden(), 0.0);
    for arg in [0.5, 2.0, -1.3] {
        let est = finite_lyapunov(&spec, C64::from_polar(1.0, arg), 2000, 32).unwrap();
        assert!((est.gamma - 2f64.ln() / 2.0).abs() < 0.02, "{}", est.gamma);
    }
}

#[test]
fn herman_avila_bochi_sides_agree() {
    for abs_a in [0.5, std::f64::consts::FRAC_1_SQRT_2, 0.9] {
        let spec = WalkSpec::new(coin_with_abs_a(abs_a), golden(), 0.0);
        let (lhs, rhs) = herman_avila_bochi_check(&spec, 1000, 32, 4).unwrap();
        assert!((lhs - rhs).abs() < 0.02, "|a| = {abs_a}: {lhs} vs {rhs}");
        assert!((rhs + abs_a.ln()).abs() < 1e-9, "rhs {rhs}");
    }
}

#[test]
fn sl2r_conjugate_norm_is_one_over_abs_a() {
    let spec = WalkSpec::new(coin_with_abs_a(0.6), 0.0, 0.7);
    let t = transfer_mat2(&spec, 0, C64::new(1.0, 0.0)).unwrap();
    let a = su11_to_sl2r(&unimodular(&t), C64::new(1.0, 0.0)).unwrap();
    let nm = a.op_norm();
    assert!(((nm + 1.0 / nm) / 2.0 - 1.0 / 0.6).abs() < 1e-12);
}

#[test]
fn orbit_average_tracks_grid_average() {
    let spec = WalkSpec::new(Coin::hadamard(), golden(), 0.2);
    let z = C64::new(1.0, 0.0);
    let mut errs = Vec::new();
    for n in [100, 400] {
        let orbit = orbit_average(&spec, z, n, 10_000, 2.0).unwrap();
        let grid = finite_lyapunov(&spec, z, n, 512).unwrap().gamma;
        errs.push((orbit - grid).abs());
    }
    assert!(errs[0] < 0.05, "{errs:?}");
    assert!(errs[1] <= errs[0] + 1e-3, "{errs:?}");
}

#[test]
fn deviation_set_shrinks_with_n() {
    let spec = WalkSpec::new(Coin::hadamard(), golden(), 0.0);
    let z = C64::new(1.0, 0.0);
    let m: Vec<f64> = [50, 200, 800].iter().map(|&n| deviation_measure(&spec, z, n, 0.02, 256).unwrap()).collect();
    assert!(m[0] >= m[1] && m[1] >= m[2], "{m:?}");
}

#[test]
fn upper_bound_on_diophantine_field() {
    let spec = WalkSpec::new(Coin::hadamard(), golden(), 0.0);
    let z = C64::new(1.0, 0.0);
    let r = lyap_upper_bound_check(&spec, z, 1000, 0.05, 128, 1.0, DiophantineParams::default()).unwrap();
    assert!(r.holds, "{r:?}");
    let rational = WalkSpec::new(Coin::hadamard(), std::f64::consts::TAU / 5.0, 0.0);
    assert!(lyap_upper_bound_check(&rational, z, 100, 0.05, 16, 1.0, DiophantineParams::default()).is_err());
}

#[test]
fn sup_norm_bounds_every_finite_exponent() {
    let spec = WalkSpec::new(coin_with_abs_a(0.7), golden(), 0.0);
    let z = C64::from_polar(1.0, 0.4);
    let bound = log_sup_transfer_norm(&spec, z, 256).unwrap();
    for th in [0.0, 1.0, 2.5] {
        let v = cocycle_product(&spec, z, th, 300).unwrap().log_norm() / 300.0;
        assert!(v <= bound + 1e-12);
    }
}
