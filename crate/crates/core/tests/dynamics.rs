use ewalk_core::dynamics::*;
use ewalk_core::{dense_window_matrix, Coin, Field, StateVector, WalkSpec};
use num_complex::Complex;

type C64 = Complex<f64>;

fn golden() -> f64 {
    Field::Golden.phi()
}

fn final_only(steps: usize) -> EvolveOptions {
    EvolveOptions { schedule: RecordSchedule::Explicit(vec![steps]), ..Default::default() }
}

#[test]
fn support_cone() {
    let spec = WalkSpec::new(Coin::hadamard(), golden(), 0.4);
    for t in [1usize, 7, 40] {
        let psi = evolve(&spec, &StateVector::delta(0), t, &final_only(t)).unwrap().final_state;
        let t = t as i64;
        for k in 2 * (-t - 3)..2 * (t + 3) {
            let outside = k.div_euclid(2) < -t || k.div_euclid(2) > t;
            if outside {
                assert_eq!(psi.get(k), C64::new(0.0, 0.0), "index {k} at t = {t}");
            }
        }
        // the even slot travels left one cell per step, so the left edge is reached
        assert!(psi.get(-2 * t).norm() > 0.0);
    }
}

#[test]
fn position_distribution_is_offset_independent() {
    let base = WalkSpec::new(Coin::su2_polar(0.8, 0.3, -1.1, 0.5).unwrap(), 0.9, 0.0);
    let init = StateVector::localized(0, [C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
    let p0 = evolve(&base, &init, 300, &final_only(300)).unwrap().final_state.cell_probabilities();
    for theta in [0.7, -2.2, 3.0] {
        let p = evolve(&base.with_offset(theta), &init, 300, &final_only(300)).unwrap().final_state.cell_probabilities();
        let err = p0.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "theta {theta}: {err:e}");
    }
}

#[test]
fn norm_drift_over_ten_thousand_steps() {
    let spec = WalkSpec::new(Coin::hadamard(), golden(), 0.0);
    let tr = evolve(&spec, &StateVector::delta(0), 10_000, &EvolveOptions::default()).unwrap();
    let drift = tr.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-9, "{drift:e}");
}

#[test]
fn identity_coin_leaves_forever() {
    let spec = WalkSpec::new(Coin::identity(), 0.0, 0.0);
    let tr = evolve(&spec, &StateVector::delta(1), 200, &EvolveOptions::default()).unwrap();
    assert!(tr.fidelity.iter().all(|&f| f == 0.0));
    assert_eq!(tr.mean, tr.times.iter().map(|&t| t as f64).collect::<Vec<_>>());
    let init: StateVector<f64> = StateVector::delta(0);
    assert_eq!(init.inner(&init).norm_sqr(), 1.0);
}

// Dense powers of the truncated walk matrix; exact while the support stays inside the window.
fn dense_fidelities(spec: &WalkSpec<f64>, steps: usize) -> Vec<f64> {
    let w = dense_window_matrix(spec, -12, 12).unwrap();
    let rows = w.range();
    let dense = w.to_dense();
    let n = dense.len();
    let i0 = (0 - rows.start) as usize;
    let mut psi = vec![C64::new(0.0, 0.0); n];
    psi[i0] = C64::new(1.0, 0.0);
    let mut out = Vec::new();
    for _ in 0..steps {
        psi = (0..n).map(|r| (0..n).map(|c| dense[r][c] * psi[c]).sum()).collect();
        out.push(psi[i0].norm_sqr());
    }
    out
}

#[test]
fn revival_at_half_flux_matches_dense_oracle() {
    let field = Field::Rational { p: 1, q: 2 };
    let spec = WalkSpec::new(Coin::hadamard(), field.phi(), 0.0);
    let steps = 10;
    let fid = dense_fidelities(&spec, steps);
    let (mut t_star, mut peak) = (0, -1.0);
    for (t, &f) in fid.iter().enumerate() {
        if f > peak + 1e-14 {
            t_star = t + 1;
            peak = f;
        }
    }
    let r = revival_scan(&spec, &field, &StateVector::delta(0), steps).unwrap();
    assert_eq!(r.q, 2);
    assert_eq!(r.t_star, t_star);
    assert!((r.peak - peak).abs() < 1e-12, "{} vs {peak}", r.peak);
}

#[test]
fn hadamard_spreads_ballistically() {
    let spec = WalkSpec::new(Coin::hadamard(), 0.0, 0.0);
    let tr = evolve(&spec, &StateVector::delta(0), 1000, &EvolveOptions::default()).unwrap();
    for kind in [VarianceKind::Instantaneous, VarianceKind::TimeAveraged] {
        let s = spreading_exponent_on(&tr, 100, 1000, kind).unwrap();
        assert!((s - 2.0).abs() < 0.05, "{kind:?}: {s}");
    }
    assert!((spreading_exponent(&tr, VarianceKind::Instantaneous).unwrap() - 2.0).abs() < 0.05);
}

#[test]
fn spreading_fit_needs_two_decades() {
    let spec = WalkSpec::new(Coin::hadamard(), 0.0, 0.0);
    let tr = evolve(&spec, &StateVector::delta(0), 50, &EvolveOptions { schedule: RecordSchedule::Every(10), ..Default::default() }).unwrap();
    assert!(spreading_exponent(&tr, VarianceKind::TimeAveraged).is_err());
}

#[test]
fn golden_field_saturates() {
    let spec = WalkSpec::new(Coin::hadamard(), golden(), 0.0);
    let tr = evolve(&spec, &StateVector::delta(0), 10_000, &EvolveOptions::default()).unwrap();
    let s = spreading_exponent(&tr, VarianceKind::TimeAveraged).unwrap();
    assert!(s < 0.2, "{s}");
    let pr_at = |t: usize| tr.participation[tr.times.iter().position(|&x| x >= t).unwrap()];
    let ratio = pr_at(10_000) / pr_at(1_000);
    assert!((0.5..=2.0).contains(&ratio), "{ratio}");
}

#[test]
fn sweeps_match_sequential_runs() {
    let specs: Vec<_> = [0.0, 0.5, golden()].iter().map(|&f| WalkSpec::new(Coin::hadamard(), f, 0.1)).collect();
    let opts = EvolveOptions::default();
    let par = evolve_many(&specs, &StateVector::delta(0), 300, &opts);
    for (s, p) in specs.iter().zip(par) {
        let seq = evolve(s, &StateVector::delta(0), 300, &opts).unwrap();
        assert_eq!(seq.variance, p.unwrap().variance);
    }
}

#[test]
fn single_precision_run() {
    let spec = WalkSpec::<f32>::new(Coin::hadamard(), golden() as f32, 0.0);
    let tr = evolve(&spec, &StateVector::delta(0), 500, &EvolveOptions::default()).unwrap();
    assert!((tr.norm.last().unwrap() - 1.0).abs() < 1e-4);
}
