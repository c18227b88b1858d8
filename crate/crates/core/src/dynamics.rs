//! Long-time evolution with exact support growth and the observables used to
//! classify transport: moments, return fidelity, participation ratio.

use rayon::prelude::*;

use crate::error::{Result, WalkError};
use crate::numtheory::Field;
use crate::scalar::{Real, C};
use crate::walk::{step_into, StateVector, WalkSpec};

/// Default cap on the number of stored interleaved indices.
pub const DEFAULT_INDEX_CAP: usize = 200_000;

/// Which times to record.
#[derive(Clone, Debug, PartialEq)]
pub enum RecordSchedule {
    /// `t = ⌈r^k⌉` (deduplicated), plus the final time.
    Geometric(f64),
    Every(usize),
    Explicit(Vec<usize>),
}

impl Default for RecordSchedule {
    fn default() -> Self {
        RecordSchedule::Geometric(1.2)
    }
}

impl RecordSchedule {
    /// Recorded times in `1..=steps`, ascending; always includes `steps`.
    pub fn times(&self, steps: usize) -> Vec<usize> {
        let mut t: Vec<usize> = match self {
            RecordSchedule::Geometric(r) => {
                assert!(*r > 1.0, "geometric ratio must exceed 1");
                let mut out = Vec::new();
                let mut x = 1.0f64;
                while x.ceil() as usize <= steps {
                    out.push(x.ceil() as usize);
                    x *= r;
                }
                out
            }
            RecordSchedule::Every(k) => (1..=steps).filter(|t| t % (*k).max(1) == 0).collect(),
            RecordSchedule::Explicit(v) => v.iter().copied().filter(|&t| t >= 1 && t <= steps).collect(),
        };
        t.push(steps);
        t.sort_unstable();
        t.dedup();
        t
    }
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub schedule: RecordSchedule,
    pub index_cap: usize,
    /// Keep the state at every recorded time.
    pub snapshots: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { schedule: RecordSchedule::default(), index_cap: DEFAULT_INDEX_CAP, snapshots: false }
    }
}

/// Observables of one evolution. Positions are in cell units.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub spec: WalkSpec<T>,
    pub initial: StateVector<T>,
    pub times: Vec<usize>,
    pub norm: Vec<T>,
    pub mean: Vec<T>,
    pub variance: Vec<T>,
    /// Cesàro mean `(1/t) Σ_{s=1}^{t} Var(s)`.
    pub mean_variance: Vec<T>,
    /// `|⟨ψ₀|ψ_t⟩|²`.
    pub fidelity: Vec<T>,
    pub participation: Vec<T>,
    pub snapshots: Option<Vec<StateVector<T>>>,
    pub final_state: StateVector<T>,
    /// `(t*, max_{1≤t≤T} |⟨ψ₀|ψ_t⟩|²)`, earliest maximiser.
    pub peak_fidelity: (usize, T),
}

struct Moments<T> {
    norm2: T,
    mean: T,
    var: T,
}

fn moments<T: Real>(first_cell: i64, amps: &[C<T>]) -> Moments<T> {
    let (mut s0, mut s1, mut s2) = (T::zero(), T::zero(), T::zero());
    for (j, pair) in amps.chunks_exact(2).enumerate() {
        let p = pair[0].norm_sqr() + pair[1].norm_sqr();
        if p == T::zero() {
            continue;
        }
        let x = T::int(first_cell + j as i64);
        s0 += p;
        s1 += p * x;
        s2 += p * x * x;
    }
    let mean = s1 / s0;
    Moments { norm2: s0, mean, var: s2 / s0 - mean * mean }
}

/// `(Σ|ψ_k|²)² / Σ|ψ_k|⁴` of a raw amplitude slice.
fn pr_of<T: Real>(amps: &[C<T>]) -> T {
    let (mut s2, mut s4) = (T::zero(), T::zero());
    for z in amps {
        let p = z.norm_sqr();
        s2 += p;
        s4 += p * p;
    }
    s2 * s2 / s4
}

pub fn participation_ratio<T: Real>(state: &StateVector<T>) -> Result<T> {
    if state.amplitudes().iter().all(|z| z.norm_sqr() == T::zero()) {
        return Err(WalkError::InvalidParameter("participation ratio of the zero state".into()));
    }
    Ok(pr_of(state.amplitudes()))
}

/// Runs `steps` walk steps from `initial`, recording observables on the schedule.
pub fn evolve<T: Real>(
    spec: &WalkSpec<T>,
    initial: &StateVector<T>,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<Trajectory<T>> {
    if steps == 0 {
        return Err(WalkError::InvalidParameter("need at least one step".into()));
    }
    let needed = initial.amplitudes().len() + 4 * steps;
    if needed > opts.index_cap {
        let max_steps = opts.index_cap.saturating_sub(initial.amplitudes().len()) / 4;
        return Err(WalkError::MemoryCap { needed, cap: opts.index_cap, max_steps });
    }
    let times = opts.schedule.times(steps);

    // electric phases for every cell the support can reach
    let cell_lo = initial.first_cell() - steps as i64 - 1;
    let ncells_max = initial.amplitudes().len() / 2 + 2 * steps + 2;
    let phases: Vec<C<T>> = (0..ncells_max as i64).map(|j| spec.cell_phase(cell_lo + j)).collect();
    let c0 = spec.coin.matrix();

    let psi0 = initial.amplitudes().to_vec();
    let first0 = initial.first_cell();
    let mut first = first0;
    let mut cur = psi0.clone();
    let mut next = Vec::with_capacity(needed);

    let mut tr = Trajectory {
        spec: *spec,
        initial: initial.clone(),
        times: Vec::with_capacity(times.len()),
        norm: Vec::new(),
        mean: Vec::new(),
        variance: Vec::new(),
        mean_variance: Vec::new(),
        fidelity: Vec::new(),
        participation: Vec::new(),
        snapshots: opts.snapshots.then(Vec::new),
        final_state: initial.clone(),
        peak_fidelity: (0, T::neg_infinity()),
    };
    let mut var_sum = T::zero();
    let mut ti = 0;
    for t in 1..=steps {
        step_into(&c0, |x| phases[(x - cell_lo) as usize], first, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        first -= 1;

        let m = moments(first, &cur);
        var_sum += m.var;
        // ψ₀ sits at cells first0.., which are cells (first0 - first).. of the current storage
        let off = 2 * (first0 - first) as usize;
        let ov = psi0.iter().zip(&cur[off..off + psi0.len()]).fold(C::new(T::zero(), T::zero()), |s, (a, b)| s + a.conj() * *b);
        let fid = ov.norm_sqr();
        if fid > tr.peak_fidelity.1 {
            tr.peak_fidelity = (t, fid);
        }
        if ti < times.len() && times[ti] == t {
            tr.times.push(t);
            tr.norm.push(m.norm2.sqrt());
            tr.mean.push(m.mean);
            tr.variance.push(m.var);
            tr.mean_variance.push(var_sum / T::from_usize(t).unwrap());
            tr.fidelity.push(fid);
            tr.participation.push(pr_of(&cur));
            if let Some(s) = tr.snapshots.as_mut() {
                s.push(StateVector::from_cells(first, cur.clone()));
            }
            ti += 1;
        }
    }
    tr.final_state = StateVector::from_cells(first, cur);
    Ok(tr)
}

/// Parallel sweep over independent specs with a shared initial state.
pub fn evolve_many<T: Real>(
    specs: &[WalkSpec<T>],
    initial: &StateVector<T>,
    steps: usize,
    opts: &EvolveOptions,
) -> Vec<Result<Trajectory<T>>> {
    specs.par_iter().map(|s| evolve(s, initial, steps, opts)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Revival<T> {
    pub q: i64,
    pub t_star: usize,
    pub peak: T,
}

/// Largest return fidelity over `1 ≤ t ≤ steps` for a rational field.
pub fn revival_scan<T: Real>(
    spec: &WalkSpec<T>,
    field: &Field,
    initial: &StateVector<T>,
    steps: usize,
) -> Result<Revival<T>> {
    let q = field
        .denominator()
        .ok_or_else(|| WalkError::InvalidParameter("revival scan needs a rational field".into()))?;
    let want = T::lit(field.phi());
    if crate::cmv::phase_distance(spec.field(), want) > T::lit(1e-6) {
        return Err(WalkError::InvalidParameter("spec field does not match the rational field".into()));
    }
    let opts = EvolveOptions { schedule: RecordSchedule::Explicit(vec![]), ..Default::default() };
    let tr = evolve(spec, initial, steps, &opts)?;
    Ok(Revival { q, t_star: tr.peak_fidelity.0, peak: tr.peak_fidelity.1 })
}

/// Which variance series a spreading fit uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VarianceKind {
    Instantaneous,
    #[default]
    TimeAveraged,
}

/// Least-squares slope of `log Var` against `log t` over recorded times in `[t_lo, t_hi]`.
pub fn spreading_exponent_on<T: Real>(traj: &Trajectory<T>, t_lo: usize, t_hi: usize, kind: VarianceKind) -> Result<f64> {
    let series = match kind {
        VarianceKind::Instantaneous => &traj.variance,
        VarianceKind::TimeAveraged => &traj.mean_variance,
    };
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(series)
        .filter(|(&t, v)| t >= t_lo && t <= t_hi && v.to_f64().unwrap() > 0.0)
        .map(|(&t, v)| ((t as f64).ln(), v.to_f64().unwrap().ln()))
        .collect();
    if pts.len() < 3 {
        return Err(WalkError::InsufficientData(format!("{} recorded times in [{t_lo}, {t_hi}]", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Spreading exponent over the final decade `[T/10, T]`; needs two decades of records.
pub fn spreading_exponent<T: Real>(traj: &Trajectory<T>, kind: VarianceKind) -> Result<f64> {
    let (Some(&t0), Some(&t1)) = (traj.times.first(), traj.times.last()) else {
        return Err(WalkError::InsufficientData("empty trajectory".into()));
    };
    if t1 < 100 * t0 {
        return Err(WalkError::InsufficientData(format!("recorded times {t0}..{t1} span less than two decades")));
    }
    spreading_exponent_on(traj, t1.div_ceil(10), t1, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{apply_electric_step, Coin};

    #[test]
    fn geometric_schedule() {
        let t = RecordSchedule::Geometric(1.2).times(30);
        assert_eq!(t[..5], [1, 2, 3, 4, 5]);
        assert_eq!(*t.last().unwrap(), 30);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn matches_single_steps() {
        let spec = WalkSpec::new(Coin::<f64>::hadamard(), 0.7, 0.3);
        let init = StateVector::delta(1);
        let tr = evolve(&spec, &init, 25, &EvolveOptions::default()).unwrap();
        let mut psi = init.clone();
        for _ in 0..25 {
            psi = apply_electric_step(&spec, &psi);
        }
        for k in psi.lo()..=psi.hi() {
            assert!((psi.get(k) - tr.final_state.get(k)).norm() < 1e-14);
        }
    }

    #[test]
    fn identity_coin_moves_ballistically() {
        let spec = WalkSpec::new(Coin::<f64>::identity(), 0.0, 0.0);
        let tr = evolve(&spec, &StateVector::delta(1), 50, &EvolveOptions::default()).unwrap();
        for (t, m) in tr.times.iter().zip(&tr.mean) {
            assert_eq!(*m, *t as f64);
        }
        let tr = evolve(&spec, &StateVector::delta(0), 50, &EvolveOptions::default()).unwrap();
        assert_eq!(*tr.mean.last().unwrap(), -50.0);
        assert!(tr.fidelity.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn memory_cap() {
        let spec = WalkSpec::new(Coin::<f64>::hadamard(), 0.0, 0.0);
        let opts = EvolveOptions { index_cap: 100, ..Default::default() };
        assert!(matches!(evolve(&spec, &StateVector::delta(0), 1000, &opts), Err(WalkError::MemoryCap { .. })));
    }

    #[test]
    fn participation_ratio_basics() {
        assert_eq!(participation_ratio(&StateVector::<f64>::delta(3)).unwrap(), 1.0);
        let u = vec![C::new(0.5, 0.0); 4];
        assert!((participation_ratio(&StateVector::from_amplitudes(0, &u)).unwrap() - 4.0f64).abs() < 1e-12);
        assert!(participation_ratio(&StateVector::<f64>::from_amplitudes(0, &[C::new(0.0, 0.0)])).is_err());
    }

    #[test]
    fn revival_needs_rational_field() {
        let spec = WalkSpec::new(Coin::<f64>::hadamard(), 1.0, 0.0);
        assert!(revival_scan(&spec, &Field::Golden, &StateVector::delta(0), 10).is_err());
    }
}
