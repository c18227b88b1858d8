//! One function per subcommand. Each returns a table (CSV) and a JSON document
//! carrying the same rows plus a summary, and whether its assertions held.

use std::f64::consts::TAU;

use ewalk_core::dynamics::{evolve, evolve_many, spreading_exponent, EvolveOptions, RecordSchedule, VarianceKind};
use ewalk_core::numtheory::{beta_exponent, diophantine_check, ContinuedFraction, FieldClass};
use ewalk_core::restrict::{build_restriction, eigenfunction_decay_fit, median, resolvent_cross_check, resolvent_decay_scan, MAX_DENSE_INDICES};
use ewalk_core::xfer::{finite_lyapunov, herman_avila_bochi_check};
use ewalk_core::WalkError;
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, ExperimentConfig};
use crate::suite;

#[derive(Debug, thiserror::Error)]
pub enum CmdError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Run(#[from] WalkError),
}

type Res<T> = std::result::Result<T, CmdError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub struct Output {
    pub csv: String,
    pub json: Value,
    pub ok: bool,
    pub default_format: Format,
}

impl Output {
    pub fn render(&self, format: Option<Format>) -> String {
        match format.unwrap_or(self.default_format) {
            Format::Csv => self.csv.clone(),
            Format::Json => serde_json::to_string_pretty(&self.json).expect("serializable") + "\n",
        }
    }
}

pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub seed: u64,
}

impl Context<'_> {
    fn header(&self, command: &str) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("command".into(), json!(command));
        m.insert("seed".into(), json!(self.seed));
        m.insert("config".into(), json!(self.config.explicit()));
        m
    }
}

fn to_csv<R: Serialize>(rows: &[R]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize to csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

fn finish<R: Serialize>(ctx: &Context, command: &str, rows: &[R], extra: Value, ok: bool, default_format: Format) -> Output {
    let mut m = ctx.header(command);
    m.insert("rows".into(), json!(rows));
    if let Value::Object(e) = extra {
        m.extend(e);
    }
    m.insert("pass".into(), json!(ok));
    Output { csv: to_csv(rows), json: Value::Object(m), ok, default_format }
}

#[derive(Serialize)]
struct LyapRow {
    kind: &'static str,
    n: usize,
    value: f64,
    stderr: Option<f64>,
    reference: f64,
}

/// `γ_n` on a θ grid for each `n`, the reference `log 1/|a|`, and both sides of
/// the Herman–Avila–Bochi identity at the largest `n`.
pub fn lyapunov(ctx: &Context) -> Res<Output> {
    let c = ctx.config;
    let field = c.field()?;
    let spec = c.spec_for(&field)?;
    let (samples, z_samples, tol) = (c.usize("samples")?, c.usize("z_samples")?, c.f64("tol")?);
    let z = c.z()?;
    let reference = spec.coin.a().norm().recip().ln();
    let mut rows = Vec::new();
    for n in c.usize_list("n_list")? {
        let est = finite_lyapunov(&spec, z, n, samples)?;
        rows.push(LyapRow { kind: "gamma_n", n, value: est.gamma, stderr: Some(est.stderr), reference });
    }
    let n_max = rows.iter().map(|r| r.n).max().unwrap();
    let (lhs, rhs) = herman_avila_bochi_check(&spec, n_max, samples, z_samples)?;
    rows.push(LyapRow { kind: "hab_lhs", n: n_max, value: lhs, stderr: None, reference });
    rows.push(LyapRow { kind: "hab_rhs", n: n_max, value: rhs, stderr: None, reference });
    // the formula is a statement about irrational fields
    let gated = field.denominator().is_none();
    let last = rows.iter().filter(|r| r.kind == "gamma_n").next_back().unwrap().value;
    let ok = !gated || ((last - reference).abs() < tol && (lhs - rhs).abs() < tol);
    let extra = json!({ "reference": reference, "hab": { "lhs": lhs, "rhs": rhs }, "gated": gated, "tol": tol });
    Ok(finish(ctx, "lyapunov", &rows, extra, ok, Format::Csv))
}

fn regime(class: &FieldClass) -> &'static str {
    match class {
        FieldClass::Rational { .. } => "ballistic",
        FieldClass::LiouvilleConstruct(_) => "hierarchical",
        FieldClass::DiophantineEstimate { .. } => "localized",
        FieldClass::Unknown => "unknown",
    }
}

fn short_coeff(c: &BigUint) -> String {
    if c.bits() <= 40 {
        return c.to_string();
    }
    if c.count_ones() == 1 {
        format!("2^{}", c.bits() - 1)
    } else {
        format!("~2^{}", c.bits() - 1)
    }
}

fn cf_summary(cf: &ContinuedFraction, shown: usize) -> String {
    let mut parts: Vec<String> = cf.coeffs.iter().take(shown).map(short_coeff).collect();
    let head = parts.remove(0);
    let more = if cf.coeffs.len() > shown { ",..." } else { "" };
    format!("[{head};{}{more}]", parts.join(","))
}

#[derive(Serialize)]
struct PhaseRow {
    field: String,
    class: &'static str,
    regime: &'static str,
    fraction: f64,
    cf: String,
    beta: Option<f64>,
    exponent: f64,
    exponent_instantaneous: f64,
    peak_fidelity: f64,
    t_star: usize,
    final_participation: f64,
}

/// Spreading exponent, peak return fidelity, final participation ratio and
/// continued-fraction summary for each field of the `fields` list.
pub fn phase_table(ctx: &Context) -> Res<Output> {
    let c = ctx.config;
    let fields = c.fields()?;
    let steps = if c.is_set("steps") { c.usize("steps")? } else { 10_000 };
    let opts = EvolveOptions {
        schedule: RecordSchedule::Geometric(c.f64("record_ratio")?),
        index_cap: c.usize("index_cap")?,
        snapshots: false,
    };
    let init = c.initial_state()?;
    let specs = fields.iter().map(|(_, f)| c.spec_for(f)).collect::<Result<Vec<_>, _>>()?;
    let trajs = evolve_many(&specs, &init, steps, &opts);
    let (dc, da, kmax) = (c.f64("dioph_c")?, c.f64("dioph_a")?, c.i64("kmax")?);
    let mut rows = Vec::new();
    for ((label, field), tr) in fields.iter().zip(trajs) {
        let tr = tr.map_err(|e| match e {
            WalkError::MemoryCap { .. } => CmdError::Config(ConfigError::Walk(e)),
            other => CmdError::Run(other),
        })?;
        let class = field.classify(dc, da, kmax);
        let cf = field.continued_fraction(c.usize("depth")?)?;
        rows.push(PhaseRow {
            field: label.clone(),
            class: class.tag(),
            regime: regime(&class),
            fraction: field.fraction(),
            cf: cf_summary(&cf, 8),
            beta: beta_exponent(&cf).ok().map(|b| b.value),
            exponent: spreading_exponent(&tr, VarianceKind::TimeAveraged)?,
            exponent_instantaneous: spreading_exponent(&tr, VarianceKind::Instantaneous)?,
            peak_fidelity: tr.peak_fidelity.1,
            t_star: tr.peak_fidelity.0,
            final_participation: *tr.participation.last().unwrap(),
        });
    }
    // only the ordering ballistic > hierarchical > localized is asserted, and only when all three occur
    let by = |r: &str| rows.iter().filter(|x| x.regime == r).map(|x| x.exponent).collect::<Vec<_>>();
    let (bal, hier, loc) = (by("ballistic"), by("hierarchical"), by("localized"));
    let gated = !bal.is_empty() && !hier.is_empty() && !loc.is_empty();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ordered = gated && min(&bal) > max(&hier) && min(&hier) > max(&loc);
    let ok = !gated || ordered;
    let extra = json!({ "steps": steps, "ordering_gated": gated, "ordered": ordered });
    Ok(finish(ctx, "phase-table", &rows, extra, ok, Format::Csv))
}

/// Runs the identity suite; JSON schema `{command, seed, config, rows: [{name, residual, tolerance, pass}], pass}`.
pub fn verify(ctx: &Context) -> Res<Output> {
    let c = ctx.config;
    let spec = c.spec()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let checks = suite::run_all(&spec, &mut rng, c.usize("trials")?.max(1))?;
    let ok = checks.iter().all(|x| x.pass);
    Ok(finish(ctx, "verify", &checks, json!({}), ok, Format::Json))
}

#[derive(Serialize)]
struct ModeRow {
    index: usize,
    re: f64,
    im: f64,
    modulus: f64,
    arg: f64,
    center: i64,
    rate: Option<f64>,
    participation: f64,
}

/// Eigenvalues, localization centers, fitted decay rates and participation
/// ratios of the finite restriction on `cells` cells starting at `start`.
pub fn eigenmodes(ctx: &Context) -> Res<Output> {
    let c = ctx.config;
    let spec = c.spec()?;
    let (cells, start) = (c.i64("cells")?, c.i64("start")?);
    let indices = (2 * cells).max(0) as usize;
    if indices > MAX_DENSE_INDICES {
        return Err(ConfigError::Walk(WalkError::WindowTooLarge(indices, MAX_DENSE_INDICES)).into());
    }
    if cells < 100 {
        return Err(ConfigError::Value { key: "cells".into(), msg: "decay fits need at least 100 cells".into() }.into());
    }
    let r = build_restriction(&spec, start, start + cells, c.unit_phase("alpha")?, c.unit_phase("beta")?)?;
    let fits = eigenfunction_decay_fit(&r)?;
    let rows: Vec<ModeRow> = fits
        .iter()
        .enumerate()
        .map(|(i, f)| ModeRow {
            index: i,
            re: f.eigenvalue.re,
            im: f.eigenvalue.im,
            modulus: f.eigenvalue.norm(),
            arg: f.eigenvalue.arg(),
            center: f.center,
            rate: f.rate.is_finite().then_some(f.rate),
            participation: f.participation,
        })
        .collect();
    let defect = rows.iter().map(|r| (r.modulus - 1.0).abs()).fold(0.0, f64::max);
    let rates: Vec<f64> = rows.iter().filter_map(|r| r.rate).collect();
    let bins = c.usize("bins")?.max(1);
    let top = rates.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut counts = vec![0usize; bins];
    for &x in &rates {
        counts[((x.max(0.0) / top * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let edges: Vec<f64> = (0..=bins).map(|k| top * k as f64 / bins as f64).collect();
    let extra = json!({
        "summary": {
            "cells": cells,
            "median_rate": median(rates.iter().copied()),
            "reference_rate": spec.coin.a().norm().recip().ln(),
            "fitted": rates.len(),
            "median_participation": median(rows.iter().map(|r| r.participation)),
            "max_modulus_defect": defect,
        },
        "histogram": { "edges": edges, "counts": counts },
    });
    Ok(finish(ctx, "eigenmodes", &rows, extra, defect < 1e-10, Format::Csv))
}

#[derive(Serialize)]
struct TrajRow {
    t: usize,
    norm: f64,
    mean: f64,
    variance: f64,
    mean_variance: f64,
    fidelity: f64,
    participation: f64,
}

/// Observables of one evolution on the geometric schedule.
pub fn evolve_cmd(ctx: &Context) -> Res<Output> {
    let c = ctx.config;
    let spec = c.spec()?;
    let steps = if c.is_set("steps") { c.usize("steps")? } else { 1000 };
    let opts = EvolveOptions {
        schedule: RecordSchedule::Geometric(c.f64("record_ratio")?),
        index_cap: c.usize("index_cap")?,
        snapshots: false,
    };
    let tr = evolve(&spec, &c.initial_state()?, steps, &opts).map_err(|e| match e {
        e @ (WalkError::MemoryCap { .. } | WalkError::InvalidParameter(_)) => CmdError::Config(ConfigError::Walk(e)),
        other => CmdError::Run(other),
    })?;
    let rows: Vec<TrajRow> = (0..tr.times.len())
        .map(|i| TrajRow {
            t: tr.times[i],
            norm: tr.norm[i],
            mean: tr.mean[i],
            variance: tr.variance[i],
            mean_variance: tr.mean_variance[i],
            fidelity: tr.fidelity[i],
            participation: tr.participation[i],
        })
        .collect();
    let drift = tr.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    let extra = json!({
        "summary": {
            "norm_drift": drift,
            "peak_fidelity": tr.peak_fidelity.1,
            "t_star": tr.peak_fidelity.0,
            "exponent": spreading_exponent(&tr, VarianceKind::TimeAveraged).ok(),
            "exponent_instantaneous": spreading_exponent(&tr, VarianceKind::Instantaneous).ok(),
        }
    });
    Ok(finish(ctx, "evolve", &rows, extra, drift < 1e-9, Format::Csv))
}

#[derive(Serialize)]
struct ScanRow {
    alpha_re: f64,
    alpha_im: f64,
    beta_re: f64,
    beta_im: f64,
    max_excess: Option<f64>,
    wronskian: Option<f64>,
}

/// Resolvent decay against `γ_n` for the four boundary sign choices, with the
/// formula-vs-direct cross-check on the first choice away from the spectrum.
pub fn resolvent_scan(ctx: &Context) -> Res<Output> {
    let c = ctx.config;
    let spec = c.spec()?;
    let (cells, start) = (c.i64("cells")?, c.i64("start")?);
    let indices = (2 * cells).max(0) as usize;
    if indices > MAX_DENSE_INDICES {
        return Err(ConfigError::Walk(WalkError::WindowTooLarge(indices, MAX_DENSE_INDICES)).into());
    }
    let (alpha, beta, z) = (c.unit_phase("alpha")?, c.unit_phase("beta")?, c.z()?);
    let slack = c.opt_f64("slack")?.unwrap_or(0.1 * cells as f64);
    let scan = resolvent_decay_scan(&spec, start, cells, z, alpha, beta, slack, c.usize("samples")?)?;
    let rows: Vec<ScanRow> = scan
        .choices
        .iter()
        .map(|ch| ScanRow {
            alpha_re: ch.alpha.re,
            alpha_im: ch.alpha.im,
            beta_re: ch.beta.re,
            beta_im: ch.beta.im,
            max_excess: ch.max_excess,
            wronskian: ch.wronskian,
        })
        .collect();
    let ch = scan.choices.iter().find(|ch| ch.max_excess.is_some()).expect("scan has a usable choice");
    let r = build_restriction(&spec, start, start + cells, ch.alpha, ch.beta)?;
    let rel = resolvent_cross_check(&r, z, r.b)?
        .into_iter()
        .map(|(_, _, f, d)| (f - d).abs() / d)
        .fold(0.0, f64::max);
    let extra = json!({
        "summary": {
            "gamma_n": scan.gamma_n,
            "best": scan.best,
            "best_excess": scan.best_excess,
            "slack": scan.slack,
            "holds": scan.holds,
            "transfer_norm": scan.transfer_norm,
            "wronskian_ratio": scan.wronskian_ratio,
            "cross_oracle_rel_err": rel,
        }
    });
    Ok(finish(ctx, "resolvent-scan", &rows, extra, rel < suite::tolerance("resolvent_formula"), Format::Csv))
}

#[derive(Serialize)]
struct CfRow {
    k: usize,
    c: String,
    p: String,
    q: String,
}

/// Continued fraction with exact convergents, β proxy and Diophantine scan of `field`.
pub fn cf(ctx: &Context) -> Res<Output> {
    let c = ctx.config;
    let field = c.field()?;
    let cf = field.continued_fraction(c.usize("depth")?.max(1))?;
    let rows: Vec<CfRow> = (0..cf.depth())
        .map(|k| CfRow { k, c: cf.coeffs[k].to_string(), p: cf.p[k].to_string(), q: cf.q[k].to_string() })
        .collect();
    let (dc, da, kmax) = (c.f64("dioph_c")?, c.f64("dioph_a")?, c.i64("kmax")?);
    let beta = beta_exponent(&cf).ok().map(|b| json!({ "value": b.value, "depth": b.depth, "argmax": b.argmax }));
    let dio = diophantine_check(field.phi(), dc, da, kmax)?;
    let extra = json!({
        "fraction": field.fraction(),
        "phi": field.fraction() * TAU,
        "terminated": cf.terminated,
        "class": field.classify(dc, da, kmax).tag(),
        "beta": beta,
        "diophantine": { "c": dc, "a": da, "kmax": kmax, "holds": dio.holds, "worst_k": dio.worst_k, "worst_ratio": dio.worst_ratio },
    });
    Ok(finish(ctx, "cf", &rows, extra, true, Format::Csv))
}
