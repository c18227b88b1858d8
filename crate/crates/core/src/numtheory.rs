//! Continued fractions with exact convergents, the approximation exponent β,
//! finite Diophantine checks, and the fields used in experiments.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Result, WalkError};

/// Where the coefficients came from. Expansions of an `f64` describe the
/// double exactly, so deep coefficients reflect rounding, not the ideal real.
#[derive(Clone, Debug, PartialEq)]
pub enum CfSource {
    Double(f64),
    Rational(BigInt, BigInt),
    Constructed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuedFraction {
    /// `c_0, c_1, ...`
    pub coeffs: Vec<BigUint>,
    /// `p_0, p_1, ...` and `q_0, q_1, ...` with `p_k/q_k = [c_0; c_1, ..., c_k]`.
    pub p: Vec<BigInt>,
    pub q: Vec<BigInt>,
    /// The expansion ended because the source is rational.
    pub terminated: bool,
    pub source: CfSource,
}

impl ContinuedFraction {
    pub fn from_coefficients(coeffs: Vec<BigUint>, terminated: bool, source: CfSource) -> Self {
        let (mut p, mut q) = (Vec::with_capacity(coeffs.len()), Vec::with_capacity(coeffs.len()));
        let (mut p1, mut p2) = (BigInt::one(), BigInt::zero());
        let (mut q1, mut q2) = (BigInt::zero(), BigInt::one());
        for c in &coeffs {
            let c = BigInt::from(c.clone());
            let pn = &c * &p1 + &p2;
            let qn = &c * &q1 + &q2;
            p2 = std::mem::replace(&mut p1, pn.clone());
            q2 = std::mem::replace(&mut q1, qn.clone());
            p.push(pn);
            q.push(qn);
        }
        ContinuedFraction { coeffs, p, q, terminated, source }
    }

    pub fn depth(&self) -> usize {
        self.coeffs.len()
    }

    /// Value of the deepest convergent.
    pub fn value(&self) -> f64 {
        ratio_f64(self.p.last().unwrap(), self.q.last().unwrap())
    }

    pub fn convergent_f64(&self, k: usize) -> f64 {
        ratio_f64(&self.p[k], &self.q[k])
    }
}

fn ratio_f64(p: &BigInt, q: &BigInt) -> f64 {
    let shift = q.bits().max(p.bits()).saturating_sub(900);
    let (ps, qs) = (p >> shift, q >> shift);
    ps.to_f64().unwrap_or(f64::NAN) / qs.to_f64().unwrap_or(f64::NAN)
}

fn ln_big(x: &BigInt) -> f64 {
    let shift = x.bits().saturating_sub(60);
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Expansion of a nonnegative rational `num/den`, up to `depth` coefficients.
pub fn cf_expand_rational(num: &BigUint, den: &BigUint, depth: usize) -> Result<ContinuedFraction> {
    if den.is_zero() || depth == 0 {
        return Err(WalkError::InvalidParameter("need den > 0 and depth >= 1".into()));
    }
    let (mut a, mut b) = (num.clone(), den.clone());
    let mut coeffs = Vec::new();
    let mut terminated = false;
    while coeffs.len() < depth {
        let (c, r) = a.div_rem(&b);
        coeffs.push(c);
        if r.is_zero() {
            terminated = true;
            break;
        }
        a = std::mem::replace(&mut b, r);
    }
    let src = CfSource::Rational(BigInt::from(num.clone()), BigInt::from(den.clone()));
    Ok(ContinuedFraction::from_coefficients(coeffs, terminated, src))
}

/// Expansion of the exact binary value of `x ≥ 0`.
pub fn cf_expand(x: f64, depth: usize) -> Result<ContinuedFraction> {
    if !x.is_finite() || x < 0.0 {
        return Err(WalkError::InvalidParameter(format!("cannot expand {x}")));
    }
    let (num, den) = dyadic(x);
    let mut cf = cf_expand_rational(&num, &den, depth)?;
    cf.source = CfSource::Double(x);
    Ok(cf)
}

fn dyadic(x: f64) -> (BigUint, BigUint) {
    if x == 0.0 {
        return (BigUint::zero(), BigUint::one());
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let m = BigUint::from(mant);
    if e >= 0 {
        (m << e as usize, BigUint::one())
    } else {
        (m, BigUint::one() << (-e) as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaProxy {
    pub value: f64,
    /// Number of convergents used.
    pub depth: usize,
    /// Index attaining the maximum.
    pub argmax: usize,
}

/// Finite-depth stand-in for `limsup log q_{k+1} / q_k`: the maximum over the
/// deepest third (at least one) of the available ratios.
pub fn beta_exponent(cf: &ContinuedFraction) -> Result<BetaProxy> {
    if cf.terminated {
        return Err(WalkError::InvalidParameter("rational field: β is undefined".into()));
    }
    let k_total = cf.q.len();
    if k_total < 5 {
        return Err(WalkError::InsufficientData(format!("{k_total} convergents, need at least 5")));
    }
    let mut best = (f64::NEG_INFINITY, 0);
    let ratios = k_total - 1;
    let tail = (ratios / 3).max(1);
    for k in ratios - tail..ratios {
        let qk = cf.q[k].to_f64().unwrap_or(f64::INFINITY);
        let v = ln_big(&cf.q[k + 1]) / qk;
        if v > best.0 {
            best = (v, k);
        }
    }
    Ok(BetaProxy { value: best.0, depth: k_total, argmax: best.1 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiophantineReport {
    pub holds: bool,
    /// `k` minimizing `‖kΦ/2π‖ · k^A`.
    pub worst_k: i64,
    /// `‖kΦ/2π‖ · k^A / c` at the worst `k`; the condition holds iff this exceeds 1.
    pub worst_ratio: f64,
}

/// Checks `‖kΦ/2π‖ > c |k|^{-A}` for `0 < |k| < kmax` (symmetric in the sign of k).
pub fn diophantine_check(phi: f64, c: f64, a: f64, kmax: i64) -> Result<DiophantineReport> {
    if !(c > 0.0) {
        return Err(WalkError::InvalidParameter("Diophantine constant c must be positive".into()));
    }
    if kmax < 1 {
        return Err(WalkError::InvalidParameter("kmax must be at least 1".into()));
    }
    let x = phi / std::f64::consts::TAU;
    let mut worst = (f64::INFINITY, 1);
    for k in 1..kmax.max(2) {
        let t = k as f64 * x;
        let dist = (t - t.round()).abs();
        let r = dist * (k as f64).powf(a) / c;
        if r < worst.0 {
            worst = (r, k);
        }
    }
    Ok(DiophantineReport { holds: worst.0 > 1.0, worst_k: worst.1, worst_ratio: worst.0 })
}

/// Coefficient schedule of a Liouville-type number `[0; c_1, c_2, ...]`.
#[derive(Clone, Debug, PartialEq)]
pub enum LiouvilleSchedule {
    Explicit(Vec<BigUint>),
    /// `c_{k+1} = 2^{q_k}` for `depth` coefficients, starting from `q_0 = 1`.
    PowerOfTwo { depth: usize },
}

impl LiouvilleSchedule {
    /// Errors when a coefficient `2^{q_k}` would need more than `2^{32}` bits.
    pub fn coefficients(&self) -> Result<Vec<BigUint>> {
        match self {
            LiouvilleSchedule::Explicit(c) => Ok(c.clone()),
            LiouvilleSchedule::PowerOfTwo { depth } => {
                let mut out = Vec::with_capacity(*depth);
                let (mut q1, mut q2) = (BigUint::one(), BigUint::zero());
                for _ in 0..*depth {
                    let e = q1
                        .to_u32()
                        .ok_or_else(|| WalkError::InvalidParameter(format!("schedule depth {depth} needs a coefficient 2^{q1}")))?;
                    let c = BigUint::one() << e;
                    let qn = &c * &q1 + &q2;
                    q2 = std::mem::replace(&mut q1, qn);
                    out.push(c);
                }
                Ok(out)
            }
        }
    }
}

/// Builds `x = [0; c_1, c_2, ...]` from its own coefficients, keeping the exact convergents.
pub fn make_liouville(schedule: &LiouvilleSchedule) -> Result<(f64, ContinuedFraction)> {
    let tail = schedule.coefficients()?;
    if tail.len() < 2 {
        return Err(WalkError::InsufficientData("Liouville schedule needs at least two coefficients".into()));
    }
    if tail.iter().any(Zero::is_zero) {
        return Err(WalkError::InvalidParameter("continued fraction coefficients must be positive".into()));
    }
    let mut coeffs = vec![BigUint::zero()];
    coeffs.extend(tail);
    let cf = ContinuedFraction::from_coefficients(coeffs, false, CfSource::Constructed);
    Ok((cf.value(), cf))
}

/// The field `Φ`, given as `Φ/2π`.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Rational { p: i64, q: i64 },
    /// `(√5 − 1)/2`.
    Golden,
    Real(f64),
    Liouville(LiouvilleSchedule),
}

impl Field {
    pub fn fraction(&self) -> f64 {
        match self {
            Field::Rational { p, q } => *p as f64 / *q as f64,
            Field::Golden => (5f64.sqrt() - 1.0) / 2.0,
            Field::Real(x) => *x,
            Field::Liouville(s) => make_liouville(s).map(|v| v.0).unwrap_or(f64::NAN),
        }
    }

    /// `Φ` in radians.
    pub fn phi(&self) -> f64 {
        std::f64::consts::TAU * self.fraction()
    }

    /// Denominator in lowest terms for rational fields.
    pub fn denominator(&self) -> Option<i64> {
        match self {
            Field::Rational { p, q } => Some(q / p.gcd(q)),
            _ => None,
        }
    }

    /// Continued fraction of `Φ/2π`; exact where the field is known exactly.
    pub fn continued_fraction(&self, depth: usize) -> Result<ContinuedFraction> {
        match self {
            Field::Rational { p, q } => {
                if *q <= 0 || *p < 0 {
                    return Err(WalkError::InvalidParameter("rational field needs p >= 0, q > 0".into()));
                }
                cf_expand_rational(&BigUint::from(*p as u64), &BigUint::from(*q as u64), depth)
            }
            Field::Golden => {
                let mut c = vec![BigUint::zero()];
                c.extend(std::iter::repeat(BigUint::one()).take(depth.saturating_sub(1)));
                Ok(ContinuedFraction::from_coefficients(c, false, CfSource::Constructed))
            }
            Field::Real(x) => cf_expand(*x, depth),
            Field::Liouville(s) => {
                let (_, mut cf) = make_liouville(s)?;
                cf.coeffs.truncate(depth);
                cf.p.truncate(depth);
                cf.q.truncate(depth);
                Ok(cf)
            }
        }
    }

    pub fn classify(&self, c: f64, a: f64, kmax: i64) -> FieldClass {
        match self {
            Field::Rational { p, q } => FieldClass::Rational { p: *p, q: *q },
            Field::Liouville(s) => FieldClass::LiouvilleConstruct(s.clone()),
            _ => match diophantine_check(self.phi(), c, a, kmax) {
                Ok(r) if r.holds => FieldClass::DiophantineEstimate { c, a, kmax },
                _ => FieldClass::Unknown,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldClass {
    Rational { p: i64, q: i64 },
    /// Passed the finite Diophantine condition with these parameters.
    DiophantineEstimate { c: f64, a: f64, kmax: i64 },
    LiouvilleConstruct(LiouvilleSchedule),
    Unknown,
}

impl FieldClass {
    pub fn tag(&self) -> &'static str {
        match self {
            FieldClass::Rational { .. } => "rational",
            FieldClass::DiophantineEstimate { .. } => "diophantine-estimate",
            FieldClass::LiouvilleConstruct(_) => "liouville-construct",
            FieldClass::Unknown => "unknown",
        }
    }
}
