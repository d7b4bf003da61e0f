//! Theta series θ(t) = Σ e^{−πt‖x−v‖²}, the invariants h⁰_θ / h¹_θ, the β(r̃) tail
//! machinery and numeric audits built on them.

use std::f64::consts::PI;

use serde::Serialize;

use crate::audit::AuditVerdict;
use crate::enumeration::{
    covering_radius_bounds, h0_ar_f64, successive_minima_with, EnumerationConfig, Enumerator,
};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::matrix::IntMatrix;
use crate::numeric::{Accumulator, Precision};

/// Radius r̃ of the pilot enumeration used to bound θ from above.
const PILOT_R_TILDE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaOptions {
    /// Absolute tolerance on θ.
    pub tol: f64,
    /// Evaluate t < 1 through the dual lattice.
    pub allow_poisson: bool,
    pub config: EnumerationConfig,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        Self { tol: 1e-12, allow_poisson: true, config: EnumerationConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaValue {
    pub t: f64,
    pub value: f64,
    pub log_value: f64,
    /// Certified absolute bound on the omitted tail.
    pub truncation_error_bound: f64,
    pub used_poisson: bool,
}

impl ThetaValue {
    /// Certified upper bound value + tail.
    pub fn upper(&self) -> f64 {
        self.value + self.truncation_error_bound
    }
}

/// β(r̃) = r̃·e^{−(r̃²−1)/2} for r̃ ≥ 1.
pub fn banaszczyk_beta(r: f64) -> Result<f64> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::OutOfDomain { value: r, domain: "[1, ∞)" });
    }
    Ok(log_beta(r).exp())
}

fn log_beta(r: f64) -> f64 {
    r.ln() - 0.5 * (r * r - 1.0)
}

/// Inverse of β on (0, 1], returning r̃ ≥ 1.
pub fn beta_inverse(y: f64) -> Result<f64> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::OutOfDomain { value: y, domain: "(0, 1]" });
    }
    if y == 1.0 {
        return Ok(1.0);
    }
    let ly = y.ln();
    let f = |r: f64| log_beta(r) - ly;
    let (mut lo, mut hi) = (1.0f64, 10.0f64);
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fr = f(r);
        if fr == 0.0 {
            return Ok(r);
        }
        if fr > 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let step = fr / (1.0 / r - r);
        let mut next = r - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 1e-15 * r || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        r = next;
    }
    Ok(r)
}

/// tₙ = β⁻¹(3^{−1/n}).
pub fn t_n(n: usize) -> f64 {
    beta_inverse(3f64.powf(-1.0 / n as f64)).expect("3^{-1/n} lies in (0, 1]")
}

fn precision() -> Precision {
    Precision::from_env().unwrap_or_default()
}

fn budget_to_tol(e: Error, tol: f64) -> Error {
    match e {
        Error::BudgetExceeded { .. } => Error::ToleranceUnreachable { tol },
        other => other,
    }
}

/// Squared radius in L corresponding to r̃ at parameter t.
fn radius_sq(n: usize, r_tilde: f64, t: f64) -> f64 {
    n as f64 * r_tilde * r_tilde / (2.0 * PI * t)
}

/// Σ_{v≠0, ‖v‖² ≤ radius} e^{−πt‖v‖²}.
fn partial_nonzero(en: &Enumerator, t: f64, radius: f64) -> Result<f64> {
    let norms = en.norms_within(None, radius)?;
    let mut acc = Accumulator::new(precision());
    // The origin is the only point at distance exactly 0.
    for &d in norms.iter().filter(|&&d| d > 0.0) {
        acc.add((-PI * t * d).exp());
    }
    Ok(acc.value())
}

/// Direct series at the origin; returns (S', tail bound) with θ = 1 + S'.
fn direct_series(en: &Enumerator, t: f64, tol: f64) -> Result<(f64, f64)> {
    let n = en.rank();
    let nf = n as f64;
    let b0 = (nf * log_beta(PILOT_R_TILDE)).exp();
    let s0 = partial_nonzero(en, t, radius_sq(n, PILOT_R_TILDE, t))?;
    let tail0 = b0 * (1.0 + s0) / (1.0 - b0);
    if tail0 < tol {
        return Ok((s0, tail0));
    }
    let upper = (1.0 + s0) / (1.0 - b0);
    let y = (0.5 * tol / upper).powf(1.0 / nf).min(1.0);
    let r = beta_inverse(y)?.max(PILOT_R_TILDE);
    let bn = (nf * log_beta(r)).exp();
    let s = partial_nonzero(en, t, radius_sq(n, r, t))?;
    let tail = bn * (1.0 + s) / (1.0 - bn);
    if !(tail < tol) {
        return Err(Error::ToleranceUnreachable { tol });
    }
    Ok((s, tail))
}

pub fn theta(l: &Lattice, t: f64, x: Option<&[f64]>) -> Result<ThetaValue> {
    theta_with(l, t, x, &ThetaOptions::default())
}

/// θ(t) centered at `x` (basis coordinates; origin when `None`).
pub fn theta_with(l: &Lattice, t: f64, x: Option<&[f64]>, opts: &ThetaOptions) -> Result<ThetaValue> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::OutOfDomain { value: t, domain: "(0, ∞)" });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let n = l.rank();
    if let Some(c) = x {
        if c.len() != n {
            return Err(Error::DimensionMismatch("center length differs from rank".into()));
        }
        if c.iter().any(|v| v.fract() != 0.0) || !c.iter().all(|v| v.is_finite()) {
            return centered(l, t, c, opts);
        }
        // Integer centers translate the lattice onto itself.
    }
    if t < 1.0 && opts.allow_poisson {
        let dual = l.dual();
        let log_pref = -l.log_covolume() - 0.5 * n as f64 * t.ln();
        let pref = log_pref.exp();
        let en = Enumerator::new(&dual, opts.config)?;
        let (s, tail) =
            direct_series(&en, 1.0 / t, opts.tol / pref).map_err(|e| budget_to_tol(e, opts.tol))?;
        let log_value = log_pref + s.ln_1p();
        return Ok(ThetaValue {
            t,
            value: pref * (1.0 + s),
            log_value,
            truncation_error_bound: pref * tail,
            used_poisson: true,
        });
    }
    let en = Enumerator::new(l, opts.config)?;
    let (s, tail) = direct_series(&en, t, opts.tol).map_err(|e| budget_to_tol(e, opts.tol))?;
    Ok(ThetaValue { t, value: 1.0 + s, log_value: s.ln_1p(), truncation_error_bound: tail, used_poisson: false })
}

fn centered(l: &Lattice, t: f64, c: &[f64], opts: &ThetaOptions) -> Result<ThetaValue> {
    let n = l.rank();
    let nf = n as f64;
    // The shifted tail is bounded by βⁿ·θ(t) at the origin.
    let origin = theta_with(l, t, None, &ThetaOptions { tol: 1e-3 * opts.tol, ..*opts })?;
    let y = (0.5 * opts.tol / origin.upper()).powf(1.0 / nf).min(1.0);
    let r = beta_inverse(y)?;
    let tail = (nf * log_beta(r)).exp() * origin.upper();
    let en = Enumerator::new(l, opts.config)?;
    let norms = en
        .norms_within(Some(c), radius_sq(n, r, t))
        .map_err(|e| budget_to_tol(e, opts.tol))?;
    let mut acc = Accumulator::new(precision());
    for &d in &norms {
        acc.add((-PI * t * d).exp());
    }
    let value = acc.value();
    Ok(ThetaValue { t, value, log_value: value.ln(), truncation_error_bound: tail, used_poisson: false })
}

/// h⁰_θ = log θ(1).
pub fn h0_theta(l: &Lattice) -> Result<f64> {
    Ok(theta(l, 1.0, None)?.log_value)
}

/// h¹_θ = h⁰_θ of the dual.
pub fn h1_theta(l: &Lattice) -> Result<f64> {
    h0_theta(&l.dual())
}

/// h⁰_θ − h¹_θ − deg, zero up to rounding.
pub fn prr_residual(l: &Lattice) -> Result<f64> {
    Ok(h0_theta(l)? - h1_theta(l)? - l.degree())
}

/// Sums of e^{−π‖v−x‖²} split at squared radius `r2`, plus a certificate for the far tail.
struct Split {
    inner: f64,
    /// Σ over r2 ≤ ‖v−x‖² within the enumerated radius.
    outer: f64,
    far_tail: f64,
}

fn split_at(l: &Lattice, x: Option<&[f64]>, r2: f64, config: EnumerationConfig) -> Result<Split> {
    let n = l.rank();
    let nf = n as f64;
    let origin = theta_with(l, 1.0, None, &ThetaOptions { tol: 1e-15, allow_poisson: true, config })?;
    let r_far = beta_inverse((1e-16 / origin.upper()).powf(1.0 / nf).min(1.0))?;
    let far2 = radius_sq(n, r_far, 1.0).max(r2 * (1.0 + 1e-6));
    let r_far = (far2 * 2.0 * PI / nf).sqrt();
    let far_tail = (nf * log_beta(r_far)).exp() * origin.upper();
    let en = Enumerator::new(l, config)?;
    let norms = en.norms_within(x, far2)?;
    let mut inner = Accumulator::new(precision());
    let mut outer = Accumulator::new(precision());
    for &d in &norms {
        let w = (-PI * d).exp();
        if d < r2 {
            inner.add(w);
        } else {
            outer.add(w);
        }
    }
    Ok(Split { inner: inner.value(), outer: outer.value(), far_tail })
}

/// Checks Σ_{‖v−x‖≥r} e^{−π‖v−x‖²} ≤ β(r̃)ⁿ·θ(1) with r = √(n/2π)·r̃, and for a center
/// x also θ_x(1) + θ(1) ≥ 2/covol.
pub fn tail_bound_check(
    l: &Lattice,
    x: Option<&[f64]>,
    r_tilde: f64,
    config: EnumerationConfig,
) -> Result<Vec<AuditVerdict>> {
    let n = l.rank();
    let nf = n as f64;
    let beta_n = banaszczyk_beta(r_tilde)?.powi(n as i32);
    let opts = ThetaOptions { tol: 1e-15, allow_poisson: true, config };
    let th = theta_with(l, 1.0, None, &opts)?;
    let r2 = radius_sq(n, r_tilde, 1.0);
    let sp = split_at(l, x, r2, config)?;
    let rhs = beta_n * th.value;
    let lo = sp.outer;
    let hi = sp.outer + sp.far_tail;
    let mut out = vec![AuditVerdict::interval(
        "theta.gaussian-tail",
        lo,
        hi,
        rhs,
        format!("r_tilde={r_tilde} ratio={:.6e}", if rhs > 0.0 { hi / rhs } else { f64::INFINITY }),
    )];
    if let Some(c) = x {
        let tx = theta_with(l, 1.0, Some(c), &opts)?;
        let lhs = 2.0 / l.covolume();
        let sum_lo = tx.value + th.value;
        out.push(AuditVerdict::compare(
            "theta.centered-plus-origin",
            lhs,
            sum_lo,
            format!("theta_x={:.12e} theta_0={:.12e} rank={nf}", tx.value, th.value),
        ));
    }
    Ok(out)
}

/// Transference inequalities between L and its dual.
pub fn transference_audit(l: &Lattice, config: EnumerationConfig) -> Result<Vec<AuditVerdict>> {
    let n = l.rank();
    let nf = n as f64;
    let dual = l.dual();
    let lam = successive_minima_with(l, config)?;
    let lam_d = successive_minima_with(&dual, config)?;
    let mut out = Vec::with_capacity(n + 3);
    for i in 0..n {
        let p = lam[i].value * lam_d[n - 1 - i].value;
        out.push(AuditVerdict::compare(
            &format!("transference.minima-product[{}]", i + 1),
            p,
            nf,
            format!("lambda_{}={:.12e} dual_lambda_{}={:.12e}", i + 1, lam[i].value, n - i, lam_d[n - 1 - i].value),
        ));
    }
    let cov = covering_radius_bounds(l)?;
    let ld1 = lam_d[0].value;
    out.push(AuditVerdict::interval(
        "transference.covering-dual-minimum",
        cov.lo * ld1,
        cov.hi * ld1,
        nf / 2.0,
        format!("covering_exact={}", cov.exact),
    ));
    let tn = t_n(n);
    out.push(AuditVerdict::interval(
        "transference.covering-dual-minimum-refined",
        cov.lo * ld1,
        cov.hi * ld1,
        tn * tn * nf / (2.0 * PI),
        format!("t_n={tn:.12e}"),
    ));
    let unit = (nf / (2.0 * PI)).sqrt();
    let ld_t = ld1 / unit;
    let (rt_lo, rt_hi) = (cov.lo / unit, cov.hi / unit);
    let name = "transference.beta-sum";
    if ld_t <= 1.0 || rt_hi <= 1.0 {
        out.push(AuditVerdict::not_applicable(name, 1.0, f64::NAN, "min(dual_lambda_tilde, R_tilde) <= 1"));
    } else {
        // 1 − 2β(λ̃∨)ⁿ − β(R̃)ⁿ ≤ 0, with R̃ only known in an interval (β is decreasing).
        let bl = 2.0 * banaszczyk_beta(ld_t)?.powi(n as i32);
        let br_best = banaszczyk_beta(rt_lo.max(1.0))?.powi(n as i32);
        let br_worst = banaszczyk_beta(rt_hi)?.powi(n as i32);
        out.push(AuditVerdict::interval(
            name,
            1.0 - bl - br_best,
            1.0 - bl - br_worst,
            0.0,
            format!("dual_lambda_tilde={ld_t:.12e} R_tilde in [{rt_lo:.12e}, {rt_hi:.12e}]"),
        ));
    }
    Ok(out)
}

/// C(n) = log(n/2) + (1 + n/2)·log(1 + 2/n).
pub fn comparison_constant(n: usize) -> f64 {
    let nf = n as f64;
    (nf / 2.0).ln() + (1.0 + nf / 2.0) * (2.0 / nf).ln_1p()
}

/// Σ_v ‖v‖²e^{−πt‖v‖²} as an interval [lo, hi].
fn second_moment(l: &Lattice, t: f64, config: EnumerationConfig) -> Result<(f64, f64)> {
    let n = l.rank();
    let nf = n as f64;
    // Beyond r: ‖v‖²e^{−πt‖v‖²} ≤ r²e^{−πtr²/2}·e^{−π(t/2)‖v‖²} when r² ≥ 2/(πt).
    let half = theta_with(l, t / 2.0, None, &ThetaOptions { tol: 1e-12, allow_poisson: true, config })?;
    let r_h = beta_inverse((1e-16 / half.upper()).powf(1.0 / nf).min(1.0))?;
    let r2 = radius_sq(n, r_h, t / 2.0).max(2.0 / (PI * t));
    let r_h = (r2 * PI * t / nf).sqrt().max(1.0);
    let tail = r2 * (-PI * t * r2 / 2.0).exp() * (nf * log_beta(r_h)).exp() * half.upper();
    let en = Enumerator::new(l, config)?;
    let mut acc = Accumulator::new(precision());
    for d in en.norms_within(None, r2)? {
        acc.add(d * (-PI * t * d).exp());
    }
    let lo = acc.value();
    Ok((lo, lo + tail))
}

/// Comparison estimates between h⁰_θ and h⁰_Ar, and the monotonicity / moment facts about θ.
pub fn comparison_audit(l: &Lattice, config: EnumerationConfig) -> Result<Vec<AuditVerdict>> {
    let n = l.rank();
    let nf = n as f64;
    let opts = ThetaOptions { tol: 1e-12, allow_poisson: true, config };
    let h0t = theta_with(l, 1.0, None, &opts)?.log_value;
    let h0a = h0_ar_f64(l, 1.0, config)?;
    let d = h0t - h0a;
    let mut out = vec![
        AuditVerdict::compare("comparison.theta-ar.lower", -PI, d, format!("h0_theta={h0t:.12e} h0_ar={h0a:.12e}")),
        AuditVerdict::compare(
            "comparison.theta-ar.upper",
            d,
            0.5 * nf * nf.ln() - (1.0 - 1.0 / (2.0 * PI)).ln(),
            format!("h0_theta={h0t:.12e} h0_ar={h0a:.12e}"),
        ),
    ];
    let h0a_n = h0_ar_f64(l, nf / (2.0 * PI), config)?;
    let d2 = h0a_n - h0t;
    out.push(AuditVerdict::compare(
        "comparison.ar-scaled-theta.lower",
        -comparison_constant(n),
        d2,
        format!("h0_ar(n/2pi)={h0a_n:.12e}"),
    ));
    out.push(AuditVerdict::compare("comparison.ar-scaled-theta.upper", d2, nf / 2.0, format!("h0_ar(n/2pi)={h0a_n:.12e}")));

    let grid: Vec<f64> = (-4..=4).map(|k| 2f64.powf(k as f64 / 2.0)).collect();
    let logs: Vec<f64> = grid
        .iter()
        .map(|&t| theta_with(l, t, None, &opts).map(|v| v.log_value))
        .collect::<Result<_>>()?;
    let mut max_inc = f64::NEG_INFINITY;
    let mut max_dec = f64::NEG_INFINITY;
    for k in 0..grid.len() - 1 {
        max_inc = max_inc.max(logs[k + 1] - logs[k]);
        let g0 = logs[k] + 0.5 * nf * grid[k].ln();
        let g1 = logs[k + 1] + 0.5 * nf * grid[k + 1].ln();
        max_dec = max_dec.max(g0 - g1);
    }
    out.push(AuditVerdict::compare("comparison.log-theta-decreasing", max_inc, 0.0, "grid t=2^(k/2), k=-4..4"));
    out.push(AuditVerdict::compare("comparison.log-theta-scaled-increasing", max_dec, 0.0, "grid t=2^(k/2), k=-4..4"));

    for &t in &[0.5, 1.0, 2.0] {
        let (lo, hi) = second_moment(l, t, config)?;
        let th = theta_with(l, t, None, &opts)?;
        out.push(AuditVerdict::interval(
            &format!("comparison.second-moment[t={t}]"),
            lo,
            hi,
            nf / (2.0 * PI * t) * th.value,
            "",
        ));
    }
    for &k in &[1.0, 2.0] {
        let r2 = k * nf / PI;
        let sp = split_at(l, None, r2, config)?;
        let th = theta_with(l, 1.0, None, &opts)?;
        let factor = 1.0 - nf / (2.0 * PI * r2);
        out.push(AuditVerdict::compare(
            &format!("comparison.partial-sum[r2={k}n/pi]"),
            factor * th.upper(),
            sp.inner,
            format!("factor={factor}"),
        ));
    }
    Ok(out)
}

/// Z-basis of the module generated by the columns of `m`.
fn column_module_basis(m: &IntMatrix) -> Result<IntMatrix> {
    let n = m.rows();
    let hf = m.hermite_rows()?;
    let r = hf.rank();
    if r == 0 {
        return Ok(IntMatrix::zeros(n, 0));
    }
    let h = IntMatrix::from_rows(&hf.h.to_rows()[..r])?;
    // Row HNF of Hᵀ gives a basis of the column module of H.
    let h2 = h.transpose().hermite_rows()?;
    let top = IntMatrix::from_rows(&h2.h.to_rows()[..r])?;
    hf.r_inv.select_columns(0..r).mul(&top.transpose())
}

/// Z-basis of F₁ ∩ F₂ (columns of `f1`, `f2` independent).
fn intersection_basis(f1: &IntMatrix, f2: &IntMatrix) -> Result<IntMatrix> {
    let n = f1.rows();
    let (k1, k2) = (f1.cols(), f2.cols());
    let mut rows = Vec::with_capacity(k1 + k2);
    for j in 0..k1 {
        rows.push(f1.column(j));
    }
    for j in 0..k2 {
        rows.push(f2.column(j).iter().map(|v| -v).collect());
    }
    // Rows of R past the rank span the integer left kernel of [F₁ | −F₂]ᵀ.
    let hf = IntMatrix::from_rows(&rows)?.hermite_rows()?;
    let r = hf.rank();
    let kern: Vec<Vec<i64>> = hf.r.to_rows()[r..].iter().map(|row| row[..k1].to_vec()).collect();
    if kern.is_empty() {
        return Ok(IntMatrix::zeros(n, 0));
    }
    let a = IntMatrix::from_columns(k1, &kern)?;
    f1.mul(&a)
}

fn h0_of(l: &Lattice, basis: &IntMatrix, config: EnumerationConfig) -> Result<f64> {
    if basis.cols() == 0 {
        return Ok(0.0);
    }
    let sub = l.sublattice(basis)?;
    Ok(theta_with(&sub, 1.0, None, &ThetaOptions { config, ..Default::default() })?.log_value)
}

/// Subadditivity on admissible sequences, submodularity on the pair (F₁, F₂), and
/// additivity on direct sums.
pub fn structure_audit(
    l: &Lattice,
    f1: &IntMatrix,
    f2: &IntMatrix,
    config: EnumerationConfig,
) -> Result<Vec<AuditVerdict>> {
    let opts = ThetaOptions { config, ..Default::default() };
    let h_total = theta_with(l, 1.0, None, &opts)?.log_value;
    let mut out = Vec::new();
    for (label, f) in [("F1", f1), ("F2", f2)] {
        let seq = l.sub_quotient(f)?;
        let hs = theta_with(&seq.sub, 1.0, None, &opts)?.log_value;
        let hq = match &seq.quotient {
            Some(q) => theta_with(q, 1.0, None, &opts)?.log_value,
            None => 0.0,
        };
        out.push(AuditVerdict::compare(
            &format!("structure.subadditivity[{label}]"),
            h_total,
            hs + hq,
            format!("h0_sub={hs:.12e} h0_quotient={hq:.12e}"),
        ));
    }
    let mut both = f1.columns();
    both.extend(f2.columns());
    let sum_basis = column_module_basis(&IntMatrix::from_columns(l.rank(), &both)?)?;
    let int_basis = intersection_basis(f1, f2)?;
    let h1 = h0_of(l, f1, config)?;
    let h2 = h0_of(l, f2, config)?;
    let hi = h0_of(l, &int_basis, config)?;
    let hs = h0_of(l, &sum_basis, config)?;
    out.push(AuditVerdict::compare(
        "structure.submodularity",
        h1 + h2,
        hi + hs,
        format!("rank_intersection={} rank_sum={}", int_basis.cols(), sum_basis.cols()),
    ));
    let s1 = l.sublattice(f1)?;
    let s2 = l.sublattice(f2)?;
    let hsum = theta_with(&s1.direct_sum(&s2), 1.0, None, &opts)?.log_value;
    let res = (hsum - h1 - h2).abs();
    out.push(AuditVerdict::compare("structure.direct-sum-additivity", res, 1e-9, format!("residual={res:.3e}")));
    Ok(out)
}

/// ε(t) = log θ(t) + (n/2)·log t − deg on t = 1, 1/2, 1/4, … until |ε| < 1e−8.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoteReport {
    pub t: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub verdicts: Vec<AuditVerdict>,
}

pub fn theta_asymptote_check(l: &Lattice, config: EnumerationConfig) -> Result<AsymptoteReport> {
    let nf = l.rank() as f64;
    let deg = l.degree();
    let opts = ThetaOptions { config, ..Default::default() };
    let mut ts = Vec::new();
    let mut eps = Vec::new();
    let mut t = 1.0f64;
    for _ in 0..=30 {
        let v = theta_with(l, t, None, &opts)?;
        let e = v.log_value + 0.5 * nf * t.ln() - deg;
        ts.push(t);
        eps.push(e);
        if e.abs() < 1e-8 {
            break;
        }
        t /= 2.0;
    }
    let last = *eps.last().expect("nonempty");
    let max_inc = eps.windows(2).map(|w| w[1].abs() - w[0].abs()).fold(f64::NEG_INFINITY, f64::max);
    let mut verdicts = vec![AuditVerdict::compare(
        "theta.asymptote",
        last.abs(),
        1e-8,
        format!("reached at t={}", ts.last().unwrap()),
    )];
    if eps.len() > 1 {
        verdicts.push(AuditVerdict::compare("theta.asymptote-decreasing", max_inc, 0.0, ""));
    }
    Ok(AsymptoteReport { t: ts, epsilon: eps, verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::OrthogonalLattice;

    fn theta_z_direct(t: f64) -> f64 {
        1.0 + 2.0 * (1..=40).map(|k| (-PI * t * (k * k) as f64).exp()).sum::<f64>()
    }

    #[test]
    fn theta_of_integers() {
        let v = theta(&Lattice::identity(1), 1.0, None).unwrap();
        assert!((v.value - 1.086434811213308).abs() < 1e-14);
        assert!(v.truncation_error_bound < 1e-12);
        assert!(!v.used_poisson);
        for &t in &[0.3, 0.5, 2.0, 5.0] {
            let v = theta(&Lattice::identity(1), t, None).unwrap();
            assert!((v.value - theta_z_direct(t)).abs() < 1e-12, "t={t}");
            assert_eq!(v.used_poisson, t < 1.0);
        }
    }

    #[test]
    fn identity_power() {
        for n in 1..=4 {
            for &t in &[0.5, 1.0, 1.7] {
                let v = theta(&Lattice::identity(n), t, None).unwrap();
                let want = theta_z_direct(t).powi(n as i32);
                assert!((v.value - want).abs() < 1e-11 * want, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn beta_values() {
        assert_eq!(banaszczyk_beta(1.0).unwrap(), 1.0);
        let b = banaszczyk_beta(PI.sqrt()).unwrap();
        assert!((b.ln() + 0.49843).abs() < 1e-4);
        assert!(banaszczyk_beta(0.5).is_err());
        assert!(beta_inverse(0.0).is_err());
        for &r in &[1.0, 1.1, 2.0, 3.5, 9.0, 25.0] {
            let y = banaszczyk_beta(r).unwrap();
            assert!((beta_inverse(y).unwrap() - r).abs() < 1e-10 * r, "r={r}");
        }
        for n in 3..40 {
            assert!(t_n(n) <= PI.sqrt());
        }
    }

    #[test]
    fn poisson_and_prr() {
        let l = Lattice::from_i64(&[vec![2, 1, 0], vec![1, 3, 1], vec![0, 1, 2]]).unwrap();
        let a = theta(&l, 1.0, None).unwrap().value * l.covolume();
        let b = theta(&l.dual(), 1.0, None).unwrap().value;
        assert!((a - b).abs() < 1e-12 * b);
        for t in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let z = Lattice::identity(1).twist(t);
            assert!(prr_residual(&z).unwrap().abs() < 1e-9, "t={t}");
        }
        let i3 = Lattice::identity(3);
        assert!((h0_theta(&i3).unwrap() - 3.0 * theta_z_direct(1.0).ln()).abs() < 1e-13);
    }

    #[test]
    fn centered_series() {
        let l = Lattice::identity(2);
        let v = theta(&l, 1.0, Some(&[0.5, 0.5])).unwrap();
        let want = {
            let s: f64 = (-40..=40).map(|k| (-PI * (k as f64 - 0.5).powi(2)).exp()).sum();
            s * s
        };
        assert!((v.value - want).abs() < 1e-12);
        let same = theta(&l, 1.0, Some(&[1.0, -2.0])).unwrap();
        assert!((same.value - theta(&l, 1.0, None).unwrap().value).abs() < 1e-15);
    }

    #[test]
    fn tail_checks() {
        let l = Lattice::identity(2);
        let cfg = EnumerationConfig::default();
        let v = tail_bound_check(&l, None, 1.5, cfg).unwrap();
        assert!(v[0].passed(), "{:?}", v[0]);
        assert!(v[0].lhs < v[0].rhs);
        let v = tail_bound_check(&l, None, 1.0, cfg).unwrap();
        assert!(v[0].passed());
        let v = tail_bound_check(&l, Some(&[0.5, 0.5]), 1.2, cfg).unwrap();
        assert!(v.iter().all(|a| a.passed()), "{v:?}");
    }

    #[test]
    fn transference_on_orthogonal() {
        let o = OrthogonalLattice::new(vec![0.7, -0.2, 1.3]).unwrap().to_lattice();
        let v = transference_audit(&o, EnumerationConfig::default()).unwrap();
        for a in &v[..3] {
            assert!((a.lhs - 1.0).abs() < 1e-12, "{a:?}");
        }
        assert!(v.iter().all(|a| !a.is_violated()), "{v:?}");
        let v = transference_audit(&Lattice::identity(4), EnumerationConfig::default()).unwrap();
        assert!((v[4].lhs - 1.0).abs() < 1e-12);
        assert!(v.iter().all(|a| !a.is_violated()));
    }

    #[test]
    fn comparison_on_integers() {
        let v = comparison_audit(&Lattice::identity(1), EnumerationConfig::default()).unwrap();
        assert!(v.iter().all(|a| a.passed()), "{v:#?}");
        assert!((v[0].rhs - (0.0829 - 3f64.ln())).abs() < 1e-3);
        for n in 1..=64 {
            let c = comparison_constant(n) - (n as f64 / 2.0).ln();
            assert!((1.0..=1.5 * 3f64.ln()).contains(&c));
        }
        let v = comparison_audit(&Lattice::identity(4), EnumerationConfig::default()).unwrap();
        assert!(v.iter().all(|a| a.passed()), "{v:#?}");
    }

    #[test]
    fn structure_on_identity() {
        let l = Lattice::identity(2);
        let e1 = IntMatrix::from_columns(2, &[vec![1, 0]]).unwrap();
        let e2 = IntMatrix::from_columns(2, &[vec![0, 1]]).unwrap();
        let v = structure_audit(&l, &e1, &e2, EnumerationConfig::default()).unwrap();
        assert!(v.iter().all(|a| a.passed()), "{v:#?}");
        assert!(v[2].detail.contains("rank_intersection=0 rank_sum=2"));
        let v = structure_audit(&l, &e1, &e1, EnumerationConfig::default()).unwrap();
        assert!((v[2].lhs - v[2].rhs).abs() < 1e-12);
    }

    #[test]
    fn intersection_and_sum() {
        let f1 = IntMatrix::from_columns(3, &[vec![2, 0, 0], vec![0, 1, 0]]).unwrap();
        let f2 = IntMatrix::from_columns(3, &[vec![3, 0, 0], vec![0, 0, 1]]).unwrap();
        let i = intersection_basis(&f1, &f2).unwrap();
        assert_eq!(i.columns().len(), 1);
        assert_eq!(crate::enumeration::canonical_sign(&i.column(0)), vec![6, 0, 0]);
        let mut both = f1.columns();
        both.extend(f2.columns());
        let s = column_module_basis(&IntMatrix::from_columns(3, &both).unwrap()).unwrap();
        use num_traits::Signed;
        assert_eq!(s.det().abs(), crate::rational::rat(1));
    }

    #[test]
    fn asymptote() {
        let r = theta_asymptote_check(&Lattice::identity(1), EnumerationConfig::default()).unwrap();
        assert!(r.verdicts.iter().all(|a| a.passed()), "{r:?}");
        let r = theta_asymptote_check(&Lattice::identity(1).twist(1.0), EnumerationConfig::default()).unwrap();
        assert!(r.verdicts.iter().all(|a| a.passed()), "{r:?}");
    }
}
