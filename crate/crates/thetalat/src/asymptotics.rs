//! Saddle-point asymptotics of Aₙ(E): Poincaré and Darwin–Fowler estimates, the
//! Darwin–Fowler contour integral, discretization of continuous profiles and
//! convergence tables against the exact counting oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma_ur;

use crate::audit::{AuditVerdict, Verdict};
use crate::error::{Error, Result};
use crate::numeric::log_x_over_one_minus_exp_neg;
use crate::rational::Rational;
use crate::thermo::{an_exact, entropy, profile, DiscreteMeasure, TailCertificate, ThermoProfile};

/// Gauss–Legendre order per panel.
const GL_ORDER: usize = 20;
const QUAD_REL_TOL: f64 = 1e-9;
const MAX_PANELS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Poincare,
    DarwinFowler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticEstimate {
    pub n: usize,
    pub log_estimate: f64,
    pub prefactor: f64,
    pub beta: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub variant: Variant,
}

/// Largest η with every energy in ηℕ; `None` without exact commensurable energies.
pub fn detect_eta(m: &DiscreteMeasure) -> Option<f64> {
    m.eta()
}

/// log Aₙ(E) ≈ nS(E) − ½·log(2πβ²Ψ″(β)n) at β = S′(E).
pub fn poincare_estimate(p: &ThermoProfile, e: f64, n: usize) -> Result<AsymptoticEstimate> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let sol = entropy(p, e)?;
    let var = p.var(sol.beta)?;
    let nf = n as f64;
    let log_estimate = nf * sol.s - 0.5 * (2.0 * PI * sol.beta * sol.beta * var * nf).ln();
    Ok(AsymptoticEstimate { n, log_estimate, prefactor: 1.0, beta: sol.beta, s: sol.s, variant: Variant::Poincare })
}

fn check_in_ne(n: usize, e: f64, eta: f64) -> Result<f64> {
    let ratio = n as f64 * e / eta;
    if !ratio.is_finite() || (ratio - ratio.round()).abs() > 1e-9 * ratio.abs().max(1.0) {
        return Err(Error::NotInNE { ratio });
    }
    Ok(ratio.round())
}

/// The Poincaré estimate times ηβ/(1 − e^{−ηβ}); requires nE/η ∈ ℤ.
pub fn df_estimate(p: &ThermoProfile, eta: f64, e: f64, n: usize) -> Result<AsymptoticEstimate> {
    if !(eta > 0.0) {
        return Err(Error::InvalidInput("eta must be positive".into()));
    }
    check_in_ne(n, e, eta)?;
    let base = poincare_estimate(p, e, n)?;
    let lp = log_x_over_one_minus_exp_neg(eta * base.beta);
    Ok(AsymptoticEstimate {
        log_estimate: base.log_estimate + lp,
        prefactor: lp.exp(),
        variant: Variant::DarwinFowler,
        ..base
    })
}

/// Nearest admissible energy η⌊nE/η⌋/n below E.
pub fn nearest_admissible_energy(n: usize, e: f64, eta: f64) -> f64 {
    eta * ((n as f64 * e / eta) + 1e-9).floor() / n as f64
}

/// Nodes and weights of the Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; order];
    let mut w = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if order == 1 { (z, 1.0) } else { (p1, p0) };
            dp = nf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[order - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[order - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre on [a, b] with panel doubling until two results agree.
fn integrate<F>(f: F, a: f64, b: f64, start_panels: usize) -> Result<(Complex64, usize)>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let (x, w) = gauss_legendre(GL_ORDER);
    let rule = |panels: usize| -> Complex64 {
        let h = (b - a) / panels as f64;
        let parts: Vec<Complex64> = (0..panels)
            .into_par_iter()
            .map(|k| {
                let lo = a + h * k as f64;
                let mut s = Complex64::new(0.0, 0.0);
                for (xi, wi) in x.iter().zip(&w) {
                    s += f(lo + 0.5 * h * (xi + 1.0)) * *wi;
                }
                s * (0.5 * h)
            })
            .collect();
        parts.into_iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v)
    };
    let mut panels = start_panels.max(1);
    let mut prev = rule(panels);
    loop {
        panels *= 2;
        let cur = rule(panels);
        let change = (cur - prev).norm() / cur.norm().max(f64::MIN_POSITIVE);
        if change < QUAD_REL_TOL {
            return Ok((cur, panels));
        }
        if panels >= MAX_PANELS {
            return Err(Error::QuadratureNotConverged { change });
        }
        prev = cur;
    }
}

/// log Z(β + it) for an atom list, shifted by the ground energy.
fn log_z_complex(m: &DiscreteMeasure, beta: f64, t: f64) -> Complex64 {
    let h = m.h_min();
    let s = Complex64::new(beta, t);
    let mut acc = Complex64::new(0.0, 0.0);
    for a in m.atoms() {
        acc += (-s * (a.e - h)).exp() * a.w;
    }
    acc.ln() - s * h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DfContour {
    pub n: usize,
    #[serde(rename = "E")]
    pub e: f64,
    pub beta: f64,
    /// log of the real part of the integral.
    pub log_value: f64,
    /// Imaginary part relative to the real part.
    pub relative_imaginary: f64,
    pub panels: usize,
}

fn contour_beta(m: &DiscreteMeasure, e: f64, eta: f64) -> Result<f64> {
    let p = profile(m);
    match entropy(&p, e) {
        Ok(sol) if sol.beta > 0.0 => Ok(sol.beta),
        Err(Error::EAboveCertified { .. }) => Ok((2.0 * p.beta_lo()).max(1.0 / eta)),
        Err(e) => Err(e),
        Ok(_) => Ok(1.0 / eta),
    }
}

/// Aₙ(E) = (1/2π)∫_{−π/η}^{π/η} η/(1 − e^{−η(β+it)})·[Z(β+it)e^{E(β+it)}]ⁿ dt.
pub fn df_contour(m: &DiscreteMeasure, e: f64, n: usize, quad_points: usize) -> Result<DfContour> {
    let eta = detect_eta(m).ok_or(Error::NotArithmetic)?;
    check_in_ne(n, e, eta)?;
    let beta = contour_beta(m, e, eta)?;
    let nf = n as f64;
    let log_f0 = log_z_complex(m, beta, 0.0).re + beta * e;
    let g = |t: f64| -> Complex64 {
        let s = Complex64::new(beta, t);
        let pre = eta / (1.0 - (-s * eta).exp());
        let lf = log_z_complex(m, beta, t) + s * e - log_f0;
        pre * (lf * nf).exp()
    };
    let half = PI / eta;
    let panels = quad_points.div_ceil(GL_ORDER).max(1);
    let (val, panels) = integrate(g, -half, half, panels)?;
    let val = val / (2.0 * PI);
    if !(val.re > 0.0) {
        return Err(Error::QuadratureNotConverged { change: f64::NAN });
    }
    Ok(DfContour {
        n,
        e,
        beta,
        log_value: nf * log_f0 + val.re.ln(),
        relative_imaginary: (val.im / val.re).abs(),
        panels,
    })
}

/// |Z(β+it)| ≤ Z(β) with equality exactly on (2π/η)ℤ.
pub fn zmax_check(m: &DiscreteMeasure, beta: f64, t_grid: &[f64]) -> Result<Vec<AuditVerdict>> {
    let eta = detect_eta(m).ok_or(Error::NotArithmetic)?;
    let period = 2.0 * PI / eta;
    let z0 = log_z_complex(m, beta, 0.0).re;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let ratio = (log_z_complex(m, beta, t).re - z0).exp();
            let k = (t / period).round();
            let on_period = (t - k * period).abs() <= 1e-12 * period.max(t.abs());
            let name = format!("asymptotics.zmax[t={t}]");
            if on_period {
                let dev = (ratio - 1.0).abs();
                AuditVerdict::compare(&name, dev, 1e-12, "equality on the period lattice")
            } else {
                AuditVerdict {
                    name,
                    lhs: ratio,
                    rhs: 1.0,
                    verdict: if ratio < 1.0 { Verdict::Verified } else { Verdict::Violated },
                    detail: "strict inequality off the period lattice".into(),
                }
            }
        })
        .collect())
}

/// Laplace-method hypotheses for the contour integrand at β = S′(E): bounded modulus,
/// quadratic dip log|F(t)/F(0)| ≈ −αt² with α = Ψ″/2, strict maximum at t = 0.
pub fn laplace_conditions(m: &DiscreteMeasure, e: f64) -> Result<Vec<AuditVerdict>> {
    let eta = detect_eta(m).ok_or(Error::NotArithmetic)?;
    let p = profile(m);
    let sol = entropy(&p, e)?;
    let beta = sol.beta;
    let var = p.var(beta)?;
    let l0 = log_z_complex(m, beta, 0.0).re;
    let rel = |t: f64| log_z_complex(m, beta, t).re - l0;
    let grid: Vec<f64> = (1..=400).map(|k| PI / eta * k as f64 / 400.0).collect();
    let worst = grid.iter().map(|&t| rel(t)).fold(f64::NEG_INFINITY, f64::max);
    let h = 1e-3;
    let alpha_fit = -rel(h) / (h * h);
    let alpha = var / 2.0;
    Ok(vec![
        AuditVerdict::compare("asymptotics.laplace.bounded", worst.exp(), 1.0, "max |F(t)/F(0)| on (0, pi/eta]"),
        AuditVerdict::compare(
            "asymptotics.laplace.quadratic",
            (alpha_fit / alpha - 1.0).abs(),
            0.05,
            format!("alpha_fit={alpha_fit:.9e} alpha={alpha:.9e}"),
        ),
        AuditVerdict {
            name: "asymptotics.laplace.strict-maximum".into(),
            lhs: worst,
            rhs: 0.0,
            verdict: if worst < 0.0 { Verdict::Verified } else { Verdict::Violated },
            detail: "max log|F(t)/F(0)| away from 0".into(),
        },
    ])
}

/// ∫_a^b ρ with E = a + (b − a)s², which absorbs an E^{−1/2} endpoint singularity.
fn bin_mass(p: &ThermoProfile, a: f64, b: f64) -> Result<f64> {
    let f = |s: f64| -> Complex64 {
        let e = a + (b - a) * s * s;
        Complex64::new(p.density(e).unwrap_or(0.0) * 2.0 * (b - a) * s, 0.0)
    };
    Ok(integrate(f, 0.0, 1.0, 1)?.0.re)
}

/// Atoms at kη carrying the mass of [(k−1)η, kη), certified from β ≥ beta_lo on.
pub fn discretize(p: &ThermoProfile, eta: f64, beta_lo: f64) -> Result<DiscreteMeasure> {
    let ThermoProfile::Gaussian { dim, .. } = *p else {
        return Err(Error::InvalidInput("discretize needs a profile with a density".into()));
    };
    if !(eta > 0.0 && beta_lo > 0.0) {
        return Err(Error::InvalidInput("eta and beta_lo must be positive".into()));
    }
    let half_n = 0.5 * dim as f64;
    let beta_ref = beta_lo / 2.0;
    let z_ref = p.z(beta_ref)?;
    let z_lo = p.z(beta_lo)?;
    // Beyond E_cut the omitted atoms weigh at most ∫_{E_cut}^∞ ρ e^{−β_ref E} = Z(β_ref)·Q(n/2, β_ref E_cut).
    let mut k_max = ((40.0 + half_n * 2.0) / (beta_lo * eta)).ceil() as usize;
    let (e_cut, t_ref) = loop {
        let e_cut = k_max as f64 * eta;
        let t_ref = z_ref * gamma_ur(half_n, beta_ref * e_cut);
        if (-(beta_lo - beta_ref) * e_cut).exp() * t_ref <= 1e-15 * z_lo {
            break (e_cut, t_ref);
        }
        k_max *= 2;
    };
    let atoms: Vec<(Rational, f64)> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let w = bin_mass(p, (k - 1) as f64 * eta, k as f64 * eta)?;
            Ok((Rational::from_integer(k.into()), w))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let m = DiscreteMeasure::with_exact(eta, atoms, true)?;
    Ok(m.with_tail(e_cut, TailCertificate { e_cut, beta_ref, t_ref }, beta_lo))
}

/// Ψ(β) − ηβ ≤ Ψ_η(β) ≤ Ψ(β) for the discretized family.
pub fn discretization_sandwich(p: &ThermoProfile, m: &DiscreteMeasure, eta: f64, beta: f64) -> Result<Vec<AuditVerdict>> {
    let psi = p.psi(beta)?;
    let pt = profile(m).eval(beta)?;
    Ok(vec![
        AuditVerdict::compare("asymptotics.discretization.lower", psi - eta * beta, pt.psi + pt.psi_error, ""),
        AuditVerdict::compare("asymptotics.discretization.upper", pt.psi, psi, ""),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub log_an_over_n: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub gap: f64,
    /// Aₙ / df_estimate, NaN when n ∉ 𝒩(E).
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub verdicts: Vec<AuditVerdict>,
}

pub fn convergence_report(m: &DiscreteMeasure, e: f64, n_list: &[usize]) -> Result<ConvergenceReport> {
    let p = profile(m);
    let sol = entropy(&p, e)?;
    let eta = detect_eta(m);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let an = an_exact(m, e, n)?;
        let v = an.log_an / n as f64;
        let ratio = match eta.map(|eta| df_estimate(&p, eta, e, n)) {
            Some(Ok(est)) => (an.log_an - est.log_estimate).exp(),
            _ => f64::NAN,
        };
        rows.push(ConvergenceRow { n, log_an_over_n: v, s: sol.s, gap: sol.s - v, ratio });
    }
    let min_gap = rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    let mut verdicts =
        vec![AuditVerdict::compare("asymptotics.convergence.chernoff", -min_gap, 0.0, "gap = S - (1/n)log A_n >= 0")];
    if rows.len() > 1 {
        let inc = rows.windows(2).map(|w| w[1].gap - w[0].gap).fold(f64::NEG_INFINITY, f64::max);
        verdicts.push(AuditVerdict::compare("asymptotics.convergence.monotone", inc, 0.0, "gap non-increasing along n list"));
    }
    Ok(ConvergenceReport { rows, verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::thermo::{builtin_gaussian, builtin_geometric, from_lattice};

    fn two_atoms() -> DiscreteMeasure {
        DiscreteMeasure::with_exact(1.0, vec![(rat(0), 1.0), (rat(1), 1.0)], false).unwrap()
    }

    #[test]
    fn eta_detection() {
        let m = |xs: &[i64]| DiscreteMeasure::with_exact(1.0, xs.iter().map(|&x| (rat(x), 1.0)).collect(), false).unwrap();
        assert_eq!(detect_eta(&m(&[0, 2, 4])), Some(2.0));
        assert_eq!(detect_eta(&m(&[0, 2, 3])), Some(1.0));
        let z = from_lattice(&crate::lattice::Lattice::identity(1), 0.5).unwrap();
        assert!((detect_eta(&z).unwrap() - PI).abs() < 1e-15);
        assert_eq!(detect_eta(&DiscreteMeasure::new(vec![(0.0, 1.0), (1.0, 1.0)], false).unwrap()), None);
    }

    #[test]
    fn legendre_nodes() {
        let (x, w) = gauss_legendre(20);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((i - 2.0 / 39.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(3);
        assert!((x[2] - 0.6f64.sqrt()).abs() < 1e-15 && (w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn contour_matches_binomial() {
        let c = df_contour(&two_atoms(), 0.5, 10, 40).unwrap();
        assert!((c.log_value - 638f64.ln()).abs() < 1e-6, "{c:?}");
        assert!(c.relative_imaginary < 1e-10);
        let g = builtin_geometric(1000).unwrap();
        let c = df_contour(&g, 1.0, 6, 40).unwrap();
        let dp = an_exact(&g, 1.0, 6).unwrap();
        assert!((c.log_value - dp.log_an).abs() < 1e-8);
        assert!(matches!(df_contour(&g, 0.5, 3, 40), Err(Error::NotInNE { .. })));
    }

    #[test]
    fn df_prefactor_limit() {
        let g = builtin_gaussian(1, 1.0).unwrap();
        let a = poincare_estimate(&g, 1.0, 10).unwrap();
        let b = df_estimate(&g, 1e-9, 1.0, 10).unwrap();
        assert!((a.log_estimate - b.log_estimate).abs() < 1e-8);
    }

    #[test]
    fn gaussian_poincare() {
        let m = 1.0 / (2.0 * PI);
        let g = builtin_gaussian(1, m).unwrap();
        let e = 0.7;
        let est = poincare_estimate(&g, e, 200).unwrap();
        let exact = crate::thermo::gaussian_log_an(1, m, 0.0, e, 200);
        assert!((exact - est.log_estimate).abs() < 0.02, "{}", exact - est.log_estimate);
    }

    #[test]
    fn zmax() {
        let v = zmax_check(&two_atoms(), 1.0, &[2.0 * PI, PI / 2.0, 1.0]).unwrap();
        assert!(v.iter().all(|a| a.passed()), "{v:?}");
        let z = from_lattice(&crate::lattice::Lattice::identity(1), 0.5).unwrap();
        let v = zmax_check(&z, 1.0, &[2.0, 1.0, 0.5]).unwrap();
        assert!(v.iter().all(|a| a.passed()), "{v:?}");
        let v = laplace_conditions(&builtin_geometric(1000).unwrap(), 1.0).unwrap();
        assert!(v.iter().all(|a| a.passed()), "{v:?}");
    }

    #[test]
    fn discretized_gaussian() {
        let g = builtin_gaussian(1, 1.0 / (2.0 * PI)).unwrap();
        let eta = 0.01;
        let d = discretize(&g, eta, 0.25).unwrap();
        // Closed-form bin masses: N(E) = 2·√(E/π).
        let n = |e: f64| 2.0 * (e / PI).sqrt();
        for k in [1usize, 2, 50, 400] {
            let w = d.atoms()[k - 1].w;
            let want = n(k as f64 * eta) - n((k - 1) as f64 * eta);
            assert!((w - want).abs() < 1e-12 * want, "k={k}");
        }
        let v = discretization_sandwich(&g, &d, eta, 1.0).unwrap();
        assert!(v.iter().all(|a| a.passed()), "{v:?}");
        let s = entropy(&profile(&d), 1.0).unwrap().s;
        let exact = entropy(&g, 1.0).unwrap();
        assert!((s - exact.s).abs() <= 2.0 * eta * exact.beta);
    }

    #[test]
    fn binomial_convergence() {
        let r = convergence_report(&two_atoms(), 0.25, &[100, 200, 400]).unwrap();
        assert!(r.rows[2].gap < r.rows[0].gap);
        assert!(r.verdicts.iter().all(|a| a.passed()), "{r:?}");
        assert!((r.rows[2].ratio - 1.0).abs() < 0.05);
    }
}
