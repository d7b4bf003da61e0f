//! Measure spaces with Hamiltonian, reduced to their energy pushforward: partition
//! functions, entropy by Legendre inversion, exact counting Aₙ(E) and the inequality
//! checks that connect them.

use std::f64::consts::PI;

use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::AuditVerdict;
use crate::enumeration::{EnumerationConfig, Enumerator};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::numeric::{log_sum_exp, log_unit_ball_volume, Accumulator, Precision};
use crate::rational::{format_rational, from_f64, gcd_rational, parse_rational, to_f64, Rational};
use crate::theta::{beta_inverse, theta_with, ThetaOptions};

/// Lower end of the inverse-temperature bracket used by the entropy solver.
pub const BETA_BRACKET_LO: f64 = 1e-6;
pub const BETA_BRACKET_HI: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub e: f64,
    pub w: f64,
}

/// Energies of the form unit·qₖ with rational qₖ.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactEnergies {
    pub unit: f64,
    pub indices: Vec<Rational>,
}

/// For β > β_ref the omitted atoms (all of energy > e_cut) satisfy
/// Σ w·e^{−βE} ≤ e^{−(β−β_ref)·e_cut}·t_ref.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailCertificate {
    pub e_cut: f64,
    pub beta_ref: f64,
    pub t_ref: f64,
}

impl TailCertificate {
    /// Bound on Σ_{tail} E^k·w·e^{−βE}.
    pub fn moment_bound(&self, beta: f64, k: i32) -> f64 {
        let d = beta - self.beta_ref;
        if !(d > 0.0) {
            return f64::INFINITY;
        }
        let kf = k as f64;
        let sup = if k == 0 || self.e_cut >= kf / d {
            self.e_cut.powi(k) * (-d * self.e_cut).exp()
        } else {
            (kf / d).powi(k) * (-kf).exp()
        };
        sup * self.t_ref
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
    exact: Option<ExactEnergies>,
    infinite_mass: bool,
    /// Every atom of energy ≤ complete_to is listed.
    complete_to: f64,
    tail: Option<TailCertificate>,
    /// Smallest β at which the profile is certified.
    beta_lo: f64,
}

impl DiscreteMeasure {
    /// Atoms in any order; equal energies are merged. The list is taken as the whole measure.
    pub fn new(atoms: Vec<(f64, f64)>, infinite_mass: bool) -> Result<Self> {
        let (atoms, _) = normalize(atoms.into_iter().map(|(e, w)| (e, w, None)).collect())?;
        Ok(Self { atoms, exact: None, infinite_mass, complete_to: f64::INFINITY, tail: None, beta_lo: 0.0 })
    }

    /// Atoms at energies unit·qₖ.
    pub fn with_exact(unit: f64, atoms: Vec<(Rational, f64)>, infinite_mass: bool) -> Result<Self> {
        if !(unit > 0.0) || !unit.is_finite() {
            return Err(Error::InvalidInput("unit must be positive".into()));
        }
        let raw = atoms.into_iter().map(|(q, w)| (unit * to_f64(&q), w, Some(q))).collect();
        let (atoms, idx) = normalize(raw)?;
        let indices = idx.into_iter().map(|q| q.expect("exact index")).collect();
        Ok(Self {
            atoms,
            exact: Some(ExactEnergies { unit, indices }),
            infinite_mass,
            complete_to: f64::INFINITY,
            tail: None,
            beta_lo: 0.0,
        })
    }

    /// Marks the list as a truncation complete up to `complete_to`, with a tail certificate
    /// valid from `beta_lo` on.
    pub fn with_tail(mut self, complete_to: f64, tail: TailCertificate, beta_lo: f64) -> Self {
        self.complete_to = complete_to;
        self.tail = Some(tail);
        self.beta_lo = beta_lo;
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn exact(&self) -> Option<&ExactEnergies> {
        self.exact.as_ref()
    }

    pub fn infinite_mass(&self) -> bool {
        self.infinite_mass
    }

    pub fn complete_to(&self) -> f64 {
        self.complete_to
    }

    pub fn tail(&self) -> Option<&TailCertificate> {
        self.tail.as_ref()
    }

    pub fn beta_lo(&self) -> f64 {
        self.beta_lo
    }

    pub fn h_min(&self) -> f64 {
        self.atoms[0].e
    }

    pub fn w_min(&self) -> f64 {
        self.atoms[0].w
    }

    /// Largest η with every energy in ηℕ, from the exact energies.
    pub fn eta(&self) -> Option<f64> {
        let (unit, g) = self.eta_parts()?;
        Some(unit * to_f64(&g))
    }

    fn eta_parts(&self) -> Option<(f64, Rational)> {
        let ex = self.exact.as_ref()?;
        let mut g = Rational::zero();
        for q in &ex.indices {
            g = gcd_rational(&g, q);
        }
        (!g.is_zero()).then_some((ex.unit, g))
    }

    pub fn to_json(&self) -> MeasureJson {
        let atoms = match &self.exact {
            Some(ex) => self
                .atoms
                .iter()
                .zip(&ex.indices)
                .map(|(a, q)| AtomJson { e: EnergyJson::Exact(format_rational(q)), w: a.w })
                .collect(),
            None => self.atoms.iter().map(|a| AtomJson { e: EnergyJson::Float(a.e), w: a.w }).collect(),
        };
        MeasureJson { unit: self.exact.as_ref().map(|e| e.unit), atoms, infinite_mass: self.infinite_mass }
    }

    /// With a unit, each `e` is a multiple of it (exact); without one, `e` is the energy and
    /// the measure is exact (unit 1) only when every `e` is a rational string.
    pub fn from_json(j: &MeasureJson) -> Result<Self> {
        if j.atoms.is_empty() {
            return Err(Error::InvalidInput("measure has no atoms".into()));
        }
        let all_strings = j.atoms.iter().all(|a| matches!(a.e, EnergyJson::Exact(_)));
        let index = |a: &AtomJson| -> Result<Rational> {
            match &a.e {
                EnergyJson::Exact(s) => parse_rational(s),
                EnergyJson::Float(x) => {
                    if x.is_finite() {
                        Ok(from_f64(*x))
                    } else {
                        Err(Error::InvalidInput("non-finite energy".into()))
                    }
                }
            }
        };
        match j.unit {
            Some(unit) => {
                let atoms = j.atoms.iter().map(|a| Ok((index(a)?, a.w))).collect::<Result<_>>()?;
                Self::with_exact(unit, atoms, j.infinite_mass)
            }
            None if all_strings => {
                let atoms = j.atoms.iter().map(|a| Ok((index(a)?, a.w))).collect::<Result<_>>()?;
                Self::with_exact(1.0, atoms, j.infinite_mass)
            }
            None => {
                let atoms = j
                    .atoms
                    .iter()
                    .map(|a| Ok((to_f64(&index(a)?), a.w)))
                    .collect::<Result<_>>()?;
                Self::new(atoms, j.infinite_mass)
            }
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: MeasureJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&j)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable")
    }
}

type RawAtom = (f64, f64, Option<Rational>);

fn normalize(mut raw: Vec<RawAtom>) -> Result<(Vec<Atom>, Vec<Option<Rational>>)> {
    if raw.is_empty() {
        return Err(Error::InvalidInput("measure has no atoms".into()));
    }
    for (e, w, q) in &raw {
        if !(e.is_finite() && *e >= 0.0) {
            return Err(Error::InvalidInput(format!("energy {e} must be finite and non-negative")));
        }
        if !(w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidInput(format!("weight {w} must be finite and positive")));
        }
        if let Some(q) = q {
            if q.is_negative() {
                return Err(Error::InvalidInput("negative exact energy".into()));
            }
        }
    }
    raw.sort_by(|a, b| match (&a.2, &b.2) {
        (Some(x), Some(y)) => x.cmp(y),
        _ => a.0.total_cmp(&b.0),
    });
    let mut atoms: Vec<Atom> = Vec::with_capacity(raw.len());
    let mut idx: Vec<Option<Rational>> = Vec::with_capacity(raw.len());
    for (e, w, q) in raw {
        let same = match (idx.last(), &q) {
            (Some(Some(p)), Some(q)) => p == q,
            (Some(None), None) => atoms.last().map(|a| a.e) == Some(e),
            _ => false,
        };
        if same {
            atoms.last_mut().expect("nonempty").w += w;
        } else {
            atoms.push(Atom { e, w });
            idx.push(q);
        }
    }
    Ok((atoms, idx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergyJson {
    Float(f64),
    Exact(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub e: EnergyJson,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureJson {
    pub unit: Option<f64>,
    pub atoms: Vec<AtomJson>,
    #[serde(default)]
    pub infinite_mass: bool,
}

/// Geometric ladder e₀ + k·step, k = 0..=cutoff, unit weights, with its exact tail certificate.
fn ladder(offset_index: i64, index_step: i64, unit: f64, cutoff: usize) -> Result<DiscreteMeasure> {
    let atoms = (0..=cutoff as i64).map(|k| (Rational::from_integer((offset_index + index_step * k).into()), 1.0)).collect();
    let m = DiscreteMeasure::with_exact(unit, atoms, true)?;
    let step = unit * index_step as f64;
    let e0 = unit * offset_index as f64;
    let e_cut = e0 + step * cutoff as f64;
    // The tail at β_lo is about e^{−40} relative to its first term.
    let beta_lo = 40.0 / (step * cutoff.max(1) as f64);
    let beta_ref = beta_lo / 2.0;
    let t_ref = (-beta_ref * (e_cut + step)).exp() / -(-beta_ref * step).exp_m1();
    Ok(m.with_tail(e_cut, TailCertificate { e_cut, beta_ref, t_ref }, beta_lo))
}

/// Counting measure on ℕ (atoms (k, 1), k ≤ cutoff).
pub fn builtin_geometric(cutoff: usize) -> Result<DiscreteMeasure> {
    ladder(0, 1, 1.0, cutoff)
}

/// Quantum harmonic oscillator: atoms ((k + 1/2)·hν, 1), k ≤ cutoff.
pub fn builtin_oscillator(planck: f64, freq: f64, cutoff: usize) -> Result<DiscreteMeasure> {
    if !(planck > 0.0 && freq > 0.0) {
        return Err(Error::InvalidInput("planck constant and frequency must be positive".into()));
    }
    ladder(1, 2, 0.5 * planck * freq, cutoff)
}

/// Gaussian kinetic profile of dimension n and mass m.
pub fn builtin_gaussian(dim: usize, mass: f64) -> Result<ThermoProfile> {
    if dim == 0 || !(mass > 0.0) {
        return Err(Error::InvalidInput("dimension and mass must be positive".into()));
    }
    Ok(ThermoProfile::Gaussian { dim, mass, deg_shift: 0.0 })
}

/// Flat torus of the dual of F: the Gaussian profile shifted by deg F.
pub fn builtin_flat_torus(f: &Lattice, mass: f64) -> Result<ThermoProfile> {
    if !(mass > 0.0) {
        return Err(Error::InvalidInput("mass must be positive".into()));
    }
    Ok(ThermoProfile::Gaussian { dim: f.rank(), mass, deg_shift: f.degree() })
}

/// Lattice measure: atoms (π‖v‖², multiplicity), certified for β ≥ β_min.
pub fn from_lattice(l: &Lattice, beta_min: f64) -> Result<DiscreteMeasure> {
    from_lattice_with(l, beta_min, 0.0, EnumerationConfig::default())
}

/// As [`from_lattice`], additionally listing every atom of energy ≤ `complete_energy`.
pub fn from_lattice_with(
    l: &Lattice,
    beta_min: f64,
    complete_energy: f64,
    config: EnumerationConfig,
) -> Result<DiscreteMeasure> {
    if !(beta_min > 0.0) || !beta_min.is_finite() {
        return Err(Error::InvalidInput("beta_min must be positive".into()));
    }
    let n = l.rank();
    let nf = n as f64;
    let beta_ref = beta_min / 2.0;
    let opts = ThetaOptions { tol: 1e-12, allow_poisson: true, config };
    let th_ref = theta_with(l, beta_ref, None, &opts)?.upper();
    let th_min = theta_with(l, beta_min, None, &opts)?;
    let r_t = beta_inverse((1e-16 * th_min.value / th_ref).powf(1.0 / nf).min(1.0))?.max(1.0);
    let mut r2 = (nf * r_t * r_t / (2.0 * PI * beta_min)).max(complete_energy / PI);
    // Σ_{‖v‖≥r} e^{−πβ_ref‖v‖²} ≤ β(r̃)ⁿ·θ(β_ref) with r̃ = r·√(2πβ_ref/n).
    let (t_ref, e_cut) = loop {
        let rt = (r2 * 2.0 * PI * beta_ref / nf).sqrt();
        let t_ref = if rt >= 1.0 {
            (nf * (rt.ln() - 0.5 * (rt * rt - 1.0))).exp() * th_ref
        } else {
            th_ref
        };
        let e_cut = PI * r2;
        if (-(beta_min - beta_ref) * e_cut).exp() * t_ref <= 1e-15 * th_min.value {
            break (t_ref, e_cut);
        }
        r2 *= 2.0;
    };
    let en = Enumerator::new(l, config)?;
    let rep = en.ball_f64(r2, false)?;
    let cert = TailCertificate { e_cut, beta_ref, t_ref };
    let m = if l.is_exact() {
        let atoms = rep
            .histogram
            .iter()
            .map(|h| (h.norm.clone().expect("exact lattice norm"), h.multiplicity as f64))
            .collect();
        DiscreteMeasure::with_exact(PI, atoms, true)?
    } else {
        let atoms = rep.histogram.iter().map(|h| (PI * h.value, h.multiplicity as f64)).collect();
        DiscreteMeasure::new(atoms, true)?
    };
    // Points on the boundary sphere may have been rounded either way.
    Ok(m.with_tail(e_cut * (1.0 - 1e-12), cert, beta_min))
}

/// Ψ, U = −Ψ′ and Ψ″ at one β, with bounds on the truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub beta: f64,
    pub psi: f64,
    pub u: f64,
    pub var: f64,
    /// Bound on |Ψ − Ψ_true|.
    pub psi_error: f64,
    /// Bound on |U − U_true|.
    pub u_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThermoProfile {
    Atomic(DiscreteMeasure),
    /// Ψ(β) = (n/2)·log(2πm/β) + deg_shift.
    Gaussian { dim: usize, mass: f64, deg_shift: f64 },
    Product(Box<ThermoProfile>, Box<ThermoProfile>),
}

pub fn profile(m: &DiscreteMeasure) -> ThermoProfile {
    ThermoProfile::Atomic(m.clone())
}

pub fn product(p1: &ThermoProfile, p2: &ThermoProfile) -> Result<ThermoProfile> {
    Ok(ThermoProfile::Product(Box::new(p1.clone()), Box::new(p2.clone())))
}

fn precision() -> Precision {
    Precision::from_env().unwrap_or_default()
}

fn atomic_point(m: &DiscreteMeasure, beta: f64) -> ProfilePoint {
    let h = m.h_min();
    let prec = precision();
    let mut z = Accumulator::new(prec);
    let mut s1 = Accumulator::new(prec);
    let ws: Vec<f64> = m.atoms.iter().map(|a| a.w * (-beta * (a.e - h)).exp()).collect();
    for (a, &w) in m.atoms.iter().zip(&ws) {
        z.add(w);
        s1.add((a.e - h) * w);
    }
    let zv = z.value();
    let mean = s1.value() / zv;
    let mut s2 = Accumulator::new(prec);
    for (a, &w) in m.atoms.iter().zip(&ws) {
        let d = a.e - h - mean;
        s2.add(d * d * w);
    }
    let psi = -beta * h + zv.ln();
    let u = h + mean;
    let (psi_error, u_error) = match &m.tail {
        Some(t) => {
            let scale = (beta * h).exp();
            let t0 = t.moment_bound(beta, 0) * scale;
            let t1 = t.moment_bound(beta, 1) * scale;
            (t0 / zv, t1.max(u * t0) / zv)
        }
        None => (0.0, 0.0),
    };
    ProfilePoint { beta, psi, u, var: s2.value() / zv, psi_error, u_error }
}

impl ThermoProfile {
    pub fn h_min(&self) -> f64 {
        match self {
            Self::Atomic(m) => m.h_min(),
            Self::Gaussian { .. } => 0.0,
            Self::Product(a, b) => a.h_min() + b.h_min(),
        }
    }

    /// Weight of the minimal-energy stratum (zero for continuous profiles).
    pub fn w_min(&self) -> f64 {
        match self {
            Self::Atomic(m) => m.w_min(),
            Self::Gaussian { .. } => 0.0,
            Self::Product(a, b) => a.w_min() * b.w_min(),
        }
    }

    pub fn beta_lo(&self) -> f64 {
        match self {
            Self::Atomic(m) => m.beta_lo,
            Self::Gaussian { .. } => 0.0,
            Self::Product(a, b) => a.beta_lo().max(b.beta_lo()),
        }
    }

    pub fn eval(&self, beta: f64) -> Result<ProfilePoint> {
        let lo = self.beta_lo();
        if !(beta > 0.0 && beta >= lo) || !beta.is_finite() {
            return Err(Error::DomainError { beta, beta_lo: lo });
        }
        Ok(match self {
            Self::Atomic(m) => atomic_point(m, beta),
            Self::Gaussian { dim, mass, deg_shift } => {
                let n = *dim as f64;
                ProfilePoint {
                    beta,
                    psi: 0.5 * n * (2.0 * PI * mass / beta).ln() + deg_shift,
                    u: 0.5 * n / beta,
                    var: 0.5 * n / (beta * beta),
                    psi_error: 0.0,
                    u_error: 0.0,
                }
            }
            Self::Product(a, b) => {
                let (p, q) = (a.eval(beta)?, b.eval(beta)?);
                ProfilePoint {
                    beta,
                    psi: p.psi + q.psi,
                    u: p.u + q.u,
                    var: p.var + q.var,
                    psi_error: p.psi_error + q.psi_error,
                    u_error: p.u_error + q.u_error,
                }
            }
        })
    }

    pub fn psi(&self, beta: f64) -> Result<f64> {
        Ok(self.eval(beta)?.psi)
    }

    pub fn z(&self, beta: f64) -> Result<f64> {
        Ok(self.eval(beta)?.psi.exp())
    }

    pub fn u(&self, beta: f64) -> Result<f64> {
        Ok(self.eval(beta)?.u)
    }

    pub fn var(&self, beta: f64) -> Result<f64> {
        Ok(self.eval(beta)?.var)
    }

    /// Smallest β used by the entropy solver.
    pub fn beta_floor(&self) -> f64 {
        self.beta_lo().max(BETA_BRACKET_LO)
    }

    /// Largest energy served by [`entropy`]: U at the bottom of the certified range.
    pub fn u_max(&self) -> Result<f64> {
        self.u(self.beta_floor())
    }

    /// Density of the energy pushforward, for continuous profiles.
    pub fn density(&self, e: f64) -> Option<f64> {
        match self {
            Self::Gaussian { dim, mass, deg_shift } => {
                if e <= 0.0 {
                    return Some(0.0);
                }
                let n = *dim as f64;
                let log = log_unit_ball_volume(n) + (0.5 * n).ln() + 0.5 * n * (2.0 * mass).ln()
                    + (0.5 * n - 1.0) * e.ln()
                    + deg_shift;
                Some(log.exp())
            }
            _ => None,
        }
    }
}

/// log Aₙ(E) for the Gaussian profile: the volume of a ball of dimension n·dim.
pub fn gaussian_log_an(dim: usize, mass: f64, deg_shift: f64, e: f64, n: usize) -> f64 {
    let big = (n * dim) as f64;
    log_unit_ball_volume(big) + 0.5 * big * (2.0 * mass * n as f64 * e).ln() + n as f64 * deg_shift
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropySolve {
    #[serde(rename = "E")]
    pub e: f64,
    pub beta: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// S(E) = Ψ(β) + βE at the β with U(β) = E.
pub fn entropy(p: &ThermoProfile, e: f64) -> Result<EntropySolve> {
    let h = p.h_min();
    if !(e > h) {
        return Err(Error::EBelowMinimum { e, h_min: h });
    }
    let tol = 1e-10 * e.abs().max(1.0);
    let mut lo = p.beta_floor();
    let mut hi = BETA_BRACKET_HI;
    let u_lo = p.u(lo)?;
    if e >= u_lo {
        return Err(Error::EAboveCertified { e, u_max: u_lo });
    }
    if p.u(hi)? > e {
        return Err(Error::NoConvergence { lo, hi });
    }
    // Start from the geometric midpoint; Newton on U(β) − E with bisection in log β.
    let mut beta = (lo * hi).sqrt();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let pt = p.eval(beta)?;
        let g = pt.u - e;
        if g > 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
        let newton = beta + g / pt.var;
        let done = g.abs() <= tol && ((newton - beta).abs() <= 1e-13 * beta || g.abs() <= 1e-15 * e.abs().max(1.0));
        if done || hi / lo - 1.0 < 1e-15 {
            let s = pt.psi + beta * e;
            return Ok(EntropySolve { e, beta, s, iterations, residual: g.abs() });
        }
        if iterations > 500 {
            if g.abs() <= tol {
                return Ok(EntropySolve { e, beta, s: pt.psi + beta * e, iterations, residual: g.abs() });
            }
            return Err(Error::NoConvergence { lo, hi });
        }
        beta = if newton > lo && newton < hi && pt.var > 0.0 { newton } else { (lo * hi).sqrt() };
    }
}

/// Ψ(β′) + β′E − S(E) ≥ 0.
pub fn legendre_residual(p: &ThermoProfile, sol: &EntropySolve, beta: f64) -> Result<f64> {
    Ok(p.psi(beta)? + beta * sol.e - sol.s)
}

/// Result of the exact counting oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnValue {
    pub n: usize,
    #[serde(rename = "E")]
    pub e: f64,
    pub log_an: f64,
    /// Largest admissible total energy index ⌊nE/η⌋.
    pub degree: usize,
    pub eta: f64,
}

/// Integer energy indices (in units of η) and log weights.
struct Arithmetic {
    eta: f64,
    idx: Vec<usize>,
    lw: Vec<f64>,
}

fn arithmetic(m: &DiscreteMeasure) -> Result<Arithmetic> {
    let (unit, g) = m.eta_parts().ok_or(Error::NotArithmetic)?;
    let ex = m.exact.as_ref().expect("eta implies exact energies");
    let idx = ex
        .indices
        .iter()
        .map(|q| {
            let k = q / &g;
            debug_assert!(k.is_integer());
            k.to_integer().to_usize().ok_or(Error::Overflow)
        })
        .collect::<Result<_>>()?;
    Ok(Arithmetic { eta: unit * to_f64(&g), idx, lw: m.atoms.iter().map(|a| a.w.ln()).collect() })
}

fn degree_for(n: usize, e: f64, eta: f64) -> Result<usize> {
    let x = n as f64 * e / eta;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!("energy {e} gives no admissible degree")));
    }
    Ok((x + 1e-9).floor() as usize)
}

fn check_complete(m: &DiscreteMeasure, a: &Arithmetic, n: usize, degree: usize) -> Result<()> {
    let k_min = a.idx[0];
    if degree + k_min < n * k_min {
        return Ok(());
    }
    // A single atom can carry at most the total minus the ground energy of the others.
    let needed = a.eta * (degree - (n - 1) * k_min) as f64;
    if m.complete_to < needed * (1.0 - 1e-12) {
        return Err(Error::TruncatedMeasure { complete: m.complete_to, needed });
    }
    Ok(())
}

/// log-coefficients of fⁿ from those of fⁿ⁻¹, truncated to `degree`.
fn convolve_step(prev: &[f64], a: &Arithmetic, degree: usize, prec: Precision) -> Vec<f64> {
    let cell = |j: usize| -> f64 {
        let mut terms = Vec::new();
        for (&k, &lw) in a.idx.iter().zip(&a.lw) {
            if k > j {
                break;
            }
            let p = prev[j - k];
            if p > f64::NEG_INFINITY {
                terms.push(p + lw);
            }
        }
        log_sum_exp(&terms, prec)
    };
    if degree >= 512 {
        (0..=degree).into_par_iter().map(cell).collect()
    } else {
        (0..=degree).map(cell).collect()
    }
}

fn first_row(a: &Arithmetic, degree: usize) -> Vec<f64> {
    let mut row = vec![f64::NEG_INFINITY; degree + 1];
    for (&k, &lw) in a.idx.iter().zip(&a.lw) {
        if k <= degree {
            row[k] = lw;
        }
    }
    row
}

/// Table of log-coefficients of fⁿ for n = 1..=n_max up to `degree`.
pub struct PowerTable {
    pub eta: f64,
    rows: Vec<Vec<f64>>,
    prec: Precision,
}

impl PowerTable {
    pub fn new(m: &DiscreteMeasure, n_max: usize, degree: usize) -> Result<Self> {
        let a = arithmetic(m)?;
        check_complete(m, &a, n_max.max(1), degree)?;
        let prec = precision();
        let mut rows = Vec::with_capacity(n_max);
        let mut row = first_row(&a, degree);
        for n in 1..=n_max {
            if n > 1 {
                row = convolve_step(&row, &a, degree, prec);
            }
            rows.push(row.clone());
        }
        Ok(Self { eta: a.eta, rows, prec })
    }

    pub fn n_max(&self) -> usize {
        self.rows.len()
    }

    pub fn degree(&self) -> usize {
        self.rows[0].len() - 1
    }

    /// log Σ_{lo ≤ j ≤ hi} [Xʲ]fⁿ.
    pub fn log_range(&self, n: usize, lo: usize, hi: usize) -> f64 {
        let row = &self.rows[n - 1];
        let hi = hi.min(row.len() - 1);
        if lo > hi {
            return f64::NEG_INFINITY;
        }
        log_sum_exp(&row[lo..=hi], self.prec)
    }

    /// log Aₙ(E).
    pub fn log_an(&self, n: usize, e: f64) -> Result<f64> {
        let d = degree_for(n, e, self.eta)?;
        if d > self.degree() {
            return Err(Error::InvalidInput("energy beyond the table degree".into()));
        }
        Ok(self.log_range(n, 0, d))
    }
}

/// Exact log Aₙ(E) by truncated n-fold convolution of the coefficient sequence.
pub fn an_exact(m: &DiscreteMeasure, e: f64, n: usize) -> Result<AnValue> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let a = arithmetic(m)?;
    let degree = degree_for(n, e, a.eta)?;
    check_complete(m, &a, n, degree)?;
    let prec = precision();
    let mut row = first_row(&a, degree);
    for _ in 1..n {
        row = convolve_step(&row, &a, degree, prec);
    }
    Ok(AnValue { n, e, log_an: log_sum_exp(&row, prec), degree, eta: a.eta })
}

/// Stable invariant h̃⁰_Ar(L, x) = S(πx) of the lattice measure.
pub fn h0_ar_tilde(l: &Lattice, x: f64) -> Result<f64> {
    h0_ar_tilde_with(l, x, EnumerationConfig::default())
}

pub fn h0_ar_tilde_with(l: &Lattice, x: f64, config: EnumerationConfig) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput("x must be positive".into()));
    }
    let (m, _) = lattice_measure_for(l, PI * x, 0.0, config)?;
    Ok(entropy(&profile(&m), PI * x)?.s)
}

/// Lattice measure whose certified range contains energy e (U(β_min) > e).
pub fn lattice_measure_for(
    l: &Lattice,
    e: f64,
    complete_energy: f64,
    config: EnumerationConfig,
) -> Result<(DiscreteMeasure, f64)> {
    let nf = l.rank() as f64;
    // U(β) ≈ n/(2β) for small β, so this starts near U = 2e.
    let mut beta_min = nf / (4.0 * e);
    for _ in 0..60 {
        let m = from_lattice_with(l, beta_min, complete_energy, config)?;
        if profile(&m).u(beta_min)? > e {
            return Ok((m, beta_min));
        }
        beta_min /= 2.0;
    }
    Err(Error::EAboveCertified { e, u_max: f64::NAN })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondLawReport {
    #[serde(rename = "E")]
    pub e: f64,
    /// S(E) of the product profile.
    pub s_product: f64,
    /// max S₁(E₁) + S₂(E − E₁).
    pub s_max: f64,
    pub e1: f64,
    pub e2: f64,
    pub beta: f64,
    pub u1: f64,
    pub u2: f64,
    pub verdicts: Vec<AuditVerdict>,
}

/// Verifies S(E) = max_{E₁+E₂=E} S₁(E₁) + S₂(E₂), with the maximizer at Eᵢ = Uᵢ(S′(E)).
pub fn second_law_check(p1: &ThermoProfile, p2: &ThermoProfile, e: f64, grid: usize) -> Result<SecondLawReport> {
    let lo_beta = p1.beta_lo().max(p2.beta_lo());
    if !lo_beta.is_finite() {
        return Err(Error::DomainMismatch);
    }
    let prod = product(p1, p2)?;
    let sol = entropy(&prod, e)?;
    let (h1, h2) = (p1.h_min(), p2.h_min());
    let a = h1.max(e - p2.u_max()?);
    let b = (e - h2).min(p1.u_max()?);
    if !(a < b) {
        return Err(Error::DomainMismatch);
    }
    let obj = |e1: f64| -> Result<f64> { Ok(entropy(p1, e1)?.s + entropy(p2, e - e1)?.s) };
    let grid = grid.max(3);
    let pts: Vec<f64> = (1..grid).map(|i| a + (b - a) * i as f64 / grid as f64).collect();
    let vals: Vec<f64> = pts.iter().map(|&x| obj(x)).collect::<Result<_>>()?;
    let best = (0..vals.len()).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).expect("nonempty grid");
    let (mut l, mut r) = (
        if best == 0 { a + (b - a) * 1e-9 } else { pts[best - 1] },
        if best + 1 == pts.len() { b - (b - a) * 1e-9 } else { pts[best + 1] },
    );
    // Golden section on the concave objective.
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = r - g * (r - l);
    let mut x2 = l + g * (r - l);
    let (mut f1, mut f2) = (obj(x1)?, obj(x2)?);
    for _ in 0..60 {
        if f1 < f2 {
            l = x1;
            x1 = x2;
            f1 = f2;
            x2 = l + g * (r - l);
            f2 = obj(x2)?;
        } else {
            r = x2;
            x2 = x1;
            f2 = f1;
            x1 = r - g * (r - l);
            f1 = obj(x1)?;
        }
        if r - l < 1e-12 * e.abs().max(1.0) {
            break;
        }
    }
    // The derivative is S₁′(E₁) − S₂′(E₂) = β₁ − β₂; bisect it on the final bracket.
    let dbeta = |e1: f64| -> Result<f64> { Ok(entropy(p1, e1)?.beta - entropy(p2, e - e1)?.beta) };
    let (mut bl, mut br) = (l, r);
    if dbeta(bl)? > 0.0 && dbeta(br)? < 0.0 {
        for _ in 0..80 {
            let mid = 0.5 * (bl + br);
            if dbeta(mid)? > 0.0 {
                bl = mid;
            } else {
                br = mid;
            }
        }
    }
    let e1 = 0.5 * (bl + br);
    let s_max = obj(e1)?;
    let u1 = p1.u(sol.beta)?;
    let u2 = p2.u(sol.beta)?;
    let verdicts = vec![
        AuditVerdict::compare(
            "thermo.second-law.max",
            (s_max - sol.s).abs(),
            1e-6,
            format!("S={:.12e} max={s_max:.12e}", sol.s),
        ),
        AuditVerdict::compare(
            "thermo.second-law.maximizer",
            (e1 - u1).abs(),
            1e-6,
            format!("E1={e1:.12e} U1(beta)={u1:.12e} beta={:.12e}", sol.beta),
        ),
    ];
    Ok(SecondLawReport { e, s_product: sol.s, s_max, e1, e2: e - e1, beta: sol.beta, u1, u2, verdicts })
}

/// Chernoff, Lanford, window lower bound, window convergence and Fekete checks up to n_max.
pub fn bounds_suite(m: &DiscreteMeasure, e: f64, n_max: usize, eps: f64) -> Result<Vec<AuditVerdict>> {
    if n_max == 0 || !(eps > 0.0) {
        return Err(Error::InvalidInput("need n_max ≥ 1 and ε > 0".into()));
    }
    let p = profile(m);
    let sol = entropy(&p, e)?;
    let pt = p.eval(sol.beta)?;
    let a = arithmetic(m)?;
    let eta = a.eta;
    let degree = degree_for(n_max, e + eps, eta)?;
    let table = PowerTable::new(m, n_max, degree)?;
    let s = sol.s;
    let mut out = Vec::new();

    let mut worst = (f64::NEG_INFINITY, 0usize);
    for n in 1..=n_max {
        let v = table.log_an(n, e)? / n as f64;
        if v > worst.0 {
            worst = (v, n);
        }
    }
    out.push(AuditVerdict::compare(
        "thermo.chernoff",
        worst.0,
        s,
        format!("max over n<={n_max} of (1/n)log A_n(E) attained at n={}", worst.1),
    ));

    let e2 = 0.5 * (e + m.h_min());
    let mut lanford = (f64::NEG_INFINITY, 0usize, 0usize);
    for n1 in 1..n_max {
        for n2 in 1..=(n_max - n1) {
            let l = table.log_an(n1, e)? + table.log_an(n2, e2)?;
            let avg = (n1 as f64 * e + n2 as f64 * e2) / (n1 + n2) as f64;
            let r = table.log_an(n1 + n2, avg)?;
            if l - r > lanford.0 {
                lanford = (l - r, n1, n2);
            }
        }
    }
    if n_max >= 2 {
        out.push(AuditVerdict::compare(
            "thermo.lanford",
            lanford.0,
            0.0,
            format!("max of log A_n1(E)+log A_n2(E2)-log A_(n1+n2) at n1={} n2={} E2={e2}", lanford.1, lanford.2),
        ));
    }

    // Σₙ(U(β), ε) counts |Hₙ − nE| < nε.
    let mut keyest = (f64::NEG_INFINITY, 0usize);
    let mut applicable = 0;
    for n in 1..=n_max {
        let factor = 1.0 - pt.var / (eps * eps * n as f64);
        if factor <= 0.0 {
            continue;
        }
        applicable += 1;
        let nf = n as f64;
        let lo_x = nf * (e - eps) / eta;
        let hi_x = nf * (e + eps) / eta;
        let lo = if lo_x < 0.0 { 0 } else { (lo_x + 1e-9).floor() as usize + 1 };
        let hi_c = (hi_x - 1e-9).ceil();
        if hi_c < 1.0 {
            continue;
        }
        let hi = hi_c as usize - 1;
        let log_sigma = table.log_range(n, lo, hi);
        let bound = nf * (s - eps * sol.beta) + factor.ln();
        if bound - log_sigma > keyest.0 {
            keyest = (bound - log_sigma, n);
        }
    }
    if applicable > 0 {
        out.push(AuditVerdict::compare(
            "thermo.window-lower-bound",
            keyest.0,
            0.0,
            format!("max of log bound - log Sigma_n at n={} eps={eps}", keyest.1),
        ));
    } else {
        out.push(AuditVerdict::not_applicable("thermo.window-lower-bound", 0.0, 0.0, "1 - var/(eps^2 n) <= 0 for all n"));
    }

    // Window Iₙ = [E − n^{−1/3}, E].
    let window = |n: usize| -> Result<f64> {
        let nf = n as f64;
        let lo_x = nf * (e - nf.powf(-1.0 / 3.0)) / eta;
        let lo = if lo_x <= 0.0 { 0 } else { (lo_x - 1e-9).ceil() as usize };
        Ok(table.log_range(n, lo, degree_for(n, e, eta)?) / nf)
    };
    let w_last = window(n_max)?;
    out.push(AuditVerdict::compare(
        "thermo.window-upper",
        w_last,
        s,
        format!("(1/n)log mu(H_n in n I_n) at n={n_max}"),
    ));
    let n_quarter = (n_max / 4).max(1);
    if n_quarter < n_max {
        let gap_q = s - window(n_quarter)?;
        let gap_l = s - w_last;
        out.push(AuditVerdict::compare(
            "thermo.window-convergence",
            gap_l,
            gap_q,
            format!("gap at n={n_max} vs n={n_quarter}"),
        ));
    }

    let mut fek = f64::NEG_INFINITY;
    let mut n = 1;
    while 2 * n <= n_max {
        fek = fek.max(table.log_an(n, e)? / n as f64 - table.log_an(2 * n, e)? / (2 * n) as f64);
        n *= 2;
    }
    if n_max >= 2 {
        out.push(AuditVerdict::compare("thermo.fekete-doubling", fek, 0.0, "max decrease along n, 2n, 4n, ..."));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroTemperatureRow {
    pub beta: f64,
    pub u_minus_hmin: f64,
    pub beta_times_excess: f64,
    pub heat_capacity: f64,
    pub s_minus_log_wmin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroTemperatureReport {
    pub rows: Vec<ZeroTemperatureRow>,
    pub verdicts: Vec<AuditVerdict>,
}

/// Low-temperature table; the columns decay to 0 along increasing β when w_min > 0.
pub fn zero_temperature_report(p: &ThermoProfile, betas: &[f64]) -> Result<ZeroTemperatureReport> {
    let h = p.h_min();
    let lw = p.w_min().ln();
    let mut betas = betas.to_vec();
    betas.sort_by(f64::total_cmp);
    let rows: Vec<ZeroTemperatureRow> = betas
        .iter()
        .map(|&b| {
            let pt = p.eval(b)?;
            Ok(ZeroTemperatureRow {
                beta: b,
                u_minus_hmin: pt.u - h,
                beta_times_excess: b * (pt.u - h),
                heat_capacity: b * b * pt.var,
                s_minus_log_wmin: pt.psi + b * pt.u - lw,
            })
        })
        .collect::<Result<_>>()?;
    let mut verdicts = Vec::new();
    if p.w_min() > 0.0 && rows.len() > 1 {
        let cols: [(&str, fn(&ZeroTemperatureRow) -> f64); 4] = [
            ("thermo.zero-temperature.energy", |r| r.u_minus_hmin),
            ("thermo.zero-temperature.beta-energy", |r| r.beta_times_excess),
            ("thermo.zero-temperature.heat-capacity", |r| r.heat_capacity),
            ("thermo.zero-temperature.entropy", |r| r.s_minus_log_wmin),
        ];
        for (name, f) in cols {
            let inc = rows.windows(2).map(|w| f(&w[1]).abs() - f(&w[0]).abs()).fold(f64::NEG_INFINITY, f64::max);
            verdicts.push(AuditVerdict::compare(name, inc, 0.0, "max increase of |column| along increasing beta"));
        }
    }
    Ok(ZeroTemperatureReport { rows, verdicts })
}

/// max_E (S(E) − βE) over `e_grid` refined by golden section, compared with Ψ(β).
pub fn legendre_roundtrip(p: &ThermoProfile, betas: &[f64], e_grid: &[f64]) -> Result<f64> {
    let mut sols = Vec::with_capacity(e_grid.len());
    for &e in e_grid {
        sols.push(entropy(p, e)?);
    }
    let mut worst: f64 = 0.0;
    for &b in betas {
        let f = |e: f64| -> Result<f64> { Ok(entropy(p, e)?.s - b * e) };
        let vals: Vec<f64> = sols.iter().map(|s| s.s - b * s.e).collect();
        let i = (0..vals.len()).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).ok_or(Error::InvalidInput("empty grid".into()))?;
        let mut best = vals[i];
        if i > 0 && i + 1 < vals.len() {
            let (mut l, mut r) = (e_grid[i - 1], e_grid[i + 1]);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let mut x1 = r - g * (r - l);
            let mut x2 = l + g * (r - l);
            let (mut f1, mut f2) = (f(x1)?, f(x2)?);
            for _ in 0..80 {
                if f1 < f2 {
                    l = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = l + g * (r - l);
                    f2 = f(x2)?;
                } else {
                    r = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = r - g * (r - l);
                    f1 = f(x1)?;
                }
                if r - l < 1e-13 * r.abs().max(1.0) {
                    break;
                }
            }
            best = best.max(f1).max(f2);
        }
        worst = worst.max((p.psi(b)? - best).abs());
    }
    Ok(worst)
}

/// Binomial-type helper: log C(n, k).
pub fn log_binomial(n: u64, k: u64) -> f64 {
    use crate::numeric::ln_gamma_fn;
    ln_gamma_fn(n as f64 + 1.0) - ln_gamma_fn(k as f64 + 1.0) - ln_gamma_fn((n - k) as f64 + 1.0)
}
