//! Korkin–Zolotarev reduction by recursive shortest-vector extraction, sum-map norms and
//! the reduction-based transference check.

use nalgebra::DMatrix;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::audit::AuditVerdict;
use crate::enumeration::{covering_radius_bounds, first_minimum, shortest_vectors, EnumerationConfig};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::matrix::{IntMatrix, RatMatrix};
use crate::numeric::log_unit_ball_volume;
use crate::rational::{format_rational, to_f64, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    /// Columns v₁…vₙ in the original coordinates; v₁ is a shortest vector.
    pub basis: IntMatrix,
    pub norms: Vec<f64>,
    pub gs_norms: Vec<f64>,
    /// Exact squared norms on the core Gram matrix (shift not applied).
    pub core_norms_sq: Vec<Rational>,
    pub core_gs_sq: Vec<Rational>,
}

/// D(n) = (4/3)^{n(n−1)/2}.
pub fn product_constant(n: usize) -> f64 {
    let n = n as f64;
    (4.0f64 / 3.0).powf(n * (n - 1.0) / 2.0)
}

pub fn log_product_constant(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0 * (4.0f64 / 3.0).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HermiteVariant {
    /// (4/3)^{(n−1)/2}
    Hermite,
    /// 2·vₙ^{−1/n}
    Minkowski,
}

pub fn hermite_constant_bound(n: usize, variant: HermiteVariant) -> f64 {
    assert!(n >= 1);
    let nf = n as f64;
    match variant {
        HermiteVariant::Hermite => (4.0f64 / 3.0).powf((nf - 1.0) / 2.0),
        HermiteVariant::Minkowski => 2.0 * (-log_unit_ball_volume(nf) / nf).exp(),
    }
}

pub fn hkz_reduce(l: &Lattice) -> Result<ReducedBasis> {
    hkz_reduce_with(l, EnumerationConfig::default())
}

pub fn hkz_reduce_with(l: &Lattice, config: EnumerationConfig) -> Result<ReducedBasis> {
    let shift = l.uniform_shift().ok_or(Error::NonUniformTwist)?;
    let (basis, gs_sq) = hkz_exact(l.gram(), config)?;
    let scale = (-shift).exp();
    let norms_sq: Vec<Rational> = basis
        .columns()
        .iter()
        .map(|c| {
            let v = IntMatrix::from_columns(c.len(), std::slice::from_ref(c)).expect("column");
            l.gram().congruence(&v)[(0, 0)].clone()
        })
        .collect();
    Ok(ReducedBasis {
        norms: norms_sq.iter().map(|r| to_f64(r).sqrt() * scale).collect(),
        gs_norms: gs_sq.iter().map(|r| to_f64(r).sqrt() * scale).collect(),
        basis,
        core_norms_sq: norms_sq,
        core_gs_sq: gs_sq,
    })
}

fn hkz_exact(g: &RatMatrix, config: EnumerationConfig) -> Result<(IntMatrix, Vec<Rational>)> {
    let n = g.rows();
    if n == 1 {
        return Ok((IntMatrix::identity(1), vec![g[(0, 0)].clone()]));
    }
    let lat = Lattice::new(g.clone())?;
    let (entry, wit) = shortest_vectors(&lat, config)?;
    let s = wit[0].clone();
    let s_norm = entry.norm.expect("exact lattice");
    let hf = IntMatrix::from_columns(n, std::slice::from_ref(&s))?.hermite_rows()?;
    let v = hf.r_inv;
    debug_assert_eq!(v.column(0), s);
    let g1 = g.congruence(&v);
    let q = g1.schur_complement(1);
    let (w, gs_q) = hkz_exact(&q, config)?;

    // Assemble V·[[1, c], [0, W]] with c chosen by an exact 1-D closest-vector search.
    let mut t = IntMatrix::zeros(n, n);
    t[(0, 0)] = 1;
    for j in 0..n - 1 {
        let mut eta = Rational::from_integer(0.into());
        for i in 0..n - 1 {
            eta += &g1[(0, i + 1)] * Rational::from_integer(w[(i, j)].into());
        }
        eta /= &g1[(0, 0)];
        let c = nearest_coset_shift(&eta);
        t[(0, j + 1)] = c;
        for i in 0..n - 1 {
            t[(i + 1, j + 1)] = w[(i, j)];
        }
    }
    let basis = v.mul(&t)?;
    let mut gs = vec![s_norm];
    gs.extend(gs_q);
    Ok((basis, gs))
}

/// Integer c minimizing |η + c| with ties resolved so that η + c = +1/2.
fn nearest_coset_shift(eta: &Rational) -> i64 {
    use num_traits::ToPrimitive;
    let base = (-eta).floor().to_integer().to_i64().expect("small coefficient");
    let half = Rational::new(1.into(), 2.into());
    let mut best: Option<(Rational, i64)> = None;
    for c in [base - 1, base, base + 1, base + 2] {
        let e = eta + Rational::from_integer(c.into());
        let d = e.abs();
        let better = match &best {
            None => true,
            Some((bd, _)) => d < *bd || (d == *bd && e == half),
        };
        if better {
            best = Some((d, c));
        }
    }
    best.expect("candidates").1
}

impl ReducedBasis {
    pub fn rank(&self) -> usize {
        self.norms.len()
    }

    pub fn is_unimodular(&self) -> bool {
        self.basis.det().abs().is_one()
    }

    /// Exact test of Π‖vᵢ‖ ≤ D(n)·covol on the core Gram matrix.
    pub fn product_bound_holds(&self, l: &Lattice) -> bool {
        let n = self.rank() as i64;
        let prod: Rational = self.core_norms_sq.iter().product();
        let d_sq = num_traits::pow(Rational::new(4.into(), 3.into()), (n * (n - 1)) as usize);
        prod <= d_sq * l.gram_det()
    }

    /// Π‖vᵢ‖ / (D(n)·covol).
    pub fn product_ratio(&self, l: &Lattice) -> f64 {
        let log_prod: f64 = self.norms.iter().map(|v| v.ln()).sum();
        (log_prod - log_product_constant(self.rank()) - l.log_covolume()).exp()
    }

    pub fn to_json(&self, l: &Lattice) -> serde_json::Value {
        let n = self.rank();
        serde_json::json!({
            "basis": self.basis.columns(),
            "norms": self.norms,
            "norms_sq": self.core_norms_sq.iter().map(format_rational).collect::<Vec<_>>(),
            "gs_norms": self.gs_norms,
            "bound": (log_product_constant(n) + l.log_covolume()).exp(),
            "ratio": self.product_ratio(l),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumMapNorms {
    pub delta: f64,
    pub log_norm: f64,
    pub log_inverse_norm: f64,
    pub log_wedge_norm: f64,
}

/// Operator norms of Σ: ⊕ℤvᵢ → E for the basis given by the columns of `basis`.
pub fn sum_map_norms(l: &Lattice, basis: &IntMatrix) -> Result<SumMapNorms> {
    let n = l.rank();
    if basis.rows() != n || basis.cols() != n {
        return Err(Error::DimensionMismatch("sum map needs n basis vectors".into()));
    }
    let det = basis.det();
    if !det.abs().is_one() {
        return Err(Error::NotABasis { det: format_rational(&det) });
    }
    let g = l.gram_f64();
    let chol = DMatrix::from_row_slice(n, n, &g)
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { index: 0, sign: "numerically" })?;
    // G = L Lᵀ, so Lᵀ maps coordinates to an orthonormal frame.
    let frame = chol.l().transpose();
    let b = DMatrix::from_fn(n, n, |i, j| basis[(i, j)] as f64);
    let mut vecs = frame * b;
    let mut log_norms = 0.0;
    for j in 0..n {
        let norm = vecs.column(j).norm();
        log_norms += norm.ln();
        vecs.column_mut(j).scale_mut(1.0 / norm);
    }
    let sv = vecs.svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let log_wedge = l.log_covolume() - log_norms;
    Ok(SumMapNorms {
        delta: -log_wedge / n as f64,
        log_norm: smax.ln(),
        log_inverse_norm: -smin.ln(),
        log_wedge_norm: log_wedge,
    })
}

/// E(n) = ((n+1)/2)·log n + log D(n).
pub fn weak_transference_constant(n: usize) -> f64 {
    let nf = n as f64;
    (nf + 1.0) / 2.0 * nf.ln() + log_product_constant(n)
}

/// |log R_cov(E) + log λ₁(E∨)| ≤ E(n), judged on the covering-radius interval.
pub fn reduction_transference_check(l: &Lattice) -> Result<AuditVerdict> {
    let n = l.rank();
    let name = "reduction.weak-transference";
    let cr = covering_radius_bounds(l)?;
    let lam = first_minimum(&l.dual())?.value;
    let (a, b) = (cr.lo.ln() + lam.ln(), cr.hi.ln() + lam.ln());
    let e = weak_transference_constant(n);
    if n == 1 {
        return Ok(AuditVerdict::not_applicable(
            name,
            a.abs(),
            e,
            "rank 1: the constant vanishes while |log R + log λ∨| = log 2; reported separately",
        ));
    }
    // |·| is convex, so its extremes over [a, b] sit at the endpoints or at 0.
    let hi = a.abs().max(b.abs());
    let lo = if a <= 0.0 && b >= 0.0 { 0.0 } else { a.abs().min(b.abs()) };
    Ok(AuditVerdict::interval(name, lo, hi, e, format!("n={n}")))
}

/// Exact check of λ₁² ≤ C(n)²·covol^{2/n} is not rational; compare logs instead.
pub fn hermite_inequality_holds(l: &Lattice) -> Result<bool> {
    let n = l.rank();
    let lam = first_minimum(l)?.value;
    let rhs = hermite_constant_bound(n, HermiteVariant::Hermite).ln() + l.log_covolume() / n as f64;
    Ok(lam.ln() <= rhs + 1e-12)
}
