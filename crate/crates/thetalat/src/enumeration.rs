//! Lattice-point enumeration: ball censuses, shortest vectors, successive minima and
//! covering-radius bounds.
//!
//! Candidates are pruned with a floating Cholesky factor of an LLL-preconditioned Gram
//! matrix and then re-tested exactly, so counts at norm ties are exact for exact lattices.
//! The top-level coordinate range is split across rayon workers and partial histograms
//! are merged in a fixed order, which makes every report independent of the thread count.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::matrix::{IntMatrix, RankTracker};
use crate::numeric::log_unit_ball_volume;
use crate::rational::{format_rational, from_f64, Rational};

/// Relative slack applied to floating pruning before the exact re-check.
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationConfig {
    /// Maximum number of accepted points before giving up.
    pub cap: u64,
    /// Split the outermost coordinate across the rayon pool.
    pub parallel: bool,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        Self { cap: 100_000_000, parallel: true }
    }
}

/// One histogram bucket. `norm` is exact for exact lattices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEntry {
    #[serde(serialize_with = "ser_opt_rational")]
    pub norm: Option<Rational>,
    pub value: f64,
    pub multiplicity: u64,
}

fn ser_opt_rational<S: serde::Serializer>(
    r: &Option<Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&format_rational(r)),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationReport {
    pub radius_sq: Rational,
    pub count: u64,
    /// Sorted by increasing squared norm.
    pub histogram: Vec<NormEntry>,
    /// Coordinates of every point, sorted by norm then by [`witness_cmp`].
    pub witnesses: Option<Vec<Vec<i64>>>,
}

impl EnumerationReport {
    /// `{"x": "p/q", "count": N, "histogram": [["p/q", m], …]}`; inexact norms are numbers.
    pub fn to_json(&self) -> serde_json::Value {
        let hist: Vec<serde_json::Value> = self
            .histogram
            .iter()
            .map(|e| match &e.norm {
                Some(r) => serde_json::json!([format_rational(r), e.multiplicity]),
                None => serde_json::json!([e.value, e.multiplicity]),
            })
            .collect();
        serde_json::json!({
            "x": format_rational(&self.radius_sq),
            "count": self.count,
            "histogram": hist,
        })
    }
}

/// Sign-normalizes v so that its first nonzero coordinate is positive.
pub fn canonical_sign(v: &[i64]) -> Vec<i64> {
    match v.iter().find(|&&x| x != 0) {
        Some(&x) if x < 0 => v.iter().map(|&y| -y).collect(),
        _ => v.to_vec(),
    }
}

/// Deterministic witness order: compare sign-normalized forms, preferring larger
/// leading coordinates (so e₁ precedes e₂), then the raw vectors.
pub fn witness_cmp(a: &[i64], b: &[i64]) -> Ordering {
    let (ca, cb) = (canonical_sign(a), canonical_sign(b));
    cb.cmp(&ca).then_with(|| b.cmp(a))
}

/// Float LLL on a Gram matrix; returns the unimodular transform U (columns = new basis).
pub(crate) fn lll_transform(gram: &[f64], n: usize) -> IntMatrix {
    let mut u = IntMatrix::identity(n);
    if n < 2 {
        return u;
    }
    let delta = 0.99;
    let current = |u: &IntMatrix| -> Vec<f64> {
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for a in 0..n {
                    let ua = u[(a, i)] as f64;
                    if ua == 0.0 {
                        continue;
                    }
                    for b in 0..n {
                        s += ua * u[(b, j)] as f64 * gram[a * n + b];
                    }
                }
                g[i * n + j] = s;
                g[j * n + i] = s;
            }
        }
        g
    };
    let gso = |g: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut mu = vec![0.0; n * n];
        let mut r = vec![0.0; n * n];
        let mut bstar = vec![0.0; n];
        for i in 0..n {
            for j in 0..i {
                let mut v = g[i * n + j];
                for k in 0..j {
                    v -= mu[j * n + k] * r[i * n + k];
                }
                r[i * n + j] = v;
                mu[i * n + j] = v / bstar[j];
            }
            let mut v = g[i * n + i];
            for k in 0..i {
                v -= mu[i * n + k] * r[i * n + k];
            }
            bstar[i] = v;
        }
        (mu, bstar)
    };
    let mut k = 1;
    let mut iterations = 0usize;
    while k < n && iterations < 100_000 {
        iterations += 1;
        let g = current(&u);
        let (mut mu, _) = gso(&g);
        for j in (0..k).rev() {
            let q = mu[k * n + j].round();
            if q != 0.0 && q.is_finite() {
                let qi = q as i64;
                for a in 0..n {
                    u[(a, k)] -= qi * u[(a, j)];
                }
                for l in 0..j {
                    mu[k * n + l] -= q * mu[j * n + l];
                }
                mu[k * n + j] -= q;
            }
        }
        let g = current(&u);
        let (mu, bstar) = gso(&g);
        let m = mu[k * n + k - 1];
        if bstar[k] >= (delta - m * m) * bstar[k - 1] {
            k += 1;
        } else {
            for a in 0..n {
                let t = u[(a, k)];
                u[(a, k)] = u[(a, k - 1)];
                u[(a, k - 1)] = t;
            }
            k = (k - 1).max(1);
        }
    }
    u
}

/// Integer form of the quadratic form split by shift class:
/// ‖x‖² = Σ_c weight_c · (xᵀ M_c x) / denom.
#[derive(Debug, Clone)]
struct ExactForm {
    denom: i128,
    classes: Vec<(f64, Vec<i128>)>,
    exact: bool,
}

impl ExactForm {
    fn new(l: &Lattice) -> Result<Self> {
        let n = l.rank();
        let g = l.gram();
        let d = g.common_denominator();
        let denom = d.to_i128().ok_or(Error::Overflow)?;
        let ints: Vec<i128> = (0..n * n)
            .map(|k| {
                let v = &g[(k / n, k % n)] * BigRational::from_integer(d.clone());
                v.to_integer().to_i128().ok_or(Error::Overflow)
            })
            .collect::<Result<_>>()?;
        let s = l.shifts();
        let mut classes: Vec<(f64, Vec<i128>)> = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if ints[a * n + b] == 0 {
                    continue;
                }
                let c = s[a] + s[b];
                let idx = match classes
                    .iter()
                    .position(|(w, _)| (w - c).abs() <= 1e-14 * c.abs().max(1.0))
                {
                    Some(i) => i,
                    None => {
                        classes.push((c, vec![0; n * n]));
                        classes.len() - 1
                    }
                };
                classes[idx].1[a * n + b] = ints[a * n + b];
            }
        }
        classes.sort_by(|x, y| x.0.total_cmp(&y.0));
        let exact = l.is_exact();
        let classes = classes.into_iter().map(|(c, m)| ((-c).exp(), m)).collect();
        Ok(Self { denom, classes, exact })
    }

    fn key(&self, x: &[i64]) -> Result<Vec<i128>> {
        let n = x.len();
        self.classes
            .iter()
            .map(|(_, m)| {
                let mut total: i128 = 0;
                for a in 0..n {
                    if x[a] == 0 {
                        continue;
                    }
                    let mut row: i128 = 0;
                    for b in 0..n {
                        let t = m[a * n + b].checked_mul(x[b] as i128).ok_or(Error::Overflow)?;
                        row = row.checked_add(t).ok_or(Error::Overflow)?;
                    }
                    let t = row.checked_mul(x[a] as i128).ok_or(Error::Overflow)?;
                    total = total.checked_add(t).ok_or(Error::Overflow)?;
                }
                Ok(total)
            })
            .collect()
    }

    fn value(&self, key: &[i128]) -> f64 {
        key.iter().zip(&self.classes).map(|(&k, (w, _))| w * k as f64).sum::<f64>()
            / self.denom as f64
    }

    fn exact_norm(&self, key: &[i128]) -> Option<Rational> {
        if !self.exact {
            return None;
        }
        let k = key.first().copied().unwrap_or(0);
        Some(BigRational::new(BigInt::from(k), BigInt::from(self.denom)))
    }
}

/// Preprocessed lattice ready for repeated enumeration.
pub(crate) struct Enumerator {
    n: usize,
    u: IntMatrix,
    u_inv: Vec<f64>,
    /// Row-major upper Cholesky data: q_ii on the diagonal, μ_ij above it.
    q: Vec<f64>,
    gram_f: Vec<f64>,
    form: ExactForm,
    config: EnumerationConfig,
}

/// Radius bound with an optional exact comparison value.
#[derive(Debug, Clone)]
struct Bound {
    value: f64,
    exact: Option<Rational>,
}

struct Shared<'a> {
    count: &'a AtomicU64,
    abort: &'a AtomicBool,
    cap: u64,
}

impl Enumerator {
    pub(crate) fn new(l: &Lattice, config: EnumerationConfig) -> Result<Self> {
        let n = l.rank();
        let gram_f = l.gram_f64();
        let u = lll_transform(&gram_f, n);
        let mut gr = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += u[(a, i)] as f64 * u[(b, j)] as f64 * gram_f[a * n + b];
                    }
                }
                gr[i * n + j] = s;
            }
        }
        let q = cholesky_q(&gr, n)?;
        let u_inv_r = u.to_rational().inverse().expect("unimodular");
        let u_inv = u_inv_r.to_f64();
        Ok(Self { n, u, u_inv, q, gram_f, form: ExactForm::new(l)?, config })
    }

    pub(crate) fn rank(&self) -> usize {
        self.n
    }

    /// Float squared distance between integer point x and the real center c.
    fn float_norm(&self, x: &[i64], c: Option<&[f64]>) -> f64 {
        let n = self.n;
        let d = |i: usize| match c {
            Some(c) => x[i] as f64 - c[i],
            None => x[i] as f64,
        };
        let mut s = 0.0;
        for a in 0..n {
            let mut row = 0.0;
            for b in 0..n {
                row += self.gram_f[a * n + b] * d(b);
            }
            s += row * d(a);
        }
        s
    }

    /// Visits every lattice point x with ‖x − c‖² ≤ radius (pruned with slack), calling
    /// `visit(state, x_original_coords, float_norm)`. States are merged in a fixed order.
    fn fold<S, I, V, M>(
        &self,
        center: Option<&[f64]>,
        radius: f64,
        need_point: bool,
        init: I,
        visit: V,
        merge: M,
    ) -> Result<S>
    where
        S: Send,
        I: Fn() -> S + Sync,
        V: Fn(&mut S, &[i64], f64) -> Result<()> + Sync,
        M: Fn(S, S) -> S,
    {
        let n = self.n;
        let r_eff = radius * (1.0 + PRUNE_SLACK) + f64::MIN_POSITIVE;
        let cy: Vec<f64> = match center {
            Some(c) => (0..n)
                .map(|i| (0..n).map(|j| self.u_inv[i * n + j] * c[j]).sum())
                .collect(),
            None => vec![0.0; n],
        };
        let count = AtomicU64::new(0);
        let abort = AtomicBool::new(false);
        let shared = Shared { count: &count, abort: &abort, cap: self.config.cap };

        let top = n - 1;
        let qtop = self.q[top * n + top];
        let w = (r_eff / qtop).sqrt();
        let lo = (cy[top] - w).ceil() as i64;
        let hi = (cy[top] + w).floor() as i64;
        let values: Vec<i64> = (lo..=hi).collect();

        let run = |yt: i64| -> (S, Option<Error>) {
            let mut state = init();
            let mut y = vec![0i64; n];
            y[top] = yt;
            let d = yt as f64 - cy[top];
            let partial = qtop * d * d;
            let mut err = None;
            if partial <= r_eff {
                let mut ctx = Ctx {
                    en: self,
                    cy: &cy,
                    r_eff,
                    shared: &shared,
                    visit: &visit,
                    state: &mut state,
                    err: &mut err,
                    x: vec![0; n],
                    need_point,
                    local: 0,
                };
                ctx.descend(top, partial, &mut y);
                ctx.flush();
            }
            (state, err)
        };

        let parts: Vec<(S, Option<Error>)> = if self.config.parallel && values.len() > 1 {
            values.par_iter().map(|&v| run(v)).collect()
        } else {
            values.iter().map(|&v| run(v)).collect()
        };
        if abort.load(AtomicOrdering::Relaxed) || count.load(AtomicOrdering::Relaxed) > self.config.cap {
            if let Some(e) = parts.iter().find_map(|(_, e)| e.clone()) {
                return Err(e);
            }
            return Err(Error::BudgetExceeded { cap: self.config.cap });
        }
        let mut acc = init();
        for (s, _) in parts {
            acc = merge(acc, s);
        }
        Ok(acc)
    }

    fn accept_exact(&self, key: &[i128], bound: &Bound) -> bool {
        match (&bound.exact, self.form.exact) {
            (Some(b), true) => {
                let num = BigInt::from(key[0]);
                let lhs = num * b.denom();
                let rhs = b.numer() * BigInt::from(self.form.denom);
                lhs <= rhs
            }
            _ => self.form.value(key) <= bound.value,
        }
    }

    /// Exact census of the closed ball ‖x‖² ≤ bound.
    fn census(&self, bound: &Bound, with_witnesses: bool) -> Result<Census> {
        let visit = |st: &mut Census, x: &[i64], _f: f64| -> Result<()> {
            let key = self.form.key(x)?;
            if !self.accept_exact(&key, bound) {
                return Ok(());
            }
            match st.hist.get_mut(key.as_slice()) {
                Some(m) => *m += 1,
                None => {
                    st.hist.insert(key.clone(), 1);
                }
            }
            if with_witnesses {
                st.points.push((key, x.to_vec()));
            }
            Ok(())
        };
        self.fold(None, bound.value, true, Census::default, visit, |mut a, b| {
            for (k, m) in b.hist {
                *a.hist.entry(k).or_insert(0) += m;
            }
            a.points.extend(b.points);
            a
        })
    }

    fn report(&self, bound: &Bound, census: Census, with_witnesses: bool) -> EnumerationReport {
        let mut histogram: Vec<(Vec<i128>, u64)> = census.hist.into_iter().collect();
        let f = &self.form;
        histogram.sort_by(|a, b| f.value(&a.0).total_cmp(&f.value(&b.0)).then(a.0.cmp(&b.0)));
        let count = histogram.iter().map(|(_, m)| m).sum();
        let witnesses = with_witnesses.then(|| {
            let mut pts = census.points;
            pts.sort_by(|a, b| {
                f.value(&a.0)
                    .total_cmp(&f.value(&b.0))
                    .then(a.0.cmp(&b.0))
                    .then_with(|| witness_cmp(&a.1, &b.1))
            });
            pts.into_iter().map(|(_, x)| x).collect()
        });
        EnumerationReport {
            radius_sq: bound.exact.clone().unwrap_or_else(|| from_f64(bound.value)),
            count,
            histogram: histogram
                .into_iter()
                .map(|(k, m)| NormEntry {
                    norm: f.exact_norm(&k),
                    value: f.value(&k),
                    multiplicity: m,
                })
                .collect(),
            witnesses,
        }
    }

    pub(crate) fn ball(&self, x: &Rational, with_witnesses: bool) -> Result<EnumerationReport> {
        let bound = Bound { value: crate::rational::to_f64(x), exact: Some(x.clone()) };
        let c = self.census(&bound, with_witnesses)?;
        Ok(self.report(&bound, c, with_witnesses))
    }

    pub(crate) fn ball_f64(&self, x: f64, with_witnesses: bool) -> Result<EnumerationReport> {
        let bound = Bound { value: x, exact: Some(from_f64(x)) };
        let c = self.census(&bound, with_witnesses)?;
        Ok(self.report(&bound, c, with_witnesses))
    }

    /// Squared distances (float) of all points within squared radius `radius` of a real
    /// center given in basis coordinates (origin when `None`), in enumeration order.
    pub(crate) fn norms_within(&self, center: Option<&[f64]>, radius: f64) -> Result<Vec<f64>> {
        // The Cholesky partial sum at the leaf is the squared distance.
        let visit = |st: &mut Vec<f64>, _x: &[i64], d: f64| -> Result<()> {
            if d <= radius {
                st.push(d);
            }
            Ok(())
        };
        let v = self.fold(center, radius, false, Vec::new, visit, |mut a, b| {
            a.extend(b);
            a
        })?;
        Ok(v)
    }

    /// Exact minimal nonzero squared norm and all vectors realizing it.
    pub(crate) fn shortest(&self) -> Result<(NormEntry, Vec<Vec<i64>>)> {
        let n = self.n;
        // Shrinking-radius zig-zag search for the float minimum.
        let mut best = (0..n).map(|i| self.gram_norm_of_u_col(i)).fold(f64::INFINITY, f64::min);
        let mut y = vec![0i64; n];
        self.zigzag(n - 1, 0.0, &mut y, &mut best);
        let rep = self.ball_f64(best * (1.0 + 1e-6), true)?;
        let first = rep.histogram.into_iter().find(|e| e.value > 0.0).expect("nonzero vector");
        let mut wit: Vec<Vec<i64>> = rep
            .witnesses
            .unwrap_or_default()
            .into_iter()
            .filter(|x| {
                let k = self.form.key(x).expect("key computed during census");
                let v = self.form.value(&k);
                match (&first.norm, self.form.exact_norm(&k)) {
                    (Some(a), Some(b)) => *a == b,
                    _ => v == first.value,
                }
            })
            .collect();
        wit.sort_by(|a, b| witness_cmp(a, b));
        let mult = wit.len() as u64;
        Ok((NormEntry { multiplicity: mult, ..first }, wit))
    }

    /// x = U·y with overflow checks, written into `x`.
    fn to_original(&self, y: &[i64], x: &mut [i64]) -> Result<()> {
        for (a, xa) in x.iter_mut().enumerate() {
            let mut s: i64 = 0;
            for (b, &yb) in y.iter().enumerate() {
                if yb != 0 {
                    let t = self.u[(a, b)].checked_mul(yb).ok_or(Error::Overflow)?;
                    s = s.checked_add(t).ok_or(Error::Overflow)?;
                }
            }
            *xa = s;
        }
        Ok(())
    }

    fn gram_norm_of_u_col(&self, i: usize) -> f64 {
        self.float_norm(&self.u.column(i), None)
    }

    fn zigzag(&self, level: usize, partial: f64, y: &mut [i64], best: &mut f64) {
        let n = self.n;
        let mut c = 0.0;
        for j in level + 1..n {
            c -= self.q[level * n + j] * y[j] as f64;
        }
        let qii = self.q[level * n + level];
        let base = c.round();
        let first_up = c >= base;
        let try_value = |v: f64, y: &mut [i64], best: &mut f64| -> bool {
            let d = v - c;
            let np = partial + qii * d * d;
            if np > *best * (1.0 + PRUNE_SLACK) {
                return false;
            }
            y[level] = v as i64;
            if level == 0 {
                if y.iter().any(|&t| t != 0) && np < *best {
                    *best = np;
                }
            } else {
                self.zigzag(level - 1, np, y, best);
            }
            true
        };
        if try_value(base, y, best) {
            let (mut up, mut down) = (true, true);
            let mut k = 1.0;
            while up || down {
                let order = if first_up { [1.0, -1.0] } else { [-1.0, 1.0] };
                for dir in order {
                    let alive = if dir > 0.0 { &mut up } else { &mut down };
                    if *alive && !try_value(base + dir * k, y, best) {
                        *alive = false;
                    }
                }
                k += 1.0;
            }
        }
        y[level] = 0;
    }
}

struct Ctx<'a, S, V> {
    en: &'a Enumerator,
    cy: &'a [f64],
    r_eff: f64,
    shared: &'a Shared<'a>,
    visit: &'a V,
    state: &'a mut S,
    err: &'a mut Option<Error>,
    /// Leaf point in original coordinates, left at zero unless `need_point`.
    x: Vec<i64>,
    need_point: bool,
    /// Points not yet added to the shared counter.
    local: u64,
}

/// Leaf visits between updates of the shared budget counter.
const COUNT_BATCH: u64 = 4096;

impl<S, V> Ctx<'_, S, V>
where
    V: Fn(&mut S, &[i64], f64) -> Result<()>,
{
    fn fail(&mut self, e: Error) {
        *self.err = Some(e);
        self.shared.abort.store(true, AtomicOrdering::Relaxed);
    }

    fn flush(&mut self) {
        let c = self.shared.count.fetch_add(self.local, AtomicOrdering::Relaxed) + self.local;
        self.local = 0;
        if c > self.shared.cap {
            self.shared.abort.store(true, AtomicOrdering::Relaxed);
        }
    }

    fn descend(&mut self, level: usize, partial: f64, y: &mut [i64]) {
        if self.shared.abort.load(AtomicOrdering::Relaxed) {
            return;
        }
        let n = self.en.n;
        if level == 0 {
            self.leaf(partial, y);
            return;
        }
        let i = level - 1;
        let mut c = self.cy[i];
        for j in level..n {
            c -= self.en.q[i * n + j] * (y[j] as f64 - self.cy[j]);
        }
        let qii = self.en.q[i * n + i];
        let rem = self.r_eff - partial;
        if rem < 0.0 {
            return;
        }
        let w = (rem / qii).sqrt();
        let lo = (c - w).ceil() as i64;
        let hi = (c + w).floor() as i64;
        for v in lo..=hi {
            let d = v as f64 - c;
            let np = partial + qii * d * d;
            if np <= self.r_eff {
                y[i] = v;
                if i == 0 {
                    self.leaf(np, y);
                } else {
                    self.descend(i, np, y);
                }
            }
        }
        y[i] = 0;
    }

    #[inline]
    fn leaf(&mut self, partial: f64, y: &[i64]) {
        if self.need_point {
            if let Err(e) = self.en.to_original(y, &mut self.x) {
                self.fail(e);
                return;
            }
        }
        self.local += 1;
        if self.local == COUNT_BATCH {
            self.flush();
        }
        if let Err(e) = (self.visit)(self.state, &self.x, partial) {
            self.fail(e);
        }
    }
}

#[derive(Default)]
struct Census {
    hist: BTreeMap<Vec<i128>, u64>,
    points: Vec<(Vec<i128>, Vec<i64>)>,
}

/// q_ii = r_ii², q_ij = r_ij / r_ii (i < j) for gram = RᵀR.
fn cholesky_q(g: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut r = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = g[i * n + j];
            for k in 0..i {
                s -= r[k * n + i] * r[k * n + j];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite { index: i + 1, sign: "numerically" });
                }
                r[i * n + i] = s.sqrt();
            } else {
                r[i * n + j] = s / r[i * n + i];
            }
        }
    }
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = r[i * n + i] * r[i * n + i];
        for j in i + 1..n {
            q[i * n + j] = r[i * n + j] / r[i * n + i];
        }
    }
    Ok(q)
}

/// Exact census of {v : ‖v‖² ≤ x}.
pub fn enumerate_ball(l: &Lattice, x: &Rational) -> Result<EnumerationReport> {
    enumerate_ball_with(l, x, EnumerationConfig::default(), false)
}

pub fn enumerate_ball_with(
    l: &Lattice,
    x: &Rational,
    config: EnumerationConfig,
    with_witnesses: bool,
) -> Result<EnumerationReport> {
    if x < &Rational::zero() {
        return Err(Error::InvalidInput("negative radius".into()));
    }
    Enumerator::new(l, config)?.ball(x, with_witnesses)
}

/// Census for a floating radius (compared exactly against the double's rational value).
pub fn enumerate_ball_f64(
    l: &Lattice,
    x: f64,
    config: EnumerationConfig,
) -> Result<EnumerationReport> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput("radius must be finite and non-negative".into()));
    }
    Enumerator::new(l, config)?.ball_f64(x, false)
}

/// h⁰_Ar(L, x) = log #{v : ‖v‖² ≤ x}.
pub fn h0_ar(l: &Lattice, x: &Rational) -> Result<f64> {
    Ok((enumerate_ball(l, x)?.count as f64).ln())
}

pub fn h0_ar_f64(l: &Lattice, x: f64, config: EnumerationConfig) -> Result<f64> {
    Ok((enumerate_ball_f64(l, x, config)?.count as f64).ln())
}

/// A successive minimum together with its witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum {
    pub value: f64,
    #[serde(serialize_with = "ser_opt_rational")]
    pub norm_sq: Option<Rational>,
    pub witness: Vec<i64>,
}

pub fn first_minimum(l: &Lattice) -> Result<Minimum> {
    first_minimum_with(l, EnumerationConfig::default())
}

pub fn first_minimum_with(l: &Lattice, config: EnumerationConfig) -> Result<Minimum> {
    let en = Enumerator::new(l, config)?;
    let (entry, wit) = en.shortest()?;
    Ok(Minimum { value: entry.value.sqrt(), norm_sq: entry.norm, witness: wit[0].clone() })
}

/// All vectors of minimal nonzero norm, in witness order.
pub fn shortest_vectors(l: &Lattice, config: EnumerationConfig) -> Result<(NormEntry, Vec<Vec<i64>>)> {
    Enumerator::new(l, config)?.shortest()
}

pub fn successive_minima(l: &Lattice) -> Result<Vec<Minimum>> {
    successive_minima_with(l, EnumerationConfig::default())
}

pub fn successive_minima_with(l: &Lattice, config: EnumerationConfig) -> Result<Vec<Minimum>> {
    let en = Enumerator::new(l, config)?;
    let n = en.rank();
    let (first, _) = en.shortest()?;
    // The reduced basis lies in the ball of its longest vector, so this radius suffices.
    let r_max = (0..n).map(|i| en.gram_norm_of_u_col(i)).fold(0.0, f64::max);
    let mut radius = first.value;
    loop {
        let rep = en.ball_f64(radius * (1.0 + 1e-9), true)?;
        let mut tracker = RankTracker::default();
        let mut minima = Vec::with_capacity(n);
        let pts = rep.witnesses.unwrap_or_default();
        for x in pts {
            if x.iter().all(|&t| t == 0) {
                continue;
            }
            if tracker.insert(&x) {
                let key = en.form.key(&x)?;
                minima.push(Minimum {
                    value: en.form.value(&key).sqrt(),
                    norm_sq: en.form.exact_norm(&key),
                    witness: x,
                });
                if minima.len() == n {
                    return Ok(minima);
                }
            }
        }
        if radius >= r_max * (1.0 + 1e-6) {
            return Err(Error::InvalidInput("failed to span the lattice".into()));
        }
        radius = (2.0 * radius).min(r_max * (1.0 + 1e-6));
    }
}

/// Certified covering-radius interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringRadius {
    pub lo: f64,
    pub hi: f64,
    pub exact: bool,
}

impl CoveringRadius {
    fn exact(v: f64) -> Self {
        Self { lo: v, hi: v, exact: true }
    }
}

/// Minkowski-type lower bound vₙ^{−1/n}·covol^{1/n}.
pub fn covering_radius_lower(l: &Lattice) -> f64 {
    let n = l.rank() as f64;
    ((l.log_covolume() - log_unit_ball_volume(n)) / n).exp()
}

pub fn covering_radius_bounds(l: &Lattice) -> Result<CoveringRadius> {
    let n = l.rank();
    if n == 1 {
        return Ok(CoveringRadius::exact(l.covolume() / 2.0));
    }
    let g = l.gram_f64();
    let is_diag = (0..n).all(|i| (0..n).all(|j| i == j || l.gram()[(i, j)].is_zero()));
    if is_diag {
        return Ok(CoveringRadius::exact(0.5 * (0..n).map(|i| g[i * n + i]).sum::<f64>().sqrt()));
    }
    let lo = covering_radius_lower(l);
    let gs: Vec<f64> = if l.uniform_shift().is_some() {
        let red = crate::reduction::hkz_reduce(l)?;
        let bas = &red.basis;
        let reduced_gram = l.gram().congruence(bas);
        let diag = (0..n).all(|i| (0..n).all(|j| i == j || reduced_gram[(i, j)].is_zero()));
        if diag {
            let s: f64 = red.norms.iter().map(|v| v * v).sum();
            return Ok(CoveringRadius::exact(0.5 * s.sqrt()));
        }
        red.gs_norms
    } else {
        let u = lll_transform(&g, n);
        let mut gr = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += u[(a, i)] as f64 * u[(b, j)] as f64 * g[a * n + b];
                    }
                }
                gr[i * n + j] = s;
            }
        }
        let q = cholesky_q(&gr, n)?;
        (0..n).map(|i| q[i * n + i].sqrt()).collect()
    };
    let hi = 0.5 * gs.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(CoveringRadius { lo: lo.min(hi), hi, exact: false })
}
