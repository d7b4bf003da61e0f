//! Euclidean lattices given by exact Gram matrices, with constructions and invariants.
//!
//! A [`Lattice`] is an exact rational Gram matrix `G` together with per-basis-vector
//! degree shifts `s`; the effective Gram matrix is `D G D` with `D = diag(e^{-s_i})`.
//! A twist by `t` adds `t` to every shift, so identities on the exact core survive
//! twisting. Lattices with all shifts equal to zero are called exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{IntMatrix, RatMatrix};
use crate::rational::{format_rational, ln_abs, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    gram: RatMatrix,
    shifts: Vec<f64>,
}

/// Validates a Gram matrix and builds an exact lattice.
pub fn make_lattice(gram: RatMatrix) -> Result<Lattice> {
    Lattice::new(gram)
}

impl Lattice {
    pub fn new(gram: RatMatrix) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::NotSquare { rows: gram.rows(), cols: gram.cols() });
        }
        if gram.rows() == 0 {
            return Err(Error::ZeroRank);
        }
        if !gram.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        match gram.elimination_pivots() {
            Err(k) => return Err(Error::NotPositiveDefinite { index: k + 1, sign: "zero" }),
            Ok(p) => {
                if let Some(k) = p.iter().position(|x| x <= &Rational::from_integer(0.into())) {
                    return Err(Error::NotPositiveDefinite { index: k + 1, sign: "negative" });
                }
            }
        }
        let n = gram.rows();
        Ok(Self { gram, shifts: vec![0.0; n] })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(RatMatrix::from_i64_rows(rows)?)
    }

    /// The standard lattice Zⁿ.
    pub fn identity(n: usize) -> Self {
        Self { gram: RatMatrix::identity(n), shifts: vec![0.0; n] }
    }

    pub fn with_shifts(gram: RatMatrix, shifts: Vec<f64>) -> Result<Self> {
        let mut l = Self::new(gram)?;
        if shifts.len() != l.rank() {
            return Err(Error::DimensionMismatch("shift vector length".into()));
        }
        l.shifts = shifts;
        Ok(l)
    }

    pub fn rank(&self) -> usize {
        self.gram.rows()
    }

    /// Exact core Gram matrix (shifts not applied).
    pub fn gram(&self) -> &RatMatrix {
        &self.gram
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn is_exact(&self) -> bool {
        self.shifts.iter().all(|&s| s == 0.0)
    }

    /// Common shift when all basis vectors carry the same one.
    pub fn uniform_shift(&self) -> Option<f64> {
        let s0 = self.shifts[0];
        self.shifts.iter().all(|&s| s == s0).then_some(s0)
    }

    /// The exact lattice with shifts removed.
    pub fn core(&self) -> Lattice {
        Self { gram: self.gram.clone(), shifts: vec![0.0; self.rank()] }
    }

    /// Effective Gram matrix in floating point, row-major.
    pub fn gram_f64(&self) -> Vec<f64> {
        let n = self.rank();
        let g = self.gram.to_f64();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = g[i * n + j] * (-(self.shifts[i] + self.shifts[j])).exp();
            }
        }
        out
    }

    /// Exact determinant of the core Gram matrix.
    pub fn gram_det(&self) -> Rational {
        self.gram.det()
    }

    /// log covol = ½ log det G − Σ sᵢ.
    pub fn log_covolume(&self) -> f64 {
        0.5 * ln_abs(&self.gram_det()) - self.shifts.iter().sum::<f64>()
    }

    pub fn covolume(&self) -> f64 {
        self.log_covolume().exp()
    }

    /// Arakelov degree −log covol.
    pub fn degree(&self) -> f64 {
        -self.log_covolume()
    }

    pub fn slope(&self) -> f64 {
        self.degree() / self.rank() as f64
    }

    pub fn dual(&self) -> Lattice {
        Self {
            gram: self.gram.inverse().expect("positive definite"),
            shifts: self.shifts.iter().map(|s| -s).collect(),
        }
    }

    pub fn direct_sum(&self, other: &Lattice) -> Lattice {
        let mut shifts = self.shifts.clone();
        shifts.extend_from_slice(&other.shifts);
        Self { gram: RatMatrix::block_diag(&self.gram, &other.gram), shifts }
    }

    /// Tensor product; basis vector (i, j) sits at index i·rank(other) + j.
    pub fn tensor(&self, other: &Lattice) -> Lattice {
        let shifts = self
            .shifts
            .iter()
            .flat_map(|a| other.shifts.iter().map(move |b| a + b))
            .collect();
        Self { gram: RatMatrix::kron(&self.gram, &other.gram), shifts }
    }

    /// Twist by O(t): Gram scaled by e^{−2t}, degree raised by rank·t.
    pub fn twist(&self, t: f64) -> Lattice {
        Self { gram: self.gram.clone(), shifts: self.shifts.iter().map(|s| s + t).collect() }
    }

    /// n-fold direct sum.
    pub fn power(&self, k: usize) -> Lattice {
        assert!(k >= 1);
        let mut out = self.clone();
        for _ in 1..k {
            out = out.direct_sum(self);
        }
        out
    }

    /// Sublattice spanned by the (independent) columns of `basis`, with induced norm.
    pub fn sublattice(&self, basis: &IntMatrix) -> Result<Lattice> {
        let shift = self.uniform_shift().ok_or(Error::NonUniformTwist)?;
        if basis.rows() != self.rank() {
            return Err(Error::DimensionMismatch("basis rows differ from rank".into()));
        }
        let g = self.gram.congruence(basis);
        let mut l = Lattice::new(g).map_err(|_| Error::DependentGenerators)?;
        l.shifts = vec![shift; basis.cols()];
        Ok(l)
    }

    /// Saturates the module generated by the columns of `f` and returns the admissible
    /// sequence 0 → F̄ → Ē → E/F → 0.
    pub fn sub_quotient(&self, f: &IntMatrix) -> Result<AdmissibleSequence> {
        let shift = self.uniform_shift().ok_or(Error::NonUniformTwist)?;
        let n = self.rank();
        if f.rows() != n {
            return Err(Error::DimensionMismatch("generator length differs from rank".into()));
        }
        let k = f.cols();
        if k == 0 || k > n {
            return Err(Error::DependentGenerators);
        }
        let hf = f.hermite_rows()?;
        if hf.rank() < k {
            return Err(Error::DependentGenerators);
        }
        let v = hf.r_inv.clone();
        let g = self.gram.congruence(&v);
        let sub_gram = g.block(0..k, 0..k);
        let sub = Lattice { gram: sub_gram, shifts: vec![shift; k] };
        let quotient = if k < n {
            Some(Lattice { gram: g.schur_complement(k), shifts: vec![shift; n - k] })
        } else {
            None
        };
        Ok(AdmissibleSequence {
            sub,
            total: self.clone(),
            quotient,
            embedding: v.select_columns(0..k),
            lift: v.select_columns(k..n),
            annihilator: hf.r.transpose().select_columns(k..n),
        })
    }

    pub fn to_json(&self) -> LatticeJson {
        LatticeJson {
            rank: self.rank(),
            gram: self
                .gram
                .to_rows()
                .iter()
                .map(|r| r.iter().map(format_rational).collect())
                .collect(),
            twist: if self.is_exact() { None } else { Some(self.shifts.clone()) },
        }
    }

    pub fn from_json(j: &LatticeJson) -> Result<Self> {
        let rows: Vec<Vec<Rational>> = j
            .gram
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s)).collect())
            .collect::<Result<_>>()?;
        let gram = RatMatrix::from_rows(rows)?;
        if gram.rows() != j.rank {
            return Err(Error::DimensionMismatch(format!(
                "rank {} but gram has {} rows",
                j.rank,
                gram.rows()
            )));
        }
        match &j.twist {
            None => Self::new(gram),
            Some(s) => Self::with_shifts(gram, s.clone()),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("serializable")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: LatticeJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&j)
    }
}

/// Serialized lattice: rationals as `"p/q"` strings; `twist` lists per-vector shifts
/// and is omitted for exact lattices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeJson {
    pub rank: usize,
    pub gram: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<Vec<f64>>,
}

/// 0 → F̄ → Ē → E/F → 0 with F saturated.
#[derive(Debug, Clone)]
pub struct AdmissibleSequence {
    pub sub: Lattice,
    pub total: Lattice,
    /// `None` when F = E.
    pub quotient: Option<Lattice>,
    /// Columns: basis of F in the coordinates of E.
    pub embedding: IntMatrix,
    /// Columns: vectors of E whose images form the quotient basis.
    pub lift: IntMatrix,
    /// Columns: basis of F⊥ ⊂ E∨ in dual coordinates, dual to the quotient basis.
    pub annihilator: IntMatrix,
}

impl AdmissibleSequence {
    /// Exact check of covol(E)² = covol(F)²·covol(E/F)² on the core Gram matrices.
    pub fn covolume_identity_holds(&self) -> bool {
        let q = self.quotient.as_ref().map_or(Rational::from_integer(1.into()), |q| q.gram_det());
        self.total.gram_det() == self.sub.gram_det() * q
    }

    /// Gram matrix of F⊥ in dual(E), in the basis dual to the quotient basis.
    pub fn annihilator_lattice(&self) -> Option<Result<Lattice>> {
        self.quotient.as_ref()?;
        Some(self.total.dual().sublattice(&self.annihilator))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalLattice {
    degrees: Vec<f64>,
}

/// λ₁…λₙ, covering radius, degree and slope of an orthogonal lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthogonalInvariants {
    pub minima: Vec<f64>,
    pub covering_radius: f64,
    pub degree: f64,
    pub slope: f64,
    pub dual_minima: Vec<f64>,
}

impl OrthogonalLattice {
    /// Sorts the degrees non-increasingly.
    pub fn new(mut degrees: Vec<f64>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::EmptyDegrees);
        }
        if degrees.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("non-finite degree".into()));
        }
        degrees.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { degrees })
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn rank(&self) -> usize {
        self.degrees.len()
    }

    /// Diagonal lattice with entries e^{−2tᵢ}, basis ordered by increasing length.
    pub fn to_lattice(&self) -> Lattice {
        Lattice { gram: RatMatrix::identity(self.rank()), shifts: self.degrees.clone() }
    }

    pub fn invariants(&self) -> OrthogonalInvariants {
        orthogonal_invariants(self)
    }
}

pub fn orthogonal_invariants(o: &OrthogonalLattice) -> OrthogonalInvariants {
    let n = o.rank();
    let minima: Vec<f64> = o.degrees.iter().map(|t| (-t).exp()).collect();
    let covering_radius = 0.5 * o.degrees.iter().map(|t| (-2.0 * t).exp()).sum::<f64>().sqrt();
    let degree: f64 = o.degrees.iter().sum();
    let dual_minima = (0..n).map(|i| o.degrees[n - 1 - i].exp()).collect();
    OrthogonalInvariants { minima, covering_radius, degree, slope: degree / n as f64, dual_minima }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    #[test]
    fn construction_errors() {
        assert!(Lattice::from_i64(&[vec![2, 1], vec![1, 2]]).is_ok());
        assert!(matches!(
            Lattice::from_i64(&[vec![1, 2], vec![2, 1]]),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert_eq!(Lattice::from_i64(&[vec![1, 2], vec![0, 1]]), Err(Error::NotSymmetric));
        assert!(matches!(
            Lattice::from_i64(&[vec![1, 2, 3], vec![0, 1, 1]]),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn covolume_and_degree() {
        assert_eq!(Lattice::identity(3).covolume(), 1.0);
        let l = Lattice::from_i64(&[vec![4, 0], vec![0, 9]]).unwrap();
        assert!((l.covolume() - 6.0).abs() < 1e-14);
        assert!((l.dual().degree() + l.degree()).abs() < 1e-14);
        let t = Lattice::identity(1).twist(0.7);
        assert!((t.degree() - 0.7).abs() < 1e-15);
        let o = OrthogonalLattice::new(vec![0.3, -0.2]).unwrap().to_lattice();
        assert!((o.covolume() - (-0.1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn duality() {
        let l = Lattice::from_i64(&[vec![2, 0], vec![0, 2]]).unwrap();
        let d = l.dual();
        assert_eq!(d.gram()[(0, 0)], ratio(1, 2));
        assert_eq!(d.gram()[(0, 1)], rat(0));
        let a = Lattice::from_i64(&[vec![3, 1, 0], vec![1, 5, 2], vec![0, 2, 7]]).unwrap();
        assert_eq!(a.dual().dual().gram(), a.gram());
        assert_eq!(Lattice::identity(4).dual(), Lattice::identity(4));
    }

    #[test]
    fn sums_and_tensors() {
        let z = Lattice::identity(1);
        assert_eq!(z.direct_sum(&z), Lattice::identity(2));
        assert_eq!(Lattice::identity(2).tensor(&Lattice::identity(3)), Lattice::identity(6));
    }

    #[test]
    fn saturation_of_non_primitive_generator() {
        let seq = Lattice::identity(2)
            .sub_quotient(&IntMatrix::from_columns(2, &[vec![2, 0]]).unwrap())
            .unwrap();
        assert_eq!(seq.embedding.column(0), vec![1, 0]);
        assert_eq!(seq.sub.gram()[(0, 0)], rat(1));
        assert_eq!(seq.quotient.as_ref().unwrap().gram()[(0, 0)], rat(1));
        assert!(seq.sub.degree().abs() < 1e-15);
    }

    #[test]
    fn schur_quotient_example() {
        let l = Lattice::from_i64(&[vec![2, 1], vec![1, 2]]).unwrap();
        let seq = l.sub_quotient(&IntMatrix::from_columns(2, &[vec![1, 0]]).unwrap()).unwrap();
        assert_eq!(seq.sub.gram_det(), rat(2));
        assert_eq!(seq.quotient.as_ref().unwrap().gram_det(), ratio(3, 2));
        assert!(seq.covolume_identity_holds());
        let p = seq.sub.covolume() * seq.quotient.unwrap().covolume();
        assert!((p - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn dependent_generators_rejected() {
        let f = IntMatrix::from_columns(3, &[vec![1, 2, 3], vec![2, 4, 6]]).unwrap();
        assert_eq!(Lattice::identity(3).sub_quotient(&f).unwrap_err(), Error::DependentGenerators);
    }

    #[test]
    fn orthogonal_examples() {
        let inv = OrthogonalLattice::new(vec![0.0; 3]).unwrap().invariants();
        assert_eq!(inv.minima, vec![1.0; 3]);
        assert!((inv.covering_radius - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let inv = OrthogonalLattice::new(vec![2f64.ln()]).unwrap().invariants();
        assert!((inv.minima[0] - 0.5).abs() < 1e-15);
        assert!((inv.covering_radius - 0.25).abs() < 1e-15);
        assert_eq!(OrthogonalLattice::new(vec![]).unwrap_err(), Error::EmptyDegrees);
        let o = OrthogonalLattice::new(vec![-1.0, 2.0, 0.5]).unwrap();
        assert_eq!(o.degrees(), &[2.0, 0.5, -1.0]);
    }

    #[test]
    fn json_round_trip() {
        let l = Lattice::new(
            RatMatrix::from_rows(vec![vec![ratio(7, 3), ratio(-1, 2)], vec![ratio(-1, 2), rat(5)]])
                .unwrap(),
        )
        .unwrap();
        let s = l.to_json_string();
        assert!(s.contains("\"7/3\""));
        assert_eq!(Lattice::from_json_str(&s).unwrap(), l);
        let t = l.twist(0.25);
        assert_eq!(Lattice::from_json_str(&t.to_json_string()).unwrap(), t);
    }
}
