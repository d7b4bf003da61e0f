//! Dense exact matrices: rational (Gram matrices) and integer (bases, generators).

use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Row-major rational matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Rational::from_integer(x.into())).collect())
                .collect(),
        )
    }

    pub fn diagonal(entries: &[Rational]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(crate::rational::to_f64).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn block(&self, r: std::ops::Range<usize>, c: std::ops::Range<usize>) -> Self {
        let mut out = Self::zeros(r.len(), c.len());
        for (oi, i) in r.clone().enumerate() {
            for (oj, j) in c.clone().enumerate() {
                out[(oi, oj)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn block_diag(a: &Self, b: &Self) -> Self {
        let mut out = Self::zeros(a.rows + b.rows, a.cols + b.cols);
        for i in 0..a.rows {
            for j in 0..a.cols {
                out[(i, j)] = a[(i, j)].clone();
            }
        }
        for i in 0..b.rows {
            for j in 0..b.cols {
                out[(a.rows + i, a.cols + j)] = b[(i, j)].clone();
            }
        }
        out
    }

    pub fn kron(a: &Self, b: &Self) -> Self {
        let mut out = Self::zeros(a.rows * b.rows, a.cols * b.cols);
        for i in 0..a.rows {
            for j in 0..a.cols {
                for k in 0..b.rows {
                    for l in 0..b.cols {
                        out[(i * b.rows + k, j * b.cols + l)] = &a[(i, j)] * &b[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Pivots of Gaussian elimination without row exchanges; their running products are
    /// the leading principal minors. Returns `None` at the first zero pivot (index given).
    pub fn elimination_pivots(&self) -> std::result::Result<Vec<Rational>, usize> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let p = a[(k, k)].clone();
            if p.is_zero() {
                return Err(k);
            }
            for i in k + 1..n {
                if a[(i, k)].is_zero() {
                    continue;
                }
                let f = &a[(i, k)] / &p;
                for j in k..n {
                    let v = &f * &a[(k, j)];
                    a[(i, j)] -= v;
                }
            }
            pivots.push(p);
        }
        Ok(pivots)
    }

    pub fn det(&self) -> Rational {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rational::one();
        for k in 0..n {
            let Some(p) = (k..n).find(|&i| !a[(i, k)].is_zero()) else {
                return Rational::zero();
            };
            if p != k {
                a.swap_rows(p, k);
                det = -det;
            }
            let piv = a[(k, k)].clone();
            det *= &piv;
            for i in k + 1..n {
                if a[(i, k)].is_zero() {
                    continue;
                }
                let f = &a[(i, k)] / &piv;
                for j in k..n {
                    let v = &f * &a[(k, j)];
                    a[(i, j)] -= v;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for k in 0..n {
            let p = (k..n).find(|&i| !a[(i, k)].is_zero())?;
            a.swap_rows(p, k);
            inv.swap_rows(p, k);
            let piv = a[(k, k)].clone();
            for j in 0..n {
                a[(k, j)] /= &piv;
                inv[(k, j)] /= &piv;
            }
            for i in 0..n {
                if i == k || a[(i, k)].is_zero() {
                    continue;
                }
                let f = a[(i, k)].clone();
                for j in 0..n {
                    let v = &f * &a[(k, j)];
                    a[(i, j)] -= v;
                    let w = &f * &inv[(k, j)];
                    inv[(i, j)] -= w;
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    /// Bᵀ·self·B for an integer matrix B.
    pub fn congruence(&self, b: &IntMatrix) -> Self {
        let br = b.to_rational();
        br.transpose().mul(self).mul(&br)
    }

    /// Schur complement of the leading k×k block: D − C A⁻¹ B.
    pub fn schur_complement(&self, k: usize) -> Self {
        let n = self.rows;
        let a = self.block(0..k, 0..k);
        let b = self.block(0..k, k..n);
        let c = self.block(k..n, 0..k);
        let d = self.block(k..n, k..n);
        let ainv = a.inverse().expect("leading block invertible");
        d.sub(&c.mul(&ainv).mul(&b))
    }

    /// Least common multiple of all denominators.
    pub fn common_denominator(&self) -> BigInt {
        self.data.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }

    /// Solves self·X = rhs when self has full column rank and a solution exists.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        // Normal equations are exact here, and a genuine solution satisfies them.
        let at = self.transpose();
        let x = at.mul(self).inverse()?.mul(&at.mul(rhs));
        (self.mul(&x) == *rhs).then_some(x)
    }
}

impl Index<(usize, usize)> for RatMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

/// Row-major integer matrix; columns usually hold vectors in lattice coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.concat() })
    }

    /// Builds a matrix whose columns are the given vectors (all of length `dim`).
    pub fn from_columns(dim: usize, cols: &[Vec<i64>]) -> Result<Self> {
        let mut m = Self::zeros(dim, cols.len());
        for (j, c) in cols.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "generator of length {} in dimension {dim}",
                    c.len()
                )));
            }
            for (i, &x) in c.iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<i64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec()).collect()
    }

    pub fn select_columns(&self, range: std::ops::Range<usize>) -> Self {
        let cols: Vec<Vec<i64>> = range.map(|j| self.column(j)).collect();
        Self::from_columns(self.rows, &cols).expect("consistent dimensions")
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc: i128 = 0;
                for k in 0..self.cols {
                    acc += self[(i, k)] as i128 * other[(k, j)] as i128;
                }
                out[(i, j)] = i64::try_from(acc).map_err(|_| Error::Overflow)?;
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[i64]) -> Result<Vec<i64>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let acc: i128 = (0..self.cols).map(|k| self[(i, k)] as i128 * v[k] as i128).sum();
                i64::try_from(acc).map_err(|_| Error::Overflow)
            })
            .collect()
    }

    pub fn to_rational(&self) -> RatMatrix {
        RatMatrix::from_i64_rows(&self.to_rows()).expect("rectangular")
    }

    pub fn det(&self) -> Rational {
        self.to_rational().det()
    }

    /// Unimodular row reduction to Hermite normal form.
    ///
    /// Returns (R, R⁻¹, H, rank) with R·self = H, H in row echelon form with positive
    /// pivots and the entries above each pivot reduced into [0, pivot).
    pub fn hermite_rows(&self) -> Result<HermiteForm> {
        let (n, k) = (self.rows, self.cols);
        let mut a: Vec<Vec<BigInt>> =
            (0..n).map(|i| (0..k).map(|j| BigInt::from(self[(i, j)])).collect()).collect();
        let mut r: Vec<Vec<BigInt>> = (0..n)
            .map(|i| (0..n).map(|j| BigInt::from((i == j) as i64)).collect())
            .collect();
        // rinv is stored column-accessible as a dense square matrix.
        let mut rinv = r.clone();
        let mut pivot_row = 0;
        let mut pivot_cols = Vec::new();
        for col in 0..k {
            if pivot_row == n {
                break;
            }
            loop {
                let mut best: Option<usize> = None;
                for i in pivot_row..n {
                    if !a[i][col].is_zero()
                        && best.is_none_or(|b| a[i][col].abs() < a[b][col].abs())
                    {
                        best = Some(i);
                    }
                }
                let Some(b) = best else { break };
                if b != pivot_row {
                    a.swap(b, pivot_row);
                    r.swap(b, pivot_row);
                    for row in rinv.iter_mut() {
                        row.swap(b, pivot_row);
                    }
                }
                let mut done = true;
                for i in pivot_row + 1..n {
                    if a[i][col].is_zero() {
                        continue;
                    }
                    let q = a[i][col].div_floor(&a[pivot_row][col]);
                    row_axpy(&mut a, i, pivot_row, &q);
                    row_axpy(&mut r, i, pivot_row, &q);
                    // column pivot_row of R⁻¹ += q · column i
                    for row in rinv.iter_mut() {
                        let v = &row[i] * &q;
                        row[pivot_row] += v;
                    }
                    if !a[i][col].is_zero() {
                        done = false;
                    }
                }
                if done {
                    break;
                }
            }
            if a[pivot_row][col].is_zero() {
                continue;
            }
            if a[pivot_row][col].is_negative() {
                for x in a[pivot_row].iter_mut() {
                    *x = -x.clone();
                }
                for x in r[pivot_row].iter_mut() {
                    *x = -x.clone();
                }
                for row in rinv.iter_mut() {
                    row[pivot_row] = -row[pivot_row].clone();
                }
            }
            for i in 0..pivot_row {
                let q = a[i][col].div_floor(&a[pivot_row][col]);
                if q.is_zero() {
                    continue;
                }
                row_axpy(&mut a, i, pivot_row, &q);
                row_axpy(&mut r, i, pivot_row, &q);
                for row in rinv.iter_mut() {
                    let v = &row[i] * &q;
                    row[pivot_row] += v;
                }
            }
            pivot_cols.push(col);
            pivot_row += 1;
        }
        Ok(HermiteForm {
            r: big_to_int(&r)?,
            r_inv: big_to_int(&rinv)?,
            h: big_to_int(&a)?,
            pivot_cols,
        })
    }
}

/// row_i −= q · row_p
fn row_axpy(m: &mut [Vec<BigInt>], i: usize, p: usize, q: &BigInt) {
    let (src, dst) = if i < p {
        let (lo, hi) = m.split_at_mut(p);
        (&hi[0], &mut lo[i])
    } else {
        let (lo, hi) = m.split_at_mut(i);
        (&lo[p], &mut hi[0])
    };
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d -= s * q;
    }
}

fn big_to_int(m: &[Vec<BigInt>]) -> Result<IntMatrix> {
    let rows: Vec<Vec<i64>> = m
        .iter()
        .map(|row| row.iter().map(|x| x.to_i64().ok_or(Error::Overflow)).collect())
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Ok(IntMatrix::zeros(0, 0));
    }
    IntMatrix::from_rows(&rows)
}

/// Output of [`IntMatrix::hermite_rows`].
#[derive(Debug, Clone)]
pub struct HermiteForm {
    pub r: IntMatrix,
    pub r_inv: IntMatrix,
    pub h: IntMatrix,
    pub pivot_cols: Vec<usize>,
}

impl HermiteForm {
    pub fn rank(&self) -> usize {
        self.pivot_cols.len()
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = i64;
    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Rational rank of a list of integer vectors, maintained incrementally.
#[derive(Debug, Clone, Default)]
pub struct RankTracker {
    echelon: Vec<(usize, Vec<BigRational>)>,
}

impl RankTracker {
    pub fn rank(&self) -> usize {
        self.echelon.len()
    }

    /// Adds `v`; returns true when it increased the rank.
    pub fn insert(&mut self, v: &[i64]) -> bool {
        let mut w: Vec<BigRational> =
            v.iter().map(|&x| BigRational::from_integer(x.into())).collect();
        for (p, row) in &self.echelon {
            if w[*p].is_zero() {
                continue;
            }
            let f = &w[*p] / &row[*p];
            for (wi, ri) in w.iter_mut().zip(row) {
                *wi -= &f * ri;
            }
        }
        match w.iter().position(|x| !x.is_zero()) {
            Some(p) => {
                self.echelon.push((p, w));
                true
            }
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    fn m(rows: &[&[i64]]) -> RatMatrix {
        RatMatrix::from_i64_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn determinant_and_inverse() {
        let a = m(&[&[2, 1], &[1, 2]]);
        assert_eq!(a.det(), rat(3));
        let inv = a.inverse().unwrap();
        assert_eq!(inv[(0, 0)], ratio(2, 3));
        assert_eq!(inv[(0, 1)], ratio(-1, 3));
        assert_eq!(a.mul(&inv), RatMatrix::identity(2));
        assert_eq!(m(&[&[0, 1], &[1, 0]]).det(), rat(-1));
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_none());
    }

    #[test]
    fn pivots_detect_indefinite() {
        assert_eq!(m(&[&[1, 2], &[2, 1]]).elimination_pivots().unwrap()[1], rat(-3));
        assert_eq!(m(&[&[0, 1], &[1, 0]]).elimination_pivots(), Err(0));
    }

    #[test]
    fn schur_complement_small() {
        let a = m(&[&[2, 1], &[1, 2]]);
        assert_eq!(a.schur_complement(1)[(0, 0)], ratio(3, 2));
    }

    #[test]
    fn kron_and_blocks() {
        let a = m(&[&[1, 2], &[3, 4]]);
        let i = RatMatrix::identity(2);
        let k = RatMatrix::kron(&i, &a);
        assert_eq!(k[(2, 3)], rat(2));
        assert_eq!(k[(0, 2)], rat(0));
        assert_eq!(k.det(), a.det() * a.det());
        let b = RatMatrix::block_diag(&a, &i);
        assert_eq!(b.rows(), 4);
        assert_eq!(b.det(), rat(-2));
    }

    #[test]
    fn hermite_of_column() {
        let f = IntMatrix::from_columns(3, &[vec![4, 6, 10]]).unwrap();
        let hf = f.hermite_rows().unwrap();
        assert_eq!(hf.h.column(0), vec![2, 0, 0]);
        assert_eq!(hf.r.mul(&f).unwrap(), hf.h);
        assert_eq!(hf.r.mul(&hf.r_inv).unwrap(), IntMatrix::identity(3));
        // first column of R⁻¹ spans the saturation of (4,6,10)
        assert_eq!(hf.r_inv.column(0), vec![2, 3, 5]);
    }

    #[test]
    fn hermite_reduces_above_pivots() {
        let f = IntMatrix::from_rows(&[vec![2, 3], vec![0, 5], vec![0, 0]]).unwrap();
        let hf = f.hermite_rows().unwrap();
        assert_eq!(hf.rank(), 2);
        let h = &hf.h;
        assert!(h[(0, 0)] > 0 && h[(1, 1)] > 0);
        assert!(h[(0, 1)] >= 0 && h[(0, 1)] < h[(1, 1)]);
        assert_eq!(hf.r.mul(&f).unwrap(), hf.h);
    }

    #[test]
    fn rank_tracker() {
        let mut t = RankTracker::default();
        assert!(t.insert(&[1, 1, 0]));
        assert!(!t.insert(&[2, 2, 0]));
        assert!(t.insert(&[0, 1, 0]));
        assert!(!t.insert(&[3, -1, 0]));
        assert_eq!(t.rank(), 2);
    }
}
