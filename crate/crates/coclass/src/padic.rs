//! Exact arithmetic and linear algebra over `Z/p^N`.
//!
//! Every cocycle-group computation in this crate reduces to linear algebra
//! over the local ring `Z/p^N`: kernels of coboundary operators, canonical
//! solutions of inhomogeneous systems, and diagonal (Smith) normal forms
//! whose divisors read off the orders of kernels and images. Working over
//! a prime power makes the elimination particularly simple: every nonzero
//! element is `p^v * unit`, so a pivot of minimal valuation divides the
//! whole remaining submatrix.

use crate::error::{Error, Result};

/// The ring `Z/p^N`, with `p` prime and `p^N` fitting in a `u64`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Modulus {
    p: u64,
    exp: u32,
    pow: u64,
}

impl Modulus {
    pub fn new(p: u64, exp: u32) -> Result<Self> {
        if p < 2 {
            return Err(Error::Parse(format!("invalid prime {p}")));
        }
        if exp == 0 {
            return Err(Error::Parse("precision must be at least 1".into()));
        }
        let mut pow: u64 = 1;
        for _ in 0..exp {
            pow = pow
                .checked_mul(p)
                .filter(|&v| v <= (1u64 << 62))
                .ok_or(Error::ModulusOverflow(p, exp))?;
        }
        Ok(Modulus { p, exp, pow })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    /// The modulus value `p^N`.
    pub fn value(&self) -> u64 {
        self.pow
    }

    /// Same prime, precision lowered (or raised) to `exp`.
    pub fn with_exp(&self, exp: u32) -> Result<Modulus> {
        Modulus::new(self.p, exp)
    }

    /// `p^k` for `k <= N`.
    pub fn pow_p(&self, k: u32) -> u64 {
        debug_assert!(k <= self.exp);
        self.p.pow(k)
    }

    pub fn reduce_u64(&self, v: u64) -> u64 {
        v % self.pow
    }

    pub fn reduce_i64(&self, v: i64) -> u64 {
        let m = self.pow as i64;
        (((v % m) + m) % m) as u64
    }

    pub fn reduce_i128(&self, v: i128) -> u64 {
        let m = self.pow as i128;
        (((v % m) + m) % m) as u64
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a as u128 + b as u128;
        (s % self.pow as u128) as u64
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        let m = self.pow as u128;
        ((a as u128 + m - (b as u128 % m)) % m) as u64
    }

    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.pow - (a % self.pow)
        }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.pow as u128) as u64
    }

    /// The p-adic valuation of `a`, with `val(0) = N`.
    pub fn valuation(&self, a: u64) -> u32 {
        let a = a % self.pow;
        if a == 0 {
            return self.exp;
        }
        let mut v = 0;
        let mut a = a;
        while a.is_multiple_of(self.p) {
            a /= self.p;
            v += 1;
        }
        v
    }

    /// Writes `a = p^v * u` with `u` a unit; returns `(v, u)`.
    pub fn unit_part(&self, a: u64) -> (u32, u64) {
        let a = a % self.pow;
        if a == 0 {
            return (self.exp, 1);
        }
        let v = self.valuation(a);
        (v, a / self.p.pow(v))
    }

    /// Inverse of a unit mod `p^N`.
    pub fn inv_unit(&self, a: u64) -> Result<u64> {
        let a = a % self.pow;
        if a.is_multiple_of(self.p) {
            return Err(Error::Shape(format!("{a} is not a unit mod {}^{}", self.p, self.exp)));
        }
        // extended Euclid on (a, p^N)
        let (mut r0, mut r1) = (a as i128, self.pow as i128);
        let (mut s0, mut s1) = (1i128, 0i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.reduce_i128(s0))
    }
}

/// A single residue with its own `(p, N)`, as exposed at the API surface.
///
/// Equality compares residues at the minimum of the two precisions.
#[derive(Clone, Copy, Debug)]
pub struct PAdicScalar {
    modulus: Modulus,
    value: u64,
}

impl PAdicScalar {
    pub fn new(modulus: Modulus, value: i64) -> Self {
        PAdicScalar { modulus, value: modulus.reduce_i64(value) }
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn valuation(&self) -> u32 {
        self.modulus.valuation(self.value)
    }

    fn common(&self, other: &Self) -> Result<Modulus> {
        if self.modulus.p != other.modulus.p {
            return Err(Error::ModulusMismatch(format!(
                "primes {} and {}",
                self.modulus.p, other.modulus.p
            )));
        }
        self.modulus.with_exp(self.modulus.exp.min(other.modulus.exp))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let m = self.common(other)?;
        Ok(PAdicScalar { modulus: m, value: m.add(m.reduce_u64(self.value), m.reduce_u64(other.value)) })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let m = self.common(other)?;
        Ok(PAdicScalar { modulus: m, value: m.mul(m.reduce_u64(self.value), m.reduce_u64(other.value)) })
    }
}

impl PartialEq for PAdicScalar {
    fn eq(&self, other: &Self) -> bool {
        match self.common(other) {
            Ok(m) => m.reduce_u64(self.value) == m.reduce_u64(other.value),
            Err(_) => false,
        }
    }
}

/// A vector over `Z/p^N`, stored as raw residues with a shared modulus.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PModVector {
    pub modulus: Modulus,
    pub entries: Vec<u64>,
}

impl PModVector {
    pub fn zero(modulus: Modulus, dim: usize) -> Self {
        PModVector { modulus, entries: vec![0; dim] }
    }

    pub fn from_i64(modulus: Modulus, entries: &[i64]) -> Self {
        PModVector { modulus, entries: entries.iter().map(|&v| modulus.reduce_i64(v)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0)
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        let m = self.modulus;
        PModVector {
            modulus: m,
            entries: self.entries.iter().zip(&other.entries).map(|(&a, &b)| m.add(a, b)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        let m = self.modulus;
        PModVector {
            modulus: m,
            entries: self.entries.iter().zip(&other.entries).map(|(&a, &b)| m.sub(a, b)).collect(),
        }
    }

    pub fn scale(&self, c: u64) -> Self {
        let m = self.modulus;
        PModVector { modulus: m, entries: self.entries.iter().map(|&a| m.mul(a, c)).collect() }
    }
}

/// A rectangular matrix over `Z/p^N`, row major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PModMatrix {
    pub modulus: Modulus,
    pub rows: usize,
    pub cols: usize,
    data: Vec<u64>,
}

impl PModMatrix {
    pub fn zero(modulus: Modulus, rows: usize, cols: usize) -> Self {
        PModMatrix { modulus, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(modulus: Modulus, n: usize) -> Self {
        let mut m = Self::zero(modulus, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(modulus: Modulus, rows: &[Vec<u64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols);
            data.extend(r.iter().map(|&v| modulus.reduce_u64(v)));
        }
        PModMatrix { modulus, rows: rows.len(), cols, data }
    }

    pub fn from_i64_rows(modulus: Modulus, rows: &[Vec<i64>]) -> Self {
        let conv: Vec<Vec<u64>> =
            rows.iter().map(|r| r.iter().map(|&v| modulus.reduce_i64(v)).collect()).collect();
        Self::from_rows(modulus, &conv)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = self.modulus.reduce_u64(v);
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Reduce all entries to a lower precision.
    pub fn reduce_to(&self, modulus: Modulus) -> PModMatrix {
        debug_assert_eq!(modulus.p(), self.modulus.p());
        PModMatrix {
            modulus,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| modulus.reduce_u64(v)).collect(),
        }
    }

    pub fn mat_mul(&self, other: &PModMatrix) -> PModMatrix {
        assert_eq!(self.cols, other.rows);
        let m = self.modulus;
        let mut out = PModMatrix::zero(m, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = m.add(out.get(i, j), m.mul(a, other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Row vector times matrix: `v * M`. This is the orientation used for
    /// module actions (elements are row vectors acted on the right).
    pub fn row_apply(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.rows);
        let m = self.modulus;
        let mut out = vec![0u64; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o = m.add(*o, m.mul(vi, self.get(i, j)));
            }
        }
        out
    }

    /// Matrix times column vector: `M * x`.
    pub fn col_apply(&self, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.cols);
        let m = self.modulus;
        let mut out = vec![0u64; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0u64;
            for (j, &xj) in x.iter().enumerate() {
                acc = m.add(acc, m.mul(self.get(i, j), xj));
            }
            *o = acc;
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn scale_row(&mut self, r: usize, c: u64) {
        let m = self.modulus;
        for j in 0..self.cols {
            let v = m.mul(self.get(r, j), c);
            self.set(r, j, v);
        }
    }

    fn scale_col(&mut self, cidx: usize, c: u64) {
        let m = self.modulus;
        for i in 0..self.rows {
            let v = m.mul(self.get(i, cidx), c);
            self.set(i, cidx, v);
        }
    }

    /// row[dst] += c * row[src]
    fn add_row(&mut self, dst: usize, src: usize, c: u64) {
        let m = self.modulus;
        for j in 0..self.cols {
            let v = m.add(self.get(dst, j), m.mul(c, self.get(src, j)));
            self.set(dst, j, v);
        }
    }

    /// col[dst] += c * col[src]
    fn add_col(&mut self, dst: usize, src: usize, c: u64) {
        let m = self.modulus;
        for i in 0..self.rows {
            let v = m.add(self.get(i, dst), m.mul(c, self.get(i, src)));
            self.set(i, dst, v);
        }
    }
}

/// Result of a Smith normal form computation over `Z/p^N`:
/// `left * M * right = diag(p^{e_1}, ..., p^{e_k})`, where `e_i = N`
/// encodes a zero diagonal entry and the exponents are ascending.
#[derive(Clone, Debug)]
pub struct DiagonalForm {
    pub modulus: Modulus,
    pub rows: usize,
    pub cols: usize,
    pub left: PModMatrix,
    pub right: PModMatrix,
    /// Inverse of `left`, for presenting cokernels in the original basis.
    pub left_inv: PModMatrix,
    /// Inverse of `right`, for change of basis back to diagonal coordinates.
    pub right_inv: PModMatrix,
    /// Divisor exponents along the diagonal, length `min(rows, cols)`.
    pub exps: Vec<u32>,
}

impl DiagonalForm {
    /// Divisor values `p^{e_i}`, with zero entries reported as 0.
    pub fn divisors(&self) -> Vec<u64> {
        let m = self.modulus;
        self.exps.iter().map(|&e| if e >= m.exp() { 0 } else { m.pow_p(e) }).collect()
    }

    /// One canonical solution of `M x = b`, or `None` if there is none.
    ///
    /// Free coordinates in the diagonalized basis are set to zero, so the
    /// returned solution is deterministic.
    pub fn solve(&self, b: &[u64]) -> Option<Vec<u64>> {
        assert_eq!(b.len(), self.rows);
        let m = self.modulus;
        let lb = self.left.col_apply(b);
        let k = self.exps.len();
        let mut y = vec![0u64; self.cols];
        for (i, &lbi) in lb.iter().enumerate() {
            if i < k && self.exps[i] < m.exp() {
                let pe = m.pow_p(self.exps[i]);
                if lbi % pe != 0 {
                    return None;
                }
                y[i] = lbi / pe;
            } else if lbi != 0 {
                return None;
            }
        }
        Some(self.right.col_apply(&y))
    }

    /// Generators of `{x : M x = 0}` together with their additive orders
    /// `p^{o_i}` (returned as exponents `o_i`).
    pub fn kernel(&self) -> Vec<(Vec<u64>, u32)> {
        let m = self.modulus;
        let n = m.exp();
        let mut gens = Vec::new();
        for (i, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let scale = m.pow_p(n - e);
            let g: Vec<u64> = self.right.col(i).iter().map(|&v| m.mul(v, scale)).collect();
            gens.push((g, e));
        }
        for j in self.exps.len()..self.cols {
            gens.push((self.right.col(j), n));
        }
        gens
    }

}

/// Smith normal form over `Z/p^N` with invertible transforms.
///
/// Pivots are chosen with minimal p-adic valuation, scanning row major, so
/// the divisor sequence is ascending and ties are broken deterministically.
pub fn smith_normal_form(mat: &PModMatrix) -> DiagonalForm {
    let m = mat.modulus;
    let n = m.exp();
    let mut a = mat.clone();
    let mut left = PModMatrix::identity(m, mat.rows);
    let mut left_inv = PModMatrix::identity(m, mat.rows);
    let mut right = PModMatrix::identity(m, mat.cols);
    let mut right_inv = PModMatrix::identity(m, mat.cols);
    let k = mat.rows.min(mat.cols);
    let mut exps = vec![n; k];

    #[allow(clippy::needless_range_loop)]
    for t in 0..k {
        // locate the entry of minimal valuation in the trailing submatrix
        let mut best: Option<(u32, usize, usize)> = None;
        for i in t..mat.rows {
            for j in t..mat.cols {
                let v = a.get(i, j);
                if v == 0 {
                    continue;
                }
                let val = m.valuation(v);
                if best.is_none_or(|(bv, _, _)| val < bv) {
                    best = Some((val, i, j));
                }
            }
        }
        let Some((val, pi, pj)) = best else { break };
        a.swap_rows(t, pi);
        left.swap_rows(t, pi);
        left_inv.swap_cols(t, pi);
        a.swap_cols(t, pj);
        right.swap_cols(t, pj);
        right_inv.swap_rows(t, pj);

        // normalize the pivot to exactly p^val
        let (_, unit) = m.unit_part(a.get(t, t));
        let unit_inv = m.inv_unit(unit).expect("unit by construction");
        a.scale_row(t, unit_inv);
        left.scale_row(t, unit_inv);
        left_inv.scale_col(t, unit);

        let pe = m.pow_p(val);
        // clear the pivot column; every entry below has valuation >= val
        for i in (t + 1)..mat.rows {
            let v = a.get(i, t);
            if v == 0 {
                continue;
            }
            let c = m.neg(v / pe);
            a.add_row(i, t, c);
            left.add_row(i, t, c);
            // inverse operation: col t += (v/pe) * col i
            left_inv.add_col(t, i, v / pe);
        }
        // clear the pivot row
        for j in (t + 1)..mat.cols {
            let v = a.get(t, j);
            if v == 0 {
                continue;
            }
            let c = m.neg(v / pe);
            a.add_col(j, t, c);
            right.add_col(j, t, c);
            // inverse operation on right_inv: row t += (v/pe) * row j
            right_inv.add_row(t, j, v / pe);
        }
        exps[t] = val;
    }

    DiagonalForm { modulus: m, rows: mat.rows, cols: mat.cols, left, left_inv, right, right_inv, exps }
}

/// One canonical solution of `M x = b mod p^N`, or `None`.
pub fn solve_mod(mat: &PModMatrix, b: &PModVector) -> Option<PModVector> {
    assert_eq!(mat.modulus, b.modulus);
    let d = smith_normal_form(mat);
    d.solve(&b.entries).map(|entries| PModVector { modulus: mat.modulus, entries })
}

/// Generators (with orders) of the kernel `{x : M x = 0 mod p^N}`.
pub fn kernel_basis(mat: &PModMatrix) -> Vec<(PModVector, u32)> {
    let d = smith_normal_form(mat);
    d.kernel()
        .into_iter()
        .map(|(g, e)| (PModVector { modulus: mat.modulus, entries: g }, e))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modulus(p: u64, n: u32) -> Modulus {
        Modulus::new(p, n).unwrap()
    }

    fn check_snf(mat: &PModMatrix) {
        let d = smith_normal_form(mat);
        let lmr = d.left.mat_mul(mat).mat_mul(&d.right);
        for i in 0..mat.rows {
            for j in 0..mat.cols {
                let expect = if i == j && i < d.exps.len() && d.exps[i] < mat.modulus.exp() {
                    mat.modulus.pow_p(d.exps[i])
                } else {
                    0
                };
                assert_eq!(lmr.get(i, j), expect, "diag mismatch at ({i},{j})");
            }
        }
        // exponents ascending
        for w in d.exps.windows(2) {
            assert!(w[0] <= w[1]);
        }
        // right * right_inv = id and left * left_inv = id
        let id = d.right.mat_mul(&d.right_inv);
        assert_eq!(id, PModMatrix::identity(mat.modulus, mat.cols));
        let id = d.left.mat_mul(&d.left_inv);
        assert_eq!(id, PModMatrix::identity(mat.modulus, mat.rows));
    }

    #[test]
    fn snf_identity_over_z8() {
        let m = modulus(2, 3);
        let mat = PModMatrix::identity(m, 3);
        let d = smith_normal_form(&mat);
        assert_eq!(d.divisors(), vec![1, 1, 1]);
        check_snf(&mat);
    }

    #[test]
    fn snf_already_diagonal() {
        let m = modulus(2, 3);
        let mat = PModMatrix::from_i64_rows(m, &[vec![2, 0], vec![0, 4]]);
        let d = smith_normal_form(&mat);
        assert_eq!(d.divisors(), vec![2, 4]);
        check_snf(&mat);
    }

    #[test]
    fn snf_unit_times_two_over_z8() {
        // 6 = 2 * 3 with 3 a unit mod 8, so the divisor is 2
        let m = modulus(2, 3);
        let mat = PModMatrix::from_i64_rows(m, &[vec![6]]);
        let d = smith_normal_form(&mat);
        assert_eq!(d.divisors(), vec![2]);
        assert_eq!(6 % 2, 0);
        assert_eq!(m.inv_unit(3).unwrap(), 3); // 3*3 = 9 = 1 mod 8
        check_snf(&mat);
    }

    #[test]
    fn solve_zero_system() {
        let m = modulus(2, 3);
        let mat = PModMatrix::zero(m, 1, 1);
        let b = PModVector::zero(m, 1);
        let x = solve_mod(&mat, &b).unwrap();
        assert!(x.is_zero());
    }

    #[test]
    fn solve_two_x_eq_four_mod_eight() {
        let m = modulus(2, 3);
        let mat = PModMatrix::from_i64_rows(m, &[vec![2]]);
        let b = PModVector::from_i64(m, &[4]);
        let x = solve_mod(&mat, &b).unwrap();
        // brute force: solutions of 2x = 4 mod 8 are {2, 6}; canonical is 2
        let all: Vec<u64> = (0..8).filter(|&x| (2 * x) % 8 == 4).collect();
        assert_eq!(all, vec![2, 6]);
        assert_eq!(x.entries, vec![2]);
    }

    #[test]
    fn solve_two_x_eq_one_mod_eight_absent() {
        let m = modulus(2, 3);
        let mat = PModMatrix::from_i64_rows(m, &[vec![2]]);
        let b = PModVector::from_i64(m, &[1]);
        assert!(solve_mod(&mat, &b).is_none());
        // exhaustive confirmation
        assert!((0..8).all(|x| (2 * x) % 8 != 1));
    }

    #[test]
    fn kernel_of_zero_matrix_mod_four() {
        let m = modulus(2, 2);
        let mat = PModMatrix::zero(m, 1, 2);
        let gens = kernel_basis(&mat);
        assert_eq!(gens.len(), 2);
        for (_, e) in &gens {
            assert_eq!(*e, 2); // order 4
        }
    }

    #[test]
    fn kernel_of_two_mod_four() {
        let m = modulus(2, 2);
        let mat = PModMatrix::from_i64_rows(m, &[vec![2]]);
        let gens = kernel_basis(&mat);
        // brute force over 4 residues: kernel = {0, 2}
        let brute: Vec<u64> = (0..4).filter(|&x| (2 * x) % 4 == 0).collect();
        assert_eq!(brute, vec![0, 2]);
        assert_eq!(gens.len(), 1);
        assert_eq!(gens[0].0.entries, vec![2]);
        assert_eq!(gens[0].1, 1); // order 2
    }

    #[test]
    fn kernel_of_invertible_is_trivial() {
        let m = modulus(3, 2);
        let mat = PModMatrix::from_i64_rows(m, &[vec![1, 1], vec![1, 2]]);
        assert!(kernel_basis(&mat).is_empty());
    }

    #[test]
    fn scalar_equality_at_min_precision() {
        let a = PAdicScalar::new(modulus(2, 4), 10);
        let b = PAdicScalar::new(modulus(2, 2), 2);
        assert_eq!(a, b); // 10 = 2 mod 4
        let c = PAdicScalar::new(modulus(2, 4), 6);
        assert_ne!(a, c);
        assert_eq!(b, c); // both are 2 mod 4
    }

    #[test]
    fn solve_matches_brute_force_on_random_small_systems() {
        // deterministic xorshift; instances kept below 2^12 candidates
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for trial in 0..200 {
            let p = [2u64, 3, 5][(next() % 3) as usize];
            let n = 1 + (next() % 3) as u32;
            let m = modulus(p, n);
            let rows = 1 + (next() % 3) as usize;
            let cols = 1 + (next() % 2) as usize;
            let count = (m.value() as u64).pow(cols as u32);
            if count > 1 << 12 {
                continue;
            }
            let mat = {
                let data: Vec<Vec<u64>> =
                    (0..rows).map(|_| (0..cols).map(|_| next() % m.value()).collect()).collect();
                PModMatrix::from_rows(m, &data)
            };
            let b = PModVector {
                modulus: m,
                entries: (0..rows).map(|_| next() % m.value()).collect(),
            };
            let got = solve_mod(&mat, &b);
            // brute force search
            let mut found = None;
            'outer: for idx in 0..count {
                let mut x = Vec::with_capacity(cols);
                let mut rest = idx;
                for _ in 0..cols {
                    x.push(rest % m.value());
                    rest /= m.value();
                }
                if mat.col_apply(&x) == b.entries {
                    found = Some(x);
                    break 'outer;
                }
            }
            match (got, found) {
                (Some(x), Some(_)) => {
                    assert_eq!(mat.col_apply(&x.entries), b.entries, "trial {trial}");
                }
                (None, None) => {}
                (got, found) => panic!("trial {trial}: solver {got:?} vs brute {found:?}"),
            }
        }
    }
}
