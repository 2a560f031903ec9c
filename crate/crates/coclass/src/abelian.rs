//! Finitely generated subgroups of `(Z/p^N)^dim` in Howell normal form.
//!
//! A [`Span`] is a subgroup given by canonical generators: the Howell form
//! is the unique echelon basis over the chain ring `Z/p^N`, so spans can be
//! compared, hashed and used as deterministic object identities. Quotients
//! carry canonical representatives, which is what makes transversals such
//! as `T^1(L, T)` reproducible across runs.

use crate::error::{Error, Result};
use crate::padic::{smith_normal_form, Modulus, PModMatrix};

/// A subgroup of `(Z/p^N)^dim`, kept in Howell normal form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Span {
    modulus: Modulus,
    dim: usize,
    /// Canonical rows, sorted by pivot column; pivot entries are `p^e`.
    rows: Vec<Vec<u64>>,
    /// Pivot column and valuation per row.
    pivots: Vec<(usize, u32)>,
}

impl Span {
    pub fn zero(modulus: Modulus, dim: usize) -> Self {
        Span { modulus, dim, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(modulus: Modulus, dim: usize) -> Self {
        let gens: Vec<Vec<u64>> = (0..dim)
            .map(|i| {
                let mut v = vec![0; dim];
                v[i] = 1;
                v
            })
            .collect();
        Span::from_gens(modulus, dim, gens)
    }

    pub fn from_gens(modulus: Modulus, dim: usize, gens: Vec<Vec<u64>>) -> Self {
        let mut span = Span::zero(modulus, dim);
        span.insert_all(gens);
        span.back_reduce();
        span
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gens(&self) -> &[Vec<u64>] {
        &self.rows
    }

    /// log_p of the subgroup order.
    pub fn order_exp(&self) -> u64 {
        let n = self.modulus.exp() as u64;
        self.pivots.iter().map(|&(_, e)| n - e as u64).sum()
    }

    pub fn order(&self) -> u64 {
        // callers only ask this for desk-scale spans
        self.modulus.p().pow(self.order_exp() as u32)
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    fn insert_all(&mut self, gens: Vec<Vec<u64>>) {
        let mut queue: Vec<Vec<u64>> = gens
            .into_iter()
            .map(|g| {
                assert_eq!(g.len(), self.dim);
                g.iter().map(|&v| self.modulus.reduce_u64(v)).collect()
            })
            .collect();
        while let Some(row) = queue.pop() {
            self.insert(row, &mut queue);
        }
        // keep rows ordered by pivot column
        let mut paired: Vec<((usize, u32), Vec<u64>)> =
            self.pivots.drain(..).zip(self.rows.drain(..)).collect();
        paired.sort_by_key(|&((c, _), _)| c);
        for (p, r) in paired {
            self.pivots.push(p);
            self.rows.push(r);
        }
    }

    fn insert(&mut self, mut row: Vec<u64>, queue: &mut Vec<Vec<u64>>) {
        let m = self.modulus;
        loop {
            let Some(lead) = row.iter().position(|&v| v != 0) else { return };
            let val = m.valuation(row[lead]);
            match self.pivots.iter().position(|&(c, _)| c == lead) {
                Some(idx) => {
                    let (_, e) = self.pivots[idx];
                    if val >= e {
                        let q = row[lead] / m.pow_p(e);
                        let prow = self.rows[idx].clone();
                        for (r, p) in row.iter_mut().zip(&prow) {
                            *r = m.sub(*r, m.mul(q, *p));
                        }
                        // leading entry now zero; continue reducing
                    } else {
                        // strictly smaller valuation: the new row becomes
                        // the pivot and the old one is reprocessed
                        normalize(&mut row, lead, val, m);
                        let old = std::mem::replace(&mut self.rows[idx], row);
                        self.pivots[idx] = (lead, val);
                        if val > 0 {
                            queue.push(shadow(&self.rows[idx], val, m));
                        }
                        queue.push(old);
                        return;
                    }
                }
                None => {
                    normalize(&mut row, lead, val, m);
                    if val > 0 {
                        queue.push(shadow(&row, val, m));
                    }
                    self.pivots.push((lead, val));
                    self.rows.push(row);
                    return;
                }
            }
        }
    }

    fn back_reduce(&mut self) {
        let m = self.modulus;
        for i in 0..self.rows.len() {
            for j in 0..self.rows.len() {
                if i == j {
                    continue;
                }
                let (c, e) = self.pivots[j];
                let v = self.rows[i][c];
                let q = v / m.pow_p(e);
                if q != 0 {
                    let prow = self.rows[j].clone();
                    for (r, p) in self.rows[i].iter_mut().zip(&prow) {
                        *r = m.sub(*r, m.mul(q, *p));
                    }
                }
            }
        }
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Canonical coset representative of `v` modulo this span.
    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        let m = self.modulus;
        let mut v: Vec<u64> = v.iter().map(|&x| m.reduce_u64(x)).collect();
        for (idx, &(c, e)) in self.pivots.iter().enumerate() {
            let q = v[c] / m.pow_p(e);
            if q != 0 {
                for (r, p) in v.iter_mut().zip(&self.rows[idx]) {
                    *r = m.sub(*r, m.mul(q, *p));
                }
            }
        }
        v
    }

    pub fn add(&self, other: &Span) -> Span {
        assert_eq!(self.dim, other.dim);
        let mut gens = self.rows.clone();
        gens.extend(other.rows.iter().cloned());
        Span::from_gens(self.modulus, self.dim, gens)
    }

    pub fn add_gens(&self, extra: &[Vec<u64>]) -> Span {
        let mut gens = self.rows.clone();
        gens.extend(extra.iter().cloned());
        Span::from_gens(self.modulus, self.dim, gens)
    }

    /// Intersection, computed from the kernel of `(c, d) -> c A - d B`.
    pub fn intersect(&self, other: &Span) -> Span {
        assert_eq!(self.dim, other.dim);
        let m = self.modulus;
        let a = self.rows.len();
        let b = other.rows.len();
        if a == 0 || b == 0 {
            return Span::zero(m, self.dim);
        }
        let mut mat = PModMatrix::zero(m, self.dim, a + b);
        for (j, g) in self.rows.iter().enumerate() {
            for (i, &v) in g.iter().enumerate() {
                mat.set(i, j, v);
            }
        }
        for (j, g) in other.rows.iter().enumerate() {
            for (i, &v) in g.iter().enumerate() {
                mat.set(i, a + j, m.neg(v));
            }
        }
        let d = smith_normal_form(&mat);
        let mut gens = Vec::new();
        for (coeffs, _) in d.kernel() {
            let mut v = vec![0u64; self.dim];
            for (t, g) in self.rows.iter().enumerate() {
                for (i, &gv) in g.iter().enumerate() {
                    v[i] = m.add(v[i], m.mul(coeffs[t], gv));
                }
            }
            gens.push(v);
        }
        Span::from_gens(m, self.dim, gens)
    }

    /// Coefficient expression `v = sum c_i gens_i`, if `v` is a member.
    pub fn express(&self, v: &[u64]) -> Option<Vec<u64>> {
        let m = self.modulus;
        if self.rows.is_empty() {
            return if v.iter().all(|&x| m.reduce_u64(x) == 0) { Some(Vec::new()) } else { None };
        }
        let mut mat = PModMatrix::zero(m, self.dim, self.rows.len());
        for (j, g) in self.rows.iter().enumerate() {
            for (i, &gv) in g.iter().enumerate() {
                mat.set(i, j, gv);
            }
        }
        let d = smith_normal_form(&mat);
        d.solve(&v.iter().map(|&x| m.reduce_u64(x)).collect::<Vec<_>>())
    }

    /// All elements, in a deterministic order. Panics if the order exceeds
    /// `cap`.
    pub fn elements(&self, cap: u64) -> Vec<Vec<u64>> {
        let m = self.modulus;
        let order = self.order_exp();
        assert!(
            (m.p() as f64).powi(order as i32) <= cap as f64,
            "span too large to enumerate"
        );
        let mut out = vec![vec![0u64; self.dim]];
        for (idx, &(_, e)) in self.pivots.iter().enumerate() {
            let reps = m.pow_p(m.exp() - e);
            let mut next = Vec::with_capacity(out.len() * reps as usize);
            for base in &out {
                for c in 0..reps {
                    let mut v = base.clone();
                    for (x, g) in v.iter_mut().zip(&self.rows[idx]) {
                        *x = m.add(*x, m.mul(c, *g));
                    }
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }

    /// Image of the span under an entrywise map.
    pub fn map(&self, modulus: Modulus, f: impl Fn(&[u64]) -> Vec<u64>) -> Span {
        let gens: Vec<Vec<u64>> = self.rows.iter().map(|g| f(g)).collect();
        Span::from_gens(modulus, self.dim, gens)
    }

    /// Quotient of this span by a subgroup (which must be contained in it).
    pub fn quotient(&self, sub: &Span) -> Quotient {
        let m = self.modulus;
        let g = self.rows.len();
        if g == 0 {
            return Quotient { modulus: m, dim: self.dim, exps: Vec::new(), reps: Vec::new() };
        }
        // relations: coefficient vectors c with c * gens in `sub`
        let h = sub.rows.len();
        let mut mat = PModMatrix::zero(m, self.dim, g + h);
        for (j, gen) in self.rows.iter().enumerate() {
            for (i, &v) in gen.iter().enumerate() {
                mat.set(i, j, v);
            }
        }
        for (j, gen) in sub.rows.iter().enumerate() {
            for (i, &v) in gen.iter().enumerate() {
                mat.set(i, g + j, v);
            }
        }
        let kernel = smith_normal_form(&mat).kernel();
        let nrels = kernel.len();
        let mut rel = PModMatrix::zero(m, g, nrels.max(1));
        for (j, (coeffs, _)) in kernel.iter().enumerate() {
            for (i, &c) in coeffs.iter().take(g).enumerate() {
                rel.set(i, j, c);
            }
        }
        let d = smith_normal_form(&rel);
        let mut exps = Vec::new();
        let mut reps = Vec::new();
        for jcomp in 0..g {
            let e = if jcomp < d.exps.len() { d.exps[jcomp] } else { m.exp() };
            if e == 0 {
                continue;
            }
            // component generator: coefficients left_inv * unit_j applied to
            // gens, canonicalized modulo the subgroup
            let coeffs = d.left_inv.col(jcomp);
            let mut v = vec![0u64; self.dim];
            for (t, gen) in self.rows.iter().enumerate() {
                for (i, &gv) in gen.iter().enumerate() {
                    v[i] = m.add(v[i], m.mul(coeffs[t], gv));
                }
            }
            exps.push(e);
            reps.push(sub.reduce(&v));
        }
        Quotient { modulus: m, dim: self.dim, exps, reps }
    }
}

fn normalize(row: &mut [u64], lead: usize, val: u32, m: Modulus) {
    let (_, unit) = m.unit_part(row[lead]);
    let inv = m.inv_unit(unit).expect("unit");
    for r in row.iter_mut() {
        *r = m.mul(*r, inv);
    }
    debug_assert_eq!(row[lead], m.pow_p(val));
}

fn shadow(row: &[u64], val: u32, m: Modulus) -> Vec<u64> {
    let scale = m.pow_p(m.exp() - val);
    row.iter().map(|&v| m.mul(v, scale)).collect()
}

/// A finite abelian p-group presented as a quotient, with canonical
/// representatives for its invariant-factor generators.
#[derive(Clone, Debug)]
pub struct Quotient {
    pub modulus: Modulus,
    /// Ambient dimension of the representatives.
    pub dim: usize,
    /// Component orders as exponents: the quotient is `⊕ Z/p^{e_i}`.
    pub exps: Vec<u32>,
    /// Ambient representatives of the component generators.
    pub reps: Vec<Vec<u64>>,
}

impl Quotient {
    pub fn order_exp(&self) -> u64 {
        self.exps.iter().map(|&e| e as u64).sum()
    }

    pub fn order(&self) -> u64 {
        self.modulus.p().pow(self.order_exp() as u32)
    }

    pub fn is_trivial(&self) -> bool {
        self.exps.is_empty()
    }

    /// Abelian invariants as plain numbers `p^{e_i}`, descending exps.
    pub fn invariants(&self) -> Vec<u64> {
        let mut exps = self.exps.clone();
        exps.sort_unstable_by(|a, b| b.cmp(a));
        exps.into_iter().map(|e| self.modulus.p().pow(e)).collect()
    }

    /// A canonical transversal: all `sum c_i rep_i` with `0 <= c_i < p^{e_i}`.
    pub fn transversal(&self, cap: u64) -> Vec<Vec<u64>> {
        assert!(self.order() <= cap, "quotient too large to enumerate");
        let m = self.modulus;
        let mut out = vec![vec![0u64; self.dim]];
        for (rep, &e) in self.reps.iter().zip(&self.exps) {
            let count = m.pow_p(e);
            let mut next = Vec::with_capacity(out.len() * count as usize);
            for base in &out {
                for c in 0..count {
                    let mut v = base.clone();
                    for (x, g) in v.iter_mut().zip(rep) {
                        *x = m.add(*x, m.mul(c, *g));
                    }
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }
}

/// Finds a complement `K` to `inner` in `whole` with `K` contained in
/// `within`, optionally through prescribed seed generators.
///
/// The construction lifts each invariant-factor generator of
/// `whole/(inner + seeds)` to an element of `within` of the same order;
/// such a system of lifts spans a complement whenever the per-generator
/// order corrections are solvable.
pub fn complement_within(
    whole: &Span,
    inner: &Span,
    within: &Span,
    seeds: &[Vec<u64>],
) -> Result<Span> {
    let m = whole.modulus();
    let dim = whole.dim();
    let mut k = Span::from_gens(m, dim, seeds.to_vec());
    if !k.intersect(inner).is_zero() {
        return Err(Error::NoConstrainedComplement);
    }
    for s in seeds {
        if !within.contains(s) {
            return Err(Error::NoConstrainedComplement);
        }
    }

    loop {
        let blocked = inner.add(&k);
        let q = whole.quotient(&blocked);
        if q.is_trivial() {
            break;
        }
        // lift the first invariant generator and iterate
        let f = q.exps[0];
        let rep = &q.reps[0];
        // write rep = u + (inner + k)-part with u in `within`
        let mut combined = within.gens().to_vec();
        let w_count = combined.len();
        combined.extend(blocked.gens().iter().cloned());
        let combined_span_mat = gens_as_columns(m, dim, &combined);
        let d = smith_normal_form(&combined_span_mat);
        let coeffs = d.solve(rep).ok_or(Error::NoConstrainedComplement)?;
        let mut u = vec![0u64; dim];
        for (t, g) in combined.iter().take(w_count).enumerate() {
            for (i, &gv) in g.iter().enumerate() {
                u[i] = m.add(u[i], m.mul(coeffs[t], gv));
            }
        }
        // order correction: find w in (inner + k) ∩ within with p^f w = p^f u
        let pf = m.pow_p(f);
        let pf_u: Vec<u64> = u.iter().map(|&x| m.mul(x, pf)).collect();
        let lift = if pf_u.iter().all(|&x| x == 0) {
            u
        } else {
            let corr_space = blocked.intersect(within);
            let scaled: Vec<Vec<u64>> = corr_space
                .gens()
                .iter()
                .map(|g| g.iter().map(|&x| m.mul(x, pf)).collect())
                .collect();
            let mat = gens_as_columns(m, dim, &scaled);
            let d = smith_normal_form(&mat);
            let c = d.solve(&pf_u).ok_or(Error::NoConstrainedComplement)?;
            let mut w = vec![0u64; dim];
            for (t, g) in corr_space.gens().iter().enumerate() {
                for (i, &gv) in g.iter().enumerate() {
                    w[i] = m.add(w[i], m.mul(c[t], gv));
                }
            }
            let mut l = u;
            for (x, wv) in l.iter_mut().zip(&w) {
                *x = m.sub(*x, *wv);
            }
            l
        };
        k = k.add_gens(&[lift]);
        if !k.intersect(inner).is_zero() {
            return Err(Error::NoConstrainedComplement);
        }
    }

    // internal direct sum check by order counting
    if k.order_exp() + inner.order_exp() != whole.order_exp() {
        return Err(Error::NoConstrainedComplement);
    }
    Ok(k)
}

fn gens_as_columns(m: Modulus, dim: usize, gens: &[Vec<u64>]) -> PModMatrix {
    let mut mat = PModMatrix::zero(m, dim, gens.len().max(1));
    for (j, g) in gens.iter().enumerate() {
        for (i, &v) in g.iter().enumerate() {
            mat.set(i, j, v);
        }
    }
    mat
}
