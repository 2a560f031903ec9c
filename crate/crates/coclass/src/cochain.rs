//! Normalized cochains, the coboundary operator, cocycle and cohomology
//! groups, the conjugation action on cocycles, and the transport maps
//! between coefficient modules (restriction, projection, inclusion,
//! division and multiplication by p).
//!
//! Cochains are dense tables over all tuples of group elements; the
//! normalization (value zero whenever an argument is the identity) is an
//! enforced invariant. Linear algebra happens in the flattened coordinate
//! space indexed by tuples of nonidentity elements.

use crate::abelian::{Quotient, Span};
use crate::error::{Error, Result};
use crate::group::{FiniteGroup, PModuleAction, Subgroup};
use crate::padic::{smith_normal_form, DiagonalForm, Modulus, PModMatrix};
use std::sync::Arc;

/// A finite group together with a coefficient module it acts on.
#[derive(Clone, Debug)]
pub struct GroupModule {
    pub group: Arc<FiniteGroup>,
    pub action: PModuleAction,
}

impl GroupModule {
    pub fn new(group: Arc<FiniteGroup>, action: PModuleAction) -> Self {
        GroupModule { group, action }
    }

    pub fn modulus(&self) -> Modulus {
        self.action.modulus
    }

    pub fn rank(&self) -> usize {
        self.action.rank
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    /// Same group, coefficients truncated to `p^r`.
    pub fn reduce_to(&self, r: u32) -> Result<GroupModule> {
        let m = self.modulus().with_exp(r)?;
        Ok(GroupModule { group: self.group.clone(), action: self.action.reduce_to(m) })
    }

    /// Action of `g` on a module element.
    pub fn act(&self, v: &[u64], g: u16) -> Vec<u64> {
        self.action.apply(v, g)
    }
}

/// A subgroup realized as a group in its own right, with the coefficient
/// module restricted along the embedding.
#[derive(Clone, Debug)]
pub struct SubgroupModule {
    pub gm: GroupModule,
    /// `embed[i]` is the parent index of subgroup element `i`.
    pub embed: Vec<u16>,
}

pub fn restrict_module(parent: &GroupModule, sub: &Subgroup) -> SubgroupModule {
    let n = sub.elements.len();
    let mut parent_to_sub = vec![u16::MAX; parent.group.order()];
    for (i, &el) in sub.elements.iter().enumerate() {
        parent_to_sub[el as usize] = i as u16;
    }
    let mut table = vec![0u16; n * n];
    for (i, &a) in sub.elements.iter().enumerate() {
        for (j, &b) in sub.elements.iter().enumerate() {
            let ab = parent.group.mul(a, b);
            table[i * n + j] = parent_to_sub[ab as usize];
        }
    }
    let labels = parent
        .group
        .labels()
        .map(|l| sub.elements.iter().map(|&e| l[e as usize].clone()).collect());
    let group = FiniteGroup::from_table(table, labels).expect("subgroup closure");
    let mats = sub.elements.iter().map(|&e| parent.action.mats[e as usize].clone()).collect();
    let action = PModuleAction::new(&group, parent.modulus(), mats).expect("restricted action");
    SubgroupModule { gm: GroupModule::new(group, action), embed: sub.elements.clone() }
}

/// A normalized n-cochain as a total table of module values.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cochain {
    pub degree: usize,
    pub order: usize,
    pub rank: usize,
    pub modulus: Modulus,
    values: Vec<u64>,
}

impl Cochain {
    pub fn zero(gm: &GroupModule, degree: usize) -> Cochain {
        let order = gm.order();
        let len = order.pow(degree as u32) * gm.rank();
        Cochain { degree, order, rank: gm.rank(), modulus: gm.modulus(), values: vec![0; len] }
    }

    pub fn from_fn(
        gm: &GroupModule,
        degree: usize,
        mut f: impl FnMut(&[u16]) -> Vec<u64>,
    ) -> Cochain {
        let mut c = Cochain::zero(gm, degree);
        let id = gm.group.identity();
        for tuple in tuples(gm.order(), degree) {
            if tuple.contains(&id) {
                continue;
            }
            let v = f(&tuple);
            c.set(&tuple, &v);
        }
        c
    }

    /// Builds a cochain from a signed integer table (used for stored data).
    pub fn from_int_table(
        gm: &GroupModule,
        degree: usize,
        table: &[(Vec<u16>, Vec<i64>)],
    ) -> Cochain {
        let m = gm.modulus();
        let mut c = Cochain::zero(gm, degree);
        for (tuple, value) in table {
            let v: Vec<u64> = value.iter().map(|&x| m.reduce_i64(x)).collect();
            c.set(tuple, &v);
        }
        c
    }

    #[inline]
    fn index(&self, tuple: &[u16]) -> usize {
        debug_assert_eq!(tuple.len(), self.degree);
        let mut idx = 0usize;
        for &t in tuple {
            idx = idx * self.order + t as usize;
        }
        idx * self.rank
    }

    pub fn get(&self, tuple: &[u16]) -> &[u64] {
        let i = self.index(tuple);
        &self.values[i..i + self.rank]
    }

    pub fn set(&mut self, tuple: &[u16], value: &[u64]) {
        debug_assert_eq!(value.len(), self.rank);
        let m = self.modulus;
        let i = self.index(tuple);
        for (k, &v) in value.iter().enumerate() {
            self.values[i + k] = m.reduce_u64(v);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    pub fn add(&self, other: &Cochain) -> Cochain {
        self.zip(other, |m, a, b| m.add(a, b))
    }

    pub fn sub(&self, other: &Cochain) -> Cochain {
        self.zip(other, |m, a, b| m.sub(a, b))
    }

    fn zip(&self, other: &Cochain, f: impl Fn(Modulus, u64, u64) -> u64) -> Cochain {
        assert_eq!(self.degree, other.degree);
        assert_eq!(self.values.len(), other.values.len());
        assert_eq!(self.modulus, other.modulus);
        let m = self.modulus;
        Cochain {
            degree: self.degree,
            order: self.order,
            rank: self.rank,
            modulus: m,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(m, a, b)).collect(),
        }
    }

    pub fn neg(&self) -> Cochain {
        let m = self.modulus;
        Cochain {
            degree: self.degree,
            order: self.order,
            rank: self.rank,
            modulus: m,
            values: self.values.iter().map(|&a| m.neg(a)).collect(),
        }
    }

    pub fn scale(&self, c: u64) -> Cochain {
        let m = self.modulus;
        Cochain {
            degree: self.degree,
            order: self.order,
            rank: self.rank,
            modulus: m,
            values: self.values.iter().map(|&a| m.mul(a, c)).collect(),
        }
    }

    /// Projection `pro`: truncate values to a lower precision.
    pub fn reduce_to(&self, r: u32) -> Result<Cochain> {
        let m = self.modulus.with_exp(r)?;
        Ok(Cochain {
            degree: self.degree,
            order: self.order,
            rank: self.rank,
            modulus: m,
            values: self.values.iter().map(|&v| m.reduce_u64(v)).collect(),
        })
    }

    /// Multiplication map `mul : T/p^r -> T/p^{r+1}`, `t ↦ pt`.
    pub fn mul_p(&self) -> Result<Cochain> {
        let m = self.modulus.with_exp(self.modulus.exp() + 1)?;
        let p = m.p();
        Ok(Cochain {
            degree: self.degree,
            order: self.order,
            rank: self.rank,
            modulus: m,
            values: self.values.iter().map(|&v| v * p).collect(),
        })
    }

    /// Division by `p^l`; requires every value to lie in `p^l * module`.
    pub fn div_p(&self, l: u32) -> Result<Cochain> {
        if l == 0 {
            return Ok(self.clone());
        }
        if self.modulus.exp() <= l {
            return Err(Error::PrecisionTooLow { need: l + 1, got: self.modulus.exp() });
        }
        let pl = self.modulus.pow_p(l);
        if self.values.iter().any(|&v| v % pl != 0) {
            return Err(Error::DivNotDivisible(l));
        }
        let m = self.modulus.with_exp(self.modulus.exp() - l)?;
        Ok(Cochain {
            degree: self.degree,
            order: self.order,
            rank: self.rank,
            modulus: m,
            values: self.values.iter().map(|&v| v / pl).collect(),
        })
    }

    /// Rebuilds the table at another modulus by mapping raw values.
    pub fn map_values(&self, modulus: Modulus, mut f: impl FnMut(u64) -> u64) -> Cochain {
        Cochain {
            degree: self.degree,
            order: self.order,
            rank: self.rank,
            modulus,
            values: self.values.iter().map(|&v| modulus.reduce_u64(f(v))).collect(),
        }
    }

    pub fn raw_values(&self) -> &[u64] {
        &self.values
    }

    /// True when every value lies in `p^l * module`.
    pub fn values_in_layer(&self, l: u32) -> bool {
        if l == 0 {
            return true;
        }
        if l >= self.modulus.exp() {
            return self.is_zero();
        }
        let pl = self.modulus.pow_p(l);
        self.values.iter().all(|&v| v % pl == 0)
    }
}

/// All tuples over `0..order` of the given length, in lexicographic order.
pub fn tuples(order: usize, len: usize) -> impl Iterator<Item = Vec<u16>> {
    let total = order.pow(len as u32);
    (0..total).map(move |mut idx| {
        let mut t = vec![0u16; len];
        for slot in (0..len).rev() {
            t[slot] = (idx % order) as u16;
            idx /= order;
        }
        t
    })
}

/// The coboundary operator.
pub fn coboundary(gm: &GroupModule, c: &Cochain) -> Cochain {
    let n = c.degree;
    Cochain::from_fn(gm, n + 1, |tuple| coboundary_value(gm, c, tuple))
}

fn coboundary_value(gm: &GroupModule, c: &Cochain, tuple: &[u16]) -> Vec<u64> {
    let m = gm.modulus();
    let n = c.degree;
    debug_assert_eq!(tuple.len(), n + 1);
    let mut acc = c.get(&tuple[1..]).to_vec();
    let mut sign_neg = true;
    let mut merged = Vec::with_capacity(n);
    for i in 1..=n {
        merged.clear();
        merged.extend_from_slice(&tuple[..i - 1]);
        merged.push(gm.group.mul(tuple[i - 1], tuple[i]));
        merged.extend_from_slice(&tuple[i + 1..]);
        let term = c.get(&merged);
        for (a, &t) in acc.iter_mut().zip(term) {
            *a = if sign_neg { m.sub(*a, t) } else { m.add(*a, t) };
        }
        sign_neg = !sign_neg;
    }
    let acted = gm.act(c.get(&tuple[..n]), tuple[n]);
    for (a, &t) in acc.iter_mut().zip(&acted) {
        *a = if sign_neg { m.sub(*a, t) } else { m.add(*a, t) };
    }
    acc
}

/// Streaming cocycle test; returns the first tuple with nonzero coboundary.
pub fn cocycle_defect(gm: &GroupModule, c: &Cochain) -> Option<Vec<u16>> {
    let id = gm.group.identity();
    for tuple in tuples(gm.order(), c.degree + 1) {
        if tuple.contains(&id) {
            continue;
        }
        if coboundary_value(gm, c, &tuple).iter().any(|&v| v != 0) {
            return Some(tuple);
        }
    }
    None
}

/// The left action of the group on cochains:
/// `γ^g(g_1, ..., g_n) = γ(g_1^g, ..., g_n^g)^{g^{-1}}`.
pub fn act(gm: &GroupModule, c: &Cochain, g: u16) -> Cochain {
    let ginv = gm.group.inv(g);
    Cochain::from_fn(gm, c.degree, |tuple| {
        let conj: Vec<u16> = tuple.iter().map(|&t| gm.group.conj(t, g)).collect();
        gm.act(c.get(&conj), ginv)
    })
}

/// The coboundary `λ_m : l ↦ [m, l] = m^l - m` of a module element.
pub fn lambda(gm: &GroupModule, m_el: &[u64]) -> Cochain {
    let m = gm.modulus();
    Cochain::from_fn(gm, 1, |tuple| {
        let moved = gm.act(m_el, tuple[0]);
        moved.iter().zip(m_el).map(|(&a, &b)| m.sub(a, b)).collect()
    })
}

/// Restriction of a cochain along a subgroup embedding.
pub fn res(c: &Cochain, subm: &SubgroupModule) -> Cochain {
    Cochain::from_fn(&subm.gm, c.degree, |tuple| {
        let parent_tuple: Vec<u16> = tuple.iter().map(|&t| subm.embed[t as usize]).collect();
        c.get(&parent_tuple).to_vec()
    })
}

/// Flat coordinates for cochains: tuples of nonidentity elements times the
/// module rank. Normalized cochains are exactly the vectors in this space.
#[derive(Clone, Debug)]
pub struct CochainSpace {
    pub order: usize,
    pub degree: usize,
    pub rank: usize,
    nonid: Vec<u16>,
    pos: Vec<usize>,
}

impl CochainSpace {
    pub fn new(gm: &GroupModule, degree: usize) -> CochainSpace {
        let id = gm.group.identity();
        let nonid: Vec<u16> = gm.group.elements().filter(|&g| g != id).collect();
        let mut pos = vec![usize::MAX; gm.order()];
        for (i, &g) in nonid.iter().enumerate() {
            pos[g as usize] = i;
        }
        CochainSpace { order: gm.order(), degree, rank: gm.rank(), nonid, pos }
    }

    pub fn dim(&self) -> usize {
        self.nonid.len().pow(self.degree as u32) * self.rank
    }

    pub fn nonid_tuples(&self) -> impl Iterator<Item = Vec<u16>> + '_ {
        let k = self.nonid.len();
        tuples(k, self.degree).map(move |t| t.iter().map(|&i| self.nonid[i as usize]).collect())
    }

    fn flat_index(&self, tuple: &[u16]) -> usize {
        let k = self.nonid.len();
        let mut idx = 0usize;
        for &t in tuple {
            idx = idx * k + self.pos[t as usize];
        }
        idx * self.rank
    }

    pub fn flatten(&self, c: &Cochain) -> Vec<u64> {
        let mut out = vec![0u64; self.dim()];
        for tuple in self.nonid_tuples() {
            let i = self.flat_index(&tuple);
            out[i..i + self.rank].copy_from_slice(c.get(&tuple));
        }
        out
    }

    pub fn unflatten(&self, gm: &GroupModule, flat: &[u64]) -> Cochain {
        assert_eq!(flat.len(), self.dim());
        Cochain::from_fn(gm, self.degree, |tuple| {
            let i = self.flat_index(tuple);
            flat[i..i + self.rank].to_vec()
        })
    }

    /// Matrix of the coboundary operator from this space to degree + 1.
    pub fn coboundary_matrix(&self, gm: &GroupModule) -> PModMatrix {
        let m = gm.modulus();
        let target = CochainSpace::new(gm, self.degree + 1);
        let mut mat = PModMatrix::zero(m, target.dim(), self.dim());
        let id = gm.group.identity();
        let n = self.degree;
        for tuple in target.nonid_tuples() {
            let row_base = target.flat_index(&tuple);
            // term 0: +γ(g_2, ..., g_{n+1})
            self.add_term(&mut mat, row_base, &tuple[1..], false, None, id, m);
            // middle terms: (−1)^i γ(..., g_i g_{i+1}, ...)
            let mut neg = true;
            for i in 1..=n {
                let mut merged = Vec::with_capacity(n);
                merged.extend_from_slice(&tuple[..i - 1]);
                merged.push(gm.group.mul(tuple[i - 1], tuple[i]));
                merged.extend_from_slice(&tuple[i + 1..]);
                self.add_term(&mut mat, row_base, &merged, neg, None, id, m);
                neg = !neg;
            }
            // final term: (−1)^{n+1} γ(g_1..g_n)^{g_{n+1}}
            let mat_g = &gm.action.mats[tuple[n] as usize];
            self.add_term(&mut mat, row_base, &tuple[..n], neg, Some(mat_g), id, m);
        }
        mat
    }

    #[allow(clippy::too_many_arguments)]
    fn add_term(
        &self,
        mat: &mut PModMatrix,
        row_base: usize,
        tuple: &[u16],
        neg: bool,
        action: Option<&PModMatrix>,
        id: u16,
        m: Modulus,
    ) {
        if tuple.contains(&id) {
            return;
        }
        let col_base = self.flat_index(tuple);
        match action {
            None => {
                for k in 0..self.rank {
                    let delta = if neg { m.neg(1) } else { 1 };
                    let v = m.add(mat.get(row_base + k, col_base + k), delta);
                    mat.set(row_base + k, col_base + k, v);
                }
            }
            Some(a) => {
                // value_row_vector * A contributes A[k][r] to (row r, col k)
                for k in 0..self.rank {
                    for r in 0..self.rank {
                        let delta = if neg { m.neg(a.get(k, r)) } else { a.get(k, r) };
                        let v = m.add(mat.get(row_base + r, col_base + k), delta);
                        mat.set(row_base + r, col_base + k, v);
                    }
                }
            }
        }
    }
}

/// Cocycles, coboundaries and cohomology of a finite coefficient module.
#[derive(Clone, Debug)]
pub struct CocycleGroup {
    pub degree: usize,
    pub space: CochainSpace,
    /// The cocycle subgroup `Z^n` in flat coordinates.
    pub z: Span,
    /// The coboundary subgroup `B^n <= Z^n`.
    pub b: Span,
    /// The quotient `H^n = Z^n / B^n` with canonical representatives.
    pub h: Quotient,
    /// Smith form of the coboundary matrix out of degree n-1, for
    /// coboundary witnesses.
    delta_prev: Option<DiagonalForm>,
}

impl CocycleGroup {
    pub fn h_order(&self) -> u64 {
        self.h.order()
    }

    pub fn h_invariants(&self) -> Vec<u64> {
        self.h.invariants()
    }

    pub fn z_order_exp(&self) -> u64 {
        self.z.order_exp()
    }

    pub fn b_order_exp(&self) -> u64 {
        self.b.order_exp()
    }

    /// Canonical transversal of `B^n` in `Z^n`, as cochains.
    pub fn transversal(&self, gm: &GroupModule, cap: u64) -> Vec<Cochain> {
        self.h.transversal(cap).iter().map(|flat| self.space.unflatten(gm, flat)).collect()
    }

    /// Is the given cocycle a coboundary? Returns a witness cochain of one
    /// degree lower when it is.
    pub fn coboundary_witness(&self, gm: &GroupModule, c: &Cochain) -> Option<Cochain> {
        let target = self.space.flatten(c);
        let prev = self.delta_prev.as_ref()?;
        let x = prev.solve(&target)?;
        let prev_space = CochainSpace::new(gm, self.degree - 1);
        Some(prev_space.unflatten(gm, &x))
    }
}

/// Computes `Z^n`, `B^n` and `H^n` for a finite coefficient module.
pub fn cocycle_group(gm: &GroupModule, n: usize) -> Result<CocycleGroup> {
    if n == 0 {
        return Err(Error::Shape("cocycle groups start at degree 1".into()));
    }
    let space = CochainSpace::new(gm, n);
    let m = gm.modulus();
    let delta_n = smith_normal_form(&space.coboundary_matrix(gm));
    let z_gens: Vec<Vec<u64>> = delta_n.kernel().into_iter().map(|(g, _)| g).collect();
    let z = Span::from_gens(m, space.dim(), z_gens);

    // B^n: image of the coboundary from degree n-1. Degree 0 cochains are
    // module elements; their coboundaries span the same subgroup as λ_m.
    let (b_gens, delta_prev) = if n == 1 {
        let mut gens = Vec::new();
        for k in 0..gm.rank() {
            let mut e = vec![0u64; gm.rank()];
            e[k] = 1;
            gens.push(space.flatten(&lambda(gm, &e)));
        }
        (gens, None)
    } else {
        let prev_space = CochainSpace::new(gm, n - 1);
        let prev_mat = prev_space.coboundary_matrix(gm);
        let d = smith_normal_form(&prev_mat);
        let mut gens = Vec::new();
        for j in 0..prev_space.dim() {
            let mut e = vec![0u64; prev_space.dim()];
            e[j] = 1;
            gens.push(prev_mat.col_apply(&e));
        }
        (gens, Some(d))
    };
    let b = Span::from_gens(m, space.dim(), b_gens);
    let h = z.quotient(&b);
    Ok(CocycleGroup { degree: n, space, z, b, h, delta_prev })
}

/// Cohomology with coefficients in the full lattice `T ≅ Z_p^d`, computed
/// at working precision with a certification margin: divisor exponents
/// must stay clear of the top `margin` digits, and the abelian invariants
/// must agree when everything is recomputed at a higher precision.
#[derive(Clone, Debug)]
pub struct TCohomology {
    pub degree: usize,
    pub space: CochainSpace,
    /// Free basis of `Z^n(G, T)` at working precision.
    pub z_basis: Vec<Vec<u64>>,
    /// `B^n` expressed in z-basis coefficients.
    pub h: Quotient,
    /// Representatives of the `H^n` classes, as flat cochain vectors.
    pub h_reps: Vec<Vec<u64>>,
    /// Certified solver for coboundary witnesses (`Δ_{n-1} x = target`).
    witness_solver: ZpSolver,
    /// Certified solver for z-basis coordinates.
    coords_solver: ZpSolver,
}

impl TCohomology {
    pub fn h_order(&self) -> u64 {
        self.h.order()
    }

    pub fn h_invariants(&self) -> Vec<u64> {
        self.h.invariants()
    }

    /// Exponent of `H^n` as a power of p.
    pub fn h_exponent_exp(&self) -> u32 {
        self.h.exps.iter().copied().max().unwrap_or(0)
    }

    /// Canonical transversal `T^n(G, T)` of `B^n` in `Z^n` (one cochain per
    /// cohomology class), at working precision.
    pub fn transversal(&self, gm: &GroupModule, cap: u64) -> Vec<Cochain> {
        let m = gm.modulus();
        let mut out = vec![vec![0u64; self.space.dim()]];
        for (rep, &e) in self.h_reps.iter().zip(&self.h.exps) {
            let count = m.pow_p(e);
            assert!(out.len() as u64 * count <= cap);
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
        out.into_iter().map(|flat| self.space.unflatten(gm, &flat)).collect()
    }

    /// Certified test for `c ∈ B^n(G, T)`, with a witness of degree n-1.
    pub fn coboundary_witness(&self, gm: &GroupModule, c: &Cochain) -> Result<Option<Cochain>> {
        let target = self.space.flatten(c);
        match self.witness_solver.solve(&target)? {
            None => Ok(None),
            Some(x) => {
                let prev_space = CochainSpace::new(gm, self.degree - 1);
                Ok(Some(prev_space.unflatten(gm, &x)))
            }
        }
    }

    /// Certified test for membership in `Z^n(G, T)` (the free lattice part,
    /// i.e. the cochain is a cocycle exactly over `T`).
    pub fn z_coordinates(&self, c: &Cochain) -> Result<Option<Vec<u64>>> {
        let target = self.space.flatten(c);
        self.coords_solver.solve(&target)
    }
}

/// A solver for `M x = b` whose Smith form has been certified: all divisor
/// exponents are either below `N - margin` (exact) or equal to `N` (zero).
#[derive(Clone, Debug)]
pub struct ZpSolver {
    diag: DiagonalForm,
    margin: u32,
}

impl ZpSolver {
    pub fn new(mat: &PModMatrix, margin: u32) -> Result<ZpSolver> {
        let diag = smith_normal_form(mat);
        let n = mat.modulus.exp();
        for &e in &diag.exps {
            if e < n && e + margin >= n {
                return Err(Error::PrecisionUnstable(format!(
                    "divisor exponent {e} within margin {margin} of precision {n}"
                )));
            }
        }
        Ok(ZpSolver { diag, margin })
    }

    /// `Ok(Some(x))` with a canonical solution, `Ok(None)` when certified
    /// unsolvable over `Z_p`, `Err` when the residue lands in the gray zone.
    pub fn solve(&self, b: &[u64]) -> Result<Option<Vec<u64>>> {
        let m = self.diag.modulus;
        let n = m.exp();
        let lb = self.diag.left.col_apply(b);
        let k = self.diag.exps.len();
        let mut y = vec![0u64; self.diag.cols];
        for (i, &lbi) in lb.iter().enumerate() {
            let e = if i < k { self.diag.exps[i] } else { n };
            if e < n {
                let pe = m.pow_p(e);
                if lbi % pe != 0 {
                    return Ok(None);
                }
                y[i] = lbi / pe;
            } else {
                // a zero row over T: the target digit must vanish exactly
                let v = m.valuation(lbi);
                if v >= n {
                    // zero at working precision: accept
                } else if v + self.margin >= n {
                    return Err(Error::PrecisionUnstable(format!(
                        "residue valuation {v} within margin {} of precision {n}",
                        self.margin
                    )));
                } else {
                    return Ok(None);
                }
            }
        }
        Ok(Some(self.diag.right.col_apply(&y)))
    }
}

/// Computes `Z^n(G, T)`, `B^n(G, T)` and `H^n(G, T)` over the infinite
/// lattice at the precision carried by `gm`, with stability rechecks at
/// `bump` extra digits.
pub fn t_cohomology(gm: &GroupModule, n: usize, margin: u32, bump: u32) -> Result<TCohomology> {
    let low = t_cohomology_once(gm, n, margin)?;
    let hi_gm = {
        let m = gm.modulus();
        let hi = m.with_exp(m.exp() + bump)?;
        GroupModule { group: gm.group.clone(), action: raise_action(&gm.action, hi) }
    };
    let hi = t_cohomology_once(&hi_gm, n, margin)?;
    if low.h.invariants() != hi.h.invariants() || low.z_basis.len() != hi.z_basis.len() {
        return Err(Error::PrecisionUnstable(format!(
            "H^{n} invariants changed under precision bump: {:?} vs {:?}",
            low.h.invariants(),
            hi.h.invariants()
        )));
    }
    Ok(low)
}

/// The exact kernel over `Z_p` of a certified linear system, as a span at
/// the working precision. The system is rebuilt at `N + e_max` to strip
/// mod-p^N kernel shadows, so the returned generators are truncations of
/// lattice kernel elements.
#[allow(clippy::too_many_arguments)]
pub fn certified_lattice_kernel(
    modulus: Modulus,
    margin: u32,
    build: impl Fn(Modulus) -> Result<PModMatrix>,
) -> Result<Vec<Vec<u64>>> {
    let nexp = modulus.exp();
    let diag = smith_normal_form(&build(modulus)?);
    let mut e_max = 0;
    for &e in &diag.exps {
        if e < nexp && e + margin >= nexp {
            return Err(Error::PrecisionUnstable(format!(
                "kernel divisor exponent {e} too close to precision {nexp}"
            )));
        }
        if e < nexp {
            e_max = e_max.max(e);
        }
    }
    let zero_count =
        diag.exps.iter().filter(|&&e| e == nexp).count() + (diag.cols - diag.exps.len());
    if e_max == 0 {
        let mut basis = Vec::new();
        for (i, &e) in diag.exps.iter().enumerate() {
            if e == nexp {
                basis.push(diag.right.col(i));
            }
        }
        for j in diag.exps.len()..diag.cols {
            basis.push(diag.right.col(j));
        }
        return Ok(basis);
    }
    let hi = modulus.with_exp(nexp + e_max)?;
    let diag_hi = smith_normal_form(&build(hi)?);
    let mut basis = Vec::new();
    for (i, &e) in diag_hi.exps.iter().enumerate() {
        if e == hi.exp() {
            basis.push(diag_hi.right.col(i).iter().map(|&v| modulus.reduce_u64(v)).collect());
        }
    }
    for j in diag_hi.exps.len()..diag_hi.cols {
        basis.push(diag_hi.right.col(j).iter().map(|&v| modulus.reduce_u64(v)).collect());
    }
    if basis.len() != zero_count {
        return Err(Error::PrecisionUnstable(format!(
            "kernel rank changed between precisions {nexp} and {}",
            hi.exp()
        )));
    }
    Ok(basis)
}

/// Free part of the centralizer `C_T(L)` of a subgroup acting on the
/// lattice, i.e. the exact fixed points over `Z_p` at working precision.
pub fn lattice_centralizer(gm: &GroupModule, sub: &Subgroup, margin: u32) -> Result<Span> {
    let d = gm.rank();
    let nonid: Vec<u16> = sub.nonid(&gm.group).collect();
    if nonid.is_empty() {
        return Ok(Span::full(gm.modulus(), d));
    }
    let action = gm.action.clone();
    let gens = certified_lattice_kernel(gm.modulus(), margin, move |m| {
        let act = raise_action(&action, m);
        let mut mat = PModMatrix::zero(m, d * nonid.len(), d);
        for (bi, &l_el) in nonid.iter().enumerate() {
            let a = &act.mats[l_el as usize];
            for r in 0..d {
                for c in 0..d {
                    let mut v = a.get(r, c);
                    if r == c {
                        v = m.sub(v, 1);
                    }
                    mat.set(bi * d + c, r, v);
                }
            }
        }
        Ok(mat)
    })?;
    Ok(Span::from_gens(gm.modulus(), d, gens))
}

/// Raising an action to a higher precision is only possible when the
/// matrices are exact integers small enough to be faithful; in this crate
/// actions are always given by exact integer data, so re-reducing the
/// canonical lift is correct.
pub(crate) fn raise_action(action: &PModuleAction, hi: Modulus) -> PModuleAction {
    let mats = action
        .mats
        .iter()
        .map(|m| {
            let mut out = PModMatrix::zero(hi, m.rows, m.cols);
            for r in 0..m.rows {
                for c in 0..m.cols {
                    // lift residues symmetrically so -1 stays -1
                    let v = m.get(r, c);
                    let half = m.modulus.value() / 2;
                    let signed = if v > half {
                        hi.reduce_i128(v as i128 - m.modulus.value() as i128)
                    } else {
                        v
                    };
                    out.set(r, c, signed);
                }
            }
            out
        })
        .collect();
    PModuleAction { modulus: hi, rank: action.rank, mats }
}

fn t_cohomology_once(gm: &GroupModule, n: usize, margin: u32) -> Result<TCohomology> {
    let m = gm.modulus();
    let nexp = m.exp();
    let space = CochainSpace::new(gm, n);
    let delta_n_mat = space.coboundary_matrix(gm);
    let diag = smith_normal_form(&delta_n_mat);
    // certified read of the divisor structure
    let mut e_max = 0;
    for &e in &diag.exps {
        if e < nexp && e + margin >= nexp {
            return Err(Error::PrecisionUnstable(format!(
                "Z^{n} divisor exponent {e} too close to precision {nexp}"
            )));
        }
        if e < nexp {
            e_max = e_max.max(e);
        }
    }
    // Free basis of the kernel over Z_p. The zero-divisor columns of the
    // Smith form at precision N may carry junk of valuation >= N - e_max
    // (kernel elements mod p^N that do not lift to the lattice), so the
    // basis is extracted at precision N + e_max and truncated back.
    let z_basis: Vec<Vec<u64>> = if e_max == 0 {
        let mut basis = Vec::new();
        for (i, &e) in diag.exps.iter().enumerate() {
            if e == nexp {
                basis.push(diag.right.col(i));
            }
        }
        for j in diag.exps.len()..space.dim() {
            basis.push(diag.right.col(j));
        }
        basis
    } else {
        let hi = m.with_exp(nexp + e_max)?;
        let gm_hi = GroupModule { group: gm.group.clone(), action: raise_action(&gm.action, hi) };
        let space_hi = CochainSpace::new(&gm_hi, n);
        let diag_hi = smith_normal_form(&space_hi.coboundary_matrix(&gm_hi));
        let mut basis = Vec::new();
        for (i, &e) in diag_hi.exps.iter().enumerate() {
            if e == hi.exp() {
                basis.push(diag_hi.right.col(i).iter().map(|&v| m.reduce_u64(v)).collect());
            }
        }
        for j in diag_hi.exps.len()..space_hi.dim() {
            basis.push(diag_hi.right.col(j).iter().map(|&v| m.reduce_u64(v)).collect());
        }
        let expected = diag.exps.iter().filter(|&&e| e == nexp).count()
            + (space.dim() - diag.exps.len());
        if basis.len() != expected {
            return Err(Error::PrecisionUnstable(format!(
                "Z^{n} rank changed between precisions {nexp} and {}",
                hi.exp()
            )));
        }
        basis
    };

    // B^n generators and their coordinates in the z-basis
    let b_gens: Vec<Vec<u64>> = if n == 1 {
        (0..gm.rank())
            .map(|k| {
                let mut e = vec![0u64; gm.rank()];
                e[k] = 1;
                space.flatten(&lambda(gm, &e))
            })
            .collect()
    } else {
        let prev_space = CochainSpace::new(gm, n - 1);
        let prev_mat = prev_space.coboundary_matrix(gm);
        (0..prev_space.dim())
            .map(|j| {
                let mut e = vec![0u64; prev_space.dim()];
                e[j] = 1;
                prev_mat.col_apply(&e)
            })
            .collect()
    };
    let s = z_basis.len();
    let coords_solver = {
        let mut mat = PModMatrix::zero(m, space.dim(), s.max(1));
        for (j, g) in z_basis.iter().enumerate() {
            for (i, &v) in g.iter().enumerate() {
                mat.set(i, j, v);
            }
        }
        ZpSolver::new(&mat, margin)?
    };
    let mut rel_rows = Vec::new();
    for bg in &b_gens {
        match coords_solver.solve(bg)? {
            Some(c) => rel_rows.push(c),
            None => {
                return Err(Error::PrecisionUnstable(
                    "coboundary not expressible in the certified cocycle basis".into(),
                ))
            }
        }
    }
    // H^n = Z_p^s / lattice(rel_rows), computed as a span quotient
    let whole = Span::full(m, s.max(1));
    let sub = Span::from_gens(m, s.max(1), rel_rows);
    let h = if s == 0 {
        Quotient { modulus: m, dim: 0, exps: Vec::new(), reps: Vec::new() }
    } else {
        whole.quotient(&sub)
    };
    // certify finiteness: every invariant exponent well below precision
    for &e in &h.exps {
        if e + margin >= nexp {
            return Err(Error::PrecisionUnstable(format!(
                "H^{n} invariant p^{e} too close to precision {nexp}; H must be finite"
            )));
        }
    }
    // representatives in flat coordinates, canonicalized modulo B^n
    let b_span = Span::from_gens(m, space.dim(), b_gens.clone());
    let h_reps: Vec<Vec<u64>> = h
        .reps
        .iter()
        .map(|coeffs| {
            let mut v = vec![0u64; space.dim()];
            for (j, zb) in z_basis.iter().enumerate() {
                for (i, &zv) in zb.iter().enumerate() {
                    v[i] = m.add(v[i], m.mul(coeffs[j], zv));
                }
            }
            b_span.reduce(&v)
        })
        .collect();

    // witness solver for B^n membership
    let witness_solver = if n == 1 {
        // direct λ system: columns indexed by module coordinates
        let mut mat = PModMatrix::zero(m, space.dim(), gm.rank());
        for k in 0..gm.rank() {
            let mut e = vec![0u64; gm.rank()];
            e[k] = 1;
            let col = space.flatten(&lambda(gm, &e));
            for (i, &v) in col.iter().enumerate() {
                mat.set(i, k, v);
            }
        }
        ZpSolver::new(&mat, margin)?
    } else {
        let prev_space = CochainSpace::new(gm, n - 1);
        let prev_mat = prev_space.coboundary_matrix(gm);
        ZpSolver::new(&prev_mat, margin)?
    };

    Ok(TCohomology { degree: n, space, z_basis, h, h_reps, witness_solver, coords_solver })
}
