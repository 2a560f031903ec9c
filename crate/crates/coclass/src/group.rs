//! Finite p-groups by multiplication table, subgroup machinery, and the
//! module structure of the translation lattice.

use crate::abelian::Span;
use crate::error::{Error, Result};
use crate::padic::{Modulus, PModMatrix};
use crate::par;
use std::sync::Arc;

/// A finite p-group given by its full multiplication table.
#[derive(Clone, Debug)]
pub struct FiniteGroup {
    order: usize,
    prime: u64,
    table: Vec<u16>,
    inv: Vec<u16>,
    identity: u16,
    labels: Option<Vec<String>>,
}

impl FiniteGroup {
    /// Builds a group from a row-major table `table[a * order + b] = a * b`.
    ///
    /// Identity and inverses are always verified; associativity is checked
    /// via generators (it suffices to check `g(xy) = (gx)y` for `g` in a
    /// generating set).
    pub fn from_table(table: Vec<u16>, labels: Option<Vec<String>>) -> Result<Arc<FiniteGroup>> {
        let order = (table.len() as f64).sqrt() as usize;
        if order * order != table.len() || order == 0 {
            return Err(Error::InvalidGroup("table is not square".into()));
        }
        if table.iter().any(|&v| v as usize >= order) {
            return Err(Error::InvalidGroup("table entry out of range".into()));
        }
        // identity: the unique e with e*x = x*e = x for all x
        let mut identity = None;
        for e in 0..order {
            let ok = (0..order)
                .all(|x| table[e * order + x] == x as u16 && table[x * order + e] == x as u16);
            if ok {
                identity = Some(e as u16);
                break;
            }
        }
        let identity =
            identity.ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let mut inv = vec![u16::MAX; order];
        for a in 0..order {
            let b = (0..order).find(|&b| {
                table[a * order + b] == identity && table[b * order + a] == identity
            });
            match b {
                Some(b) => inv[a] = b as u16,
                None => {
                    return Err(Error::InvalidGroup(format!("element {a} has no inverse")));
                }
            }
        }
        let prime = smallest_prime_factor(order as u64);
        if !is_prime_power(order as u64, prime) {
            return Err(Error::InvalidGroup(format!("order {order} is not a prime power")));
        }
        let g = FiniteGroup { order, prime, table, inv, identity, labels };
        g.check_associativity()?;
        Ok(Arc::new(g))
    }

    fn check_associativity(&self) -> Result<()> {
        // grow a generating set greedily, then use it for Light's test
        let mut gens: Vec<u16> = Vec::new();
        let mut generated = vec![false; self.order];
        generated[self.identity as usize] = true;
        for x in 0..self.order as u16 {
            if !generated[x as usize] {
                gens.push(x);
                // close under multiplication
                let mut frontier: Vec<u16> =
                    (0..self.order as u16).filter(|&y| generated[y as usize]).collect();
                let mut seen = generated.clone();
                while let Some(y) = frontier.pop() {
                    for &g in &gens {
                        for z in [self.mul(y, g), self.mul(g, y)] {
                            if !seen[z as usize] {
                                seen[z as usize] = true;
                                frontier.push(z);
                            }
                        }
                    }
                }
                generated = seen;
            }
        }
        for &g in &gens {
            for x in 0..self.order as u16 {
                for y in 0..self.order as u16 {
                    if self.mul(g, self.mul(x, y)) != self.mul(self.mul(g, x), y) {
                        return Err(Error::InvalidGroup(format!(
                            "associativity fails at ({g}, {x}, {y})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    /// log_p of the order.
    pub fn log_order(&self) -> u32 {
        let mut n = self.order as u64;
        let mut m = 0;
        while n > 1 {
            n /= self.prime;
            m += 1;
        }
        m
    }

    pub fn identity(&self) -> u16 {
        self.identity
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        self.table[a as usize * self.order + b as usize]
    }

    #[inline]
    pub fn inv(&self, a: u16) -> u16 {
        self.inv[a as usize]
    }

    /// `x^g = g^{-1} x g`.
    #[inline]
    pub fn conj(&self, x: u16, g: u16) -> u16 {
        self.mul(self.mul(self.inv(g), x), g)
    }

    pub fn pow(&self, a: u16, mut k: u64) -> u16 {
        let mut acc = self.identity;
        let mut base = a;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    pub fn element_order(&self, a: u16) -> u64 {
        let mut x = a;
        let mut n = 1;
        while x != self.identity {
            x = self.mul(x, a);
            n += 1;
        }
        n
    }

    pub fn elements(&self) -> impl Iterator<Item = u16> + '_ {
        0..self.order as u16
    }

    pub fn label(&self, a: u16) -> String {
        match &self.labels {
            Some(l) => l[a as usize].clone(),
            None => format!("g{a}"),
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn table(&self) -> &[u16] {
        &self.table
    }

    /// All elementary abelian subgroups, including the trivial one, in
    /// canonical order: by size, then lexicographically by element list.
    ///
    /// Enumeration generates-and-closes over elements of order p rather
    /// than walking the full subset lattice.
    pub fn elementary_abelian_subgroups(self: &Arc<Self>) -> Vec<Subgroup> {
        let p = self.prime;
        let invs: Vec<u16> = self
            .elements()
            .filter(|&x| x != self.identity && self.element_order(x) == p)
            .collect();
        let mut found: std::collections::BTreeSet<Vec<u16>> = std::collections::BTreeSet::new();
        found.insert(vec![self.identity]);
        let mut frontier: Vec<Vec<u16>> = vec![vec![self.identity]];
        while !frontier.is_empty() {
            let batch: Vec<Vec<u16>> = std::mem::take(&mut frontier);
            let extension_lists = par::map_collect(batch, |set| {
                let mut exts = Vec::new();
                for &x in &invs {
                    if set.binary_search(&x).is_ok() {
                        continue;
                    }
                    // x must commute with every member
                    if set.iter().all(|&y| self.mul(x, y) == self.mul(y, x)) {
                        let mut bigger: Vec<u16> = Vec::with_capacity(set.len() * p as usize);
                        for &y in &set {
                            let mut xk = self.identity;
                            for _ in 0..p {
                                bigger.push(self.mul(y, xk));
                                xk = self.mul(xk, x);
                            }
                        }
                        bigger.sort_unstable();
                        bigger.dedup();
                        exts.push(bigger);
                    }
                }
                exts
            });
            for exts in extension_lists {
                for e in exts {
                    if found.insert(e.clone()) {
                        frontier.push(e);
                    }
                }
            }
        }
        let mut out: Vec<Vec<u16>> = found.into_iter().collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        out.into_iter().map(|elements| Subgroup { elements }).collect()
    }

    /// All subgroups of a small group, by breadth-first closure.
    pub fn all_subgroups(self: &Arc<Self>, cap: usize) -> Result<Vec<Subgroup>> {
        if self.order > cap {
            return Err(Error::CapExceeded { order: self.order as u64, cap: cap as u64 });
        }
        let mut found: std::collections::BTreeSet<Vec<u16>> = std::collections::BTreeSet::new();
        found.insert(vec![self.identity]);
        let mut frontier = vec![vec![self.identity]];
        while let Some(set) = frontier.pop() {
            for x in self.elements() {
                if set.binary_search(&x).is_ok() {
                    continue;
                }
                let closed = self.close(&{
                    let mut s = set.clone();
                    s.push(x);
                    s
                });
                if found.insert(closed.clone()) {
                    frontier.push(closed);
                }
            }
        }
        let mut out: Vec<Vec<u16>> = found.into_iter().collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(out.into_iter().map(|elements| Subgroup { elements }).collect())
    }

    fn close(&self, gens: &[u16]) -> Vec<u16> {
        let mut seen = vec![false; self.order];
        seen[self.identity as usize] = true;
        let mut frontier = vec![self.identity];
        while let Some(y) = frontier.pop() {
            for &g in gens {
                let z = self.mul(y, g);
                if !seen[z as usize] {
                    seen[z as usize] = true;
                    frontier.push(z);
                }
            }
        }
        (0..self.order as u16).filter(|&x| seen[x as usize]).collect()
    }
}

fn smallest_prime_factor(n: u64) -> u64 {
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return d;
        }
        d += 1;
    }
    n
}

fn is_prime_power(mut n: u64, p: u64) -> bool {
    if n == 1 {
        return true;
    }
    while n.is_multiple_of(p) {
        n /= p;
    }
    n == 1
}

/// A subgroup as a sorted element index set; the sorted list is the
/// canonical identity used across the whole pipeline.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Subgroup {
    pub elements: Vec<u16>,
}

impl Subgroup {
    pub fn trivial(g: &FiniteGroup) -> Subgroup {
        Subgroup { elements: vec![g.identity()] }
    }

    pub fn whole(g: &FiniteGroup) -> Subgroup {
        Subgroup { elements: (0..g.order() as u16).collect() }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// log_p of the order for a subgroup of a p-group.
    pub fn log_order(&self, p: u64) -> u32 {
        let mut n = self.elements.len() as u64;
        let mut m = 0;
        while n > 1 {
            n /= p;
            m += 1;
        }
        m
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    pub fn contains(&self, x: u16) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    pub fn is_subgroup_of(&self, other: &Subgroup) -> bool {
        self.elements.iter().all(|&x| other.contains(x))
    }

    /// `L^g` as a canonical subgroup.
    pub fn conjugate(&self, g: &FiniteGroup, by: u16) -> Subgroup {
        let mut elements: Vec<u16> = self.elements.iter().map(|&x| g.conj(x, by)).collect();
        elements.sort_unstable();
        Subgroup { elements }
    }

    /// Nonidentity elements.
    pub fn nonid<'a>(&'a self, g: &FiniteGroup) -> impl Iterator<Item = u16> + 'a {
        let e = g.identity();
        self.elements.iter().copied().filter(move |&x| x != e)
    }
}

/// The action of a finite group on `(Z/p^N)^d` by matrices; module elements
/// are row vectors acted on the right, so `A_{gh} = A_g A_h`.
#[derive(Clone, Debug)]
pub struct PModuleAction {
    pub modulus: Modulus,
    pub rank: usize,
    /// One matrix per group element, indexed by element.
    pub mats: Vec<PModMatrix>,
}

impl PModuleAction {
    pub fn new(group: &FiniteGroup, modulus: Modulus, mats: Vec<PModMatrix>) -> Result<Self> {
        let rank = mats.first().map_or(0, |m| m.rows);
        for m in &mats {
            if m.rows != rank || m.cols != rank {
                return Err(Error::Shape("action matrices must be square of equal rank".into()));
            }
        }
        if mats.len() != group.order() {
            return Err(Error::Shape("one action matrix per group element required".into()));
        }
        let action = PModuleAction { modulus, rank, mats };
        // homomorphism property and trivial identity action
        let id = PModMatrix::identity(modulus, rank);
        if action.mats[group.identity() as usize] != id {
            return Err(Error::InvalidGroup("identity must act trivially".into()));
        }
        for a in group.elements() {
            for b in group.elements() {
                let ab = group.mul(a, b);
                let prod = action.mats[a as usize].mat_mul(&action.mats[b as usize]);
                if prod != action.mats[ab as usize] {
                    return Err(Error::InvalidGroup(format!(
                        "action is not a homomorphism at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(action)
    }

    #[inline]
    pub fn apply(&self, v: &[u64], g: u16) -> Vec<u64> {
        self.mats[g as usize].row_apply(v)
    }

    pub fn reduce_to(&self, modulus: Modulus) -> PModuleAction {
        PModuleAction {
            modulus,
            rank: self.rank,
            mats: self.mats.iter().map(|m| m.reduce_to(modulus)).collect(),
        }
    }
}

/// The uniserial series data of the translation module.
#[derive(Clone, Debug)]
pub struct UniserialData {
    /// Generators of the series terms `T_0 > T_1 > ...` at working precision.
    pub series: Vec<Span>,
    /// Depth of the computed series.
    pub levels: usize,
}

/// Verifies that the series `T_0 = T`, `T_{i+1} = [T_i, S]` is uniserial:
/// every step has index exactly p, and `p T_i = T_{i+d}`.
pub fn verify_uniserial(
    group: &FiniteGroup,
    action: &PModuleAction,
    levels: usize,
) -> Result<UniserialData> {
    let m = action.modulus;
    let d = action.rank;
    let mut series = vec![Span::full(m, d)];
    for i in 0..levels {
        let current = &series[i];
        // [T_i, S]: spanned by g (A_w - 1) for generators g and all w
        let mut gens = Vec::new();
        for g in current.gens() {
            for w in group.elements() {
                let moved = action.apply(g, w);
                let comm: Vec<u64> =
                    moved.iter().zip(g.iter()).map(|(&a, &b)| m.sub(a, b)).collect();
                gens.push(comm);
            }
        }
        let next = Span::from_gens(m, d, gens);
        let drop = current.order_exp() as i64 - next.order_exp() as i64;
        if drop != 1 {
            return Err(Error::NotUniserial(format!(
                "index p^{drop} at step {i}, expected p^1"
            )));
        }
        series.push(next);
    }
    // p T_i = T_{i+d} on the computed range
    for i in 0..levels.saturating_sub(d) {
        let scaled = series[i].map(m, |g| g.iter().map(|&v| m.mul(v, m.p())).collect());
        if scaled != series[i + d] {
            return Err(Error::NotUniserial(format!("p T_{i} != T_{}", i + d)));
        }
    }
    Ok(UniserialData { series, levels })
}

/// Generators of the centralizer of `L` inside a given submodule:
/// `{ n : n (A_l - 1) = 0 for all l in L }` intersected with the submodule.
pub fn module_centralizer(
    group: &FiniteGroup,
    action: &PModuleAction,
    l: &Subgroup,
    submodule: &Span,
) -> Span {
    let m = action.modulus;
    let d = action.rank;
    let nonid: Vec<u16> = l.nonid(group).collect();
    if nonid.is_empty() {
        return submodule.clone();
    }
    // stacked system: n * (A_l - 1) = 0 for each l; row vector n as column
    // unknowns means we transpose the action matrices
    let mut mat = PModMatrix::zero(m, d * nonid.len(), d);
    for (bi, &l_el) in nonid.iter().enumerate() {
        let a = &action.mats[l_el as usize];
        for r in 0..d {
            for c in 0..d {
                let mut v = a.get(r, c);
                if r == c {
                    v = m.sub(v, 1);
                }
                // row vector times matrix: columns of the system are n's coordinates
                mat.set(bi * d + c, r, v);
            }
        }
    }
    let kernel = crate::padic::kernel_basis(&mat);
    let fixed = Span::from_gens(m, d, kernel.into_iter().map(|(v, _)| v.entries).collect());
    fixed.intersect(submodule)
}


#[cfg(test)]
mod tests {
    use super::test_groups::*;
    use super::*;
    use crate::padic::Modulus;

    #[test]
    fn trivial_group_has_one_ea_subgroup() {
        let g = cyclic(1);
        let subs = g.elementary_abelian_subgroups();
        assert_eq!(subs.len(), 1);
        assert!(subs[0].is_trivial());
    }

    #[test]
    fn klein_ea_subgroups() {
        let g = klein();
        let subs = g.elementary_abelian_subgroups();
        // trivial, three C2's, and the whole group
        assert_eq!(subs.len(), 5);
        assert_eq!(subs.iter().filter(|s| s.order() == 2).count(), 3);
        assert_eq!(subs.last().unwrap().order(), 4);
    }

    #[test]
    fn cyclic_four_ea_subgroups() {
        let g = cyclic(4);
        let subs = g.elementary_abelian_subgroups();
        // trivial and the unique C2
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[1].elements, vec![0, 2]);
    }

    #[test]
    fn ea_enumeration_matches_brute_force_on_small_groups() {
        for g in [klein(), cyclic(8), cyclic(9)] {
            let subs = g.elementary_abelian_subgroups();
            let brute = brute_force_ea(&g);
            let got: Vec<Vec<u16>> = subs.into_iter().map(|s| s.elements).collect();
            assert_eq!(got, brute);
        }
    }

    fn brute_force_ea(g: &Arc<FiniteGroup>) -> Vec<Vec<u16>> {
        // all subsets closed under products that are elementary abelian;
        // only feasible for tiny orders
        let n = g.order();
        assert!(n <= 16);
        let p = g.prime();
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) {
            if mask & (1 << g.identity()) == 0 {
                continue;
            }
            let set: Vec<u16> = (0..n as u16).filter(|&i| mask & (1 << i) != 0).collect();
            let closed = set
                .iter()
                .all(|&a| set.iter().all(|&b| set.binary_search(&g.mul(a, b)).is_ok()));
            if !closed {
                continue;
            }
            let ea = set.iter().all(|&a| {
                g.pow(a, p) == g.identity()
                    && set.iter().all(|&b| g.mul(a, b) == g.mul(b, a))
            });
            if ea {
                out.push(set);
            }
        }
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        out
    }

    #[test]
    fn conjugate_of_enumerated_subgroup_is_canonical() {
        let g = klein();
        let subs = g.elementary_abelian_subgroups();
        for s in &subs {
            for w in g.elements() {
                let c = s.conjugate(&g, w);
                assert!(subs.contains(&c));
            }
        }
    }

    fn inversion_action(g: &Arc<FiniteGroup>, n: u32) -> PModuleAction {
        // Klein group acting on Z/2^n: a and ab invert, b fixes
        let m = Modulus::new(2, n).unwrap();
        let minus = PModMatrix::from_i64_rows(m, &[vec![-1]]);
        let plus = PModMatrix::identity(m, 1);
        PModuleAction::new(g, m, vec![plus.clone(), minus.clone(), plus, minus]).unwrap()
    }

    #[test]
    fn uniserial_series_of_the_pro2_dihedral_module() {
        let g = klein();
        let action = inversion_action(&g, 10);
        let data = verify_uniserial(&g, &action, 6).unwrap();
        // T_i = <2^i>
        for (i, span) in data.series.iter().enumerate() {
            assert!(span.contains(&[1u64 << i]));
            assert_eq!(span.order_exp(), 10 - i as u64);
        }
    }

    #[test]
    fn trivial_action_is_not_uniserial() {
        let g = cyclic(2);
        let m = Modulus::new(2, 8).unwrap();
        let id = PModMatrix::identity(m, 1);
        let action = PModuleAction::new(&g, m, vec![id.clone(), id]).unwrap();
        assert!(matches!(verify_uniserial(&g, &action, 3), Err(Error::NotUniserial(_))));
    }

    #[test]
    fn rank_two_split_action_is_not_uniserial() {
        // diagonal action fixing a complement: [T_0, S] has index p^2 or 1
        let g = cyclic(2);
        let m = Modulus::new(2, 8).unwrap();
        let id = PModMatrix::identity(m, 2);
        let diag = PModMatrix::from_i64_rows(m, &[vec![-1, 0], vec![0, 1]]);
        let action = PModuleAction::new(&g, m, vec![id, diag]).unwrap();
        assert!(matches!(verify_uniserial(&g, &action, 3), Err(Error::NotUniserial(_))));
    }

    #[test]
    fn centralizer_of_inverting_generator_is_two_torsion() {
        let g = klein();
        let n = 5;
        let action = inversion_action(&g, n);
        let m = action.modulus;
        let full = Span::full(m, 1);
        let a = Subgroup { elements: vec![0, 1] };
        let c = module_centralizer(&g, &action, &a, &full);
        // solutions of -2x = 0 mod 2^n: the 2-torsion subgroup
        assert_eq!(c.order(), 2);
        assert!(c.contains(&[1u64 << (n - 1)]));
        // trivial subgroup centralizes everything
        let t = Subgroup::trivial(&g);
        assert_eq!(module_centralizer(&g, &action, &t, &full).order(), full.order());
        // whole group: same two-torsion here
        let whole = Subgroup::whole(&g);
        assert_eq!(module_centralizer(&g, &action, &whole, &full).order(), 2);
    }
}
