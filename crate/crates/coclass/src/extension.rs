//! Extensions of a finite group by a finite module via a 2-cocycle, and
//! the complement machinery that classifies splittings.
//!
//! Elements are kept as pairs `(w, m)` with `w` in the base group and `m`
//! a module vector; they are never flattened to a single index, because
//! the whole downstream calculus manipulates the coordinates directly.
//! Realizing a full multiplication table is only done on demand, under a
//! cap, for the brute-force oracle.

use crate::abelian::Span;
use crate::cochain::{cocycle_defect, lambda, res, restrict_module, Cochain, GroupModule};
use crate::error::{Error, Result};
use crate::group::{FiniteGroup, Subgroup};
use crate::padic::{solve_mod, Modulus, PModMatrix, PModVector};
use std::collections::HashMap;
use std::sync::Arc;

/// An element `(w, m)` of an extension group.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ExtElem {
    pub w: u16,
    pub m: Vec<u64>,
}

impl ExtElem {
    pub fn new(w: u16, m: Vec<u64>) -> Self {
        ExtElem { w, m }
    }
}

/// The group `Ext(τ)` on pairs `(w, m)` with multiplication
/// `(g, m)(h, n) = (gh, m^h + n + τ(g, h))`.
#[derive(Clone, Debug)]
pub struct ExtensionGroup {
    pub base: GroupModule,
    pub tau: Cochain,
}

impl ExtensionGroup {
    /// Builds the extension, verifying that `τ` is a normalized 2-cocycle
    /// (equivalently, that the multiplication is associative).
    pub fn new(base: GroupModule, tau: Cochain) -> Result<ExtensionGroup> {
        if tau.degree != 2 {
            return Err(Error::Shape("extension cocycle must have degree 2".into()));
        }
        if tau.modulus != base.modulus() {
            return Err(Error::ModulusMismatch("τ must live over the module".into()));
        }
        if let Some(tuple) = cocycle_defect(&base, &tau) {
            return Err(Error::NotACocycle(tuple.iter().map(|&t| t as usize).collect()));
        }
        Ok(ExtensionGroup { base, tau })
    }

    pub fn order(&self) -> u64 {
        let module_order =
            (self.base.modulus().value() as u128).pow(self.base.rank() as u32) as u64;
        self.base.order() as u64 * module_order
    }

    pub fn identity(&self) -> ExtElem {
        ExtElem::new(self.base.group.identity(), vec![0; self.base.rank()])
    }

    pub fn mul(&self, a: &ExtElem, b: &ExtElem) -> ExtElem {
        let m = self.base.modulus();
        let w = self.base.group.mul(a.w, b.w);
        let moved = self.base.act(&a.m, b.w);
        let t = self.tau.get(&[a.w, b.w]);
        let mvec: Vec<u64> =
            moved.iter().zip(&b.m).zip(t).map(|((&x, &y), &z)| m.add(m.add(x, y), z)).collect();
        ExtElem::new(w, mvec)
    }

    pub fn inv(&self, a: &ExtElem) -> ExtElem {
        let m = self.base.modulus();
        let winv = self.base.group.inv(a.w);
        let moved = self.base.act(&a.m, winv);
        let t = self.tau.get(&[a.w, winv]);
        let mvec: Vec<u64> = moved.iter().zip(t).map(|(&x, &z)| m.neg(m.add(x, z))).collect();
        ExtElem::new(winv, mvec)
    }

    /// `x^g = g^{-1} x g`.
    pub fn conj(&self, x: &ExtElem, g: &ExtElem) -> ExtElem {
        let gi = self.inv(g);
        self.mul(&self.mul(&gi, x), g)
    }

    /// The natural epimorphism onto the base group.
    pub fn project(&self, x: &ExtElem) -> u16 {
        x.w
    }

    /// Materializes the multiplication table, for the brute-force oracle.
    pub fn realize(&self, cap: u64) -> Result<RealizedExtension> {
        let order = self.order();
        if order > cap {
            return Err(Error::CapExceeded { order, cap });
        }
        let m = self.base.modulus();
        let rank = self.base.rank();
        // enumerate module vectors in odometer order
        let mut elems = Vec::with_capacity(order as usize);
        for w in self.base.group.elements() {
            let mut v = vec![0u64; rank];
            loop {
                elems.push(ExtElem::new(w, v.clone()));
                let mut carry = true;
                for x in v.iter_mut() {
                    *x += 1;
                    if *x < m.value() {
                        carry = false;
                        break;
                    }
                    *x = 0;
                }
                if carry {
                    break;
                }
            }
        }
        let index: HashMap<ExtElem, u16> =
            elems.iter().enumerate().map(|(i, e)| (e.clone(), i as u16)).collect();
        let n = elems.len();
        let mut table = vec![0u16; n * n];
        for (i, a) in elems.iter().enumerate() {
            for (j, b) in elems.iter().enumerate() {
                table[i * n + j] = index[&self.mul(a, b)];
            }
        }
        let labels = elems.iter().map(|e| label_ext(&self.base, e)).collect();
        let group = FiniteGroup::from_table(table, Some(labels))?;
        Ok(RealizedExtension { modulus: m, group, elems, index })
    }
}

/// Renders `(w, m)` as a word: the base label followed by `t_i^{e}` powers.
pub fn label_ext(base: &GroupModule, e: &ExtElem) -> String {
    let m = base.modulus();
    let mut s = if e.w == base.group.identity() { String::new() } else { base.group.label(e.w) };
    for (i, &v) in e.m.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let name = if base.rank() == 1 { "t".to_string() } else { format!("t{}", i + 1) };
        // symmetric representative for readability: t^-1 rather than t^(p^N - 1)
        let half = m.value() / 2;
        let exp: i64 = if v > half { v as i64 - m.value() as i64 } else { v as i64 };
        if exp == 1 {
            s.push_str(&name);
        } else {
            s.push_str(&format!("{name}^{exp}"));
        }
    }
    if s.is_empty() {
        "1".into()
    } else {
        s
    }
}

/// A realized extension: the finite group plus both directions of the
/// element correspondence.
#[derive(Clone, Debug)]
pub struct RealizedExtension {
    pub modulus: Modulus,
    pub group: Arc<FiniteGroup>,
    pub elems: Vec<ExtElem>,
    pub index: HashMap<ExtElem, u16>,
}

/// A complement to the module in an extension restricted over a subgroup,
/// stored as the section data `l ↦ m_l` with `c(l) = (l, m_l)`.
#[derive(Clone, Debug)]
pub struct Complement {
    /// Degree-1 cochain over the subgroup whose value at `l` is `m_l`.
    pub section: Cochain,
}

impl Complement {
    pub fn elements(&self, sub_order: usize) -> Vec<ExtElem> {
        (0..sub_order as u16).map(|l| ExtElem::new(l, self.section.get(&[l]).to_vec())).collect()
    }
}

/// Complements of the module in `Ext(res_L τ)`: one canonical base
/// complement plus the parametrization by `Z^1(L, M)`.
#[derive(Debug)]
pub struct ComplementFamily {
    /// The restricted module over `L` (with `L` realized as its own group).
    pub subm: crate::cochain::SubgroupModule,
    /// Canonical base complement `C`.
    pub base: Complement,
    /// `Z^1(L, M)` in flat coordinates, plus the coboundary subgroup.
    pub z1: crate::cochain::CocycleGroup,
}

impl ComplementFamily {
    /// The complement `C(δ)` for a cocycle `δ ∈ Z^1(L, M)`.
    pub fn complement(&self, delta: &Cochain) -> Complement {
        Complement { section: self.base.section.add(delta) }
    }

    /// Number of complements (= |Z^1|) and of module-conjugacy classes
    /// (= |H^1|).
    pub fn counts(&self) -> (u64, u64) {
        let p = self.subm.gm.modulus().p();
        (p.pow(self.z1.z_order_exp() as u32), self.z1.h_order())
    }

    /// A conjugating module element between `C(δ)` and `C(ρ)`, if they are
    /// conjugate: `m` with `δ - ρ = λ_m`.
    pub fn conjugating_witness(&self, delta: &Cochain, rho: &Cochain) -> Option<Vec<u64>> {
        let gm = &self.subm.gm;
        let diff = delta.sub(rho);
        // solve λ_m = diff for m
        let space = crate::cochain::CochainSpace::new(gm, 1);
        let mut mat = PModMatrix::zero(gm.modulus(), space.dim(), gm.rank());
        for k in 0..gm.rank() {
            let mut e = vec![0u64; gm.rank()];
            e[k] = 1;
            let col = space.flatten(&lambda(gm, &e));
            for (i, &v) in col.iter().enumerate() {
                mat.set(i, k, v);
            }
        }
        let b = PModVector { modulus: gm.modulus(), entries: space.flatten(&diff) };
        solve_mod(&mat, &b).map(|v| v.entries)
    }
}

/// Computes the complements to the module in the restriction of an
/// extension over `L`, or `NoComplement` when `res_L τ` is not a
/// coboundary.
pub fn complements_of(ext: &ExtensionGroup, l: &Subgroup) -> Result<ComplementFamily> {
    let subm = restrict_module(&ext.base, l);
    let tau_l = res(&ext.tau, &subm);
    // base complement: canonical solution of Δ_1(section) = -τ_L
    let gm = &subm.gm;
    let space1 = crate::cochain::CochainSpace::new(gm, 1);
    let space2 = crate::cochain::CochainSpace::new(gm, 2);
    let delta1 = space1.coboundary_matrix(gm);
    let target = PModVector {
        modulus: gm.modulus(),
        entries: space2.flatten(&tau_l.neg()),
    };
    let section_flat = solve_mod(&delta1, &target).ok_or(Error::NoComplement)?;
    let section = space1.unflatten(gm, &section_flat.entries);
    let base = Complement { section };
    let z1 = crate::cochain::cocycle_group(gm, 1)?;
    Ok(ComplementFamily { subm, base, z1 })
}

/// Enumerates all complements to the module in a realized extension by
/// brute force: all closed sections over the base group. Exponential in
/// the number of base generators, usable for orders up to ~64.
pub fn brute_force_complements(ext: &ExtensionGroup, l: &Subgroup, cap: u64) -> Result<Vec<Vec<ExtElem>>> {
    let subm = restrict_module(&ext.base, l);
    let sub_gm = &subm.gm;
    let module_order = (sub_gm.modulus().value() as u128).pow(sub_gm.rank() as u32);
    let total = (module_order).pow(sub_gm.order() as u32 - 1);
    if total > cap as u128 {
        return Err(Error::CapExceeded { order: total as u64, cap });
    }
    // enumerate all sections l ↦ m_l (identity forced to 0), keep closed ones
    let nonid: Vec<u16> = (0..sub_gm.order() as u16)
        .filter(|&x| x != sub_gm.group.identity())
        .collect();
    let m = sub_gm.modulus();
    let rank = sub_gm.rank();
    let mut out = Vec::new();
    let mut assignment = vec![vec![0u64; rank]; nonid.len()];
    loop {
        // check closure of the candidate section
        let section = |x: u16| -> ExtElem {
            if x == sub_gm.group.identity() {
                ExtElem::new(subm.embed[x as usize], vec![0; rank])
            } else {
                let i = nonid.iter().position(|&y| y == x).unwrap();
                ExtElem::new(subm.embed[x as usize], assignment[i].clone())
            }
        };
        let closed = nonid.iter().chain([&sub_gm.group.identity()]).all(|&x| {
            nonid.iter().chain([&sub_gm.group.identity()]).all(|&y| {
                let xy = sub_gm.group.mul(x, y);
                ext.mul(&section(x), &section(y)) == section(xy)
            })
        });
        if closed {
            let mut c: Vec<ExtElem> =
                (0..sub_gm.order() as u16).map(section).collect();
            c.sort();
            out.push(c);
        }
        // odometer
        let mut done = true;
        'adv: for slot in assignment.iter_mut() {
            for x in slot.iter_mut() {
                *x += 1;
                if *x < m.value() {
                    done = false;
                    break 'adv;
                }
                *x = 0;
            }
        }
        if done {
            break;
        }
    }
    Ok(out)
}

/// The elementwise isomorphism `Ext(τ) -> Ext(σ)` induced by a cochain `ζ`
/// with `τ - σ = Δ-coboundary of ζ`: `(g, m) ↦ (g, m + ζ(g))`.
pub fn shift_iso(zeta: &Cochain, x: &ExtElem) -> ExtElem {
    let m = zeta.modulus;
    let z = zeta.get(&[x.w]);
    ExtElem::new(x.w, x.m.iter().zip(z).map(|(&a, &b)| m.add(a, b)).collect())
}

/// Centralizer span `C_{M}(L) = { n : [n, l] = 0 for all l }` of a
/// subgroup acting on the module, intersected with the full module.
pub fn module_centralizer_span(gm: &GroupModule, l: &Subgroup) -> Span {
    crate::group::module_centralizer(
        &gm.group,
        &gm.action,
        l,
        &Span::full(gm.modulus(), gm.rank()),
    )
}
