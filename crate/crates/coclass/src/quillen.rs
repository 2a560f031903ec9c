//! Quillen categories: the brute-force oracle on realized groups, the
//! semi-skeletons for a family member and for the pro-p group, liftings
//! and pushouts of morphisms, the two functors between the categories,
//! and equivalence checking.
//!
//! Morphism identity is the induced injection table, not the conjugating
//! element: conjugators are only well-defined modulo centralizer data, so
//! two elements induce the same morphism exactly when their element maps
//! agree.

use crate::abelian::Span;
use crate::cochain::{cocycle_defect, Cochain, CochainSpace, ZpSolver};
use crate::error::{Error, Result};
use crate::extension::{label_ext, ExtElem, ExtensionGroup, RealizedExtension};
use crate::family::{zeta_hat_t, FamilyBase, FamilyLevel, MARGIN};
use crate::padic::PModMatrix;
use crate::par;
use std::collections::BTreeMap;
use std::sync::Arc;

/// An object of a finite Quillen category, with its realized element set.
#[derive(Clone, Debug)]
pub struct CatObject {
    pub label: String,
    /// Sorted element list; the canonical identity of the object.
    pub elements: Vec<ExtElem>,
    pub data: ObjectData,
}

#[derive(Clone, Debug)]
pub enum ObjectData {
    /// `C_L(γ̄)` in the pro-p group: subgroup index in Ł and transversal index.
    S { li: usize, t1_index: usize },
    /// `C_{L,x}(γ) × O`: indices into the level's subgroup data.
    Gx { sd: usize, w1: usize, o: usize },
    /// A brute-force object: index into the elementary abelian list.
    Brute { index: usize },
}

/// A morphism: the induced injection, plus one witness conjugator.
#[derive(Clone, Debug)]
pub struct Morphism {
    pub src: usize,
    pub dst: usize,
    /// Sorted by source element.
    pub map: Vec<(ExtElem, ExtElem)>,
    pub witness: Witness,
}

#[derive(Clone, Debug)]
pub enum Witness {
    /// A conjugator in the finite group `G_x` (or a realized group).
    Gx(ExtElem),
    /// A conjugator `(w, t)` in the pro-p group; `t` is certified modulo
    /// `p^{cert_exp}` and well-defined modulo the centralizer coset.
    S { w: u16, t: Vec<u64>, cert_exp: u32 },
}

impl Morphism {
    pub fn is_identity(&self) -> bool {
        self.src == self.dst && self.map.iter().all(|(a, b)| a == b)
    }
}

/// A finite category of elementary abelian subgroups.
pub struct Category {
    pub objects: Vec<CatObject>,
    /// Morphisms per ordered object pair; absent key means empty Hom set.
    pub homs: BTreeMap<(usize, usize), Vec<Morphism>>,
}

/// Identifier of a morphism within a category.
pub type MorId = (usize, usize, usize);

impl Category {
    pub fn hom(&self, src: usize, dst: usize) -> &[Morphism] {
        self.homs.get(&(src, dst)).map_or(&[], |v| v.as_slice())
    }

    pub fn morphism(&self, id: MorId) -> &Morphism {
        &self.homs[&(id.0, id.1)][id.2]
    }

    pub fn morphism_count(&self) -> usize {
        self.homs.values().map(|v| v.len()).sum()
    }

    pub fn all_ids(&self) -> Vec<MorId> {
        let mut out = Vec::new();
        for (&(s, d), v) in &self.homs {
            for i in 0..v.len() {
                out.push((s, d, i));
            }
        }
        out
    }

    /// Finds the morphism with the given induced map.
    pub fn find(&self, src: usize, dst: usize, map: &[(ExtElem, ExtElem)]) -> Option<MorId> {
        self.hom(src, dst).iter().position(|m| m.map == map).map(|i| (src, dst, i))
    }

    pub fn identity_id(&self, obj: usize) -> Result<MorId> {
        self.hom(obj, obj)
            .iter()
            .position(|m| m.is_identity())
            .map(|i| (obj, obj, i))
            .ok_or_else(|| Error::Shape(format!("object {obj} has no identity morphism")))
    }

    /// Composes two morphisms (diagram order: `f: A -> B`, then
    /// `g: B -> C`), looking the composite up in `Hom(A, C)`.
    pub fn compose(&self, f: MorId, g: MorId) -> Result<MorId> {
        let fm = self.morphism(f);
        let gm = self.morphism(g);
        if fm.dst != gm.src {
            return Err(Error::Shape("morphisms are not composable".into()));
        }
        let gmap: BTreeMap<&ExtElem, &ExtElem> = gm.map.iter().map(|(a, b)| (a, b)).collect();
        let mut map: Vec<(ExtElem, ExtElem)> = fm
            .map
            .iter()
            .map(|(a, b)| (a.clone(), (*gmap.get(b).expect("image outside target")).clone()))
            .collect();
        map.sort();
        self.find(fm.src, gm.dst, &map)
            .ok_or_else(|| Error::Shape("composite morphism missing from category".into()))
    }

    /// Verifies the category axioms exhaustively: identities, closure of
    /// composition, and associativity on composable triples.
    pub fn check_axioms(&self) -> Result<()> {
        for i in 0..self.objects.len() {
            self.identity_id(i)?;
        }
        let ids = self.all_ids();
        for &f in &ids {
            for &g in &ids {
                if f.1 != g.0 {
                    continue;
                }
                let fg = self.compose(f, g)?;
                for &h in &ids {
                    if g.1 != h.0 {
                        continue;
                    }
                    let gh = self.compose(g, h)?;
                    if self.compose(fg, h)? != self.compose(f, gh)? {
                        return Err(Error::Shape("composition is not associative".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Isomorphism classes of objects, each sorted, in canonical order.
    pub fn iso_classes(&self) -> Vec<Vec<usize>> {
        let n = self.objects.len();
        let mut class_of: Vec<Option<usize>> = vec![None; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            if class_of[i].is_some() {
                continue;
            }
            let c = classes.len();
            class_of[i] = Some(c);
            let mut members = vec![i];
            #[allow(clippy::needless_range_loop)]
            for j in (i + 1)..n {
                if class_of[j].is_none() && self.isomorphic(i, j) {
                    class_of[j] = Some(c);
                    members.push(j);
                }
            }
            classes.push(members);
        }
        classes
    }

    fn isomorphic(&self, a: usize, b: usize) -> bool {
        if a == b {
            return true;
        }
        let (Ok(ida), Ok(idb)) = (self.identity_id(a), self.identity_id(b)) else {
            return false;
        };
        for (fi, _f) in self.hom(a, b).iter().enumerate() {
            for (gi, _g) in self.hom(b, a).iter().enumerate() {
                let f = (a, b, fi);
                let g = (b, a, gi);
                if let (Ok(fg), Ok(gf)) = (self.compose(f, g), self.compose(g, f)) {
                    if fg == ida && gf == idb {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Smallest symmetric representative of `m` modulo the coset elements.
pub(crate) fn minimize_over_coset(
    modulus: crate::padic::Modulus,
    m: &[u64],
    coset: &[Vec<u64>],
) -> Vec<u64> {
    let value = modulus.value();
    let score = |v: &[u64]| -> (u64, Vec<i64>) {
        let sym: Vec<i64> = v
            .iter()
            .map(|&x| if x > value / 2 { x as i64 - value as i64 } else { x as i64 })
            .collect();
        (sym.iter().map(|&s| s.unsigned_abs()).sum(), sym)
    };
    let mut best = m.to_vec();
    let mut best_score = score(m);
    for c in coset {
        let cand: Vec<u64> = m.iter().zip(c).map(|(&a, &b)| modulus.add(a, b)).collect();
        let s = score(&cand);
        if s < best_score {
            best = cand;
            best_score = s;
        }
    }
    best
}

fn witness_rank(w: &Witness, modulus: u64) -> (u16, u64, Vec<i64>) {
    let (wi, m) = match w {
        Witness::Gx(g) => (g.w, g.m.as_slice()),
        Witness::S { w, t, .. } => (*w, t.as_slice()),
    };
    let sym: Vec<i64> = m
        .iter()
        .map(|&v| if v > modulus / 2 { v as i64 - modulus as i64 } else { v as i64 })
        .collect();
    (wi, sym.iter().map(|&s| s.unsigned_abs()).sum(), sym)
}

/// Inserts a morphism unless its induced map is already present; when it
/// is, keeps the witness with the smaller translation part (so displayed
/// conjugators match the example tables).
fn push_best(list: &mut Vec<Morphism>, m: Morphism, modulus: u64) {
    match list.iter_mut().find(|e| e.map == m.map) {
        None => list.push(m),
        Some(existing) => {
            if witness_rank(&m.witness, modulus) < witness_rank(&existing.witness, modulus) {
                existing.witness = m.witness;
            }
        }
    }
}

fn dedupe_push(homs: &mut BTreeMap<(usize, usize), Vec<Morphism>>, m: Morphism, modulus: u64) {
    push_best(homs.entry((m.src, m.dst)).or_default(), m, modulus);
}

/// The brute-force Quillen category of a realized finite group: all
/// elementary abelian subgroups, all conjugation-induced injections.
pub fn category_bruteforce(realized: &RealizedExtension, cap: u64) -> Result<Category> {
    let group = &realized.group;
    if group.order() as u64 > cap {
        return Err(Error::CapExceeded { order: group.order() as u64, cap });
    }
    let subgroups = group.elementary_abelian_subgroups();
    let objects: Vec<CatObject> = subgroups
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut elements: Vec<ExtElem> =
                s.elements.iter().map(|&e| realized.elems[e as usize].clone()).collect();
            elements.sort();
            let label = format!(
                "<{}>",
                s.elements
                    .iter()
                    .filter(|&&e| e != group.identity())
                    .map(|&e| group.label(e))
                    .collect::<Vec<_>>()
                    .join(",")
            );
            CatObject { label, elements, data: ObjectData::Brute { index: i } }
        })
        .collect();

    // all conjugation maps per ordered pair, deduplicated by induced map
    let pairs: Vec<(usize, usize)> = (0..objects.len())
        .flat_map(|i| (0..objects.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| subgroups[i].order() <= subgroups[j].order())
        .collect();
    let chunks = par::map_collect(pairs, |(i, j)| {
        let a = &subgroups[i];
        let b = &subgroups[j];
        let mut found: Vec<Morphism> = Vec::new();
        for g in group.elements() {
            if !a.elements.iter().all(|&x| b.contains(group.conj(x, g))) {
                continue;
            }
            let mut map: Vec<(ExtElem, ExtElem)> = a
                .elements
                .iter()
                .map(|&x| {
                    (
                        realized.elems[x as usize].clone(),
                        realized.elems[group.conj(x, g) as usize].clone(),
                    )
                })
                .collect();
            map.sort();
            push_best(
                &mut found,
                Morphism {
                    src: i,
                    dst: j,
                    map,
                    witness: Witness::Gx(realized.elems[g as usize].clone()),
                },
                realized.modulus.value(),
            );
        }
        ((i, j), found)
    });
    let mut homs = BTreeMap::new();
    for (_, found) in chunks {
        for m in found {
            dedupe_push(&mut homs, m, realized.modulus.value());
        }
    }
    Ok(Category { objects, homs })
}

fn complement_word(level: &FamilyLevel, sd: usize, w1: usize) -> String {
    let data = &level.subgroup_data[sd];
    let gamma = &data.w1[w1].gamma;
    let section = &data.t_lx;
    let nonid: Vec<u16> = data.l.nonid(&level.gm.group).collect();
    // label by a minimal generating set of the elementary abelian L
    let mut gens: Vec<u16> = Vec::new();
    let mut span: Vec<u16> = vec![level.gm.group.identity()];
    for &l in &nonid {
        if span.contains(&l) {
            continue;
        }
        gens.push(l);
        let mut bigger = Vec::new();
        for &s in &span {
            bigger.push(s);
            bigger.push(level.gm.group.mul(s, l));
        }
        bigger.sort_unstable();
        bigger.dedup();
        span = bigger;
    }
    let words: Vec<String> = gens
        .iter()
        .map(|&lp| {
            let li = data.l.elements.iter().position(|&e| e == lp).unwrap() as u16;
            let m = level
                .gm
                .modulus();
            let value: Vec<u64> = section
                .get(&[li])
                .iter()
                .zip(gamma.get(&[li]))
                .map(|(&a, &b)| m.add(a, b))
                .collect();
            label_ext(&level.gm, &ExtElem::new(lp, value))
        })
        .collect();
    words.join(",")
}

fn o_label(level: &FamilyLevel, o: &Span) -> String {
    if o.is_zero() {
        return String::new();
    }
    if *o == level.a_x {
        return "O".into();
    }
    let words: Vec<String> = o
        .gens()
        .iter()
        .map(|g| label_ext(&level.gm, &ExtElem::new(level.gm.group.identity(), g.clone())))
        .collect();
    format!("<{}>", words.join(","))
}

/// The semi-skeleton of the Quillen category of a family member `G_x`.
pub fn skeleton_gx(level: &FamilyLevel) -> Result<Category> {
    let mut objects = Vec::new();
    for (sdi, sd) in level.subgroup_data.iter().enumerate() {
        for (w1i, w1el) in sd.w1.iter().enumerate() {
            for (oi, o) in sd.o_subgroups.iter().enumerate() {
                let mut elements = Vec::new();
                for (li, &lp) in sd.l.elements.iter().enumerate() {
                    let base: Vec<u64> = sd
                        .t_lx
                        .get(&[li as u16])
                        .iter()
                        .zip(w1el.gamma.get(&[li as u16]))
                        .map(|(&a, &b)| level.gm.modulus().add(a, b))
                        .collect();
                    for ov in o.elements(1 << 12) {
                        let m: Vec<u64> = base
                            .iter()
                            .zip(&ov)
                            .map(|(&a, &b)| level.gm.modulus().add(a, b))
                            .collect();
                        elements.push(ExtElem::new(lp, m));
                    }
                }
                elements.sort();
                let comp = complement_word(level, sdi, w1i);
                let ol = o_label(level, o);
                let label = match (comp.is_empty() || sd.l.is_trivial(), ol.is_empty()) {
                    (true, true) => "<1>".to_string(),
                    (true, false) => ol.clone(),
                    (false, true) => format!("<{comp}>"),
                    (false, false) => format!("<{comp}>x{ol}"),
                };
                objects.push(CatObject {
                    label,
                    elements,
                    data: ObjectData::Gx { sd: sdi, w1: w1i, o: oi },
                });
            }
        }
    }

    let mut homs = BTreeMap::new();
    let pair_list: Vec<(usize, usize)> = (0..objects.len())
        .flat_map(|i| (0..objects.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| objects[i].elements.len() <= objects[j].elements.len())
        .collect();
    let results = par::map_collect(pair_list, |(i, j)| {
        morphisms_between(level, &objects, i, j).map(|m| ((i, j), m))
    });
    let modulus = level.gm.modulus().value();
    for r in results {
        let (_, found) = r?;
        for m in found {
            dedupe_push(&mut homs, m, modulus);
        }
    }
    Ok(Category { objects, homs })
}

/// All morphisms `A -> B` in the semi-skeleton, by the conjugation
/// criterion: enumerate `w` with `L^w ≤ H` and `O^w ≤ U`, then solve the
/// affine condition on the module part, modulo the centralizer.
fn morphisms_between(
    level: &FamilyLevel,
    objects: &[CatObject],
    i: usize,
    j: usize,
) -> Result<Vec<Morphism>> {
    let ObjectData::Gx { sd: sdi, w1: w1i, o: oi } = objects[i].data else {
        return Err(Error::Shape("not a skeleton object".into()));
    };
    let ObjectData::Gx { sd: sdj, w1: w1j, o: oj } = objects[j].data else {
        return Err(Error::Shape("not a skeleton object".into()));
    };
    let group = &level.gm.group;
    let m = level.gm.modulus();
    let rank = level.gm.rank();
    let ld = &level.subgroup_data[sdi];
    let hd = &level.subgroup_data[sdj];
    let o_span = &ld.o_subgroups[oi];
    let u_span = &hd.o_subgroups[oj];
    let gamma = &ld.w1[w1i].gamma;
    let sigma = &hd.w1[w1j].gamma;
    let mut found: Vec<Morphism> = Vec::new();

    for w in group.elements() {
        if !ld.l.conjugate(group, w).is_subgroup_of(&hd.l) {
            continue;
        }
        // O^w ≤ U
        let winv = group.inv(w);
        let o_moved = o_span.map(m, |g| level.gm.act(g, w));
        if !o_moved.gens().iter().all(|g| u_span.contains(g)) {
            continue;
        }
        let zeta_hat = level.zeta_hat_x(sdi, sdj, w)?;
        if cocycle_defect(&ld.subm.gm, &zeta_hat).is_some() {
            continue;
        }
        let pulled = level.pull_cochain(sdi, sdj, w, sigma);
        let c_w = zeta_hat.sub(&pulled).add(gamma);
        // solve: s (A_l - 1) ≡ c_w(l) mod U^{w^{-1}}, unknown s = m^{w^{-1}}
        let u_back = u_span.map(m, |g| level.gm.act(g, winv));
        let nonid: Vec<u16> = (0..ld.l.order() as u16)
            .filter(|&x| x != ld.subm.gm.group.identity())
            .collect();
        let u_gens = u_back.gens();
        let rows = nonid.len() * rank;
        let cols = rank + u_gens.len() * nonid.len();
        let mut mat = PModMatrix::zero(m, rows.max(1), cols);
        let mut rhs = vec![0u64; rows.max(1)];
        for (bi, &l_sub) in nonid.iter().enumerate() {
            let l_parent = ld.subm.embed[l_sub as usize];
            let a_l = &level.gm.action.mats[l_parent as usize];
            for k in 0..rank {
                let row = bi * rank + k;
                for sj in 0..rank {
                    let mut v = a_l.get(sj, k);
                    if sj == k {
                        v = m.sub(v, 1);
                    }
                    mat.set(row, sj, v);
                }
                for (ui, ug) in u_gens.iter().enumerate() {
                    mat.set(row, rank + bi * u_gens.len() + ui, ug[k]);
                }
                rhs[row] = c_w.get(&[l_sub])[k];
            }
        }
        let diag = crate::padic::smith_normal_form(&mat);
        let Some(sol) = diag.solve(&rhs) else { continue };
        let s0: Vec<u64> = sol[..rank].to_vec();
        // homogeneous solutions: the s-components of the kernel
        let s_space = Span::from_gens(
            m,
            rank,
            diag.kernel().into_iter().map(|(g, _)| g[..rank].to_vec()).collect(),
        );
        let classes = s_space.quotient(&ld.centralizer);
        let cent_moved = ld.centralizer.map(m, |c| level.gm.act(c, w));
        let coset = cent_moved.elements(1 << 10);
        for rep in classes.transversal(1 << 12) {
            let s: Vec<u64> = s0.iter().zip(&rep).map(|(&a, &b)| m.add(a, b)).collect();
            let conj_m = level.gm.act(&s, w);
            let g = ExtElem::new(w, conj_m.clone());
            // induced map, and the defensive membership check
            let mut map = Vec::with_capacity(objects[i].elements.len());
            let mut ok = true;
            for x in &objects[i].elements {
                let y = level.ext.conj(x, &g);
                if objects[j].elements.binary_search(&y).is_err() {
                    ok = false;
                    break;
                }
                map.push((x.clone(), y));
            }
            if !ok {
                debug_assert!(false, "solved conjugator fails membership");
                continue;
            }
            map.sort();
            // canonical witness: minimize the translation part over the
            // centralizer coset (the morphism is unchanged)
            let g_min = ExtElem::new(w, minimize_over_coset(m, &conj_m, &coset));
            push_best(
                &mut found,
                Morphism { src: i, dst: j, map, witness: Witness::Gx(g_min) },
                m.value(),
            );
        }
    }
    Ok(found)
}

/// The S-side category: a semi-skeleton of the Quillen category of the
/// pro-p group, with objects `C_L(γ̄)` over the transversals of Ł.
pub struct SCategory {
    pub cat: Category,
    /// The pro-p group as an extension over the lattice at precision.
    pub ext: ExtensionGroup,
    /// Lookup from (Ł index, transversal index) to object index.
    pub index: BTreeMap<(usize, usize), usize>,
}

pub fn skeleton_s(base: &Arc<FamilyBase>) -> Result<SCategory> {
    let gm = &base.gm_t;
    let group = &gm.group;
    let ext = ExtensionGroup::new(gm.clone(), base.rho_t.clone())?;
    let mut objects = Vec::new();
    let mut index = BTreeMap::new();
    for (li, sg) in base.subgroups.iter().enumerate() {
        for (ti, gamma) in sg.t1.iter().enumerate() {
            let mut elements = Vec::new();
            for (lidx, &lp) in sg.l.elements.iter().enumerate() {
                let v: Vec<u64> = sg
                    .t_l
                    .get(&[lidx as u16])
                    .iter()
                    .zip(gamma.get(&[lidx as u16]))
                    .map(|(&a, &b)| gm.modulus().add(a, b))
                    .collect();
                elements.push(ExtElem::new(lp, v));
            }
            elements.sort();
            let label = if sg.l.is_trivial() {
                "<1>".to_string()
            } else {
                // label a minimal generating set of the elementary abelian L
                let mut gens: Vec<u16> = Vec::new();
                let mut span: Vec<u16> = vec![group.identity()];
                for lp in sg.l.nonid(group) {
                    if span.contains(&lp) {
                        continue;
                    }
                    gens.push(lp);
                    let mut bigger: Vec<u16> =
                        span.iter().flat_map(|&s| [s, group.mul(s, lp)]).collect();
                    bigger.sort_unstable();
                    bigger.dedup();
                    span = bigger;
                }
                let words: Vec<String> = gens
                    .iter()
                    .map(|&lp| {
                        let lidx =
                            sg.l.elements.iter().position(|&e| e == lp).unwrap() as u16;
                        let v: Vec<u64> = sg
                            .t_l
                            .get(&[lidx])
                            .iter()
                            .zip(gamma.get(&[lidx]))
                            .map(|(&a, &b)| gm.modulus().add(a, b))
                            .collect();
                        label_ext(gm, &ExtElem::new(lp, v))
                    })
                    .collect();
                format!("<{}>", words.join(","))
            };
            index.insert((li, ti), objects.len());
            objects.push(CatObject {
                label,
                elements,
                data: ObjectData::S { li, t1_index: ti },
            });
        }
    }

    let mut homs = BTreeMap::new();
    let modulus = gm.modulus().value();
    for i in 0..objects.len() {
        for j in 0..objects.len() {
            let found = s_morphisms_between(base, &objects, i, j)?;
            for m in found {
                dedupe_push(&mut homs, m, modulus);
            }
        }
    }
    Ok(SCategory { cat: Category { objects, homs }, ext, index })
}

fn s_morphisms_between(
    base: &FamilyBase,
    objects: &[CatObject],
    i: usize,
    j: usize,
) -> Result<Vec<Morphism>> {
    let ObjectData::S { li, t1_index: ti } = objects[i].data else {
        return Err(Error::Shape("not an S object".into()));
    };
    let ObjectData::S { li: hi, t1_index: tj } = objects[j].data else {
        return Err(Error::Shape("not an S object".into()));
    };
    let gm = &base.gm_t;
    let group = &gm.group;
    let sg_l = &base.subgroups[li];
    let sg_h = &base.subgroups[hi];
    if sg_l.l.order() > sg_h.l.order() {
        return Ok(Vec::new());
    }
    let gamma = &sg_l.t1[ti];
    let sigma = &sg_h.t1[tj];
    let mut found: Vec<Morphism> = Vec::new();
    for w in group.elements() {
        if !sg_l.l.conjugate(group, w).is_subgroup_of(&sg_h.l) {
            continue;
        }
        let zeta_hat = zeta_hat_t(base, li, hi, w)?;
        // certified cocycle test over the lattice
        let defect = crate::cochain::coboundary(&sg_l.subm.gm, &zeta_hat);
        if !defect_is_zero(&defect)? {
            continue;
        }
        // pull σ back along l ↦ l^w
        let winv = group.inv(w);
        let mut h_pos = vec![u16::MAX; group.order()];
        for (p, &el) in sg_h.l.elements.iter().enumerate() {
            h_pos[el as usize] = p as u16;
        }
        let pulled = Cochain::from_fn(&sg_l.subm.gm, 1, |t| {
            let lp = sg_l.subm.embed[t[0] as usize];
            let lw = group.conj(lp, w);
            gm.act(sigma.get(&[h_pos[lw as usize]]), winv)
        });
        let target = zeta_hat.sub(&pulled).add(gamma);
        // solve λ_u = target over the lattice
        let space1 = CochainSpace::new(&sg_l.subm.gm, 1);
        let mut mat = PModMatrix::zero(gm.modulus(), space1.dim(), gm.rank());
        for k in 0..gm.rank() {
            let mut e = vec![0u64; gm.rank()];
            e[k] = 1;
            let col = space1.flatten(&crate::cochain::lambda(&sg_l.subm.gm, &e));
            for (r, &v) in col.iter().enumerate() {
                mat.set(r, k, v);
            }
        }
        let solver = ZpSolver::new(&mat, MARGIN)?;
        let Some(u) = solver.solve(&space1.flatten(&target))? else { continue };
        let t_witness = gm.act(&u, w);
        let cert_exp = gm.modulus().exp() - MARGIN;
        // induced map: pair elements along l ↦ l^w (exact over the lattice)
        let mut map = Vec::new();
        for (lidx, &lp) in sg_l.l.elements.iter().enumerate() {
            let lw = group.conj(lp, w);
            let hidx = h_pos[lw as usize];
            let src_v: Vec<u64> = sg_l
                .t_l
                .get(&[lidx as u16])
                .iter()
                .zip(gamma.get(&[lidx as u16]))
                .map(|(&a, &b)| gm.modulus().add(a, b))
                .collect();
            let dst_v: Vec<u64> = sg_h
                .t_l
                .get(&[hidx])
                .iter()
                .zip(sigma.get(&[hidx]))
                .map(|(&a, &b)| gm.modulus().add(a, b))
                .collect();
            map.push((ExtElem::new(lp, src_v), ExtElem::new(lw, dst_v)));
        }
        map.sort();
        push_best(
            &mut found,
            Morphism { src: i, dst: j, map, witness: Witness::S { w, t: t_witness, cert_exp } },
            gm.modulus().value(),
        );
    }
    Ok(found)
}

fn defect_is_zero(defect: &Cochain) -> Result<bool> {
    let m = defect.modulus;
    for &v in defect.raw_values() {
        if v == 0 {
            continue;
        }
        let val = m.valuation(v);
        if val + MARGIN >= m.exp() {
            return Err(Error::PrecisionUnstable(format!(
                "morphism defect valuation {val} at precision {}",
                m.exp()
            )));
        }
        return Ok(false);
    }
    Ok(true)
}

/// A lifting of a conjugator from `G_x` to the pro-p group: the element
/// `h = (w, m̄)` satisfying the lattice-level equation, plus the
/// decomposition `m = pro_x(m̄) + m̲`.
#[derive(Clone, Debug)]
pub struct Lifting {
    pub w: u16,
    /// `m̄` over the lattice at working precision.
    pub m_bar: Vec<u64>,
    /// `m̲ = m - pro_x(m̄)` at the level of `G_x`.
    pub m_under: Vec<u64>,
}

/// Lifts the morphism induced by `g` between two skeleton objects to the
/// pro-p group: solves `λ_{m̄}^w = ζ̂_{L,H,w} - σ̄^w_L + γ̄` over the
/// lattice. Requires `x ≥ x_0`.
pub fn lift_morphism(
    level: &FamilyLevel,
    cat: &Category,
    mor: &Morphism,
    x0: u32,
) -> Result<Lifting> {
    if level.x < x0 {
        return Err(Error::BelowX0 { x: level.x, x0 });
    }
    let Witness::Gx(g) = &mor.witness else {
        return Err(Error::Shape("expected a G_x morphism".into()));
    };
    let ObjectData::Gx { sd: sdi, w1: w1i, .. } = cat.objects[mor.src].data else {
        return Err(Error::Shape("expected skeleton objects".into()));
    };
    let ObjectData::Gx { sd: sdj, w1: w1j, .. } = cat.objects[mor.dst].data else {
        return Err(Error::Shape("expected skeleton objects".into()));
    };
    let base = &level.base;
    let ld = &level.subgroup_data[sdi];
    let hd = &level.subgroup_data[sdj];
    let gm = &base.gm_t;
    let group = &gm.group;
    let w = g.w;
    let zeta_hat = zeta_hat_t(base, ld.base_index, hd.base_index, w)?;
    let gamma_bar = &ld.w1[w1i].bar;
    let sigma_bar = &hd.w1[w1j].bar;
    let winv = group.inv(w);
    let mut h_pos = vec![u16::MAX; group.order()];
    for (p, &el) in base.subgroups[hd.base_index].l.elements.iter().enumerate() {
        h_pos[el as usize] = p as u16;
    }
    let sg_l = &base.subgroups[ld.base_index];
    let pulled = Cochain::from_fn(&sg_l.subm.gm, 1, |t| {
        let lp = sg_l.subm.embed[t[0] as usize];
        let lw = group.conj(lp, w);
        gm.act(sigma_bar.get(&[h_pos[lw as usize]]), winv)
    });
    let target = zeta_hat.sub(&pulled).add(gamma_bar);
    let space1 = CochainSpace::new(&sg_l.subm.gm, 1);
    let mut mat = PModMatrix::zero(gm.modulus(), space1.dim(), gm.rank());
    for k in 0..gm.rank() {
        let mut e = vec![0u64; gm.rank()];
        e[k] = 1;
        let col = space1.flatten(&crate::cochain::lambda(&sg_l.subm.gm, &e));
        for (r, &v) in col.iter().enumerate() {
            mat.set(r, k, v);
        }
    }
    let solver = ZpSolver::new(&mat, MARGIN)?;
    let u = solver.solve(&space1.flatten(&target))?.ok_or(Error::NotAMorphism)?;
    let m_bar = gm.act(&u, w);
    // residual check: λ_{m̄}^w must reproduce the target exactly
    let lam = crate::cochain::lambda(&sg_l.subm.gm, &u);
    if lam != target {
        return Err(Error::PrecisionUnstable("lifting residual is nonzero".into()));
    }
    let m_r = level.gm.modulus();
    let m_under: Vec<u64> =
        g.m.iter().zip(&m_bar).map(|(&a, &b)| m_r.sub(a, m_r.reduce_u64(b))).collect();
    Ok(Lifting { w, m_bar, m_under })
}

/// A functor between two finite categories, as explicit maps.
#[derive(Debug)]
pub struct FunctorData {
    pub object_map: Vec<usize>,
    pub morphism_map: BTreeMap<MorId, MorId>,
}

/// Checks that the data is a functor: identities and composition.
pub fn check_functor(src: &Category, dst: &Category, f: &FunctorData) -> Result<()> {
    for i in 0..src.objects.len() {
        let id_src = src.identity_id(i)?;
        let id_dst = dst.identity_id(f.object_map[i])?;
        if f.morphism_map[&id_src] != id_dst {
            return Err(Error::Shape(format!("identity of object {i} is not preserved")));
        }
    }
    for &a in &src.all_ids() {
        for &b in &src.all_ids() {
            if a.1 != b.0 {
                continue;
            }
            let ab = src.compose(a, b)?;
            let fa = f.morphism_map[&a];
            let fb = f.morphism_map[&b];
            let fab = dst.compose(fa, fb)?;
            if f.morphism_map[&ab] != fab {
                return Err(Error::Shape("composition is not preserved".into()));
            }
        }
    }
    Ok(())
}

/// The functor from the skeleton of `A_p(G_x)` to the S-side skeleton:
/// objects drop to their lattice parts, morphisms map to their liftings.
pub fn functor_fs(
    level: &FamilyLevel,
    gx: &Category,
    s: &SCategory,
    x0: u32,
) -> Result<FunctorData> {
    if level.x < x0 {
        return Err(Error::BelowX0 { x: level.x, x0 });
    }
    let mut object_map = Vec::with_capacity(gx.objects.len());
    for obj in &gx.objects {
        let ObjectData::Gx { sd, w1, .. } = obj.data else {
            return Err(Error::Shape("expected skeleton objects".into()));
        };
        let data = &level.subgroup_data[sd];
        let bar_index = data.w1[w1].bar_index;
        let li = data.base_index;
        let target = *s
            .index
            .get(&(li, bar_index))
            .ok_or_else(|| Error::Shape("lattice object missing from S skeleton".into()))?;
        object_map.push(target);
    }
    let mut morphism_map = BTreeMap::new();
    for id in gx.all_ids() {
        let mor = gx.morphism(id);
        // the lifting exists; the S-side morphism is determined by w
        let lift = lift_morphism(level, gx, mor, x0)?;
        let src = object_map[mor.src];
        let dst = object_map[mor.dst];
        let target = s
            .cat
            .hom(src, dst)
            .iter()
            .position(|m| match &m.witness {
                Witness::S { w, .. } => {
                    // same induced map on the quotient: conjugation by the
                    // witness agrees with conjugation by the lifting on L
                    let group = &level.gm.group;
                    s.cat.objects[src].elements.iter().all(|el| {
                        group.conj(el.w, *w) == group.conj(el.w, lift.w)
                    })
                }
                _ => false,
            })
            .map(|k| (src, dst, k))
            .ok_or(Error::NotAMorphism)?;
        morphism_map.insert(id, target);
    }
    Ok(FunctorData { object_map, morphism_map })
}

/// The pushout of a morphism witness from level x to level x + 1:
/// `ĝ = (w, pro_{x+1}(m̄) + mul(m̲))`.
pub fn pushout(next_level: &FamilyLevel, lift: &Lifting) -> ExtElem {
    let m_next = next_level.gm.modulus();
    let p = m_next.p();
    let m: Vec<u64> = lift
        .m_bar
        .iter()
        .zip(&lift.m_under)
        .map(|(&bar, &under)| m_next.add(m_next.reduce_u64(bar), m_next.reduce_u64(under * p)))
        .collect();
    ExtElem::new(lift.w, m)
}

/// The functor from the skeleton at level x to the skeleton at level x+1:
/// bijective on objects, with morphisms transported by pushouts.
pub fn functor_f(
    level: &FamilyLevel,
    next_level: &FamilyLevel,
    gx: &Category,
    gx_next: &Category,
    x0: u32,
) -> Result<FunctorData> {
    if level.x < x0 {
        return Err(Error::BelowX0 { x: level.x, x0 });
    }
    let m_next = next_level.gm.modulus();
    let p = m_next.p();
    // object map: gamma ↦ pro_{x+1}(γ̄) + mul(γ̲), O ↦ mul(O)
    let mut object_map = Vec::with_capacity(gx.objects.len());
    for obj in &gx.objects {
        let ObjectData::Gx { sd, w1, o } = obj.data else {
            return Err(Error::Shape("expected skeleton objects".into()));
        };
        let data = &level.subgroup_data[sd];
        let next_data = &next_level.subgroup_data[sd];
        if data.base_index != next_data.base_index {
            return Err(Error::Shape("subgroup lists differ between levels".into()));
        }
        let w1el = &data.w1[w1];
        let mul_under = w1el.under.map_values(m_next, |v| v.wrapping_mul(p));
        let target_w1 = next_data
            .w1
            .iter()
            .position(|cand| cand.bar_index == w1el.bar_index && cand.under == mul_under)
            .ok_or_else(|| Error::Shape("image gamma missing in next level".into()))?;
        let o_span = &data.o_subgroups[o];
        let mul_o = o_span.map(m_next, |g| g.iter().map(|&v| m_next.reduce_u64(v * p)).collect());
        let target_o = next_data
            .o_subgroups
            .iter()
            .position(|cand| *cand == mul_o)
            .ok_or_else(|| Error::Shape("image O missing in next level".into()))?;
        let target = gx_next
            .objects
            .iter()
            .position(|cand| match cand.data {
                ObjectData::Gx { sd: s2, w1: w2, o: o2 } => {
                    s2 == sd && w2 == target_w1 && o2 == target_o
                }
                _ => false,
            })
            .ok_or_else(|| Error::Shape("image object missing in next level".into()))?;
        object_map.push(target);
    }
    // object map must be a bijection
    {
        let mut seen = vec![false; gx_next.objects.len()];
        for &t in &object_map {
            if seen[t] {
                return Err(Error::Shape("object map is not injective".into()));
            }
            seen[t] = true;
        }
        if gx.objects.len() != gx_next.objects.len() {
            return Err(Error::Shape("object counts differ between levels".into()));
        }
    }

    let mut morphism_map = BTreeMap::new();
    for id in gx.all_ids() {
        let mor = gx.morphism(id);
        let lift = lift_morphism(level, gx, mor, x0)?;
        let g_hat = pushout(next_level, &lift);
        let src = object_map[mor.src];
        let dst = object_map[mor.dst];
        // induced map of ĝ on the image objects
        let mut map = Vec::new();
        let mut ok = true;
        for x in &gx_next.objects[src].elements {
            let y = next_level.ext.conj(x, &g_hat);
            if gx_next.objects[dst].elements.binary_search(&y).is_err() {
                ok = false;
                break;
            }
            map.push((x.clone(), y));
        }
        if !ok {
            return Err(Error::NotAMorphism);
        }
        map.sort();
        let target = gx_next.find(src, dst, &map).ok_or(Error::NotAMorphism)?;
        morphism_map.insert(id, target);
    }
    Ok(FunctorData { object_map, morphism_map })
}

/// The three properties of an equivalence, with witnesses when they fail.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EquivalenceReport {
    pub essentially_surjective: bool,
    pub full: bool,
    pub faithful: bool,
    pub witnesses: Vec<String>,
}

impl EquivalenceReport {
    pub fn is_equivalence(&self) -> bool {
        self.essentially_surjective && self.full && self.faithful
    }
}

/// Checks the three equivalence properties of a functor.
pub fn check_equivalence(src: &Category, dst: &Category, f: &FunctorData) -> EquivalenceReport {
    let mut witnesses = Vec::new();
    // essential surjectivity: every dst object isomorphic to an image
    let image: std::collections::BTreeSet<usize> = f.object_map.iter().copied().collect();
    let mut essentially_surjective = true;
    for class in dst.iso_classes() {
        if !class.iter().any(|o| image.contains(o)) {
            essentially_surjective = false;
            witnesses.push(format!(
                "object class of {} not in the image",
                dst.objects[class[0]].label
            ));
        }
    }
    // faithfulness per source hom set; fullness per reached target pair,
    // over the union of all source pairs mapping onto it (for a functor
    // that is bijective on objects the two readings coincide)
    let mut faithful = true;
    let mut covered: BTreeMap<(usize, usize), std::collections::BTreeSet<MorId>> = BTreeMap::new();
    for a in 0..src.objects.len() {
        for b in 0..src.objects.len() {
            let hom = src.hom(a, b);
            let mut images = std::collections::BTreeSet::new();
            for i in 0..hom.len() {
                images.insert(f.morphism_map[&(a, b, i)]);
            }
            if images.len() < hom.len() {
                faithful = false;
                witnesses.push(format!(
                    "hom({}, {}) collapses from {} to {}",
                    src.objects[a].label,
                    src.objects[b].label,
                    hom.len(),
                    images.len()
                ));
            }
            covered.entry((f.object_map[a], f.object_map[b])).or_default().extend(images);
        }
    }
    let mut full = true;
    for ((c, d), images) in &covered {
        let target_count = dst.hom(*c, *d).len();
        if images.len() < target_count {
            full = false;
            witnesses.push(format!(
                "hom({}, {}) in the target covered by {} of {} morphisms",
                dst.objects[*c].label,
                dst.objects[*d].label,
                images.len(),
                target_count
            ));
        }
    }
    EquivalenceReport { essentially_surjective, full, faithful, witnesses }
}

/// Agreement report between the semi-skeleton and the brute-force oracle.
#[derive(Clone, Debug, serde::Serialize)]
pub struct OracleReport {
    pub object_classes_match: bool,
    pub hom_sets_match: bool,
    pub composition_compatible: bool,
    pub skeleton_objects: usize,
    pub brute_objects: usize,
    pub mismatches: Vec<String>,
}

impl OracleReport {
    pub fn agrees(&self) -> bool {
        self.object_classes_match && self.hom_sets_match && self.composition_compatible
    }
}

/// Compares the semi-skeleton against the brute-force category of the
/// realized group: every brute object must be conjugate to a skeleton
/// object, and on skeleton objects the Hom sets must agree exactly.
pub fn compare_with_bruteforce(
    level: &FamilyLevel,
    skel: &Category,
    cap: u64,
) -> Result<OracleReport> {
    let realized = level.ext.realize(cap)?;
    let brute = category_bruteforce(&realized, cap)?;
    let mut mismatches = Vec::new();

    // index brute objects by element set
    let brute_by_elements: BTreeMap<&[ExtElem], usize> =
        brute.objects.iter().enumerate().map(|(i, o)| (o.elements.as_slice(), i)).collect();
    let mut skel_to_brute = Vec::with_capacity(skel.objects.len());
    let mut object_classes_match = true;
    for obj in &skel.objects {
        match brute_by_elements.get(obj.elements.as_slice()) {
            Some(&i) => skel_to_brute.push(i),
            None => {
                object_classes_match = false;
                mismatches.push(format!("skeleton object {} is not a subgroup", obj.label));
                skel_to_brute.push(usize::MAX);
            }
        }
    }
    // every brute object conjugate into the skeleton
    let skel_set: std::collections::BTreeSet<usize> =
        skel_to_brute.iter().copied().filter(|&i| i != usize::MAX).collect();
    for (bi, obj) in brute.objects.iter().enumerate() {
        let mut witness = None;
        'search: for g in realized.group.elements() {
            let conj_set: std::collections::BTreeSet<ExtElem> = obj
                .elements
                .iter()
                .map(|e| {
                    let xi = realized.index[e];
                    realized.elems[realized.group.conj(xi, g) as usize].clone()
                })
                .collect();
            let conj_sorted: Vec<ExtElem> = conj_set.into_iter().collect();
            if let Some(&ci) = brute_by_elements.get(conj_sorted.as_slice()) {
                if skel_set.contains(&ci) {
                    witness = Some(g);
                    break 'search;
                }
            }
        }
        if witness.is_none() {
            object_classes_match = false;
            mismatches.push(format!(
                "brute object {} (index {bi}) is not conjugate into the skeleton",
                obj.label
            ));
        }
    }

    // hom sets on skeleton objects agree with brute hom sets
    let mut hom_sets_match = true;
    for (i, &bi) in skel_to_brute.iter().enumerate() {
        for (j, &bj) in skel_to_brute.iter().enumerate() {
            if bi == usize::MAX || bj == usize::MAX {
                continue;
            }
            let skel_maps: std::collections::BTreeSet<&Vec<(ExtElem, ExtElem)>> =
                skel.hom(i, j).iter().map(|m| &m.map).collect();
            let brute_maps: std::collections::BTreeSet<&Vec<(ExtElem, ExtElem)>> =
                brute.hom(bi, bj).iter().map(|m| &m.map).collect();
            if skel_maps != brute_maps {
                hom_sets_match = false;
                mismatches.push(format!(
                    "hom({}, {}): skeleton has {} morphisms, oracle {}",
                    skel.objects[i].label,
                    skel.objects[j].label,
                    skel_maps.len(),
                    brute_maps.len()
                ));
            }
        }
    }

    // composition closure and associativity on the skeleton
    let composition_compatible = match skel.check_axioms() {
        Ok(()) => true,
        Err(e) => {
            mismatches.push(format!("category axioms fail: {e}"));
            false
        }
    };

    Ok(OracleReport {
        object_classes_match,
        hom_sets_match,
        composition_compatible,
        skeleton_objects: skel.objects.len(),
        brute_objects: brute.objects.len(),
        mismatches,
    })
}

/// Verifies the semi-skeleton counting formulas:
/// S side `Σ |H^1(L, T)|`, family side `Σ |H^1||H^2||O_x(L)|`.
pub fn counting_check(base: &FamilyBase, level: &FamilyLevel, s_cat: &Category, gx_cat: &Category) -> (bool, u64, u64) {
    let s_expected: u64 = base.subgroups.iter().map(|sg| sg.h1_order).sum();
    let gx_expected: u64 = level
        .subgroup_data
        .iter()
        .map(|sd| {
            let sg = &base.subgroups[sd.base_index];
            sg.h1_order * sg.h2_order * sd.o_subgroups.len() as u64
        })
        .sum();
    let ok = s_cat.objects.len() as u64 == s_expected
        && gx_cat.objects.len() as u64 == gx_expected;
    (ok, s_expected, gx_expected)
}
