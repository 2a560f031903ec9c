//! Lemma-level invariants of the category machinery: centralizing
//! criteria, the shape of the lifting set, naturality of the splitting
//! memberships, and parser robustness on malformed input.

use coclass::cochain::{cocycle_defect, lambda, res, restrict_module, Cochain, CochainSpace};
use coclass::extension::ExtElem;
use coclass::family::fixtures::{by_name, dihedral2, NAMES};
use coclass::family::Family;
use coclass::quillen::{lift_morphism, skeleton_gx, ObjectData, Witness};

/// An element g = (w, m) centralizes the complement object exactly when w
/// centralizes L and ζ_{L,L,g,x} = γ^g - γ.
#[test]
fn centralizing_criterion() {
    let fam = Family::new(dihedral2()).unwrap();
    let level = fam.level(1).unwrap();
    let cat = skeleton_gx(&level).unwrap();
    for obj in &cat.objects {
        let ObjectData::Gx { sd, w1, o } = obj.data else { panic!() };
        if o != 0 {
            continue; // the criterion concerns the complement part
        }
        let data = &level.subgroup_data[sd];
        let gamma = &data.w1[w1].gamma;
        for w in level.gm.group.elements() {
            let centralizes_l =
                data.l.elements.iter().all(|&l| level.gm.group.conj(l, w) == l);
            for mv in (0..level.gm.modulus().value()).step_by(3) {
                let g = ExtElem::new(w, vec![mv]);
                let direct = obj
                    .elements
                    .iter()
                    .all(|x| level.ext.conj(x, &g) == *x);
                let z = level.zeta_g(sd, sd, &g).unwrap();
                let pulled = level.pull_cochain(sd, sd, w, gamma);
                let criterion = centralizes_l && z.zeta == pulled.sub(gamma);
                assert_eq!(direct, criterion, "w = {w}, m = {mv}");
            }
        }
    }
}

/// The liftings of a morphism are exactly the coset `m̄ + C_T(L)^w`: coset
/// members satisfy the lattice equation and outside shifts break it.
#[test]
fn lifting_set_is_a_centralizer_coset() {
    let fam = Family::new(by_name("semidihedral2").unwrap()).unwrap();
    let x0 = fam.x0().unwrap().x0;
    let level = fam.level(x0).unwrap();
    let cat = skeleton_gx(&level).unwrap();
    let base = &level.base;
    for id in cat.all_ids() {
        let mor = cat.morphism(id);
        let lift = lift_morphism(&level, &cat, mor, x0).unwrap();
        let Witness::Gx(g) = &mor.witness else { panic!() };
        let ObjectData::Gx { sd: sdi, w1: w1i, .. } = cat.objects[mor.src].data else {
            panic!()
        };
        let ObjectData::Gx { sd: sdj, w1: w1j, .. } = cat.objects[mor.dst].data else {
            panic!()
        };
        let ld = &level.subgroup_data[sdi];
        let hd = &level.subgroup_data[sdj];
        let sg_l = &base.subgroups[ld.base_index];
        let gm_t = &base.gm_t;
        let group = &gm_t.group;
        let w = g.w;
        let winv = group.inv(w);
        // the lattice equation target
        let zeta_hat = coclass::family::zeta_hat_t(base, ld.base_index, hd.base_index, w).unwrap();
        let sigma_bar = &hd.w1[w1j].bar;
        let mut h_pos = vec![u16::MAX; group.order()];
        for (p, &el) in base.subgroups[hd.base_index].l.elements.iter().enumerate() {
            h_pos[el as usize] = p as u16;
        }
        let pulled = Cochain::from_fn(&sg_l.subm.gm, 1, |t| {
            let lp = sg_l.subm.embed[t[0] as usize];
            let lw = group.conj(lp, w);
            gm_t.act(sigma_bar.get(&[h_pos[lw as usize]]), winv)
        });
        let target = zeta_hat.sub(&pulled).add(&ld.w1[w1i].bar);
        let satisfied = |m_bar: &[u64]| {
            let u = gm_t.act(m_bar, winv);
            lambda(&sg_l.subm.gm, &u) == target
        };
        assert!(satisfied(&lift.m_bar));
        // coset members still satisfy the equation
        for c in sg_l.t_centralizer.gens() {
            let moved = gm_t.act(c, w);
            let shifted: Vec<u64> = lift
                .m_bar
                .iter()
                .zip(&moved)
                .map(|(&a, &b)| gm_t.modulus().add(a, b))
                .collect();
            assert!(satisfied(&shifted), "centralizer shift must stay a lifting");
        }
        // an outside shift breaks it unless it lies in the centralizer
        if !sg_l.l.is_trivial() {
            let mut shifted = lift.m_bar.clone();
            shifted[0] = gm_t.modulus().add(shifted[0], 1);
            assert!(
                !satisfied(&shifted),
                "a non-centralizer shift must not be a lifting"
            );
        }
    }
}

/// Membership naturality of the anchored splitting: restriction and the
/// group action keep the lattice part in the image of the lattice
/// cocycles and the complement part in the deep layer.
#[test]
fn splitting_membership_is_natural() {
    for name in NAMES {
        let fam = Family::new(by_name(name).unwrap()).unwrap();
        let base = fam.base_at(fam.data.base_precision()).unwrap();
        let split2 = fam.seeded_split2(&base).unwrap();
        let r = base.anchor_level;
        let dec = split2.at_level(r).unwrap();
        let gm_r = base.gm_t.reduce_to(r).unwrap();
        let space = CochainSpace::new(&gm_r, 2);
        let m_log = base.m_log;
        for k_flat in dec.k_span.gens() {
            let k = space.unflatten(&gm_r, k_flat);
            // deep values survive the action and restriction
            for w in gm_r.group.elements() {
                let acted = coclass::cochain::act(&gm_r, &k, w);
                assert!(acted.values_in_layer(r - m_log));
                assert!(cocycle_defect(&gm_r, &acted).is_none());
            }
            for sg in &base.subgroups {
                let subm = restrict_module(&gm_r, &sg.l);
                let restricted = res(&k, &subm);
                let l_log = sg.l.log_order(fam.data.prime);
                // deep values restrict to deep values, so res lands in the
                // p^l-layer cocycles of L (r - m ≥ m ≥ l at the anchor)
                assert!(restricted.values_in_layer(r - m_log));
                assert!(r - m_log >= l_log);
                assert!(cocycle_defect(&subm.gm, &restricted).is_none());
            }
        }
        // the lattice part stays a lattice cocycle under the action
        let t_space = CochainSpace::new(&base.gm_t, 2);
        for z_flat in &split2.t_cohomology.z_basis {
            let z = t_space.unflatten(&base.gm_t, z_flat);
            for w in base.gm_t.group.elements() {
                let acted = coclass::cochain::act(&base.gm_t, &z, w);
                assert!(cocycle_defect(&base.gm_t, &acted).is_none());
            }
        }
    }
}

#[test]
fn malformed_inputs_error_instead_of_panicking() {
    use coclass::io::{parse_group, parse_propdata};
    let cases = [
        "",
        "prime",
        "prime 2",
        "prime 2 order 3 table 0 1 2 1 2 0 2 0",
        "prime 2 order 2 table 9 9 9 9",
        "family x prime 2 rank 1 e 2 group 2 0 1 1 0 action 1 1 rho 1 5 5 1 eta 0",
        "family x prime 3 rank 1 e 2 group 2 0 1 1 0 action 1 1 rho 0 eta 0",
    ];
    for text in cases {
        assert!(parse_group(text).is_err() || parse_propdata(text).is_err());
    }
    // out-of-range cochain entries are rejected by validation, not by a
    // panic deep inside table construction
    let bad = "family bad prime 2 rank 1 e 2 group 2\n0 1\n1 0\naction\n1\n-1\nrho 1\n7 1 1\neta 0";
    match parse_propdata(bad) {
        Ok(data) => assert!(Family::new(data).is_err()),
        Err(_) => {}
    }
}
