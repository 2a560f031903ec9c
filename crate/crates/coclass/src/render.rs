//! Rendering of categories: reference-style text tables, JSON documents, and
//! DOT graphs.
//!
//! Conjugator witnesses are only well-defined modulo a centralizer coset;
//! the renderer picks the coset member whose exponents are smallest in the
//! symmetric range, so `bt^-1` is printed rather than `bt^(2^{x+2}-1)`.

use crate::cochain::GroupModule;
use crate::extension::{label_ext, ExtElem};
use crate::family::{FamilyBase, FamilyLevel};
use crate::quillen::{Category, Morphism, ObjectData, SCategory, Witness};
use crate::Result;
use serde::Serialize;

fn symmetric(v: u64, modulus: u64) -> i64 {
    if v > modulus / 2 {
        v as i64 - modulus as i64
    } else {
        v as i64
    }
}

fn score(m: &[u64], modulus: u64) -> (u64, Vec<i64>) {
    let sym: Vec<i64> = m.iter().map(|&v| symmetric(v, modulus)).collect();
    (sym.iter().map(|&s| s.unsigned_abs()).sum(), sym)
}

/// Chooses the coset member with minimal symmetric exponents and renders
/// it as a word.
fn minimized_word(
    gm: &GroupModule,
    w: u16,
    m: &[u64],
    coset: &[Vec<u64>],
) -> String {
    let modulus = gm.modulus().value();
    let mut best = m.to_vec();
    let mut best_score = score(m, modulus);
    for c in coset {
        let cand: Vec<u64> =
            m.iter().zip(c).map(|(&a, &b)| gm.modulus().add(a, b)).collect();
        let s = score(&cand, modulus);
        // prefer smaller total size, then nonnegative-leaning tuples
        let better = s.0 < best_score.0
            || (s.0 == best_score.0
                && s.1.iter().map(|&x| (x < 0) as usize).sum::<usize>()
                    < best_score.1.iter().map(|&x| (x < 0) as usize).sum::<usize>());
        if better {
            best = cand;
            best_score = s;
        }
    }
    label_ext(gm, &ExtElem::new(w, best))
}

/// Renders the witness of a skeleton morphism, minimized over the
/// centralizer coset of the source subgroup.
pub fn witness_word_gx(level: &FamilyLevel, cat: &Category, m: &Morphism) -> String {
    let Witness::Gx(g) = &m.witness else { return "?".into() };
    let ObjectData::Gx { sd, .. } = cat.objects[m.src].data else {
        return label_ext(&level.gm, g);
    };
    let data = &level.subgroup_data[sd];
    let moved = data.centralizer.map(level.gm.modulus(), |c| level.gm.act(c, g.w));
    let coset = moved.elements(1 << 10);
    minimized_word(&level.gm, g.w, &g.m, &coset)
}

/// Renders the witness of an S-side morphism at its certified precision.
pub fn witness_word_s(base: &FamilyBase, s: &SCategory, m: &Morphism) -> String {
    let Witness::S { w, t, cert_exp } = &m.witness else { return "?".into() };
    let ObjectData::S { li, .. } = s.cat.objects[m.src].data else {
        return "?".into();
    };
    let gm_cert = match base.gm_t.reduce_to(*cert_exp) {
        Ok(g) => g,
        Err(_) => return "?".into(),
    };
    let m_cert = gm_cert.modulus();
    let t_red: Vec<u64> = t.iter().map(|&v| m_cert.reduce_u64(v)).collect();
    let cent = &base.subgroups[li].t_centralizer;
    let moved = cent.map(m_cert, |c| {
        gm_cert.act(&c.iter().map(|&v| m_cert.reduce_u64(v)).collect::<Vec<_>>(), *w)
    });
    let coset = if moved.order_exp() <= 10 { moved.elements(1 << 10) } else { Vec::new() };
    minimized_word(&gm_cert, *w, &t_red, &coset)
}

fn is_module_only(cat: &Category, obj: usize) -> bool {
    // objects over the trivial subgroup (<1> and the pure module objects)
    // have a single group component across all elements
    let elements = &cat.objects[obj].elements;
    elements.iter().all(|e| e.w == elements[0].w)
}

/// The reference morphism table: one line per nonempty Hom set, with the
/// trivial sources (the trivial object and the pure module objects)
/// omitted, matching the layout of the example tables.
pub fn table(cat: &Category, word: impl Fn(&Morphism) -> String) -> String {
    let mut out = String::new();
    out.push_str("objects:\n");
    for o in &cat.objects {
        out.push_str(&format!("  {}\n", o.label));
    }
    out.push_str("\nsource -> range | induced by\n");
    for (&(i, j), morphisms) in &cat.homs {
        if morphisms.is_empty() || is_module_only(cat, i) {
            continue;
        }
        let words: Vec<String> = morphisms.iter().map(&word).collect();
        out.push_str(&format!(
            "{} -> {} | {}\n",
            cat.objects[i].label,
            cat.objects[j].label,
            words.join(", ")
        ));
    }
    out
}

#[derive(Serialize)]
pub struct JsonMorphism {
    pub src: String,
    pub dst: String,
    pub witness: String,
    pub map: Vec<(String, String)>,
}

#[derive(Serialize)]
pub struct JsonObject {
    pub label: String,
    pub elements: Vec<String>,
}

#[derive(Serialize)]
pub struct JsonCategory {
    pub objects: Vec<JsonObject>,
    pub morphisms: Vec<JsonMorphism>,
}

/// Full category document (no omissions), bit-stable across runs.
pub fn json(
    cat: &Category,
    gm: &GroupModule,
    word: impl Fn(&Morphism) -> String,
) -> Result<String> {
    let objects = cat
        .objects
        .iter()
        .map(|o| JsonObject {
            label: o.label.clone(),
            elements: o.elements.iter().map(|e| label_ext(gm, e)).collect(),
        })
        .collect();
    let mut morphisms = Vec::new();
    for (&(_i, _j), list) in &cat.homs {
        for m in list {
            morphisms.push(JsonMorphism {
                src: cat.objects[m.src].label.clone(),
                dst: cat.objects[m.dst].label.clone(),
                witness: word(m),
                map: m
                    .map
                    .iter()
                    .map(|(a, b)| (label_ext(gm, a), label_ext(gm, b)))
                    .collect(),
            });
        }
    }
    serde_json::to_string_pretty(&JsonCategory { objects, morphisms })
        .map_err(|e| crate::Error::Parse(e.to_string()))
}

/// DOT graph: objects as nodes, non-identity morphisms as labeled edges.
pub fn dot(cat: &Category, word: impl Fn(&Morphism) -> String) -> String {
    let mut out = String::from("digraph quillen {\n  rankdir=LR;\n");
    for (i, o) in cat.objects.iter().enumerate() {
        out.push_str(&format!("  n{} [label=\"{}\"];\n", i, escape(&o.label)));
    }
    for list in cat.homs.values() {
        for m in list {
            if m.is_identity() {
                continue;
            }
            out.push_str(&format!(
                "  n{} -> n{} [label=\"{}\"];\n",
                m.src,
                m.dst,
                escape(&word(m))
            ));
        }
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
