//! Command-line surface: skeletons, equivalence verification, the
//! brute-force oracle, cohomology/splitting tables, and the x0 bound.
//!
//! Exit codes: 0 on success/agreement, 1 on a mathematical mismatch,
//! 2 on usage or data errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use coclass::family::{fixtures, Family, FamilyLevel, ProPData};
use coclass::quillen::{
    check_equivalence, check_functor, compare_with_bruteforce, counting_check, functor_f,
    functor_fs, skeleton_gx, skeleton_s,
};
use coclass::render;
use coclass::splitting::SplitSystem;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "coclass", version, about = "Quillen categories of coclass families")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Force the sequential code paths (benchmark/debug aid).
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Args)]
struct Source {
    /// Built-in family name: dihedral2, semidihedral2, quaternion2.
    #[arg(long, conflicts_with = "data")]
    family: Option<String>,
    /// Pro-p data file (see docs/formats.md).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Extra precision digits beyond x + e + 2m.
    #[arg(long)]
    precision_slack: Option<u32>,
}

impl Source {
    fn load(&self) -> anyhow::Result<ProPData> {
        let mut data = match (&self.family, &self.data) {
            (Some(name), None) => fixtures::by_name(name)?,
            (None, Some(path)) => coclass::io::parse_propdata(&std::fs::read_to_string(path)?)?,
            _ => anyhow::bail!("exactly one of --family or --data is required"),
        };
        if let Some(slack) = self.precision_slack {
            data.slack = slack;
        }
        Ok(data)
    }
}

#[derive(Copy, Clone, ValueEnum, Default)]
enum Format {
    #[default]
    Table,
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print a semi-skeleton: of G_x with --x, of the pro-p group without.
    Skeleton {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        x: Option<u32>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Compute x0 and verify the equivalences G_x ~ G_{x+1} from x to y.
    Equivalence {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        x: u32,
        #[arg(long)]
        y: u32,
    },
    /// Compare the semi-skeleton of G_x against the brute-force category.
    Oracle {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        x: u32,
        /// Largest group order the oracle will realize.
        #[arg(long, default_value_t = 4096)]
        cap: u64,
    },
    /// Print cohomology invariants and splitting verification.
    Cohomology {
        #[command(flatten)]
        src: Source,
        /// Cocycle degree (default 2).
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Truncation level (default 2m).
        #[arg(long)]
        r: Option<u32>,
    },
    /// Print the certified family bound x0 with its defect table.
    X0 {
        #[command(flatten)]
        src: Source,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.sequential {
        coclass::par::set_sequential(true);
    }
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn level_for(fam: &Family, x: u32) -> anyhow::Result<FamilyLevel> {
    let base = Arc::new(fam.base_at(fam.data.precision_for(x))?);
    Ok(fam.level_with_base(x, base)?)
}

fn run(cmd: Cmd) -> anyhow::Result<bool> {
    match cmd {
        Cmd::Skeleton { src, x, format } => {
            let fam = Family::new(src.load()?)?;
            match x {
                Some(x) => {
                    let level = level_for(&fam, x)?;
                    let cat = skeleton_gx(&level)?;
                    let word = |m: &coclass::quillen::Morphism| render::witness_word_gx(&level, &cat, m);
                    match format {
                        Format::Table => {
                            println!("family {}  x = {x}  |G_x| = {}", fam.data.name, level.order());
                            println!("objects: {}", cat.objects.len());
                            print!("{}", render::table(&cat, word));
                        }
                        Format::Json => println!("{}", render::json(&cat, &level.gm, word)?),
                        Format::Dot => print!("{}", render::dot(&cat, word)),
                    }
                }
                None => {
                    let base = Arc::new(fam.base_at(fam.data.base_precision())?);
                    let s = skeleton_s(&base)?;
                    let word =
                        |m: &coclass::quillen::Morphism| render::witness_word_s(&base, &s, m);
                    match format {
                        Format::Table => {
                            println!("family {}  pro-p side", fam.data.name);
                            println!("objects: {}", s.cat.objects.len());
                            print!("{}", render::table(&s.cat, word));
                        }
                        Format::Json => {
                            println!("{}", render::json(&s.cat, &base.gm_t, word)?)
                        }
                        Format::Dot => print!("{}", render::dot(&s.cat, word)),
                    }
                }
            }
            Ok(true)
        }
        Cmd::Equivalence { src, x, y } => {
            if y < x {
                anyhow::bail!("--y must be at least --x");
            }
            let fam = Family::new(src.load()?)?;
            let report = fam.x0()?;
            println!("x0 = {} (max defect level {})", report.x0, report.x_max);
            if x < report.x0 {
                anyhow::bail!(
                    "x = {x} is below the certified bound x0 = {}; rerun with --x {}",
                    report.x0,
                    report.x0
                );
            }
            let mut all_ok = true;
            for xi in x..y {
                let base = Arc::new(fam.base_at(fam.data.precision_for(xi + 1))?);
                let level = fam.level_with_base(xi, base.clone())?;
                let next = fam.level_with_base(xi + 1, base)?;
                let cat = skeleton_gx(&level)?;
                let cat_next = skeleton_gx(&next)?;
                let f = functor_f(&level, &next, &cat, &cat_next, report.x0)?;
                check_functor(&cat, &cat_next, &f)?;
                let eq = check_equivalence(&cat, &cat_next, &f);
                println!(
                    "x = {xi} -> {}: dense = {}, full = {}, faithful = {}",
                    xi + 1,
                    eq.essentially_surjective,
                    eq.full,
                    eq.faithful
                );
                all_ok &= eq.is_equivalence();
            }
            // also report the functor to the pro-p side at level x
            let base = Arc::new(fam.base_at(fam.data.precision_for(x))?);
            let level = fam.level_with_base(x, base.clone())?;
            let cat = skeleton_gx(&level)?;
            let s = skeleton_s(&base)?;
            let fs = functor_fs(&level, &cat, &s, report.x0)?;
            check_functor(&cat, &s.cat, &fs)?;
            let eq = check_equivalence(&cat, &s.cat, &fs);
            println!(
                "F_S at x = {x}: dense = {}, full = {}, faithful = {}",
                eq.essentially_surjective, eq.full, eq.faithful
            );
            Ok(all_ok)
        }
        Cmd::Oracle { src, x, cap } => {
            let fam = Family::new(src.load()?)?;
            let base = Arc::new(fam.base_at(fam.data.precision_for(x))?);
            let level = fam.level_with_base(x, base.clone())?;
            let cat = skeleton_gx(&level)?;
            let report = compare_with_bruteforce(&level, &cat, cap)?;
            println!(
                "family {}  x = {x}  |G_x| = {}: skeleton objects {}, brute objects {}",
                fam.data.name,
                level.order(),
                report.skeleton_objects,
                report.brute_objects
            );
            // hom-count matrix over the skeleton objects
            println!("hom counts (skeleton):");
            for i in 0..cat.objects.len() {
                let row: Vec<String> = (0..cat.objects.len())
                    .map(|j| cat.hom(i, j).len().to_string())
                    .collect();
                println!("  {:>10} | {}", cat.objects[i].label, row.join(" "));
            }
            let s = skeleton_s(&base)?;
            let (count_ok, s_expected, gx_expected) = counting_check(&base, &level, &s.cat, &cat);
            println!(
                "counting formulas: S side {} (expected {s_expected}), family side {} (expected {gx_expected})",
                s.cat.objects.len(),
                cat.objects.len()
            );
            for m in &report.mismatches {
                println!("mismatch: {m}");
            }
            if report.agrees() && count_ok {
                println!("oracle agreement: yes");
                Ok(true)
            } else {
                println!("oracle agreement: NO");
                Ok(false)
            }
        }
        Cmd::Cohomology { src, n, r } => {
            let fam = Family::new(src.load()?)?;
            let data = &fam.data;
            let m_log = data.m_log();
            let anchor = data.anchor_level();
            let r = r.unwrap_or(anchor);
            if n == 0 || n > 2 {
                anyhow::bail!("--n must be 1 or 2");
            }
            if r < anchor {
                anyhow::bail!("--r must be at least 2m = {anchor}");
            }
            let gm_t = data.gm_t(r + 2 * m_log + data.slack)?;
            let mut ok = true;
            println!("family {}  degree n = {n}  level r = {r}", data.name);
            for l in data.group.all_subgroups(1 << 12)? {
                let subm = coclass::cochain::restrict_module(&gm_t, &l);
                let l_log = l.log_order(data.prime);
                let labels: Vec<String> =
                    l.elements.iter().map(|&e| data.group.label(e)).collect();
                let h_n = coclass::cochain::t_cohomology(&subm.gm, n, 4, 2)?;
                let h_n1 = coclass::cochain::t_cohomology(&subm.gm, n + 1, 4, 2)?;
                let sys = SplitSystem::new(&subm.gm, n, l_log, anchor, &[], 4, 2)?;
                let dec = sys.at_level(r)?;
                let gm_r = subm.gm.reduce_to(r)?;
                let cg = coclass::cochain::cocycle_group(&gm_r, n)?;
                let product = h_n.h_order() * h_n1.h_order();
                let split_ok = dec.i_span.intersect(&dec.k_span).is_zero()
                    && dec.z.order_exp() == dec.i_span.order_exp() + dec.k_span.order_exp()
                    && cg.h_order() == product;
                ok &= split_ok;
                println!(
                    "L = {{{}}}: H^{n}(L,T) = {:?}, H^{}(L,T) = {:?}, |H^{n}(L,T/p^{r})| = {} (= product: {}), |Z| = p^{}, |I| = p^{}, |K| = p^{}, split ok: {}",
                    labels.join(","),
                    h_n.h_invariants(),
                    n + 1,
                    h_n1.h_invariants(),
                    cg.h_order(),
                    product,
                    dec.z.order_exp(),
                    dec.i_span.order_exp(),
                    dec.k_span.order_exp(),
                    split_ok
                );
            }
            Ok(ok)
        }
        Cmd::X0 { src } => {
            let fam = Family::new(src.load()?)?;
            let base = fam.base_at(fam.data.base_precision())?;
            let report = fam.x0()?;
            println!("family {}", fam.data.name);
            for (li, hi, w, bound) in &report.triples {
                let lname: Vec<String> = base.subgroups[*li]
                    .l
                    .elements
                    .iter()
                    .map(|&e| fam.data.group.label(e))
                    .collect();
                let hname: Vec<String> = base.subgroups[*hi]
                    .l
                    .elements
                    .iter()
                    .map(|&e| fam.data.group.label(e))
                    .collect();
                println!(
                    "L = {{{}}}, H = {{{}}}, w = {}: level bound {bound}",
                    lname.join(","),
                    hname.join(","),
                    fam.data.group.label(*w)
                );
            }
            println!("x_max = {}", report.x_max);
            println!("x0 = {}", report.x0);
            Ok(true)
        }
    }
}
