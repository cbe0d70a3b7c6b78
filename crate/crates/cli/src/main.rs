//! deltawb: checks over lattice, category, hyperdoctrine and theory files.
//!
//! Exit codes: 0 when every check passes, 1 when some check fails (the
//! report carries witnesses), 2 on usage or input errors.

use clap::{Parser, Subcommand, ValueEnum};
use deltawb::canext::canonical_extension;
use deltawb::enumerate::{distributive_lattices, dl_counts, set_fragments, table_hyperdoctrines};
use deltawb::fincat::{check_coherent_functor, CategoryFile, CategoryFixture, CohCat, LatCat, LatFunctor};
use deltawb::hyperdoctrine::{canext_hyperdoctrine, validate, Hyperdoctrine, SubHyp, TableHyp};
use deltawb::lattice::{FinDistLattice, LatticeFile};
use deltawb::logic::chase::{chase, ChaseConfig, ChaseError, PartialStructure};
use deltawb::logic::distill::{Distilled, DEFAULT_ARITY};
use deltawb::logic::evaluation::Evaluation;
use deltawb::logic::models::{flatten, Family, FinModel};
use deltawb::logic::syntax::parse_theory;
use deltawb::predcat::{DEFAULT_MORPHISM_BUDGET, check_coh_plus, counit_equivalence_check, pmodel_check, universal_factorization, EmbedFunctor, PredCat};
use deltawb::report::Report;
use deltawb::sites::{
    comparison_check, factorization_data, irreducible_subsite, jp_coverage, localic_tot_for_lattice, locale_morphism, open_check,
    semidirect_site, sheaf_check, surjection_check, topology_coincidence_check, types_functor, FinCat, SiteMap, Topology,
    DEFAULT_FAMILY_SIZE, DEFAULT_MORPHISM_CAP, DEFAULT_SIEVE_BUDGET,
};
use deltawb::fincat::Category;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const BUDGET_VAR: &str = "DELTAWB_BUDGET";

#[derive(Parser)]
#[command(name = "deltawb", version, about = "Finite checks for canonical extensions, hyperdoctrines, sites of types and coherent theories")]
struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Search budget; overrides DELTAWB_BUDGET.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Include wall-clock timing (makes reports differ between runs).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Canonical extension of a JSON lattice: iso, dense, compact, prime filter count.
    Canext { lattice: PathBuf },
    /// Hyperdoctrine files, or the subobject hyperdoctrine of a category file.
    Hyper {
        #[command(subcommand)]
        cmd: HyperCmd,
    },
    /// Predicate categories A(P).
    Predcat {
        #[command(subcommand)]
        cmd: PredcatCmd,
    },
    /// Sites of types.
    Tot {
        #[command(subcommand)]
        cmd: TotCmd,
    },
    /// Chase a theory from a start structure.
    Chase {
        theory: PathBuf,
        /// Elements per sort to start from, comma separated.
        #[arg(long, value_delimiter = ',')]
        start: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Model families of a theory.
    Models {
        #[command(subcommand)]
        cmd: ModelsCmd,
    },
    /// Exhaustive fixture streams.
    Enumerate {
        kind: Kind,
        #[arg(long)]
        max: usize,
    },
}

#[derive(Subcommand)]
enum HyperCmd {
    Validate { file: PathBuf },
    /// Validate P^δ.
    Canext { file: PathBuf },
}

#[derive(Subcommand)]
enum PredcatCmd {
    /// A(P) for a hyperdoctrine or category file: objects, morphisms, laws.
    Build {
        file: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    CounitCheck { category: PathBuf },
    /// C^δ and E_C.
    Canext { category: PathBuf },
    /// E_C as a p-model and its universal factorization.
    PmodelCheck { category: PathBuf },
}

#[derive(Subcommand)]
enum TotCmd {
    /// The type category with its singleton covers.
    Site {
        category: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Comparison conditions for the types functor.
    Compare {
        category: PathBuf,
        /// Let the empty sieve cover in the source site (a deliberate break).
        #[arg(long)]
        empty_cover: bool,
    },
    /// Sheaf property of S_C^δ and the topology coincidence.
    SheafCheck { category: PathBuf },
    /// Surjection, openness and factorization data for a lattice functor file.
    LocaleCheck {
        functor: PathBuf,
        #[arg(long, value_enum, default_value_t = LocaleProp::Both)]
        check: LocaleProp,
    },
}

#[derive(Subcommand)]
enum ModelsCmd {
    /// Conditions (M1)–(M3) on the exhaustive family.
    CheckM {
        theory: PathBuf,
        #[arg(long, default_value_t = 3)]
        max: usize,
        /// Drop this model (JSON dump) from the family.
        #[arg(long)]
        without: Option<PathBuf>,
    },
    /// The σ̄ checks.
    SigmaBar {
        theory: PathBuf,
        #[arg(long, default_value_t = 3)]
        max: usize,
        #[arg(long)]
        without: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LocaleProp {
    Surjection,
    Open,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Dl,
    Sets,
    Hyper,
}

struct Out {
    report: Report,
    data: Value,
}

impl Out {
    fn new(report: Report) -> Self {
        Out { report, data: Value::Null }
    }
    fn with(report: Report, data: Value) -> Self {
        Out { report, data }
    }
}

struct Inputs(BTreeMap<String, String>);

impl Inputs {
    fn read(&mut self, p: &Path) -> Result<String, String> {
        let bytes = std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?;
        self.0.insert(p.display().to_string(), format!("{:x}", Sha256::digest(&bytes)));
        String::from_utf8(bytes).map_err(|e| format!("{}: {e}", p.display()))
    }
}

fn one(name: &str, r: Result<(), String>) -> Report {
    let mut rep = Report::new();
    rep.push(name, r);
    rep
}

fn budget(cli: Option<usize>) -> Result<Option<usize>, String> {
    if cli.is_some() {
        return Ok(cli);
    }
    match std::env::var(BUDGET_VAR) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("{BUDGET_VAR}={v} is not a number")),
        Err(_) => Ok(None),
    }
}

fn lattice(text: &str) -> Result<FinDistLattice, String> {
    LatticeFile::parse(text).map_err(|e| e.to_string())
}

enum HypOrCat {
    Hyp(TableHyp),
    Cat(CategoryFixture),
}

fn hyp_or_cat(text: &str) -> Result<HypOrCat, String> {
    let v: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if v.get("kind").is_some() {
        CategoryFile::parse(text).map(HypOrCat::Cat)
    } else {
        TableHyp::parse(text).map(HypOrCat::Hyp)
    }
}

fn cmd_canext(text: &str) -> Result<Out, String> {
    let l = lattice(text)?;
    let ce = canonical_extension(&l);
    let (iso, dense, compact) = (ce.embed_is_iso(), ce.check_dense(), ce.check_compact());
    let mut r = Report::new();
    r.push("iso", if iso { Ok(()) } else { Err("embedding is not onto".into()) });
    r.push("dense", if dense { Ok(()) } else { Err("not dense".into()) });
    r.push("compact", if compact { Ok(()) } else { Err("not compact".into()) });
    let data = json!({"iso": iso, "dense": dense, "compact": compact, "primeFilterCount": ce.prime_filters.len()});
    Ok(Out::with(r, data))
}

fn hyp_report<P: Hyperdoctrine>(p: &P, delta: bool) -> Report
where
    P::Base: CohCat,
{
    if delta {
        validate(&canext_hyperdoctrine(p))
    } else {
        validate(p)
    }
}

fn cmd_hyper(text: &str, delta: bool) -> Result<Out, String> {
    Ok(Out::new(match hyp_or_cat(text)? {
        HypOrCat::Hyp(h) => {
            if delta {
                validate(&canext_hyperdoctrine(&h))
            } else {
                validate(&h)
            }
        }
        HypOrCat::Cat(CategoryFixture::Sets(c)) => hyp_report(&SubHyp(&c), delta),
        HypOrCat::Cat(CategoryFixture::Lattice(c)) => hyp_report(&SubHyp(&c), delta),
    }))
}

fn predcat_build<P: Hyperdoctrine>(p: &P, dot: Option<&Path>, budget: usize) -> Result<Out, String> {
    let pc = PredCat::with_budget(p, budget);
    let obs = pc.objects();
    for x in &obs {
        for y in &obs {
            pc.try_hom(x, y)?;
        }
    }
    let r = pc.check_laws(&obs);
    let n_mors: usize = obs.iter().map(|a| obs.iter().map(|b| pc.hom(a, b).len()).sum::<usize>()).sum();
    if let Some(path) = dot {
        let fc = FinCat::from_category(&pc, obs.clone(), DEFAULT_MORPHISM_CAP)?;
        std::fs::write(path, fc.to_dot()).map_err(|e| e.to_string())?;
    }
    Ok(Out::with(r, json!({"objects": obs.len(), "morphisms": n_mors})))
}

fn cmd_predcat_build(text: &str, dot: Option<&Path>, budget: usize) -> Result<Out, String> {
    match hyp_or_cat(text)? {
        HypOrCat::Hyp(h) => predcat_build(&h, dot, budget),
        HypOrCat::Cat(CategoryFixture::Sets(c)) => predcat_build(&SubHyp(&c), dot, budget),
        HypOrCat::Cat(CategoryFixture::Lattice(c)) => predcat_build(&SubHyp(&c), dot, budget),
    }
}

fn category(text: &str) -> Result<CategoryFixture, String> {
    CategoryFile::parse(text)
}

macro_rules! on_category {
    ($fix:expr, $f:ident $(, $arg:expr)*) => {
        match $fix {
            CategoryFixture::Sets(c) => $f(&c $(, $arg)*),
            CategoryFixture::Lattice(c) => $f(&c $(, $arg)*),
        }
    };
}

fn predcat_canext<C: CohCat>(c: &C) -> Result<Out, String> {
    let s = SubHyp(c);
    let sd = canext_hyperdoctrine(&s);
    let cd = PredCat::new(&sd);
    let e = EmbedFunctor { c, sd: &sd, cd: &cd };
    let mut r = Report::new();
    r.push("coh_plus", check_coh_plus(&cd));
    r.merge("embedding", check_coherent_functor(&e));
    Ok(Out::with(r, json!({"objects": cd.objects().len()})))
}

fn predcat_pmodel<C: CohCat>(c: &C) -> Result<Out, String> {
    let s = SubHyp(c);
    let sd = canext_hyperdoctrine(&s);
    let cd = PredCat::new(&sd);
    let e = EmbedFunctor { c, sd: &sd, cd: &cd };
    let mut r = one("pmodel", pmodel_check(&e));
    let mut data = Value::Null;
    match universal_factorization(&e) {
        Ok(f) => {
            data = json!({"components": f.components});
            r.merge("factorization", f.report);
        }
        Err(w) => r.push("factorization", Err(w)),
    }
    Ok(Out::with(r, data))
}

fn tot_site<C: CohCat>(c: &C, dot: Option<&Path>, budget: usize) -> Result<Out, String> {
    let t = jp_coverage(c)?;
    let mut r = one("laws", t.cat.check_laws());
    let summary = t.summary(budget)?;
    if let Some(path) = dot {
        std::fs::write(path, t.cat.to_dot()).map_err(|e| e.to_string())?;
    }
    if !summary.coverage.complete {
        r.note(format!("partial: {} sieves checked", summary.coverage.sieves_checked));
    }
    Ok(Out::with(r, serde_json::to_value(&summary).map_err(|e| e.to_string())?))
}

fn tot_compare<C: CohCat>(c: &C, budget: usize, empty_cover: bool) -> Result<Out, String> {
    let s = SubHyp(c);
    let sd = canext_hyperdoctrine(&s);
    let big = semidirect_site(&sd)?;
    let d = irreducible_subsite(&sd, &big)?;
    let tau = jp_coverage(c)?;
    let e = types_functor(c, &sd, &d.cat, &tau.cat)?;
    let d = if empty_cover { d.with_empty_cover() } else { d };
    let (mut r, cov) = comparison_check(&d, &tau, &e, budget);
    let inc = SiteMap::by_values(&d.cat, &big.cat, |o| o.clone(), |m| m.clone())?;
    let (r2, _) = comparison_check(&d, &big, &inc, budget);
    r.merge("dense_subsite", r2);
    Ok(Out::with(r, json!({"sieves_checked": cov.sieves_checked, "complete": cov.complete})))
}

fn tot_sheaf<C: CohCat>(c: &C, budget: usize) -> Result<Out, String> {
    let s = SubHyp(c);
    let sd = canext_hyperdoctrine(&s);
    let mut r = Report::new();
    r.merge("sheaf", sheaf_check(&sd, Topology::Coherent, DEFAULT_FAMILY_SIZE, budget));
    let (tc, cov) = topology_coincidence_check(&sd, budget)?;
    r.merge("coincidence", tc);
    Ok(Out::with(r, json!({"sieves_checked": cov.sieves_checked, "complete": cov.complete, "budget": budget})))
}

#[derive(serde::Deserialize)]
struct FunctorFile {
    src: LatticeFile,
    tgt: LatticeFile,
    map: BTreeMap<String, String>,
}

fn tot_locale(text: &str, which: LocaleProp) -> Result<Out, String> {
    let f: FunctorFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let (s, t) = (f.src.build().map_err(|e| e.to_string())?, f.tgt.build().map_err(|e| e.to_string())?);
    let map = (0..s.len())
        .map(|i| {
            let name = &s.poset().names[i];
            let v = f.map.get(name).ok_or(format!("no image for {name}"))?;
            t.index(v).ok_or(format!("unknown element {v}"))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let (sc, tc) = (LatCat::new(s.clone()), LatCat::new(t.clone()));
    let fun = LatFunctor { src: &sc, tgt: &tc, map };
    let mut r = Report::new();
    r.merge("coherent", check_coherent_functor(&fun));
    if !r.pass() {
        return Ok(Out::new(r));
    }
    let m = locale_morphism(&fun)?;
    if which != LocaleProp::Open {
        r.push("surjection", surjection_check(&m));
    }
    if which != LocaleProp::Surjection {
        r.merge("open", open_check(&m));
    }
    match factorization_data(&fun) {
        Ok(d) => r.merge("factorization", d.report),
        Err(e) => r.push("factorization", Err(e)),
    }
    Ok(Out::new(r))
}

fn cmd_chase(text: &str, start: &[usize], seed: u64, budget: Option<usize>) -> Result<Out, String> {
    let th = parse_theory(text).map_err(|e| e.to_string())?;
    let flat = flatten(&th);
    let n = flat.n_sorts();
    let mut sizes = start.to_vec();
    if sizes.len() > n {
        return Err(format!("{} start sizes for {n} sorts", sizes.len()));
    }
    sizes.resize(n, 0);
    let mut cfg = budget.map(ChaseConfig::with_budget).unwrap_or_default();
    cfg.seed = seed;
    let (r, data) = match chase(&flat, &PartialStructure::points(sizes), &cfg) {
        Ok(run) => {
            let m = run.model.to_json(&flat.sig);
            (one("chase", Ok(())), json!({"model": m, "rounds": run.rounds, "steps": run.steps}))
        }
        Err(ChaseError::Refuted { partial, steps }) => {
            (one("chase", Err(format!("refuted after {steps} steps"))), json!({"partial": partial.to_json(&flat)}))
        }
        Err(ChaseError::Exhausted { partial, steps, reason }) => (
            one("chase", Err(format!("exhausted after {steps} steps: {reason}"))),
            json!({"partial": partial.to_json(&flat)}),
        ),
    };
    Ok(Out::with(r, data))
}

fn models(inputs: &mut Inputs, theory: &Path, max: usize, without: Option<&Path>, sigma: bool) -> Result<Out, String> {
    let th = parse_theory(&inputs.read(theory)?).map_err(|e| e.to_string())?;
    let flat = flatten(&th);
    let family = Family::exhaustive(flat.clone(), max)?;
    let c = Distilled::new(family, DEFAULT_ARITY);
    let drop = match without {
        Some(p) => {
            let v: Value = serde_json::from_str(&inputs.read(p)?).map_err(|e| e.to_string())?;
            let m = FinModel::from_json(&flat.sig, &v)?;
            Some(c.family.position_iso(&m).ok_or("that model is not in the family")?)
        }
        None => None,
    };
    let s = match drop {
        Some(i) => c.family.without(i),
        None => c.family.clone(),
    };
    let ev = Evaluation::new(&c, &s)?;
    let contexts: Vec<Value> = ev
        .contexts()
        .iter()
        .map(|a| json!({"context": a.iter().map(|&x| flat.sig.sorts[x].clone()).collect::<Vec<_>>(), "types": c.n_classes(a)}))
        .collect();
    let mut data = json!({"family": s.names, "reference_models": c.family.len(), "contexts": contexts});
    if let Some(i) = drop {
        data["without"] = json!(c.family.names[i]);
    }
    let approx = format!(
        "C is distilled from the models with at most {max} elements per sort (types up to {DEFAULT_ARITY} variables), \
         an approximation of the syntactic category"
    );
    if !sigma {
        let mut r = Report::new();
        r.merge("", ev.check_m1());
        r.merge("", ev.check_m2());
        r.merge("", ev.check_m3());
        r.note(approx);
        return Ok(Out::with(r, data));
    }
    let mut r = match ev.sigma_bar_check() {
        Ok(r) => r,
        Err(e) => one("refused", Err(e)),
    };
    r.push("ev_pmodel", ev.ev_pmodel_check());
    r.push("conservative", ev.conservativity_check());
    r.note(approx);
    Ok(Out::with(r, data))
}

fn cmd_enumerate(kind: Kind, max: usize) -> Result<Out, String> {
    let r = one("enumerate", Ok(()));
    let data = match kind {
        Kind::Dl => {
            let ls = distributive_lattices(max).map_err(|e| e.to_string())?;
            let counts = dl_counts(max).map_err(|e| e.to_string())?;
            json!({"counts": counts, "total": ls.len(), "lattices": ls.iter().map(|l| l.to_json()).collect::<Vec<_>>()})
        }
        Kind::Sets => {
            let cs = set_fragments(max).map_err(|e| e.to_string())?;
            json!({"fragments": cs.iter().map(|c| c.objects()).collect::<Vec<_>>()})
        }
        Kind::Hyper => {
            let hs = table_hyperdoctrines(max).map_err(|e| e.to_string())?;
            let shapes: Vec<Vec<usize>> = hs.iter().map(|h| h.fibers.iter().map(|l| l.len()).collect()).collect();
            json!({"total": hs.len(), "fiber_sizes": shapes})
        }
    };
    Ok(Out::with(r, data))
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Canext { .. } => "canext",
        Cmd::Hyper { cmd: HyperCmd::Validate { .. } } => "hyper validate",
        Cmd::Hyper { cmd: HyperCmd::Canext { .. } } => "hyper canext",
        Cmd::Predcat { cmd: PredcatCmd::Build { .. } } => "predcat build",
        Cmd::Predcat { cmd: PredcatCmd::CounitCheck { .. } } => "predcat counit-check",
        Cmd::Predcat { cmd: PredcatCmd::Canext { .. } } => "predcat canext",
        Cmd::Predcat { cmd: PredcatCmd::PmodelCheck { .. } } => "predcat pmodel-check",
        Cmd::Tot { cmd: TotCmd::Site { .. } } => "tot site",
        Cmd::Tot { cmd: TotCmd::Compare { .. } } => "tot compare",
        Cmd::Tot { cmd: TotCmd::SheafCheck { .. } } => "tot sheaf-check",
        Cmd::Tot { cmd: TotCmd::LocaleCheck { .. } } => "tot locale-check",
        Cmd::Chase { .. } => "chase",
        Cmd::Models { cmd: ModelsCmd::CheckM { .. } } => "models check-m",
        Cmd::Models { cmd: ModelsCmd::SigmaBar { .. } } => "models sigma-bar",
        Cmd::Enumerate { .. } => "enumerate",
    }
}

fn dispatch(cli: &Cli, inputs: &mut Inputs) -> Result<Out, String> {
    let b = budget(cli.budget)?;
    let sieves = b.unwrap_or(DEFAULT_SIEVE_BUDGET);
    match &cli.cmd {
        Cmd::Canext { lattice } => cmd_canext(&inputs.read(lattice)?),
        Cmd::Hyper { cmd: HyperCmd::Validate { file } } => cmd_hyper(&inputs.read(file)?, false),
        Cmd::Hyper { cmd: HyperCmd::Canext { file } } => cmd_hyper(&inputs.read(file)?, true),
        Cmd::Predcat { cmd } => match cmd {
            PredcatCmd::Build { file, dot } => {
                cmd_predcat_build(&inputs.read(file)?, dot.as_deref(), b.unwrap_or(DEFAULT_MORPHISM_BUDGET))
            }
            PredcatCmd::CounitCheck { category: p } => {
                let fix = category(&inputs.read(p)?)?;
                Ok(Out::new(on_category!(fix, counit_equivalence_check)))
            }
            PredcatCmd::Canext { category: p } => on_category!(category(&inputs.read(p)?)?, predcat_canext),
            PredcatCmd::PmodelCheck { category: p } => on_category!(category(&inputs.read(p)?)?, predcat_pmodel),
        },
        Cmd::Tot { cmd } => match cmd {
            TotCmd::Site { category: p, dot } => {
                let fix = category(&inputs.read(p)?)?;
                let lattice = match &fix {
                    CategoryFixture::Lattice(c) => Some(localic_tot_for_lattice(&c.lattice)?),
                    CategoryFixture::Sets(_) => None,
                };
                let mut out = on_category!(fix, tot_site, dot.as_deref(), sieves)?;
                if let Some(lr) = lattice {
                    out.report.merge("localic", lr);
                }
                Ok(out)
            }
            TotCmd::Compare { category: p, empty_cover } => {
                on_category!(category(&inputs.read(p)?)?, tot_compare, sieves, *empty_cover)
            }
            TotCmd::SheafCheck { category: p } => on_category!(category(&inputs.read(p)?)?, tot_sheaf, sieves),
            TotCmd::LocaleCheck { functor, check } => tot_locale(&inputs.read(functor)?, *check),
        },
        Cmd::Chase { theory, start, seed } => cmd_chase(&inputs.read(theory)?, start, *seed, b),
        Cmd::Models { cmd } => match cmd {
            ModelsCmd::CheckM { theory, max, without } => models(inputs, theory, *max, without.as_deref(), false),
            ModelsCmd::SigmaBar { theory, max, without } => models(inputs, theory, *max, without.as_deref(), true),
        },
        Cmd::Enumerate { kind, max } => cmd_enumerate(*kind, *max),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let t0 = Instant::now();
    let mut inputs = Inputs(BTreeMap::new());
    let name = command_name(&cli.cmd);
    let (code, mut doc) = match dispatch(&cli, &mut inputs) {
        Ok(out) => {
            let pass = out.report.pass();
            let doc = json!({
                "command": name,
                "inputs": inputs.0,
                "pass": pass,
                "checks": out.report.checks,
                "notes": out.report.notes,
                "data": out.data,
            });
            (if pass { 0 } else { 1 }, doc)
        }
        Err(e) => {
            eprintln!("deltawb: {e}");
            (2, json!({"command": name, "inputs": inputs.0, "error": e}))
        }
    };
    if cli.timing {
        doc["timing_ms"] = json!(t0.elapsed().as_millis() as u64);
    }
    let text = serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n";
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                eprintln!("deltawb: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}
