//! Finite models, homomorphisms and exhaustive model families.
//!
//! Semantics work on flattened formulas: a function symbol f : A1..An -> B
//! becomes its graph, a relation on A1..An,B, and nested terms become
//! existentially bound variables. Relation indices below `sig.rels.len()`
//! are the declared relations, the rest are graphs in declaration order.

use super::syntax::{Fm, Signature, Theory, Tm};
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ff {
    True,
    False,
    Eq(usize, usize),
    Rel(usize, Vec<usize>),
    And(Vec<Ff>),
    Or(Vec<Ff>),
    Exists(Vec<usize>, Box<Ff>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatSequent {
    pub ctx: usize,
    pub var_sorts: Vec<usize>,
    pub lhs: Ff,
    pub rhs: Ff,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatTheory {
    pub sig: Signature,
    /// names and argument sorts of declared relations then function graphs
    pub rels: Vec<(String, Vec<usize>)>,
    pub axioms: Vec<FlatSequent>,
}

impl FlatTheory {
    pub fn n_sorts(&self) -> usize {
        self.sig.sorts.len()
    }

    /// Totality and single-valuedness of every function graph, for the chase.
    pub fn function_axioms(&self) -> Vec<FlatSequent> {
        let nr = self.sig.rels.len();
        let mut out = Vec::new();
        for (i, (name, dom, cod)) in self.sig.funcs.iter().enumerate() {
            let n = dom.len();
            let mut vs = dom.clone();
            vs.push(*cod);
            let args: Vec<usize> = (0..n).collect();
            let mut with_y = args.clone();
            with_y.push(n);
            out.push(FlatSequent {
                ctx: n,
                var_sorts: vs.clone(),
                lhs: Ff::True,
                rhs: Ff::Exists(vec![n], Box::new(Ff::Rel(nr + i, with_y.clone()))),
                label: format!("{name} total"),
            });
            vs.push(*cod);
            let mut with_z = args;
            with_z.push(n + 1);
            out.push(FlatSequent {
                ctx: n + 2,
                var_sorts: vs,
                lhs: Ff::And(vec![Ff::Rel(nr + i, with_y), Ff::Rel(nr + i, with_z)]),
                rhs: Ff::Eq(n, n + 1),
                label: format!("{name} single-valued"),
            });
        }
        out
    }
}

fn flat_term(t: &Tm, sig: &Signature, sorts: &mut Vec<usize>, fresh: &mut Vec<usize>, atoms: &mut Vec<Ff>) -> usize {
    match t {
        Tm::Var(v) => *v,
        Tm::App(f, args) => {
            let mut vs: Vec<usize> = args.iter().map(|a| flat_term(a, sig, sorts, fresh, atoms)).collect();
            sorts.push(sig.funcs[*f].2);
            let y = sorts.len() - 1;
            fresh.push(y);
            vs.push(y);
            atoms.push(Ff::Rel(sig.rels.len() + f, vs));
            y
        }
    }
}

fn flat_atom(sig: &Signature, sorts: &mut Vec<usize>, terms: &[&Tm], make: impl FnOnce(Vec<usize>) -> Ff) -> Ff {
    let mut fresh = Vec::new();
    let mut atoms = Vec::new();
    let vs: Vec<usize> = terms.iter().map(|t| flat_term(t, sig, sorts, &mut fresh, &mut atoms)).collect();
    if fresh.is_empty() {
        return make(vs);
    }
    atoms.push(make(vs));
    Ff::Exists(fresh, Box::new(Ff::And(atoms)))
}

fn flat_fm(f: &Fm, sig: &Signature, sorts: &mut Vec<usize>) -> Ff {
    match f {
        Fm::True => Ff::True,
        Fm::False => Ff::False,
        Fm::Eq(a, b) => flat_atom(sig, sorts, &[a, b], |v| Ff::Eq(v[0], v[1])),
        Fm::Rel(r, args) => {
            let ts: Vec<&Tm> = args.iter().collect();
            flat_atom(sig, sorts, &ts, |v| Ff::Rel(*r, v))
        }
        Fm::And(a, b) => Ff::And(vec![flat_fm(a, sig, sorts), flat_fm(b, sig, sorts)]),
        Fm::Or(a, b) => Ff::Or(vec![flat_fm(a, sig, sorts), flat_fm(b, sig, sorts)]),
        Fm::Exists(vs, b) => Ff::Exists(vs.clone(), Box::new(flat_fm(b, sig, sorts))),
    }
}

pub fn flatten(th: &Theory) -> FlatTheory {
    let sig = th.sig.clone();
    let mut rels = sig.rels.clone();
    for (name, dom, cod) in &sig.funcs {
        let mut d = dom.clone();
        d.push(*cod);
        rels.push((format!("graph of {name}"), d));
    }
    let axioms = th
        .axioms
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut sorts = s.var_sorts.clone();
            let lhs = flat_fm(&s.lhs, &sig, &mut sorts);
            let rhs = flat_fm(&s.rhs, &sig, &mut sorts);
            FlatSequent { ctx: s.ctx, var_sorts: sorts, lhs, rhs, label: format!("axiom {}", i + 1) }
        })
        .collect();
    FlatTheory { sig, rels, axioms }
}

/// What formulas are evaluated in.
pub trait Structure {
    fn size(&self, sort: usize) -> usize;
    /// Flattened relation index.
    fn holds(&self, rel: usize, args: &[usize]) -> bool;
}

pub fn eval<S: Structure + ?Sized>(s: &S, f: &Ff, sorts: &[usize], env: &mut [usize]) -> bool {
    match f {
        Ff::True => true,
        Ff::False => false,
        Ff::Eq(a, b) => env[*a] == env[*b],
        Ff::Rel(r, args) => {
            let vals: Vec<usize> = args.iter().map(|&v| env[v]).collect();
            s.holds(*r, &vals)
        }
        Ff::And(fs) => fs.iter().all(|g| eval(s, g, sorts, env)),
        Ff::Or(fs) => fs.iter().any(|g| eval(s, g, sorts, env)),
        Ff::Exists(vs, body) => {
            let dims: Vec<usize> = vs.iter().map(|&v| s.size(sorts[v])).collect();
            for_each_tuple(&dims, |t| {
                for (&v, &x) in vs.iter().zip(t) {
                    env[v] = x;
                }
                eval(s, body, sorts, env)
            })
        }
    }
}

/// Calls `f` on every tuple of the box `dims` in lexicographic order until it
/// returns true; reports whether it did.
pub fn for_each_tuple(dims: &[usize], mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if dims.contains(&0) {
        return false;
    }
    let mut t = vec![0; dims.len()];
    loop {
        if f(&t) {
            return true;
        }
        let mut i = dims.len();
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            t[i] += 1;
            if t[i] < dims[i] {
                break;
            }
            t[i] = 0;
        }
    }
}

pub fn all_tuples(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_tuple(dims, |t| {
        out.push(t.to_vec());
        false
    });
    out
}

/// First axiom violated, with the offending context assignment.
pub fn violation<S: Structure + ?Sized>(s: &S, ax: &[FlatSequent]) -> Option<(usize, Vec<usize>)> {
    for (i, a) in ax.iter().enumerate() {
        let dims: Vec<usize> = a.var_sorts[..a.ctx].iter().map(|&q| s.size(q)).collect();
        let mut env = vec![0; a.var_sorts.len()];
        let mut bad = None;
        let found = if a.ctx == 0 {
            let failed = eval(s, &a.lhs, &a.var_sorts, &mut env) && !eval(s, &a.rhs, &a.var_sorts, &mut env);
            if failed {
                bad = Some(Vec::new());
            }
            failed
        } else {
            for_each_tuple(&dims, |t| {
                env[..a.ctx].copy_from_slice(t);
                let failed = eval(s, &a.lhs, &a.var_sorts, &mut env) && !eval(s, &a.rhs, &a.var_sorts, &mut env);
                if failed {
                    bad = Some(t.to_vec());
                }
                failed
            })
        };
        if found {
            return Some((i, bad.unwrap()));
        }
    }
    None
}

/// A table over a product of sorts, indexed big endian.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Table {
    pub dom: Vec<usize>,
    pub values: Vec<usize>,
}

pub fn tuple_index(sizes: &[usize], dom: &[usize], args: &[usize]) -> usize {
    dom.iter().zip(args).fold(0, |acc, (&s, &a)| acc * sizes[s] + a)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FinModel {
    pub sizes: Vec<usize>,
    pub funcs: Vec<Table>,
    /// 0/1 entries
    pub rels: Vec<Table>,
    pub func_cods: Vec<usize>,
}

impl Structure for FinModel {
    fn size(&self, sort: usize) -> usize {
        self.sizes[sort]
    }
    fn holds(&self, rel: usize, args: &[usize]) -> bool {
        if rel < self.rels.len() {
            let t = &self.rels[rel];
            t.values[tuple_index(&self.sizes, &t.dom, args)] == 1
        } else {
            let t = &self.funcs[rel - self.rels.len()];
            let (x, y) = args.split_at(args.len() - 1);
            t.values[tuple_index(&self.sizes, &t.dom, x)] == y[0]
        }
    }
}

impl FinModel {
    pub fn new(sig: &Signature, sizes: Vec<usize>, funcs: Vec<Table>, rels: Vec<Table>) -> FinModel {
        FinModel { sizes, funcs, rels, func_cods: sig.funcs.iter().map(|f| f.2).collect() }
    }

    pub fn total_size(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn apply(&self, f: usize, args: &[usize]) -> usize {
        let t = &self.funcs[f];
        t.values[tuple_index(&self.sizes, &t.dom, args)]
    }

    /// True tuples of every flattened relation.
    pub fn facts(&self, th: &FlatTheory) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        for (r, (_, dom)) in th.rels.iter().enumerate() {
            let dims: Vec<usize> = dom.iter().map(|&s| self.sizes[s]).collect();
            for t in all_tuples(&dims) {
                if self.holds(r, &t) {
                    out.push((r, t));
                }
            }
        }
        out
    }

    pub fn satisfies(&self, th: &FlatTheory) -> bool {
        violation(self, &th.axioms).is_none()
    }

    /// The same model with elements of each sort renamed by `perm`.
    pub fn permuted(&self, perm: &[Vec<usize>]) -> FinModel {
        let remap = |t: &Table, value_sort: Option<usize>| {
            let dims: Vec<usize> = t.dom.iter().map(|&s| self.sizes[s]).collect();
            let mut values = vec![0; t.values.len()];
            for args in all_tuples(&dims) {
                let old = t.values[tuple_index(&self.sizes, &t.dom, &args)];
                let new_args: Vec<usize> = args.iter().zip(&t.dom).map(|(&a, &s)| perm[s][a]).collect();
                values[tuple_index(&self.sizes, &t.dom, &new_args)] = match value_sort {
                    Some(s) => perm[s][old],
                    None => old,
                };
            }
            Table { dom: t.dom.clone(), values }
        };
        FinModel {
            sizes: self.sizes.clone(),
            funcs: self.funcs.iter().zip(&self.func_cods).map(|(t, &c)| remap(t, Some(c))).collect(),
            rels: self.rels.iter().map(|t| remap(t, None)).collect(),
            func_cods: self.func_cods.clone(),
        }
    }

    /// Least relabelling under lexicographic order of the tables.
    pub fn canonical(&self) -> FinModel {
        let perms: Vec<Vec<Vec<usize>>> =
            self.sizes.iter().map(|&n| (0..n).permutations(n).collect()).collect();
        let mut best: Option<FinModel> = None;
        for choice in perms.iter().map(|v| v.iter()).multi_cartesian_product() {
            let p: Vec<Vec<usize>> = choice.into_iter().cloned().collect();
            let m = self.permuted(&p);
            if best.as_ref().is_none_or(|b| m.code() < b.code()) {
                best = Some(m);
            }
        }
        best.unwrap_or_else(|| self.clone())
    }

    fn code(&self) -> (Vec<usize>, Vec<usize>) {
        (
            self.funcs.iter().flat_map(|t| t.values.iter().copied()).collect(),
            self.rels.iter().flat_map(|t| t.values.iter().copied()).collect(),
        )
    }

    pub fn to_json(&self, sig: &Signature) -> Value {
        let sorts: BTreeMap<&str, usize> = sig.sorts.iter().map(String::as_str).zip(self.sizes.iter().copied()).collect();
        let mut funcs = BTreeMap::new();
        for (i, (name, dom, _)) in sig.funcs.iter().enumerate() {
            let dims: Vec<usize> = dom.iter().map(|&s| self.sizes[s]).collect();
            let rows: Vec<Vec<usize>> = all_tuples(&dims)
                .into_iter()
                .map(|mut a| {
                    let v = self.apply(i, &a);
                    a.push(v);
                    a
                })
                .collect();
            funcs.insert(name.as_str(), rows);
        }
        let mut rels = BTreeMap::new();
        for (i, (name, dom)) in sig.rels.iter().enumerate() {
            let dims: Vec<usize> = dom.iter().map(|&s| self.sizes[s]).collect();
            let rows: Vec<Vec<usize>> = all_tuples(&dims).into_iter().filter(|a| self.holds(i, a)).collect();
            rels.insert(name.as_str(), rows);
        }
        json!({ "sorts": sorts, "funcs": funcs, "rels": rels })
    }

    pub fn from_json(sig: &Signature, v: &Value) -> Result<FinModel, String> {
        let sizes: Vec<usize> = sig
            .sorts
            .iter()
            .map(|s| v["sorts"][s].as_u64().map(|n| n as usize).ok_or(format!("missing size of sort {s}")))
            .collect::<Result<_, _>>()?;
        let rows = |kind: &str, name: &str| -> Result<Vec<Vec<usize>>, String> {
            match &v[kind][name] {
                Value::Null => Ok(Vec::new()),
                x => serde_json::from_value(x.clone()).map_err(|e| format!("{kind}.{name}: {e}")),
            }
        };
        let mut funcs = Vec::new();
        for (name, dom, cod) in &sig.funcs {
            let dims: Vec<usize> = dom.iter().map(|&s| sizes[s]).collect();
            let n: usize = dims.iter().product();
            let mut values = vec![usize::MAX; n];
            for r in rows("funcs", name)? {
                if r.len() != dom.len() + 1 || r.iter().zip(dom.iter().chain([cod])).any(|(&x, &s)| x >= sizes[s]) {
                    return Err(format!("bad row {r:?} for {name}"));
                }
                values[tuple_index(&sizes, dom, &r[..dom.len()])] = r[dom.len()];
            }
            if values.contains(&usize::MAX) {
                return Err(format!("function {name} is not total"));
            }
            funcs.push(Table { dom: dom.clone(), values });
        }
        let mut rels = Vec::new();
        for (name, dom) in &sig.rels {
            let dims: Vec<usize> = dom.iter().map(|&s| sizes[s]).collect();
            let mut values = vec![0; dims.iter().product()];
            for r in rows("rels", name)? {
                if r.len() != dom.len() || r.iter().zip(dom).any(|(&x, &s)| x >= sizes[s]) {
                    return Err(format!("bad row {r:?} for {name}"));
                }
                values[tuple_index(&sizes, dom, &r)] = 1;
            }
            rels.push(Table { dom: dom.clone(), values });
        }
        Ok(FinModel::new(sig, sizes, funcs, rels))
    }
}

/// A homomorphism, one map per sort.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Hom {
    pub maps: Vec<Vec<usize>>,
}

impl Hom {
    pub fn identity(m: &FinModel) -> Hom {
        Hom { maps: m.sizes.iter().map(|&n| (0..n).collect()).collect() }
    }

    /// Applies the map to a tuple over the given sorts.
    pub fn on_tuple(&self, sorts: &[usize], t: &[usize]) -> Vec<usize> {
        sorts.iter().zip(t).map(|(&s, &a)| self.maps[s][a]).collect()
    }

    pub fn then(&self, g: &Hom) -> Hom {
        Hom { maps: self.maps.iter().zip(&g.maps).map(|(f, g)| f.iter().map(|&a| g[a]).collect()).collect() }
    }
}

/// All homomorphisms M → N, up to `cap`. `None` when the cap is hit.
pub fn homomorphisms(th: &FlatTheory, m: &FinModel, n: &FinModel, cap: usize) -> Option<Vec<Hom>> {
    // elements of M in sort order; each fact is checked once its last element is placed
    let slots: Vec<(usize, usize)> = (0..m.sizes.len()).flat_map(|s| (0..m.sizes[s]).map(move |e| (s, e))).collect();
    let pos = |s: usize, e: usize| slots.iter().position(|&x| x == (s, e)).unwrap();
    let mut due: Vec<Vec<(usize, Vec<(usize, usize)>)>> = vec![Vec::new(); slots.len()];
    let mut ground = Vec::new();
    for (r, args) in m.facts(th) {
        let sorts = &th.rels[r].1;
        let elems: Vec<(usize, usize)> = sorts.iter().copied().zip(args.iter().copied()).collect();
        match elems.iter().map(|&(s, e)| pos(s, e)).max() {
            Some(k) => due[k].push((r, elems)),
            None => ground.push(r),
        }
    }
    if ground.iter().any(|&r| !n.holds(r, &[])) {
        return Some(Vec::new());
    }
    let mut maps: Vec<Vec<usize>> = m.sizes.iter().map(|&k| vec![0; k]).collect();
    let mut out = Vec::new();
    fn go(
        k: usize,
        slots: &[(usize, usize)],
        due: &[Vec<(usize, Vec<(usize, usize)>)>],
        n: &FinModel,
        maps: &mut Vec<Vec<usize>>,
        out: &mut Vec<Hom>,
        cap: usize,
    ) -> bool {
        if k == slots.len() {
            out.push(Hom { maps: maps.clone() });
            return out.len() <= cap;
        }
        let (s, e) = slots[k];
        for b in 0..n.sizes[s] {
            maps[s][e] = b;
            let ok = due[k].iter().all(|(r, elems)| {
                let img: Vec<usize> = elems.iter().map(|&(q, x)| maps[q][x]).collect();
                n.holds(*r, &img)
            });
            if ok && !go(k + 1, slots, due, n, maps, out, cap) {
                return false;
            }
        }
        true
    }
    if go(0, &slots, &due, n, &mut maps, &mut out, cap) {
        Some(out)
    } else {
        None
    }
}

pub fn is_hom(th: &FlatTheory, m: &FinModel, n: &FinModel, h: &Hom) -> bool {
    m.facts(th).iter().all(|(r, args)| n.holds(*r, &h.on_tuple(&th.rels[*r].1, args)))
}

pub fn isomorphic(a: &FinModel, b: &FinModel) -> bool {
    a.sizes == b.sizes && a.canonical() == b.canonical()
}

pub const DEFAULT_STRUCTURE_CAP: u128 = 1 << 22;
pub const DEFAULT_HOM_CAP: usize = 1 << 12;

/// Number of raw structures with the given sort sizes.
pub fn structure_count(sig: &Signature, sizes: &[usize]) -> u128 {
    let card = |dom: &[usize]| dom.iter().map(|&s| sizes[s] as u128).product::<u128>();
    let mut n: u128 = 1;
    for (_, dom, cod) in &sig.funcs {
        let k = card(dom);
        n = n.saturating_mul((sizes[*cod] as u128).saturating_pow(k.min(u32::MAX as u128) as u32));
    }
    for (_, dom) in &sig.rels {
        let k = card(dom);
        n = n.saturating_mul(if k >= 127 { u128::MAX } else { 1u128 << k });
    }
    n
}

/// Every model with at most `max` elements in each sort, one per
/// isomorphism class, ordered by sizes and then by canonical tables.
pub fn enumerate_models(th: &FlatTheory, max: usize, cap: u128) -> Result<Vec<FinModel>, String> {
    let sig = &th.sig;
    let ns = sig.sorts.len();
    let size_vecs: Vec<Vec<usize>> = (0..ns).map(|_| 0..=max).multi_cartesian_product().collect();
    let size_vecs = if ns == 0 { vec![Vec::new()] } else { size_vecs };
    let total: u128 = size_vecs.iter().map(|s| structure_count(sig, s)).fold(0u128, |a, b| a.saturating_add(b));
    if total > cap {
        return Err(format!("{total} raw structures exceed the cap {cap}"));
    }
    let mut out: Vec<FinModel> = Vec::new();
    let mut sorted_sizes = size_vecs;
    sorted_sizes.sort_by_key(|s| (s.iter().sum::<usize>(), s.clone()));
    for sizes in sorted_sizes {
        // one digit per function entry and per relation entry
        let mut digits: Vec<usize> = Vec::new();
        let mut shapes: Vec<(bool, usize, Vec<usize>, usize)> = Vec::new();
        for (_, dom, cod) in &sig.funcs {
            let k: usize = dom.iter().map(|&s| sizes[s]).product();
            shapes.push((true, digits.len(), dom.clone(), k));
            digits.extend(std::iter::repeat_n(sizes[*cod], k));
        }
        for (_, dom) in &sig.rels {
            let k: usize = dom.iter().map(|&s| sizes[s]).product();
            shapes.push((false, digits.len(), dom.clone(), k));
            digits.extend(std::iter::repeat_n(2, k));
        }
        let mut seen: HashMap<FinModel, ()> = HashMap::new();
        let mut fresh = Vec::new();
        for_each_tuple(&digits, |d| {
            let mut funcs = Vec::new();
            let mut rels = Vec::new();
            for (is_f, at, dom, k) in &shapes {
                let t = Table { dom: dom.clone(), values: d[*at..at + k].to_vec() };
                if *is_f {
                    funcs.push(t)
                } else {
                    rels.push(t)
                }
            }
            let m = FinModel::new(sig, sizes.clone(), funcs, rels);
            if m.satisfies(th) {
                let c = m.canonical();
                if seen.insert(c.clone(), ()).is_none() {
                    fresh.push(c);
                }
            }
            false
        });
        fresh.sort();
        out.extend(fresh);
    }
    Ok(out)
}

/// A finite full subcategory of models with all homomorphisms precomputed.
#[derive(Debug, Clone)]
pub struct Family {
    pub theory: FlatTheory,
    pub models: Vec<FinModel>,
    pub names: Vec<String>,
    homs: Vec<Vec<Vec<Hom>>>,
}

impl Family {
    pub fn new(theory: FlatTheory, models: Vec<FinModel>, names: Vec<String>) -> Result<Family, String> {
        let mut homs = Vec::new();
        for m in &models {
            let mut row = Vec::new();
            for n in &models {
                row.push(
                    homomorphisms(&theory, m, n, DEFAULT_HOM_CAP)
                        .ok_or(format!("more than {DEFAULT_HOM_CAP} homomorphisms between two members"))?,
                );
            }
            homs.push(row);
        }
        Ok(Family { theory, models, names, homs })
    }

    /// Models named by sizes and position, `M<sizes>_<i>`.
    pub fn exhaustive(theory: FlatTheory, max: usize) -> Result<Family, String> {
        let models = enumerate_models(&theory, max, DEFAULT_STRUCTURE_CAP)?;
        let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
        let names = models
            .iter()
            .map(|m| {
                let c = count.entry(m.sizes.clone()).or_default();
                *c += 1;
                format!("M{}_{}", m.sizes.iter().map(|s| s.to_string()).join(""), *c)
            })
            .collect();
        Family::new(theory, models, names)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn homs(&self, i: usize, j: usize) -> &[Hom] {
        &self.homs[i][j]
    }

    pub fn position_iso(&self, m: &FinModel) -> Option<usize> {
        let c = m.canonical();
        self.models.iter().position(|x| x.sizes == m.sizes && x.canonical() == c)
    }

    /// The full subfamily on the kept members.
    pub fn restrict(&self, keep: &[usize]) -> Family {
        Family {
            theory: self.theory.clone(),
            models: keep.iter().map(|&i| self.models[i].clone()).collect(),
            names: keep.iter().map(|&i| self.names[i].clone()).collect(),
            homs: keep.iter().map(|&i| keep.iter().map(|&j| self.homs[i][j].clone()).collect()).collect(),
        }
    }

    pub fn without(&self, drop: usize) -> Family {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| i != drop).collect();
        self.restrict(&keep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::syntax::parse_theory;

    fn flat(src: &str) -> FlatTheory {
        flatten(&parse_theory(src).unwrap())
    }

    // Burnside: classes = average number of structures fixed by a permutation
    fn burnside_binary_relations(n: usize) -> usize {
        let mut total = 0usize;
        for p in (0..n).permutations(n) {
            let mut seen = vec![false; n * n];
            let mut cycles = 0;
            for start in 0..n * n {
                if seen[start] {
                    continue;
                }
                cycles += 1;
                let mut x = start;
                while !seen[x] {
                    seen[x] = true;
                    x = p[x / n] * n + p[x % n];
                }
            }
            total += 1 << cycles;
        }
        total / (1..=n).product::<usize>()
    }

    #[test]
    fn relation_counts_match_burnside() {
        let th = flat("sort V; rel R : V, V;");
        let ms = enumerate_models(&th, 3, DEFAULT_STRUCTURE_CAP).unwrap();
        for n in 0..=3 {
            let got = ms.iter().filter(|m| m.sizes == [n]).count();
            assert_eq!(got, burnside_binary_relations(n), "size {n}");
        }
    }

    #[test]
    fn unary_functions_and_partitions() {
        let th = flat("sort V; func s : V -> V;");
        let ms = enumerate_models(&th, 3, DEFAULT_STRUCTURE_CAP).unwrap();
        let by: Vec<usize> = (0..=3).map(|n| ms.iter().filter(|m| m.sizes == [n]).count()).collect();
        assert_eq!(by, vec![1, 1, 3, 7]);
        let th = flat(
            "sort V; rel E : V, V; x | true |- E(x, x); x, y | E(x, y) |- E(y, x);
             x, y, z | E(x, y) and E(y, z) |- E(x, z);",
        );
        let ms = enumerate_models(&th, 3, DEFAULT_STRUCTURE_CAP).unwrap();
        let by: Vec<usize> = (0..=3).map(|n| ms.iter().filter(|m| m.sizes == [n]).count()).collect();
        assert_eq!(by, vec![1, 1, 2, 3]);
    }

    #[test]
    fn homs_match_brute_force() {
        let th = flat("sort V; rel R : V, V; func s : V -> V;");
        let ms = enumerate_models(&th, 2, DEFAULT_STRUCTURE_CAP).unwrap();
        for m in ms.iter().step_by(3) {
            for n in ms.iter().step_by(5) {
                let homs = homomorphisms(&th, m, n, 1 << 10).unwrap();
                let dims = vec![n.sizes[0]; m.sizes[0]];
                let brute: Vec<Hom> = all_tuples(&dims)
                    .into_iter()
                    .map(|t| Hom { maps: vec![t] })
                    .filter(|h| {
                        (0..m.sizes[0]).all(|a| h.maps[0][m.apply(0, &[a])] == n.apply(0, &[h.maps[0][a]]))
                            && all_tuples(&[m.sizes[0], m.sizes[0]])
                                .iter()
                                .all(|p| !m.holds(0, p) || n.holds(0, &h.on_tuple(&[0, 0], p)))
                    })
                    .collect();
                assert_eq!(homs, brute);
                assert!(homs.iter().all(|h| is_hom(&th, m, n, h)));
            }
        }
    }

    #[test]
    fn canonical_form_is_an_invariant() {
        let th = flat("sort V; rel R : V, V; rel P : V;");
        let ms = enumerate_models(&th, 3, DEFAULT_STRUCTURE_CAP).unwrap();
        let m = ms.iter().rev().find(|m| m.sizes == [3]).unwrap();
        for p in (0..3).permutations(3) {
            assert_eq!(m.permuted(&[p]).canonical(), m.canonical());
        }
        assert!(isomorphic(m, &m.permuted(&[vec![2, 0, 1]])));
    }

    #[test]
    fn json_round_trip() {
        let th = flat("sort A, B; func f : A -> B; rel R : A, B;");
        let ms = enumerate_models(&th, 2, DEFAULT_STRUCTURE_CAP).unwrap();
        for m in &ms {
            let v = m.to_json(&th.sig);
            assert_eq!(&FinModel::from_json(&th.sig, &v).unwrap(), m);
        }
        let bad = json!({"sorts": {"A": 1, "B": 1}, "funcs": {"f": []}});
        assert!(FinModel::from_json(&th.sig, &bad).is_err());
    }

    #[test]
    fn structure_cap_refuses() {
        let th = flat("sort V; rel R : V, V, V;");
        assert!(enumerate_models(&th, 3, 1 << 20).is_err());
    }

    #[test]
    fn family_restriction_keeps_homs() {
        let th = flat("sort V; func s : V -> V;");
        let f = Family::exhaustive(th, 2).unwrap();
        assert_eq!(f.len(), 5);
        let g = f.without(0);
        assert_eq!(g.homs(0, 1), f.homs(1, 2));
        for i in 0..f.len() {
            assert!(f.homs(i, i).contains(&Hom::identity(&f.models[i])));
        }
    }
}
