//! Forward chaining for coherent theories.
//!
//! Rounds are breadth fair: every trigger violated at the start of a round
//! is queued in axiom order, then context assignments in lexicographic order,
//! and each is repaired unless an earlier repair already satisfied it. A
//! repair picks a disjunct of the right-hand side and a witness for each
//! existential variable. Witnesses are tried among the existing elements of
//! the sort first, in index order rotated by the seed, then a fresh element,
//! which gets the next index of its sort. The first choice is followed and
//! the others are kept for backtracking, depth first.
//!
//! Identifying elements renumbers them, so the rest of the round is dropped
//! and the next round rescans.
//!
//! With witness reuse, `x | true |- exists y. R(x,y)` from one element
//! closes with the loop R(0,0) after one round.

use super::models::{eval, for_each_tuple, FinModel, FlatSequent, FlatTheory, Ff, Structure, Table};
use petgraph::unionfind::UnionFind;
use serde::Serialize;
use std::collections::{BTreeSet, VecDeque};
use thiserror::Error;

/// A finite structure with possibly partial function graphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartialStructure {
    pub sizes: Vec<usize>,
    pub facts: BTreeSet<(usize, Vec<usize>)>,
}

impl PartialStructure {
    pub fn points(sizes: Vec<usize>) -> Self {
        PartialStructure { sizes, facts: BTreeSet::new() }
    }

    pub fn from_model(th: &FlatTheory, m: &FinModel) -> Self {
        PartialStructure { sizes: m.sizes.clone(), facts: m.facts(th).into_iter().collect() }
    }

    /// Defined when every function graph is total and single valued.
    pub fn to_model(&self, th: &FlatTheory) -> Option<FinModel> {
        let nr = th.sig.rels.len();
        let mut rels = Vec::new();
        for (r, (_, dom)) in th.sig.rels.iter().enumerate() {
            let k: usize = dom.iter().map(|&s| self.sizes[s]).product();
            let mut values = vec![0; k];
            for (q, args) in &self.facts {
                if *q == r {
                    values[super::models::tuple_index(&self.sizes, dom, args)] = 1;
                }
            }
            rels.push(Table { dom: dom.clone(), values });
        }
        let mut funcs = Vec::new();
        for (f, (_, dom, _)) in th.sig.funcs.iter().enumerate() {
            let k: usize = dom.iter().map(|&s| self.sizes[s]).product();
            let mut values = vec![usize::MAX; k];
            for (q, args) in &self.facts {
                if *q == nr + f {
                    let i = super::models::tuple_index(&self.sizes, dom, &args[..dom.len()]);
                    if values[i] != usize::MAX && values[i] != args[dom.len()] {
                        return None;
                    }
                    values[i] = args[dom.len()];
                }
            }
            if values.contains(&usize::MAX) {
                return None;
            }
            funcs.push(Table { dom: dom.clone(), values });
        }
        Some(FinModel::new(&th.sig, self.sizes.clone(), funcs, rels))
    }

    pub fn to_json(&self, th: &FlatTheory) -> serde_json::Value {
        let facts: Vec<serde_json::Value> =
            self.facts.iter().map(|(r, args)| serde_json::json!([th.rels[*r].0, args])).collect();
        let sizes: std::collections::BTreeMap<&str, usize> =
            th.sig.sorts.iter().map(String::as_str).zip(self.sizes.iter().copied()).collect();
        serde_json::json!({ "sorts": sizes, "facts": facts })
    }

    /// Identifies elements per sort and renumbers the survivors densely,
    /// keeping the least index of each class first.
    fn merge(&mut self, th: &FlatTheory, eqs: &[(usize, usize, usize)]) {
        if eqs.is_empty() {
            return;
        }
        let mut relabel: Vec<Vec<usize>> = Vec::new();
        for s in 0..self.sizes.len() {
            let n = self.sizes[s];
            let mut uf = UnionFind::<usize>::new(n);
            for &(q, a, b) in eqs {
                if q == s {
                    uf.union(a, b);
                }
            }
            let mut root_new = vec![usize::MAX; n];
            let mut map = vec![0; n];
            let mut next = 0;
            for (e, slot) in map.iter_mut().enumerate() {
                let r = uf.find(e);
                if root_new[r] == usize::MAX {
                    root_new[r] = next;
                    next += 1;
                }
                *slot = root_new[r];
            }
            self.sizes[s] = next;
            relabel.push(map);
        }
        self.facts = std::mem::take(&mut self.facts)
            .into_iter()
            .map(|(r, args)| {
                let sorts = &th.rels[r].1;
                (r, args.iter().zip(sorts).map(|(&a, &s)| relabel[s][a]).collect())
            })
            .collect();
    }
}

impl Structure for PartialStructure {
    fn size(&self, sort: usize) -> usize {
        self.sizes[sort]
    }
    fn holds(&self, rel: usize, args: &[usize]) -> bool {
        self.facts.contains(&(rel, args.to_vec()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChaseConfig {
    /// most elements of any one sort
    pub max_elements: usize,
    /// rounds along one branch
    pub max_rounds: usize,
    /// branch states expanded overall
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for ChaseConfig {
    fn default() -> Self {
        ChaseConfig { max_elements: 8, max_rounds: 64, max_steps: 1 << 14, seed: 0 }
    }
}

impl ChaseConfig {
    /// One number for all three limits, as read from the environment.
    pub fn with_budget(budget: usize) -> Self {
        ChaseConfig { max_elements: budget.clamp(1, 64), max_rounds: budget.max(1) * 8, max_steps: budget.max(1) << 11, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChaseRun {
    pub model: FinModel,
    pub rounds: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, Error)]
pub enum ChaseError {
    /// Every branch died on an empty right-hand side.
    #[error("refuted after {steps} steps: every branch reaches false")]
    Refuted { partial: PartialStructure, steps: usize },
    #[error("budget exhausted after {steps} steps: {reason}")]
    Exhausted { partial: PartialStructure, steps: usize, reason: String },
}

impl ChaseError {
    pub fn partial(&self) -> &PartialStructure {
        match self {
            ChaseError::Refuted { partial, .. } | ChaseError::Exhausted { partial, .. } => partial,
        }
    }
}

#[derive(Debug, Clone)]
struct Disjunct {
    ex: Vec<usize>,
    atoms: Vec<Ff>,
}

fn dnf(f: &Ff) -> Vec<Disjunct> {
    match f {
        Ff::True => vec![Disjunct { ex: Vec::new(), atoms: Vec::new() }],
        Ff::False => Vec::new(),
        Ff::Eq(..) | Ff::Rel(..) => vec![Disjunct { ex: Vec::new(), atoms: vec![f.clone()] }],
        Ff::Or(fs) => fs.iter().flat_map(dnf).collect(),
        Ff::And(fs) => fs.iter().fold(dnf(&Ff::True), |acc, g| {
            let ds = dnf(g);
            let mut out = Vec::new();
            for a in &acc {
                for d in &ds {
                    let mut ex = a.ex.clone();
                    ex.extend(&d.ex);
                    let mut atoms = a.atoms.clone();
                    atoms.extend(d.atoms.iter().cloned());
                    out.push(Disjunct { ex, atoms });
                }
            }
            out
        }),
        Ff::Exists(vs, body) => dnf(body)
            .into_iter()
            .map(|mut d| {
                let mut ex = vs.clone();
                ex.extend(d.ex);
                d.ex = ex;
                d
            })
            .collect(),
    }
}

struct Rule {
    seq: FlatSequent,
    rhs: Vec<Disjunct>,
}

#[derive(Clone)]
struct Branch {
    st: PartialStructure,
    queue: VecDeque<(usize, Vec<usize>)>,
    round: usize,
}

fn violated(r: &Rule, st: &PartialStructure, assign: &[usize]) -> bool {
    let mut env = vec![0; r.seq.var_sorts.len()];
    env[..assign.len()].copy_from_slice(assign);
    eval(st, &r.seq.lhs, &r.seq.var_sorts, &mut env) && !eval(st, &r.seq.rhs, &r.seq.var_sorts, &mut env)
}

fn triggers(rules: &[Rule], st: &PartialStructure) -> VecDeque<(usize, Vec<usize>)> {
    let mut out = VecDeque::new();
    for (i, r) in rules.iter().enumerate() {
        let dims: Vec<usize> = r.seq.var_sorts[..r.seq.ctx].iter().map(|&s| st.sizes[s]).collect();
        for_each_tuple(&dims, |t| {
            if violated(r, st, t) {
                out.push_back((i, t.to_vec()));
            }
            false
        });
    }
    out
}

/// Witness options per existential variable: existing elements, then
/// `usize::MAX` for a fresh one.
fn options(st: &PartialStructure, sort: usize, cfg: &ChaseConfig) -> Vec<usize> {
    let n = st.sizes[sort];
    let mut v: Vec<usize> = (0..n).collect();
    if n > 0 {
        v.rotate_left((cfg.seed % n as u64) as usize);
    }
    if n < cfg.max_elements {
        v.push(usize::MAX);
    }
    v
}

/// Applies one repair; true when elements were identified.
// a fresh witness was ruled out by the element budget
fn d_at_cap(st: &PartialStructure, r: &Rule, cfg: &ChaseConfig) -> bool {
    r.rhs.iter().any(|d| d.ex.iter().any(|&v| st.sizes[r.seq.var_sorts[v]] >= cfg.max_elements))
}

fn apply(th: &FlatTheory, r: &Rule, d: &Disjunct, choice: &[usize], assign: &[usize], st: &mut PartialStructure) -> bool {
    let mut env = vec![0; r.seq.var_sorts.len()];
    env[..assign.len()].copy_from_slice(assign);
    for (&v, &c) in d.ex.iter().zip(choice) {
        let s = r.seq.var_sorts[v];
        env[v] = if c == usize::MAX {
            st.sizes[s] += 1;
            st.sizes[s] - 1
        } else {
            c
        };
    }
    let mut eqs = Vec::new();
    for a in &d.atoms {
        match a {
            Ff::Rel(q, args) => {
                st.facts.insert((*q, args.iter().map(|&v| env[v]).collect()));
            }
            Ff::Eq(x, y) => eqs.push((r.seq.var_sorts[*x], env[*x], env[*y])),
            _ => unreachable!("disjuncts hold atoms only"),
        }
    }
    let merged = eqs.iter().any(|&(_, a, b)| a != b);
    st.merge(th, &eqs);
    merged
}

/// Chases `start` to a model of the theory, including totality and
/// single-valuedness of function symbols.
pub fn chase(th: &FlatTheory, start: &PartialStructure, cfg: &ChaseConfig) -> Result<ChaseRun, ChaseError> {
    let mut seqs = th.axioms.clone();
    seqs.extend(th.function_axioms());
    let rules: Vec<Rule> = seqs.into_iter().map(|s| Rule { rhs: dnf(&s.rhs), seq: s }).collect();
    let mut stack = vec![Branch { st: start.clone(), queue: VecDeque::new(), round: 0 }];
    let mut steps = 0;
    let mut cut: Option<(PartialStructure, String)> = None;
    let mut last = start.clone();
    'branches: while let Some(mut b) = stack.pop() {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(ChaseError::Exhausted { partial: b.st, steps, reason: format!("more than {} steps", cfg.max_steps) });
        }
        loop {
            let Some((ri, assign)) = b.queue.pop_front() else {
                let next = triggers(&rules, &b.st);
                if next.is_empty() {
                    let model = b.st.to_model(th).expect("a closed chase gives total functions");
                    return Ok(ChaseRun { model, rounds: b.round, steps });
                }
                if b.round >= cfg.max_rounds {
                    cut = Some((b.st.clone(), format!("more than {} rounds", cfg.max_rounds)));
                    continue 'branches;
                }
                b.round += 1;
                b.queue = next;
                continue;
            };
            let r = &rules[ri];
            if !violated(r, &b.st, &assign) {
                continue;
            }
            let mut alts: Vec<(usize, Vec<usize>)> = Vec::new();
            let mut pruned = d_at_cap(&b.st, r, cfg);
            for (di, d) in r.rhs.iter().enumerate() {
                let opts: Vec<Vec<usize>> = d.ex.iter().map(|&v| options(&b.st, r.seq.var_sorts[v], cfg)).collect();
                let dims: Vec<usize> = opts.iter().map(Vec::len).collect();
                for_each_tuple(&dims, |t| {
                    let choice: Vec<usize> = t.iter().zip(&opts).map(|(&i, o)| o[i]).collect();
                    // fresh elements of one sort must fit together
                    let fits = (0..b.st.sizes.len()).all(|s| {
                        let extra = d.ex.iter().zip(&choice).filter(|(&v, &c)| c == usize::MAX && r.seq.var_sorts[v] == s).count();
                        b.st.sizes[s] + extra <= cfg.max_elements
                    });
                    if fits {
                        alts.push((di, choice));
                    } else {
                        pruned = true;
                    }
                    false
                });
            }
            if pruned {
                cut = Some((b.st.clone(), format!("element budget reached repairing {}", r.seq.label)));
            }
            if alts.is_empty() {
                last = b.st;
                continue 'branches;
            }
            if alts.len() == 1 {
                let (di, choice) = &alts[0];
                if apply(th, r, &r.rhs[*di], choice, &assign, &mut b.st) {
                    b.queue.clear();
                }
                continue;
            }
            for (di, choice) in alts.iter().rev() {
                let mut child = b.clone();
                if apply(th, r, &r.rhs[*di], choice, &assign, &mut child.st) {
                    child.queue.clear();
                }
                stack.push(child);
            }
            continue 'branches;
        }
    }
    match cut {
        Some((partial, reason)) => Err(ChaseError::Exhausted { partial, steps, reason }),
        None => Err(ChaseError::Refuted { partial: last, steps }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::models::flatten;
    use crate::logic::syntax::parse_theory;

    fn flat(src: &str) -> FlatTheory {
        flatten(&parse_theory(src).unwrap())
    }

    #[test]
    fn successor_closes_with_a_loop() {
        let th = flat("sort V; rel R : V, V; x | true |- exists y. R(x, y);");
        let run = chase(&th, &PartialStructure::points(vec![1]), &ChaseConfig::default()).unwrap();
        assert_eq!(run.model.sizes, vec![1]);
        assert!(run.model.holds(0, &[0, 0]));
        assert_eq!(run.rounds, 1);
    }

    #[test]
    fn false_is_refuted() {
        let th = flat("sort V; true |- false;");
        match chase(&th, &PartialStructure::points(vec![1]), &ChaseConfig::default()) {
            Err(ChaseError::Refuted { partial, .. }) => assert_eq!(partial.sizes, vec![1]),
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn empty_theory_returns_start() {
        let th = flat("sort V; rel P : V;");
        let mut start = PartialStructure::points(vec![2]);
        start.facts.insert((0, vec![1]));
        let run = chase(&th, &start, &ChaseConfig::default()).unwrap();
        assert_eq!(PartialStructure::from_model(&th, &run.model), start);
        assert_eq!(run.rounds, 0);
    }

    #[test]
    fn colouring_backtracks_to_a_two_cycle() {
        let th = flat(
            "sort V; rel R : V, V; rel Red : V; rel Blue : V;
             x | true |- Red(x) or Blue(x);
             x | Red(x) and Blue(x) |- false;
             x, y | R(x, y) and Red(x) |- Blue(y);
             x, y | R(x, y) and Blue(x) |- Red(y);
             x | true |- exists y. R(x, y);",
        );
        let run = chase(&th, &PartialStructure::points(vec![1]), &ChaseConfig::default()).unwrap();
        assert!(run.model.satisfies(&th));
        assert_eq!(run.model.sizes, vec![2]);
    }

    #[test]
    fn functions_get_tables() {
        let th = flat("sort V; func s : V -> V; x | true |- s(s(x)) = x;");
        let run = chase(&th, &PartialStructure::points(vec![1]), &ChaseConfig::default()).unwrap();
        assert!(run.model.satisfies(&th));
        assert_eq!(run.model.apply(0, &[0]), 0);
    }

    #[test]
    fn equalities_merge_elements() {
        let th = flat("sort V; x, y | true |- x = y;");
        let run = chase(&th, &PartialStructure::points(vec![3]), &ChaseConfig::default()).unwrap();
        assert_eq!(run.model.sizes, vec![1]);
    }

    #[test]
    fn exhausted_keeps_partial_structure() {
        // an injective successor with no fixed point at all needs infinitely many elements
        let th = flat(
            "sort V; rel R : V, V; rel L : V, V;
             x | true |- exists y. R(x, y);
             x, y | R(x, y) |- L(x, y);
             x | L(x, x) |- false;
             x, y, z | L(x, y) and R(y, z) |- L(x, z);",
        );
        let cfg = ChaseConfig { max_elements: 3, ..ChaseConfig::default() };
        match chase(&th, &PartialStructure::points(vec![1]), &cfg) {
            Err(ChaseError::Exhausted { partial, .. }) => assert!(partial.sizes[0] >= 1),
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn seed_changes_witness_order() {
        let th = flat("sort V; rel R : V, V; x | true |- exists y. R(x, y);");
        let start = PartialStructure::points(vec![2]);
        let a = chase(&th, &start, &ChaseConfig::default()).unwrap().model;
        let b = chase(&th, &start, &ChaseConfig { seed: 1, ..ChaseConfig::default() }).unwrap().model;
        assert!(a.holds(0, &[0, 0]));
        assert!(b.holds(0, &[0, 1]));
        // the same seed gives the same model
        assert_eq!(b, chase(&th, &start, &ChaseConfig { seed: 1, ..ChaseConfig::default() }).unwrap().model);
    }
}
