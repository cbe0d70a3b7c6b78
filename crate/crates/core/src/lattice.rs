//! Finite posets and bounded distributive lattices.
//!
//! Two representations live here. [`FinDistLattice`] keeps explicit order,
//! meet and join tables over indexed elements with string names; it is what
//! JSON files and the small exhaustive suites use. [`DownLat`] is the
//! Birkhoff form: a quasi-order on at most 128 points, elements are the
//! down-closed point sets stored as `u128` bitsets. Fibers of hyperdoctrines
//! use the second form because products of finite sets make tables too big.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// A subset of at most 128 points.
pub type Set = u128;

pub const MAX_POINTS: usize = 128;

pub fn bit(i: usize) -> Set {
    1u128 << i
}

pub fn full(n: usize) -> Set {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

/// Indices of the set bits, ascending.
pub fn members(s: Set) -> impl Iterator<Item = usize> {
    let mut rest = s;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        }
    })
}

pub fn subset(a: Set, b: Set) -> bool {
    a & !b == 0
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("relation is not reflexive at {0}")]
    NotReflexive(String),
    #[error("relation is not antisymmetric: {0} and {1}")]
    NotAntisymmetric(String, String),
    #[error("relation is not transitive: {0} <= {1} <= {2}")]
    NotTransitive(String, String, String),
    #[error("no meet for {0} and {1}")]
    NoMeet(String, String),
    #[error("no join for {0} and {1}")]
    NoJoin(String, String),
    #[error("empty carrier has no bounds")]
    Empty,
    #[error("not distributive: x={x}, y={y}, z={z}")]
    NotDistributive { x: String, y: String, z: String },
    #[error("given {op} table disagrees with the order at ({a},{b})")]
    TableMismatch { op: String, a: String, b: String },
    #[error("unknown element {0}")]
    Unknown(String),
    #[error("duplicate element {0}")]
    Duplicate(String),
    #[error("too many points: {0} (limit {MAX_POINTS})")]
    TooManyPoints(usize),
    #[error("json: {0}")]
    Json(String),
}

/// A finite partial order with named elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinPoset {
    pub names: Vec<String>,
    leq: Vec<Vec<bool>>,
}

impl FinPoset {
    /// Validates the relation as given.
    pub fn new(names: Vec<String>, leq: Vec<Vec<bool>>) -> Result<Self, LatticeError> {
        let n = names.len();
        check_names(&names)?;
        for i in 0..n {
            if !leq[i][i] {
                return Err(LatticeError::NotReflexive(names[i].clone()));
            }
            for j in 0..n {
                if i != j && leq[i][j] && leq[j][i] {
                    return Err(LatticeError::NotAntisymmetric(names[i].clone(), names[j].clone()));
                }
                for k in 0..n {
                    if leq[i][j] && leq[j][k] && !leq[i][k] {
                        return Err(LatticeError::NotTransitive(
                            names[i].clone(),
                            names[j].clone(),
                            names[k].clone(),
                        ));
                    }
                }
            }
        }
        Ok(FinPoset { names, leq })
    }

    /// Reflexive-transitive closure of the given pairs, then validation.
    pub fn from_pairs(names: Vec<String>, pairs: &[(usize, usize)]) -> Result<Self, LatticeError> {
        let n = names.len();
        let mut leq = vec![vec![false; n]; n];
        for i in 0..n {
            leq[i][i] = true;
        }
        for &(a, b) in pairs {
            leq[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        FinPoset::new(names, leq)
    }

    pub fn antichain(n: usize) -> Self {
        let names = (0..n).map(|i| i.to_string()).collect();
        FinPoset::from_pairs(names, &[]).unwrap()
    }

    pub fn chain(n: usize) -> Self {
        let names = (0..n).map(|i| i.to_string()).collect();
        let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        FinPoset::from_pairs(names, &pairs).unwrap()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn is_downset(&self, s: &[bool]) -> bool {
        (0..self.len()).all(|b| !s[b] || (0..self.len()).all(|a| !self.leq[a][b] || s[a]))
    }

    /// All order isomorphisms would be overkill; this finds one if any.
    pub fn iso(&self, other: &FinPoset) -> Option<Vec<usize>> {
        relation_iso(&self.leq, &other.leq)
    }

    /// The quasi-order in Birkhoff form: `below[p]` is the principal downset.
    pub fn to_downlat(&self) -> Result<DownLat, LatticeError> {
        let n = self.len();
        if n > MAX_POINTS {
            return Err(LatticeError::TooManyPoints(n));
        }
        let below = (0..n)
            .map(|p| (0..n).filter(|&q| self.leq[q][p]).fold(0, |s, q| s | bit(q)))
            .collect();
        Ok(DownLat::new(below))
    }
}

fn check_names(names: &[String]) -> Result<(), LatticeError> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(LatticeError::Duplicate(n.clone()));
        }
    }
    Ok(())
}

/// Backtracking search for a bijection preserving and reflecting `r`.
pub fn relation_iso(r: &[Vec<bool>], s: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = r.len();
    if n != s.len() {
        return None;
    }
    let sig = |m: &[Vec<bool>], i: usize| {
        let up = (0..n).filter(|&j| m[i][j]).count();
        let down = (0..n).filter(|&j| m[j][i]).count();
        (up, down)
    };
    let rs: Vec<_> = (0..n).map(|i| sig(r, i)).collect();
    let ss: Vec<_> = (0..n).map(|i| sig(s, i)).collect();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn go(
        i: usize,
        r: &[Vec<bool>],
        s: &[Vec<bool>],
        rs: &[(usize, usize)],
        ss: &[(usize, usize)],
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        let n = r.len();
        if i == n {
            return true;
        }
        for c in 0..n {
            if used[c] || rs[i] != ss[c] {
                continue;
            }
            let ok = (0..i).all(|j| r[i][j] == s[c][map[j]] && r[j][i] == s[map[j]][c]) && r[i][i] == s[c][c];
            if !ok {
                continue;
            }
            map[i] = c;
            used[c] = true;
            if go(i + 1, r, s, rs, ss, map, used) {
                return true;
            }
            used[c] = false;
        }
        false
    }
    if go(0, r, s, &rs, &ss, &mut map, &mut used) {
        Some(map)
    } else {
        None
    }
}

/// A finite bounded distributive lattice with explicit tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinDistLattice {
    pub names: Vec<String>,
    leq: Vec<Vec<bool>>,
    meet: Vec<Vec<usize>>,
    join: Vec<Vec<usize>>,
    bot: usize,
    top: usize,
}

struct Tables {
    meet: Vec<Vec<usize>>,
    join: Vec<Vec<usize>>,
    bot: usize,
    top: usize,
}

fn lattice_tables(p: &FinPoset) -> Result<Tables, LatticeError> {
    let n = p.len();
    if n == 0 {
        return Err(LatticeError::Empty);
    }
    let bound = |upper: bool, a: usize, b: usize| -> Option<usize> {
        let cands: Vec<usize> = (0..n)
            .filter(|&c| if upper { p.leq(a, c) && p.leq(b, c) } else { p.leq(c, a) && p.leq(c, b) })
            .collect();
        cands
            .iter()
            .copied()
            .find(|&c| cands.iter().all(|&d| if upper { p.leq(c, d) } else { p.leq(d, c) }))
    };
    let mut meet = vec![vec![0; n]; n];
    let mut join = vec![vec![0; n]; n];
    for a in 0..n {
        for b in 0..n {
            meet[a][b] = bound(false, a, b)
                .ok_or_else(|| LatticeError::NoMeet(p.names[a].clone(), p.names[b].clone()))?;
            join[a][b] = bound(true, a, b)
                .ok_or_else(|| LatticeError::NoJoin(p.names[a].clone(), p.names[b].clone()))?;
        }
    }
    let bot = (0..n).find(|&c| (0..n).all(|d| p.leq(c, d))).ok_or(LatticeError::Empty)?;
    let top = (0..n).find(|&c| (0..n).all(|d| p.leq(d, c))).ok_or(LatticeError::Empty)?;
    Ok(Tables { meet, join, bot, top })
}

fn distributivity_witness(t: &Tables) -> Option<(usize, usize, usize)> {
    let n = t.meet.len();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let l = t.meet[x][t.join[y][z]];
                let r = t.join[t.meet[x][y]][t.meet[x][z]];
                if l != r {
                    return Some((x, y, z));
                }
            }
        }
    }
    None
}

/// Whether the poset is a lattice satisfying x∧(y∨z) = (x∧y)∨(x∧z).
/// Errors if it is not a lattice at all.
pub fn check_distributive(p: &FinPoset) -> Result<bool, LatticeError> {
    let t = lattice_tables(p)?;
    Ok(distributivity_witness(&t).is_none())
}

impl FinDistLattice {
    pub fn from_poset(p: FinPoset) -> Result<Self, LatticeError> {
        let t = lattice_tables(&p)?;
        if let Some((x, y, z)) = distributivity_witness(&t) {
            return Err(LatticeError::NotDistributive {
                x: p.names[x].clone(),
                y: p.names[y].clone(),
                z: p.names[z].clone(),
            });
        }
        Ok(FinDistLattice { names: p.names, leq: p.leq, meet: t.meet, join: t.join, bot: t.bot, top: t.top })
    }

    pub fn from_pairs(names: Vec<String>, pairs: &[(usize, usize)]) -> Result<Self, LatticeError> {
        FinDistLattice::from_poset(FinPoset::from_pairs(names, pairs)?)
    }

    /// Chain 0 < 1 < ... < n-1.
    pub fn chain(n: usize) -> Self {
        FinDistLattice::from_poset(FinPoset::chain(n)).unwrap()
    }

    /// Powerset of a k-element set; element i is the subset with bits i.
    pub fn boolean(k: usize) -> Self {
        let n = 1usize << k;
        let names = (0..n).map(|i| subset_name(i as Set, k)).collect();
        let leq = (0..n).map(|a| (0..n).map(|b| a & !b == 0).collect()).collect();
        FinDistLattice::from_poset(FinPoset::new(names, leq).unwrap()).unwrap()
    }

    /// 0 < a, b < 1 with a, b incomparable.
    pub fn diamond() -> Self {
        let names = ["0", "a", "b", "1"].iter().map(|s| s.to_string()).collect();
        FinDistLattice::from_pairs(names, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a][b]
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join[a][b]
    }

    pub fn bot(&self) -> usize {
        self.bot
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn poset(&self) -> FinPoset {
        FinPoset { names: self.names.clone(), leq: self.leq.clone() }
    }

    pub fn leq_matrix(&self) -> &[Vec<bool>] {
        &self.leq
    }

    pub fn meet_all<I: IntoIterator<Item = usize>>(&self, it: I) -> usize {
        it.into_iter().fold(self.top, |a, b| self.meet[a][b])
    }

    pub fn join_all<I: IntoIterator<Item = usize>>(&self, it: I) -> usize {
        it.into_iter().fold(self.bot, |a, b| self.join[a][b])
    }

    pub fn up(&self, a: usize) -> Vec<bool> {
        (0..self.len()).map(|b| self.leq[a][b]).collect()
    }

    pub fn down(&self, a: usize) -> Vec<bool> {
        (0..self.len()).map(|b| self.leq[b][a]).collect()
    }

    pub fn is_filter(&self, s: &[bool]) -> bool {
        let n = self.len();
        if !(0..n).any(|a| s[a]) {
            return false;
        }
        for a in 0..n {
            if !s[a] {
                continue;
            }
            for b in 0..n {
                if self.leq[a][b] && !s[b] {
                    return false;
                }
                if s[b] && !s[self.meet[a][b]] {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_ideal(&self, s: &[bool]) -> bool {
        let n = self.len();
        if !(0..n).any(|a| s[a]) {
            return false;
        }
        for a in 0..n {
            if !s[a] {
                continue;
            }
            for b in 0..n {
                if self.leq[b][a] && !s[b] {
                    return false;
                }
                if s[b] && !s[self.join[a][b]] {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_prime_filter(&self, s: &[bool]) -> bool {
        if !self.is_filter(s) || s[self.bot] {
            return false;
        }
        let n = self.len();
        (0..n).all(|a| (0..n).all(|b| !s[self.join[a][b]] || s[a] || s[b]))
    }

    /// Every filter of a finite lattice is principal, so candidates are the
    /// principal filters; primality is then tested by definition.
    /// Ordered by the generating element.
    pub fn prime_filters(&self) -> Vec<Vec<bool>> {
        (0..self.len()).map(|a| self.up(a)).filter(|f| self.is_prime_filter(f)).collect()
    }

    /// All filters (the improper one included), ordered by reverse inclusion.
    pub fn filter_lattice(&self) -> (FinDistLattice, Vec<Vec<bool>>) {
        let fs: Vec<Vec<bool>> = (0..self.len()).map(|a| self.up(a)).filter(|f| self.is_filter(f)).collect();
        let names = fs.iter().map(|f| self.set_name(f)).collect();
        let leq = fs.iter().map(|f| fs.iter().map(|g| incl(g, f)).collect()).collect();
        let l = FinDistLattice::from_poset(FinPoset::new(names, leq).unwrap()).unwrap();
        (l, fs)
    }

    /// All ideals, ordered by inclusion.
    pub fn ideal_lattice(&self) -> (FinDistLattice, Vec<Vec<bool>>) {
        let is: Vec<Vec<bool>> = (0..self.len()).map(|a| self.down(a)).filter(|f| self.is_ideal(f)).collect();
        let names = is.iter().map(|f| self.set_name(f)).collect();
        let leq = is.iter().map(|f| is.iter().map(|g| incl(f, g)).collect()).collect();
        let l = FinDistLattice::from_poset(FinPoset::new(names, leq).unwrap()).unwrap();
        (l, is)
    }

    pub fn set_name(&self, s: &[bool]) -> String {
        let parts: Vec<&str> = (0..self.len()).filter(|&i| s[i]).map(|i| self.names[i].as_str()).collect();
        format!("{{{}}}", parts.join(","))
    }

    pub fn is_join_irreducible(&self, a: usize) -> bool {
        if a == self.bot {
            return false;
        }
        let n = self.len();
        !(0..n).any(|b| (0..n).any(|c| b != a && c != a && self.join[b][c] == a))
    }

    /// The join-irreducible elements with the induced order, and their indices.
    pub fn join_irreducibles(&self) -> (FinPoset, Vec<usize>) {
        let js: Vec<usize> = (0..self.len()).filter(|&a| self.is_join_irreducible(a)).collect();
        let names = js.iter().map(|&j| self.names[j].clone()).collect();
        let leq = js.iter().map(|&a| js.iter().map(|&b| self.leq[a][b]).collect()).collect();
        (FinPoset::new(names, leq).unwrap(), js)
    }

    /// Birkhoff duality: L ≅ downsets of its join-irreducibles.
    pub fn birkhoff(&self) -> Birkhoff {
        let (irr, js) = self.join_irreducibles();
        let (down, sets) = downset_lattice_with_sets(&irr);
        let to_down = (0..self.len())
            .map(|a| {
                let s: Vec<bool> = js.iter().map(|&j| self.leq[j][a]).collect();
                sets.iter().position(|t| *t == s).expect("downset of irreducibles")
            })
            .collect();
        let from_down = sets
            .iter()
            .map(|s| self.join_all(js.iter().zip(s).filter(|(_, &b)| b).map(|(&j, _)| j)))
            .collect();
        Birkhoff { irr, irr_elems: js, down, to_down, from_down }
    }

    /// Birkhoff form with points the join-irreducibles; element a maps to the
    /// set of irreducibles below it.
    pub fn to_downlat(&self) -> Result<(DownLat, Vec<Set>), LatticeError> {
        let (irr, js) = self.join_irreducibles();
        let d = irr.to_downlat()?;
        let elems = (0..self.len())
            .map(|a| js.iter().enumerate().filter(|(_, &j)| self.leq[j][a]).fold(0, |s, (i, _)| s | bit(i)))
            .collect();
        Ok((d, elems))
    }

    /// A lattice isomorphism from self to other, if one exists.
    pub fn iso(&self, other: &FinDistLattice) -> Option<Vec<usize>> {
        relation_iso(&self.leq, &other.leq)
    }

    pub fn product(&self, other: &FinDistLattice) -> FinDistLattice {
        let (n, m) = (self.len(), other.len());
        let names = (0..n * m).map(|k| format!("({},{})", self.names[k / m], other.names[k % m])).collect();
        let leq = (0..n * m)
            .map(|a| (0..n * m).map(|b| self.leq[a / m][b / m] && other.leq[a % m][b % m]).collect())
            .collect();
        FinDistLattice::from_poset(FinPoset::new(names, leq).unwrap()).unwrap()
    }

    /// Principal downset ↓a as a lattice, with the element indices it uses.
    pub fn principal_down(&self, a: usize) -> (FinDistLattice, Vec<usize>) {
        let es: Vec<usize> = (0..self.len()).filter(|&b| self.leq[b][a]).collect();
        let names = es.iter().map(|&e| self.names[e].clone()).collect();
        let leq = es.iter().map(|&x| es.iter().map(|&y| self.leq[x][y]).collect()).collect();
        (FinDistLattice::from_poset(FinPoset::new(names, leq).unwrap()).unwrap(), es)
    }

    pub fn to_json(&self) -> LatticeFile {
        let mut leq = Vec::new();
        for a in 0..self.len() {
            for b in 0..self.len() {
                if a != b && self.leq[a][b] && self.covers(a, b) {
                    leq.push((self.names[a].clone(), self.names[b].clone()));
                }
            }
        }
        LatticeFile { elements: self.names.clone(), leq, meet: None, join: None }
    }

    fn covers(&self, a: usize, b: usize) -> bool {
        !(0..self.len()).any(|c| c != a && c != b && self.leq[a][c] && self.leq[c][b])
    }
}

fn incl(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| !x || y)
}

pub fn subset_name(s: Set, n: usize) -> String {
    let parts: Vec<String> = (0..n).filter(|&i| s & bit(i) != 0).map(|i| i.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

pub struct Birkhoff {
    pub irr: FinPoset,
    pub irr_elems: Vec<usize>,
    pub down: FinDistLattice,
    pub to_down: Vec<usize>,
    pub from_down: Vec<usize>,
}

impl Birkhoff {
    pub fn round_trips(&self) -> bool {
        self.to_down.iter().enumerate().all(|(a, &d)| self.from_down[d] == a)
            && self.from_down.iter().enumerate().all(|(d, &a)| self.to_down[a] == d)
    }
}

/// Down-closed subsets of `p` ordered by inclusion.
pub fn downset_lattice(p: &FinPoset) -> FinDistLattice {
    downset_lattice_with_sets(p).0
}

/// As [`downset_lattice`], also returning the downset behind each element.
pub fn downset_lattice_with_sets(p: &FinPoset) -> (FinDistLattice, Vec<Vec<bool>>) {
    let n = p.len();
    let mut sets = Vec::new();
    let mut cur = vec![false; n];
    fn go(i: usize, p: &FinPoset, cur: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
        if i == p.len() {
            if p.is_downset(cur) {
                out.push(cur.clone());
            }
            return;
        }
        cur[i] = false;
        go(i + 1, p, cur, out);
        cur[i] = true;
        go(i + 1, p, cur, out);
        cur[i] = false;
    }
    // Plain enumeration is fine for posets this module is asked to handle
    // directly; large fibers go through DownLat.
    assert!(n <= 20, "downset_lattice: poset too large for tables");
    go(0, p, &mut cur, &mut sets);
    sets.sort_by_key(|s| (s.iter().filter(|&&b| b).count(), s.iter().rev().cloned().collect::<Vec<_>>()));
    let names = sets
        .iter()
        .map(|s| {
            let parts: Vec<&str> = (0..n).filter(|&i| s[i]).map(|i| p.names[i].as_str()).collect();
            format!("{{{}}}", parts.join(","))
        })
        .collect();
    let leq = sets.iter().map(|a| sets.iter().map(|b| incl(a, b)).collect()).collect();
    let l = FinDistLattice::from_poset(FinPoset::new(names, leq).unwrap()).unwrap();
    (l, sets)
}

/// Finite maps between table lattices are plain index vectors.
pub fn is_monotone(src: &FinDistLattice, tgt: &FinDistLattice, f: &[usize]) -> bool {
    let n = src.len();
    (0..n).all(|a| (0..n).all(|b| !src.leq(a, b) || tgt.leq(f[a], f[b])))
}

pub fn preserves_joins(src: &FinDistLattice, tgt: &FinDistLattice, f: &[usize]) -> bool {
    let n = src.len();
    f[src.bot()] == tgt.bot() && (0..n).all(|a| (0..n).all(|b| f[src.join(a, b)] == tgt.join(f[a], f[b])))
}

pub fn preserves_meets(src: &FinDistLattice, tgt: &FinDistLattice, f: &[usize]) -> bool {
    let n = src.len();
    f[src.top()] == tgt.top() && (0..n).all(|a| (0..n).all(|b| f[src.meet(a, b)] == tgt.meet(f[a], f[b])))
}

pub fn is_hom(src: &FinDistLattice, tgt: &FinDistLattice, f: &[usize]) -> bool {
    preserves_joins(src, tgt, f) && preserves_meets(src, tgt, f)
}

/// Every monotone map src → tgt, in lexicographic order of tables.
pub fn monotone_maps(src: &FinDistLattice, tgt: &FinDistLattice) -> Vec<Vec<usize>> {
    let n = src.len();
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn go(i: usize, src: &FinDistLattice, tgt: &FinDistLattice, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == src.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..tgt.len() {
            let ok = (0..i).all(|j| (!src.leq(j, i) || tgt.leq(cur[j], v)) && (!src.leq(i, j) || tgt.leq(v, cur[j])));
            if ok {
                cur[i] = v;
                go(i + 1, src, tgt, cur, out);
            }
        }
    }
    go(0, src, tgt, &mut cur, &mut out);
    out
}

/// `l ⊣ r` between finite posets: l(p) ≤ q iff p ≤ r(q).
pub fn is_left_adjoint(p: &FinPoset, q: &FinPoset, l: &[usize], r: &[usize]) -> bool {
    (0..p.len()).all(|a| (0..q.len()).all(|b| q.leq(l[a], b) == p.leq(a, r[b])))
}

/// For f' ⊣ f with f: A → B and g' ⊣ g with g: B → C, checks f'∘g' ⊣ g∘f.
/// False if either given pair is not an adjunction.
pub fn composite_adjoint_holds(
    a: &FinPoset,
    b: &FinPoset,
    c: &FinPoset,
    f: &[usize],
    fl: &[usize],
    g: &[usize],
    gl: &[usize],
) -> bool {
    if !is_left_adjoint(b, a, fl, f) || !is_left_adjoint(c, b, gl, g) {
        return false;
    }
    let gf: Vec<usize> = (0..a.len()).map(|x| g[f[x]]).collect();
    let flgl: Vec<usize> = (0..c.len()).map(|z| fl[gl[z]]).collect();
    is_left_adjoint(c, a, &flgl, &gf)
}

/// The JSON lattice format: elements, order pairs (closed reflexively and
/// transitively), optional meet/join triples checked against the order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LatticeFile {
    pub elements: Vec<String>,
    pub leq: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meet: Option<Vec<(String, String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub join: Option<Vec<(String, String, String)>>,
}

impl LatticeFile {
    pub fn build(&self) -> Result<FinDistLattice, LatticeError> {
        let idx: HashMap<&str, usize> = self.elements.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        check_names(&self.elements)?;
        let look = |s: &str| idx.get(s).copied().ok_or_else(|| LatticeError::Unknown(s.to_string()));
        let mut pairs = Vec::new();
        for (a, b) in &self.leq {
            pairs.push((look(a)?, look(b)?));
        }
        let l = FinDistLattice::from_pairs(self.elements.clone(), &pairs)?;
        for (op, table) in [("meet", &self.meet), ("join", &self.join)] {
            if let Some(t) = table {
                for (a, b, c) in t {
                    let (a, b, c) = (look(a)?, look(b)?, look(c)?);
                    let expect = if op == "meet" { l.meet(a, b) } else { l.join(a, b) };
                    if expect != c {
                        return Err(LatticeError::TableMismatch {
                            op: op.to_string(),
                            a: l.names[a].clone(),
                            b: l.names[b].clone(),
                        });
                    }
                }
            }
        }
        Ok(l)
    }

    pub fn parse(text: &str) -> Result<FinDistLattice, LatticeError> {
        let f: LatticeFile = serde_json::from_str(text).map_err(|e| LatticeError::Json(e.to_string()))?;
        f.build()
    }
}

/// Birkhoff form of a finite distributive lattice.
///
/// Points carry a quasi-order through `below[p]`, the set of points below p
/// (p included). Elements are the subsets of `top` closed downwards. Points
/// outside `top` are ignored; `top` itself must be closed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DownLat {
    below: Vec<Set>,
    top: Set,
}

impl DownLat {
    /// `below` must be reflexive and transitive; this closes it if not.
    pub fn new(below: Vec<Set>) -> Self {
        let n = below.len();
        assert!(n <= MAX_POINTS, "DownLat: at most {MAX_POINTS} points");
        let mut b = below;
        for p in 0..n {
            b[p] |= bit(p);
        }
        loop {
            let mut changed = false;
            for p in 0..n {
                let mut acc = b[p];
                for q in members(b[p]) {
                    acc |= b[q];
                }
                if acc != b[p] {
                    b[p] = acc;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        DownLat { below: b, top: full(n) }
    }

    /// The powerset of n points.
    pub fn discrete(n: usize) -> Self {
        DownLat::new((0..n).map(bit).collect())
    }

    /// The sublattice ↓a: same points, elements restricted to a.
    pub fn restrict(&self, a: Set) -> Self {
        debug_assert!(self.is_elem(a));
        DownLat { below: self.below.clone(), top: a }
    }

    pub fn points(&self) -> usize {
        self.below.len()
    }

    pub fn point_set(&self) -> Set {
        self.top
    }

    pub fn below(&self, p: usize) -> Set {
        self.below[p]
    }

    pub fn top(&self) -> Set {
        self.top
    }

    pub fn bot(&self) -> Set {
        0
    }

    pub fn meet(&self, a: Set, b: Set) -> Set {
        a & b
    }

    pub fn join(&self, a: Set, b: Set) -> Set {
        a | b
    }

    pub fn leq(&self, a: Set, b: Set) -> bool {
        subset(a, b)
    }

    pub fn is_elem(&self, d: Set) -> bool {
        subset(d, self.top) && members(d).all(|p| subset(self.below[p], d))
    }

    /// Smallest element containing the given points.
    pub fn close(&self, s: Set) -> Set {
        members(s & self.top).fold(0, |acc, p| acc | self.below[p])
    }

    /// Largest element inside the given points.
    pub fn interior(&self, s: Set) -> Set {
        members(s & self.top).filter(|&p| subset(self.below[p], s)).fold(0, |acc, p| acc | bit(p))
    }

    /// Relative pseudo-complement a → b.
    pub fn implies(&self, a: Set, b: Set) -> Set {
        members(self.top).filter(|&p| subset(self.below[p] & a, b)).fold(0, |acc, p| acc | bit(p))
    }

    /// One representative point per equivalence class of the quasi-order
    /// (the first index), ascending. These index the join-irreducibles.
    pub fn classes(&self) -> Vec<usize> {
        let mut reps: Vec<usize> = Vec::new();
        for p in members(self.top) {
            if !reps.iter().any(|&r| self.below[r] == self.below[p]) {
                reps.push(p);
            }
        }
        reps
    }

    /// The join-irreducible elements: the principal downsets ↓p.
    pub fn join_irreducibles(&self) -> Vec<Set> {
        self.classes().into_iter().map(|p| self.below[p]).collect()
    }

    /// All elements, or None if there are more than `cap`.
    pub fn elements_capped(&self, cap: usize) -> Option<Vec<Set>> {
        self.elements_between(0, self.top, cap)
    }

    pub fn elements(&self) -> Vec<Set> {
        self.elements_capped(usize::MAX).unwrap()
    }

    /// Elements d with lo ≤ d ≤ hi, or None past `cap`.
    pub fn elements_between(&self, lo: Set, hi: Set, cap: usize) -> Option<Vec<Set>> {
        match self.enumerate(lo, hi, cap) {
            (v, true) => Some(v),
            _ => None,
        }
    }

    /// At most `cap` elements, and whether that was all of them.
    pub fn elements_upto(&self, cap: usize) -> (Vec<Set>, bool) {
        self.enumerate(0, self.top, cap)
    }

    fn enumerate(&self, lo: Set, hi: Set, cap: usize) -> (Vec<Set>, bool) {
        let mut reps = self.classes();
        reps.sort_by_key(|&p| (self.below[p].count_ones(), p));
        let class_of = |p: usize| -> Set { members(self.top).filter(|&q| self.below[q] == self.below[p]).fold(0, |s, q| s | bit(q)) };
        let cls: Vec<Set> = reps.iter().map(|&p| class_of(p)).collect();
        let mut out = Vec::new();
        let mut overflow = false;
        #[allow(clippy::too_many_arguments)]
        fn go(
            i: usize,
            cur: Set,
            reps: &[usize],
            cls: &[Set],
            d: &DownLat,
            lo: Set,
            hi: Set,
            cap: usize,
            out: &mut Vec<Set>,
            overflow: &mut bool,
        ) {
            if *overflow {
                return;
            }
            if i == reps.len() {
                if out.len() >= cap {
                    *overflow = true;
                    return;
                }
                out.push(cur);
                return;
            }
            let p = reps[i];
            let c = cls[i];
            let must = c & lo != 0;
            let can = subset(c, hi) && subset(d.below[p] & !c, cur);
            if !must {
                go(i + 1, cur, reps, cls, d, lo, hi, cap, out, overflow);
            }
            if can {
                go(i + 1, cur | c, reps, cls, d, lo, hi, cap, out, overflow);
            }
        }
        go(0, 0, &reps, &cls, self, lo, hi, cap, &mut out, &mut overflow);
        out.sort_by_key(|&s| (s.count_ones(), s));
        (out, !overflow)
    }

    /// Explicit tables with names like "{0,2}", plus the set behind each index.
    pub fn to_table(&self) -> (FinDistLattice, Vec<Set>) {
        let es = self.elements_capped(4096).expect("DownLat::to_table: too many elements");
        let names = es.iter().map(|&s| subset_name(s, self.points())).collect();
        let leq = es.iter().map(|&a| es.iter().map(|&b| subset(a, b)).collect()).collect();
        let l = FinDistLattice::from_poset(FinPoset::new(names, leq).unwrap()).unwrap();
        (l, es)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_prime_filters(l: &FinDistLattice) -> Vec<Vec<bool>> {
        let n = l.len();
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) {
            let s: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
            if l.is_prime_filter(&s) {
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn downsets_of_small_posets() {
        assert_eq!(downset_lattice(&FinPoset::antichain(0)).len(), 1);
        let b = downset_lattice(&FinPoset::antichain(2));
        assert_eq!(b.len(), 4);
        assert!(b.iso(&FinDistLattice::boolean(2)).is_some());
        let c = downset_lattice(&FinPoset::chain(2));
        assert!(c.iso(&FinDistLattice::chain(3)).is_some());
    }

    #[test]
    fn prime_filters_match_subset_search() {
        for l in [FinDistLattice::chain(2), FinDistLattice::chain(3), FinDistLattice::diamond(), FinDistLattice::boolean(3)] {
            let mut a = l.prime_filters();
            let mut b = brute_prime_filters(&l);
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
        let d = FinDistLattice::diamond();
        let pf = d.prime_filters();
        assert_eq!(pf, vec![d.up(1), d.up(2)]);
        let c = FinDistLattice::chain(3);
        assert_eq!(c.prime_filters(), vec![c.up(1), c.up(2)]);
        assert_eq!(FinDistLattice::chain(2).prime_filters(), vec![vec![false, true]]);
    }

    #[test]
    fn filter_and_ideal_lattices() {
        for l in [FinDistLattice::chain(2), FinDistLattice::chain(3), FinDistLattice::diamond()] {
            let (fl, _) = l.filter_lattice();
            let (il, _) = l.ideal_lattice();
            assert!(fl.iso(&l).is_some());
            assert!(il.iso(&l).is_some());
        }
    }

    #[test]
    fn m3_is_not_distributive() {
        let names = ["0", "a", "b", "c", "1"].iter().map(|s| s.to_string()).collect();
        let p = FinPoset::from_pairs(names, &[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)]).unwrap();
        assert_eq!(check_distributive(&p), Ok(false));
        assert!(matches!(FinDistLattice::from_poset(p), Err(LatticeError::NotDistributive { .. })));
    }

    #[test]
    fn birkhoff_examples() {
        let b = FinDistLattice::boolean(2).birkhoff();
        assert_eq!(b.irr.len(), 2);
        assert!(b.irr.iso(&FinPoset::antichain(2)).is_some());
        assert!(b.round_trips());
        let c = FinDistLattice::chain(3).birkhoff();
        assert!(c.irr.iso(&FinPoset::chain(2)).is_some());
        assert!(c.round_trips());
    }

    #[test]
    fn downlat_enumeration_matches_tables() {
        let p = FinPoset::from_pairs((0..4).map(|i| i.to_string()).collect(), &[(0, 2), (1, 2), (1, 3)]).unwrap();
        let d = p.to_downlat().unwrap();
        let (t, _) = d.to_table();
        assert_eq!(t.len(), downset_lattice(&p).len());
        assert!(t.iso(&downset_lattice(&p)).is_some());
        for a in d.elements() {
            for b in d.elements() {
                let c = d.implies(a, b);
                assert!(d.is_elem(c));
                for x in d.elements() {
                    assert_eq!(subset(x & a, b), subset(x, c));
                }
            }
        }
    }

    #[test]
    fn downlat_quasi_order_elements() {
        // points 0 and 1 equivalent, 2 above both
        let d = DownLat::new(vec![0b11, 0b11, 0b111]);
        assert_eq!(d.elements(), vec![0, 0b11, 0b111]);
        assert_eq!(d.classes(), vec![0, 2]);
        assert_eq!(d.elements_between(0b01, 0b111, 10).unwrap(), vec![0b11, 0b111]);
    }

    #[test]
    fn json_round_trip() {
        let l = FinDistLattice::diamond();
        let text = serde_json::to_string(&l.to_json()).unwrap();
        let back = LatticeFile::parse(&text).unwrap();
        assert_eq!(back, l);
        let bad = r#"{"elements":["0","1"],"leq":[["0","1"]],"meet":[["0","1","1"]]}"#;
        assert!(matches!(LatticeFile::parse(bad), Err(LatticeError::TableMismatch { .. })));
    }

    #[test]
    fn adjoint_composition_on_chains() {
        let c3 = FinPoset::chain(3);
        let c2 = FinPoset::chain(2);
        // r: 3 -> 2 sends 0,1 -> 0 and 2 -> 1; its left adjoint 0 -> 0, 1 -> 2.
        let f = vec![0, 0, 1];
        let fl = vec![0, 2];
        assert!(is_left_adjoint(&c2, &c3, &fl, &f));
        let g = vec![0, 1];
        let gl = vec![0, 1];
        assert!(composite_adjoint_holds(&c3, &c2, &c2, &f, &fl, &g, &gl));
    }
}
