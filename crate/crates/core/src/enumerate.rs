//! Exhaustive fixture streams: distributive lattices up to isomorphism,
//! finite-set fragments, and small explicit hyperdoctrines.

use crate::fincat::{check_coherent_category, FinSetCat, ThinCat};
use crate::hyperdoctrine::{validate, TableHyp};
use crate::lattice::{bit, downset_lattice, is_hom, members, subset, FinDistLattice, FinPoset, Set};
use itertools::Itertools;
use std::collections::HashMap;

pub const MAX_DL_BOUND: usize = 10;
pub const MAX_SET_BOUND: usize = 3;
pub const MAX_HYP_BOUND: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bound {bound} is above the limit {limit}; roughly {estimate} {what} would be generated")]
pub struct TooLarge {
    pub bound: usize,
    pub limit: usize,
    pub estimate: u64,
    pub what: &'static str,
}

fn downsets(below: &[Set]) -> Vec<Set> {
    let n = below.len();
    let mut out = vec![0];
    for p in 0..n {
        // points are added in a linear extension, so below[p] ⊆ {0..p}
        let more: Vec<Set> = out.iter().filter(|&&d| subset(below[p], d)).map(|&d| d | bit(p)).collect();
        out.extend(more);
    }
    out
}

fn to_poset(below: &[Set]) -> FinPoset {
    let n = below.len();
    let leq = (0..n).map(|a| (0..n).map(|b| a == b || below[b] & bit(a) != 0).collect()).collect();
    FinPoset::new((0..n).map(|i| format!("p{i}")).collect(), leq).expect("strict downsets give a partial order")
}

fn invariant(below: &[Set], n_down: usize) -> (usize, usize, Vec<(u32, u32)>) {
    let ups: Vec<u32> = (0..below.len()).map(|p| below.iter().filter(|&&b| b & bit(p) != 0).count() as u32).collect();
    let deg = (0..below.len()).map(|p| (below[p].count_ones(), ups[p])).sorted().collect();
    (below.len(), n_down, deg)
}

/// Posets, up to isomorphism, whose downset lattice has at most `max` elements.
pub fn posets_with_few_downsets(max: usize) -> Vec<Vec<Set>> {
    let mut seen: HashMap<(usize, usize, Vec<(u32, u32)>), Vec<FinPoset>> = HashMap::new();
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Set>> = vec![Vec::new()];
    while !layer.is_empty() {
        let mut next = Vec::new();
        for below in layer {
            let ds = downsets(&below);
            if ds.len() > max {
                continue;
            }
            let key = invariant(&below, ds.len());
            let p = to_poset(&below);
            let bucket = seen.entry(key).or_default();
            if bucket.iter().any(|q| q.iso(&p).is_some()) {
                continue;
            }
            bucket.push(p);
            for &d in &ds {
                let mut b = below.clone();
                b.push(d);
                next.push(b);
            }
            out.push(below);
        }
        layer = next;
    }
    out
}

/// All distributive lattices with 1..=max elements up to isomorphism,
/// ordered by size and then by generation order.
pub fn distributive_lattices(max: usize) -> Result<Vec<FinDistLattice>, TooLarge> {
    if max > MAX_DL_BOUND {
        // the counts grow by a factor near 1.8 per element around the limit
        let estimate = (47.0 * 1.8f64.powi((max - MAX_DL_BOUND) as i32)) as u64;
        return Err(TooLarge { bound: max, limit: MAX_DL_BOUND, estimate, what: "lattices of the largest size" });
    }
    let mut ls: Vec<(usize, FinDistLattice)> = posets_with_few_downsets(max)
        .iter()
        .map(|b| downset_lattice(&to_poset(b)))
        .map(|l| (l.len(), l))
        .collect();
    ls.sort_by_key(|(n, _)| *n);
    Ok(ls.into_iter().map(|(_, l)| l).collect())
}

/// Number of distributive lattices of each size 1..=max.
pub fn dl_counts(max: usize) -> Result<Vec<usize>, TooLarge> {
    let ls = distributive_lattices(max)?;
    Ok((1..=max).map(|n| ls.iter().filter(|l| l.len() == n).count()).collect())
}

/// Fragments of finite sets over {0, ..., bound} containing the terminal
/// object that pass the coherent-category checker, smallest first.
pub fn set_fragments(bound: usize) -> Result<Vec<FinSetCat>, TooLarge> {
    if bound > MAX_SET_BOUND {
        return Err(TooLarge { bound, limit: MAX_SET_BOUND, estimate: 1 << bound, what: "fragments" });
    }
    let others: Vec<usize> = (0..=bound).filter(|&n| n != 1).collect();
    let mut out = Vec::new();
    for k in 0..=others.len() {
        for extra in others.iter().copied().combinations(k) {
            let mut objs = vec![1];
            objs.extend(extra);
            let c = FinSetCat::new(objs);
            if check_coherent_category(&c, true).pass() {
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// Hyperdoctrines over the one-point base, and over the two-chain a ≤ t
/// with any lattice hom P(t) → P(a), fibers of at most `bound` elements,
/// kept when they validate.
pub fn table_hyperdoctrines(bound: usize) -> Result<Vec<TableHyp>, TooLarge> {
    if bound > MAX_HYP_BOUND {
        return Err(TooLarge { bound, limit: MAX_HYP_BOUND, estimate: (bound as u64).pow(bound as u32), what: "hyperdoctrines" });
    }
    let ls = distributive_lattices(bound).expect("within the lattice bound");
    let mut out: Vec<TableHyp> = ls.iter().cloned().map(TableHyp::single).collect();
    let base = ThinCat::new(FinPoset::chain(2)).expect("a chain has meets");
    for la in &ls {
        for lt in &ls {
            for table in (0..lt.len()).map(|_| 0..la.len()).multi_cartesian_product() {
                if !is_hom(lt, la, &table) {
                    continue;
                }
                let subst = HashMap::from([((0, 1), table)]);
                if let Ok(h) = TableHyp::new(base.clone(), vec![la.clone(), lt.clone()], subst, HashMap::new()) {
                    if validate(&h).pass() {
                        out.push(h);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Element count of a downset lattice by brute force over subsets, for
/// cross-checking.
pub fn count_downsets(p: &FinPoset) -> usize {
    let n = p.len();
    (0..1u128 << n)
        .filter(|&s| members(s).all(|b| (0..n).all(|a| !p.leq(a, b) || s & bit(a) != 0)))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    // independent oracle: every labelled poset on k ≤ 5 points by brute
    // force over strict relations, then its downset lattice, deduplicated
    fn oracle(max: usize) -> Vec<usize> {
        let mut found: Vec<FinDistLattice> = Vec::new();
        for k in 0..max {
            let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).filter(|(a, b)| a != b).collect();
            for mask in 0u64..(1 << pairs.len()) {
                let mut leq = vec![vec![false; k]; k];
                for i in 0..k {
                    leq[i][i] = true;
                }
                for (j, &(a, b)) in pairs.iter().enumerate() {
                    if mask & (1 << j) != 0 {
                        leq[a][b] = true;
                    }
                }
                let ok = (0..k).all(|a| {
                    (0..k).all(|b| {
                        (a == b || !(leq[a][b] && leq[b][a])) && (0..k).all(|c| !(leq[a][b] && leq[b][c]) || leq[a][c])
                    })
                });
                if !ok {
                    continue;
                }
                let p = FinPoset::new((0..k).map(|i| i.to_string()).collect(), leq).unwrap();
                if count_downsets(&p) > max {
                    continue;
                }
                let l = downset_lattice(&p);
                if !found.iter().any(|m| m.len() == l.len() && m.iso(&l).is_some()) {
                    found.push(l);
                }
            }
        }
        (1..=max).map(|n| found.iter().filter(|l| l.len() == n).count()).collect()
    }

    #[test]
    fn counts_match_brute_force() {
        assert_eq!(dl_counts(6).unwrap(), oracle(6));
    }

    #[test]
    fn counts_up_to_ten() {
        assert_eq!(dl_counts(10).unwrap(), vec![1, 1, 1, 2, 3, 5, 8, 15, 26, 47]);
    }

    #[test]
    fn small_bounds() {
        let one = distributive_lattices(1).unwrap();
        assert_eq!(one.len(), 1);
        let four = distributive_lattices(4).unwrap();
        for l in [FinDistLattice::chain(2), FinDistLattice::chain(3), FinDistLattice::chain(4), FinDistLattice::boolean(2)] {
            assert!(four.iter().any(|m| m.len() == l.len() && m.iso(&l).is_some()));
        }
        let e = distributive_lattices(11).unwrap_err();
        assert!(e.estimate > 47);
    }

    #[test]
    fn set_fragments_bound_two() {
        let objs: Vec<Vec<usize>> = set_fragments(2).unwrap().iter().map(|c| crate::fincat::Category::objects(c)).collect();
        assert_eq!(objs, vec![vec![1], vec![0, 1], vec![1, 2], vec![0, 1, 2]]);
    }

    #[test]
    fn hyperdoctrines_validate() {
        let hs = table_hyperdoctrines(3).unwrap();
        // 3 single fibers; on the chain, homs 1→1, 2→2 (1), 3→3 (1), 3→2 (2), 2→3 (1), ...
        assert!(hs.len() > 3);
        assert!(hs.iter().all(|h| validate(h).pass()));
    }
}
