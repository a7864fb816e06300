//! Finite-set partitions and product spaces.
//!
//! On a finite ground set a σ-algebra is exactly the collection of unions of
//! blocks of a partition, so every σ-algebra manipulation in this crate is a
//! partition manipulation. The refinement order is oriented like σ-algebra
//! inclusion: `p.refines(q)` means `p` is finer, i.e. it carries at least the
//! information of `q`. `join` is the coarsest common refinement.
//!
//! Product spaces use mixed-radix row-major indexing with factor 1 varying
//! fastest: the state `(d_1, .., d_n)` has index `d_1 + s_1 * (d_2 + s_2 * (..))`.
//! The same rule applies to every sub-product `X_M`, taking the members of `M`
//! in increasing order. `X_∅` has exactly one element, the empty sequence.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of input factors (4096 subsets).
pub const MAX_INPUTS: usize = 12;

/// A finite state set with one display label per element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteSet {
    labels: Vec<String>,
}

impl FiniteSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptyGround);
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(FiniteSet { labels })
    }

    /// Elements labelled `0..size`.
    pub fn indexed(size: usize) -> Result<Self> {
        FiniteSet::new((0..size).map(|i| i.to_string()))
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A subset of the input factors `{0, .., n-1}`, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Subset(u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(n: usize) -> Subset {
        debug_assert!(n <= 31);
        Subset((1u32 << n) - 1)
    }

    pub fn singleton(i: usize) -> Subset {
        Subset(1 << i)
    }

    pub fn from_bits(bits: u32) -> Subset {
        Subset(bits)
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Subset {
        Subset(indices.into_iter().fold(0, |acc, i| acc | (1 << i)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Position of this subset in the family table (`bits` as an index).
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn difference(self, other: Subset) -> Subset {
        Subset(self.0 & !other.0)
    }

    pub fn complement(self, n: usize) -> Subset {
        Subset::full(n).difference(self)
    }

    pub fn without(self, i: usize) -> Subset {
        Subset(self.0 & !(1 << i))
    }

    /// Member indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |i| bits & (1 << i) != 0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Every subset of `{0, .., n-1}`, ordered by bitmask.
    pub fn all(n: usize) -> impl Iterator<Item = Subset> {
        (0..(1u32 << n)).map(Subset)
    }

    /// Every subset of `self`, including `∅` and `self`.
    pub fn subsets(self) -> impl Iterator<Item = Subset> {
        let m = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == m {
                None
            } else {
                Some(((cur | !m).wrapping_add(1)) & m)
            };
            Some(Subset(cur))
        })
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Product of finite factor sets `X_1 × .. × X_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductSpace {
    factors: Vec<FiniteSet>,
}

impl ProductSpace {
    pub fn new(factors: Vec<FiniteSet>) -> Result<Self> {
        if factors.len() > MAX_INPUTS {
            return Err(Error::TooManyInputs(factors.len()));
        }
        Ok(ProductSpace { factors })
    }

    /// Factors labelled `0..size` each.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        ProductSpace::new(
            sizes
                .iter()
                .map(|&s| FiniteSet::indexed(s))
                .collect::<Result<_>>()?,
        )
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[FiniteSet] {
        &self.factors
    }

    pub fn factor_sizes(&self) -> Vec<usize> {
        self.factors.iter().map(FiniteSet::size).collect()
    }

    pub fn full(&self) -> Subset {
        Subset::full(self.n())
    }

    /// `|X_M|`; 1 for the empty subset.
    pub fn size(&self, m: Subset) -> usize {
        m.iter().map(|i| self.factors[i].size()).product()
    }

    /// Coordinates of a state of `X_M`, in member order.
    pub fn decode(&self, m: Subset, mut idx: usize) -> Vec<usize> {
        m.iter()
            .map(|i| {
                let s = self.factors[i].size();
                let d = idx % s;
                idx /= s;
                d
            })
            .collect()
    }

    /// Inverse of [`decode`](Self::decode).
    pub fn encode(&self, m: Subset, digits: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (i, &d) in m.iter().zip(digits) {
            idx += d * stride;
            stride *= self.factors[i].size();
        }
        idx
    }

    /// Projection `π^from_to : X_from → X_to` on state indices. `to ⊆ from`.
    pub fn project(&self, from: Subset, mut idx: usize, to: Subset) -> usize {
        debug_assert!(to.is_subset_of(from));
        let mut out = 0;
        let mut stride = 1;
        for i in from.iter() {
            let s = self.factors[i].size();
            if to.contains(i) {
                out += (idx % s) * stride;
                stride *= s;
            }
            idx /= s;
        }
        out
    }

    /// Glue `x_m ∈ X_m` and `x_r ∈ X_r` (disjoint) into a state of `X_{m ∪ r}`.
    pub fn combine(&self, m: Subset, idx_m: usize, r: Subset, idx_r: usize) -> usize {
        debug_assert!(m.intersection(r).is_empty());
        let mut dm = self.decode(m, idx_m).into_iter();
        let mut dr = self.decode(r, idx_r).into_iter();
        let whole = m.union(r);
        let digits: Vec<usize> = whole
            .iter()
            .map(|i| if m.contains(i) { dm.next() } else { dr.next() }.unwrap())
            .collect();
        self.encode(whole, &digits)
    }

    /// Display labels of the coordinates of a state of `X_M`.
    pub fn state_labels(&self, m: Subset, idx: usize) -> Vec<String> {
        m.iter()
            .zip(self.decode(m, idx))
            .map(|(i, d)| self.factors[i].label(d).to_string())
            .collect()
    }
}

/// A partition of `{0, .., len-1}`, canonicalized so block ids follow first
/// occurrence in element order. Structural equality is partition equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    block_of: Vec<usize>,
    blocks: usize,
}

impl Partition {
    /// Build from arbitrary block keys, one per element.
    pub fn from_keys<K: Eq + Hash>(keys: impl IntoIterator<Item = K>) -> Result<Self> {
        let mut ids: HashMap<K, usize> = HashMap::new();
        let block_of: Vec<usize> = keys
            .into_iter()
            .map(|k| {
                let next = ids.len();
                *ids.entry(k).or_insert(next)
            })
            .collect();
        if block_of.is_empty() {
            return Err(Error::EmptyGround);
        }
        Ok(Partition {
            blocks: ids.len(),
            block_of,
        })
    }

    pub fn new(block_of: Vec<usize>) -> Result<Self> {
        Partition::from_keys(block_of)
    }

    /// Build from explicit blocks covering `0..len` exactly once.
    pub fn from_blocks(len: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut block_of = vec![usize::MAX; len];
        for (b, block) in blocks.iter().enumerate() {
            for &e in block {
                if e >= len {
                    return Err(Error::OutOfRange {
                        element: e,
                        size: len,
                    });
                }
                if block_of[e] != usize::MAX {
                    return Err(Error::InvalidParameter(format!(
                        "element {e} in two blocks"
                    )));
                }
                block_of[e] = b;
            }
        }
        if let Some(e) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidParameter(format!("element {e} not covered")));
        }
        Partition::new(block_of)
    }

    /// The one-block partition (trivial σ-algebra).
    pub fn trivial(len: usize) -> Self {
        assert!(len > 0, "empty ground set");
        Partition {
            block_of: vec![0; len],
            blocks: 1,
        }
    }

    /// The finest partition (full power set).
    pub fn singletons(len: usize) -> Self {
        assert!(len > 0, "empty ground set");
        Partition {
            block_of: (0..len).collect(),
            blocks: len,
        }
    }

    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_of(&self, element: usize) -> usize {
        self.block_of[element]
    }

    pub fn block_ids(&self) -> &[usize] {
        &self.block_of
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.blocks];
        for (e, &b) in self.block_of.iter().enumerate() {
            out[b].push(e);
        }
        out
    }

    pub fn is_trivial(&self) -> bool {
        self.blocks == 1
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks == self.len()
    }

    fn check_ground(&self, other: &Partition) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::GroundMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Coarsest common refinement: blocks are the nonempty pairwise intersections.
    pub fn join(&self, other: &Partition) -> Result<Partition> {
        self.check_ground(other)?;
        Partition::from_keys(
            self.block_of
                .iter()
                .zip(&other.block_of)
                .map(|(&a, &b)| (a, b)),
        )
    }

    /// True iff every block of `self` lies inside one block of `other`.
    pub fn refines(&self, other: &Partition) -> Result<bool> {
        self.check_ground(other)?;
        Ok(refines_via(self, |e| other.block_of[e]))
    }
}

/// `p` refines the partition induced by `key` (elements with equal keys share a block).
pub(crate) fn refines_via(p: &Partition, key: impl Fn(usize) -> usize) -> bool {
    let mut target = vec![usize::MAX; p.num_blocks()];
    for e in 0..p.len() {
        let b = p.block_of(e);
        let k = key(e);
        if target[b] == usize::MAX {
            target[b] = k;
        } else if target[b] != k {
            return false;
        }
    }
    true
}

fn check_subset(inner: Subset, outer: Subset) -> Result<()> {
    if !inner.is_subset_of(outer) {
        return Err(Error::NotSubset {
            inner: inner.to_vec(),
            outer: outer.to_vec(),
        });
    }
    Ok(())
}

/// Pull a partition of `X_from` back along `π^to_from : X_to → X_from`.
pub fn lift(p: &Partition, space: &ProductSpace, from: Subset, to: Subset) -> Result<Partition> {
    check_subset(from, to)?;
    let expected = space.size(from);
    if p.len() != expected {
        return Err(Error::GroundMismatch {
            left: p.len(),
            right: expected,
        });
    }
    if from == to {
        return Ok(p.clone());
    }
    Partition::from_keys((0..space.size(to)).map(|x| p.block_of(space.project(to, x, from))))
}

/// Connected components of the hypergraph whose hyperedges are `edges`.
/// Elements covered by no edge end up as singletons.
pub fn hyperedge_components(ground: usize, edges: &[Vec<usize>]) -> Result<Partition> {
    if ground == 0 {
        return Err(Error::EmptyGround);
    }
    let mut uf = UnionFind::new(ground);
    for (k, edge) in edges.iter().enumerate() {
        let Some(&first) = edge.first() else {
            return Err(Error::EmptyEdge(k));
        };
        for &e in edge {
            if e >= ground {
                return Err(Error::OutOfRange {
                    element: e,
                    size: ground,
                });
            }
            uf.union(first, e);
        }
    }
    Ok(uf.into_partition())
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    pub(crate) fn into_partition(mut self) -> Partition {
        let n = self.parent.len();
        let roots: Vec<usize> = (0..n).map(|x| self.find(x)).collect();
        Partition::from_keys(roots).expect("nonempty")
    }
}

/// Every partition of an `n`-element set (Bell(n) of them), via restricted
/// growth strings. Intended for exhaustive checks on small sets.
pub fn all_partitions(n: usize) -> Vec<Partition> {
    assert!(
        n > 0 && n <= 10,
        "exhaustive enumeration limited to 1..=10 elements"
    );
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    fn rec(pos: usize, max: usize, rgs: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if pos == rgs.len() {
            out.push(Partition {
                block_of: rgs.clone(),
                blocks: max + 1,
            });
            return;
        }
        for b in 0..=max + 1 {
            rgs[pos] = b;
            rec(pos + 1, max.max(b), rgs, out);
        }
    }
    rec(1, 0, &mut rgs, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(ids: &[usize]) -> Partition {
        Partition::new(ids.to_vec()).unwrap()
    }

    #[test]
    fn canonical_ids_follow_first_occurrence() {
        assert_eq!(p(&[7, 7, 3]).block_ids(), &[0, 0, 1]);
        assert_eq!(p(&[2, 0, 2, 1]), p(&[0, 1, 0, 2]));
    }

    #[test]
    fn join_examples() {
        // {{1,2},{3}} ∨ {{1},{2,3}} = singletons
        let a = p(&[0, 0, 1]);
        let b = p(&[0, 1, 1]);
        assert_eq!(a.join(&b).unwrap(), Partition::singletons(3));
        assert_eq!(a.join(&a).unwrap(), a);
        assert_eq!(a.join(&Partition::trivial(3)).unwrap(), a);
    }

    #[test]
    fn join_ground_mismatch() {
        assert!(matches!(
            Partition::trivial(2).join(&Partition::trivial(3)),
            Err(Error::GroundMismatch { .. })
        ));
        assert!(Partition::trivial(2)
            .refines(&Partition::trivial(3))
            .is_err());
    }

    #[test]
    fn refines_examples() {
        let s = Partition::singletons(4);
        let t = Partition::trivial(4);
        let q = p(&[0, 1, 1, 0]);
        assert!(s.refines(&q).unwrap());
        assert!(s.refines(&t).unwrap());
        assert!(!t.refines(&s).unwrap());
        let r = p(&[0, 0, 1, 1]);
        assert!(q.join(&r).unwrap().refines(&q).unwrap());
    }

    #[test]
    fn lift_examples() {
        let space = ProductSpace::from_sizes(&[2, 2]).unwrap();
        let one = Subset::singleton(0);
        let both = space.full();
        assert_eq!(
            lift(&Partition::trivial(2), &space, one, both).unwrap(),
            Partition::trivial(4)
        );
        // blocks {(a,·)}, {(b,·)}: factor 1 fastest, so indices 0,2 and 1,3
        assert_eq!(
            lift(&Partition::singletons(2), &space, one, both).unwrap(),
            p(&[0, 1, 0, 1])
        );
        let q = p(&[0, 1, 1, 0]);
        assert_eq!(lift(&q, &space, both, both).unwrap(), q);
        assert!(matches!(
            lift(&q, &space, both, one),
            Err(Error::NotSubset { .. })
        ));
        // from the empty subset: X_∅ has one element
        assert_eq!(
            lift(&Partition::trivial(1), &space, Subset::EMPTY, both).unwrap(),
            Partition::trivial(4)
        );
    }

    #[test]
    fn hyperedge_examples() {
        assert_eq!(
            hyperedge_components(3, &[vec![0, 1], vec![1, 2]]).unwrap(),
            Partition::trivial(3)
        );
        assert_eq!(
            hyperedge_components(3, &[]).unwrap(),
            Partition::singletons(3)
        );
        assert_eq!(
            hyperedge_components(3, &[vec![0], vec![1], vec![2]]).unwrap(),
            Partition::singletons(3)
        );
        assert!(matches!(
            hyperedge_components(3, &[vec![5]]),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            hyperedge_components(3, &[vec![]]),
            Err(Error::EmptyEdge(0))
        ));
    }

    #[test]
    fn bell_numbers() {
        let bell = [1, 2, 5, 15, 52];
        for (n, &b) in (1..=5).zip(&bell) {
            assert_eq!(all_partitions(n).len(), b);
        }
    }

    #[test]
    fn subset_enumeration() {
        let m = Subset::from_indices([0, 2]);
        let subs: Vec<Subset> = m.subsets().collect();
        assert_eq!(
            subs,
            vec![Subset::EMPTY, Subset::singleton(0), Subset::singleton(2), m]
        );
        assert_eq!(Subset::EMPTY.subsets().count(), 1);
        assert_eq!(Subset::all(3).count(), 8);
    }

    #[test]
    fn mixed_radix_round_trip() {
        let space = ProductSpace::from_sizes(&[2, 3, 2]).unwrap();
        let m = Subset::from_indices([0, 2]);
        for x in 0..space.size(space.full()) {
            let d = space.decode(space.full(), x);
            assert_eq!(space.encode(space.full(), &d), x);
            let xm = space.project(space.full(), x, m);
            assert_eq!(space.decode(m, xm), vec![d[0], d[2]]);
            let xr = space.project(space.full(), x, Subset::singleton(1));
            assert_eq!(space.combine(m, xm, Subset::singleton(1), xr), x);
        }
        // factor 1 fastest
        assert_eq!(space.decode(space.full(), 1), vec![1, 0, 0]);
        assert_eq!(space.size(Subset::EMPTY), 1);
    }

    #[test]
    fn finite_set_validation() {
        assert!(matches!(
            FiniteSet::new(Vec::<String>::new()),
            Err(Error::EmptyGround)
        ));
        assert!(matches!(
            FiniteSet::new(["a", "a"]),
            Err(Error::DuplicateLabel(_))
        ));
    }
}
