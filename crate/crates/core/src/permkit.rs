//! Permutations, top-t rankings and the Kendall-distance Cayley graph.
//!
//! Items and ranks are 0-based in memory. The text form (`3>1>2`) lists
//! 1-based item ids in preference order, which is what the dataset files and
//! JSON outputs use.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::{Error, Result};

/// Default cap on the number of items; `7! = 5040` vertices.
pub const DEFAULT_MAX_ITEMS: usize = 7;
/// Cap when the large-size override is set; keeps `r!` within `u32`.
pub const OVERRIDE_MAX_ITEMS: usize = 10;

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Checks `2 <= r <= cap` where the cap depends on `allow_large`.
pub fn check_capacity(r: usize, allow_large: bool) -> Result<()> {
    let cap = if allow_large {
        OVERRIDE_MAX_ITEMS
    } else {
        DEFAULT_MAX_ITEMS
    };
    if r < 2 {
        return Err(Error::Domain(format!("need at least 2 items, got {r}")));
    }
    if r > cap {
        return Err(Error::Capacity { r, cap });
    }
    Ok(())
}

/// A complete ranking: `ranks[i]` is the rank of item `i`, `order[k]` the
/// item at rank `k`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    ranks: Box<[u8]>,
    order: Box<[u8]>,
}

impl Permutation {
    pub fn identity(r: usize) -> Self {
        let v: Box<[u8]> = (0..r as u8).collect();
        Permutation {
            ranks: v.clone(),
            order: v,
        }
    }

    /// Items listed best first, e.g. `[2, 0, 1]` puts item 2 at the top.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let ranks = invert(order)?;
        Ok(Permutation {
            ranks: ranks.iter().map(|&x| x as u8).collect(),
            order: order.iter().map(|&x| x as u8).collect(),
        })
    }

    /// From the rank of each item.
    pub fn from_ranks(ranks: &[usize]) -> Result<Self> {
        let order = invert(ranks)?;
        Ok(Permutation {
            ranks: ranks.iter().map(|&x| x as u8).collect(),
            order: order.iter().map(|&x| x as u8).collect(),
        })
    }

    /// The reversal of the identity: item `r-1` first.
    pub fn reversal(r: usize) -> Self {
        let order: Vec<usize> = (0..r).rev().collect();
        Permutation::from_order(&order).expect("reversal is a permutation")
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn rank_of(&self, item: usize) -> usize {
        self.ranks[item] as usize
    }

    pub fn item_at(&self, rank: usize) -> usize {
        self.order[rank] as usize
    }

    pub fn ranks(&self) -> impl Iterator<Item = usize> + '_ {
        self.ranks.iter().map(|&x| x as usize)
    }

    pub fn order(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().map(|&x| x as usize)
    }

    /// Group inverse: the permutation whose rank sequence is this one's order.
    pub fn inverse(&self) -> Self {
        Permutation {
            ranks: self.order.clone(),
            order: self.ranks.clone(),
        }
    }

    /// Renames every item `i` to `relabel.rank_of(i)`, keeping preference
    /// positions. Kendall distance is invariant under a common relabeling.
    pub fn relabel_items(&self, relabel: &Permutation) -> Self {
        assert_eq!(self.len(), relabel.len());
        let order: Vec<usize> = self.order().map(|i| relabel.rank_of(i)).collect();
        Permutation::from_order(&order).expect("relabeling preserves bijectivity")
    }

    /// Swaps the items at ranks `k` and `k + 1`.
    pub fn adjacent_swap(&self, k: usize) -> Self {
        let mut order = self.order.to_vec();
        order.swap(k, k + 1);
        let mut ranks = self.ranks.to_vec();
        ranks[order[k] as usize] = k as u8;
        ranks[order[k + 1] as usize] = (k + 1) as u8;
        Permutation {
            ranks: ranks.into(),
            order: order.into(),
        }
    }

    /// The top-`t` prefix.
    pub fn truncate(&self, t: usize) -> Result<TopTRanking> {
        TopTRanking::new(self.order[..t.min(self.len())].iter().map(|&x| x as usize).collect(), self.len())
    }
}

fn invert(seq: &[usize]) -> Result<Vec<usize>> {
    let r = seq.len();
    if r == 0 || r > u8::MAX as usize {
        return Err(Error::InvalidRanking(format!("unsupported length {r}")));
    }
    let mut inv = vec![usize::MAX; r];
    for (pos, &x) in seq.iter().enumerate() {
        if x >= r {
            return Err(Error::InvalidRanking(format!("entry {} out of range 1..={r}", x + 1)));
        }
        if inv[x] != usize::MAX {
            return Err(Error::InvalidRanking(format!("entry {} repeated", x + 1)));
        }
        inv[x] = pos;
    }
    Ok(inv)
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({self})")
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_items(f, &self.order)
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Permutation::from_order(&parse_items(s)?)
    }
}

fn write_items(f: &mut fmt::Formatter<'_>, items: &[u8]) -> fmt::Result {
    for (k, &i) in items.iter().enumerate() {
        if k > 0 {
            f.write_str(">")?;
        }
        write!(f, "{}", i as usize + 1)?;
    }
    Ok(())
}

/// Parses `3>1>2` into 0-based items.
pub fn parse_items(s: &str) -> Result<Vec<usize>> {
    s.split('>')
        .map(|tok| {
            let tok = tok.trim();
            match tok.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(Error::InvalidRanking(format!("bad item id {tok:?}"))),
            }
        })
        .collect()
}

/// An ordered prefix of `t` distinct items out of `r`, `1 <= t <= r - 1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TopTRanking {
    items: Box<[u8]>,
    r: usize,
}

impl TopTRanking {
    pub fn new(items: Vec<usize>, r: usize) -> Result<Self> {
        let t = items.len();
        if t == 0 || t >= r {
            return Err(Error::InvalidRanking(format!(
                "length {t} outside 1..={}",
                r.saturating_sub(1)
            )));
        }
        let mut seen = vec![false; r];
        for &i in &items {
            if i >= r {
                return Err(Error::InvalidRanking(format!("item {} out of range 1..={r}", i + 1)));
            }
            if seen[i] {
                return Err(Error::InvalidRanking(format!("duplicate item {}", i + 1)));
            }
            seen[i] = true;
        }
        Ok(TopTRanking {
            items: items.into_iter().map(|x| x as u8).collect(),
            r,
        })
    }

    pub fn parse(s: &str, r: usize) -> Result<Self> {
        TopTRanking::new(parse_items(s)?, r)
    }

    pub fn t(&self) -> usize {
        self.items.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn items(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|&x| x as usize)
    }

    /// Whether `p` ranks these items first, in this order.
    pub fn is_prefix_of(&self, p: &Permutation) -> bool {
        p.len() == self.r && self.items().enumerate().all(|(k, i)| p.item_at(k) == i)
    }
}

impl fmt::Debug for TopTRanking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TopTRanking({self} of {})", self.r)
    }
}

impl fmt::Display for TopTRanking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_items(f, &self.items)
    }
}

/// Inversion count between `a` and `b`, i.e. the number of item pairs the
/// two rankings order differently.
pub fn kendall_distance(a: &Permutation, b: &Permutation) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(kendall_unchecked(a, b))
}

pub(crate) fn kendall_unchecked(a: &Permutation, b: &Permutation) -> usize {
    // ranks under b of a's items in a's order; inversions = discordant pairs
    let mut seq: Vec<u8> = a.order.iter().map(|&i| b.ranks[i as usize]).collect();
    let mut buf = vec![0u8; seq.len()];
    count_inversions(&mut seq, &mut buf)
}

fn count_inversions(seq: &mut [u8], buf: &mut [u8]) -> usize {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (lo, hi) = seq.split_at_mut(mid);
        let (blo, bhi) = buf.split_at_mut(mid);
        count_inversions(lo, blo) + count_inversions(hi, bhi)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if seq[i] <= seq[j] {
            buf[k] = seq[i];
            i += 1;
        } else {
            buf[k] = seq[j];
            inv += mid - i;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&seq[j..n]);
    seq.copy_from_slice(&buf[..n]);
    inv
}

/// Lexicographic position of the rank sequence among all of `S_r`.
pub fn index_of(p: &Permutation) -> usize {
    let r = p.len();
    let mut idx = 0;
    for i in 0..r {
        let smaller_after = p.ranks[i + 1..].iter().filter(|&&x| x < p.ranks[i]).count();
        idx = idx * (r - i) + smaller_after;
    }
    idx
}

/// Inverse of [`index_of`].
pub fn unindex(index: usize, r: usize) -> Result<Permutation> {
    if r == 0 || r > OVERRIDE_MAX_ITEMS || index >= factorial(r) {
        return Err(Error::IndexOutOfRange { index, r });
    }
    let mut digits = vec![0usize; r];
    let mut rem = index;
    for i in (0..r).rev() {
        let radix = r - i;
        digits[i] = rem % radix;
        rem /= radix;
    }
    let mut pool: Vec<usize> = (0..r).collect();
    let ranks: Vec<usize> = digits.iter().map(|&d| pool.remove(d)).collect();
    Permutation::from_ranks(&ranks)
}

/// All complete rankings that start with `tau`, in lexicographic index order.
pub fn compatible_set(tau: &TopTRanking) -> Vec<Permutation> {
    let r = tau.r();
    let t = tau.t();
    let mut used = vec![false; r];
    for i in tau.items() {
        used[i] = true;
    }
    let rest: Vec<usize> = (0..r).filter(|&i| !used[i]).collect();
    let prefix: Vec<usize> = tau.items().collect();
    let mut out: Vec<Permutation> = permutations_of(&rest)
        .into_iter()
        .map(|tail| {
            let mut order = prefix.clone();
            order.extend(tail);
            Permutation::from_order(&order).expect("prefix plus complement")
        })
        .collect();
    debug_assert_eq!(out.len(), factorial(r - t));
    out.sort_by_key(index_of);
    out
}

fn permutations_of(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (k, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(k);
        for mut tail in permutations_of(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// `S_r` as a graph whose edges join rankings one adjacent transposition apart.
#[derive(Debug, Clone)]
pub struct CayleyGraph {
    r: usize,
    edges: Vec<(u32, u32)>,
    // (neighbor, edge id) sorted by neighbor
    adjacency: Vec<Vec<(u32, u32)>>,
}

/// Builds the graph for `r` items within the default cap.
pub fn build_cayley_graph(r: usize) -> Result<CayleyGraph> {
    CayleyGraph::build(r, false)
}

impl CayleyGraph {
    pub fn build(r: usize, allow_large: bool) -> Result<Self> {
        check_capacity(r, allow_large)?;
        let n = factorial(r);
        let mut adjacency: Vec<Vec<(u32, u32)>> = vec![Vec::with_capacity(r - 1); n];
        let mut edges = Vec::with_capacity(n * (r - 1) / 2);
        for v in 0..n {
            let p = unindex(v, r)?;
            let mut nbrs: Vec<usize> = (0..r - 1).map(|k| index_of(&p.adjacent_swap(k))).collect();
            nbrs.sort_unstable();
            for w in nbrs {
                if v < w {
                    let e = edges.len() as u32;
                    edges.push((v as u32, w as u32));
                    adjacency[v].push((w as u32, e));
                    adjacency[w].push((v as u32, e));
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(CayleyGraph { r, edges, adjacency })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// `(neighbor, edge id)` pairs of vertex `v`.
    pub fn neighbors(&self, v: usize) -> &[(u32, u32)] {
        &self.adjacency[v]
    }

    /// Writes the `src,dst` edge list.
    pub fn write_edge_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(b"src,dst\n")?;
        for &(a, b) in &self.edges {
            writeln!(out, "{a},{b}")?;
        }
        out.flush()
    }
}

/// Everything enumerated once for a given `r`: the vertex list, the graph,
/// prefix lookups for partial rankings, and (for `r <= 6`) a distance table.
#[derive(Debug)]
pub struct RankSpace {
    r: usize,
    perms: Vec<Permutation>,
    graph: CayleyGraph,
    // prefix[v * (r - 1) + (t - 1)] = partial index of the top-t of vertex v
    prefix: Vec<u32>,
    // compatible vertices per partial index
    members: Vec<Vec<u32>>,
    partial_offsets: Vec<usize>,
    distances: Option<Vec<u8>>,
}

const DISTANCE_TABLE_MAX_ITEMS: usize = 6;

impl RankSpace {
    pub fn new(r: usize) -> Result<Self> {
        Self::with_override(r, false)
    }

    pub fn with_override(r: usize, allow_large: bool) -> Result<Self> {
        let graph = CayleyGraph::build(r, allow_large)?;
        let n = factorial(r);
        let perms: Vec<Permutation> = (0..n).map(|i| unindex(i, r)).collect::<Result<_>>()?;

        let mut partial_offsets = vec![0usize; r + 1];
        for t in 1..r {
            partial_offsets[t + 1] = partial_offsets[t] + arrangements(r, t);
        }
        let mut prefix = vec![0u32; n * (r - 1)];
        let mut members = vec![Vec::new(); partial_offsets[r]];
        for (v, p) in perms.iter().enumerate() {
            for t in 1..r {
                let idx = partial_index_of_items(&p.order[..t], r, &partial_offsets);
                prefix[v * (r - 1) + t - 1] = idx as u32;
                members[idx].push(v as u32);
            }
        }
        let distances = (r <= DISTANCE_TABLE_MAX_ITEMS).then(|| {
            let mut d = vec![0u8; n * n];
            for i in 0..n {
                for j in i + 1..n {
                    let k = kendall_unchecked(&perms[i], &perms[j]) as u8;
                    d[i * n + j] = k;
                    d[j * n + i] = k;
                }
            }
            d
        });
        Ok(RankSpace {
            r,
            perms,
            graph,
            prefix,
            members,
            partial_offsets,
            distances,
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// `r!`
    pub fn num_vertices(&self) -> usize {
        self.perms.len()
    }

    /// `r - 1`, the number of admissible lengths.
    pub fn num_lengths(&self) -> usize {
        self.r - 1
    }

    pub fn vertices(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn vertex(&self, v: usize) -> &Permutation {
        &self.perms[v]
    }

    pub fn graph(&self) -> &CayleyGraph {
        &self.graph
    }

    pub fn index_of(&self, p: &Permutation) -> Result<usize> {
        self.check_perm(p)?;
        Ok(index_of(p))
    }

    pub fn check_perm(&self, p: &Permutation) -> Result<()> {
        if p.len() != self.r {
            return Err(Error::Dimension {
                expected: self.r,
                got: p.len(),
            });
        }
        Ok(())
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        match &self.distances {
            Some(d) => d[a * self.perms.len() + b] as usize,
            None => kendall_unchecked(&self.perms[a], &self.perms[b]),
        }
    }

    /// `|S̄_r|`, the number of top-t rankings over all `t` in `1..r`.
    pub fn num_partials(&self) -> usize {
        self.partial_offsets[self.r]
    }

    /// Canonical index of a top-t ranking: grouped by `t`, lexicographic
    /// within a length.
    pub fn partial_index(&self, tau: &TopTRanking) -> Result<usize> {
        if tau.r() != self.r {
            return Err(Error::Dimension {
                expected: self.r,
                got: tau.r(),
            });
        }
        Ok(partial_index_of_items(&tau.items, self.r, &self.partial_offsets))
    }

    /// Inverse of [`RankSpace::partial_index`].
    pub fn partial(&self, index: usize) -> TopTRanking {
        let v = self.members[index][0] as usize;
        let t = self.partial_length(index);
        self.perms[v].truncate(t).expect("valid prefix")
    }

    /// Length `t` of the partial ranking with this index.
    pub fn partial_length(&self, index: usize) -> usize {
        (1..self.r)
            .find(|&t| index < self.partial_offsets[t + 1])
            .expect("partial index in range")
    }

    /// Partial index of the top-`t` prefix of vertex `v`.
    pub fn prefix_index(&self, v: usize, t: usize) -> usize {
        self.prefix[v * (self.r - 1) + t - 1] as usize
    }

    /// Vertices compatible with the partial ranking at `index`.
    pub fn compatible_vertices(&self, index: usize) -> &[u32] {
        &self.members[index]
    }
}

/// Number of ordered `t`-prefixes from `r` items.
pub fn arrangements(r: usize, t: usize) -> usize {
    (r - t + 1..=r).product()
}

fn partial_index_of_items(items: &[u8], r: usize, offsets: &[usize]) -> usize {
    let t = items.len();
    let mut used = 0u32;
    let mut idx = 0;
    for (k, &it) in items.iter().enumerate() {
        let below = (0..it).filter(|&j| used & (1 << j) == 0).count();
        idx = idx * (r - k) + below;
        used |= 1 << it;
    }
    offsets[t] + idx
}
