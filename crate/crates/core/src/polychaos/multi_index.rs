use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

/// A multi-index of polynomial degrees, one entry per parameter.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// Unit index with a one in position `m`.
    pub fn unit(dim: usize, m: usize) -> Self {
        let mut e = vec![0; dim];
        e[m] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn max_entry(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Number of non-zero entries.
    pub fn support_len(&self) -> usize {
        self.0.iter().filter(|&&a| a != 0).count()
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl std::ops::Index<usize> for MultiIndex {
    type Output = u32;
    fn index(&self, m: usize) -> &u32 {
        &self.0[m]
    }
}

/// Graded lexicographic: total degree first, then entries left to right.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// An ordered set of distinct multi-indices.
///
/// Members are kept in graded lexicographic order; the position of a member
/// in that order is its global number (0-based here).
#[derive(Clone, Serialize, Deserialize)]
#[serde(into = "Vec<MultiIndex>", try_from = "Vec<MultiIndex>")]
pub struct IndexSet {
    dim: usize,
    members: Vec<MultiIndex>,
    #[serde(skip)]
    lookup: HashMap<MultiIndex, usize>,
}

impl IndexSet {
    pub fn empty(dim: usize) -> Self {
        IndexSet {
            dim,
            members: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    /// Builds a set from arbitrary members; duplicates are dropped.
    ///
    /// Panics if the members do not share a common length `dim`.
    pub fn from_indices<I: IntoIterator<Item = MultiIndex>>(dim: usize, items: I) -> Self {
        let set: BTreeSet<MultiIndex> = items.into_iter().collect();
        for a in &set {
            assert_eq!(a.dim(), dim, "multi-index {a} has wrong length");
        }
        Self::from_sorted(dim, set.into_iter().collect())
    }

    fn from_sorted(dim: usize, members: Vec<MultiIndex>) -> Self {
        let lookup = members.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        IndexSet { dim, members, lookup }
    }

    /// All multi-indices of length `dim` with total degree at most `degree`.
    pub fn complete(dim: usize, degree: u32) -> Self {
        let mut out = Vec::new();
        let mut cur = vec![0u32; dim];
        fn rec(m: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if m == cur.len() {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for a in 0..=left {
                cur[m] = a;
                rec(m + 1, left - a, cur, out);
            }
            cur[m] = 0;
        }
        rec(0, degree, &mut cur, &mut out);
        Self::from_indices(dim, out)
    }

    pub fn singleton(a: MultiIndex) -> Self {
        let dim = a.dim();
        Self::from_sorted(dim, vec![a])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.members.iter()
    }

    pub fn members(&self) -> &[MultiIndex] {
        &self.members
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.members[i]
    }

    pub fn contains(&self, a: &MultiIndex) -> bool {
        self.lookup.contains_key(a)
    }

    /// 0-based position of `a` in the ordering.
    pub fn position(&self, a: &MultiIndex) -> Option<usize> {
        self.lookup.get(a).copied()
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&MultiIndex::zero(self.dim))
    }

    pub fn max_degree(&self) -> u32 {
        self.members.iter().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn max_entry(&self) -> u32 {
        self.members.iter().map(MultiIndex::max_entry).max().unwrap_or(0)
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        IndexSet::from_indices(self.dim, self.members.iter().chain(other.members.iter()).cloned())
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        let kept = self.members.iter().filter(|a| !other.contains(a)).cloned().collect();
        IndexSet::from_sorted(self.dim, kept)
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        let kept = self.members.iter().filter(|a| other.contains(a)).cloned().collect();
        IndexSet::from_sorted(self.dim, kept)
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.members.iter().all(|a| other.contains(a))
    }

    /// The neighbourhood N(P, Q): every gamma with
    /// |alpha_m - beta_m| <= gamma_m <= alpha_m + beta_m for some alpha in P, beta in Q.
    pub fn neighborhood(&self, other: &IndexSet) -> IndexSet {
        assert_eq!(self.dim, other.dim, "index sets over different dimensions");
        let dim = self.dim;
        let mut out: BTreeSet<MultiIndex> = BTreeSet::new();
        let mut lo = vec![0u32; dim];
        let mut hi = vec![0u32; dim];
        let mut cur = vec![0u32; dim];
        for a in &self.members {
            for b in &other.members {
                for m in 0..dim {
                    lo[m] = a[m].abs_diff(b[m]);
                    hi[m] = a[m] + b[m];
                }
                for_each_in_box(&lo, &hi, &mut cur, &mut |g| {
                    out.insert(MultiIndex(g.to_vec()));
                });
            }
        }
        IndexSet::from_sorted(dim, out.into_iter().collect())
    }

    /// Members of total degree at most `degree`.
    pub fn truncate_degree(&self, degree: u32) -> IndexSet {
        let kept = self.members.iter().filter(|a| a.degree() <= degree).cloned().collect();
        IndexSet::from_sorted(self.dim, kept)
    }
}

/// Calls `f` for every integer vector `v` with `lo <= v <= hi` componentwise.
pub(crate) fn for_each_in_box(lo: &[u32], hi: &[u32], cur: &mut [u32], f: &mut impl FnMut(&[u32])) {
    let dim = lo.len();
    cur.copy_from_slice(lo);
    loop {
        f(cur);
        let mut m = 0;
        loop {
            if m == dim {
                return;
            }
            if cur[m] < hi[m] {
                cur[m] += 1;
                break;
            }
            cur[m] = lo[m];
            m += 1;
        }
    }
}

impl From<IndexSet> for Vec<MultiIndex> {
    fn from(s: IndexSet) -> Self {
        s.members
    }
}

impl TryFrom<Vec<MultiIndex>> for IndexSet {
    type Error = String;
    fn try_from(v: Vec<MultiIndex>) -> Result<Self, String> {
        let dim = v.first().map(MultiIndex::dim).unwrap_or(0);
        if v.iter().any(|a| a.dim() != dim) {
            return Err("multi-indices of unequal length".into());
        }
        Ok(IndexSet::from_indices(dim, v))
    }
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.members == other.members
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members.iter()).finish()
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a MultiIndex;
    type IntoIter = std::slice::Iter<'a, MultiIndex>;
    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}
