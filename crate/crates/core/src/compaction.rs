//! Index compaction for index ranges too large for the polynomial encoding.
//!
//! A pool of `n^3 + 1` primes of size about `n^4` is multiplied into `Q`, all
//! pairwise index differences into `D`. Primes dividing no difference are the
//! factors of `P = Q / gcd(Q, D)`, and one of them is isolated by halving the
//! pool along its product tree, keeping the half whose product shares a
//! factor with `P`. Reducing every index modulo that prime is injective on
//! the support.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::prime::{gen_primes, is_prime};
use crate::scheme::ceil_log2;
use crate::sparse::{Index, SparseError, SparseVector};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompactionError {
    #[error("at least two distinct indices are needed for a difference product")]
    TooFewIndices,
    #[error("every prime of the pool divides some index difference")]
    NoGoodPrime,
    #[error("prime pool is empty")]
    EmptyPool,
    #[error("pool entry {0} is not a prime")]
    NotPrime(u64),
    #[error("pool entry {0} is repeated")]
    DuplicatePrime(u64),
    #[error("support size {0} is too large for a prime pool")]
    PoolTooLarge(usize),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

#[derive(Debug, Clone)]
struct Node {
    product: BigUint,
    /// Leaf range `[lo, hi)`.
    lo: usize,
    hi: usize,
    children: Option<(usize, usize)>,
}

/// Balanced binary tree of partial products; each internal node holds the
/// product of its two children and the first half of a range goes left.
#[derive(Debug, Clone)]
pub struct ProductTree {
    nodes: Vec<Node>,
    root: usize,
}

/// Handle to one node of a [`ProductTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

impl ProductTree {
    pub fn root(&self) -> NodeId {
        NodeId(self.root)
    }

    pub fn product(&self, id: NodeId) -> &BigUint {
        &self.nodes[id.0].product
    }

    pub fn children(&self, id: NodeId) -> Option<(NodeId, NodeId)> {
        self.nodes[id.0].children.map(|(l, r)| (NodeId(l), NodeId(r)))
    }

    /// Leaf range `[lo, hi)` covered by a node.
    pub fn range(&self, id: NodeId) -> (usize, usize) {
        (self.nodes[id.0].lo, self.nodes[id.0].hi)
    }

    pub fn root_product(&self) -> &BigUint {
        self.product(self.root())
    }

    /// Products of all internal nodes, in construction (post-)order.
    pub fn internal_products(&self) -> impl Iterator<Item = &BigUint> {
        self.nodes
            .iter()
            .filter(|n| n.children.is_some())
            .map(|n| &n.product)
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &ProductTree, id: NodeId) -> usize {
            match t.children(id) {
                None => 0,
                Some((l, r)) => 1 + walk(t, l).max(walk(t, r)),
            }
        }
        walk(self, self.root())
    }
}

/// Builds the product tree of a non-empty list. An empty list yields a
/// single node holding `1`.
pub fn product_tree(values: &[BigUint]) -> ProductTree {
    fn build(values: &[BigUint], lo: usize, hi: usize, nodes: &mut Vec<Node>) -> usize {
        if hi - lo == 1 {
            nodes.push(Node {
                product: values[lo].clone(),
                lo,
                hi,
                children: None,
            });
            return nodes.len() - 1;
        }
        let mid = lo + (hi - lo).div_ceil(2);
        let l = build(values, lo, mid, nodes);
        let r = build(values, mid, hi, nodes);
        let product = &nodes[l].product * &nodes[r].product;
        nodes.push(Node {
            product,
            lo,
            hi,
            children: Some((l, r)),
        });
        nodes.len() - 1
    }
    let mut nodes = Vec::with_capacity(2 * values.len());
    if values.is_empty() {
        nodes.push(Node {
            product: BigUint::one(),
            lo: 0,
            hi: 0,
            children: None,
        });
        return ProductTree { nodes, root: 0 };
    }
    let root = build(values, 0, values.len(), &mut nodes);
    ProductTree { nodes, root }
}

/// Greatest common divisor. One remainder step brings the larger operand
/// down to the size of the smaller before the binary algorithm runs.
pub fn big_gcd(a: &BigUint, b: &BigUint) -> BigUint {
    let (x, y) = if a >= b { (a, b) } else { (b, a) };
    if y.is_zero() {
        return x.clone();
    }
    y.gcd(&(x % y))
}

fn distinct_sorted(indices: &[Index]) -> Vec<Index> {
    let mut v = indices.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Product of `i - j` over all unordered pairs of distinct indices.
pub fn pairwise_diff_product(indices: &[Index]) -> Result<BigUint, CompactionError> {
    let v = distinct_sorted(indices);
    if v.len() < 2 {
        return Err(CompactionError::TooFewIndices);
    }
    let mut diffs = Vec::with_capacity(v.len() * (v.len() - 1) / 2);
    for (k, &hi) in v.iter().enumerate() {
        diffs.extend(v[..k].iter().map(|&lo| BigUint::from(hi - lo)));
    }
    Ok(product_tree(&diffs).root_product().clone())
}

/// Candidate primes and their product tree.
#[derive(Debug, Clone)]
pub struct PrimePool {
    primes: Vec<u64>,
    tree: ProductTree,
}

impl PrimePool {
    /// `n^3 + 1` primes, the smallest ones `>= n^4`.
    pub fn for_support(n: usize) -> Result<Self, CompactionError> {
        let n64 = n.max(1) as u64;
        let count = n64
            .checked_pow(3)
            .and_then(|c| c.checked_add(1))
            .filter(|&c| c <= 1 << 32)
            .ok_or(CompactionError::PoolTooLarge(n))?;
        let lower = n64.checked_pow(4).ok_or(CompactionError::PoolTooLarge(n))?;
        let primes = gen_primes(count as usize, lower);
        if primes.len() as u64 != count {
            return Err(CompactionError::PoolTooLarge(n));
        }
        Ok(Self::from_verified(primes))
    }

    /// A caller-chosen pool; every entry must be a distinct prime.
    pub fn from_primes(primes: Vec<u64>) -> Result<Self, CompactionError> {
        if primes.is_empty() {
            return Err(CompactionError::EmptyPool);
        }
        if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
            return Err(CompactionError::NotPrime(p));
        }
        let mut sorted = primes.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(CompactionError::DuplicatePrime(w[0]));
        }
        Ok(Self::from_verified(primes))
    }

    fn from_verified(primes: Vec<u64>) -> Self {
        let leaves: Vec<BigUint> = primes.iter().map(|&p| BigUint::from(p)).collect();
        let tree = product_tree(&leaves);
        Self { primes, tree }
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn tree(&self) -> &ProductTree {
        &self.tree
    }

    pub fn max_prime(&self) -> u64 {
        self.primes.iter().copied().max().unwrap_or(0)
    }
}

/// Outcome of the prime search with its size telemetry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoodPrime {
    pub p: u64,
    pub pool_size: usize,
    pub rounds: usize,
    pub q_bits: u64,
    pub d_bits: u64,
    /// Bit length of `P = Q / gcd(Q, D)`.
    pub p_product_bits: u64,
}

/// Finds a pool prime that divides no pairwise difference of `indices`.
pub fn find_good_prime(indices: &[Index], pool: &PrimePool) -> Result<GoodPrime, CompactionError> {
    let tree = pool.tree();
    let q = tree.root_product();
    let d = match pairwise_diff_product(indices) {
        Ok(d) => d,
        Err(CompactionError::TooFewIndices) => BigUint::one(),
        Err(e) => return Err(e),
    };
    let g = big_gcd(q, &d);
    let p_all = q / &g;
    if p_all.is_one() {
        return Err(CompactionError::NoGoodPrime);
    }
    let mut node = tree.root();
    let mut rounds = 0;
    while let Some((left, right)) = tree.children(node) {
        let q_half = tree.product(left);
        // Q divides P·G with P and G coprime and Q squarefree, so
        // gcd(Q', P) = Q' / gcd(Q', G); G is at most the size of D.
        let shared = q_half / big_gcd(q_half, &g);
        node = if shared > BigUint::one() { left } else { right };
        rounds += 1;
    }
    let (lo, _) = tree.range(node);
    Ok(GoodPrime {
        p: pool.primes[lo],
        pool_size: pool.len(),
        rounds,
        q_bits: q.bits(),
        d_bits: d.bits(),
        p_product_bits: p_all.bits(),
    })
}

/// Result of compacting two vectors modulo one prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompactionResult {
    pub p: u64,
    /// Original index to reduced index over the union of both supports, ascending.
    pub index_map: Vec<(Index, Index)>,
    pub original_lengths: (u64, u64),
    pub search: GoodPrime,
}

impl CompactionResult {
    pub fn reduced(&self, index: Index) -> Option<Index> {
        self.index_map
            .binary_search_by_key(&index, |&(i, _)| i)
            .ok()
            .map(|k| self.index_map[k].1)
    }
}

/// Union of both supports, ascending and distinct.
pub fn union_support(v1: &SparseVector, v2: &SparseVector) -> Vec<Index> {
    let mut all: Vec<Index> = v1.indices().chain(v2.indices()).collect();
    all.sort_unstable();
    all.dedup();
    all
}

/// Reduces both vectors modulo a prime from `pool` that keeps their union
/// support collision-free. New lengths equal the prime.
pub fn compact(
    v1: &SparseVector,
    v2: &SparseVector,
    pool: &PrimePool,
) -> Result<(SparseVector, SparseVector, CompactionResult), CompactionError> {
    let support = union_support(v1, v2);
    let search = find_good_prime(&support, pool)?;
    let p = search.p;
    let remap = |v: &SparseVector| {
        SparseVector::new(p, v.entries().iter().map(|&(i, x)| (i % p, x)).collect())
    };
    let (c1, c2) = (remap(v1)?, remap(v2)?);
    let index_map = support.iter().map(|&i| (i, i % p)).collect();
    Ok((
        c1,
        c2,
        CompactionResult {
            p,
            index_map,
            original_lengths: (v1.length(), v2.length()),
            search,
        },
    ))
}

/// [`compact`] with a pool sized for the union support (at least 2).
pub fn compact_auto(
    v1: &SparseVector,
    v2: &SparseVector,
) -> Result<(SparseVector, SparseVector, CompactionResult), CompactionError> {
    let n = union_support(v1, v2).len().max(2);
    compact(v1, v2, &PrimePool::for_support(n)?)
}

/// Most halving rounds the search can take on a pool of `size` primes.
pub fn round_bound(size: usize) -> usize {
    ceil_log2(size)
}
