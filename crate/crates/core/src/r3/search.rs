use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use super::{IntSet, R3Certificate, R3Method};
use crate::error::{Error, Result};

pub const DEFAULT_BUDGET: u64 = 100_000_000;
/// Forbidden sets are tracked in a `u128`.
pub const MAX_SEARCH_N: usize = 127;
const EXHAUSTIVE_MAX: usize = 28;

/// Maximum over all `2^N` subsets; bit `i` of a mask stands for `i + 1`.
pub fn r3_exhaustive(n: usize) -> Result<R3Certificate> {
    if n > EXHAUSTIVE_MAX {
        return Err(Error::InvalidConfig(format!("exhaustive r3 is limited to N <= {EXHAUSTIVE_MAX}")));
    }
    let free = |m: u32| (1..).take_while(|d| 2 * d < n).all(|d| m & (m >> d) & (m >> (2 * d)) == 0);
    let best = (0..1u32 << n)
        .into_par_iter()
        .filter(|&m| free(m))
        .map(|m| (m.count_ones(), std::cmp::Reverse(m)))
        .max()
        .map(|(_, std::cmp::Reverse(m))| m)
        .unwrap_or(0);
    let witness = IntSet::new(n, (0..n).filter(|&i| best >> i & 1 == 1).map(|i| i + 1))?;
    Ok(R3Certificate { n, value: witness.len(), witness, method: R3Method::Exhaustive })
}

/// Incremental branch and bound: `r_3([k])` for `k = 1, 2, ...` in turn.
///
/// A set of size `r_3([k-1]) + 1` in `[k]` must contain both 1 and k (otherwise
/// a translate fits in `[k-1]`), and any window of length `w` holds at most
/// `r_3([w])` of its elements. Only that one extra element is searched for.
#[derive(Clone, Debug)]
pub struct R3Search {
    /// `table[k] = r_3([k])`.
    table: Vec<usize>,
    /// `witnesses[k]` realizes `table[k]`.
    witnesses: Vec<Vec<usize>>,
    methods: Vec<R3Method>,
    nodes: u64,
}

impl Default for R3Search {
    fn default() -> Self {
        Self::new()
    }
}

impl R3Search {
    pub fn new() -> Self {
        Self { table: vec![0], witnesses: vec![Vec::new()], methods: vec![R3Method::Exhaustive], nodes: 0 }
    }

    /// Resume from certificates for `N = 1, ..., k` in order.
    pub fn resume(certs: &[R3Certificate]) -> Result<Self> {
        let mut search = Self::new();
        for (k, cert) in certs.iter().enumerate() {
            if cert.n != k + 1 || !cert.is_consistent() {
                return Err(Error::InvalidConfig(format!("certificate for N = {} does not extend the table", cert.n)));
            }
            search.table.push(cert.value);
            search.witnesses.push(cert.witness.members().to_vec());
            search.methods.push(cert.method);
        }
        Ok(search)
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    pub fn certified_up_to(&self) -> usize {
        self.table.len() - 1
    }

    pub fn certificate(&self, n: usize) -> Option<R3Certificate> {
        let witness = IntSet::new(n, self.witnesses.get(n)?.iter().copied()).ok()?;
        Some(R3Certificate { n, value: self.table[n], witness, method: self.methods[n] })
    }

    pub fn extend_to(&mut self, n: usize, budget: u64) -> Result<()> {
        if n > MAX_SEARCH_N {
            return Err(Error::InvalidConfig(format!("branch and bound is limited to N <= {MAX_SEARCH_N}")));
        }
        while self.table.len() <= n {
            let k = self.table.len();
            let target = self.table[k - 1] + 1;
            let spent = AtomicU64::new(0);
            let left = budget.saturating_sub(self.nodes);
            let found = find_with_ends(k, target, &self.table, left, &spent);
            self.nodes += spent.load(Ordering::Relaxed);
            match found {
                Outcome::Found(set) => {
                    self.table.push(target);
                    self.witnesses.push(set);
                    self.methods.push(R3Method::BranchAndBound);
                }
                Outcome::Absent => {
                    self.table.push(target - 1);
                    self.witnesses.push(self.witnesses[k - 1].clone());
                    self.methods.push(R3Method::BranchAndBound);
                }
                Outcome::OutOfBudget => {
                    return Err(Error::BudgetExhausted { n, best: self.table[k - 1] });
                }
            }
        }
        Ok(())
    }
}

/// `r_3([n])` by branch and bound, within `budget` search nodes in total.
pub fn r3_exact(n: usize, budget: u64) -> Result<R3Certificate> {
    if n == 0 {
        return Err(Error::InvalidConfig("N must be at least 1".into()));
    }
    let mut search = R3Search::new();
    search.extend_to(n, budget)?;
    Ok(search.certificate(n).expect("table reaches n"))
}

enum Outcome {
    Found(Vec<usize>),
    Absent,
    OutOfBudget,
}

struct Dfs<'a> {
    k: usize,
    target: usize,
    table: &'a [usize],
    budget: u64,
    spent: &'a AtomicU64,
}

/// Elements are bits `x` for `x in [1, k]`.
#[derive(Clone, Copy)]
struct Node {
    pos: usize,
    count: usize,
    chosen: u128,
    forbidden: u128,
}

const SPLIT_DEPTH: usize = 6;

fn find_with_ends(k: usize, target: usize, table: &[usize], budget: u64, spent: &AtomicU64) -> Outcome {
    if k <= 2 {
        return Outcome::Found((1..=k).collect());
    }
    let dfs = Dfs { k, target, table, budget, spent };
    let root = dfs.include(Node { pos: 1, count: 0, chosen: 0, forbidden: 0 }, 1).expect("1 is free");
    // expand a few levels sequentially, then search the frontier in parallel
    let mut frontier = vec![root];
    for _ in 0..SPLIT_DEPTH {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for node in frontier {
            if node.pos >= k || !dfs.viable(&node) {
                next.push(node);
                continue;
            }
            if let Some(inc) = dfs.include(node, node.pos) {
                next.push(inc);
            }
            next.push(Node { pos: node.pos + 1, ..node });
        }
        frontier = next;
    }
    let result = frontier.par_iter().find_map_first(|&node| match dfs.run(node) {
        Ok(Some(set)) => Some(Outcome::Found(set)),
        Ok(None) => None,
        Err(()) => Some(Outcome::OutOfBudget),
    });
    result.unwrap_or(Outcome::Absent)
}

impl Dfs<'_> {
    /// `node.pos` is the next undecided element; k itself is forced in.
    fn viable(&self, node: &Node) -> bool {
        if node.forbidden >> self.k & 1 == 1 {
            return false;
        }
        // elements still to come lie in [pos, k]
        let window = self.k - node.pos + 1;
        node.count + self.table[window.min(self.table.len() - 1)].min(window) >= self.target
    }

    fn include(&self, node: Node, x: usize) -> Option<Node> {
        if node.forbidden >> x & 1 == 1 {
            return None;
        }
        let mut forbidden = node.forbidden;
        let mut rest = node.chosen;
        while rest != 0 {
            let c = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let far = 2 * x - c;
            if far <= self.k {
                forbidden |= 1u128 << far;
            }
        }
        Some(Node { pos: x + 1, count: node.count + 1, chosen: node.chosen | 1u128 << x, forbidden })
    }

    fn run(&self, node: Node) -> std::result::Result<Option<Vec<usize>>, ()> {
        if self.spent.fetch_add(1, Ordering::Relaxed) >= self.budget {
            return Err(());
        }
        if !self.viable(&node) {
            return Ok(None);
        }
        if node.pos == self.k {
            let done = self.include(node, self.k).filter(|n| n.count >= self.target);
            return Ok(done.map(|n| (1..=self.k).filter(|&x| n.chosen >> x & 1 == 1).collect()));
        }
        if let Some(inc) = self.include(node, node.pos) {
            if let Some(found) = self.run(inc)? {
                return Ok(Some(found));
            }
        }
        self.run(Node { pos: node.pos + 1, ..node })
    }
}
