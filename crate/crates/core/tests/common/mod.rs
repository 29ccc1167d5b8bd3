#![allow(dead_code)]

use ctl::AdjacencyGraph;

/// Disjoint-set forest with union by size and path halving.
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<u64>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }

    pub fn component_size(&mut self, x: usize) -> u64 {
        let r = self.find(x);
        self.size[r]
    }

    /// Component sizes, largest first.
    pub fn sizes(&mut self) -> Vec<u64> {
        let n = self.parent.len();
        let roots: Vec<usize> = (0..n).filter(|&x| self.find(x) == x).collect();
        let mut out: Vec<u64> = roots.iter().map(|&x| self.size[x]).collect();
        out.sort_unstable_by(|a, b| b.cmp(a));
        out
    }
}

pub fn union_find_of(graph: &AdjacencyGraph) -> UnionFind {
    let mut uf = UnionFind::new(graph.vertex_count());
    for &(u, v) in &graph.edges {
        uf.union(u as usize, v as usize);
    }
    uf
}
