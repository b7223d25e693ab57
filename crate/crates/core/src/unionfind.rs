/// Disjoint sets over `0..n` with union by size and path compression.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        assert!(n <= u32::MAX as usize, "too many elements");
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut cur = x;
        while self.parent[cur] as usize != root {
            let next = self.parent[cur] as usize;
            self.parent[cur] = root as u32;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Size of the set containing `x`.
    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }

    /// Per-root type census: `(root, counts)` in increasing root order.
    /// `type_of(v)` must be `< k` for every element.
    pub fn compositions(
        &mut self,
        k: usize,
        type_of: impl Fn(usize) -> usize,
    ) -> Vec<(usize, Vec<u32>)> {
        let n = self.len();
        let mut slot = vec![u32::MAX; n];
        let mut out: Vec<(usize, Vec<u32>)> = Vec::new();
        for v in 0..n {
            let r = self.find(v);
            if slot[r] == u32::MAX {
                slot[r] = out.len() as u32;
                out.push((r, vec![0; k]));
            }
            out[slot[r] as usize].1[type_of(v)] += 1;
        }
        out.sort_unstable_by_key(|(r, _)| *r);
        out
    }
}
