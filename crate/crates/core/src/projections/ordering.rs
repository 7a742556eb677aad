//! Exact Euclidean projection onto `w_0 <= w_1 <= ... <= w_{d-1}`.
//!
//! Coordinates start as singleton clusters. Violated adjacent constraints are
//! queued; popping one merges its two clusters, whose common value becomes
//! the cluster mean, and only the two constraints on the boundary of the
//! merged cluster need to be rechecked. A violated constraint stays violated
//! while its neighbours merge, so the queue can be drained in any order.

use crate::error::{Error, Result};

/// Union-find over coordinates. Each root carries the sum, size and span of
/// its cluster; spans are contiguous and ordered.
#[derive(Debug, Clone)]
pub struct DisjointSetClusters {
    parent: Vec<usize>,
    rank: Vec<u8>,
    cluster_sum: Vec<f64>,
    cluster_size: Vec<usize>,
    left_edge: Vec<usize>,
    right_edge: Vec<usize>,
}

impl DisjointSetClusters {
    pub fn new(values: &[f64]) -> Self {
        let d = values.len();
        Self {
            parent: (0..d).collect(),
            rank: vec![0; d],
            cluster_sum: values.to_vec(),
            cluster_size: vec![1; d],
            left_edge: (0..d).collect(),
            right_edge: (0..d).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        // path halving
        while self.parent[x] != x {
            let grandparent = self.parent[self.parent[x]];
            self.parent[x] = grandparent;
            x = grandparent;
        }
        x
    }

    /// Merges the clusters rooted at `a` (left) and `b` (right); returns the new root.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        debug_assert_eq!(self.right_edge[a] + 1, self.left_edge[b]);
        let (root, child) = match self.rank[a].cmp(&self.rank[b]) {
            std::cmp::Ordering::Less => (b, a),
            std::cmp::Ordering::Greater => (a, b),
            std::cmp::Ordering::Equal => {
                self.rank[a] += 1;
                (a, b)
            }
        };
        self.parent[child] = root;
        self.cluster_sum[root] = self.cluster_sum[a] + self.cluster_sum[b];
        self.cluster_size[root] = self.cluster_size[a] + self.cluster_size[b];
        self.left_edge[root] = self.left_edge[a];
        self.right_edge[root] = self.right_edge[b];
        root
    }

    /// Mean value of the cluster rooted at `root`.
    pub fn value(&self, root: usize) -> f64 {
        self.cluster_sum[root] / self.cluster_size[root] as f64
    }

    pub fn sum(&self, root: usize) -> f64 {
        self.cluster_sum[root]
    }

    pub fn size(&self, root: usize) -> usize {
        self.cluster_size[root]
    }

    pub fn span(&self, root: usize) -> (usize, usize) {
        (self.left_edge[root], self.right_edge[root])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Link {
    prev: Option<usize>,
    next: Option<usize>,
}

/// Doubly linked FIFO of constraint indices. The slot array doubles as the
/// membership table: `slots[c]` is `None` exactly when `c` is not queued.
#[derive(Debug, Clone)]
pub struct ViolationQueue {
    slots: Vec<Option<Link>>,
    head: Option<usize>,
    tail: Option<usize>,
    len: usize,
}

impl ViolationQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            slots: vec![None; capacity],
            head: None,
            tail: None,
            len: 0,
        }
    }

    pub fn contains(&self, c: usize) -> bool {
        self.slots[c].is_some()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends `c`; no-op if already queued.
    pub fn push(&mut self, c: usize) {
        if self.slots[c].is_some() {
            return;
        }
        self.slots[c] = Some(Link {
            prev: self.tail,
            next: None,
        });
        match self.tail {
            Some(t) => self.link_mut(t).next = Some(c),
            None => self.head = Some(c),
        }
        self.tail = Some(c);
        self.len += 1;
    }

    pub fn pop(&mut self) -> Option<usize> {
        let c = self.head?;
        self.remove(c);
        Some(c)
    }

    pub fn remove(&mut self, c: usize) -> bool {
        let Some(link) = self.slots[c].take() else {
            return false;
        };
        match link.prev {
            Some(p) => self.link_mut(p).next = link.next,
            None => self.head = link.next,
        }
        match link.next {
            Some(n) => self.link_mut(n).prev = link.prev,
            None => self.tail = link.prev,
        }
        self.len -= 1;
        true
    }

    /// Queue contents from head to tail.
    pub fn to_vec(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len);
        let mut cur = self.head;
        while let Some(c) = cur {
            out.push(c);
            cur = self.slots[c].and_then(|l| l.next);
        }
        out
    }

    fn link_mut(&mut self, c: usize) -> &mut Link {
        self.slots[c].as_mut().expect("linked index must be queued")
    }
}

/// Work done by one call to [`project_ordering_with_stats`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OrderingStats {
    pub evaluations: usize,
    pub merges: usize,
}

pub fn project_ordering(target: &[f64]) -> Result<Vec<f64>> {
    project_ordering_with_stats(target).map(|(w, _)| w)
}

pub fn project_ordering_with_stats(target: &[f64]) -> Result<(Vec<f64>, OrderingStats)> {
    let d = target.len();
    if d == 0 {
        return Err(Error::EmptyInput);
    }
    let mut clusters = DisjointSetClusters::new(target);
    let mut queue = ViolationQueue::new(d.saturating_sub(1));
    let mut stats = OrderingStats::default();

    // constraint c couples coordinates c and c + 1
    let violated = |clusters: &mut DisjointSetClusters, c: usize, stats: &mut OrderingStats| {
        stats.evaluations += 1;
        let left = clusters.find(c);
        let right = clusters.find(c + 1);
        clusters.value(left) > clusters.value(right)
    };

    for c in 0..d.saturating_sub(1) {
        if violated(&mut clusters, c, &mut stats) {
            queue.push(c);
        }
    }

    while let Some(c) = queue.pop() {
        let left = clusters.find(c);
        let right = clusters.find(c + 1);
        let root = clusters.union(left, right);
        stats.merges += 1;
        let (lo, hi) = clusters.span(root);
        if lo > 0 && violated(&mut clusters, lo - 1, &mut stats) {
            queue.push(lo - 1);
        }
        if hi + 1 < d && violated(&mut clusters, hi, &mut stats) {
            queue.push(hi);
        }
    }

    let out = (0..d)
        .map(|i| {
            let r = clusters.find(i);
            clusters.value(r)
        })
        .collect();
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(
            project_ordering(&[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            project_ordering(&[3.0, 1.0, 2.0]).unwrap(),
            vec![2.0, 2.0, 2.0]
        );
        assert_eq!(
            project_ordering(&[2.0, 1.0, 4.0, 3.0]).unwrap(),
            vec![1.5, 1.5, 3.5, 3.5]
        );
        assert_eq!(
            project_ordering(&[5.0, 5.0, 5.0]).unwrap(),
            vec![5.0, 5.0, 5.0]
        );
        assert_eq!(project_ordering(&[-1.0]).unwrap(), vec![-1.0]);
        assert!(matches!(project_ordering(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn reversed_input_collapses_to_mean() {
        let (w, stats) = project_ordering_with_stats(&[4.0, 3.0, 2.0, 1.0, 0.0]).unwrap();
        assert_eq!(w, vec![2.0; 5]);
        assert_eq!(stats.merges, 4);
        assert!(stats.evaluations <= 15);
    }

    #[test]
    fn queue_is_fifo_with_membership() {
        let mut q = ViolationQueue::new(6);
        q.push(3);
        q.push(1);
        q.push(3);
        q.push(5);
        assert_eq!(q.to_vec(), vec![3, 1, 5]);
        assert!(q.remove(1));
        assert!(!q.remove(1));
        assert!(!q.contains(1) && q.contains(5));
        assert_eq!(q.pop(), Some(3));
        assert_eq!(q.pop(), Some(5));
        assert_eq!(q.pop(), None);
        assert!(q.is_empty());
    }

    #[test]
    fn clusters_track_sums_and_spans() {
        let mut s = DisjointSetClusters::new(&[1.0, 2.0, 3.0, 4.0]);
        let a = s.union(1, 2);
        let zero = s.find(0);
        let b = s.union(zero, a);
        assert_eq!(s.span(b), (0, 2));
        assert_eq!(s.sum(b), 6.0);
        assert_eq!(s.size(b), 3);
        assert_eq!(s.value(b), 2.0);
        assert_eq!(s.find(2), b);
        assert_ne!(s.find(3), b);
    }
}
