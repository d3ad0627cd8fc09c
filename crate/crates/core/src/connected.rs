//! Enumeration of connected vertex sets containing a root.
//!
//! Each connected set is produced exactly once by the "untried set" search:
//! a branch either adds a candidate vertex or forbids it for the rest of the
//! branch, and new candidates are only the neighbours of the last added
//! vertex that have never been candidates on this branch. This is the same
//! search used for lattice animals and for Delaunay polyominoes.

use std::collections::HashSet;
use std::hash::Hash;

/// A graph for the enumerator. Neighbours must be listed without repeats.
pub trait Graph {
    type Node: Copy + Eq + Hash;
    fn neighbors(&self, v: Self::Node, out: &mut Vec<Self::Node>);
    /// Vertices that may never join a set.
    fn allowed(&self, _v: Self::Node) -> bool {
        true
    }
}

/// Callbacks for the search. `enter` sees the set after `v` was added and
/// returns `false` to prune all supersets along this branch; `leave` undoes
/// whatever `enter` recorded.
pub trait Visitor<N> {
    fn enter(&mut self, v: N, set: &[N]) -> bool;
    fn leave(&mut self, v: N);
}

struct Search<'g, G: Graph, V> {
    graph: &'g G,
    visitor: &'g mut V,
    max_size: usize,
    set: Vec<G::Node>,
    seen: HashSet<G::Node>,
    scratch: Vec<G::Node>,
}

impl<G: Graph, V: Visitor<G::Node>> Search<'_, G, V> {
    fn extend(&mut self, untried: &mut Vec<G::Node>) {
        if self.set.len() >= self.max_size {
            return;
        }
        while let Some(v) = untried.pop() {
            self.set.push(v);
            let keep_going = self.visitor.enter(v, &self.set);
            if keep_going {
                let mut next = untried.clone();
                let mut fresh = Vec::new();
                self.scratch.clear();
                self.graph.neighbors(v, &mut self.scratch);
                for &w in &self.scratch {
                    if self.graph.allowed(w) && self.seen.insert(w) {
                        fresh.push(w);
                    }
                }
                next.extend_from_slice(&fresh);
                self.extend(&mut next);
                for w in &fresh {
                    self.seen.remove(w);
                }
            }
            self.visitor.leave(v);
            self.set.pop();
            // v stays in `seen`: it is forbidden on the remaining branches
        }
    }
}

/// Visits every connected set containing `root` with at most `max_size`
/// vertices. `forbidden` vertices are treated as already tried, which is how
/// callers split a family by its smallest member.
pub fn enumerate_connected<G, V>(graph: &G, root: G::Node, max_size: usize, forbidden: &[G::Node], visitor: &mut V)
where
    G: Graph,
    V: Visitor<G::Node>,
{
    if max_size == 0 || !graph.allowed(root) {
        return;
    }
    let mut seen: HashSet<G::Node> = forbidden.iter().copied().collect();
    if !seen.insert(root) {
        return;
    }
    let mut search = Search { graph, visitor, max_size, set: Vec::new(), seen, scratch: Vec::new() };
    let mut untried = vec![root];
    search.extend(&mut untried);
}

/// Collects sets into a vector (handy for tests and small searches).
pub struct Collect<N> {
    pub sets: Vec<Vec<N>>,
}

impl<N: Copy> Visitor<N> for Collect<N> {
    fn enter(&mut self, _v: N, set: &[N]) -> bool {
        self.sets.push(set.to_vec());
        true
    }
    fn leave(&mut self, _v: N) {}
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Path graph 0 - 1 - 2 - ... - (n-1).
    struct PathGraph(i32);

    impl Graph for PathGraph {
        type Node = i32;
        fn neighbors(&self, v: i32, out: &mut Vec<i32>) {
            if v > 0 {
                out.push(v - 1);
            }
            if v + 1 < self.0 {
                out.push(v + 1);
            }
        }
    }

    #[test]
    fn intervals_through_a_vertex() {
        let mut c = Collect { sets: Vec::new() };
        enumerate_connected(&PathGraph(7), 3, 3, &[], &mut c);
        let mut sets: Vec<Vec<i32>> = c
            .sets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s
            })
            .collect();
        sets.sort();
        // sizes 1, 2, 3 containing 3: {3}, {2,3}, {3,4}, {1,2,3}, {2,3,4}, {3,4,5}
        assert_eq!(sets.len(), 6);
        sets.dedup();
        assert_eq!(sets.len(), 6);
    }

    #[test]
    fn forbidden_vertices_are_skipped() {
        let mut c = Collect { sets: Vec::new() };
        enumerate_connected(&PathGraph(7), 3, 3, &[2], &mut c);
        assert!(c.sets.iter().all(|s| !s.contains(&2)));
        assert_eq!(c.sets.len(), 3);
    }

    #[test]
    fn pruning_stops_growth() {
        struct OnlySmall(usize);
        impl Visitor<i32> for OnlySmall {
            fn enter(&mut self, _v: i32, set: &[i32]) -> bool {
                self.0 += 1;
                set.len() < 2
            }
            fn leave(&mut self, _v: i32) {}
        }
        let mut v = OnlySmall(0);
        enumerate_connected(&PathGraph(9), 4, 5, &[], &mut v);
        assert_eq!(v.0, 3);
    }
}
