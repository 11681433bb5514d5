//! Dinic's maximum flow with integer capacities, plus the two extremal minimum cuts.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: u32,
    rev: u32,
    cap: i64,
}

/// An s-t network. Arcs come in residual pairs.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    adj: Vec<Vec<Arc>>,
    source: usize,
    sink: usize,
}

/// Result of a max-flow computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinCut {
    pub flow: i128,
    /// Nodes reachable from the source in the residual network (smallest source side).
    pub min_source_side: Vec<bool>,
    /// Nodes that cannot reach the sink in the residual network (largest source side).
    pub max_source_side: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Self {
        assert!(source < nodes && sink < nodes && source != sink);
        Self { adj: vec![Vec::new(); nodes], source, sink }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn arc_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    /// Arc `from -> to` with capacity `cap`; its residual partner carries `back`.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64, back: i64) {
        debug_assert!(cap >= 0 && back >= 0);
        let rf = self.adj[to].len() as u32 + u32::from(from == to);
        let rt = self.adj[from].len() as u32;
        self.adj[from].push(Arc { to: to as u32, rev: rf, cap });
        self.adj[to].push(Arc { to: from as u32, rev: rt, cap: back });
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64) {
        self.add_edge(from, to, cap, 0);
    }

    fn levels(&self) -> Option<Vec<u32>> {
        let mut level = vec![u32::MAX; self.adj.len()];
        let mut queue = VecDeque::new();
        level[self.source] = 0;
        queue.push_back(self.source);
        while let Some(u) = queue.pop_front() {
            for a in &self.adj[u] {
                let w = a.to as usize;
                if a.cap > 0 && level[w] == u32::MAX {
                    level[w] = level[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        (level[self.sink] != u32::MAX).then_some(level)
    }

    /// Augment along level-increasing paths until blocked. Iterative to keep
    /// the stack flat on long paths.
    fn blocking_flow(&mut self, level: &mut [u32]) -> i128 {
        let mut next = vec![0usize; self.adj.len()];
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut total = 0i128;
        let mut u = self.source;
        loop {
            if u == self.sink {
                let push = path
                    .iter()
                    .map(|&(n, i)| self.adj[n][i].cap)
                    .min()
                    .expect("sink is never the source");
                let mut cut_at = path.len();
                for (k, &(n, i)) in path.iter().enumerate() {
                    let (to, rev) = {
                        let a = &mut self.adj[n][i];
                        a.cap -= push;
                        (a.to as usize, a.rev as usize)
                    };
                    self.adj[to][rev].cap += push;
                    if self.adj[n][i].cap == 0 && cut_at == path.len() {
                        cut_at = k;
                    }
                }
                total += i128::from(push);
                path.truncate(cut_at);
                u = path.last().map_or(self.source, |&(n, i)| self.adj[n][i].to as usize);
                continue;
            }
            let mut advanced = false;
            while next[u] < self.adj[u].len() {
                let a = &self.adj[u][next[u]];
                let w = a.to as usize;
                if a.cap > 0 && level[w] == level[u].wrapping_add(1) {
                    path.push((u, next[u]));
                    u = w;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if advanced {
                continue;
            }
            // Dead end: retire the node and retreat.
            level[u] = u32::MAX;
            match path.pop() {
                Some((n, i)) => {
                    next[n] = i + 1;
                    u = n;
                }
                None => return total,
            }
        }
    }

    /// Run max-flow to completion and extract both extremal minimum cuts.
    pub fn solve(mut self) -> MinCut {
        let mut flow = 0i128;
        while let Some(mut level) = self.levels() {
            flow += self.blocking_flow(&mut level);
        }
        let n = self.adj.len();

        let mut from_source = vec![false; n];
        let mut queue = VecDeque::from([self.source]);
        from_source[self.source] = true;
        while let Some(u) = queue.pop_front() {
            for a in &self.adj[u] {
                let w = a.to as usize;
                if a.cap > 0 && !from_source[w] {
                    from_source[w] = true;
                    queue.push_back(w);
                }
            }
        }

        let mut to_sink = vec![false; n];
        queue.push_back(self.sink);
        to_sink[self.sink] = true;
        while let Some(u) = queue.pop_front() {
            for a in &self.adj[u] {
                let w = a.to as usize;
                // w -> u has residual capacity iff the partner arc does.
                if !to_sink[w] && self.adj[w][a.rev as usize].cap > 0 {
                    to_sink[w] = true;
                    queue.push_back(w);
                }
            }
        }

        MinCut {
            flow,
            min_source_side: from_source,
            max_source_side: to_sink.into_iter().map(|t| !t).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force minimum cut over all source sides (tiny graphs only).
    fn brute_min_cut(n: usize, s: usize, t: usize, arcs: &[(usize, usize, i64)]) -> i128 {
        let mut best = i128::MAX;
        for mask in 0u32..(1 << n) {
            if mask & (1 << s) == 0 || mask & (1 << t) != 0 {
                continue;
            }
            let cut: i128 = arcs
                .iter()
                .filter(|(a, b, _)| mask & (1 << a) != 0 && mask & (1 << b) == 0)
                .map(|&(_, _, c)| i128::from(c))
                .sum();
            best = best.min(cut);
        }
        best
    }

    fn network(n: usize, s: usize, t: usize, arcs: &[(usize, usize, i64)]) -> FlowNetwork {
        let mut g = FlowNetwork::new(n, s, t);
        for &(a, b, c) in arcs {
            g.add_arc(a, b, c);
        }
        g
    }

    #[test]
    fn textbook_instance() {
        let arcs = [
            (0, 1, 10),
            (0, 2, 10),
            (1, 3, 4),
            (1, 4, 8),
            (2, 4, 9),
            (3, 5, 10),
            (4, 3, 6),
            (4, 5, 10),
        ];
        assert_eq!(network(6, 0, 5, &arcs).solve().flow, 19);
    }

    #[test]
    fn disconnected_sink_has_zero_flow() {
        let cut = network(4, 0, 3, &[(0, 1, 10), (2, 3, 5)]).solve();
        assert_eq!(cut.flow, 0);
        assert!(cut.min_source_side[1]);
        assert!(!cut.min_source_side[2]);
        // Node 2 reaches the sink; node 1 does not.
        assert!(cut.max_source_side[1]);
        assert!(!cut.max_source_side[2]);
    }

    #[test]
    fn tied_cuts_are_separated_by_the_extremal_sides() {
        // s -> a -> t with equal capacities: both {s} and {s, a} are minimum cuts.
        let cut = network(3, 0, 2, &[(0, 1, 5), (1, 2, 5)]).solve();
        assert_eq!(cut.flow, 5);
        assert_eq!(cut.min_source_side, vec![true, false, false]);
        assert_eq!(cut.max_source_side, vec![true, true, false]);
    }

    #[test]
    fn long_path_does_not_recurse() {
        let n = 200_000;
        let mut g = FlowNetwork::new(n, 0, n - 1);
        for i in 0..n - 1 {
            g.add_arc(i, i + 1, 3 + (i % 5) as i64);
        }
        assert_eq!(g.solve().flow, 3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn flow_equals_brute_force_cut(
                arcs in prop::collection::vec((0usize..7, 0usize..7, 0i64..20), 0..25)
            ) {
                let arcs: Vec<_> = arcs.into_iter().filter(|(a, b, _)| a != b).collect();
                let cut = network(7, 0, 6, &arcs).solve();
                prop_assert_eq!(cut.flow, brute_min_cut(7, 0, 6, &arcs));
                // Both extremal sides are minimum cuts and nest.
                for side in [&cut.min_source_side, &cut.max_source_side] {
                    prop_assert!(side[0] && !side[6]);
                    let value: i128 = arcs
                        .iter()
                        .filter(|(a, b, _)| side[*a] && !side[*b])
                        .map(|&(_, _, c)| i128::from(c))
                        .sum();
                    prop_assert_eq!(value, cut.flow);
                }
                for i in 0..7 {
                    prop_assert!(!cut.min_source_side[i] || cut.max_source_side[i]);
                }
            }
        }
    }
}
