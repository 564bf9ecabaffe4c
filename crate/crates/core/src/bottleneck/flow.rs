//! Dinic max-flow on integer capacities.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
struct Edge {
    to: usize,
    cap: i64,
}

#[derive(Clone, Debug)]
pub(crate) struct FlowNetwork {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    next: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
            level: vec![0; nodes],
            next: vec![0; nodes],
        }
    }

    /// Adds `from -> to` and returns its id; the reverse edge is `id ^ 1`.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap });
        self.adj[from].push(id);
        self.edges.push(Edge { to: from, cap: 0 });
        self.adj[to].push(id + 1);
        id
    }

    /// Flow pushed through edge `id` so far.
    pub fn flow(&self, id: usize) -> i64 {
        self.edges[id ^ 1].cap
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> i64 {
        let mut total = 0;
        while self.bfs(source, sink) {
            self.next.iter_mut().for_each(|n| *n = 0);
            loop {
                let pushed = self.dfs(source, sink, i64::MAX);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
        total
    }

    fn bfs(&mut self, source: usize, sink: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for &id in &self.adj[v] {
                let e = &self.edges[id];
                if e.cap > 0 && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[v] + 1;
                    queue.push_back(e.to);
                }
            }
        }
        self.level[sink] >= 0
    }

    fn dfs(&mut self, v: usize, sink: usize, limit: i64) -> i64 {
        if v == sink {
            return limit;
        }
        while self.next[v] < self.adj[v].len() {
            let id = self.adj[v][self.next[v]];
            let (to, cap) = (self.edges[id].to, self.edges[id].cap);
            if cap > 0 && self.level[to] == self.level[v] + 1 {
                let pushed = self.dfs(to, sink, limit.min(cap));
                if pushed > 0 {
                    self.edges[id].cap -= pushed;
                    self.edges[id ^ 1].cap += pushed;
                    return pushed;
                }
            }
            self.next[v] += 1;
        }
        0
    }
}
