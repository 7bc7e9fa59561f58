//! Flow kernels shared by the transport solvers.

use std::collections::VecDeque;

/// Dinic max-flow on integer capacities.
#[derive(Debug, Clone)]
pub(crate) struct Dinic {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    pub fn new(n: usize) -> Self {
        Self { head: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new(), level: vec![0; n], iter: vec![0; n] }
    }

    /// Adds `u → v` and returns the edge id (its reverse is `id ^ 1`).
    pub fn add_edge(&mut self, u: usize, v: usize, cap: i64) -> usize {
        let id = self.to.len();
        self.to.push(v);
        self.cap.push(cap);
        self.head[u].push(id);
        self.to.push(u);
        self.cap.push(0);
        self.head[v].push(id + 1);
        id
    }

    /// Flow currently carried by forward edge `id`.
    pub fn flow(&self, id: usize) -> i64 {
        self.cap[id ^ 1]
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: i64) -> i64 {
        if u == t {
            return pushed;
        }
        while self.iter[u] < self.head[u].len() {
            let e = self.head[u][self.iter[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                let d = self.dfs(v, t, pushed.min(self.cap[e]));
                if d > 0 {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            self.iter[u] += 1;
        }
        0
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
        total
    }

    /// Nodes reachable from `s` in the residual graph.
    pub fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    q.push_back(v);
                }
            }
        }
        seen
    }
}

/// Exact min-cost transportation by successive shortest paths on the dense
/// bipartite residual graph, Dijkstra with Johnson potentials.
///
/// `cost` is row-major `m × k`; `f64::INFINITY` marks a forbidden pair.
/// Supplies and demands must have equal totals. Returns `None` when the
/// allowed edges cannot carry the full supply. Ties resolve to the lowest
/// node index, so the returned plan is deterministic.
pub(crate) fn transport_ssp(supply: &[i64], demand: &[i64], cost: &[f64]) -> Option<Vec<(usize, usize, i64)>> {
    let (m, k) = (supply.len(), demand.len());
    debug_assert_eq!(cost.len(), m * k);
    let sink = m + k;
    let nv = m + k + 1;
    let mut sup: Vec<i64> = supply.to_vec();
    let mut dem: Vec<i64> = demand.to_vec();
    let mut flow = vec![0i64; m * k];
    let mut col_support: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut pot = vec![0.0f64; nv];
    let mut dist = vec![f64::INFINITY; nv];
    let mut prev = vec![usize::MAX; nv];
    let mut done = vec![false; nv];
    let mut remaining: i64 = sup.iter().sum();

    while remaining > 0 {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        for i in 0..m {
            if sup[i] > 0 && pot[i].is_finite() {
                dist[i] = (-pot[i]).max(0.0);
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nv {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < m {
                let row = &cost[u * k..(u + 1) * k];
                for j in 0..k {
                    let c = row[j];
                    let v = m + j;
                    if c.is_finite() && !done[v] && pot[v].is_finite() {
                        let nd = best + (c + pot[u] - pot[v]).max(0.0);
                        if nd < dist[v] {
                            dist[v] = nd;
                            prev[v] = u;
                        }
                    }
                }
            } else if u < sink {
                let j = u - m;
                for &i in &col_support[j] {
                    if !done[i] && pot[i].is_finite() {
                        let nd = best + (-cost[i * k + j] + pot[u] - pot[i]).max(0.0);
                        if nd < dist[i] {
                            dist[i] = nd;
                            prev[i] = u;
                        }
                    }
                }
                if dem[j] > 0 && !done[sink] {
                    let nd = best + (pot[u] - pot[sink]).max(0.0);
                    if nd < dist[sink] {
                        dist[sink] = nd;
                        prev[sink] = u;
                    }
                }
            }
        }
        if !dist[sink].is_finite() {
            return None;
        }
        for v in 0..nv {
            pot[v] = if dist[v].is_finite() && pot[v].is_finite() { pot[v] + dist[v] } else { f64::INFINITY };
        }
        // bottleneck along sink ← j ← i ← j' ← ... ← i0
        let mut push = dem[prev[sink] - m];
        let mut v = prev[sink];
        loop {
            let u = prev[v];
            if u == usize::MAX {
                push = push.min(sup[v]);
                break;
            }
            if v < m {
                // backward edge j=u → i=v
                push = push.min(flow[v * k + (u - m)]);
            }
            v = u;
        }
        debug_assert!(push > 0);
        let mut v = prev[sink];
        dem[v - m] -= push;
        loop {
            let u = prev[v];
            if u == usize::MAX {
                sup[v] -= push;
                break;
            }
            if v >= m {
                let (i, j) = (u, v - m);
                if flow[i * k + j] == 0 {
                    col_support[j].push(i);
                }
                flow[i * k + j] += push;
            } else {
                let (i, j) = (v, u - m);
                flow[i * k + j] -= push;
                if flow[i * k + j] == 0 {
                    col_support[j].retain(|&x| x != i);
                }
            }
            v = u;
        }
        remaining -= push;
    }
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..k {
            let f = flow[i * k + j];
            if f > 0 {
                out.push((i, j, f));
            }
        }
    }
    Some(out)
}
