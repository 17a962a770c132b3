//! Exact solver for the uncapacitated transportation problem.
//!
//! Primal network simplex on the complete bipartite graph between sources and
//! sinks, with an artificial root joined to every node. Arcs are implicit: a
//! real arc is identified by `i * n + j`, so only the spanning tree is stored.
//! Supplies, demands and costs are integers, which keeps every pivot exact.
//! Leaving arcs are chosen by the strongly feasible tree rule, so degenerate
//! pivots cannot cycle.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Optimal plan: total cost and the positive flows `(source, sink, amount)`.
#[derive(Debug, Clone)]
pub(crate) struct Plan {
    pub cost: i128,
    pub flows: Vec<(usize, usize, i64)>,
}

/// Solves `min Σ c(i,j) x_ij` subject to row sums `supply` and column sums
/// `demand`. Every supply and demand must be positive and the two totals equal.
pub(crate) fn solve<F>(supply: &[i64], demand: &[i64], cost: F) -> Result<Plan>
where
    F: Fn(usize, usize) -> i64,
{
    let m = supply.len();
    let n = demand.len();
    if m == 0 || n == 0 {
        return Err(Error::param("transport problem with an empty side"));
    }
    if supply.iter().chain(demand).any(|&x| x <= 0) {
        return Err(Error::param(
            "transport supplies and demands must be positive",
        ));
    }
    let total_supply: i128 = supply.iter().map(|&x| x as i128).sum();
    let total_demand: i128 = demand.iter().map(|&x| x as i128).sum();
    if total_supply != total_demand {
        return Err(Error::param(format!(
            "unbalanced transport problem: {total_supply} != {total_demand}"
        )));
    }

    let mut max_cost = 0i64;
    for i in 0..m {
        for j in 0..n {
            let c = cost(i, j);
            if c < 0 {
                return Err(Error::param("negative transport cost"));
            }
            max_cost = max_cost.max(c);
        }
    }

    let mut simplex = Simplex::new(supply, demand, cost, max_cost);
    simplex.run()?;
    simplex.into_plan()
}

struct Simplex<F> {
    m: usize,
    n: usize,
    root: usize,
    cost: F,
    artificial_cost: i64,
    parent: Vec<usize>,
    // Arc joining a node to its parent, whether it points up (node -> parent),
    // and the flow it carries.
    pred: Vec<usize>,
    up: Vec<bool>,
    flow: Vec<i64>,
    pi: Vec<i64>,
    depth: Vec<usize>,
    first_child: Vec<usize>,
    next_sib: Vec<usize>,
    prev_sib: Vec<usize>,
}

impl<F> Simplex<F>
where
    F: Fn(usize, usize) -> i64,
{
    fn new(supply: &[i64], demand: &[i64], cost: F, max_cost: i64) -> Self {
        let m = supply.len();
        let n = demand.len();
        let root = m + n;
        let nodes = m + n + 1;
        let artificial_cost = (max_cost + 1) * nodes as i64;
        let real = m * n;

        let mut s = Simplex {
            m,
            n,
            root,
            cost,
            artificial_cost,
            parent: vec![NONE; nodes],
            pred: vec![NONE; nodes],
            up: vec![false; nodes],
            flow: vec![0; nodes],
            pi: vec![0; nodes],
            depth: vec![0; nodes],
            first_child: vec![NONE; nodes],
            next_sib: vec![NONE; nodes],
            prev_sib: vec![NONE; nodes],
        };
        for u in 0..m + n {
            s.pred[u] = real + u;
            s.depth[u] = 1;
            if u < m {
                s.up[u] = true;
                s.flow[u] = supply[u];
                s.pi[u] = -artificial_cost;
            } else {
                s.up[u] = false;
                s.flow[u] = demand[u - m];
                s.pi[u] = artificial_cost;
            }
            s.attach(u, root);
        }
        s
    }

    fn real_arcs(&self) -> usize {
        self.m * self.n
    }

    fn ends(&self, arc: usize) -> (usize, usize) {
        let real = self.real_arcs();
        if arc < real {
            (arc / self.n, self.m + arc % self.n)
        } else {
            let u = arc - real;
            if u < self.m {
                (u, self.root)
            } else {
                (self.root, u)
            }
        }
    }

    fn arc_cost(&self, arc: usize) -> i64 {
        if arc < self.real_arcs() {
            (self.cost)(arc / self.n, arc % self.n)
        } else {
            self.artificial_cost
        }
    }

    fn reduced_cost(&self, arc: usize) -> i64 {
        let (s, t) = self.ends(arc);
        self.arc_cost(arc) + self.pi[s] - self.pi[t]
    }

    fn detach(&mut self, u: usize) {
        let p = self.parent[u];
        let (prev, next) = (self.prev_sib[u], self.next_sib[u]);
        if prev != NONE {
            self.next_sib[prev] = next;
        } else {
            self.first_child[p] = next;
        }
        if next != NONE {
            self.prev_sib[next] = prev;
        }
        self.prev_sib[u] = NONE;
        self.next_sib[u] = NONE;
        self.parent[u] = NONE;
    }

    fn attach(&mut self, u: usize, p: usize) {
        self.parent[u] = p;
        let head = self.first_child[p];
        self.next_sib[u] = head;
        self.prev_sib[u] = NONE;
        if head != NONE {
            self.prev_sib[head] = u;
        }
        self.first_child[p] = u;
    }

    fn join(&self, mut a: usize, mut b: usize) -> usize {
        while a != b {
            if self.depth[a] > self.depth[b] {
                a = self.parent[a];
            } else if self.depth[b] > self.depth[a] {
                b = self.parent[b];
            } else {
                a = self.parent[a];
                b = self.parent[b];
            }
        }
        a
    }

    fn run(&mut self) -> Result<()> {
        let total = self.real_arcs() + self.m + self.n;
        let block = ((total as f64).sqrt() as usize).max(16).min(total);
        let mut next = 0usize;
        loop {
            let mut best = 0i64;
            let mut entering = NONE;
            let mut in_block = 0usize;
            for _ in 0..total {
                let arc = next;
                next += 1;
                if next == total {
                    next = 0;
                }
                let rc = self.reduced_cost(arc);
                if rc < best {
                    best = rc;
                    entering = arc;
                }
                in_block += 1;
                if in_block == block {
                    if entering != NONE {
                        break;
                    }
                    in_block = 0;
                }
            }
            if entering == NONE {
                return Ok(());
            }
            self.pivot(entering)?;
        }
    }

    fn pivot(&mut self, entering: usize) -> Result<()> {
        // Flow is pushed first -> second along the entering arc, then up to
        // the join node, then back down to first.
        let (first, second) = self.ends(entering);
        let join = self.join(first, second);

        let mut delta = i64::MAX;
        let mut u_out = NONE;
        let mut from_first = true;
        let mut u = first;
        while u != join {
            if self.up[u] && self.flow[u] < delta {
                delta = self.flow[u];
                u_out = u;
                from_first = true;
            }
            u = self.parent[u];
        }
        u = second;
        while u != join {
            if !self.up[u] && self.flow[u] <= delta {
                delta = self.flow[u];
                u_out = u;
                from_first = false;
            }
            u = self.parent[u];
        }
        if u_out == NONE {
            return Err(Error::Invariant(
                "transport simplex found an unbounded cycle".into(),
            ));
        }

        if delta > 0 {
            u = first;
            while u != join {
                if self.up[u] {
                    self.flow[u] -= delta;
                } else {
                    self.flow[u] += delta;
                }
                u = self.parent[u];
            }
            u = second;
            while u != join {
                if self.up[u] {
                    self.flow[u] += delta;
                } else {
                    self.flow[u] -= delta;
                }
                u = self.parent[u];
            }
        }

        let (u_in, v_in) = if from_first {
            (first, second)
        } else {
            (second, first)
        };

        // Re-hang the subtree cut off at u_out so that it is rooted at u_in.
        let mut path = vec![u_in];
        let mut w = u_in;
        while w != u_out {
            w = self.parent[w];
            path.push(w);
        }
        let saved: Vec<(usize, bool, i64)> = path
            .iter()
            .map(|&w| (self.pred[w], self.up[w], self.flow[w]))
            .collect();
        for &w in &path {
            self.detach(w);
        }
        for t in (1..path.len()).rev() {
            let (arc, up, flow) = saved[t - 1];
            let w = path[t];
            self.pred[w] = arc;
            self.up[w] = !up;
            self.flow[w] = flow;
            self.attach(w, path[t - 1]);
        }
        self.pred[u_in] = entering;
        self.up[u_in] = first == u_in;
        self.flow[u_in] = delta;
        self.attach(u_in, v_in);

        let c = self.arc_cost(entering);
        let target = if first == u_in {
            self.pi[v_in] - c
        } else {
            self.pi[v_in] + c
        };
        let shift = target - self.pi[u_in];
        self.depth[u_in] = self.depth[v_in] + 1;
        let mut stack = vec![u_in];
        while let Some(x) = stack.pop() {
            self.pi[x] += shift;
            let mut ch = self.first_child[x];
            while ch != NONE {
                self.depth[ch] = self.depth[x] + 1;
                stack.push(ch);
                ch = self.next_sib[ch];
            }
        }
        Ok(())
    }

    fn into_plan(self) -> Result<Plan> {
        let real = self.real_arcs();
        let mut cost = 0i128;
        let mut flows = Vec::new();
        for u in 0..self.m + self.n {
            let arc = self.pred[u];
            let f = self.flow[u];
            if arc >= real {
                if f != 0 {
                    return Err(Error::Invariant(format!(
                        "artificial arc at node {u} carries flow {f} at optimum"
                    )));
                }
                continue;
            }
            if f < 0 {
                return Err(Error::Invariant(format!("negative flow {f} on tree arc")));
            }
            if f > 0 {
                let (i, j) = (arc / self.n, arc % self.n);
                cost += f as i128 * (self.cost)(i, j) as i128;
                flows.push((i, j, f));
            }
        }
        flows.sort_unstable();
        Ok(Plan { cost, flows })
    }
}
