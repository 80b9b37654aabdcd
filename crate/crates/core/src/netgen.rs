//! Growth of the preferential attachment graph, edge percolation and
//! largest-component measurements.
//!
//! Vertices are labelled `1..=n`. When vertex `t + 1` arrives it links to
//! each older vertex `m` independently with probability `f(d_m) / t`, where
//! `d_m` is the indegree of `m` before the step.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rules::AttachmentRule;
use crate::seed::SeedStream;
use crate::stats::{Moments, Z95};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Graph {
    pub n: u32,
    /// `(u, m)` with `u > m`, in order of creation.
    pub edges: Vec<(u32, u32)>,
    /// `indegree[m - 1]` is the indegree of vertex `m`.
    pub indegree: Vec<u32>,
}

impl Graph {
    pub fn indegree_of(&self, m: u32) -> u32 {
        self.indegree[m as usize - 1]
    }

    /// Edge list: a header `n=<n>` followed by one `u m` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("n={}\n", self.n);
        for (u, m) in &self.edges {
            s.push_str(&format!("{u} {m}\n"));
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Graph> {
        let mut lines = text.lines();
        let n: u32 = lines
            .next()
            .and_then(|h| h.strip_prefix("n="))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Domain("edge list must start with n=<n>".into()))?;
        let mut g = Graph { n, edges: Vec::new(), indegree: vec![0; n as usize] };
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut it = line.split_whitespace().map(str::parse::<u32>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(m)), None) if u > m && m >= 1 && u <= n => {
                    g.edges.push((u, m));
                    g.indegree[m as usize - 1] += 1;
                }
                _ => return Err(Error::Domain(format!("bad edge line {line:?}"))),
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenMode {
    Naive,
    #[default]
    Fast,
}

/// Grows `G_n`.
pub fn generate<R: Rng + ?Sized>(
    rule: &AttachmentRule,
    n: u32,
    rng: &mut R,
    mode: GenMode,
) -> Result<Graph> {
    rule.check()?;
    if n == 0 {
        return Err(Error::Domain("graph needs at least one vertex".into()));
    }
    let mut g = Grower::new(rule, n);
    for t in 1..n {
        match mode {
            GenMode::Naive => g.naive_step(t, rng)?,
            GenMode::Fast => g.fast_step(t, rng)?,
        }
    }
    Ok(g.graph)
}

struct Grower<'a> {
    rule: &'a AttachmentRule,
    graph: Graph,
    /// Target of every edge so far: a uniform pick from it is a vertex drawn
    /// with probability proportional to its indegree.
    targets: Vec<u32>,
    max_degree: u32,
    /// Step at which a vertex was last linked, for de-duplication.
    stamp: Vec<u32>,
    fresh: Vec<u32>,
    f0: f64,
    gamma_plus: f64,
}

impl<'a> Grower<'a> {
    fn new(rule: &'a AttachmentRule, n: u32) -> Self {
        Grower {
            rule,
            graph: Graph { n, edges: Vec::new(), indegree: vec![0; n as usize] },
            targets: Vec::new(),
            max_degree: 0,
            stamp: vec![0; n as usize],
            fresh: Vec::new(),
            f0: rule.eval(0),
            gamma_plus: rule.gamma_plus(),
        }
    }

    fn prob(&self, m: u32, t: u32) -> Result<f64> {
        let p = self.rule.eval(self.graph.indegree[m as usize - 1] as u64) / t as f64;
        if p > 1.0 {
            return Err(Error::ProbabilityOverflow { size: t as usize, probability: p });
        }
        Ok(p)
    }

    fn commit(&mut self, t: u32) {
        let u = t + 1;
        self.fresh.sort_unstable_by(|a, b| b.cmp(a));
        for &m in &self.fresh {
            debug_assert!(m < u);
            self.graph.edges.push((u, m));
            let d = &mut self.graph.indegree[m as usize - 1];
            *d += 1;
            self.max_degree = self.max_degree.max(*d);
            self.targets.push(m);
        }
        self.fresh.clear();
    }

    /// Vertex `t + 1` arrives; `t` Bernoulli trials.
    fn naive_step<R: Rng + ?Sized>(&mut self, t: u32, rng: &mut R) -> Result<()> {
        for m in 1..=t {
            if rng.random::<f64>() < self.prob(m, t)? {
                self.fresh.push(m);
            }
        }
        self.commit(t);
        Ok(())
    }

    /// Same law as `naive_step`. Vertex `m` is linked iff a Poisson variable
    /// of mean `-ln(1 - f(d_m)/t)` is positive. These variables are realised
    /// by thinning a Poisson process with intensity `kappa * w_m`, where
    /// `w_m = f(0) + gamma_plus d_m >= f(d_m)` and
    /// `kappa = 1 / (t (1 - x_max))` with `x_max = f(d_max)/t`; the bound
    /// `-ln(1-x) <= x/(1-x)` makes `kappa w_m` dominate the target mass.
    fn fast_step<R: Rng + ?Sized>(&mut self, t: u32, rng: &mut R) -> Result<()> {
        let tf = t as f64;
        let x_max = self.rule.eval(self.max_degree as u64) / tf;
        if x_max > 1.0 {
            return Err(Error::ProbabilityOverflow { size: t as usize, probability: x_max });
        }
        if x_max > 0.5 {
            return self.naive_step(t, rng);
        }
        let kappa = 1.0 / (tf * (1.0 - x_max));
        let uniform_mass = tf * self.f0;
        let urn_mass = self.gamma_plus * self.targets.len() as f64;
        let total = uniform_mass + urn_mass;
        let proposals = poisson(rng, kappa * total);
        for _ in 0..proposals {
            let m = if rng.random::<f64>() * total < uniform_mass {
                rng.random_range(1..=t)
            } else {
                self.targets[rng.random_range(0..self.targets.len())]
            };
            if self.stamp[m as usize - 1] == t {
                continue;
            }
            let d = self.graph.indegree[m as usize - 1] as f64;
            let w = self.f0 + self.gamma_plus * d;
            let target = -(-self.prob(m, t)?).ln_1p();
            if rng.random::<f64>() * kappa * w < target {
                self.stamp[m as usize - 1] = t;
                self.fresh.push(m);
            }
        }
        self.commit(t);
        Ok(())
    }
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Retained edges of a percolated graph, one bit per edge of the base graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercolationSample {
    pub p: f64,
    pub retained: Vec<u64>,
    pub edge_count: usize,
}

impl PercolationSample {
    pub fn is_retained(&self, i: usize) -> bool {
        self.retained[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn retained_count(&self) -> usize {
        self.retained.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Keeps edge `i` iff `uniforms[i] < p`. Sharing `uniforms` across
    /// several `p` couples the samples monotonically.
    pub fn from_uniforms(uniforms: &[f64], p: f64) -> Self {
        let mut retained = vec![0u64; uniforms.len().div_ceil(64)];
        for (i, &u) in uniforms.iter().enumerate() {
            if u < p {
                retained[i / 64] |= 1 << (i % 64);
            }
        }
        PercolationSample { p, retained, edge_count: uniforms.len() }
    }
}

pub fn edge_uniforms<R: Rng + ?Sized>(graph: &Graph, rng: &mut R) -> Vec<f64> {
    (0..graph.edges.len()).map(|_| rng.random::<f64>()).collect()
}

/// Retains each edge independently with probability `p`.
pub fn percolate<R: Rng + ?Sized>(graph: &Graph, p: f64, rng: &mut R) -> Result<PercolationSample> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("retention probability {p} outside [0, 1]")));
    }
    Ok(PercolationSample::from_uniforms(&edge_uniforms(graph, rng), p))
}

/// Disjoint sets with union by size and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    largest: u32,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n], largest: (n > 0) as u32 }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
        self.largest = self.largest.max(self.size[a as usize]);
    }

    /// Size of the largest set so far.
    pub fn largest(&self) -> u32 {
        self.largest
    }

    pub fn component_sizes(&mut self) -> Vec<u32> {
        let n = self.parent.len() as u32;
        let roots: Vec<u32> = (0..n).filter(|&x| self.find(x) == x).collect();
        roots.into_iter().map(|x| self.size[x as usize]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentStats {
    pub largest_size: u32,
    pub fraction: f64,
    pub second_largest: u32,
    pub component_count: u32,
}

fn stats_of(n: u32, uf: &mut UnionFind) -> ComponentStats {
    let mut sizes = uf.component_sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let largest_size = sizes.first().copied().unwrap_or(0);
    ComponentStats {
        largest_size,
        fraction: largest_size as f64 / n as f64,
        second_largest: sizes.get(1).copied().unwrap_or(0),
        component_count: sizes.len() as u32,
    }
}

/// Components of the undirected graph.
pub fn largest_component(graph: &Graph) -> ComponentStats {
    let mut uf = UnionFind::new(graph.n as usize);
    for &(u, m) in &graph.edges {
        uf.union(u - 1, m - 1);
    }
    stats_of(graph.n, &mut uf)
}

/// Components of the undirected graph restricted to retained edges.
pub fn largest_component_percolated(graph: &Graph, sample: &PercolationSample) -> ComponentStats {
    let mut uf = UnionFind::new(graph.n as usize);
    for (i, &(u, m)) in graph.edges.iter().enumerate() {
        if sample.is_retained(i) {
            uf.union(u - 1, m - 1);
        }
    }
    stats_of(graph.n, &mut uf)
}

/// Largest-component fraction at every `p` of `p_grid` for one graph, using
/// one set of edge uniforms: edges are added in increasing uniform order and
/// the largest size is read off as `p` sweeps upwards.
pub fn coupled_fractions(graph: &Graph, uniforms: &[f64], p_grid: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..graph.edges.len()).collect();
    order.sort_unstable_by(|&a, &b| uniforms[a].total_cmp(&uniforms[b]));
    let mut ps: Vec<(usize, f64)> = p_grid.iter().copied().enumerate().collect();
    ps.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut uf = UnionFind::new(graph.n as usize);
    let mut out = vec![0.0; p_grid.len()];
    let mut next = 0;
    for (slot, p) in ps {
        while next < order.len() && uniforms[order[next]] < p {
            let (u, m) = graph.edges[order[next]];
            uf.union(u - 1, m - 1);
            next += 1;
        }
        out[slot] = uf.largest() as f64 / graph.n as f64;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaPoint {
    pub p: f64,
    pub n: u32,
    pub replicas: usize,
    pub mean_fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Mean largest-component fraction per `p` over independent replicas, each
/// a fresh graph with its own edge uniforms shared across the grid. The
/// interval is `mean +- 1.96 sd / sqrt(replicas)`.
pub fn theta_curve(
    rule: &AttachmentRule,
    n: u32,
    p_grid: &[f64],
    replicas: usize,
    seeds: &SeedStream,
    exec: Execution,
) -> Result<Vec<ThetaPoint>> {
    rule.check()?;
    if p_grid.is_empty() {
        return Err(Error::Domain("empty p grid".into()));
    }
    if replicas < 2 {
        return Err(Error::Domain("theta curve needs at least two replicas".into()));
    }
    if let Some(p) = p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("retention probability {p} outside [0, 1]")));
    }
    let runs = exec.map(replicas, |i| -> Result<Vec<f64>> {
        let mut rng = seeds.rng(i as u64);
        let g = generate(rule, n, &mut rng, GenMode::Fast)?;
        let u = edge_uniforms(&g, &mut rng);
        Ok(coupled_fractions(&g, &u, p_grid))
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(p_grid
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let m: Moments = runs.iter().map(|r| r[j]).collect();
            let ci = m.normal_interval(Z95);
            ThetaPoint {
                p,
                n,
                replicas,
                mean_fraction: m.mean,
                ci_low: ci.low.max(0.0),
                ci_high: ci.high.min(1.0),
            }
        })
        .collect())
}

/// Least-squares slope of `log P(D >= d)` against `log d` over the top
/// decade of observed positive indegrees.
pub fn indegree_tail_slope(graph: &Graph) -> Option<f64> {
    let mut degs: Vec<u32> = graph.indegree.iter().copied().filter(|&d| d > 0).collect();
    degs.sort_unstable();
    let max = *degs.last()? as f64;
    let n = graph.n as f64;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut i = 0;
    while i < degs.len() {
        let d = degs[i];
        if d as f64 >= max / 10.0 {
            // vertices with degree >= d, counting zero-degree ones in n
            let at_least = (degs.len() - i) as f64;
            xs.push((d as f64).ln());
            ys.push((at_least / n).ln());
        }
        while i < degs.len() && degs[i] == d {
            i += 1;
        }
    }
    crate::stats::least_squares(&xs, &ys).map(|f| f.slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedStream;
    use std::collections::{HashMap, VecDeque};

    fn bfs_largest(graph: &Graph) -> (u32, u32) {
        let n = graph.n as usize;
        let mut adj = vec![Vec::new(); n];
        for &(u, m) in &graph.edges {
            adj[u as usize - 1].push(m as usize - 1);
            adj[m as usize - 1].push(u as usize - 1);
        }
        let mut seen = vec![false; n];
        let (mut best, mut count) = (0, 0);
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut q = VecDeque::from([s]);
            seen[s] = true;
            let mut size = 0;
            while let Some(x) = q.pop_front() {
                size += 1;
                for &y in &adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        q.push_back(y);
                    }
                }
            }
            best = best.max(size);
        }
        (best, count)
    }

    #[test]
    fn single_vertex() {
        let mut rng = SeedStream::new(1, "g").rng(0);
        let g = generate(&AttachmentRule::linear(0.0, 0.5), 1, &mut rng, GenMode::Fast).unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(largest_component(&g).largest_size, 1);
    }

    #[test]
    fn two_vertices_edge_probability() {
        let rule = AttachmentRule::linear(0.0, 0.5);
        let s = SeedStream::new(2, "g2");
        for mode in [GenMode::Naive, GenMode::Fast] {
            let hits: usize = (0..100_000)
                .filter(|&i| !generate(&rule, 2, &mut s.rng(i), mode).unwrap().edges.is_empty())
                .count();
            let f = hits as f64 / 1e5;
            assert!((f - 0.5).abs() < 4.0 * (0.25f64 / 1e5).sqrt());
        }
    }

    #[test]
    fn components_match_bfs() {
        let rule = AttachmentRule::linear(0.2, 0.6);
        let s = SeedStream::new(3, "bfs");
        for i in 0..50 {
            let g = generate(&rule, 20, &mut s.rng(i), GenMode::Fast).unwrap();
            let st = largest_component(&g);
            assert_eq!((st.largest_size, st.component_count), bfs_largest(&g));
            assert!(st.largest_size >= st.second_largest);
        }
    }

    #[test]
    fn path_and_empty() {
        let path = Graph {
            n: 5,
            edges: (2..=5).map(|u| (u, u - 1)).collect(),
            indegree: vec![1, 1, 1, 1, 0],
        };
        assert_eq!(largest_component(&path).largest_size, 5);
        let empty = Graph { n: 7, edges: vec![], indegree: vec![0; 7] };
        let st = largest_component(&empty);
        assert_eq!((st.largest_size, st.component_count), (1, 7));
    }

    #[test]
    fn graph_invariants() {
        let rule = AttachmentRule::table(vec![0.6, 1.2, 1.6], 0.3);
        let mut rng = SeedStream::new(4, "inv").rng(0);
        let g = generate(&rule, 5000, &mut rng, GenMode::Fast).unwrap();
        let mut seen = std::collections::HashSet::new();
        let mut indeg = vec![0u32; 5000];
        for &(u, m) in &g.edges {
            assert!(u > m && m >= 1);
            assert!(seen.insert((u, m)));
            indeg[m as usize - 1] += 1;
        }
        assert_eq!(indeg, g.indegree);
        let back = Graph::from_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn percolation_extremes_and_coupling() {
        let rule = AttachmentRule::linear(0.3, 0.7);
        let mut rng = SeedStream::new(5, "perc").rng(0);
        let g = generate(&rule, 2000, &mut rng, GenMode::Fast).unwrap();
        let u = edge_uniforms(&g, &mut rng);
        assert_eq!(PercolationSample::from_uniforms(&u, 1.0).retained_count(), g.edges.len());
        assert_eq!(PercolationSample::from_uniforms(&u, 0.0).retained_count(), 0);
        let grid = [0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
        let fr = coupled_fractions(&g, &u, &grid);
        assert!(fr.windows(2).all(|w| w[0] <= w[1]));
        for (p, f) in grid.iter().zip(&fr) {
            let s = PercolationSample::from_uniforms(&u, *p);
            assert_eq!(*f, largest_component_percolated(&g, &s).fraction);
        }
        let a = PercolationSample::from_uniforms(&u, 0.4);
        let b = PercolationSample::from_uniforms(&u, 0.6);
        assert!(a.retained.iter().zip(&b.retained).all(|(x, y)| x & !y == 0));
    }

    #[test]
    fn binomial_retention() {
        let edges: Vec<(u32, u32)> = (0..1_000_000u32).map(|i| (i + 2, 1)).collect();
        let g = Graph { n: 1_000_001, edges, indegree: vec![] };
        let mut rng = SeedStream::new(6, "bin").rng(0);
        let s = percolate(&g, 0.5, &mut rng).unwrap();
        let k = s.retained_count() as f64;
        assert!((k - 5e5).abs() < 4.0 * 500.0);
    }

    #[test]
    fn theta_shrinks_with_replicas() {
        let rule = AttachmentRule::linear(0.0, 0.5);
        let s = SeedStream::new(7, "theta");
        let w = |r| {
            let pt = theta_curve(&rule, 500, &[1.0], r, &s, Execution::Parallel).unwrap()[0];
            pt.ci_high - pt.ci_low
        };
        let (w1, w4) = (w(64), w(256));
        assert!(w4 < 0.75 * w1, "{w1} {w4}");
        assert!(theta_curve(&rule, 10, &[], 4, &s, Execution::Sequential).is_err());
    }

    #[test]
    fn parallel_matches_sequential() {
        let rule = AttachmentRule::linear(0.2, 0.4);
        let s = SeedStream::new(8, "theta");
        let a = theta_curve(&rule, 300, &[0.5, 1.0], 8, &s, Execution::Sequential).unwrap();
        let b = theta_curve(&rule, 300, &[0.5, 1.0], 8, &s, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_graph_outcomes_are_reproducible() {
        let rule = AttachmentRule::linear(0.25, 0.75);
        let s = SeedStream::new(9, "rep");
        let mut counts: HashMap<Vec<(u32, u32)>, u32> = HashMap::new();
        for i in 0..1000 {
            let g = generate(&rule, 4, &mut s.rng(i), GenMode::Fast).unwrap();
            *counts.entry(g.edges).or_default() += 1;
        }
        let again: u32 = (0..1000)
            .map(|i| generate(&rule, 4, &mut s.rng(i), GenMode::Fast).unwrap())
            .filter(|g| counts.contains_key(&g.edges))
            .count() as u32;
        assert_eq!(again, 1000);
    }
}
