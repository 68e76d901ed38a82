//! Strongly connected components, the condensation order between them, and
//! the critical structure (`ℳ_r`, `M_r`, `T_r`, chains, transient set).

use std::collections::{BTreeSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MarkovSystem, Word};
use crate::spectral::{weight_matrix, Scope};

/// Tolerance for membership in the critical set: `s_r(H) >= s_r - 1e-9`.
pub const CRITICAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    /// Sorted 0-based vertices.
    pub vertices: Vec<usize>,
    /// False for a single vertex without a self-loop.
    pub cyclic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condensation {
    /// Components numbered by their smallest vertex.
    pub components: Vec<Component>,
    pub component_of: Vec<usize>,
    /// Direct condensation edges `(a, b)`, sorted and deduplicated.
    pub dag_edges: Vec<(usize, usize)>,
    pub topo_order: Vec<usize>,
    /// `reach[a][b]`: a path leads from component `a` to component `b != a`.
    pub reach: Vec<Vec<bool>>,
}

impl Condensation {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `a ≺ b` for distinct components.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.reach[a][b]
    }
}

/// Condensation of the digraph on `0..n` with edge predicate `edge`.
pub fn condense(n: usize, edge: impl Fn(usize, usize) -> bool) -> Condensation {
    let mut graph = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if edge(i, j) {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|scc| {
            let mut v: Vec<usize> = scc.into_iter().map(|ix| ix.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    groups.sort_by_key(|g| g[0]);

    let mut component_of = vec![0; n];
    for (idx, g) in groups.iter().enumerate() {
        for &v in g {
            component_of[v] = idx;
        }
    }
    let components: Vec<Component> = groups
        .into_iter()
        .map(|vertices| {
            let cyclic = vertices.len() > 1 || edge(vertices[0], vertices[0]);
            Component { vertices, cyclic }
        })
        .collect();

    let m = components.len();
    let mut dag: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (component_of[i], component_of[j]);
            if a != b && edge(i, j) {
                dag.insert((a, b));
            }
        }
    }
    let dag_edges: Vec<(usize, usize)> = dag.into_iter().collect();

    // Kahn's algorithm, smallest ready component first.
    let mut indegree = vec![0usize; m];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &(a, b) in &dag_edges {
        indegree[b] += 1;
        out[a].push(b);
    }
    let mut ready: BTreeSet<usize> = (0..m).filter(|&c| indegree[c] == 0).collect();
    let mut topo_order = Vec::with_capacity(m);
    while let Some(c) = ready.pop_first() {
        topo_order.push(c);
        for &d in &out[c] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.insert(d);
            }
        }
    }
    debug_assert_eq!(topo_order.len(), m, "condensation must be acyclic");

    let mut reach = vec![vec![false; m]; m];
    for start in 0..m {
        let mut queue: VecDeque<usize> = out[start].iter().copied().collect();
        while let Some(c) = queue.pop_front() {
            if !reach[start][c] {
                reach[start][c] = true;
                queue.extend(out[c].iter().copied());
            }
        }
    }

    Condensation { components, component_of, dag_edges, topo_order, reach }
}

/// Strongly connected components of the transition digraph.
pub fn scc_condensation(sys: &MarkovSystem) -> Condensation {
    condense(sys.n_vertices(), |i, j| sys.is_edge(i, j))
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalStructure {
    pub r: f64,
    pub condensation: Condensation,
    /// `s_r(H)` per component; 0 for acyclic or subcritical components.
    pub per_component: Vec<f64>,
    pub s_r: f64,
    /// Critical component indices, ascending.
    pub critical: Vec<usize>,
    pub m_r: usize,
    pub t_r: usize,
    /// Vertices outside every critical component, ascending.
    pub transient: Vec<usize>,
}

impl CriticalStructure {
    pub fn is_critical(&self, component: usize) -> bool {
        self.critical.binary_search(&component).is_ok()
    }

    /// Critical component containing `vertex`, if any.
    pub fn critical_component_of(&self, vertex: usize) -> Option<usize> {
        let c = self.condensation.component_of[vertex];
        self.is_critical(c).then_some(c)
    }

    /// All `≺`-chains of critical components of every length `1..=M_r`.
    pub fn all_chains(&self) -> Vec<Vec<Vec<usize>>> {
        (1..=self.m_r).map(|l| enumerate_chains(self, l).unwrap()).collect()
    }
}

/// Builds the critical structure from per-component critical values.
/// `T_r` is the longest path in the condensation DAG counting critical
/// components.
pub fn critical_structure(
    cond: &Condensation,
    r: f64,
    per_component_s: &[f64],
) -> Result<CriticalStructure> {
    if per_component_s.len() != cond.len() {
        return Err(Error::InvalidArgument(format!(
            "{} critical values for {} components",
            per_component_s.len(),
            cond.len()
        )));
    }
    let s_r = per_component_s.iter().copied().fold(0.0, f64::max);
    let critical: Vec<usize> = (0..cond.len())
        .filter(|&c| cond.components[c].cyclic && s_r > 0.0 && per_component_s[c] >= s_r - CRITICAL_TOL)
        .collect();
    let weight = |c: usize| usize::from(critical.binary_search(&c).is_ok());

    let mut best = vec![0usize; cond.len()];
    for &c in &cond.topo_order {
        let from_preds = cond
            .dag_edges
            .iter()
            .filter(|&&(_, b)| b == c)
            .map(|&(a, _)| best[a])
            .max()
            .unwrap_or(0);
        best[c] = from_preds + weight(c);
    }
    let t_r = best.iter().copied().max().unwrap_or(0);

    let transient = (0..cond.component_of.len())
        .filter(|&v| critical.binary_search(&cond.component_of[v]).is_err())
        .collect();

    Ok(CriticalStructure {
        r,
        condensation: cond.clone(),
        per_component: per_component_s.to_vec(),
        s_r,
        m_r: critical.len(),
        critical,
        t_r,
        transient,
    })
}

/// All strictly `≺`-increasing `l`-tuples of critical components.
pub fn enumerate_chains(cs: &CriticalStructure, l: usize) -> Result<Vec<Vec<usize>>> {
    if l == 0 || l > cs.m_r {
        return Err(Error::InvalidArgument(format!("chain length {l} outside 1..={}", cs.m_r)));
    }
    fn extend(cs: &CriticalStructure, l: usize, chain: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if chain.len() == l {
            out.push(chain.clone());
            return;
        }
        for &c in &cs.critical {
            let ok = chain.last().is_none_or(|&last| cs.condensation.precedes(last, c));
            if ok {
                chain.push(c);
                extend(cs, l, chain, out);
                chain.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(cs, l, &mut Vec::with_capacity(l), &mut out);
    Ok(out)
}

/// `T_r(γ)`: number of distinct critical components met by `γ`.
pub fn t_r_of_path(sys: &MarkovSystem, cs: &CriticalStructure, word: &Word) -> Result<usize> {
    sys.check_word(word)?;
    let visited: BTreeSet<usize> =
        word.as_slice().iter().filter_map(|&v| cs.critical_component_of(v)).collect();
    Ok(visited.len())
}

/// `Σ_{σ∈F_n} (p_σ c_σ^r)^{s/(s+r)}` over words of length `n` with every
/// letter in the transient set, via powers of the restricted weight matrix.
pub fn transient_sum(sys: &MarkovSystem, cs: &CriticalStructure, r: f64, s: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("word length must be at least 1".into()));
    }
    if cs.transient.is_empty() {
        return Ok(0.0);
    }
    let m = weight_matrix(sys, &Scope::Component(cs.transient.clone()), r, s);
    let size = cs.transient.len();
    let mut v = vec![1.0; size];
    for _ in 1..n {
        v = (0..size).map(|i| (0..size).map(|j| m.get(i, j) * v[j]).sum()).collect();
    }
    Ok(v.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fixture_a, fixture_b, fixture_c};

    fn comps(cond: &Condensation) -> Vec<Vec<usize>> {
        cond.components.iter().map(|c| c.vertices.iter().map(|v| v + 1).collect()).collect()
    }

    #[test]
    fn fixture_a_single_component() {
        let cond = scc_condensation(&fixture_a());
        assert_eq!(comps(&cond), vec![vec![1, 2]]);
        assert!(cond.dag_edges.is_empty());
    }

    #[test]
    fn fixture_b_condensation_order() {
        let cond = scc_condensation(&fixture_b());
        assert_eq!(comps(&cond), vec![vec![1, 2], vec![3, 4], vec![5], vec![6, 7]]);
        assert!(!cond.components[2].cyclic);
        assert_eq!(cond.dag_edges, vec![(0, 2), (1, 3), (2, 1)]);
        assert_eq!(cond.topo_order, vec![0, 2, 1, 3]);
        assert!(cond.precedes(0, 1) && cond.precedes(0, 3) && !cond.precedes(1, 0));
    }

    #[test]
    fn fixture_c_incomparable() {
        let cond = scc_condensation(&fixture_c());
        assert_eq!(comps(&cond), vec![vec![1, 2], vec![3, 4], vec![5]]);
        assert!(!cond.precedes(0, 1) && !cond.precedes(1, 0));
        assert!(cond.precedes(2, 0) && cond.precedes(2, 1));
    }

    #[test]
    fn critical_structure_from_values() {
        let cond = scc_condensation(&fixture_b());
        let cs = critical_structure(&cond, 1.0, &[0.367, 0.367, 0.0, 0.315]).unwrap();
        assert_eq!((cs.m_r, cs.t_r), (2, 2));
        assert_eq!(cs.critical, vec![0, 1]);
        assert_eq!(cs.transient, vec![4, 5, 6]);
        assert_eq!(enumerate_chains(&cs, 2).unwrap(), vec![vec![0, 1]]);
        assert_eq!(enumerate_chains(&cs, 1).unwrap(), vec![vec![0], vec![1]]);
        assert!(enumerate_chains(&cs, 3).is_err());
        assert!(enumerate_chains(&cs, 0).is_err());
    }

    #[test]
    fn incomparable_pair_has_no_two_chains() {
        let cond = scc_condensation(&fixture_c());
        let cs = critical_structure(&cond, 1.0, &[0.63, 0.63, 0.0]).unwrap();
        assert_eq!((cs.m_r, cs.t_r), (2, 1));
        assert!(enumerate_chains(&cs, 2).unwrap().is_empty());
    }

    #[test]
    fn path_counts() {
        let sys = fixture_b();
        let cond = scc_condensation(&sys);
        let cs = critical_structure(&cond, 1.0, &[0.367, 0.367, 0.0, 0.315]).unwrap();
        assert_eq!(t_r_of_path(&sys, &cs, &Word::from_labels(&[1, 2, 5, 3])).unwrap(), 2);
        assert_eq!(t_r_of_path(&sys, &cs, &Word::from_labels(&[6, 7, 6])).unwrap(), 0);
        assert_eq!(t_r_of_path(&sys, &cs, &Word::from_labels(&[3, 4, 3])).unwrap(), 1);
        assert!(t_r_of_path(&sys, &cs, &Word::from_labels(&[1, 3])).is_err());
    }

    #[test]
    fn empty_transient_set_sums_to_zero() {
        let sys = fixture_a();
        let cond = scc_condensation(&sys);
        let cs = critical_structure(&cond, 1.0, &[0.63]).unwrap();
        assert!(cs.transient.is_empty());
        assert_eq!(transient_sum(&sys, &cs, 1.0, 0.63, 5).unwrap(), 0.0);
        assert!(transient_sum(&sys, &cs, 1.0, 0.63, 0).is_err());
    }
}
