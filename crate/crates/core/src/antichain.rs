//! Maximal antichains `Λ_{k,r}`: words whose weight `p_σ c_σ^r` first drops
//! strictly below `η̲_r^k`.
//!
//! Two enumeration routes share one membership test. [`enumerate_antichain`]
//! advances a frontier of aggregated states (current vertex, first letter,
//! chain of critical components met so far, per-edge-class step counts);
//! words sharing a state have identical weights and masses, so all sums are
//! exact multiplicities times closed-form class weights.
//! [`AntichainWalker`] visits the words one by one depth-first, for
//! consumers that need positions (codebooks, integration, Lloyd).

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::CriticalStructure;
use crate::model::{MarkovSystem, Word};
use crate::numeric::{bisect_decreasing, CompensatedSum};

/// Default cap on materialized antichain words.
pub const DEFAULT_CAP: u64 = 100_000_000;
/// Log-space band around the threshold inside which exact arithmetic decides.
pub const TIE_GUARD: f64 = 1e-9;
/// Bracket width for the implicit exponent `t_{k,r}`.
pub const EXPONENT_TOL: f64 = 1e-10;

const NO_CLASS: usize = usize::MAX;

/// Per-edge weight classes and the level-`k` threshold.
#[derive(Clone, Debug)]
struct WeightModel {
    n: usize,
    successors: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    log_weight: Vec<f64>,
    log_p: Vec<f64>,
    log_c: Vec<f64>,
    exact_weight: Option<Vec<BigRational>>,
    exact_p: Option<Vec<BigRational>>,
    threshold_log: f64,
    threshold_exact: Option<BigRational>,
}

impl WeightModel {
    fn new(sys: &MarkovSystem, r: f64, k: u32) -> Result<Self> {
        if r.is_nan() || r <= 0.0 {
            return Err(Error::InvalidArgument(format!("order r = {r} must be positive")));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("level k must be at least 1".into()));
        }
        let n = sys.n_vertices();
        let (classes, class_of) = sys.edge_classes();
        if classes.is_empty() {
            return Err(Error::NoCycle);
        }
        let log_p: Vec<f64> = classes.iter().map(|c| c.p.value().ln()).collect();
        let log_c: Vec<f64> = classes.iter().map(|c| c.c.value().ln()).collect();
        let log_weight = log_p.iter().zip(&log_c).map(|(lp, lc)| lp + r * lc).collect();
        let exact_weight: Option<Vec<BigRational>> =
            classes.iter().map(|c| c.weight_exact(r)).collect();
        let exact_p: Option<Vec<BigRational>> =
            classes.iter().map(|c| c.p.exact().cloned()).collect();
        let eta = sys.eta_bounds(r).lower;
        let threshold_exact = sys.eta_lower_exact(r).map(|e| Pow::pow(e, k));
        Ok(WeightModel {
            n,
            successors: sys.successor_lists().to_vec(),
            class_of: class_of.into_iter().map(|c| c.unwrap_or(NO_CLASS)).collect(),
            log_weight,
            log_p,
            log_c,
            exact_weight: exact_weight.filter(|_| threshold_exact.is_some()),
            exact_p,
            threshold_log: k as f64 * eta.ln(),
            threshold_exact,
        })
    }

    fn classes(&self) -> usize {
        self.log_weight.len()
    }

    fn class(&self, from: usize, to: usize) -> usize {
        self.class_of[from * self.n + to]
    }

    fn dot(counts: &[u32], logs: &[f64]) -> f64 {
        counts.iter().zip(logs).map(|(&n, &l)| n as f64 * l).sum()
    }

    fn log_weight_of(&self, counts: &[u32]) -> f64 {
        Self::dot(counts, &self.log_weight)
    }

    fn exact_weight_of(&self, counts: &[u32]) -> Option<BigRational> {
        let weights = self.exact_weight.as_ref()?;
        Some(
            counts
                .iter()
                .zip(weights)
                .filter(|(&n, _)| n > 0)
                .fold(BigRational::one(), |acc, (&n, w)| acc * Pow::pow(w, n)),
        )
    }

    /// `p_σ c_σ^r < η̲_r^k` for a word with the given class counts. Ties
    /// (equality) are not below; without exact data, anything inside the
    /// guard band counts as a tie.
    fn is_below(&self, counts: &[u32]) -> bool {
        let diff = self.log_weight_of(counts) - self.threshold_log;
        if diff.abs() > TIE_GUARD {
            return diff < 0.0;
        }
        match (self.exact_weight_of(counts), &self.threshold_exact) {
            (Some(w), Some(t)) => &w < t,
            _ => false,
        }
    }
}

/// Interned chains of critical components, keyed by visit order.
#[derive(Clone, Debug, Default)]
struct ChainTable {
    chains: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    critical_of: Vec<Option<usize>>,
}

impl ChainTable {
    fn new(n: usize, cs: Option<&CriticalStructure>) -> Self {
        let critical_of = (0..n).map(|v| cs.and_then(|cs| cs.critical_component_of(v))).collect();
        let mut table = ChainTable { chains: Vec::new(), index: HashMap::new(), critical_of };
        table.intern(Vec::new());
        table
    }

    fn intern(&mut self, chain: Vec<usize>) -> usize {
        if let Some(&id) = self.index.get(&chain) {
            return id;
        }
        self.chains.push(chain.clone());
        self.index.insert(chain, self.chains.len() - 1);
        self.chains.len() - 1
    }

    fn root(&mut self, vertex: usize) -> usize {
        match self.critical_of[vertex] {
            Some(c) => self.intern(vec![c]),
            None => 0,
        }
    }

    fn step(&mut self, chain: usize, to: usize) -> usize {
        match self.critical_of[to] {
            Some(c) if !self.chains[chain].contains(&c) => {
                let mut next = self.chains[chain].clone();
                next.push(c);
                self.intern(next)
            }
            _ => chain,
        }
    }
}

/// Words of the antichain sharing first letter, critical chain and
/// per-edge-class step counts. They have identical `p_σ`, `c_σ` and mass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightClass {
    pub first: usize,
    pub chain: usize,
    pub counts: Vec<u32>,
    pub multiplicity: u64,
    pub log_p: f64,
    pub log_c: f64,
}

impl WeightClass {
    pub fn depth(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum::<usize>() + 1
    }
}

#[derive(Clone, Debug)]
pub struct AntichainOptions<'a> {
    /// Classify words by the critical components they visit.
    pub critical: Option<&'a CriticalStructure>,
    /// Also store the words themselves when `phi <= cap`.
    pub materialize: bool,
    pub cap: u64,
}

impl Default for AntichainOptions<'_> {
    fn default() -> Self {
        AntichainOptions { critical: None, materialize: false, cap: DEFAULT_CAP }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Antichain {
    pub k: u32,
    pub r: f64,
    /// `φ_{k,r}`
    pub phi: u64,
    /// `l_{1k}`
    pub depth_min: usize,
    /// `l_{2k}`
    pub depth_max: usize,
    /// `η̲_r^k`
    pub threshold: f64,
    pub classes: Vec<WeightClass>,
    /// Chain id to critical components in visit order; id 0 is the empty chain.
    pub chains: Vec<Vec<usize>>,
    pub classified: bool,
    /// Present when materialization was requested and `phi <= cap`.
    #[serde(skip)]
    pub words: Option<Vec<Word>>,
    #[serde(skip)]
    exact_p: Option<Vec<BigRational>>,
    #[serde(skip)]
    exact_weight: Option<Vec<BigRational>>,
    #[serde(skip)]
    exact_chi: Option<Vec<BigRational>>,
    #[serde(skip)]
    chi: Vec<f64>,
}

impl Antichain {
    /// `log(p_σ c_σ^r)` for words of `class`.
    pub fn class_log_weight(&self, class: &WeightClass) -> f64 {
        class.log_p + self.r * class.log_c
    }

    fn accumulate(&self, term: impl Fn(&WeightClass) -> f64) -> f64 {
        self.classes
            .iter()
            .map(|c| c.multiplicity as f64 * term(c))
            .collect::<CompensatedSum>()
            .value()
    }

    /// `Σ_{σ∈Λ} p_σ c_σ^r`
    pub fn sum_energy(&self) -> f64 {
        self.accumulate(|c| self.class_log_weight(c).exp())
    }

    /// `Σ_{σ∈Λ} (p_σ c_σ^r)^{s/(s+r)}`
    pub fn sum_powered(&self, s: f64) -> f64 {
        let x = s / (s + self.r);
        self.accumulate(|c| (x * self.class_log_weight(c)).exp())
    }

    /// `Σ_{σ∈Λ} μ(J_σ) c_σ^r`, the antichain-codebook error numerator.
    pub fn sum_mass_c_r(&self) -> f64 {
        self.accumulate(|c| self.chi[c.first] * (c.log_p + self.r * c.log_c).exp())
    }

    /// `Σ_{σ∈Λ} χ_{σ_1} p_σ`; equals 1 for a maximal antichain.
    pub fn mass(&self) -> f64 {
        self.accumulate(|c| self.chi[c.first] * c.log_p.exp())
    }

    /// Exact total mass, for exact systems.
    pub fn mass_exact(&self) -> Option<BigRational> {
        let (p, chi) = (self.exact_p.as_ref()?, self.exact_chi.as_ref()?);
        let mut total = BigRational::zero();
        for c in &self.classes {
            let mut w = chi[c.first].clone() * BigRational::from_integer(c.multiplicity.into());
            for (&n, q) in c.counts.iter().zip(p) {
                if n > 0 {
                    w *= Pow::pow(q, n);
                }
            }
            total += w;
        }
        Some(total)
    }

    /// Exact `Σ p_σ c_σ^r`, for exact systems and integer `r`.
    pub fn sum_energy_exact(&self) -> Option<BigRational> {
        let weights = self.exact_weight.as_ref()?;
        let mut total = BigRational::zero();
        for c in &self.classes {
            let mut w = BigRational::from_integer(c.multiplicity.into());
            for (&n, q) in c.counts.iter().zip(weights) {
                if n > 0 {
                    w *= Pow::pow(q, n);
                }
            }
            total += w;
        }
        Some(total)
    }

    pub fn words(&self) -> Option<&[Word]> {
        self.words.as_deref()
    }
}

/// Enumerates `Λ_{k,r}` level by level over aggregated states.
pub fn enumerate_antichain(
    sys: &MarkovSystem,
    r: f64,
    k: u32,
    options: &AntichainOptions<'_>,
) -> Result<Antichain> {
    let model = WeightModel::new(sys, r, k)?;
    let n = model.n;
    let d = model.classes();
    let mut chains = ChainTable::new(n, options.critical);

    type State = (usize, usize, usize, Vec<u32>);
    let mut frontier: BTreeMap<State, u64> = BTreeMap::new();
    for v in 0..n {
        let chain = chains.root(v);
        *frontier.entry((v, v, chain, vec![0; d])).or_default() += 1;
    }
    let mut emitted: BTreeMap<(usize, usize, Vec<u32>), u64> = BTreeMap::new();
    while !frontier.is_empty() {
        let mut next: BTreeMap<State, u64> = BTreeMap::new();
        for ((v, first, chain, counts), mult) in frontier {
            for &j in &model.successors[v] {
                let mut counts = counts.clone();
                counts[model.class(v, j)] += 1;
                let chain = chains.step(chain, j);
                if model.is_below(&counts) {
                    *emitted.entry((first, chain, counts)).or_default() += mult;
                } else {
                    *next.entry((j, first, chain, counts)).or_default() += mult;
                }
            }
        }
        frontier = next;
    }

    // BTreeMap iteration keeps chain interning and class order reproducible.
    let mut classes: Vec<WeightClass> = emitted
        .into_iter()
        .map(|((first, chain, counts), multiplicity)| WeightClass {
            first,
            chain,
            log_p: WeightModel::dot(&counts, &model.log_p),
            log_c: WeightModel::dot(&counts, &model.log_c),
            counts,
            multiplicity,
        })
        .collect();
    classes.sort_by(|a, b| (a.first, a.chain, &a.counts).cmp(&(b.first, b.chain, &b.counts)));

    let phi = classes.iter().map(|c| c.multiplicity).sum();
    let depth_min = classes.iter().map(WeightClass::depth).min().unwrap_or(0);
    let depth_max = classes.iter().map(WeightClass::depth).max().unwrap_or(0);

    let words = if options.materialize && phi <= options.cap {
        let walker = AntichainWalker::new(sys, r, k)?;
        let mut collector = WordCollector::default();
        walker.walk_all(&mut collector);
        Some(collector.words)
    } else {
        None
    };

    let exact_chi: Option<Vec<BigRational>> =
        (0..n).map(|i| sys.chi_number(i).exact().cloned()).collect();
    Ok(Antichain {
        k,
        r,
        phi,
        depth_min,
        depth_max,
        threshold: model.threshold_log.exp(),
        classes,
        chains: chains.chains,
        classified: options.critical.is_some(),
        words,
        exact_p: model.exact_p.clone(),
        exact_weight: model.exact_weight.clone(),
        exact_chi,
        chi: (0..n).map(|i| sys.chi(i)).collect(),
    })
}

/// `t_{k,r}`: the unique `t > 0` with `Σ_{σ∈Λ} (p_σ c_σ^r)^{t/(t+r)} = 1`.
pub fn implicit_exponent(ac: &Antichain) -> Result<f64> {
    if ac.phi < 2 {
        return Err(Error::SingleWordAntichain);
    }
    let f = |t: f64| ac.sum_powered(t);
    let mut hi = 1.0;
    while f(hi) >= 1.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoRoot("antichain sum stays >= 1".into()));
        }
    }
    let lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    Ok(bisect_decreasing(f, 1.0, lo, hi, EXPONENT_TOL))
}

/// `λ_{k,r}` for one chain of critical components (empty for words that
/// meet none).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSum {
    pub chain: Vec<usize>,
    pub words: u64,
    pub value: f64,
}

/// Splits `Σ (p_γ c_γ^r)^{s_r/(s_r+r)}` over the antichain by the ordered
/// tuple of critical components each word visits. Only tuples with at least
/// one word appear, ordered by length then lexicographically.
pub fn chain_decomposition(
    sys: &MarkovSystem,
    ac: &Antichain,
    cs: &CriticalStructure,
) -> Result<Vec<ChainSum>> {
    let reclassified;
    let ac = if ac.classified {
        ac
    } else {
        let options = AntichainOptions { critical: Some(cs), ..Default::default() };
        reclassified = enumerate_antichain(sys, ac.r, ac.k, &options)?;
        &reclassified
    };
    let x = cs.s_r / (cs.s_r + ac.r);
    let mut sums: Vec<(CompensatedSum, u64)> = vec![(CompensatedSum::new(), 0); ac.chains.len()];
    for c in &ac.classes {
        let (acc, count) = &mut sums[c.chain];
        acc.add(c.multiplicity as f64 * (x * ac.class_log_weight(c)).exp());
        *count += c.multiplicity;
    }
    let mut out: Vec<ChainSum> = ac
        .chains
        .iter()
        .zip(sums)
        .filter(|(_, (_, count))| *count > 0)
        .map(|(chain, (acc, words))| ChainSum { chain: chain.clone(), words, value: acc.value() })
        .collect();
    out.sort_by(|a, b| (a.chain.len(), &a.chain).cmp(&(b.chain.len(), &b.chain)));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub k: u32,
    pub phi: u64,
    pub l1: usize,
    pub l2: usize,
    pub sum_energy: f64,
    pub sum_dim: f64,
    pub t_k: f64,
    /// `φ^{r/s_r} Σ p_σ c_σ^r / (log φ)^{(T_r−1)(1+r/s_r)}`
    pub r_k: f64,
    /// `φ^{r/s_r} Σ p_σ c_σ^r`
    pub u_k: f64,
    pub lambdas: Vec<ChainSum>,
}

/// Exponent `(T_r − 1)(1 + r/s_r)` of the logarithmic correction.
pub fn log_exponent(cs: &CriticalStructure) -> f64 {
    (cs.t_r as f64 - 1.0) * (1.0 + cs.r / cs.s_r)
}

pub fn theorem_ratio_series(
    sys: &MarkovSystem,
    cs: &CriticalStructure,
    ks: impl IntoIterator<Item = u32>,
) -> Result<Vec<SeriesRow>> {
    let r = cs.r;
    let log_exp = log_exponent(cs);
    let options = AntichainOptions { critical: Some(cs), ..Default::default() };
    ks.into_iter()
        .map(|k| {
            let ac = enumerate_antichain(sys, r, k, &options)?;
            let sum_energy = ac.sum_energy();
            let phi = ac.phi as f64;
            let u_k = phi.powf(r / cs.s_r) * sum_energy;
            Ok(SeriesRow {
                k,
                phi: ac.phi,
                l1: ac.depth_min,
                l2: ac.depth_max,
                sum_energy,
                sum_dim: ac.sum_powered(cs.s_r),
                t_k: implicit_exponent(&ac)?,
                r_k: u_k / phi.ln().powf(log_exp),
                u_k,
                lambdas: chain_decomposition(sys, &ac, cs)?,
            })
        })
        .collect()
}

/// Column label for a chain: `lambda_none`, `lambda_H1`, `lambda_H1_H2`
/// (1-based component indices).
pub fn chain_label(chain: &[usize]) -> String {
    if chain.is_empty() {
        return "lambda_none".into();
    }
    let parts: Vec<String> = chain.iter().map(|c| format!("H{}", c + 1)).collect();
    format!("lambda_{}", parts.join("_"))
}

/// CSV with columns `k,phi,l1,l2,sum_energy,sum_dim,t_k,R_k,U_k` followed by
/// one `lambda_*` column per chain class present in any row.
pub fn series_to_csv(rows: &[SeriesRow]) -> String {
    let mut chains: Vec<Vec<usize>> =
        rows.iter().flat_map(|r| r.lambdas.iter().map(|l| l.chain.clone())).collect();
    chains.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    chains.dedup();
    let mut out = String::from("k,phi,l1,l2,sum_energy,sum_dim,t_k,R_k,U_k");
    for c in &chains {
        out.push(',');
        out.push_str(&chain_label(c));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e}",
            row.k, row.phi, row.l1, row.l2, row.sum_energy, row.sum_dim, row.t_k, row.r_k, row.u_k
        ));
        for c in &chains {
            let v = row.lambdas.iter().find(|l| &l.chain == c).map_or(0.0, |l| l.value);
            out.push_str(&format!(",{v:e}"));
        }
        out.push('\n');
    }
    out
}

/// Callbacks for a depth-first walk over the words of an antichain.
pub trait WordVisitor {
    type State: Clone;
    fn root(&mut self, vertex: usize) -> Self::State;
    fn step(&mut self, parent: &Self::State, from: usize, to: usize) -> Self::State;
    /// Called once per antichain word, in lexicographic order per root.
    fn leaf(&mut self, state: &Self::State, word: &[usize]);
}

/// Depth-first enumeration of `Λ_{k,r}` word by word.
#[derive(Clone, Debug)]
pub struct AntichainWalker {
    model: WeightModel,
}

struct Frame<S> {
    vertex: usize,
    next: usize,
    state: S,
}

impl AntichainWalker {
    pub fn new(sys: &MarkovSystem, r: f64, k: u32) -> Result<Self> {
        Ok(AntichainWalker { model: WeightModel::new(sys, r, k)? })
    }

    pub fn n_roots(&self) -> usize {
        self.model.n
    }

    /// Walks the subtree of words starting at `root`; returns the number
    /// of words visited.
    pub fn walk_root<V: WordVisitor>(&self, root: usize, visitor: &mut V) -> u64 {
        let m = &self.model;
        let mut counts = vec![0u32; m.classes()];
        let mut path = vec![root];
        let mut stack = vec![Frame { vertex: root, next: 0, state: visitor.root(root) }];
        let mut visited = 0u64;
        while let Some(top) = stack.last_mut() {
            let succ = &m.successors[top.vertex];
            if top.next == succ.len() {
                let done = stack.pop().unwrap();
                path.pop();
                if let Some(parent) = stack.last() {
                    counts[m.class(parent.vertex, done.vertex)] -= 1;
                }
                continue;
            }
            let (v, j) = (top.vertex, succ[top.next]);
            top.next += 1;
            let class = m.class(v, j);
            counts[class] += 1;
            let state = visitor.step(&top.state, v, j);
            path.push(j);
            if m.is_below(&counts) {
                visitor.leaf(&state, &path);
                visited += 1;
                path.pop();
                counts[class] -= 1;
            } else {
                stack.push(Frame { vertex: j, next: 0, state });
            }
        }
        visited
    }

    pub fn walk_all<V: WordVisitor>(&self, visitor: &mut V) -> u64 {
        (0..self.model.n).map(|root| self.walk_root(root, visitor)).sum()
    }

    /// One visitor per root, walked in parallel and returned in root order.
    pub fn walk_par<V, F>(&self, make: F) -> Vec<V>
    where
        V: WordVisitor + Send,
        F: Fn(usize) -> V + Sync,
    {
        (0..self.model.n)
            .into_par_iter()
            .map(|root| {
                let mut visitor = make(root);
                self.walk_root(root, &mut visitor);
                visitor
            })
            .collect()
    }
}

#[derive(Default)]
struct WordCollector {
    words: Vec<Word>,
}

impl WordVisitor for WordCollector {
    type State = ();
    fn root(&mut self, _: usize) {}
    fn step(&mut self, _: &(), _: usize, _: usize) {}
    fn leaf(&mut self, _: &(), word: &[usize]) {
        self.words.push(Word::new(word.to_vec()));
    }
}
