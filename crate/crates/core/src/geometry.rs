//! One-dimensional realization of the graph-directed set, codebooks, and
//! rigorous two-sided bounds on the quantization error `e_{n,r}^r`.
//!
//! Template `J_i` (0-based `i`) occupies `[2i, 2i + 1]`. Children of a
//! template are laid out left to right in target order with equal gaps,
//! flush with both ends, so sibling separation is the same at every depth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::antichain::{enumerate_antichain, Antichain, AntichainOptions, AntichainWalker, WordVisitor};
use crate::error::{Error, Result};
use crate::graph::CriticalStructure;
use crate::model::{MarkovSystem, Word};
use crate::numeric::CompensatedSum;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChildPlacement {
    /// 1-based target vertex.
    pub child: usize,
    /// Left end relative to the unit template.
    pub offset: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Realization {
    pub template_left: Vec<f64>,
    pub layouts: Vec<Vec<ChildPlacement>>,
    /// Gap between consecutive children, per row.
    pub gaps: Vec<f64>,
    /// Largest separation constant valid for every sibling pair.
    pub sep_t: f64,
    #[serde(skip)]
    n: usize,
    #[serde(skip)]
    offsets: Vec<f64>,
    #[serde(skip)]
    ratios: Vec<f64>,
    #[serde(skip)]
    probs: Vec<f64>,
    #[serde(skip)]
    chi: Vec<f64>,
}

pub fn realize(sys: &MarkovSystem) -> Result<Realization> {
    let n = sys.n_vertices();
    let mut offsets = vec![f64::NAN; n * n];
    let mut ratios = vec![0.0; n * n];
    let mut probs = vec![0.0; n * n];
    let mut layouts = Vec::with_capacity(n);
    let mut gaps = Vec::with_capacity(n);
    let mut sep_t = f64::INFINITY;
    for i in 0..n {
        let children = sys.successors(i)?;
        let total: f64 = children.iter().map(|&j| sys.c(i, j)).sum();
        if total >= 1.0 {
            return Err(Error::InfeasibleLayout { row: i + 1, sum: total });
        }
        let gap = if children.len() >= 2 {
            (1.0 - total) / (children.len() - 1) as f64
        } else {
            1.0 - total
        };
        let mut cursor = 0.0;
        let mut layout = Vec::with_capacity(children.len());
        for &j in children {
            offsets[i * n + j] = cursor;
            ratios[i * n + j] = sys.c(i, j);
            probs[i * n + j] = sys.p(i, j);
            layout.push(ChildPlacement { child: j + 1, offset: cursor, ratio: sys.c(i, j) });
            cursor += sys.c(i, j) + gap;
        }
        if children.len() >= 2 {
            let c_max = children.iter().map(|&j| sys.c(i, j)).fold(0.0, f64::max);
            sep_t = sep_t.min(gap / c_max);
        }
        layouts.push(layout);
        gaps.push(gap);
    }
    Ok(Realization {
        template_left: (0..n).map(|i| 2.0 * i as f64).collect(),
        layouts,
        gaps,
        sep_t,
        n,
        offsets,
        ratios,
        probs,
        chi: (0..n).map(|i| sys.chi(i)).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub left: f64,
    pub length: f64,
}

impl Interval {
    pub fn right(&self) -> f64 {
        self.left + self.length
    }

    pub fn midpoint(&self) -> f64 {
        self.left + 0.5 * self.length
    }

    pub fn contains(&self, other: &Interval) -> bool {
        other.left >= self.left && other.right() <= self.right()
    }
}

/// Cylinder state carried down a word: interval and `μ(J_σ)`.
#[derive(Clone, Copy, Debug)]
struct Cylinder {
    left: f64,
    length: f64,
    mass: f64,
}

impl Realization {
    fn root(&self, v: usize) -> Cylinder {
        Cylinder { left: self.template_left[v], length: 1.0, mass: self.chi[v] }
    }

    fn child(&self, parent: &Cylinder, from: usize, to: usize) -> Cylinder {
        let e = from * self.n + to;
        Cylinder {
            left: parent.left + parent.length * self.offsets[e],
            length: parent.length * self.ratios[e],
            mass: parent.mass * self.probs[e],
        }
    }

    /// `J_σ` for a non-empty admissible word.
    pub fn cylinder_interval(&self, word: &Word) -> Result<Interval> {
        let w = word.as_slice();
        let Some(&first) = w.first() else {
            return Err(Error::InvalidArgument("the empty word has no single cylinder".into()));
        };
        if first >= self.n {
            return Err(Error::VertexOutOfRange { vertex: first + 1, n: self.n });
        }
        let mut cyl = self.root(first);
        for pair in w.windows(2) {
            if pair[1] >= self.n || self.offsets[pair[0] * self.n + pair[1]].is_nan() {
                return Err(Error::InvalidWord {
                    word: word.to_string(),
                    from: pair[0] + 1,
                    to: pair[1].min(self.n - 1) + 1,
                });
            }
            cyl = self.child(&cyl, pair[0], pair[1]);
        }
        Ok(Interval { left: cyl.left, length: cyl.length })
    }
}

/// Finite set of code points on the line, sorted and distinct.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Codebook {
    points: Vec<f64>,
}

impl Codebook {
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("codebook needs finite points".into()));
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(Codebook { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and distance of the nearest point; ties go to the lower index.
    pub fn nearest(&self, x: f64) -> (usize, f64) {
        let pts = &self.points;
        let idx = pts.partition_point(|&p| p < x);
        if idx == 0 {
            return (0, pts[0] - x);
        }
        if idx == pts.len() {
            return (idx - 1, x - pts[idx - 1]);
        }
        let (below, above) = (x - pts[idx - 1], pts[idx] - x);
        if below <= above {
            (idx - 1, below)
        } else {
            (idx, above)
        }
    }

    pub fn distance(&self, x: f64) -> f64 {
        self.nearest(x).1
    }
}

/// Midpoints of the cylinders of a materialized antichain.
pub fn antichain_codebook(rz: &Realization, ac: &Antichain) -> Result<Codebook> {
    let words = ac.words().ok_or(Error::Capacity { phi: ac.phi, cap: 0 })?;
    let mids = words
        .iter()
        .map(|w| rz.cylinder_interval(w).map(|i| i.midpoint()))
        .collect::<Result<Vec<_>>>()?;
    Codebook::new(mids)
}

/// Midpoint codebook of `Λ_{k,r}` built by streaming the words.
pub fn antichain_midpoints(rz: &Realization, sys: &MarkovSystem, r: f64, k: u32, cap: u64) -> Result<Codebook> {
    let phi = enumerate_antichain(sys, r, k, &AntichainOptions::default())?.phi;
    if phi > cap {
        return Err(Error::Capacity { phi, cap });
    }
    let walker = AntichainWalker::new(sys, r, k)?;
    let parts = walker.walk_par(|_| CollectVisitor { rz, out: Vec::new() });
    Codebook::new(parts.into_iter().flat_map(|p| p.out).map(|t| t.0).collect())
}

/// `2^{-r} Σ_{σ∈Λ} μ(J_σ) c_σ^r`: the error bound of the midpoint codebook.
pub fn antichain_upper_bound(ac: &Antichain) -> f64 {
    0.5f64.powf(ac.r) * ac.sum_mass_c_r()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Antichain,
    Lloyd,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub n: usize,
    pub r: f64,
    /// Lower bound on `∫ d(x, α)^r dμ`.
    pub lower: f64,
    /// Upper bound on `∫ d(x, α)^r dμ`.
    pub upper: f64,
    /// Error of the measure concentrated at cylinder midpoints.
    pub discrete: f64,
    pub method: EstimateMethod,
    pub integration_depth: u32,
}

struct ErrorSums {
    lower: CompensatedSum,
    upper: CompensatedSum,
    discrete: CompensatedSum,
}

impl ErrorSums {
    fn new() -> Self {
        ErrorSums { lower: CompensatedSum::new(), upper: CompensatedSum::new(), discrete: CompensatedSum::new() }
    }

    fn add(&mut self, mass: f64, dist: f64, half: f64, r: f64) {
        self.lower.add(mass * (dist - half).max(0.0).powf(r));
        self.upper.add(mass * (dist + half).powf(r));
        self.discrete.add(mass * dist.powf(r));
    }

    fn merge(&mut self, other: &ErrorSums) {
        self.lower.merge(&other.lower);
        self.upper.merge(&other.upper);
        self.discrete.merge(&other.discrete);
    }
}

struct IntegrateVisitor<'a> {
    rz: &'a Realization,
    codebook: &'a Codebook,
    r: f64,
    sums: ErrorSums,
}

impl WordVisitor for IntegrateVisitor<'_> {
    type State = Cylinder;

    fn root(&mut self, vertex: usize) -> Cylinder {
        self.rz.root(vertex)
    }

    fn step(&mut self, parent: &Cylinder, from: usize, to: usize) -> Cylinder {
        self.rz.child(parent, from, to)
    }

    fn leaf(&mut self, cyl: &Cylinder, _: &[usize]) {
        let half = 0.5 * cyl.length;
        let dist = self.codebook.distance(cyl.left + half);
        self.sums.add(cyl.mass, dist, half, self.r);
    }
}

/// Sandwich of `∫ d(x, α)^r dμ` over the refinement antichain `Λ_{K,r}`:
/// every `x ∈ J_σ` lies within `c_σ/2` of the midpoint. Streams the words,
/// so no capacity cap applies.
pub fn integrate_error(
    rz: &Realization,
    sys: &MarkovSystem,
    codebook: &Codebook,
    r: f64,
    depth: u32,
) -> Result<ErrorEstimate> {
    let walker = AntichainWalker::new(sys, r, depth)?;
    let parts = walker.walk_par(|_| IntegrateVisitor { rz, codebook, r, sums: ErrorSums::new() });
    let mut sums = ErrorSums::new();
    for part in &parts {
        sums.merge(&part.sums);
    }
    Ok(ErrorEstimate {
        n: codebook.len(),
        r,
        lower: sums.lower.value(),
        upper: sums.upper.value(),
        discrete: sums.discrete.value(),
        method: EstimateMethod::Antichain,
        integration_depth: depth,
    })
}

/// The measure pushed onto the cylinder midpoints of `Λ_{K,r}`, sorted by
/// position.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    pub depth: u32,
    pub points: Vec<f64>,
    pub masses: Vec<f64>,
    pub halves: Vec<f64>,
}

struct CollectVisitor<'a> {
    rz: &'a Realization,
    out: Vec<(f64, f64, f64)>,
}

impl WordVisitor for CollectVisitor<'_> {
    type State = Cylinder;

    fn root(&mut self, vertex: usize) -> Cylinder {
        self.rz.root(vertex)
    }

    fn step(&mut self, parent: &Cylinder, from: usize, to: usize) -> Cylinder {
        self.rz.child(parent, from, to)
    }

    fn leaf(&mut self, cyl: &Cylinder, _: &[usize]) {
        self.out.push((cyl.left + 0.5 * cyl.length, cyl.mass, 0.5 * cyl.length));
    }
}

pub fn discretize(rz: &Realization, sys: &MarkovSystem, r: f64, depth: u32, cap: u64) -> Result<DiscreteMeasure> {
    let phi = enumerate_antichain(sys, r, depth, &AntichainOptions::default())?.phi;
    if phi > cap {
        return Err(Error::Capacity { phi, cap });
    }
    let walker = AntichainWalker::new(sys, r, depth)?;
    let parts = walker.walk_par(|_| CollectVisitor { rz, out: Vec::new() });
    let mut all: Vec<(f64, f64, f64)> = parts.into_iter().flat_map(|p| p.out).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DiscreteMeasure {
        depth,
        points: all.iter().map(|t| t.0).collect(),
        masses: all.iter().map(|t| t.1).collect(),
        halves: all.iter().map(|t| t.2).collect(),
    })
}

impl DiscreteMeasure {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn estimate(&self, codebook: &Codebook, r: f64, method: EstimateMethod) -> ErrorEstimate {
        let mut sums = ErrorSums::new();
        for i in 0..self.len() {
            sums.add(self.masses[i], codebook.distance(self.points[i]), self.halves[i], r);
        }
        ErrorEstimate {
            n: codebook.len(),
            r,
            lower: sums.lower.value(),
            upper: sums.upper.value(),
            discrete: sums.discrete.value(),
            method,
            integration_depth: self.depth,
        }
    }

    /// Cell index of every point for the sorted codebook; ties to the lower
    /// index.
    fn assign(&self, centers: &[f64]) -> Vec<usize> {
        let mut cell = 0;
        self.points
            .iter()
            .map(|&x| {
                while cell + 1 < centers.len() && centers[cell + 1] - x < x - centers[cell] {
                    cell += 1;
                }
                cell
            })
            .collect()
    }
}

/// Minimizer of `Σ m_i |a − x_i|^r` over a cell given as sorted points.
fn cell_center(points: &[f64], masses: &[f64], r: f64) -> f64 {
    if r == 2.0 {
        let total: f64 = masses.iter().sum();
        return points.iter().zip(masses).map(|(x, m)| x * m).sum::<f64>() / total;
    }
    if r == 1.0 {
        let total: f64 = masses.iter().sum();
        let mut acc = 0.0;
        for (x, m) in points.iter().zip(masses) {
            acc += m;
            if acc >= 0.5 * total {
                return *x;
            }
        }
        return *points.last().unwrap();
    }
    let objective = |a: f64| -> f64 {
        points.iter().zip(masses).map(|(x, m)| m * (a - x).abs().powf(r)).sum()
    };
    let (mut lo, mut hi) = (points[0], *points.last().unwrap());
    while hi - lo > 1e-12 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if objective(m1) <= objective(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
        if m1 == lo && m2 == hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, Serialize)]
pub struct LloydResult {
    pub codebook: Codebook,
    /// Estimate of the starting codebook followed by one per accepted step.
    pub trace: Vec<ErrorEstimate>,
    pub iterations: usize,
}

/// Relative upper-bound improvement below which Lloyd stops.
pub const LLOYD_TOL: f64 = 1e-9;

/// Lloyd iterations on an already discretized measure. A step that would
/// raise the upper bound is rejected and ends the run.
pub fn lloyd_on_measure(measure: &DiscreteMeasure, start: &Codebook, r: f64, max_iter: usize) -> Result<LloydResult> {
    if r.is_nan() || r < 1.0 {
        return Err(Error::UnsupportedOrder(r));
    }
    let mut codebook = start.clone();
    let mut current = measure.estimate(&codebook, r, EstimateMethod::Lloyd);
    let mut trace = vec![current.clone()];
    let mut iterations = 0;
    while iterations < max_iter {
        let centers = codebook.points();
        let cells = measure.assign(centers);
        let mut ranges = vec![(usize::MAX, 0usize); centers.len()];
        for (i, &c) in cells.iter().enumerate() {
            let range = &mut ranges[c];
            range.0 = range.0.min(i);
            range.1 = i + 1;
        }
        let mut next: Vec<f64> = ranges
            .iter()
            .filter(|(a, _)| *a != usize::MAX)
            .map(|&(a, b)| cell_center(&measure.points[a..b], &measure.masses[a..b], r))
            .collect();
        next.sort_by(f64::total_cmp);
        next.dedup();
        // respawn dropped points at the heaviest midpoints not yet in use
        if next.len() < centers.len() {
            let mut order: Vec<usize> = (0..measure.len()).collect();
            order.sort_by(|&a, &b| measure.masses[b].total_cmp(&measure.masses[a]).then(a.cmp(&b)));
            for i in order {
                if next.len() == centers.len() {
                    break;
                }
                let x = measure.points[i];
                if next.binary_search_by(|p| p.total_cmp(&x)).is_err() {
                    let pos = next.partition_point(|&p| p < x);
                    next.insert(pos, x);
                }
            }
        }
        let candidate = Codebook::new(next)?;
        let estimate = measure.estimate(&candidate, r, EstimateMethod::Lloyd);
        if estimate.upper > current.upper {
            break;
        }
        iterations += 1;
        let improvement = (current.upper - estimate.upper) / current.upper;
        codebook = candidate;
        current = estimate;
        trace.push(current.clone());
        if improvement.is_nan() || improvement < LLOYD_TOL {
            break;
        }
    }
    Ok(LloydResult { codebook, trace, iterations })
}

pub fn lloyd_refine(
    rz: &Realization,
    sys: &MarkovSystem,
    start: &Codebook,
    r: f64,
    depth: u32,
    max_iter: usize,
    cap: u64,
) -> Result<LloydResult> {
    if r.is_nan() || r < 1.0 {
        return Err(Error::UnsupportedOrder(r));
    }
    let measure = discretize(rz, sys, r, depth, cap)?;
    lloyd_on_measure(&measure, start, r, max_iter)
}

#[derive(Clone, Debug)]
pub struct CurveOptions {
    pub refine: bool,
    /// Integration depth is `k + depth_offset`.
    pub depth_offset: u32,
    pub cap: u64,
    pub max_iter: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { refine: false, depth_offset: 6, cap: crate::antichain::DEFAULT_CAP, max_iter: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorCurveRow {
    pub k: u32,
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    /// `upper · n^{r/s_r} / (log n)^{(T_r−1)(1+r/s_r)}`
    pub corrected_ratio: f64,
    /// `upper · n^{r/s_r}`
    pub uncorrected_ratio: f64,
    pub iterations: usize,
}

/// Brackets `e_{n,r}^r` at `n = φ_{k,r}` using antichain-midpoint codebooks,
/// optionally Lloyd-refined.
pub fn error_curve(
    sys: &MarkovSystem,
    cs: &CriticalStructure,
    ks: impl IntoIterator<Item = u32>,
    options: &CurveOptions,
) -> Result<Vec<ErrorCurveRow>> {
    let r = cs.r;
    let rz = realize(sys)?;
    let log_exp = crate::antichain::log_exponent(cs);
    ks.into_iter()
        .map(|k| {
            let codebook = antichain_midpoints(&rz, sys, r, k, options.cap)?;
            let depth = k + options.depth_offset;
            let (estimate, iterations) = if options.refine {
                let result = lloyd_refine(&rz, sys, &codebook, r, depth, options.max_iter, options.cap)?;
                (result.trace.last().unwrap().clone(), result.iterations)
            } else {
                (integrate_error(&rz, sys, &codebook, r, depth)?, 0)
            };
            let n = codebook.len();
            let uncorrected = estimate.upper * (n as f64).powf(r / cs.s_r);
            Ok(ErrorCurveRow {
                k,
                n,
                lower: estimate.lower,
                upper: estimate.upper,
                corrected_ratio: uncorrected / (n as f64).ln().powf(log_exp),
                uncorrected_ratio: uncorrected,
                iterations,
            })
        })
        .collect()
}

pub fn curve_to_csv(rows: &[ErrorCurveRow]) -> String {
    let mut out = String::from("k,n,lower,upper,corrected_ratio,uncorrected_ratio,iterations\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{:e},{:e},{:e},{:e},{}\n",
            row.k, row.n, row.lower, row.upper, row.corrected_ratio, row.uncorrected_ratio, row.iterations
        ));
    }
    out
}

/// Monte Carlo estimate of `∫ d(x, α)^r dμ` with its standard error, from
/// points sampled along random paths of the chain to depth `depth`.
pub fn monte_carlo_error(
    rz: &Realization,
    sys: &MarkovSystem,
    codebook: &Codebook,
    r: f64,
    samples: usize,
    depth: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.n_vertices();
    let pick = |rng: &mut ChaCha8Rng, weights: &mut dyn Iterator<Item = (usize, f64)>| {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (idx, w) in weights {
            acc += w;
            last = idx;
            if u < acc {
                break;
            }
        }
        last
    };
    let mut sum = CompensatedSum::new();
    let mut sum_sq = CompensatedSum::new();
    for _ in 0..samples {
        let mut v = pick(&mut rng, &mut (0..n).map(|i| (i, rz.chi[i])));
        let mut cyl = rz.root(v);
        for _ in 1..depth {
            let succ = sys.successors(v).expect("vertex in range");
            let next = pick(&mut rng, &mut succ.iter().map(|&j| (j, sys.p(v, j))));
            cyl = rz.child(&cyl, v, next);
            v = next;
        }
        let x = cyl.left + cyl.length * rng.random::<f64>();
        let value = codebook.distance(x).powf(r);
        sum.add(value);
        sum_sq.add(value * value);
    }
    let mean = sum.value() / samples as f64;
    let var = (sum_sq.value() / samples as f64 - mean * mean).max(0.0);
    (mean, (var / samples as f64).sqrt())
}
