//! Weight matrices `A(s)`, their Perron roots `Ψ(s)`, the critical values
//! solving `Ψ(s) = 1`, and left Perron vectors of irreducible blocks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::condense;
use crate::model::MarkovSystem;
use crate::numeric::bisect_decreasing;

/// Relative tolerance of the Perron root.
pub const RADIUS_TOL: f64 = 1e-12;
/// Width of the final bisection bracket for `s_r`.
pub const ROOT_TOL: f64 = 1e-13;
/// Probe point below which a scope counts as subcritical.
pub const SUBCRITICAL_PROBE: f64 = 1e-9;

const MAX_POWER_ITERATIONS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Scope {
    Full,
    /// A vertex subset (0-based); typically one strongly connected component.
    Component(Vec<usize>),
}

impl Scope {
    fn vertices(&self, n: usize) -> Vec<usize> {
        match self {
            Scope::Full => (0..n).collect(),
            Scope::Component(v) => {
                let mut v = v.clone();
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }
}

/// Square nonnegative matrix `b_ij(s) = (p_ij c_ij^r)^{s/(s+r)}` restricted
/// to `vertices`; zero off the edges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightMatrix {
    pub vertices: Vec<usize>,
    pub r: f64,
    pub s: f64,
    entries: Vec<f64>,
}

impl WeightMatrix {
    /// Wraps a raw row-major matrix (used for tests and generic blocks).
    pub fn from_entries(size: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), size * size);
        WeightMatrix { vertices: (0..size).collect(), r: f64::NAN, s: f64::NAN, entries }
    }

    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    fn block(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().flat_map(|&i| idx.iter().map(move |&j| self.get(i, j))).collect()
    }
}

pub fn weight_matrix(sys: &MarkovSystem, scope: &Scope, r: f64, s: f64) -> WeightMatrix {
    let vertices = scope.vertices(sys.n_vertices());
    let exponent = s / (s + r);
    let entries = vertices
        .iter()
        .flat_map(|&i| {
            vertices.iter().map(move |&j| {
                if sys.is_edge(i, j) {
                    (sys.p(i, j) * sys.c(i, j).powf(r)).powf(exponent)
                } else {
                    0.0
                }
            })
        })
        .collect();
    WeightMatrix { vertices, r, s, entries }
}

/// Perron root and positive eigenvector (right, or left when `left`) of an
/// irreducible nonnegative `size x size` block, by power iteration on
/// `block + I`. Collatz–Wielandt bounds give the stopping rule.
pub(crate) fn perron(block: &[f64], size: usize, left: bool) -> (f64, Vec<f64>) {
    if size == 1 {
        return (block[0], vec![1.0]);
    }
    let at = |i: usize, j: usize| if left { block[j * size + i] } else { block[i * size + j] };
    let mut x = vec![1.0 / size as f64; size];
    let mut estimate = 0.0;
    for _ in 0..MAX_POWER_ITERATIONS {
        let y: Vec<f64> = (0..size)
            .map(|i| x[i] + (0..size).map(|j| at(i, j) * x[j]).sum::<f64>())
            .collect();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (yi, xi) in y.iter().zip(&x) {
            let ratio = yi / xi;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        let total: f64 = y.iter().sum();
        x = y.into_iter().map(|v| v / total).collect();
        estimate = 0.5 * (lo + hi) - 1.0;
        if hi - lo <= RADIUS_TOL * hi {
            break;
        }
    }
    (estimate.max(0.0), x)
}

/// Spectral radius of a nonnegative matrix: the largest Perron root over
/// the irreducible diagonal blocks of its sparsity pattern.
pub fn spectral_radius(m: &WeightMatrix) -> f64 {
    let size = m.size();
    let cond = condense(size, |i, j| m.get(i, j) > 0.0);
    cond.components
        .iter()
        .filter(|c| c.cyclic)
        .map(|c| perron(&m.block(&c.vertices), c.vertices.len(), false).0)
        .fold(0.0, f64::max)
}

/// Normalized left Perron vector of an irreducible matrix; `None` when the
/// pattern is reducible or acyclic.
pub fn left_perron_vector(m: &WeightMatrix) -> Option<Vec<f64>> {
    let cond = condense(m.size(), |i, j| m.get(i, j) > 0.0);
    if cond.len() != 1 || !cond.components[0].cyclic {
        return None;
    }
    let (_, v) = perron(m.entries(), m.size(), true);
    let total: f64 = v.iter().sum();
    Some(v.into_iter().map(|x| x / total).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralSolution {
    pub scope: Scope,
    pub r: f64,
    /// `s_r` or `s_r(H)`; 0 when subcritical.
    pub root: f64,
    /// `Ψ(s) < 1` already at the probe point: no positive root exists.
    pub subcritical: bool,
    /// `(s, Ψ(s))` pairs evaluated while solving, in evaluation order.
    pub evaluations: Vec<(f64, f64)>,
    /// Left Perron vector at the root (irreducible scopes only).
    pub left_eigenvector: Option<Vec<f64>>,
    /// `(min ξ / max ξ, max ξ / min ξ)` for the left Perron vector.
    pub eigen_ratio_bounds: Option<(f64, f64)>,
}

/// Solves `Ψ(s) = 1` on `scope` by bisection on the strictly decreasing
/// radius function.
pub fn solve_sr(sys: &MarkovSystem, scope: &Scope, r: f64) -> Result<SpectralSolution> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::InvalidArgument(format!("order r = {r} must be positive")));
    }
    let pattern = weight_matrix(sys, scope, r, 0.0);
    if pattern.entries().iter().all(|&b| b == 0.0) {
        return Err(Error::NoCycle);
    }
    let mut evaluations = Vec::new();
    let mut psi = |s: f64| {
        let value = spectral_radius(&weight_matrix(sys, scope, r, s));
        evaluations.push((s, value));
        value
    };

    let (root, subcritical) = if psi(SUBCRITICAL_PROBE) < 1.0 {
        (0.0, true)
    } else {
        let mut hi = 1.0;
        while psi(hi) >= 1.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::NoRoot("radius stays >= 1 up to s = 1e12".into()));
            }
        }
        let lo = if hi > 1.0 { hi / 2.0 } else { SUBCRITICAL_PROBE };
        (bisect_decreasing(&mut psi, 1.0, lo, hi, ROOT_TOL), false)
    };

    let (left_eigenvector, eigen_ratio_bounds) = if subcritical {
        (None, None)
    } else {
        let xi = left_perron_vector(&weight_matrix(sys, scope, r, root));
        let bounds = xi.as_ref().map(|xi| {
            let lo = xi.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xi.iter().copied().fold(0.0, f64::max);
            (lo / hi, hi / lo)
        });
        (xi, bounds)
    };

    Ok(SpectralSolution {
        scope: scope.clone(),
        r,
        root,
        subcritical,
        evaluations,
        left_eigenvector,
        eigen_ratio_bounds,
    })
}

/// Column sums `Σ_j (A_H^h)_{jp}` of the powers of a component's weight
/// matrix at its critical value, with the bounds implied by its left
/// Perron vector.
#[derive(Clone, Debug, Serialize)]
pub struct RowSumTable {
    pub component: Vec<usize>,
    pub s: f64,
    pub xi: Vec<f64>,
    /// `(C1, C2) = (min ξ / max ξ, max ξ / min ξ)`.
    pub bounds: (f64, f64),
    /// `sums[h - 1][p]` for `h = 1..=h_max`, `p` indexing `component`.
    pub sums: Vec<Vec<f64>>,
}

pub fn row_sum_bounds(sys: &MarkovSystem, r: f64, component: &[usize], h_max: usize) -> Result<RowSumTable> {
    let scope = Scope::Component(component.to_vec());
    let solution = solve_sr(sys, &scope, r)?;
    let (Some(xi), Some(bounds)) = (solution.left_eigenvector, solution.eigen_ratio_bounds) else {
        return Err(Error::InvalidArgument(
            "component must be irreducible with a positive critical value".into(),
        ));
    };
    let a = weight_matrix(sys, &scope, r, solution.root);
    let m = a.size();
    let mut power = a.entries().to_vec();
    let mut sums = Vec::with_capacity(h_max);
    for h in 1..=h_max {
        if h > 1 {
            power = (0..m)
                .flat_map(|i| {
                    let power = &power;
                    let a = &a;
                    (0..m).map(move |j| (0..m).map(|q| power[i * m + q] * a.get(q, j)).sum())
                })
                .collect();
        }
        sums.push((0..m).map(|p| (0..m).map(|j| power[j * m + p]).sum()).collect());
    }
    Ok(RowSumTable { component: a.vertices.clone(), s: solution.root, xi, bounds, sums })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fixture_a, fixture_b};

    const GOLDEN: f64 = 1.618_033_988_749_895;

    #[test]
    fn radius_of_small_matrices() {
        let b = 0.3;
        assert!((spectral_radius(&WeightMatrix::from_entries(1, vec![b])) - b).abs() < 1e-15);
        let full = WeightMatrix::from_entries(2, vec![b, b, b, b]);
        assert!((spectral_radius(&full) - 2.0 * b).abs() < 1e-12);
        let golden = WeightMatrix::from_entries(2, vec![b, b, b, 0.0]);
        assert!((spectral_radius(&golden) - b * GOLDEN).abs() < 1e-12);
    }

    #[test]
    fn radius_of_periodic_and_reducible_matrices() {
        let swap = WeightMatrix::from_entries(2, vec![0.0, 0.5, 0.5, 0.0]);
        assert!((spectral_radius(&swap) - 0.5).abs() < 1e-12);
        let triangular = WeightMatrix::from_entries(2, vec![0.2, 5.0, 0.0, 0.7]);
        assert!((spectral_radius(&triangular) - 0.7).abs() < 1e-12);
        let nilpotent = WeightMatrix::from_entries(2, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(spectral_radius(&nilpotent), 0.0);
    }

    #[test]
    fn zero_exponent_gives_adjacency() {
        let m = weight_matrix(&fixture_b(), &Scope::Full, 1.0, 0.0);
        for i in 0..7 {
            for j in 0..7 {
                let expected = if fixture_b().is_edge(i, j) { 1.0 } else { 0.0 };
                assert_eq!(m.get(i, j), expected);
            }
        }
    }

    #[test]
    fn uniform_weight_entries() {
        let s: f64 = 0.7;
        let x = s / (s + 1.0);
        let m = weight_matrix(&fixture_a(), &Scope::Full, 1.0, s);
        for &e in m.entries() {
            assert!((e - (1.0f64 / 6.0).powf(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn cantor_root() {
        let expected = 2f64.ln() / 3f64.ln();
        for r in [1.0, 2.0] {
            let sol = solve_sr(&fixture_a(), &Scope::Full, r).unwrap();
            assert!((sol.root - expected).abs() < 1e-9);
            assert!(!sol.subcritical);
        }
    }

    #[test]
    fn fixture_b_component_roots() {
        let sys = fixture_b();
        let h1 = solve_sr(&sys, &Scope::Component(vec![0, 1]), 1.0).unwrap();
        // independent high-precision bisection of φ (1/6)^{s/(s+1)} = 1
        assert!((h1.root - 0.367_183_770_235_941_74).abs() < 1e-8);
        let k = solve_sr(&sys, &Scope::Component(vec![5, 6]), 1.0).unwrap();
        assert!((k.root - 0.315_464_876_785_728_7).abs() < 1e-8);
        let full = solve_sr(&sys, &Scope::Full, 1.0).unwrap();
        assert!((full.root - h1.root).abs() < 1e-8);

        let m = weight_matrix(&sys, &Scope::Component(vec![0, 1]), 1.0, h1.root);
        let b = 1.0 / GOLDEN;
        assert!((m.get(0, 0) - b).abs() < 1e-5 && (m.get(0, 1) - b).abs() < 1e-5);
        assert!((m.get(1, 0) - b).abs() < 1e-5 && m.get(1, 1) == 0.0);
    }

    #[test]
    fn subcritical_and_empty_scopes() {
        let sys = fixture_b();
        // vertex 5 alone has no edges inside the scope
        assert!(matches!(solve_sr(&sys, &Scope::Component(vec![4]), 1.0), Err(Error::NoCycle)));
        // edge 2 -> 5 without a cycle: radius 0 everywhere
        let sol = solve_sr(&sys, &Scope::Component(vec![1, 4]), 1.0).unwrap();
        assert!(sol.subcritical && sol.root == 0.0);
        assert!(solve_sr(&sys, &Scope::Full, 0.0).is_err());
    }

    #[test]
    fn golden_component_bounds() {
        let table = row_sum_bounds(&fixture_b(), 1.0, &[0, 1], 64).unwrap();
        let b = 1.0 / GOLDEN;
        assert!((table.xi[0] - b).abs() < 1e-5 && (table.xi[1] - (1.0 - b)).abs() < 1e-5);
        assert!((table.bounds.0 - b).abs() < 1e-5);
        assert!((table.bounds.1 - GOLDEN).abs() < 1e-5);
        assert!((table.sums[0][0] - 2.0 * b).abs() < 1e-5);
        for row in &table.sums {
            for &v in row {
                assert!(v >= table.bounds.0 - 1e-9 && v <= table.bounds.1 + 1e-9);
            }
        }
    }

    #[test]
    fn uniform_component_sums_are_one() {
        let table = row_sum_bounds(&fixture_a(), 1.0, &[0, 1], 64).unwrap();
        assert!((table.bounds.0 - 1.0).abs() < 1e-10 && (table.bounds.1 - 1.0).abs() < 1e-10);
        for row in &table.sums {
            for &v in row {
                assert!((v - 1.0).abs() < 1e-10);
            }
        }
        assert!(row_sum_bounds(&fixture_b(), 1.0, &[4], 4).is_err());
    }
}
