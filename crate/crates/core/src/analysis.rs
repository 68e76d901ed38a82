//! Structural analysis of a system at one order `r`: components, their
//! critical values, the critical set and the predicted error exponents.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{critical_structure, enumerate_chains, scc_condensation, CriticalStructure};
use crate::model::MarkovSystem;
use crate::spectral::{solve_sr, Scope};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct ComponentReport {
    /// 1-based component label `H<id>`.
    pub id: usize,
    /// 1-based vertices.
    pub vertices: Vec<usize>,
    pub cyclic: bool,
    /// `s_r(H)`; 0 for acyclic or subcritical components.
    pub s_r: f64,
    pub subcritical: bool,
    pub critical: bool,
    /// `(C1, C2)` from the left Perron vector at `s_r(H)`.
    pub eigen_ratio_bounds: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub r: f64,
    pub vertices: usize,
    pub components: Vec<ComponentReport>,
    /// Condensation edges between 1-based component ids.
    pub condensation_edges: Vec<(usize, usize)>,
    pub topo_order: Vec<usize>,
    pub s_r: f64,
    /// Root of `Ψ(s) = 1` on the whole matrix; agrees with `s_r`.
    pub s_r_global: f64,
    pub root_tolerance: f64,
    pub critical: Vec<usize>,
    pub m_r: usize,
    pub t_r: usize,
    /// 1-based transient vertices.
    pub transient: Vec<usize>,
    /// Chains of critical components per length `1..=M_r`, 1-based ids.
    pub chains: Vec<Vec<Vec<usize>>>,
    /// `−r/s_r`
    pub power_exponent: f64,
    /// `(T_r − 1)(1 + r/s_r)`
    pub log_exponent: f64,
    #[serde(skip)]
    pub structure: CriticalStructure,
}

/// Runs the per-component and global root solves and assembles the
/// critical structure.
pub fn analyze(sys: &MarkovSystem, r: f64) -> Result<AnalysisReport> {
    let cond = scc_condensation(sys);
    let mut per_component = Vec::with_capacity(cond.len());
    let mut components = Vec::with_capacity(cond.len());
    for (id, comp) in cond.components.iter().enumerate() {
        let (s, subcritical, bounds) = if comp.cyclic {
            let sol = solve_sr(sys, &Scope::Component(comp.vertices.clone()), r)?;
            (sol.root, sol.subcritical, sol.eigen_ratio_bounds)
        } else {
            (0.0, false, None)
        };
        per_component.push(s);
        components.push(ComponentReport {
            id: id + 1,
            vertices: comp.vertices.iter().map(|v| v + 1).collect(),
            cyclic: comp.cyclic,
            s_r: s,
            subcritical,
            critical: false,
            eigen_ratio_bounds: bounds,
        });
    }
    let cs = critical_structure(&cond, r, &per_component)?;
    if cs.m_r == 0 {
        return Err(Error::NoRoot("no component has a positive critical value".into()));
    }
    for &c in &cs.critical {
        components[c].critical = true;
    }
    let global = solve_sr(sys, &Scope::Full, r)?;
    let chains = (1..=cs.m_r)
        .map(|l| {
            enumerate_chains(&cs, l).map(|chains| {
                chains.into_iter().map(|ch| ch.into_iter().map(|c| c + 1).collect()).collect()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        r,
        vertices: sys.n_vertices(),
        components,
        condensation_edges: cond.dag_edges.iter().map(|&(a, b)| (a + 1, b + 1)).collect(),
        topo_order: cond.topo_order.iter().map(|c| c + 1).collect(),
        s_r: cs.s_r,
        s_r_global: global.root,
        root_tolerance: crate::spectral::ROOT_TOL,
        critical: cs.critical.iter().map(|c| c + 1).collect(),
        m_r: cs.m_r,
        t_r: cs.t_r,
        transient: cs.transient.iter().map(|v| v + 1).collect(),
        chains,
        power_exponent: -r / cs.s_r,
        log_exponent: crate::antichain::log_exponent(&cs),
        structure: cs,
    })
}
