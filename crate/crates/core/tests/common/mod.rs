#![allow(dead_code)]

use markov_quant::model::Number;
use markov_quant::MarkovSystem;
use proptest::prelude::*;

/// Row-stochastic system on `n` vertices with out-degree >= 2. When
/// `feasible`, every row of ratios sums below 1.
pub fn system(n_range: std::ops::RangeInclusive<usize>, feasible: bool) -> impl Strategy<Value = MarkovSystem> {
    n_range.prop_flat_map(move |n| {
        let row = (proptest::collection::vec(any::<bool>(), n), proptest::collection::vec(0.05f64..1.0, n),
                   proptest::collection::vec(0.02f64..0.45, n));
        (proptest::collection::vec(row, n), proptest::collection::vec(0.1f64..1.0, n)).prop_map(move |(rows, chi)| {
            let mut edges = Vec::new();
            for (i, (mask, pw, cw)) in rows.into_iter().enumerate() {
                let mut support: Vec<usize> = (0..n).filter(|&j| mask[j]).collect();
                for j in [i, (i + 1) % n] {
                    if support.len() < 2 && !support.contains(&j) {
                        support.push(j);
                    }
                }
                support.sort_unstable();
                let total: f64 = support.iter().map(|&j| pw[j]).sum();
                let c_total: f64 = support.iter().map(|&j| cw[j]).sum();
                let shrink = if feasible && c_total >= 0.9 { 0.9 / c_total } else { 1.0 };
                for &j in &support {
                    edges.push((i, j, Number::from_f64(pw[j] / total), Number::from_f64(cw[j] * shrink)));
                }
            }
            let chi_total: f64 = chi.iter().sum();
            let chi = chi.iter().map(|x| Number::from_f64(x / chi_total)).collect();
            MarkovSystem::from_edges(n, edges, chi).unwrap()
        })
    })
}

/// Every admissible word of length `len` (0-based letters).
pub fn words_of_length(sys: &MarkovSystem, len: usize) -> Vec<Vec<usize>> {
    let n = sys.n_vertices();
    let mut words: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    for _ in 1..len {
        words = words
            .into_iter()
            .flat_map(|w| {
                let last = *w.last().unwrap();
                (0..n).filter(move |&j| sys.p(last, j) > 0.0).map(move |j| {
                    let mut next = w.clone();
                    next.push(j);
                    next
                })
            })
            .collect();
    }
    words
}

/// `(p_σ, c_σ)` by direct products along the word.
pub fn direct_weight(sys: &MarkovSystem, w: &[usize]) -> (f64, f64) {
    w.windows(2).fold((1.0, 1.0), |(p, c), e| (p * sys.p(e[0], e[1]), c * sys.c(e[0], e[1])))
}

pub fn eta_lower(sys: &MarkovSystem, r: f64) -> f64 {
    let n = sys.n_vertices();
    let mut p_min = f64::INFINITY;
    let mut c_min = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if sys.p(i, j) > 0.0 {
                p_min = p_min.min(sys.p(i, j));
                c_min = c_min.min(sys.c(i, j));
            }
        }
    }
    p_min * c_min.powf(r)
}

/// Strictly below, with equality up to rounding counted as a tie.
fn below(weight: f64, t: f64) -> bool {
    weight < t * (1.0 - 1e-12)
}

/// `Λ_{k,r}` by plain depth-first search with direct float products: a word
/// is kept when its weight is below `η̲^k` and its parent's is not.
pub fn brute_antichain(sys: &MarkovSystem, r: f64, k: u32) -> Vec<Vec<usize>> {
    let threshold = eta_lower(sys, r).powi(k as i32);
    let n = sys.n_vertices();
    let mut out = Vec::new();
    fn walk(sys: &MarkovSystem, r: f64, t: f64, w: &mut Vec<usize>, weight: f64, out: &mut Vec<Vec<usize>>) {
        if below(weight, t) {
            out.push(w.clone());
            return;
        }
        let last = *w.last().unwrap();
        for j in 0..sys.n_vertices() {
            if sys.p(last, j) > 0.0 {
                w.push(j);
                walk(sys, r, t, w, weight * sys.p(last, j) * sys.c(last, j).powf(r), out);
                w.pop();
            }
        }
    }
    for v in 0..n {
        walk(sys, r, threshold, &mut vec![v], 1.0, &mut out);
    }
    out
}

/// Count of `Λ_{k,r}` by the same search, without storing words.
pub fn brute_phi(sys: &MarkovSystem, r: f64, k: u32) -> (u64, usize, usize) {
    let threshold = eta_lower(sys, r).powi(k as i32);
    fn walk(sys: &MarkovSystem, r: f64, t: f64, v: usize, len: usize, weight: f64, acc: &mut (u64, usize, usize)) {
        if below(weight, t) {
            acc.0 += 1;
            acc.1 = acc.1.min(len);
            acc.2 = acc.2.max(len);
            return;
        }
        for j in 0..sys.n_vertices() {
            if sys.p(v, j) > 0.0 {
                walk(sys, r, t, j, len + 1, weight * sys.p(v, j) * sys.c(v, j).powf(r), acc);
            }
        }
    }
    let mut acc = (0, usize::MAX, 0);
    for v in 0..sys.n_vertices() {
        walk(sys, r, threshold, v, 1, 1.0, &mut acc);
    }
    acc
}
