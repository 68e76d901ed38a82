//! The Markov-type measure model: transition matrix, ratio matrix, initial
//! distribution, admissible words and their cylinder weights.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance for row-stochasticity and normalization checks.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// A model coefficient. Inputs given as fractions or decimal strings keep an
/// exact rational alongside the floating-point view.
#[derive(Clone, Debug, PartialEq)]
pub struct Number {
    exact: Option<BigRational>,
    value: f64,
}

impl Number {
    pub fn from_f64(value: f64) -> Self {
        Number { exact: None, value }
    }

    pub fn from_rational(q: BigRational) -> Self {
        let value = rational_to_f64(&q);
        Number { exact: Some(q), value }
    }

    pub fn zero() -> Self {
        Number::from_rational(BigRational::zero())
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    pub fn is_positive(&self) -> bool {
        match &self.exact {
            Some(q) => q.is_positive(),
            None => self.value > 0.0,
        }
    }

    /// Equality used for grouping edges into weight classes.
    fn same_as(&self, other: &Number) -> bool {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => self.value.to_bits() == other.value.to_bits(),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Some(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            None => write!(f, "{}", self.value),
        }
    }
}

impl FromStr for Number {
    type Err = Error;

    /// Accepts `a/b`, integers and decimals with an optional exponent.
    fn from_str(s: &str) -> Result<Self> {
        parse_rational(s.trim())
            .map(Number::from_rational)
            .ok_or_else(|| Error::ParseNumber(s.to_string()))
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_rational(num.trim())?;
        let den = parse_rational(den.trim())?;
        if den.is_zero() {
            return None;
        }
        return Some(num / den);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|ch| ch.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let q = if scale >= 0 {
        BigRational::from_integer(numer * Pow::pow(&ten, scale as u32))
    } else {
        BigRational::new(numer, Pow::pow(&ten, scale.unsigned_abs()))
    };
    Some(q)
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Order parameter `r` as an exact non-negative integer when it is one.
pub(crate) fn integer_order(r: f64) -> Option<u32> {
    (r.fract() == 0.0 && (1.0..=64.0).contains(&r)).then_some(r as u32)
}

/// The model: `n` vertices, transition probabilities `p`, contraction
/// ratios `c` and the initial distribution `chi`. Vertices are 0-based in
/// the API; reports and config files use 1-based labels.
#[derive(Clone, Debug)]
pub struct MarkovSystem {
    n: usize,
    p: Vec<Number>,
    c: Vec<Number>,
    chi: Vec<Number>,
    successors: Vec<Vec<usize>>,
}

impl MarkovSystem {
    /// Builds a system from row-major `n x n` matrices. Only shapes are
    /// checked here; use [`validate_system`] for the model invariants.
    pub fn new(n: usize, p: Vec<Number>, c: Vec<Number>, chi: Vec<Number>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Shape("system needs at least one vertex".into()));
        }
        if p.len() != n * n || c.len() != n * n {
            return Err(Error::Shape(format!(
                "expected {n}x{n} matrices, got {} and {} entries",
                p.len(),
                c.len()
            )));
        }
        if chi.len() != n {
            return Err(Error::Shape(format!("chi has {} entries, expected {n}", chi.len())));
        }
        let successors = (0..n)
            .map(|i| (0..n).filter(|&j| p[i * n + j].is_positive()).collect())
            .collect();
        Ok(MarkovSystem { n, p, c, chi, successors })
    }

    /// Builds a system from an edge list `(from, to, p, c)` with 0-based
    /// vertices; missing pairs get `p = c = 0`.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, Number, Number)>,
        chi: Vec<Number>,
    ) -> Result<Self> {
        let mut p = vec![Number::zero(); n * n];
        let mut c = vec![Number::zero(); n * n];
        let mut seen = vec![false; n * n];
        for (from, to, pv, cv) in edges {
            for v in [from, to] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v + 1, n });
                }
            }
            if std::mem::replace(&mut seen[from * n + to], true) {
                return Err(Error::Config(format!(
                    "duplicate edge {} -> {}",
                    from + 1,
                    to + 1
                )));
            }
            p[from * n + to] = pv;
            c[from * n + to] = cv;
        }
        MarkovSystem::new(n, p, c, chi)
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j].value
    }

    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.n + j].value
    }

    pub fn chi(&self, i: usize) -> f64 {
        self.chi[i].value
    }

    pub fn p_number(&self, i: usize, j: usize) -> &Number {
        &self.p[i * self.n + j]
    }

    pub fn c_number(&self, i: usize, j: usize) -> &Number {
        &self.c[i * self.n + j]
    }

    pub fn chi_number(&self, i: usize) -> &Number {
        &self.chi[i]
    }

    pub fn is_edge(&self, i: usize, j: usize) -> bool {
        self.p[i * self.n + j].is_positive()
    }

    /// True when every coefficient carries an exact rational.
    pub fn is_exact(&self) -> bool {
        self.p.iter().chain(&self.c).chain(&self.chi).all(|x| x.exact.is_some())
    }

    /// Edges as `(from, to)` pairs in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.successors
            .iter()
            .enumerate()
            .flat_map(|(i, succ)| succ.iter().map(move |&j| (i, j)))
    }

    /// Ascending successors of `i` (0-based).
    pub fn successors(&self, i: usize) -> Result<&[usize]> {
        self.successors
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::VertexOutOfRange { vertex: i + 1, n: self.n })
    }

    pub(crate) fn successor_lists(&self) -> &[Vec<usize>] {
        &self.successors
    }

    /// Checks that `word` is an admissible path.
    pub fn check_word(&self, word: &Word) -> Result<()> {
        for &v in word.as_slice() {
            if v >= self.n {
                return Err(Error::VertexOutOfRange { vertex: v + 1, n: self.n });
            }
        }
        for pair in word.as_slice().windows(2) {
            if !self.is_edge(pair[0], pair[1]) {
                return Err(Error::InvalidWord {
                    word: word.to_string(),
                    from: pair[0] + 1,
                    to: pair[1] + 1,
                });
            }
        }
        Ok(())
    }

    /// `p_σ`, `c_σ` and the cylinder mass `χ_{σ_1} p_σ`. The empty word has
    /// unit weights and full mass.
    pub fn path_weight(&self, word: &Word) -> Result<PathWeight> {
        self.check_word(word)?;
        let w = word.as_slice();
        let (mut p, mut c) = (1.0, 1.0);
        for pair in w.windows(2) {
            p *= self.p(pair[0], pair[1]);
            c *= self.c(pair[0], pair[1]);
        }
        let measure = match w.first() {
            Some(&first) => self.chi(first) * p,
            None => 1.0,
        };
        Ok(PathWeight { p_weight: p, c_weight: c, measure_weight: measure })
    }

    /// Exact counterpart of [`path_weight`](Self::path_weight); `None` when
    /// the system is not exact.
    pub fn path_weight_exact(&self, word: &Word) -> Result<Option<ExactPathWeight>> {
        self.check_word(word)?;
        if !self.is_exact() {
            return Ok(None);
        }
        let w = word.as_slice();
        let mut p = BigRational::one();
        let mut c = BigRational::one();
        for pair in w.windows(2) {
            p *= self.p_number(pair[0], pair[1]).exact.clone().unwrap();
            c *= self.c_number(pair[0], pair[1]).exact.clone().unwrap();
        }
        let measure = match w.first() {
            Some(&first) => self.chi[first].exact.clone().unwrap() * &p,
            None => BigRational::one(),
        };
        Ok(Some(ExactPathWeight { p_weight: p, c_weight: c, measure_weight: measure }))
    }

    /// `(η̲_r, η̄_r)` with minima and maxima of `p` and `c` taken separately
    /// over edges.
    pub fn eta_bounds(&self, r: f64) -> EtaBounds {
        let mut b = EtaBounds {
            p_min: f64::INFINITY,
            c_min: f64::INFINITY,
            p_max: 0.0,
            c_max: 0.0,
            lower: 0.0,
            upper: 0.0,
        };
        for (i, j) in self.edges() {
            b.p_min = b.p_min.min(self.p(i, j));
            b.p_max = b.p_max.max(self.p(i, j));
            b.c_min = b.c_min.min(self.c(i, j));
            b.c_max = b.c_max.max(self.c(i, j));
        }
        b.lower = b.p_min * b.c_min.powf(r);
        b.upper = b.p_max * b.c_max.powf(r);
        b
    }

    /// Exact `η̲_r` for exact systems and integer `r`.
    pub fn eta_lower_exact(&self, r: f64) -> Option<BigRational> {
        let r = integer_order(r)?;
        if !self.is_exact() {
            return None;
        }
        let mut p_min: Option<&BigRational> = None;
        let mut c_min: Option<&BigRational> = None;
        for (i, j) in self.edges() {
            let p = self.p_number(i, j).exact.as_ref()?;
            let c = self.c_number(i, j).exact.as_ref()?;
            if p_min.is_none_or(|m| p < m) {
                p_min = Some(p);
            }
            if c_min.is_none_or(|m| c < m) {
                c_min = Some(c);
            }
        }
        Some(p_min?.clone() * Pow::pow(c_min?, r))
    }

    /// Groups edges by their `(p, c)` pair. Returns the distinct classes and
    /// a row-major map from edge to class index.
    pub fn edge_classes(&self) -> (Vec<EdgeClass>, Vec<Option<usize>>) {
        let mut classes: Vec<EdgeClass> = Vec::new();
        let mut class_of = vec![None; self.n * self.n];
        for (i, j) in self.edges() {
            let (p, c) = (self.p_number(i, j), self.c_number(i, j));
            let idx = match classes.iter().position(|k| k.p.same_as(p) && k.c.same_as(c)) {
                Some(idx) => idx,
                None => {
                    classes.push(EdgeClass { p: p.clone(), c: c.clone() });
                    classes.len() - 1
                }
            };
            class_of[i * self.n + j] = Some(idx);
        }
        (classes, class_of)
    }
}

/// A distinct `(p, c)` pair shared by one or more edges.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeClass {
    pub p: Number,
    pub c: Number,
}

impl EdgeClass {
    /// `p c^r` exactly, for exact coefficients and integer `r`.
    pub fn weight_exact(&self, r: f64) -> Option<BigRational> {
        let r = integer_order(r)?;
        Some(self.p.exact()?.clone() * Pow::pow(self.c.exact()?, r))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathWeight {
    pub p_weight: f64,
    pub c_weight: f64,
    pub measure_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactPathWeight {
    pub p_weight: BigRational,
    pub c_weight: BigRational,
    pub measure_weight: BigRational,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EtaBounds {
    pub p_min: f64,
    pub c_min: f64,
    pub p_max: f64,
    pub c_max: f64,
    /// `p_min * c_min^r`
    pub lower: f64,
    /// `p_max * c_max^r`
    pub upper: f64,
}

/// A finite word over the vertex alphabet (0-based entries). Displayed with
/// 1-based labels.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(entries: Vec<usize>) -> Self {
        Word(entries)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// From 1-based labels. Panics on a zero label.
    pub fn from_labels(labels: &[usize]) -> Self {
        Word(labels.iter().map(|&l| l.checked_sub(1).expect("labels are 1-based")).collect())
    }

    pub fn labels(&self) -> Vec<usize> {
        self.0.iter().map(|v| v + 1).collect()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `σ⁻`: the word with its last letter removed.
    pub fn parent(&self) -> Word {
        let mut v = self.0.clone();
        v.pop();
        Word(v)
    }

    /// `σ ∗ ω`; the caller is responsible for admissibility of the seam.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "θ");
        }
        let parts: Vec<String> = self.0.iter().map(|v| (v + 1).to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ProbabilityRange { row: usize, col: usize, value: f64 },
    RatioRange { row: usize, col: usize, value: f64 },
    SupportMismatch { row: usize, col: usize },
    RowSum { row: usize, sum: f64 },
    OutDegree { row: usize, degree: usize },
    ChiNonPositive { index: usize, value: f64 },
    ChiSum { sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ProbabilityRange { row, col, value } => {
                write!(f, "p[{row},{col}] = {value} is not in [0, 1]")
            }
            Violation::RatioRange { row, col, value } => {
                write!(f, "c[{row},{col}] = {value} is not in [0, 1)")
            }
            Violation::SupportMismatch { row, col } => {
                write!(f, "entry ({row},{col}): c > 0 must hold exactly when p > 0")
            }
            Violation::RowSum { row, sum } => write!(f, "row {row} sums to {sum}"),
            Violation::OutDegree { row, degree } => {
                write!(f, "row {row} has out-degree {degree} < 2")
            }
            Violation::ChiNonPositive { index, value } => {
                write!(f, "chi[{index}] = {value} is not positive")
            }
            Violation::ChiSum { sum } => write!(f, "chi sums to {sum}"),
        }
    }
}

/// Outcome of [`validate_system`]. Indices in violations are 1-based.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn sum_numbers<'a>(items: impl Iterator<Item = &'a Number> + Clone) -> f64 {
    if items.clone().all(|x| x.exact.is_some()) {
        let total = items.fold(BigRational::zero(), |acc, x| acc + x.exact.as_ref().unwrap());
        rational_to_f64(&total)
    } else {
        items.map(|x| x.value).sum()
    }
}

/// Checks every model invariant and lists the violations.
pub fn validate_system(sys: &MarkovSystem) -> ValidationReport {
    let n = sys.n;
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (p, c) = (sys.p(i, j), sys.c(i, j));
            if !(0.0..=1.0).contains(&p) {
                violations.push(Violation::ProbabilityRange { row: i + 1, col: j + 1, value: p });
            }
            if !(0.0..1.0).contains(&c) {
                violations.push(Violation::RatioRange { row: i + 1, col: j + 1, value: c });
            }
            if sys.p_number(i, j).is_positive() != sys.c_number(i, j).is_positive() {
                violations.push(Violation::SupportMismatch { row: i + 1, col: j + 1 });
            }
        }
        let sum = sum_numbers(sys.p[i * n..(i + 1) * n].iter());
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            violations.push(Violation::RowSum { row: i + 1, sum });
        }
        let degree = sys.successors[i].len();
        if degree < 2 {
            violations.push(Violation::OutDegree { row: i + 1, degree });
        }
    }
    for (i, chi) in sys.chi.iter().enumerate() {
        if !chi.is_positive() {
            violations.push(Violation::ChiNonPositive { index: i + 1, value: chi.value });
        }
    }
    let sum = sum_numbers(sys.chi.iter());
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        violations.push(Violation::ChiSum { sum });
    }
    ValidationReport { violations }
}
