//! Constructive solvers behind the local solvability statements.
//!
//! Everything here answers a "can we solve L(h) = g, and by what formula?"
//! question in one of the local models:
//!
//! - at the **origin**, series split into the part V where the Euler operator
//!   E = a·x₁∂₁ + b·x₂∂₂ − β acts invertibly (coefficient-wise division by
//!   the weight defect Aα − β) and the finite stratum W of weight-β
//!   monomials, where P = ∂₁^b − ∂₂^a restricted to strata is onto;
//! - at a **base point** p = (ε, 0) on the singular axis, the shifted Euler
//!   operator E_p = a·t₁∂₁ + a·ε·∂₁ + b·x₂∂₂ − β (t₁ = x₁ − ε) is solved by
//!   a triangular recurrence in the t-expansion, and P is solved class by
//!   class on series of the shape
//!
//!   ```text
//!       h = Σ_{m ≥ 0} h_{k+am} · x₁^{γ_k − bm} · x₂^{k+am},
//!       γ_k = (β − bk)/a,   0 ≤ k < a,
//!   ```
//!
//!   by the one-step relation
//!   h_{k+a(m+1)} = ((γ_k − bm)_b · h_{k+am} − f_{k+am}) / (k+a(m+1))_a,
//!   with (z)_n the descending factorial. The homogeneous solutions of that
//!   relation are exactly the axis Γ-series, which is why the obstruction
//!   number λ_k below measures how much of the divergent φ_{v^k} a particular
//!   solution contains: h − λ_k·φ_{v^k} is the part with lower Gevrey order.
//!
//! All solves are exact over ℚ; only λ_k gets a floating-point variant (it is
//! an infinite sum in general) next to the exact one for finitely supported
//! input.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::linalg;
use crate::rational::Rational;
use crate::series::{ExponentPair, SparseSeries, TruncationSpec};
use crate::weyl::{validate_pair, DiffOperator};

/// A point p = (ε, 0) on the singular axis, ε ≠ 0.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct BasePoint {
    epsilon: Rational,
}

impl BasePoint {
    /// # Panics
    /// Panics if `epsilon` is zero (that is the origin, which has its own
    /// solvers).
    pub fn new(epsilon: Rational) -> Self {
        assert!(!epsilon.is_zero(), "base point requires epsilon != 0");
        BasePoint { epsilon }
    }

    pub fn epsilon(&self) -> &Rational {
        &self.epsilon
    }
}

impl<'de> Deserialize<'de> for BasePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            epsilon: Rational,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.epsilon.is_zero() {
            return Err(serde::de::Error::custom("base point requires epsilon != 0"));
        }
        Ok(BasePoint { epsilon: raw.epsilon })
    }
}

/// One residue class of a series along the axis: the coefficient stream
/// c_m of x₁^{γ_k − bm}·x₂^{k+am}, m = 0, 1, 2, …
///
/// `gamma_k` is the x₁-exponent base — (β−bk)/a for solutions, one b-step
/// lower for the forcing side of P(h) = f. Coefficients beyond the stored
/// prefix are zero (the type carries finitely supported data or an explicit
/// truncation, whichever the producer had).
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ResidueClassSeries {
    pub k: i64,
    pub gamma_k: Rational,
    pub coeffs: Vec<Rational>,
}

impl ResidueClassSeries {
    pub fn new(k: i64, gamma_k: Rational, coeffs: Vec<Rational>) -> Self {
        assert!(k >= 0, "residue class index must be a natural number");
        ResidueClassSeries { k, gamma_k, coeffs }
    }
}

/// Result of the obstruction-number extraction.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct LambdaResult {
    pub k: i64,
    pub lambda: f64,
    /// Number of series terms actually summed.
    pub partial_sum_terms: usize,
    /// Geometric bound on the omitted tail (0 when the summed data visibly
    /// ends; ∞ when no contraction ratio could be observed).
    pub tail_bound: f64,
}

/// Errors from the solver layer.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// An origin-centered operation met an exponent outside ℕ².
    NonNaturalExponent { e: ExponentPair },
    /// Euler inversion met a term of weight exactly β.
    ResonantTerm { e: ExponentPair },
    /// A stratum solve was handed a term off the weight-(β−ab) stratum.
    NotInTargetStratum { e: ExponentPair },
    /// λ-extraction on the resonant class, where (β−bk)/a ∈ ℕ and the
    /// denominators vanish; the re-based series φ_{ṽ} takes over there.
    ResonantClass { k: i64 },
    /// λ-extraction needs a·s < b for its sum to converge.
    NonGevreyInput { a: i64, b: i64, s: Rational },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::NonNaturalExponent { e } => {
                write!(f, "exponent {e} is not a pair of natural numbers")
            }
            SolverError::ResonantTerm { e } => {
                write!(f, "term at {e} has weight exactly beta; the Euler operator is not invertible there")
            }
            SolverError::NotInTargetStratum { e } => {
                write!(f, "term at {e} is off the required weight stratum")
            }
            SolverError::ResonantClass { k } => {
                write!(f, "residue class {k} is resonant ((beta - bk)/a is a natural number)")
            }
            SolverError::NonGevreyInput { a, b, s } => {
                write!(f, "order s = {s} violates the convergence requirement {a}s < {b}")
            }
        }
    }
}

impl std::error::Error for SolverError {}

/// n! as an exact rational; n must be ≥ 0.
fn factorial(n: i64) -> Rational {
    assert!(n >= 0, "factorial of a negative number");
    Rational::from_int(n).falling(n as u32)
}

/// (β − bk)/a, the x₁-exponent base of residue class k.
fn class_exponent_base(a: i64, b: i64, beta: &Rational, k: i64) -> Rational {
    &(beta - &Rational::from_int(b * k)) / &Rational::from_int(a)
}

/// Splits `f` into (v_part, w_part): w_part keeps exactly the monomials of
/// weight a·e1 + b·e2 = β, v_part the rest. The weight-β stratum is finite,
/// so w_part is always a polynomial.
pub fn decompose_vw(
    f: &SparseSeries,
    a: i64,
    b: i64,
    beta: &Rational,
) -> Result<(SparseSeries, SparseSeries), SolverError> {
    validate_pair(a, b).expect("decompose_vw requires a valid pair");
    let mut v_terms = std::collections::BTreeMap::new();
    let mut w_terms = std::collections::BTreeMap::new();
    for (e, c) in f.terms() {
        if !e.is_natural() {
            return Err(SolverError::NonNaturalExponent { e: e.clone() });
        }
        if &e.weight(a, b) == beta {
            w_terms.insert(e.clone(), c.clone());
        } else {
            v_terms.insert(e.clone(), c.clone());
        }
    }
    Ok((
        SparseSeries::from_map_unchecked(f.trunc().clone(), v_terms),
        SparseSeries::from_map_unchecked(f.trunc().clone(), w_terms),
    ))
}

/// Inverts the Euler operator on its automorphism domain: returns f with
/// E(f) = g, coefficient-wise f_α = g_α/(Aα − β). Every term of g must have
/// weight ≠ β.
pub fn invert_e_origin(
    g: &SparseSeries,
    a: i64,
    b: i64,
    beta: &Rational,
) -> Result<SparseSeries, SolverError> {
    validate_pair(a, b).expect("invert_e_origin requires a valid pair");
    let mut terms = std::collections::BTreeMap::new();
    for (e, c) in g.terms() {
        if !e.is_natural() {
            return Err(SolverError::NonNaturalExponent { e: e.clone() });
        }
        let defect = &e.weight(a, b) - beta;
        if defect.is_zero() {
            return Err(SolverError::ResonantTerm { e: e.clone() });
        }
        terms.insert(e.clone(), c / &defect);
    }
    Ok(SparseSeries::from_map_unchecked(g.trunc().clone(), terms))
}

/// The natural-exponent monomials of weight w: {(e1, e2) ∈ ℕ² : a·e1 + b·e2 = w}.
fn stratum_monomials(a: i64, b: i64, w: &Rational) -> Vec<(i64, i64)> {
    let Some(w) = w.to_i64() else {
        return Vec::new();
    };
    if w < 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for e2 in 0..=(w / b) {
        let rest = w - b * e2;
        if rest % a == 0 {
            out.push((rest / a, e2));
        }
    }
    out
}

/// Solves P(g) = h2 with g supported on the weight-β stratum, h2 on the
/// weight-(β−ab) stratum. P is onto between these finite strata, so a
/// solution always exists for valid input.
pub fn surject_p_on_w(
    h2: &SparseSeries,
    a: i64,
    b: i64,
    beta: &Rational,
) -> Result<SparseSeries, SolverError> {
    validate_pair(a, b).expect("surject_p_on_w requires a valid pair");
    let source = stratum_monomials(a, b, beta);
    let target = stratum_monomials(a, b, &(beta - &Rational::from_int(a * b)));
    let row_of = |e: &ExponentPair| -> Option<usize> {
        let (e1, e2) = (e.e1.to_i64()?, e.e2.to_i64()?);
        target.iter().position(|&t| t == (e1, e2))
    };
    let mut rhs = vec![Rational::zero(); target.len()];
    for (e, c) in h2.terms() {
        let Some(row) = row_of(e) else {
            return Err(SolverError::NotInTargetStratum { e: e.clone() });
        };
        rhs[row] = c.clone();
    }
    // P(x^α) = (e1)_b·x^{α−(b,0)} − (e2)_a·x^{α−(0,a)}; the descending
    // factorial vanishes exactly when the shift would leave ℕ².
    let mut rows = vec![vec![Rational::zero(); source.len()]; target.len()];
    for (col, &(e1, e2)) in source.iter().enumerate() {
        let d1 = Rational::from_int(e1).falling(b as u32);
        if !d1.is_zero() {
            let row = target
                .iter()
                .position(|&t| t == (e1 - b, e2))
                .expect("x1-derivative of a stratum monomial stays on the target stratum");
            rows[row][col] = d1;
        }
        let d2 = Rational::from_int(e2).falling(a as u32);
        if !d2.is_zero() {
            let row = target
                .iter()
                .position(|&t| t == (e1, e2 - a))
                .expect("x2-derivative of a stratum monomial stays on the target stratum");
            rows[row][col] -= &d2;
        }
    }
    let x = linalg::solve(&rows, &rhs)
        .expect("the operator is onto between weight strata; valid input is always solvable");
    let n1 = source.iter().map(|&(e1, _)| e1).max().unwrap_or(0);
    let n2 = source.iter().map(|&(_, e2)| e2).max().unwrap_or(0);
    SparseSeries::from_terms(
        TruncationSpec::jet_box(n1, n2),
        source
            .iter()
            .zip(x)
            .map(|(&(e1, e2), c)| (ExponentPair::from_ints(e1, e2), c)),
    )
    .map_err(|_| unreachable!("stratum monomials lie inside their bounding box"))
}

/// The shifted Euler operator E_p = a·t₁∂₁ + a·ε·∂₁ + b·x₂∂₂ − β in the
/// t-expansion at p (the returned operator's first variable is t₁ = x₁ − ε).
pub fn euler_operator_at(a: i64, b: i64, beta: &Rational, p: &BasePoint) -> DiffOperator {
    validate_pair(a, b).expect("euler_operator_at requires a valid pair");
    DiffOperator::from_monomials([
        (Rational::from_int(a), (1, 0), (1, 0)),
        (&Rational::from_int(a) * p.epsilon(), (0, 0), (1, 0)),
        (Rational::from_int(b), (0, 1), (0, 1)),
        (-beta, (0, 0), (0, 0)),
    ])
}

/// Re-expands an origin-centered polynomial around p: x₁^n = (t₁ + ε)^n by
/// the (finite) binomial formula, truncated to `jet`. Natural exponents
/// only — fractional powers have no polynomial t-expansion.
pub fn expand_x1_to_t(
    f: &SparseSeries,
    p: &BasePoint,
    jet: &TruncationSpec,
) -> Result<SparseSeries, SolverError> {
    let TruncationSpec::BoxTrunc { n1, n2 } = *jet else {
        panic!("t-expansion targets a jet box");
    };
    let mut terms = std::collections::BTreeMap::new();
    for (e, c) in f.terms() {
        if !e.is_natural() {
            return Err(SolverError::NonNaturalExponent { e: e.clone() });
        }
        let n = e.e1.to_i64().expect("natural exponent fits i64");
        if e.e2 > Rational::from_int(n2) {
            continue;
        }
        for i in 0..=n.min(n1) {
            // C(n, i)·ε^{n−i}
            let binom = &Rational::from_int(n).falling(i as u32) / &factorial(i);
            let coeff = &(c * &binom) * &p.epsilon().pow((n - i) as i32);
            let cell = ExponentPair::new(Rational::from_int(i), e.e2.clone());
            *terms.entry(cell).or_insert_with(Rational::zero) += &coeff;
        }
    }
    terms.retain(|_, c| !c.is_zero());
    Ok(SparseSeries::from_map_unchecked(jet.clone(), terms))
}

/// Solves E_p(h) = g on a jet box by the triangular recurrence
/// h_{i+1,j} = (g_{ij} − (ai + bj − β)·h_{ij}) / (a·ε·(i+1)) under the gauge
/// h_{0,j} = 0. Both g and h are t-expansions at p; g must certify the box.
pub fn solve_ep_local(
    g: &SparseSeries,
    p: &BasePoint,
    a: i64,
    b: i64,
    beta: &Rational,
    jet: &TruncationSpec,
) -> SparseSeries {
    validate_pair(a, b).expect("solve_ep_local requires a valid pair");
    let TruncationSpec::BoxTrunc { n1, n2 } = *jet else {
        panic!("the local Euler solve targets a jet box");
    };
    if n1 > 0 {
        let TruncationSpec::BoxTrunc { n1: g1, n2: g2 } = *g.trunc() else {
            panic!("the right-hand side must be a box-truncated t-expansion");
        };
        assert!(
            g1 >= n1 - 1 && g2 >= n2,
            "the right-hand side must certify the requested box"
        );
    }
    let mut terms = std::collections::BTreeMap::new();
    for j in 0..=n2 {
        let mut h_prev = Rational::zero(); // gauge h_{0,j} = 0
        for i in 0..n1 {
            let weight = Rational::from_int(a * i + b * j) - beta;
            let g_ij = g.coeff_at(&ExponentPair::from_ints(i, j));
            let step =
                &(&g_ij - &(&weight * &h_prev)) / &(&Rational::from_int(a * (i + 1)) * p.epsilon());
            if !step.is_zero() {
                terms.insert(ExponentPair::from_ints(i + 1, j), step.clone());
            }
            h_prev = step;
        }
    }
    SparseSeries::from_map_unchecked(jet.clone(), terms)
}

/// Solves P(h) = f with E(h) = 0 class by class along the axis, up to ray
/// index `m_max`, by iterating
///
/// ```text
///     h_{k+a(m+1)} = ((γ_k − bm)_b · h_{k+am} − f_{k+am}) / (k+a(m+1))_a.
/// ```
///
/// Each forcing entry must carry exponent base γ_k − b (it lives at parameter
/// β − ab). Seeds are the free initial values h_k, default 0; the divisor is
/// a product of positive integers, so the iteration never breaks down.
/// Classes are independent and solved in parallel.
pub fn solve_p_recurrence(
    forcing: &[ResidueClassSeries],
    a: i64,
    b: i64,
    beta: &Rational,
    m_max: i64,
    seeds: Option<&[Rational]>,
) -> Vec<ResidueClassSeries> {
    validate_pair(a, b).expect("solve_p_recurrence requires a valid pair");
    assert!(m_max >= 0, "ray length must be non-negative");
    if let Some(seeds) = seeds {
        assert_eq!(seeds.len(), forcing.len(), "one seed per forcing class");
    }
    forcing
        .par_iter()
        .enumerate()
        .map(|(idx, f)| {
            assert!((0..a).contains(&f.k), "residue class index must satisfy 0 <= k < a");
            let gamma = class_exponent_base(a, b, beta, f.k);
            assert_eq!(
                f.gamma_k,
                &gamma - &Rational::from_int(b),
                "forcing exponent base must sit one b-step below the solution base"
            );
            let seed = seeds.map_or_else(Rational::zero, |s| s[idx].clone());
            let mut h = Vec::with_capacity(m_max as usize + 1);
            h.push(seed);
            for m in 0..m_max {
                let grow = (&gamma - &Rational::from_int(b * m)).falling(b as u32);
                let f_m = f.coeffs.get(m as usize).cloned().unwrap_or_default();
                let divisor = Rational::from_int(f.k + a * (m + 1)).falling(a as u32);
                let next = &(&(&grow * &h[m as usize]) - &f_m) / &divisor;
                h.push(next);
            }
            ResidueClassSeries { k: f.k, gamma_k: gamma, coeffs: h }
        })
        .collect()
}

/// The closed form of the zero-seed recurrence solution,
///
/// ```text
///     h_{k+a(m+1)} = − (γ_k)_{b(m+1)} / (k+a(m+1))!
///                      · Σ_{r=0}^{m} (k+ar)!/(γ_k)_{b(r+1)} · f_{k+ar},
/// ```
///
/// valid off the resonant class (there the inner denominators vanish). Used
/// as an independent check on the iteration.
pub fn solve_p_recurrence_closed_form(
    f: &ResidueClassSeries,
    a: i64,
    b: i64,
    beta: &Rational,
    m_max: i64,
) -> ResidueClassSeries {
    validate_pair(a, b).expect("closed form requires a valid pair");
    assert!((0..a).contains(&f.k), "residue class index must satisfy 0 <= k < a");
    let gamma = class_exponent_base(a, b, beta, f.k);
    assert!(
        !gamma.is_natural(),
        "the closed form needs a non-resonant class: (beta - bk)/a must not be natural"
    );
    let mut h = vec![Rational::zero()];
    let mut sum = Rational::zero();
    let mut fact_r = factorial(f.k); // (k+ar)! at the current r
    let mut poch = gamma.falling(b as u32); // (γ_k)_{b(r+1)} at the current r
    for m in 0..m_max {
        let f_m = f.coeffs.get(m as usize).cloned().unwrap_or_default();
        sum += &(&(&fact_r * &f_m) / &poch);
        for step in 1..=a {
            fact_r *= &Rational::from_int(f.k + a * m + step);
        }
        h.push(-&(&(&poch * &sum) / &fact_r));
        poch *= &(&gamma - &Rational::from_int(b * (m + 1))).falling(b as u32);
    }
    ResidueClassSeries { k: f.k, gamma_k: gamma, coeffs: h }
}

/// Terms T_r = (k+ar)!·f_{k+ar} / (k!·(γ_k)_{b(r+1)}) of the obstruction sum,
/// exact, for r = 0..n_terms.
fn lambda_terms(
    f: &ResidueClassSeries,
    a: i64,
    b: i64,
    beta: &Rational,
    n_terms: usize,
) -> Result<Vec<Rational>, SolverError> {
    validate_pair(a, b).expect("lambda extraction requires a valid pair");
    assert!((0..a).contains(&f.k), "residue class index must satisfy 0 <= k < a");
    let gamma = class_exponent_base(a, b, beta, f.k);
    if gamma.is_natural() {
        return Err(SolverError::ResonantClass { k: f.k });
    }
    assert_eq!(
        f.gamma_k,
        &gamma - &Rational::from_int(b),
        "the obstruction sum reads the forcing side, based one b-step below the solution"
    );
    let k_fact = factorial(f.k);
    let mut fact = k_fact.clone(); // (k+ar)!
    let mut poch = gamma.falling(b as u32); // (γ_k)_{b(r+1)}
    let mut terms = Vec::with_capacity(n_terms);
    for r in 0..n_terms {
        if r > 0 {
            for step in 1..=a {
                fact *= &Rational::from_int(f.k + a * (r as i64 - 1) + step);
            }
            poch *= &(&gamma - &Rational::from_int(b * r as i64)).falling(b as u32);
        }
        let f_r = f.coeffs.get(r).cloned().unwrap_or_default();
        terms.push(&(&fact * &f_r) / &(&k_fact * &poch));
    }
    Ok(terms)
}

/// The obstruction number λ_k = −Σ_r (k+ar)!·f_{k+ar} / (k!·(γ_k)_{b(r+1)})
/// as a float partial sum with a geometric tail bound.
///
/// The sum converges because a·s < b for the input's Gevrey order s; that
/// inequality is a precondition, checked. Resonant classes are rejected —
/// their denominators vanish, and the re-based φ_{ṽ} machinery replaces this
/// construction there.
pub fn extract_lambda(
    f: &ResidueClassSeries,
    a: i64,
    b: i64,
    beta: &Rational,
    s: &Rational,
    r_max: usize,
) -> Result<LambdaResult, SolverError> {
    if &Rational::from_int(a) * s >= Rational::from_int(b) {
        return Err(SolverError::NonGevreyInput { a, b, s: s.clone() });
    }
    let n_terms = f.coeffs.len().min(r_max + 1);
    let terms = lambda_terms(f, a, b, beta, n_terms)?;
    let floats: Vec<f64> = terms.iter().map(Rational::to_f64).collect();
    let lambda = -floats.iter().sum::<f64>();
    let mags: Vec<f64> = floats.iter().map(|t| t.abs()).collect();
    let tail_bound = match mags.iter().rposition(|&t| t > 0.0) {
        // Nothing was summed, or the data visibly ended in zeros.
        None => 0.0,
        Some(last) if last + 1 < mags.len() => 0.0,
        Some(last) => match mags[..last].iter().rposition(|&t| t > 0.0) {
            Some(prev) => {
                let rho = (mags[last] / mags[prev]).powf(1.0 / (last - prev) as f64);
                if rho < 1.0 {
                    mags[last] * rho / (1.0 - rho)
                } else {
                    f64::INFINITY
                }
            }
            // A single trailing term gives no contraction ratio to certify.
            None => f64::INFINITY,
        },
    };
    Ok(LambdaResult { k: f.k, lambda, partial_sum_terms: n_terms, tail_bound })
}

/// λ_k summed exactly over the full stored support of `f`.
///
/// For finitely supported forcing this is the *exact* obstruction number, and
/// "the recurrence solution minus λ_k·φ_{v^k}" cancels to a polynomial
/// identically — float λ cannot do that once the Γ-coefficients outgrow the
/// 53-bit mantissa.
pub fn extract_lambda_exact(
    f: &ResidueClassSeries,
    a: i64,
    b: i64,
    beta: &Rational,
) -> Result<Rational, SolverError> {
    let terms = lambda_terms(f, a, b, beta, f.coeffs.len())?;
    let mut sum = Rational::zero();
    for t in &terms {
        sum += t;
    }
    Ok(-sum)
}

/// The residue-class data as a genuine two-variable series on its ray:
/// base (γ_k, k), direction (−b, a), certified through the stored length.
pub fn residue_class_to_series(rc: &ResidueClassSeries, a: i64, b: i64) -> SparseSeries {
    validate_pair(a, b).expect("residue_class_to_series requires a valid pair");
    let v = ExponentPair::new(rc.gamma_k.clone(), Rational::from_int(rc.k));
    let u = (-b, a);
    let mut terms = std::collections::BTreeMap::new();
    for (m, c) in rc.coeffs.iter().enumerate() {
        if !c.is_zero() {
            terms.insert(v.add_scaled(u, m as i64), c.clone());
        }
    }
    SparseSeries::from_map_unchecked(
        TruncationSpec::ray(rc.coeffs.len() as i64 - 1, v, u),
        terms,
    )
}
