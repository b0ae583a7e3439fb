//! Γ-series solution families.
//!
//! For coprime 0 < a < b the lattice ker_ℤ(a b) is spanned by (−b, a), and
//! to every starting exponent v with a·v₁ + b·v₂ = β belongs the series
//!
//! ```text
//!     φ_v = Σ_{m ≥ 0} Γ[v; m·u] · x^{v + m·u},
//! ```
//!
//! where Γ[v; u] = (v)_{u₋} / ((v+u)_{u₊} ) is a quotient of descending
//! Pochhammer products (zero when the denominator vanishes). Two choices of
//! starting exponents matter:
//!
//! - the a series v^k = ((β − kb)/a, k), k < a, running along u = (−b, a):
//!   divergent of Gevrey index b/a along x₂ = 0;
//! - the b series v^j = (j, (β − ja)/b), j < b, running along u = (b, −a):
//!   convergent at generic points.
//!
//! When β ∈ aℕ + bℕ exactly one axis series degenerates to a polynomial;
//! the re-based modified series φ_{ṽ} (same coefficient rule, started at the
//! first exponent past the polynomial's support) takes its place in the
//! solution basis. φ_{ṽ} is *not* a solution: P maps it to a single Laurent
//! monomial, which is precisely the obstruction class used downstream.

use num::integer::Integer;
use num::ToPrimitive;

use crate::rational::Rational;
use crate::series::{ExponentPair, SparseSeries, TruncationSpec};
use crate::weyl::{validate_pair, WeylError};

/// Descending double product (z)_α = Π_i Π_{j < α_i} (z_i − j); empty = 1.
///
/// Panics if a component of `alpha` is negative.
pub fn pochhammer(z: &ExponentPair, alpha: (i64, i64)) -> Rational {
    assert!(alpha.0 >= 0 && alpha.1 >= 0, "pochhammer needs natural exponents");
    &z.e1.falling(alpha.0 as u32) * &z.e2.falling(alpha.1 as u32)
}

/// Γ[v; u] = (v)_{u₋} / ((v+u)_{u₊}, with the convention that a vanishing
/// denominator yields 0.
pub fn gamma_coeff(v: &ExponentPair, u: (i64, i64)) -> Rational {
    let u_minus = ((-u.0).max(0), (-u.1).max(0));
    let u_plus = (u.0.max(0), u.1.max(0));
    let den = pochhammer(&v.add_scaled(u, 1), u_plus);
    if den.is_zero() {
        return Rational::zero();
    }
    &pochhammer(v, u_minus) / &den
}

/// Data determining one truncated Γ-series: start v, lattice direction u,
/// and ray length m (inclusive).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GammaSeriesSpec {
    pub v: ExponentPair,
    pub u: (i64, i64),
    pub m: i64,
}

impl GammaSeriesSpec {
    /// Caller guarantees a·v₁ + b·v₂ = β and a·u₁ + b·u₂ = 0 for the system
    /// the series is meant to solve; the builders below derive both.
    pub fn new(v: ExponentPair, u: (i64, i64), m: i64) -> Self {
        GammaSeriesSpec { v, u, m }
    }

    /// The k-th series along the singular axis: v = ((β − kb)/a, k),
    /// u = (−b, a).
    pub fn axis(a: i64, b: i64, beta: &Rational, k: i64, m: i64) -> Result<Self, WeylError> {
        validate_pair(a, b)?;
        assert!((0..a).contains(&k), "axis family index must satisfy 0 <= k < a");
        let v1 = &(beta - &Rational::from_int(k * b)) / &Rational::from_int(a);
        Ok(GammaSeriesSpec::new(
            ExponentPair::new(v1, Rational::from_int(k)),
            (-b, a),
            m,
        ))
    }

    /// The j-th generic-point series: v = (j, (β − ja)/b), u = (b, −a).
    pub fn generic(a: i64, b: i64, beta: &Rational, j: i64, m: i64) -> Result<Self, WeylError> {
        validate_pair(a, b)?;
        assert!((0..b).contains(&j), "generic family index must satisfy 0 <= j < b");
        let v2 = &(beta - &Rational::from_int(j * a)) / &Rational::from_int(b);
        Ok(GammaSeriesSpec::new(
            ExponentPair::new(Rational::from_int(j), v2),
            (b, -a),
            m,
        ))
    }
}

/// The b generic-point starting exponents v^j = (j, (β − ja)/b).
pub fn exponents_generic(a: i64, b: i64, beta: &Rational) -> Result<Vec<ExponentPair>, WeylError> {
    validate_pair(a, b)?;
    Ok((0..b)
        .map(|j| {
            let v2 = &(beta - &Rational::from_int(j * a)) / &Rational::from_int(b);
            ExponentPair::new(Rational::from_int(j), v2)
        })
        .collect())
}

/// The a axis starting exponents v^k = ((β − kb)/a, k).
pub fn exponents_along_y(a: i64, b: i64, beta: &Rational) -> Result<Vec<ExponentPair>, WeylError> {
    validate_pair(a, b)?;
    Ok((0..a)
        .map(|k| {
            let v1 = &(beta - &Rational::from_int(k * b)) / &Rational::from_int(a);
            ExponentPair::new(v1, Rational::from_int(k))
        })
        .collect())
}

/// Builds the truncated Γ-series of `spec`: coefficient Γ[v; m·u] at
/// exponent v + m·u for m = 0..=M.
///
/// Coefficients are produced incrementally: both Pochhammer products extend
/// by a fixed block of new factors per step, so the whole ray costs
/// O(M·(|u₁|+|u₂|)) bignum multiplications instead of O(M²).
pub fn build_gamma_series(spec: &GammaSeriesSpec) -> SparseSeries {
    let mut terms = std::collections::BTreeMap::new();
    for (m, c) in gamma_ray_coefficients(&spec.v, spec.u, spec.m) {
        if !c.is_zero() {
            terms.insert(spec.v.add_scaled(spec.u, m), c);
        }
    }
    SparseSeries::from_map_unchecked(
        TruncationSpec::ray(spec.m, spec.v.clone(), spec.u),
        terms,
    )
}

/// (m, Γ[v; m·u]) for m = 0..=M, computed incrementally.
fn gamma_ray_coefficients(
    v: &ExponentPair,
    u: (i64, i64),
    m_max: i64,
) -> Vec<(i64, Rational)> {
    let mut out = Vec::new();
    if m_max < 0 {
        return out;
    }
    // Numerator factors: for coords with uᵢ < 0, descending from vᵢ.
    // Denominator factors: for coords with uᵢ > 0, ascending from vᵢ + 1.
    // Each step m → m+1 appends |uᵢ| new factors per coordinate.
    let mut num = Rational::one();
    let mut den = Rational::one();
    let mut num_hit_zero = false;
    let mut den_hit_zero = false;
    let coords = [(v.e1.clone(), u.0), (v.e2.clone(), u.1)];
    // Positions already consumed per coordinate.
    let mut num_used = [0i64, 0i64];
    let mut den_used = [0i64, 0i64];
    for m in 0..=m_max {
        if m > 0 {
            for (i, (vi, ui)) in coords.iter().enumerate() {
                if *ui < 0 {
                    for _ in 0..(-ui) {
                        let f = vi - &Rational::from_int(num_used[i]);
                        num_hit_zero |= f.is_zero();
                        num *= &f;
                        num_used[i] += 1;
                    }
                } else if *ui > 0 {
                    for _ in 0..*ui {
                        let f = vi + &Rational::from_int(den_used[i] + 1);
                        den_hit_zero |= f.is_zero();
                        den *= &f;
                        den_used[i] += 1;
                    }
                }
            }
        }
        let c = if den_hit_zero || num_hit_zero {
            Rational::zero()
        } else {
            &num / &den
        };
        out.push((m, c));
    }
    out
}

/// The resonant integer data attached to β ∈ aℕ + bℕ.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ResonanceData {
    /// The unique class 0 ≤ q < a with (β − qb)/a ∈ ℕ.
    pub q: i64,
    /// m₀ = (β − qb)/a.
    pub m0: i64,
    /// Least natural number with b·m′ ≥ m₀ + 1.
    pub mprime: i64,
    /// The re-based start ṽ = (m₀ − b·m′, q + a·m′).
    pub vtilde: ExponentPair,
}

/// Resonance test: Some(data) iff β ∈ aℕ + bℕ.
///
/// Coprimality makes the witness class unique: at most one q ∈ [0, a) has
/// β ≡ qb (mod a) at all, and the extra requirement (β − qb)/a ≥ 0 decides
/// membership. Panics on an invalid (a, b) pair.
pub fn resonance_data(a: i64, b: i64, beta: &Rational) -> Option<ResonanceData> {
    validate_pair(a, b).expect("resonance_data requires a valid pair");
    for q in 0..a {
        let m0r = &(beta - &Rational::from_int(q * b)) / &Rational::from_int(a);
        if m0r.is_natural() {
            let m0 = m0r.to_i64().expect("small natural");
            let mprime = (m0 + b) / b; // = ceil((m0 + 1)/b)
            let vtilde = ExponentPair::from_ints(m0 - b * mprime, q + a * mprime);
            return Some(ResonanceData { q, m0, mprime, vtilde });
        }
    }
    None
}

/// Outcome of the minimal-negative-support scan.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MinimalSupportReport {
    /// No scanned lattice translate v + m·u has negative support strictly
    /// contained in that of v.
    pub minimal: bool,
    /// Largest |m| examined.
    pub search_bound: i64,
    /// True when the requested bound was smaller than the stabilization
    /// point, i.e. the verdict rests on an incomplete scan. With the default
    /// bound this is false for every input whose stabilization point fits.
    pub bound_hit: bool,
}

/// Negative support of an exponent pair: which coordinates are negative
/// integers.
fn negative_support(w: &ExponentPair) -> (bool, bool) {
    let neg_int = |r: &Rational| r.is_integer() && r.is_negative();
    (neg_int(&w.e1), neg_int(&w.e2))
}

fn strictly_contained(inner: (bool, bool), outer: (bool, bool)) -> bool {
    let subset = (!inner.0 || outer.0) && (!inner.1 || outer.1);
    subset && inner != outer
}

/// Does v have minimal negative support along the lattice ℤ·u?
///
/// The negative-support pattern of v + m·u is eventually constant in each
/// direction (once |m·uᵢ| outgrows |vᵢ| the sign is decided by uᵢ), so the
/// scan is complete once |m| reaches that stabilization point. `bound`
/// defaults to 10·max(|u₁|, |u₂|); the effective bound is the smaller of the
/// request and the stabilization point, and `bound_hit` reports when the
/// request truncated a still-changing scan.
pub fn minimal_negative_support(
    v: &ExponentPair,
    u: (i64, i64),
    bound: Option<i64>,
) -> MinimalSupportReport {
    assert!(u != (0, 0), "lattice direction must be nonzero");
    let requested = bound.unwrap_or_else(|| 10 * u.0.abs().max(u.1.abs()));
    // Stabilization point: beyond it every pattern repeats one of the two
    // limit patterns, which are themselves attained at the boundary.
    let stab = [(&v.e1, u.0), (&v.e2, u.1)]
        .iter()
        .filter(|(_, ui)| *ui != 0)
        .map(|(vi, ui)| {
            let ratio = &vi.abs() / &Rational::from_int(ui.abs());
            ratio.numer().div_ceil(ratio.denom()).to_i64().unwrap_or(i64::MAX / 2) + 1
        })
        .max()
        .expect("u is nonzero");
    let effective = requested.min(stab);
    let base = negative_support(v);
    let mut minimal = true;
    if base != (false, false) {
        for m in -effective..=effective {
            if m == 0 {
                continue;
            }
            if strictly_contained(negative_support(&v.add_scaled(u, m)), base) {
                minimal = false;
                break;
            }
        }
    }
    MinimalSupportReport {
        minimal,
        search_bound: effective,
        bound_hit: requested < stab,
    }
}

/// The modified series φ_{ṽ}: the Γ-series restarted at ṽ = v^q + m′·u with
/// the same coefficient rule, truncated at ray length M. It satisfies
/// E(φ_{ṽ}) = 0 but P(φ_{ṽ}) is a single Laurent monomial, not zero.
pub fn build_vtilde_series(
    rd: &ResonanceData,
    a: i64,
    b: i64,
    beta: &Rational,
    m: i64,
) -> SparseSeries {
    debug_assert_eq!(
        &rd.vtilde.weight(a, b),
        beta,
        "resonance data does not match the system parameters"
    );
    build_gamma_series(&GammaSeriesSpec::new(rd.vtilde.clone(), (-b, a), m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weyl::hypergeometric_ops;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn ep(e1: &str, e2: &str) -> ExponentPair {
        ExponentPair::new(r(e1), r(e2))
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(&ep("7", "-2/3"), (0, 0)), r("1"));
        assert_eq!(pochhammer(&ep("5", "0"), (2, 0)), r("20"));
        assert_eq!(pochhammer(&ep("1/4", "7"), (3, 0)), r("21/64"));
        assert_eq!(pochhammer(&ep("2", "3"), (1, 2)), r("12"));
    }

    #[test]
    fn gamma_coeff_examples() {
        assert_eq!(gamma_coeff(&ep("9", "-4"), (0, 0)), r("1"));
        // (1/4)₃ / (2)₂ = (21/64)/2.
        assert_eq!(gamma_coeff(&ep("1/4", "0"), (-3, 2)), r("21/128"));
        // Numerator contains the factor (4 − 4) = 0 while the denominator
        // survives: the coefficient vanishes.
        assert_eq!(gamma_coeff(&ep("4", "0"), (-6, 4)), r("0"));
    }

    #[test]
    fn starting_exponent_families() {
        let gen = exponents_generic(1, 2, &r("5")).unwrap();
        assert_eq!(gen, vec![ep("0", "5/2"), ep("1", "2")]);
        let gen23 = exponents_generic(2, 3, &r("0")).unwrap();
        assert_eq!(gen23, vec![ep("0", "0"), ep("1", "-2/3"), ep("2", "-4/3")]);
        let axis = exponents_along_y(2, 3, &r("1/2")).unwrap();
        assert_eq!(axis, vec![ep("1/4", "0"), ep("-5/4", "1")]);
        assert_eq!(exponents_along_y(1, 2, &r("-7/3")).unwrap(), vec![ep("-7/3", "0")]);
        // Defining identity a·v₁ + b·v₂ = β for every member.
        for v in exponents_generic(2, 3, &r("1/2")).unwrap() {
            assert_eq!(v.weight(2, 3), r("1/2"));
        }
        for v in exponents_along_y(2, 3, &r("1/2")).unwrap() {
            assert_eq!(v.weight(2, 3), r("1/2"));
        }
        assert!(exponents_generic(2, 4, &r("1")).is_err());
    }

    #[test]
    fn gamma_series_small_axis_example() {
        // v = (1/4, 0), u = (−3, 2), M = 1: 1·x₁^{1/4} + (21/128)·x₁^{-11/4}x₂².
        let spec = GammaSeriesSpec::axis(2, 3, &r("1/2"), 0, 1).unwrap();
        assert_eq!(spec.v, ep("1/4", "0"));
        assert_eq!(spec.u, (-3, 2));
        let f = build_gamma_series(&spec);
        assert_eq!(f.num_terms(), 2);
        assert_eq!(f.coeff_at(&ep("1/4", "0")), r("1"));
        assert_eq!(f.coeff_at(&ep("-11/4", "2")), r("21/128"));
    }

    #[test]
    fn resonant_axis_series_is_polynomial() {
        let spec = GammaSeriesSpec::axis(2, 3, &r("8"), 0, 50).unwrap();
        let f = build_gamma_series(&spec);
        // x₁⁴ + 12·x₁x₂² and nothing else: every m ≥ 2 coefficient vanishes.
        assert_eq!(f.num_terms(), 2);
        assert_eq!(f.coeff_at(&ep("4", "0")), r("1"));
        assert_eq!(f.coeff_at(&ep("1", "2")), r("12"));
        // The m = 0 coefficient is 1 for every family.
        let g = build_gamma_series(&GammaSeriesSpec::generic(2, 3, &r("8"), 1, 3).unwrap());
        assert_eq!(g.coeff_at(&ep("1", "2")), r("1"));
        // The other axis class stays infinite: all coefficients nonzero.
        let h = build_gamma_series(&GammaSeriesSpec::axis(2, 3, &r("8"), 1, 20).unwrap());
        assert_eq!(h.num_terms(), 21);
    }

    #[test]
    fn gamma_series_solve_the_system() {
        for beta in ["1/2", "8"] {
            let (p, e) = hypergeometric_ops(2, 3, &r(beta)).unwrap();
            for k in 0..2 {
                let f = build_gamma_series(
                    &GammaSeriesSpec::axis(2, 3, &r(beta), k, 12).unwrap(),
                );
                assert!(p.apply(&f).is_zero(), "P·axis[{k}] beta={beta}");
                assert!(e.apply(&f).is_zero(), "E·axis[{k}] beta={beta}");
            }
            for j in 0..3 {
                let f = build_gamma_series(
                    &GammaSeriesSpec::generic(2, 3, &r(beta), j, 12).unwrap(),
                );
                assert!(p.apply(&f).is_zero(), "P·generic[{j}] beta={beta}");
                assert!(e.apply(&f).is_zero(), "E·generic[{j}] beta={beta}");
            }
        }
    }

    #[test]
    fn incremental_coefficients_match_direct_formula() {
        for (v, u) in [
            (ep("1/4", "0"), (-3i64, 2i64)),
            (ep("-5/4", "1"), (-3, 2)),
            (ep("1", "-1/6"), (3, -2)),
            (ep("4", "0"), (-3, 2)),
        ] {
            for (m, c) in gamma_ray_coefficients(&v, u, 12) {
                assert_eq!(c, gamma_coeff(&v, (m * u.0, m * u.1)), "at m={m}");
            }
        }
    }

    #[test]
    fn resonance_detection() {
        let rd = resonance_data(2, 3, &r("8")).unwrap();
        assert_eq!(rd.q, 0);
        assert_eq!(rd.m0, 4);
        assert_eq!(rd.mprime, 2);
        assert_eq!(rd.vtilde, ep("-2", "4"));
        assert!(resonance_data(2, 3, &r("1/2")).is_none());
        // 1 is not a natural combination of 2 and 3.
        assert!(resonance_data(2, 3, &r("1")).is_none());
        assert!(resonance_data(2, 3, &r("-4")).is_none());
        // 2 = 2·1 + 3·0.
        let rd2 = resonance_data(2, 3, &r("2")).unwrap();
        assert_eq!((rd2.q, rd2.m0, rd2.mprime), (0, 1, 1));
    }

    #[test]
    fn minimal_support_scan() {
        let rep = minimal_negative_support(&ep("1/4", "0"), (-3, 2), None);
        assert!(rep.minimal && !rep.bound_hit);
        // ṽ for (2,3,8): shifting by m = −2 reaches (4, 0), whose negative
        // support is empty — strictly smaller.
        let rep = minimal_negative_support(&ep("-2", "4"), (-3, 2), None);
        assert!(!rep.minimal && !rep.bound_hit);
        let rep = minimal_negative_support(&ep("4", "0"), (-3, 2), None);
        assert!(rep.minimal && !rep.bound_hit);
        // A drop at |m| = 3 is invisible to a bound-1 scan, and the report
        // says so.
        let far = ep("-9", "6");
        let tight = minimal_negative_support(&far, (-3, 2), Some(1));
        assert!(tight.minimal && tight.bound_hit);
        let full = minimal_negative_support(&far, (-3, 2), None);
        assert!(!full.minimal && !full.bound_hit);
        assert!(full.search_bound >= 3);
    }

    #[test]
    fn vtilde_series_obstruction_shape() {
        // A = (2 3), β = 8.
        let rd = resonance_data(2, 3, &r("8")).unwrap();
        let phi = build_vtilde_series(&rd, 2, 3, &r("8"), 40);
        assert_eq!(phi.coeff_at(&ep("-2", "4")), r("1"));
        let (p, e) = hypergeometric_ops(2, 3, &r("8")).unwrap();
        assert!(e.apply(&phi).is_zero());
        let pphi = p.apply(&phi);
        // Exactly one Laurent monomial, at x₁⁻²x₂², inside the certified
        // region: the whole infinite tail cancels.
        assert_eq!(pphi.num_terms(), 1);
        assert_eq!(pphi.coeff_at(&ep("-2", "2")), r("-12"));
        assert!(pphi.within_truncation(&ep("-2", "2")));

        // A = (1 2), β = 5: same structure, single monomial −3·x₁⁻¹x₂².
        let rd = resonance_data(1, 2, &r("5")).unwrap();
        assert_eq!(rd.vtilde, ep("-1", "3"));
        let phi = build_vtilde_series(&rd, 1, 2, &r("5"), 40);
        let (p, e) = hypergeometric_ops(1, 2, &r("5")).unwrap();
        assert!(e.apply(&phi).is_zero());
        let pphi = p.apply(&phi);
        assert_eq!(pphi.num_terms(), 1);
        assert_eq!(pphi.coeff_at(&ep("-1", "2")), r("-3"));
    }
}
