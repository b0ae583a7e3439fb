//! Sparse two-variable series with truncation metadata.
//!
//! A [`SparseSeries`] stores finitely many monomials c·x₁^{e1}x₂^{e2} with
//! exact rational coefficients *and* exponents (Γ-series have fractional
//! x₁-exponents). The [`TruncationSpec`] records which coefficients are
//! actually determined:
//!
//! - `BoxTrunc(N1, N2)`: a jet — every coefficient with natural exponents
//!   e1 ≤ N1, e2 ≤ N2 is known exactly.
//! - `RayTrunc(M)` with ray data (v, u): the series lives on the lattice
//!   translate v + ℤ·u and coefficients are known for indices 0 ≤ m ≤ M.
//!
//! Operations that can corrupt boundary cells (operator application, linear
//! combination of different truncations) shrink the region and drop the
//! corrupted terms rather than report a value that depends on unknown data.
//! That rule is what makes the exact annihilation checks downstream
//! trustworthy: a reported coefficient is always fully determined by the
//! inputs' known regions.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational::Rational;

/// Exponent of a monomial x₁^{e1}·x₂^{e2}. Both entries may be fractional.
///
/// The derived ordering (lexicographic in (e1, e2)) is the canonical term
/// order used for iteration and serialization.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExponentPair {
    pub e1: Rational,
    pub e2: Rational,
}

impl ExponentPair {
    pub fn new(e1: Rational, e2: Rational) -> Self {
        ExponentPair { e1, e2 }
    }

    pub fn from_ints(e1: i64, e2: i64) -> Self {
        ExponentPair::new(Rational::from_int(e1), Rational::from_int(e2))
    }

    /// `self + m·u` for an integer lattice vector u.
    pub fn add_scaled(&self, u: (i64, i64), m: i64) -> Self {
        ExponentPair::new(
            &self.e1 + &Rational::from_int(m * u.0),
            &self.e2 + &Rational::from_int(m * u.1),
        )
    }

    /// The weight a·e1 + b·e2 (written Aα for α = self).
    pub fn weight(&self, a: i64, b: i64) -> Rational {
        &(&self.e1 * &Rational::from_int(a)) + &(&self.e2 * &Rational::from_int(b))
    }

    /// Both exponents natural numbers (0, 1, 2, …)?
    pub fn is_natural(&self) -> bool {
        self.e1.is_natural() && self.e2.is_natural()
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.e1, self.e2)
    }
}

impl fmt::Debug for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.e1, self.e2)
    }
}

/// Which coefficients of a series are determined.
///
/// Negative `m`/`n1`/`n2` mean "nothing is guaranteed" — the empty region.
/// They arise from shrinking a minimal region, not from user input.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TruncationSpec {
    /// Known along the ray {v + m·u : 0 ≤ m ≤ M}. The support may extend to
    /// finitely many other ℤu-translates (sums of ray families); only the
    /// primary ray is certified by `within_truncation`.
    RayTrunc { m: i64, v: ExponentPair, u: (i64, i64) },
    /// Known on the jet box 0 ≤ e1 ≤ n1, 0 ≤ e2 ≤ n2 (natural exponents).
    BoxTrunc { n1: i64, n2: i64 },
}

impl TruncationSpec {
    pub fn ray(m: i64, v: ExponentPair, u: (i64, i64)) -> Self {
        assert!(u != (0, 0), "ray direction must be nonzero");
        TruncationSpec::RayTrunc { m, v, u }
    }

    pub fn jet_box(n1: i64, n2: i64) -> Self {
        TruncationSpec::BoxTrunc { n1, n2 }
    }

    /// The ray index m with `e = v + m·u`, if `e` lies on the primary ray
    /// lattice (any integer m, inside the truncation or not).
    pub fn ray_index_of(&self, e: &ExponentPair) -> Option<i64> {
        let TruncationSpec::RayTrunc { v, u, .. } = self else {
            return None;
        };
        ray_step_between(v, e, *u)
    }

    /// Is the coefficient at `e` guaranteed by this spec?
    pub fn contains(&self, e: &ExponentPair) -> bool {
        match self {
            TruncationSpec::BoxTrunc { n1, n2 } => {
                e.is_natural()
                    && e.e1 <= Rational::from_int(*n1)
                    && e.e2 <= Rational::from_int(*n2)
            }
            TruncationSpec::RayTrunc { m, .. } => {
                matches!(self.ray_index_of(e), Some(i) if 0 <= i && i <= *m)
            }
        }
    }

    /// May a stored term legally sit at `e` under this spec?
    ///
    /// Box series: exactly the certified cells. Ray series: certified primary
    /// cells, plus any off-lattice exponent — a ray series may carry exact
    /// terms on finitely many other ℤu-cosets (sums of ray families), but on
    /// the primary lattice its support must stay inside 0 ≤ m ≤ M, because
    /// operator application treats primary cells below the base as known
    /// zeros of the underlying full series.
    fn admits_term(&self, e: &ExponentPair) -> bool {
        match self {
            TruncationSpec::BoxTrunc { .. } => self.contains(e),
            TruncationSpec::RayTrunc { m, .. } => match self.ray_index_of(e) {
                Some(i) => 0 <= i && i <= *m,
                None => true,
            },
        }
    }
}

/// Integer t with `to = from + t·u`, when it exists.
fn ray_step_between(from: &ExponentPair, to: &ExponentPair, u: (i64, i64)) -> Option<i64> {
    let d1 = &to.e1 - &from.e1;
    let d2 = &to.e2 - &from.e2;
    let t = if u.0 != 0 {
        (&d1 / &Rational::from_int(u.0)).to_i64()?
    } else {
        (&d2 / &Rational::from_int(u.1)).to_i64()?
    };
    (d1 == Rational::from_int(t * u.0) && d2 == Rational::from_int(t * u.1)).then_some(t)
}

/// Errors from series construction and combination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeriesError {
    /// Linear combination of series whose truncation specs cannot be
    /// reconciled (box vs ray, different ray directions, bases not integer
    /// translates, or terms off the primary lattice).
    IncompatibleTruncation(String),
    /// A term violates the truncation invariant (box series with fractional,
    /// negative, or out-of-box exponents), or a decoded term list contains a
    /// duplicate exponent or an explicit zero coefficient.
    InvalidTerm(String),
}

impl fmt::Display for SeriesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesError::IncompatibleTruncation(why) => {
                write!(f, "incompatible truncations: {why}")
            }
            SeriesError::InvalidTerm(why) => write!(f, "invalid series term: {why}"),
        }
    }
}

impl std::error::Error for SeriesError {}

/// Finitely many exactly-known monomials plus the region they certify.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SparseSeries {
    terms: BTreeMap<ExponentPair, Rational>,
    trunc: TruncationSpec,
}

impl SparseSeries {
    /// The zero series with the given truncation.
    pub fn new(trunc: TruncationSpec) -> Self {
        SparseSeries { terms: BTreeMap::new(), trunc }
    }

    /// Builds a series from (exponent, coefficient) pairs. Zero coefficients
    /// are dropped; duplicate exponents are summed. Box truncations reject
    /// terms outside the box or with non-natural exponents; ray truncations
    /// reject primary-lattice terms outside indices 0..=M.
    pub fn from_terms(
        trunc: TruncationSpec,
        terms: impl IntoIterator<Item = (ExponentPair, Rational)>,
    ) -> Result<Self, SeriesError> {
        let mut map: BTreeMap<ExponentPair, Rational> = BTreeMap::new();
        for (e, c) in terms {
            if !trunc.admits_term(&e) {
                return Err(SeriesError::InvalidTerm(format!(
                    "exponent {e} outside the truncated support region"
                )));
            }
            let entry = map.entry(e).or_insert_with(Rational::zero);
            *entry += &c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(SparseSeries { terms: map, trunc })
    }

    /// Internal constructor for callers that have already enforced the
    /// truncation invariants (operator application, Γ-series builders).
    pub(crate) fn from_map_unchecked(
        trunc: TruncationSpec,
        mut terms: BTreeMap<ExponentPair, Rational>,
    ) -> Self {
        terms.retain(|_, c| !c.is_zero());
        SparseSeries { terms, trunc }
    }

    pub fn trunc(&self) -> &TruncationSpec {
        &self.trunc
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentPair, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Stored coefficient at `e`, or 0. Never errors: callers that need to
    /// distinguish "known zero" from "outside the truncation" ask
    /// [`SparseSeries::within_truncation`] first.
    pub fn coeff_at(&self, e: &ExponentPair) -> Rational {
        self.terms.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    /// Is the coefficient at `e` certified exact by the truncation?
    pub fn within_truncation(&self, e: &ExponentPair) -> bool {
        self.trunc.contains(e)
    }

    /// The ray metadata of a ray-truncated series.
    pub fn ray_meta(&self) -> Option<RayMeta> {
        match &self.trunc {
            TruncationSpec::RayTrunc { v, u, .. } => {
                Some(RayMeta { v: v.clone(), u: *u })
            }
            TruncationSpec::BoxTrunc { .. } => None,
        }
    }

    /// Coefficients along `meta`'s ray: entry m is the coefficient at
    /// v + m·u, collected for as long as that cell stays inside the
    /// truncation (zeros included).
    pub fn ray_coefficients(&self, meta: &RayMeta) -> Vec<Rational> {
        let mut out = Vec::new();
        let mut m = 0;
        loop {
            let e = meta.v.add_scaled(meta.u, m);
            if !self.trunc.contains(&e) {
                break;
            }
            out.push(self.coeff_at(&e));
            m += 1;
        }
        out
    }

    /// `c · self`.
    pub fn scale(&self, c: &Rational) -> SparseSeries {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            for (e, v) in &self.terms {
                terms.insert(e.clone(), c * v);
            }
        }
        SparseSeries { terms, trunc: self.trunc.clone() }
    }

    /// Double-precision copy (same truncation).
    pub fn to_float(&self) -> FloatSeries {
        FloatSeries {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.to_f64())).collect(),
            trunc: self.trunc.clone(),
        }
    }
}

/// Ray lattice data (base exponent and integer direction) for coefficient
/// extraction, independent of any one series' truncation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RayMeta {
    pub v: ExponentPair,
    pub u: (i64, i64),
}

/// Exact linear combination Σ cᵢ·fᵢ.
///
/// All inputs must carry reconcilable truncations: identical boxes shrink to
/// their intersection; rays must share the direction u and have bases that
/// are integer u-translates of each other, and every input term must lie on
/// that common lattice. The result's known region is the intersection of the
/// inputs' regions; terms outside it are dropped (their sum would depend on
/// unknown coefficients of the shorter inputs).
pub fn linear_combine(pairs: &[(Rational, &SparseSeries)]) -> Result<SparseSeries, SeriesError> {
    let Some(((_, first), rest)) = pairs.split_first() else {
        return Err(SeriesError::IncompatibleTruncation("empty combination".into()));
    };

    match first.trunc.clone() {
        TruncationSpec::BoxTrunc { mut n1, mut n2 } => {
            for (_, f) in rest {
                match f.trunc {
                    TruncationSpec::BoxTrunc { n1: m1, n2: m2 } => {
                        n1 = n1.min(m1);
                        n2 = n2.min(m2);
                    }
                    TruncationSpec::RayTrunc { .. } => {
                        return Err(SeriesError::IncompatibleTruncation(
                            "cannot combine box- and ray-truncated series".into(),
                        ));
                    }
                }
            }
            let trunc = TruncationSpec::jet_box(n1, n2);
            let mut terms: BTreeMap<ExponentPair, Rational> = BTreeMap::new();
            for (c, f) in pairs {
                for (e, v) in &f.terms {
                    if trunc.contains(e) {
                        *terms.entry(e.clone()).or_insert_with(Rational::zero) += &(c * v);
                    }
                }
            }
            Ok(SparseSeries::from_map_unchecked(trunc, terms))
        }
        TruncationSpec::RayTrunc { m: m0, v: v0, u } => {
            // Express every base as v0 + tᵢ·u, then re-base at the smallest
            // index so all inputs sit on one indexed lattice.
            let mut shifts = vec![0i64];
            let mut t_min = 0i64;
            let mut frontier = m0; // in v0-indexing
            for (_, f) in rest {
                let TruncationSpec::RayTrunc { m, v, u: u2 } = &f.trunc else {
                    return Err(SeriesError::IncompatibleTruncation(
                        "cannot combine ray- and box-truncated series".into(),
                    ));
                };
                if *u2 != u {
                    return Err(SeriesError::IncompatibleTruncation(format!(
                        "ray directions differ: {u:?} vs {u2:?}"
                    )));
                }
                let Some(t) = ray_step_between(&v0, v, u) else {
                    return Err(SeriesError::IncompatibleTruncation(format!(
                        "ray bases {v0} and {v} are not integer translates along {u:?}"
                    )));
                };
                shifts.push(t);
                t_min = t_min.min(t);
                frontier = frontier.min(t + m);
            }
            let base = v0.add_scaled(u, t_min);
            let trunc = TruncationSpec::ray(frontier - t_min, base, u);
            let mut terms: BTreeMap<ExponentPair, Rational> = BTreeMap::new();
            for (c, f) in pairs {
                for (e, val) in &f.terms {
                    match ray_step_between(&v0, e, u) {
                        Some(t) if t_min <= t && t <= frontier => {
                            *terms.entry(e.clone()).or_insert_with(Rational::zero) += &(c * val);
                        }
                        Some(_) => {} // beyond the common frontier: dropped
                        None => {
                            return Err(SeriesError::IncompatibleTruncation(format!(
                                "term at {e} is off the combination lattice"
                            )));
                        }
                    }
                }
            }
            Ok(SparseSeries::from_map_unchecked(trunc, terms))
        }
    }
}

/// Same monomial layout with double-precision coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct FloatSeries {
    terms: BTreeMap<ExponentPair, f64>,
    trunc: TruncationSpec,
}

impl FloatSeries {
    pub fn new(trunc: TruncationSpec) -> Self {
        FloatSeries { terms: BTreeMap::new(), trunc }
    }

    pub fn from_terms(
        trunc: TruncationSpec,
        terms: impl IntoIterator<Item = (ExponentPair, f64)>,
    ) -> Self {
        let mut map = BTreeMap::new();
        for (e, c) in terms {
            if c != 0.0 {
                map.insert(e, c);
            }
        }
        FloatSeries { terms: map, trunc }
    }

    pub fn trunc(&self) -> &TruncationSpec {
        &self.trunc
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentPair, &f64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff_at(&self, e: &ExponentPair) -> f64 {
        self.terms.get(e).copied().unwrap_or(0.0)
    }

    pub fn within_truncation(&self, e: &ExponentPair) -> bool {
        self.trunc.contains(e)
    }
}

// ── JSON interchange ────────────────────────────────────────────────────
//
// A series serializes as {"trunc": {...}, "terms": [{"e1","e2","c"}, ...]}
// with exact fraction strings for exponents and rational coefficients, terms
// in canonical exponent order. Decoding rejects duplicate exponents and
// explicit zeros, so decode∘encode is the identity and encode∘decode is too.

#[derive(Serialize, Deserialize)]
struct TermRecord {
    e1: Rational,
    e2: Rational,
    c: Rational,
}

#[derive(Serialize, Deserialize)]
struct SeriesRecord {
    trunc: TruncationSpec,
    terms: Vec<TermRecord>,
}

impl Serialize for SparseSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rec = SeriesRecord {
            trunc: self.trunc.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermRecord { e1: e.e1.clone(), e2: e.e2.clone(), c: c.clone() })
                .collect(),
        };
        rec.serialize(serializer)
    }
}

/// The derived truncation decode skips [`TruncationSpec::ray`]'s constructor,
/// so its invariant has to be restated here; a zero direction would divide by
/// zero inside the lattice arithmetic.
fn check_decoded_trunc<E: serde::de::Error>(trunc: &TruncationSpec) -> Result<(), E> {
    if let TruncationSpec::RayTrunc { u: (0, 0), .. } = trunc {
        return Err(E::custom("ray direction must be nonzero"));
    }
    Ok(())
}

impl<'de> Deserialize<'de> for SparseSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rec = SeriesRecord::deserialize(deserializer)?;
        check_decoded_trunc(&rec.trunc)?;
        let mut terms = BTreeMap::new();
        for t in rec.terms {
            if t.c.is_zero() {
                return Err(D::Error::custom("explicit zero coefficient in series terms"));
            }
            let e = ExponentPair::new(t.e1, t.e2);
            if !rec.trunc.admits_term(&e) {
                return Err(D::Error::custom(format!(
                    "term exponent {e} outside the truncated support region"
                )));
            }
            if terms.insert(e.clone(), t.c).is_some() {
                return Err(D::Error::custom(format!("duplicate term exponent {e}")));
            }
        }
        Ok(SparseSeries { terms, trunc: rec.trunc })
    }
}

#[derive(Serialize, Deserialize)]
struct FloatTermRecord {
    e1: Rational,
    e2: Rational,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct FloatSeriesRecord {
    trunc: TruncationSpec,
    terms: Vec<FloatTermRecord>,
}

impl Serialize for FloatSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rec = FloatSeriesRecord {
            trunc: self.trunc.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| FloatTermRecord { e1: e.e1.clone(), e2: e.e2.clone(), c: *c })
                .collect(),
        };
        rec.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FloatSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rec = FloatSeriesRecord::deserialize(deserializer)?;
        check_decoded_trunc(&rec.trunc)?;
        let mut terms = BTreeMap::new();
        for t in rec.terms {
            if !t.c.is_finite() {
                return Err(D::Error::custom("non-finite coefficient in float series"));
            }
            let e = ExponentPair::new(t.e1, t.e2);
            if terms.insert(e, t.c).is_some() {
                return Err(D::Error::custom("duplicate term exponent"));
            }
        }
        Ok(FloatSeries { terms, trunc: rec.trunc })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn e(e1: i64, e2: i64) -> ExponentPair {
        ExponentPair::from_ints(e1, e2)
    }

    #[test]
    fn coeff_at_zero_series_is_zero() {
        let f = SparseSeries::new(TruncationSpec::jet_box(5, 5));
        assert_eq!(f.coeff_at(&e(2, 1)), Rational::zero());
    }

    #[test]
    fn coeff_at_is_a_plain_lookup() {
        let f = SparseSeries::from_terms(
            TruncationSpec::jet_box(5, 5),
            [(e(2, 1), Rational::one())],
        )
        .unwrap();
        assert_eq!(f.coeff_at(&e(2, 1)), Rational::one());
        // 2x₁ + x₂ at (1,0) → 2.
        let g = SparseSeries::from_terms(
            TruncationSpec::jet_box(5, 5),
            [(e(1, 0), Rational::from_int(2)), (e(0, 1), Rational::one())],
        )
        .unwrap();
        assert_eq!(g.coeff_at(&e(1, 0)), Rational::from_int(2));
        // Outside the truncation: still just 0, never an error.
        assert_eq!(g.coeff_at(&e(9, 9)), Rational::zero());
    }

    #[test]
    fn within_truncation_box() {
        let t = TruncationSpec::jet_box(5, 5);
        assert!(t.contains(&e(3, 2)));
        assert!(!t.contains(&e(6, 0)));
        assert!(!t.contains(&e(-1, 0)));
        assert!(!t.contains(&ExponentPair::new(r("1/2"), r("0"))));
    }

    #[test]
    fn within_truncation_ray() {
        // Ray with v = (1/4, 0), u = (−3, 2), M = 10: v + 1·u is inside.
        let v = ExponentPair::new(r("1/4"), r("0"));
        let t = TruncationSpec::ray(10, v.clone(), (-3, 2));
        assert!(t.contains(&ExponentPair::new(r("-11/4"), r("2"))));
        assert!(t.contains(&v));
        // Negative index: off the known segment.
        assert!(!t.contains(&ExponentPair::new(r("13/4"), r("-2"))));
        // Beyond M.
        assert!(!t.contains(&v.add_scaled((-3, 2), 11)));
        // Off-lattice.
        assert!(!t.contains(&e(0, 0)));
    }

    #[test]
    fn from_terms_merges_and_drops_zeros() {
        let f = SparseSeries::from_terms(
            TruncationSpec::jet_box(5, 5),
            [
                (e(1, 1), Rational::from_int(2)),
                (e(1, 1), Rational::from_int(-2)),
                (e(0, 0), Rational::one()),
            ],
        )
        .unwrap();
        assert_eq!(f.num_terms(), 1);
        assert_eq!(f.coeff_at(&e(0, 0)), Rational::one());
    }

    #[test]
    fn from_terms_rejects_out_of_box() {
        let res = SparseSeries::from_terms(
            TruncationSpec::jet_box(2, 2),
            [(e(3, 0), Rational::one())],
        );
        assert!(matches!(res, Err(SeriesError::InvalidTerm(_))));
    }

    #[test]
    fn from_terms_ray_support_rules() {
        let v = e(6, 0);
        let u = (-3, 2);
        // Primary-lattice term below the base: rejected (the base is the
        // start of the underlying one-sided family).
        let below = SparseSeries::from_terms(
            TruncationSpec::ray(4, v.clone(), u),
            [(v.add_scaled(u, -1), Rational::one())],
        );
        assert!(matches!(below, Err(SeriesError::InvalidTerm(_))));
        // Beyond the frontier: rejected.
        let beyond = SparseSeries::from_terms(
            TruncationSpec::ray(4, v.clone(), u),
            [(v.add_scaled(u, 5), Rational::one())],
        );
        assert!(matches!(beyond, Err(SeriesError::InvalidTerm(_))));
        // Off-lattice terms are allowed: sums of ray families share one spec.
        let off = SparseSeries::from_terms(
            TruncationSpec::ray(4, v.clone(), u),
            [(v.clone(), Rational::one()), (e(5, 0), Rational::one())],
        );
        assert!(off.is_ok());
    }

    #[test]
    fn linear_combine_is_bilinear_on_boxes() {
        let f = SparseSeries::from_terms(
            TruncationSpec::jet_box(4, 4),
            [(e(1, 0), r("2")), (e(0, 1), r("1"))],
        )
        .unwrap();
        let g = SparseSeries::from_terms(
            TruncationSpec::jet_box(4, 4),
            [(e(1, 0), r("-2")), (e(2, 2), r("7"))],
        )
        .unwrap();
        let h = linear_combine(&[(r("1"), &f), (r("1"), &g)]).unwrap();
        assert_eq!(h.coeff_at(&e(1, 0)), Rational::zero());
        assert_eq!(h.coeff_at(&e(0, 1)), Rational::one());
        assert_eq!(h.coeff_at(&e(2, 2)), r("7"));
        // Identity and annihilation.
        assert_eq!(linear_combine(&[(r("1"), &f)]).unwrap(), f);
        assert!(linear_combine(&[(r("0"), &f)]).unwrap().is_zero());
    }

    #[test]
    fn linear_combine_rays_rebases_and_trims() {
        let v = e(4, 0);
        let u = (-3, 2);
        // f known through index 3, g based one step down, known through 1.
        let f = SparseSeries::from_terms(
            TruncationSpec::ray(3, v.clone(), u),
            (0..=3).map(|m| (v.add_scaled(u, m), Rational::from_int(m + 1))),
        )
        .unwrap();
        let g = SparseSeries::from_terms(
            TruncationSpec::ray(1, v.add_scaled(u, 1), u),
            [(v.add_scaled(u, 1), r("10")), (v.add_scaled(u, 2), r("20"))],
        )
        .unwrap();
        let h = linear_combine(&[(r("1"), &f), (r("1"), &g)]).unwrap();
        // Common knowledge: indices 0..=2 (g certifies nothing at index 3).
        assert_eq!(
            h.trunc(),
            &TruncationSpec::ray(2, v.clone(), u)
        );
        assert_eq!(h.coeff_at(&v.add_scaled(u, 1)), r("12"));
        assert_eq!(h.coeff_at(&v.add_scaled(u, 2)), r("23"));
        assert_eq!(h.coeff_at(&v.add_scaled(u, 3)), Rational::zero());
        assert!(!h.within_truncation(&v.add_scaled(u, 3)));
    }

    #[test]
    fn linear_combine_rejects_mismatches() {
        let f = SparseSeries::new(TruncationSpec::jet_box(4, 4));
        let g = SparseSeries::new(TruncationSpec::ray(4, e(0, 0), (-3, 2)));
        assert!(matches!(
            linear_combine(&[(r("1"), &f), (r("1"), &g)]),
            Err(SeriesError::IncompatibleTruncation(_))
        ));
        let h = SparseSeries::new(TruncationSpec::ray(4, e(0, 0), (3, -2)));
        assert!(matches!(
            linear_combine(&[(r("1"), &g), (r("1"), &h)]),
            Err(SeriesError::IncompatibleTruncation(_))
        ));
        // Bases not integer translates.
        let k = SparseSeries::new(TruncationSpec::ray(4, e(1, 0), (-3, 2)));
        assert!(matches!(
            linear_combine(&[(r("1"), &g), (r("1"), &k)]),
            Err(SeriesError::IncompatibleTruncation(_))
        ));
    }

    #[test]
    fn ray_coefficients_includes_interior_zeros() {
        let v = e(6, 0);
        let u = (-3, 2);
        let f = SparseSeries::from_terms(
            TruncationSpec::ray(3, v.clone(), u),
            [(v.clone(), r("1")), (v.add_scaled(u, 3), r("5"))],
        )
        .unwrap();
        let meta = f.ray_meta().unwrap();
        assert_eq!(
            f.ray_coefficients(&meta),
            vec![r("1"), r("0"), r("0"), r("5")]
        );
    }

    #[test]
    fn json_round_trip() {
        let v = ExponentPair::new(r("1/4"), r("0"));
        let u = (-3, 2);
        let f = SparseSeries::from_terms(
            TruncationSpec::ray(1, v.clone(), u),
            [(v.clone(), r("1")), (v.add_scaled(u, 1), r("21/128"))],
        )
        .unwrap();
        let js = serde_json::to_string(&f).unwrap();
        let back: SparseSeries = serde_json::from_str(&js).unwrap();
        assert_eq!(back, f);
        // Serialization is deterministic.
        assert_eq!(js, serde_json::to_string(&back).unwrap());
        // Exact fraction strings appear in the payload.
        assert!(js.contains("\"21/128\""));
        assert!(js.contains("\"RayTrunc\""));
    }

    #[test]
    fn json_decode_rejects_bad_payloads() {
        let dup = r#"{"trunc":{"kind":"BoxTrunc","n1":4,"n2":4},
            "terms":[{"e1":"1","e2":"0","c":"1"},{"e1":"1","e2":"0","c":"2"}]}"#;
        assert!(serde_json::from_str::<SparseSeries>(dup).is_err());
        let zero = r#"{"trunc":{"kind":"BoxTrunc","n1":4,"n2":4},
            "terms":[{"e1":"1","e2":"0","c":"0"}]}"#;
        assert!(serde_json::from_str::<SparseSeries>(zero).is_err());
        let outside = r#"{"trunc":{"kind":"BoxTrunc","n1":4,"n2":4},
            "terms":[{"e1":"9","e2":"0","c":"1"}]}"#;
        assert!(serde_json::from_str::<SparseSeries>(outside).is_err());
        let fractional_box = r#"{"trunc":{"kind":"BoxTrunc","n1":4,"n2":4},
            "terms":[{"e1":"1/2","e2":"0","c":"1"}]}"#;
        assert!(serde_json::from_str::<SparseSeries>(fractional_box).is_err());
    }

    #[test]
    fn json_decode_rejects_a_zero_ray_direction() {
        // The derived trunc decode bypasses TruncationSpec::ray's assertion;
        // without the explicit check this divides by zero in ray_index_of.
        let zero_dir = r#"{"trunc":{"kind":"RayTrunc","m":3,
            "v":{"e1":"0","e2":"0"},"u":[0,0]},
            "terms":[{"e1":"0","e2":"0","c":"1"}]}"#;
        assert!(serde_json::from_str::<SparseSeries>(zero_dir).is_err());
        let no_terms = r#"{"trunc":{"kind":"RayTrunc","m":3,
            "v":{"e1":"0","e2":"0"},"u":[0,0]},"terms":[]}"#;
        assert!(serde_json::from_str::<SparseSeries>(no_terms).is_err());
        assert!(serde_json::from_str::<FloatSeries>(no_terms).is_err());
    }
}
