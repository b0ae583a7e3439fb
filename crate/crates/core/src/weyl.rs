//! Differential operators in two variables and their action on series.
//!
//! Operators live in the Weyl algebra ℚ⟨x₁,x₂,∂₁,∂₂⟩ and are stored in
//! normal order (every x to the left of every ∂), so equality is a plain
//! comparison of monomial tables. The system under study is generated by
//!
//! ```text
//!     P = ∂₁^b − ∂₂^a,        E = a·x₁∂₁ + b·x₂∂₂ − β,
//! ```
//!
//! for coprime 0 < a < b and rational β. Composition uses the per-variable
//! commutation rule ∂^q x^p = Σ_k C(q,k)·p·(p−1)···(p−k+1)·x^{p−k}∂^{q−k}.
//!
//! `apply` is exact on both jet-box and ray series and shrinks the output's
//! guaranteed region so that every reported coefficient is fully determined
//! by the input's known data — the one rule that keeps downstream
//! annihilation and kernel computations honest near truncation boundaries.

use std::collections::BTreeMap;
use std::fmt;

use crate::rational::Rational;
use crate::series::{ExponentPair, SparseSeries, TruncationSpec};

/// Exponent pair of one variable group (x or ∂).
pub type NatPair = (u32, u32);

/// A normal-ordered operator: finitely many monomials c·x^p∂^q keyed by
/// (p, q), no zero coefficients stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct DiffOperator {
    monomials: BTreeMap<(NatPair, NatPair), Rational>,
}

/// Weights (w₁, w₂) for ∂₁, ∂₂; each xᵢ carries weight −wᵢ.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WeightVector {
    pub w1: Rational,
    pub w2: Rational,
}

impl WeightVector {
    pub fn new(w1: Rational, w2: Rational) -> Self {
        WeightVector { w1, w2 }
    }
}

/// Errors from operator construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeylError {
    /// The pair (a, b) violates 0 < a < b with gcd(a, b) = 1.
    BadMatrix(String),
}

impl fmt::Display for WeylError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeylError::BadMatrix(why) => write!(f, "bad system data: {why}"),
        }
    }
}

impl std::error::Error for WeylError {}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a.rem_euclid(b));
    }
    a.abs()
}

/// Checks the standing hypothesis 0 < a < b, gcd(a, b) = 1.
pub(crate) fn validate_pair(a: i64, b: i64) -> Result<(), WeylError> {
    if !(0 < a && a < b) {
        return Err(WeylError::BadMatrix(format!(
            "need 0 < a < b with gcd(a,b) = 1, got a = {a}, b = {b}"
        )));
    }
    if gcd(a, b) != 1 {
        return Err(WeylError::BadMatrix(format!(
            "need 0 < a < b with gcd(a,b) = 1, got gcd({a},{b}) = {}",
            gcd(a, b)
        )));
    }
    Ok(())
}

/// C(n, k) as an exact rational.
fn binom(n: u32, k: u32) -> Rational {
    let mut num = Rational::one();
    let mut den = Rational::one();
    for i in 0..k {
        num *= &Rational::from_int((n - i) as i64);
        den *= &Rational::from_int((i + 1) as i64);
    }
    &num / &den
}

impl DiffOperator {
    pub fn zero() -> Self {
        DiffOperator::default()
    }

    pub fn constant(c: Rational) -> Self {
        DiffOperator::monomial(c, (0, 0), (0, 0))
    }

    pub fn identity() -> Self {
        DiffOperator::constant(Rational::one())
    }

    /// The single monomial c·x^{xexp}∂^{dexp}.
    pub fn monomial(c: Rational, xexp: NatPair, dexp: NatPair) -> Self {
        let mut monomials = BTreeMap::new();
        if !c.is_zero() {
            monomials.insert((xexp, dexp), c);
        }
        DiffOperator { monomials }
    }

    pub fn from_monomials(
        items: impl IntoIterator<Item = (Rational, NatPair, NatPair)>,
    ) -> Self {
        let mut monomials: BTreeMap<(NatPair, NatPair), Rational> = BTreeMap::new();
        for (c, x, d) in items {
            let entry = monomials.entry((x, d)).or_insert_with(Rational::zero);
            *entry += &c;
        }
        monomials.retain(|_, c| !c.is_zero());
        DiffOperator { monomials }
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn num_monomials(&self) -> usize {
        self.monomials.len()
    }

    /// Monomials as (coefficient, x-exponents, ∂-exponents), in the stored
    /// canonical order.
    pub fn monomials(&self) -> impl Iterator<Item = (&Rational, NatPair, NatPair)> {
        self.monomials.iter().map(|(&(x, d), c)| (c, x, d))
    }

    pub fn add(&self, other: &DiffOperator) -> DiffOperator {
        let mut out = self.monomials.clone();
        for (key, c) in &other.monomials {
            let entry = out.entry(*key).or_insert_with(Rational::zero);
            *entry += c;
        }
        out.retain(|_, c| !c.is_zero());
        DiffOperator { monomials: out }
    }

    pub fn sub(&self, other: &DiffOperator) -> DiffOperator {
        self.add(&other.scale(&-&Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> DiffOperator {
        if c.is_zero() {
            return DiffOperator::zero();
        }
        DiffOperator {
            monomials: self.monomials.iter().map(|(k, v)| (*k, c * v)).collect(),
        }
    }

    /// `self + c` (adds to the order-zero monomial).
    pub fn add_constant(&self, c: &Rational) -> DiffOperator {
        self.add(&DiffOperator::constant(c.clone()))
    }

    /// Normal-ordered product `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &DiffOperator) -> DiffOperator {
        let mut out: BTreeMap<(NatPair, NatPair), Rational> = BTreeMap::new();
        for (&((p1x, p1y), (q1x, q1y)), c1) in &self.monomials {
            for (&((p2x, p2y), (q2x, q2y)), c2) in &other.monomials {
                let c12 = c1 * c2;
                // Normal-order ∂^{q1} x^{p2} one variable at a time.
                for k1 in 0..=q1x.min(p2x) {
                    let f1 = &binom(q1x, k1)
                        * &Rational::from_int(p2x as i64).falling(k1);
                    for k2 in 0..=q1y.min(p2y) {
                        let f2 = &binom(q1y, k2)
                            * &Rational::from_int(p2y as i64).falling(k2);
                        let key = (
                            (p1x + p2x - k1, p1y + p2y - k2),
                            (q1x - k1 + q2x, q1y - k2 + q2y),
                        );
                        let v = &(&c12 * &f1) * &f2;
                        let entry = out.entry(key).or_insert_with(Rational::zero);
                        *entry += &v;
                    }
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        DiffOperator { monomials: out }
    }

    /// The sum of the monomials of maximal weight Σᵢ wᵢ·(dexpᵢ − xexpᵢ).
    pub fn initial_form(&self, w: &WeightVector) -> DiffOperator {
        let weight_of = |x: NatPair, d: NatPair| -> Rational {
            let d1 = Rational::from_int(d.0 as i64 - x.0 as i64);
            let d2 = Rational::from_int(d.1 as i64 - x.1 as i64);
            &(&w.w1 * &d1) + &(&w.w2 * &d2)
        };
        let Some(max_w) = self
            .monomials
            .keys()
            .map(|&(x, d)| weight_of(x, d))
            .max()
        else {
            return DiffOperator::zero();
        };
        DiffOperator {
            monomials: self
                .monomials
                .iter()
                .filter(|(&(x, d), _)| weight_of(x, d) == max_w)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    /// Exact image of `f` under this operator.
    ///
    /// The monomial rule is ∂₁(x₁^γ) = γ·x₁^{γ−1} with rational γ, so the
    /// action is defined on fractional and negative exponents alike.
    ///
    /// Truncation bookkeeping:
    /// - jet box (N₁, N₂): the output box shrinks per coordinate by the
    ///   operator's worst net lowering max(0, max over monomials of
    ///   dexp − xexp); output terms pushed above the shrunk box are dropped
    ///   (they cannot be certified there).
    /// - ray (v, u, M): operator monomials are grouped by the ℤu-coset of
    ///   their exponent shift xexp − dexp. Each coset feeds one output ray
    ///   family; the certified frontier accounts for the coset's internal
    ///   index spread, and the output is re-based at its lowest possible
    ///   cell, keeping the certified length at M. The output's primary ray
    ///   (the one named in its truncation) is the coset of the first
    ///   monomial in canonical order; other cosets ride along as exact
    ///   extra terms.
    ///
    /// A ray input must be a single ray family: every stored term on the
    /// lattice v + ℤu. Terms off that lattice panic — the frontier logic
    /// would otherwise certify cells it cannot.
    pub fn apply(&self, f: &SparseSeries) -> SparseSeries {
        if self.monomials.is_empty() {
            return SparseSeries::new(f.trunc().clone());
        }
        match f.trunc().clone() {
            TruncationSpec::BoxTrunc { n1, n2 } => self.apply_box(f, n1, n2),
            TruncationSpec::RayTrunc { m, v, u } => self.apply_ray(f, m, &v, u),
        }
    }

    fn apply_box(&self, f: &SparseSeries, n1: i64, n2: i64) -> SparseSeries {
        let (mut s1, mut s2) = (0i64, 0i64);
        for (&((px, py), (qx, qy)), _) in &self.monomials {
            s1 = s1.max(qx as i64 - px as i64);
            s2 = s2.max(qy as i64 - py as i64);
        }
        let trunc = TruncationSpec::jet_box(n1 - s1, n2 - s2);
        let mut out: BTreeMap<ExponentPair, Rational> = BTreeMap::new();
        for (e, c) in f.terms() {
            for (&((px, py), (qx, qy)), w) in &self.monomials {
                let factor = &e.e1.falling(qx) * &e.e2.falling(qy);
                if factor.is_zero() {
                    continue;
                }
                let ne = ExponentPair::new(
                    &e.e1 + &Rational::from_int(px as i64 - qx as i64),
                    &e.e2 + &Rational::from_int(py as i64 - qy as i64),
                );
                if trunc.contains(&ne) {
                    let v = &(c * w) * &factor;
                    *out.entry(ne).or_insert_with(Rational::zero) += &v;
                }
            }
        }
        SparseSeries::from_map_unchecked(trunc, out)
    }

    fn apply_ray(&self, f: &SparseSeries, m: i64, v: &ExponentPair, u: (i64, i64)) -> SparseSeries {
        // Integer t with to = from + t·u, if any.
        let step = |from: (i64, i64), to: (i64, i64)| -> Option<i64> {
            let d = (to.0 - from.0, to.1 - from.1);
            let t = if u.0 != 0 { d.0.checked_div(u.0)? } else { d.1.checked_div(u.1)? };
            (d == (t * u.0, t * u.1)).then_some(t)
        };
        // Group monomials by the ℤu-coset of their shift; within a class,
        // store each monomial's index r relative to the class representative.
        struct ShiftClass {
            rep: (i64, i64),
            members: Vec<(NatPair, NatPair, Rational, i64)>,
            min_r: i64,
        }
        let mut classes: Vec<ShiftClass> = Vec::new();
        for (&(x, d), c) in &self.monomials {
            let delta = (x.0 as i64 - d.0 as i64, x.1 as i64 - d.1 as i64);
            let found = classes
                .iter_mut()
                .find_map(|cl| step(cl.rep, delta).map(|r| (cl, r)));
            match found {
                Some((cl, r)) => {
                    cl.min_r = cl.min_r.min(r);
                    cl.members.push((x, d, c.clone(), r));
                }
                None => classes.push(ShiftClass {
                    rep: delta,
                    members: vec![(x, d, c.clone(), 0)],
                    min_r: 0,
                }),
            }
        }
        let mut out: BTreeMap<ExponentPair, Rational> = BTreeMap::new();
        for (e, c) in f.terms() {
            let mi = f
                .trunc()
                .ray_index_of(e)
                .expect("operator application on a ray series requires all terms on its primary lattice");
            for cl in &classes {
                for &(x, d, ref w, r) in &cl.members {
                    // Certified output cells on this coset: relative index
                    // mi + r − min_r ≤ M (inputs above M are unknown; below
                    // the base they are known zeros of the full family).
                    if mi + r - cl.min_r > m {
                        continue;
                    }
                    let factor = &e.e1.falling(d.0) * &e.e2.falling(d.1);
                    if factor.is_zero() {
                        continue;
                    }
                    let ne = ExponentPair::new(
                        &e.e1 + &Rational::from_int(x.0 as i64 - d.0 as i64),
                        &e.e2 + &Rational::from_int(x.1 as i64 - d.1 as i64),
                    );
                    let val = &(c * w) * &factor;
                    *out.entry(ne).or_insert_with(Rational::zero) += &val;
                }
            }
        }
        // Primary output ray: coset of the canonically-first monomial,
        // re-based at its lowest reachable cell.
        let prim = &classes[0];
        let base = v.add_scaled(prim.rep, 1).add_scaled(u, prim.min_r);
        SparseSeries::from_map_unchecked(TruncationSpec::ray(m, base, u), out)
    }
}

impl fmt::Debug for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render_operator(self))
    }
}

// ── Text form ───────────────────────────────────────────────────────────
//
// Grammar (round-trips with the renderer):
//
//     expr   := [sign] term (sign term)*        sign := '+' | '-'
//     term   := atom ('*' atom)*
//     atom   := rational | var ('^' natural)?
//     var    := 'x1' | 'x2' | 'd1' | 'd2'
//     rational := digits ('/' digits)?
//
// Whitespace is allowed between tokens. Terms must be normal-ordered: an
// x-variable after a d-variable in the same term is rejected, e.g. "d1*x1"
// (write "x1*d1 + 1" for the composed product instead).

/// Why an operator literal failed to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorParseError {
    /// Byte offset of the offending token.
    pub position: usize,
    pub message: String,
}

impl fmt::Display for OperatorParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "operator parse error at byte {}: {}", self.position, self.message)
    }
}

impl std::error::Error for OperatorParseError {}

impl fmt::Display for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render_operator(self))
    }
}

/// Renders in the text grammar, highest ∂-order first (so "d1^3 - d2^2",
/// "2*x1*d1 + 3*x2*d2 - 1/2").
pub fn render_operator(op: &DiffOperator) -> String {
    if op.is_zero() {
        return "0".to_string();
    }
    let mut mons: Vec<(&Rational, NatPair, NatPair)> = op.monomials().collect();
    mons.sort_by(|a, b| {
        let da = a.2 .0 + a.2 .1;
        let db = b.2 .0 + b.2 .1;
        (db, b.2, b.1).cmp(&(da, a.2, a.1))
    });
    let mut out = String::new();
    for (i, (c, x, d)) in mons.iter().enumerate() {
        let neg = c.is_negative();
        let mag = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut factors: Vec<String> = Vec::new();
        for (name, exp) in [("x1", x.0), ("x2", x.1), ("d1", d.0), ("d2", d.1)] {
            match exp {
                0 => {}
                1 => factors.push(name.to_string()),
                _ => factors.push(format!("{name}^{exp}")),
            }
        }
        if factors.is_empty() {
            out.push_str(&mag.to_string());
        } else {
            if !mag.is_one() {
                out.push_str(&mag.to_string());
                out.push('*');
            }
            out.push_str(&factors.join("*"));
        }
    }
    out
}

/// Parses the text grammar above into a normal-ordered operator.
pub fn parse_operator(text: &str) -> Result<DiffOperator, OperatorParseError> {
    let bytes = text.as_bytes();
    let mut pos = 0usize;
    let err = |pos: usize, message: &str| OperatorParseError {
        position: pos,
        message: message.to_string(),
    };
    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && (bytes[*pos] as char).is_ascii_whitespace() {
            *pos += 1;
        }
    };
    let read_digits = |pos: &mut usize| -> Option<&str> {
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        (*pos > start).then(|| &text[start..*pos])
    };
    // Renders must re-parse, and `*`-joined literals multiply into exact
    // coefficients of any size, so literals get no length cap. Exponents do:
    // they are summed per variable, and the sum must stay storable.
    let exponent_cap = |cur: u32, add: u32| cur.checked_add(add).filter(|&t| t <= 1_000_000);

    let mut terms: Vec<(Rational, NatPair, NatPair)> = Vec::new();
    skip_ws(&mut pos);
    if pos == bytes.len() {
        return Err(err(0, "empty operator"));
    }
    let mut first = true;
    while pos < bytes.len() {
        // Sign separator (optional before the first term).
        let mut sign = Rational::one();
        skip_ws(&mut pos);
        match bytes.get(pos) {
            Some(b'+') => {
                pos += 1;
            }
            Some(b'-') => {
                sign = -&Rational::one();
                pos += 1;
            }
            _ if first => {}
            _ => return Err(err(pos, "expected '+' or '-' between terms")),
        }
        first = false;
        // One term: atoms joined by '*'.
        let mut coeff = sign;
        let mut xexp: NatPair = (0, 0);
        let mut dexp: NatPair = (0, 0);
        let mut seen_d = false;
        loop {
            skip_ws(&mut pos);
            let atom_start = pos;
            match bytes.get(pos) {
                Some(c) if c.is_ascii_digit() => {
                    let digits =
                        read_digits(&mut pos).ok_or_else(|| err(atom_start, "expected digits"))?;
                    let mut val: Rational = digits.parse().expect("digit runs parse exactly");
                    if bytes.get(pos) == Some(&b'/') {
                        pos += 1;
                        let q_start = pos;
                        let q_digits = read_digits(&mut pos)
                            .ok_or_else(|| err(q_start, "expected digits after '/'"))?;
                        let q: Rational = q_digits.parse().expect("digit runs parse exactly");
                        if q.is_zero() {
                            return Err(err(q_start, "zero denominator"));
                        }
                        val = &val / &q;
                    }
                    coeff = &coeff * &val;
                }
                Some(&v) if v == b'x' || v == b'd' => {
                    pos += 1;
                    let idx = match bytes.get(pos) {
                        Some(b'1') => 0,
                        Some(b'2') => 1,
                        _ => return Err(err(atom_start, "expected x1, x2, d1 or d2")),
                    };
                    pos += 1;
                    let mut e: u32 = 1;
                    if bytes.get(pos) == Some(&b'^') {
                        pos += 1;
                        let e_start = pos;
                        let digits = read_digits(&mut pos)
                            .ok_or_else(|| err(e_start, "expected digits after '^'"))?;
                        e = digits
                            .parse::<u32>()
                            .ok()
                            .filter(|&n| n <= 1_000_000)
                            .ok_or_else(|| err(e_start, "exponent too large"))?;
                    }
                    let slot = if v == b'x' {
                        if seen_d {
                            return Err(err(
                                atom_start,
                                "normal order violated: x factor after d factor",
                            ));
                        }
                        if idx == 0 {
                            &mut xexp.0
                        } else {
                            &mut xexp.1
                        }
                    } else {
                        seen_d = true;
                        if idx == 0 {
                            &mut dexp.0
                        } else {
                            &mut dexp.1
                        }
                    };
                    *slot = exponent_cap(*slot, e)
                        .ok_or_else(|| err(atom_start, "exponent too large"))?;
                }
                _ => return Err(err(pos, "expected a coefficient or variable")),
            }
            skip_ws(&mut pos);
            if bytes.get(pos) == Some(&b'*') {
                pos += 1;
                continue;
            }
            break;
        }
        terms.push((coeff, xexp, dexp));
        skip_ws(&mut pos);
    }
    Ok(DiffOperator::from_monomials(terms))
}

/// The generators P = ∂₁^b − ∂₂^a and E = a·x₁∂₁ + b·x₂∂₂ − β.
pub fn hypergeometric_ops(
    a: i64,
    b: i64,
    beta: &Rational,
) -> Result<(DiffOperator, DiffOperator), WeylError> {
    validate_pair(a, b)?;
    let p = DiffOperator::from_monomials([
        (Rational::one(), (0, 0), (b as u32, 0)),
        (-&Rational::one(), (0, 0), (0, a as u32)),
    ]);
    let e = DiffOperator::from_monomials([
        (Rational::from_int(a), (1, 0), (1, 0)),
        (Rational::from_int(b), (0, 1), (0, 1)),
        (-beta, (0, 0), (0, 0)),
    ]);
    Ok((p, e))
}
