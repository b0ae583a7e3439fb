//! Command dispatch and report emission for the `gkz` binary.
//!
//! [`run_command`] turns a [`ProblemSpec`] plus a [`Command`] into a
//! [`Report`]; [`emit_report`] serializes a report as pretty JSON (stable
//! schema `{command, problem, results}`), as CSV (one flat table per
//! command), or as a text summary. Serialization is deterministic — the
//! same report emits byte-identical output — and a report with an empty
//! payload emits `{}` / a lone CSV header / `no results`.
//!
//! A report also knows its failures: [`Report::failures`] is the
//! machine-readable list behind the binary's exit code (empty list ⇔ every
//! check the command ran came out clean).

use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::ext::{
    compare_oracle_vs_theory, monodromy_eigenvalues, solution_complex_maps, ExtStatus, ExtTable,
    Sheaf,
};
use crate::gamma::{
    build_gamma_series, build_vtilde_series, gamma_coeff, resonance_data, GammaSeriesSpec,
};
use crate::gevrey::{
    estimate_gevrey_index, growth_table, slope_scan, Classification, GevreyReport, SValue,
    SlopeReport,
};
use crate::problem::{parse_problem, render_problem, ProblemSpec};
use crate::rational::Rational;
use crate::series::{ExponentPair, SparseSeries};
use crate::solvers::{
    residue_class_to_series, solve_p_recurrence, solve_p_recurrence_closed_form,
    ResidueClassSeries,
};
use crate::weyl::{hypergeometric_ops, parse_operator, render_operator};

/// The seven things the binary can do with a problem.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Command {
    /// Construct both Γ-series families and check annihilation exactly.
    Basis,
    /// Estimate Gevrey indices of the axis family from coefficient growth.
    Gevrey,
    /// Scan a grid of orders for the index gap at b/a.
    Slope,
    /// Exercise the P-recurrence: Γ-coefficient reproduction, the closed
    /// form, and an exact P∘solve round-trip.
    Recurrence,
    /// Predicted vs measured solution-complex dimension tables.
    Ext,
    /// Monodromy eigenvalues along the singular axis.
    Monodromy,
    /// The full invariant suite, one named pass/fail line per check.
    Verify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Basis,
        Command::Gevrey,
        Command::Slope,
        Command::Recurrence,
        Command::Ext,
        Command::Monodromy,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::Gevrey => "gevrey",
            Command::Slope => "slope",
            Command::Recurrence => "recurrence",
            Command::Ext => "ext",
            Command::Monodromy => "monodromy",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown command `{s}` (expected basis, gevrey, slope, recurrence, ext, \
                     monodromy, verify)"
                )
            })
    }
}

impl Serialize for Command {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

/// Output encodings of [`emit_report`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "text",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            _ => Err(format!("unknown format `{s}` (expected json, csv, text)")),
        }
    }
}

/// A callee error wrapped with the command that hit it.
#[derive(Clone, Debug)]
pub struct CommandError {
    pub command: Command,
    pub message: String,
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.command, self.message)
    }
}

impl std::error::Error for CommandError {}

fn wrap<E: fmt::Display>(command: Command) -> impl Fn(E) -> CommandError {
    move |e| CommandError { command, message: e.to_string() }
}

/// One basis member with its exact annihilation checks.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesDiag {
    pub family: String,
    pub index: i64,
    /// Starting exponent v of the ray.
    pub start: String,
    pub terms: usize,
    pub p_annihilates: bool,
    pub e_annihilates: bool,
}

/// The resonant extras: integer data of the degenerate class and the
/// behavior of the re-based series that replaces it.
#[derive(Clone, Debug, Serialize)]
pub struct ResonanceDiag {
    pub q: i64,
    pub m0: i64,
    pub mprime: i64,
    pub vtilde: String,
    /// Support size of the degenerate (polynomial) member φ_{v^q}.
    pub polynomial_member_terms: usize,
    pub modified_terms: usize,
    pub e_annihilates_modified: bool,
    /// Stored size of P(φ_{ṽ}); the defining property is exactly 1.
    pub p_image_terms: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisPayload {
    pub axis: Vec<SeriesDiag>,
    pub generic: Vec<SeriesDiag>,
    pub resonance: Option<ResonanceDiag>,
    pub all_checks_pass: bool,
}

/// Growth summary of one axis member; `growth` backs the CSV table and is
/// omitted from JSON (the fitted summary is what the schema carries).
#[derive(Clone, Debug, Serialize)]
pub struct GrowthDiag {
    pub family: String,
    pub index: i64,
    #[serde(flatten)]
    pub summary: GevreyReport,
    #[serde(skip)]
    pub growth: Vec<(usize, f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GevreyPayload {
    pub series: Vec<GrowthDiag>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopePayload {
    pub scan: SlopeReport,
    /// The index b/a the gap is predicted at.
    pub expected_index: Rational,
    pub nearest_grid_point: Rational,
    pub gap_at_nearest: bool,
}

/// Recurrence diagnostics for one residue class along the axis.
#[derive(Clone, Debug, Serialize)]
pub struct ClassDiag {
    pub k: i64,
    /// Homogeneous unit-seed solve reproduces the Γ-coefficients exactly.
    pub homogeneous_matches_gamma: bool,
    /// Iterated solve equals the closed form (None on the resonant class,
    /// where the closed form's denominators vanish).
    pub closed_form_matches: Option<bool>,
    /// P applied to the solved series reproduces the forcing exactly on the
    /// certified region.
    pub p_roundtrip: bool,
    /// Leading homogeneous coefficients, as exact fractions.
    pub leading_terms: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecurrencePayload {
    pub m_checked: i64,
    pub classes: Vec<ClassDiag>,
    pub all_pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtPayload {
    pub tables: Vec<ExtTable>,
    pub all_match: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonodromyPayload {
    pub eigenvalues: Vec<(f64, f64)>,
    pub unit_modulus_defect: f64,
    /// How many eigenvalues equal 1 within 10⁻⁹.
    pub eigenvalue_one_multiplicity: usize,
}

/// One named line of the `verify` battery.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyPayload {
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

/// Command-specific results. `Empty` is the identity payload used by the
/// emitters' trivial cases; `run_command` always produces a real one.
#[derive(Clone, Debug)]
pub enum Payload {
    Empty,
    Basis(BasisPayload),
    Gevrey(GevreyPayload),
    Slope(SlopePayload),
    Recurrence(RecurrencePayload),
    Ext(ExtPayload),
    Monodromy(MonodromyPayload),
    Verify(VerifyPayload),
}

// Serialized as a map so the payload can be flattened into the report:
// every variant contributes a single "results" entry, Empty contributes
// nothing.
impl Serialize for Payload {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut map = ser.serialize_map(None)?;
        match self {
            Payload::Empty => {}
            Payload::Basis(x) => map.serialize_entry("results", x)?,
            Payload::Gevrey(x) => map.serialize_entry("results", x)?,
            Payload::Slope(x) => map.serialize_entry("results", x)?,
            Payload::Recurrence(x) => map.serialize_entry("results", x)?,
            Payload::Ext(x) => map.serialize_entry("results", x)?,
            Payload::Monodromy(x) => map.serialize_entry("results", x)?,
            Payload::Verify(x) => map.serialize_entry("results", x)?,
        }
        map.end()
    }
}

/// What a command produced, together with the problem that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: Command,
    pub problem: ProblemSpec,
    #[serde(flatten)]
    pub payload: Payload,
}

impl Report {
    pub fn is_empty(&self) -> bool {
        matches!(self.payload, Payload::Empty)
    }

    /// Machine-readable failure list; empty iff everything the command
    /// checked came out clean. Drives the binary's exit code.
    pub fn failures(&self) -> Vec<String> {
        match &self.payload {
            Payload::Empty | Payload::Gevrey(_) => Vec::new(),
            Payload::Basis(b) => {
                let mut out = Vec::new();
                for d in b.axis.iter().chain(&b.generic) {
                    if !d.p_annihilates || !d.e_annihilates {
                        out.push(format!(
                            "basis: {} {} is not annihilated exactly",
                            d.family, d.index
                        ));
                    }
                }
                if let Some(rd) = &b.resonance {
                    if !rd.e_annihilates_modified {
                        out.push("basis: modified series is not Euler-annihilated".into());
                    }
                    if rd.p_image_terms != 1 {
                        out.push(format!(
                            "basis: P(modified series) has {} terms, expected a single monomial",
                            rd.p_image_terms
                        ));
                    }
                }
                out
            }
            Payload::Slope(s) => {
                let mut out = Vec::new();
                match &s.scan.detected_gap {
                    None => out.push("slope: no index gap detected on the grid".into()),
                    Some(at) if !s.gap_at_nearest => out.push(format!(
                        "slope: gap detected at s = {at}, but the grid point nearest {} is {}",
                        s.expected_index, s.nearest_grid_point
                    )),
                    Some(_) => {}
                }
                out
            }
            Payload::Recurrence(r) => {
                let mut out = Vec::new();
                for c in &r.classes {
                    if !c.homogeneous_matches_gamma {
                        out.push(format!("recurrence: class {} drifts from Γ-coefficients", c.k));
                    }
                    if c.closed_form_matches == Some(false) {
                        out.push(format!("recurrence: class {} disagrees with closed form", c.k));
                    }
                    if !c.p_roundtrip {
                        out.push(format!("recurrence: class {} fails the P round-trip", c.k));
                    }
                }
                out
            }
            Payload::Ext(e) => e
                .tables
                .iter()
                .filter(|t| t.is_mismatch())
                .map(|t| {
                    format!(
                        "ext: point={} sheaf={} s={}: predicted {:?}, measured {:?}",
                        t.point, t.sheaf, t.s, t.predicted, t.measured
                    )
                })
                .collect(),
            Payload::Monodromy(m) => {
                if m.unit_modulus_defect >= 1e-12 {
                    vec![format!(
                        "monodromy: modulus defect {:e} exceeds 1e-12",
                        m.unit_modulus_defect
                    )]
                } else {
                    Vec::new()
                }
            }
            Payload::Verify(v) => v
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| format!("verify: {}: {}", c.name, c.detail))
                .collect(),
        }
    }
}

/// (β − kb)/a, the x₁-exponent base of axis residue class k.
fn axis_base(a: i64, b: i64, beta: &Rational, k: i64) -> Rational {
    &(beta - &Rational::from_int(b * k)) / &Rational::from_int(a)
}

/// Runs `command` against `spec`. Callee errors come back wrapped with the
/// command name; check *failures* are not errors — they land in the report
/// and its [`Report::failures`] list.
pub fn run_command(spec: &ProblemSpec, command: Command) -> Result<Report, CommandError> {
    let payload = match command {
        Command::Basis => Payload::Basis(run_basis(spec)?),
        Command::Gevrey => Payload::Gevrey(run_gevrey(spec)?),
        Command::Slope => Payload::Slope(run_slope(spec)?),
        Command::Recurrence => Payload::Recurrence(run_recurrence(spec)?),
        Command::Ext => Payload::Ext(run_ext(spec)?),
        Command::Monodromy => Payload::Monodromy(run_monodromy(spec)?),
        Command::Verify => Payload::Verify(run_verify(spec)?),
    };
    Ok(Report { command, problem: spec.clone(), payload })
}

fn run_basis(spec: &ProblemSpec) -> Result<BasisPayload, CommandError> {
    let (p, e) =
        hypergeometric_ops(spec.a, spec.b, &spec.beta).map_err(wrap(Command::Basis))?;
    let diag = |family: &str, index: i64, f: &SparseSeries| {
        let start = f
            .ray_meta()
            .map(|m| m.v.to_string())
            .unwrap_or_else(|| "?".into());
        SeriesDiag {
            family: family.into(),
            index,
            start,
            terms: f.num_terms(),
            p_annihilates: p.apply(f).is_zero(),
            e_annihilates: e.apply(f).is_zero(),
        }
    };

    let axis: Vec<SeriesDiag> = (0..spec.a)
        .map(|k| {
            let g = GammaSeriesSpec::axis(spec.a, spec.b, &spec.beta, k, spec.m)
                .expect("problem invariants guarantee a valid pair");
            diag("axis", k, &build_gamma_series(&g))
        })
        .collect();
    let generic: Vec<SeriesDiag> = (0..spec.b)
        .map(|j| {
            let g = GammaSeriesSpec::generic(spec.a, spec.b, &spec.beta, j, spec.m)
                .expect("problem invariants guarantee a valid pair");
            diag("generic", j, &build_gamma_series(&g))
        })
        .collect();

    let resonance = resonance_data(spec.a, spec.b, &spec.beta).map(|rd| {
        let poly = build_gamma_series(
            &GammaSeriesSpec::axis(spec.a, spec.b, &spec.beta, rd.q, spec.m)
                .expect("problem invariants guarantee a valid pair"),
        );
        let modified = build_vtilde_series(&rd, spec.a, spec.b, &spec.beta, spec.m);
        ResonanceDiag {
            q: rd.q,
            m0: rd.m0,
            mprime: rd.mprime,
            vtilde: rd.vtilde.to_string(),
            polynomial_member_terms: poly.num_terms(),
            modified_terms: modified.num_terms(),
            e_annihilates_modified: e.apply(&modified).is_zero(),
            p_image_terms: p.apply(&modified).num_terms(),
        }
    });

    let all_checks_pass = axis
        .iter()
        .chain(&generic)
        .all(|d| d.p_annihilates && d.e_annihilates)
        && resonance
            .as_ref()
            .map_or(true, |rd| rd.e_annihilates_modified && rd.p_image_terms == 1);
    Ok(BasisPayload { axis, generic, resonance, all_checks_pass })
}

fn run_gevrey(spec: &ProblemSpec) -> Result<GevreyPayload, CommandError> {
    let mut series = Vec::new();
    let mut push = |family: &str, index: i64, f: &SparseSeries| -> Result<(), CommandError> {
        let meta = f.ray_meta().expect("gamma series are ray-truncated");
        let summary = estimate_gevrey_index(f, &meta, None).map_err(wrap(Command::Gevrey))?;
        // A polynomial member has too few nonzero coefficients to fit a
        // growth line through; its table is empty rather than an error.
        let growth = if summary.classification == Classification::Polynomial {
            Vec::new()
        } else {
            growth_table(f, &meta, None).map_err(wrap(Command::Gevrey))?
        };
        series.push(GrowthDiag { family: family.into(), index, summary, growth });
        Ok(())
    };

    for k in 0..spec.a {
        let g = GammaSeriesSpec::axis(spec.a, spec.b, &spec.beta, k, spec.m)
            .expect("problem invariants guarantee a valid pair");
        push("axis", k, &build_gamma_series(&g))?;
    }
    if let Some(rd) = resonance_data(spec.a, spec.b, &spec.beta) {
        let f = build_vtilde_series(&rd, spec.a, spec.b, &spec.beta, spec.m);
        push("modified", rd.q, &f)?;
    }
    Ok(GevreyPayload { series })
}

fn run_slope(spec: &ProblemSpec) -> Result<SlopePayload, CommandError> {
    let mut grid: Vec<Rational> = spec
        .s_values
        .iter()
        .filter_map(|s| match s {
            SValue::Finite(r) => Some(r.clone()),
            SValue::Infinity => None,
        })
        .collect();
    grid.sort();
    grid.dedup();
    if grid.is_empty() {
        return Err(CommandError {
            command: Command::Slope,
            message: "the scan needs at least one finite s grid point".into(),
        });
    }
    let scan =
        slope_scan(spec.a, spec.b, &spec.beta, &grid, spec.m).map_err(wrap(Command::Slope))?;
    let expected_index = Rational::new(spec.b, spec.a);
    let nearest_grid_point = grid
        .iter()
        .min_by_key(|s| (*s - &expected_index).abs())
        .expect("grid is non-empty")
        .clone();
    let gap_at_nearest = scan.detected_gap.as_ref() == Some(&nearest_grid_point);
    Ok(SlopePayload { scan, expected_index, nearest_grid_point, gap_at_nearest })
}

fn run_recurrence(spec: &ProblemSpec) -> Result<RecurrencePayload, CommandError> {
    let (a, b, beta) = (spec.a, spec.b, &spec.beta);
    let (p, _) = hypergeometric_ops(a, b, beta).map_err(wrap(Command::Recurrence))?;
    let m_checked = spec.m.min(10).max(1);
    let m_forced = spec.m.min(8).max(1);

    // Homogeneous solve, unit seed, every class at once.
    let zero_forcing: Vec<ResidueClassSeries> = (0..a)
        .map(|k| {
            ResidueClassSeries::new(k, &axis_base(a, b, beta, k) - &Rational::from_int(b), vec![])
        })
        .collect();
    let seeds = vec![Rational::one(); a as usize];
    let homogeneous = solve_p_recurrence(&zero_forcing, a, b, beta, m_checked, Some(&seeds));

    let classes = (0..a)
        .map(|k| {
            let base = axis_base(a, b, beta, k);
            let v = ExponentPair::new(base.clone(), Rational::from_int(k));
            let hom = &homogeneous[k as usize];
            let homogeneous_matches_gamma = (0..=m_checked)
                .all(|m| hom.coeffs[m as usize] == gamma_coeff(&v, (-b * m, a * m)));
            let leading_terms =
                hom.coeffs.iter().take(6).map(|c| c.to_string()).collect::<Vec<_>>();

            // Forced solve against a fixed harmonic-tail input.
            let forcing = ResidueClassSeries::new(
                k,
                &base - &Rational::from_int(b),
                (0..=m_forced).map(|m| Rational::new(1, m + 1)).collect(),
            );
            let solved =
                solve_p_recurrence(&[forcing.clone()], a, b, beta, m_forced, None).remove(0);
            let closed_form_matches = if base.is_natural() {
                None // resonant class: the closed form's denominators vanish
            } else {
                let closed = solve_p_recurrence_closed_form(&forcing, a, b, beta, m_forced);
                Some(closed.coeffs == solved.coeffs)
            };

            let h_series = residue_class_to_series(&solved, a, b);
            let ph = p.apply(&h_series);
            let p_roundtrip = (0..=m_forced).all(|m| {
                let e = ExponentPair::new(
                    &forcing.gamma_k + &Rational::from_int(-b * m),
                    Rational::from_int(k + a * m),
                );
                !ph.within_truncation(&e) || ph.coeff_at(&e) == forcing.coeffs[m as usize]
            });

            ClassDiag {
                k,
                homogeneous_matches_gamma,
                closed_form_matches,
                p_roundtrip,
                leading_terms,
            }
        })
        .collect::<Vec<_>>();

    let all_pass = classes.iter().all(|c| {
        c.homogeneous_matches_gamma && c.closed_form_matches != Some(false) && c.p_roundtrip
    });
    Ok(RecurrencePayload { m_checked, classes, all_pass })
}

fn run_ext(spec: &ProblemSpec) -> Result<ExtPayload, CommandError> {
    let mut tables = Vec::new();
    for s in &spec.s_values {
        for sheaf in [Sheaf::Gevrey, Sheaf::Quotient] {
            tables.push(
                compare_oracle_vs_theory(
                    spec.a,
                    spec.b,
                    &spec.beta,
                    &spec.point,
                    sheaf,
                    s,
                    spec.jet_box,
                )
                .map_err(wrap(Command::Ext))?,
            );
        }
    }
    let all_match = tables.iter().all(|t| t.status == ExtStatus::Match);
    Ok(ExtPayload { tables, all_match })
}

fn run_monodromy(spec: &ProblemSpec) -> Result<MonodromyPayload, CommandError> {
    let spectrum = monodromy_eigenvalues(spec.a, spec.b, &spec.beta);
    let unit_modulus_defect = spectrum.unit_modulus_defect();
    let eigenvalue_one_multiplicity = spectrum
        .eigenvalues
        .iter()
        .filter(|(re, im)| ((re - 1.0).powi(2) + im * im).sqrt() <= 1e-9)
        .count();
    Ok(MonodromyPayload {
        eigenvalues: spectrum.eigenvalues,
        unit_modulus_defect,
        eigenvalue_one_multiplicity,
    })
}

fn run_verify(spec: &ProblemSpec) -> Result<VerifyPayload, CommandError> {
    let (a, b, beta) = (spec.a, spec.b, &spec.beta);
    let (p, e) = hypergeometric_ops(a, b, beta).map_err(wrap(Command::Verify))?;
    let mut checks: Vec<CheckResult> = Vec::new();
    let mut check = |name: &str, passed: bool, detail: String| {
        checks.push(CheckResult { name: name.into(), passed, detail });
    };

    // Exact annihilation of both families (and the resonant substitute).
    let basis = run_basis(spec)?;
    check(
        "annihilation",
        basis.axis.iter().chain(&basis.generic).all(|d| d.p_annihilates && d.e_annihilates),
        format!(
            "{} axis + {} generic members, P and E applied exactly",
            basis.axis.len(),
            basis.generic.len()
        ),
    );
    if let Some(rd) = &basis.resonance {
        check(
            "modified-series-shape",
            rd.e_annihilates_modified && rd.p_image_terms == 1,
            format!(
                "E image zero: {}; P image terms: {} (want 1)",
                rd.e_annihilates_modified, rd.p_image_terms
            ),
        );
    }

    // The operator identity that makes the solution complex a complex.
    let lhs = p.compose(&e);
    let rhs = e.add_constant(&Rational::from_int(a * b)).compose(&p);
    check("commutation-identity", lhs == rhs, "P∘E = (E + ab)∘P as normal-ordered operators".into());

    // Round-trips: problem text, operator text, series JSON.
    let roundtrip = parse_problem(&render_problem(spec));
    check(
        "problem-round-trip",
        roundtrip.as_ref() == Ok(spec),
        match &roundtrip {
            Ok(_) => "parse ∘ render is the identity".into(),
            Err(err) => format!("re-parse failed: {err}"),
        },
    );
    let p_back = parse_operator(&render_operator(&p));
    let e_back = parse_operator(&render_operator(&e));
    check(
        "operator-round-trip",
        p_back.as_ref() == Ok(&p) && e_back.as_ref() == Ok(&e),
        "parse ∘ render is the identity on both generators".into(),
    );
    let sample = build_gamma_series(
        &GammaSeriesSpec::axis(a, b, beta, 0, spec.m.min(20))
            .expect("problem invariants guarantee a valid pair"),
    );
    let series_roundtrip = serde_json::to_string(&sample)
        .ok()
        .and_then(|j| serde_json::from_str::<SparseSeries>(&j).ok())
        .map_or(false, |back| back == sample);
    check("series-json-round-trip", series_roundtrip, "decode ∘ encode is the identity".into());

    // The jet realization is a complex at the problem's point.
    match solution_complex_maps(a, b, beta, &spec.point, spec.jet_box) {
        Ok(maps) => check(
            "complex-composite-zero",
            maps.composite_is_zero(),
            "ψ₁∘ψ₀ = 0 on the certified jet cells".into(),
        ),
        Err(err) => check("complex-composite-zero", false, err.to_string()),
    }

    // Predicted vs measured dimension tables over the whole s grid.
    let mut cells = 0usize;
    let mut bad: Vec<String> = Vec::new();
    for s in &spec.s_values {
        for sheaf in [Sheaf::Gevrey, Sheaf::Quotient] {
            match compare_oracle_vs_theory(a, b, beta, &spec.point, sheaf, s, spec.jet_box) {
                Ok(t) if t.status == ExtStatus::Match => cells += 1,
                Ok(t) => bad.push(format!(
                    "s={} sheaf={}: predicted {:?}, measured {:?}",
                    t.s, t.sheaf, t.predicted, t.measured
                )),
                Err(err) => bad.push(format!("s={s} sheaf={sheaf}: {err}")),
            }
        }
    }
    check(
        "dimension-tables-match",
        bad.is_empty(),
        if bad.is_empty() { format!("{cells} cells MATCH") } else { bad.join("; ") },
    );

    // Monodromy stays on the unit circle.
    let defect = monodromy_eigenvalues(a, b, beta).unit_modulus_defect();
    check("monodromy-unit-modulus", defect < 1e-12, format!("defect {defect:e}"));

    // The recurrence engine reproduces the Γ-coefficients it feeds on.
    let rec = run_recurrence(spec)?;
    check(
        "recurrence-reproduces-coefficients",
        rec.all_pass,
        format!("{} classes checked to ray index {}", rec.classes.len(), rec.m_checked),
    );

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerifyPayload { checks, all_passed })
}

/// Serializes `report` in `format`. Deterministic: equal reports give
/// byte-identical output. Empty payloads give the trivial forms `{}`,
/// a header-only CSV, and `no results`.
pub fn emit_report(report: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Json => emit_json(report),
        Format::Csv => emit_csv(report).into_bytes(),
        Format::Text => emit_text(report).into_bytes(),
    }
}

fn emit_json(report: &Report) -> Vec<u8> {
    if report.is_empty() {
        return b"{}\n".to_vec();
    }
    let mut out = serde_json::to_vec_pretty(report).expect("reports contain only finite numbers");
    out.push(b'\n');
    out
}

/// Quotes a CSV field only when it needs it.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_table(header: &str, rows: Vec<Vec<String>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cooked: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
        out.push_str(&cooked.join(","));
        out.push('\n');
    }
    out
}

/// The coefficient-growth schema; also the header of an empty report's CSV.
const GROWTH_HEADER: &str = "series,m,log_abs_coeff,fitted_value";

fn emit_csv(report: &Report) -> String {
    match &report.payload {
        Payload::Empty => csv_table(GROWTH_HEADER, Vec::new()),
        Payload::Gevrey(g) => {
            let rows = g
                .series
                .iter()
                .flat_map(|d| {
                    let label = format!("{}:{}", d.family, d.index);
                    d.growth.iter().map(move |(m, ln_c, fit)| {
                        vec![label.clone(), m.to_string(), ln_c.to_string(), fit.to_string()]
                    })
                })
                .collect();
            csv_table(GROWTH_HEADER, rows)
        }
        Payload::Basis(b) => {
            let mut rows: Vec<Vec<String>> = b
                .axis
                .iter()
                .chain(&b.generic)
                .map(|d| {
                    vec![
                        d.family.clone(),
                        d.index.to_string(),
                        d.start.clone(),
                        d.terms.to_string(),
                        d.p_annihilates.to_string(),
                        d.e_annihilates.to_string(),
                    ]
                })
                .collect();
            if let Some(rd) = &b.resonance {
                rows.push(vec![
                    "modified".into(),
                    rd.q.to_string(),
                    rd.vtilde.clone(),
                    rd.modified_terms.to_string(),
                    (rd.p_image_terms == 0).to_string(),
                    rd.e_annihilates_modified.to_string(),
                ]);
            }
            csv_table("family,index,start,terms,p_annihilates,e_annihilates", rows)
        }
        Payload::Slope(s) => {
            let rows = s
                .scan
                .s_grid
                .iter()
                .zip(&s.scan.dim_at_s)
                .map(|(s, d)| vec![s.to_string(), d.to_string()])
                .collect();
            csv_table("s,dim_le_s", rows)
        }
        Payload::Recurrence(r) => {
            let rows = r
                .classes
                .iter()
                .flat_map(|c| {
                    let closed = match c.closed_form_matches {
                        Some(v) => v.to_string(),
                        None => "skipped".into(),
                    };
                    [
                        vec![c.k.to_string(), "gamma-match".into(), c.homogeneous_matches_gamma.to_string()],
                        vec![c.k.to_string(), "closed-form".into(), closed],
                        vec![c.k.to_string(), "p-roundtrip".into(), c.p_roundtrip.to_string()],
                    ]
                })
                .collect();
            csv_table("class,check,passed", rows)
        }
        Payload::Ext(e) => {
            let rows = e
                .tables
                .iter()
                .map(|t| {
                    let measured: [String; 3] = match &t.measured {
                        Some(m) => [m[0].to_string(), m[1].to_string(), m[2].to_string()],
                        None => [String::new(), String::new(), String::new()],
                    };
                    vec![
                        t.point.to_string(),
                        t.sheaf.to_string(),
                        t.s.to_string(),
                        t.predicted[0].to_string(),
                        t.predicted[1].to_string(),
                        t.predicted[2].to_string(),
                        measured[0].clone(),
                        measured[1].clone(),
                        measured[2].clone(),
                        t.status.to_string(),
                    ]
                })
                .collect();
            csv_table(
                "point,sheaf,s,predicted_0,predicted_1,predicted_2,\
                 measured_0,measured_1,measured_2,status",
                rows,
            )
        }
        Payload::Monodromy(m) => {
            let rows = m
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(k, (re, im))| vec![k.to_string(), re.to_string(), im.to_string()])
                .collect();
            csv_table("k,re,im", rows)
        }
        Payload::Verify(v) => {
            let rows = v
                .checks
                .iter()
                .map(|c| vec![c.name.clone(), c.passed.to_string(), c.detail.clone()])
                .collect();
            csv_table("check,passed,detail", rows)
        }
    }
}

fn emit_text(report: &Report) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    if report.is_empty() {
        return "no results\n".into();
    }
    let spec = &report.problem;
    writeln!(
        out,
        "{} for A = ({} {}), beta = {}, point = {}",
        report.command, spec.a, spec.b, spec.beta, spec.point
    )
    .unwrap();
    match &report.payload {
        Payload::Empty => unreachable!("handled above"),
        Payload::Basis(b) => {
            for d in b.axis.iter().chain(&b.generic) {
                writeln!(
                    out,
                    "  {} {}: start {}, {} terms, P(f) = 0: {}, E(f) = 0: {}",
                    d.family, d.index, d.start, d.terms, d.p_annihilates, d.e_annihilates
                )
                .unwrap();
            }
            if let Some(rd) = &b.resonance {
                writeln!(
                    out,
                    "  resonant: q = {}, m0 = {}, m' = {}, vtilde = {}; modified series: \
                     {} terms, E image zero: {}, P image terms: {}",
                    rd.q,
                    rd.m0,
                    rd.mprime,
                    rd.vtilde,
                    rd.modified_terms,
                    rd.e_annihilates_modified,
                    rd.p_image_terms
                )
                .unwrap();
            }
            writeln!(out, "  all checks pass: {}", b.all_checks_pass).unwrap();
        }
        Payload::Gevrey(g) => {
            for d in &g.series {
                writeln!(
                    out,
                    "  {} {}: estimated index {:.4} (reference {}), residual {:.4}, \
                     {} coefficients, {:?}",
                    d.family,
                    d.index,
                    d.summary.estimated_index,
                    d.summary.s_theoretical,
                    d.summary.fit_residual,
                    d.summary.coefficient_count,
                    d.summary.classification
                )
                .unwrap();
            }
        }
        Payload::Slope(s) => {
            for (grid_s, dim) in s.scan.s_grid.iter().zip(&s.scan.dim_at_s) {
                writeln!(out, "  s = {grid_s}: dimension {dim}").unwrap();
            }
            match &s.scan.detected_gap {
                Some(at) => writeln!(
                    out,
                    "  gap detected at s = {at}; grid point nearest {} is {} ({})",
                    s.expected_index,
                    s.nearest_grid_point,
                    if s.gap_at_nearest { "agrees" } else { "DISAGREES" }
                )
                .unwrap(),
                None => writeln!(out, "  no gap detected").unwrap(),
            }
        }
        Payload::Recurrence(r) => {
            for c in &r.classes {
                let closed = match c.closed_form_matches {
                    Some(v) => v.to_string(),
                    None => "skipped (resonant class)".into(),
                };
                writeln!(
                    out,
                    "  class {}: gamma match {}, closed form {}, P round-trip {}",
                    c.k, c.homogeneous_matches_gamma, closed, c.p_roundtrip
                )
                .unwrap();
                writeln!(out, "    leading terms: {}", c.leading_terms.join(", ")).unwrap();
            }
            writeln!(out, "  all pass: {}", r.all_pass).unwrap();
        }
        Payload::Ext(e) => {
            for t in &e.tables {
                let measured = match &t.measured {
                    Some(m) => format!("{m:?}"),
                    None => "-".into(),
                };
                writeln!(
                    out,
                    "  point {}, sheaf {}, s = {}: predicted {:?}, measured {}, {}",
                    t.point, t.sheaf, t.s, t.predicted, measured, t.status
                )
                .unwrap();
            }
            writeln!(out, "  all match: {}", e.all_match).unwrap();
        }
        Payload::Monodromy(m) => {
            for (k, (re, im)) in m.eigenvalues.iter().enumerate() {
                writeln!(out, "  eigenvalue {k}: {re:+.12} {im:+.12}i").unwrap();
            }
            writeln!(
                out,
                "  unit-modulus defect {:e}; eigenvalue 1 multiplicity {}",
                m.unit_modulus_defect, m.eigenvalue_one_multiplicity
            )
            .unwrap();
        }
        Payload::Verify(v) => {
            for c in &v.checks {
                writeln!(
                    out,
                    "  {} {} — {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                )
                .unwrap();
            }
            writeln!(out, "  all checks passed: {}", v.all_passed).unwrap();
        }
    }
    out
}
