//! End-to-end acceptance battery.
//!
//! Nine independent checks cover the library's headline guarantees: exact
//! annihilation and operator identities, growth-index estimation, the
//! resonant degeneration, the recurrence solver, obstruction-coefficient
//! extraction, the jet dimension oracle, monodromy, and the divergence
//! split between the two series families. The battery prints one pass/fail
//! line per check (visible with `--nocapture`, and in the captured output
//! whenever something fails) and enforces the wall-clock budgets of the
//! slow checks.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gkz::ext::{
    compare_oracle_vs_theory, default_projection_degree, jet_kernel_dim, monodromy_eigenvalues,
    solution_complex_maps, ExtStatus, PointSpec, Sheaf,
};
use gkz::gamma::{
    build_gamma_series, build_vtilde_series, gamma_coeff, resonance_data, GammaSeriesSpec,
};
use gkz::gevrey::{estimate_gevrey_index, slope_scan, SValue};
use gkz::problem::default_s_grid;
use gkz::solvers::{
    extract_lambda, extract_lambda_exact, residue_class_to_series, solve_p_recurrence,
    solve_p_recurrence_closed_form, BasePoint, ResidueClassSeries,
};
use gkz::weyl::hypergeometric_ops;
use gkz::{ExponentPair, Rational};

fn r(s: &str) -> Rational {
    s.parse().unwrap()
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Random pair with 0 < a < b ≤ 7 and gcd(a, b) = 1.
fn random_pair(rng: &mut ChaCha8Rng) -> (i64, i64) {
    loop {
        let a = rng.random_range(1..7i64);
        let b = rng.random_range(a + 1..=7i64);
        if gcd(a, b) == 1 {
            return (a, b);
        }
    }
}

/// (β − kb)/a, the x₁-exponent base of axis residue class k.
fn axis_base(a: i64, b: i64, beta: &Rational, k: i64) -> Rational {
    &(beta - &Rational::from_int(b * k)) / &Rational::from_int(a)
}

fn axis_point() -> PointSpec {
    PointSpec::Axis(BasePoint::new(Rational::one()))
}

// ── 1: exact annihilation of both series families ───────────────────────

fn annihilation_exact() {
    for beta_text in ["1/2", "8"] {
        let beta = r(beta_text);
        let (p, e) = hypergeometric_ops(2, 3, &beta).unwrap();
        for k in 0..2 {
            let f =
                build_gamma_series(&GammaSeriesSpec::axis(2, 3, &beta, k, 50).unwrap());
            assert!(p.apply(&f).is_zero(), "beta = {beta}: P does not kill axis member {k}");
            assert!(e.apply(&f).is_zero(), "beta = {beta}: E does not kill axis member {k}");
        }
        for j in 0..3 {
            let f =
                build_gamma_series(&GammaSeriesSpec::generic(2, 3, &beta, j, 50).unwrap());
            assert!(p.apply(&f).is_zero(), "beta = {beta}: P does not kill generic member {j}");
            assert!(e.apply(&f).is_zero(), "beta = {beta}: E does not kill generic member {j}");
        }
    }
}

// ── 2: operator commutation identity on random systems ──────────────────

fn commutation_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0002);
    for _ in 0..20 {
        let (a, b) = random_pair(&mut rng);
        let beta = Rational::new(rng.random_range(-30..=30), rng.random_range(1..=12));
        let (p, e) = hypergeometric_ops(a, b, &beta).unwrap();
        let lhs = p.compose(&e);
        let rhs = e.add_constant(&Rational::from_int(a * b)).compose(&p);
        assert_eq!(lhs, rhs, "P∘E ≠ (E + ab)∘P for a = {a}, b = {b}, beta = {beta}");
    }
}

// ── 3: growth-index estimates and the slope gap ──────────────────────────

fn gevrey_index_estimates() {
    let beta = r("1/2"); // non-integer, hence non-resonant for every pair
    for (a, b) in [(1i64, 2i64), (2, 3), (3, 5)] {
        let target = b as f64 / a as f64;
        for k in 0..a {
            let f =
                build_gamma_series(&GammaSeriesSpec::axis(a, b, &beta, k, 300).unwrap());
            let rep = estimate_gevrey_index(&f, &f.ray_meta().unwrap(), None).unwrap();
            assert!(
                (rep.estimated_index - target).abs() <= 0.05,
                "(a, b) = ({a}, {b}), member {k}: estimated {} vs {target}",
                rep.estimated_index
            );
        }

        let grid: Vec<Rational> = default_s_grid()
            .into_iter()
            .filter_map(|s| match s {
                SValue::Finite(x) => Some(x),
                SValue::Infinity => None,
            })
            .collect();
        let sigma = Rational::new(b, a);
        let nearest = grid
            .iter()
            .min_by_key(|s| (*s - &sigma).abs())
            .unwrap()
            .clone();
        let scan = slope_scan(a, b, &beta, &grid, 200).unwrap();
        assert_eq!(
            scan.detected_gap,
            Some(nearest),
            "(a, b) = ({a}, {b}): gap must sit at the grid point nearest {sigma}"
        );
    }
}

// ── 4: resonant degeneration data and the modified series ────────────────

fn resonant_shape_exact() {
    let beta = r("8"); // 8 = 2·4 + 3·0, so the class k = 0 degenerates
    let rd = resonance_data(2, 3, &beta).expect("beta = 8 must be flagged resonant");
    assert_eq!((rd.q, rd.m0, rd.mprime), (0, 4, 2));
    assert_eq!(rd.vtilde, ExponentPair::from_ints(-2, 4));

    let poly = build_gamma_series(&GammaSeriesSpec::axis(2, 3, &beta, 0, 50).unwrap());
    assert_eq!(poly.num_terms(), 2, "the degenerate member is a two-term polynomial");

    let (p, e) = hypergeometric_ops(2, 3, &beta).unwrap();
    let modified = build_vtilde_series(&rd, 2, 3, &beta, 50);
    assert!(e.apply(&modified).is_zero(), "E must kill the modified series exactly");
    let image = p.apply(&modified);
    assert_eq!(image.num_terms(), 1, "P of the modified series is a single monomial");
    assert_eq!(
        image.coeff_at(&ExponentPair::from_ints(-2, 2)),
        r("-12"),
        "the monomial sits at (-2, 2) with coefficient -12"
    );
}

// ── 5: recurrence solve round-trip ────────────────────────────────────────

fn recurrence_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0005);
    let m_max = 60i64;
    for trial in 0..20 {
        let (a, b) = random_pair(&mut rng);
        // Mostly non-integer β so the closed form applies to every class;
        // the integer trials exercise the resonant skip.
        let den = if trial % 4 == 0 { 1 } else { rng.random_range(2..=9) };
        let beta = Rational::new(rng.random_range(-20..=20), den);
        let k = rng.random_range(0..a);
        let base = axis_base(a, b, &beta, k);

        let forcing = ResidueClassSeries::new(
            k,
            &base - &Rational::from_int(b),
            (0..=m_max)
                .map(|_| Rational::new(rng.random_range(-9..=9), rng.random_range(1..=9)))
                .collect(),
        );
        let h = solve_p_recurrence(&[forcing.clone()], a, b, &beta, m_max, None).remove(0);
        let hs = residue_class_to_series(&h, a, b);
        let (p, e) = hypergeometric_ops(a, b, &beta).unwrap();

        // Every ray cell has weight β, so E must vanish identically …
        assert!(e.apply(&hs).is_zero(), "trial {trial}: E(h) != 0");

        // … and P reproduces the forcing on every certified cell.
        let ph = p.apply(&hs);
        for m in 0..=m_max {
            let cell = ExponentPair::new(
                &forcing.gamma_k + &Rational::from_int(-b * m),
                Rational::from_int(k + a * m),
            );
            if ph.within_truncation(&cell) {
                assert_eq!(
                    ph.coeff_at(&cell),
                    forcing.coeffs[m as usize],
                    "trial {trial}: P(h) disagrees with the forcing at ray index {m}"
                );
            }
        }
        // P(h) may not leak off the forcing ray.
        for (cell, _) in ph.terms() {
            let step = &cell.e2 - &Rational::from_int(k);
            let m = (&step / &Rational::from_int(a)).to_i64().expect("ray-aligned cell");
            assert_eq!(
                cell.e1,
                &forcing.gamma_k + &Rational::from_int(-b * m),
                "trial {trial}: P(h) has a term off the forcing ray at {cell}"
            );
        }

        // Homogeneous unit-seed solve reproduces the Γ-coefficients.
        let hom = solve_p_recurrence(
            &[ResidueClassSeries::new(k, &base - &Rational::from_int(b), vec![])],
            a,
            b,
            &beta,
            10,
            Some(&[Rational::one()]),
        )
        .remove(0);
        let v = ExponentPair::new(base.clone(), Rational::from_int(k));
        for m in 0..=10i64 {
            assert_eq!(
                hom.coeffs[m as usize],
                gamma_coeff(&v, (-b * m, a * m)),
                "trial {trial}: homogeneous coefficient {m} drifts from the Γ-coefficient"
            );
        }

        // Closed form agrees with the iteration wherever it is defined.
        if !base.is_natural() {
            let short = ResidueClassSeries::new(
                k,
                forcing.gamma_k.clone(),
                forcing.coeffs[..9].to_vec(),
            );
            let iterated = solve_p_recurrence(&[short.clone()], a, b, &beta, 8, None).remove(0);
            let closed = solve_p_recurrence_closed_form(&short, a, b, &beta, 8);
            assert_eq!(
                iterated.coeffs, closed.coeffs,
                "trial {trial}: closed form disagrees with the iteration"
            );
        }
    }
}

// ── 6: obstruction-coefficient extraction ────────────────────────────────

fn lambda_extraction() {
    // Single spikes: the extracted λ equals the one-term formula
    //   λ = −(k+ar)!·f_r / (k!·(γ_k)_{b(r+1)})
    // exactly, and the float path reproduces it to 1e-10 relative.
    let cases: [(i64, i64, &str, i64, i64, &str); 5] = [
        (2, 3, "1/2", 0, 1, "1"),
        (2, 3, "1/2", 1, 2, "5/3"),
        (2, 3, "-3/4", 0, 3, "-7/2"),
        (3, 5, "2/3", 2, 1, "4/9"),
        (3, 5, "1/7", 1, 0, "2"),
    ];
    for (a, b, beta_text, k, r0, c_text) in cases {
        let beta = r(beta_text);
        let base = axis_base(a, b, &beta, k);
        let c = r(c_text);
        let mut coeffs = vec![Rational::zero(); r0 as usize + 1];
        coeffs[r0 as usize] = c.clone();
        let f = ResidueClassSeries::new(k, &base - &Rational::from_int(b), coeffs);

        let rising_k = Rational::from_int(k + a * r0).falling((a * r0) as u32); // (k+ar)!/k!
        let expect = -&(&(&rising_k * &c) / &base.falling((b * (r0 + 1)) as u32));
        let exact = extract_lambda_exact(&f, a, b, &beta).unwrap();
        assert_eq!(exact, expect, "({a}, {b}, {beta}), k = {k}, spike at {r0}");

        let res = extract_lambda(&f, a, b, &beta, &Rational::one(), r0 as usize + 5).unwrap();
        assert_eq!(res.k, k);
        assert!(
            (res.lambda - expect.to_f64()).abs() <= 1e-10 * expect.to_f64().abs(),
            "({a}, {b}, {beta}): float λ = {} vs exact {}",
            res.lambda,
            expect
        );
    }

    // Subtracting λ·φ from a spike solution removes the divergent tail:
    // the remainder's estimated index drops to ≤ 1.1 over 200 ray terms.
    let beta = r("1/2");
    let m_max = 200i64;
    for (k, r0) in [(0i64, 1i64), (1, 3)] {
        let base = axis_base(2, 3, &beta, k);
        let mut coeffs = vec![Rational::zero(); r0 as usize + 1];
        coeffs[r0 as usize] = r("3/2");
        let f = ResidueClassSeries::new(k, &base - &Rational::from_int(3), coeffs);
        let h = solve_p_recurrence(&[f.clone()], 2, 3, &beta, m_max, None).remove(0);
        let lambda = extract_lambda_exact(&f, 2, 3, &beta).unwrap();

        let v = ExponentPair::new(base.clone(), Rational::from_int(k));
        let diff: Vec<Rational> = (0..=m_max)
            .map(|m| {
                let phi_m = gamma_coeff(&v, (-3 * m, 2 * m));
                &h.coeffs[m as usize] - &(&lambda * &phi_m)
            })
            .collect();
        let ds = residue_class_to_series(&ResidueClassSeries::new(k, base.clone(), diff), 2, 3);
        let rep = estimate_gevrey_index(&ds, &ds.ray_meta().unwrap(), None).unwrap();
        assert!(
            rep.estimated_index <= 1.1,
            "k = {k}, spike at {r0}: remainder index {} stays divergent",
            rep.estimated_index
        );

        // Control: a perturbed λ leaves the full divergent tail in place.
        if k == 0 {
            let wrong = &lambda + &Rational::one();
            let bad: Vec<Rational> = (0..=m_max)
                .map(|m| {
                    let phi_m = gamma_coeff(&v, (-3 * m, 2 * m));
                    &h.coeffs[m as usize] - &(&wrong * &phi_m)
                })
                .collect();
            let bs =
                residue_class_to_series(&ResidueClassSeries::new(k, base.clone(), bad), 2, 3);
            let rep = estimate_gevrey_index(&bs, &bs.ray_meta().unwrap(), None).unwrap();
            assert!(
                rep.estimated_index > 1.3,
                "perturbed λ should keep index near 3/2, got {}",
                rep.estimated_index
            );
        }
    }
}

// ── 7: dimension tables against the jet oracle ───────────────────────────

fn dimension_oracle() {
    for (a, b, beta_text) in [(2i64, 3i64, "1/2"), (2, 3, "8"), (1, 2, "5")] {
        let beta = r(beta_text);

        // The stabilized jet kernel at an off-axis base point has dimension
        // a, and doubling the box does not move it.
        let m24 = solution_complex_maps(a, b, &beta, &axis_point(), (24, 24)).unwrap();
        let d24 = jet_kernel_dim(&m24, default_projection_degree(24));
        assert_eq!(d24, a as usize, "({a}, {b}, {beta}): kernel dimension at box 24");
        let m48 = solution_complex_maps(a, b, &beta, &axis_point(), (48, 48)).unwrap();
        let d48 = jet_kernel_dim(&m48, default_projection_degree(48));
        assert_eq!(d48, d24, "({a}, {b}, {beta}): kernel dimension moved under doubling");

        // Every (point, order, coefficient-space) cell of the predicted
        // tables is measured and matches, including the all-zero quotient
        // tables at the origin.
        for point in [PointSpec::Origin, axis_point()] {
            for s in default_s_grid() {
                for sheaf in [Sheaf::Gevrey, Sheaf::Quotient] {
                    let t = compare_oracle_vs_theory(a, b, &beta, &point, sheaf, &s, (24, 24))
                        .unwrap();
                    assert_eq!(
                        t.status,
                        ExtStatus::Match,
                        "({a}, {b}, {beta}) point = {point}, sheaf = {sheaf}, s = {s}: \
                         predicted {:?}, measured {:?}",
                        t.predicted,
                        t.measured
                    );
                    if point == PointSpec::Origin && sheaf == Sheaf::Quotient {
                        assert_eq!(t.predicted, [0, 0, 0]);
                        assert_eq!(t.measured, Some([0, 0, 0]));
                    }
                }
            }
        }
    }
}

// ── 8: monodromy eigenvalue spectrum ─────────────────────────────────────

fn monodromy_spectrum() {
    for (a, b, beta_text) in [
        (2i64, 3i64, "1/2"),
        (2, 3, "8"),
        (3, 5, "2"),
        (5, 7, "-3"),
        (1, 2, "5"),
        (4, 9, "11/3"),
    ] {
        let beta = r(beta_text);
        let spectrum = monodromy_eigenvalues(a, b, &beta);
        assert_eq!(spectrum.eigenvalues.len(), a as usize);
        assert!(spectrum.unit_modulus_defect() < 1e-12);

        let beta_f = beta.to_f64();
        for (k, &(re, im)) in spectrum.eigenvalues.iter().enumerate() {
            let theta = std::f64::consts::TAU * (beta_f - (b * k as i64) as f64) / a as f64;
            assert!(
                (re - theta.cos()).abs() <= 1e-12 && (im - theta.sin()).abs() <= 1e-12,
                "({a}, {b}, {beta}): eigenvalue {k} drifts from the closed form"
            );
        }

        let ones = spectrum
            .eigenvalues
            .iter()
            .filter(|(re, im)| ((re - 1.0).powi(2) + im * im).sqrt() <= 1e-9)
            .count();
        if beta.is_integer() {
            assert_eq!(ones, 1, "({a}, {b}, {beta}): integer β must give exactly one 1");
        }
    }
}

// ── 9: coefficient-ratio divergence split ────────────────────────────────

/// |c_{m+1}/c_m| along the axis ray of class k (exact).
fn axis_ratio(beta: &Rational, k: i64, m: i64) -> Rational {
    let v = ExponentPair::new(axis_base(2, 3, beta, k), Rational::from_int(k));
    let num = gamma_coeff(&v, (-3 * (m + 1), 2 * (m + 1)));
    let den = gamma_coeff(&v, (-3 * m, 2 * m));
    (&num / &den).abs()
}

/// |c_{m+1}/c_m| along the generic ray of member j (exact).
fn generic_ratio(beta: &Rational, j: i64, m: i64) -> Rational {
    let v = ExponentPair::new(
        Rational::from_int(j),
        &(beta - &Rational::from_int(2 * j)) / &Rational::from_int(3),
    );
    let num = gamma_coeff(&v, (3 * (m + 1), -2 * (m + 1)));
    let den = gamma_coeff(&v, (3 * m, -2 * m));
    (&num / &den).abs()
}

fn coefficient_ratio_split() {
    let beta = r("1/2");

    // Exact ratio values at m = 100, frozen from an independent exact
    // recomputation: the families have split by three orders of magnitude
    // here, though the clean 1e∓3 thresholds arrive slightly later.
    assert!((generic_ratio(&beta, 0, 100).to_f64() - 1.4570943097551342e-3).abs() < 1e-10);
    assert!((axis_ratio(&beta, 0, 100).to_f64() - 669.9843830814984).abs() < 1e-7);

    // Exact crossing indices of the decimal thresholds.
    let kilo = r("1000");
    let milli = r("1/1000");
    assert!(generic_ratio(&beta, 0, 146) >= milli, "generic ratio crossed early");
    assert!(generic_ratio(&beta, 0, 147) < milli, "generic ratio must cross at 147");
    assert!(axis_ratio(&beta, 0, 148) <= kilo, "axis ratio crossed early");
    assert!(axis_ratio(&beta, 0, 149) > kilo, "axis ratio must cross at 149");

    // Past the crossings the split holds for every family member …
    for m in [150i64, 200] {
        for j in 0..3 {
            assert!(generic_ratio(&beta, j, m) < milli, "generic {j} at {m}");
        }
        for k in 0..2 {
            assert!(axis_ratio(&beta, k, m) > kilo, "axis {k} at {m}");
        }
    }

    // … and the trend is monotone in the sampled range: the generic family
    // contracts toward 0 while the axis family blows up.
    for m in [50i64, 100, 150] {
        assert!(generic_ratio(&beta, 0, m + 50) < generic_ratio(&beta, 0, m));
        assert!(axis_ratio(&beta, 0, m + 50) > axis_ratio(&beta, 0, m));
    }
}

// ── battery runner ───────────────────────────────────────────────────────

type Check = (&'static str, fn(), Option<Duration>);

#[test]
fn acceptance_battery() {
    let checks: [Check; 9] = [
        (
            "exact annihilation of both series families",
            annihilation_exact,
            Some(Duration::from_secs(10)),
        ),
        ("operator commutation identity on random systems", commutation_random, None),
        (
            "growth-index estimates and the slope gap",
            gevrey_index_estimates,
            Some(Duration::from_secs(30)),
        ),
        ("resonant degeneration data and the modified series", resonant_shape_exact, None),
        ("recurrence solve round-trip", recurrence_round_trip, None),
        ("obstruction-coefficient extraction", lambda_extraction, None),
        (
            "dimension tables against the jet oracle",
            dimension_oracle,
            Some(Duration::from_secs(60)),
        ),
        ("monodromy eigenvalue spectrum", monodromy_spectrum, None),
        ("coefficient-ratio divergence split", coefficient_ratio_split, None),
    ];

    let mut failures = Vec::new();
    for (i, (label, body, budget)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(body));
        let elapsed = start.elapsed();
        let over_budget = budget.map_or(false, |limit| elapsed > limit);
        let verdict = match (&outcome, over_budget) {
            (Ok(()), false) => "PASS",
            (Ok(()), true) => "FAIL (over budget)",
            (Err(_), _) => "FAIL",
        };
        println!("[{}/9] {label:<52} {verdict} ({elapsed:.2?})", i + 1);
        if let Err(payload) = outcome {
            let message = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "opaque panic".into());
            failures.push(format!("{label}: {message}"));
        } else if over_budget {
            failures.push(format!(
                "{label}: took {elapsed:.2?}, budget {:?}",
                budget.unwrap()
            ));
        }
    }

    assert!(failures.is_empty(), "acceptance failures:\n  {}", failures.join("\n  "));
}
