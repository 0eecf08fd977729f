//! Acceptance suite. Each test prints one `PASS`/`FAIL` line; run with
//! `--nocapture` to see them.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use flowloc::entropy::{log_mean, log_mean_cs_check, log_mean_direct, log_mean_series, LOG_MEAN_SEAM};
use flowloc::generate::derive_seed;
use flowloc::localization::{check_dissipation, reports_to_json, Status};
use flowloc::{generate, run_suite, transfer_current_matrix, Check, ConductanceMode, Family, FamilySpec, SplitMix64, SuiteConfig, VerificationReport, WeightedMultigraph};

struct Suite {
    reports: Vec<VerificationReport>,
    elapsed: Duration,
}

fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let reports = run_suite(&SuiteConfig::default());
        Suite {
            reports,
            elapsed: start.elapsed(),
        }
    })
}

fn rows(check: Check) -> Vec<&'static VerificationReport> {
    suite().reports.iter().filter(|r| r.check == check).collect()
}

fn detail(r: &VerificationReport, key: &str) -> f64 {
    r.details
        .iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("{:?} has no detail {key}", r.check))
        .1
}

fn verdict(criterion: u32, title: &str, ok: bool, summary: String) {
    println!("criterion {criterion:>2} {}: {title}: {summary}", if ok { "PASS" } else { "FAIL" });
}

fn describe(r: &VerificationReport) -> String {
    format!(
        "{} {} size {} ({}) value {:?} bound {:?} status {:?}",
        r.check, r.graph.family, r.graph.size, r.graph.conductance, r.value, r.bound, r.status
    )
}

/// A seeded suite-family graph with `4 ≤ n ≤ max_n`.
fn random_instance(rng: &mut SplitMix64, max_n: usize) -> WeightedMultigraph {
    const FAMILIES: [Family; 8] = [
        Family::Path,
        Family::Cycle,
        Family::Complete,
        Family::Star,
        Family::Grid2d,
        Family::Hypercube,
        Family::Gnp,
        Family::RandomWeighted,
    ];
    let family = FAMILIES[rng.below(FAMILIES.len())];
    let sizes = family.sizes_in(4, max_n);
    let size = sizes[rng.below(sizes.len())];
    let mut spec = FamilySpec::new(family, size).with_seed(rng.next_u64());
    if rng.below(2) == 1 {
        spec.conductance = ConductanceMode::LogUniform;
    }
    generate(&spec).expect("suite families generate")
}

#[test]
fn criterion_01_pibar_spectral_bound() {
    let rows = rows(Check::SpectralBound);
    let bad: Vec<_> = rows.iter().filter(|r| r.status != Status::Pass).collect();
    let worst = rows
        .iter()
        .map(|r| r.value.unwrap() / r.bound.unwrap())
        .fold(0.0f64, f64::max);
    let elapsed = suite().elapsed.as_secs_f64();
    let ok = bad.is_empty() && rows.len() >= 150 && elapsed < 300.0;
    verdict(
        1,
        "Pibar_norm <= 2 ln n",
        ok,
        format!("{} graphs, worst ratio {worst:.6}, full suite {elapsed:.1}s", rows.len()),
    );
    for r in &bad {
        println!("    {}", describe(r));
    }
    assert!(ok);
}

#[test]
fn criterion_02_unweighted_ordering_and_trees() {
    let rows: Vec<_> = rows(Check::UnweightedBounds)
        .into_iter()
        .filter(|r| r.graph.conductance == "unit")
        .collect();
    let bad: Vec<_> = rows.iter().filter(|r| r.status != Status::Pass).collect();
    for r in &rows {
        assert!(detail(r, "avg_l1_flow") <= detail(r, "kbar_norm") * (1.0 + 1e-9) + 1e-8);
    }

    let mut tree_err = 0.0f64;
    let mut trees = 0;
    for (family, size) in (4..=64).flat_map(|n| [(Family::Path, n), (Family::Star, n)]) {
        let g = generate(&FamilySpec::new(family, size)).unwrap();
        assert!(g.is_tree());
        let cm = transfer_current_matrix(&g).unwrap();
        tree_err = tree_err
            .max((cm.avg_l1_flow() - 1.0).abs())
            .max((cm.kbar_norm().unwrap().value - 1.0).abs());
        trees += 1;
    }
    let ok = bad.is_empty() && !rows.is_empty() && tree_err <= 1e-10;
    verdict(
        2,
        "avg l1 flow <= Kbar_norm <= 2 ln n; trees equal 1",
        ok,
        format!("{} unit graphs, {trees} trees, max tree error {tree_err:.2e}", rows.len()),
    );
    for r in &bad {
        println!("    {}", describe(r));
    }
    assert!(ok);
}

#[test]
fn criterion_03_entropy_dissipation() {
    let mut rng = SplitMix64::new(derive_seed(&[7, 3]));
    let mut worst_rel = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut failures = Vec::new();
    for i in 0..50 {
        let g = random_instance(&mut rng, 32);
        let w: Vec<f64> = (0..g.m()).map(|_| rng.uniform(0.1, 1.0)).collect();
        let mu = g.measure_from_weights(&w).unwrap().mu;
        let v = rng.below(g.n());
        let r = check_dissipation(&g, &mu, v).unwrap();
        let closed = detail(&r, "closed_form");
        assert!((closed + mu[v].ln()).abs() <= 1e-12 * closed.abs());
        worst_rel = worst_rel.max(r.value.unwrap());
        worst_gap = worst_gap.max(detail(&r, "telescoping_gap"));
        if r.status != Status::Pass {
            failures.push(format!("instance {i}: n {} m {} {}", g.n(), g.m(), describe(&r)));
        }
    }
    let ok = failures.is_empty() && worst_rel <= 1e-5 && worst_gap <= 1e-8;
    verdict(
        3,
        "integral of I(h_s) = -ln mu_w(v)",
        ok,
        format!("50 instances, worst relative error {worst_rel:.2e}, worst telescoping gap {worst_gap:.2e}"),
    );
    for f in &failures {
        println!("    {f}");
    }
    assert!(ok);
}

#[test]
fn criterion_04_green_integral() {
    let rows = rows(Check::GreenIntegral);
    let ran: Vec<_> = rows.iter().filter(|r| r.status != Status::Skipped).collect();
    let bad: Vec<_> = ran.iter().filter(|r| r.status != Status::Pass).collect();
    let all_small_ran = rows.iter().all(|r| r.n > 32 || r.status != Status::Skipped);
    let worst = ran
        .iter()
        .map(|r| r.value.unwrap() / r.bound.unwrap())
        .fold(0.0f64, f64::max);
    let ok = bad.is_empty() && all_small_ran && !ran.is_empty();
    verdict(
        4,
        "Green time integral = B L+ B^T",
        ok,
        format!("{} graphs with n <= 32, worst error/threshold {worst:.3e}", ran.len()),
    );
    for r in &bad {
        println!("    {}", describe(r));
    }
    assert!(ok);
}

#[test]
fn criterion_05_log_mean_cauchy_schwarz() {
    let mut rng = SplitMix64::new(derive_seed(&[7, 5]));
    let mut worst_slack = f64::INFINITY;
    let mut failures = 0;
    for _ in 0..1000 {
        let g = random_instance(&mut rng, 20);
        let h: Vec<f64> = (0..g.n()).map(|_| rng.log_uniform(1e-6, 1e6)).collect();
        let w: Vec<f64> = (0..g.m()).map(|_| rng.uniform(0.0, 1.0)).collect();
        let cs = log_mean_cs_check(&g, &h, &w).unwrap();
        let slack = cs.rhs - cs.lhs;
        worst_slack = worst_slack.min(slack / cs.rhs);
        if slack < -1e-9 * cs.rhs {
            failures += 1;
        }
    }
    let mut equality_ok = true;
    for _ in 0..20 {
        let g = random_instance(&mut rng, 20);
        let c = rng.log_uniform(1e-3, 1e3);
        let w: Vec<f64> = (0..g.m()).map(|_| rng.uniform(0.0, 1.0)).collect();
        let cs = log_mean_cs_check(&g, &vec![c; g.n()], &w).unwrap();
        equality_ok &= cs.lhs == 0.0 && cs.rhs == 0.0;
    }
    let ok = failures == 0 && equality_ok;
    verdict(
        5,
        "log-mean Cauchy-Schwarz",
        ok,
        format!("1000 triples, min relative slack {worst_slack:.3e}, constant h gives 0 = 0: {equality_ok}"),
    );
    assert!(ok);
}

#[test]
fn criterion_06_log_mean_sandwich_and_seam() {
    let mut rng = SplitMix64::new(derive_seed(&[7, 6]));
    let mut failures = 0;
    for _ in 0..10_000 {
        let a = rng.log_uniform(1e-8, 1e8);
        let b = rng.log_uniform(1e-8, 1e8);
        let l = log_mean(a, b).unwrap();
        if l < (a * b).sqrt() * (1.0 - 1e-12) || l > 0.5 * (a + b) * (1.0 + 1e-12) {
            failures += 1;
        }
    }
    // Both branches evaluated on either side of the switch point.
    let mut seam = 0.0f64;
    for k in 0..200 {
        let a = rng.log_uniform(1e-8, 1e8);
        let ratio = LOG_MEAN_SEAM * (0.5 + k as f64 / 100.0);
        let b = a * (1.0 + ratio);
        let direct = log_mean_direct(a, b);
        let series = log_mean_series(a, b);
        seam = seam.max((direct - series).abs() / series);
    }
    let ok = failures == 0 && seam <= 1e-10;
    verdict(
        6,
        "sqrt(ab) <= log mean <= (a+b)/2",
        ok,
        format!("10000 pairs, {failures} violations, seam discontinuity {seam:.2e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_07_projection_and_reciprocity() {
    let projection = rows(Check::Projection);
    let reciprocity = rows(Check::Reciprocity);
    let bad: Vec<_> = projection
        .iter()
        .chain(&reciprocity)
        .filter(|r| r.status != Status::Pass)
        .collect();
    let unit_k_asym = reciprocity
        .iter()
        .filter(|r| r.graph.conductance == "unit")
        .map(|r| detail(r, "k_asymmetry"))
        .fold(0.0f64, f64::max);
    let worst_defect = projection.iter().map(|r| r.value.unwrap()).fold(0.0f64, f64::max);
    let worst_asym = projection.iter().map(|r| detail(r, "asymmetry")).fold(0.0f64, f64::max);
    let worst_trace = projection.iter().map(|r| detail(r, "trace_error")).fold(0.0f64, f64::max);
    let ok = bad.is_empty() && !projection.is_empty() && projection.len() == reciprocity.len() && unit_k_asym <= 1e-10;
    verdict(
        7,
        "Pi projection, symmetry, trace; K symmetric for C = I",
        ok,
        format!(
            "{} graphs, idempotence {worst_defect:.2e}, asymmetry {worst_asym:.2e}, trace {worst_trace:.2e}, unit K asymmetry {unit_k_asym:.2e}",
            projection.len()
        ),
    );
    for r in &bad {
        println!("    {}", describe(r));
    }
    assert!(ok);
}

#[test]
fn criterion_08_parallel_gadget() {
    let rows = rows(Check::ParallelGadget);
    let mut summary = Vec::new();
    let mut ok = rows.len() == 3;
    for r in &rows {
        let m = r.m as f64;
        let kbar = detail(r, "kbar_norm");
        let pibar = detail(r, "pibar_norm");
        ok &= r.status == Status::Pass && kbar >= 0.9 * m.sqrt() && pibar <= 2.0 * 2f64.ln() + 1e-9 && r.note.contains("proxy");
        summary.push(format!("m={} Kbar {kbar:.4} (0.9 sqrt m = {:.4}) Pibar {pibar:.4}", r.m, 0.9 * m.sqrt()));
    }
    verdict(8, "gadget Kbar_norm >= 0.9 sqrt(m), Pibar_norm <= 2 ln 2", ok, summary.join("; "));
    assert!(ok);
}

#[test]
fn criterion_09_current_oracle() {
    let rows = rows(Check::CurrentOracle);
    let ran: Vec<_> = rows.iter().filter(|r| r.status != Status::Skipped).collect();
    let bad: Vec<_> = ran.iter().filter(|r| r.status != Status::Pass).collect();
    let all_small_ran = rows.iter().all(|r| r.n > 32 || r.status != Status::Skipped);
    let worst = ran.iter().map(|r| r.value.unwrap()).fold(0.0f64, f64::max);
    let ok = bad.is_empty() && all_small_ran && !ran.is_empty() && worst <= 1e-8;
    verdict(
        9,
        "spectral currents = direct solves",
        ok,
        format!("{} graphs with n <= 32, worst entry difference {worst:.2e}", ran.len()),
    );
    for r in &bad {
        println!("    {}", describe(r));
    }
    assert!(ok);
}

#[test]
fn criterion_10_determinism() {
    let first = reports_to_json(&suite().reports);
    let config = SuiteConfig {
        jobs: 1,
        ..SuiteConfig::default()
    };
    let second = reports_to_json(&run_suite(&config));
    let ok = first == second;
    verdict(
        10,
        "identical config and seed give byte-identical JSON",
        ok,
        format!("{} bytes, {} rows, thread pools of default size and 1", first.len(), suite().reports.len()),
    );
    assert!(ok);
}

#[test]
fn suite_has_no_failures_or_errors() {
    let bad: Vec<_> = suite()
        .reports
        .iter()
        .filter(|r| matches!(r.status, Status::Fail | Status::Error | Status::Flagged))
        .collect();
    for r in &bad {
        println!("    {} note {}", describe(r), r.note);
    }
    assert!(bad.is_empty());
}
