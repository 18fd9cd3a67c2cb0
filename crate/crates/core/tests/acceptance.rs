//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;

use cubic_disc::reports::{run_suite, Backend, Check, SuiteResult, DEFAULT_TOL};

/// Criterion number, title and the check-name prefixes that decide it.
const CRITERIA: [(u32, &str, &[&str]); 10] = [
    (1, "upsilon identities", &["irrep.upsilon_identity_"]),
    (2, "discriminant identity", &["irrep.discriminant."]),
    (3, "dagger operator and T_K spectrum", &["preliminaries.dagger.", "preliminaries.t_k_s_hat.", "irrep.projection."]),
    (
        4,
        "orbit characterization",
        &["orbit.s_hat.", "orbit.transports_pass", "orbit.perturbations_fail", "orbit.predicates_agree"],
    ),
    (5, "stabilizer and orbit dimension", &["orbit.stabilizer.", "orbit.orbit_dimension."]),
    (6, "tangent operator and contractions", &["orbit.tangent_h.", "orbit.contraction_identity_"]),
    (
        7,
        "sp(1) frames",
        &["irrep.frames.", "orbit.frames.", "models.compact.eps_wedge_eps", "models.split.eps_wedge_eps"],
    ),
    (8, "model spaces", &["models."]),
    (9, "first-Bianchi system", &["bianchi."]),
    (10, "torsion module decomposition", &["irrep.casimir.torsion"]),
];

fn selected<'a>(r: &'a SuiteResult, prefixes: &[&str]) -> Vec<&'a Check> {
    r.checks.iter().filter(|c| prefixes.iter().any(|p| c.name.starts_with(p))).collect()
}

fn line(n: u32, title: &str, checks: &[&Check], extra: &str) -> bool {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let ok = !checks.is_empty() && failed.is_empty();
    let status = if ok { "PASS" } else { "FAIL" };
    print!("criterion {n:>2} {status}  {title} ({} checks{extra})", checks.len());
    if !failed.is_empty() {
        print!("; failed: {}", failed.join(", "));
    }
    println!();
    ok
}

fn main() -> ExitCode {
    let exact = run_suite("all", Backend::Exact, 7, None).expect("exact run");
    let float = run_suite("all", Backend::Float, 7, Some(DEFAULT_TOL)).expect("float run");
    let mut all_ok = true;
    for (n, title, prefixes) in CRITERIA {
        let checks = selected(&exact, prefixes);
        all_ok &= line(n, title, &checks, "");
    }
    // Every check of criteria 1-10 in float mode, at relative tolerance 1e-9.
    let prefixes: Vec<&str> = CRITERIA.iter().flat_map(|(_, _, p)| p.iter().copied()).collect();
    let checks = selected(&float, &prefixes);
    let extra = format!(", max relative residual {:.2e}", float.max_relative_residual);
    all_ok &= line(11, "float backend shadow at 1e-9", &checks, &extra);
    println!("exact wall time {:.1} s, float wall time {:.1} s", exact.timing, float.timing);
    if exact.timing > 60.0 {
        println!("note: exact run exceeded 60 s");
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
