//! One line per acceptance criterion: status, wall time against its budget,
//! and the headline measurement. Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use csk_core::report::ProbeReport;
use csk_core::suites::{run_suite, SuiteConfig};

struct Criterion {
    id: u32,
    title: &'static str,
    suite: &'static str,
    budget_s: f64,
    summary: fn(&ProbeReport) -> String,
}

fn worst(rep: &ProbeReport) -> String {
    let w = rep.checks.iter().map(|c| c.measured.0).fold(0.0, f64::max);
    format!("worst {w:.3e} over {} checks", rep.checks.len())
}

fn least(rep: &ProbeReport) -> String {
    let w = rep.checks.iter().map(|c| c.measured.0).fold(f64::INFINITY, f64::min);
    format!("least {w:.3} over {} checks", rep.checks.len())
}

fn failures(rep: &ProbeReport) -> String {
    let bad = rep.checks.iter().filter(|c| !c.pass).count();
    format!("{bad} of {} checks failed", rep.checks.len())
}

fn named(rep: &ProbeReport) -> String {
    rep.checks.iter().map(|c| format!("{}={:.3}", c.name, c.measured.0)).collect::<Vec<_>>().join(" ")
}

const CRITERIA: [Criterion; 13] = [
    Criterion { id: 1, title: "closed-form collapse", suite: "closed-form", budget_s: 1.0, summary: worst },
    Criterion { id: 2, title: "conservation", suite: "conservation", budget_s: 5.0, summary: worst },
    Criterion { id: 3, title: "Chapman-Kolmogorov", suite: "chapman-kolmogorov", budget_s: 30.0, summary: worst },
    Criterion { id: 4, title: "Laplace transform", suite: "laplace-transform", budget_s: 30.0, summary: worst },
    Criterion { id: 5, title: "PDE residual order", suite: "pde-residual", budget_s: 10.0, summary: least },
    Criterion { id: 6, title: "gradient vs finite differences", suite: "gradient-fd", budget_s: 5.0, summary: worst },
    Criterion { id: 7, title: "Hardy constants", suite: "hardy", budget_s: 20.0, summary: failures },
    Criterion { id: 8, title: "S^{alpha,beta} threshold", suite: "sab-threshold", budget_s: 60.0, summary: failures },
    Criterion { id: 9, title: "Muckenhoupt classifier", suite: "muckenhoupt", budget_s: 30.0, summary: failures },
    Criterion { id: 10, title: "Rellich", suite: "rellich", budget_s: 60.0, summary: named },
    Criterion { id: 11, title: "boundary limits", suite: "boundary-limits", budget_s: 10.0, summary: failures },
    Criterion { id: 12, title: "closedness probe", suite: "closedness", budget_s: 120.0, summary: failures },
    Criterion { id: 13, title: "square-function probe", suite: "rademacher", budget_s: 120.0, summary: failures },
];

fn main() -> ExitCode {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all = true;
    for c in CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let res = run_suite(c.suite, &SuiteConfig::default());
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match &res {
            Ok(rep) => (rep.pass && secs < c.budget_s, (c.summary)(rep)),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= ok;
        println!(
            "criterion {:>2} {:<32} {}  {:>7.2}s / {:>5.0}s  {}",
            c.id,
            c.title,
            if ok { "PASS" } else { "FAIL" },
            secs,
            c.budget_s,
            detail
        );
        if let Ok(rep) = &res {
            for f in rep.failures() {
                println!("    failed: {} measured {:?} params {:?}", f.name, f.measured.0, f.params);
            }
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
