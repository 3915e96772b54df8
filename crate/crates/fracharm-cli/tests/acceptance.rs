//! Runs the ten acceptance criteria at their stated tolerances and runtime
//! budgets, printing one line per criterion. Exits nonzero if any fails.

use fracharm_cli::checks::{Check, Outcome};
use fracharm_cli::experiments::*;
use std::process::ExitCode;
use std::time::{Duration, Instant};

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> anyhow::Result<Outcome>,
}

fn c1() -> anyhow::Result<Outcome> {
    ml_eigen(&MlEigenParams::default())
}

fn c2() -> anyhow::Result<Outcome> {
    let out = figure1(&Figure1Params::default())?;
    let mut o = Outcome::default();
    let curves = out.tables.iter().filter(|t| t.name.starts_with("figure1_alpha_")).count();
    o.check(Check::at_least("curves emitted", curves as f64, 6.0));
    o.merge(out);
    Ok(o)
}

fn c3() -> anyhow::Result<Outcome> {
    green_kernels(&GreenRunParams { dirichlet_points: 0, ..Default::default() })
}

fn c4() -> anyhow::Result<Outcome> {
    dirichlet_residual(&GreenRunParams::default())
}

fn c5() -> anyhow::Result<Outcome> {
    boundary_exponents(&AsympParams::default())
}

fn c6() -> anyhow::Result<Outcome> {
    boundary_limit(&AsympParams::default())
}

fn c7() -> anyhow::Result<Outcome> {
    eigen(&EigenRunParams::default())
}

fn c8() -> anyhow::Result<Outcome> {
    span(&SpanParams::default())
}

fn c9() -> anyhow::Result<Outcome> {
    approx(&ApproxParams::default())
}

fn c10() -> anyhow::Result<Outcome> {
    identities()
}

const fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let criteria = [
        Criterion { id: 1, name: "Mittag-Leffler eigenproblem", budget: secs(10), run: c1 },
        Criterion { id: 2, name: "Mittag-Leffler curves and initial slopes", budget: secs(5), run: c2 },
        Criterion { id: 3, name: "classical Green oracle and kernel paths", budget: secs(30), run: c3 },
        Criterion { id: 4, name: "Dirichlet solve residual", budget: secs(120), run: c4 },
        Criterion { id: 5, name: "boundary exponents", budget: secs(120), run: c5 },
        Criterion { id: 6, name: "boundary-limit identity and angular law", budget: secs(120), run: c6 },
        Criterion { id: 7, name: "eigenvalue oracle, monotonicity, spherical mean", budget: secs(60), run: c7 },
        Criterion { id: 8, name: "span experiment", budget: secs(300), run: c8 },
        Criterion { id: 9, name: "approximation ladder", budget: secs(300), run: c9 },
        Criterion { id: 10, name: "special-function identities", budget: secs(10), run: c10 },
    ];
    let mut failed = 0;
    for c in &criteria {
        let t = Instant::now();
        let res = (c.run)();
        let el = t.elapsed();
        let (ok, detail) = match &res {
            Ok(o) => {
                let bad: Vec<String> = o.checks.iter().filter(|k| !k.passed).map(|k| k.to_string()).collect();
                let ok = o.passed() && !o.checks.is_empty() && el <= c.budget;
                let detail = if !bad.is_empty() {
                    bad.join("; ")
                } else if el > c.budget {
                    format!("over budget {:.0?}", c.budget)
                } else {
                    format!("{} checks", o.checks.len())
                };
                (ok, detail)
            }
            Err(e) => (false, format!("error: {e:#}")),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {:2} {} {} ({:.2}s) {}", c.id, if ok { "PASS" } else { "FAIL" }, c.name, el.as_secs_f64(), detail);
        if let Ok(o) = &res {
            for k in &o.checks {
                println!("    {k}");
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
