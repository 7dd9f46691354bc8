//! Acceptance suite. Prints one PASS/FAIL line per criterion and a tally.
//!
//! Three criteria fail for reasons analysed in the README ("Known
//! failures"). The target exits nonzero when any verdict differs from that
//! record, so a new failure or an unexpected pass both surface.

use std::process::ExitCode;

use ergossip::checks::run_check;

const SEED: u64 = 20240611;

const KNOWN_FAILURES: &[(u8, &str)] = &[
    (2, "with clique size 2 and three cliques the graph is a path; cutting inside the middle clique beats every bridge cut"),
    (6, "the uniform target 0.02 is half the model's bridge probability P_ij + P_ji = 4/n² = 0.04"),
    (10, "at σ = 2 the resistance flavor ends with a larger median consensus violation than uniform"),
];

fn main() -> ExitCode {
    let mut passed = 0;
    let mut surprises = Vec::new();
    for id in 1..=11u8 {
        let o = run_check(id, SEED);
        println!("{}", o.line());
        if o.pass {
            passed += 1;
        }
        let known = KNOWN_FAILURES.iter().find(|k| k.0 == id);
        match (o.pass, known) {
            (false, None) => surprises.push(format!("criterion {id} failed unexpectedly")),
            (true, Some(_)) => surprises.push(format!("criterion {id} passed but is recorded as failing")),
            _ => {}
        }
    }
    println!("acceptance: {passed}/11 PASS");
    for (id, why) in KNOWN_FAILURES {
        println!("known failure {id}: {why}");
    }
    if surprises.is_empty() {
        ExitCode::SUCCESS
    } else {
        for s in &surprises {
            eprintln!("{s}");
        }
        ExitCode::FAILURE
    }
}
