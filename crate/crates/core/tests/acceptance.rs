//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so that every criterion is reported even when an earlier one
//! fails; the exit status is nonzero if any criterion fails.

use mdfrac_core::models::benchmark::{profile_difference, run_study, StudyConfig};
use mdfrac_core::models::mandel::{run_mandel, MandelConfig};
use mdfrac_core::models::poromech::{run_biot_contact, PoromechConfig, SlipSummary};
use mdfrac_core::models::sneddon::{run_sneddon_study, SneddonStudyConfig};
use mdfrac_core::models::transport::{run_nonmatching_comparison, NonMatchingConfig};
use mdfrac_core::verify::{run_suite, Suite};
use mdfrac_core::Result;
use std::process::ExitCode;
use std::time::Instant;

/// Outcome of one criterion: pass flag and a one-line account of the
/// measured values.
type Verdict = (bool, String);

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or("undefined".into(), |r| format!("{r:.3}"))
}

fn flow_benchmark() -> Result<Verdict> {
    let cfg = StudyConfig::default();
    let r = run_study(&cfg)?;
    let mut ok = cfg.levels.len() >= 3;
    let mut parts = vec![format!("{} levels, reference {} cells", cfg.levels.len(), r.reference_cells)];
    for label in ["tpfa", "mpfa"] {
        let m = r.table.rate(label, 0)?;
        let f = r.table.rate(label, 1)?;
        ok &= m.is_some_and(|m| m >= 0.8);
        ok &= f.is_some_and(|f| f > 0.2 && f < 1.0);
        parts.push(format!("{label}: matrix rate {} (>= 0.8), fracture rate {} (in (0.2, 1))", fmt_rate(m), fmt_rate(f)));
    }
    let d = profile_difference(r.profile("tpfa").unwrap(), r.profile("mpfa").unwrap());
    ok &= d < 0.05;
    parts.push(format!("TPFA/MPFA profile difference {:.2}% (< 5%)", 100.0 * d));
    Ok((ok, parts.join("; ")))
}

fn mandel() -> Result<Verdict> {
    let r = run_mandel(&MandelConfig::default())?;
    let ep = r.samples.iter().map(|s| s.pressure_error).fold(0.0, f64::max);
    let eu = r.samples.iter().map(|s| s.ux_error).fold(0.0, f64::max);
    let ok = r.samples.len() >= 4 && (500..=750).contains(&r.cells) && ep < 0.05 && eu < 0.05;
    Ok((
        ok,
        format!(
            "{} triangles, {} sample times, max pressure error {:.2}%, max u_x error {:.2}% (< 5%)",
            r.cells,
            r.samples.len(),
            100.0 * ep,
            100.0 * eu
        ),
    ))
}

fn sneddon() -> Result<Verdict> {
    let cfg = SneddonStudyConfig::default();
    let s = run_sneddon_study(&cfg)?;
    let rate = s.average_rate()?;
    let setup = cfg.angles.len() >= 3
        && cfg.angles.iter().all(|a| (0.0..=30.0).contains(a))
        && cfg.seeds.len() >= 3
        && cfg.fracture_cells.len() >= 3;
    let per_angle: Vec<String> =
        cfg.angles.iter().map(|a| Ok(format!("{a}deg {}", fmt_rate(s.table.rate(&format!("angle_{a}"), 0)?)))).collect::<Result<_>>()?;
    Ok((
        setup && rate.is_some_and(|r| r >= 0.8),
        format!("{} runs, average rate {} (>= 0.8); per angle: {}", s.runs.len(), fmt_rate(rate), per_angle.join(", ")),
    ))
}

fn nonmatching() -> Result<Verdict> {
    let r = run_nonmatching_comparison(&NonMatchingConfig::default())?;
    Ok((
        r.difference <= 0.05,
        format!(
            "{} vs {} fracture cells, {} time samples, history difference {:.2}% (<= 5%)",
            r.matching_fracture_cells,
            r.refined_fracture_cells,
            r.matching.len(),
            100.0 * r.difference
        ),
    ))
}

fn injection_slip() -> Result<Verdict> {
    let r = run_biot_contact(&PoromechConfig::default())?;
    let s = SlipSummary::new(&r);
    let slipped = s.stick_to_slip.iter().filter(|b| **b).count();
    let (nr, tr) = (s.normal_ratio(), s.tangential_ratio());
    Ok((
        slipped > 0 && nr < 0.1 && tr > 0.5,
        format!(
            "{slipped} of {} fractures went stick->slip; after shut-in normal/peak {nr:.2e} (< 0.1), tangential/peak {tr:.3} (> 0.5)",
            s.stick_to_slip.len()
        ),
    ))
}

fn property_suites() -> Result<Verdict> {
    let mut ok = true;
    let mut parts = Vec::new();
    for suite in Suite::all() {
        let r = run_suite(suite, 42)?;
        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
        ok &= failed.is_empty();
        parts.push(if failed.is_empty() {
            format!("{} ok ({} checks)", suite.name(), r.checks.len())
        } else {
            format!("{} FAILED [{}]", suite.name(), failed.join(", "))
        });
    }
    Ok((ok, parts.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Verdict>); 6] = [
        ("1 flow benchmark convergence", flow_benchmark),
        ("2 Mandel consolidation", mandel),
        ("3 Sneddon average convergence", sneddon),
        ("4 non-matching fracture grids", nonmatching),
        ("5 injection and shut-in slip", injection_slip),
        ("6 property suites", property_suites),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let (ok, msg) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failures += 1;
        }
        println!("{} criterion {name}: {msg} [{:.1} s]", if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    }
}
