use sdstab::classifier::Tag;
use sdstab::exec::Execution;
use sdstab::liealg::BracketConvention;
use sdstab::simloop::{run_closed_loop, stability_sweep, SimError, Termination};
use sdstab::synth::{synthesize, SynthError};
use sdstab::templates::verify_corollary2;
use serde::Serialize;

use crate::config::{Format, ScenarioConfig};
use crate::output::{write_csv, write_json};
use crate::CliError;

fn fmt(v: f64) -> String {
    v.to_string()
}

pub fn verify(
    cfg: &ScenarioConfig,
    convention: BracketConvention,
    points: usize,
) -> Result<(), CliError> {
    let params = cfg
        .corollary2()
        .ok_or_else(|| CliError::Precondition("verify needs the corollary2 template".into()))?;
    let report = verify_corollary2(&params, convention, points, cfg.simulation.seed)
        .map_err(|e| CliError::Precondition(e.to_string()))?;
    let dir = &cfg.output.dir;
    let path = match cfg.output.format {
        Format::Json => write_json(dir, "verify.json", &report)?,
        Format::Csv => {
            let header = ["check", "max_abs_diff", "passed"].map(String::from);
            let rows: Vec<Vec<String>> = report
                .checks
                .iter()
                .map(|c| vec![c.name.clone(), fmt(c.max_abs_diff), c.passed.to_string()])
                .collect();
            write_csv(dir, "verify.csv", &header, &rows)?
        }
    };
    for c in &report.checks {
        println!(
            "{:<22} max |diff| = {:.3e}  {}",
            c.name,
            c.max_abs_diff,
            if c.passed { "ok" } else { "MISMATCH" }
        );
    }
    println!("report: {}", path.display());
    match report.first_mismatch {
        None => Ok(()),
        Some(m) => Err(CliError::Failure(format!("verification failed: {m}"))),
    }
}

#[derive(Serialize)]
struct ScanSummary<'a> {
    grid: &'a sdstab::classifier::Grid,
    points: usize,
    counts: &'a std::collections::BTreeMap<String, usize>,
    unclassified: &'a [Vec<f64>],
}

pub fn classify(cfg: &ScenarioConfig, convention: BracketConvention) -> Result<(), CliError> {
    let sys = cfg.system(convention)?;
    let grid = cfg.grid()?;
    let report = sdstab::classifier::scan_region(&sys, &grid, Execution::Parallel);
    let dir = &cfg.output.dir;
    match cfg.output.format {
        Format::Json => write_json(dir, "scan.json", &report)?,
        Format::Csv => {
            let (header, rows) = report.csv_rows();
            write_csv(dir, "scan.csv", &header, &rows)?
        }
    };
    let summary = ScanSummary {
        grid: &report.grid,
        points: report.points.len(),
        counts: &report.counts,
        unclassified: &report.unclassified,
    };
    write_json(dir, "scan_summary.json", &summary)?;
    println!("{} points", report.points.len());
    for (tag, n) in &report.counts {
        println!("  {tag:<16} {n}");
    }
    let bad = report.count(Tag::Unclassified) + report.errors();
    if bad > 0 {
        return Err(CliError::Failure(format!(
            "{} Unclassified and {} failed points",
            report.count(Tag::Unclassified),
            report.errors()
        )));
    }
    Ok(())
}

pub fn synth(cfg: &ScenarioConfig, convention: BracketConvention) -> Result<(), CliError> {
    let sys = cfg.system(convention)?;
    let x0 = &cfg.synth.x0;
    if x0.len() != sys.dim() {
        return Err(CliError::Precondition(format!(
            "synth.x0 has {} entries, system dimension is {}",
            x0.len(),
            sys.dim()
        )));
    }
    let witness = match synthesize(&sys, x0, cfg.synth.cap, false, &cfg.synth.params) {
        Ok(w) => w,
        Err(SynthError::Failed(f)) => {
            let _ = write_json(&cfg.output.dir, "synth_failure.json", &f);
            return Err(CliError::Failure(format!("synthesis failed: {}", f.reason)));
        }
        Err(e) => return Err(CliError::Precondition(e.to_string())),
    };
    let dir = &cfg.output.dir;
    let path = match cfg.output.format {
        Format::Json => write_json(dir, "witness.json", &witness)?,
        Format::Csv => {
            let header = ["segment", "start", "duration", "u"].map(String::from);
            let mut start = 0.0;
            let rows: Vec<Vec<String>> = witness
                .schedule
                .segments()
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let row = vec![i.to_string(), fmt(start), fmt(s.duration), fmt(s.value)];
                    start += s.duration;
                    row
                })
                .collect();
            write_csv(dir, "witness.csv", &header, &rows)?
        }
    };
    println!(
        "{} (N={}): {}  V {:.6e} -> {:.6e}, max along {:.6e}",
        witness.classification.tag,
        witness.classification.n,
        witness.candidate,
        witness.v_start,
        witness.v_end,
        witness.v_max_along
    );
    println!("witness: {}", path.display());
    Ok(())
}

pub fn simulate(cfg: &ScenarioConfig, convention: BracketConvention) -> Result<(), CliError> {
    let sys = cfg.system(convention)?;
    let mut params = cfg.loop_params();
    params.keep_dense = true;
    let traj = run_closed_loop(&sys, &cfg.simulation.x0, &params).map_err(|e| match e {
        SimError::Precondition(_) | SimError::Dimension { .. } => {
            CliError::Precondition(e.to_string())
        }
        other => CliError::Failure(other.to_string()),
    })?;
    let dir = &cfg.output.dir;
    match cfg.output.format {
        Format::Json => {
            write_json(dir, "trajectory.json", &traj)?;
        }
        Format::Csv => {
            let (header, rows) = traj.csv_rows(&sys);
            write_csv(dir, "trajectory.csv", &header, &rows)?;
            let mut header = vec!["t".to_string()];
            header.extend((1..=sys.dim()).map(|i| format!("x{i}")));
            header.push("V".into());
            let rows: Vec<Vec<String>> = traj
                .samples
                .iter()
                .zip(&traj.sample_states)
                .zip(&traj.sample_v)
                .map(|((t, x), v)| {
                    let mut row = vec![fmt(*t)];
                    row.extend(x.iter().map(|c| fmt(*c)));
                    row.push(fmt(*v));
                    row
                })
                .collect();
            write_csv(dir, "samples.csv", &header, &rows)?;
        }
    }
    let end = traj.sample_states.last().unwrap();
    println!(
        "termination: {:?} at t = {}, |x| = {:.4e}, V = {:.4e}, peak |x| = {:.4e}",
        traj.termination,
        traj.samples.last().unwrap(),
        end.iter().map(|c| c * c).sum::<f64>().sqrt(),
        traj.sample_v.last().unwrap(),
        traj.peak_norm
    );
    if let Termination::Error(e) = &traj.termination {
        return Err(CliError::Failure(e.clone()));
    }
    Ok(())
}

pub fn sweep(cfg: &ScenarioConfig, convention: BracketConvention) -> Result<(), CliError> {
    let sys = cfg.system(convention)?;
    let sim = &cfg.simulation;
    if let Some(d) = sim
        .deltas
        .iter()
        .find(|d| !(**d >= 0.0 && **d <= sim.radius))
    {
        return Err(CliError::Precondition(format!(
            "sweep radius {d} is outside [0, {}]",
            sim.radius
        )));
    }
    let mut params = cfg.loop_params();
    params.synth.execution = Execution::Sequential;
    let report = stability_sweep(
        &sys,
        &sim.deltas,
        &sim.epsilons,
        &params,
        sim.samples,
        sim.seed,
        Execution::Parallel,
    );
    let dir = &cfg.output.dir;
    match cfg.output.format {
        Format::Json => {
            write_json(dir, "sweep.json", &report)?;
        }
        Format::Csv => {
            let header = ["delta", "sup_peak", "converged", "runs"].map(String::from);
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt(r.delta),
                        fmt(r.sup_peak),
                        r.converged.to_string(),
                        r.runs.len().to_string(),
                    ]
                })
                .collect();
            write_csv(dir, "sweep.csv", &header, &rows)?;
            let header = ["epsilon", "first_delta_exceeding"].map(String::from);
            let rows: Vec<Vec<String>> = report
                .epsilon_table
                .iter()
                .map(|(e, d)| vec![fmt(*e), d.map(fmt).unwrap_or_default()])
                .collect();
            write_csv(dir, "epsilon_table.csv", &header, &rows)?;
        }
    }
    for r in &report.rows {
        println!(
            "delta {:<8} sup-peak {:.4e}  converged {}/{}",
            r.delta,
            r.sup_peak,
            r.converged,
            r.runs.len()
        );
    }
    Ok(())
}
