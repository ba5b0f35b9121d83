//! Command bodies. Each writes its CSV artifacts plus `run.json` into the
//! output directory and returns whether its checks passed.

use std::io::Write;
use std::path::Path;

use leo_core::config::{Method, RunConfig};
use leo_core::output::{write_csv_artifact, write_sidecar, Provenance};
use leo_core::{
    delta_tau_diagram, detect_threshold, deviation_vs_regular, noisy_pulse_ensemble, phi0_scan,
    random_pulse_ensemble, ratio_scan, realize_regular, reduced_equivalence_fidelity, run_suite,
    v_lambda_equivalent_fidelity, FidelityCurve, Result, SweepResult,
};
use serde_json::{json, Value};

use crate::Command;

struct Artifacts<'a> {
    dir: &'a Path,
    provenance: Provenance,
    written: Vec<String>,
}

impl Artifacts<'_> {
    fn csv(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        write_csv_artifact(self.dir, name, &self.provenance, body)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn curve(&mut self, name: &str, curve: &FidelityCurve) -> Result<()> {
        self.csv(name, |w| curve.write_csv(w))
    }

    fn sweep(&mut self, name: &str, sweep: &SweepResult) -> Result<()> {
        self.csv(name, |w| sweep.write_csv(w))
    }
}

pub fn run(command: Command, config: &RunConfig) -> Result<bool> {
    let dir = Path::new(&config.output);
    let mut out = Artifacts {
        dir,
        provenance: Provenance::of(config),
        written: Vec::new(),
    };
    let (passed, summary) = match command {
        Command::Simulate => simulate(config, &mut out)?,
        Command::Diagram => diagram(config, &mut out)?,
        Command::ScanPhi0 => scan_phi0(config, &mut out)?,
        Command::ScanRatio => scan_ratio(config, &mut out)?,
        Command::RandomEnsemble => random_ensemble(config, &mut out)?,
        Command::NoisyEnsemble => noisy_ensemble(config, &mut out)?,
        Command::EquivalenceCheck => equivalence(config, &mut out)?,
        Command::Validate => validate(config)?,
        Command::Version => unreachable!("handled before config loading"),
    };
    write_sidecar(dir, command.name(), config, &out.written, &summary)?;
    Ok(passed)
}

fn simulate(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, Value)> {
    let scenario = config.scenario()?;
    let grid = config.sim_grid()?;
    let pulse = config.pulse_program(grid.horizon())?;
    let coeffs = scenario.coefficients(&pulse, &grid)?;
    out.csv("pulse.csv", |w| pulse.write_csv(w))?;
    out.csv("coefficients.csv", |w| coeffs.write_csv(&pulse, w))?;
    let summary = match config.method {
        Method::Me => {
            let me = scenario.me_fidelity(&pulse, &grid)?;
            out.curve("fidelity.csv", &me.curve)?;
            json!({
                "method": "me",
                "final_fidelity": me.curve.last(),
                "max_trace_error": me.run.max_trace_error,
                "max_hermiticity_error": me.run.max_hermiticity_error,
                "min_eigenvalue": me.run.min_eigenvalue,
            })
        }
        Method::Qsd => {
            let ens = scenario.qsd(&pulse, &grid, config.ensemble.n_traj, config.require_seed()?)?;
            out.curve("fidelity.csv", &ens.fidelity)?;
            json!({
                "method": "qsd",
                "n_traj": ens.n_traj,
                "final_fidelity": ens.fidelity.last(),
                "final_stderr": ens.fidelity.stderr.as_ref().and_then(|s| s.last()),
            })
        }
    };
    println!("final fidelity {}", summary["final_fidelity"]);
    Ok((true, summary))
}

fn sweep_summary(sweep: &SweepResult) -> Value {
    json!({
        "cells": sweep.cells.len(),
        "failed_cells": sweep.failed(),
        "t_read": sweep.t_read,
        "integrity": sweep.integrity,
    })
}

fn diagram(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, Value)> {
    let sweep = delta_tau_diagram(
        &config.scenario()?,
        config.pulse.phi0,
        config.sweep.t_read,
        &config.sweep.delta_grid,
        &config.sweep.dark_grid,
        &config.run_settings(),
    )?;
    out.sweep("diagram.csv", &sweep)?;
    println!("{} cells, {} failed", sweep.cells.len(), sweep.failed());
    Ok((true, sweep_summary(&sweep)))
}

fn scan_phi0(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, Value)> {
    let sweep = phi0_scan(
        &config.scenario()?,
        &config.regular_pulse()?,
        &config.sweep.phi0_values,
        config.sweep.t_read,
        &config.run_settings(),
    )?;
    out.sweep("scan_phi0.csv", &sweep)?;
    for c in &sweep.cells {
        println!("phi0 {} fidelity {:?}", c.params[0], c.fidelity);
    }
    Ok((true, sweep_summary(&sweep)))
}

fn scan_ratio(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, Value)> {
    let sweep = ratio_scan(
        &config.scenario()?,
        config.pulse.phi0,
        config.pulse.tau,
        &config.sweep.ratios,
        config.sweep.t_read,
        &config.run_settings(),
    )?;
    out.sweep("scan_ratio.csv", &sweep)?;
    let threshold = detect_threshold(&sweep, config.sweep.epsilon).ok();
    println!("threshold ratio {threshold:?}");
    let mut summary = sweep_summary(&sweep);
    summary["threshold_ratio"] = json!(threshold);
    summary["epsilon"] = json!(config.sweep.epsilon);
    Ok((true, summary))
}

fn ensemble_summary(e: &leo_core::EnsembleResult) -> Value {
    json!({
        "n_ok": e.n_ok,
        "n_failed": e.failures.len(),
        "integrity": e.integrity,
        "failures": e.failures,
        "final_mean": e.curve.last(),
        "final_stderr": e.curve.stderr.as_ref().and_then(|s| s.last()),
    })
}

fn random_ensemble(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, Value)> {
    let e = random_pulse_ensemble(
        &config.scenario()?,
        &config.regular_pulse()?,
        config.pulse.a_tau,
        config.pulse.a_phi,
        config.grid.horizon,
        config.ensemble.n_realizations,
        config.require_seed()?,
        &config.run_settings(),
    )?;
    out.curve("random_ensemble.csv", &e.curve)?;
    println!("final mean fidelity {} ({} ok, {} failed)", e.curve.last(), e.n_ok, e.failures.len());
    Ok((true, ensemble_summary(&e)))
}

fn noisy_ensemble(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, Value)> {
    let scenario = config.scenario()?;
    let base = config.regular_pulse()?;
    let settings = config.run_settings();
    let seed = config.require_seed()?;
    let horizon = config.grid.horizon;
    let e = noisy_pulse_ensemble(
        &scenario,
        &base,
        &config.dressing(seed)?,
        horizon,
        config.ensemble.n_realizations,
        seed,
        &settings,
    )?;
    let regular = scenario
        .me_fidelity(&realize_regular(&base, horizon)?, &settings.grid_for(&base, horizon)?)?
        .curve;
    out.curve("noisy_ensemble.csv", &e.curve)?;
    out.curve("regular.csv", &regular)?;
    let deviation = deviation_vs_regular(&regular, &e.curve);
    println!("deviation from regular at final time {deviation}");
    let mut summary = ensemble_summary(&e);
    summary["deviation"] = json!(deviation);
    summary["max_pointwise_gap"] = json!(regular.max_abs_diff(&e.curve));
    Ok((true, summary))
}

fn equivalence(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, Value)> {
    let env = config.env()?;
    let grid = config.sim_grid()?;
    let pulse = config.pulse_program(grid.horizon())?;
    let coupling = config.system.couplings[0];
    let curves = v_lambda_equivalent_fidelity(&env, coupling, &pulse, &grid)?;
    let reduced = reduced_equivalence_fidelity(&env, coupling, &pulse, &grid)?;
    out.csv("equivalence.csv", |w| {
        writeln!(w, "t,v_type,lambda_type,reduced")?;
        for i in 0..reduced.times.len() {
            writeln!(
                w,
                "{},{},{},{}",
                reduced.times[i], curves.v_type.values[i], curves.lambda_type.values[i], reduced.values[i]
            )?;
        }
        Ok(())
    })?;
    let v_lambda = curves.v_type.max_abs_diff(&curves.lambda_type);
    let v_reduced = curves.v_type.max_abs_diff(&reduced);
    let passed = v_lambda <= 1e-6 && v_reduced <= 1e-6;
    println!(
        "{} V vs lambda {v_lambda:e}, V vs reduction {v_reduced:e}",
        if passed { "PASS" } else { "FAIL" }
    );
    Ok((
        passed,
        json!({ "coupling": coupling, "v_vs_lambda": v_lambda, "v_vs_reduced": v_reduced, "passed": passed }),
    ))
}

fn validate(config: &RunConfig) -> Result<(bool, Value)> {
    let checks = run_suite(config.seed.unwrap_or(0));
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok((passed, json!({ "checks": checks, "passed": passed })))
}
