use std::f64::consts::FRAC_1_SQRT_2;

use aqpu_core::clock::{
    concentration_check, make_biased_erlang_clock, make_erlang_clock, tick_density, tick_statistics, ClockSpec,
    TickDensity, TickSampler,
};
use aqpu_core::compile::{compile_bruteforce, fit_compilation_decay, tradeoff_curve, MAX_COMPILE_LENGTH};
use aqpu_core::engine::{
    evolve_block, evolve_full, evolve_iid, evolve_monte_carlo, ideal_branch_recombination, switch_reference,
    FullRepresentation, SolverConfig,
};
use aqpu_core::export::CsvTable;
use aqpu_core::model::gates::{hadamard_t_gateset, involution_generator};
use aqpu_core::model::{make_gateset, plus_zero_state, standard_bell_example, superposed_punchcard, Program};
use aqpu_core::numerics::matrix::{pauli_x, pauli_z, ComplexMatrix, C64, ONE, ZERO};
use aqpu_core::numerics::metrics::{expectation, trace_distance};
use aqpu_core::numerics::ops::partial_trace_matrix;
use aqpu_core::numerics::types::DensityMatrix;
use aqpu_core::thermo::{entropy_ledger, entropy_lower_bound};
use aqpu_core::AqpuError;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig};
use crate::{CliError, Report};

const DEFAULT_SWEEP: [usize; 7] = [25, 50, 100, 200, 400, 800, 1600];
/// Accuracies at or above this enter the sweep slope fit.
const SLOPE_FIT_MIN: usize = 100;

pub(crate) fn run(kind: Experiment, c: &ExperimentConfig) -> Result<Report, CliError> {
    match kind {
        Experiment::Bell => bell(c),
        Experiment::Sweep => sweep(c),
        Experiment::ClockStats => clock_stats(c),
        Experiment::Tradeoff => tradeoff(c),
        Experiment::Switch => switch(c),
        Experiment::Reversible => reversible(c),
    }
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(field, format!("must be finite and positive, got {v}")))
    }
}

fn solver(c: &ExperimentConfig, allowed: &[&str]) -> Result<String, CliError> {
    let s = c.solver.clone().unwrap_or_else(|| allowed[0].to_string());
    if allowed.contains(&s.as_str()) {
        Ok(s)
    } else if ["full", "block", "iid", "ideal", "mc"].contains(&s.as_str()) {
        Err(CliError::config("solver", format!("'{s}' is not available here; use one of {}", allowed.join(", "))))
    } else {
        Err(CliError::config("solver", format!("unknown solver '{s}'")))
    }
}

fn gamma(c: &ExperimentConfig) -> Result<f64, CliError> {
    positive("clock.gamma", c.clock.gamma.unwrap_or(1.0))
}

fn accuracy(c: &ExperimentConfig, default: usize) -> Result<usize, CliError> {
    match c.clock.d.unwrap_or(default) {
        0 => Err(CliError::config("clock.d", "accuracy must be ≥ 1")),
        d => Ok(d),
    }
}

fn is_plain_erlang(c: &ExperimentConfig) -> bool {
    c.clock.model.as_deref().unwrap_or("erlang") == "erlang" && c.clock.delta_sigma_tick.is_none()
}

/// Clock from the config with D stages and M register slots.
fn clock(c: &ExperimentConfig, d: usize, m: usize) -> Result<ClockSpec, CliError> {
    if d == 0 {
        return Err(CliError::config("clock.d", "accuracy must be ≥ 1"));
    }
    let g = gamma(c)?;
    let spec = match c.clock.model.as_deref().unwrap_or("erlang") {
        "erlang" => make_erlang_clock(d, g, m)?,
        "biased-erlang" => {
            let ds = c.clock.delta_sigma.ok_or_else(|| CliError::config("clock.delta_sigma", "biased-erlang needs delta_sigma"))?;
            make_biased_erlang_clock(d, g, positive("clock.delta_sigma", ds)?, m)?
        }
        other => return Err(CliError::config("clock.model", format!("unknown clock model '{other}' (erlang | biased-erlang)"))),
    };
    match c.clock.delta_sigma_tick {
        Some(ds) => Ok(spec.with_reverse_ticks(positive("clock.delta_sigma_tick", ds)?)?),
        None => Ok(spec),
    }
}

fn t_end(c: &ExperimentConfig, periods: f64) -> Result<f64, CliError> {
    let g = gamma(c)?;
    positive("t_end", c.t_end.unwrap_or(periods / g))
}

fn solver_config(c: &ExperimentConfig, t_end: f64, default_samples: usize) -> Result<SolverConfig, CliError> {
    let samples = c.samples.unwrap_or(default_samples);
    if samples < 2 {
        return Err(CliError::config("samples", "need at least 2 output times"));
    }
    let mut s = SolverConfig::uniform(t_end, samples);
    s.rtol = positive("rtol", c.rtol.unwrap_or(s.rtol))?;
    s.atol = positive("atol", c.atol.unwrap_or(s.atol))?;
    s.rng_seed = c.seed.unwrap_or(0);
    s.trajectory_count = c.trajectories.unwrap_or(s.trajectory_count);
    if s.trajectory_count == 0 {
        return Err(CliError::config("trajectories", "must be ≥ 1"));
    }
    Ok(s)
}

/// Guard violations of the full solver are configuration problems.
fn full_guard(e: AqpuError) -> CliError {
    match e {
        AqpuError::Guard(m) => CliError::config("solver", m),
        other => other.into(),
    }
}

fn table(header: &[&str]) -> CsvTable {
    CsvTable::new(header.iter().copied())
}

fn report(kind: Experiment, c: &ExperimentConfig, solver: &str, table: CsvTable, metrics: Value) -> Report {
    Report { experiment: kind, seed: c.seed.unwrap_or(0), solver: solver.to_string(), table, metrics }
}

fn bell(c: &ExperimentConfig) -> Result<Report, CliError> {
    let s = solver(c, &["block", "full"])?;
    let ex = standard_bell_example();
    let m = ex.punchcard.slots();
    let d = accuracy(c, 80)?;
    let spec = clock(c, d, m)?;
    let sc = solver_config(c, t_end(c, 6.0)?, 121)?;
    let rho = DensityMatrix::pure(&ex.initial)?;
    let plus0 = plus_zero_state();
    let mut samples: Vec<(f64, Vec<f64>, ComplexMatrix)> = Vec::new();
    if s == "block" {
        for st in evolve_block(&spec, &ex.gateset, &ex.punchcard, &rho, &sc)?.states {
            samples.push((st.t, st.sector_probs(), st.target()));
        }
    } else {
        let tr = evolve_full(&spec, &ex.gateset, &ex.punchcard, &rho, &sc, FullRepresentation::Auto).map_err(full_guard)?;
        for st in tr.samples {
            samples.push((st.t, st.tick_probs, st.target));
        }
    }
    let mut t = table(&["t", "p_n0", "p_n1", "p_n2", "p_n3", "fid_plus0", "fid_bell", "ticks_mean"]);
    for (time, probs, target) in &samples {
        let ticks: f64 = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        let mut row = vec![*time];
        row.extend_from_slice(probs);
        row.push(expectation(target, &plus0).re);
        row.push(expectation(target, &ex.target).re);
        row.push(ticks);
        t.push(row)?;
    }
    let last = t.rows().last().expect("at least two samples").clone();
    let metrics = json!({
        "accuracy": d,
        "t_end": sc.t_end,
        "final_fid_bell": last[6],
        "final_infidelity": 1.0 - last[6],
        "final_ticks_mean": last[7],
    });
    Ok(report(Experiment::Bell, c, &s, t, metrics))
}

fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let p: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if p.len() < 2 {
        return None;
    }
    let n = p.len() as f64;
    let mx = p.iter().map(|q| q.0).sum::<f64>() / n;
    let my = p.iter().map(|q| q.1).sum::<f64>() / n;
    let sxx: f64 = p.iter().map(|q| (q.0 - mx).powi(2)).sum();
    let sxy: f64 = p.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn sweep(c: &ExperimentConfig) -> Result<Report, CliError> {
    let s = solver(c, &["block", "full", "iid", "mc"])?;
    if s == "iid" && !is_plain_erlang(c) {
        return Err(CliError::config("solver", "iid sweeps use the closed-form Erlang density; drop clock.model/delta_sigma_tick"));
    }
    let ns = c.accuracies.clone().unwrap_or_else(|| DEFAULT_SWEEP.to_vec());
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::config("accuracies", "need a non-empty list of accuracies ≥ 1"));
    }
    let ex = standard_bell_example();
    let m = ex.punchcard.slots();
    let te = t_end(c, 6.0)?;
    let mut sc = solver_config(c, te, 2)?;
    sc.sample_times = vec![te];
    let g = gamma(c)?;
    let rho = DensityMatrix::pure(&ex.initial)?;
    let infid: Vec<Result<f64, CliError>> = ns
        .par_iter()
        .map(|&n| {
            let spec = clock(c, n, m)?;
            let target = match s.as_str() {
                "block" => evolve_block(&spec, &ex.gateset, &ex.punchcard, &rho, &sc)?.last().target(),
                "full" => evolve_full(&spec, &ex.gateset, &ex.punchcard, &rho, &sc, FullRepresentation::Auto)
                    .map_err(full_guard)?
                    .last()
                    .target
                    .clone(),
                "iid" => evolve_iid(&ex.gateset, &ex.program, &TickDensity::erlang(n, n as f64 * g)?, &rho)?.into_matrix(),
                _ => evolve_monte_carlo(&spec, &ex.gateset, &ex.punchcard, &rho, &sc, &TickSampler::jump_chain(&spec)?)?.mean,
            };
            Ok(1.0 - expectation(&target, &ex.target).re)
        })
        .collect();
    let mut t = table(&["accuracy", "infidelity", "entropy_lower_bound"]);
    let mut points = Vec::new();
    for (&n, f) in ns.iter().zip(infid) {
        let f = f?;
        t.push(vec![n as f64, f, entropy_lower_bound(n as f64)])?;
        points.push((n as f64, f));
    }
    let fit: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 >= SLOPE_FIT_MIN as f64).collect();
    let (fit_points, fit_min) = if fit.len() >= 2 { (fit, SLOPE_FIT_MIN as f64) } else { (points.clone(), ns[0] as f64) };
    let metrics = json!({
        "loglog_slope": loglog_slope(&fit_points),
        "slope_fit_min_accuracy": fit_min,
        "points": points.len(),
        "t_end": te,
    });
    Ok(report(Experiment::Sweep, c, &s, t, metrics))
}

fn clock_stats(c: &ExperimentConfig) -> Result<Report, CliError> {
    let s = solver(c, &["block"])?;
    let d = accuracy(c, 16)?;
    let spec = clock(c, d, 1)?;
    let te = t_end(c, 3.0)?;
    let n = c.samples.unwrap_or(301);
    if n < 2 {
        return Err(CliError::config("samples", "need at least 2 output times"));
    }
    let grid: Vec<f64> = (0..n).map(|k| te * k as f64 / (n - 1) as f64).collect();
    let dens = tick_density(&spec, 1, &grid)?;
    let mut t = table(&["t", "density"]);
    for (x, y) in grid.iter().zip(&dens) {
        t.push(vec![*x, *y])?;
    }
    let stats = tick_statistics(&spec, 1, te, 120)?;
    let acc = stats.accuracy[0];
    let conc = if acc.is_finite() {
        let r = concentration_check(&stats, acc)?;
        json!({
            "alpha": r.alpha, "c": r.c, "tail_pass": r.tail_pass, "moments_pass": r.moments_pass,
            "mgf_pass": r.mgf_pass, "bernstein_pass": r.bernstein_pass,
        })
    } else {
        Value::Null
    };
    let metrics = json!({
        "stages": d,
        "mean": stats.mean(),
        "variance": stats.variance(),
        "accuracy": acc,
        "resolution": stats.resolution[0],
        "grid_mass": stats.masses()[0],
        "concentration": conc,
    });
    Ok(report(Experiment::ClockStats, c, &s, t, metrics))
}

fn tradeoff(c: &ExperimentConfig) -> Result<Report, CliError> {
    let s = solver(c, &["iid"])?;
    if !is_plain_erlang(c) {
        return Err(CliError::config("clock.model", "tradeoff uses the Erlang i.i.d. channel only"));
    }
    let n = accuracy(c, 1000)?;
    let l_max = c.l_max.unwrap_or(12);
    if l_max > MAX_COMPILE_LENGTH {
        return Err(CliError::config("l_max", format!("at most {MAX_COMPILE_LENGTH}")));
    }
    let angle = c.angle.unwrap_or(0.1);
    if !angle.is_finite() {
        return Err(CliError::config("angle", "must be finite"));
    }
    let gs = hadamard_t_gateset()?;
    let target = ComplexMatrix::diagonal(&[C64::from_polar(1.0, -angle / 2.0), C64::from_polar(1.0, angle / 2.0)]);
    let result = compile_bruteforce(&target, &gs, l_max)?;
    let curve = tradeoff_curve(&result, n as f64)?;
    let mut t = table(&["length", "epsilon", "clock_term", "total"]);
    for p in &curve.points {
        t.push(vec![p.length as f64, p.epsilon, p.clock_term, p.total])?;
    }
    let best = curve.best();
    let program = &result.entries[curve.argmin].program;
    let zero = DensityMatrix::pure(&[ONE, ZERO])?;
    let out = evolve_iid(&gs, program, &TickDensity::erlang(n, n as f64 * gamma(c)?)?, &zero)?;
    let err = trace_distance(out.matrix(), &zero.matrix().conjugate_by(&target));
    let labels = gs.labels();
    let names: Vec<&str> = program.steps.iter().map(|&k| if k == 0 { "idle" } else { labels[k - 1] }).collect();
    let fit = fit_compilation_decay(&result).map(|f| json!({ "alpha": f.alpha, "c": f.c }));
    let metrics = json!({
        "accuracy": n,
        "angle": angle,
        "argmin_length": best.length,
        "interior_minimum": curve.has_interior_minimum(),
        "total_at_argmin": best.total,
        "simulated_error": err,
        "bound_holds": err <= best.total + 5e-2,
        "program": names,
        "phi_max": result.phi_max,
        "representatives": result.representatives,
        "decay_fit": fit,
    });
    Ok(report(Experiment::Tradeoff, c, &s, t, metrics))
}

fn switch(c: &ExperimentConfig) -> Result<Report, CliError> {
    let s = solver(c, &["full"])?;
    let ds = c.accuracies.clone().unwrap_or_else(|| vec![16, 64, 256]);
    if ds.is_empty() || ds.contains(&0) {
        return Err(CliError::config("accuracies", "need a non-empty list of accuracies ≥ 1"));
    }
    let gs = make_gateset(
        1.0 / gamma(c)?,
        vec![("X".into(), involution_generator(&pauli_x())), ("Z".into(), involution_generator(&pauli_z()))],
        vec![2],
    )?;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let card = superposed_punchcard(&[(h, Program::new(vec![1, 2])), (h, Program::new(vec![2, 1]))], 2)?;
    let rho = DensityMatrix::maximally_mixed(2);
    let oracle = switch_reference(&pauli_x(), &pauli_z(), [h, h], &rho)?;
    let te = t_end(c, 6.0)?;
    let mut sc = solver_config(c, te, 2)?;
    sc.sample_times = vec![te];
    let coherence = |m: &ComplexMatrix| -> Result<f64, CliError> {
        Ok(2.0 * partial_trace_matrix(m, &[2, 2], &[0])?[(0, 1)].norm())
    };
    let mut t = table(&["accuracy", "trace_distance", "control_coherence"]);
    let mut dists = Vec::new();
    for &d in &ds {
        let spec = clock(c, d, 2)?;
        let tr = evolve_full(&spec, &gs, &card, &rho, &sc, FullRepresentation::Auto).map_err(full_guard)?;
        let rt = &tr.last().register_target;
        let td = trace_distance(rt, oracle.matrix());
        t.push(vec![d as f64, td, coherence(rt)?])?;
        dists.push(td);
    }
    let ideal = ideal_branch_recombination(&gs, &card, &rho)?;
    let metrics = json!({
        "monotone_decreasing": dists.windows(2).all(|w| w[1] < w[0]),
        "ideal_substitution_distance": trace_distance(ideal.matrix(), oracle.matrix()),
        "oracle_control_coherence": coherence(oracle.matrix())?,
        "t_end": te,
    });
    Ok(report(Experiment::Switch, c, &s, t, metrics))
}

fn reversible(c: &ExperimentConfig) -> Result<Report, CliError> {
    let s = solver(c, &["block"])?;
    let ex = standard_bell_example();
    let m = ex.punchcard.slots();
    let d = accuracy(c, 10)?;
    let ds = positive("clock.delta_sigma_tick", c.clock.delta_sigma_tick.unwrap_or(2.0))?;
    let mut base_cfg = c.clone();
    base_cfg.clock.delta_sigma_tick = None;
    let base = clock(&base_cfg, d, m)?;
    let irr = base.with_reverse_ticks(f64::INFINITY)?;
    let rev = base.with_reverse_ticks(ds)?;
    let sc = solver_config(c, t_end(c, 6.0)?, 61)?;
    let rho = DensityMatrix::pure(&ex.initial)?;
    let a = evolve_block(&irr, &ex.gateset, &ex.punchcard, &rho, &sc)?;
    let b = evolve_block(&rev, &ex.gateset, &ex.punchcard, &rho, &sc)?;
    let ledger = entropy_ledger(&rev, &b, None, 0.0)?;
    let mut t = table(&["t", "fid_bell_irreversible", "fid_bell_reversible", "backward_current", "tick_entropy"]);
    let mut worst: f64 = 0.0;
    for (k, (x, y)) in a.states.iter().zip(&b.states).enumerate() {
        let (tx, ty) = (x.target(), y.target());
        worst = worst.max(trace_distance(&tx, &ty));
        t.push(vec![
            x.t,
            expectation(&tx, &ex.target).re,
            expectation(&ty, &ex.target).re,
            y.backward.iter().sum(),
            ledger.tick_integral[k],
        ])?;
    }
    let last = t.rows().last().expect("at least two samples").clone();
    let metrics = json!({
        "accuracy": d,
        "delta_sigma_tick": ds,
        "final_fid_bell_irreversible": last[1],
        "final_fid_bell_reversible": last[2],
        "fidelity_drop": last[1] - last[2],
        "max_trace_distance": worst,
        "final_tick_entropy": last[4],
        "final_ticks_mean": b.last().ticks_mean(),
    });
    Ok(report(Experiment::Reversible, c, &s, t, metrics))
}
