//! Acceptance gate: one line per criterion, non-zero exit if any fails.
//!
//! Runs without libtest so the report is printed even when everything passes.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use aqpu_core::clock::{
    coarse_grain, concentration_check, concentration_check_density, make_biased_erlang_clock, make_erlang_clock,
    stationary_populations, tick_flux, tick_number_distributions, tick_statistics, TickDensity, TickSampler,
};
use aqpu_core::compile::{compile_bruteforce, tradeoff_curve};
use aqpu_core::engine::{
    clock_channel_second_order, evolve_block, evolve_full, evolve_iid, evolve_ideal, evolve_monte_carlo, evolve_reversible,
    ideal_branch_recombination, program_fidelity, switch_reference, FullRepresentation, SolverConfig,
};
use aqpu_core::model::gates::{hadamard_generator, hadamard_t_gateset, involution_generator};
use aqpu_core::model::{
    compose_program_unitary, make_gateset, make_punchcard, standard_bell_example, superposed_punchcard, Program,
};
use aqpu_core::numerics::eigen::hermitian_trace_norm;
use aqpu_core::numerics::matrix::{hadamard, pauli_x, pauli_z, ComplexMatrix, C64, ONE, ZERO};
use aqpu_core::numerics::metrics::trace_distance;
use aqpu_core::numerics::types::{DensityMatrix, HermitianOperator};
use aqpu_core::thermo::{entropy_ledger, entropy_lower_bound};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), aqpu_core::AqpuError>;

fn bell_rho() -> (aqpu_core::model::BellExample, DensityMatrix) {
    let ex = standard_bell_example();
    let rho = DensityMatrix::pure(&ex.initial).unwrap();
    (ex, rho)
}

fn universality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let k = rng.gen_range(1..=3);
        let gens: Vec<ComplexMatrix> = (0..k).map(|_| random_hermitian(&mut rng, 4, 1.5)).collect();
        let tau = rng.gen_range(0.5..2.0);
        let gs = make_gateset(tau, gens.iter().enumerate().map(|(i, g)| (format!("g{i}"), g.clone())).collect(), vec![2, 2])?;
        let len = rng.gen_range(0..=6);
        let steps: Vec<usize> = (0..len).map(|_| rng.gen_range(0..=k)).collect();
        let rho = DensityMatrix::pure(&random_pure(&mut rng, 4))?;
        let mut u = ComplexMatrix::identity(4);
        for &a in &steps {
            if a > 0 {
                u = expm_taylor(&gens[a - 1], tau).matmul(&u);
            }
        }
        let out = evolve_ideal(&gs, &Program::new(steps), &rho)?;
        worst = worst.max(trace_distance(out.matrix(), &rho.matrix().conjugate_by(&u)));
    }
    let (ex, rho) = bell_rho();
    let ideal = evolve_ideal(&ex.gateset, &ex.program, &rho)?;
    let spec = make_erlang_clock(4096, 1.0, 3)?;
    let tr = evolve_block(&spec, &ex.gateset, &ex.punchcard, &rho, &SolverConfig::at_times(vec![4.0]))?;
    let dist = trace_distance(&tr.last().target(), ideal.matrix());
    Ok((worst <= 1e-12 && dist <= 5e-3, format!("ideal max TD {worst:.2e} (≤ 1e-12), D=4096 Bell TD {dist:.2e} (≤ 5e-3)")))
}

fn cross_solver() -> Outcome {
    let gs = make_gateset(1.0, vec![("H".into(), hadamard_generator())], vec![2])?;
    let program = Program::new(vec![1, 1]);
    let m = 5;
    let card = make_punchcard(&program, m)?;
    let spec = make_erlang_clock(4, 1.0, m)?;
    let rho = DensityMatrix::pure(&[ONE, ZERO])?;
    let t = 2.0 * m as f64;
    let mut config = SolverConfig::at_times(vec![t]);
    config.rtol = 1e-11;
    config.atol = 1e-14;
    let full = evolve_full(&spec, &gs, &card, &rho, &config, FullRepresentation::Dense)?.last().target.clone();
    let block = evolve_block(&spec, &gs, &card, &rho, &config)?.last().target();
    let iid = evolve_iid(&gs, &program, &TickDensity::erlang(4, 4.0)?, &rho)?.into_matrix();
    let pairs = [trace_distance(&full, &block), trace_distance(&full, &iid), trace_distance(&block, &iid)];
    let worst = pairs.iter().cloned().fold(0.0, f64::max);
    config.trajectory_count = 10_000;
    config.rng_seed = 7;
    let mc = evolve_monte_carlo(&spec, &gs, &card, &rho, &config, &TickSampler::jump_chain(&spec)?)?;
    let z = mc.max_standardized_deviation(&block, 1e-12);
    Ok((
        worst <= 1e-6 && z <= 3.0,
        format!("full/block/iid TD {:.1e} {:.1e} {:.1e} (≤ 1e-6), MC max |Δ|/SE {z:.2} (≤ 3)", pairs[0], pairs[1], pairs[2]),
    ))
}

/// Bell output under Erlang(N, NΓ) gate times, channel by channel.
fn bell_oracle_infidelity(n: usize, target: &[C64]) -> f64 {
    let (ex, rho) = bell_rho();
    let p_h = hadamard().kron(&ComplexMatrix::identity(2));
    let cnot = compose_program_unitary(&ex.gateset, &Program::new(vec![2])).unwrap();
    let after_h = erlang_involution_channel(&p_h, -PI, n, 1.0, rho.matrix());
    let out = erlang_involution_channel(&cnot, PI, n, 1.0, &after_h);
    1.0 - overlap(&out, target)
}

fn infidelity_sweep() -> Outcome {
    let (ex, rho) = bell_rho();
    let ns = [25usize, 50, 100, 200, 400, 800, 1600];
    let mut infid = Vec::new();
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for &n in &ns {
        let spec = make_erlang_clock(n, 1.0, 3)?;
        let tr = evolve_block(&spec, &ex.gateset, &ex.punchcard, &rho, &SolverConfig::at_times(vec![6.0]))?;
        let f = 1.0 - program_fidelity(&tr.last().target(), &ex.gateset, &ex.program, &rho)?.value;
        let oracle = bell_oracle_infidelity(n, &ex.target);
        worst = worst.max((f - oracle).abs());
        lines.push(format!("N={n}: 1-F {f:.3e}, bound Σ_cw,τ ≥ {}", entropy_lower_bound(n as f64)));
        infid.push(f);
    }
    let xs: Vec<f64> = ns[2..].iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&xs, &infid[2..]);
    for l in &lines {
        println!("      {l}");
    }
    Ok((
        (-1.15..=-0.85).contains(&slope) && worst <= 1e-4,
        format!("slope {slope:.4} on N ≥ 100 (∈ [-1.15, -0.85]), max |block − oracle| {worst:.1e} (≤ 1e-4)"),
    ))
}

fn second_order() -> Outcome {
    let h = HermitianOperator::new(hadamard_generator())?;
    let rho = DensityMatrix::pure(&[ONE, ZERO])?;
    let gs = make_gateset(1.0, vec![("H".into(), hadamard_generator())], vec![2])?;
    let residual = |n: usize| -> aqpu_core::Result<f64> {
        let exact = evolve_iid(&gs, &Program::new(vec![1]), &TickDensity::erlang(n, n as f64)?, &rho)?;
        let approx = clock_channel_second_order(&h, 1.0, n as f64, &rho)?;
        Ok(hermitian_trace_norm(&(exact.matrix() - approx.matrix())))
    };
    let (r100, r400) = (residual(100)?, residual(400)?);
    let ratio = r100 / r400;
    Ok(((5.0..=12.0).contains(&ratio), format!("residual N=100 {r100:.3e}, N=400 {r400:.3e}, ratio {ratio:.2} (∈ [5, 12])")))
}

fn tick_identities() -> Outcome {
    let m = 3;
    let times: Vec<f64> = (1..=50).map(|k| 0.1 * k as f64).collect();
    let mut worst_pop: f64 = 0.0;
    let mut worst_flux: f64 = 0.0;
    for d in [2usize, 8] {
        let spec = make_erlang_clock(d, 1.0, m)?;
        let rate = d as f64;
        let pops = tick_number_distributions(&spec, &times)?;
        let flux = tick_flux(&spec, &times)?;
        for (i, &t) in times.iter().enumerate() {
            for n in 0..m {
                let oracle = erlang_cdf(n * d, rate, t) - erlang_cdf((n + 1) * d, rate, t);
                worst_pop = worst_pop.max((pops[i][n] - oracle).abs());
                worst_flux = worst_flux.max((flux[i][n] - erlang_cdf_derivative((n + 1) * d, rate, t)).abs());
            }
        }
    }
    Ok((
        worst_pop <= 1e-5 && worst_flux <= 1e-5,
        format!("sector population max err {worst_pop:.1e}, flux max err {worst_flux:.1e} (≤ 1e-5), D ∈ {{2, 8}}"),
    ))
}

fn concentration() -> Outcome {
    let spec = make_erlang_clock(16, 1.0, 1)?;
    let stats = tick_statistics(&spec, 1, 6.0, 240)?;
    let r = concentration_check(&stats, 16.0)?;
    let a = 3.0;
    let tm = (a - 1.0) / a;
    let pareto = TickDensity::from_fn(move |t| if t < tm { 0.0 } else { a * tm.powf(a) / t.powf(a + 1.0) }, tm, 200.0, 2000, 8)?;
    let p = concentration_check_density(&pareto, pareto.mean(), pareto.accuracy())?;
    let ok = r.tail_pass && r.moments_pass && r.bernstein_pass && !p.tail_pass;
    Ok((
        ok,
        format!(
            "Erlang D=16 α {:.2} c {:.2} tail {} moments {} Bernstein {}; Pareto α {:.2} c {:.2} tail {}",
            r.alpha, r.c, r.tail_pass, r.moments_pass, r.bernstein_pass, p.alpha, p.c, p.tail_pass
        ),
    ))
}

fn entropy_accounting() -> Outcome {
    let (ex, rho) = bell_rho();
    let m = ex.punchcard.slots();
    // Ring clock started in its stationary state, with room for every tick by 2Mτ.
    let cap = 30;
    let base = make_biased_erlang_clock(10, 1.0, 1.0, cap)?;
    let ss = stationary_populations(&base.marginal_clockwork()?)?;
    let spec = base.with_initial_populations(&ss)?;
    let card = make_punchcard(&ex.program, cap)?;
    let steps = 40 * m;
    let tr = evolve_block(&spec, &ex.gateset, &card, &rho, &SolverConfig::uniform(2.0 * m as f64, steps + 1))?;
    let ledger = entropy_ledger(&spec, &tr, None, 0.0)?;
    let checks = [ledger.per_tick_identity(steps / 2)?, ledger.per_tick_identity(steps)?];
    let per_tick_ok = checks.iter().all(|c| c.pass);

    let ds = 20.0;
    let irr = make_erlang_clock(10, 1.0, m)?.with_reverse_ticks(ds)?;
    let tr = evolve_reversible(&irr, &ex.gateset, &ex.punchcard, &rho, &SolverConfig::uniform(12.0, 481))?;
    let tick = *entropy_ledger(&irr, &tr, None, 0.0)?.tick_integral.last().expect("samples");
    let rel = (tick - m as f64 * ds).abs() / (m as f64 * ds);
    Ok((
        per_tick_ok && rel <= 0.02,
        format!(
            "per-tick rel err {:.1e} at Mτ, {:.1e} at 2Mτ (≤ 1e-2); tick entropy {tick:.3} vs MΔσ {} rel {rel:.1e} (≤ 2e-2)",
            checks[0].relative_error,
            checks[1].relative_error,
            m as f64 * ds
        ),
    ))
}

fn coarse_graining() -> Outcome {
    let (ex, rho) = bell_rho();
    let base = make_erlang_clock(50, 1.0, 3)?;
    let ms = [1usize, 2, 4, 8];
    let mut acc_err: f64 = 0.0;
    let mut gate_err: f64 = 0.0;
    let mut infid = Vec::new();
    for &m in &ms {
        let (cs, cg) = coarse_grain(&base, &ex.gateset, m)?;
        let mf = m as f64;
        let stats = tick_statistics(&cs, 1, 3.0 * mf, 160)?;
        acc_err = acc_err.max((stats.accuracy[0] / (50.0 * mf) - 1.0).abs());
        for k in 1..=ex.gateset.len() {
            gate_err = gate_err.max((cg.unitary(k)? - ex.gateset.unitary(k)?).max_abs());
        }
        let tr = evolve_block(&cs, &cg, &ex.punchcard, &rho, &SolverConfig::at_times(vec![6.0 * mf]))?;
        infid.push(1.0 - program_fidelity(&tr.last().target(), &cg, &ex.program, &rho)?.value);
    }
    let xs: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    let slope = loglog_slope(&xs, &infid);
    Ok((
        acc_err <= 0.02 && gate_err <= 1e-12 && (slope + 1.0).abs() <= 0.15,
        format!("accuracy rel err {acc_err:.1e} (≤ 2e-2), gate change {gate_err:.1e} (≤ 1e-12), infidelity slope {slope:.3} (−1 ± 0.15)"),
    ))
}

fn tradeoff() -> Outcome {
    let gs = hadamard_t_gateset()?;
    let target = ComplexMatrix::diagonal(&[C64::from_polar(1.0, -0.05), C64::from_polar(1.0, 0.05)]);
    let n = 1000;
    let result = compile_bruteforce(&target, &gs, 12)?;
    let curve = tradeoff_curve(&result, n as f64)?;
    let best = curve.best();
    let program = &result.entries[curve.argmin].program;
    let zero = DensityMatrix::pure(&[ONE, ZERO])?;
    let out = evolve_iid(&gs, program, &TickDensity::erlang(n, n as f64)?, &zero)?;
    let want = zero.matrix().conjugate_by(&target);
    let err = trace_distance(out.matrix(), &want);
    let eps: Vec<String> = result.entries.iter().map(|e| format!("{:.4}", e.epsilon)).collect();
    println!("      ε(L), L = 0..=12: {}", eps.join(" "));
    Ok((
        curve.has_interior_minimum() && err <= best.total + 5e-2,
        format!(
            "L* = {} (interior: {}), total(L*) {:.4}, simulated error {err:.4} (≤ total + 5e-2)",
            best.length,
            curve.has_interior_minimum(),
            best.total
        ),
    ))
}

fn reversible() -> Outcome {
    let (ex, rho) = bell_rho();
    let spec = make_erlang_clock(10, 1.0, 3)?;
    let config = SolverConfig::at_times(vec![0.0, 2.0, 6.0]);
    let irr = evolve_block(&spec, &ex.gateset, &ex.punchcard, &rho, &config)?;
    let near = evolve_reversible(&spec.with_reverse_ticks(50.0)?, &ex.gateset, &ex.punchcard, &rho, &config)?;
    let strong = evolve_reversible(&spec.with_reverse_ticks(2.0)?, &ex.gateset, &ex.punchcard, &rho, &config)?;
    let td = trace_distance(&irr.last().target(), &near.last().target());
    let back: f64 = strong.states[1].backward.iter().sum();
    let f_irr = program_fidelity(&irr.last().target(), &ex.gateset, &ex.program, &rho)?.value;
    let f_rev = program_fidelity(&strong.last().target(), &ex.gateset, &ex.program, &rho)?.value;
    Ok((
        td <= 1e-6 && back > 0.0 && f_rev < f_irr,
        format!("Δσ=50 TD {td:.1e} (≤ 1e-6); Δσ=2 backward current {back:.2e}, fidelity {f_rev:.4} < {f_irr:.4}"),
    ))
}

fn switch_demo() -> Outcome {
    let gs = make_gateset(
        1.0,
        vec![("X".into(), involution_generator(&pauli_x())), ("Z".into(), involution_generator(&pauli_z()))],
        vec![2],
    )?;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let card = superposed_punchcard(&[(h, Program::new(vec![1, 2])), (h, Program::new(vec![2, 1]))], 2)?;
    let rho = DensityMatrix::maximally_mixed(2);
    let oracle = switch_reference(&pauli_x(), &pauli_z(), [h, h], &rho)?;
    let mut dists = Vec::new();
    for d in [16usize, 64, 256] {
        let spec = make_erlang_clock(d, 1.0, 2)?;
        let tr = evolve_full(&spec, &gs, &card, &rho, &SolverConfig::at_times(vec![6.0]), FullRepresentation::Auto)?;
        dists.push(trace_distance(&tr.last().register_target, oracle.matrix()));
    }
    let ideal = ideal_branch_recombination(&gs, &card, &rho)?;
    let sub = trace_distance(ideal.matrix(), oracle.matrix());
    let decreasing = dists.windows(2).all(|w| w[1] < w[0]);
    Ok((
        decreasing && sub <= 1e-9,
        format!("TD at D=16/64/256: {:.3e} {:.3e} {:.3e} (decreasing), ideal-clock TD {sub:.1e} (≤ 1e-9)", dists[0], dists[1], dists[2]),
    ))
}

fn main() {
    let criteria: [(u32, &str, Option<u64>, fn() -> Outcome); 11] = [
        (1, "universality", Some(120), universality),
        (2, "cross-solver equivalence", Some(60), cross_solver),
        (3, "infidelity sweep", Some(600), infidelity_sweep),
        (4, "second-order clock channel", None, second_order),
        (5, "tick identities", None, tick_identities),
        (6, "concentration suite", None, concentration),
        (7, "entropy accounting", None, entropy_accounting),
        (8, "coarse-graining", None, coarse_graining),
        (9, "compilation trade-off", None, tradeoff),
        (10, "reversible ticks", None, reversible),
        (11, "quantum SWITCH", None, switch_demo),
    ];
    let mut failed = Vec::new();
    for (n, name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f));
        let elapsed = start.elapsed();
        let (mut pass, mut detail) = match outcome {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        if let Some(limit) = budget {
            if elapsed > Duration::from_secs(limit) {
                pass = false;
                detail.push_str(&format!("; over the {limit} s budget"));
            }
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {tag} {name}: {detail} [{:.1} s]", elapsed.as_secs_f64());
        if !pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
