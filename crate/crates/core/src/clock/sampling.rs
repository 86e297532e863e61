use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::density::TickDensity;
use super::{ClassicalRates, ClockSpec};
use crate::error::{AqpuError, Result};

/// Counter-based stream: results depend only on (seed, stream), never on scheduling.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A change of the tick register: `sector` is the register value after the event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TickEvent {
    pub time: f64,
    pub sector: usize,
}

#[derive(Clone, Debug)]
pub enum TickSampler {
    /// Gillespie simulation of a classical clock, reverse ticks included.
    JumpChain(JumpChain),
    /// i.i.d. intervals drawn from the density's quadrature nodes.
    IidDensity(TickDensity),
    /// Ticks exactly every τ.
    Deterministic(f64),
}

#[derive(Clone, Debug)]
pub struct JumpChain {
    initial: Vec<f64>,
    /// Outgoing clockwork moves per level: (to, rate).
    clockwork: Vec<Vec<(usize, f64)>>,
    /// Per sector n < M, per level: (to, rate) of the tick into n + 1.
    tick: Vec<Vec<Vec<(usize, f64)>>>,
    /// Per sector n ≥ 1 (index n − 1), per level: (to, rate) of the untick into n − 1.
    untick: Vec<Vec<Vec<(usize, f64)>>>,
}

impl JumpChain {
    fn new(r: &ClassicalRates) -> Self {
        let mut clockwork = vec![Vec::new(); r.dim];
        for t in &r.clockwork {
            clockwork[t.from].push((t.to, t.rate));
        }
        let mut tick = Vec::new();
        let mut untick = Vec::new();
        for ts in &r.tick {
            let mut fwd = vec![Vec::new(); r.dim];
            let mut back = vec![Vec::new(); r.dim];
            for t in ts {
                fwd[t.from].push((t.to, t.rate));
                if r.untick_factor > 0.0 {
                    back[t.to].push((t.from, r.untick_factor * t.rate));
                }
            }
            tick.push(fwd);
            untick.push(back);
        }
        Self { initial: r.initial.clone(), clockwork, tick, untick }
    }

    fn run(&self, horizon: f64, rng: &mut ChaCha8Rng) -> Vec<TickEvent> {
        let m = self.tick.len();
        let mut c = pick(&self.initial, rng);
        let mut n = 0usize;
        let mut t = 0.0;
        let mut events = Vec::new();
        let mut moves: Vec<(usize, f64, i8)> = Vec::new();
        loop {
            moves.clear();
            moves.extend(self.clockwork[c].iter().map(|&(to, r)| (to, r, 0)));
            if n < m {
                moves.extend(self.tick[n][c].iter().map(|&(to, r)| (to, r, 1)));
            }
            if n >= 1 {
                moves.extend(self.untick[n - 1][c].iter().map(|&(to, r)| (to, r, -1)));
            }
            let total: f64 = moves.iter().map(|m| m.1).sum();
            if total <= 0.0 {
                return events;
            }
            t += -(1.0 - rng.gen::<f64>()).ln() / total;
            if t > horizon {
                return events;
            }
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = moves[moves.len() - 1];
            for mv in &moves {
                if u < mv.1 {
                    chosen = *mv;
                    break;
                }
                u -= mv.1;
            }
            c = chosen.0;
            match chosen.2 {
                1 => n += 1,
                -1 => n -= 1,
                _ => continue,
            }
            events.push(TickEvent { time: t, sector: n });
        }
    }
}

fn pick(p: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = p.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &x) in p.iter().enumerate() {
        if u < x {
            return i;
        }
        u -= x;
    }
    p.iter().rposition(|&x| x > 0.0).unwrap_or(0)
}

impl TickSampler {
    pub fn jump_chain(spec: &ClockSpec) -> Result<Self> {
        Ok(Self::JumpChain(JumpChain::new(&spec.classical_rates()?)))
    }

    /// Register changes up to `horizon`; i.i.d. and deterministic samplers stop at `max_ticks`.
    pub fn sample_events(&self, max_ticks: usize, horizon: f64, rng: &mut ChaCha8Rng) -> Vec<TickEvent> {
        match self {
            Self::JumpChain(j) => j.run(horizon, rng),
            Self::Deterministic(tau) => (1..=max_ticks)
                .map(|n| TickEvent { time: n as f64 * tau, sector: n })
                .take_while(|e| e.time <= horizon)
                .collect(),
            Self::IidDensity(d) => {
                let probs = d.node_probabilities();
                let mut t = 0.0;
                let mut out = Vec::new();
                for n in 1..=max_ticks {
                    t += d.nodes()[pick(&probs, rng)];
                    if t > horizon {
                        break;
                    }
                    out.push(TickEvent { time: t, sector: n });
                }
                out
            }
        }
    }
}

/// Forward tick times of a classical clock up to `horizon`, by jump-chain
/// sampling. The register cap M applies.
pub fn sample_ticks(spec: &ClockSpec, seed: u64, horizon: f64) -> Result<Vec<f64>> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(AqpuError::Config("horizon must be finite and non-negative".into()));
    }
    let sampler = TickSampler::jump_chain(spec)
        .map_err(|_| AqpuError::Unsupported("tick sampling needs a classical clock".into()))?;
    let mut rng = stream_rng(seed, 0);
    let mut last = 0usize;
    let mut out = Vec::new();
    for e in sampler.sample_events(spec.max_ticks(), horizon, &mut rng) {
        if e.sector > last {
            out.push(e.time);
        }
        last = e.sector;
    }
    Ok(out)
}
