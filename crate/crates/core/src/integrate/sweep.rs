//! Monte-Carlo escape statistics.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify_escape, escape_events, integrate, EscapeClass, EscapeKind, EscapeThresholds, IntegratorConfig};
use crate::dynamics::{max_rt, PositiveEnergyFlow, ReducedFlow, RegTerms};
use crate::error::{domain, Error, Result};
use crate::field::Chart;
use crate::shape::ShapePotentials;

/// Where sweep initial conditions are drawn.
///
/// Both windows take `s in [-0.9, 0.9]`. At zero energy `y` is uniform in
/// `[-0.9, 0.9] sqrt(2 U~(s))` and `w` uniform in the admissible range with a
/// random sign, `R` slaved. At positive energy `Rt` is uniform in
/// `(0, Rt_max(h, s)]`, `vt` uniform in `[-0.9, 0.9] K` and `ut = +-sqrt(K^2 - vt^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampler {
    ZeroEnergy,
    PositiveEnergy,
}

pub const SAMPLE_S_MAX: f64 = 0.9;
pub const SAMPLE_Y_FRACTION: f64 = 0.9;

impl Sampler {
    pub fn chart(self) -> Chart {
        match self {
            Sampler::ZeroEnergy => Chart::Reduced,
            Sampler::PositiveEnergy => Chart::PositiveEnergy,
        }
    }

    fn check(self, pot: &ShapePotentials) -> Result<()> {
        let h = pot.params.h();
        match self {
            Sampler::ZeroEnergy if h != 0.0 => domain(format!("zero-energy sampler needs h = 0, got {h}")),
            Sampler::PositiveEnergy if !(h > 0.0) => domain(format!("positive-energy sampler needs h > 0, got {h}")),
            _ => Ok(()),
        }
    }

    /// One initial state in the sampler's chart.
    pub fn draw(self, pot: &ShapePotentials, rng: &mut impl Rng) -> Result<Vec<f64>> {
        self.check(pot)?;
        let s = rng.random_range(-SAMPLE_S_MAX..=SAMPLE_S_MAX);
        let t = RegTerms::at(pot, s)?;
        let a = pot.exp_a();
        match self {
            Sampler::ZeroEnergy => {
                let ymax = SAMPLE_Y_FRACTION * (2.0 * pot.shape_u(s)?).sqrt();
                let y = rng.random_range(-ymax..=ymax);
                let wmax = (2.0 * (t.ureg - 0.5 * t.phi.powf(a) * y * y)).max(0.0).sqrt();
                let w = rng.random::<f64>() * wmax;
                let w = if rng.random_bool(0.5) { w } else { -w };
                Ok(vec![y, s, w])
            }
            Sampler::PositiveEnergy => {
                let h = pot.params.h();
                let rmax = max_rt(h, s, pot)?;
                let rt = (1.0 - rng.random::<f64>()) * rmax;
                let k2 = (2.0 * (h + rt.powf(a) * t.ureg - rt.powf(pot.exp_b()) * t.vreg)).max(0.0);
                let k = k2.sqrt();
                let vt = rng.random_range(-SAMPLE_Y_FRACTION * k..=SAMPLE_Y_FRACTION * k);
                let ut = (k2 - vt * vt).max(0.0).sqrt();
                let ut = if rng.random_bool(0.5) { ut } else { -ut };
                Ok(vec![rt, vt, s, ut])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub integrator: IntegratorConfig,
    pub thresholds: EscapeThresholds,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            integrator: IntegratorConfig {
                rel_tol: 1e-10,
                abs_tol: 1e-12,
                max_step: 1e6,
                max_time: 1e12,
                event_tol: 1e-10,
                max_steps: 200_000,
                output_step: None,
            },
            thresholds: EscapeThresholds::default(),
            seed: 1,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub initial: Vec<f64>,
    pub class: EscapeClass,
    /// Label of the terminal event.
    pub terminal: String,
    pub end_time: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub sampler: Sampler,
    pub n: usize,
    pub seed: u64,
    pub counts: BTreeMap<EscapeKind, usize>,
    pub records: Vec<SweepRecord>,
}

impl SweepStats {
    pub fn count(&self, kind: EscapeKind) -> usize {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    pub fn fraction(&self, kind: EscapeKind) -> f64 {
        self.count(kind) as f64 / self.n as f64
    }

    pub fn two_plus_one_fraction(&self) -> f64 {
        (self.count(EscapeKind::TwoPlusOneLeft) + self.count(EscapeKind::TwoPlusOneRight)) as f64 / self.n as f64
    }
}

/// Random stream of one task: the sweep seed with the task index as stream id.
pub fn task_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draw, integrate and classify one sample.
pub fn run_sample(pot: &ShapePotentials, sampler: Sampler, index: usize, config: &SweepConfig) -> Result<SweepRecord> {
    let mut rng = task_rng(config.seed, index);
    let x0 = sampler.draw(pot, &mut rng)?;
    let thr = &config.thresholds;
    let (class, terminal, end_time, steps) = match sampler {
        Sampler::ZeroEnergy => {
            let field = ReducedFlow { pot };
            let ev = escape_events::<3>(Chart::Reduced, pot, thr);
            let tr = integrate(&field, &[x0[0], x0[1], x0[2]], &config.integrator, &ev)?;
            let end = tr.terminal_event.as_ref().map_or("none".into(), |e| e.label());
            (classify_escape(&tr, pot, thr), end, tr.last().time, tr.stats.accepted)
        }
        Sampler::PositiveEnergy => {
            let field = PositiveEnergyFlow { pot, h: pot.params.h() };
            let ev = escape_events::<4>(Chart::PositiveEnergy, pot, thr);
            let tr = integrate(&field, &[x0[0], x0[1], x0[2], x0[3]], &config.integrator, &ev)?;
            let end = tr.terminal_event.as_ref().map_or("none".into(), |e| e.label());
            (classify_escape(&tr, pot, thr), end, tr.last().time, tr.stats.accepted)
        }
    };
    Ok(SweepRecord {
        index,
        initial: x0,
        class,
        terminal,
        end_time,
        steps,
    })
}

/// Classify `n` sampled orbits. Results are independent of the worker count.
pub fn sweep(pot: &ShapePotentials, sampler: Sampler, n: usize, config: &SweepConfig) -> Result<SweepStats> {
    if n == 0 {
        return domain("a sweep needs at least one sample");
    }
    sampler.check(pot)?;
    config.integrator.validate()?;
    let task = |i: usize| run_sample(pot, sampler, i, config);
    let results: Vec<Result<SweepRecord>> = match config.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Integration(format!("thread pool: {e}")))?;
            pool.install(|| (0..n).into_par_iter().map(task).collect())
        }
        None => (0..n).into_par_iter().map(task).collect(),
    };
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut counts: BTreeMap<EscapeKind, usize> = EscapeKind::ALL.iter().map(|k| (*k, 0)).collect();
    for r in &records {
        *counts.entry(r.class.kind).or_default() += 1;
    }
    Ok(SweepStats {
        sampler,
        n,
        seed: config.seed,
        counts,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{admissibility, positive_energy, PositiveEnergyState};
    use crate::model::SystemParams;

    #[test]
    fn samples_are_admissible_and_reproducible() {
        let pot = ShapePotentials::new(&SystemParams::reference_symmetric()).unwrap();
        for i in 0..50 {
            let x = Sampler::ZeroEnergy.draw(&pot, &mut task_rng(3, i)).unwrap();
            assert!(x[1].abs() <= SAMPLE_S_MAX);
            assert!(admissibility(&[x[0], x[1], x[2]], &pot).unwrap() >= 0.0);
            assert_eq!(x, Sampler::ZeroEnergy.draw(&pot, &mut task_rng(3, i)).unwrap());
        }
        let pot_h = ShapePotentials::new(&SystemParams::reference_symmetric().with_energy(1.0).unwrap()).unwrap();
        for i in 0..50 {
            let x = Sampler::PositiveEnergy.draw(&pot_h, &mut task_rng(3, i)).unwrap();
            let st = PositiveEnergyState::from_array(&[x[0], x[1], x[2], x[3]]);
            assert!(x[0] > 0.0);
            assert!((positive_energy(&st, &pot_h).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(Sampler::PositiveEnergy.draw(&pot, &mut task_rng(3, 0)).is_err());
        assert!(Sampler::ZeroEnergy.draw(&pot_h, &mut task_rng(3, 0)).is_err());
        assert_ne!(task_rng(3, 0).random::<u64>(), task_rng(3, 1).random::<u64>());
    }
}
