//! Parallel training and evaluation on a rayon pool.
//!
//! Work is split into fixed blocks of frames. In strict mode the per-block
//! partial sums are merged left to right, so results do not depend on the
//! worker count; otherwise rayon's reduction tree decides the order.

use dmimo_core::candidates::FrameCandidates;
use dmimo_core::channel::{derive_seed, stream};
use dmimo_core::dual::{block_sums, train, OracleOutput, SlackOracle, SlackSums, BLOCK};
use dmimo_core::harness::{evaluate_range, training_frames_range, AreaConfig, Policy};
use dmimo_core::selection::{compute_cmax, user_priority_order};
use dmimo_core::{AscentConfig, DualState, Metrics, MetricsAccumulator, PriorityOrder, Scenario, Scheme, UserQos};
use rayon::prelude::*;

use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub train_frames: usize,
    pub eval_frames: usize,
    pub cmax_frames: usize,
    pub area: Option<AreaConfig>,
    pub ascent: AscentConfig,
    pub workers: usize,
    pub strict: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 1,
            train_frames: 4000,
            eval_frames: 20_000,
            cmax_frames: 2000,
            area: Some(AreaConfig::default()),
            ascent: AscentConfig::default(),
            workers: 0,
            strict: true,
        }
    }
}

pub struct Runner {
    pub options: RunOptions,
    pool: rayon::ThreadPool,
}

fn blocks(total: usize, size: usize) -> Vec<std::ops::Range<u64>> {
    (0..total.div_ceil(size)).map(|b| (b * size) as u64..((b + 1) * size).min(total) as u64).collect()
}

impl Runner {
    pub fn new(options: RunOptions) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| SimError::Usage(format!("cannot start worker pool: {e}")))?;
        Ok(Runner { options, pool })
    }

    fn reduce<T>(&self, parts: Vec<T>, init: T, merge: impl Fn(&mut T, &T)) -> T {
        let mut acc = init;
        for p in &parts {
            merge(&mut acc, p);
        }
        acc
    }

    /// Effective-capacity priority order from `C_max` estimates.
    pub fn priority(&self, scenario: &Scenario) -> Result<(PriorityOrder, Vec<f64>)> {
        let qos = scenario.user_qos()?;
        let cmax = compute_cmax(scenario, self.options.cmax_frames, derive_seed(self.options.seed, stream::CMAX))?;
        let arrivals: Vec<f64> = qos.iter().map(|q| q.arrival).collect();
        Ok((user_priority_order(&arrivals, &cmax)?, cmax))
    }

    pub fn training_set(&self, scenario: &Scenario, scheme: Scheme, priority: &PriorityOrder) -> Result<Vec<FrameCandidates>> {
        let seed = self.options.seed;
        let parts: Vec<Vec<FrameCandidates>> = self.pool.install(|| {
            blocks(self.options.train_frames, BLOCK)
                .into_par_iter()
                .map(|r| training_frames_range(scenario, scheme, priority, seed, r))
                .collect::<dmimo_core::Result<_>>()
        })?;
        Ok(parts.into_iter().flatten().collect())
    }

    pub fn train(&self, scenario: &Scenario, scheme: Scheme, priority: &PriorityOrder) -> Result<DualState> {
        if self.options.train_frames == 0 {
            return Err(SimError::Usage("at least one training frame is required".into()));
        }
        let qos = scenario.user_qos()?;
        let frames = self.training_set(scenario, scheme, priority)?;
        let mut oracle = ParOracle { runner: self, scheme, frames: &frames, qos: &qos, bt: scenario.bt() };
        Ok(train(&mut oracle, &self.options.ascent, None)?)
    }

    pub fn evaluate(&self, scenario: &Scenario, policy: &Policy) -> Result<Metrics> {
        if self.options.eval_frames == 0 {
            return Err(SimError::Usage("at least one evaluation frame is required".into()));
        }
        let qos = scenario.user_qos()?;
        let area = self.options.area;
        let seed = self.options.seed;
        let ranges = blocks(self.options.eval_frames, BLOCK);
        let acc = self.pool.install(|| -> dmimo_core::Result<MetricsAccumulator> {
            let k = scenario.num_users();
            let map = |r: std::ops::Range<u64>| evaluate_range(scenario, policy, seed, r, area.as_ref());
            let merge = |mut a: MetricsAccumulator, b: MetricsAccumulator| {
                a.merge(&b);
                a
            };
            if self.options.strict {
                let parts: Vec<MetricsAccumulator> = ranges.into_par_iter().map(map).collect::<dmimo_core::Result<_>>()?;
                Ok(self.reduce(parts, MetricsAccumulator::new(k), |a, b| a.merge(b)))
            } else {
                ranges.into_par_iter().map(map).try_reduce(|| MetricsAccumulator::new(k), |a, b| Ok(merge(a, b)))
            }
        })?;
        Ok(acc.finish(&qos)?)
    }
}

struct ParOracle<'a> {
    runner: &'a Runner,
    scheme: Scheme,
    frames: &'a [FrameCandidates],
    qos: &'a [UserQos],
    bt: f64,
}

impl SlackOracle for ParOracle<'_> {
    fn num_users(&self) -> usize {
        self.qos.len()
    }

    fn evaluate(&mut self, lambda: &[f64]) -> dmimo_core::Result<OracleOutput> {
        let k = lambda.len();
        let (scheme, qos, bt) = (self.scheme, self.qos, self.bt);
        let map = |chunk: &[FrameCandidates]| block_sums(scheme, chunk, lambda, qos, bt);
        let total = self.runner.pool.install(|| -> dmimo_core::Result<SlackSums> {
            if self.runner.options.strict {
                let parts: Vec<SlackSums> = self.frames.par_chunks(BLOCK).map(map).collect::<dmimo_core::Result<_>>()?;
                Ok(self.runner.reduce(parts, SlackSums::new(k), |a, b| a.merge(b)))
            } else {
                self.frames.par_chunks(BLOCK).map(map).try_reduce(
                    || SlackSums::new(k),
                    |mut a, b| {
                        a.merge(&b);
                        Ok(a)
                    },
                )
            }
        })?;
        total.finish(lambda, qos)
    }
}
