use std::time::Instant;

use cpd_core::algebraic::{auto_l, CpdConfig};
use cpd_core::random::random_instance;
use cpd_core::structured::sym_dim;
use rayon::prelude::*;
use serde::Serialize;

/// Residual at or below which a trial counts as a success.
pub const SUCCESS_RESIDUAL: f64 = 1e-8;

/// Gram sizes above this need `--big`.
pub const BIG_D: u128 = 6000;

pub const CSV_HEADER: &str = "I,J,K,R,m,l,D,success_rate,mean_seconds,max_residual";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    pub dims: (usize, usize, usize),
    pub rank: usize,
    /// `(m, l)` reported for this row in the reference tables, when known.
    pub expected: Option<(usize, usize)>,
}

impl Config {
    const fn known(i: usize, j: usize, k: usize, r: usize, m: usize, l: usize) -> Self {
        Self {
            dims: (i, j, k),
            rank: r,
            expected: Some((m, l)),
        }
    }

    /// Gram size at the expected `(m, l)`.
    pub fn expected_d(&self) -> Option<u128> {
        self.expected.map(|(m, l)| sym_dim(self.dims.2.min(self.rank), m + l))
    }
}

/// `I x J x (I-1)(J-1)` tensors of rank `(I-1)(J-1) <= 24`.
pub const TABLE1: [Config; 20] = [
    Config::known(3, 3, 4, 4, 2, 0),
    Config::known(3, 4, 6, 6, 2, 0),
    Config::known(3, 5, 8, 8, 2, 0),
    Config::known(3, 6, 10, 10, 2, 0),
    Config::known(3, 7, 12, 12, 2, 1),
    Config::known(3, 8, 14, 14, 2, 1),
    Config::known(3, 9, 16, 16, 2, 1),
    Config::known(3, 10, 18, 18, 2, 1),
    Config::known(3, 11, 20, 20, 2, 1),
    Config::known(3, 12, 22, 22, 2, 1),
    Config::known(3, 13, 24, 24, 2, 1),
    Config::known(4, 4, 9, 9, 2, 0),
    Config::known(4, 5, 12, 12, 2, 1),
    Config::known(4, 6, 15, 15, 2, 1),
    Config::known(4, 7, 18, 18, 2, 2),
    Config::known(4, 8, 21, 21, 2, 2),
    Config::known(4, 9, 24, 24, 2, 2),
    Config::known(5, 5, 16, 16, 2, 1),
    Config::known(5, 6, 20, 20, 2, 2),
    Config::known(5, 7, 24, 24, 2, 2),
];

/// Rank beyond the mode-3 dimension.
pub const TABLE2: [Config; 8] = [
    Config::known(4, 5, 6, 7, 3, 1),
    Config::known(5, 7, 7, 9, 4, 1),
    Config::known(6, 9, 8, 11, 5, 1),
    Config::known(7, 7, 7, 10, 5, 1),
    Config::known(4, 6, 8, 9, 3, 1),
    Config::known(4, 7, 10, 11, 3, 1),
    Config::known(5, 6, 6, 8, 4, 2),
    Config::known(5, 7, 8, 10, 4, 2),
];

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub dims: (usize, usize, usize),
    pub rank: usize,
    /// Most frequent `l` among successful trials.
    pub l_used: Option<usize>,
    pub m: Option<usize>,
    pub d: Option<usize>,
    pub success_rate: f64,
    pub mean_wall_time_seconds: f64,
    /// Largest residual among trials that returned factors.
    pub max_residual: Option<f64>,
    pub trials: usize,
    /// First failure message, if any trial failed.
    pub first_failure: Option<String>,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{:.6},{}",
            self.dims.0,
            self.dims.1,
            self.dims.2,
            self.rank,
            opt(self.m),
            opt(self.l_used),
            opt(self.d),
            self.success_rate,
            self.mean_wall_time_seconds,
            self.max_residual.map(|r| format!("{r:.3e}")).unwrap_or_default()
        )
    }
}

struct Trial {
    seconds: f64,
    outcome: Result<(usize, usize, usize, f64), String>,
}

/// Per-trial seed, so a trial's result does not depend on scheduling.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed ^ (trial + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub fn run_config(cfg: &Config, trials: usize, seed: u64, l_max: usize) -> BenchRow {
    let results: Vec<Trial> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let s = trial_seed(seed, trial);
            let (_, t) = random_instance(cfg.dims, cfg.rank, s);
            let started = Instant::now();
            let res = auto_l(&t, cfg.rank, l_max, &CpdConfig::default().with_seed(s));
            let seconds = started.elapsed().as_secs_f64();
            let outcome = res
                .map(|r| (r.m, r.l_used, r.phase_diagnostics.gram_dim, r.residual))
                .map_err(|e| e.to_string());
            Trial { seconds, outcome }
        })
        .collect();

    let n = results.len().max(1) as f64;
    let mean = results.iter().map(|t| t.seconds).sum::<f64>() / n;
    let ok: Vec<&(usize, usize, usize, f64)> = results
        .iter()
        .filter_map(|t| t.outcome.as_ref().ok())
        .filter(|o| o.3 <= SUCCESS_RESIDUAL)
        .collect();
    let mut l_counts = std::collections::BTreeMap::new();
    for o in &ok {
        *l_counts.entry((o.1, o.0, o.2)).or_insert(0usize) += 1;
    }
    let common = l_counts.iter().max_by_key(|(_, c)| **c).map(|(k, _)| *k);
    let max_residual = results
        .iter()
        .filter_map(|t| t.outcome.as_ref().ok().map(|o| o.3))
        .reduce(f64::max);
    let first_failure = results.iter().find_map(|t| t.outcome.as_ref().err().cloned());
    BenchRow {
        dims: cfg.dims,
        rank: cfg.rank,
        l_used: common.map(|c| c.0),
        m: common.map(|c| c.1),
        d: common.map(|c| c.2),
        success_rate: ok.len() as f64 / n,
        mean_wall_time_seconds: mean,
        max_residual,
        trials,
        first_failure,
    }
}
