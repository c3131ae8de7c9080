//! The Bell game: a trial is won when the outcomes agree and not both
//! settings are 2, or disagree and both are 2. Under local realism with
//! uniformly random settings the win probability per trial is at most 3/4,
//! whatever happened in earlier trials, so the win count is stochastically
//! dominated by Bin(N, 3/4).

use crate::data::BellDataset;
use crate::dist::{binom_sf, TailProb};
use crate::error::Result;

pub const LOCAL_BOUND: f64 = 0.75;

/// `½ + √2/4`, the quantum maximum.
pub const TSIRELSON_RATE: f64 = 0.5 + core::f64::consts::SQRT_2 / 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameResult {
    pub wins: u64,
    pub trials: u64,
    pub win_rate: f64,
    /// `P(X ≥ wins)` for `X ~ Bin(trials, 3/4)`.
    pub p: TailProb,
    pub lr_bound: f64,
    pub tsirelson_rate: f64,
    /// Trials per setting pair, for judging how uniform the settings were.
    pub block_trials: [u64; 4],
}

pub fn count_wins(ds: &BellDataset) -> (u64, u64) {
    let mut wins = 0;
    for (i, t) in ds.tables.iter().enumerate() {
        let c = t.counts;
        wins += if i == 3 { c[0][1] + c[1][0] } else { c[0][0] + c[1][1] };
    }
    (wins, ds.total_trials())
}

pub fn bell_game_test(ds: &BellDataset) -> Result<GameResult> {
    let (wins, trials) = count_wins(ds);
    let p = binom_sf(trials, LOCAL_BOUND, wins)?;
    Ok(GameResult {
        wins,
        trials,
        win_rate: if trials > 0 { wins as f64 / trials as f64 } else { 0.0 },
        p,
        lr_bound: LOCAL_BOUND,
        tsirelson_rate: TSIRELSON_RATE,
        block_trials: ds.trials(),
    })
}
