//! Per-episode learning curves and their summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::EVAL_TURN_PENALTY;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub phase: u8,
    pub success: bool,
    pub turns: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub window: usize,
    pub episodes: Vec<EpisodeMetrics>,
}

/// Mean of `values[i + 1 - window ..= i]` (fewer at the start) for every `i`.
pub fn moving_mean(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            values[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub const CSV_HEADER: &str = "episode,phase,success,turns,reward,moving_reward,moving_success";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub phase: u8,
    pub episodes: usize,
    pub success: (f64, f64),
    pub turns: (f64, f64),
    pub reward: (f64, f64),
    pub final_moving_reward: f64,
}

impl MetricsSeries {
    pub fn new(window: usize) -> Self {
        MetricsSeries { window: window.max(1), episodes: Vec::new() }
    }

    pub fn push(&mut self, m: EpisodeMetrics) {
        self.episodes.push(m);
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.reward).collect()
    }

    pub fn successes(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| if e.success { 1.0 } else { 0.0 }).collect()
    }

    pub fn moving_rewards(&self) -> Vec<f64> {
        moving_mean(&self.rewards(), self.window)
    }

    pub fn moving_successes(&self) -> Vec<f64> {
        moving_mean(&self.successes(), self.window)
    }

    /// Moving reward over the window ending at episode index `i`.
    pub fn moving_reward_at(&self, i: usize) -> Option<f64> {
        if i >= self.episodes.len() {
            return None;
        }
        let lo = (i + 1).saturating_sub(self.window);
        Some(self.episodes[lo..=i].iter().map(|e| e.reward).sum::<f64>() / (i + 1 - lo) as f64)
    }

    pub fn final_moving_reward(&self) -> Option<f64> {
        self.episodes.len().checked_sub(1).and_then(|i| self.moving_reward_at(i))
    }

    /// Index of the last episode recorded in `phase`.
    pub fn last_of_phase(&self, phase: u8) -> Option<usize> {
        self.episodes.iter().rposition(|e| e.phase == phase)
    }

    pub fn phase_summaries(&self) -> Vec<PhaseSummary> {
        let mut out = Vec::new();
        for phase in 1..=4u8 {
            let eps: Vec<&EpisodeMetrics> = self.episodes.iter().filter(|e| e.phase == phase).collect();
            if eps.is_empty() {
                continue;
            }
            let col = |f: &dyn Fn(&EpisodeMetrics) -> f64| mean_std(&eps.iter().map(|e| f(e)).collect::<Vec<_>>());
            out.push(PhaseSummary {
                phase,
                episodes: eps.len(),
                success: col(&|e| if e.success { 1.0 } else { 0.0 }),
                turns: col(&|e| e.turns as f64),
                reward: col(&|e| e.reward),
                final_moving_reward: self.moving_reward_at(self.last_of_phase(phase).expect("non-empty")).expect("in range"),
            });
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mr = self.moving_rewards();
        let ms = self.moving_successes();
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (i, e) in self.episodes.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.episode,
                e.phase,
                u8::from(e.success),
                e.turns,
                e.reward,
                mr[i],
                ms[i]
            ));
        }
        out
    }

    /// Parses the raw columns of a table written by [`MetricsSeries::to_csv`].
    pub fn from_csv(text: &str, window: usize) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(CSV_HEADER) {
            return Err(Error::Checkpoint("metrics table has an unexpected header".into()));
        }
        let bad = |n: usize| Error::Checkpoint(format!("metrics table row {n} is malformed"));
        let mut series = MetricsSeries::new(window);
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(bad(n + 1));
            }
            series.push(EpisodeMetrics {
                episode: cols[0].parse().map_err(|_| bad(n + 1))?,
                phase: cols[1].parse().map_err(|_| bad(n + 1))?,
                success: cols[2] == "1",
                turns: cols[3].parse().map_err(|_| bad(n + 1))?,
                reward: cols[4].parse().map_err(|_| bad(n + 1))?,
            });
        }
        Ok(series)
    }
}

/// Greedy evaluation over a batch of dialogues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_turns: f64,
    pub mean_reward: f64,
    pub reward_std: f64,
}

impl EvalSummary {
    pub fn from_episodes(results: &[(bool, usize, f64)]) -> Self {
        let n = results.len().max(1) as f64;
        let success_rate = results.iter().filter(|r| r.0).count() as f64 / n;
        let mean_turns = results.iter().map(|r| r.1 as f64).sum::<f64>() / n;
        let (mean_reward, reward_std) = mean_std(&results.iter().map(|r| r.2).collect::<Vec<_>>());
        EvalSummary { episodes: results.len(), success_rate, mean_turns, mean_reward, reward_std }
    }

    /// |reward − (success − 0.05·turns)|.
    pub fn identity_gap(&self) -> f64 {
        (self.mean_reward - (self.success_rate - EVAL_TURN_PENALTY * self.mean_turns)).abs()
    }
}

/// Mean ± std across independent runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub runs: usize,
    pub success: (f64, f64),
    pub turns: (f64, f64),
    pub reward: (f64, f64),
}

pub fn aggregate(runs: &[EvalSummary]) -> AggregateSummary {
    let col = |f: fn(&EvalSummary) -> f64| mean_std(&runs.iter().map(f).collect::<Vec<_>>());
    AggregateSummary {
        runs: runs.len(),
        success: col(|r| r.success_rate),
        turns: col(|r| r.mean_turns),
        reward: col(|r| r.mean_reward),
    }
}

/// Rows in the layout `Success  #Turn  Reward`.
pub fn format_eval_table(rows: &[(String, AggregateSummary)]) -> String {
    let mut out = format!("{:<16} {:>16} {:>16} {:>16}\n", "System", "Success", "#Turn", "Reward");
    for (name, a) in rows {
        let cell = |(m, s): (f64, f64)| {
            if a.runs > 1 {
                format!("{m:.3} ± {s:.3}")
            } else {
                format!("{m:.3}")
            }
        };
        out.push_str(&format!(
            "{:<16} {:>16} {:>16} {:>16}\n",
            name,
            cell(a.success),
            cell(a.turns),
            cell(a.reward)
        ));
    }
    out
}
