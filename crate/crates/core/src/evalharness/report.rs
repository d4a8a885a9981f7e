use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::sessionlog::LabelErrorKind;

pub const REPORT_SCHEMA: &str = "mrin-eval-report";
pub const REPORT_VERSION: u32 = 1;

/// What a responsible-level ratio has to beat.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WinRule {
    /// Strictly greater than the mean of the random ratios.
    #[default]
    Mean,
    /// Strictly greater than their median.
    Median,
}

impl WinRule {
    pub fn baseline(self, ratios: &[f64]) -> f64 {
        match self {
            WinRule::Mean => ratios.iter().sum::<f64>() / ratios.len() as f64,
            WinRule::Median => {
                let mut s = ratios.to_vec();
                s.sort_by(f64::total_cmp);
                let n = s.len();
                if n % 2 == 1 {
                    s[n / 2]
                } else {
                    (s[n / 2 - 1] + s[n / 2]) / 2.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalKind {
    Explainability,
    LabelingError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleTrace {
    pub session_id: String,
    /// AGENT turn (explainability) or introducing AGENT turn (labeling errors).
    pub turn_index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<LabelTrace>,
    /// Components compared: the action's additions or the D-state's entries.
    pub components: usize,
    pub responsible_instance: usize,
    pub responsible_session: String,
    pub filter_index: usize,
    pub modal_count: usize,
    pub responsible_ratio: f64,
    pub random_sessions: Vec<String>,
    pub random_ratios: Vec<f64>,
    pub baseline: f64,
    pub win: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTrace {
    pub kind: LabelErrorKind,
    pub x: usize,
    pub y: usize,
    pub tile: String,
    pub contradiction_turn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedExample {
    pub session_id: String,
    pub turn_index: usize,
    pub reason: String,
}

/// Aggregates over one group of examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub count: usize,
    pub wins: usize,
    pub win_rate: f64,
    pub mean_responsible_ratio: f64,
    pub mean_random_ratio: f64,
}

impl Tally {
    pub fn of<'a>(traces: impl IntoIterator<Item = &'a ExampleTrace>) -> Tally {
        let (mut count, mut wins, mut resp, mut rand) = (0usize, 0usize, 0.0, 0.0);
        for t in traces {
            count += 1;
            wins += usize::from(t.win);
            resp += t.responsible_ratio;
            rand += t.random_ratios.iter().sum::<f64>() / t.random_ratios.len() as f64;
        }
        let div = |v: f64| if count == 0 { 0.0 } else { v / count as f64 };
        Tally {
            count,
            wins,
            win_rate: div(wins as f64),
            mean_responsible_ratio: div(resp),
            mean_random_ratio: div(rand),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindTally {
    pub kind: LabelErrorKind,
    #[serde(flatten)]
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: String,
    pub version: u32,
    pub evaluation: EvalKind,
    pub seed: u64,
    pub n_random: usize,
    pub min_added: usize,
    pub win_rule: WinRule,
    /// Fingerprint of the training run the model and attribution came from.
    pub train_fingerprint: String,
    /// SHA-256 of the test corpus in session-log form.
    pub test_fingerprint: String,
    pub eligible_count: usize,
    pub win_count: usize,
    pub win_rate: f64,
    pub mean_responsible_ratio: f64,
    pub mean_random_ratio: f64,
    /// Labeling-error runs only: false positives and false negatives separately.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub by_kind: Vec<KindTally>,
    pub skipped: Vec<SkippedExample>,
    pub traces: Vec<ExampleTrace>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text summary table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let title = match self.evaluation {
            EvalKind::Explainability => "Explainability evaluation",
            EvalKind::LabelingError => "Labeling error evaluation",
        };
        let _ = writeln!(
            out,
            "{title} (seed {}, {} random levels, win rule {:?})",
            self.seed, self.n_random, self.win_rule
        );
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>6} {:>9} {:>17} {:>14}",
            "group", "examples", "wins", "win rate", "most responsible", "random levels"
        );
        let mut row = |name: &str, t: &Tally| {
            let _ = writeln!(
                out,
                "{:<16} {:>8} {:>6} {:>8.2}% {:>17.4} {:>14.4}",
                name,
                t.count,
                t.wins,
                100.0 * t.win_rate,
                t.mean_responsible_ratio,
                t.mean_random_ratio
            );
        };
        for k in &self.by_kind {
            let name = match k.kind {
                LabelErrorKind::FalsePositive => "false positive",
                LabelErrorKind::FalseNegative => "false negative",
            };
            row(name, &k.tally);
        }
        row(
            "all",
            &Tally {
                count: self.eligible_count,
                wins: self.win_count,
                win_rate: self.win_rate,
                mean_responsible_ratio: self.mean_responsible_ratio,
                mean_random_ratio: self.mean_random_ratio,
            },
        );
        if !self.skipped.is_empty() {
            let _ = writeln!(out, "skipped: {}", self.skipped.len());
        }
        out
    }
}
