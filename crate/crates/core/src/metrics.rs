//! Episode records and their CSV form.
//!
//! Column order: `episode,agent,variant,steps,reward,forced_termination`.
//! The header row is always written.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gridworld::TaskVariant;

pub const CSV_HEADER: &str = "episode,agent,variant,steps,reward,forced_termination";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub agent: String,
    pub variant: TaskVariant,
    pub steps: usize,
    /// Terminal reward: -1, 0 (forced termination) or +1.
    pub reward: f64,
    pub forced_termination: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub episodes: usize,
    pub mean_reward: f64,
    pub mean_length: f64,
    pub forced: usize,
}

pub fn summarize(records: &[EpisodeRecord]) -> Summary {
    let n = records.len().max(1) as f64;
    Summary {
        episodes: records.len(),
        mean_reward: records.iter().map(|r| r.reward).sum::<f64>() / n,
        mean_length: records.iter().map(|r| r.steps as f64).sum::<f64>() / n,
        forced: records.iter().filter(|r| r.forced_termination).count(),
    }
}

/// Records sorted by episode index, as CSV text.
pub fn to_csv(records: &[EpisodeRecord]) -> String {
    let mut sorted: Vec<&EpisodeRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.episode);
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in sorted {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.episode,
            r.agent,
            r.variant.label(),
            r.steps,
            r.reward,
            u8::from(r.forced_termination)
        )
        .expect("write to string");
    }
    out
}

pub fn from_csv(text: &str) -> Result<Vec<EpisodeRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::invalid("metrics CSV header mismatch"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::invalid(format!("metrics CSV row {}: `{line}`", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad());
            }
            Ok(EpisodeRecord {
                episode: f[0].parse().map_err(|_| bad())?,
                agent: f[1].to_string(),
                variant: match f[2] {
                    "A" => TaskVariant::A,
                    "B" => TaskVariant::B,
                    _ => return Err(bad()),
                },
                steps: f[3].parse().map_err(|_| bad())?,
                reward: f[4].parse().map_err(|_| bad())?,
                forced_termination: f[5] == "1",
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(episode: usize, reward: f64, steps: usize) -> EpisodeRecord {
        EpisodeRecord {
            episode,
            agent: "strl".into(),
            variant: TaskVariant::B,
            steps,
            reward,
            forced_termination: reward == 0.0,
        }
    }

    #[test]
    fn csv_sorted_with_header() {
        let csv = to_csv(&[rec(2, 1.0, 40), rec(0, 0.0, 200), rec(1, -1.0, 33)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0,strl,B,200,0,1");
        assert_eq!(lines[3], "2,strl,B,40,1,0");
        let back = from_csv(&csv).unwrap();
        assert_eq!(back[2], rec(2, 1.0, 40));
    }

    #[test]
    fn summary_means() {
        let s = summarize(&[rec(0, 1.0, 40), rec(1, 0.0, 200)]);
        assert_eq!(s.mean_reward, 0.5);
        assert_eq!(s.mean_length, 120.0);
        assert_eq!(s.forced, 1);
    }
}
