//! Recorded reward traces and their JSONL representation.
//!
//! One trace per line: `{"prompt_id": "...", "rewards": [...], "meta": {...}}`.
//! Rewards are log-scale scores in generation order. `meta` is free-form
//! string labels (generator provenance, model names) and may be omitted.

use super::HarnessError;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// All recorded draws for one prompt, in the order they were generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTrace {
    pub prompt_id: String,
    pub rewards: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

pub(super) fn validate(trace: &RewardTrace) -> Result<(), String> {
    if trace.prompt_id.is_empty() {
        return Err("empty prompt_id".into());
    }
    if trace.rewards.is_empty() {
        return Err(format!("trace `{}` has no rewards", trace.prompt_id));
    }
    if let Some(bad) = trace.rewards.iter().find(|r| !r.is_finite()) {
        return Err(format!("trace `{}` has non-finite reward {bad}", trace.prompt_id));
    }
    Ok(())
}

/// Reads JSONL traces. Blank lines are skipped; parse and validation errors
/// carry the 1-based line number. Prompt ids must be unique within a file.
pub fn read_traces<R: BufRead>(reader: R) -> Result<Vec<RewardTrace>, HarnessError> {
    let mut traces = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let trace: RewardTrace = serde_json::from_str(text)
            .map_err(|e| HarnessError::Parse { line: lineno, message: e.to_string() })?;
        validate(&trace).map_err(|message| HarnessError::Parse { line: lineno, message })?;
        if !seen.insert(trace.prompt_id.clone()) {
            return Err(HarnessError::Parse {
                line: lineno,
                message: format!("duplicate prompt_id `{}`", trace.prompt_id),
            });
        }
        traces.push(trace);
    }
    Ok(traces)
}

pub fn read_traces_from_path(path: &Path) -> Result<Vec<RewardTrace>, HarnessError> {
    let file = File::open(path)?;
    read_traces(BufReader::new(file))
}

/// Writes traces as JSONL, one object per line, field order fixed.
pub fn write_traces<W: Write>(writer: &mut W, traces: &[RewardTrace]) -> Result<(), HarnessError> {
    for trace in traces {
        validate(trace).map_err(HarnessError::InvalidConfig)?;
        let line = serde_json::to_string(trace)
            .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_traces_to_path(path: &Path, traces: &[RewardTrace]) -> Result<(), HarnessError> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    write_traces(&mut writer, traces)?;
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> RewardTrace {
        let mut meta = BTreeMap::new();
        meta.insert("dataset".into(), "d0".into());
        RewardTrace { prompt_id: "d0-p000".into(), rewards: vec![0.5, -1.25, 2.0], meta }
    }

    #[test]
    fn jsonl_round_trip() {
        let traces = vec![
            sample_trace(),
            RewardTrace { prompt_id: "p2".into(), rewards: vec![1.0], meta: BTreeMap::new() },
        ];
        let mut buf = Vec::new();
        write_traces(&mut buf, &traces).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        // Empty meta is omitted entirely.
        assert!(!text.lines().nth(1).unwrap().contains("meta"));
        let back = read_traces(&buf[..]).unwrap();
        assert_eq!(back, traces);
    }

    #[test]
    fn writes_are_byte_stable() {
        let traces = vec![sample_trace()];
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_traces(&mut a, &traces).unwrap();
        write_traces(&mut b, &traces).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let input = b"{\"prompt_id\": \"a\", \"rewards\": [1.0]}\n\nnot json\n";
        match read_traces(&input[..]) {
            Err(HarnessError::Parse { line: 3, .. }) => {}
            other => panic!("expected parse error at line 3, got {other:?}"),
        }
    }

    #[test]
    fn validation_errors_carry_line_numbers() {
        let empty_rewards = b"{\"prompt_id\": \"a\", \"rewards\": []}\n";
        match read_traces(&empty_rewards[..]) {
            Err(HarnessError::Parse { line: 1, message }) => {
                assert!(message.contains("no rewards"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let nan = b"{\"prompt_id\": \"a\", \"rewards\": [null]}\n";
        assert!(read_traces(&nan[..]).is_err());
    }

    #[test]
    fn duplicate_prompt_ids_are_rejected() {
        let input =
            b"{\"prompt_id\": \"a\", \"rewards\": [1.0]}\n{\"prompt_id\": \"a\", \"rewards\": [2.0]}\n";
        match read_traces(&input[..]) {
            Err(HarnessError::Parse { line: 2, message }) => {
                assert!(message.contains("duplicate"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_meta_defaults_to_empty() {
        let input = b"{\"prompt_id\": \"a\", \"rewards\": [1.0, 2.0]}\n";
        let traces = read_traces(&input[..]).unwrap();
        assert!(traces[0].meta.is_empty());
    }

    #[test]
    fn blank_lines_are_skipped() {
        let input = b"\n{\"prompt_id\": \"a\", \"rewards\": [1.0]}\n   \n";
        let traces = read_traces(&input[..]).unwrap();
        assert_eq!(traces.len(), 1);
    }
}
