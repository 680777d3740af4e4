use crate::corpus::TranscriptWord;
use crate::error::{Error, Result};

/// Union of the words' `[start_s, end_s]` intervals as disjoint sorted spans.
pub fn merged_intervals(words: &[TranscriptWord]) -> Vec<(f64, f64)> {
    let mut spans: Vec<(f64, f64)> = words.iter().map(|w| (w.start_s, w.end_s)).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (s, e) in spans {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

pub fn speech_time(words: &[TranscriptWord]) -> f64 {
    merged_intervals(words).iter().map(|(s, e)| e - s).sum()
}

/// Words per minute of merged speech time; 0 with no words or no speech time.
pub fn speech_rate(words: &[TranscriptWord]) -> f64 {
    let t = speech_time(words);
    if words.is_empty() || t <= 0.0 {
        return 0.0;
    }
    words.len() as f64 / (t / 60.0)
}

/// Seconds of the `[0, window_s]` window not covered by any word.
pub fn non_speech_time(words: &[TranscriptWord], window_s: f64) -> Result<f64> {
    if !(window_s > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be positive, got {window_s}")));
    }
    let covered: f64 = merged_intervals(words)
        .iter()
        .map(|&(s, e)| (e.min(window_s) - s.max(0.0)).max(0.0))
        .sum();
    Ok((window_s - covered).max(0.0))
}
