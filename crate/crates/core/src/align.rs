//! Speaker-dependent perturbation factors from phone alignments.
//!
//! Each speaker's average phone duration is measured from a CTM file. The
//! control speakers' averages are averaged again into a reference duration,
//! and a dysarthric speaker with average `l` gets `F = reference / l`.
//! Slower speakers (longer phones) therefore get `F < 1`, which slows control
//! speech down when used as a tempo or speed factor.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSegment {
    pub utterance_id: String,
    pub speaker_id: String,
    pub phone: String,
    /// Seconds.
    pub start: f64,
    /// Seconds.
    pub duration: f64,
}

/// How a speaker id is derived from an utterance id.
#[derive(Debug, Clone, Default)]
pub enum SpeakerPattern {
    /// Everything before the first underscore (`F02_B1_CW1_M2` -> `F02`).
    #[default]
    UnderscorePrefix,
    /// First capture group of the regex, or the whole match without groups.
    Regex(Regex),
}

impl SpeakerPattern {
    pub fn regex(pattern: &str) -> Result<Self> {
        Regex::new(pattern)
            .map(SpeakerPattern::Regex)
            .map_err(|e| Error::InvalidParams(format!("speaker pattern: {e}")))
    }

    pub fn speaker_of(&self, utterance_id: &str) -> Option<String> {
        match self {
            SpeakerPattern::UnderscorePrefix => {
                let spk = utterance_id.split('_').next().unwrap_or_default();
                (!spk.is_empty()).then(|| spk.to_string())
            }
            SpeakerPattern::Regex(re) => {
                let caps = re.captures(utterance_id)?;
                caps.get(1)
                    .or_else(|| caps.get(0))
                    .map(|m| m.as_str().to_string())
            }
        }
    }
}

pub fn parse_ctm(path: impl AsRef<Path>) -> Result<Vec<AlignmentSegment>> {
    parse_ctm_with(path, &SpeakerPattern::default())
}

pub fn parse_ctm_with(
    path: impl AsRef<Path>,
    pattern: &SpeakerPattern,
) -> Result<Vec<AlignmentSegment>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ctm_str(&text, path, pattern)
}

/// Parses CTM text: `utterance_id channel start_sec dur_sec phone [confidence]`.
///
/// Blank lines and `;;` comment lines are skipped. `origin` only labels errors.
pub fn parse_ctm_str(
    text: &str,
    origin: impl Into<PathBuf>,
    pattern: &SpeakerPattern,
) -> Result<Vec<AlignmentSegment>> {
    let origin = origin.into();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(";;") {
            continue;
        }
        let malformed = |detail: String| Error::MalformedCtm {
            path: origin.clone(),
            line: line_no,
            detail,
        };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if !(5..=6).contains(&fields.len()) {
            return Err(malformed(format!(
                "expected 5 fields (utterance channel start duration phone), found {}",
                fields.len()
            )));
        }
        let number = |s: &str, what: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed(format!("{what} `{s}` is not a number")))
        };
        let start = number(fields[2], "start")?;
        let duration = number(fields[3], "duration")?;
        if start < 0.0 {
            return Err(malformed(format!("negative start {start}")));
        }
        if duration <= 0.0 {
            return Err(Error::InvalidDuration {
                path: origin.clone(),
                line: line_no,
                duration,
            });
        }
        let utterance_id = fields[0].to_string();
        let speaker_id = pattern
            .speaker_of(&utterance_id)
            .ok_or_else(|| malformed(format!("no speaker id in `{utterance_id}`")))?;
        out.push(AlignmentSegment {
            utterance_id,
            speaker_id,
            phone: fields[4].to_string(),
            start,
            duration,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerDurationStats {
    pub speaker_id: String,
    /// Seconds.
    pub mean_phone_duration: f64,
    pub phone_count: usize,
}

pub fn default_silence_labels() -> BTreeSet<String> {
    ["sil", "sp", "spn", "nsn"].iter().map(|s| s.to_string()).collect()
}

/// Mean non-silence phone duration per speaker, sorted by speaker id.
///
/// Every phone token counts once. Speakers with nothing but silence are
/// left out.
pub fn speaker_stats(
    segments: &[AlignmentSegment],
    silence_labels: &BTreeSet<String>,
) -> Vec<SpeakerDurationStats> {
    let mut per_speaker: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for seg in segments {
        if !silence_labels.contains(&seg.phone) {
            per_speaker.entry(&seg.speaker_id).or_default().push(seg.duration);
        }
    }
    per_speaker
        .into_iter()
        .map(|(speaker, mut durations)| {
            // sorted so the sum does not depend on input order
            durations.sort_by(f64::total_cmp);
            SpeakerDurationStats {
                speaker_id: speaker.to_string(),
                mean_phone_duration: durations.iter().sum::<f64>() / durations.len() as f64,
                phone_count: durations.len(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorTable {
    /// Mean of the control speakers' mean phone durations, seconds.
    pub reference_duration: f64,
    pub entries: BTreeMap<String, f64>,
}

pub fn build_factor_table(
    control_stats: &[SpeakerDurationStats],
    dysarthric_stats: &[SpeakerDurationStats],
) -> Result<FactorTable> {
    if control_stats.is_empty() {
        return Err(Error::NoControlSpeakers);
    }
    if dysarthric_stats.is_empty() {
        return Err(Error::NoDysarthricSpeakers);
    }
    let mut means: Vec<f64> = control_stats.iter().map(|s| s.mean_phone_duration).collect();
    means.sort_by(f64::total_cmp);
    let reference_duration = means.iter().sum::<f64>() / means.len() as f64;
    let entries = dysarthric_stats
        .iter()
        .map(|s| (s.speaker_id.clone(), reference_duration / s.mean_phone_duration))
        .collect();
    Ok(FactorTable {
        reference_duration,
        entries,
    })
}

impl FactorTable {
    pub fn get(&self, speaker_id: &str) -> Option<f64> {
        self.entries.get(speaker_id).copied()
    }

    /// `speaker_id<TAB>factor` lines, six decimals, sorted by speaker.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (speaker, factor) in &self.entries {
            writeln!(out, "{speaker}\t{factor:.6}").unwrap();
        }
        out
    }

    /// Parses the two-column form. The reference duration is not stored
    /// there and comes back as NaN.
    pub fn from_tsv(text: &str, origin: impl Into<PathBuf>) -> Result<Self> {
        let origin = origin.into();
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |detail: &str| Error::MalformedRecord {
                path: origin.clone(),
                line: i + 1,
                detail: detail.to_string(),
            };
            let (speaker, factor) = line
                .split_once('\t')
                .ok_or_else(|| malformed("expected speaker<TAB>factor"))?;
            let factor: f64 = factor
                .trim()
                .parse()
                .map_err(|_| malformed("factor is not a number"))?;
            if !(factor > 0.0) {
                return Err(malformed("factor must be positive"));
            }
            entries.insert(speaker.trim().to_string(), factor);
        }
        Ok(Self {
            reference_duration: f64::NAN,
            entries,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text, path)
    }
}

/// Splits stats into (control, dysarthric) with a caller-supplied predicate.
pub fn partition_stats(
    stats: Vec<SpeakerDurationStats>,
    is_control: impl Fn(&str) -> bool,
) -> (Vec<SpeakerDurationStats>, Vec<SpeakerDurationStats>) {
    stats.into_iter().partition(|s| is_control(&s.speaker_id))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(speaker: &str, phone: &str, duration: f64) -> AlignmentSegment {
        AlignmentSegment {
            utterance_id: format!("{speaker}_B1_X"),
            speaker_id: speaker.into(),
            phone: phone.into(),
            start: 0.0,
            duration,
        }
    }

    fn stats(speaker: &str, mean: f64) -> SpeakerDurationStats {
        SpeakerDurationStats {
            speaker_id: speaker.into(),
            mean_phone_duration: mean,
            phone_count: 1,
        }
    }

    #[test]
    fn parses_uaspeech_line() {
        let segs =
            parse_ctm_str("F02_B1_CW1_M2 1 0.10 0.25 ah\n", "t.ctm", &SpeakerPattern::default())
                .unwrap();
        assert_eq!(
            segs,
            vec![AlignmentSegment {
                utterance_id: "F02_B1_CW1_M2".into(),
                speaker_id: "F02".into(),
                phone: "ah".into(),
                start: 0.10,
                duration: 0.25,
            }]
        );
    }

    #[test]
    fn empty_input_is_empty_list() {
        assert!(parse_ctm_str("", "t.ctm", &SpeakerPattern::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn four_fields_names_the_line() {
        let err = parse_ctm_str(
            "F02_a 1 0.0 0.1 ah\nF02_a 1 0.1 0.2\n",
            "t.ctm",
            &SpeakerPattern::default(),
        )
        .unwrap_err();
        match err {
            Error::MalformedCtm { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_string("F02_a 1 0.0 0.1 ah\nF02_a 1 0.1 0.2\n").contains(":2:"));
    }

    fn err_string(text: &str) -> String {
        parse_ctm_str(text, "t.ctm", &SpeakerPattern::default())
            .unwrap_err()
            .to_string()
    }

    #[test]
    fn negative_duration_rejected() {
        let err =
            parse_ctm_str("F02_a 1 0.0 -0.1 ah\n", "t.ctm", &SpeakerPattern::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidDuration { line: 1, .. }));
    }

    #[test]
    fn regex_speaker_pattern() {
        let p = SpeakerPattern::regex(r"^spk-(\w+?)-").unwrap();
        let segs = parse_ctm_str("spk-CM04-utt7 A 0 0.2 iy", "t.ctm", &p).unwrap();
        assert_eq!(segs[0].speaker_id, "CM04");
    }

    #[test]
    fn mean_and_silence_exclusion() {
        let s = speaker_stats(
            &[seg("A", "ah", 0.1), seg("A", "iy", 0.2), seg("A", "k", 0.3)],
            &default_silence_labels(),
        );
        assert!((s[0].mean_phone_duration - 0.2).abs() < 1e-15);
        assert_eq!(s[0].phone_count, 3);

        let s = speaker_stats(
            &[seg("A", "ah", 0.1), seg("A", "sil", 0.5), seg("B", "sil", 1.0)],
            &default_silence_labels(),
        );
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mean_phone_duration, 0.1);
    }

    #[test]
    fn eq5_examples() {
        let t = build_factor_table(&[stats("C", 0.10)], &[stats("D", 0.20), stats("E", 0.10)])
            .unwrap();
        assert_eq!(t.get("D"), Some(0.5));
        assert_eq!(t.get("E"), Some(1.0));

        let t = build_factor_table(&[stats("C1", 0.08), stats("C2", 0.12)], &[stats("D", 0.25)])
            .unwrap();
        assert!((t.reference_duration - 0.10).abs() < 1e-15);
        assert!((t.get("D").unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn empty_control_set_rejected() {
        assert!(matches!(
            build_factor_table(&[], &[stats("D", 0.2)]),
            Err(Error::NoControlSpeakers)
        ));
    }

    #[test]
    fn tsv_round_trip_six_decimals() {
        let t = build_factor_table(&[stats("C", 0.1)], &[stats("F02", 0.3), stats("M05", 0.07)])
            .unwrap();
        let text = t.to_tsv();
        assert_eq!(text, "F02\t0.333333\nM05\t1.428571\n");
        let back = FactorTable::from_tsv(&text, "f.tsv").unwrap();
        assert_eq!(back.get("F02"), Some(0.333333));
        assert!(FactorTable::from_tsv("F02 0.3\n", "f.tsv").is_err());
    }
}
