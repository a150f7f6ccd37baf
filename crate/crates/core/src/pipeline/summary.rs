use std::collections::BTreeMap;

use serde::Serialize;

use super::{Group, UtteranceRecord};

/// Hours of audio, split by speaker group and by augmentation method
/// (`original` for unaugmented records).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub total_hours: f64,
    pub original_hours: f64,
    pub augmented_hours: f64,
    pub by_group: BTreeMap<Group, f64>,
    pub by_method: BTreeMap<String, f64>,
    pub utterances: usize,
}

pub fn summarize(manifest: &[UtteranceRecord]) -> Summary {
    let mut s = Summary {
        utterances: manifest.len(),
        ..Default::default()
    };
    for r in manifest {
        let hours = r.duration / 3600.0;
        s.total_hours += hours;
        match r.method {
            Some(_) => s.augmented_hours += hours,
            None => s.original_hours += hours,
        }
        *s.by_group.entry(r.group).or_default() += hours;
        let key = r.method.map_or("original", |m| m.as_str());
        *s.by_method.entry(key.to_string()).or_default() += hours;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Method;

    #[test]
    fn empty_is_zero() {
        let s = summarize(&[]);
        assert_eq!(s.total_hours, 0.0);
        assert_eq!(s.augmented_hours, 0.0);
        assert!(s.by_group.is_empty());
    }

    #[test]
    fn splits_original_and_augmented() {
        let mut aug = UtteranceRecord::new("a__speed0.90", "F02", Group::Dys, "a.wav", 4000.0);
        aug.method = Some(Method::Speed);
        let recs = vec![
            UtteranceRecord::new("a", "F02", Group::Dys, "a.wav", 3600.0),
            UtteranceRecord::new("c", "CM01", Group::Ctl, "c.wav", 1800.0),
            aug,
        ];
        let s = summarize(&recs);
        assert!((s.total_hours - (3600.0 + 1800.0 + 4000.0) / 3600.0).abs() < 1e-12);
        assert_eq!(s.original_hours, 1.5);
        assert!((s.augmented_hours - 4000.0 / 3600.0).abs() < 1e-12);
        assert_eq!(s.by_group[&Group::Ctl], 0.5);
        assert!((s.by_method["speed"] - 4000.0 / 3600.0).abs() < 1e-12);
        assert_eq!(s.by_method["original"], 1.5);
    }
}
