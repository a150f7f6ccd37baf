use std::collections::BTreeSet;

use super::{AugmentJob, FactorSet, Group, Method, UtteranceRecord};
use crate::align::FactorTable;
use crate::error::{Error, Result};

/// 64-bit FNV-1a; fixed across platforms and releases.
pub fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// `<utt>__<method><factor:.2>`, plus `__to_<target>` for control-to-dysarthric jobs.
pub fn output_id(utterance_id: &str, method: Method, factor: f64, target: Option<&str>) -> String {
    let mut id = format!("{utterance_id}__{method}{factor:.2}");
    if let Some(t) = target {
        id.push_str("__to_");
        id.push_str(t);
    }
    id
}

/// Expands a manifest into augmentation jobs.
///
/// Every dysarthric utterance gets one job per factor of `dys_set`. With
/// `ctl_factors` and `ctl_multiplicity = k > 0`, every control utterance is
/// sent to `k` distinct target speakers: targets are the table's speakers in
/// id order, starting at `stable_hash(utterance_id) mod n_targets` and
/// walking round-robin. The plan comes back sorted by output id.
pub fn build_plan(
    manifest: &[UtteranceRecord],
    method: Method,
    dys_set: Option<&FactorSet>,
    ctl_factors: Option<&FactorTable>,
    ctl_multiplicity: usize,
) -> Result<Vec<AugmentJob>> {
    let targets: Vec<(&str, f64)> = match ctl_factors {
        Some(table) => table.entries.iter().map(|(s, f)| (s.as_str(), *f)).collect(),
        None => Vec::new(),
    };
    if let Some(table) = ctl_factors {
        if let Some(r) = manifest
            .iter()
            .find(|r| r.group == Group::Dys && table.get(&r.speaker_id).is_none())
        {
            return Err(Error::UnknownSpeaker(r.speaker_id.clone()));
        }
    }
    if ctl_multiplicity > 0 {
        if ctl_factors.is_none() {
            return Err(Error::InvalidParams(
                "control multiplicity needs a factor table".into(),
            ));
        }
        if ctl_multiplicity > targets.len() {
            return Err(Error::InvalidParams(format!(
                "control multiplicity {ctl_multiplicity} exceeds {} target speakers",
                targets.len()
            )));
        }
    }

    let mut jobs = Vec::new();
    for record in manifest {
        match record.group {
            Group::Dys => {
                for &factor in dys_set.map(FactorSet::factors).unwrap_or_default() {
                    jobs.push(AugmentJob {
                        source: record.clone(),
                        method,
                        factor,
                        target_speaker: None,
                        output_id: output_id(&record.utterance_id, method, factor, None),
                    });
                }
            }
            Group::Ctl if ctl_multiplicity > 0 => {
                let offset = (stable_hash(&record.utterance_id) % targets.len() as u64) as usize;
                for i in 0..ctl_multiplicity {
                    let (target, factor) = targets[(offset + i) % targets.len()];
                    jobs.push(AugmentJob {
                        source: record.clone(),
                        method,
                        factor,
                        target_speaker: Some(target.to_string()),
                        output_id: output_id(&record.utterance_id, method, factor, Some(target)),
                    });
                }
            }
            Group::Ctl => {}
        }
    }

    jobs.sort_by(|a, b| a.output_id.cmp(&b.output_id));
    let mut seen = BTreeSet::new();
    for job in &jobs {
        if !seen.insert(job.output_id.as_str()) {
            return Err(Error::DuplicateOutputId(job.output_id.clone()));
        }
    }
    Ok(jobs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Multiplicity;
    use std::collections::BTreeMap;

    fn rec(id: &str, group: Group) -> UtteranceRecord {
        let speaker = id.split('_').next().unwrap();
        UtteranceRecord::new(id, speaker, group, format!("{id}.wav"), 1.0)
    }

    fn table(speakers: &[(&str, f64)]) -> FactorTable {
        FactorTable {
            reference_duration: 0.1,
            entries: speakers.iter().map(|(s, f)| (s.to_string(), *f)).collect(),
        }
    }

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(stable_hash(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(stable_hash("a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(stable_hash("foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn output_id_format() {
        assert_eq!(output_id("F02_B1", Method::Speed, 0.9, None), "F02_B1__speed0.90");
        assert_eq!(
            output_id("CM01_B1", Method::Tempo, 0.4166, Some("M05")),
            "CM01_B1__tempo0.42__to_M05"
        );
    }

    #[test]
    fn global_plan_is_cartesian() {
        let manifest: Vec<_> = (0..10).map(|i| rec(&format!("F02_U{i}"), Group::Dys)).collect();
        let plan = build_plan(
            &manifest,
            Method::Speed,
            Some(&FactorSet::new(Multiplicity::X2)),
            None,
            0,
        )
        .unwrap();
        assert_eq!(plan.len(), 20);
        assert_eq!(plan.iter().filter(|j| j.factor == 0.9).count(), 10);
        assert_eq!(plan.iter().filter(|j| j.factor == 1.1).count(), 10);
        assert!(plan.windows(2).all(|w| w[0].output_id < w[1].output_id));
    }

    #[test]
    fn empty_manifest_empty_plan() {
        let plan = build_plan(&[], Method::Vtlp, Some(&FactorSet::new(Multiplicity::X6)), None, 0)
            .unwrap();
        assert!(plan.is_empty());
    }

    #[test]
    fn control_jobs_get_distinct_targets() {
        let mut manifest: Vec<_> = (0..4).map(|i| rec(&format!("CM0{i}_U"), Group::Ctl)).collect();
        manifest.extend((0..4).map(|i| rec(&format!("{}_U{i}", ["F02", "M05"][i % 2]), Group::Dys)));
        let t = table(&[("F02", 0.5), ("M05", 0.8)]);
        let plan = build_plan(&manifest, Method::Speed, None, Some(&t), 2).unwrap();
        assert_eq!(plan.len(), 8);
        let mut per_utt: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for j in &plan {
            assert_eq!(j.source.group, Group::Ctl);
            let target = j.target_speaker.as_deref().unwrap();
            assert_eq!(j.factor, t.get(target).unwrap());
            per_utt.entry(&j.source.utterance_id).or_default().push(target);
        }
        assert_eq!(per_utt.len(), 4);
        for targets in per_utt.values() {
            assert_eq!(targets.len(), 2);
            assert_ne!(targets[0], targets[1]);
        }
    }

    #[test]
    fn round_robin_starts_at_hash_offset() {
        let speakers: Vec<(String, f64)> =
            (0..16).map(|i| (format!("D{i:02}"), 0.5 + i as f64 / 40.0)).collect();
        let t = FactorTable {
            reference_duration: 0.1,
            entries: speakers.iter().cloned().collect(),
        };
        let manifest = vec![rec("CF03_B1_W7", Group::Ctl)];
        let plan = build_plan(&manifest, Method::Tempo, None, Some(&t), 3).unwrap();
        let offset = (stable_hash("CF03_B1_W7") % 16) as usize;
        let mut got: Vec<_> = plan.iter().map(|j| j.target_speaker.clone().unwrap()).collect();
        got.sort();
        let mut want: Vec<_> = (0..3).map(|i| speakers[(offset + i) % 16].0.clone()).collect();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn errors() {
        let t = table(&[("F02", 0.5)]);
        let manifest = vec![rec("M09_U1", Group::Dys)];
        assert!(matches!(
            build_plan(&manifest, Method::Speed, None, Some(&t), 0),
            Err(Error::UnknownSpeaker(s)) if s == "M09"
        ));

        let dup = vec![rec("F02_U1", Group::Dys), rec("F02_U1", Group::Dys)];
        assert!(matches!(
            build_plan(&dup, Method::Speed, Some(&FactorSet::new(Multiplicity::X2)), None, 0),
            Err(Error::DuplicateOutputId(_))
        ));

        let ctl = vec![rec("CM01_U1", Group::Ctl)];
        assert!(build_plan(&ctl, Method::Speed, None, Some(&t), 2).is_err());
        assert!(build_plan(&ctl, Method::Speed, None, None, 1).is_err());
    }
}
