use std::path::Path;

use speechaug::align::{
    build_factor_table, default_silence_labels, parse_ctm, parse_ctm_str, partition_stats,
    speaker_stats, AlignmentSegment, FactorTable, SpeakerPattern,
};
use speechaug::pipeline::{build_plan, FactorSet, Group, Method, Multiplicity, UtteranceRecord};

fn fixture() -> Vec<AlignmentSegment> {
    parse_ctm(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/three_speakers.ctm")).unwrap()
}

fn table_for(segs: &[AlignmentSegment]) -> FactorTable {
    let stats = speaker_stats(segs, &default_silence_labels());
    let (ctl, dys) = partition_stats(stats, |s| s.starts_with('C'));
    build_factor_table(&ctl, &dys).unwrap()
}

#[test]
fn fixture_matches_hand_computation() {
    let segs = fixture();
    assert_eq!(segs.len(), 14);
    let stats = speaker_stats(&segs, &default_silence_labels());
    let by_id = |id: &str| stats.iter().find(|s| s.speaker_id == id).unwrap().clone();
    assert!((by_id("CM01").mean_phone_duration - 0.30 / 3.0).abs() < 1e-12);
    assert_eq!(by_id("CF02").phone_count, 4);
    assert!((by_id("CF02").mean_phone_duration - 0.60 / 4.0).abs() < 1e-12);
    assert!((by_id("M05").mean_phone_duration - 1.20 / 4.0).abs() < 1e-12);

    let table = table_for(&segs);
    assert!((table.reference_duration - 0.125).abs() < 1e-12);
    assert_eq!(table.entries.len(), 1);
    assert!((table.get("M05").unwrap() - 0.125 / 0.3).abs() < 1e-12);
    assert_eq!(table.to_tsv(), "M05\t0.416667\n");
}

#[test]
fn factors_are_scale_free() {
    let segs = fixture();
    let base = table_for(&segs).get("M05").unwrap();
    for c in [0.5, 2.0, 10.0] {
        let scaled: Vec<_> = segs
            .iter()
            .map(|s| AlignmentSegment {
                start: s.start * c,
                duration: s.duration * c,
                ..s.clone()
            })
            .collect();
        assert!((table_for(&scaled).get("M05").unwrap() - base).abs() < 1e-12);
    }
}

#[test]
fn table_file_feeds_the_planner() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("factors.tsv");
    table_for(&fixture()).write(&path).unwrap();
    let table = FactorTable::read(&path).unwrap();
    assert_eq!(table.get("M05"), Some(0.416667));

    let manifest = vec![
        UtteranceRecord::new("CM01_B1_UW1", "CM01", Group::Ctl, "a.wav", 1.0),
        UtteranceRecord::new("M05_B1_UW1", "M05", Group::Dys, "b.wav", 2.0),
    ];
    let set = FactorSet::new(Multiplicity::X2);
    let plan = build_plan(&manifest, Method::Tempo, Some(&set), Some(&table), 1).unwrap();
    let ids: Vec<&str> = plan.iter().map(|j| j.output_id.as_str()).collect();
    assert_eq!(
        ids,
        [
            "CM01_B1_UW1__tempo0.42__to_M05",
            "M05_B1_UW1__tempo0.90",
            "M05_B1_UW1__tempo1.10"
        ]
    );
    assert_eq!(plan[0].factor, 0.416667);
}

#[test]
fn custom_speaker_pattern() {
    let text = "spk1-utt1 A 0.0 0.2 a\nspk1-utt1 A 0.2 0.4 b\nctl9-utt3 A 0.0 0.1 a\n";
    let pattern = SpeakerPattern::regex(r"^([a-z]+\d+)-").unwrap();
    let segs = parse_ctm_str(text, "x.ctm", &pattern).unwrap();
    let stats = speaker_stats(&segs, &default_silence_labels());
    let (ctl, dys) = partition_stats(stats, |s| s.starts_with("ctl"));
    let table = build_factor_table(&ctl, &dys).unwrap();
    assert!((table.get("spk1").unwrap() - 0.1 / 0.3).abs() < 1e-12);
}
