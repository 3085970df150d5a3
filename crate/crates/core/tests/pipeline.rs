use std::collections::{HashMap, HashSet};
use std::path::Path;

use opgan::corruption::{
    build_dataset, load_clean_dir, write_toy_corpus, ArtifactBank, DatasetComposition, DatasetOptions, ToyCorpusSpec,
};
use opgan::manifest::{Condition, Manifest, Split};
use opgan::metrics::sdr;
use opgan::wav::read_wav;
use opgan::SEGMENT_LEN;

fn dataset(root: &Path, comp: &str, seed: u64) -> Manifest {
    let spec = ToyCorpusSpec {
        clean_files: 24,
        seed: 21,
        ..ToyCorpusSpec::default()
    };
    write_toy_corpus(root, &spec).unwrap();
    let (corpus, _) = load_clean_dir(&root.join("clean")).unwrap();
    let (bank, _) =
        ArtifactBank::load(Some(&root.join("rirs")), Some(&root.join("mixtures")), corpus.sample_rate, SEGMENT_LEN).unwrap();
    let comp = DatasetComposition::parse(comp).unwrap();
    build_dataset(&corpus, &bank, &comp, &DatasetOptions::new(seed, spec.sample_rate), &root.join("ds"))
        .unwrap()
        .manifest
}

#[test]
fn conditions_use_only_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let m = dataset(dir.path(), "all:4,awgn:3,mix:3,reverb:3,val.all:2,val.awgn:1,test.reverb:2", 5);
    assert_eq!(m.records.len(), 18);
    for r in &m.records {
        let (rev, mix, awgn) = (r.use_reverb, r.use_mixture, r.use_awgn);
        match r.condition {
            Condition::Awgn => assert!(awgn && !rev && !mix),
            Condition::Mixture => assert!(mix && !rev && !awgn),
            Condition::Reverb => assert!(rev && !mix && !awgn),
            Condition::All => assert!(rev && mix && awgn),
        }
        assert_eq!(r.rir_id.is_some(), rev);
        assert_eq!(r.mixture_id.is_some(), mix);
        assert_eq!(r.mixture_offset.is_some(), mix);
        if !rev {
            assert_eq!(r.alpha, 0.0);
        }
        if !mix {
            assert_eq!(r.beta, 0.0);
        }
        if !awgn {
            assert_eq!(r.gamma, 0.0);
        }
        for w in [r.alpha, r.beta, r.gamma] {
            assert!((0.0..=1.0).contains(&w));
        }
        let clean = read_wav(m.resolve(&r.clean_path)).unwrap().samples;
        let corrupted = read_wav(m.resolve(&r.corrupted_path)).unwrap().samples;
        let measured = sdr(&clean, &corrupted).unwrap();
        assert!((measured - r.achieved_sdr_db).abs() < 1e-6, "{measured} vs {}", r.achieved_sdr_db);
        assert!((-6.0..=6.0).contains(&measured));
    }
}

#[test]
fn single_artifact_groups_and_splits_do_not_share_clean_segments() {
    let dir = tempfile::tempdir().unwrap();
    let m = dataset(dir.path(), "all:3,awgn:2,mix:2,reverb:2,val.awgn:2,val.mix:2,test.all:2", 6);
    let mut owners: HashMap<Vec<u8>, HashSet<(Split, Condition)>> = HashMap::new();
    for r in &m.records {
        let bytes = read_wav(m.resolve(&r.clean_path)).unwrap().samples.iter().flat_map(|v| v.to_le_bytes()).collect();
        owners.entry(bytes).or_default().insert((r.split, r.condition));
    }
    for groups in owners.values() {
        let splits: HashSet<_> = groups.iter().map(|(s, _)| *s).collect();
        assert_eq!(splits.len(), 1, "clean segment shared across splits: {groups:?}");
        let singles = groups.iter().filter(|(_, c)| *c != Condition::All).count();
        assert!(singles <= 1, "clean segment shared by single-artifact groups: {groups:?}");
    }
}

#[test]
fn seeds_control_the_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let comp = "all:3,reverb:2,val.mix:2";
    let ma = dataset(a.path(), comp, 8);
    let mb = dataset(b.path(), comp, 8);
    let mc = dataset(c.path(), comp, 9);
    assert_eq!(ma.records, mb.records);
    for r in &ma.records {
        assert_eq!(
            std::fs::read(ma.resolve(&r.corrupted_path)).unwrap(),
            std::fs::read(mb.resolve(&r.corrupted_path)).unwrap()
        );
    }
    assert_ne!(ma.records, mc.records);
}

#[test]
fn manifest_survives_a_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = dataset(dir.path(), "all:2,awgn:1", 3);
    let back = Manifest::read(dir.path().join("ds/manifest.jsonl")).unwrap();
    assert_eq!(back.records, m.records);
    assert_eq!(back.split(Split::Train).count(), 3);
}
