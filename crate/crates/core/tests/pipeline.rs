use std::fs;
use std::path::{Path, PathBuf};

use lexcorpus::chunk::ChunkRecord;
use lexcorpus::lang::filter_spanish;
use lexcorpus::pipeline::{run_pipeline, PipelineManifest, Stage};
use lexcorpus::{NgramIdentifier, RawDocument};

const FIXTURE: &str = include_str!("fixtures/bilingual.jsonl");

fn manifest(dir: &Path, stages: Vec<Stage>) -> PipelineManifest {
    let input = dir.join("in.jsonl");
    fs::write(&input, FIXTURE).unwrap();
    let mut m = PipelineManifest::from_toml_str(&format!(
        "input_path = {:?}\noutput_dir = {:?}\n",
        input,
        dir.join("out")
    ))
    .unwrap();
    m.stages = stages;
    m
}

fn read_lines(path: PathBuf) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn zero_stages_is_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path(), vec![]);
    let summary = run_pipeline(&m, 1).unwrap();
    assert!(summary.stages.is_empty());
    assert_eq!(summary.stats_before, summary.stats_after);
    let out = read_lines(m.output_dir.join(&summary.final_output));
    let back: Vec<RawDocument> = out.iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    let orig: Vec<RawDocument> = FIXTURE.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(back, orig);
}

#[test]
fn full_run_matches_the_individual_stages() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path(), vec![Stage::FilterLang, Stage::Clean, Stage::Chunk, Stage::Mask]);
    let summary = run_pipeline(&m, 2).unwrap();

    let docs: Vec<RawDocument> = FIXTURE.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let gate = filter_spanish(docs, NgramIdentifier::bundled(), 0.95).unwrap();
    let lang = &summary.stages[0];
    assert_eq!(lang.rejected as usize, gate.rejected.len());
    assert_eq!(lang.passed as usize, gate.kept.len());
    assert_eq!(
        read_lines(m.output_dir.join(lang.rejected_file.as_ref().unwrap())).len(),
        gate.rejected.len()
    );

    for stage in &summary.stages {
        assert!(stage.is_balanced(), "{stage:?}");
        assert_eq!(read_lines(m.output_dir.join(&stage.output_file)).len() as u64, stage.items_out);
    }
    let chunks: Vec<ChunkRecord> = read_lines(m.output_dir.join(&summary.stages[2].output_file))
        .iter()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(chunks.iter().all(|c| c.token_count <= 512));
    assert!(chunks.iter().any(|c| c.seq > 0), "fixture should need several chunks for one document");
    assert_eq!(summary.stats_after.total_tokens, Some(chunks.iter().map(|c| c.token_count as u64).sum()));
    assert!(m.output_dir.join("summary.json").exists());
}

#[test]
fn thread_count_does_not_change_outputs() {
    let stages = vec![Stage::FilterLang, Stage::Clean, Stage::Chunk, Stage::Mask];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = manifest(a.path(), stages.clone());
    let mb = manifest(b.path(), stages);
    let sa = run_pipeline(&ma, 1).unwrap();
    run_pipeline(&mb, 4).unwrap();
    for stage in &sa.stages {
        assert_eq!(
            fs::read(ma.output_dir.join(&stage.output_file)).unwrap(),
            fs::read(mb.output_dir.join(&stage.output_file)).unwrap()
        );
    }
}

#[test]
fn misordered_stages_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    for stages in [
        vec![Stage::Chunk, Stage::Clean],
        vec![Stage::Mask],
        vec![Stage::Clean, Stage::Clean],
        vec![Stage::Mask, Stage::Chunk],
    ] {
        let m = manifest(dir.path(), stages.clone());
        let err = run_pipeline(&m, 1).unwrap_err();
        assert!(err.is_usage(), "{stages:?}: {err}");
    }
}

#[test]
fn manifest_paths_resolve_against_its_directory() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("docs.jsonl"), FIXTURE).unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "input_path = \"docs.jsonl\"\noutput_dir = \"o\"\nstages = [\"clean\"]\n").unwrap();
    let m = PipelineManifest::load(&path).unwrap();
    assert_eq!(m.input_path, dir.path().join("docs.jsonl"));
    let summary = run_pipeline(&m, 1).unwrap();
    assert_eq!(summary.stages[0].items_out, 10);
}

#[test]
fn malformed_manifests_fail_to_parse() {
    assert!(PipelineManifest::from_toml_str("input_path = \"a\"\noutput_dir = \"b\"\nseeed = 3\n").is_err());
    assert!(PipelineManifest::from_toml_str("input_path = \"a\"\noutput_dir = \"b\"\n[chunk]\nmax_token = 3\n").is_err());
    assert!(PipelineManifest::from_toml_str("input_path = \"a\"\noutput_dir = \"b\"\nstages = [\"dedup\"]\n").is_err());
    assert!(PipelineManifest::from_toml_str("output_dir = \"b\"\n").is_err());
}
