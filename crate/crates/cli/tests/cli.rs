//! Integration tests that drive the `gradconf` binary through its public
//! surface: files in, files out, exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gradconf_cli::{dataset, report, xyz};
use gradconf_core::molgraph::compute_distances;
use gradconf_core::scorenet::checkpoint;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gradconf"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_config(dir: &Path, name: &str, dataset: &str, seed: u64) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(
        &path,
        format!(
            r#"
[model]
num_layers = 1
hidden_dim = 6
max_atomic_number = 10

[schedule]
sigma_max = 1.0
sigma_min = 0.1
num_levels = 4

[training]
epochs = 6
batch_size = 8
initial_lr = 0.002
lr_decay_rate = 0.95
seed = {seed}

[langevin]
epsilon = 1e-4
steps_per_level = 8

[paths]
dataset = "{dataset}"
checkpoint = "model.ckpt"
loss_log = "loss.log"
"#
        ),
    )
    .unwrap();
    path
}

fn make_toy(dir: &Path, out: &str, count: usize, jitter: f64, seed: u64) {
    let out_run = run(
        &[
            "make-toy-data",
            "--family",
            "rigid-triangle",
            "--bond-length",
            "1.0",
            "--jitter",
            &jitter.to_string(),
            "--count",
            &count.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
            out,
        ],
        dir,
    );
    assert_success(&out_run);
}

#[test]
fn train_reports_missing_dataset_with_exit_code_2() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "cfg.toml", "absent.jsonl", 0);
    let out = run(&["train", "--config", "cfg.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("absent.jsonl"), "stderr: {stderr}");
}

#[test]
fn train_writes_checkpoint_that_reloads_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    make_toy(dir.path(), "toy.jsonl", 16, 0.05, 3);
    write_config(dir.path(), "cfg.toml", "toy.jsonl", 5);
    assert_success(&run(&["train", "--config", "cfg.toml"], dir.path()));

    let a = checkpoint::read(&dir.path().join("model.ckpt")).unwrap();
    let b = checkpoint::read(&dir.path().join("model.ckpt")).unwrap();
    assert_eq!(a.values(), b.values());
    assert!(a.values().iter().all(|v| v.is_finite()));
}

#[test]
fn training_twice_gives_identical_logs_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    make_toy(dir.path(), "toy.jsonl", 16, 0.05, 3);
    write_config(dir.path(), "cfg.toml", "toy.jsonl", 7);
    assert_success(&run(&["train", "--config", "cfg.toml"], dir.path()));
    let log1 = std::fs::read(dir.path().join("loss.log")).unwrap();
    let ckpt1 = std::fs::read(dir.path().join("model.ckpt")).unwrap();
    assert_success(&run(&["train", "--config", "cfg.toml"], dir.path()));
    let log2 = std::fs::read(dir.path().join("loss.log")).unwrap();
    let ckpt2 = std::fs::read(dir.path().join("model.ckpt")).unwrap();
    assert_eq!(log1, log2);
    assert_eq!(ckpt1, ckpt2);
}

#[test]
fn sample_zero_count_writes_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    make_toy(dir.path(), "toy.jsonl", 8, 0.0, 1);
    write_config(dir.path(), "cfg.toml", "toy.jsonl", 2);
    assert_success(&run(&["train", "--config", "cfg.toml"], dir.path()));
    let out = run(
        &[
            "sample",
            "--checkpoint",
            "model.ckpt",
            "--graph",
            "toy.jsonl",
            "--count",
            "0",
            "--seed",
            "4",
            "--out",
            "empty.xyz",
            "--config",
            "cfg.toml",
        ],
        dir.path(),
    );
    assert_success(&out);
    assert_eq!(std::fs::read(dir.path().join("empty.xyz")).unwrap(), b"");
}

#[test]
fn sampling_is_byte_reproducible_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    make_toy(dir.path(), "toy.jsonl", 8, 0.0, 1);
    write_config(dir.path(), "cfg.toml", "toy.jsonl", 2);
    assert_success(&run(&["train", "--config", "cfg.toml"], dir.path()));
    let sample_args = [
        "sample",
        "--checkpoint",
        "model.ckpt",
        "--graph",
        "toy.jsonl",
        "--count",
        "3",
        "--seed",
        "9",
        "--out",
        "gen.xyz",
        "--config",
        "cfg.toml",
    ];
    assert_success(&run(&sample_args, dir.path()));
    let bytes1 = std::fs::read(dir.path().join("gen.xyz")).unwrap();
    assert_success(&run(&sample_args, dir.path()));
    let bytes2 = std::fs::read(dir.path().join("gen.xyz")).unwrap();
    assert_eq!(bytes1, bytes2);

    let frames = xyz::read_frames(&dir.path().join("gen.xyz")).unwrap();
    assert_eq!(frames.len(), 3);
    for (k, frame) in frames.iter().enumerate() {
        assert_eq!(frame.molecule_index(), Some(0));
        assert!(frame.comment.contains("seed=9"));
        assert!(frame.comment.contains(&format!("frame={k}")));
        assert_eq!(frame.charges, vec![6, 6, 6]);
    }
}

#[test]
fn sample_rejects_incompatible_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    make_toy(dir.path(), "toy.jsonl", 8, 0.0, 1);
    // Train with an embedding that only covers charges 1..=4; carbon (6) in
    // the sampling graph must then be rejected.
    let cfg = dir.path().join("small.toml");
    std::fs::write(
        &cfg,
        r#"
[model]
num_layers = 1
hidden_dim = 4
max_atomic_number = 4

[schedule]
sigma_max = 1.0
sigma_min = 0.1
num_levels = 3

[training]
epochs = 1
batch_size = 4
initial_lr = 0.001
lr_decay_rate = 1.0
seed = 0

[paths]
dataset = "hydrogen.jsonl"
checkpoint = "small.ckpt"
loss_log = "small.log"
"#,
    )
    .unwrap();
    // A dataset the small model can train on: two hydrogens.
    let g = gradconf_core::molgraph::build_graph(
        &[1, 1],
        &[(0, 1, gradconf_core::molgraph::BondKind::Single)],
    )
    .unwrap();
    let conf = gradconf_core::molgraph::Conformation::new(vec![[0.0; 3], [0.9, 0.0, 0.0]]);
    let record = dataset::DatasetRecord::from_molecule(&g, &[&conf]);
    dataset::write_dataset(&dir.path().join("hydrogen.jsonl"), &[record]).unwrap();
    assert_success(&run(&["train", "--config", "small.toml"], dir.path()));

    let out = run(
        &[
            "sample",
            "--checkpoint",
            "small.ckpt",
            "--graph",
            "toy.jsonl",
            "--count",
            "1",
            "--seed",
            "0",
            "--out",
            "x.xyz",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("incompatible checkpoint"), "stderr: {stderr}");
}

#[test]
fn eval_of_identical_sets_reports_perfect_scores() {
    let dir = tempfile::tempdir().unwrap();
    make_toy(dir.path(), "toy.jsonl", 8, 0.0, 1);
    write_config(dir.path(), "cfg.toml", "toy.jsonl", 2);
    assert_success(&run(&["train", "--config", "cfg.toml"], dir.path()));
    assert_success(&run(
        &[
            "sample",
            "--checkpoint",
            "model.ckpt",
            "--graph",
            "toy.jsonl",
            "--count",
            "4",
            "--seed",
            "11",
            "--out",
            "gen.xyz",
            "--config",
            "cfg.toml",
        ],
        dir.path(),
    ));
    let out = run(
        &[
            "eval",
            "--generated",
            "gen.xyz",
            "--reference",
            "gen.xyz",
            "--graph",
            "toy.jsonl",
            "--out",
            "report.json",
        ],
        dir.path(),
    );
    assert_success(&out);
    let rep = report::read_report(&dir.path().join("report.json")).unwrap();
    assert!(rep.cov_mean.iter().all(|&c| c == 100.0));
    assert!(rep.mat_mean < 1e-9);
    assert_eq!(rep.mmd_all_mean, 0.0);
    assert!(rep.mis_mean.iter().all(|&m| m == 0.0));
}

#[test]
fn eval_with_empty_generated_set_fails_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    make_toy(dir.path(), "toy.jsonl", 4, 0.0, 1);
    std::fs::write(dir.path().join("gen.xyz"), "").unwrap();
    std::fs::write(
        dir.path().join("ref.xyz"),
        "3\nmol=0\nC 0 0 0\nC 1 0 0\nC 0.5 0.866 0\n",
    )
    .unwrap();
    let out = run(
        &[
            "eval",
            "--generated",
            "gen.xyz",
            "--reference",
            "ref.xyz",
            "--graph",
            "toy.jsonl",
            "--out",
            "report.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}

#[test]
fn eval_two_molecule_fixture_matches_metrics_module() {
    let dir = tempfile::tempdir().unwrap();
    // Two distinct molecules: a triangle and a 4-chain.
    let tri = gradconf_core::toydata::generate(&gradconf_core::toydata::ToySpec::rigid_triangle(
        1.0, 0.03, 4, 21,
    ))
    .unwrap();
    let chain = gradconf_core::toydata::generate(&gradconf_core::toydata::ToySpec::rigid_chain(
        4, 1.2, 109.5, 0.03, 4, 22,
    ))
    .unwrap();
    let records = vec![
        dataset::DatasetRecord::from_molecule(&tri[0].0, &[&tri[0].1]),
        dataset::DatasetRecord::from_molecule(&chain[0].0, &[&chain[0].1]),
    ];
    dataset::write_dataset(&dir.path().join("graphs.jsonl"), &records).unwrap();

    let frame = |mol: usize, conf: &gradconf_core::molgraph::Conformation, n: usize| xyz::Frame {
        comment: xyz::frame_comment(mol, 0, n),
        charges: vec![6; conf.num_atoms()],
        conformation: conf.clone(),
    };
    // Generated: first two of each; reference: last two of each.
    let gen_frames = vec![
        frame(0, &tri[0].1, 0),
        frame(0, &tri[1].1, 1),
        frame(1, &chain[0].1, 0),
        frame(1, &chain[1].1, 1),
    ];
    let ref_frames = vec![
        frame(0, &tri[2].1, 0),
        frame(0, &tri[3].1, 1),
        frame(1, &chain[2].1, 0),
        frame(1, &chain[3].1, 1),
    ];
    xyz::write_frames(&dir.path().join("gen.xyz"), &gen_frames).unwrap();
    xyz::write_frames(&dir.path().join("ref.xyz"), &ref_frames).unwrap();

    let out = run(
        &[
            "eval",
            "--generated",
            "gen.xyz",
            "--reference",
            "ref.xyz",
            "--graph",
            "graphs.jsonl",
            "--out",
            "report.json",
            "--thresholds",
            "0.1,0.5",
        ],
        dir.path(),
    );
    assert_success(&out);
    let rep = report::read_report(&dir.path().join("report.json")).unwrap();

    // Oracle: the metrics module applied to the reparsed files.
    let gen_parsed = xyz::read_frames(&dir.path().join("gen.xyz")).unwrap();
    let ref_parsed = xyz::read_frames(&dir.path().join("ref.xyz")).unwrap();
    let gen_sets: Vec<Vec<_>> = (0..2)
        .map(|m| {
            gen_parsed
                .iter()
                .filter(|f| f.molecule_index() == Some(m))
                .map(|f| f.conformation.clone())
                .collect()
        })
        .collect();
    let ref_sets: Vec<Vec<_>> = (0..2)
        .map(|m| {
            ref_parsed
                .iter()
                .filter(|f| f.molecule_index() == Some(m))
                .map(|f| f.conformation.clone())
                .collect()
        })
        .collect();
    let graphs = [&tri[0].0, &chain[0].0];
    let triples: Vec<_> = (0..2)
        .map(|m| (graphs[m], gen_sets[m].as_slice(), ref_sets[m].as_slice()))
        .collect();
    let want = gradconf_core::metrics::evaluate_ensembles(&triples, &[0.1, 0.5]).unwrap();
    assert_eq!(rep.cov_mean, want.cov_mean);
    assert_eq!(rep.mis_mean, want.mis_mean);
    assert_eq!(rep.mat_mean, want.mat_mean);
    assert_eq!(rep.mmd_single_mean, want.mmd_single_mean);
    assert_eq!(rep.mmd_pair_mean, want.mmd_pair_mean);
    assert_eq!(rep.mmd_all_mean, want.mmd_all_mean);
}

#[test]
fn toy_dataset_has_expected_shape_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    make_toy(dir.path(), "toy.jsonl", 5, 0.02, 9);
    let text = std::fs::read_to_string(dir.path().join("toy.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 5);

    let molecules = dataset::read_dataset(&dir.path().join("toy.jsonl")).unwrap();
    assert_eq!(molecules.len(), 5);
    for (g, confs) in &molecules {
        assert_eq!(g.num_atoms(), 3);
        assert_eq!(g.num_edges(), 3);
        assert!(g.is_extended());
        assert_eq!(confs.len(), 1);
    }

    // Round trip: rewrite and reparse; graphs and coordinates identical.
    let records: Vec<_> = molecules
        .iter()
        .map(|(g, confs)| dataset::DatasetRecord::from_molecule(g, &[&confs[0]]))
        .collect();
    dataset::write_dataset(&dir.path().join("copy.jsonl"), &records).unwrap();
    let reread = dataset::read_dataset(&dir.path().join("copy.jsonl")).unwrap();
    for ((g1, c1), (g2, c2)) in molecules.iter().zip(&reread) {
        assert_eq!(g1, g2);
        for (a, b) in c1[0].coords.iter().zip(&c2[0].coords) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-9);
            }
        }
        let d1 = compute_distances(g1, &c1[0]).unwrap();
        let d2 = compute_distances(g2, &c2[0]).unwrap();
        assert_eq!(d1.values, d2.values);
    }
}

#[test]
fn malformed_dataset_line_is_reported_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    make_toy(dir.path(), "toy.jsonl", 2, 0.0, 1);
    let mut text = std::fs::read_to_string(dir.path().join("toy.jsonl")).unwrap();
    text.push_str("{not json\n");
    std::fs::write(dir.path().join("bad.jsonl"), text).unwrap();
    let err = dataset::read_dataset(&dir.path().join("bad.jsonl")).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("bad.jsonl:3"), "message: {msg}");
}
