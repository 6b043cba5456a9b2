mod common;

use std::path::Path;
use std::process::Command;

use common::{bundle_bytes, write_mini_corpus, MiniCorpus};
use stance_cli::pipeline::{cmd_evaluate, cmd_fit, cmd_predict, cmd_train, load_pairs};
use stance_cli::{Bundle, Code, PipelineConfig};

fn small_config(corpus: &MiniCorpus, bundle: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.apply_text(
        "k-max = 16\nlayers = 32:relu,4:softmax\ntransfer-head = 16:relu,4:softmax\n\
         batch-size = 32\nepochs = 30\nfine-tune-epochs = 5\nseed = 7\n",
    )
    .unwrap();
    cfg.bodies = Some(corpus.bodies.clone());
    cfg.stances = Some(corpus.stances.clone());
    cfg.bundle = Some(bundle.to_path_buf());
    cfg
}

fn trained(dir: &Path) -> (MiniCorpus, Bundle) {
    let corpus = write_mini_corpus(dir, 120, 5);
    let bundle = cmd_train(&small_config(&corpus, &dir.join("bundle")), &mut std::io::sink()).unwrap();
    (corpus, bundle)
}

fn stance_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stance"))
}

#[test]
fn bundle_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (_, bundle) = trained(dir.path());
    let expected = [
        "manifest.txt",
        "vocab.txt",
        "svd_term_embeddings.bin",
        "svd_singular_values.bin",
        "svd_explained_variance.bin",
        "net_layer0_weights.bin",
        "net_layer0_biases.bin",
        "net_layer1_weights.bin",
        "net_layer1_biases.bin",
        "net_layer2_weights.bin",
        "net_layer2_biases.bin",
        "history.txt",
        "report.txt",
    ];
    for name in expected {
        assert!(dir.path().join("bundle").join(name).exists(), "{name}");
    }
    let loaded = Bundle::load(&dir.path().join("bundle")).unwrap();
    assert_eq!(loaded, bundle);
    loaded.save(&dir.path().join("copy")).unwrap();
    assert_eq!(bundle_bytes(&dir.path().join("bundle")), bundle_bytes(&dir.path().join("copy")));
}

#[test]
fn evaluation_reproduces_archived_report() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, bundle) = trained(dir.path());
    let eval = cmd_evaluate(&dir.path().join("bundle"), &corpus.bodies, &corpus.stances).unwrap();
    assert_eq!(eval.report.to_text(), bundle.report.unwrap().to_text());
    assert_eq!(eval.predictions.len(), 120);
}

#[test]
fn single_pair_prediction_matches_batch() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = trained(dir.path());
    let bundle_dir = dir.path().join("bundle");
    let eval = cmd_evaluate(&bundle_dir, &corpus.bodies, &corpus.stances).unwrap();
    let pairs = load_pairs(&corpus.bodies, &corpus.stances, true).unwrap();
    for (pair, &batch) in pairs.iter().zip(&eval.predictions).step_by(7) {
        let single = cmd_predict(&bundle_dir, &pair.headline, &pair.body_text).unwrap();
        assert_eq!(single.stance, batch);
        assert!((single.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn degenerate_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let (_, bundle) = trained(dir.path());
    let text = "volcano eruption lava ash island evacuation";
    let same = stance_cli::pipeline::predict_pair(&bundle, text, text).unwrap();
    assert!((same.scm - 1.0).abs() < 1e-12);
    let empty = stance_cli::pipeline::predict_pair(&bundle, "", text).unwrap();
    assert_eq!(empty.scm, 0.0);
    assert!((empty.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn damaged_bundles_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (_, bundle) = trained(dir.path());
    let fresh = |name: &str| {
        let d = dir.path().join(name);
        bundle.save(&d).unwrap();
        d
    };

    let flipped = fresh("flipped");
    let path = flipped.join("net_layer1_weights.bin");
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[40] ^= 1;
    std::fs::write(&path, bytes).unwrap();
    let err = Bundle::load(&flipped).unwrap_err();
    assert_eq!(err.code, Code::Corrupt);
    assert!(err.message.contains("hash mismatch"), "{err}");

    let truncated = fresh("truncated");
    let path = truncated.join("svd_term_embeddings.bin");
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(Bundle::load(&truncated).unwrap_err().code, Code::Corrupt);

    let missing = fresh("missing");
    std::fs::remove_file(missing.join("vocab.txt")).unwrap();
    assert_eq!(Bundle::load(&missing).unwrap_err().code, Code::Corrupt);

    let versioned = fresh("versioned");
    let manifest = versioned.join("manifest.txt");
    let text = std::fs::read_to_string(&manifest).unwrap();
    std::fs::write(&manifest, text.replace("format_version = 1", "format_version = 2")).unwrap();
    assert_eq!(Bundle::load(&versioned).unwrap_err().code, Code::Version);

    assert_eq!(Bundle::load(&dir.path().join("nothing")).unwrap_err().code, Code::Corrupt);
}

#[test]
fn fit_only_bundle_has_no_network() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_mini_corpus(dir.path(), 40, 1);
    let cfg = small_config(&corpus, &dir.path().join("fit"));
    let bundle = cmd_fit(&cfg, &mut std::io::sink()).unwrap();
    assert!(bundle.network.is_none());
    assert!(bundle.svd.k() >= 1 && bundle.svd.k() <= 16);
    let err = cmd_predict(&dir.path().join("fit"), "a", "b").unwrap_err();
    assert_eq!(err.code, Code::Model);
}

fn assert_error_line(stderr: &[u8], code: &str, stage: &str) {
    let text = String::from_utf8_lossy(stderr);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "{text}");
    let prefix = format!("error[{code}] stage={stage}: ");
    assert!(lines[0].starts_with(&prefix), "{text}");
}

#[test]
fn binary_failures_are_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_mini_corpus(dir.path(), 20, 2);

    let out = stance_bin()
        .args(["train", "--bodies"])
        .arg(&corpus.bodies)
        .arg("--stances")
        .arg(dir.path().join("absent.csv"))
        .arg("--bundle")
        .arg(dir.path().join("b"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert_error_line(&out.stderr, "E_IO", "load");

    let out = stance_bin().args(["train", "--no-such-flag"]).output().unwrap();
    assert!(!out.status.success());
    assert_error_line(&out.stderr, "E_USAGE", "config");

    let out = stance_bin()
        .args(["evaluate", "--bundle"])
        .arg(dir.path().join("nothing"))
        .arg("--bodies")
        .arg(&corpus.bodies)
        .arg("--stances")
        .arg(&corpus.stances)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert_error_line(&out.stderr, "E_CORRUPT", "bundle");

    let out = stance_bin().args(["train", "--epochs", "zero"]).output().unwrap();
    assert!(!out.status.success());
    assert_error_line(&out.stderr, "E_CONFIG", "config");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_mini_corpus(dir.path(), 40, 3);
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        "# mini run\nk-max = 8\nlayers = 8:relu,4:softmax\ntransfer = false\nepochs = 2\nbatch-size = 16\n",
    )
    .unwrap();
    let bundle = dir.path().join("b");
    let out = stance_bin()
        .arg("--config")
        .arg(&config)
        .args(["--seed", "9", "--threads", "1", "train", "--epochs", "3", "--bodies"])
        .arg(&corpus.bodies)
        .arg("--stances")
        .arg(&corpus.stances)
        .arg("--bundle")
        .arg(&bundle)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("stage1 epoch   3"));
    assert!(stdout.contains("one-vs-rest accuracy"));
    let manifest = std::fs::read_to_string(bundle.join("manifest.txt")).unwrap();
    assert!(manifest.contains("config.epochs = 3\n"));
    assert!(manifest.contains("config.seed = 9\n"));
    assert!(manifest.contains("config.k-max = 8\n"));

    let out = stance_bin().arg("report").arg("--bundle").arg(&bundle).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("stage1: 3 epochs"));

    let out = stance_bin()
        .args(["predict", "--headline", "lava ash", "--body", "lava ash", "--bundle"])
        .arg(&bundle)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("scm = 1"));
}

#[test]
fn preprocess_prints_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_mini_corpus(dir.path(), 10, 4);
    let out = stance_bin()
        .arg("preprocess")
        .arg("--bodies")
        .arg(&corpus.bodies)
        .arg("--stances")
        .arg(&corpus.stances)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().all(|l| l.split('\t').count() == 4));
    assert!(!text.contains("with"));
}
