use std::path::Path;
use std::process::{Command, Output};

fn arousal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arousal"))
        .current_dir(dir)
        .env_remove("AROUSAL_CONFIG")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn demo_runs_every_stage_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&arousal(
        tmp.path(),
        &["demo", "--dir", "d", "--issues-per-priority", "60"],
    ));
    assert!(out.contains("Cohen's d"), "{out}");
    assert!(out.contains("Kappa (linear)"), "{out}");
    let work = tmp.path().join("d/work");
    for f in [
        "vectors.txt",
        "sea_lexicon.csv",
        "scores.csv",
        "tables/cohen_d.csv",
        "manifest.json",
    ] {
        assert!(work.join(f).exists(), "{f} missing");
    }

    let again = ok(&arousal(
        tmp.path(),
        &["demo", "--dir", "d2", "--issues-per-priority", "60"],
    ));
    assert_eq!(out, again.replace("d2/", "d/"));
    for f in [
        "vectors.txt",
        "sea_lexicon.csv",
        "scores.csv",
        "tables/cohen_d.csv",
        "tables/p.csv",
    ] {
        assert_eq!(
            read(work.join(f)),
            read(tmp.path().join("d2/work").join(f)),
            "{f} differs"
        );
    }
}

#[test]
fn stages_run_individually_from_a_config() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&arousal(
        tmp.path(),
        &["demo", "--dir", "d", "--issues-per-priority", "40"],
    ));
    let cfg = "d/input/config.toml";
    let run = |args: &[&str]| {
        let mut all = vec!["--config", cfg, "--work-dir", "w"];
        all.extend_from_slice(args);
        arousal(tmp.path(), &all)
    };

    let missing = run(&["train"]);
    assert!(!missing.status.success());
    let err = String::from_utf8_lossy(&missing.stderr);
    assert!(err.contains("`ingest`"), "{err}");

    ok(&run(&["ingest"]));
    ok(&run(&["train"]));
    let neighbors = ok(&run(&["neighbors", "--word", "asap"]));
    assert_eq!(neighbors.lines().count(), 10, "{neighbors}");
    assert!(neighbors.lines().all(|l| l.split('\t').count() == 2));

    // Training is deterministic in the demo config, so a second work dir
    // gets byte-identical vectors.
    ok(&arousal(tmp.path(), &["--config", cfg, "--work-dir", "w2", "ingest"]));
    ok(&arousal(tmp.path(), &["--config", cfg, "--work-dir", "w2", "train"]));
    assert_eq!(
        read(tmp.path().join("w/vectors.txt")),
        read(tmp.path().join("w2/vectors.txt"))
    );

    let sheet = run(&["sheet", "--accept-all"]);
    assert!(!sheet.status.success(), "sheet before expand must fail");
    assert!(String::from_utf8_lossy(&sheet.stderr).contains("`expand`"));
}

#[test]
fn changed_settings_warn_about_stale_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&arousal(
        tmp.path(),
        &["demo", "--dir", "d", "--issues-per-priority", "40"],
    ));
    let cfg_path = tmp.path().join("d/input/config.toml");
    let text = std::fs::read_to_string(&cfg_path).unwrap();
    std::fs::write(&cfg_path, text.replacen("window = 10", "window = 6", 1)).unwrap();
    let out = arousal(
        tmp.path(),
        &["--config", "d/input/config.toml", "--work-dir", "d/work", "seeds"],
    );
    ok(&out);
    let out = arousal(
        tmp.path(),
        &["--config", "d/input/config.toml", "--work-dir", "d/work", "expand"],
    );
    ok(&out);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stale") && err.contains("`train`"), "{err}");
}

#[test]
fn usage_errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(!arousal(tmp.path(), &["frobnicate"]).status.success());
    assert!(!arousal(tmp.path(), &["ratings"]).status.success());
    let out = arousal(tmp.path(), &["--work-dir", "w", "ingest"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("corpus"));
}
