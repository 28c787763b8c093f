//! The `qshop` binary: commands, report contents, files and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use qshop::protocols::Transcript;

fn qshop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qshop"))
        .args(args)
        .env_remove("QSHOP_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 report")
}

fn report(args: &[&str]) -> toml::Table {
    let o = qshop(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o).parse().expect("report is TOML")
}

fn get<'a>(t: &'a toml::Table, path: &str) -> &'a toml::Value {
    let mut parts = path.split('.');
    let mut v = &t[parts.next().unwrap()];
    for p in parts {
        v = &v[p];
    }
    v
}

fn first_trial(t: &toml::Table) -> &toml::Table {
    t["trials"].as_array().unwrap()[0].as_table().unwrap()
}

#[test]
fn honest_hyj_session_decodes_the_order() {
    let r = report(&[
        "simulate",
        "--protocol",
        "hyj",
        "--n",
        "6",
        "--message",
        "100101",
        "--seed",
        "7",
    ]);
    let t = first_trial(&r);
    assert_eq!(t["decoded"].as_str(), Some("100101"));
    assert_eq!(t["aborted"].as_bool(), Some(false));
    assert_eq!(get(&r, "efficiency.eta").as_str(), Some("1/5"));
    assert_eq!(get(&r, "efficiency.eta_q").as_str(), Some("1/3"));
}

#[test]
fn key_change_example_changes_the_order() {
    let r = report(&[
        "simulate",
        "--protocol",
        "hyj",
        "--n",
        "6",
        "--message",
        "100101",
        "--attack",
        "alice-key-change:K=010010,Kp=001011",
    ]);
    let t = first_trial(&r);
    assert_eq!(t["wire"].as_str(), Some("110111"));
    assert_eq!(t["decoded"].as_str(), Some("111100"));
    assert_eq!(t["aborted"].as_bool(), Some(false));
    assert_eq!(
        get(&r, "aggregate.attack.detection_frequency").as_str(),
        Some("0/1")
    );
}

#[test]
fn p3_monte_carlo_completes_every_session() {
    let r = report(&[
        "simulate",
        "--protocol",
        "p3",
        "--n",
        "4",
        "--message",
        "random",
        "--trials",
        "1000",
        "--seed",
        "1",
    ]);
    assert_eq!(
        get(&r, "aggregate.decoded_equals_message").as_str(),
        Some("1000/1000")
    );
    assert_eq!(get(&r, "aggregate.aborted").as_str(), Some("0/1000"));
}

#[test]
fn n_is_inferred_from_a_fixed_message() {
    let r = report(&["simulate", "--protocol", "p2", "--message", "011011"]);
    assert_eq!(get(&r, "config.n").as_integer(), Some(3));
}

#[test]
fn usage_errors_exit_with_1() {
    for args in [
        &["simulate", "--protocol", "p9"][..],
        &[
            "simulate",
            "--protocol",
            "p1",
            "--attack",
            "alice-key-change",
        ],
        &["simulate", "--protocol", "p2", "--message", "011"],
        &[
            "simulate",
            "--protocol",
            "clz",
            "--n",
            "3",
            "--message",
            "0110",
        ],
        &["simulate", "--protocol", "clz", "--trials", "0"],
        &["simulate", "--protocol", "clz", "--decoy-mode", "gv"],
        &["simulate", "--protocol", "clz", "--attack", "teleport"],
        &["simulate"],
        &["frobnicate"],
        &["attack-matrix", "--protocols", "clz,p7"],
        &["threshold", "--points", "1"],
    ] {
        let o = qshop(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?} printed no diagnostic");
        assert!(o.stdout.is_empty(), "{args:?} printed a report");
    }
}

#[test]
fn help_and_version_exit_with_0() {
    for args in [&["--help"][..], &["simulate", "--help"], &["--version"]] {
        assert_eq!(qshop(args).status.code(), Some(0), "{args:?}");
    }
}

#[test]
fn aborted_sessions_are_data_not_failures() {
    let o = qshop(&[
        "simulate",
        "--protocol",
        "clz",
        "--n",
        "16",
        "--attack",
        "intercept-resend:f=1",
        "--trials",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r: toml::Table = stdout(&o).parse().unwrap();
    let aborted = get(&r, "aggregate.aborted").as_str().unwrap().to_string();
    assert_ne!(
        aborted, "0/20",
        "full intercept-resend should abort some sessions"
    );
}

#[test]
fn out_summary_and_transcripts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.toml");
    let tsv = dir.path().join("summary.tsv");
    let tr = dir.path().join("transcripts");
    let o = qshop(&[
        "simulate",
        "--protocol",
        "p4",
        "--n",
        "2",
        "--trials",
        "3",
        "--out",
        out.to_str().unwrap(),
        "--summary",
        tsv.to_str().unwrap(),
        "--transcripts",
        tr.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let r: toml::Table = std::fs::read_to_string(&out).unwrap().parse().unwrap();
    let trials = r["trials"].as_array().unwrap();
    assert_eq!(trials.len(), 3);
    let summary = std::fs::read_to_string(&tsv).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.starts_with("trial\tmessage\tdecoded"));
    for t in trials {
        let path = t["transcript"].as_str().unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let parsed = Transcript::parse(&text).unwrap();
        parsed.validate().unwrap();
        assert_eq!(parsed.len() as i64, t["events"].as_integer().unwrap());
        assert_eq!(parsed.to_text(), text);
    }
}

#[test]
fn config_echo_reruns_to_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.toml");
    let o = qshop(&[
        "simulate",
        "--protocol",
        "p2",
        "--n",
        "3",
        "--attack",
        "entangle-measure:beta2=0.25,leg=C-B",
        "--trials",
        "5",
        "--seed",
        "18446744073709551615",
        "--gv-placement",
        "split-pair",
        "--redundant",
        "1",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let again = qshop(&["simulate", "--config", first.to_str().unwrap()]);
    assert!(again.status.success());
    assert_eq!(std::fs::read(&first).unwrap(), again.stdout);
}

#[test]
fn config_conflicts_with_explicit_settings() {
    let o = qshop(&["simulate", "--config", "x.toml", "--protocol", "clz"]);
    assert_eq!(o.status.code(), Some(1));
    let missing = qshop(&["simulate", "--config", "/nonexistent/report.toml"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn seed_comes_from_the_environment_unless_given() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_qshop"));
        c.args(["simulate", "--protocol", "clz", "--n", "2"])
            .args(extra);
        match env {
            Some(v) => c.env("QSHOP_SEED", v),
            None => c.env_remove("QSHOP_SEED"),
        };
        let r: toml::Table = stdout(&c.output().unwrap()).parse().unwrap();
        get(&r, "config.seed").as_str().unwrap().to_string()
    };
    assert_eq!(run(None, &[]), "0");
    assert_eq!(run(Some("42"), &[]), "42");
    assert_eq!(run(Some("42"), &["--seed", "9"]), "9");
}

fn cell<'a>(r: &'a toml::Table, protocol: &str, attack: &str) -> &'a toml::Table {
    r["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_table().unwrap())
        .find(|c| c["protocol"].as_str() == Some(protocol) && c["attack"].as_str() == Some(attack))
        .unwrap_or_else(|| panic!("no cell ({protocol}, {attack})"))
}

#[test]
fn attack_matrix_reproduces_the_claimed_cells() {
    let r = report(&[
        "attack-matrix",
        "--protocols",
        "clz,hyj,p1",
        "--attack",
        "charlie-fake-sequence",
        "--attack",
        "alice-key-change",
        "--attack",
        "alice-wrong-permutation",
        "--n",
        "16",
        "--trials",
        "200",
        "--seed",
        "5",
    ]);
    let clz = cell(&r, "clz", "charlie-fake-sequence");
    assert_eq!(clz["observed"].as_str(), Some("info=FULL, detected=late"));
    assert_eq!(clz["verdict"].as_str(), Some("pass"));
    let hyj = cell(&r, "hyj", "alice-key-change");
    assert_eq!(
        hyj["observed"].as_str(),
        Some("order changed, detected=never")
    );
    assert_eq!(hyj["verdict"].as_str(), Some("pass"));
    let p1 = cell(&r, "p1", "alice-wrong-permutation");
    assert_eq!(p1["claim"].as_str(), Some("detected ≥ 95%"));
    assert_eq!(p1["verdict"].as_str(), Some("pass"));
    let na = cell(&r, "clz", "alice-key-change");
    assert_eq!(na["verdict"].as_str(), Some("n/a"));
    assert_eq!(na["applicable"].as_bool(), Some(false));
    for p in ["hyj", "p1"] {
        let c = cell(&r, p, "charlie-fake-sequence");
        assert_eq!(c["info"].as_str(), Some("NONE"), "{p}");
    }
}

#[test]
fn table1_flags_the_external_rows() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("t1.tsv");
    let r = report(&["table1", "--summary", tsv.to_str().unwrap()]);
    assert_eq!(get(&r, "table.all_match").as_bool(), Some(true));
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    let p4 = rows
        .iter()
        .find(|r| r["name"].as_str() == Some("P4"))
        .unwrap();
    assert_eq!(p4["eta"].as_str(), Some("2/9"));
    assert_eq!(p4["eta_q"].as_str(), Some("1/3"));
    assert_eq!(p4["status"].as_str(), Some("match"));
    let external: Vec<_> = rows
        .iter()
        .filter(|r| r["status"].as_str() == Some("external, not reproduced"))
        .collect();
    assert_eq!(external.len(), 2);
    assert!(external.iter().all(|r| r.get("eta").is_none()));
    let text = std::fs::read_to_string(Path::new(&tsv)).unwrap();
    assert!(text.contains("P2\t2/7\t2/5\t2/7\t2/5\tmatch"), "{text}");
}

#[test]
fn threshold_reports_root_and_sweep() {
    let r = report(&["threshold", "--decoys", "10000", "--seed", "3"]);
    let f = get(&r, "threshold.f_star").as_float().unwrap();
    let e = get(&r, "threshold.e_star").as_float().unwrap();
    assert!((f - 0.68).abs() < 0.005, "{f}");
    assert!((e - 0.17).abs() < 0.002, "{e}");
    let sweep = r["sweep"].as_array().unwrap();
    assert_eq!(sweep.len(), 11);
    assert_eq!(sweep[0]["empirical_error"].as_float(), Some(0.0));
    let last = sweep.last().unwrap();
    assert_eq!(last["f"].as_float(), Some(1.0));
    assert!((last["empirical_error"].as_float().unwrap() - 0.25).abs() < 0.02);
}
