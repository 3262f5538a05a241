use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plis::io::read_output;
use plis_core::simgen::{generate, Generator, GeneratorConfig};

fn plis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plis")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn hmm_sample(m: usize, seed: u64) -> Vec<f64> {
    generate(&GeneratorConfig::new(m, Generator::Hmm { a00: 0.95, a11: 0.8, mu: 3.0 }), seed).unwrap().x
}

fn column(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:?}\n")).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn injected_scores_follow_the_mirror_rule() {
    let dir = tempfile::tempdir().unwrap();
    let scores = write(dir.path(), "scores.txt", "0.1,0.9\n0.2,0.8\n0.7,0.3\n0.05,0.95\n");
    let out = dir.path().join("out.csv");
    let o = plis(&["test", "--scores", s(&scores), "--alpha", "0.4", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "rejections: 3\ntau: 0.2\n");
    let rows = read_output(std::fs::File::open(&out).unwrap()).unwrap();
    let rejected: Vec<usize> = rows.iter().filter(|r| r.rejected).map(|r| r.index).collect();
    assert_eq!(rejected, [1, 2, 4]);
    let q: Vec<f64> = rows.iter().map(|r| r.q_value.unwrap()).collect();
    assert_eq!(q, [1.0 / 3.0, 1.0 / 3.0, 1.0, 1.0 / 3.0]);
    let e: Vec<f64> = rows.iter().map(|r| r.e_value.unwrap()).collect();
    assert_eq!(e, [4.0, 4.0, 0.0, 4.0]);
}

#[test]
fn empty_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "empty.txt", "# nothing here\n\n");
    let o = plis(&["test", s(&input)]);
    assert!(!o.status.success());
    assert!(!stderr(&o).is_empty());
}

#[test]
fn malformed_rows_are_reported_by_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.txt", "0.5\n1.2\nabc\n");
    let o = plis(&["test", s(&input)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.txt:3:"), "{}", stderr(&o));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.txt", &column(&hmm_sample(50, 1)));
    for args in [
        vec!["test", s(&input), "--method", "no_such_method"],
        vec!["test", s(&input), "--alpha", "1.5"],
        vec!["test", s(&input), "--model", "xyz"],
        vec!["test", s(&input), "--method", "ss_plis"],
    ] {
        let o = plis(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn output_reproduces_its_own_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.txt", &column(&hmm_sample(1500, 2)));
    let out = dir.path().join("out.csv");
    let o = plis(&["test", s(&input), "--alpha", "0.1", "--seed", "5", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_output(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 1500);
    let k = rows.iter().filter(|r| r.rejected).count();
    assert!(k > 0);
    assert!(stdout(&o).starts_with(&format!("rejections: {k}\n")));
    for r in &rows {
        assert_eq!(r.q_value.unwrap() <= 0.1, r.rejected, "row {}", r.index);
    }
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.txt", &column(&hmm_sample(400, 3)));
    let run = |model: &str| plis(&["test", s(&input), "--model", model, "--seed", "9", "--alpha", "0.2"]).stdout;
    for model in ["hm", "tg"] {
        let a = run(model);
        assert!(!a.is_empty());
        assert_eq!(a, run(model));
    }
}

#[test]
fn label_column_runs_semi_supervised() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GeneratorConfig::new(500, Generator::Hmm { a00: 0.95, a11: 0.8, mu: 3.0 }).with_nulls(1000);
    let data = generate(&cfg, 4).unwrap();
    let mut text = String::from("# value,label\n");
    for v in &data.x {
        text.push_str(&format!("{v:?},test\n"));
    }
    for v in data.nulls.as_ref().unwrap() {
        text.push_str(&format!("{v:?},null\n"));
    }
    let input = write(dir.path(), "labelled.csv", &text);
    let out = dir.path().join("out.csv");
    let o = plis(&["test", s(&input), "--alpha", "0.1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_output(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 500);
    assert!(rows.iter().any(|r| r.rejected));

    let with_null = plis(&["test", s(&input), "--null", "normal(0,1)"]);
    assert_eq!(with_null.status.code(), Some(2));
}

#[test]
fn nulls_file_matches_label_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GeneratorConfig::new(300, Generator::Hmm { a00: 0.95, a11: 0.8, mu: 3.0 }).with_nulls(600);
    let data = generate(&cfg, 6).unwrap();
    let nulls = data.nulls.as_ref().unwrap();
    let x = write(dir.path(), "x.txt", &column(&data.x));
    let u = write(dir.path(), "u.txt", &column(nulls));
    let mut labelled: String = data.x.iter().map(|v| format!("{v:?} test\n")).collect();
    labelled.extend(nulls.iter().map(|v| format!("{v:?} null\n")));
    let both = write(dir.path(), "both.txt", &labelled);
    let a = plis(&["test", s(&x), "--nulls", s(&u), "--model", "tg"]);
    let b = plis(&["test", s(&both), "--model", "tg"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn printed_config_feeds_back_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let o = plis(&["test", "--print-config", "--alpha", "0.1", "--model", "tg"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for key in ["method = \"plis\"", "model = \"tg\"", "combiner = \"max_abs\"", "alpha = 0.1", "seed = 0", "null = "] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
    let cfg = write(dir.path(), "run.toml", &text);
    let again = plis(&["test", "--config", s(&cfg), "--print-config"]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn fixed_hmm_parameters_skip_estimation() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.txt", &column(&hmm_sample(300, 7)));
    let params = write(
        dir.path(),
        "hmm.txt",
        "pi0 = 1\npi1 = 0\na00 = 0.95\na01 = 0.05\na10 = 0.2\na11 = 0.8\nmu0 = 0\nsd0 = 1\nmu1 = 3\nsd1 = 1\nnull_law = max_abs_pair\n",
    );
    let o = plis(&["test", s(&input), "--hmm-params", s(&params), "--alpha", "0.2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bad = write(dir.path(), "bad.txt", "pi0 = 1\n");
    assert_eq!(plis(&["test", s(&input), "--hmm-params", s(&bad)]).status.code(), Some(2));
}

#[test]
fn list_names_methods_and_plans() {
    let o = plis(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["plis_hm", "conformal_bh", "fig2", "fig3", "e7"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn simulate_rejects_unknown_names_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write(
        dir.path(),
        "plan.toml",
        "name = \"bad\"\nseed = 1\nreps = 2\nm = 50\nmethods = [\"nope\"]\n[generator]\nkind = \"hmm\"\na00 = 0.9\na11 = 0.5\nmu = 2.0\n",
    );
    let o = plis(&["simulate", s(&plan), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!dir.path().join("bad_raw.csv").exists());
}
