mod common;

use std::fs;

use common::*;
use pshkit_core::grid::read_field;

fn config_event(out: &std::path::Path) -> serde_json::Value {
    events(&report(out), "config")[0].clone()
}

#[test]
fn config_file_fills_in_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# audit settings\nspec = psh\nn = 1\nsamples = 200\nseed = 3\nnesting = false\n",
    )
    .unwrap();
    let out = dir.path().join("a");
    let o = pshkit(&["audit-spec", "--config", p(&cfg), "--out", p(&out)], None);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let c = config_event(&out);
    assert_eq!(c["args"]["samples"], 200);
    assert_eq!(c["seed"], 3);
    assert_eq!(c["args"]["nesting"], false);

    let out = dir.path().join("b");
    let o = pshkit(
        &[
            "audit-spec",
            "--config",
            p(&cfg),
            "--samples",
            "50",
            "--seed",
            "9",
            "--out",
            p(&out),
        ],
        None,
    );
    assert_eq!(o.code, 0, "{}", o.stderr);
    let c = config_event(&out);
    assert_eq!(c["args"]["samples"], 50);
    assert_eq!(c["seed"], 9);
}

#[test]
fn config_paths_are_relative_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("inputs");
    fs::create_dir(&inputs).unwrap();
    let grid = disc(1, 1.0 / 8.0);
    mask(&inputs, "disc.mask", &grid);
    field(&inputs, "g.fld", &grid, |x| r2(x) + 0.2 * x[0]);
    let cfg = inputs.join("env.cfg");
    fs::write(
        &cfg,
        "grid = disc.mask\ng = g.fld\nspec = psh\ntol = 1e-10\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = pshkit(&["envelope", "--config", p(&cfg), "--out", p(&out)], None);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let h = read_field::<f64>(out.join("h.fld")).unwrap();
    let g = read_field::<f64>(inputs.join("g.fld")).unwrap();
    for i in h.active() {
        assert!((h.at(i) - g.at(i)).abs() <= 1e-8);
    }
}

#[test]
fn bad_config_entries_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (text, needle) in [
        ("spec = psh\nbogus = 1\n", ":2: key `bogus`"),
        (
            "spec = psh\nn = 1\nspec = psh\n",
            ":3: key `spec` given twice",
        ),
        ("n = 1\nself-dual = maybe\n", ":2: key `self-dual`"),
        ("n = 1\nspec = dual(psh\n", ":2: key `spec`"),
        ("just words\n", ":1: expected key=value"),
    ] {
        let cfg = dir.path().join("bad.cfg");
        fs::write(&cfg, text).unwrap();
        let o = pshkit(&["audit-spec", "--config", p(&cfg), "--out", p(&out)], None);
        assert_eq!(o.code, 1, "{text}");
        assert!(o.stderr.contains(needle), "{text}: {}", o.stderr);
    }
}

#[test]
fn malformed_specs_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for spec in ["dual(psh", "sigma:x", "plurisub", "psh psh", "sigma:3"] {
        let o = pshkit(
            &["audit-spec", "--spec", spec, "--n", "1", "--out", p(&out)],
            None,
        );
        assert_eq!(o.code, 1, "{spec}: {}", o.stdout);
        assert!(!o.stderr.is_empty());
    }
    let o = pshkit(
        &[
            "audit-spec",
            "--spec",
            "obstacle(psh,missing.fld)",
            "--n",
            "1",
            "--out",
            p(&out),
        ],
        None,
    );
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("missing.fld"), "{}", o.stderr);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(pshkit(&["--help"], None).code, 0);
    assert_eq!(pshkit(&["envelope", "--help"], None).code, 0);
    assert_eq!(pshkit(&["no-such-command"], None).code, 1);
    assert_eq!(pshkit(&["envelope", "--out", p(&out)], None).code, 1);
    let o = pshkit(
        &[
            "envelope",
            "--grid",
            p(&dir.path().join("nope.mask")),
            "--g",
            "x.fld",
            "--out",
            p(&out),
        ],
        None,
    );
    assert_eq!(o.code, 1);

    let grid = disc(1, 1.0 / 16.0);
    let gm = mask(dir.path(), "disc.mask", &grid);
    let g = field(dir.path(), "g.fld", &grid, |x| 1.0 - r2(x));
    let o = pshkit(
        &[
            "envelope",
            "--grid",
            p(&gm),
            "--g",
            p(&g),
            "--max-iter",
            "2",
            "--out",
            p(&out),
        ],
        None,
    );
    assert_eq!(o.code, 2, "{}", o.stderr);
    assert!(out.join("h.fld").exists());
    let rep = report(&out);
    assert!(!check_passed(&rep, "converged"));
    assert_eq!(rep.last().unwrap()["event"], "status");
    assert_eq!(rep.last().unwrap()["pass"], false);

    let o = pshkit(
        &["envelope", "--grid", p(&gm), "--g", p(&g), "--out", p(&out)],
        None,
    );
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("status pass=true"));
}

#[test]
fn bad_thread_setting_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_pshkit"));
    cmd.args([
        "audit-spec",
        "--spec",
        "psh",
        "--n",
        "1",
        "--samples",
        "10",
        "--out",
        p(&out),
    ])
    .env("PSHKIT_THREADS", "zero");
    let o = cmd.output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PSHKIT_THREADS"));
}

#[test]
fn report_lines_start_with_the_event() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let log = dir.path().join("copy.jsonl");
    let o = pshkit(
        &[
            "audit-jet",
            "--spec",
            "psh",
            "--n",
            "1",
            "--samples",
            "100",
            "--jet",
            "0; 0 0; 1 0 0 1",
            "--log",
            p(&log),
            "--out",
            p(&out),
        ],
        None,
    );
    assert_eq!(o.code, 0, "{}", o.stderr);
    let text = fs::read_to_string(out.join("report.jsonl")).unwrap();
    for line in text.lines() {
        assert!(line.starts_with("{\"event\":"), "{line}");
    }
    assert_eq!(fs::read_to_string(&log).unwrap(), text);
}
