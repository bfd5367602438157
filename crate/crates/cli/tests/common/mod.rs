#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use pshkit_core::grid::{build_disc_domain, write_field, write_mask, Grid, GridField, PointKind};
use serde_json::Value;

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub elapsed: Duration,
}

pub fn pshkit(args: &[&str], threads: Option<usize>) -> Outcome {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pshkit"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("PSHKIT_THREADS", t.to_string()),
        None => cmd.env_remove("PSHKIT_THREADS"),
    };
    let t = Instant::now();
    let out = cmd.output().expect("spawn pshkit");
    Outcome {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        elapsed: t.elapsed(),
    }
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

pub fn report(out: &Path) -> Vec<Value> {
    fs::read_to_string(out.join("report.jsonl"))
        .expect("report")
        .lines()
        .map(|l| serde_json::from_str(l).expect("json line"))
        .collect()
}

pub fn events<'a>(rep: &'a [Value], event: &str) -> Vec<&'a Value> {
    rep.iter().filter(|v| v["event"] == event).collect()
}

pub fn check<'a>(rep: &'a [Value], name: &str) -> Option<&'a Value> {
    rep.iter()
        .find(|v| v["event"] == "check" && v["name"] == name)
}

pub fn check_passed(rep: &[Value], name: &str) -> bool {
    check(rep, name).is_some_and(|c| c["pass"] == true)
}

pub fn r2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn disc(n: usize, h: f64) -> Arc<Grid<f64>> {
    Arc::new(build_disc_domain(n, 1.0, h).unwrap())
}

pub fn field(dir: &Path, name: &str, grid: &Arc<Grid<f64>>, f: impl Fn(&[f64]) -> f64) -> PathBuf {
    let path = dir.join(name);
    write_field(&GridField::from_fn(grid.clone(), f), &path).unwrap();
    path
}

pub fn mask(dir: &Path, name: &str, grid: &Grid<f64>) -> PathBuf {
    let path = dir.join(name);
    write_mask(grid, &path).unwrap();
    path
}

/// Mask file whose Interior is the Interior points satisfying `pred`.
pub fn set_mask(
    dir: &Path,
    name: &str,
    grid: &Grid<f64>,
    pred: impl Fn(&[f64]) -> bool,
) -> PathBuf {
    let sel: Vec<bool> = (0..grid.len())
        .map(|i| grid.kind(i) == PointKind::Interior && pred(&grid.point(i)))
        .collect();
    mask(dir, name, &grid.sub_domain(&sel).unwrap())
}

/// Lower convex hull of points sorted by abscissa.
fn lower_hull(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    let mut h: Vec<(f64, f64)> = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        while h.len() >= 2 {
            let (x1, y1) = h[h.len() - 2];
            let (x2, y2) = h[h.len() - 1];
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) <= 0.0 {
                h.pop();
            } else {
                break;
            }
        }
        h.push((x, y));
    }
    h
}

/// Largest radial subharmonic minorant of `g(|z|)` on the unit disc: the
/// greatest function of `s = log r` that is convex, nondecreasing and below
/// `g(e^s)`.
pub fn radial_envelope(g: impl Fn(f64) -> f64) -> impl Fn(f64) -> f64 {
    let n = 20_000;
    let smin = (1e-5f64).ln();
    let xs: Vec<f64> = (0..n)
        .map(|i| smin * (1.0 - i as f64 / (n - 1) as f64))
        .collect();
    let mut ys: Vec<f64> = xs.iter().map(|&s| g(s.exp())).collect();
    for i in (0..n - 1).rev() {
        ys[i] = ys[i].min(ys[i + 1]);
    }
    let hull = lower_hull(&xs, &ys);
    move |r: f64| {
        let s = r.max(1e-5).ln().min(0.0);
        for w in hull.windows(2) {
            if s <= w[1].0 {
                let t = (s - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + t * (w[1].1 - w[0].1);
            }
        }
        hull.last().unwrap().1
    }
}
