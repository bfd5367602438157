//! Text field files.
//!
//! ```text
//! #pshgrid v1
//! n=<1|2> dims=<d1,...,d2n> h=<spacing> origin=<o1,...,o2n>
//! mask=inline|file:<path>
//! <values, one per line, row-major with the last axis fastest>
//! ```
//!
//! With `mask=inline` the mask labels (0 Exterior, 1 Boundary, 2 Interior)
//! come first, one per line, followed by the values. A mask file is a header
//! with `mask=inline` and the labels only. `file:` paths are relative to the
//! directory of the file that names them.
//!
//! Complex structures and jet-equivalences are bundles: a manifest
//!
//! ```text
//! #pshbundle v1 kind=complex-structure|jet-equivalence
//! J.0.1=j01.fld
//! k.0.0=const:2
//! ```
//!
//! mapping each matrix entry to a field file on the same lattice or a
//! constant. Complex-structure keys are `J.i.j` (unlisted entries follow the
//! standard structure); jet-equivalence keys are `r0`, `p0.i`, `A0.i.j`,
//! `k.i.j`, `h.i.j`, `L.l.i.j` (unlisted entries are those of the identity).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{Grid, GridField, PointKind};
use crate::error::{Error, Result};
use crate::jet::{standard_complex_structure, AlmostComplexStructure, JetEquivalence, JetMap};
use crate::pointwise::Pointwise;
use crate::scalar::Scalar;

const MAGIC: &str = "#pshgrid v1";
const BUNDLE_MAGIC: &str = "#pshbundle v1";

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

struct Header<S> {
    n: usize,
    dims: Vec<usize>,
    h: S,
    origin: Vec<S>,
    mask: MaskSource,
}

enum MaskSource {
    Inline,
    File(PathBuf),
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn header_lines<S: Scalar>(grid: &Grid<S>, mask: &str) -> String {
    format!(
        "{MAGIC}\nn={} dims={} h={} origin={}\nmask={mask}\n",
        grid.n(),
        join(grid.dims()),
        grid.spacing(),
        join(grid.origin())
    )
}

fn parse_header<S: Scalar>(path: &Path, lines: &[&str]) -> Result<Header<S>> {
    if lines.first().map(|l| l.trim_end()) != Some(MAGIC) {
        return Err(parse_err(path, 1, format!("expected `{MAGIC}`")));
    }
    let line2 = lines
        .get(1)
        .ok_or_else(|| parse_err(path, 2, "missing grid header"))?;
    let mut n = None;
    let mut dims = None;
    let mut h = None;
    let mut origin = None;
    for tok in line2.split_whitespace() {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(path, 2, format!("malformed token `{tok}`")))?;
        let bad = |what: &str| parse_err(path, 2, format!("malformed {what} `{val}`"));
        match key {
            "n" => n = Some(val.parse::<usize>().map_err(|_| bad("n"))?),
            "dims" => {
                dims = Some(
                    val.split(',')
                        .map(|t| t.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("dims"))?,
                )
            }
            "h" => h = Some(val.parse::<S>().map_err(|_| bad("h"))?),
            "origin" => {
                origin = Some(
                    val.split(',')
                        .map(|t| t.parse::<S>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("origin"))?,
                )
            }
            other => return Err(parse_err(path, 2, format!("unknown header key `{other}`"))),
        }
    }
    let missing = |k: &str| parse_err(path, 2, format!("header is missing `{k}`"));
    let n = n.ok_or_else(|| missing("n"))?;
    let dims = dims.ok_or_else(|| missing("dims"))?;
    let h = h.ok_or_else(|| missing("h"))?;
    let origin = origin.ok_or_else(|| missing("origin"))?;
    if n != 1 && n != 2 {
        return Err(parse_err(
            path,
            2,
            format!("n = {n}; only 1 and 2 are supported"),
        ));
    }
    if dims.len() != 2 * n || origin.len() != 2 * n {
        return Err(parse_err(
            path,
            2,
            format!("n = {n} needs {} dims and origin entries", 2 * n),
        ));
    }
    if !(h > S::zero()) || !h.is_finite() || origin.iter().any(|o| !o.is_finite()) {
        return Err(parse_err(
            path,
            2,
            "spacing must be positive and origin finite",
        ));
    }
    let line3 = lines
        .get(2)
        .ok_or_else(|| parse_err(path, 3, "missing mask line"))?
        .trim_end();
    let mask = match line3.strip_prefix("mask=") {
        Some("inline") => MaskSource::Inline,
        Some(rest) if rest.starts_with("file:") => {
            let rel = &rest["file:".len()..];
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            MaskSource::File(base.join(rel))
        }
        _ => {
            return Err(parse_err(
                path,
                3,
                format!("expected `mask=inline` or `mask=file:<path>`, got `{line3}`"),
            ))
        }
    };
    Ok(Header {
        n,
        dims,
        h,
        origin,
        mask,
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn data_lines<'a>(
    lines: &'a [&'a str],
    start: usize,
) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    lines
        .iter()
        .enumerate()
        .skip(start)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_labels<'a>(
    path: &Path,
    it: &mut impl Iterator<Item = (usize, &'a str)>,
    count: usize,
) -> Result<Vec<PointKind>> {
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let (ln, tok) = it.next().ok_or_else(|| {
            parse_err(path, 0, format!("expected {count} mask labels, found {k}"))
        })?;
        let kind = tok
            .parse::<u8>()
            .ok()
            .and_then(PointKind::from_label)
            .ok_or_else(|| parse_err(path, ln, format!("mask label `{tok}` is not 0, 1 or 2")))?;
        out.push(kind);
    }
    Ok(out)
}

fn trailing<'a>(
    path: &Path,
    it: &mut impl Iterator<Item = (usize, &'a str)>,
    expected: usize,
) -> Result<()> {
    if let Some((ln, _)) = it.next() {
        return Err(parse_err(
            path,
            ln,
            format!("more entries than the {expected} announced by the header"),
        ));
    }
    Ok(())
}

/// Reads a mask file into a grid.
pub fn read_mask<S: Scalar>(path: impl AsRef<Path>) -> Result<Grid<S>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let lines: Vec<&str> = text.lines().collect();
    let hdr = parse_header::<S>(path, &lines)?;
    if !matches!(hdr.mask, MaskSource::Inline) {
        return Err(parse_err(path, 3, "a mask file must use `mask=inline`"));
    }
    let total: usize = hdr.dims.iter().product();
    let mut it = data_lines(&lines, 3);
    let labels = parse_labels(path, &mut it, total)?;
    trailing(path, &mut it, total)?;
    Grid::new(hdr.n, hdr.dims, hdr.h, hdr.origin, labels)
        .map_err(|e| parse_err(path, 3, e.to_string()))
}

/// Writes a grid's mask as a mask file.
pub fn write_mask<S: Scalar>(grid: &Grid<S>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = header_lines(grid, "inline");
    for k in grid.mask() {
        let _ = writeln!(out, "{}", k.label());
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads a field file; a `file:` mask must share the field's header.
pub fn read_field<S: Scalar>(path: impl AsRef<Path>) -> Result<GridField<S>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let lines: Vec<&str> = text.lines().collect();
    let hdr = parse_header::<S>(path, &lines)?;
    let total: usize = hdr.dims.iter().product();
    let mut it = data_lines(&lines, 3);
    let grid = match &hdr.mask {
        MaskSource::Inline => {
            let labels = parse_labels(path, &mut it, total)?;
            Grid::new(hdr.n, hdr.dims.clone(), hdr.h, hdr.origin.clone(), labels)
                .map_err(|e| parse_err(path, 3, e.to_string()))?
        }
        MaskSource::File(mpath) => {
            let g = read_mask::<S>(mpath)?;
            if g.n() != hdr.n
                || g.dims() != hdr.dims.as_slice()
                || g.spacing() != hdr.h
                || g.origin() != hdr.origin.as_slice()
            {
                return Err(parse_err(
                    path,
                    2,
                    format!("header does not match mask file {}", mpath.display()),
                ));
            }
            g
        }
    };
    let mut values = Vec::with_capacity(total);
    for k in 0..total {
        let (ln, tok) = it.next().ok_or_else(|| {
            parse_err(
                path,
                lines.len(),
                format!("header announces {total} values, file has {k}"),
            )
        })?;
        let v: S = tok
            .parse()
            .map_err(|_| parse_err(path, ln, format!("cannot parse value `{tok}`")))?;
        if !v.is_finite() {
            return Err(parse_err(path, ln, format!("non-finite value `{tok}`")));
        }
        values.push(v);
    }
    trailing(path, &mut it, total)?;
    GridField::new(Arc::new(grid), values)
}

/// Writes a field with an inline mask; values carry enough digits for an
/// exact round trip.
pub fn write_field<S: Scalar>(field: &GridField<S>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let grid = field.grid();
    if let Some(i) = field.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::Inconsistent(format!(
            "refusing to write non-finite value at lattice point {:?}",
            grid.coords(i)
        )));
    }
    let mut out = header_lines(grid, "inline");
    out.reserve(grid.len() * (S::SIG_DIGITS + 10));
    for k in grid.mask() {
        let _ = writeln!(out, "{}", k.label());
    }
    let prec = S::SIG_DIGITS - 1;
    for v in field.values() {
        let _ = writeln!(out, "{v:.prec$e}");
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

enum Component<S> {
    Const(S),
    Field(Vec<S>),
}

impl<S: Scalar> Component<S> {
    fn at(&self, i: usize) -> S {
        match self {
            Component::Const(c) => *c,
            Component::Field(v) => v[i],
        }
    }
}

fn read_bundle<S: Scalar>(
    path: &Path,
    kind: &str,
    grid: &Grid<S>,
    valid_key: impl Fn(&str) -> bool,
) -> Result<BTreeMap<String, Component<S>>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    let first = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    let expected = format!("{BUNDLE_MAGIC} kind={kind}");
    if first != expected {
        return Err(parse_err(path, 1, format!("expected `{expected}`")));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut out = BTreeMap::new();
    for (i, line) in lines {
        let ln = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, val) = line
            .split_once('=')
            .ok_or_else(|| parse_err(path, ln, format!("expected `key=value`, got `{line}`")))?;
        let key = key.trim();
        if !valid_key(key) {
            return Err(parse_err(
                path,
                ln,
                format!("unknown or out-of-range key `{key}`"),
            ));
        }
        let val = val.trim();
        let comp = if let Some(c) = val.strip_prefix("const:") {
            let v: S = c
                .parse()
                .map_err(|_| parse_err(path, ln, format!("cannot parse constant `{c}`")))?;
            if !v.is_finite() {
                return Err(parse_err(path, ln, format!("non-finite constant `{c}`")));
            }
            Component::Const(v)
        } else {
            let f = read_field::<S>(base.join(val))?;
            if !f.grid().same_lattice(grid) {
                return Err(parse_err(
                    path,
                    ln,
                    format!("field `{val}` is not on the run's lattice"),
                ));
            }
            Component::Field(f.into_values())
        };
        if out.insert(key.to_string(), comp).is_some() {
            return Err(parse_err(path, ln, format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

fn index_key(key: &str, prefix: &str, arity: usize, dim: usize) -> bool {
    let Some(rest) = key.strip_prefix(prefix) else {
        return false;
    };
    let parts: Vec<&str> = if rest.is_empty() {
        vec![]
    } else {
        rest.trim_start_matches('.').split('.').collect()
    };
    if arity > 0 && !rest.starts_with('.') {
        return false;
    }
    parts.len() == arity
        && parts
            .iter()
            .all(|p| p.parse::<usize>().map_or(false, |v| v < dim))
}

/// Loads a complex-structure bundle; `J(x)² = −I` is validated at every
/// lattice point.
pub fn read_complex_structure<S: Scalar>(
    path: impl AsRef<Path>,
    grid: &Grid<S>,
) -> Result<AlmostComplexStructure<S>> {
    let path = path.as_ref();
    let d = grid.dim();
    let comps = read_bundle(path, "complex-structure", grid, |k| index_key(k, "J", 2, d))?;
    let std_j = standard_complex_structure::<S>(grid.n());
    let per_point = comps.values().any(|c| matches!(c, Component::Field(_)));
    let build = |idx: usize| {
        let mut m = std_j.clone();
        for i in 0..d {
            for j in 0..d {
                if let Some(c) = comps.get(&format!("J.{i}.{j}")) {
                    m[(i, j)] = c.at(idx);
                }
            }
        }
        m
    };
    let field = if per_point {
        Pointwise::PerPoint(Arc::new((0..grid.len()).map(build).collect()))
    } else {
        Pointwise::Constant(build(0))
    };
    AlmostComplexStructure::new(field).map_err(|e| parse_err(path, 0, e.to_string()))
}

/// Loads a jet-equivalence bundle.
pub fn read_equivalence<S: Scalar>(
    path: impl AsRef<Path>,
    grid: &Grid<S>,
) -> Result<JetEquivalence<S>> {
    let path = path.as_ref();
    let d = grid.dim();
    let comps = read_bundle(path, "jet-equivalence", grid, |k| {
        k == "r0"
            || index_key(k, "p0", 1, d)
            || index_key(k, "A0", 2, d)
            || index_key(k, "k", 2, d)
            || index_key(k, "h", 2, d)
            || index_key(k, "L", 3, d)
    })?;
    let per_point = comps.values().any(|c| matches!(c, Component::Field(_)));
    let get = |key: String, idx: usize, default: S| comps.get(&key).map_or(default, |c| c.at(idx));
    let build = |idx: usize| {
        let mut m = JetMap::<S>::identity(d);
        m.r0 = get("r0".into(), idx, S::zero());
        for i in 0..d {
            m.p0[i] = get(format!("p0.{i}"), idx, S::zero());
            for j in 0..d {
                let id = if i == j { S::one() } else { S::zero() };
                m.a0[(i, j)] = get(format!("A0.{i}.{j}"), idx, S::zero());
                m.k[(i, j)] = get(format!("k.{i}.{j}"), idx, id);
                m.h[(i, j)] = get(format!("h.{i}.{j}"), idx, id);
                for l in 0..d {
                    m.l[l][(i, j)] = get(format!("L.{l}.{i}.{j}"), idx, S::zero());
                }
            }
        }
        m.a0 = m.a0.symmetrized();
        for l in m.l.iter_mut() {
            *l = l.symmetrized();
        }
        m
    };
    let maps = if per_point {
        Pointwise::PerPoint(Arc::new((0..grid.len()).map(build).collect()))
    } else {
        Pointwise::Constant(build(0))
    };
    JetEquivalence::new(maps).map_err(|e| parse_err(path, 0, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_disc_domain;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(build_disc_domain(1, 1.0, 0.125).unwrap());
        let f = GridField::from_fn(g.clone(), |x: &[f64]| (x[0] * 3.1).sin() / 7.0 + x[1].exp());
        let p = dir.path().join("f.fld");
        write_field(&f, &p).unwrap();
        let back = read_field::<f64>(&p).unwrap();
        assert_eq!(back.grid().as_ref(), g.as_ref());
        assert_eq!(back.values(), f.values());
        write_field(&back, dir.path().join("g.fld")).unwrap();
        assert_eq!(
            fs::read(&p).unwrap(),
            fs::read(dir.path().join("g.fld")).unwrap()
        );
    }

    #[test]
    fn mask_reference_resolves_relative() {
        let dir = tempfile::tempdir().unwrap();
        let g = build_disc_domain(1, 1.0, 0.25).unwrap();
        write_mask(&g, dir.path().join("d.grid")).unwrap();
        let mut text = header_lines(&g, "file:d.grid");
        for i in 0..g.len() {
            text.push_str(&format!("{}\n", i as f64));
        }
        fs::write(dir.path().join("v.fld"), text).unwrap();
        let f = read_field::<f64>(dir.path().join("v.fld")).unwrap();
        assert_eq!(f.grid().mask(), g.mask());
        assert_eq!(f.at(5), 5.0);
    }

    fn corrupt(replace: impl Fn(&str) -> String) -> Error {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(build_disc_domain(1, 1.0, 0.25).unwrap());
        let p = dir.path().join("f.fld");
        write_field(&GridField::constant(g, 1.0), &p).unwrap();
        let text = replace(&fs::read_to_string(&p).unwrap());
        fs::write(&p, text).unwrap();
        read_field::<f64>(&p).unwrap_err()
    }

    #[test]
    fn nan_names_its_line() {
        let err = corrupt(|t| {
            let mut lines: Vec<String> = t.lines().map(String::from).collect();
            lines[3 + 81 + 10] = "NaN".into();
            lines.join("\n")
        });
        match err {
            Error::Parse { line, ref msg, .. } => {
                assert_eq!(line, 3 + 81 + 11);
                assert!(msg.contains("non-finite"), "{msg}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn count_mismatch_is_parse_error() {
        let err = corrupt(|t| t.replace("dims=9,9", "dims=9,10"));
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        let err = corrupt(|t| {
            let mut lines: Vec<&str> = t.lines().collect();
            lines.pop();
            lines.join("\n")
        });
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn malformed_header() {
        let err = corrupt(|t| t.replace("#pshgrid v1", "#grid"));
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = corrupt(|t| t.replace(" h=", " spacing="));
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn bundles_load() {
        let dir = tempfile::tempdir().unwrap();
        let g = build_disc_domain(1, 1.0, 0.25).unwrap();
        fs::write(
            dir.path().join("j.bundle"),
            "#pshbundle v1 kind=complex-structure\nJ.0.1=const:1\nJ.1.0=const:-1\n",
        )
        .unwrap();
        let j = read_complex_structure(dir.path().join("j.bundle"), &g).unwrap();
        assert_eq!(j.at(0)[(0, 1)], 1.0);
        let gf = Arc::new(g.clone());
        write_field(
            &GridField::from_fn(gf, |x| 1.0 + 0.05 * x[0]),
            dir.path().join("k00.fld"),
        )
        .unwrap();
        fs::write(
            dir.path().join("e.bundle"),
            "#pshbundle v1 kind=jet-equivalence\nr0=const:-1\n# comment\nh.0.0=k00.fld\n",
        )
        .unwrap();
        let e = read_equivalence(dir.path().join("e.bundle"), &g).unwrap();
        assert_eq!(e.at(0).r0, -1.0);
        assert!(!e.maps().is_constant());
        fs::write(
            dir.path().join("bad.bundle"),
            "#pshbundle v1 kind=jet-equivalence\nk.0.9=const:1\n",
        )
        .unwrap();
        assert!(matches!(
            read_equivalence(dir.path().join("bad.bundle"), &g),
            Err(Error::Parse { line: 2, .. })
        ));
        fs::write(
            dir.path().join("sing.bundle"),
            "#pshbundle v1 kind=complex-structure\nJ.0.1=const:2\n",
        )
        .unwrap();
        assert!(read_complex_structure(dir.path().join("sing.bundle"), &g).is_err());
    }
}
