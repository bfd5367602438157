//! Text grammar for subequation specs.
//!
//! ```text
//! spec := psh | psh-j:<file> | sigma:<m> | dual(<spec>)
//!       | obstacle(<spec>,<field file>) | pullback(<spec>,<manifest>)
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use pshkit_core::grid::{read_complex_structure, read_equivalence, read_field, Grid};
use pshkit_core::jet::SubequationSpec;
use pshkit_core::Pointwise;

#[derive(Clone, Debug, PartialEq)]
pub enum SpecDesc {
    Psh,
    PshJ(PathBuf),
    Sigma(usize),
    Dual(Box<SpecDesc>),
    Obstacle(Box<SpecDesc>, PathBuf),
    Pullback(Box<SpecDesc>, PathBuf),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let r = self.rest();
        self.pos += r.len() - r.trim_start().len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), String> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(format!(
                "expected `{tok}` at offset {} of `{}`",
                self.pos, self.src
            ))
        }
    }

    /// Reads up to the next `,` or `)` (or the end).
    fn word(&mut self) -> Result<&'a str, String> {
        self.skip_ws();
        let r = self.rest();
        let end = r.find([',', ')']).unwrap_or(r.len());
        let w = r[..end].trim();
        if w.is_empty() {
            return Err(format!(
                "missing name at offset {} of `{}`",
                self.pos, self.src
            ));
        }
        self.pos += end;
        Ok(w)
    }

    fn spec(&mut self) -> Result<SpecDesc, String> {
        if self.eat("dual(") {
            let inner = self.spec()?;
            self.expect(")")?;
            return Ok(SpecDesc::Dual(Box::new(inner)));
        }
        for (kw, pullback) in [("obstacle(", false), ("pullback(", true)] {
            if self.eat(kw) {
                let inner = Box::new(self.spec()?);
                self.expect(",")?;
                let file = PathBuf::from(self.word()?);
                self.expect(")")?;
                return Ok(if pullback {
                    SpecDesc::Pullback(inner, file)
                } else {
                    SpecDesc::Obstacle(inner, file)
                });
            }
        }
        if self.eat("psh-j:") {
            return Ok(SpecDesc::PshJ(PathBuf::from(self.word()?)));
        }
        if self.eat("sigma:") {
            let w = self.word()?;
            let m = w
                .parse()
                .map_err(|_| format!("`{w}` is not a valid sigma order"))?;
            return Ok(SpecDesc::Sigma(m));
        }
        let w = self.word()?;
        if w == "psh" {
            return Ok(SpecDesc::Psh);
        }
        Err(format!("unknown spec `{w}`"))
    }
}

impl SpecDesc {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut p = Parser { src: text, pos: 0 };
        let s = p.spec()?;
        p.skip_ws();
        if !p.rest().is_empty() {
            return Err(format!("trailing input `{}` in spec `{text}`", p.rest()));
        }
        Ok(s)
    }

    /// Every file the expression refers to.
    pub fn paths(&self) -> Vec<&Path> {
        match self {
            SpecDesc::Psh | SpecDesc::Sigma(_) => vec![],
            SpecDesc::PshJ(p) => vec![p],
            SpecDesc::Dual(s) => s.paths(),
            SpecDesc::Obstacle(s, p) | SpecDesc::Pullback(s, p) => {
                let mut v = s.paths();
                v.push(p);
                v
            }
        }
    }

    /// Makes relative paths relative to `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            SpecDesc::Psh | SpecDesc::Sigma(_) => {}
            SpecDesc::PshJ(p) => fix(p),
            SpecDesc::Dual(s) => s.rebase(base),
            SpecDesc::Obstacle(s, p) | SpecDesc::Pullback(s, p) => {
                s.rebase(base);
                fix(p);
            }
        }
    }

    pub fn needs_grid(&self) -> bool {
        !self.paths().is_empty()
    }

    /// Builds the subequation for complex dimension `n`; file-backed parts are read
    /// against `grid`.
    pub fn build(
        &self,
        n: usize,
        grid: Option<&Grid<f64>>,
    ) -> anyhow::Result<SubequationSpec<f64>> {
        let need_grid = |p: &Path| {
            grid.ok_or_else(|| anyhow!("spec file {} needs a grid (pass --grid)", p.display()))
        };
        Ok(match self {
            SpecDesc::Psh => SubequationSpec::psh(n)?,
            SpecDesc::Sigma(m) => SubequationSpec::sigma(n, *m)?,
            SpecDesc::PshJ(p) => {
                let j = read_complex_structure(p, need_grid(p)?)?;
                SubequationSpec::psh_almost_complex(j)
            }
            SpecDesc::Dual(s) => s.build(n, grid)?.dual(),
            SpecDesc::Obstacle(s, p) => {
                let g = need_grid(p)?;
                let f = read_field::<f64>(p)?;
                if !f.grid().same_lattice(g) {
                    bail!(
                        "{}: obstacle field is not on the grid's lattice",
                        p.display()
                    );
                }
                s.build(n, grid)?
                    .obstacle(Pointwise::PerPoint(Arc::new(f.into_values())))
            }
            SpecDesc::Pullback(s, p) => {
                let e = read_equivalence(p, need_grid(p)?)?;
                s.build(n, grid)?
                    .pullback(e)
                    .with_context(|| format!("pullback by {}", p.display()))?
            }
        })
    }
}

impl fmt::Display for SpecDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecDesc::Psh => write!(f, "psh"),
            SpecDesc::PshJ(p) => write!(f, "psh-j:{}", p.display()),
            SpecDesc::Sigma(m) => write!(f, "sigma:{m}"),
            SpecDesc::Dual(s) => write!(f, "dual({s})"),
            SpecDesc::Obstacle(s, p) => write!(f, "obstacle({s},{})", p.display()),
            SpecDesc::Pullback(s, p) => write!(f, "pullback({s},{})", p.display()),
        }
    }
}
