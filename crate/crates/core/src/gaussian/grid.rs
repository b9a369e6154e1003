//! Sampled single-mode Wigner functions on a uniform phase-space grid.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ComplexGaussian, GaussianWigner, SuperpositionState};
use crate::error::{Error, Result};

/// Cell-centred grid: `q_i = qmin + (i + 1/2) dq`, `dq = (qmax - qmin)/nq`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub qmin: f64,
    pub qmax: f64,
    pub nq: usize,
    pub pmin: f64,
    pub pmax: f64,
    pub np: usize,
}

impl GridSpec {
    pub fn square(lim: f64, n: usize) -> Self {
        GridSpec {
            qmin: -lim,
            qmax: lim,
            nq: n,
            pmin: -lim,
            pmax: lim,
            np: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.nq > 0
            && self.np > 0
            && self.qmax > self.qmin
            && self.pmax > self.pmin
            && [self.qmin, self.qmax, self.pmin, self.pmax].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::DegenerateGrid(format!("{self:?}")))
        }
    }

    pub fn dq(&self) -> f64 {
        (self.qmax - self.qmin) / self.nq as f64
    }

    pub fn dp(&self) -> f64 {
        (self.pmax - self.pmin) / self.np as f64
    }

    pub fn q(&self, i: usize) -> f64 {
        self.qmin + (i as f64 + 0.5) * self.dq()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.pmin + (j as f64 + 0.5) * self.dp()
    }

    pub fn q_axis(&self) -> Vec<f64> {
        (0..self.nq).map(|i| self.q(i)).collect()
    }

    pub fn p_axis(&self) -> Vec<f64> {
        (0..self.np).map(|j| self.p(j)).collect()
    }
}

/// Real Wigner samples; row `j` holds fixed `p_j`, column `i` fixed `q_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub values: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    spec: GridSpec,
    q: Vec<f64>,
    p: Vec<f64>,
    /// Row-major, rows of fixed p.
    values: Vec<f64>,
}

impl WignerGrid {
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        spec.validate()?;
        let values = DMatrix::from_fn(spec.np, spec.nq, |j, i| f(spec.q(i), spec.p(j)));
        Ok(WignerGrid { spec, values })
    }

    /// Midpoint-rule integral.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.spec.dq() * self.spec.dp()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Largest boundary magnitude relative to the largest value; the grid
    /// should cover the support when this is below about 1e-6.
    pub fn boundary_ratio(&self) -> f64 {
        let (r, c) = self.values.shape();
        let mut edge: f64 = 0.0;
        for j in 0..r {
            edge = edge.max(self.values[(j, 0)].abs()).max(self.values[(j, c - 1)].abs());
        }
        for i in 0..c {
            edge = edge.max(self.values[(0, i)].abs()).max(self.values[(r - 1, i)].abs());
        }
        let peak = self.max_abs();
        if peak == 0.0 {
            0.0
        } else {
            edge / peak
        }
    }

    /// Sup-norm distance to another grid on the same axes.
    pub fn sup_diff(&self, other: &WignerGrid) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::DegenerateGrid("grids have different axes".into()));
        }
        Ok((&self.values - &other.values).abs().max())
    }

    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let _ = writeln!(out, "# {} {} {}", s.qmin, s.qmax, s.nq);
        let _ = writeln!(out, "# {} {} {}", s.pmin, s.pmax, s.np);
        for j in 0..s.np {
            let row: Vec<String> = (0..s.nq).map(|i| format!("{:e}", self.values[(j, i)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut header = |what: &str| -> Result<(f64, f64, usize)> {
            let line = lines
                .next()
                .ok_or_else(|| Error::DegenerateGrid(format!("missing {what} header")))?;
            let parts: Vec<&str> = line.trim_start_matches('#').split_whitespace().collect();
            let bad = || Error::DegenerateGrid(format!("malformed {what} header '{line}'"));
            if parts.len() != 3 {
                return Err(bad());
            }
            Ok((
                parts[0].parse().map_err(|_| bad())?,
                parts[1].parse().map_err(|_| bad())?,
                parts[2].parse().map_err(|_| bad())?,
            ))
        };
        let (qmin, qmax, nq) = header("q")?;
        let (pmin, pmax, np) = header("p")?;
        let spec = GridSpec {
            qmin,
            qmax,
            nq,
            pmin,
            pmax,
            np,
        };
        spec.validate()?;
        let mut values = Vec::with_capacity(nq * np);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            for tok in line.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::DegenerateGrid(format!("bad value '{tok}'")))?,
                );
            }
        }
        if values.len() != nq * np {
            return Err(Error::DegenerateGrid(format!(
                "expected {} values, found {}",
                nq * np,
                values.len()
            )));
        }
        Ok(WignerGrid {
            spec,
            values: DMatrix::from_row_slice(np, nq, &values),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<f64> = (0..self.spec.np)
            .flat_map(|j| (0..self.spec.nq).map(move |i| (j, i)))
            .map(|(j, i)| self.values[(j, i)])
            .collect();
        Ok(serde_json::to_string(&GridJson {
            spec: self.spec,
            q: self.spec.q_axis(),
            p: self.spec.p_axis(),
            values: rows,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: GridJson = serde_json::from_str(text)?;
        g.spec.validate()?;
        if g.values.len() != g.spec.nq * g.spec.np {
            return Err(Error::DegenerateGrid("value count does not match axes".into()));
        }
        Ok(WignerGrid {
            spec: g.spec,
            values: DMatrix::from_row_slice(g.spec.np, g.spec.nq, &g.values),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn single_mode(n: usize) -> Result<()> {
    if n != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: n });
    }
    Ok(())
}

impl GaussianWigner {
    pub fn eval_grid(&self, spec: GridSpec) -> Result<WignerGrid> {
        single_mode(self.num_modes())?;
        WignerGrid::from_fn(spec, |q, p| self.eval(&[q, p]))
    }
}

impl ComplexGaussian {
    /// Complex samples, same layout as [`WignerGrid`].
    pub fn eval_grid(&self, spec: GridSpec) -> Result<nalgebra::DMatrix<num_complex::Complex64>> {
        single_mode(self.num_modes())?;
        spec.validate()?;
        Ok(DMatrix::from_fn(spec.np, spec.nq, |j, i| self.eval(&[spec.q(i), spec.p(j)])))
    }
}

impl SuperpositionState {
    pub fn eval_grid(&self, spec: GridSpec) -> Result<WignerGrid> {
        single_mode(self.num_modes())?;
        WignerGrid::from_fn(spec, |q, p| self.eval(&[q, p]))
    }
}
