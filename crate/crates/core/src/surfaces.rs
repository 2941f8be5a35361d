//! Numeric grids behind the explanatory figures: the surrogate `ν` gradient
//! against `w_mv`, and the `τ_mv` and `ν̃`-increment surfaces over `(ν̃, D)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tdist::{grad_nu_surrogate_pre, grad_nu_tilde_surrogate, w_nu_floor_ceiling, w_nu_of};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Fig1,
    TauSurface,
    DofIncrementSurface,
}

impl GridKind {
    pub const ALL: [GridKind; 3] = [Self::Fig1, Self::TauSurface, Self::DofIncrementSurface];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::TauSurface => "tau-surface",
            Self::DofIncrementSurface => "dof-increment-surface",
        }
    }
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_'], "");
        Self::ALL
            .into_iter()
            .find(|k| k.name().replace('-', "") == key)
            .ok_or_else(|| {
                Error::param(format!(
                    "unknown surface `{s}` (expected fig1, tau-surface or dof-increment-surface)"
                ))
            })
    }
}

/// Closed interval sampled at `points` locations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub log: bool,
}

impl Axis {
    pub fn linear(min: f64, max: f64, points: usize) -> Self {
        Self {
            min,
            max,
            points,
            log: false,
        }
    }

    pub fn log(min: f64, max: f64, points: usize) -> Self {
        Self {
            min,
            max,
            points,
            log: true,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.points < 2 {
            return Err(Error::param(format!("{name} axis needs at least 2 points")));
        }
        if !(self.min < self.max && self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::param(format!("{name} axis range [{}, {}] is empty", self.min, self.max)));
        }
        if self.log && self.min <= 0.0 {
            return Err(Error::param(format!("{name} axis is log-spaced but starts at {}", self.min)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..=n)
            .map(|i| {
                let f = i as f64 / n as f64;
                if i == 0 {
                    self.min
                } else if i == n {
                    self.max
                } else if self.log {
                    (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + f * (self.max - self.min)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub kind: GridKind,
    /// `w_mv` for Fig1, `ν̃` for the surfaces.
    pub first: Axis,
    /// `D` for the surfaces; unused by Fig1.
    pub second: Axis,
    /// Dimensions for Fig1 (evaluated with `ν = d`).
    pub dims: Vec<usize>,
    pub beta: f64,
    pub nu_tilde_min: f64,
}

impl GridSpec {
    pub fn new(kind: GridKind) -> Self {
        let first = match kind {
            GridKind::Fig1 => Axis::log(1e-6, 2.0, 400),
            _ => Axis::linear(1.0, 100.0, 100),
        };
        Self {
            kind,
            first,
            second: Axis::linear(0.0, 100.0, 101),
            dims: vec![1, 10, 100, 1000, 10_000],
            beta: 0.9,
            nu_tilde_min: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.first.validate("first")?;
        match self.kind {
            GridKind::Fig1 => {
                if self.first.min <= 0.0 {
                    return Err(Error::param("w_mv axis must be positive"));
                }
                if self.dims.is_empty() || self.dims.contains(&0) {
                    return Err(Error::param("Fig1 needs a non-empty list of positive dimensions"));
                }
            }
            _ => {
                self.second.validate("second")?;
                if self.first.min <= 0.0 || self.second.min < 0.0 {
                    return Err(Error::param("surfaces need ν̃ > 0 and D ≥ 0"));
                }
                if !(self.beta > 0.0 && self.beta < 1.0) {
                    return Err(Error::param(format!("beta {} outside (0, 1)", self.beta)));
                }
            }
        }
        Ok(())
    }
}

/// Emitted grid: a header and row-major rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub columns: [&'static str; 3],
    pub rows: Vec<[f64; 3]>,
}

impl Grid {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|x| format!("{x:e}")))?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))
    }

    /// Rows whose first column equals `key`.
    pub fn slice(&self, key: f64) -> impl Iterator<Item = &[f64; 3]> {
        self.rows.iter().filter(move |r| r[0] == key)
    }
}

/// `τ_mv = (1 − β) w_mv / w̄_mv = (1 − β) ν̃/(ν̃ + D)`.
pub fn tau_mv(nu_tilde: f64, deviation: f64, beta: f64) -> f64 {
    (1.0 - beta) * nu_tilde / (nu_tilde + deviation)
}

/// `κ_Δν̃ · g_ν̃`, the gradient-form part of one `ν̃` step. The dimension
/// cancels between the two factors, so `d = 1` is used.
pub fn dof_increment(nu_tilde: f64, deviation: f64, beta: f64, nu_tilde_min: f64) -> Result<f64> {
    let w_mv = (nu_tilde + 1.0) / (nu_tilde + deviation);
    let w_bar = w_nu_of((nu_tilde + 1.0) / nu_tilde).max(w_nu_floor_ceiling());
    let kappa = 2.0 * (nu_tilde - nu_tilde_min) * (1.0 - beta) / w_bar;
    Ok(kappa * grad_nu_tilde_surrogate(nu_tilde, 1, w_mv)?)
}

pub fn emit_grid(spec: &GridSpec) -> Result<Grid> {
    spec.validate()?;
    let mut rows = Vec::new();
    let columns = match spec.kind {
        GridKind::Fig1 => {
            let ws = spec.first.values();
            for &d in &spec.dims {
                for &w in &ws {
                    rows.push([d as f64, w, grad_nu_surrogate_pre(d as f64, d, w)?]);
                }
            }
            ["d", "w_mv", "grad_nu_surrogate"]
        }
        GridKind::TauSurface | GridKind::DofIncrementSurface => {
            let ds = spec.second.values();
            for nu in spec.first.values() {
                for &dev in &ds {
                    let value = if spec.kind == GridKind::TauSurface {
                        tau_mv(nu, dev, spec.beta)
                    } else {
                        dof_increment(nu, dev, spec.beta, spec.nu_tilde_min)?
                    };
                    rows.push([nu, dev, value]);
                }
            }
            if spec.kind == GridKind::TauSurface {
                ["nu_tilde", "deviation", "tau_mv"]
            } else {
                ["nu_tilde", "deviation", "kappa_g_nu_tilde"]
            }
        }
    };
    Ok(Grid { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_unit_dimension_at_unit_weight() {
        let mut spec = GridSpec::new(GridKind::Fig1);
        spec.dims = vec![1];
        spec.first = Axis::linear(0.5, 1.0, 2);
        let grid = emit_grid(&spec).unwrap();
        assert!((grid.rows[1][2] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn fig1_axis_is_log_spaced_and_row_major() {
        let grid = emit_grid(&GridSpec::new(GridKind::Fig1)).unwrap();
        assert_eq!(grid.rows.len(), 5 * 400);
        assert_eq!(grid.rows[0][1], 1e-6);
        assert_eq!(grid.rows[399][1], 2.0);
        assert_eq!(grid.rows[400][0], 10.0);
        let ratio = grid.rows[2][1] / grid.rows[1][1];
        assert!((ratio - grid.rows[1][1] / grid.rows[0][1]).abs() < 1e-9);
    }

    #[test]
    fn tau_surface_is_one_minus_beta_at_zero_deviation() {
        let grid = emit_grid(&GridSpec::new(GridKind::TauSurface)).unwrap();
        for r in &grid.rows {
            assert!(r[2] > 0.0 && r[2] <= 0.1 + 1e-16);
            if r[1] == 0.0 {
                assert!((r[2] - 0.1).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn dof_increment_changes_sign() {
        let mut spec = GridSpec::new(GridKind::DofIncrementSurface);
        spec.first = Axis::linear(1.0, 2.0, 3);
        let grid = emit_grid(&spec).unwrap();
        let at = |d: f64| grid.slice(1.5).find(|r| r[1] == d).unwrap()[2];
        assert!(at(0.0) > 0.0);
        assert!(at(100.0) < 0.0);
        assert!(grid.slice(1.0).all(|r| r[2] == 0.0));
    }

    #[test]
    fn invalid_specs_and_names() {
        let mut spec = GridSpec::new(GridKind::TauSurface);
        spec.second.points = 1;
        assert!(emit_grid(&spec).is_err());
        let mut spec = GridSpec::new(GridKind::Fig1);
        spec.first.min = 0.0;
        assert!(emit_grid(&spec).is_err());
        for k in GridKind::ALL {
            assert_eq!(k.name().parse::<GridKind>().unwrap(), k);
        }
        assert_eq!("tau_surface".parse::<GridKind>().unwrap(), GridKind::TauSurface);
        assert!("fig2".parse::<GridKind>().is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let mut spec = GridSpec::new(GridKind::TauSurface);
        spec.first = Axis::linear(1.0, 2.0, 2);
        spec.second = Axis::linear(0.0, 1.0, 2);
        let mut buf = Vec::new();
        emit_grid(&spec).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "nu_tilde,deviation,tau_mv");
        assert_eq!(lines.len(), 5);
    }
}
