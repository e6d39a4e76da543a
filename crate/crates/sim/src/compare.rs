//! Errors of a written trajectory against the closed-form advection
//! solution, and convergence rates over a refinement family.

use std::collections::BTreeMap;
use std::path::Path;

use hydrate_core::{AdvectionScenario, Grid};

use crate::error::{Result, SimError};

/// Two times closer than this (relative to `max(1, |t|)`) are the same knot.
pub const TIME_MATCH: f64 = 1e-9;

/// Cell fields of one knot read back from a trajectory file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshot {
    pub u: Vec<f64>,
    pub chi: Vec<f64>,
    pub saturation: Vec<f64>,
    pub p_star: Vec<f64>,
    pub q: Option<f64>,
}

/// A trajectory file: cell centers and the written knots in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub centers: Vec<f64>,
    pub knots: Vec<(f64, Snapshot)>,
}

fn malformed(path: &Path, message: impl Into<String>) -> SimError {
    SimError::Trajectory { path: path.to_path_buf(), message: message.into() }
}

impl TrajectoryTable {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text).map_err(|m| malformed(path, m))
    }

    /// Parses the long `t,x,variable,value` format.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| e.to_string())?;
        if header != vec!["t", "x", "variable", "value"] {
            return Err(format!("expected header t,x,variable,value, found {}", header.iter().collect::<Vec<_>>().join(",")));
        }
        let real = |s: &str, what: &str| s.parse::<f64>().map_err(|_| format!("bad {what} {s:?}"));
        let mut knots: Vec<(f64, Snapshot)> = Vec::new();
        let mut centers: Option<Vec<f64>> = None;
        let mut current_x: Vec<f64> = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| e.to_string())?;
            if row.len() != 4 {
                return Err(format!("line {}: expected 4 fields", row.position().map_or(0, |p| p.line())));
            }
            let t = real(&row[0], "time")?;
            let value = real(&row[3], "value")?;
            if knots.last().is_none_or(|(tk, _)| *tk != t) {
                if knots.last().is_some_and(|(tk, _)| *tk > t) {
                    return Err(format!("times are not increasing at t = {t}"));
                }
                if !knots.is_empty() {
                    Self::check_centers(&mut centers, &current_x)?;
                }
                current_x.clear();
                knots.push((t, Snapshot::default()));
            }
            let snap = &mut knots.last_mut().expect("pushed above").1;
            let target = match &row[2] {
                "u" => &mut snap.u,
                "chi" => &mut snap.chi,
                "S" => &mut snap.saturation,
                "p_star" => &mut snap.p_star,
                "q" => {
                    snap.q = Some(value);
                    continue;
                }
                other => return Err(format!("unknown variable {other:?}")),
            };
            let x = real(&row[1], "position")?;
            if &row[2] == "u" {
                current_x.push(x);
            }
            target.push(value);
        }
        if knots.is_empty() {
            return Err("no records".into());
        }
        Self::check_centers(&mut centers, &current_x)?;
        let centers = centers.expect("checked above");
        for (t, s) in &knots {
            let n = centers.len();
            if s.u.len() != n || s.chi.len() != n || s.saturation.len() != n || !(s.p_star.is_empty() || s.p_star.len() == n) {
                return Err(format!("incomplete fields at t = {t}"));
            }
        }
        Ok(Self { centers, knots })
    }

    fn check_centers(centers: &mut Option<Vec<f64>>, xs: &[f64]) -> std::result::Result<(), String> {
        match centers {
            None => *centers = Some(xs.to_vec()),
            Some(c) if c.as_slice() == xs => {}
            Some(_) => return Err("cell centers differ between knots".into()),
        }
        Ok(())
    }

    /// Uniform grid with the given domain whose centers match the file.
    pub fn grid_on(&self, x_left: f64, x_right: f64) -> Result<Grid> {
        let grid = Grid::new(x_left, x_right, self.centers.len())?;
        let tol = 1e-9 * grid.h();
        if grid.centers().zip(&self.centers).all(|(a, b)| (a - b).abs() <= tol) {
            Ok(grid)
        } else {
            Err(SimError::GridMismatch)
        }
    }

    /// Knot whose time matches `t`.
    pub fn at(&self, t: f64) -> Result<&Snapshot> {
        let tol = TIME_MATCH * t.abs().max(1.0);
        self.knots
            .iter()
            .find(|(tk, _)| (tk - t).abs() <= tol)
            .map(|(_, s)| s)
            .ok_or(SimError::TimeNotFound(t))
    }

    pub fn times(&self) -> Vec<f64> {
        self.knots.iter().map(|(t, _)| *t).collect()
    }
}

/// How cells outside the oracle's validity window are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Every compared cell must be valid, else `OutsideValidity`.
    Strict,
    /// Cells outside the window are skipped.
    ValidOnly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub linf: f64,
}

/// Errors at one time, over the compared cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub t: f64,
    pub cells: usize,
    /// Compared subinterval `[first center, last center]`.
    pub span: Option<(f64, f64)>,
    pub u: Norms,
    pub chi: Norms,
    pub saturation: Norms,
}

/// Compares the knot at `t` with the oracle at the cell centers in `[0, D_max]`.
pub fn compare_at(
    table: &TrajectoryTable,
    grid: &Grid,
    oracle: &AdvectionScenario,
    t: f64,
    window: Window,
) -> Result<ErrorRow> {
    let snap = table.at(t)?;
    let h = grid.h();
    let mut row = ErrorRow { t, cells: 0, span: None, u: Norms::default(), chi: Norms::default(), saturation: Norms::default() };
    for (i, x) in grid.centers().enumerate() {
        if x < 0.0 || x > oracle.d_max {
            continue;
        }
        if !oracle.is_valid(x, t) {
            match window {
                Window::Strict => return Err(SimError::OutsideValidity { x, t }),
                Window::ValidOnly => continue,
            }
        }
        let exact = [oracle.content(x, t)?, oracle.chi(x, t)?, oracle.saturation(x, t)?];
        let got = [snap.u[i], snap.chi[i], snap.saturation[i]];
        for (norms, (e, g)) in [&mut row.u, &mut row.chi, &mut row.saturation].into_iter().zip(exact.iter().zip(got)) {
            let d = (e - g).abs();
            norms.l1 += h * d;
            norms.linf = norms.linf.max(d);
        }
        row.cells += 1;
        row.span = Some(row.span.map_or((x, x), |(a, _)| (a, x)));
    }
    Ok(row)
}

/// Successive error ratios `e_k / e_{k+1}` and observed orders
/// `log(e_k/e_{k+1}) / log(h_k/h_{k+1})` for a refinement family given as
/// `(h, error)` pairs from coarse to fine.
pub fn convergence_rates(family: &[(f64, f64)]) -> Vec<(f64, f64)> {
    family
        .windows(2)
        .map(|w| {
            let ratio = w[0].1 / w[1].1;
            (ratio, ratio.ln() / (w[0].0 / w[1].0).ln())
        })
        .collect()
}

/// Errors of each trajectory of a family at one time, keyed by cell count.
pub fn family_errors(
    tables: &[TrajectoryTable],
    x_left: f64,
    x_right: f64,
    oracle: &AdvectionScenario,
    t: f64,
    window: Window,
) -> Result<BTreeMap<usize, ErrorRow>> {
    tables
        .iter()
        .map(|table| {
            let grid = table.grid_on(x_left, x_right)?;
            Ok((grid.len(), compare_at(table, &grid, oracle, t, window)?))
        })
        .collect()
}
