//! Parameter sweeps over (k, l) ranked by discretized eigenvalue, and the
//! spectrum table over a list of exponents t.

use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::complexmaps::SlitBlock;
use crate::error::{Error, Result};
use crate::operator::{
    assemble_p_matrix, certify_lower_bound, critical_radius, fit_rational, power_iteration,
    CertificateMode, RationalTestFunction, SpectrumParams,
};

/// One (k, l) cell of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub k: u32,
    pub l: f64,
    pub s: f64,
    pub t: f64,
    /// log_k of the dominant eigenvalue; None when the cell failed.
    pub log_lambda: Option<f64>,
    pub n_grid: usize,
    pub m_angles: usize,
    pub r_max: Option<f64>,
    pub wall_ms: u64,
    pub note: Option<String>,
}

/// Sweep output: cells sorted descending by log_k λ, failures last.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    /// Rank (0-based) of a cell among successful ones; None if absent/failed.
    pub fn rank_of(&self, k: u32, l: f64) -> Option<usize> {
        self.cells
            .iter()
            .filter(|c| c.log_lambda.is_some())
            .position(|c| c.k == k && (c.l - l).abs() < 1e-12)
    }
}

/// Coarse eigenvalue ranking over a (k, l) grid at fixed (s, t).
pub fn sweep(
    k_values: &[u32],
    l_values: &[f64],
    s: f64,
    t: f64,
    n_grid: usize,
    m_angles: usize,
) -> Result<SweepResult> {
    if k_values.is_empty() || l_values.is_empty() {
        return Err(Error::InvalidConfig("empty sweep ranges".into()));
    }
    let mut cells = Vec::new();
    for &k in k_values {
        for &l in l_values {
            let start = Instant::now();
            let cell = sweep_cell(k, l, s, t, n_grid, m_angles);
            let wall_ms = start.elapsed().as_millis() as u64;
            cells.push(match cell {
                Ok((log_lambda, r_max)) => SweepCell {
                    k,
                    l,
                    s,
                    t,
                    log_lambda: Some(log_lambda),
                    n_grid,
                    m_angles,
                    r_max: Some(r_max),
                    wall_ms,
                    note: None,
                },
                Err(e) => SweepCell {
                    k,
                    l,
                    s,
                    t,
                    log_lambda: None,
                    n_grid,
                    m_angles,
                    r_max: None,
                    wall_ms,
                    note: Some(e.to_string()),
                },
            });
        }
    }
    cells.sort_by(|a, b| {
        b.log_lambda
            .unwrap_or(f64::NEG_INFINITY)
            .partial_cmp(&a.log_lambda.unwrap_or(f64::NEG_INFINITY))
            .unwrap()
    });
    Ok(SweepResult { cells })
}

fn sweep_cell(
    k: u32,
    l: f64,
    s: f64,
    t: f64,
    n_grid: usize,
    m_angles: usize,
) -> Result<(f64, f64)> {
    let block = SlitBlock::new(l, s)?;
    let r_max = critical_radius(&block, k)?;
    let params = SpectrumParams::new(t, k)?;
    let op = assemble_p_matrix(&block, &params, n_grid, m_angles, r_max)?;
    let eig = power_iteration(&op, 1e-10, 100_000)?;
    Ok((eig.log_lambda(k), r_max))
}

/// How the test function for each spectrum-table row is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuStrategy {
    /// Refit a degree-(5,1) rational to each t's eigenvector.
    RefitPerT,
    /// Use the hand-fitted reference ν for every row.
    Reference,
}

/// One row of the spectrum table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub t: f64,
    pub log_lambda: Option<f64>,
    /// Heuristic lower bound on β̄(t); 0 when no positive bound was found.
    pub bound: f64,
    /// t²/4 reference curve.
    pub reference: f64,
    /// Literature upper bound, if supplied by the caller.
    pub upper: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub k: u32,
    pub l: f64,
    pub s: f64,
    pub rows: Vec<SpectrumRow>,
}

/// Eigenvalue plus test-function lower bound for each t in `t_values`.
#[allow(clippy::too_many_arguments)]
pub fn spectrum_table(
    block: &SlitBlock,
    k: u32,
    t_values: &[f64],
    n_grid: usize,
    m_angles: usize,
    strategy: NuStrategy,
    bound_points: usize,
    upper_bounds: Option<&[f64]>,
) -> Result<SpectrumTable> {
    if let Some(u) = upper_bounds {
        if u.len() != t_values.len() {
            return Err(Error::InvalidConfig(
                "upper-bound column length must match t list".into(),
            ));
        }
    }
    let r_max = critical_radius(block, k)?;
    let mut rows = Vec::with_capacity(t_values.len());
    for (i, &t) in t_values.iter().enumerate() {
        let upper = upper_bounds.map(|u| u[i]);
        let row = match spectrum_row(block, k, t, n_grid, m_angles, strategy, bound_points, r_max)
        {
            Ok((log_lambda, bound, note)) => SpectrumRow {
                t,
                log_lambda: Some(log_lambda),
                bound,
                reference: t * t / 4.0,
                upper,
                note,
            },
            Err(e) => SpectrumRow {
                t,
                log_lambda: None,
                bound: 0.0,
                reference: t * t / 4.0,
                upper,
                note: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(SpectrumTable { k, l: block.l, s: block.s, rows })
}

#[allow(clippy::too_many_arguments)]
fn spectrum_row(
    block: &SlitBlock,
    k: u32,
    t: f64,
    n_grid: usize,
    m_angles: usize,
    strategy: NuStrategy,
    bound_points: usize,
    r_max: f64,
) -> Result<(f64, f64, Option<String>)> {
    let params = SpectrumParams::new(t, k)?;
    let op = assemble_p_matrix(block, &params, n_grid, m_angles, r_max)?;
    let eig = power_iteration(&op, 1e-10, 100_000)?;
    let log_lambda = eig.log_lambda(k);
    let nu: Result<RationalTestFunction> = match strategy {
        NuStrategy::Reference => Ok(RationalTestFunction::reference()),
        NuStrategy::RefitPerT => fit_rational(&eig, &op.grid),
    };
    let (bound, note) = match nu {
        Ok(nu) => {
            match certify_lower_bound(block, &params, &nu, r_max, bound_points, CertificateMode::Heuristic)
            {
                Ok(cert) if cert.beta_lower > 0.0 => (cert.beta_lower, None),
                Ok(cert) => (0.0, Some(format!("bound not positive ({:.4})", cert.beta_lower))),
                Err(e) => (0.0, Some(format!("no positive bound: {e}"))),
            }
        }
        Err(e) => (0.0, Some(format!("fit failed: {e}"))),
    };
    Ok((log_lambda, bound, note))
}
