use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use super::dsep::backdoor_admissible;
use super::{CausalDag, CausalError, TrajectoryTable};

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedEstimate {
    /// Bin of the intervened variable.
    pub x: usize,
    /// Bin of the outcome.
    pub y: usize,
    /// `Σ_z P(y | x, z) P(z)` over the strata observed together with `x`.
    pub estimate: f64,
    /// Delta-method standard error of the plug-in estimate.
    pub std_error: f64,
    /// Rows with `X = x`.
    pub support: usize,
    /// Strata with `P(z) > 0` but no row at `X = x`; they are left out of the
    /// sum rather than imputed.
    pub unsupported: Vec<Vec<usize>>,
    /// Total `P(z)` of the unsupported strata.
    pub unsupported_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adjustment {
    pub x: String,
    pub y: String,
    pub z: Vec<String>,
    pub estimates: Vec<AdjustedEstimate>,
}

impl Adjustment {
    pub fn get(&self, x: usize, y: usize) -> Option<&AdjustedEstimate> {
        self.estimates.iter().find(|e| e.x == x && e.y == y)
    }
}

fn column(table: &TrajectoryTable, name: &str) -> Result<usize, CausalError> {
    table
        .column(name)
        .ok_or_else(|| CausalError::UnknownNode(name.to_string()))
}

/// Back-door adjustment `P(Y = y | do(X = x))` for every observed `x` and
/// `y`, with empirical frequencies from the table.
pub fn adjust(
    table: &TrajectoryTable,
    dag: &CausalDag,
    x: &str,
    y: &str,
    z: &[&str],
) -> Result<Adjustment, CausalError> {
    if !backdoor_admissible(dag, &[x], &[y], z)? {
        return Err(CausalError::InadmissibleSet(format!("{{{}}}", z.join(", "))));
    }
    let cx = column(table, x)?;
    let cy = column(table, y)?;
    let cz: Vec<usize> = z.iter().map(|n| column(table, n)).collect::<Result<_, _>>()?;

    let mut n_z: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut n_xz: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
    let mut n_xzy: BTreeMap<(usize, Vec<usize>, usize), usize> = BTreeMap::new();
    let mut n_x: BTreeMap<usize, usize> = BTreeMap::new();
    let mut ys = BTreeSet::new();
    for row in table.rows() {
        let zv: Vec<usize> = cz.iter().map(|&c| row[c]).collect();
        let (xv, yv) = (row[cx], row[cy]);
        *n_z.entry(zv.clone()).or_default() += 1;
        *n_xz.entry((xv, zv.clone())).or_default() += 1;
        *n_xzy.entry((xv, zv, yv)).or_default() += 1;
        *n_x.entry(xv).or_default() += 1;
        ys.insert(yv);
    }
    let total = table.len() as f64;
    let mut estimates = Vec::new();
    for (&xv, &support) in &n_x {
        for &yv in &ys {
            let mut estimate = 0.0;
            let mut var_p = 0.0;
            let mut second = 0.0;
            let mut unsupported = Vec::new();
            let mut unsupported_mass = 0.0;
            for (zv, &nz) in &n_z {
                let q = nz as f64 / total;
                let Some(&nxz) = n_xz.get(&(xv, zv.clone())) else {
                    unsupported.push(zv.clone());
                    unsupported_mass += q;
                    continue;
                };
                let nxzy = n_xzy.get(&(xv, zv.clone(), yv)).copied().unwrap_or(0);
                let p = nxzy as f64 / nxz as f64;
                estimate += p * q;
                var_p += q * q * p * (1.0 - p) / nxz as f64;
                second += q * p * p;
            }
            let var_q = (second - estimate * estimate).max(0.0) / total;
            estimates.push(AdjustedEstimate {
                x: xv,
                y: yv,
                estimate,
                std_error: (var_p + var_q).sqrt(),
                support,
                unsupported,
                unsupported_mass,
            });
        }
    }
    Ok(Adjustment {
        x: x.to_string(),
        y: y.to_string(),
        z: z.iter().map(|s| s.to_string()).collect(),
        estimates,
    })
}

/// Empirical `P(Y = y | X = x)` as `(x, y, p)` for every observed pair of bins.
pub fn conditional(table: &TrajectoryTable, x: &str, y: &str) -> Result<Vec<(usize, usize, f64)>, CausalError> {
    let (cx, cy) = (column(table, x)?, column(table, y)?);
    let mut n_x: BTreeMap<usize, usize> = BTreeMap::new();
    let mut n_xy: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut ys = BTreeSet::new();
    for row in table.rows() {
        *n_x.entry(row[cx]).or_default() += 1;
        *n_xy.entry((row[cx], row[cy])).or_default() += 1;
        ys.insert(row[cy]);
    }
    let mut out = Vec::new();
    for (&xv, &nx) in &n_x {
        for &yv in &ys {
            let nxy = n_xy.get(&(xv, yv)).copied().unwrap_or(0);
            out.push((xv, yv, nxy as f64 / nx as f64));
        }
    }
    Ok(out)
}

/// `stratum,y,estimate,std_error,support,unsupported_strata`, where the
/// stratum is `X=<bin>`.
pub fn write_adjustment_csv<W: Write>(adj: &Adjustment, mut out: W) -> std::io::Result<()> {
    writeln!(out, "stratum,y,estimate,std_error,support,unsupported_strata")?;
    for e in &adj.estimates {
        writeln!(
            out,
            "{}={},{}={},{},{},{},{}",
            adj.x,
            e.x,
            adj.y,
            e.y,
            e.estimate,
            e.std_error,
            e.support,
            e.unsupported.len()
        )?;
    }
    Ok(())
}
