//! Posterior means of the box kernels along a 1-D grid.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use treeucb_core::gp::{self, SmoothingCurves};
use treeucb_core::partition::Partition;

use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct GpDemoArgs {
    /// Partition JSON; the built-in demo partition when omitted
    #[arg(long, value_name = "FILE")]
    pub partition: Option<PathBuf>,
    /// CSV of training data, one row per point: coordinates then target
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Soft-kernel sharpness values
    #[arg(long, value_name = "LIST", default_value = "10,50,100,500,1000")]
    pub alpha: String,
    /// Observation noise variance
    #[arg(long, value_name = "X", default_value_t = 0.01)]
    pub noise: f64,
    /// Number of query points
    #[arg(long, value_name = "N", default_value_t = 512)]
    pub grid: usize,
    #[arg(long, value_name = "FILE", default_value = "curves.csv")]
    pub out: PathBuf,
}

/// Reads `x1,...,xd,y` rows; a non-numeric first line is taken as a header.
pub fn read_data(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match row {
            Ok(mut row) if row.len() >= 2 => {
                ys.push(row.pop().expect("nonempty row"));
                xs.push(row);
            }
            Err(_) if no == 0 => continue,
            _ => return Err(CliError::Config(format!("{} line {}: expected x1,...,xd,y", path.display(), no + 1))),
        }
    }
    Ok((xs, ys))
}

pub fn curves_csv(curves: &SmoothingCurves) -> String {
    let mut out = String::from("x,tree_mean,gp_hard");
    for (alpha, _) in &curves.soft {
        out.push_str(&format!(",gp_soft_{alpha}"));
    }
    out.push('\n');
    for (i, q) in curves.query.iter().enumerate() {
        out.push_str(&format!("{},{},{}", q[0], curves.tree[i], curves.hard[i]));
        for (_, means) in &curves.soft {
            out.push_str(&format!(",{}", means[i]));
        }
        out.push('\n');
    }
    out
}

/// Writes the curves and returns the diagnostic text.
pub fn gp_demo(args: &GpDemoArgs) -> Result<String, CliError> {
    let cfg = |e: &dyn std::fmt::Display| CliError::Config(e.to_string());
    let alphas: Vec<f64> = args
        .alpha
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| cfg(&format!("invalid alpha '{v}': {e}"))))
        .collect::<Result<_, _>>()?;
    let (demo_partition, demo_x, demo_y) = gp::demo_problem();
    let partition = match &args.partition {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Partition::from_json(&text).map_err(|e| cfg(&e))?
        }
        None => demo_partition,
    };
    let (x, y) = match &args.data {
        Some(path) => read_data(path)?,
        None => (demo_x, demo_y),
    };
    if partition.dims() != 1 {
        return Err(CliError::Config(format!("gp-demo plots 1-D partitions, got {} dimensions", partition.dims())));
    }
    if args.grid < 2 {
        return Err(CliError::Config("--grid must be at least 2".into()));
    }
    let (lo, hi) = (partition.domain().lo()[0], partition.domain().hi()[0]);
    let query: Vec<Vec<f64>> =
        (0..args.grid).map(|i| vec![lo + (hi - lo) * i as f64 / (args.grid - 1) as f64]).collect();
    let curves = gp::smoothing_curves(&partition, &x, &y, args.noise, &alphas, &query).map_err(|e| cfg(&e))?;
    fs::write(&args.out, curves_csv(&curves)).map_err(|e| CliError::io(&args.out, e))?;

    let mut report = format!(
        "wrote {} query points to {}\ntotal variation: tree {:.6}, hard {:.6}\n",
        args.grid,
        args.out.display(),
        gp::total_variation(&curves.tree),
        gp::total_variation(&curves.hard)
    );
    let mut by_alpha: Vec<(f64, f64)> =
        curves.soft.iter().map(|(a, means)| (*a, gp::total_variation(means))).collect();
    for (alpha, tv) in &by_alpha {
        report.push_str(&format!("total variation: soft alpha={alpha} {tv:.6}\n"));
    }
    by_alpha.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotone = by_alpha.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-6);
    report.push_str(&format!(
        "smoothing monotone as alpha decreases: {}\n",
        if monotone { "yes" } else { "no" }
    ));
    Ok(report)
}
