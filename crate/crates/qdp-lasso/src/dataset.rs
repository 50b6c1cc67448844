//! Synthetic sparse-regression data: generation, normalization, persistence.
//!
//! A [`Dataset`] is a design matrix `X` (N rows, d features) and a target
//! vector `y`. Synthetic instances are built as `y = X theta* + noise` with
//! `X` entries uniform on (-1, 1) and a ground-truth `theta*` that has
//! `s_star` nonzero coordinates drawn uniform on (0, 1).
//!
//! Generation returns the raw pair; callers normalize before fitting.
//! Two modes are supported:
//!
//! * [`NormMode::InfNorm`] caps entries: `X` is divided by `max |X_ij|` and
//!   `y` by `max |y_i|` when those maxima exceed 1. The two divisors differ,
//!   so the ground truth is rescaled by their ratio to stay the minimizer
//!   direction.
//! * [`NormMode::Frobenius`] divides `X` by its Frobenius norm and `y` by the
//!   same factor, then divides both again if `max |y_i|` still exceeds 1.
//!   Both steps apply one common factor to `X` and `y`, so `theta*` is
//!   unchanged. This is the mode the private fitters want: their sensitivity
//!   argument needs `||X||_F <= 1` and `||y||_inf <= 1`.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::rng::{Purpose, Stream};

/// Normalization applied to a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// Entrywise caps: `max |X_ij| <= 1`, `max |y_i| <= 1`.
    InfNorm,
    /// `||X||_F <= 1` and `max |y_i| <= 1`.
    Frobenius,
}

impl NormMode {
    /// Token used in file headers and on the command line.
    pub fn token(self) -> &'static str {
        match self {
            NormMode::InfNorm => "inf",
            NormMode::Frobenius => "fro",
        }
    }

    /// Parses a header / CLI token; `None` is spelled "raw".
    pub fn parse(tok: &str) -> Result<Option<NormMode>> {
        match tok {
            "raw" => Ok(None),
            "inf" => Ok(Some(NormMode::InfNorm)),
            "fro" => Ok(Some(NormMode::Frobenius)),
            other => Err(Error::invalid(format!(
                "unknown norm mode '{other}' (expected raw|inf|fro)"
            ))),
        }
    }
}

fn mode_token(mode: Option<NormMode>) -> &'static str {
    mode.map_or("raw", NormMode::token)
}

/// A regression instance. `norm_mode` is `None` until a normalization has
/// been applied.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    norm_mode: Option<NormMode>,
}

impl Dataset {
    /// Builds a dataset after validating shapes and finiteness. When a mode
    /// is declared, the corresponding norm bounds are checked (tolerance
    /// 1e-12).
    pub fn new(x: Array2<f64>, y: Array1<f64>, norm_mode: Option<NormMode>) -> Result<Dataset> {
        let (n, d) = x.dim();
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!("dataset shape {n}x{d} is empty")));
        }
        if y.len() != n {
            return Err(Error::invalid(format!(
                "y has {} entries but X has {n} rows",
                y.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite entries"));
        }
        let ds = Dataset { x, y, norm_mode };
        if let Some(mode) = norm_mode {
            ds.check_norm_bounds(mode)?;
        }
        Ok(ds)
    }

    fn check_norm_bounds(&self, mode: NormMode) -> Result<()> {
        const TOL: f64 = 1e-12;
        let max_y = self.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        match mode {
            NormMode::InfNorm => {
                let max_x = self.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if max_x > 1.0 + TOL || max_y > 1.0 + TOL {
                    return Err(Error::invalid(format!(
                        "inf-norm bounds violated: max|X| = {max_x}, max|y| = {max_y}"
                    )));
                }
            }
            NormMode::Frobenius => {
                let fro = self.frobenius_norm();
                if fro > 1.0 + TOL || max_y > 1.0 + TOL {
                    return Err(Error::invalid(format!(
                        "frobenius bounds violated: ||X||_F = {fro}, max|y| = {max_y}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of samples N.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of features d.
    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Design matrix, N x d.
    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    /// Target vector, length N.
    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    /// Declared normalization, `None` for raw data.
    pub fn norm_mode(&self) -> Option<NormMode> {
        self.norm_mode
    }

    /// Frobenius norm of `X`.
    pub fn frobenius_norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean norm of `y`.
    pub fn y_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest column Euclidean norm of `X`.
    pub fn max_column_norm(&self) -> f64 {
        (0..self.d())
            .map(|j| self.x.column(j).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0f64, f64::max)
    }
}

/// Ground truth behind a synthetic dataset: the (possibly rescaled) target
/// vector, the noise level used at generation, and the cumulative divisors
/// applied to `X` and `y` by normalization.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    theta: Array1<f64>,
    noise_std: f64,
    x_scale: f64,
    y_scale: f64,
}

impl GroundTruth {
    /// Dense ground-truth vector (length d).
    pub fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    /// Number of nonzero coordinates.
    pub fn s_star(&self) -> usize {
        self.theta.iter().filter(|v| **v != 0.0).count()
    }

    /// Noise standard deviation used at generation time.
    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// Cumulative divisor applied to `X`.
    pub fn x_scale(&self) -> f64 {
        self.x_scale
    }

    /// Cumulative divisor applied to `y`.
    pub fn y_scale(&self) -> f64 {
        self.y_scale
    }

    /// `l1` norm of the ground-truth vector; useful to judge whether the
    /// unit ball can represent it.
    pub fn l1_norm(&self) -> f64 {
        self.theta.iter().map(|v| v.abs()).sum()
    }
}

/// Draws a raw synthetic instance: `X` with entries uniform on (-1, 1),
/// `theta*` supported on `s_star` distinct coordinates with values uniform
/// on (0, 1), and `y = X theta* + N(0, noise_std^2)` noise.
///
/// The result is unnormalized (`norm_mode = None`); pass it through
/// [`normalize`] before fitting. Equal seeds give identical pairs.
pub fn generate_synthetic(
    n: usize,
    d: usize,
    s_star: usize,
    seed: u64,
    noise_std: f64,
) -> Result<(Dataset, GroundTruth)> {
    if n == 0 || d == 0 {
        return Err(Error::invalid(format!("requested empty shape {n}x{d}")));
    }
    if s_star == 0 || s_star > d {
        return Err(Error::invalid(format!(
            "s_star = {s_star} must be in 1..=d (d = {d})"
        )));
    }
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(Error::invalid(format!("noise_std = {noise_std} must be >= 0")));
    }

    let mut mat = Stream::new(seed, Purpose::DataMatrix);
    let x = Array2::from_shape_fn((n, d), |_| mat.uniform(-1.0, 1.0));

    // Partial Fisher-Yates over 0..d picks s_star distinct support positions.
    let mut support_rng = Stream::new(seed, Purpose::DataSupport);
    let mut positions: Vec<usize> = (0..d).collect();
    for i in 0..s_star {
        let j = i + support_rng.below((d - i) as u64) as usize;
        positions.swap(i, j);
    }

    let mut values = Stream::new(seed, Purpose::DataValues);
    let mut theta = Array1::zeros(d);
    for &pos in &positions[..s_star] {
        theta[pos] = values.uniform(0.0, 1.0);
    }

    let mut noise = Stream::new(seed, Purpose::DataNoise);
    let mut y = x.dot(&theta);
    if noise_std > 0.0 {
        for v in y.iter_mut() {
            *v += noise_std * noise.normal();
        }
    }

    let ds = Dataset::new(x, y, None)?;
    let gt = GroundTruth {
        theta,
        noise_std,
        x_scale: 1.0,
        y_scale: 1.0,
    };
    Ok((ds, gt))
}

/// Normalizes a dataset in the requested mode and rescales the ground truth
/// so it stays the minimizer direction of the scaled problem.
///
/// InfNorm divides `X` by `max(1, max|X_ij|)` and `y` by `max(1, max|y_i|)`;
/// the ground truth is multiplied by the ratio of the two divisors.
/// Frobenius divides `X` by `||X||_F` (an all-zero `X` is an error), applies
/// the same divisor to `y`, and then divides both by `max|y_i|` if that still
/// exceeds 1; common factors leave the ground truth untouched.
pub fn normalize(
    ds: Dataset,
    gt: GroundTruth,
    mode: NormMode,
) -> Result<(Dataset, GroundTruth)> {
    let Dataset { mut x, mut y, .. } = ds;
    let (cx, cy) = match mode {
        NormMode::InfNorm => {
            let max_x = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let max_y = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (max_x.max(1.0), max_y.max(1.0))
        }
        NormMode::Frobenius => {
            let fro = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if fro == 0.0 {
                return Err(Error::degenerate(
                    "all-zero X cannot be Frobenius-normalized",
                ));
            }
            let max_y_after = y.iter().fold(0.0f64, |m, v| m.max(v.abs())) / fro;
            let common = fro * max_y_after.max(1.0);
            (common, common)
        }
    };
    x.mapv_inplace(|v| v / cx);
    y.mapv_inplace(|v| v / cy);

    let mut theta = gt.theta;
    if cx != cy {
        theta.mapv_inplace(|v| v * cx / cy);
    }
    let out_gt = GroundTruth {
        theta,
        noise_std: gt.noise_std,
        x_scale: gt.x_scale * cx,
        y_scale: gt.y_scale * cy,
    };
    let out_ds = Dataset::new(x, y, Some(mode))?;
    Ok((out_ds, out_gt))
}

/// Relative reconstruction error `||theta_p - theta*||_2 / ||theta*||_2`.
pub fn reconstruction_error(theta_p: &Array1<f64>, gt: &GroundTruth) -> Result<f64> {
    if theta_p.len() != gt.theta.len() {
        return Err(Error::invalid(format!(
            "estimate has {} coordinates, ground truth has {}",
            theta_p.len(),
            gt.theta.len()
        )));
    }
    let denom = gt.theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(Error::degenerate(
            "ground truth is the zero vector; relative error undefined",
        ));
    }
    let num = theta_p
        .iter()
        .zip(gt.theta.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}

// ----- persistence ---------------------------------------------------------
//
// Dataset file: line 1 is "n,d,norm_mode" values; N rows of d floats for X;
// one row of N floats for y. Ground-truth file: line 1 is "d,s_star"; one
// "index,value" row per nonzero. Floats are written in shortest round-trip
// form, so save/load is bit-exact.

/// Writes a dataset in the documented CSV layout.
pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{},{},{}", ds.n(), ds.d(), mode_token(ds.norm_mode));
    for row in ds.x.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    let yline: Vec<String> = ds.y.iter().map(|v| format!("{v}")).collect();
    let _ = writeln!(out, "{}", yline.join(","));
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a dataset written by [`save_dataset`], re-validating shape and any
/// declared norm bounds.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let shown = path.display().to_string();
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(&shown, "empty file"))?;
    let parts: Vec<&str> = header.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::parse(
            &shown,
            format!("header '{header}' is not n,d,norm_mode"),
        ));
    }
    let n: usize = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::parse(&shown, format!("bad n '{}'", parts[0])))?;
    let d: usize = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::parse(&shown, format!("bad d '{}'", parts[1])))?;
    if n == 0 || d == 0 {
        return Err(Error::parse(&shown, format!("empty shape {n}x{d} in header")));
    }
    let mode = NormMode::parse(parts[2].trim())?;

    let mut x = Array2::zeros((n, d));
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::parse(&shown, format!("missing X row {i}")))?;
        let row = parse_float_row(line, &shown, &format!("X row {i}"))?;
        if row.len() != d {
            return Err(Error::parse(
                &shown,
                format!("X row {i} has {} values, expected {d}", row.len()),
            ));
        }
        for (j, v) in row.into_iter().enumerate() {
            x[[i, j]] = v;
        }
    }
    let yline = lines
        .next()
        .ok_or_else(|| Error::parse(&shown, "missing y row"))?;
    let yvals = parse_float_row(yline, &shown, "y row")?;
    if yvals.len() != n {
        return Err(Error::parse(
            &shown,
            format!("y row has {} values, expected {n}", yvals.len()),
        ));
    }
    Dataset::new(x, Array1::from(yvals), mode)
}

/// Writes ground truth as its nonzero support.
pub fn save_ground_truth(gt: &GroundTruth, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{},{}", gt.theta.len(), gt.s_star());
    for (idx, v) in gt.theta.iter().enumerate() {
        if *v != 0.0 {
            let _ = writeln!(out, "{idx},{v}");
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a ground-truth support file. Only the vector itself is persisted;
/// noise level and scale factors load as their neutral values.
pub fn load_ground_truth(path: &Path) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path)?;
    let shown = path.display().to_string();
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(&shown, "empty file"))?;
    let parts: Vec<&str> = header.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::parse(
            &shown,
            format!("header '{header}' is not d,s_star"),
        ));
    }
    let d: usize = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::parse(&shown, format!("bad d '{}'", parts[0])))?;
    let s_star: usize = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::parse(&shown, format!("bad s_star '{}'", parts[1])))?;
    let mut theta = Array1::zeros(d);
    let mut seen = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 2 {
            return Err(Error::parse(
                &shown,
                format!("support row {lineno} is not index,value"),
            ));
        }
        let idx: usize = cols[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(&shown, format!("bad index on support row {lineno}")))?;
        let val: f64 = cols[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(&shown, format!("bad value on support row {lineno}")))?;
        if idx >= d {
            return Err(Error::parse(
                &shown,
                format!("support index {idx} out of range 0..{d}"),
            ));
        }
        theta[idx] = val;
        seen += 1;
    }
    if seen != s_star {
        return Err(Error::parse(
            &shown,
            format!("header claims {s_star} nonzeros, file has {seen}"),
        ));
    }
    Ok(GroundTruth {
        theta,
        noise_std: 0.0,
        x_scale: 1.0,
        y_scale: 1.0,
    })
}

fn parse_float_row(line: &str, path: &str, what: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(path, format!("bad float '{tok}' in {what}")))
        })
        .collect()
}
