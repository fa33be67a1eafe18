use std::collections::BTreeMap;
use std::io::Write;

use dpo_core::fpmoments::FpSeries;
use dpo_core::semiclassical::{stable_beta, stable_photon_number};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{cell, write_table, Format};
use crate::sweep::{
    fp_row, lindblad_rows, per_point, sde_row, self_consistent_row, Method, SweepSpec,
};

/// Scaled photon number and pump amplitude, unscaled quadrature variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MethodPoint {
    pub n_phot: f64,
    pub beta_ss: Option<f64>,
    pub var_x: Option<f64>,
    pub var_y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub eps: f64,
    pub methods: BTreeMap<&'static str, MethodPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub a: &'static str,
    pub b: &'static str,
    pub points: usize,
    pub max_abs_n_phot: f64,
    pub eps_at_max_abs: f64,
    /// `|Δn| / max(|n_a|, |n_b|)`.
    pub max_rel_n_phot: f64,
    pub eps_at_max_rel: f64,
    pub max_abs_var_y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub methods: Vec<&'static str>,
    pub x: f64,
    /// Open ε interval left out of the deviation summary.
    pub exclude: Option<[f64; 2]>,
    pub rows: Vec<ComparisonRow>,
    pub deviations: Vec<Deviation>,
    /// Some grid `ε > 1` has the series photon number below `ε − 1`.
    pub undershoot: bool,
    /// Some grid point has the series pump amplitude above 1.
    pub overshoot: bool,
}

#[derive(Debug, Clone)]
pub struct CompareSpec {
    pub methods: Vec<Method>,
    pub base: SweepSpec,
    pub exclude: Option<[f64; 2]>,
}

pub fn compare(spec: &CompareSpec) -> CliResult<ComparisonReport> {
    let mut methods: Vec<Method> = Vec::new();
    for &m in &spec.methods {
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.len() < 2 {
        return Err(CliError::config("compare needs at least two methods"));
    }
    if let Some([lo, hi]) = spec.exclude {
        if !(lo < hi) {
            return Err(CliError::config(format!("exclusion window [{lo}, {hi}] is empty")));
        }
    }
    for &m in &methods {
        SweepSpec {
            method: m,
            ..spec.base.clone()
        }
        .validate()?;
    }
    let x = spec.base.resolve_x()?;
    let grid = spec.base.grid.points();
    let fp = FpSeries::new(x).map_err(|e| CliError::config(e.to_string()))?;

    let mut columns = Vec::new();
    for &m in &methods {
        let s = SweepSpec {
            method: m,
            ..spec.base.clone()
        };
        columns.push(method_points(&s, &fp, &grid)?);
    }

    let rows: Vec<ComparisonRow> = grid
        .iter()
        .enumerate()
        .map(|(i, &eps)| ComparisonRow {
            eps,
            methods: methods.iter().zip(&columns).map(|(m, c)| (m.name(), c[i])).collect(),
        })
        .collect();

    let series = per_point(&grid, |e| fp_row(&fp, e, spec.base.tol))?;
    let undershoot = series.iter().any(|r| r.undershoot);
    let overshoot = series.iter().any(|r| r.overshoot);

    let keep = |eps: f64| spec.exclude.is_none_or(|[lo, hi]| !(eps > lo && eps < hi));
    let mut deviations = Vec::new();
    for i in 0..methods.len() {
        for j in i + 1..methods.len() {
            deviations.push(deviation(&grid, &columns[i], &columns[j], keep, methods[i], methods[j]));
        }
    }

    Ok(ComparisonReport {
        methods: methods.iter().map(|m| m.name()).collect(),
        x,
        exclude: spec.exclude,
        rows,
        deviations,
        undershoot,
        overshoot,
    })
}

fn method_points(s: &SweepSpec, fp: &FpSeries, grid: &[f64]) -> CliResult<Vec<MethodPoint>> {
    let x = s.resolve_x()?;
    per_point(grid, |eps| {
        Ok(match s.method {
            Method::Semiclassical => MethodPoint {
                n_phot: stable_photon_number(eps),
                beta_ss: Some(stable_beta(eps)),
                var_x: None,
                var_y: None,
            },
            Method::SelfConsistent => {
                let r = self_consistent_row(eps, x)?;
                full(r.n_phot, r.beta_ss, r.var_x, r.var_y)
            }
            Method::FpMoments => {
                let r = fp_row(fp, eps, s.tol)?;
                full(r.n_phot, r.beta_ss, r.var_x, r.var_y)
            }
            Method::Sde => {
                let r = sde_row(s, eps)?;
                full(r.n_phot, r.beta_ss, r.var_x, r.var_y)
            }
            Method::Lindblad => {
                let rows = lindblad_rows(s, eps)?;
                let last_raw = rows.iter().rev().find(|r| r.kind == "raw").expect("at least one solve");
                let n = rows.last().map_or(last_raw.n_phot, |r| r.n_phot);
                MethodPoint {
                    n_phot: n,
                    beta_ss: last_raw.beta_ss,
                    var_x: last_raw.var_x,
                    var_y: last_raw.var_y,
                }
            }
        })
    })
}

fn full(n_phot: f64, beta: f64, var_x: f64, var_y: f64) -> MethodPoint {
    MethodPoint {
        n_phot,
        beta_ss: Some(beta),
        var_x: Some(var_x),
        var_y: Some(var_y),
    }
}

fn deviation(
    grid: &[f64],
    a: &[MethodPoint],
    b: &[MethodPoint],
    keep: impl Fn(f64) -> bool,
    ma: Method,
    mb: Method,
) -> Deviation {
    let mut d = Deviation {
        a: ma.name(),
        b: mb.name(),
        points: 0,
        max_abs_n_phot: 0.0,
        eps_at_max_abs: f64::NAN,
        max_rel_n_phot: 0.0,
        eps_at_max_rel: f64::NAN,
        max_abs_var_y: None,
    };
    for ((&eps, pa), pb) in grid.iter().zip(a).zip(b) {
        if !keep(eps) {
            continue;
        }
        d.points += 1;
        let diff = (pa.n_phot - pb.n_phot).abs();
        if diff > d.max_abs_n_phot || d.eps_at_max_abs.is_nan() {
            d.max_abs_n_phot = diff;
            d.eps_at_max_abs = eps;
        }
        let scale = pa.n_phot.abs().max(pb.n_phot.abs());
        let rel = if scale > 0.0 { diff / scale } else { 0.0 };
        if rel > d.max_rel_n_phot || d.eps_at_max_rel.is_nan() {
            d.max_rel_n_phot = rel;
            d.eps_at_max_rel = eps;
        }
        if let (Some(va), Some(vb)) = (pa.var_y, pb.var_y) {
            let dv = (va - vb).abs();
            d.max_abs_var_y = Some(d.max_abs_var_y.map_or(dv, |m| m.max(dv)));
        }
    }
    d
}

impl ComparisonReport {
    pub fn deviation(&self, a: Method, b: Method) -> Option<&Deviation> {
        self.deviations
            .iter()
            .find(|d| (d.a, d.b) == (a.name(), b.name()) || (d.a, d.b) == (b.name(), a.name()))
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["eps".to_string()];
        for m in &self.methods {
            let m = m.replace('-', "_");
            for q in ["n_phot", "beta_ss", "var_x", "var_y"] {
                h.push(format!("{m}_{q}"));
            }
        }
        h
    }

    /// CSV carries the aligned table only; JSON carries the whole report.
    pub fn write(&self, format: Format, out: &mut dyn Write) -> CliResult<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)?;
                out.flush()?;
                Ok(())
            }
            Format::Csv => {
                let rows: Vec<Vec<String>> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let mut v = vec![format!("{:?}", r.eps)];
                        for m in &self.methods {
                            let p = &r.methods[m];
                            v.push(format!("{:?}", p.n_phot));
                            v.extend([p.beta_ss, p.var_x, p.var_y].map(cell));
                        }
                        v
                    })
                    .collect();
                write_table(&self.header(), &rows, out)
            }
        }
    }

    /// Deviations and flags without the rows.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "methods": self.methods,
            "x": self.x,
            "exclude": self.exclude,
            "deviations": self.deviations,
            "undershoot": self.undershoot,
            "overshoot": self.overshoot,
        })
    }
}
