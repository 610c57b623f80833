use std::fs;
use std::path::PathBuf;

use entrate::ancilla::{sup_search_with, AncillaOptimum, SupConfig, DEFAULT_DIM_CAP};
use entrate::optimum::{gamma_curve, optimal_design, optimal_gamma};
use entrate::oracle::{fd_rate, FdConfig};
use entrate::qcore::{read_matrix, reduced_density_a, von_neumann_entropy, write_matrix};
use entrate::rate::{energy_stats, rate as closed_form_rate, EnergyStats};
use entrate::{LogBase, PureState};
use serde::Serialize;
use serde_json::Value;

use crate::{CmdResult, Common, Failure, Format, OptimizeArgs, RateArgs, SweepArgs, DIM_CAP_VAR};

pub fn dim_cap() -> Result<usize, Failure> {
    match std::env::var(DIM_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|c| *c >= 1)
            .ok_or_else(|| Failure::Input(format!("{DIM_CAP_VAR} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_DIM_CAP),
    }
}

/// Finite and strictly positive.
pub fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

pub fn check_cap(dim: usize, cap: usize) -> Result<(), Failure> {
    if dim > cap {
        return Err(entrate::Error::DimensionCap { dim, cap }.into());
    }
    Ok(())
}

pub fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// JSON as is, CSV as one header line plus one row, text as `key = value` lines.
pub fn render<T: Serialize>(report: &T, format: Format) -> String {
    let value = serde_json::to_value(report).expect("reports serialize");
    if format == Format::Json {
        return serde_json::to_string_pretty(&value).expect("reports serialize") + "\n";
    }
    let mut fields = Vec::new();
    flatten("", &value, &mut fields);
    match format {
        Format::Csv => {
            let quote = |s: &str| if s.contains([',', '"']) { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_string() };
            let header: Vec<String> = fields.iter().map(|(k, _)| quote(k)).collect();
            let row: Vec<String> = fields.iter().map(|(_, v)| quote(v)).collect();
            format!("{}\n{}\n", header.join(","), row.join(","))
        }
        _ => fields.iter().map(|(k, v)| format!("{k} = {v}\n")).collect(),
    }
}

#[derive(Serialize)]
struct RateReport {
    d_a: usize,
    d_b: usize,
    log_base: LogBase,
    rate: f64,
    rate_nat: f64,
    rate_bits: f64,
    fd_rate_nat: f64,
    fd_rate_bits: f64,
    difference_nat: f64,
    tolerance: f64,
    fd_step: f64,
    entanglement_nat: f64,
    energy: EnergyStats,
    pass: bool,
}

pub fn rate(common: &Common, args: &RateArgs) -> CmdResult {
    if !positive(args.tol) {
        return Err(Failure::Input(format!("--tol must be positive, got {}", args.tol)));
    }
    let fd = FdConfig::richardson(args.fd_step);
    fd.validate()?;
    let psi = PureState::from_amplitude_matrix(&read_matrix(&args.state)?)?;
    check_cap(psi.d_a() * psi.d_b(), dim_cap()?)?;
    let h = read_matrix(&args.hamiltonian)?;
    let gamma = closed_form_rate(&psi, &h)?;
    let numeric = fd_rate(&psi, &h, &fd)?;
    let difference = gamma - numeric;
    let base = LogBase::from(common.log_base);
    let report = RateReport {
        d_a: psi.d_a(),
        d_b: psi.d_b(),
        log_base: base,
        rate: base.from_nats(gamma),
        rate_nat: gamma,
        rate_bits: LogBase::Two.from_nats(gamma),
        fd_rate_nat: numeric,
        fd_rate_bits: LogBase::Two.from_nats(numeric),
        difference_nat: difference,
        tolerance: args.tol,
        fd_step: args.fd_step,
        entanglement_nat: von_neumann_entropy(&reduced_density_a(&psi), LogBase::Nat)?,
        energy: energy_stats(&psi, &h)?,
        pass: difference.abs() < args.tol,
    };
    emit(common, &render(&report, common.format.unwrap_or(Format::Json)))?;
    Ok(report.pass)
}

#[derive(Serialize)]
struct DesignReport {
    d: usize,
    gamma: f64,
    log_base: LogBase,
    rate: f64,
    rate_nat: f64,
    rate_bits: f64,
    state_file: Option<PathBuf>,
    hamiltonian_file: Option<PathBuf>,
}

#[derive(Serialize)]
struct AncillaReport {
    value_bits: f64,
    #[serde(flatten)]
    optimum: AncillaOptimum,
}

fn ancilla_config(seed: u64, starts: usize, max_iter: usize, cap: usize) -> Result<SupConfig, Failure> {
    if starts == 0 {
        return Err(Failure::Input("--starts must be at least 1".into()));
    }
    if max_iter == 0 {
        return Err(Failure::Input("--max-iter must be at least 1".into()));
    }
    Ok(SupConfig {
        starts,
        seed,
        max_iter,
        dim_cap: cap,
        ..SupConfig::default()
    })
}

pub fn optimize(common: &Common, args: &OptimizeArgs) -> CmdResult {
    let d = args.dim;
    if d < 2 {
        return Err(Failure::Input(format!("--dim must be at least 2, got {d}")));
    }
    if let Some(d_b) = args.dim_b.filter(|d_b| *d_b != d) {
        return Err(Failure::Input(format!("optimal designs need d_A = d_B, got {d} and {d_b}")));
    }
    let cap = dim_cap()?;
    let format = common.format.unwrap_or(Format::Json);
    if let Some(d_anc) = args.ancilla {
        if d_anc == 0 {
            return Err(Failure::Input("--ancilla must be at least 1".into()));
        }
        check_cap((d * d_anc).pow(2), cap)?;
        let mut cfg = ancilla_config(common.seed, args.starts, args.max_iter, cap)?;
        if !positive(args.tol) {
            return Err(Failure::Input(format!("--tol must be positive, got {}", args.tol)));
        }
        cfg.grad_tol = args.tol;
        cfg.fd_step = args.fd_step;
        let optimum = sup_search_with(d, d_anc, &cfg)?;
        let report = AncillaReport {
            value_bits: LogBase::Two.from_nats(optimum.value),
            optimum,
        };
        emit(common, &render(&report, format))?;
        return Ok(true);
    }
    check_cap(d * d, cap)?;
    let design = optimal_design(d)?;
    let (mut state_file, mut hamiltonian_file) = (None, None);
    if let Some(dir) = &args.design_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))?;
        let (s, h) = (dir.join("optimal_state.json"), dir.join("optimal_hamiltonian.json"));
        write_matrix(&s, &design.state.to_pure_state().amplitude_matrix())?;
        write_matrix(&h, &design.hamiltonian)?;
        state_file = Some(s);
        hamiltonian_file = Some(h);
    }
    let base = LogBase::from(common.log_base);
    let report = DesignReport {
        d,
        gamma: design.gamma,
        log_base: base,
        rate: base.from_nats(design.rate),
        rate_nat: design.rate,
        rate_bits: LogBase::Two.from_nats(design.rate),
        state_file,
        hamiltonian_file,
    };
    emit(common, &render(&report, format))?;
    Ok(true)
}

fn parse_range(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Input(format!("--dim-range expects a..b, got {s:?}"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a < 2 || b < a {
        return Err(Failure::Input(format!("empty dimension range {s:?} (need 2 <= a <= b)")));
    }
    Ok((a, b))
}

#[derive(Serialize)]
struct CurveRow<P> {
    param: P,
    rate_nat: f64,
    rate_bits: f64,
}

#[derive(Serialize)]
struct AncillaRow {
    #[serde(rename = "d_A")]
    d_a: usize,
    #[serde(rename = "d_A'")]
    d_anc: usize,
    value_nat: f64,
    value_bits: f64,
    lambda1: f64,
    converged_fraction: f64,
}

fn curve_row<P>(param: P, rate_nat: f64) -> CurveRow<P> {
    CurveRow {
        param,
        rate_nat,
        rate_bits: LogBase::Two.from_nats(rate_nat),
    }
}

fn rows_to_csv<T: Serialize>(header: &str, rows: &[T]) -> String {
    let mut out = format!("{header}\n");
    for row in rows {
        let value = serde_json::to_value(row).expect("rows serialize");
        let Value::Object(map) = value else { unreachable!("rows are structs") };
        let cells: Vec<String> = map.values().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn render_rows<T: Serialize>(header: &str, rows: &[T], format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(rows).expect("rows serialize") + "\n",
        _ => rows_to_csv(header, rows),
    }
}

pub fn sweep(common: &Common, args: &SweepArgs) -> CmdResult {
    let format = common.format.unwrap_or(Format::Csv);
    let cap = dim_cap()?;
    let text = if let Some(range) = &args.dim_range {
        let (a, b) = parse_range(range)?;
        match args.ancilla {
            Some(0) => return Err(Failure::Input("--ancilla must be at least 1".into())),
            Some(max_anc) => {
                check_cap((b * max_anc).pow(2), cap)?;
                let mut cfg = ancilla_config(common.seed, args.starts, args.max_iter, cap)?;
                cfg.arbitrate = false;
                let mut rows = Vec::new();
                for d in a..=b {
                    for d_anc in 1..=max_anc {
                        let o = sup_search_with(d, d_anc, &cfg)?;
                        rows.push(AncillaRow {
                            d_a: d,
                            d_anc,
                            value_nat: o.value,
                            value_bits: LogBase::Two.from_nats(o.value),
                            lambda1: o.lambda1,
                            converged_fraction: o.converged_fraction,
                        });
                    }
                }
                render_rows("d_A,d_A',value_nat,value_bits,lambda1,converged_fraction", &rows, format)
            }
            None => {
                let rows = (a..=b)
                    .map(|d| Ok(curve_row(d, optimal_gamma(d)?.rate)))
                    .collect::<Result<Vec<_>, entrate::Error>>()?;
                render_rows("param,rate_nat,rate_bits", &rows, format)
            }
        }
    } else {
        let n = args.gamma_grid.unwrap_or(0);
        if n == 0 {
            return Err(Failure::Input("--gamma-grid must be at least 1".into()));
        }
        if args.dim < 2 {
            return Err(Failure::Input(format!("--dim must be at least 2, got {}", args.dim)));
        }
        let rows: Vec<CurveRow<f64>> = (1..=n)
            .map(|k| {
                let g = k as f64 / (n + 1) as f64;
                curve_row(g, gamma_curve(g, args.dim))
            })
            .collect();
        render_rows("param,rate_nat,rate_bits", &rows, format)
    };
    emit(common, &text)?;
    Ok(true)
}
