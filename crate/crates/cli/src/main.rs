mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracradon::bodies::{parse_body, StarBody};
use fracradon::fracderiv::{frac_deriv, frac_deriv_at_zero, frac_deriv_even, frac_deriv_neg, FracDerivOptions, SectionFunction};
use fracradon::radon::{frac_radon_at_zero, max_over_directions_multi, parse_density, section_integral, Density};
use fracradon::special::{distance_to_odd, implied_lower_bound_constant, FractionalOrder};
use fracradon::verify::{
    check_ball_identity, check_holder_step, check_mp_lemma, check_mp_moment_identity, check_parseval, check_lower_bound,
    check_slicing, check_comparison, run_check, to_csv, DovrBound, InequalityReport, Status, Summary, CHECKS,
};
use fracradon::{Error, Result, VERSION};
use serde::Serialize;
use serde_json::{json, Value};

use config::{resolve, Format, Opts, RunConfig};

#[derive(Parser)]
#[command(name = "fracradon", version, about = "Fractional derivatives of sections of star bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one quantity.
    Compute {
        #[command(subcommand)]
        what: Compute,
    },
    /// Run a checker: corollary1, parseval, mp-identity, mp-lemma, holder, thm1, thm2, thm3 or all.
    Verify {
        check: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Slicing inequality over a grid of orders, one CSV row per body, dimension and order.
    Sweep {
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Subcommand)]
enum Compute {
    /// Fractional derivative at zero of a named test function.
    FracDeriv(Opts),
    /// Section integrals over offsets.
    Radon(Opts),
    /// Normalized derivative of the section function in one direction.
    FracRadon(Opts),
    /// Maximum of the normalized derivative over directions.
    Max(Opts),
}

enum Outcome {
    Ok,
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Compute { what } => {
            let (name, opts) = match what {
                Compute::FracDeriv(o) => ("frac-deriv", o),
                Compute::Radon(o) => ("radon", o),
                Compute::FracRadon(o) => ("frac-radon", o),
                Compute::Max(o) => ("max", o),
            };
            let cfg = resolve(&format!("compute {name}"), opts)?;
            let table = match name {
                "frac-deriv" => compute_frac_deriv(&cfg)?,
                "radon" => compute_radon(&cfg)?,
                "frac-radon" => compute_frac_radon(&cfg)?,
                _ => compute_max(&cfg)?,
            };
            emit_table(&cfg, &table)?;
            Ok(Outcome::Ok)
        }
        Command::Verify { check, opts } => {
            let cfg = resolve(&format!("verify {check}"), opts)?;
            let reports = verify(&check, &cfg)?;
            emit_reports(&cfg, &reports)?;
            let s = Summary::of(&reports);
            eprintln!("{} pass, {} fail, {} inapplicable", s.pass, s.fail, s.inapplicable);
            Ok(if s.fail > 0 { Outcome::Violation } else { Outcome::Ok })
        }
        Command::Sweep { opts } => {
            let cfg = resolve("sweep", opts)?;
            let table = sweep(&cfg)?;
            emit_table(&cfg, &table)?;
            Ok(Outcome::Ok)
        }
    }
}

fn body(cfg: &RunConfig, spec: Option<&str>) -> Result<StarBody> {
    let spec = spec.ok_or_else(|| Error::Parse("--body is required".into()))?;
    parse_body(spec, cfg.one_n()?)
}

fn density(spec: &str) -> Result<Density> {
    parse_density(spec)
}

fn direction(cfg: &RunConfig, n: usize) -> Result<Vec<f64>> {
    if cfg.xi.is_empty() {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        return Ok(e);
    }
    if cfg.xi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cfg.xi.len() });
    }
    let s = cfg.xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if s.is_nan() || s <= 0.0 {
        return Err(Error::Domain("direction must be non-zero".into()));
    }
    Ok(cfg.xi.iter().map(|v| v / s).collect())
}

fn orders(cfg: &RunConfig) -> Result<Vec<FractionalOrder>> {
    if cfg.q.is_empty() {
        return Err(Error::Parse("--q is required".into()));
    }
    cfg.q.iter().map(|q| FractionalOrder::new(*q)).collect()
}

#[derive(Clone)]
enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Flag(bool),
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

fn compute_frac_deriv(cfg: &RunConfig) -> Result<Table> {
    let name = cfg.function.as_deref().ok_or_else(|| Error::Parse("--fn is required".into()))?;
    let h = SectionFunction::named(name, cfg.support)?;
    let opts = FracDerivOptions { tol: cfg.quad().singular_tol, ..FracDerivOptions::default() };
    if cfg.q.is_empty() {
        return Err(Error::Parse("--q is required".into()));
    }
    let mut rows = Vec::new();
    for &q in &cfg.q {
        let r = match cfg.route.as_str() {
            "auto" => frac_deriv(&h, q, &opts)?,
            "split" => frac_deriv_at_zero(&h, q, cfg.m.unwrap_or(q.floor().max(0.0) as usize + 1), &opts)?,
            "even" => frac_deriv_even(&h, q, cfg.m.unwrap_or(fracradon::fracderiv::default_even_order(q)), &opts)?,
            "negative" => frac_deriv_neg(&h, q, &opts)?,
            other => return Err(Error::Parse(format!("unknown route {other:?}"))),
        };
        rows.push(vec![
            Cell::Text(h.label().to_string()),
            Cell::Num(h.support()),
            Cell::Num(q),
            Cell::Text(serde_json::to_value(r.route).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()),
            Cell::Int(r.m_used as i64),
            Cell::Num(r.value),
            Cell::Num(r.normalized),
            Cell::Num(r.diagnostics.error_estimate),
            Cell::Flag(r.diagnostics.converged),
        ]);
    }
    Ok(Table {
        columns: vec!["function", "T", "q", "route", "m", "value", "normalized", "error_estimate", "converged"],
        rows,
    })
}

fn compute_radon(cfg: &RunConfig) -> Result<Table> {
    let k = body(cfg, cfg.one_body()?)?;
    let f = density(&cfg.density)?;
    let xi = direction(cfg, k.dim())?;
    if cfg.t.is_empty() {
        return Err(Error::Parse("--t is required".into()));
    }
    let rows = cfg
        .t
        .iter()
        .map(|&t| Ok(vec![Cell::Text(k.to_string()), Cell::Num(t), Cell::Num(section_integral(&k, &f, &xi, t, cfg.quad())?)]))
        .collect::<Result<_>>()?;
    Ok(Table { columns: vec!["body", "t", "value"], rows })
}

fn compute_frac_radon(cfg: &RunConfig) -> Result<Table> {
    let k = body(cfg, cfg.one_body()?)?;
    let f = density(&cfg.density)?;
    let xi = direction(cfg, k.dim())?;
    let rows = orders(cfg)?
        .into_iter()
        .map(|q| {
            let v = frac_radon_at_zero(&k, &f, &xi, q, cfg.quad())?;
            Ok(vec![
                Cell::Text(k.to_string()),
                Cell::Num(q.value()),
                Cell::Num(v.raw),
                Cell::Num(v.normalized),
                Cell::Flag(v.analytic),
                Cell::Num(v.detail.diagnostics.error_estimate),
            ])
        })
        .collect::<Result<_>>()?;
    Ok(Table { columns: vec!["body", "q", "raw", "normalized", "analytic", "error_estimate"], rows })
}

fn compute_max(cfg: &RunConfig) -> Result<Table> {
    let k = body(cfg, cfg.one_body()?)?;
    let f = density(&cfg.density)?;
    let qs: Vec<f64> = orders(cfg)?.iter().map(|q| q.value()).collect();
    let maxima = max_over_directions_multi(&k, &f, &qs, cfg.quad())?;
    let rows = qs
        .iter()
        .zip(maxima)
        .map(|(q, m)| {
            let dir: Vec<String> = m.direction.iter().map(|v| format!("{v:.16e}")).collect();
            vec![
                Cell::Text(k.to_string()),
                Cell::Num(*q),
                Cell::Num(m.value),
                Cell::Num(m.grid_value),
                Cell::Num(m.grid_mean),
                Cell::Text(dir.join(" ")),
                Cell::Num(m.error_estimate),
            ]
        })
        .collect();
    Ok(Table { columns: vec!["body", "q", "value", "grid_value", "grid_mean", "direction", "error_estimate"], rows })
}

fn dovr_for(cfg: &RunConfig, k: &StarBody) -> Result<DovrBound> {
    match cfg.dovr.as_str() {
        "auto" => DovrBound::for_body(k, cfg.suite.c_lp, cfg.suite.ellipsoid_samples, cfg.quad().seed),
        v => DovrBound::given(v.parse::<f64>().map_err(|_| Error::Parse(format!("--dovr: not a number: {v:?}")))?),
    }
}

fn volume_one(k: &StarBody, cfg: &RunConfig) -> Result<StarBody> {
    let grid = fracradon::bodies::SphereGrid::new(k.dim(), cfg.quad().polar_nodes, cfg.quad().seed);
    Ok(k.scale_to_volume_one(&grid)?.0)
}

fn verify(check: &str, cfg: &RunConfig) -> Result<Vec<InequalityReport>> {
    if check != "all" && !CHECKS.contains(&check) {
        return Err(Error::Parse(format!("unknown check {check:?}; expected one of {} or all", CHECKS.join(", "))));
    }
    let quad = cfg.quad();
    let has_body = !cfg.bodies.is_empty();
    match check {
        "corollary1" if !cfg.n.is_empty() => {
            let n = cfg.one_n()?.expect("checked");
            orders(cfg)?.into_iter().map(|q| check_ball_identity(n, q, quad)).collect()
        }
        "parseval" if has_body => {
            let p = cfg.p.ok_or_else(|| Error::Parse("--p is required".into()))?;
            Ok(vec![check_parseval(&body(cfg, cfg.one_body()?)?, p, quad)?])
        }
        "mp-identity" if has_body => {
            let d = body(cfg, cfg.one_body()?)?;
            orders(cfg)?.into_iter().map(|q| check_mp_moment_identity(&d, q, quad)).collect()
        }
        "mp-lemma" if has_body => {
            let l = body(cfg, cfg.one_body()?)?;
            let d = match &cfg.outer {
                Some(s) => parse_body(s, Some(l.dim()))?,
                None => StarBody::unit_ball(l.dim())?,
            };
            let g = density(&cfg.density)?;
            orders(cfg)?.into_iter().map(|q| check_mp_lemma(&l, &g, &d, q, quad)).collect()
        }
        "holder" if has_body => {
            let d = body(cfg, cfg.one_body()?)?;
            orders(cfg)?.into_iter().map(|q| check_holder_step(&d, q, quad)).collect()
        }
        "thm1" if has_body => {
            let k = volume_one(&body(cfg, cfg.one_body()?)?, cfg)?;
            let f = density(&cfg.density)?.normalized_on(&k, quad)?;
            if cfg.q.is_empty() {
                return Err(Error::Parse("--q is required".into()));
            }
            cfg.q.iter().map(|&q| check_lower_bound(&k, &f, q, cfg.suite.c, cfg.suite.c_kpz, quad)).collect()
        }
        "thm2" if has_body => {
            let k = body(cfg, cfg.one_body()?)?;
            let f = density(&cfg.density)?.normalized_on(&k, quad)?;
            let d = dovr_for(cfg, &k)?;
            orders(cfg)?.into_iter().map(|q| check_slicing(&k, &f, q, &d, quad)).collect()
        }
        "thm3" if has_body => {
            let k = body(cfg, cfg.one_body()?)?;
            let f = density(&cfg.density)?;
            let l = match &cfg.comparison_body {
                Some(s) => parse_body(s, Some(k.dim()))?,
                None => k.clone(),
            };
            let g = density(cfg.comparison_density.as_deref().unwrap_or("uniform"))?;
            let d = dovr_for(cfg, &k)?;
            let h = cfg.suite.hypothesis_directions;
            orders(cfg)?.into_iter().map(|q| check_comparison(&k, &f, &l, &g, q, &d, quad, h)).collect()
        }
        _ => run_check(check, &cfg.suite),
    }
}

fn sweep(cfg: &RunConfig) -> Result<Table> {
    if cfg.bodies.is_empty() {
        return Err(Error::Parse("--body is required".into()));
    }
    if cfg.q.is_empty() {
        return Err(Error::Parse("--q is required".into()));
    }
    let dims: Vec<Option<usize>> = if cfg.n.is_empty() { vec![None] } else { cfg.n.iter().map(|n| Some(*n)).collect() };
    let quad = cfg.quad();
    let mut rows = Vec::new();
    for spec in &cfg.bodies {
        for n in &dims {
            let k = volume_one(&parse_body(spec, *n)?, cfg)?;
            let nf = k.dim() as f64;
            let mut qs = Vec::new();
            for &q in &cfg.q {
                if distance_to_odd(q) <= FractionalOrder::DEFAULT_GUARD {
                    eprintln!("skipping q = {q}: odd integer");
                } else if !(q > -1.0 && q < nf - 1.0) {
                    eprintln!("skipping q = {q}: outside (-1, {}) for n = {}", nf - 1.0, k.dim());
                } else {
                    qs.push(FractionalOrder::new(q)?);
                }
            }
            if qs.is_empty() {
                continue;
            }
            let f = density(&cfg.density)?.normalized_on(&k, quad)?;
            let d = dovr_for(cfg, &k)?;
            let reports = fracradon::verify::check_slicing_multi(&k, &f, &qs, &d, quad)?;
            for r in reports {
                let q = r.q.unwrap_or(f64::NAN);
                let max = r.diagnostics.get("max_value").copied().unwrap_or(f64::NAN);
                let implied = if q >= 0.0 && q <= nf - 2.0 { implied_lower_bound_constant(k.dim(), q, max)? } else { f64::NAN };
                let slicing_implied = r.lhs / (r.rhs / r.constants[0].value);
                rows.push(vec![
                    Cell::Text(r.check.clone()),
                    Cell::Int(r.n as i64),
                    Cell::Num(q),
                    Cell::Text(r.body.clone()),
                    Cell::Text(r.density.clone()),
                    Cell::Num(r.lhs),
                    Cell::Num(r.rhs),
                    Cell::Num(r.margin),
                    Cell::Flag(r.pass),
                    Cell::Text(r.dovr_source.clone()),
                    Cell::Int(r.seed as i64),
                    Cell::Num(max),
                    Cell::Num(implied),
                    Cell::Num(slicing_implied),
                ]);
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse("no admissible (body, n, q) cell after filtering".into()));
    }
    Ok(Table {
        columns: vec![
            "check", "n", "q", "body", "density", "lhs", "rhs", "margin", "pass", "dovr_source", "seed", "max_value",
            "implied_c", "implied_slicing_constant",
        ],
        rows,
    })
}

fn header(cfg: &RunConfig) -> Value {
    json!({ "version": VERSION, "config": cfg })
}

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>> {
    match &cfg.output {
        Some(p) => std::fs::File::create(p)
            .map(|f| Box::new(f) as Box<dyn Write>)
            .map_err(|e| Error::Parse(format!("{}: {e}", p.display()))),
        None => Ok(Box::new(std::io::stdout())),
    }
}

fn write_all(cfg: &RunConfig, text: &str) -> Result<()> {
    let mut out = sink(cfg)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::Parse(format!("write failed: {e}")))
}

fn csv_preamble(cfg: &RunConfig) -> String {
    format!("# fracradon {VERSION}\n# config {}\n", serde_json::to_string(cfg).unwrap_or_default())
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Num(v) if v.is_nan() => String::new(),
        Cell::Num(v) => format!("{v:.16e}"),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Flag(b) => b.to_string(),
    }
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Num(v) if v.is_finite() => json!(v),
        Cell::Num(_) => Value::Null,
        Cell::Int(v) => json!(v),
        Cell::Text(s) => json!(s),
        Cell::Flag(b) => json!(b),
    }
}

fn emit_table(cfg: &RunConfig, table: &Table) -> Result<()> {
    let text = match cfg.format {
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| Value::Object(table.columns.iter().zip(r).map(|(k, c)| (k.to_string(), cell_json(c))).collect()))
                .collect();
            let mut doc = header(cfg);
            doc["results"] = Value::Array(rows);
            pretty(&doc)?
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Parse(format!("csv: {e}"));
            w.write_record(&table.columns).map_err(io)?;
            for r in &table.rows {
                w.write_record(r.iter().map(cell_text)).map_err(io)?;
            }
            let body = w.into_inner().map_err(|e| Error::Parse(format!("csv: {e}")))?;
            csv_preamble(cfg) + &String::from_utf8_lossy(&body)
        }
    };
    write_all(cfg, &text)
}

#[derive(Serialize)]
struct Counts {
    pass: usize,
    fail: usize,
    inapplicable: usize,
}

fn emit_reports(cfg: &RunConfig, reports: &[InequalityReport]) -> Result<()> {
    let text = match cfg.format {
        Format::Json => {
            let s = Summary::of(reports);
            let mut doc = header(cfg);
            doc["reports"] = serde_json::to_value(reports).map_err(|e| Error::Parse(format!("json: {e}")))?;
            doc["summary"] = json!(Counts { pass: s.pass, fail: s.fail, inapplicable: s.inapplicable });
            doc["all_pass"] = json!(reports.iter().all(|r| r.status != Status::Fail));
            pretty(&doc)?
        }
        Format::Csv => csv_preamble(cfg) + &to_csv(reports)?,
    };
    write_all(cfg, &text)
}

fn pretty(v: &Value) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::Parse(format!("json: {e}")))
}
