use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use fracradon::radon::QuadratureSpec;
use fracradon::verify::SuiteConfig;
use fracradon::{Error, Execution, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Parse(format!("unknown format {other:?}"))),
        }
    }
}

/// Flags shared by every command. Anything left unset falls back to the
/// `--config` file and then to the built-in defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Opts {
    /// Flat key=value file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Body spec such as `ball:r=1`, `ellipsoid:a=2,1,1`, `cube`; repeatable for sweeps.
    #[arg(long)]
    pub body: Vec<String>,
    /// Dimension; a comma list for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Vec<f64>,
    /// `uniform`, `gaussian:sigma=1` or `poly:c=1,-0.5`.
    #[arg(long)]
    pub density: Option<String>,
    /// Section offsets.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Vec<f64>,
    /// Unit direction; defaults to the first basis vector.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xi: Vec<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Distance bound: a number or `auto`.
    #[arg(long)]
    pub dovr: Option<String>,
    /// Outer body of the moment comparison.
    #[arg(long)]
    pub outer: Option<String>,
    #[arg(long)]
    pub comparison_body: Option<String>,
    #[arg(long)]
    pub comparison_density: Option<String>,
    /// Named test function for `compute frac-deriv`.
    #[arg(long = "fn")]
    pub function: Option<String>,
    /// Support radius of the test function.
    #[arg(long = "T")]
    pub support: Option<f64>,
    /// `auto`, `split`, `even` or `negative`.
    #[arg(long)]
    pub route: Option<String>,
    /// Integer order of the subtracted Taylor polynomial.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub c_kpz: Option<f64>,
    #[arg(long)]
    pub c_lp: Option<f64>,
    #[arg(long)]
    pub hypothesis_directions: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub direction_nodes: Option<usize>,
    #[arg(long)]
    pub section_nodes: Option<usize>,
    #[arg(long)]
    pub polar_nodes: Option<usize>,
    #[arg(long)]
    pub radial_nodes: Option<usize>,
    #[arg(long)]
    pub refine_rounds: Option<usize>,
    #[arg(long)]
    pub singular_tol: Option<f64>,
    #[arg(long)]
    pub numeric_tol: Option<f64>,
    #[arg(long)]
    pub equality_tol: Option<f64>,
    /// Ignore closed-form section functions.
    #[arg(long)]
    pub no_analytic: bool,
    /// Run sweeps on one thread.
    #[arg(long)]
    pub sequential: bool,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Everything a run depends on; serialized into every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub bodies: Vec<String>,
    pub n: Vec<usize>,
    pub q: Vec<f64>,
    pub density: String,
    pub t: Vec<f64>,
    pub xi: Vec<f64>,
    pub p: Option<f64>,
    pub dovr: String,
    pub outer: Option<String>,
    pub comparison_body: Option<String>,
    pub comparison_density: Option<String>,
    pub function: Option<String>,
    pub support: Option<f64>,
    pub route: String,
    pub m: Option<usize>,
    pub suite: SuiteConfig,
    pub format: Format,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn quad(&self) -> &QuadratureSpec {
        &self.suite.quad
    }

    pub fn one_body(&self) -> Result<Option<&str>> {
        match self.bodies.len() {
            0 => Ok(None),
            1 => Ok(Some(&self.bodies[0])),
            k => Err(Error::Parse(format!("this command takes one body, got {k}"))),
        }
    }

    pub fn one_n(&self) -> Result<Option<usize>> {
        match self.n.len() {
            0 => Ok(None),
            1 => Ok(Some(self.n[0])),
            k => Err(Error::Parse(format!("this command takes one dimension, got {k}"))),
        }
    }
}

fn read_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

struct File(BTreeMap<String, String>);

impl File {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Parse(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        match self.0.remove(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<T>().map_err(|_| Error::Parse(format!("config key {key}: cannot parse {s:?}"))))
                .collect(),
        }
    }
}

fn or<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn or_list<T>(flag: Vec<T>, file: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

/// Merges flags over the config file over defaults.
pub fn resolve(command: &str, o: Opts) -> Result<RunConfig> {
    let mut f = File(match &o.config {
        Some(p) => read_file(p)?,
        None => BTreeMap::new(),
    });
    let file_body = f.take::<String>("body")?;
    let bodies = if o.body.is_empty() { file_body.into_iter().collect() } else { o.body };
    let d = QuadratureSpec::default();
    let quad = QuadratureSpec {
        radial_nodes: or(o.radial_nodes, f.take("radial-nodes")?).unwrap_or(d.radial_nodes),
        direction_nodes: or(o.direction_nodes, f.take("direction-nodes")?).unwrap_or(d.direction_nodes),
        section_nodes: or(o.section_nodes, f.take("section-nodes")?),
        polar_nodes: or(o.polar_nodes, f.take("polar-nodes")?).unwrap_or(d.polar_nodes),
        singular_tol: or(o.singular_tol, f.take("singular-tol")?).unwrap_or(d.singular_tol),
        numeric_tol: or(o.numeric_tol, f.take("numeric-tol")?).unwrap_or(d.numeric_tol),
        bisection_tol: d.bisection_tol,
        equality_tol: or(o.equality_tol, f.take("equality-tol")?).unwrap_or(d.equality_tol),
        refine_rounds: or(o.refine_rounds, f.take("refine-rounds")?).unwrap_or(d.refine_rounds),
        seed: or(o.seed, f.take("seed")?).unwrap_or(d.seed),
        prefer_analytic: !(o.no_analytic || f.take::<bool>("no-analytic")?.unwrap_or(false)),
        execution: if o.sequential || f.take::<bool>("sequential")?.unwrap_or(false) {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    let sd = SuiteConfig::default();
    let suite = SuiteConfig {
        quad,
        c: or(o.c, f.take("c")?).unwrap_or(sd.c),
        c_kpz: or(o.c_kpz, f.take("c-kpz")?).unwrap_or(sd.c_kpz),
        c_lp: or(o.c_lp, f.take("c-lp")?).unwrap_or(sd.c_lp),
        hypothesis_directions: or(o.hypothesis_directions, f.take("hypothesis-directions")?)
            .unwrap_or(sd.hypothesis_directions),
        ellipsoid_samples: sd.ellipsoid_samples,
    };
    let cfg = RunConfig {
        command: command.into(),
        bodies,
        n: or_list(o.n, f.list("n")?),
        q: or_list(o.q, f.list("q")?),
        density: or(o.density, f.take("density")?).unwrap_or_else(|| "uniform".into()),
        t: or_list(o.t, f.list("t")?),
        xi: or_list(o.xi, f.list("xi")?),
        p: or(o.p, f.take("p")?),
        dovr: or(o.dovr, f.take("dovr")?).unwrap_or_else(|| "auto".into()),
        outer: or(o.outer, f.take("outer")?),
        comparison_body: or(o.comparison_body, f.take("comparison-body")?),
        comparison_density: or(o.comparison_density, f.take("comparison-density")?),
        function: or(o.function, f.take("fn")?),
        support: or(o.support, f.take("T")?),
        route: or(o.route, f.take("route")?).unwrap_or_else(|| "auto".into()),
        m: or(o.m, f.take("m")?),
        suite,
        format: or(o.format, f.take("format")?).unwrap_or(Format::Json),
        output: or(o.output, f.take::<PathBuf>("output")?),
    };
    if let Some(k) = f.0.keys().next() {
        return Err(Error::Parse(format!("unknown config key {k:?}")));
    }
    Ok(cfg)
}
