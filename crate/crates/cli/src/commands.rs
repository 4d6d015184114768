use std::io::Write;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use gapcert::identities::{run_matrix, standard_matrix, IdentityConfig, IdentityOptions, ResidualReport};
use gapcert::measure::{DomainJ, WeightKind};
use gapcert::oracle::{gap_bruteforce, mc_gap};
use gapcert::pde::{
    gap_profile, painleve4_residual, painleve5_residual, sweep, JetOptions, PainleveOptions, PainleveReport,
    SweepOptions,
};
use gapcert::resolvent::{gap_probability, log_gap_probability, RestrictedFamily};
use gapcert::tau::fmt17;
use serde_json::json;

use crate::config::{CommonArgs, Format, Resolved};

/// Whether every check passed.
pub type Outcome = bool;

#[derive(Debug, Args)]
pub struct GapArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Run the standard configuration matrix instead of the configured one.
    #[arg(long)]
    pub standard: bool,
    /// Write G_J, A, u, v, w of every configuration as JSON to PATH.
    #[arg(long, value_name = "PATH")]
    pub dump: Option<std::path::PathBuf>,
    /// Negative-control hook: relative corruption of b_{n-1} on the tau side of the u/w relations.
    #[arg(long, value_name = "REL", allow_hyphen_values = true)]
    pub corrupt_b: Option<f64>,
    /// Finite-difference step in t.
    #[arg(long, default_value_t = 1e-3)]
    pub h_t: f64,
    /// Finite-difference step in an endpoint.
    #[arg(long, default_value_t = 1e-3)]
    pub h_xi: f64,
}

#[derive(Debug, Args)]
pub struct PdeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write the per-identity summary JSON to PATH (default: stderr).
    #[arg(long, value_name = "PATH")]
    pub summary: Option<std::path::PathBuf>,
    /// Skip the n -> n+1 ladder (saves the second grid).
    #[arg(long)]
    pub no_ladder: bool,
    /// Use the resolvent diagonal on the left of the second-order equation.
    #[arg(long)]
    pub resolvent: bool,
}

#[derive(Debug, Args)]
pub struct PainleveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write the per-identity summary JSON to PATH (default: stderr).
    #[arg(long, value_name = "PATH")]
    pub summary: Option<std::path::PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Method {
    Quadrature,
    Mc,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Nested quadrature (n ≤ 3) or Monte-Carlo sampling.
    #[arg(long, value_enum, default_value = "quadrature")]
    pub method: Method,
}

struct Sink(Box<dyn Write>);

impl Sink {
    fn open(path: Option<&std::path::Path>) -> Result<Self> {
        Ok(Sink(match path {
            Some(p) => Box::new(std::io::BufWriter::new(
                std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
        }))
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.0, "{s}")?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.0.flush()?;
        Ok(())
    }
}

fn write_summary(path: Option<&std::path::Path>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => eprintln!("{text}"),
    }
    Ok(())
}

pub fn gap(args: &GapArgs) -> Result<Outcome> {
    let cfg = args.common.resolve()?;
    let w = cfg.weight()?;
    let j = cfg.domain()?;
    let ns = cfg.n_values()?;
    let format = cfg.format_or(Format::Csv);
    let mut out = Sink::open(cfg.out.as_deref())?;
    if format == Format::Csv {
        out.line("n,J,gap,log_gap")?;
    }
    for n in ns {
        let g = gap_probability(&w, &j, n)?;
        let lg = log_gap_probability(&w, &j, n)?;
        match format {
            Format::Csv => out.line(&format!("{n},\"{}\",{},{}", j.label(), fmt17(g), fmt17(lg)))?,
            Format::Json => out.line(&json!({"n": n, "J": j.to_json(), "gap": g, "log_gap": lg}).to_string())?,
        }
    }
    out.finish()?;
    Ok(true)
}

fn verify_configs(args: &VerifyArgs, cfg: &Resolved) -> Result<Vec<IdentityConfig>> {
    if args.standard {
        return Ok(standard_matrix());
    }
    ensure!(cfg.has_weight(), "empty configuration: give a weight and J, or --standard");
    let w = cfg.weight()?;
    let base = w.deform(0.0)?;
    let j = cfg.explicit_domain()?;
    let ts = match &cfg.raw.t {
        Some(a) => a.points("t")?,
        None => vec![w.t1],
    };
    let mut out = Vec::new();
    for n in cfg.n_values()? {
        for &t in &ts {
            base.deform(t)?;
            out.push(IdentityConfig::new(base.clone(), j.clone(), n, t));
        }
    }
    Ok(out)
}

fn dump_state(c: &IdentityConfig) -> Result<serde_json::Value> {
    let fam = RestrictedFamily::build(&c.weight.deform(c.t)?, &c.j, c.n)?;
    Ok(fam.dump_json(c.n)?)
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome> {
    let cfg = args.common.resolve()?;
    let configs = verify_configs(args, &cfg)?;
    ensure!(!configs.is_empty(), "empty configuration");
    ensure!(args.h_t > 0.0 && args.h_xi > 0.0, "finite-difference steps must be positive");
    let opts = IdentityOptions {
        h_t: args.h_t,
        h_xi: args.h_xi,
        tol: cfg.tol()?,
        b_perturbation: args.corrupt_b.unwrap_or(0.0),
    };
    let reports = run_matrix(&configs, opts);
    let mut out = Sink::open(cfg.out.as_deref())?;
    match cfg.format_or(Format::Json) {
        Format::Json => {
            for r in &reports {
                out.line(&r.to_json_line())?;
            }
        }
        Format::Csv => {
            out.line("identity_id,weight,J,n,t,residual,tolerance,pass")?;
            for r in &reports {
                out.line(&report_csv(r))?;
            }
        }
    }
    out.finish()?;
    if let Some(path) = &args.dump {
        let states = configs.iter().map(dump_state).collect::<Result<Vec<_>>>()?;
        std::fs::write(path, serde_json::to_string_pretty(&states)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(reports.iter().all(|r| r.pass))
}

fn report_csv(r: &ResidualReport) -> String {
    format!(
        "{},{},\"{}\",{},{},{},{},{}",
        r.identity_id,
        r.config.weight,
        r.config.j.to_string().replace('"', "\"\""),
        r.config.n,
        fmt17(r.config.t),
        fmt17(r.residual),
        fmt17(r.tolerance),
        r.pass
    )
}

fn jet_options(cfg: &Resolved, default_richardson: u32) -> Result<JetOptions> {
    let stride = cfg.raw.stride.unwrap_or(1);
    let richardson = cfg.raw.richardson.unwrap_or(default_richardson);
    ensure!(stride >= 1, "stride must be at least 1");
    ensure!(richardson <= 4, "at most 4 Richardson levels are supported");
    Ok(JetOptions::new(stride, richardson))
}

pub fn pde(args: &PdeArgs) -> Result<Outcome> {
    let cfg = args.common.resolve()?;
    let w = cfg.weight()?;
    let j = cfg.explicit_domain()?;
    let base = w.deform(0.0)?;
    let xi = cfg.xi_axis()?;
    let t = cfg.t_axis()?;
    let ns = cfg.n_values()?;
    let opts = SweepOptions {
        jet: jet_options(&cfg, 1)?,
        ladder: !args.no_ladder,
        resolvent: args.resolvent,
        convergence: true,
    };
    let endpoint = cfg.raw.endpoint.unwrap_or(0);
    let format = cfg.format_or(Format::Csv);
    let mut out = Sink::open(cfg.out.as_deref())?;
    if format == Format::Csv {
        out.line("n,xi,t,residual_id,residual,h_xi,h_t")?;
    }
    let mut summaries = Vec::new();
    let mut ok = true;
    for n in ns {
        let s = sweep(&base, &j, endpoint, n, xi, t, opts)?;
        for r in &s.rows {
            if r.is_skipped() {
                continue;
            }
            match format {
                Format::Csv => out.line(&format!(
                    "{n},{},{},{},{},{},{}",
                    fmt17(r.xi),
                    fmt17(r.t),
                    r.id,
                    fmt17(r.residual),
                    fmt17(r.h_xi),
                    fmt17(r.h_t)
                ))?,
                Format::Json => {
                    let mut v = serde_json::to_value(r)?;
                    v["n"] = json!(n);
                    out.line(&v.to_string())?;
                }
            }
        }
        ok &= s.all_pass();
        summaries.push(json!({
            "n": n,
            "weight": base.label(),
            "J": j.to_json(),
            "endpoint": endpoint,
            "richardson": opts.jet.richardson,
            "ratio_steps": s.ratio_steps,
            "identities": s.summary,
        }));
    }
    out.finish()?;
    write_summary(args.summary.as_deref(), &json!(summaries))?;
    Ok(ok)
}

pub fn painleve(args: &PainleveArgs) -> Result<Outcome> {
    let cfg = args.common.resolve()?;
    let w = cfg.weight()?;
    ensure!(w.t1 == 0.0, "the Painlevé checks run at t = 0");
    let j = cfg.explicit_domain()?;
    let (lo, h, count) = cfg.xi_axis()?;
    ensure!(count >= 2, "the xi axis needs at least two points");
    let hi = lo + (count - 1) as f64 * h;
    let ns = cfg.n_values()?;
    let jo = jet_options(&cfg, 1)?;
    let popts = PainleveOptions { richardson: jo.richardson, stride: jo.stride, ..Default::default() };
    let tol = cfg.raw.residual_tol.unwrap_or(1e-6);
    let endpoint = cfg.raw.endpoint.unwrap_or(0);
    if matches!(w.kind, WeightKind::Custom) {
        bail!("Painlevé checks need the Gaussian or Laguerre weight");
    }
    let format = cfg.format_or(Format::Csv);
    let mut out = Sink::open(cfg.out.as_deref())?;
    if format == Format::Csv {
        out.line("n,xi,residual_id,residual,h")?;
    }
    let mut summaries = Vec::new();
    let mut ok = true;
    for n in ns {
        let profile = gap_profile(&w, &j, endpoint, n, lo, hi, h, popts.margin())?;
        let reports: Vec<PainleveReport> = match w.kind {
            WeightKind::Gaussian => painleve4_residual(&profile, popts, tol)?,
            _ => painleve5_residual(&profile, popts, tol)?,
        };
        for r in &reports {
            for &(x, v) in &r.pointwise {
                match format {
                    Format::Csv => out.line(&format!("{n},{},{},{},{}", fmt17(x), r.id, fmt17(v), fmt17(r.h)))?,
                    Format::Json => {
                        out.line(&json!({"n": n, "xi": x, "residual_id": r.id, "residual": v, "h": r.h}).to_string())?
                    }
                }
            }
            ok &= r.pass;
        }
        let sup: Vec<_> = reports
            .iter()
            .map(|r| json!({"id": r.id, "max_residual": r.residual, "at_xi": r.at_xi, "tolerance": r.tolerance, "pass": r.pass, "h": r.h}))
            .collect();
        summaries.push(json!({"n": n, "weight": w.label(), "J": j.to_json(), "endpoint": endpoint, "richardson": popts.richardson, "identities": sup}));
    }
    out.finish()?;
    write_summary(args.summary.as_deref(), &json!(summaries))?;
    Ok(ok)
}

pub fn oracle(args: &OracleArgs) -> Result<Outcome> {
    let cfg = args.common.resolve()?;
    let w = cfg.weight()?;
    let j: DomainJ = cfg.domain()?;
    let mut out = Sink::open(cfg.out.as_deref())?;
    for n in cfg.n_values()? {
        let r = match args.method {
            Method::Quadrature => gap_bruteforce(&w, &j, n, cfg.raw.tol.unwrap_or(1e-12))?,
            Method::Mc => {
                ensure!(w.t1 == 0.0, "Monte-Carlo sampling runs at t = 0");
                let samples = cfg.raw.samples.unwrap_or(100_000);
                mc_gap(w.kind, n, &j, samples, cfg.raw.seed.unwrap_or(0))?
            }
        };
        let mut v = serde_json::to_value(&r)?;
        v["weight"] = json!(w.label());
        v["J"] = j.to_json();
        out.line(&v.to_string())?;
    }
    out.finish()?;
    Ok(true)
}
