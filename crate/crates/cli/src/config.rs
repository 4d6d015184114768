use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use gapcert::measure::{parse_domain, BoundValue, DomainJ, WeightConfig, WeightSpec, DEFAULT_TOL};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum NSpec {
    Single(usize),
    Range([usize; 2]),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AxisSpec {
    fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        ensure!(parts.len() == 3, "axis must be START:STOP:STEP, got {text:?}");
        let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad axis value {s:?}"));
        Ok(Self { start: num(parts[0])?, stop: num(parts[1])?, step: num(parts[2])? })
    }

    /// `(start, step, count)`; `stop` is rounded to the nearest grid point.
    pub fn resolve(&self, name: &str) -> Result<(f64, f64, usize)> {
        ensure!(self.start.is_finite() && self.stop.is_finite(), "{name} axis bounds must be finite");
        ensure!(self.step > 0.0 && self.step.is_finite(), "{name} axis step must be positive");
        ensure!(self.stop >= self.start, "{name} axis has stop < start");
        let count = ((self.stop - self.start) / self.step).round() as usize + 1;
        ensure!(count <= 1_000_000, "{name} axis has {count} points");
        Ok((self.start, self.step, count))
    }

    pub fn points(&self, name: &str) -> Result<Vec<f64>> {
        let (s, h, c) = self.resolve(name)?;
        Ok((0..c).map(|k| s + k as f64 * h).collect())
    }
}

/// The JSON configuration document. Every key is optional; flags override it.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub weight: Option<WeightConfig>,
    #[serde(rename = "J")]
    pub j: Option<Vec<[BoundValue; 2]>>,
    pub tol: Option<f64>,
    pub n: Option<NSpec>,
    pub xi: Option<AxisSpec>,
    pub t: Option<AxisSpec>,
    pub endpoint: Option<usize>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub richardson: Option<u32>,
    pub stride: Option<usize>,
    pub residual_tol: Option<f64>,
}

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON configuration file; flags below override its keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<std::path::PathBuf>,
    /// Weight kind: gaussian, laguerre or custom.
    #[arg(long, value_name = "KIND")]
    pub weight: Option<String>,
    /// Laguerre exponent α (> -1).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Deformation coefficient t of the weight e^{-V(x) + t x}.
    #[arg(long, allow_hyphen_values = true)]
    pub t1: Option<f64>,
    /// Polynomial coefficients c_0,c_1,... of V for the custom weight.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Option<Vec<f64>>,
    /// One interval LO,HI of J (repeatable; "inf" and "-inf" allowed). Replaces J from the config.
    #[arg(long = "j", value_name = "LO,HI", allow_hyphen_values = true)]
    pub j: Vec<String>,
    /// Number of particles, or the first of a range with --n-max.
    #[arg(long)]
    pub n: Option<usize>,
    /// Last n of a range.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Quadrature tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// ξ axis as START:STOP:STEP.
    #[arg(long, value_name = "START:STOP:STEP", allow_hyphen_values = true)]
    pub xi: Option<String>,
    /// t axis as START:STOP:STEP.
    #[arg(long, value_name = "START:STOP:STEP", allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Index of the moving endpoint of J (ascending, finite endpoints only).
    #[arg(long)]
    pub endpoint: Option<usize>,
    /// Output format of the main table.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Monte-Carlo seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo sample count.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Richardson levels of the finite-difference jets.
    #[arg(long)]
    pub richardson: Option<u32>,
    /// Stencil stride in grid cells.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Pass threshold of the residual checks.
    #[arg(long)]
    pub residual_tol: Option<f64>,
    /// Write the main table to PATH instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<std::path::PathBuf>,
}

/// Configuration after merging the file with the flags.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub raw: RunConfig,
    pub out: Option<std::path::PathBuf>,
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<Resolved> {
        let mut c = match &self.config {
            Some(p) => read_config(p)?,
            None => RunConfig::default(),
        };
        if let Some(kind) = &self.weight {
            let old = c.weight.take();
            c.weight = Some(WeightConfig {
                kind: kind.clone(),
                alpha: old.as_ref().and_then(|w| w.alpha),
                t1: old.as_ref().and_then(|w| w.t1),
                coeffs: old.and_then(|w| w.coeffs),
            });
        }
        if self.alpha.is_some() || self.t1.is_some() || self.coeffs.is_some() {
            let w = c.weight.as_mut().context("--alpha, --t1 and --coeffs need a weight kind")?;
            if self.alpha.is_some() {
                w.alpha = self.alpha;
            }
            if self.t1.is_some() {
                w.t1 = self.t1;
            }
            if self.coeffs.is_some() {
                w.coeffs = self.coeffs.clone();
            }
        }
        if !self.j.is_empty() {
            c.j = Some(self.j.iter().map(|s| parse_interval(s)).collect::<Result<_>>()?);
        }
        match (self.n, self.n_max) {
            (Some(a), Some(b)) => c.n = Some(NSpec::Range([a, b])),
            (Some(a), None) => c.n = Some(NSpec::Single(a)),
            (None, Some(b)) => {
                let lo = match &c.n {
                    Some(NSpec::Single(a)) | Some(NSpec::Range([a, _])) => *a,
                    None => 1,
                };
                c.n = Some(NSpec::Range([lo, b]));
            }
            (None, None) => {}
        }
        if let Some(x) = &self.xi {
            c.xi = Some(AxisSpec::parse(x)?);
        }
        if let Some(t) = &self.t {
            c.t = Some(AxisSpec::parse(t)?);
        }
        macro_rules! over {
            ($($f:ident),*) => { $( if self.$f.is_some() { c.$f = self.$f; } )* };
        }
        over!(tol, endpoint, format, seed, samples, richardson, stride, residual_tol);
        Ok(Resolved { raw: c, out: self.out.clone() })
    }
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_interval(text: &str) -> Result<[BoundValue; 2]> {
    let parts: Vec<&str> = text.split(',').collect();
    ensure!(parts.len() == 2, "interval must be LO,HI, got {text:?}");
    Ok([BoundValue::Text(parts[0].trim().into()), BoundValue::Text(parts[1].trim().into())])
}

impl Resolved {
    pub fn has_weight(&self) -> bool {
        self.raw.weight.is_some()
    }

    /// Weight including its deformation `t1`.
    pub fn weight(&self) -> Result<WeightSpec> {
        let w = self.raw.weight.as_ref().context("configuration has no weight")?;
        Ok(w.to_spec()?)
    }

    pub fn domain(&self) -> Result<DomainJ> {
        Ok(match &self.raw.j {
            Some(v) => parse_domain(v)?,
            None => DomainJ::whole_line(),
        })
    }

    pub fn explicit_domain(&self) -> Result<DomainJ> {
        ensure!(self.raw.j.is_some(), "configuration has no J");
        self.domain()
    }

    pub fn tol(&self) -> Result<f64> {
        let t = self.raw.tol.unwrap_or(DEFAULT_TOL);
        ensure!(t > 0.0 && t < 1.0, "tol must lie in (0, 1), got {t}");
        Ok(t)
    }

    pub fn n_values(&self) -> Result<Vec<usize>> {
        let (a, b) = match self.raw.n.as_ref().context("configuration has no n")? {
            NSpec::Single(a) => (*a, *a),
            NSpec::Range([a, b]) => (*a, *b),
        };
        if a == 0 || b < a {
            bail!("invalid n range {a}..={b}");
        }
        Ok((a..=b).collect())
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.raw.format.unwrap_or(default)
    }

    pub fn xi_axis(&self) -> Result<(f64, f64, usize)> {
        self.raw.xi.as_ref().context("configuration has no xi axis")?.resolve("xi")
    }

    pub fn t_axis(&self) -> Result<(f64, f64, usize)> {
        self.raw.t.as_ref().context("configuration has no t axis")?.resolve("t")
    }
}
