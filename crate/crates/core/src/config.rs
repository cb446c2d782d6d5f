//! `key = value` configuration files.
//!
//! `#` starts a comment. Keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `problem` | `landau2d`, `landau4d` or `twostream4d` | required |
//! | `method` | `spline`, `dg` (with `dg_order`) or `dgN`; a comma list for bench and convergence | required |
//! | `dg_order` | nodes per cell for `method = dg`; a comma list is allowed | required for `dg` |
//! | `dof` | dof per direction; a comma list for bench and convergence | required unless every `dof_*` is set |
//! | `dof_x1`, `dof_x2`, `dof_v1`, `dof_v2` | per-axis dof (`run` only) | `dof` |
//! | `tau` | time step | `0.1` |
//! | `t_end` | final time | required for `run` |
//! | `layout` | `transpose` or `strided` | `transpose` for spline, `strided` for dG |
//! | `cache_block` | lines per block for strided sweeps | `8` |
//! | `workers` | worker threads | all cores |
//! | `diag_every` | steps between diagnostics records | `1` |
//! | `out_csv` | output CSV path | `diagnostics.csv`, `bench.csv` or `convergence.csv` |
//! | `snapshot_times` | comma list of times for `VLF1` snapshots | none |
//! | `snapshot_dir` | directory for snapshots | CSV stem + `_snapshots` |
//! | `poisson_sampling` | dG density sampling, `centers` or `subcell` | `centers` |
//! | `steps` | timed steps per bench row | `5` |
//! | `t_eval` | comma list of comparison times (convergence) | required for `convergence` |
//! | `reference_dof` | spline reference resolution (convergence) | required for `convergence` |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::DgSampling;
use crate::grid::{LayoutStrategy, Scheme, DEFAULT_CACHE_BLOCK};
use crate::problem::{ProblemKind, ProblemSpec};

pub const KEYS: &[&str] = &[
    "problem",
    "method",
    "dg_order",
    "dof",
    "dof_x1",
    "dof_x2",
    "dof_v1",
    "dof_v2",
    "tau",
    "t_end",
    "layout",
    "cache_block",
    "workers",
    "diag_every",
    "out_csv",
    "snapshot_times",
    "snapshot_dir",
    "poisson_sampling",
    "steps",
    "t_eval",
    "reference_dof",
];

const AXIS_KEYS: [&str; 4] = ["dof_x1", "dof_x2", "dof_v1", "dof_v2"];

/// Raw entries of a configuration file, in key order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| bad(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(bad(format!("line {}: unknown key `{key}`", n + 1)));
            }
            if value.is_empty() {
                return Err(bad(format!("line {}: key `{key}` has no value", n + 1)));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(bad(format!("line {}: key `{key}` given twice", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| bad(format!("invalid value `{v}` for `{key}`"))))
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| x.trim().parse::<T>().map_err(|_| bad(format!("invalid entry `{}` in `{key}`", x.trim()))))
                    .collect()
            })
            .transpose()
    }
}

/// A configuration with defaults applied and values checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub problem: ProblemSpec,
    pub schemes: Vec<Scheme>,
    pub dofs: Vec<usize>,
    /// Per-axis dof when any `dof_*` key is given.
    pub axis_dofs: Option<Vec<usize>>,
    pub tau: f64,
    pub t_end: Option<f64>,
    pub layout: Option<LayoutStrategy>,
    pub cache_block: usize,
    pub workers: Option<usize>,
    pub diag_every: usize,
    pub out_csv: Option<PathBuf>,
    pub snapshot_times: Vec<f64>,
    pub snapshot_dir: Option<PathBuf>,
    pub sampling: DgSampling,
    pub steps: usize,
    pub t_eval: Vec<f64>,
    pub reference_dof: Option<usize>,
}

impl Settings {
    pub fn from_file(file: &ConfigFile) -> Result<Self> {
        let problem_name = file.get("problem").ok_or_else(|| bad("missing key `problem`"))?;
        let kind = ProblemKind::parse(problem_name).ok_or_else(|| bad(format!("unknown problem `{problem_name}`")))?;
        let problem = ProblemSpec::from_kind(kind);

        let orders: Option<Vec<usize>> = file.list("dg_order")?;
        let methods = file.get("method").ok_or_else(|| bad("missing key `method`"))?;
        let mut schemes = Vec::new();
        for m in methods.split(',').map(str::trim) {
            if m == "dg" {
                let orders = orders.as_ref().ok_or_else(|| bad("method `dg` needs `dg_order`"))?;
                for &o in orders {
                    schemes.push(Scheme::dg(o).map_err(|e| bad(e.to_string()))?);
                }
            } else {
                schemes.push(Scheme::parse(m).ok_or_else(|| bad(format!("unknown method `{m}`")))?);
            }
        }
        if orders.is_some() && !methods.split(',').any(|m| m.trim() == "dg") {
            return Err(bad("`dg_order` is only used with `method = dg`"));
        }

        let ndim = problem.ndim();
        let dofs: Vec<usize> = file.list("dof")?.unwrap_or_default();
        let axis_keys: Vec<&str> = if ndim == 2 { vec!["dof_x1", "dof_v1"] } else { AXIS_KEYS.to_vec() };
        for k in AXIS_KEYS {
            if file.get(k).is_some() && !axis_keys.contains(&k) {
                return Err(bad(format!("`{k}` does not apply to {problem_name}")));
            }
        }
        let axis_dofs = if axis_keys.iter().any(|k| file.get(k).is_some()) {
            let mut v = Vec::with_capacity(ndim);
            for k in &axis_keys {
                match (file.value::<usize>(k)?, dofs.as_slice()) {
                    (Some(n), _) => v.push(n),
                    (None, [d]) => v.push(*d),
                    (None, _) => return Err(bad(format!("missing `{k}` and no single `dof` to fall back on"))),
                }
            }
            Some(v)
        } else {
            None
        };
        if dofs.is_empty() && axis_dofs.is_none() {
            return Err(bad("missing key `dof`"));
        }
        if dofs.iter().chain(axis_dofs.iter().flatten()).any(|&d| d == 0) {
            return Err(bad("dof must be positive"));
        }

        let layout = match file.get("layout") {
            None => None,
            Some("transpose") => Some(LayoutStrategy::Transpose),
            Some("strided") => Some(LayoutStrategy::Strided),
            Some(other) => return Err(bad(format!("unknown layout `{other}`"))),
        };
        let sampling = match file.get("poisson_sampling") {
            None | Some("centers") => DgSampling::CellCenters,
            Some("subcell") => DgSampling::Subcell,
            Some(other) => return Err(bad(format!("unknown poisson_sampling `{other}`"))),
        };

        let s = Settings {
            problem,
            schemes,
            dofs,
            axis_dofs,
            tau: file.value("tau")?.unwrap_or(crate::driver::DEFAULT_TAU),
            t_end: file.value("t_end")?,
            layout,
            cache_block: file.value("cache_block")?.unwrap_or(DEFAULT_CACHE_BLOCK),
            workers: file.value("workers")?,
            diag_every: file.value("diag_every")?.unwrap_or(1),
            out_csv: file.get("out_csv").map(PathBuf::from),
            snapshot_times: file.list("snapshot_times")?.unwrap_or_default(),
            snapshot_dir: file.get("snapshot_dir").map(PathBuf::from),
            sampling,
            steps: file.value("steps")?.unwrap_or(5),
            t_eval: file.list("t_eval")?.unwrap_or_default(),
            reference_dof: file.value("reference_dof")?,
        };
        if !(s.tau.is_finite() && s.tau > 0.0) {
            return Err(bad(format!("tau must be positive, got {}", s.tau)));
        }
        if s.cache_block == 0 || s.diag_every == 0 || s.workers == Some(0) {
            return Err(bad("cache_block, diag_every and workers must be positive"));
        }
        Ok(s)
    }

    /// Layout strategy for a scheme: the configured one or the method default.
    pub fn strategy_for(&self, scheme: Scheme) -> LayoutStrategy {
        self.layout.unwrap_or(crate::driver::default_strategy(scheme.method))
    }

    /// The single scheme of a `run` configuration.
    pub fn single_scheme(&self) -> Result<Scheme> {
        match self.schemes.as_slice() {
            [s] => Ok(*s),
            _ => Err(bad("`run` takes exactly one method")),
        }
    }

    /// Per-axis dof for a `run` configuration.
    pub fn run_dofs(&self) -> Result<Vec<usize>> {
        match (&self.axis_dofs, self.dofs.as_slice()) {
            (Some(v), _) => Ok(v.clone()),
            (None, [d]) => Ok(vec![*d; self.problem.ndim()]),
            _ => Err(bad("`run` takes a single `dof` value")),
        }
    }
}
