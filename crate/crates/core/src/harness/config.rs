use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use super::experiment::ExperimentSpec;
use crate::error::{Error, Result};

/// Keys accepted in a config file, in `print_config` order.
pub const KEYS: &[&str] = &[
    "n",
    "cp",
    "l",
    "m",
    "k",
    "eta_re",
    "eta_im",
    "ps",
    "nw",
    "w",
    "seed",
    "snr_mode",
    "gamma_db",
    "dof_convention",
    "threshold_mode",
    "gamma_knowledge",
    "snr_db_list",
    "w_list",
    "trials_per_point",
    "output_path",
    "emit",
    "workers",
];

fn parse_value<T: FromStr>(origin: &str, key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| Error::Parse {
        origin: origin.into(),
        message: format!("{key} = `{value}`: {e}"),
    })
}

fn parse_list<T: FromStr>(origin: &str, key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(origin, key, s))
        .collect()
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Sets one field of `spec` from its text form.
pub fn apply(spec: &mut ExperimentSpec, origin: &str, key: &str, value: &str) -> Result<()> {
    let b = &mut spec.base;
    let v = value.trim();
    match key.trim() {
        "n" => b.n = parse_value(origin, key, v)?,
        "cp" => b.cp = parse_value(origin, key, v)?,
        "l" => b.l = parse_value(origin, key, v)?,
        "m" => b.m = parse_value(origin, key, v)?,
        "k" => b.k = parse_value(origin, key, v)?,
        "eta" => b.eta = Complex64::new(parse_value(origin, key, v)?, 0.0),
        "eta_re" => b.eta.re = parse_value(origin, key, v)?,
        "eta_im" => b.eta.im = parse_value(origin, key, v)?,
        "ps" => b.ps = parse_value(origin, key, v)?,
        "nw" => b.nw = parse_value(origin, key, v)?,
        "w" => b.w = parse_value(origin, key, v)?,
        "seed" => b.seed = parse_value(origin, key, v)?,
        "snr_mode" => b.snr_mode = parse_value(origin, key, v)?,
        "gamma_db" => b.gamma_db = parse_value(origin, key, v)?,
        "dof_convention" => b.dof_convention = parse_value(origin, key, v)?,
        "threshold_mode" => b.threshold_mode = parse_value(origin, key, v)?,
        "gamma_knowledge" => b.gamma_knowledge = parse_value(origin, key, v)?,
        "snr_db_list" => spec.snr_db_list = parse_list(origin, key, v)?,
        "w_list" => spec.w_list = parse_list(origin, key, v)?,
        "trials" | "trials_per_point" => {
            spec.trials_per_point = parse_value(origin, key, v)?;
            spec.base.trials = spec.trials_per_point;
        }
        "output_path" => spec.output_path = v.to_string(),
        "emit" => spec.emit = v.parse()?,
        "workers" => spec.workers = parse_value(origin, key, v)?,
        other => {
            return Err(Error::Parse {
                origin: origin.into(),
                message: format!("unknown key `{other}`"),
            })
        }
    }
    Ok(())
}

/// Applies `key = value` lines on top of `spec`. `#` starts a comment.
pub fn apply_text(spec: &mut ExperimentSpec, origin: &str, text: &str) -> Result<()> {
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            origin: format!("{origin}:{}", no + 1),
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        apply(spec, &format!("{origin}:{}", no + 1), key, value)?;
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    apply_text(&mut spec, "<config>", text)?;
    Ok(spec)
}

pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut spec = ExperimentSpec::default();
    apply_text(&mut spec, &path.display().to_string(), &text)?;
    Ok(spec)
}

/// Effective configuration in the file format; parses back to `spec`.
pub fn print_config(spec: &ExperimentSpec) -> String {
    let b = &spec.base;
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("n", b.n.to_string());
    put("cp", b.cp.to_string());
    put("l", b.l.to_string());
    put("m", b.m.to_string());
    put("k", b.k.to_string());
    put("eta_re", b.eta.re.to_string());
    put("eta_im", b.eta.im.to_string());
    put("ps", b.ps.to_string());
    put("nw", b.nw.to_string());
    put("w", b.w.to_string());
    put("seed", b.seed.to_string());
    put("snr_mode", b.snr_mode.to_string());
    put("gamma_db", b.gamma_db.to_string());
    put("dof_convention", b.dof_convention.to_string());
    put("threshold_mode", b.threshold_mode.to_string());
    put("gamma_knowledge", b.gamma_knowledge.to_string());
    put("snr_db_list", join(&spec.snr_db_list));
    put("w_list", join(&spec.w_list));
    put("trials_per_point", spec.trials_per_point.to_string());
    put("output_path", spec.output_path.clone());
    put("emit", spec.emit.as_str().into());
    put("workers", spec.workers.to_string());
    out
}
