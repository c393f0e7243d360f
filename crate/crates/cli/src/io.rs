use anyhow::{Context, Result};
use gradcodec::compressors::{OperatorConfig, OperatorKind};
use gradcodec::Error;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Reals separated by whitespace or commas; `#` starts a comment line and
/// surrounding brackets are ignored.
pub fn parse_vector(text: &str) -> gradcodec::Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        let cleaned: String = line
            .chars()
            .map(|c| if "()[],".contains(c) { ' ' } else { c })
            .collect();
        for tok in cleaned.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: i + 1,
                reason: format!("not a number: {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: format!("non-finite value {tok:?}"),
                });
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 0,
            reason: "empty vector".into(),
        });
    }
    Ok(out)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    parse_vector(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// `# key: value` header lines followed by the values on one line.
pub fn format_vector(metadata: &[(String, String)], values: &[f64]) -> String {
    let mut out = String::new();
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
    let body: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    out.push_str(&body.join(" "));
    out.push('\n');
    out
}

pub fn sidecar_path(message: &Path) -> PathBuf {
    let mut s = message.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn sidecar(config: &OperatorConfig, d: usize, message: u64, bits: usize, distortion: f64) -> Value {
    json!({
        "version": gradcodec::VERSION,
        "operator": config.kind.name(),
        "label": config.label(),
        "nu": config.nu,
        "alpha": config.alpha,
        "k": config.k,
        "levels": config.levels,
        "wrap_omega": config.wrap_omega,
        "seed": config.seed,
        "message": message,
        "d": d,
        "bits": bits,
        "distortion": distortion,
    })
}

fn bad_field(name: &str) -> Error {
    Error::Parse {
        line: 0,
        reason: format!("sidecar field {name:?} has the wrong type"),
    }
}

fn opt_f64(v: &Value, name: &str) -> gradcodec::Result<Option<f64>> {
    match &v[name] {
        Value::Null => Ok(None),
        x => x.as_f64().map(Some).ok_or_else(|| bad_field(name)),
    }
}

fn opt_u64(v: &Value, name: &str) -> gradcodec::Result<Option<u64>> {
    match &v[name] {
        Value::Null => Ok(None),
        x => x.as_u64().map(Some).ok_or_else(|| bad_field(name)),
    }
}

/// Operator settings and message index recorded next to a message file.
pub fn parse_sidecar(text: &str) -> Result<(OperatorConfig, u64)> {
    let v: Value = serde_json::from_str(text)?;
    let kind: OperatorKind = v["operator"]
        .as_str()
        .ok_or_else(|| bad_field("operator"))?
        .parse()
        .map_err(|_| bad_field("operator"))?;
    let config = OperatorConfig {
        kind,
        nu: opt_f64(&v, "nu")?,
        alpha: opt_f64(&v, "alpha")?,
        k: opt_u64(&v, "k")?.map(|k| k as usize),
        levels: opt_u64(&v, "levels")?,
        wrap_omega: opt_f64(&v, "wrap_omega")?,
        seed: opt_u64(&v, "seed")?.ok_or_else(|| bad_field("seed"))?,
    };
    let message = opt_u64(&v, "message")?.unwrap_or(0);
    Ok((config, message))
}

/// Operator spec `name[:key=value,...]`, e.g. `rsd:nu=0.25,wrap=0.25`.
pub fn parse_op_spec(spec: &str, seed: u64) -> gradcodec::Result<OperatorConfig> {
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    let mut config = OperatorConfig {
        kind: name.trim().parse()?,
        nu: None,
        alpha: None,
        k: None,
        levels: None,
        wrap_omega: None,
        seed,
    };
    for kv in params.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected key=value in {spec:?}, got {kv:?}")))?;
        let bad = || Error::InvalidArgument(format!("bad value for {k} in {spec:?}: {v:?}"));
        let f = || v.trim().parse::<f64>().map_err(|_| bad());
        let u = || v.trim().parse::<u64>().map_err(|_| bad());
        match k.trim() {
            "nu" => config.nu = Some(f()?),
            "alpha" => config.alpha = Some(f()?),
            "k" => config.k = Some(u()? as usize),
            "levels" | "s" => config.levels = Some(u()?),
            "wrap" | "wrap-omega" | "wrap_omega" => config.wrap_omega = Some(f()?),
            "seed" => config.seed = u()?,
            other => return Err(Error::InvalidArgument(format!("unknown key {other:?} in {spec:?}"))),
        }
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_text() {
        assert_eq!(parse_vector("(3 4)").unwrap(), vec![3.0, 4.0]);
        assert_eq!(parse_vector("# m\n1, 2\n\n-3e-2\n").unwrap(), vec![1.0, 2.0, -0.03]);
        assert!(matches!(parse_vector("1 x"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_vector("# only\n").is_err());
        assert!(parse_vector("inf").is_err());
    }

    #[test]
    fn vector_format_round_trip() {
        let v = vec![0.1, -2.5e-300, 1e300, 3.0];
        let text = format_vector(&[("operator".into(), "dsd".into())], &v);
        assert_eq!(parse_vector(&text).unwrap(), v);
    }

    #[test]
    fn op_specs() {
        let c = parse_op_spec("rsd:nu=0.25,wrap=0.25", 9).unwrap();
        assert_eq!(c.kind, OperatorKind::Rsd);
        assert_eq!(c.nu, Some(0.25));
        assert_eq!(c.wrap_omega, Some(0.25));
        assert_eq!(c.seed, 9);
        assert_eq!(parse_op_spec("natural", 1).unwrap().kind, OperatorKind::Natural);
        assert!(parse_op_spec("dsd:nu", 1).is_err());
        assert!(parse_op_spec("dsd:mu=1", 1).is_err());
        assert!(parse_op_spec("fft", 1).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let c = parse_op_spec("topk:k=3", 4).unwrap();
        let text = sidecar(&c, 10, 7, 100, 0.5).to_string();
        assert_eq!(parse_sidecar(&text).unwrap(), (c, 7));
    }
}
