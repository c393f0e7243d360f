//! Datasets: LIBSVM text parsing and seeded synthetic problems.

use crate::error::{Error, Result};
use crate::rng::StreamKey;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Dense feature matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// File path or synthetic descriptor.
    pub source: String,
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
    /// Whether columns were rescaled to `[-1, 1]`.
    pub scaled: bool,
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

/// Parses `label idx:val idx:val ...` lines with 1-based, strictly increasing
/// indices. Blank lines and lines starting with `#` are skipped.
pub fn parse_libsvm(text: &str, name: &str) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut d = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad label {label_tok:?}")))?;
        if !label.is_finite() {
            return Err(parse_err(line_no, format!("non-finite label {label_tok:?}")));
        }
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, format!("expected idx:val, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad index in {tok:?}")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad value in {tok:?}")))?;
            if idx == 0 {
                return Err(parse_err(line_no, "indices start at 1"));
            }
            if idx <= last {
                return Err(parse_err(
                    line_no,
                    format!("index {idx} does not increase after {last}"),
                ));
            }
            if !val.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value in {tok:?}")));
            }
            last = idx;
            row.push((idx - 1, val));
        }
        d = d.max(last);
        labels.push(label);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no data lines"));
    }
    let mut features = DMatrix::zeros(rows.len(), d);
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            features[(r, c)] = v;
        }
    }
    Ok(Dataset {
        name: name.to_string(),
        source: name.to_string(),
        features,
        labels,
        scaled: false,
    })
}

pub fn load_libsvm(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut ds = parse_libsvm(&text, &name)?;
    ds.source = path.display().to_string();
    Ok(ds)
}

/// Reads a manifest of `name path` lines; relative paths resolve against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<(String, PathBuf)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, file) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| parse_err(i + 1, "expected `name path`"))?;
        out.push((name.to_string(), base.join(file.trim())));
    }
    Ok(out)
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    /// LIBSVM text of the nonzero entries. An explicit zero is written in the
    /// last column when it is otherwise empty, so the dimension survives a reparse.
    pub fn to_libsvm(&self) -> String {
        let d = self.d();
        let last_col_empty = d > 0 && self.features.column(d - 1).iter().all(|v| *v == 0.0);
        let mut out = String::new();
        for r in 0..self.n() {
            let _ = write!(out, "{}", self.labels[r]);
            for c in 0..d {
                let v = self.features[(r, c)];
                if v != 0.0 || (r == 0 && c == d - 1 && last_col_empty) {
                    let _ = write!(out, " {}:{}", c + 1, v);
                }
            }
            out.push('\n');
        }
        out
    }

    /// Labels mapped to `{-1, +1}`: `{0, 1}` maps 0 to -1, `{1, 2}` maps 2 to -1,
    /// `{-1, 1}` is kept; any other label set is an error.
    pub fn binary_labels(&self) -> Result<Vec<f64>> {
        let has = |v: f64| self.labels.contains(&v);
        let only = |set: &[f64]| self.labels.iter().all(|l| set.contains(l));
        let map: fn(f64) -> f64 = if only(&[-1.0, 1.0]) {
            |l| l
        } else if only(&[0.0, 1.0]) && has(0.0) {
            |l| if l == 0.0 { -1.0 } else { 1.0 }
        } else if only(&[1.0, 2.0]) && has(2.0) {
            |l| if l == 2.0 { -1.0 } else { 1.0 }
        } else {
            return Err(Error::invalid(format!(
                "dataset {} does not have binary labels",
                self.name
            )));
        };
        Ok(self.labels.iter().map(|&l| map(l)).collect())
    }

    /// Divides every column by its largest magnitude, mapping values into `[-1, 1]`.
    pub fn scale_columns(&mut self) {
        for mut col in self.features.column_iter_mut() {
            let m = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if m > 0.0 {
                col /= m;
            }
        }
        self.scaled = true;
    }
}

fn gaussian_matrix(rng: &mut impl Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
}

/// Gaussian features, planted Gaussian parameter `x_bar`, labels `A x_bar + noise * N(0, 1)`.
/// Returns the dataset and `x_bar`.
pub fn synth_regression_planted(d: usize, n: usize, noise: f64, seed: u64) -> (Dataset, Vec<f64>) {
    let mut rng = StreamKey::new(seed, 0).rng();
    let planted = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
    let features = gaussian_matrix(&mut rng, n, d);
    let clean = &features * &planted;
    let labels = clean
        .iter()
        .map(|v| v + noise * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let ds = Dataset {
        name: format!("synth-ridge-d{d}-n{n}"),
        source: format!("synth:ridge,d={d},n={n},noise={noise},seed={seed}"),
        features,
        labels,
        scaled: false,
    };
    (ds, planted.iter().copied().collect())
}

pub fn synth_regression(d: usize, n: usize, noise: f64, seed: u64) -> Dataset {
    synth_regression_planted(d, n, noise, seed).0
}

/// Gaussian features kept only when `|<a, w>| >= margin` for a planted unit
/// vector `w`; labels are `sign(<a, w>)`. Returns the dataset and `w`.
pub fn synth_classification_planted(
    d: usize,
    n: usize,
    margin: f64,
    seed: u64,
) -> (Dataset, Vec<f64>) {
    let mut rng = StreamKey::new(seed, 0).rng();
    let mut w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter_mut().for_each(|v| *v /= norm);
    let mut features = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for r in 0..n {
        let dot = loop {
            row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            let dot: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            if dot.abs() >= margin && dot != 0.0 {
                break dot;
            }
        };
        for (c, v) in row.iter().enumerate() {
            features[(r, c)] = *v;
        }
        labels.push(dot.signum());
    }
    let ds = Dataset {
        name: format!("synth-logistic-d{d}-n{n}"),
        source: format!("synth:logistic,d={d},n={n},margin={margin},seed={seed}"),
        features,
        labels,
        scaled: false,
    };
    (ds, w)
}

pub fn synth_classification(d: usize, n: usize, margin: f64, seed: u64) -> Dataset {
    synth_classification_planted(d, n, margin, seed).0
}

/// Synthetic dataset descriptor, written `synth:ridge,d=50,n=200,noise=0.1,seed=7`
/// or `synth:logistic,d=50,n=200,margin=0.1,seed=7`. Omitted keys take these defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub logistic: bool,
    pub d: usize,
    pub n: usize,
    pub noise: f64,
    pub margin: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let body = spec
            .strip_prefix("synth:")
            .ok_or_else(|| Error::invalid(format!("synthetic spec must start with synth:, got {spec:?}")))?;
        let mut parts = body.split(',');
        let logistic = match parts.next().unwrap_or_default() {
            "ridge" | "regression" => false,
            "logistic" | "classification" => true,
            other => return Err(Error::invalid(format!("unknown synthetic kind {other:?}"))),
        };
        let mut s = SynthSpec {
            logistic,
            d: 50,
            n: 200,
            noise: 0.1,
            margin: 0.1,
            seed: 7,
        };
        for kv in parts {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value, got {kv:?}")))?;
            let bad = || Error::invalid(format!("bad value for {k}: {v:?}"));
            match k.trim() {
                "d" => s.d = v.parse().map_err(|_| bad())?,
                "n" => s.n = v.parse().map_err(|_| bad())?,
                "noise" => s.noise = v.parse().map_err(|_| bad())?,
                "margin" => s.margin = v.parse().map_err(|_| bad())?,
                "seed" => s.seed = v.parse().map_err(|_| bad())?,
                other => return Err(Error::invalid(format!("unknown key {other:?}"))),
            }
        }
        if s.d == 0 || s.n == 0 {
            return Err(Error::invalid("synthetic d and n must be at least 1"));
        }
        Ok(s)
    }

    pub fn generate(&self) -> Dataset {
        if self.logistic {
            synth_classification(self.d, self.n, self.margin, self.seed)
        } else {
            synth_regression(self.d, self.n, self.noise, self.seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_example() {
        let ds = parse_libsvm("1 1:0.5 3:2.0\n-1 2:1.0", "t").unwrap();
        assert_eq!((ds.n(), ds.d()), (2, 3));
        assert_eq!(ds.features.row(0).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.0, 2.0]);
        assert_eq!(ds.features.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);
        assert_eq!(ds.labels, vec![1.0, -1.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(parse_libsvm("1 1:1\n1 3:1 2:1", "t"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_libsvm("1 3:1 3:1", "t"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_libsvm("x 1:1", "t"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_libsvm("1 0:1", "t"), Err(Error::Parse { .. })));
        assert!(matches!(parse_libsvm("1 a:1", "t"), Err(Error::Parse { .. })));
        assert!(matches!(parse_libsvm("1 1=1", "t"), Err(Error::Parse { .. })));
        assert!(matches!(parse_libsvm("", "t"), Err(Error::Parse { .. })));
        assert!(matches!(parse_libsvm("\n# only a comment\n", "t"), Err(Error::Parse { .. })));
    }

    #[test]
    fn label_mapping() {
        let ds = parse_libsvm("1 1:1\n2 1:1\n1 1:2", "mushrooms").unwrap();
        assert_eq!(ds.binary_labels().unwrap(), vec![1.0, -1.0, 1.0]);
        let ds = parse_libsvm("0 1:1\n1 1:1", "t").unwrap();
        assert_eq!(ds.binary_labels().unwrap(), vec![-1.0, 1.0]);
        let ds = parse_libsvm("-1 1:1\n1 1:1", "t").unwrap();
        assert_eq!(ds.binary_labels().unwrap(), vec![-1.0, 1.0]);
        let ds = parse_libsvm("3 1:1\n1 1:1", "t").unwrap();
        assert!(ds.binary_labels().is_err());
    }

    #[test]
    fn round_trip_keeps_trailing_dimension() {
        let ds = parse_libsvm("1 1:0.5 4:0\n-1 2:1e-7", "t").unwrap();
        assert_eq!(ds.d(), 4);
        let again = parse_libsvm(&ds.to_libsvm(), "t").unwrap();
        assert_eq!(again, ds);
    }

    #[test]
    fn noiseless_regression_is_reproducible() {
        let (a, planted) = synth_regression_planted(5, 20, 0.0, 3);
        let b = synth_regression(5, 20, 0.0, 3);
        assert_eq!(a, b);
        let x = DVector::from_vec(planted);
        let y = DVector::from_vec(a.labels.clone());
        assert!((&a.features * x - y).amax() < 1e-12);
    }

    #[test]
    fn classification_respects_margin() {
        let (ds, w) = synth_classification_planted(10, 100, 0.3, 1);
        let w = DVector::from_vec(w);
        for (r, &y) in ds.labels.iter().enumerate() {
            let m = y * ds.features.row(r).transpose().dot(&w);
            assert!(m >= 0.3);
        }
        assert_eq!(ds, synth_classification(10, 100, 0.3, 1));
    }

    #[test]
    fn scaling() {
        let mut ds = parse_libsvm("1 1:4 2:-1\n1 1:-2 2:0.5", "t").unwrap();
        ds.scale_columns();
        assert_eq!(ds.features[(0, 0)], 1.0);
        assert_eq!(ds.features[(1, 0)], -0.5);
        assert_eq!(ds.features[(0, 1)], -1.0);
        assert!(ds.scaled);
    }

    #[test]
    fn synth_spec() {
        let s = SynthSpec::parse("synth:logistic,d=20,seed=3").unwrap();
        assert!(s.logistic);
        assert_eq!((s.d, s.n, s.seed), (20, 200, 3));
        assert!(SynthSpec::parse("synth:nope").is_err());
        assert!(SynthSpec::parse("synth:ridge,d=0").is_err());
        assert!(SynthSpec::parse("ridge").is_err());
        assert_eq!(SynthSpec::parse("synth:ridge").unwrap().generate().d(), 50);
    }

    #[test]
    fn large_file_parses_quickly() {
        let mut text = String::new();
        for i in 0..100_000 {
            let _ = writeln!(text, "{} 1:{} 3:0.25 7:-1.5", if i % 2 == 0 { 1 } else { -1 }, i);
        }
        let start = std::time::Instant::now();
        let ds = parse_libsvm(&text, "big").unwrap();
        assert_eq!(ds.n(), 100_000);
        // Generous for unoptimized test builds.
        assert!(start.elapsed().as_secs_f64() < 5.0);
    }
}
