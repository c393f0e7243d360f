//! Python bindings: operators, message containers, bounds and compressed descent runs.

use codec::acceptance::{run_selected, Settings};
use codec::bitio::{BitString, Container};
use codec::bounds;
use codec::compressors::{self, OperatorConfig, OperatorKind};
use codec::data::{load_libsvm, SynthSpec};
use codec::geometry::{cap_probability as cap_prob, CapParams};
use codec::optim::{cgd_run, CgdOptions, Prepared, Problem};
use codec::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

create_exception!(gradcodec, DecodeError, PyValueError, "Malformed or truncated message.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::Parse { .. } => {
            PyValueError::new_err(e.to_string())
        }
        Error::Decode { .. } | Error::TruncatedStream { .. } | Error::MalformedCode { .. } => {
            DecodeError::new_err(e.to_string())
        }
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A configured compression operator.
#[pyclass(frozen, module = "gradcodec")]
struct Operator {
    config: OperatorConfig,
}

#[pymethods]
impl Operator {
    #[new]
    #[pyo3(signature = (op, *, nu=None, alpha=None, k=None, levels=None, wrap_omega=None, seed=1))]
    fn new(
        op: &str,
        nu: Option<f64>,
        alpha: Option<f64>,
        k: Option<usize>,
        levels: Option<u64>,
        wrap_omega: Option<f64>,
        seed: u64,
    ) -> PyResult<Self> {
        let kind: OperatorKind = op.parse().map_err(to_py)?;
        Ok(Self {
            config: OperatorConfig {
                kind,
                nu,
                alpha,
                k,
                levels,
                wrap_omega,
                seed,
            },
        })
    }

    #[getter]
    fn label(&self) -> String {
        self.config.label()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.config.seed
    }

    /// Variance class at dimension `d`, e.g. `C(0.1)` or `U(0.25)`.
    fn operator_class(&self, d: usize) -> PyResult<String> {
        Ok(self.config.class(d).map_err(to_py)?.to_string())
    }

    #[pyo3(signature = (x, message=0))]
    fn compress(&self, x: Vec<f64>, message: u64) -> PyResult<Encoded> {
        let enc = compressors::compress(&self.config, &x, message).map_err(to_py)?;
        Ok(Encoded {
            kind: self.config.kind,
            d: x.len(),
            message,
            payload: enc.payload,
            reconstructed: enc.outcome.reconstructed,
            distortion: enc.outcome.distortion,
            trials: enc.trials,
        })
    }

    /// Decodes a GCV1 container produced with this operator.
    #[pyo3(signature = (data, message=0))]
    fn decompress(&self, data: &[u8], message: u64) -> PyResult<Vec<f64>> {
        let c = Container::from_bytes(data).map_err(to_py)?;
        let kind = OperatorKind::from_tag(c.tag).map_err(to_py)?;
        if kind != self.config.kind {
            return Err(DecodeError::new_err(format!(
                "container holds {kind}, operator is {}",
                self.config.kind
            )));
        }
        compressors::decompress(&self.config, &c.payload, c.dim as usize, message).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Operator({}, seed={})", self.config.label(), self.config.seed)
    }
}

/// One compressed message and its encoder-side reconstruction.
#[pyclass(frozen, module = "gradcodec")]
struct Encoded {
    kind: OperatorKind,
    d: usize,
    payload: BitString,
    #[pyo3(get)]
    message: u64,
    #[pyo3(get)]
    reconstructed: Vec<f64>,
    #[pyo3(get)]
    distortion: f64,
    #[pyo3(get)]
    trials: Option<u64>,
}

#[pymethods]
impl Encoded {
    #[getter]
    fn bits(&self) -> usize {
        self.payload.len()
    }

    /// Payload bits as a string of `0` and `1`.
    #[getter]
    fn bit_string(&self) -> String {
        self.payload.to_bit_chars()
    }

    /// GCV1 container bytes.
    fn container<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let c = Container {
            tag: self.kind.tag(),
            dim: u32::try_from(self.d).map_err(|_| PyValueError::new_err("dimension exceeds 2^32"))?,
            payload: self.payload.clone(),
        };
        Ok(PyBytes::new(py, &c.to_bytes().map_err(to_py)?))
    }

    fn __repr__(&self) -> String {
        format!("Encoded(bits={}, distortion={:.6e})", self.payload.len(), self.distortion)
    }
}

#[pyfunction]
fn cap_probability(alpha: f64, d: usize) -> PyResult<f64> {
    Ok(cap_prob(CapParams::new(alpha, d).map_err(to_py)?))
}

/// `(d/2) log2(1/alpha)`.
#[pyfunction]
fn up_lower_bound(alpha: f64, d: usize) -> PyResult<f64> {
    bounds::up_lower_bound(alpha, d).map_err(to_py)
}

/// `-log2 P(alpha, d)`.
#[pyfunction]
fn avg_lower_bound(alpha: f64, d: usize) -> PyResult<f64> {
    bounds::avg_lower_bound(alpha, d).map_err(to_py)
}

#[pyfunction]
fn beta(nu: f64) -> PyResult<f64> {
    bounds::beta(nu).map_err(to_py)
}

#[pyfunction]
fn theorem2_rhs(d: usize) -> PyResult<f64> {
    bounds::theorem2_rhs(d).map_err(to_py)
}

#[pyfunction]
fn savings_table<'py>(py: Python<'py>, d: usize, k: usize) -> PyResult<Vec<Bound<'py, PyDict>>> {
    bounds::savings_table(d, k)
        .map_err(to_py)?
        .into_iter()
        .map(|r| {
            let row = PyDict::new(py);
            row.set_item("method", r.method)?;
            row.set_item("bits", r.bits)?;
            row.set_item("iteration_factor", r.iteration_factor)?;
            row.set_item("bit_ratio", r.bit_ratio)?;
            row.set_item("savings", r.savings)?;
            Ok(row)
        })
        .collect()
}

/// Compressed gradient descent on a LIBSVM file or `synth:` spec.
/// Returns a dict with the label, status and `(t, bits, rel_err, distortion)` rows.
#[pyfunction]
#[pyo3(signature = (dataset, operator, *, loss=None, eps=1e-4, max_iter=1_000_000))]
fn cgd<'py>(
    py: Python<'py>,
    dataset: &str,
    operator: PyRef<'py, Operator>,
    loss: Option<&str>,
    eps: f64,
    max_iter: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let (ds, synth_logistic) = if dataset.starts_with("synth:") {
        let spec = SynthSpec::parse(dataset).map_err(to_py)?;
        (spec.generate(), spec.logistic)
    } else {
        (load_libsvm(std::path::Path::new(dataset)).map_err(to_py)?, false)
    };
    let logistic = match loss {
        None => synth_logistic,
        Some("ridge") => false,
        Some("logistic") => true,
        Some(other) => return Err(PyValueError::new_err(format!("unknown loss {other:?}"))),
    };
    let problem = if logistic { Problem::logistic(&ds) } else { Problem::ridge(&ds) }.map_err(to_py)?;
    let config = operator.config.clone();
    let opts = CgdOptions {
        eps,
        max_iter,
        ..CgdOptions::default()
    };
    let trace = py
        .detach(|| Prepared::new(problem).and_then(|prep| cgd_run(&prep, &config, &opts)))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("label", &trace.label)?;
    out.set_item("status", trace.status.to_string())?;
    out.set_item("iterations", trace.iterations())?;
    out.set_item("total_bits", trace.total_bits())?;
    let rows: Vec<(u64, u64, f64, f64)> = trace.rows.iter().map(|r| (r.t, r.bits, r.rel_err, r.distortion)).collect();
    out.set_item("rows", rows)?;
    out.set_item("csv", trace.to_csv())?;
    Ok(out)
}

/// Runs acceptance criteria at the given scale and returns `(id, passed, summary)` tuples.
#[pyfunction]
#[pyo3(signature = (criteria, scale=0.1))]
fn selftest(py: Python<'_>, criteria: Vec<u8>, scale: f64) -> PyResult<Vec<(u8, bool, String)>> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(PyValueError::new_err("scale must lie in (0, 1]"));
    }
    let reports = py.detach(|| run_selected(&Settings::reduced(scale), &criteria, |_| {}));
    Ok(reports.iter().map(|r| (r.id, r.passed(), r.summary_line())).collect())
}

#[pymodule]
fn gradcodec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", codec::VERSION)?;
    m.add("DecodeError", m.py().get_type::<DecodeError>())?;
    m.add_class::<Operator>()?;
    m.add_class::<Encoded>()?;
    m.add_function(wrap_pyfunction!(cap_probability, m)?)?;
    m.add_function(wrap_pyfunction!(up_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(avg_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(beta, m)?)?;
    m.add_function(wrap_pyfunction!(theorem2_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(savings_table, m)?)?;
    m.add_function(wrap_pyfunction!(cgd, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
