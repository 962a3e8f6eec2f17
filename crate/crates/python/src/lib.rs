//! Python bindings. Vectors cross the boundary as lists of ints, records as
//! their JSON text, reports as JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fuzzylink::analysis::{self, BigRational, DensityQuery};
use fuzzylink::attacks::{attack_records, AttackOptions};
use fuzzylink::commitment::{self, EnrollOptions, HashAlg, Verification};
use fuzzylink::experiments::{self, ExperimentConfig, ReportFormat, TrialMode};
use fuzzylink::transforms::{self, TransformKind};
use fuzzylink::{CodeDescriptor, FieldVector, LinearCode};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_vector(code: &LinearCode, elems: Vec<u16>) -> PyResult<FieldVector> {
    if elems.len() != code.n() {
        return Err(err(format!("expected {} entries, got {}", code.n(), elems.len())));
    }
    FieldVector::from_elems(code.field(), elems).map_err(err)
}

/// A linear code built from a descriptor such as `"bch:31:5"`.
#[pyclass(frozen, name = "Code")]
struct PyCode {
    inner: LinearCode,
}

#[pymethods]
impl PyCode {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let descriptor: CodeDescriptor = spec.parse().map_err(err)?;
        Ok(PyCode { inner: descriptor.build().map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.radius()
    }

    fn encode(&self, message: Vec<u16>) -> PyResult<Vec<u16>> {
        if message.len() != self.inner.k() {
            return Err(err(format!("expected {} message symbols", self.inner.k())));
        }
        let m = FieldVector::from_elems(self.inner.field(), message).map_err(err)?;
        Ok(self.inner.encode(&m).map_err(err)?.elems())
    }

    /// Nearest codeword within the decoding radius, or None.
    fn decode(&self, word: Vec<u16>) -> PyResult<Option<Vec<u16>>> {
        let v = to_vector(&self.inner, word)?;
        match self.inner.decode_bounded(&v) {
            Ok(c) => Ok(Some(c.elems())),
            Err(fuzzylink::CodeError::DecodeFailure) => Ok(None),
            Err(e) => Err(err(e)),
        }
    }

    fn is_codeword(&self, word: Vec<u16>) -> PyResult<bool> {
        self.inner.is_codeword(&to_vector(&self.inner, word)?).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Code('{}', n={}, k={}, d={})", self.inner.descriptor(), self.inner.n(), self.inner.k(), self.inner.d())
    }
}

/// A published record: commitment, transform and optional codeword hash.
#[pyclass(frozen, name = "Record")]
struct PyRecord {
    inner: commitment::Record,
}

#[pymethods]
impl PyRecord {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyRecord { inner: commitment::Record::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn code(&self) -> String {
        self.inner.code.to_string()
    }

    #[getter]
    fn commitment(&self) -> Vec<u16> {
        self.inner.commitment.elems()
    }

    #[getter]
    fn has_hash(&self) -> bool {
        self.inner.hash.is_some()
    }

    /// True when `w` opens the commitment.
    fn verify(&self, w: Vec<u16>) -> PyResult<bool> {
        let code = self.inner.build_code().map_err(err)?;
        let w = to_vector(&code, w)?;
        Ok(matches!(commitment::verify(&self.inner, &code, &w).map_err(err)?, Verification::Accept { .. }))
    }
}

/// Commits to `w` under a random transform of the given family.
#[pyfunction]
#[pyo3(signature = (code, w, seed, transform = "bit-permutation", hash = false, noise = 0))]
fn enroll(code: &PyCode, w: Vec<u16>, seed: u64, transform: &str, hash: bool, noise: usize) -> PyResult<PyRecord> {
    let code = &code.inner;
    let w = to_vector(code, w)?;
    let kind: TransformKind = transform.parse().map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = transforms::random_transform(kind, code.n(), code.field(), &mut rng);
    let options = EnrollOptions { hash: hash.then_some(HashAlg::Sha256), noise_flips: noise };
    Ok(PyRecord { inner: commitment::enroll(&w, code, &t, options, &mut rng).map_err(err)? })
}

/// Attacks two records; returns a dict with the verdict and, when linked,
/// the recovered feature vectors.
#[pyfunction]
#[pyo3(signature = (rec1, rec2, b, use_hash = false))]
fn attack_pair<'py>(
    py: Python<'py>,
    rec1: &PyRecord,
    rec2: &PyRecord,
    b: usize,
    use_hash: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let (r1, r2) = (&rec1.inner, &rec2.inner);
    if r1.code != r2.code {
        return Err(err("records use different codes"));
    }
    let code = r1.build_code().map_err(err)?;
    let (strategy, outcome) =
        py.detach(|| attack_records(&code, r1, r2, use_hash, &AttackOptions::new(b))).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("related", outcome.is_related())?;
    out.set_item("strategy", serde_json::to_value(strategy).map_err(err)?.as_str())?;
    out.set_item("rank", outcome.rank)?;
    out.set_item("nullity", outcome.nullity)?;
    out.set_item("hash_verified", outcome.hash_verified)?;
    out.set_item("pattern_index", outcome.pattern_index)?;
    out.set_item("error_pattern", outcome.error_pattern.map(|e| e.elems()))?;
    let (w1, w2) = match outcome.candidates {
        Some(c) => (Some(c.w1.elems()), Some(c.w2.elems())),
        None => (None, None),
    };
    out.set_item("w1", w1)?;
    out.set_item("w2", w2)?;
    Ok(out)
}

fn rational(x: &BigRational) -> (String, f64) {
    (analysis::ratio_string(x), analysis::to_f64(x))
}

/// `("num/den", float)` for q^(k-n) |B(floor((d-1)/2))|.
#[pyfunction]
fn sphere_packing_density(q: u32, n: usize, k: usize, d: usize) -> PyResult<(String, f64)> {
    let query = DensityQuery::from_distance(q, n, k, d).map_err(err)?;
    Ok(rational(&analysis::sphere_packing_density(&query)))
}

#[pyfunction]
fn union_bound(q: u32, n: usize, rank: usize, b: usize) -> PyResult<(String, f64)> {
    Ok(rational(&analysis::union_bound_linkage(q, n, rank, b).map_err(err)?))
}

#[pyfunction]
fn linear_map_probability(q: u32) -> PyResult<(String, f64)> {
    Ok(rational(&analysis::linear_map_probability(q).map_err(err)?))
}

/// `(count, all_decompose)` over the Hamming isometries of {0,1}^n.
#[pyfunction]
fn verify_theorem(n: usize) -> PyResult<(usize, bool)> {
    let all = transforms::enumerate_distance_preserving_bijections(n).map_err(err)?;
    Ok((all.len(), all.iter().all(|iso| iso.decomposes())))
}

/// Runs the experiment grid and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (code, b_values, trials, seed, mode = "both", threads = 1, timing = false))]
#[allow(clippy::too_many_arguments)]
fn run_table1(
    py: Python<'_>,
    code: &str,
    b_values: Vec<usize>,
    trials: usize,
    seed: u64,
    mode: &str,
    threads: usize,
    timing: bool,
) -> PyResult<String> {
    let modes = match mode {
        "related" => vec![TrialMode::Related],
        "non-related" => vec![TrialMode::NonRelated],
        "both" => vec![TrialMode::Related, TrialMode::NonRelated],
        other => return Err(err(format!("unknown mode `{other}`"))),
    };
    let mut config = ExperimentConfig::new(code, b_values, trials, modes, seed);
    config.timing = timing;
    let report = py.detach(|| experiments::run_table1(&config, threads)).map_err(err)?;
    let mut buf = Vec::new();
    experiments::write_report(&report, ReportFormat::Json, &mut buf).map_err(err)?;
    String::from_utf8(buf).map_err(err)
}

#[pymodule]
fn fuzzylink_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCode>()?;
    m.add_class::<PyRecord>()?;
    m.add_function(wrap_pyfunction!(enroll, m)?)?;
    m.add_function(wrap_pyfunction!(attack_pair, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_packing_density, m)?)?;
    m.add_function(wrap_pyfunction!(union_bound, m)?)?;
    m.add_function(wrap_pyfunction!(linear_map_probability, m)?)?;
    m.add_function(wrap_pyfunction!(verify_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(run_table1, m)?)?;
    Ok(())
}
