//! Python module `hotplug`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hotplug_core::bounds::{self, MemoryRatePoint};
use hotplug_core::design::{load_design, validate_design};
use hotplug_core::hppda::{
    load_bundle, man_hppda, save_bundle, tdesign_hppda, verify_hppda, Bundle, TSchemeConfig, VerifyMode,
};
use hotplug_core::improver::{best_removal, plan_for};
use hotplug_core::simulator::{
    decode_user, default_mds, deliver, exhaustive_check, place, random_files, CheckConfig, DemandMode,
};
use hotplug_core::{catalog, Rational};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, x: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((*x.numer() as i64, *x.denom() as i64))
}

#[pyclass(name = "Design", module = "hotplug")]
struct PyDesign {
    inner: hotplug_core::design::Design,
}

#[pymethods]
impl PyDesign {
    /// Built-in design by name, e.g. "fano", "3-8-4-1", "witt", "inversive-4".
    #[staticmethod]
    fn by_name(name: &str) -> PyResult<Self> {
        Ok(PyDesign { inner: catalog::by_name(name).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyDesign { inner: load_design(path).map_err(err)? })
    }

    /// `(t, v, k, lambda)`.
    #[getter]
    fn params(&self) -> (usize, usize, usize, u64) {
        let d = &self.inner;
        (d.t(), d.v(), d.k(), d.lambda())
    }

    #[getter]
    fn blocks(&self) -> Vec<Vec<usize>> {
        self.inner.blocks().to_vec()
    }

    fn is_valid(&self) -> bool {
        validate_design(&self.inner).is_valid()
    }

    fn __repr__(&self) -> String {
        format!("Design({}, b={})", self.inner.name(), self.inner.b())
    }
}

#[pyclass(name = "HpPda", module = "hotplug")]
struct PyHpPda {
    bundle: Bundle,
}

#[pymethods]
impl PyHpPda {
    #[staticmethod]
    fn man(k: usize, kp: usize, t: usize) -> PyResult<Self> {
        Ok(PyHpPda { bundle: Bundle { hppda: man_hppda(k, kp, t).map_err(err)?, removal: None } })
    }

    /// t-design pair with copies `a = [a_1, ..., a_{t-1}]`.
    #[staticmethod]
    fn tdesign(design: &PyDesign, a: Vec<u64>) -> PyResult<Self> {
        let h = tdesign_hppda(&TSchemeConfig::new(design.inner.clone(), a)).map_err(err)?;
        Ok(PyHpPda { bundle: Bundle { hppda: h, removal: None } })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyHpPda { bundle: load_bundle(path).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_bundle(&self.bundle, path).map_err(err)
    }

    /// `(K, K', F, F', Z, Z', S)`.
    #[getter]
    fn params(&self) -> (usize, usize, usize, usize, usize, usize, usize) {
        let p = self.bundle.hppda.params();
        (p.k, p.kp, p.f, p.fp, p.z, p.zp, p.s)
    }

    /// Rows of P (1-based) playing rows of B for active set `tau`.
    fn find_zeta(&self, tau: Vec<usize>) -> PyResult<Vec<usize>> {
        Ok(self.bundle.hppda.find_zeta(&tau).map_err(err)?.rows)
    }

    #[pyo3(signature = (sampled=None, seed=0))]
    fn verify(&self, sampled: Option<usize>, seed: u64) -> bool {
        let mode = sampled.map_or(VerifyMode::Exhaustive, |count| VerifyMode::Sampled { count, seed });
        verify_hppda(&self.bundle.hppda, mode).is_valid()
    }

    /// Removal set: the stored one, else the construction's own.
    fn removal(&self) -> PyResult<Vec<u32>> {
        match &self.bundle.removal {
            Some(r) => Ok(plan_for(&self.bundle.hppda, r.iter().copied()).map_err(err)?.label_vec()),
            None => Ok(best_removal(&self.bundle.hppda).map_err(err)?.label_vec()),
        }
    }

    fn set_removal(&mut self, labels: Vec<u32>) -> PyResult<()> {
        plan_for(&self.bundle.hppda, labels.iter().copied()).map_err(err)?;
        self.bundle.removal = Some(labels);
        Ok(())
    }

    fn to_text(&self) -> String {
        self.bundle.to_text()
    }

    fn __repr__(&self) -> String {
        format!("HpPda{}", self.bundle.hppda.params())
    }
}

/// One delivery session with byte-exact decoding at every active user.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (h, n, active, demands, improve=false, subfile_len=64, seed=0))]
fn simulate<'py>(
    py: Python<'py>,
    h: &PyHpPda,
    n: usize,
    active: Vec<usize>,
    demands: Vec<usize>,
    improve: bool,
    subfile_len: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let hp = &h.bundle.hppda;
    let plan = if improve { Some(plan_for(hp, h.removal()?).map_err(err)?) } else { None };
    let mds = default_mds(hp).map_err(err)?;
    let files = random_files(n, hp.params().fp, subfile_len, seed);
    let (server, caches) = place(hp, &mds, &files, subfile_len).map_err(err)?;
    let session = deliver(&server, &active, &demands, plan.as_ref()).map_err(err)?;
    let recovered = session.active.iter().all(|&u| {
        decode_user(&caches[u - 1], &session, server.mds())
            .is_ok_and(|bytes| bytes == server.file(session.demand_of(u).unwrap()))
    });
    let out = PyDict::new(py);
    out.set_item("transmissions", session.transmissions.iter().map(|x| x.to_string()).collect::<Vec<_>>())?;
    out.set_item("rate", fraction(py, &session.rate(&server))?)?;
    out.set_item("recovered", recovered)?;
    out.set_item("zeta", session.zeta.zeta())?;
    Ok(out)
}

/// Run all active sets and demand vectors (sampled with `trials`).
#[pyfunction]
#[pyo3(signature = (h, n, improve=false, trials=None, subfile_len=16, seed=0))]
fn check<'py>(
    py: Python<'py>,
    h: &PyHpPda,
    n: usize,
    improve: bool,
    trials: Option<usize>,
    subfile_len: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let hp = &h.bundle.hppda;
    let plan = if improve { Some(plan_for(hp, h.removal()?).map_err(err)?) } else { None };
    let mds = default_mds(hp).map_err(err)?;
    let files = random_files(n, hp.params().fp, subfile_len, seed);
    let (server, caches) = place(hp, &mds, &files, subfile_len).map_err(err)?;
    let cfg = CheckConfig {
        demands: trials.map_or(DemandMode::Auto(10_000), DemandMode::Sampled),
        seed,
        ..CheckConfig::default()
    };
    let rep = py.detach(|| exhaustive_check(&server, &caches, plan.as_ref(), &cfg));
    let out = PyDict::new(py);
    out.set_item("sessions", rep.sessions)?;
    out.set_item("failures", rep.failure_count)?;
    out.set_item("passed", rep.passed())?;
    out.set_item("expected_rate", fraction(py, &rep.expected_rate)?)?;
    Ok(out)
}

fn points<'py>(py: Python<'py>, pts: &[MemoryRatePoint]) -> PyResult<Vec<(Bound<'py, PyAny>, Bound<'py, PyAny>)>> {
    pts.iter().map(|p| Ok((fraction(py, &p.m)?, fraction(py, &p.r)?))).collect()
}

/// Memory-rate points `(M/N, R)` as fractions. `scheme` is one of "mt",
/// "improved-man", "baseline", "t-scheme", "improved-t", "optimal-v43",
/// "optimal-inversive"; `design` is needed by the t-design schemes and `q`
/// by "optimal-inversive".
#[pyfunction]
#[pyo3(signature = (scheme, k, kp, n, design=None, q=None))]
fn tradeoff<'py>(
    py: Python<'py>,
    scheme: &str,
    k: usize,
    kp: usize,
    n: usize,
    design: Option<&PyDesign>,
    q: Option<u64>,
) -> PyResult<Vec<(Bound<'py, PyAny>, Bound<'py, PyAny>)>> {
    let need_design = || design.map(|d| &d.inner).ok_or_else(|| err("this scheme needs a design"));
    let pts = match scheme {
        "mt" => bounds::mt_points(k, kp, n),
        "improved-man" => bounds::improved_man_points(k, kp, n),
        "baseline" => bounds::baseline_points(k, kp, n),
        "t-scheme" => bounds::tscheme_points(need_design()?).map_err(err)?,
        "improved-t" => bounds::improved_tscheme_points(need_design()?).map_err(err)?,
        "optimal-v43" if k >= 6 && k.is_multiple_of(2) => bounds::optimal_points_v43(k),
        "optimal-inversive" => bounds::optimal_points_inversive(q.ok_or_else(|| err("needs q"))?),
        _ => return Err(err(format!("unknown scheme {scheme}"))),
    };
    points(py, &pts)
}

/// Cut-set lower bound at `M/N = num/den`.
#[pyfunction]
fn cutset_bound<'py>(py: Python<'py>, n: usize, kp: usize, num: i64, den: i64) -> PyResult<Bound<'py, PyAny>> {
    if den == 0 {
        return Err(err("zero denominator"));
    }
    fraction(py, &bounds::cutset_bound(n, kp, Rational::new(num as i128, den as i128)))
}

#[pymodule]
pub fn hotplug(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDesign>()?;
    m.add_class::<PyHpPda>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(tradeoff, m)?)?;
    m.add_function(wrap_pyfunction!(cutset_bound, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
