use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use cbdc_pki::{
    baseline_minimums, codec, materialize_seeded, mutual_authenticate, plan_schedule, render_svg,
    render_text, run as run_simulation, validate_schedule, AuthorityState,
    Certificate as CoreCertificate, Report, Requirement, Role, Scenario, Schedule,
    Smartcard as CoreSmartcard, Tick,
};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_role(name: &str) -> PyResult<Role> {
    Role::from_name(name).ok_or_else(|| value_error(format!("unknown role {name:?}")))
}

fn parse_schedule(text: &str) -> PyResult<Schedule> {
    Schedule::from_toml(text).map_err(value_error)
}

/// Derive a rollover schedule and return it as TOML. `first_root_active`
/// is in multiples of `u`.
#[pyfunction]
#[pyo3(signature = (u, horizon, first_root_active = 3))]
fn plan(u: u64, horizon: u64, first_root_active: u64) -> PyResult<String> {
    if u == 0 {
        return Err(value_error("u must be at least 1"));
    }
    let profile = baseline_minimums(u);
    let fra = first_root_active
        .checked_mul(u)
        .ok_or_else(|| value_error("first_root_active overflows"))?;
    plan_schedule(u, Tick(horizon), &profile, fra)
        .map(|s| s.to_toml())
        .map_err(value_error)
}

/// Check a schedule against the per-role minimums; returns one string per
/// violation, so an empty list means the schedule is clean.
#[pyfunction]
fn validate(schedule_toml: &str) -> PyResult<Vec<String>> {
    let schedule = parse_schedule(schedule_toml)?;
    let profile = baseline_minimums(schedule.u.max(1));
    Ok(validate_schedule(&schedule, &profile)
        .iter()
        .map(|v| v.to_string())
        .collect())
}

/// Wrap a bare schedule in the default scenario (one manufacturer, one
/// card per tick, payments every tick) and return the scenario TOML.
#[pyfunction]
fn scenario_for(schedule_toml: &str) -> PyResult<String> {
    Ok(Scenario::for_schedule(parse_schedule(schedule_toml)?).to_toml())
}

/// Run a scenario and return the full report as TOML.
#[pyfunction]
#[pyo3(signature = (scenario_toml, stride = None, seed = None, force = false))]
fn simulate(
    scenario_toml: &str,
    stride: Option<u64>,
    seed: Option<u64>,
    force: bool,
) -> PyResult<String> {
    let mut scenario = Scenario::from_toml(scenario_toml).map_err(value_error)?;
    if let Some(stride) = stride {
        scenario.payments.stride = stride;
    }
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if force {
        scenario.allow_invalid_schedule = true;
    }
    run_simulation(&scenario).map(|r| r.to_toml()).map_err(value_error)
}

/// One verdict line per requirement, as the command line prints them.
#[pyfunction]
fn summary(report_toml: &str) -> PyResult<Vec<String>> {
    Report::from_toml(report_toml)
        .map(|r| r.summary_lines())
        .map_err(value_error)
}

/// The stored counterexample for a failed requirement ("R1".."R5"):
/// a headline followed by the recorded trace steps.
#[pyfunction]
fn replay(report_toml: &str, requirement: &str) -> PyResult<Vec<String>> {
    let report = Report::from_toml(report_toml).map_err(value_error)?;
    let requirement = Requirement::from_id(requirement)
        .ok_or_else(|| value_error(format!("unknown requirement {requirement:?}")))?;
    let ce = report.replay_counterexample(requirement).map_err(value_error)?;
    let mut lines = vec![format!("{requirement} fails at tick {}: {}", ce.tick, ce.reason)];
    lines.extend(ce.trace.iter().map(|s| s.to_string()));
    Ok(lines)
}

#[pyfunction]
#[pyo3(signature = (schedule_toml, bucket = 1))]
fn timeline(schedule_toml: &str, bucket: u64) -> PyResult<String> {
    Ok(render_text(&parse_schedule(schedule_toml)?, bucket.max(1)))
}

#[pyfunction]
fn timeline_svg(schedule_toml: &str) -> PyResult<String> {
    Ok(render_svg(&parse_schedule(schedule_toml)?))
}

#[pyclass(frozen)]
struct Certificate {
    inner: CoreCertificate,
}

#[pymethods]
impl Certificate {
    #[staticmethod]
    fn decode(data: &[u8]) -> PyResult<Self> {
        codec::decode(data).map(|inner| Self { inner }).map_err(value_error)
    }

    fn encode<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        codec::encode(&self.inner)
            .map(|b| PyBytes::new(py, &b))
            .map_err(value_error)
    }

    #[getter]
    fn holder(&self) -> &str {
        &self.inner.holder_ref
    }

    #[getter]
    fn issuer(&self) -> &str {
        &self.inner.issuer_ref
    }

    #[getter]
    fn role(&self) -> &'static str {
        self.inner.role.name()
    }

    #[getter]
    fn serial(&self) -> u64 {
        self.inner.serial
    }

    #[getter]
    fn verify_from(&self) -> u64 {
        self.inner.verify_from.0
    }

    #[getter]
    fn issue_from(&self) -> u64 {
        self.inner.issue_from.0
    }

    #[getter]
    fn issue_until(&self) -> u64 {
        self.inner.issue_until.0
    }

    #[getter]
    fn verify_until(&self) -> u64 {
        self.inner.verify_until.0
    }

    fn __repr__(&self) -> String {
        format!(
            "<Certificate {} serial {} by {}>",
            self.inner.holder_ref, self.inner.serial, self.inner.issuer_ref
        )
    }
}

/// The materialized certificate authority for one schedule: every
/// generation keyed and signed, plus on-demand end-entity issuance and
/// the revocation registry.
#[pyclass]
struct Authority {
    state: AuthorityState,
}

#[pymethods]
impl Authority {
    #[new]
    #[pyo3(signature = (schedule_toml, seed = 0))]
    fn new(schedule_toml: &str, seed: u64) -> PyResult<Self> {
        let schedule = parse_schedule(schedule_toml)?;
        materialize_seeded(&schedule, seed)
            .map(|state| Self { state })
            .map_err(value_error)
    }

    fn certificate_count(&self) -> usize {
        self.state.certificate_count()
    }

    fn certificate(&self, role: &str, index: u32) -> PyResult<Certificate> {
        let role = parse_role(role)?;
        self.state
            .generation_certificate(role, index)
            .cloned()
            .map(|inner| Certificate { inner })
            .ok_or_else(|| value_error(format!("no generation {index} for {role}")))
    }

    /// Leaf-to-root certificate chain for one generation.
    fn chain(&self, role: &str, index: u32) -> PyResult<Vec<Certificate>> {
        let role = parse_role(role)?;
        self.state
            .chain_for_generation(role, index)
            .map(|certs| certs.into_iter().map(|inner| Certificate { inner }).collect())
            .ok_or_else(|| value_error(format!("no generation {index} for {role}")))
    }

    fn anchors_at(&self, tick: u64) -> Vec<Certificate> {
        self.state
            .root_anchors_at(Tick(tick))
            .into_iter()
            .map(|inner| Certificate { inner })
            .collect()
    }

    fn issue(&mut self, role: &str, holder: &str, tick: u64) -> PyResult<Certificate> {
        let role = parse_role(role)?;
        self.state
            .issue_end_entity(role, holder, Tick(tick))
            .map(|issued| Certificate { inner: issued.certificate })
            .map_err(value_error)
    }

    /// Revoke every certificate held under a reference; returns how many
    /// were hit.
    fn revoke_holder(&mut self, holder: &str, tick: u64) -> PyResult<usize> {
        self.state
            .revoke_holder(holder, Tick(tick))
            .map(|hits| hits.len())
            .map_err(value_error)
    }

    fn register_party(&mut self, id: &str) {
        self.state.register_party(id);
    }

    fn sync_party(&mut self, id: &str, tick: u64) -> PyResult<()> {
        self.state.sync_party(id, Tick(tick)).map(|_| ()).map_err(value_error)
    }
}

#[pyclass(frozen)]
struct Card {
    inner: CoreSmartcard,
}

#[pymethods]
impl Card {
    /// Stamp a new card: the active manufacturer CA signs its end-entity
    /// certificate and the card pins the roots and service strands that
    /// exist at that tick.
    #[staticmethod]
    fn manufacture(authority: &mut Authority, id: &str, tick: u64) -> PyResult<Self> {
        CoreSmartcard::manufacture(&mut authority.state, id, Tick(tick))
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn manufactured_at(&self) -> u64 {
        self.inner.manufactured_at.0
    }

    #[getter]
    fn end_of_life(&self) -> u64 {
        self.inner.end_of_life.0
    }

    fn __repr__(&self) -> String {
        format!(
            "<Card {} made at {} until {}>",
            self.inner.id, self.inner.manufactured_at, self.inner.end_of_life
        )
    }
}

/// Offline mutual authentication between two cards at one tick. Returns
/// (True, None) on acceptance and (False, reason) on refusal.
#[pyfunction]
fn mutual_auth(a: &Card, b: &Card, tick: u64) -> (bool, Option<String>) {
    match mutual_authenticate(&a.inner, &b.inner, Tick(tick)) {
        Ok(()) => (true, None),
        Err(e) => (false, Some(e.to_string())),
    }
}

#[pymodule]
fn cbdcpki(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_for, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(summary, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(timeline, m)?)?;
    m.add_function(wrap_pyfunction!(timeline_svg, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_auth, m)?)?;
    m.add_class::<Certificate>()?;
    m.add_class::<Authority>()?;
    m.add_class::<Card>()?;
    Ok(())
}
