//! C ABI for the mpsim simulator.
//!
//! Topologies and telemetry cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Every fallible call
//! returns an [`MpsimStatus`]; the message for the most recent failure on the
//! calling thread is available from [`mpsim_last_error_message`].
//!
//! The header `include/mpsim.h` is generated from this file at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use mpsim::engine::{self, EngineError, SimConfig, Telemetry};
use mpsim::metrics;
use mpsim::strategy::{StrategyError, StrategyKind, STRATEGY_NAMES};
use mpsim::topology::{default_topology, parse_topology, Topology, TopologyError};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ValidationError = 4,
    UnknownStrategy = 5,
    InvalidArgument = 6,
    SimulationError = 7,
    OutOfRange = 8,
    Panic = 9,
}

/// Opaque topology handle.
pub struct MpsimTopology {
    inner: Arc<Topology>,
}

/// Opaque handle to the telemetry of one finished run.
pub struct MpsimTelemetry {
    inner: Telemetry,
}

/// Parameters of a single run. Obtain defaults from
/// [`mpsim_run_params_default`] and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MpsimRunParams {
    /// NUL-terminated strategy name, e.g. `"min_rtt"`.
    pub strategy: *const c_char,
    pub agents: usize,
    pub steps: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub blest_factor: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MpsimScores {
    pub oscillation: f64,
    pub loss: f64,
    pub fairness: f64,
    pub efficiency: f64,
    pub goodput: f64,
    pub stability: f64,
    pub loss_avoidance: f64,
}

/// One (step, path) cell of the time series.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MpsimStepSample {
    pub load_mbps: f64,
    pub overflow_mbps: f64,
    pub inst_rtt_ms: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn fail(status: MpsimStatus, message: impl Into<String>) -> MpsimStatus {
    set_error(message);
    status
}

fn guard(body: impl FnOnce() -> MpsimStatus) -> MpsimStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(MpsimStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, MpsimStatus> {
    if ptr.is_null() {
        return Err(fail(MpsimStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(MpsimStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

fn topology_status(err: &TopologyError) -> MpsimStatus {
    match err {
        TopologyError::Parse { .. } => MpsimStatus::ParseError,
        TopologyError::Validation { .. } => MpsimStatus::ValidationError,
    }
}

fn strategy_status(err: &StrategyError) -> MpsimStatus {
    match err {
        StrategyError::UnknownStrategy(_) => MpsimStatus::UnknownStrategy,
        StrategyError::InvalidEpsilon(_) | StrategyError::InvalidFilterFactor(_) => {
            MpsimStatus::InvalidArgument
        }
        _ => MpsimStatus::SimulationError,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mpsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |s| s.as_ptr())
    })
}

/// Number of built-in strategies.
#[no_mangle]
pub extern "C" fn mpsim_strategy_count() -> usize {
    STRATEGY_NAMES.len()
}

/// Static, NUL-terminated name of strategy `index`, or NULL when out of range.
#[no_mangle]
pub extern "C" fn mpsim_strategy_name(index: usize) -> *const c_char {
    const NAMES: [&CStr; 7] = [
        c"min_rtt",
        c"min_load",
        c"attribute_aware",
        c"round_robin",
        c"weighted_round_robin",
        c"epsilon_greedy",
        c"blest",
    ];
    NAMES.get(index).map_or(ptr::null(), |n| n.as_ptr())
}

/// The built-in three-path topology. Release with [`mpsim_topology_free`].
#[no_mangle]
pub extern "C" fn mpsim_topology_default() -> *mut MpsimTopology {
    Box::into_raw(Box::new(MpsimTopology {
        inner: Arc::new(default_topology()),
    }))
}

/// Parses a JSON topology into `*out`.
///
/// # Safety
///
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpsim_topology_parse(
    json: *const c_char,
    out: *mut *mut MpsimTopology,
) -> MpsimStatus {
    guard(|| {
        if out.is_null() {
            return fail(MpsimStatus::NullPointer, "null output pointer");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match parse_topology(text) {
            Ok(topology) => {
                *out = Box::into_raw(Box::new(MpsimTopology {
                    inner: Arc::new(topology),
                }));
                MpsimStatus::Ok
            }
            Err(e) => fail(topology_status(&e), e.to_string()),
        }
    })
}

/// Number of paths, or 0 for NULL.
///
/// # Safety
///
/// `topology` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpsim_topology_path_count(topology: *const MpsimTopology) -> usize {
    topology.as_ref().map_or(0, |t| t.inner.path_count())
}

/// # Safety
///
/// `topology` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpsim_topology_free(topology: *mut MpsimTopology) {
    if !topology.is_null() {
        drop(Box::from_raw(topology));
    }
}

/// Defaults: `min_rtt`, 10 agents, 300 steps, seed 0, epsilon 0.1, BLEST
/// factor 1.5.
#[no_mangle]
pub extern "C" fn mpsim_run_params_default() -> MpsimRunParams {
    MpsimRunParams {
        strategy: c"min_rtt".as_ptr(),
        agents: 10,
        steps: 300,
        seed: 0,
        epsilon: mpsim::strategy::DEFAULT_EPSILON,
        blest_factor: mpsim::strategy::DEFAULT_BLEST_FACTOR,
    }
}

/// Runs one simulation and stores its telemetry in `*out`.
///
/// # Safety
///
/// `topology` must be a live handle, `params` and `out` valid pointers, and
/// `params->strategy` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mpsim_run(
    topology: *const MpsimTopology,
    params: *const MpsimRunParams,
    out: *mut *mut MpsimTelemetry,
) -> MpsimStatus {
    guard(|| {
        let (Some(topology), Some(params)) = (topology.as_ref(), params.as_ref()) else {
            return fail(MpsimStatus::NullPointer, "null topology or params");
        };
        if out.is_null() {
            return fail(MpsimStatus::NullPointer, "null output pointer");
        }
        let name = match read_str(params.strategy) {
            Ok(n) => n,
            Err(status) => return status,
        };
        let kind = match StrategyKind::from_name(name, params.epsilon, params.blest_factor) {
            Ok(k) => k,
            Err(e) => return fail(strategy_status(&e), e.to_string()),
        };
        let config = SimConfig::new(Arc::clone(&topology.inner), kind, params.agents)
            .with_seed(params.seed)
            .with_steps(params.steps);
        match engine::run(config) {
            Ok(telemetry) => {
                *out = Box::into_raw(Box::new(MpsimTelemetry { inner: telemetry }));
                MpsimStatus::Ok
            }
            Err(EngineError::InvalidConfig(msg)) => fail(MpsimStatus::InvalidArgument, msg),
            Err(EngineError::Strategy(e)) => fail(strategy_status(&e), e.to_string()),
        }
    })
}

/// # Safety
///
/// `telemetry` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpsim_telemetry_step_count(telemetry: *const MpsimTelemetry) -> usize {
    telemetry.as_ref().map_or(0, |t| t.inner.records.len())
}

/// # Safety
///
/// `telemetry` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpsim_telemetry_path_count(telemetry: *const MpsimTelemetry) -> usize {
    telemetry.as_ref().map_or(0, |t| t.inner.path_count())
}

/// # Safety
///
/// `telemetry` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpsim_telemetry_agent_count(telemetry: *const MpsimTelemetry) -> usize {
    telemetry.as_ref().map_or(0, |t| t.inner.final_cwnds.len())
}

/// Load, overflow and RTT of path `path_index` (0-based) at `step`.
///
/// # Safety
///
/// `telemetry` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpsim_telemetry_sample(
    telemetry: *const MpsimTelemetry,
    step: usize,
    path_index: usize,
    out: *mut MpsimStepSample,
) -> MpsimStatus {
    guard(|| {
        let (Some(t), Some(out)) = (telemetry.as_ref(), out.as_mut()) else {
            return fail(MpsimStatus::NullPointer, "null telemetry or output");
        };
        let Some(record) = t.inner.records.get(step) else {
            return fail(MpsimStatus::OutOfRange, format!("step {step} out of range"));
        };
        if path_index >= record.load.len() {
            return fail(MpsimStatus::OutOfRange, format!("path index {path_index} out of range"));
        }
        *out = MpsimStepSample {
            load_mbps: record.load[path_index],
            overflow_mbps: record.overflow[path_index],
            inst_rtt_ms: record.inst_rtt[path_index],
        };
        MpsimStatus::Ok
    })
}

/// Copies the final per-agent windows into `buffer`, which must hold at
/// least `mpsim_telemetry_agent_count` doubles.
///
/// # Safety
///
/// `buffer` must be valid for `len` writes of `double`.
#[no_mangle]
pub unsafe extern "C" fn mpsim_telemetry_final_cwnds(
    telemetry: *const MpsimTelemetry,
    buffer: *mut f64,
    len: usize,
) -> MpsimStatus {
    guard(|| {
        let Some(t) = telemetry.as_ref() else {
            return fail(MpsimStatus::NullPointer, "null telemetry");
        };
        if buffer.is_null() {
            return fail(MpsimStatus::NullPointer, "null buffer");
        }
        let cwnds = &t.inner.final_cwnds;
        if len < cwnds.len() {
            return fail(
                MpsimStatus::OutOfRange,
                format!("buffer holds {len} values, need {}", cwnds.len()),
            );
        }
        ptr::copy_nonoverlapping(cwnds.as_ptr(), buffer, cwnds.len());
        MpsimStatus::Ok
    })
}

/// Scores the run.
///
/// # Safety
///
/// `telemetry` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpsim_telemetry_score(
    telemetry: *const MpsimTelemetry,
    out: *mut MpsimScores,
) -> MpsimStatus {
    guard(|| {
        let (Some(t), Some(out)) = (telemetry.as_ref(), out.as_mut()) else {
            return fail(MpsimStatus::NullPointer, "null telemetry or output");
        };
        match metrics::score(&t.inner) {
            Ok(s) => {
                *out = MpsimScores {
                    oscillation: s.oscillation,
                    loss: s.loss_lambda,
                    fairness: s.fairness_phi,
                    efficiency: s.efficiency_eta,
                    goodput: s.goodput,
                    stability: s.stability_sigma,
                    loss_avoidance: s.loss_avoidance,
                };
                MpsimStatus::Ok
            }
            Err(e) => fail(MpsimStatus::SimulationError, e.to_string()),
        }
    })
}

/// Time-series CSV (`step,path_id,load_mbps,overflow_mbps,inst_rtt_ms`).
/// Returns NULL for a NULL handle; release with [`mpsim_string_free`].
///
/// # Safety
///
/// `telemetry` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpsim_telemetry_timeseries_csv(telemetry: *const MpsimTelemetry) -> *mut c_char {
    match telemetry.as_ref() {
        None => ptr::null_mut(),
        Some(t) => CString::new(t.inner.timeseries_csv())
            .map_or(ptr::null_mut(), CString::into_raw),
    }
}

/// # Safety
///
/// `telemetry` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpsim_telemetry_free(telemetry: *mut MpsimTelemetry) {
    if !telemetry.is_null() {
        drop(Box::from_raw(telemetry));
    }
}

/// Frees a string returned by this library.
///
/// # Safety
///
/// `s` must be NULL or a pointer obtained from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn mpsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
