//! C ABI over `lpm_explore`.
//!
//! Every fallible function returns an [`LpmStatus`]. On failure a message is
//! kept per thread and can be copied out with [`lpm_last_error_message`].
//! Handles are opaque; free each one exactly once with its `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lpm_explore::env::{Action, Environment, GridMazeEnv, MazeConfig, StepResult};
use lpm_explore::explorer::Explorer;
use lpm_explore::lpm::{combined_reward, LearningProgressMonitor, LpmConfig};
use lpm_explore::numeric::RealVector;
use lpm_explore::oracle::{intrinsic_rewards, ParameterGrid, ThetaPolicy};
use lpm_explore::Error;
use serde::de::DeserializeOwned;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpmStatus {
    Ok = 0,
    NullPointer = 1,
    DimensionMismatch = 2,
    NonFinite = 3,
    InvalidAction = 4,
    InvalidConfig = 5,
    InvalidGrid = 6,
    Parse = 7,
    Checkpoint = 8,
    Io = 9,
    InvalidUtf8 = 10,
    /// The oracle found no admissible reference point for the request.
    NoAdmissibleTheta = 11,
    Panic = 12,
}

/// Opaque learning-progress monitor.
pub struct LpmMonitor {
    inner: LearningProgressMonitor,
}

/// Opaque grid maze.
pub struct LpmMaze {
    inner: GridMazeEnv,
}

/// Scalar part of one maze transition; the observation is copied separately.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LpmStep {
    pub extrinsic_reward: f64,
    pub done: bool,
    pub latent_state_id: usize,
}

/// Oracle rewards for one parameter grid.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LpmOracleResult {
    /// KL divergence from posterior to prior.
    pub information_gain: f64,
    /// Prior-expected log-MSE minus the log-MSE at the reference point.
    pub expected_reward: f64,
    pub theta_index: usize,
    /// True when every built-in consistency check passed.
    pub checks_passed: bool,
}

struct Failure(LpmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } => LpmStatus::DimensionMismatch,
            Error::NonFinite(_) => LpmStatus::NonFinite,
            Error::InvalidAction { .. } => LpmStatus::InvalidAction,
            Error::InvalidConfig(_) => LpmStatus::InvalidConfig,
            Error::InvalidGrid(_) => LpmStatus::InvalidGrid,
            Error::Parse { .. } => LpmStatus::Parse,
            Error::Checkpoint(_) => LpmStatus::Checkpoint,
            Error::Io { .. } => LpmStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(message: String) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message);
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> LpmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            LpmStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {message}"));
            LpmStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LpmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn vector(data: *const f64, len: usize, what: &str) -> Result<RealVector, Failure> {
    Ok(RealVector::new(slice(data, len, what)?.to_vec())?)
}

unsafe fn string<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(LpmStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// TOML table to config; null or empty text gives the defaults.
unsafe fn config<T: Default + DeserializeOwned>(text: *const c_char, what: &str) -> Result<T, Failure> {
    if text.is_null() {
        return Ok(T::default());
    }
    let text = string(text, what)?;
    if text.trim().is_empty() {
        return Ok(T::default());
    }
    toml::from_str(text).map_err(|e| Failure(LpmStatus::InvalidConfig, format!("{what}: {e}")))
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the buffer
/// size needed for the whole message including the terminator. An empty
/// message means the last call succeeded.
///
/// # Safety
/// `buf` must be null or valid for `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lpm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// `extrinsic + beta * intrinsic`.
#[no_mangle]
pub extern "C" fn lpm_combined_reward(extrinsic: f64, intrinsic: f64, beta: f64) -> f64 {
    combined_reward(extrinsic, intrinsic, beta)
}

/// Creates a monitor. `config_toml` holds monitor settings such as
/// `queue_size = 100`; pass null for the defaults.
///
/// # Safety
/// `config_toml` must be null or a NUL-terminated string; `out` must be
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lpm_monitor_new(
    config_toml: *const c_char,
    obs_dim: usize,
    action_count: usize,
    seed: u64,
    out: *mut *mut LpmMonitor,
) -> LpmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config: LpmConfig = config(config_toml, "config_toml")?;
        let inner = LearningProgressMonitor::new(obs_dim, action_count, config, seed)?;
        out.write(Box::into_raw(Box::new(LpmMonitor { inner })));
        Ok(())
    })
}

/// Frees a monitor; null is ignored.
///
/// # Safety
/// `monitor` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lpm_monitor_free(monitor: *mut LpmMonitor) {
    if !monitor.is_null() {
        drop(Box::from_raw(monitor));
    }
}

/// Scores one transition and stores it for training.
///
/// # Safety
/// `obs` and `next_obs` must point to `obs_len` and `next_len` doubles;
/// `reward` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lpm_monitor_observe(
    monitor: *mut LpmMonitor,
    obs: *const f64,
    obs_len: usize,
    action: usize,
    next_obs: *const f64,
    next_len: usize,
    reward: *mut f64,
) -> LpmStatus {
    guard(|| {
        let m = handle(monitor, "monitor")?;
        let o = vector(obs, obs_len, "obs")?;
        let o2 = vector(next_obs, next_len, "next_obs")?;
        let a = Action::new(action, m.inner.action_count())?;
        let r = m.inner.observe(&o, a, &o2)?;
        write_out(reward, r, "reward")
    })
}

/// Ends one environment step; `updated` tells whether the models trained.
///
/// # Safety
/// `updated` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lpm_monitor_end_step(monitor: *mut LpmMonitor, updated: *mut bool) -> LpmStatus {
    guard(|| {
        let fired = handle(monitor, "monitor")?.inner.end_step()?;
        if !updated.is_null() {
            updated.write(fired);
        }
        Ok(())
    })
}

/// Number of completed model updates.
///
/// # Safety
/// `tau` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lpm_monitor_tau(monitor: *mut LpmMonitor, tau: *mut u64) -> LpmStatus {
    guard(|| {
        let t = handle(monitor, "monitor")?.inner.tau();
        write_out(tau, t, "tau")
    })
}

/// Writes a JSON checkpoint to `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lpm_monitor_save(monitor: *mut LpmMonitor, path: *const c_char) -> LpmStatus {
    guard(|| {
        let m = handle(monitor, "monitor")?;
        Ok(m.inner.save_checkpoint(string(path, "path")?)?)
    })
}

/// Restores a monitor from a checkpoint written by `lpm_monitor_save`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lpm_monitor_load(path: *const c_char, out: *mut *mut LpmMonitor) -> LpmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = LearningProgressMonitor::load_checkpoint(string(path, "path")?)?;
        out.write(Box::into_raw(Box::new(LpmMonitor { inner })));
        Ok(())
    })
}

/// Creates a maze. `config_toml` holds maze settings such as
/// `noise_mode = "action_noise"`; pass null for the defaults.
///
/// # Safety
/// `config_toml` must be null or a NUL-terminated string; `out` must be
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lpm_maze_new(config_toml: *const c_char, out: *mut *mut LpmMaze) -> LpmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config: MazeConfig = config(config_toml, "config_toml")?;
        let inner = GridMazeEnv::new(config)?;
        out.write(Box::into_raw(Box::new(LpmMaze { inner })));
        Ok(())
    })
}

/// Frees a maze; null is ignored.
///
/// # Safety
/// `maze` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lpm_maze_free(maze: *mut LpmMaze) {
    if !maze.is_null() {
        drop(Box::from_raw(maze));
    }
}

/// Observation length, action count and latent state count. Any output may
/// be null.
///
/// # Safety
/// Non-null outputs must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lpm_maze_dims(
    maze: *mut LpmMaze,
    obs_dim: *mut usize,
    action_count: *mut usize,
    state_count: *mut usize,
) -> LpmStatus {
    guard(|| {
        let m = &handle(maze, "maze")?.inner;
        for (out, value) in [
            (obs_dim, m.observation_dim()),
            (action_count, m.action_count()),
            (state_count, m.state_count()),
        ] {
            if !out.is_null() {
                out.write(value);
            }
        }
        Ok(())
    })
}

unsafe fn emit(result: StepResult, step: *mut LpmStep, obs: *mut f64, obs_len: usize) -> Result<(), Failure> {
    let values = result.observation.as_slice();
    if obs_len != values.len() {
        return Err(Error::DimensionMismatch {
            context: "observation buffer",
            expected: values.len(),
            actual: obs_len,
        }
        .into());
    }
    if obs.is_null() {
        return Err(null("obs"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), obs, obs_len);
    write_out(
        step,
        LpmStep {
            extrinsic_reward: result.extrinsic_reward,
            done: result.done,
            latent_state_id: result.latent_state_id,
        },
        "step",
    )
}

/// Starts a new episode and copies the first observation into `obs`, whose
/// length must equal the maze's observation length.
///
/// # Safety
/// `obs` must be valid for `obs_len` writes and `step` for one.
#[no_mangle]
pub unsafe extern "C" fn lpm_maze_reset(
    maze: *mut LpmMaze,
    seed: u64,
    step: *mut LpmStep,
    obs: *mut f64,
    obs_len: usize,
) -> LpmStatus {
    guard(|| {
        let result = handle(maze, "maze")?.inner.reset(seed);
        emit(result, step, obs, obs_len)
    })
}

/// Applies one action (0 forward, 1 turn left, 2 turn right, 3 idle).
///
/// # Safety
/// As for `lpm_maze_reset`.
#[no_mangle]
pub unsafe extern "C" fn lpm_maze_step(
    maze: *mut LpmMaze,
    action: usize,
    step: *mut LpmStep,
    obs: *mut f64,
    obs_len: usize,
) -> LpmStatus {
    guard(|| {
        let m = &mut handle(maze, "maze")?.inner;
        let a = Action::new(action, m.action_count())?;
        let result = m.step(a)?;
        emit(result, step, obs, obs_len)
    })
}

/// Information gain and expected reward for a grid of `n` candidate models.
/// With `submaximal` false the reference point is the exact MLE; otherwise
/// it is the best strictly worse point that still meets the admissibility
/// condition, and `LPM_STATUS_NO_ADMISSIBLE_THETA` is returned when none does.
///
/// # Safety
/// `prior` and `mse` must point to `n` doubles; `out` must be valid for one
/// write.
#[no_mangle]
pub unsafe extern "C" fn lpm_oracle_rewards(
    prior: *const f64,
    mse: *const f64,
    n: usize,
    c: f64,
    submaximal: bool,
    out: *mut LpmOracleResult,
) -> LpmStatus {
    guard(|| {
        let grid = ParameterGrid::new(slice(prior, n, "prior")?.to_vec(), slice(mse, n, "mse")?.to_vec(), c)?;
        let policy = if submaximal {
            ThetaPolicy::ConditionSatisfyingSubmaximal
        } else {
            ThetaPolicy::ExactMle
        };
        let report = intrinsic_rewards(&grid, policy).ok_or_else(|| {
            Failure(LpmStatus::NoAdmissibleTheta, "no admissible sub-maximal reference point".into())
        })?;
        write_out(
            out,
            LpmOracleResult {
                information_gain: report.ig,
                expected_reward: report.r_exp,
                theta_index: report.theta_d,
                checks_passed: report.checks.iter().all(|c| c.passed),
            },
            "out",
        )
    })
}
