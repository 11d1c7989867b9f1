//! C ABI for `qprog`.
//!
//! Every fallible function returns a [`QprogStatus`]. On failure a message is
//! kept per thread and can be read with [`qprog_last_error_message`]. Objects
//! cross the boundary as opaque handles that the caller owns and releases
//! with the matching `_free` function.
//!
//! Matrices are passed as row-major arrays of interleaved `(re, im)` doubles,
//! so a program state takes `2 * QPROG_PROGRAM_DIM * QPROG_PROGRAM_DIM`
//! doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qprog::certify::{certify, CertifyOptions};
use qprog::channels::{choi_of_channel, dephasing_channel, DensityMatrix};
use qprog::harness::config::{parse_config_str, ExperimentConfig};
use qprog::harness::output::emit_csv;
use qprog::harness::run::{run_online, RunResult};
use qprog::linalg::{ComplexMatrix, HermitianMatrix, C64};
use qprog::losses::{evaluate, LossKind};
use qprog::megd::{megd_init, regret_bound, theoretical_eta, MegdState, RegretBoundInputs, Stabilizer};
use qprog::processor::GtpProcessor;
use qprog::Error;

/// Dimension of the two-qubit program register.
pub const QPROG_PROGRAM_DIM: usize = 4;
/// Doubles in an interleaved program or Choi buffer.
pub const QPROG_MATRIX_LEN: usize = 2 * QPROG_PROGRAM_DIM * QPROG_PROGRAM_DIM;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QprogStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DimensionMismatch = 4,
    OutOfRange = 5,
    Config = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QprogLoss {
    /// Half the trace norm of the Choi difference.
    Trace = 0,
    /// One minus the squared Choi fidelity.
    Fidelity = 1,
}

impl From<QprogLoss> for LossKind {
    fn from(l: QprogLoss) -> Self {
        match l {
            QprogLoss::Trace => LossKind::TraceDistance,
            QprogLoss::Fidelity => LossKind::Infidelity,
        }
    }
}

/// One row of a run's per-step table. `t` starts at 1.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QprogStepRecord {
    pub t: usize,
    pub p_t: f64,
    pub loss_online: f64,
    pub loss_reference: f64,
    pub cum_online: f64,
    pub cum_reference: f64,
    pub regret_to_t: f64,
    pub normalized_regret_to_t: f64,
}

/// Scalar outcome of a run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QprogRunSummary {
    pub horizon: usize,
    pub eta: f64,
    pub grad_bound: f64,
    pub max_grad_norm: f64,
    pub regret: f64,
    pub normalized_regret: f64,
}

/// Experiment settings, edited with `key = value` pairs.
pub struct QprogConfig {
    inner: ExperimentConfig,
}

/// Finished experiment.
pub struct QprogRun {
    inner: RunResult,
}

/// Online learner driving the teleportation processor.
pub struct QprogMegd {
    state: MegdState,
    gtp: GtpProcessor,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(QprogStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch(_) | Error::LengthMismatch(..) | Error::NotSquare(..) => {
                QprogStatus::DimensionMismatch
            }
            Error::Config(_) => QprogStatus::Config,
            Error::Io(_) => QprogStatus::Io,
            _ => QprogStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QprogStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QprogStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside qprog".into());
            QprogStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(QprogStatus::NullPointer, format!("{name} is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn write_out<T>(p: *mut T, name: &str, value: T) -> Result<(), Failure> {
    *deref_mut(p, name)? = value;
    Ok(())
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(QprogStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn read_program(p: *const f64) -> Result<DensityMatrix, Failure> {
    if p.is_null() {
        return Err(null("program"));
    }
    let raw = std::slice::from_raw_parts(p, QPROG_MATRIX_LEN);
    let entries: Vec<C64> = raw.chunks_exact(2).map(|z| C64::new(z[0], z[1])).collect();
    let m = ComplexMatrix::from_row_major(QPROG_PROGRAM_DIM, QPROG_PROGRAM_DIM, &entries)?;
    Ok(DensityMatrix::new(HermitianMatrix::new(m)?)?)
}

unsafe fn write_matrix(p: *mut f64, name: &str, m: &HermitianMatrix) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    let out = std::slice::from_raw_parts_mut(p, 2 * m.dim() * m.dim());
    for (slot, z) in out.chunks_exact_mut(2).zip(m.as_matrix().to_row_major()) {
        slot[0] = z.re;
        slot[1] = z.im;
    }
    Ok(())
}

fn into_handle<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qprog_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or NULL if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qprog_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Forgets the stored error message for this thread.
#[no_mangle]
pub extern "C" fn qprog_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Learning rate minimizing the regret bound.
///
/// # Safety
/// `out_eta` must point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn qprog_theoretical_eta(
    horizon: usize,
    grad_bound: f64,
    program_qubits: usize,
    out_eta: *mut f64,
) -> QprogStatus {
    guard(|| {
        let eta = theoretical_eta(&RegretBoundInputs {
            horizon,
            grad_bound,
            program_qubits,
        })?;
        write_out(out_eta, "out_eta", eta)
    })
}

/// Regret bound after `horizon` steps at the theoretical rate.
///
/// # Safety
/// `out_bound` must point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn qprog_regret_bound(
    horizon: usize,
    grad_bound: f64,
    program_qubits: usize,
    out_bound: *mut f64,
) -> QprogStatus {
    guard(|| {
        let b = regret_bound(&RegretBoundInputs {
            horizon,
            grad_bound,
            program_qubits,
        })?;
        write_out(out_bound, "out_bound", b)
    })
}

/// Choi matrix of the channel the processor implements with `program`.
///
/// # Safety
/// `program` must point to `QPROG_MATRIX_LEN` readable doubles and
/// `out_choi` to as many writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qprog_gtp_lambda(program: *const f64, out_choi: *mut f64) -> QprogStatus {
    guard(|| {
        let pi = read_program(program)?;
        let choi = GtpProcessor::new().lambda(&pi)?;
        write_matrix(out_choi, "out_choi", choi.matrix())
    })
}

/// Loss of `program` against the dephasing channel with probability `p`,
/// and optionally its subgradient.
///
/// # Safety
/// `program` must point to `QPROG_MATRIX_LEN` readable doubles and
/// `out_value` to a writable `double`. `out_grad` is either NULL or points to
/// `QPROG_MATRIX_LEN` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qprog_dephasing_loss(
    loss: QprogLoss,
    p: f64,
    program: *const f64,
    out_value: *mut f64,
    out_grad: *mut f64,
) -> QprogStatus {
    guard(|| {
        let pi = read_program(program)?;
        let target = choi_of_channel(&dephasing_channel(p)?);
        let ev = evaluate(loss.into(), &target, &GtpProcessor::new(), &pi)?;
        write_out(out_value, "out_value", ev.value)?;
        if !out_grad.is_null() {
            write_matrix(out_grad, "out_grad", &ev.hermitian_subgradient)?;
        }
        Ok(())
    })
}

/// Creates a config holding the default settings.
///
/// # Safety
/// `out_config` must point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn qprog_config_new(out_config: *mut *mut QprogConfig) -> QprogStatus {
    guard(|| {
        let h = into_handle(QprogConfig {
            inner: ExperimentConfig::default(),
        });
        write_out(out_config, "out_config", h)
    })
}

/// Applies one setting, using the keys of the config file format.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn qprog_config_set(
    config: *mut QprogConfig,
    key: *const c_char,
    value: *const c_char,
) -> QprogStatus {
    guard(|| {
        let cfg = deref_mut(config, "config")?;
        let (k, v) = (str_arg(key, "key")?, str_arg(value, "value")?);
        let mut next = cfg.inner.clone();
        next.set(k, v)?;
        cfg.inner = next;
        Ok(())
    })
}

/// Applies every `key = value` line of `text`. Nothing changes on failure.
///
/// # Safety
/// `config` must be a live handle and `text` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qprog_config_parse(config: *mut QprogConfig, text: *const c_char) -> QprogStatus {
    guard(|| {
        let cfg = deref_mut(config, "config")?;
        let map = parse_config_str(str_arg(text, "text")?)?;
        let mut next = cfg.inner.clone();
        next.apply(map.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or a handle from [`qprog_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qprog_config_free(config: *mut QprogConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the online learner and the hindsight reference for `config`.
///
/// # Safety
/// `config` must be a live handle and `out_run` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn qprog_run(config: *const QprogConfig, out_run: *mut *mut QprogRun) -> QprogStatus {
    guard(|| {
        let cfg = deref(config, "config")?;
        if out_run.is_null() {
            return Err(null("out_run"));
        }
        cfg.inner.validate()?;
        let r = run_online(&cfg.inner, &GtpProcessor::new())?;
        write_out(out_run, "out_run", into_handle(QprogRun { inner: r }))
    })
}

/// # Safety
/// `run` must be a live handle and `out_summary` writable.
#[no_mangle]
pub unsafe extern "C" fn qprog_run_summary(run: *const QprogRun, out_summary: *mut QprogRunSummary) -> QprogStatus {
    guard(|| {
        let r = &deref(run, "run")?.inner;
        let s = QprogRunSummary {
            horizon: r.horizon(),
            eta: r.metadata.eta,
            grad_bound: r.metadata.grad_bound,
            max_grad_norm: r.metadata.max_grad_norm,
            regret: r.regret,
            normalized_regret: r.normalized_regret,
        };
        write_out(out_summary, "out_summary", s)
    })
}

/// Row `index` (zero based) of the per-step table.
///
/// # Safety
/// `run` must be a live handle and `out_record` writable.
#[no_mangle]
pub unsafe extern "C" fn qprog_run_record(
    run: *const QprogRun,
    index: usize,
    out_record: *mut QprogStepRecord,
) -> QprogStatus {
    guard(|| {
        let r = &deref(run, "run")?.inner;
        let x = r.records.get(index).ok_or_else(|| {
            Failure(
                QprogStatus::OutOfRange,
                format!("record {index} of {}", r.records.len()),
            )
        })?;
        let rec = QprogStepRecord {
            t: x.t,
            p_t: x.p_t,
            loss_online: x.loss_online,
            loss_reference: x.loss_reference,
            cum_online: x.cum_online,
            cum_reference: x.cum_reference,
            regret_to_t: x.regret_to_t,
            normalized_regret_to_t: x.normalized_regret_to_t,
        };
        write_out(out_record, "out_record", rec)
    })
}

/// Hindsight reference program.
///
/// # Safety
/// `run` must be a live handle and `out_program` point to
/// `QPROG_MATRIX_LEN` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qprog_run_reference(run: *const QprogRun, out_program: *mut f64) -> QprogStatus {
    guard(|| {
        let r = &deref(run, "run")?.inner;
        write_matrix(out_program, "out_program", r.reference.matrix())
    })
}

/// Writes the per-step table as CSV.
///
/// # Safety
/// `run` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qprog_run_write_csv(run: *const QprogRun, path: *const c_char) -> QprogStatus {
    guard(|| {
        let r = &deref(run, "run")?.inner;
        emit_csv(r, Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `run` must be NULL or a handle from [`qprog_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qprog_run_free(run: *mut QprogRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Runs the self-checks for `config`. Zero sizes select the defaults.
///
/// # Safety
/// `config` must be a live handle; `out_passed` and `out_total` writable.
#[no_mangle]
pub unsafe extern "C" fn qprog_certify(
    config: *const QprogConfig,
    instances: usize,
    trials: usize,
    seeds: u64,
    out_passed: *mut usize,
    out_total: *mut usize,
) -> QprogStatus {
    guard(|| {
        let cfg = deref(config, "config")?;
        if out_passed.is_null() || out_total.is_null() {
            return Err(null("out_passed/out_total"));
        }
        let mut opts = CertifyOptions::default();
        if instances > 0 {
            opts.random_instances = instances;
        }
        if trials > 0 {
            opts.certificate_trials = trials;
        }
        if seeds > 0 {
            opts.seeds = seeds;
        }
        let report = certify(&cfg.inner, &opts)?;
        write_out(out_passed, "out_passed", report.checks.iter().filter(|c| c.passed).count())?;
        write_out(out_total, "out_total", report.checks.len())
    })
}

/// Starts a learner at the maximally mixed program.
///
/// # Safety
/// `out_megd` must point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn qprog_megd_new(eta: f64, d_const: f64, out_megd: *mut *mut QprogMegd) -> QprogStatus {
    guard(|| {
        if out_megd.is_null() {
            return Err(null("out_megd"));
        }
        if !d_const.is_finite() {
            return Err(Failure(QprogStatus::InvalidArgument, format!("d_const {d_const}")));
        }
        let state = megd_init(2, eta, Stabilizer::Constant(d_const))?;
        let h = into_handle(QprogMegd {
            state,
            gtp: GtpProcessor::new(),
        });
        write_out(out_megd, "out_megd", h)
    })
}

/// Current program.
///
/// # Safety
/// `megd` must be a live handle and `out_program` point to
/// `QPROG_MATRIX_LEN` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qprog_megd_program(megd: *const QprogMegd, out_program: *mut f64) -> QprogStatus {
    guard(|| {
        let m = deref(megd, "megd")?;
        write_matrix(out_program, "out_program", m.state.current_program().matrix())
    })
}

/// Reveals the dephasing channel with probability `p`: scores the current
/// program, then takes one step. `out_loss` may be NULL.
///
/// # Safety
/// `megd` must be a live handle; `out_loss` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qprog_megd_observe_dephasing(
    megd: *mut QprogMegd,
    loss: QprogLoss,
    p: f64,
    out_loss: *mut f64,
) -> QprogStatus {
    guard(|| {
        let m = deref_mut(megd, "megd")?;
        let target = choi_of_channel(&dephasing_channel(p)?);
        let ev = evaluate(loss.into(), &target, &m.gtp, &m.state.current_program())?;
        m.state.step_mut(&ev)?;
        if !out_loss.is_null() {
            *out_loss = ev.value;
        }
        Ok(())
    })
}

/// Number of steps taken so far.
///
/// # Safety
/// `megd` must be a live handle and `out_steps` writable.
#[no_mangle]
pub unsafe extern "C" fn qprog_megd_steps(megd: *const QprogMegd, out_steps: *mut usize) -> QprogStatus {
    guard(|| {
        let m = deref(megd, "megd")?;
        write_out(out_steps, "out_steps", m.state.step_count())
    })
}

/// # Safety
/// `megd` must be NULL or a handle from [`qprog_megd_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qprog_megd_free(megd: *mut QprogMegd) {
    if !megd.is_null() {
        drop(Box::from_raw(megd));
    }
}
