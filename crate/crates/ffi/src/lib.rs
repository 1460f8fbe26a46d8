//! C ABI over the normcase engine.
//!
//! Specs and states are opaque handles owned by the caller and released
//! with their `_free` function. Every call returns an [`NcStatus`]; on
//! anything but `NC_STATUS_OK` a description is available from
//! [`nc_last_error_message`] on the same thread. Strings handed out by the
//! library are NUL-terminated UTF-8 and must be released with
//! [`nc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chrono::NaiveDate;
use normcase::dsl::{self, NormSpec, SpecText};
use normcase::engine::{Engine, EngineError, FactInstance, NormState, Status};
use normcase::simulation::{build_tree, Scenario, SimulationError, DEFAULT_MAX_DEPTH};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidJson = 4,
    InvalidDate = 5,
    UnknownAct = 6,
    UnknownFact = 7,
    TypeMismatch = 8,
    MotivationRequired = 9,
    AlreadyExecuted = 10,
    DepthOutOfRange = 11,
    Panic = 12,
}

/// Normative status of an act.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcActStatus {
    Allowed = 0,
    NotAllowed = 1,
    Indefinite = 2,
}

impl From<Status> for NcActStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Allowed => NcActStatus::Allowed,
            Status::NotAllowed => NcActStatus::NotAllowed,
            Status::Indefinite => NcActStatus::Indefinite,
        }
    }
}

/// A checked norm specification.
pub struct NcSpec {
    spec: NormSpec,
}

/// A case state under some spec.
pub struct NcState {
    state: NormState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(NcStatus, String);

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::UnknownAct(_) => NcStatus::UnknownAct,
            EngineError::UnknownFact(_) => NcStatus::UnknownFact,
            EngineError::TypeMismatch { .. } => NcStatus::TypeMismatch,
            EngineError::MotivationRequired(_) => NcStatus::MotivationRequired,
            EngineError::AlreadyExecuted(_) => NcStatus::AlreadyExecuted,
        };
        Failure(code, e.to_string())
    }
}

fn json_err(e: serde_json::Error) -> Failure {
    Failure(NcStatus::InvalidJson, e.to_string())
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, converting failures and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NcStatus::Ok
        }
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            NcStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(NcStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(NcStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(NcStatus::NullArgument, format!("{what} is null")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(NcStatus::NullArgument, format!("{what} is null")))
}

fn date(s: &str) -> Result<NaiveDate, Failure> {
    s.parse().map_err(|_| {
        Failure(
            NcStatus::InvalidDate,
            format!("`{s}` is not a YYYY-MM-DD date"),
        )
    })
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(
            NcStatus::NullArgument,
            "output pointer is null".into(),
        ));
    }
    let c = CString::new(s).map_err(|e| Failure(NcStatus::InvalidJson, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

/// Message for the last failed call on this thread, or NULL after a
/// successful one. The pointer stays valid until the next call into the
/// library on the same thread.
#[no_mangle]
pub extern "C" fn nc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn nc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and checks spec source text. On `NC_STATUS_PARSE_ERROR` the
/// error message lists every diagnostic as `line:column: message`.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_spec_parse(source: *const c_char, out: *mut *mut NcSpec) -> NcStatus {
    guard(|| {
        let src = text(source, "source")?;
        if out.is_null() {
            return Err(Failure(NcStatus::NullArgument, "out is null".into()));
        }
        let spec = dsl::parse_spec(&SpecText::new(src, "spec"))
            .map_err(|d| Failure(NcStatus::ParseError, dsl::diagnostic::render("spec", &d)))?;
        *out = Box::into_raw(Box::new(NcSpec { spec }));
        Ok(())
    })
}

/// # Safety
/// `spec` must come from [`nc_spec_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nc_spec_free(spec: *mut NcSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Creates a state at `clock` (`YYYY-MM-DD`). `assignments_json` is an
/// object of fact instance to value, `null` meaning unknown; it may be
/// NULL for an empty state.
///
/// # Safety
/// Pointers must be valid; string arguments NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nc_state_new(
    spec: *const NcSpec,
    assignments_json: *const c_char,
    clock: *const c_char,
    out: *mut *mut NcState,
) -> NcStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let clock = date(text(clock, "clock")?)?;
        let map = match opt_text(assignments_json, "assignments")? {
            Some(j) => serde_json::from_str(j).map_err(json_err)?,
            None => serde_json::Map::new(),
        };
        if out.is_null() {
            return Err(Failure(NcStatus::NullArgument, "out is null".into()));
        }
        let engine = Engine::new(&spec.spec);
        let state = engine.init_state(engine.typed_assignments(&map)?, clock)?;
        *out = Box::into_raw(Box::new(NcState { state }));
        Ok(())
    })
}

/// Restores a state written by [`nc_state_to_json`].
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_state_from_json(
    json: *const c_char,
    out: *mut *mut NcState,
) -> NcStatus {
    guard(|| {
        let state = NormState::from_json(text(json, "json")?).map_err(json_err)?;
        if out.is_null() {
            return Err(Failure(NcStatus::NullArgument, "out is null".into()));
        }
        *out = Box::into_raw(Box::new(NcState { state }));
        Ok(())
    })
}

/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_state_to_json(
    state: *const NcState,
    out: *mut *mut c_char,
) -> NcStatus {
    guard(|| put_string(out, handle(state, "state")?.state.to_json()))
}

/// # Safety
/// `state` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nc_state_free(state: *mut NcState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Sets one fact instance, e.g. `income` or `flagged(3)`, to a JSON value;
/// the text `null` makes it unknown.
///
/// # Safety
/// Pointers must be valid; string arguments NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nc_state_assign(
    spec: *const NcSpec,
    state: *mut NcState,
    fact: *const c_char,
    value_json: *const c_char,
) -> NcStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let st = handle_mut(state, "state")?;
        let name = text(fact, "fact")?;
        let instance: FactInstance = name.parse().map_err(|_| {
            Failure(
                NcStatus::UnknownFact,
                format!("`{name}` is not a fact instance"),
            )
        })?;
        let value: serde_json::Value =
            serde_json::from_str(text(value_json, "value")?).map_err(json_err)?;
        let engine = Engine::new(&spec.spec);
        let typed = engine.typed_value(&instance, &value)?;
        st.state = engine.assign_fact(&st.state, &instance, typed)?;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid; `act` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nc_action_status(
    spec: *const NcSpec,
    state: *const NcState,
    act: *const c_char,
    out: *mut NcActStatus,
) -> NcStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let st = handle(state, "state")?;
        let status = Engine::new(&spec.spec).action_status(&st.state, text(act, "act")?)?;
        let out = handle_mut(out, "out")?;
        *out = status.status.into();
        Ok(())
    })
}

/// Executes `act` at midnight of the state's clock. `actor` may be NULL
/// for the act's declared actor. A motivation is required unless the act
/// is Allowed. When `violation_json` is not NULL it receives the recorded
/// violation as JSON, or NULL if there was none.
///
/// # Safety
/// Pointers must be valid; string arguments NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nc_execute(
    spec: *const NcSpec,
    state: *mut NcState,
    act: *const c_char,
    actor: *const c_char,
    motivation: *const c_char,
    violation_json: *mut *mut c_char,
) -> NcStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let st = handle_mut(state, "state")?;
        let act = text(act, "act")?;
        let motivation = opt_text(motivation, "motivation")?;
        let engine = Engine::new(&spec.spec);
        let actor = match opt_text(actor, "actor")? {
            Some(a) => a.to_string(),
            None => engine.act(act)?.actor.clone(),
        };
        let at = st
            .state
            .clock()
            .and_hms_opt(0, 0, 0)
            .expect("midnight exists");
        let (next, violation) = engine.execute(&st.state, act, &actor, at, motivation)?;
        st.state = next;
        if !violation_json.is_null() {
            *violation_json = ptr::null_mut();
            if let Some(v) = violation {
                put_string(violation_json, serde_json::to_string(&v).map_err(json_err)?)?;
            }
        }
        Ok(())
    })
}

/// Moves the clock to `clock` and marks duties whose violation condition
/// now holds. When `violations_json` is not NULL it receives a JSON array
/// of the new violations.
///
/// # Safety
/// Pointers must be valid; `clock` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nc_check_duties(
    spec: *const NcSpec,
    state: *mut NcState,
    clock: *const c_char,
    violations_json: *mut *mut c_char,
) -> NcStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let st = handle_mut(state, "state")?;
        let clock = date(text(clock, "clock")?)?;
        let (next, violations) = Engine::new(&spec.spec).check_duties(&st.state, clock);
        st.state = next;
        if !violations_json.is_null() {
            put_string(
                violations_json,
                serde_json::to_string(&violations).map_err(json_err)?,
            )?;
        }
        Ok(())
    })
}

/// Every act not yet executed with its status and reasons, as a JSON array
/// of `{name, status, reasons}`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nc_available_actions_json(
    spec: *const NcSpec,
    state: *const NcState,
    out: *mut *mut c_char,
) -> NcStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let st = handle(state, "state")?;
        let list: Vec<serde_json::Value> = Engine::new(&spec.spec)
            .available_actions(&st.state)
            .into_iter()
            .map(|(a, s)| serde_json::json!({ "name": a.name, "status": s.status, "reasons": s.reasons }))
            .collect();
        put_string(out, serde_json::to_string(&list).map_err(json_err)?)
    })
}

/// The action tree reachable from `state` in at most `depth` steps, in the
/// same JSON shape the HTTP simulation endpoint returns.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nc_tree_json(
    spec: *const NcSpec,
    state: *const NcState,
    depth: usize,
    out: *mut *mut c_char,
) -> NcStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let st = handle(state, "state")?;
        let at = st
            .state
            .clock()
            .and_hms_opt(0, 0, 0)
            .expect("midnight exists");
        let scenario = Scenario::new("ffi", "ffi", &spec.spec, st.state.clone(), at);
        let tree = build_tree(&scenario, depth, DEFAULT_MAX_DEPTH).map_err(|e| match e {
            SimulationError::DepthOutOfRange { .. } => {
                Failure(NcStatus::DepthOutOfRange, e.to_string())
            }
            other => Failure(NcStatus::Panic, other.to_string()),
        })?;
        put_string(out, serde_json::to_string(&tree).map_err(json_err)?)
    })
}
