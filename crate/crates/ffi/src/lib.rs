// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! C interface to the simulator.
//!
//! Boards and trees are opaque heap handles released with their `_free`
//! function. Every fallible call returns a `PlStatus`; on failure the
//! message is available from `pl_last_error` on the same thread until the
//! next call. Strings handed out by the library are freed with
//! `pl_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use photonlab::engine::{run_tree, sample_runs, Board, EngineError, MultiverseTree, TreeConfig};
use photonlab::io::{detection_csv, fixtures, parse_setup, IoError};
use photonlab::photon::PolarizationBasis;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The setup text could not be parsed.
    ParseError = 3,
    /// The setup parsed but describes an invalid board.
    InvalidSetup = 4,
    /// Simulation failed.
    SimulationError = 5,
    /// The tree hit its node budget. The tree is still returned.
    BudgetExhausted = 6,
    /// Unknown fixture, detector or basis name.
    NotFound = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

/// A validated board.
pub struct PlBoard {
    board: Board,
}

/// An expanded multiverse tree.
pub struct PlTree {
    tree: MultiverseTree,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(PlStatus, String);

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let status = match &e {
            IoError::Parse { .. } | IoError::Version(_) => PlStatus::ParseError,
            IoError::UnknownFixture(_) => PlStatus::NotFound,
            IoError::Engine(
                EngineError::InvalidBoard(_)
                | EngineError::InvalidElement { .. }
                | EngineError::NoSource,
            )
            | IoError::Invalid(_) => PlStatus::InvalidSetup,
            _ => PlStatus::SimulationError,
        };
        Failure(status, e.to_string())
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        IoError::Engine(e).into()
    }
}

/// Run `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<PlStatus, Failure>) -> PlStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PlStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure(PlStatus::NullArgument, "null argument".into())
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(PlStatus::InvalidUtf8, e.to_string()))
}

/// # Safety
/// `p` must be null or point to a live handle created by this library.
unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

fn out_string(text: String, out: *mut *mut c_char) -> Result<PlStatus, Failure> {
    let c = CString::new(text).map_err(|e| Failure(PlStatus::SimulationError, e.to_string()))?;
    // SAFETY: callers check `out` for null before producing output.
    unsafe { *out = c.into_raw() };
    Ok(PlStatus::Ok)
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from this thread.
#[no_mangle]
pub extern "C" fn pl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parse and validate a setup document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_board_from_json(
    json: *const c_char,
    out: *mut *mut PlBoard,
) -> PlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let doc = parse_setup(read_str(json)?)?;
        let board = doc.to_board()?;
        *out = Box::into_raw(Box::new(PlBoard { board }));
        Ok(PlStatus::Ok)
    })
}

/// Board of a named fixture.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_board_from_fixture(
    name: *const c_char,
    out: *mut *mut PlBoard,
) -> PlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let board = fixtures::fixture(read_str(name)?)?.to_board()?;
        *out = Box::into_raw(Box::new(PlBoard { board }));
        Ok(PlStatus::Ok)
    })
}

/// Release a board. Null is ignored.
///
/// # Safety
/// `board` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_board_free(board: *mut PlBoard) {
    if !board.is_null() {
        drop(Box::from_raw(board));
    }
}

/// Number of photons the board's sources emit.
///
/// # Safety
/// `board` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_board_photon_count(board: *const PlBoard, out: *mut usize) -> PlStatus {
    guard(|| {
        let b = handle(board)?;
        if out.is_null() {
            return Err(null());
        }
        *out = b.board.photon_count();
        Ok(PlStatus::Ok)
    })
}

/// Expand the full tree. Zero limits take the defaults (200 steps, 1e-9
/// branch probability, 100000 nodes). Returns `BudgetExhausted` together
/// with the partial tree when the node budget runs out.
///
/// # Safety
/// `board` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_tree_run(
    board: *const PlBoard,
    max_steps: usize,
    min_branch_probability: f64,
    max_nodes: usize,
    out: *mut *mut PlTree,
) -> PlStatus {
    guard(|| {
        let b = handle(board)?;
        if out.is_null() {
            return Err(null());
        }
        let d = TreeConfig::default();
        let config = TreeConfig {
            max_steps: if max_steps == 0 {
                d.max_steps
            } else {
                max_steps
            },
            min_branch_probability: if min_branch_probability > 0.0 {
                min_branch_probability
            } else {
                d.min_branch_probability
            },
            max_nodes: if max_nodes == 0 {
                d.max_nodes
            } else {
                max_nodes
            },
        };
        let tree = run_tree(&b.board, config)?;
        let exhausted = tree.budget_exhausted;
        *out = Box::into_raw(Box::new(PlTree { tree }));
        if exhausted {
            set_error("node budget exhausted; tree is partial");
            Ok(PlStatus::BudgetExhausted)
        } else {
            Ok(PlStatus::Ok)
        }
    })
}

/// Release a tree. Null is ignored.
///
/// # Safety
/// `tree` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_tree_free(tree: *mut PlTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// # Safety
/// `tree` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_tree_node_count(tree: *const PlTree, out: *mut usize) -> PlStatus {
    guard(|| {
        let t = handle(tree)?;
        if out.is_null() {
            return Err(null());
        }
        *out = t.tree.nodes.len();
        Ok(PlStatus::Ok)
    })
}

/// Probability mass of branches that ran to completion.
///
/// # Safety
/// `tree` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_tree_explored_mass(tree: *const PlTree, out: *mut f64) -> PlStatus {
    guard(|| {
        let t = handle(tree)?;
        if out.is_null() {
            return Err(null());
        }
        *out = t.tree.explored_mass;
        Ok(PlStatus::Ok)
    })
}

/// Probability that detector `id` fired. Ids that never fired read 0.
///
/// # Safety
/// `tree` must be a live handle, `id` a NUL-terminated string and `out` a
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_tree_detector_probability(
    tree: *const PlTree,
    id: *const c_char,
    out: *mut f64,
) -> PlStatus {
    guard(|| {
        let t = handle(tree)?;
        let id = read_str(id)?;
        if out.is_null() {
            return Err(null());
        }
        let p = t.tree.detector_probability(id);
        *out = p;
        Ok(PlStatus::Ok)
    })
}

/// Tree as JSON in the given polarization basis (`"HV"`, `"DA"`, `"LR"`;
/// null means HV). Free the result with `pl_string_free`.
///
/// # Safety
/// `tree` must be a live handle, `basis` null or a NUL-terminated string,
/// and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_tree_to_json(
    tree: *const PlTree,
    basis: *const c_char,
    out: *mut *mut c_char,
) -> PlStatus {
    guard(|| {
        let t = handle(tree)?;
        if out.is_null() {
            return Err(null());
        }
        let basis = if basis.is_null() {
            PolarizationBasis::HV
        } else {
            read_str(basis)?
                .parse()
                .map_err(|e: String| Failure(PlStatus::NotFound, e))?
        };
        out_string(t.tree.to_json_string(basis), out)
    })
}

/// Sample `n` runs seeded with `seed` and return the CSV detection log.
/// `max_steps` of zero takes the default. Free the result with
/// `pl_string_free`.
///
/// # Safety
/// `board` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_sample_csv(
    board: *const PlBoard,
    n: u64,
    seed: u64,
    max_steps: usize,
    out: *mut *mut c_char,
) -> PlStatus {
    guard(|| {
        let b = handle(board)?;
        if out.is_null() {
            return Err(null());
        }
        let steps = if max_steps == 0 {
            TreeConfig::default().max_steps
        } else {
            max_steps
        };
        let runs = sample_runs(&b.board, seed, n, steps)?;
        out_string(detection_csv(&b.board, &runs)?, out)
    })
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
