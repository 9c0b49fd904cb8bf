//! C interface to the repeat detection core.
//!
//! Every function returns a [`DaisyStatus`]; on failure a message is kept
//! per thread and can be read with [`daisy_last_error`]. Objects are opaque
//! handles released with their `_free` function. Strings returned through
//! out-parameters are owned by the caller and released with
//! [`daisy_string_free`].

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use daisy_core::align::kabsch_superpose;
use daisy_core::classify::SubclassId;
use daisy_core::reupred::{identify_repeats, DetectorParams, IdentificationOutcome, Srul};
use daisy_core::structmodel::{extract_sequence, parse_pdb, ProteinStructure, Vec3};

/// Result codes of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaisyStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    Internal = 5,
}

/// Parsed protein structure.
pub struct DaisyStructure {
    inner: ProteinStructure,
}

/// Result of a repeat identification run.
pub struct DaisyOutcome {
    inner: IdentificationOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: DaisyStatus, msg: impl Into<String>) -> DaisyStatus {
    set_error(msg);
    status
}

fn guard<F: FnOnce() -> DaisyStatus>(f: F) -> DaisyStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(DaisyStatus::Internal, "internal panic"))
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, DaisyStatus> {
    if p.is_null() {
        return Err(fail(DaisyStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(DaisyStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

fn give_string(s: String, out: *mut *mut c_char) -> DaisyStatus {
    match CString::new(s) {
        Ok(c) => {
            // SAFETY: callers checked `out` for null.
            unsafe { *out = c.into_raw() };
            DaisyStatus::Ok
        }
        Err(_) => fail(DaisyStatus::Internal, "string contains NUL"),
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn daisy_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn daisy_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn daisy_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse PDB text into a new structure handle.
///
/// # Safety
/// `pdb_text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn daisy_structure_parse(pdb_text: *const c_char, out: *mut *mut DaisyStructure) -> DaisyStatus {
    guard(|| {
        if out.is_null() {
            return fail(DaisyStatus::NullPointer, "null out pointer");
        }
        let text = match read_str(pdb_text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_pdb(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DaisyStructure { inner }));
                DaisyStatus::Ok
            }
            Err(e) => fail(DaisyStatus::ParseError, e.to_string()),
        }
    })
}

/// Release a structure handle. NULL is ignored.
///
/// # Safety
/// `s` must come from [`daisy_structure_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn daisy_structure_free(s: *mut DaisyStructure) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of chains.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn daisy_structure_chain_count(s: *const DaisyStructure, out: *mut usize) -> DaisyStatus {
    guard(|| match (s.as_ref(), out.is_null()) {
        (Some(s), false) => {
            *out = s.inner.chains.len();
            DaisyStatus::Ok
        }
        _ => fail(DaisyStatus::NullPointer, "null argument"),
    })
}

/// Total residue count over all chains.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn daisy_structure_residue_count(s: *const DaisyStructure, out: *mut usize) -> DaisyStatus {
    guard(|| match (s.as_ref(), out.is_null()) {
        (Some(s), false) => {
            *out = s.inner.residue_count();
            DaisyStatus::Ok
        }
        _ => fail(DaisyStatus::NullPointer, "null argument"),
    })
}

/// FASTA of every chain, headers `>{accession}_{chain}`.
///
/// # Safety
/// Pointers must be valid; free the result with [`daisy_string_free`].
#[no_mangle]
pub unsafe extern "C" fn daisy_structure_fasta(s: *const DaisyStructure, out: *mut *mut c_char) -> DaisyStatus {
    guard(|| match (s.as_ref(), out.is_null()) {
        (Some(s), false) => {
            let text: String = s
                .inner
                .chains
                .iter()
                .map(|c| extract_sequence(c, &s.inner.accession))
                .collect();
            give_string(text, out)
        }
        _ => fail(DaisyStatus::NullPointer, "null argument"),
    })
}

/// Optimal superposition of `n` points `mobile` onto `target` (xyz triples).
/// Writes a row-major 3x3 rotation, a translation and the RMSD.
///
/// # Safety
/// `mobile` and `target` must hold `3 * n` doubles, `rotation` 9,
/// `translation` 3.
#[no_mangle]
pub unsafe extern "C" fn daisy_kabsch(
    mobile: *const f64,
    target: *const f64,
    n: usize,
    rotation: *mut f64,
    translation: *mut f64,
    rmsd: *mut f64,
) -> DaisyStatus {
    guard(|| {
        if mobile.is_null() || target.is_null() || rotation.is_null() || translation.is_null() || rmsd.is_null() {
            return fail(DaisyStatus::NullPointer, "null argument");
        }
        let points = |p: *const f64| -> Vec<Vec3> {
            std::slice::from_raw_parts(p, 3 * n)
                .chunks_exact(3)
                .map(|c| Vec3::new(c[0], c[1], c[2]))
                .collect()
        };
        match kabsch_superpose(&points(mobile), &points(target)) {
            Ok(sup) => {
                let rot = std::slice::from_raw_parts_mut(rotation, 9);
                for r in 0..3 {
                    for c in 0..3 {
                        rot[r * 3 + c] = sup.rotation[(r, c)];
                    }
                }
                std::slice::from_raw_parts_mut(translation, 3).copy_from_slice(sup.translation.as_slice());
                *rmsd = sup.rmsd;
                DaisyStatus::Ok
            }
            Err(e) => fail(DaisyStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Detect repeat regions with the bundled unit library. `subclasses` is a
/// comma-separated list of subclass ids, or NULL/empty for all.
///
/// # Safety
/// `s` must be a live structure handle, `subclasses` NULL or a
/// NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn daisy_identify(
    s: *const DaisyStructure,
    subclasses: *const c_char,
    out: *mut *mut DaisyOutcome,
) -> DaisyStatus {
    guard(|| {
        let Some(s) = s.as_ref() else {
            return fail(DaisyStatus::NullPointer, "null structure");
        };
        if out.is_null() {
            return fail(DaisyStatus::NullPointer, "null out pointer");
        }
        let mut filter = BTreeSet::new();
        if !subclasses.is_null() {
            let list = match read_str(subclasses) {
                Ok(l) => l,
                Err(st) => return st,
            };
            for item in list.split(',').map(str::trim).filter(|x| !x.is_empty()) {
                match item.parse::<SubclassId>() {
                    Ok(id) => {
                        filter.insert(id);
                    }
                    Err(e) => return fail(DaisyStatus::InvalidArgument, e.to_string()),
                }
            }
        }
        let inner = identify_repeats(&s.inner, &filter, &DetectorParams::default(), &Srul::builtin());
        *out = Box::into_raw(Box::new(DaisyOutcome { inner }));
        DaisyStatus::Ok
    })
}

/// Number of regions over all chains.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn daisy_outcome_region_count(o: *const DaisyOutcome, out: *mut usize) -> DaisyStatus {
    guard(|| match (o.as_ref(), out.is_null()) {
        (Some(o), false) => {
            *out = o.inner.region_count();
            DaisyStatus::Ok
        }
        _ => fail(DaisyStatus::NullPointer, "null argument"),
    })
}

/// Full outcome as JSON.
///
/// # Safety
/// Pointers must be valid; free the result with [`daisy_string_free`].
#[no_mangle]
pub unsafe extern "C" fn daisy_outcome_json(o: *const DaisyOutcome, out: *mut *mut c_char) -> DaisyStatus {
    guard(|| match (o.as_ref(), out.is_null()) {
        (Some(o), false) => match serde_json::to_string(&o.inner) {
            Ok(j) => give_string(j, out),
            Err(e) => fail(DaisyStatus::Internal, e.to_string()),
        },
        _ => fail(DaisyStatus::NullPointer, "null argument"),
    })
}

/// Release an outcome handle. NULL is ignored.
///
/// # Safety
/// `o` must come from [`daisy_identify`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn daisy_outcome_free(o: *mut DaisyOutcome) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}
