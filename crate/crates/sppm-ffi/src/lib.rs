//! C ABI over the microstructure generator.
//!
//! Handles are opaque pointers owned by this library; every fallible call
//! reports a status code and leaves a human-readable message retrievable
//! with [`sppm_last_error_message`] (thread-local). All functions are safe
//! to call from any thread as long as a handle is not freed while in use.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sppm::analysis::{homogenize, BaseMaterial};
use sppm::field::{CombinedField, RegionClass, Vec3};
use sppm::unit::{read_design, write_design, DesignSpec, UnitCell, UnitDesigner};
use sppm::voxel::{validate_solid, voxelize};

/// Result codes of the C API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SppmStatus {
    Ok = 0,
    /// A pointer was null or a parameter out of range.
    InvalidArgument = 1,
    /// Cell generation did not converge.
    GenerationFailed = 2,
    /// File input/output failed.
    Io = 3,
    /// Numerical analysis failed.
    Analysis = 4,
    /// An internal invariant was violated.
    Internal = 5,
}

/// Opaque unit-cell handle: the generated geometry plus its implicit field.
pub struct SppmUnit {
    cell: UnitCell,
    field: CombinedField,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn write_status(status: *mut SppmStatus, value: SppmStatus) {
    if !status.is_null() {
        unsafe { *status = value };
    }
}

fn guard<T>(
    status: *mut SppmStatus,
    fallback: T,
    body: impl FnOnce() -> Result<T, (SppmStatus, String)>,
) -> T {
    let outcome = catch_unwind(AssertUnwindSafe(body));
    match outcome {
        Ok(Ok(value)) => {
            write_status(status, SppmStatus::Ok);
            value
        }
        Ok(Err((code, message))) => {
            set_error(&message);
            write_status(status, code);
            fallback
        }
        Err(_) => {
            set_error("internal panic");
            write_status(status, SppmStatus::Internal);
            fallback
        }
    }
}

/// Last error message of the current thread. Valid until the next failing
/// call on this thread; never null.
#[no_mangle]
pub extern "C" fn sppm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Generates one unit cell at a target porosity.
///
/// `resolution` is the porosity measurement resolution per axis (64 in the
/// reference pipeline; smaller is faster and coarser). Returns null on
/// failure.
///
/// # Safety
///
/// `status` must be null or point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn sppm_unit_generate(
    target_porosity: f64,
    omega: f64,
    mu: f64,
    level_c: f64,
    seed: u64,
    resolution: u32,
    status: *mut SppmStatus,
) -> *mut SppmUnit {
    guard(status, ptr::null_mut(), || {
        if resolution < 8 {
            return Err((
                SppmStatus::InvalidArgument,
                "resolution must be at least 8".into(),
            ));
        }
        let spec = DesignSpec::new(target_porosity, omega, mu, level_c, seed)
            .map_err(|e| (SppmStatus::InvalidArgument, e.to_string()))?;
        let designer = UnitDesigner {
            resolution: resolution as usize,
            ..UnitDesigner::default()
        };
        let n_face = designer.suggested_face_count(&spec);
        let (cell, _, _) = designer
            .design_unit(&spec, n_face, [0, 1, 2])
            .map_err(|e| (SppmStatus::GenerationFailed, e.to_string()))?;
        let field = cell.field();
        Ok(Box::into_raw(Box::new(SppmUnit { cell, field })))
    })
}

/// Loads a unit cell from a design file.
///
/// # Safety
///
/// `path` must be a valid NUL-terminated string; `status` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sppm_unit_load(
    path: *const c_char,
    status: *mut SppmStatus,
) -> *mut SppmUnit {
    guard(status, ptr::null_mut(), || {
        let path = require_str(path)?;
        let text =
            std::fs::read_to_string(path).map_err(|e| (SppmStatus::Io, format!("{path}: {e}")))?;
        let cell = read_design(&text).map_err(|e| (SppmStatus::Io, e.to_string()))?;
        let field = cell.field();
        Ok(Box::into_raw(Box::new(SppmUnit { cell, field })))
    })
}

/// Writes a unit cell to a design file (byte-stable for a given cell).
///
/// # Safety
///
/// `unit` must be a live handle or null; `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sppm_unit_save(unit: *const SppmUnit, path: *const c_char) -> SppmStatus {
    let mut status = SppmStatus::Ok;
    guard(&mut status, (), || {
        let unit = require_unit(unit)?;
        let path = require_str(path)?;
        std::fs::write(path, write_design(&unit.cell))
            .map_err(|e| (SppmStatus::Io, format!("{path}: {e}")))
    });
    status
}

/// Measured porosity of the cell.
///
/// # Safety
///
/// `unit` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sppm_unit_porosity(unit: *const SppmUnit) -> f64 {
    unsafe { unit.as_ref() }.map_or(f64::NAN, |u| u.cell.measured_porosity)
}

/// Surface-to-interior band depth the design settled on.
///
/// # Safety
///
/// `unit` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sppm_unit_band_depth(unit: *const SppmUnit) -> f64 {
    unsafe { unit.as_ref() }.map_or(f64::NAN, |u| u.cell.band_depth)
}

/// # Safety
///
/// `unit` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sppm_unit_pore_count(unit: *const SppmUnit) -> usize {
    unsafe { unit.as_ref() }.map_or(0, |u| u.cell.pores.len())
}

/// # Safety
///
/// `unit` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sppm_unit_tunnel_count(unit: *const SppmUnit) -> usize {
    unsafe { unit.as_ref() }.map_or(0, |u| u.cell.tunnels.len())
}

/// Combined implicit field value at a point in cell coordinates.
///
/// # Safety
///
/// `unit` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sppm_unit_field_value(
    unit: *const SppmUnit,
    x: f64,
    y: f64,
    z: f64,
) -> f64 {
    unsafe { unit.as_ref() }.map_or(f64::NAN, |u| u.field.value(&Vec3::new(x, y, z)))
}

/// 1 when the point classifies as solid material, 0 otherwise.
///
/// # Safety
///
/// `unit` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sppm_unit_is_solid(unit: *const SppmUnit, x: f64, y: f64, z: f64) -> i32 {
    unsafe { unit.as_ref() }.map_or(0, |u| {
        (u.field.classify(&Vec3::new(x, y, z), u.cell.spec.level_c) == RegionClass::Solid) as i32
    })
}

/// Effective stiffness by periodic voxel homogenization.
///
/// `out_tensor` receives the 6x6 matrix row-major in engineering (Voigt)
/// order (11, 22, 33, 23, 13, 12).
///
/// # Safety
///
/// `unit` must be a live handle or null; `out_tensor` null or a 36-element
/// writable array.
#[no_mangle]
pub unsafe extern "C" fn sppm_unit_homogenize(
    unit: *const SppmUnit,
    young: f64,
    poisson: f64,
    resolution: u32,
    out_tensor: *mut f64,
) -> SppmStatus {
    let mut status = SppmStatus::Ok;
    guard(&mut status, (), || {
        let unit = require_unit(unit)?;
        if out_tensor.is_null() {
            return Err((SppmStatus::InvalidArgument, "out_tensor is null".into()));
        }
        if !(4..=128).contains(&resolution) {
            return Err((
                SppmStatus::InvalidArgument,
                "resolution must be in 4..=128".into(),
            ));
        }
        let base = BaseMaterial::new(young, poisson)
            .map_err(|e| (SppmStatus::InvalidArgument, e.to_string()))?;
        let r = resolution as usize;
        let grid = voxelize(&unit.field, unit.cell.spec.level_c, (r, r, r))
            .map_err(|e| (SppmStatus::Analysis, e.to_string()))?;
        let (cleaned, _) =
            validate_solid(&grid).map_err(|e| (SppmStatus::Analysis, e.to_string()))?;
        let tensor =
            homogenize(&cleaned, &base).map_err(|e| (SppmStatus::Analysis, e.to_string()))?;
        for i in 0..6 {
            for j in 0..6 {
                unsafe { *out_tensor.add(i * 6 + j) = tensor.0[(i, j)] };
            }
        }
        Ok(())
    });
    status
}

/// Frees a handle; null is a no-op.
///
/// # Safety
///
/// `unit` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sppm_unit_free(unit: *mut SppmUnit) {
    if !unit.is_null() {
        drop(unsafe { Box::from_raw(unit) });
    }
}

fn require_unit<'a>(unit: *const SppmUnit) -> Result<&'a SppmUnit, (SppmStatus, String)> {
    unsafe { unit.as_ref() }
        .ok_or_else(|| (SppmStatus::InvalidArgument, "unit handle is null".into()))
}

fn require_str<'a>(ptr: *const c_char) -> Result<&'a str, (SppmStatus, String)> {
    if ptr.is_null() {
        return Err((
            SppmStatus::InvalidArgument,
            "string argument is null".into(),
        ));
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        (
            SppmStatus::InvalidArgument,
            "string argument is not UTF-8".into(),
        )
    })
}
