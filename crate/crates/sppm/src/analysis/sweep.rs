//! Parameter sweeps: generate cells across specs, homogenize, and report
//! elastic properties per row.

use super::{engineering_constants, homogenize, isotropy_deviation, BaseMaterial};
use crate::unit::{DesignSpec, UnitDesigner};
use crate::voxel::{validate_solid, voxelize};

/// One sweep result. Failed rows keep their parameters and carry the error
/// text instead of property values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub omega: f64,
    pub mu: f64,
    pub target_porosity: f64,
    pub seed: u64,
    pub porosity: Option<f64>,
    pub e_x: Option<f64>,
    pub nu_xy: Option<f64>,
    pub xi: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn csv_header() -> &'static str {
        "omega,mu,target_porosity,seed,porosity,e_x,nu_xy,xi,error"
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.omega,
            self.mu,
            self.target_porosity,
            self.seed,
            opt(&self.porosity),
            opt(&self.e_x),
            opt(&self.nu_xy),
            opt(&self.xi),
            self.error.as_deref().unwrap_or("")
        )
    }
}

/// Generates one cell per spec, homogenizes it at `homog_resolution`, and
/// reports `(omega, mu, rho, E_x, nu_xy, xi)` rows. Per-row failures are
/// recorded and the sweep continues. Deterministic for given specs.
pub fn sweep(
    specs: &[DesignSpec],
    designer: &UnitDesigner,
    homog_resolution: usize,
    base: &BaseMaterial,
) -> Vec<SweepRow> {
    specs
        .iter()
        .map(|spec| {
            let mut row = SweepRow {
                omega: spec.omega,
                mu: spec.mu,
                target_porosity: spec.target_porosity,
                seed: spec.seed,
                porosity: None,
                e_x: None,
                nu_xy: None,
                xi: None,
                error: None,
            };
            match run_one(spec, designer, homog_resolution, base) {
                Ok((rho, e_x, nu_xy, xi)) => {
                    row.porosity = Some(rho);
                    row.e_x = Some(e_x);
                    row.nu_xy = Some(nu_xy);
                    row.xi = Some(xi);
                }
                Err(msg) => row.error = Some(msg),
            }
            row
        })
        .collect()
}

fn run_one(
    spec: &DesignSpec,
    designer: &UnitDesigner,
    homog_resolution: usize,
    base: &BaseMaterial,
) -> Result<(f64, f64, f64, f64), String> {
    let n_face = designer.suggested_face_count(spec);
    let (cell, _, _) = designer
        .design_unit(spec, n_face, [0, 1, 2])
        .map_err(|e| e.to_string())?;
    let grid = voxelize(
        &cell.field(),
        spec.level_c,
        (homog_resolution, homog_resolution, homog_resolution),
    )
    .map_err(|e| e.to_string())?;
    let (cleaned, _) = validate_solid(&grid).map_err(|e| e.to_string())?;
    let c = homogenize(&cleaned, base).map_err(|e| e.to_string())?;
    let (e_x, nu_xy) = engineering_constants(&c).map_err(|e| e.to_string())?;
    let xi = isotropy_deviation(&c, base.young);
    Ok((cell.measured_porosity, e_x, nu_xy, xi))
}
