//! Independent elasticity sanity check: a dilute spherical void shifts the
//! effective constants by the classical Eshelby dilute estimates.

use sppm::analysis::{engineering_constants, homogenize, BaseMaterial};
use sppm::field::{CombinedField, Pore, RegionTag, Vec3, DEFAULT_CUTOFF_EPSILON};
use sppm::voxel::voxelize;

#[test]
fn dilute_spherical_void_matches_eshelby_estimates() {
    // One centered pore: level-set sphere of radius 0.215, f ~ 4.2% void.
    let pore = Pore::new(Vec3::new(0.5, 0.5, 0.5), 30.0, RegionTag::Interior);
    let field = CombinedField::new(vec![pore], vec![], DEFAULT_CUTOFF_EPSILON, 1.0).unwrap();
    let grid = voxelize(&field, 0.25, (48, 48, 48)).unwrap();
    let f = grid.porosity();
    let base = BaseMaterial::new(1.0, 0.3).unwrap();
    let c = homogenize(&grid, &base).unwrap();
    let (e_x, nu_xy) = engineering_constants(&c).unwrap();

    // Dilute spherical-void estimates for nu0 = 0.3:
    //   E/E0  = 1 - f * 3 (1 - nu0) (9 + 5 nu0) / (2 (7 - 5 nu0))
    //   dnu/df = 3 (1 - nu0) (5 nu0 - 1) / (2 (7 - 5 nu0)) ... per Eshelby
    let nu0: f64 = 0.3;
    let e_slope = 3.0 * (1.0 - nu0) * (9.0 + 5.0 * nu0) / (2.0 * (7.0 - 5.0 * nu0));
    let nu_slope = 3.0 * (1.0 - nu0) * (5.0 * nu0 - 1.0) / (2.0 * (7.0 - 5.0 * nu0));
    let e_expect = 1.0 - f * e_slope;
    let nu_expect = nu0 + f * nu_slope;
    // The periodic cell is not truly dilute (f ~ 4%), so allow a loose band.
    assert!(
        (e_x - e_expect).abs() < 0.02,
        "E_x {e_x} vs dilute estimate {e_expect} at f {f}"
    );
    assert!(
        (nu_xy - nu_expect).abs() < 0.01,
        "nu_xy {nu_xy} vs dilute estimate {nu_expect} at f {f}"
    );
    println!("dilute check: f {f:.4}, E_x {e_x:.4} (est {e_expect:.4}), nu {nu_xy:.4} (est {nu_expect:.4})");
}
