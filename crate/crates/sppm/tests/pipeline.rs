//! Cross-module integration: persistence round-trips, assembly rasterization
//! semantics, and end-to-end CLI determinism.

use std::fs;
use std::process::Command;

use sppm::field::{CombinedField, Vec3};
use sppm::tiling::{
    assemble, generate_tile_set, load_tile_set, rasterize_assembly, read_assembly, save_tile_set,
    verify_greedy_scores, verify_rule1, write_assembly,
};
use sppm::unit::{read_design, write_design, DesignSpec, UnitDesigner};
use sppm::voxel::rasterize_field;

fn quick_designer() -> UnitDesigner {
    UnitDesigner {
        resolution: 32,
        ..UnitDesigner::default()
    }
}

#[test]
fn design_file_survives_voxel_equivalence() {
    let spec = DesignSpec::new(0.5, 30.0, 30.0, 0.25, 314).unwrap();
    let designer = quick_designer();
    let n_face = designer.suggested_face_count(&spec);
    let (cell, _, _) = designer.design_unit(&spec, n_face, [0, 1, 2]).unwrap();

    let text = write_design(&cell);
    let reloaded = read_design(&text).unwrap();
    assert_eq!(reloaded, cell);

    // The reloaded cell rasterizes to the identical field.
    let a = rasterize_field(&cell.field(), (16, 16, 16));
    let b = rasterize_field(&reloaded.field(), (16, 16, 16));
    assert_eq!(a, b);
}

#[test]
fn tile_set_round_trips_through_directory() {
    let spec = DesignSpec::new(0.45, 30.0, 30.0, 0.25, 2718).unwrap();
    let designer = quick_designer();
    let set = generate_tile_set(&designer, &spec, 2).unwrap();
    assert_eq!(set.tiles.len(), 8);
    for tile in &set.tiles {
        assert!((tile.cell.measured_porosity - 0.45).abs() <= spec.porosity_tolerance);
    }

    let dir = tempfile::tempdir().unwrap();
    save_tile_set(&set, dir.path()).unwrap();
    let loaded = load_tile_set(dir.path()).unwrap();
    assert_eq!(loaded, set);
}

#[test]
fn assembly_raster_matches_per_tile_fields() {
    let spec = DesignSpec::new(0.5, 30.0, 30.0, 0.25, 99).unwrap();
    let designer = quick_designer();
    let set = generate_tile_set(&designer, &spec, 2).unwrap();
    let palette = set.palette();
    let fields: Vec<CombinedField> = set.tiles.iter().map(|t| t.cell.field()).collect();
    let assembly = assemble(&palette, (2, 2, 1), 5, "t");
    assert!(verify_rule1(&assembly, &palette));
    assert!(verify_greedy_scores(&assembly, &palette));

    let res = 8usize;
    let (values, dims) = rasterize_assembly(&assembly, &fields, res);
    assert_eq!(dims, (16, 16, 8));
    // Every voxel value equals the owning tile's field evaluated locally.
    let pitch = 1.0 / res as f64;
    for z in 0..dims.2 {
        for y in 0..dims.1 {
            for x in 0..dims.0 {
                let (tx, ty, tz) = (x / res, y / res, z / res);
                let field = &fields[assembly.tile_at(tx, ty, tz)];
                let local = Vec3::new(
                    (x as f64 + 0.5) * pitch - tx as f64,
                    (y as f64 + 0.5) * pitch - ty as f64,
                    (z as f64 + 0.5) * pitch - tz as f64,
                );
                let expect = field.value(&local);
                let got = values[x + dims.0 * (y + dims.1 * z)];
                assert_eq!(got.to_bits(), expect.to_bits(), "voxel ({x},{y},{z})");
            }
        }
    }

    // Assembly file round-trip.
    let text = write_assembly(&assembly);
    assert_eq!(read_assembly(&text).unwrap(), assembly);
}

fn sppm_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sppm"))
}

#[test]
fn cli_gen_unit_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.txt");
    fs::write(
        &config,
        "seed = 5\ntarget_porosity = 0.5\nresolution = 32\nout_dir = PLACEHOLDER\n",
    )
    .unwrap();

    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let text = fs::read_to_string(&config)
            .unwrap()
            .replace("PLACEHOLDER", &out.display().to_string());
        let cfg = dir.path().join(format!("config_{run}.txt"));
        fs::write(&cfg, text).unwrap();
        let status = sppm_bin().arg(&cfg).arg("gen-unit").status().unwrap();
        assert!(status.success());
        outputs.push(fs::read(out.join("unit.txt")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "design files differ between reruns");
}

#[test]
fn cli_exit_codes() {
    // Domain error: unreachable target porosity -> exit 1.
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.txt");
    fs::write(&config, "target_porosity = 0.95\n").unwrap();
    let status = sppm_bin().arg(&config).arg("gen-unit").status().unwrap();
    assert_eq!(status.code(), Some(1));

    // Usage error: unknown subcommand -> exit 2.
    let status = sppm_bin().arg("frobnicate").status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn cli_curve_reports_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("curve.csv");
    fs::write(&data, "displacement_mm,force_n\n0,0\n1,100\n2,200\n3,190\n").unwrap();
    let output = sppm_bin()
        .arg("curve")
        .arg("--data")
        .arg(&data)
        .arg("--area-mm2")
        .arg("100")
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("yield_strength_mpa = 2"), "{text}");
    assert!(text.contains("effective_displacement_mm = 2"), "{text}");
}

#[test]
fn gradient_bar_porosities_decrease_monotonically() {
    let spec = DesignSpec::new(0.5, 30.0, 30.0, 0.25, 64).unwrap();
    let designer = quick_designer();
    let targets = [0.62, 0.5, 0.38];
    let colors = vec![[0u8, 0, 0]; targets.len()];
    let (cells, assembly) =
        sppm::tiling::build_gradient_bar(&designer, &spec, &targets, &colors).unwrap();
    assert_eq!(assembly.dims, (3, 1, 1));
    for pair in cells.windows(2) {
        assert!(
            pair[1].measured_porosity < pair[0].measured_porosity,
            "segment porosities must decrease: {} then {}",
            pair[0].measured_porosity,
            pair[1].measured_porosity
        );
    }
    // Segments share the boundary pattern bit-exactly: the positive-x face
    // pores of one segment coincide with the next segment's negative-x ones.
    let face_x = |cell: &sppm::unit::UnitCell, side: sppm::field::FaceSide| -> Vec<u64> {
        let mut v: Vec<u64> = cell
            .pores
            .iter()
            .filter(|p| p.region == sppm::field::RegionTag::Face(sppm::field::Axis::X, side))
            .flat_map(|p| [p.center.y.to_bits(), p.center.z.to_bits()])
            .collect();
        v.sort_unstable();
        v
    };
    for pair in cells.windows(2) {
        assert_eq!(
            face_x(&pair[0], sppm::field::FaceSide::Positive),
            face_x(&pair[1], sppm::field::FaceSide::Negative)
        );
    }

    // Mismatched abutting colors are rejected up front.
    let bad_colors = vec![[0u8, 0, 0], [1, 0, 0], [0, 0, 0]];
    assert!(matches!(
        sppm::tiling::build_gradient_bar(&designer, &spec, &targets, &bad_colors),
        Err(sppm::tiling::TilingError::Rule1Violation { .. })
    ));
}

#[test]
fn full_three_color_tile_set_generates_27_consistent_tiles() {
    let spec = DesignSpec::new(0.5, 30.0, 30.0, 0.25, 1717).unwrap();
    let designer = quick_designer();
    let set = generate_tile_set(&designer, &spec, 3).unwrap();
    assert_eq!(set.tiles.len(), 27);

    // Exactly one tile per color triple, every tile within tolerance.
    let mut seen = vec![false; 27];
    for tile in &set.tiles {
        let idx = sppm::tiling::TileSet::tile_index(3, tile.colors);
        assert!(!seen[idx]);
        seen[idx] = true;
        assert!((tile.cell.measured_porosity - 0.5).abs() <= spec.porosity_tolerance);
    }
    assert!(seen.iter().all(|&s| s));

    // Tiles sharing a color on an axis carry bit-identical face-pore sets
    // on that axis, which is what makes any rule-1 assembly line up.
    let face_key = |cell: &sppm::unit::UnitCell, axis: sppm::field::Axis| -> Vec<u64> {
        let mut v: Vec<u64> = cell
            .pores
            .iter()
            .filter(|p| matches!(p.region, sppm::field::RegionTag::Face(a, _) if a == axis))
            .flat_map(|p| {
                [
                    p.center.x.to_bits(),
                    p.center.y.to_bits(),
                    p.center.z.to_bits(),
                ]
            })
            .collect();
        v.sort_unstable();
        v
    };
    for axis_i in 0..3 {
        let axis = sppm::field::Axis::ALL[axis_i];
        for color in 0..3u8 {
            let group: Vec<&sppm::tiling::Tile> = set
                .tiles
                .iter()
                .filter(|t| t.colors[axis_i] == color)
                .collect();
            assert_eq!(group.len(), 9);
            let key = face_key(&group[0].cell, axis);
            for tile in &group[1..] {
                assert_eq!(face_key(&tile.cell, axis), key);
            }
        }
    }
}
