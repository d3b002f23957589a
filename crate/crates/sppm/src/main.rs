//! Command-line pipeline for stochastic periodic porous microstructures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use sppm::analysis::{
    analyze_compression_curve, engineering_constants, homogenize, isotropy_deviation, sweep,
    BaseMaterial, CompressionCurve,
};
use sppm::config::ProjectConfig;
use sppm::field::{CombinedField, Vec3};
use sppm::mesh::{extract_mesh, extract_mesh_from_lattice};
use sppm::seed;
use sppm::slicer::{model_from_mesh, parse_obj, parse_primitive, slice, ModelField, SliceJob};
use sppm::tiling::{
    assemble, build_gradient_bar, generate_tile_set, load_tile_set, read_assembly,
    sample_assembly_lattice, save_tile_set, verify_rule1, write_assembly, Assembly,
};
use sppm::unit::{read_design, write_design, DesignSpec, UnitDesigner};
use sppm::voxel::{validate_solid, voxelize};

#[derive(Parser)]
#[command(
    name = "sppm",
    version,
    about = "Stochastic periodic porous microstructures"
)]
struct Cli {
    /// Configuration file (key = value lines); defaults when omitted.
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the porosity measurement resolution.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one unit cell at the configured target porosity.
    GenUnit {
        /// Also extract the isosurface and write an OBJ next to the design.
        #[arg(long)]
        obj: bool,
    },
    /// Generate the full K^3 Wang tile set.
    Tileset,
    /// Assemble a tile grid under the Wang rules.
    Assemble {
        /// Tile set directory (defaults to <out>/tileset).
        #[arg(long)]
        tileset: Option<PathBuf>,
    },
    /// Rasterize printer layer images from an assembly.
    Slice {
        /// Assembly file written by `assemble`.
        #[arg(long)]
        assembly: PathBuf,
        /// Part model: an OBJ path or a primitive spec
        /// (box:x0,y0,z0,x1,y1,z1 | sphere:cx,cy,cz,r | cylinder:cx,cy,z0,z1,r),
        /// in cell coordinates. Defaults to the full print volume.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        layer_um: Option<f64>,
        #[arg(long)]
        pixel_um: Option<f64>,
    },
    /// Compute the effective stiffness tensor of a unit cell.
    Homogenize {
        /// Design file; when omitted a cell is generated from the config.
        #[arg(long)]
        unit: Option<PathBuf>,
    },
    /// Porosity sweep: generate, homogenize and report one row per target.
    Sweep {
        /// Comma-separated target porosities.
        #[arg(long, default_value = "0.3,0.4,0.5,0.6,0.7")]
        targets: String,
    },
    /// Build a functionally graded bar and slice it.
    GradientBar {
        /// Comma-separated per-segment target porosities.
        #[arg(long, default_value = "0.7,0.62,0.54,0.46,0.38,0.3")]
        porosities: String,
    },
    /// Compare mesh and mesh-free output paths (time and bytes).
    Bench {
        /// Comma-separated unit counts; each must be a perfect cube.
        #[arg(long, default_value = "27")]
        units: String,
    },
    /// Analyze a displacement-force compression curve.
    Curve {
        /// Two-column CSV (displacement mm, force N); `#` comments and a
        /// non-numeric header line are skipped.
        #[arg(long)]
        data: PathBuf,
        /// Specimen cross-section area for the stress conversion.
        #[arg(long)]
        area_mm2: f64,
        /// Load angle in degrees (0 = uniaxial).
        #[arg(long, default_value_t = 0.0)]
        angle_deg: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn run(cli: Cli) -> Result<(), AnyError> {
    let mut config = match &cli.config {
        Some(path) => ProjectConfig::parse(&fs::read_to_string(path)?)?,
        None => ProjectConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.display().to_string();
    }
    if let Some(resolution) = cli.resolution {
        config.resolution = resolution;
    }
    println!("seed = {}", config.seed);
    println!("config = {}", config.digest());

    let out_dir = PathBuf::from(&config.out_dir);
    match cli.command {
        Command::GenUnit { obj } => cmd_gen_unit(&config, &out_dir, obj),
        Command::Tileset => cmd_tileset(&config, &out_dir),
        Command::Assemble { tileset } => cmd_assemble(&config, &out_dir, tileset),
        Command::Slice {
            assembly,
            model,
            layer_um,
            pixel_um,
        } => cmd_slice(
            &config,
            &out_dir,
            &assembly,
            model.as_deref(),
            layer_um,
            pixel_um,
        ),
        Command::Homogenize { unit } => cmd_homogenize(&config, &out_dir, unit.as_deref()),
        Command::Sweep { targets } => cmd_sweep(&config, &out_dir, &targets),
        Command::GradientBar { porosities } => cmd_gradient_bar(&config, &out_dir, &porosities),
        Command::Bench { units } => cmd_bench(&config, &out_dir, &units),
        Command::Curve {
            data,
            area_mm2,
            angle_deg,
        } => cmd_curve(&data, area_mm2, angle_deg),
    }
}

fn designer_for(config: &ProjectConfig) -> UnitDesigner {
    UnitDesigner {
        resolution: config.resolution,
        ..UnitDesigner::default()
    }
}

fn face_count(config: &ProjectConfig, spec: &DesignSpec, designer: &UnitDesigner) -> usize {
    if config.face_pores > 0 {
        config.face_pores
    } else {
        designer.suggested_face_count(spec)
    }
}

fn cmd_gen_unit(config: &ProjectConfig, out_dir: &Path, obj: bool) -> Result<(), AnyError> {
    let spec = config.design_spec()?;
    let designer = designer_for(config);
    let n_face = face_count(config, &spec, &designer);
    let (cell, _, model) = designer.design_unit(&spec, n_face, [0, 1, 2])?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("unit.txt");
    fs::write(&path, write_design(&cell))?;
    println!("design = {}", path.display());
    println!("pores = {}", cell.pores.len());
    println!("tunnels = {}", cell.tunnels.len());
    println!("porosity = {}", cell.measured_porosity);
    println!("band_depth = {}", cell.band_depth);
    println!("model = rho ~ {} n + {}", model.slope, model.intercept);
    let grid = voxelize(&cell.field(), spec.level_c, (32, 32, 32))?;
    let (_, report) = validate_solid(&grid)?;
    println!("valid = {}", report.valid);
    if obj {
        let res = config.resolution;
        let mesh = extract_mesh(&cell.field(), spec.level_c, (res, res, res))?;
        let obj_path = out_dir.join("unit.obj");
        let mut file = fs::File::create(&obj_path)?;
        mesh.write_obj(&mut file)?;
        println!(
            "obj = {} ({} triangles)",
            obj_path.display(),
            mesh.triangles.len()
        );
    }
    Ok(())
}

fn cmd_tileset(config: &ProjectConfig, out_dir: &Path) -> Result<(), AnyError> {
    let spec = config.design_spec()?;
    let designer = designer_for(config);
    let set = generate_tile_set(&designer, &spec, config.colors)?;
    let dir = out_dir.join("tileset");
    save_tile_set(&set, &dir)?;
    println!("tileset = {}", dir.display());
    println!("tiles = {}", set.tiles.len());
    let mean: f64 = set
        .tiles
        .iter()
        .map(|t| t.cell.measured_porosity)
        .sum::<f64>()
        / set.tiles.len() as f64;
    println!("mean_porosity = {mean}");
    Ok(())
}

fn cmd_assemble(
    config: &ProjectConfig,
    out_dir: &Path,
    tileset: Option<PathBuf>,
) -> Result<(), AnyError> {
    let dir = tileset.unwrap_or_else(|| out_dir.join("tileset"));
    let set = load_tile_set(&dir)?;
    let palette = set.palette();
    let assembly_seed = seed::derive(config.seed, "assembly");
    let assembly = assemble(
        &palette,
        config.assembly_dims,
        assembly_seed,
        &dir.display().to_string(),
    );
    if !verify_rule1(&assembly, &palette) {
        return Err("assembled grid violates face-color consistency".into());
    }
    println!("rule1 = ok");
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("assembly.txt");
    fs::write(&path, write_assembly(&assembly))?;
    println!("assembly = {}", path.display());
    println!(
        "dims = {} {} {}",
        assembly.dims.0, assembly.dims.1, assembly.dims.2
    );
    Ok(())
}

fn load_assembly_with_fields(
    assembly_path: &Path,
) -> Result<(Assembly, Vec<CombinedField>, f64), AnyError> {
    let assembly = read_assembly(&fs::read_to_string(assembly_path)?)?;
    let set = load_tile_set(Path::new(&assembly.tileset_ref))?;
    let level_c = set.tiles[0].cell.spec.level_c;
    let fields: Vec<CombinedField> = set.tiles.iter().map(|t| t.cell.field()).collect();
    Ok((assembly, fields, level_c))
}

fn cmd_slice(
    config: &ProjectConfig,
    out_dir: &Path,
    assembly_path: &Path,
    model: Option<&str>,
    layer_um: Option<f64>,
    pixel_um: Option<f64>,
) -> Result<(), AnyError> {
    let (assembly, fields, level_c) = load_assembly_with_fields(assembly_path)?;
    let cell = fields[0].cell_side();
    let volume = Vec3::new(
        assembly.dims.0 as f64 * cell,
        assembly.dims.1 as f64 * cell,
        assembly.dims.2 as f64 * cell,
    );
    let model_field = match model {
        None => ModelField::Box {
            min: Vec3::zeros(),
            max: volume,
        },
        Some(spec) if spec.ends_with(".obj") => {
            let mesh = parse_obj(&fs::read_to_string(spec)?)?;
            model_from_mesh(&mesh, (Vec3::zeros(), volume), 2 * config.resolution)?
        }
        Some(spec) => parse_primitive(spec)?,
    };
    let job = SliceJob {
        mm_per_cell: config.mm_per_cell,
        layer_um: layer_um.unwrap_or(config.layer_um),
        pixel_um: pixel_um.unwrap_or(config.pixel_um),
        out_dir: out_dir.join("slices"),
    };
    let t0 = Instant::now();
    let report = slice(&model_field, &assembly, &fields, level_c, &job)?;
    println!("layers = {}", report.layers);
    println!("pixels = {} x {}", report.width, report.height);
    println!("bytes = {}", report.total_bytes);
    println!("manifest = {}", job.out_dir.join("manifest.txt").display());
    println!("elapsed_ms = {}", t0.elapsed().as_millis());
    Ok(())
}

fn cmd_homogenize(
    config: &ProjectConfig,
    out_dir: &Path,
    unit: Option<&Path>,
) -> Result<(), AnyError> {
    let spec = config.design_spec()?;
    let cell = match unit {
        Some(path) => read_design(&fs::read_to_string(path)?)?,
        None => {
            let designer = designer_for(config);
            let n_face = face_count(config, &spec, &designer);
            let (cell, _, _) = designer.design_unit(&spec, n_face, [0, 1, 2])?;
            fs::create_dir_all(out_dir)?;
            fs::write(out_dir.join("unit.txt"), write_design(&cell))?;
            cell
        }
    };
    let r = config.homog_resolution;
    let grid = voxelize(&cell.field(), cell.spec.level_c, (r, r, r))?;
    let (cleaned, _) = validate_solid(&grid)?;
    let base = BaseMaterial::new(config.base_young, config.base_poisson)?;
    let tensor = homogenize(&cleaned, &base)?;
    println!("porosity = {}", cleaned.porosity());
    println!("stiffness (Voigt 11,22,33,23,13,12):");
    for i in 0..6 {
        let row: Vec<String> = (0..6)
            .map(|j| format!("{:12.6}", tensor.0[(i, j)]))
            .collect();
        println!("  {}", row.join(" "));
    }
    let (e_x, nu_xy) = engineering_constants(&tensor)?;
    println!("E_x = {e_x}");
    println!("nu_xy = {nu_xy}");
    println!("xi = {}", isotropy_deviation(&tensor, base.young));
    Ok(())
}

fn cmd_sweep(config: &ProjectConfig, out_dir: &Path, targets: &str) -> Result<(), AnyError> {
    let targets = parse_f64_list(targets)?;
    let mut specs = Vec::new();
    for (i, &rho) in targets.iter().enumerate() {
        let mut spec = DesignSpec::new(
            rho,
            config.omega,
            config.mu,
            config.level_c,
            seed::derive_indexed(config.seed, "sweep", i as u64),
        )?;
        spec.cell_side = config.cell_side;
        spec.porosity_tolerance = config.porosity_tolerance;
        spec.max_attempts = config.max_attempts;
        spec.cutoff_epsilon = config.cutoff_epsilon;
        specs.push(spec);
    }
    let designer = designer_for(config);
    let base = BaseMaterial::new(config.base_young, config.base_poisson)?;
    let rows = sweep(&specs, &designer, config.homog_resolution, &base);
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("sweep.csv");
    let mut text = String::from(sppm::analysis::SweepRow::csv_header());
    text.push('\n');
    for row in &rows {
        text.push_str(&row.to_csv());
        text.push('\n');
    }
    fs::write(&path, text)?;
    println!("rows = {}", rows.len());
    println!("csv = {}", path.display());
    for row in &rows {
        println!("  {}", row.to_csv());
    }
    Ok(())
}

fn cmd_gradient_bar(
    config: &ProjectConfig,
    out_dir: &Path,
    porosities: &str,
) -> Result<(), AnyError> {
    let porosities = parse_f64_list(porosities)?;
    let spec = config.design_spec()?;
    let designer = designer_for(config);
    let colors = vec![[0u8, 0, 0]; porosities.len()];
    let (cells, assembly) = build_gradient_bar(&designer, &spec, &porosities, &colors)?;
    fs::create_dir_all(out_dir)?;
    for (i, cell) in cells.iter().enumerate() {
        fs::write(out_dir.join(format!("segment_{i}.txt")), write_design(cell))?;
        println!(
            "segment {i}: target {} porosity {}",
            porosities[i], cell.measured_porosity
        );
    }
    let fields: Vec<CombinedField> = cells.iter().map(|c| c.field()).collect();
    let volume = Vec3::new(
        assembly.dims.0 as f64 * spec.cell_side,
        spec.cell_side,
        spec.cell_side,
    );
    let job = SliceJob {
        mm_per_cell: config.mm_per_cell,
        layer_um: config.layer_um,
        pixel_um: config.pixel_um,
        out_dir: out_dir.join("bar_slices"),
    };
    let model = ModelField::Box {
        min: Vec3::zeros(),
        max: volume,
    };
    let report = slice(&model, &assembly, &fields, spec.level_c, &job)?;
    println!("layers = {}", report.layers);
    fs::write(out_dir.join("bar_assembly.txt"), write_assembly(&assembly))?;
    Ok(())
}

fn cmd_bench(config: &ProjectConfig, out_dir: &Path, units: &str) -> Result<(), AnyError> {
    let sizes: Vec<usize> = units
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("bad unit count: {e}"))?;
    fs::create_dir_all(out_dir)?;
    let mut csv = String::from("units,mesh_bytes,meshfree_bytes,mesh_ms,meshfree_ms\n");
    if sizes.is_empty() {
        fs::write(out_dir.join("bench.csv"), &csv)?;
        println!("empty report");
        return Ok(());
    }

    // One tile reused for every benchmark size: the comparison targets the
    // output paths, not generation.
    let spec = config.design_spec()?;
    let designer = designer_for(config);
    let set = generate_tile_set(&designer, &spec, 1)?;
    let fields: Vec<CombinedField> = set.tiles.iter().map(|t| t.cell.field()).collect();
    let res = 32usize; // per-unit resolution of both paths

    for units in sizes {
        let side = (units as f64).cbrt().round() as usize;
        if side * side * side != units {
            return Err(format!("unit count {units} is not a perfect cube").into());
        }
        let assembly = Assembly {
            dims: (side, side, side),
            tiles: vec![0; units],
            seed: config.seed,
            tileset_ref: "bench".to_string(),
        };

        // Mesh path: isosurface extraction plus OBJ on disk.
        let t0 = Instant::now();
        let (values, corner_dims) = sample_assembly_lattice(&assembly, &fields, res);
        let pitch = spec.cell_side / res as f64;
        let mesh = extract_mesh_from_lattice(&values, corner_dims, pitch, spec.level_c)?;
        let obj_path = out_dir.join(format!("bench_mesh_{units}.obj"));
        let mut file = std::io::BufWriter::new(fs::File::create(&obj_path)?);
        mesh.write_obj(&mut file)?;
        drop(file);
        let mesh_ms = t0.elapsed().as_millis();
        let mesh_bytes = fs::metadata(&obj_path)?.len();

        // Mesh-free path: PNG layer stack at the same per-unit resolution.
        let t1 = Instant::now();
        let job = SliceJob {
            mm_per_cell: config.mm_per_cell,
            layer_um: config.mm_per_cell * 1000.0 / res as f64,
            pixel_um: config.mm_per_cell * 1000.0 / res as f64,
            out_dir: out_dir.join(format!("bench_slices_{units}")),
        };
        let volume = Vec3::new(
            side as f64 * spec.cell_side,
            side as f64 * spec.cell_side,
            side as f64 * spec.cell_side,
        );
        let model = ModelField::Box {
            min: Vec3::zeros(),
            max: volume,
        };
        let report = slice(&model, &assembly, &fields, spec.level_c, &job)?;
        let meshfree_ms = t1.elapsed().as_millis();

        println!(
            "units {units}: mesh {mesh_bytes} B / {mesh_ms} ms, mesh-free {} B / {meshfree_ms} ms",
            report.total_bytes
        );
        csv.push_str(&format!(
            "{units},{mesh_bytes},{},{mesh_ms},{meshfree_ms}\n",
            report.total_bytes
        ));
    }
    fs::write(out_dir.join("bench.csv"), &csv)?;
    println!("csv = {}", out_dir.join("bench.csv").display());
    Ok(())
}

fn cmd_curve(data: &Path, area_mm2: f64, angle_deg: f64) -> Result<(), AnyError> {
    let text = fs::read_to_string(data)?;
    let mut samples = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (a, b) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(s), Ok(f)) => samples.push((s, f)),
            _ => continue, // header line
        }
    }
    let curve = CompressionCurve::new(samples).with_load_angle(angle_deg.to_radians());
    let metrics = analyze_compression_curve(&curve, area_mm2)?;
    println!("yield_strength_mpa = {}", metrics.yield_strength_mpa);
    println!(
        "effective_displacement_mm = {}",
        metrics.effective_displacement_mm
    );
    println!("absorbed_energy_j = {}", metrics.absorbed_energy_j);
    Ok(())
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>, AnyError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| -> AnyError { format!("bad number '{s}': {e}").into() })
        })
        .collect()
}
