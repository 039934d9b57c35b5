use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use morreylab::dyadic::{depth_for_rows, read_values};
use morreylab::experiments::{self, ExperimentConfig};
use morreylab::morrey::{local_average_term, morrey_norm, weak_morrey_norm, MorreyParams};
use morreylab::sparse::{cz_sparse, lerner_certificate, lerner_decompose, lerner_lambda, validate_sparse};
use morreylab::weights::{power_weight_classifier, weight_report};
use morreylab::{DyadicGrid, Error, GridFunction, Result, Weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{DiagnoseArgs, GridArgs, NormArgs, RunArgs, SparseDemoArgs, WeightArgs};

const DEFAULT_LEVELS: [u32; 3] = [6, 8, 10];

/// Certificate slack tolerance relative to `max(1, max|f|)`.
const CERT_TOL: f64 = 1e-12;

fn write_json(path: &Path, v: &Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn read_file_values(path: &Path, dim: u32) -> Result<(Vec<f64>, u32)> {
    let values = read_values(fs::File::open(path)?)?;
    let depth = depth_for_rows(dim, values.len())?;
    Ok((values, depth))
}

/// A weight file coarsened to `grid` by summing cell masses.
fn coarsen(w: &Weight, grid: DyadicGrid) -> Result<Weight> {
    if grid.depth() > w.grid().depth() {
        return Err(Error::Invalid(format!(
            "weight file has depth {} but depth {} was requested",
            w.grid().depth(),
            grid.depth()
        )));
    }
    Weight::from_cell_masses(grid, grid.from_morton(w.masses().level(grid.depth())))
}

fn weight_label(w: &WeightArgs) -> Value {
    match (w.power, &w.weight) {
        (Some(a), _) => json!({ "kind": "power", "alpha": a }),
        (None, Some(p)) => json!({ "kind": "file", "path": p }),
        (None, None) => json!({ "kind": "lebesgue" }),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.4}"),
        Some(x) => format!("{x}"),
        None => "-".into(),
    }
}

pub fn diagnose(args: &DiagnoseArgs) -> Result<()> {
    let GridArgs { dim, root_exponent } = args.grid;
    let (p, q) = (args.p, args.q);
    let file = match &args.weight.weight {
        Some(path) => {
            let (values, depth) = read_file_values(path, dim)?;
            Some(Weight::from_density(DyadicGrid::new(dim, root_exponent, depth)?, values)?)
        }
        None => None,
    };
    let alpha = match (args.weight.power, &file) {
        (Some(a), _) => a,
        (None, Some(_)) => f64::NAN,
        (None, None) => return Err(Error::Config("diagnose needs --power or --weight".into())),
    };
    let levels = match (&file, args.levels.is_empty()) {
        (_, false) => args.levels.clone(),
        (Some(w), true) => vec![w.grid().depth()],
        (None, true) => DEFAULT_LEVELS.to_vec(),
    };

    let classification = if file.is_none() {
        let c = power_weight_classifier(alpha, p, q, dim)?;
        let n = f64::from(dim);
        let on = |b: f64| (alpha - b).abs() <= 1e-12 * b.abs().max(1.0);
        let mut v = serde_json::to_value(c)?;
        v["hlm_lower_boundary"] = json!(on(-q * n / p));
        v["hlm_upper_boundary"] = json!(on(n * (q - q / p)));
        v
    } else {
        Value::Null
    };

    let mut reports = Vec::new();
    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:>4} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>8}",
        "L", "A_inf", "A1", "RH eps", "doubling", "B_pq", "WIC", "phi c"
    );
    for &level in &levels {
        let grid = DyadicGrid::new(dim, root_exponent, level)?;
        let w = match &file {
            Some(w) => coarsen(w, grid)?,
            None => Weight::power(grid, alpha)?,
        };
        let r = weight_report(&w, p, q)?;
        let _ = writeln!(
            table,
            "{:>4} {:>10.4} {:>10.4} {:>10.4} {:>10} {:>10.4} {:>10} {:>8}",
            level,
            r.a_inf_est,
            r.a1_const,
            r.rh_epsilon,
            fmt_opt(r.doubling_const),
            r.bpq_const,
            fmt_opt(Some(r.wic_const)),
            fmt_opt(r.phi_growth_c)
        );
        reports.push(json!({ "L": level, "report": r }));
    }

    let body = json!({
        "weight": weight_label(&args.weight),
        "dim": dim,
        "root_exponent": root_exponent,
        "p": p,
        "q": q,
        "classification": classification,
        "levels": reports,
    });
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("weight_report.json"), &body)?;
    fs::write(args.out.join("weight_report.txt"), &table)?;
    print!("{table}");
    if let Some(flags) = classification.as_object() {
        let mut set: Vec<&str> = flags.iter().filter(|(_, v)| v == &&json!(true)).map(|(k, _)| k.as_str()).collect();
        set.sort_unstable();
        println!("classes: {}", if set.is_empty() { "none".into() } else { set.join(", ") });
    }
    println!("wrote {}", args.out.join("weight_report.json").display());
    Ok(())
}

pub fn run(args: &RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.corpus.seed = seed;
    }
    let start = Instant::now();
    let out = experiments::run(&cfg)?;
    let elapsed = start.elapsed();
    for line in &out.summary {
        println!("{line}");
    }
    for note in &out.notes {
        println!("note: {note}");
    }
    let files = experiments::write_artifacts(&cfg, &out, &cfg.output, args.plot, elapsed)?;
    println!("wrote {}", files.csv.display());
    if let Some(svg) = &files.svg {
        println!("wrote {}", svg.display());
    }
    println!("wrote {}", files.manifest.display());
    Ok(())
}

fn random_function(grid: DyadicGrid, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    GridFunction::new(grid, values).expect("finite values")
}

pub fn sparse_demo(args: &SparseDemoArgs) -> Result<()> {
    let GridArgs { dim, root_exponent } = args.grid;
    let weight_file = args.weight.weight.as_deref().map(|p| read_file_values(p, dim)).transpose()?;
    let function_file = args.function.as_deref().map(|p| read_file_values(p, dim)).transpose()?;
    let depth = match (&weight_file, &function_file) {
        (Some((_, a)), Some((_, b))) if a != b => {
            return Err(Error::Invalid(format!("weight file has depth {a}, function file has depth {b}")))
        }
        (Some((_, d)), _) | (None, Some((_, d))) => *d,
        (None, None) => args.depth,
    };
    let grid = DyadicGrid::new(dim, root_exponent, depth)?;
    let root = grid.root();
    let w = match (args.weight.power, weight_file) {
        (Some(a), _) => Weight::power(grid, a)?,
        (None, Some((v, _))) => Weight::from_density(grid, v)?,
        (None, None) => Weight::lebesgue(grid),
    };
    let f = match (function_file, args.constant) {
        (Some((v, _)), _) => GridFunction::new(grid, v)?,
        (None, Some(c)) => GridFunction::constant(grid, c),
        (None, None) => random_function(grid, args.seed),
    };
    let lambda = args.lambda.unwrap_or_else(|| lerner_lambda(dim));
    let a = args.a.unwrap_or(f64::from(1u32 << (dim + 1)));

    let cz = cz_sparse(&w, &root, a)?;
    let eta = f64::from(1u32 << dim) / a;
    let cz_report = validate_sparse(&cz, eta);
    let dec = lerner_decompose(&f, &root, lambda)?;
    let cert = lerner_certificate(&f, &dec)?;
    let tol = CERT_TOL * f.max_abs().max(1.0);
    let empty = dec.family.depth() <= 1;

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("cz_family.json"), cz.to_json()? + "\n")?;
    fs::write(args.out.join("lerner_family.json"), dec.family.to_json()? + "\n")?;
    write_json(
        &args.out.join("lerner_certificate.json"),
        &json!({
            "lambda": lambda,
            "median": dec.median,
            "empty_family": empty,
            "tolerance": tol,
            "holds": cert.holds(tol),
            "certificate": cert,
            "cz": { "a": a, "eta": eta, "passes": cz_report.passes(), "report": cz_report },
        }),
    )?;

    let q0 = grid.volume(&root);
    let mut table = String::new();
    let _ = writeln!(table, "{:<8} {:>5} {:>6} {:>14} {:>14}", "family", "level", "cubes", "measure", "bound");
    for k in 0..cz.depth() {
        let bound = eta.powi(k as i32) * q0;
        let _ = writeln!(
            table,
            "{:<8} {:>5} {:>6} {:>14.6e} {:>14.6e}",
            "cz",
            k,
            cz.level(k).len(),
            cz.level_measure(k),
            bound
        );
    }
    for (k, (m, b)) in cert.level_measures.iter().zip(&cert.level_bounds).enumerate() {
        let _ = writeln!(
            table,
            "{:<8} {:>5} {:>6} {:>14.6e} {:>14.6e}",
            "lerner",
            k,
            dec.family.level(k).len(),
            m,
            b
        );
    }
    fs::write(args.out.join("sparse_levels.txt"), &table)?;
    print!("{table}");
    if empty {
        println!("lerner: empty family (only the root cube)");
    }
    println!(
        "lerner: pointwise slack {:.6e}, residual {:.3e}, {}",
        cert.pointwise_slack,
        cert.residual_max,
        if cert.holds(tol) { "certificate holds" } else { "certificate FAILS" }
    );
    println!("cz: {}", if cz_report.passes() { "sparse" } else { "NOT sparse" });
    println!("wrote {}", args.out.display());
    Ok(())
}

pub fn norm(args: &NormArgs) -> Result<()> {
    let GridArgs { dim, root_exponent } = args.grid;
    let (values, depth) = read_file_values(&args.function, dim)?;
    let grid = DyadicGrid::new(dim, root_exponent, depth)?;
    let f = GridFunction::new(grid, values)?;
    let w = match (args.weight.power, &args.weight.weight) {
        (Some(a), _) => Weight::power(grid, a)?,
        (None, Some(path)) => {
            let (v, d) = read_file_values(path, dim)?;
            if d != depth {
                return Err(Error::Invalid(format!("weight file has depth {d}, function file has depth {depth}")));
            }
            Weight::from_density(grid, v)?
        }
        (None, None) => Weight::lebesgue(grid),
    };
    let (p, q, s) = (args.p, args.q, args.s);
    let body = json!({
        "function": args.function,
        "weight": weight_label(&args.weight),
        "dim": dim,
        "depth": depth,
        "p": p,
        "q": q,
        "s": s,
        "samko": morrey_norm(&f, &MorreyParams::samko(p, q, &w)?),
        "komori_shirai": morrey_norm(&f, &MorreyParams::komori_shirai(p, q, &w)?),
        "weak": weak_morrey_norm(&f, p, q, &w)?,
        "local_average": local_average_term(&f, p, q, s, &w)?,
    });
    println!("{}", serde_json::to_string_pretty(&body)?);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("norm.json"), &body)?;
    }
    Ok(())
}
