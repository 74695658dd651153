use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use irsc_core::cpo::{cpo_optimize, CpoConfig};
use irsc_core::optimizer::{dummy_from_distribution, evaluate, search, SearchConfig, SearchMode};
use irsc_core::sim::{simulate_matrix, to_csv, FerCurve, SimConfig};
use irsc_core::{
    brute_force_proto_cycles, build_pi, build_sc, degree_distributions, enumerate_ndi,
    lifted_cycle_count, make_ab_powers, CbMatrix, Circulant, CycleCensus, OverlapTable,
    PartitioningMatrix, Scope, SparseMatrix,
};
use serde_json::{json, Value};

use crate::manifest::{FileDigest, RunManifest};
use crate::{
    CensusArgs, CensusScope, CodeArgs, ConstructArgs, Failure, Mode, OptimizeArgs, Outcome,
    SimulateArgs, TuneArgs,
};

fn read(path: &Path) -> Result<(String, FileDigest), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let digest = FileDigest::of(path, &bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| Failure::Validation(format!("{}: not UTF-8 text", path.display())))?;
    Ok((text, digest))
}

fn in_file(path: &Path) -> impl FnOnce(irsc_core::Error) -> Failure + '_ {
    move |e| Failure::Validation(format!("{}: {e}", path.display()))
}

fn write(path: &Path, content: &str, manifest: &mut RunManifest) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, content).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    manifest
        .outputs
        .push(FileDigest::of(path, content.as_bytes()));
    Ok(())
}

fn finish(manifest: &mut RunManifest, path: &Path) -> Result<(), Failure> {
    manifest.finish();
    let text = manifest.to_json();
    fs::write(path, text + "\n").map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("manifest.json")
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json serializes") + "\n"
}

struct LoadedCode {
    pm: PartitioningMatrix,
    cm: CbMatrix,
    z: usize,
    inputs: Vec<FileDigest>,
    parameters: Value,
}

fn load_code(
    pm_path: &Path,
    cm_path: Option<&Path>,
    z: Option<usize>,
    memory: Option<usize>,
    coupling_length: usize,
) -> Result<LoadedCode, Failure> {
    let (pm_text, pm_digest) = read(pm_path)?;
    let pm = PartitioningMatrix::parse(&pm_text, memory).map_err(in_file(pm_path))?;
    let z = z.unwrap_or(pm.kappa());
    let mut inputs = vec![pm_digest];
    let cm = match cm_path {
        Some(path) => {
            let (text, digest) = read(path)?;
            inputs.push(digest);
            CbMatrix::parse(&text, z).map_err(in_file(path))?
        }
        None => make_ab_powers(pm.gamma(), pm.kappa(), z)?,
    };
    if cm.gamma() != pm.gamma() || cm.kappa() != pm.kappa() {
        return Err(Failure::Validation(format!(
            "dimension mismatch: partitioning is {}x{}, circulant powers are {}x{}",
            pm.gamma(),
            pm.kappa(),
            cm.gamma(),
            cm.kappa()
        )));
    }
    let parameters = json!({
        "gamma": pm.gamma(),
        "kappa": pm.kappa(),
        "z": z,
        "L": coupling_length,
        "memory": pm.memory(),
        "powers": if cm_path.is_some() { "file" } else { "array-based" },
    });
    Ok(LoadedCode {
        pm,
        cm,
        z,
        inputs,
        parameters,
    })
}

fn load(args: &CodeArgs) -> Result<LoadedCode, Failure> {
    let code = load_code(
        &args.pm,
        args.cm.as_deref(),
        args.z,
        args.memory,
        args.coupling_length,
    )?;
    for (flag, want, got) in [
        ("--gamma", args.gamma, code.pm.gamma()),
        ("--kappa", args.kappa, code.pm.kappa()),
    ] {
        if let Some(w) = want.filter(|&w| w != got) {
            return Err(Failure::Validation(format!(
                "dimension mismatch: {flag} {w} but the partitioning matrix has {got}"
            )));
        }
    }
    Ok(code)
}

fn format_fractions(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", cells.join(", "))
}

pub fn construct(args: &ConstructArgs) -> Result<Outcome, Failure> {
    let code = load(&args.code)?;
    let l = args.code.coupling_length;
    let sc = build_sc(&code.cm, &code.pm, l)?;
    let mut manifest = RunManifest::new("construct", code.parameters, None, code.inputs);
    let out = &args.out;

    write(
        &out.join("h_sc.alist"),
        &sc.lifted().to_alist(),
        &mut manifest,
    )?;
    let proto = format!(
        "# manifest {}\n{}",
        manifest.digest,
        sc.protograph().to_pattern()
    );
    write(&out.join("protograph.txt"), &proto, &mut manifest)?;

    let dd = degree_distributions(
        &code.pm.dummy_protograph(),
        code.pm.gamma(),
        code.pm.kappa(),
    )?;
    let report = sc.check_degrees();
    let interior: BTreeSet<usize> = report.interior_degrees.iter().copied().collect();
    let degrees = json!({
        "manifest": manifest.digest,
        "rows": sc.lifted().n_rows(),
        "columns": sc.lifted().n_cols(),
        "design_rate": sc.design_rate(),
        "lambda": sc.replica_vn_histogram(),
        "lambda_from_dummy": dd.vn,
        "interior_phi": report.interior_phi,
        "interior_degrees": report.interior_degrees,
        "boundary": report.boundary,
    });
    write(&out.join("degrees.json"), &pretty(&degrees), &mut manifest)?;
    finish(&mut manifest, &out.join("manifest.json"))?;

    println!(
        "H_SC: {} x {}, design rate {:.4}",
        sc.lifted().n_rows(),
        sc.lifted().n_cols(),
        sc.design_rate()
    );
    println!("Lambda = {}", format_fractions(&sc.replica_vn_histogram()));
    println!("interior check-node degrees: {interior:?}");
    for b in &report.boundary {
        println!(
            "boundary row block {}: degrees {:?}",
            b.row_block, b.degrees
        );
    }
    println!("manifest {}", manifest.digest);
    Ok(Outcome::Complete)
}

fn parse_fractions(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|cell| {
            let cell = cell.trim();
            let bad = || Failure::Validation(format!("`{cell}` is not a fraction"));
            match cell.split_once('/') {
                Some((n, d)) => {
                    let n: f64 = n.trim().parse().map_err(|_| bad())?;
                    let d: f64 = d.trim().parse().map_err(|_| bad())?;
                    if d == 0.0 {
                        return Err(bad());
                    }
                    Ok(n / d)
                }
                None => cell.parse().map_err(|_| bad()),
            }
        })
        .collect()
}

pub fn optimize(args: &OptimizeArgs) -> Result<Outcome, Failure> {
    let mut inputs = Vec::new();
    let (hd, gamma, kappa) = match (&args.pm, &args.lambda, &args.phi) {
        (Some(path), _, _) => {
            let (text, digest) = read(path)?;
            inputs.push(digest);
            let pm = PartitioningMatrix::parse(&text, Some(1)).map_err(in_file(path))?;
            (pm.dummy_protograph(), pm.gamma(), pm.kappa())
        }
        (None, Some(lambda), Some(phi)) => {
            let gamma = args.gamma.expect("clap requires --gamma");
            let kappa = args.kappa.expect("clap requires --kappa");
            let hd = dummy_from_distribution(
                &parse_fractions(lambda)?,
                &parse_fractions(phi)?,
                gamma,
                kappa,
            )?;
            (hd, gamma, kappa)
        }
        _ => {
            return Err(Failure::Validation(
                "give either --pm or --lambda with --phi".into(),
            ))
        }
    };
    let mode = match args.mode {
        Mode::Exhaustive => SearchMode::Exhaustive,
        Mode::Annealing => SearchMode::Annealing,
        Mode::CoordinateDescent => SearchMode::CoordinateDescent,
    };
    let cfg = SearchConfig {
        balance_tolerance: args.balance_tol,
        mode,
        budget: args.budget,
        seed: args.seed,
        ..SearchConfig::default()
    };
    let parameters = json!({
        "gamma": gamma,
        "kappa": kappa,
        "L": args.coupling_length,
        "dummy": hd.to_pattern(),
        "search": cfg,
    });
    let mut manifest = RunManifest::new("optimize", parameters, Some(args.seed), inputs);
    let result = search(&hd, gamma, kappa, args.coupling_length, &cfg)?;
    let table = OverlapTable::from_stacked(&build_pi(&result.pm)?);

    let out = &args.out;
    let pm_text = format!(
        "# manifest {}\n# F = {}\n{}",
        manifest.digest,
        result.f,
        result.pm.to_text()
    );
    write(&out.join("pm.txt"), &pm_text, &mut manifest)?;
    let mut log = json!({"manifest": manifest.digest}).to_string() + "\n";
    for entry in &result.log {
        log.push_str(&serde_json::to_string(entry).expect("log serializes"));
        log.push('\n');
    }
    write(&out.join("log.jsonl"), &log, &mut manifest)?;
    let table_json: Value = serde_json::from_str(&table.to_json()).expect("table json");
    let overlaps = json!({
        "manifest": manifest.digest,
        "F": result.f,
        "evaluations": result.evaluations,
        "table": table_json,
    });
    write(
        &out.join("overlaps.json"),
        &pretty(&overlaps),
        &mut manifest,
    )?;
    finish(&mut manifest, &out.join("manifest.json"))?;

    println!("F = {} after {} evaluations", result.f, result.evaluations);
    print!("{}", result.pm.to_text());
    for set in enumerate_ndi(gamma) {
        println!("{set} = {}", table.resolve(&set)?);
    }
    println!("manifest {}", manifest.digest);
    if mode == SearchMode::CoordinateDescent && result.budget_exhausted {
        return Ok(Outcome::Partial(
            "coordinate descent stopped at the evaluation budget before converging".into(),
        ));
    }
    Ok(Outcome::Complete)
}

fn coupled_protograph(pm: &PartitioningMatrix, l: usize) -> Result<irsc_core::Protograph, Failure> {
    let unit = CbMatrix::new(
        pm.gamma(),
        pm.kappa(),
        1,
        vec![Circulant::Power(0); pm.gamma() * pm.kappa()],
    )?;
    Ok(build_sc(&unit, pm, l)?.protograph().clone())
}

pub fn census(args: &CensusArgs) -> Result<Outcome, Failure> {
    let (census, mut manifest, extra) = if let Some(path) = &args.alist {
        let (text, digest) = read(path)?;
        let h = SparseMatrix::from_alist(&text).map_err(in_file(path))?;
        let count = h.count_cycles(args.length)?;
        let parameters = json!({"source": "alist", "length": args.length});
        let census = CycleCensus {
            length: args.length,
            scope: Scope::Lifted,
            count,
            per_circulant: None,
        };
        let extra = json!({"rows": h.n_rows(), "columns": h.n_cols()});
        (
            census,
            RunManifest::new("census", parameters, None, vec![digest]),
            extra,
        )
    } else {
        let pm_path = args.pm.as_deref().expect("clap requires --pm");
        let code = load_code(
            pm_path,
            args.cm.as_deref(),
            args.z,
            args.memory,
            args.coupling_length,
        )?;
        let l = args.coupling_length;
        let census = match args.scope {
            CensusScope::Protograph if code.pm.memory() == 1 && args.length == 6 => CycleCensus {
                length: 6,
                scope: Scope::Protograph,
                count: evaluate(&code.pm, l)?,
                per_circulant: None,
            },
            CensusScope::Protograph => {
                brute_force_proto_cycles(&coupled_protograph(&code.pm, l)?, args.length)?
            }
            CensusScope::Lifted if code.pm.memory() == 1 => {
                lifted_cycle_count(&code.pm, &code.cm, code.z, l, args.length)?
            }
            CensusScope::Lifted => CycleCensus {
                length: args.length,
                scope: Scope::Lifted,
                count: build_sc(&code.cm, &code.pm, l)?
                    .lifted()
                    .count_cycles(args.length)?,
                per_circulant: None,
            },
        };
        let mut parameters = code.parameters;
        parameters["length"] = json!(args.length);
        parameters["scope"] = json!(census.scope);
        (
            census,
            RunManifest::new("census", parameters, None, code.inputs),
            json!({}),
        )
    };
    let mut value = serde_json::to_value(&census).expect("census serializes");
    value["manifest"] = json!(manifest.digest);
    if let Value::Object(extra) = extra {
        for (k, v) in extra {
            value[k] = v;
        }
    }
    let text = pretty(&value);
    match &args.out {
        Some(path) => {
            write(path, &text, &mut manifest)?;
            finish(&mut manifest, &sidecar(path))?;
            println!("cycles-{} = {}", census.length, census.count);
        }
        None => print!("{text}"),
    }
    Ok(Outcome::Complete)
}

pub fn tune(args: &TuneArgs) -> Result<Outcome, Failure> {
    let code = load(&args.code)?;
    let l = args.code.coupling_length;
    let cfg = CpoConfig {
        max_rounds: args.max_rounds,
        seed: args.seed,
        restarts: args.restarts,
    };
    let mut parameters = code.parameters;
    parameters["cpo"] = json!(cfg);
    let mut manifest = RunManifest::new("tune", parameters, Some(args.seed), code.inputs);
    let state = cpo_optimize(&code.pm, &code.cm, code.z, l, &cfg)?;
    let cycles4 = lifted_cycle_count(&code.pm, &state.cm, code.z, l, 4)?.count;

    let out = &args.out;
    let cm_text = format!(
        "# manifest {}\n# cycles-6 {} -> {}\n{}",
        manifest.digest,
        state.initial_cycles6,
        state.census.count,
        state.cm.to_text_masked(&code.pm)
    );
    write(&out.join("cm.txt"), &cm_text, &mut manifest)?;
    let mut trace = json!({"manifest": manifest.digest}).to_string() + "\n";
    for step in &state.history {
        trace.push_str(&serde_json::to_string(step).expect("step serializes"));
        trace.push('\n');
    }
    write(&out.join("trace.jsonl"), &trace, &mut manifest)?;
    let mut census = serde_json::to_value(&state.census).expect("census serializes");
    census["manifest"] = json!(manifest.digest);
    census["initial_count"] = json!(state.initial_cycles6);
    census["cycles4"] = json!(cycles4);
    write(&out.join("census.json"), &pretty(&census), &mut manifest)?;
    finish(&mut manifest, &out.join("manifest.json"))?;

    println!(
        "cycles-6: {} -> {} after {} moves; cycles-4: {cycles4}",
        state.initial_cycles6, state.census.count, state.iteration
    );
    print!("{}", state.cm.to_text_masked(&code.pm));
    println!("manifest {}", manifest.digest);
    if !state.converged {
        return Ok(Outcome::Partial(format!(
            "stopped after {} rounds before reaching a local minimum",
            args.max_rounds
        )));
    }
    Ok(Outcome::Complete)
}

fn parse_snr(text: &str) -> Result<f64, Failure> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        t => t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Failure::Validation(format!("`{text}` is not an SNR in dB"))),
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome, Failure> {
    let mut codes: Vec<(String, SparseMatrix, f64)> = Vec::new();
    let mut inputs = Vec::new();
    let mut parameters = json!({});
    if !args.alist.is_empty() {
        for path in &args.alist {
            let (text, digest) = read(path)?;
            inputs.push(digest);
            let h = SparseMatrix::from_alist(&text).map_err(in_file(path))?;
            let rate = 1.0 - h.n_rows() as f64 / h.n_cols() as f64;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "code".into());
            let mut name = stem.clone();
            let mut k = 2;
            while codes.iter().any(|(n, _, _)| *n == name) {
                name = format!("{stem}-{k}");
                k += 1;
            }
            codes.push((name, h, rate));
        }
        parameters["codes"] = json!(codes.iter().map(|c| &c.0).collect::<Vec<_>>());
    } else if let Some(pm_path) = &args.pm {
        let code = load_code(
            pm_path,
            args.cm.as_deref(),
            args.z,
            args.memory,
            args.coupling_length,
        )?;
        let sc = build_sc(&code.cm, &code.pm, args.coupling_length)?;
        inputs = code.inputs;
        parameters = code.parameters;
        codes.push(("code".into(), sc.lifted().clone(), sc.design_rate()));
    } else {
        return Err(Failure::Validation("give --alist or --pm".into()));
    }
    let snr_db_points = args
        .snr
        .iter()
        .map(|s| parse_snr(s))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = SimConfig {
        snr_db_points,
        max_frames: args.max_frames,
        min_frame_errors: args.min_errors,
        iterations: args.iters,
        seed: args.seed,
        normalization: args.normalization,
    };
    cfg.validate()?;
    parameters["sim"] = json!({
        "snr_db": args.snr,
        "max_frames": cfg.max_frames,
        "min_frame_errors": cfg.min_frame_errors,
        "iterations": cfg.iterations,
        "normalization": cfg.normalization,
    });
    let mut manifest = RunManifest::new("simulate", parameters, Some(args.seed), inputs);
    let mut curves = Vec::with_capacity(codes.len());
    for (name, h, rate) in codes {
        let points = simulate_matrix(&h, rate, &cfg)?;
        for p in &points {
            println!(
                "{name} {} dB: {}/{} frames, FER {:.3e} [{:.3e}, {:.3e}]",
                p.snr_db, p.frame_errors, p.frames_run, p.fer, p.ci_low, p.ci_high
            );
        }
        curves.push(FerCurve {
            code: name,
            rate,
            points,
        });
    }
    let csv = format!("# manifest {}\n{}", manifest.digest, to_csv(&curves, &cfg));
    write(&args.out, &csv, &mut manifest)?;
    finish(&mut manifest, &sidecar(&args.out))?;
    println!("manifest {}", manifest.digest);
    Ok(Outcome::Complete)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions() {
        let v = parse_fractions("0, 0,8/13 ,5/13").unwrap();
        assert_eq!(v[..2], [0.0, 0.0]);
        assert!((v[2] - 8.0 / 13.0).abs() < 1e-15);
        assert!(parse_fractions("1/0").is_err());
        assert!(parse_fractions("a").is_err());
    }

    #[test]
    fn snr_values() {
        assert_eq!(parse_snr("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_snr(" 2.5").unwrap(), 2.5);
        assert!(parse_snr("nan").is_err());
        assert!(parse_snr("db").is_err());
    }
}
