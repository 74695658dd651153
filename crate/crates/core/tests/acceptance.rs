//! Acceptance checks, one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::time::Instant;

use irsc_core::cpo::{cpo_optimize, CpoConfig};
use irsc_core::optimizer::{evaluate, search, SearchConfig, SearchMode};
use irsc_core::sim::{simulate, to_csv, FerCurve, SimConfig};
use irsc_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PM1: &str = include_str!("../../../data/pm1.txt");
const PM23: &str = include_str!("../../../data/pm23.txt");
const CM3: &str = include_str!("../../../data/cm3.txt");
const Z: usize = 13;
const L: usize = 10;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn pm(text: &str) -> PartitioningMatrix {
    PartitioningMatrix::parse(text, Some(1)).expect("fixture parses")
}

fn cm3() -> CbMatrix {
    CbMatrix::parse(CM3, Z).expect("fixture parses")
}

fn ab() -> CbMatrix {
    make_ab_powers(4, 13, Z).expect("valid AB parameters")
}

fn coupled_protograph(pm: &PartitioningMatrix, l: usize) -> Result<Protograph, String> {
    let unit = CbMatrix::new(
        pm.gamma(),
        pm.kappa(),
        1,
        vec![Circulant::Power(0); pm.gamma() * pm.kappa()],
    )
    .map_err(err)?;
    Ok(build_sc(&unit, pm, l).map_err(err)?.protograph().clone())
}

fn random_pm(rng: &mut ChaCha8Rng, gamma: usize, kappa: usize) -> PartitioningMatrix {
    let labels = (0..gamma * kappa)
        .map(|_| match rng.random_range(0..3) {
            0 => Label::Dummy,
            k => Label::Component(k - 1),
        })
        .collect();
    PartitioningMatrix::new(gamma, kappa, 1, labels).expect("valid shape")
}

fn criterion_1() -> Check {
    for g in 1..=5u32 {
        let n = enumerate_ndi(g as usize).len();
        ensure(n == (3usize.pow(g) - 2usize.pow(g)), || {
            format!("gamma {g}: {n} parameters")
        })?;
    }
    let listed: [&[usize]; 19] = [
        &[3],
        &[4],
        &[5],
        &[3, 4],
        &[3, 5],
        &[4, 5],
        &[3, 7],
        &[3, 8],
        &[4, 6],
        &[4, 8],
        &[5, 6],
        &[5, 7],
        &[3, 4, 5],
        &[3, 4, 8],
        &[3, 5, 7],
        &[3, 7, 8],
        &[4, 5, 6],
        &[4, 6, 8],
        &[5, 6, 7],
    ];
    let got: Vec<Vec<usize>> = enumerate_ndi(3).iter().map(|s| s.rows().to_vec()).collect();
    let want: Vec<Vec<usize>> = listed.iter().map(|r| r.to_vec()).collect();
    ensure(got == want, || format!("gamma 3 list differs: {got:?}"))?;
    Ok("sizes 1, 5, 19, 65, 211; gamma 3 list exact".into())
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..100 {
        let labels = (0..21)
            .map(|c| {
                if c / 7 == c % 7 {
                    Label::Dummy
                } else {
                    Label::Component(rng.random_range(0..2))
                }
            })
            .collect();
        let pm = PartitioningMatrix::new(3, 7, 1, labels).map_err(err)?;
        let pi = build_pi(&pm).map_err(err)?;
        let table = OverlapTable::from_stacked(&pi);
        let t = |rows: &[usize]| -> Result<i64, String> {
            let direct = pi.overlap(rows).map_err(err)? as i64;
            let resolved = table
                .resolve(&RowSet::new(rows.to_vec()).map_err(err)?)
                .map_err(err)?;
            ensure(direct == resolved, || {
                format!("trial {trial}: t{rows:?} {resolved} != {direct}")
            })?;
            Ok(resolved)
        };
        let checks = [
            ("t6 = 1", t(&[6])? == 1),
            ("t1 = 6 - t4", t(&[1])? == 6 - t(&[4])?),
            ("t78 = 0", t(&[7, 8])? == 0),
            (
                "t02 relation",
                t(&[0, 2])? == 5 - t(&[3])? - t(&[5])? + t(&[3, 5])? + t(&[3, 8])? + t(&[5, 6])?,
            ),
            (
                "t13 relation",
                t(&[1, 3])? == t(&[3])? - t(&[3, 4])? - t(&[3, 7])?,
            ),
        ];
        for (name, ok) in checks {
            ensure(ok, || format!("trial {trial}: {name} fails"))?;
        }
    }
    Ok("5 identities hold for 100 random partitionings".into())
}

fn criterion_3() -> Check {
    let mut exhaustive = 0;
    for kappa in 1..=4usize {
        let cells = 2 * kappa;
        for code in 0..3usize.pow(cells as u32) {
            let mut c = code;
            let labels = (0..cells)
                .map(|_| {
                    let d = c % 3;
                    c /= 3;
                    if d == 2 {
                        Label::Dummy
                    } else {
                        Label::Component(d)
                    }
                })
                .collect();
            let pm = PartitioningMatrix::new(2, kappa, 1, labels).map_err(err)?;
            for l in 1..=3 {
                let f = evaluate(&pm, l).map_err(err)?;
                let brute = brute_force_proto_cycles(&coupled_protograph(&pm, l)?, 6)
                    .map_err(err)?
                    .count;
                ensure(f == brute, || {
                    format!(
                        "gamma 2 {}: L={l} closed form {f}, brute {brute}",
                        pm.to_text()
                    )
                })?;
                exhaustive += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut random = 0;
    for (gamma, kappa) in [(3, 7), (4, 13)] {
        for _ in 0..1000 {
            let pm = random_pm(&mut rng, gamma, kappa);
            let f = evaluate(&pm, L).map_err(err)?;
            let brute = brute_force_proto_cycles(&coupled_protograph(&pm, L)?, 6)
                .map_err(err)?
                .count;
            ensure(f == brute, || {
                format!("{}: closed form {f}, brute {brute}", pm.to_text())
            })?;
            random += 1;
        }
    }
    Ok(format!(
        "{exhaustive} exhaustive and {random} random cases agree"
    ))
}

fn criterion_4() -> Check {
    let f1 = evaluate(&pm(PM1), L).map_err(err)?;
    let f23 = evaluate(&pm(PM23), L).map_err(err)?;
    ensure((f1, f23) == (9754, 4397), || format!("got {f1}, {f23}"))?;
    Ok(format!("F = {f1}, {f23}"))
}

fn criterion_5() -> Check {
    let cases = [(PM1, ab(), 12896), (PM23, ab(), 5278), (PM23, cm3(), 1469)];
    let mut got = Vec::new();
    for (text, cm, want) in cases {
        let pm = pm(text);
        let c6 = lifted_cycle_count(&pm, &cm, Z, L, 6).map_err(err)?.count;
        let direct = build_sc(&cm, &pm, L)
            .map_err(err)?
            .lifted()
            .count_cycles(6)
            .map_err(err)?;
        ensure(c6 == want && direct == want, || {
            format!("want {want}, index {c6}, direct {direct}")
        })?;
        got.push(c6);
    }
    let c4 = lifted_cycle_count(&pm(PM23), &cm3(), Z, L, 4)
        .map_err(err)?
        .count;
    ensure(c4 == 0, || format!("CM3 has {c4} cycles-4"))?;
    Ok(format!("cycles-6 {got:?}, CM3 cycles-4 0"))
}

fn criterion_6() -> Check {
    let want = [0.0, 0.0, 8.0 / 13.0, 5.0 / 13.0];
    for (name, text, cm) in [
        ("SC-Code-1", PM1, ab()),
        ("SC-Code-2", PM23, ab()),
        ("SC-Code-3", PM23, cm3()),
    ] {
        let pm = pm(text);
        let code = build_sc(&cm, &pm, L).map_err(err)?;
        let lambda = degree_distributions(&pm.dummy_protograph(), 4, 13)
            .map_err(err)?
            .vn;
        let hist = code.replica_vn_histogram();
        let close =
            |v: &[f64]| v.len() == 4 && v.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12);
        ensure(close(&lambda) && close(&hist), || {
            format!("{name}: lambda {lambda:?}, replica {hist:?}")
        })?;
        let report = code.check_degrees();
        ensure(report.interior_degrees.iter().all(|&d| d == 11), || {
            format!("{name}: interior degrees {:?}", report.interior_degrees)
        })?;
        ensure((report.interior_phi[10] - 1.0).abs() < 1e-12, || {
            format!("{name}: phi {:?}", report.interior_phi)
        })?;
    }
    Ok("Lambda = [0, 0, 8/13, 5/13], interior CN degree 11".into())
}

fn criterion_7() -> Check {
    let base = pm(PM23);
    let hd = base.dummy_protograph();
    let cfg = SearchConfig {
        mode: SearchMode::Annealing,
        budget: 1_000_000,
        balance_tolerance: 2,
        seed: 7,
        ..SearchConfig::default()
    };
    let out = search(&hd, 4, 13, L, &cfg).map_err(err)?;
    ensure(out.pm.dummy_protograph() == hd, || {
        "dummy pattern changed".into()
    })?;
    let recheck = evaluate(&out.pm, L).map_err(err)?;
    let brute = brute_force_proto_cycles(&coupled_protograph(&out.pm, L)?, 6)
        .map_err(err)?
        .count;
    ensure(out.f == recheck && out.f == brute, || {
        format!("reported {}, recount {recheck}, brute {brute}", out.f)
    })?;
    ensure(out.f <= 4397, || format!("F = {}", out.f))?;
    Ok(format!(
        "F = {} after {} evaluations",
        out.f, out.evaluations
    ))
}

fn criterion_8() -> Check {
    let pm = pm(PM23);
    let state = cpo_optimize(&pm, &ab(), Z, L, &CpoConfig::default()).map_err(err)?;
    let c6 = lifted_cycle_count(&pm, &state.cm, Z, L, 6)
        .map_err(err)?
        .count;
    let c4 = lifted_cycle_count(&pm, &state.cm, Z, L, 4)
        .map_err(err)?
        .count;
    ensure(state.initial_cycles6 == 5278, || {
        format!("start {}", state.initial_cycles6)
    })?;
    ensure(c6 < 5278 && c6 == state.census.count, || {
        format!("result {c6}, reported {}", state.census.count)
    })?;
    ensure(c4 == 0, || format!("{c4} cycles-4 after tuning"))?;
    let g = girth(&pm, &cm3(), Z, L).map_err(err)?;
    let c3 = lifted_cycle_count(&pm, &cm3(), Z, L, 6).map_err(err)?.count;
    ensure(g == 6 && c3 == 1469, || {
        format!("CM3 girth {g}, cycles-6 {c3}")
    })?;
    Ok(format!(
        "5278 -> {c6} in {} moves, cycles-4 0; CM3 girth 6 with 1469",
        state.iteration
    ))
}

fn criterion_9() -> Check {
    let code1 = build_sc(&ab(), &pm(PM1), L).map_err(err)?;
    let code3 = build_sc(&cm3(), &pm(PM23), L).map_err(err)?;
    let cfg = SimConfig {
        snr_db_points: vec![3.0],
        max_frames: 1_000_000,
        min_frame_errors: 200,
        seed: 9,
        ..SimConfig::default()
    };
    let p1 = simulate(&code1, &cfg).map_err(err)?[0].clone();
    let p3 = simulate(&code3, &cfg).map_err(err)?[0].clone();
    ensure(p1.fer >= 1e-3 && p3.fer >= 1e-3, || {
        format!("FER {} and {}", p1.fer, p3.fer)
    })?;
    ensure(p3.fer <= p1.fer && !p3.overlaps(&p1), || {
        format!("SC-Code-1 {p1:?}, SC-Code-3 {p3:?}")
    })?;

    let noiseless = SimConfig {
        snr_db_points: vec![f64::INFINITY],
        max_frames: 2000,
        ..cfg.clone()
    };
    for code in [&code1, &code3] {
        let p = &simulate(code, &noiseless).map_err(err)?[0];
        ensure(p.frame_errors == 0 && p.frames_run == 2000, || {
            format!("noiseless {p:?}")
        })?;
    }

    let small = SimConfig {
        snr_db_points: vec![2.5, 3.0],
        max_frames: 4000,
        min_frame_errors: 60,
        seed: 11,
        ..SimConfig::default()
    };
    let csv_with = |threads: usize| -> Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(err)?;
        pool.install(|| {
            let curves = [("sc1", &code1), ("sc3", &code3)]
                .into_iter()
                .map(|(name, code)| {
                    Ok(FerCurve {
                        code: name.into(),
                        rate: code.design_rate(),
                        points: simulate(code, &small).map_err(err)?,
                    })
                })
                .collect::<Result<Vec<_>, String>>()?;
            Ok(to_csv(&curves, &small))
        })
    };
    let one = csv_with(1)?;
    let four = csv_with(4)?;
    ensure(one == four, || "CSV differs between 1 and 4 threads".into())?;
    Ok(format!(
        "3.0 dB: SC-Code-1 FER {:.3e} [{:.3e}, {:.3e}] over {} frames, SC-Code-3 FER {:.3e} [{:.3e}, {:.3e}] over {} frames; noiseless FER 0; CSV identical at 1 and 4 threads",
        p1.fer, p1.ci_low, p1.ci_high, p1.frames_run, p3.fer, p3.ci_low, p3.ci_high, p3.frames_run
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("overlap parameter enumeration", criterion_1),
        ("dependent overlap identities", criterion_2),
        ("closed-form count equals brute force", criterion_3),
        ("protograph cycles-6 of PM1 and PM2,3", criterion_4),
        ("lifted cycles-6 of the three codes", criterion_5),
        ("degree distributions", criterion_6),
        ("partition search reaches 4397 or better", criterion_7),
        ("circulant power optimizer", criterion_8),
        ("frame error rate comparison", criterion_9),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (status, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {} {status}: {name}: {detail} ({:.2?})",
            n + 1,
            start.elapsed()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
