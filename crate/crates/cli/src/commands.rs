use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use wg7_core::cipher::{keystream_with_state, KEY_BITS};
use wg7_core::cube::{
    compact_ranges, complexity_report, online_recover, screen_iv, ComplexityRow, CubeSpec,
    TableOptions, PUBLISHED_CUBES,
};
use wg7_core::milp::{build_wg7_eval, EvalConfig, ExternalSolver, SolveOutcome, SolverBackend};
use wg7_core::{Iv81, Key80, TrailEngine, Verdict};

use crate::{AttackArgs, Cli, Engine, ExtractArgs, Failure, KeystreamArgs, ModelArgs, VERSION};

fn join(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// First line of every report.
fn header(cli: &Cli, command: &str, fields: &[(&str, String)]) -> String {
    let mut s = format!(
        "# wg7 version={VERSION} command={command} seed={} workers={}",
        cli.seed, cli.workers
    );
    for (k, v) in fields {
        let _ = write!(s, " {k}={v}");
    }
    s
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::Other(format!("cannot write {}: {e}", path.display())))
}

pub fn keystream(cli: &Cli, a: &KeystreamArgs) -> Result<(), Failure> {
    let key = Key80::from_hex(&a.key)?;
    let iv = Iv81::from_binary(&a.iv)?;
    let (st, z) = keystream_with_state(key, iv, a.rounds, a.n);
    println!(
        "{}",
        header(
            cli,
            "keystream",
            &[
                ("key", key.to_hex()),
                ("iv", iv.to_binary_string()),
                ("rounds", a.rounds.to_string()),
                ("n", a.n.to_string())
            ]
        )
    );
    println!(
        "{}",
        z.iter().map(|b| char::from(b'0' + b)).collect::<String>()
    );
    println!("digest {:016x}", st.digest());
    Ok(())
}

pub fn model(cli: &Cli, a: &ModelArgs) -> Result<(), Failure> {
    let o = &a.opts;
    let cfg = EvalConfig::new(o.rounds, &o.cube.0, a.key_bit)
        .with_matrix(o.matrix)
        .with_and_model(o.and_model.into())
        .with_cuts(!a.no_cuts);
    let m = build_wg7_eval(&cfg)?;
    write_out(&a.out, &m.model.emit_lp())?;
    let s = m.size();
    let r = o.rounds as i64;
    let (pv, pc) = (73 * r + 532, 78 * r + 584);
    println!(
        "{}",
        header(
            cli,
            "model",
            &[
                ("rounds", o.rounds.to_string()),
                ("cube", join(&o.cube.0)),
                (
                    "key_bit",
                    a.key_bit.map_or("free".into(), |k| k.to_string())
                ),
                ("matrix", o.matrix.to_string()),
                ("and", format!("{:?}", o.and_model).to_lowercase()),
                ("cuts", (!a.no_cuts).to_string()),
                ("out", a.out.display().to_string())
            ]
        )
    );
    println!(
        "vars {} ref_73R+532={pv} delta={:+}",
        s.vars,
        s.vars as i64 - pv
    );
    println!(
        "constraints {} algorithm={} ref_78R+584={pc} delta={:+} cuts={} initial={}",
        s.constraints,
        s.algorithm_constraints(),
        s.algorithm_constraints() as i64 - pc,
        s.cuts,
        s.initial
    );
    Ok(())
}

/// Verdict per key bit: `Some(true)` involved, `None` undecided.
fn key_decisions(
    rounds: usize,
    cube: &[usize],
    matrix: wg7_core::MatrixSel,
    engine: &crate::EngineOpts,
    and_model: wg7_core::milp::AndModel,
) -> Result<Vec<Option<bool>>, Failure> {
    match engine.engine {
        Engine::Trail => {
            let eng = TrailEngine::new(matrix).with_budget(engine.budget);
            Ok(eng
                .key_verdicts(rounds, cube)?
                .into_iter()
                .map(|(v, _)| match v {
                    Verdict::Reached => Some(true),
                    Verdict::Unreachable => Some(false),
                    Verdict::BudgetExceeded => None,
                })
                .collect())
        }
        Engine::Milp => {
            let cmd = engine.solver_cmd.clone().ok_or_else(|| {
                Failure::Usage("--engine milp needs --solver-cmd or WG7_SOLVER_CMD".into())
            })?;
            let solver = ExternalSolver::new(cmd, Duration::from_secs(engine.timeout));
            (0..KEY_BITS)
                .into_par_iter()
                .map(|k| {
                    let cfg = EvalConfig::new(rounds, cube, Some(k))
                        .with_matrix(matrix)
                        .with_and_model(and_model);
                    let m = build_wg7_eval(&cfg)?;
                    Ok(match solver.solve(&m)? {
                        SolveOutcome::Feasible(_) => Some(true),
                        SolveOutcome::Infeasible => Some(false),
                        SolveOutcome::Timeout => None,
                    })
                })
                .collect::<Result<Vec<_>, wg7_core::Error>>()
                .map_err(Failure::from)
        }
    }
}

pub fn extract_j(cli: &Cli, a: &ExtractArgs) -> Result<(), Failure> {
    let o = &a.opts;
    let e = &a.engine;
    let dec = key_decisions(o.rounds, &o.cube.0, o.matrix, e, o.and_model.into())?;
    let j: Vec<usize> = (0..KEY_BITS).filter(|k| dec[*k] == Some(true)).collect();
    let undecided: Vec<usize> = (0..KEY_BITS).filter(|k| dec[*k].is_none()).collect();
    let mut out = header(
        cli,
        "extract-j",
        &[
            ("rounds", o.rounds.to_string()),
            ("cube", join(&o.cube.0)),
            ("engine", format!("{:?}", e.engine).to_lowercase()),
            ("matrix", o.matrix.to_string()),
            ("budget", e.budget.to_string()),
            (
                "solver",
                e.solver_cmd.clone().unwrap_or_else(|| "none".into()),
            ),
        ],
    );
    out.push('\n');
    let _ = writeln!(
        out,
        "j rounds={} cube={} nJ={} J={} ranges={} cost_log2={}",
        o.rounds,
        join(&o.cube.0),
        j.len(),
        join(&j),
        compact_ranges(&j),
        j.len() + o.cube.0.len()
    );
    if !undecided.is_empty() {
        let _ = writeln!(
            out,
            "undecided keys={} reason=budget-exceeded",
            join(&undecided)
        );
    }
    print!("{out}");
    if let Some(p) = &a.out {
        write_out(p, &out)?;
    }
    if undecided.is_empty() {
        Ok(())
    } else {
        Err(Failure::Budget(format!(
            "{} key bits undecided within the budget",
            undecided.len()
        )))
    }
}

pub fn attack(cli: &Cli, a: &AttackArgs) -> Result<(), Failure> {
    let mut jobs: Vec<(String, usize, Vec<usize>)> = Vec::new();
    for (i, c) in a.cube.iter().enumerate() {
        let r = a
            .rounds
            .ok_or_else(|| Failure::Usage("--cube needs --rounds".into()))?;
        jobs.push((format!("C{}", i + 1), r, c.0.clone()));
    }
    if a.published {
        jobs.extend(
            PUBLISHED_CUBES
                .iter()
                .map(|(id, r, c)| (id.to_string(), *r, c.to_vec())),
        );
    }
    if jobs.is_empty() {
        return Err(Failure::Usage(
            "give at least one --cube (with --rounds) or --published".into(),
        ));
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Other(format!("cannot create {}: {e}", dir.display())))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let true_key = Key80::random(&mut rng);
    let base_key = Key80::random(&mut rng);
    let engine = TrailEngine::new(a.matrix).with_budget(a.budget);

    let mut out = header(
        cli,
        "attack",
        &[
            ("matrix", a.matrix.to_string()),
            ("budget", a.budget.to_string()),
            ("trials", a.trials.to_string()),
            ("max_j", a.max_j.to_string()),
            ("true_key", true_key.to_hex()),
            ("base_key", base_key.to_hex()),
        ],
    );
    out.push('\n');
    let mut rows = Vec::new();
    let (mut budget_hit, mut lost) = (false, false);
    let mut bits_total = 0.0;
    for (n, (id, rounds, cube)) in jobs.iter().enumerate() {
        let verdicts = engine.key_verdicts(*rounds, cube)?;
        if verdicts.iter().any(|(v, _)| *v == Verdict::BudgetExceeded) {
            budget_hit = true;
            let _ = writeln!(
                out,
                "cube id={id} rounds={rounds} I={} status=budget-exceeded",
                join(cube)
            );
            continue;
        }
        let j: Vec<usize> = (0..KEY_BITS)
            .filter(|k| verdicts[*k].0 == Verdict::Reached)
            .collect();
        rows.push(ComplexityRow {
            id: id.clone(),
            rounds: *rounds,
            cube: cube.clone(),
            j: j.clone(),
        });
        let prefix = format!(
            "cube id={id} rounds={rounds} I={} nJ={} J={}",
            join(cube),
            j.len(),
            compact_ranges(&j)
        );
        if j.len() > a.max_j {
            let _ = writeln!(out, "{prefix} status=offline-skipped reason=table-limit");
            continue;
        }
        let opts = TableOptions {
            limit: a.max_j,
            path: a.out.as_ref().map(|d| d.join(format!("t1_{id}.bin"))),
            seed: cli.seed,
            ..TableOptions::default()
        };
        let template = CubeSpec::new(cube, Iv81::default(), *rounds)?;
        let screen_seed = cli.seed.wrapping_add(n as u64 + 1);
        match screen_iv(&template, &j, base_key, a.trials, screen_seed, &opts)? {
            Err(trials) => {
                let _ = writeln!(out, "{prefix} status=constant-after-trials trials={trials}");
            }
            Ok(s) => {
                let row = &online_recover(true_key, &[(s.spec.clone(), s.profile.clone())])[0];
                lost |= !row.true_survives;
                bits_total += row.bits_recovered();
                let _ = writeln!(
                    out,
                    "{prefix} status=ok iv_attempts={} iv={} verdict={} ones={}/{} observed={} survivors={} \
                     fraction={:.6} bits={:.4} true_key_survives={}",
                    s.attempts,
                    s.spec.iv_const().to_binary_string(),
                    s.profile.verdict,
                    s.profile.ones,
                    s.profile.len(),
                    row.observed,
                    row.survivors,
                    row.surviving_fraction(),
                    row.bits_recovered(),
                    if row.true_survives { "yes" } else { "no" }
                );
            }
        }
    }
    let _ = writeln!(out, "recovered bits={bits_total:.4}");
    out.push_str(&complexity_report(rows).to_records());
    print!("{out}");
    if let Some(dir) = &a.out {
        write_out(&dir.join("report.txt"), &out)?;
    }
    if lost {
        Err(Failure::Verify("the true key was eliminated".into()))
    } else if budget_hit {
        Err(Failure::Budget(
            "some cubes exceeded the node budget".into(),
        ))
    } else {
        Ok(())
    }
}
