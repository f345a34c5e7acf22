use std::collections::BTreeSet;
use std::fs;
use std::time::Duration;

use wg7_core::cipher::{filter, ksg_anf, wgp};
use wg7_core::divprop::reverse7;
use wg7_core::gf7::to_stage_bits;
use wg7_core::milp::{
    build_wg7_eval, copy_xor_counts, AndModel, BuiltinBackend, EvalConfig, ExternalSolver,
    IneqSet21, SolveOutcome, SolverBackend,
};
use wg7_core::trail::{RoundLayers, M_PAPER};
use wg7_core::{FieldElem, MatrixSel, TrailEngine};

use crate::{Failure, SelftestArgs, VERSION};

enum Status {
    Pass,
    Fail,
    Skip,
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn filter_check() -> (Status, String) {
    let mut seen = [false; 128];
    let bad = FieldElem::all()
        .filter(|x| {
            seen[wgp(*x).raw() as usize] = true;
            filter(*x) != ksg_anf(to_stage_bits(*x))
        })
        .count();
    let bij = seen.iter().all(|b| *b);
    (
        status(bad == 0 && bij),
        format!("128-point trace vs ANF mismatches {bad}, wgp bijective {bij}"),
    )
}

fn linear_check() -> (Status, String) {
    let c = copy_xor_counts(&M_PAPER, true);
    let ok = c.patterns.len() == 626 && c.invalid.len() == 76;
    (
        status(ok),
        format!(
            "{} solutions, {} invalid / {} valid (expected 626, 76 / 550)",
            c.patterns.len(),
            c.invalid.len(),
            c.valid()
        ),
    )
}

/// Sweeps all 2^14 points; on mismatch names the rows to blame.
fn inequality_check(ineqs: &IneqSet21) -> (Status, String) {
    let table = RoundLayers::new(MatrixSel::Field).sbox().clone();
    let published = IneqSet21::published();
    let (mut missing, mut extra) = (0, 0);
    let mut rows = BTreeSet::new();
    for x in 0..128u8 {
        for y in 0..128u8 {
            let want = table.is_minimal_pair(reverse7(x), reverse7(y));
            let got = ineqs.satisfied(x, y);
            if want && !got {
                missing += 1;
                rows.extend(ineqs.violated_rows(x, y));
            } else if got && !want {
                extra += 1;
                rows.extend(
                    published
                        .violated_rows(x, y)
                        .into_iter()
                        .filter(|r| ineqs.rows()[*r] != published.rows()[*r]),
                );
            }
        }
    }
    let mut detail =
        format!("21-inequality sweep: {missing} trails rejected, {extra} non-trails accepted");
    if !rows.is_empty() {
        detail.push_str(&format!(
            ", rows {}",
            rows.iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
    }
    (status(missing == 0 && extra == 0), detail)
}

fn trail_check() -> (Status, String) {
    let (p, f) = (
        RoundLayers::new(MatrixSel::Paper),
        RoundLayers::new(MatrixSel::Field),
    );
    let same =
        p.linear() == f.linear() && (0..128u8).all(|u| p.sbox().minimal(u) == f.sbox().minimal(u));
    let j = TrailEngine::new(MatrixSel::Paper).involved_keys(14, &[0, 36, 37, 73, 74, 75, 76]);
    let want: Vec<usize> = (0..7).chain(39..49).chain(77..80).collect();
    let ok_j = j.as_ref().map(|j| *j == want).unwrap_or(false);
    (
        status(same && ok_j),
        format!(
            "paper/field tables agree {same}, R=14 cube I1 |J|={}",
            j.map(|j| j.len().to_string())
                .unwrap_or_else(|e| e.to_string())
        ),
    )
}

fn model_check() -> (Status, String) {
    let cfg = EvalConfig::new(2, &[80], Some(79));
    let stable = build_wg7_eval(&cfg).unwrap().model.emit_lp()
        == build_wg7_eval(&cfg).unwrap().model.emit_lp();
    let b = BuiltinBackend::default();
    let zero_exact =
        build_wg7_eval(&EvalConfig::new(1, &[], None).with_and_model(AndModel::Exact)).unwrap();
    let zero_ok = b
        .solve(&zero_exact)
        .map(|o| o == SolveOutcome::Infeasible)
        .unwrap_or(false);
    (
        status(stable && zero_ok),
        format!(
            "LP emission deterministic {stable}, zero property infeasible (exact AND) {zero_ok}"
        ),
    )
}

fn solver_check(cmd: Option<&str>) -> (Status, String) {
    let Some(cmd) = cmd else {
        return (
            Status::Skip,
            "milp cross-check: no solver configured".into(),
        );
    };
    let ext = ExternalSolver::new(cmd, Duration::from_secs(120));
    let b = BuiltinBackend::default();
    let queries: [(usize, &[usize], usize); 4] = [
        (1, &[80], 77),
        (3, &[75, 76], 79),
        (4, &[0, 36], 0),
        (6, &[73, 74, 75, 76], 78),
    ];
    let mut agree = 0;
    for (r, cube, k) in queries {
        let m = build_wg7_eval(&EvalConfig::new(r, cube, Some(k))).unwrap();
        match (b.solve(&m), ext.solve(&m)) {
            (Ok(x), Ok(y)) if x.is_feasible() == y.is_feasible() && y != SolveOutcome::Timeout => {
                agree += 1
            }
            (_, Err(e)) => return (Status::Skip, format!("milp cross-check: {e}")),
            _ => {}
        }
    }
    (
        status(agree == queries.len()),
        format!("milp cross-check: {agree}/{} queries agree", queries.len()),
    )
}

pub fn run(a: &SelftestArgs) -> Result<(), Failure> {
    let ineqs = match &a.inequalities {
        None => IneqSet21::published(),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
            IneqSet21::parse(&text)?
        }
    };
    println!(
        "# wg7 version={VERSION} command=selftest solver={} inequalities={}",
        a.solver_cmd.as_deref().unwrap_or("none"),
        a.inequalities
            .as_ref()
            .map_or("built-in".into(), |p| p.display().to_string())
    );
    let checks = [
        ("filter", filter_check()),
        ("linear", linear_check()),
        ("inequalities", inequality_check(&ineqs)),
        ("trail", trail_check()),
        ("model", model_check()),
        ("milp", solver_check(a.solver_cmd.as_deref())),
    ];
    let mut failed = Vec::new();
    for (name, (st, detail)) in &checks {
        let tag = match st {
            Status::Pass => "PASS",
            Status::Fail => {
                failed.push(*name);
                "FAIL"
            }
            Status::Skip => "SKIP",
        };
        println!("{tag} {name}: {detail}");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}
