//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

use tpm_kinematics::cli::verify::{self, Status, VerifySettings};
use tpm_kinematics::fk::{self, FkSolution};
use tpm_kinematics::ik::{self, Root};
use tpm_kinematics::jacobian::{self, Configuration, ParallelCase, SingularityKind, Thresholds};
use tpm_kinematics::topology::{self, LoopSpec};
use tpm_kinematics::workspace::{self, ScanSpec, WorkspaceSample};
use tpm_kinematics::{JointInputs, Pose, ValidatedParams};

const TABLE1_INPUTS: [f64; 3] = [162.6907, -143.3209, -24.6776];
const TABLE1_STARRED: Pose = Pose {
    x: -15.4714,
    y: 9.6849,
    z: 456.3315,
};
const TABLE2_STARRED: [f64; 3] = [162.6909, -143.3211, -24.6778];

// Golden counts for the 21^3 scan of the reference box, frozen after the
// first run and cross-checked against `radicand_oracle` below.
const GOLDEN_FEASIBLE: usize = 6741;
const GOLDEN_REGULAR: usize = 6426;
const GOLDEN_SERIAL: usize = 189;
const GOLDEN_PARALLEL: usize = 126;
const GOLDEN_COMPREHENSIVE: usize = 0;

fn report(n: u32, title: &str, ok: bool, detail: String) {
    println!(
        "{} criterion {n}: {title} -- {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

fn mean_time<T>(reps: u32, mut f: impl FnMut() -> T) -> Duration {
    std::hint::black_box(f());
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(f());
    }
    start.elapsed() / reps
}

fn params() -> ValidatedParams {
    ValidatedParams::reference()
}

fn criterion_1_direct_reproduction() {
    let p = params();
    let q = JointInputs::from_array(TABLE1_INPUTS);
    let sols = fk::solve(&q, &p).unwrap();
    let err = sols
        .iter()
        .map(|s| s.pose.max_abs_diff(&TABLE1_STARRED))
        .fold(f64::INFINITY, f64::min);
    let t = mean_time(1000, || fk::solve(&q, &p));
    let ok = err <= 5e-3 && t < Duration::from_millis(1);
    report(
        1,
        "direct solution reproduction",
        ok,
        format!("max coord error {err:.3e} mm, {t:?} per solve"),
    );
    assert!(ok);
}

fn criterion_2_inverse_reproduction() {
    let p = params();
    let target = JointInputs::from_array(TABLE2_STARRED);
    let r = ik::solve_report(&TABLE1_STARRED, &p, fk::CLOSURE_TOL).unwrap();
    let consistent = r
        .solutions
        .iter()
        .filter(|s| s.round_trip.is_consistent())
        .count();
    let err = r
        .solutions
        .iter()
        .map(|s| s.inputs.max_abs_diff(&target))
        .fold(f64::INFINITY, f64::min);
    let t = mean_time(1000, || {
        ik::solve_report(&TABLE1_STARRED, &p, fk::CLOSURE_TOL)
    });
    let ok =
        r.solutions.len() == 8 && consistent == 8 && err <= 5e-2 && t < Duration::from_millis(1);
    report(
        2,
        "inverse solution reproduction",
        ok,
        format!(
            "{} real, {consistent} round-trip consistent, {} complex; nearest {err:.3e} mm; {t:?} per solve",
            r.solutions.len(),
            r.complex_combinations
        ),
    );
    assert!(ok);
}

fn criterion_3_round_trip() {
    let p = params();
    let grid = workspace::scan(&ScanSpec::reference(ScanSpec::DEFAULT_RESOLUTION), &p).unwrap();
    let feasible: Vec<Pose> = grid.iter().filter(|s| s.feasible).map(|s| s.pose).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let poses: Vec<Pose> = feasible.choose_multiple(&mut rng, 1000).copied().collect();

    let start = Instant::now();
    let mut solutions = 0;
    let mut pinned = 0;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for pose in &poses {
        let r = ik::solve_report(pose, &p, 1e-6).unwrap();
        for s in &r.solutions {
            solutions += 1;
            match s.round_trip {
                ik::RoundTrip::Consistent { error } => worst = worst.max(error),
                ik::RoundTrip::PinnedGamma { error } => {
                    pinned += 1;
                    worst = worst.max(error);
                }
                _ => failures += 1,
            }
        }
    }
    let elapsed = start.elapsed();
    let ok =
        poses.len() == 1000 && failures == 0 && worst <= 1e-6 && elapsed < Duration::from_secs(5);
    report(
        3,
        "IK -> FK round trip",
        ok,
        format!(
            "{} poses, {solutions} solutions ({pinned} with B = 0 checked at their own gamma), worst {worst:.2e} mm, {failures} failures, {elapsed:?}",
            poses.len()
        ),
    );
    assert!(ok);
}

fn criterion_4_jacobian_correctness() {
    let p = params();
    let thresholds = Thresholds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    let mut worst_fd: f64 = 0.0;
    let mut worst_det: f64 = 0.0;
    let mut det_samples = 0;
    while checked < 100 {
        let pose = Pose {
            x: rng.gen_range(-110.0..90.0),
            y: rng.gen_range(-250.0..250.0),
            z: rng.gen_range(180.0..480.0),
        };
        let Ok(sols) = ik::enumerate(&pose, &p) else {
            continue;
        };
        for s in &sols {
            let Ok(pair) = jacobian::build(&pose, s, &p) else {
                continue;
            };
            let prod = pair.jq[(0, 0)] * pair.jq[(1, 1)] * pair.jq[(2, 2)];
            let lu = pair.jq.determinant();
            worst_det = worst_det.max((lu - prod).abs() / prod.abs().max(f64::MIN_POSITIVE));
            worst_det =
                worst_det.max((pair.det_jq - prod).abs() / prod.abs().max(f64::MIN_POSITIVE));
            det_samples += 1;
        }
        let candidates: Vec<_> = sols
            .iter()
            .filter(|s| !s.is_parallelogram_assembly(&p))
            .collect();
        let Some(s) = candidates.choose(&mut rng) else {
            continue;
        };
        let Ok(pair) = jacobian::build(&pose, s, &p) else {
            continue;
        };
        if jacobian::classify(&pair, &thresholds).kind != SingularityKind::Regular {
            continue;
        }
        let fd = jacobian::fd_check(&pose, s, &p, 1e-6).unwrap();
        worst_fd = worst_fd.max(fd.deviation);
        checked += 1;
    }
    let ok = worst_fd <= 1e-5 && worst_det <= 4.0 * f64::EPSILON;
    report(
        4,
        "Jacobian correctness",
        ok,
        format!(
            "{checked} regular configurations, worst fd deviation {worst_fd:.2e}; det(Jq) vs prod(u) over {det_samples} branches, worst relative {worst_det:.1e}"
        ),
    );
    assert!(ok);
}

/// Starred-branch direct solution with `yA1 - yA2 = l3 + delta`.
fn sweep_point(p: &ValidatedParams, delta: f64) -> (JointInputs, FkSolution) {
    let [ya1, _, ya3] = TABLE1_INPUTS;
    let q = JointInputs::new(ya1, ya1 - p.l3 - delta, ya3).unwrap();
    let sol = fk::solve(&q, p)
        .unwrap()
        .into_iter()
        .max_by(|a, b| a.pose.z.total_cmp(&b.pose.z))
        .unwrap();
    (q, sol)
}

fn criterion_5_singularity_structure() {
    let p = params();
    let thresholds = Thresholds::default();
    let mut lines = Vec::new();
    let mut dets = Vec::new();
    let mut ok = true;
    for delta in [10.0, 1.0, 0.1] {
        let (q, sol) = sweep_point(&p, delta);
        let pair = jacobian::build_at(&Configuration::from_fk(&sol, &q), &p).unwrap();
        let class = jacobian::classify(&pair, &thresholds);
        let nd = pair.norm_det_jp.abs();
        // the parallel condition fires exactly when the normalized
        // determinant crosses the threshold, with rows 1 and 2 dependent
        let fires = nd <= thresholds.parallel;
        ok &= fires == class.kind.is_parallel();
        if fires {
            ok &= class.parallel_case == Some(ParallelCase::RowPair { rows: (1, 2) });
        }
        dets.push(nd);
        lines.push(format!(
            "delta {delta}: |det| {nd:.3e} {}",
            class.kind.as_str()
        ));
    }
    let (q10, s10) = sweep_point(&p, 10.0);
    let first = jacobian::classify(
        &jacobian::build_at(&Configuration::from_fk(&s10, &q10), &p).unwrap(),
        &thresholds,
    );
    ok &= first.kind == SingularityKind::Regular;
    ok &= dets.windows(2).all(|w| w[1] < w[0]);
    let (ql, sl) = sweep_point(&p, 0.1);
    let last = jacobian::classify(
        &jacobian::build_at(&Configuration::from_fk(&sl, &ql), &p).unwrap(),
        &thresholds,
    );
    ok &= last.kind.is_parallel();

    // exactly at B = 0 the parallelogram assembly is a pure parallel singularity
    let parallelogram = ik::enumerate(&TABLE1_STARRED, &p)
        .unwrap()
        .into_iter()
        .find(|s| s.is_parallelogram_assembly(&p))
        .unwrap();
    let pg = jacobian::classify(
        &jacobian::build(&TABLE1_STARRED, &parallelogram, &p).unwrap(),
        &thresholds,
    );
    ok &= pg.kind == SingularityKind::Parallel;

    // some Mi = 0: the serial condition fires with witness Wi
    let x = -15.0;
    let alpha = ((x + p.b - p.d) / p.l4).acos();
    let beta = ((x + p.d - p.b) / p.l6).acos();
    let boundary = [
        (
            0,
            Pose {
                x,
                y: 5.0,
                z: p.l1 + p.l2 - p.l4 * alpha.sin(),
            },
        ),
        (
            2,
            Pose {
                x,
                y: 5.0,
                z: p.l1 + p.l6 + p.l8 + p.l7 + p.l6 * beta.sin(),
            },
        ),
    ];
    for (chain, pose) in boundary {
        let sols = ik::enumerate(&pose, &p).unwrap();
        let on_boundary: Vec<_> = sols
            .iter()
            .filter(|s| s.branch.roots[chain] == Root::Double)
            .collect();
        ok &= !on_boundary.is_empty();
        let mut kinds = std::collections::BTreeSet::new();
        for s in &on_boundary {
            let class = jacobian::classify(&jacobian::build(&pose, s, &p).unwrap(), &thresholds);
            ok &= class.kind.is_serial() && class.serial_chains.contains(&(chain + 1));
            kinds.insert(class.kind.as_str());
        }
        lines.push(format!(
            "M{} = 0: {} branches {kinds:?}, all with W{}",
            chain + 1,
            on_boundary.len(),
            chain + 1
        ));
    }
    lines.push(format!("B = 0 assembly: {}", pg.kind.as_str()));
    report(5, "singularity structure", ok, lines.join("; "));
    assert!(ok);
}

fn criterion_6_topology_fixture() {
    let loops = [
        LoopSpec::new(6, 2, 3).unwrap(),
        LoopSpec::new(5, 1, 5).unwrap(),
    ];
    let f = topology::dof(11, &loops);
    let deltas = topology::constraint_degrees(&loops).unwrap();
    let kappa = topology::coupling_degree(&deltas).unwrap();
    let ok = f == 3 && deltas == [1, -1] && kappa == 1;
    report(
        6,
        "topology fixture",
        ok,
        format!("F = {f}, Delta = {deltas:?}, kappa = {kappa}"),
    );
    assert!(ok);
}

fn criterion_7_partial_decoupling() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs = 0;
    let mut evaluations = 0;
    let mut ok = true;
    while pairs < 100 {
        let pose = Pose {
            x: rng.gen_range(-100.0..80.0),
            y: rng.gen_range(-200.0..200.0),
            z: rng.gen_range(200.0..470.0),
        };
        let Some(s) = ik::enumerate(&pose, &p)
            .ok()
            .and_then(|v| v.into_iter().find(|s| !s.is_parallelogram_assembly(&p)))
        else {
            continue;
        };
        let base = s.inputs;
        let branch = fk::solve(&base, &p)
            .unwrap()
            .into_iter()
            .find(|f| f.pose.max_abs_diff(&pose) <= 1e-6)
            .unwrap()
            .branch;
        let mut ys = Vec::new();
        for k in 0..10 {
            let q = JointInputs {
                ya3: base.ya3 + 0.25 * k as f64,
                ..base
            };
            if let Some(f) = fk::solve(&q, &p)
                .unwrap()
                .into_iter()
                .find(|f| f.branch == branch)
            {
                ys.push(f.pose.y.to_bits());
            }
        }
        if ys.len() < 10 {
            continue;
        }
        evaluations += ys.len();
        ok &= ys.iter().all(|&b| b == ys[0]);
        pairs += 1;
    }
    report(
        7,
        "partial input-output decoupling",
        ok,
        format!("{pairs} (yA1, yA2) pairs x 10 yA3 values, {evaluations} fixed-branch solves, y bitwise constant"),
    );
    assert!(ok);
}

fn criterion_8_spurious_branch() {
    let p = params();
    let q = JointInputs::from_array(TABLE1_INPUTS);
    let b = q.ya1 - p.l3 - q.ya2;
    let cos_wrong = b / (2.0 * p.l2);
    let sin_wrong = (1.0 - cos_wrong * cos_wrong).sqrt();
    // the link |B2 C2| = l2 that the wrong root violates
    let dy = q.ya1 + p.l2 * cos_wrong - p.l3 - q.ya2;
    let violation = ((dy * dy + (p.l2 * sin_wrong).powi(2)).sqrt() - p.l2).abs();
    let survivors = fk::solve_with_gamma(&q, cos_wrong, sin_wrong, &p, fk::CLOSURE_TOL).len()
        + fk::solve_with_gamma(&q, cos_wrong, -sin_wrong, &p, fk::CLOSURE_TOL).len();

    let checks = verify::run_checks(&p, &VerifySettings::default());
    let info: Vec<String> = checks
        .iter()
        .filter(|c| c.status == Status::Info)
        .map(|c| format!("{} {:.4}", c.name, c.value.unwrap_or(f64::NAN)))
        .collect();
    let spurious_pass = checks
        .iter()
        .any(|c| c.name == "table1-spurious-gamma-rejected" && c.status == Status::Pass);
    let no_fail = checks.iter().all(|c| c.status != Status::Fail);
    let ok = violation > 10.0 && survivors == 0 && spurious_pass && no_fail && info.len() == 3;
    report(
        8,
        "spurious branch detection",
        ok,
        format!(
            "wrong-root closure residual {violation:.4} mm, {survivors} survivors; reported: {}",
            info.join(", ")
        ),
    );
    assert!(ok);
}

/// Feasibility straight from the radicands, independent of `ik`.
fn radicand_oracle(pose: &Pose, p: &ValidatedParams) -> bool {
    let ca = (pose.x + p.b - p.d) / p.l4;
    let cb = (pose.x + p.d - p.b) / p.l6;
    if ca.abs() > 1.0 || cb.abs() > 1.0 {
        return false;
    }
    let sa = (1.0 - ca * ca).sqrt();
    let sb = (1.0 - cb * cb).sqrt();
    let chain12 = [sa, -sa].iter().any(|s| {
        let h = pose.z - p.l4 * s - p.l1;
        p.l2 * p.l2 - h * h >= -1e-14 * p.l2 * p.l2
    });
    let chain3 = [sb, -sb].iter().any(|s| {
        let h = pose.z - p.l8 - p.l6 * s - p.l7 - p.l1;
        p.l6 * p.l6 - h * h >= -1e-14 * p.l6 * p.l6
    });
    chain12 && chain3
}

fn csv_bytes(samples: &[WorkspaceSample]) -> Vec<u8> {
    let mut buf = Vec::new();
    workspace::write_csv(samples, &mut buf).unwrap();
    buf
}

fn criterion_9_workspace_determinism() {
    let p = params();
    let spec = ScanSpec::reference(21);
    let start = Instant::now();
    let first = workspace::scan(&spec, &p).unwrap();
    let elapsed = start.elapsed();
    let second = workspace::scan(&spec, &p).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| workspace::scan(&spec, &p).unwrap());
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| workspace::scan(&spec, &p).unwrap());
    let bytes = csv_bytes(&first);
    let identical = [&second, &single, &many]
        .iter()
        .all(|s| csv_bytes(s) == bytes);

    let summary = workspace::summarize(&first);
    let oracle_feasible = first
        .iter()
        .filter(|s| radicand_oracle(&s.pose, &p))
        .count();
    let oracle_agrees = first
        .iter()
        .all(|s| s.feasible == radicand_oracle(&s.pose, &p));

    // the grid cell containing the starred pose: some corner feasible, and
    // the pose itself evaluates feasible
    let step = |lo: f64, hi: f64| (hi - lo) / 20.0;
    let idx = |v: f64, lo: f64, hi: f64| ((v - lo) / step(lo, hi)).floor() as usize;
    let (ix, iy, iz) = (
        idx(TABLE1_STARRED.x, spec.x.min, spec.x.max),
        idx(TABLE1_STARRED.y, spec.y.min, spec.y.max),
        idx(TABLE1_STARRED.z, spec.z.min, spec.z.max),
    );
    let corners_feasible = (0..8)
        .filter(|c| {
            let (i, j, k) = (ix + (c & 1), iy + ((c >> 1) & 1), iz + ((c >> 2) & 1));
            first[(i * 21 + j) * 21 + k].feasible
        })
        .count();
    let pose_feasible = workspace::evaluate(&TABLE1_STARRED, &p, &spec.thresholds).feasible;

    let golden = summary.feasible == GOLDEN_FEASIBLE
        && summary.regular == GOLDEN_REGULAR
        && summary.serial == GOLDEN_SERIAL
        && summary.parallel == GOLDEN_PARALLEL
        && summary.comprehensive == GOLDEN_COMPREHENSIVE;
    let ok = first.len() == 9261
        && elapsed < Duration::from_secs(30)
        && identical
        && summary.feasible > 0
        && corners_feasible > 0
        && pose_feasible
        && oracle_agrees
        && oracle_feasible == GOLDEN_FEASIBLE
        && golden;
    report(
        9,
        "workspace determinism and plausibility",
        ok,
        format!(
            "{} samples in {elapsed:?}; byte-identical across runs and 1/4 threads: {identical}; feasible {} (oracle {oracle_feasible}), regular {}, serial {}, parallel {}, comprehensive {}; starred cell {corners_feasible}/8 corners feasible",
            first.len(),
            summary.feasible,
            summary.regular,
            summary.serial,
            summary.parallel,
            summary.comprehensive
        ),
    );
    assert!(ok);
}

/// Rows 1-3 and 2-3 of Jp proportional on regular configurations. Reported,
/// not asserted.
fn report_third_row_proportionality() {
    let p = params();
    let thresholds = Thresholds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xb);
    let mut sampled = 0;
    let mut hits = 0;
    let mut closest = f64::INFINITY;
    while sampled < 10_000 {
        let pose = Pose {
            x: rng.gen_range(-110.0..90.0),
            y: rng.gen_range(-250.0..250.0),
            z: rng.gen_range(180.0..480.0),
        };
        let Ok(sols) = ik::enumerate(&pose, &p) else {
            continue;
        };
        let candidates: Vec<_> = sols
            .iter()
            .filter(|s| !s.is_parallelogram_assembly(&p))
            .collect();
        let Some(s) = candidates.choose(&mut rng) else {
            continue;
        };
        let Ok(pair) = jacobian::build(&pose, s, &p) else {
            continue;
        };
        if jacobian::classify(&pair, &thresholds).kind != SingularityKind::Regular {
            continue;
        }
        sampled += 1;
        for i in [0, 1] {
            let a = pair.jp.row(i).transpose();
            let b = pair.jp.row(2).transpose();
            let sine = a.cross(&b).norm() / (a.norm() * b.norm());
            closest = closest.min(sine);
            if sine <= 1e-6 {
                hits += 1;
            }
        }
    }
    println!(
        "INFO third-row proportionality: {sampled} regular configurations, {hits} row pairs within 1e-6, smallest normalized cross product {closest:.3e}"
    );
}

fn main() {
    let criteria: [(&str, fn()); 10] = [
        ("criterion 1", criterion_1_direct_reproduction),
        ("criterion 2", criterion_2_inverse_reproduction),
        ("criterion 3", criterion_3_round_trip),
        ("criterion 4", criterion_4_jacobian_correctness),
        ("criterion 5", criterion_5_singularity_structure),
        ("criterion 6", criterion_6_topology_fixture),
        ("criterion 7", criterion_7_partial_decoupling),
        ("criterion 8", criterion_8_spurious_branch),
        ("criterion 9", criterion_9_workspace_determinism),
        ("third-row report", report_third_row_proportionality),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        if std::panic::catch_unwind(f).is_err() {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed {failed:?}");
        std::process::exit(1);
    }
}
