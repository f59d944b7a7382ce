//! Acceptance criteria, one line each. Runs without the test harness so the
//! lines are always printed; exits non-zero if any criterion fails.

mod support;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use stabilab::parallel;
use stabilab::report::{stats_json, Report};
use stabilab_core::analysis::{
    analyze, check_closure_direct, check_symmetry_closure, find_synchronous_lasso, lasso_from_schedule, verify_lasso,
    Limits, StateSpace,
};
use stabilab_core::montecarlo::{Experiment, InitMode, TrialStats};
use stabilab_core::protocols::leader::is_lc;
use stabilab_core::protocols::token::{configuration_with_holders, token_holders};
use stabilab_core::system::{enabled, is_terminal};
use stabilab_core::transformer::{lift, project};
use stabilab_core::{
    FairnessKind, FlagState, LeaderElection, Protocol, SchedulerClass, SchedulerPolicy, ScriptMode, Specification,
    TokenCirculation, Topology, Transformed, TwoFlag,
};
use support::{solve, Daemon, Model};

struct Line {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

const TREES: [(&str, &[(usize, usize)]); 4] = [
    ("2-node", &[(0, 1)]),
    ("4-chain", &[(0, 1), (1, 2), (2, 3)]),
    ("5-star", &[(0, 1), (0, 2), (0, 3), (0, 4)]),
    ("7-node", &[(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (4, 6)]),
];

fn c1() -> Line {
    let (result, elapsed) = timed(|| {
        let mut failures = Vec::new();
        let mut largest = 0;
        for n in 3..=7 {
            let topo = Topology::ring(n).unwrap();
            let proto = TokenCirculation::new(&topo).unwrap();
            let r = analyze(&proto, &topo, SchedulerClass::Distributed, Limits::default()).unwrap();
            largest = largest.max(r.configurations);
            if !(r.convergence.holds && r.closure.holds) {
                failures.push(n);
            }
        }
        (failures, largest)
    });
    let (failures, largest) = result;
    Line {
        id: "C1",
        title: "token weak-stabilization, rings 3..7",
        pass: failures.is_empty() && elapsed < Duration::from_secs(10),
        detail: format!("failing rings {failures:?}, largest space {largest}, {:.2} s (limit 10 s)", elapsed.as_secs_f64()),
    }
}

fn c2() -> Line {
    let mut violations = 0;
    let mut checked = 0;
    for n in 3..=7 {
        let topo = Topology::ring(n).unwrap();
        let proto = TokenCirculation::new(&topo).unwrap();
        for cfg in StateSpace::new(&proto, &topo).unwrap().iter() {
            checked += 1;
            if token_holders(&proto, &topo, &cfg).is_empty() {
                violations += 1;
            }
        }
    }
    Line {
        id: "C2",
        title: "token count lower bound",
        pass: violations == 0,
        detail: format!("{violations} zero-token configurations among {checked}"),
    }
}

fn c3() -> Line {
    let (result, elapsed) = timed(|| {
        let mut violations = 0;
        let mut checked = 0;
        for (_, edges) in TREES {
            let topo = Topology::tree(edges).unwrap();
            for cfg in StateSpace::new(&LeaderElection, &topo).unwrap().iter() {
                checked += 1;
                if is_terminal(&LeaderElection, &topo, &cfg) != is_lc(&topo, &cfg) {
                    violations += 1;
                }
            }
        }
        (violations, checked)
    });
    let (violations, checked) = result;
    Line {
        id: "C3",
        title: "leader terminal iff LC",
        pass: violations == 0 && elapsed < Duration::from_secs(5),
        detail: format!("{violations} violations among {checked}, {:.2} s (limit 5 s)", elapsed.as_secs_f64()),
    }
}

fn c4() -> Line {
    let mut stuck = 0;
    let mut parts = Vec::new();
    for (name, edges) in TREES {
        let topo = Topology::tree(edges).unwrap();
        let r = analyze(&LeaderElection, &topo, SchedulerClass::Distributed, Limits::default()).unwrap();
        stuck += r.convergence.stuck_total;
        parts.push(format!("{name}: {}", r.configurations));
    }
    Line {
        id: "C4",
        title: "leader weak-stabilization",
        pass: stuck == 0,
        detail: format!("{stuck} stuck configurations ({})", parts.join(", ")),
    }
}

fn c5() -> Line {
    let pair = Topology::tree(&[(0, 1)]).unwrap();
    let sync = find_synchronous_lasso(&LeaderElection, &pair, |c| is_lc(&pair, c)).unwrap();
    let a = sync.as_ref().is_some_and(|l| {
        verify_lasso(l, &LeaderElection, &pair, |c| is_lc(&pair, c), FairnessKind::Strong).is_ok_and(|v| v.is_witness())
    });

    let ring = Topology::ring(6).unwrap();
    let token = TokenCirculation::new(&ring).unwrap();
    let init = configuration_with_holders(&token, &ring, &[0, 3]).unwrap().unwrap();
    let policy = SchedulerPolicy::scripted(vec![vec![0], vec![3]], ScriptMode::Rotating { ring_size: 6 }).unwrap();
    let lasso = lasso_from_schedule(&token, &ring, &init, &policy, 10_000).unwrap();
    let legit = |c: &[_]| token.is_legitimate(&ring, c);
    let (strong, gouda, cycle) = match &lasso {
        Some(l) => (
            verify_lasso(l, &token, &ring, legit, FairnessKind::Strong).unwrap(),
            verify_lasso(l, &token, &ring, legit, FairnessKind::Gouda).unwrap(),
            l.cycle.len(),
        ),
        None => {
            return Line { id: "C5", title: "separation witnesses", pass: false, detail: "no alternating lasso".into() }
        }
    };
    let b = strong.fair && strong.avoids_legitimate && !gouda.fair;
    Line {
        id: "C5",
        title: "separation witnesses",
        pass: a && b,
        detail: format!(
            "(a) 2-node synchronous lasso {}; (b) 6-ring alternation from dt {:?}: cycle {cycle} steps, strong fair {}, avoids LCSET {}, gouda fair {}",
            if a { "verified" } else { "missing" },
            init.iter().map(|s| s.0).collect::<Vec<_>>(),
            strong.fair,
            strong.avoids_legitimate,
            gouda.fair
        ),
    }
}

fn c6() -> Line {
    let topo = Topology::mirrored_chain(4).unwrap();
    let v = check_symmetry_closure(&LeaderElection, &topo, &[3, 2, 1, 0], |c| is_lc(&topo, c)).unwrap();
    Line {
        id: "C6",
        title: "symmetric class on the 4-chain",
        pass: v.closed && v.legitimate_in_class == 0,
        detail: format!("closed {}, class size {}, LC configurations in class {}", v.closed, v.class_size, v.legitimate_in_class),
    }
}

fn guard_mismatches<P: Protocol + Clone>(proto: &P, topo: &Topology) -> (usize, usize) {
    let t = Transformed::new(proto.clone()).unwrap();
    let mut bad = 0;
    let mut checked = 0;
    for cfg in StateSpace::new(&t, topo).unwrap().iter() {
        checked += 1;
        let base = project(&cfg);
        if (0..topo.node_count()).any(|p| enabled(&t, topo, &cfg, p) != enabled(proto, topo, &base, p)) {
            bad += 1;
        }
    }
    (bad, checked)
}

fn c7() -> Line {
    let ring = Topology::ring(5).unwrap();
    let token = TokenCirculation::new(&ring).unwrap();
    let pair = TwoFlag::topology();
    let (bad_token, n_token) = guard_mismatches(&token, &ring);
    let (bad_flag, n_flag) = guard_mismatches(&TwoFlag, &pair);

    let tt = Transformed::new(token).unwrap();
    let ct = check_closure_direct(&tt, &ring, SchedulerClass::Distributed, |c| tt.is_legitimate(&ring, c), |a, b| {
        tt.observable(&ring, a, b)
    })
    .unwrap();
    let tf = Transformed::new(TwoFlag).unwrap();
    let cf = check_closure_direct(&tf, &pair, SchedulerClass::Distributed, |c| tf.is_legitimate(&pair, c), |a, b| {
        tf.observable(&pair, a, b)
    })
    .unwrap();
    Line {
        id: "C7",
        title: "transformer guard and closure preservation",
        pass: bad_token == 0 && bad_flag == 0 && ct.holds && cf.holds,
        detail: format!(
            "guard mismatches token-5 {bad_token}/{n_token}, two-flag {bad_flag}/{n_flag}; closure token-5 {} ({} edges), two-flag {} ({} edges)",
            ct.holds, ct.edges_checked, cf.holds, cf.edges_checked
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn estimate<P>(
    proto: &P,
    topo: &Topology,
    policy: SchedulerPolicy,
    init: InitMode<P::State>,
    trials: u64,
    cap: u64,
    seed: u64,
    threads: usize,
) -> TrialStats
where
    P: Specification + Sync,
    P::State: Send + Sync,
{
    let exp = Experiment { protocol: proto, topo, policy: &policy, legit: |c: &[P::State]| proto.is_legitimate(topo, c), step_cap: cap };
    parallel::estimate(&exp, &init, trials, seed, threads).unwrap().1
}

const C8_SEED: u64 = 42;
const C9_SEED: u64 = 7;

/// C8 runs; returns the line and the report section.
fn c8(threads: usize) -> (Line, Value) {
    let (result, elapsed) = timed(|| {
        let pair = TwoFlag::topology();
        let tf = Transformed::new(TwoFlag).unwrap();
        let init = lift(&[FlagState(false); 2], false);
        let flag = estimate(&tf, &pair, SchedulerPolicy::Synchronous, InitMode::Fixed(init), 10_000, 100_000, C8_SEED, threads);
        let ring = Topology::ring(6).unwrap();
        let tt = Transformed::new(TokenCirculation::new(&ring).unwrap()).unwrap();
        let token = estimate(&tt, &ring, SchedulerPolicy::RandomizedDistributed, InitMode::UniformRandom, 1_000, 100_000, C8_SEED, threads);
        (flag, token)
    });
    let (flag, token) = result;
    let exact = solve(&Model::TwoFlag, Daemon::Synchronous, true).at(&[0, 0]).unwrap();
    let mean = flag.hitting.map(|h| h.mean).unwrap_or(f64::NAN);
    let pass = flag.convergence_rate == 1.0
        && (mean - 8.0).abs() <= 0.5
        && token.convergence_rate == 1.0
        && elapsed < Duration::from_secs(60);
    let line = Line {
        id: "C8",
        title: "transformed convergence",
        pass,
        detail: format!(
            "two-flag sync: rate {}, mean {mean:.4} (exact {exact:.4}, band 8.0 ± 0.5); token-6 randomized-distributed: rate {} over {} trials; {:.2} s (limit 60 s)",
            flag.convergence_rate,
            token.convergence_rate,
            token.trials,
            elapsed.as_secs_f64()
        ),
    };
    let section = json!({ "two_flag_synchronous": stats_json(&flag), "token6_randomized_distributed": stats_json(&token) });
    (line, section)
}

struct Case {
    label: String,
    configurations: usize,
    exact: Option<f64>,
    stats: TrialStats,
}

fn policy_of(d: Daemon) -> SchedulerPolicy {
    match d {
        Daemon::Synchronous => SchedulerPolicy::Synchronous,
        Daemon::RandomCentral => SchedulerPolicy::RandomizedCentral,
        Daemon::RandomDistributed => SchedulerPolicy::RandomizedDistributed,
    }
}

fn run_case<P>(label: &str, proto: &P, topo: &Topology, model: &Model, coins: bool, daemon: Daemon, threads: usize) -> Option<Case>
where
    P: Specification + Sync,
    P::State: Send + Sync,
{
    let configurations = StateSpace::new(proto, topo).unwrap().len();
    if configurations > 64 {
        return None;
    }
    let exact = solve(model, daemon, coins).uniform_mean();
    // infinite expectations: a short cap is enough to see non-convergence
    let (trials, cap) = if exact.is_some() { (10_000, 100_000) } else { (1_000, 1_000) };
    let stats = estimate(proto, topo, policy_of(daemon), InitMode::UniformRandom, trials, cap, C9_SEED, threads);
    Some(Case { label: format!("{label} {daemon:?}"), configurations, exact, stats })
}

fn c9_cases(threads: usize) -> Vec<Case> {
    let daemons = [Daemon::Synchronous, Daemon::RandomCentral, Daemon::RandomDistributed];
    let mut cases = Vec::new();
    for coins in [false, true] {
        let tag = if coins { "transformed " } else { "" };
        for d in daemons {
            let pair = TwoFlag::topology();
            let model = Model::TwoFlag;
            let c = if coins {
                run_case(&format!("{tag}two-flag"), &Transformed::new(TwoFlag).unwrap(), &pair, &model, true, d, threads)
            } else {
                run_case("two-flag", &TwoFlag, &pair, &model, false, d, threads)
            };
            cases.extend(c);
            for n in [3, 4, 5] {
                let ring = Topology::ring(n).unwrap();
                let token = TokenCirculation::new(&ring).unwrap();
                let model = Model::token(n);
                let label = format!("{tag}token-{n}");
                let c = if coins {
                    run_case(&label, &Transformed::new(token).unwrap(), &ring, &model, true, d, threads)
                } else {
                    run_case(&label, &token, &ring, &model, false, d, threads)
                };
                cases.extend(c);
            }
            for (name, edges) in [
                ("2-node", &[(0, 1)][..]),
                ("3-chain", &[(0, 1), (1, 2)][..]),
                ("4-chain", &[(0, 1), (1, 2), (2, 3)][..]),
                ("4-star", &[(0, 1), (0, 2), (0, 3)][..]),
            ] {
                let topo = Topology::tree(edges).unwrap();
                let model = Model::leader(edges);
                let label = format!("{tag}leader {name}");
                let c = if coins {
                    run_case(&label, &Transformed::new(LeaderElection).unwrap(), &topo, &model, true, d, threads)
                } else {
                    run_case(&label, &LeaderElection, &topo, &model, false, d, threads)
                };
                cases.extend(c);
            }
        }
    }
    cases
}

fn c9(threads: usize) -> (Line, Value) {
    let cases = c9_cases(threads);
    let mut compared = 0;
    let mut failures = Vec::new();
    let mut infinite = Vec::new();
    let mut worst: f64 = 0.0;
    let mut section = serde_json::Map::new();
    for case in &cases {
        let mut entry = json!({ "configurations": case.configurations, "exact_mean": case.exact, "stats": stats_json(&case.stats) });
        match (case.exact, case.stats.hitting) {
            (Some(exact), Some(h)) if case.stats.convergence_rate == 1.0 => {
                compared += 1;
                let z = if h.std_error > 0.0 { (h.mean - exact).abs() / h.std_error } else if (h.mean - exact).abs() < 1e-9 { 0.0 } else { f64::INFINITY };
                worst = worst.max(z);
                entry["z"] = json!(z);
                if z > 3.0 {
                    failures.push(format!("{} (mean {:.4}, exact {exact:.4}, z {z:.2})", case.label, h.mean));
                }
            }
            (Some(_), _) => failures.push(format!("{} did not converge in every trial", case.label)),
            (None, _) => {
                // infinite expectation: some trials must fail to converge
                if case.stats.not_converged == 0 {
                    failures.push(format!("{} converged everywhere despite an infinite expectation", case.label));
                }
                infinite.push(case.label.clone());
            }
        }
        section.insert(case.label.clone(), entry);
    }
    let line = Line {
        id: "C9",
        title: "exact-chain cross-check",
        pass: failures.is_empty() && compared > 0,
        detail: format!(
            "{compared} instances within 3 SE (worst {worst:.2} SE), {} with infinite expectation excluded from the mean comparison [{}]{}",
            infinite.len(),
            infinite.join("; "),
            if failures.is_empty() { String::new() } else { format!("; FAILURES: {}", failures.join("; ")) }
        ),
    };
    (line, Value::Object(section))
}

fn report_text(c8: Value, c9: Value) -> String {
    Report {
        spec: json!({ "c8_seed": C8_SEED, "c9_seed": C9_SEED }),
        verdicts: Value::Null,
        witnesses: Value::Null,
        stats: json!({ "c8": c8, "c9": c9 }),
    }
    .to_json()
}

fn cli_report(dir: &std::path::Path, name: &str) -> Vec<u8> {
    let path = dir.join(name);
    let args = [
        "stabilab", "estimate", "--protocol", "two-flag", "--transform", "--scheduler", "synchronous", "--trials", "10000",
        "--seed", "42", "--init", "B=[false,false]", "--out", path.to_str().unwrap(),
    ];
    let code = stabilab::cli::main_with(args, &mut std::io::sink());
    assert_eq!(code, 0);
    std::fs::read(path).unwrap()
}

fn main() -> ExitCode {
    let mut lines = vec![c1(), c2(), c3(), c4(), c5(), c6(), c7()];
    let threads = parallel::thread_count().max(4);
    let (l8, s8) = c8(threads);
    let (l9, s9) = c9(threads);
    let first = report_text(s8, s9);
    lines.push(l8);
    lines.push(l9);

    let (_, s8b) = c8(1);
    let (_, s9b) = c9(1);
    let second = report_text(s8b, s9b);
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (cli_report(dir.path(), "a.json"), cli_report(dir.path(), "b.json"));
    lines.push(Line {
        id: "C10",
        title: "reproducibility",
        pass: first == second && a == b,
        detail: format!(
            "C8+C9 report {} bytes identical across reruns ({} vs 1 threads): {}; CLI estimate reports identical: {}",
            first.len(),
            threads,
            first == second,
            a == b
        ),
    });

    let mut failed = 0;
    for l in &lines {
        println!("{} {:<4} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.title, l.detail);
        if !l.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
