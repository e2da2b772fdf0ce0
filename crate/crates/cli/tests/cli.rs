use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn softgym(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softgym"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = softgym(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const ROPE_CACHE: [&str; 6] = [
    "gen-cache",
    "straighten_rope",
    "--particle-scale",
    "desk",
    "--variations",
    "800..802",
];

#[test]
fn gen_cache_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &ROPE_CACHE);
    let path = dir.path().join("caches/straighten_rope-desk-seed0.sgv");
    let first = fs::read(&path).unwrap();
    ok(dir.path(), &ROPE_CACHE);
    assert_eq!(fs::read(&path).unwrap(), first);
    assert_eq!(&first[..4], b"SGV1");

    let text = ok(dir.path(), &["inspect-cache", path.to_str().unwrap()]);
    assert!(text.contains("task straighten_rope"));
    assert!(text.contains("variations 2"));
}

#[test]
fn rollout_reports_and_frames_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &ROPE_CACHE);
    let run = |name: &str| {
        let args = [
            "rollout",
            "straighten_rope",
            "--particle-scale",
            "desk",
            "--policy",
            "random",
            "--variations",
            "800..802",
            "--seed",
            "1",
            "--render",
            name,
        ];
        (ok(dir.path(), &args), dir.path().join(name))
    };
    let (a, frames_a) = run("fa");
    let (b, frames_b) = run("fb");
    assert_eq!(a.replace("# render: fa", ""), b.replace("# render: fb", ""));
    assert!(a.contains("# policy: random\n"));
    assert!(a.contains("# seed: 1\n"));
    assert!(a.contains("episode 801 seed 1\n"));
    assert!(a.contains("episodes 2\n"));
    for index in ["800", "801"] {
        let names: Vec<_> = fs::read_dir(frames_a.join(index)).unwrap().collect();
        assert_eq!(names.len(), 76);
        for step in [0, 40, 75] {
            let name = format!("{index}/frame_{step:05}.ppm");
            assert_eq!(
                fs::read(frames_a.join(&name)).unwrap(),
                fs::read(frames_b.join(&name)).unwrap()
            );
        }
    }
}

#[test]
fn cem_flags_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &ROPE_CACHE);
    let out = dir.path().join("report.txt");
    ok(
        dir.path(),
        &[
            "cem",
            "straighten_rope",
            "--particle-scale",
            "desk",
            "--variations",
            "801",
            "--horizon",
            "2",
            "--budget",
            "40",
            "--iters",
            "2",
            "--elite",
            "0.2",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    let text = fs::read_to_string(&out).unwrap();
    for line in [
        "# command: cem",
        "# policy: cem",
        "# horizon: 2",
        "# budget: 40",
        "# iters: 2",
        "# elite: 0.2",
        "# variations: 801..802",
        "episodes 1",
    ] {
        assert!(text.contains(line), "missing `{line}` in\n{text}");
    }
}

#[test]
fn cem_rejects_budget_without_two_elites() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &ROPE_CACHE);
    let out = softgym(
        dir.path(),
        &[
            "cem",
            "straighten_rope",
            "--particle-scale",
            "desk",
            "--variations",
            "801",
            "--budget",
            "100",
        ],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("planner configuration"));
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["rollout", "bogus_task"][..],
        &["rollout", "pour_water", "--frobnicate"],
        &["rollout", "pour_water", "--variations", "5..2"],
        &["rollout", "pour_water", "--variations", "999..1001"],
        &["evaluate", "pour_water", "--policy", "greedy"],
    ] {
        let out = softgym(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    }
}

#[test]
fn missing_cache_points_to_gen_cache() {
    let dir = tempfile::tempdir().unwrap();
    let out = softgym(dir.path(), &["evaluate", "pour_water"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("softgym gen-cache"));
}

#[test]
fn evaluate_summarizes_final_performance() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &ROPE_CACHE);
    let text = ok(
        dir.path(),
        &[
            "evaluate",
            "straighten_rope",
            "--particle-scale",
            "desk",
            "--variations",
            "800..802",
        ],
    );
    assert!(text.starts_with("# command: evaluate\n"));
    assert!(text.contains("index seed performance normalized\n"));
    assert!(text.contains("\nmedian "));
    assert!(!text.contains("episode 800"));
}
