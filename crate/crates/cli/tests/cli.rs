use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn navstream(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_navstream"))
        .args(args)
        .output()
        .expect("spawn navstream")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .map(str::trim)
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn solve_picks_five_dancer_views() {
    let o = navstream(&[
        "solve", "--set", "L1", "--video", "dancer", "--window", "1.5:9.5", "--budget", "10000",
        "--algo", "optimal",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(field(&text, "views").split_whitespace().count(), 5);
    assert!(text.contains("set,video,window,budget_kbps,algo,views"));

    let two = navstream(&[
        "solve", "--set", "L1", "--video", "dancer", "--window", "1.5:9.5", "--budget", "10000",
        "--algo", "2views",
    ]);
    assert_eq!(two.status.code(), Some(0));
    let two = stdout(&two);
    assert_eq!(field(&two, "views").split_whitespace().count(), 2);
    let d = |t: &str| field(t, "distortion").parse::<f64>().unwrap();
    assert!(d(&two) > d(&text));
}

#[test]
fn exit_codes() {
    let infeasible = navstream(&["solve", "--video", "dancer", "--window", "1.5:9.5", "--budget", "50"]);
    assert_eq!(infeasible.status.code(), Some(3));
    let bad_window = navstream(&["solve", "--video", "dancer", "--window", "9.5", "--budget", "50"]);
    assert_eq!(bad_window.status.code(), Some(2));
    let bad_video = navstream(&["solve", "--video", "ballet", "--window", "1:2", "--budget", "5000"]);
    assert_eq!(bad_video.status.code(), Some(2));
    let bad_algo = navstream(&[
        "solve", "--video", "hall", "--window", "1:2", "--budget", "5000", "--algo", "best",
    ]);
    assert_eq!(bad_algo.status.code(), Some(2));
    assert_eq!(navstream(&["oracle", "check", "--count", "0"]).status.code(), Some(2));
}

#[test]
fn solve_writes_csv_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let o = navstream(&[
        "--out",
        dir.path().to_str().unwrap(),
        "solve",
        "--video",
        "hall",
        "--window",
        "5.5:6.5",
        "--budget",
        "3000",
        "--algo",
        "greedy",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("L1,hall,5.5:6.5,3000,greedy,"));
}

#[test]
fn oracle_check_small_corpus() {
    let o = navstream(&["--seed", "5", "oracle", "check", "--count", "30"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().any(|l| l == "ok"));
    let u = navstream(&["--seed", "5", "oracle", "check", "--count", "30", "--unconstrained"]);
    assert_eq!(u.status.code(), Some(0));
}

#[test]
fn oracle_enumerate_lists_every_selection() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("tiny.toml");
    fs::write(
        &set,
        "name = \"tiny\"\n[grid]\nnum_cameras = 3\ndelta = 0.5\n[uniform]\nviews = [1, 2, 3]\nrates_kbps = [500, 2000]\n\
         [profiles.hall]\nxi = 1.32\ninpaint_distortion = 0.35\nindependent = { a = 0.98, b = 129.89, e = 544.39 }\n",
    )
    .unwrap();
    let o = navstream(&[
        "oracle",
        "enumerate",
        "--set",
        set.to_str().unwrap(),
        "--video",
        "hall",
        "--window",
        "1:3",
        "--budget",
        "3000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 27);
    assert!(text.contains(",empty,"));
    assert!(text.contains(",over_budget,"));
    assert!(text.contains(",filtered,"));
}

#[test]
fn session_to_stdout() {
    let o = navstream(&[
        "--seed", "3", "session", "--video", "shark", "--channel", "markov:0.5", "--navigation",
        "nonuniform:0.3", "--start-view", "2.4", "--segments", "8",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,algo,views,rates_kbps,total_rate,pred_kbps,real_kbps,dl_time_s,buffer_s,distortion,sentinel"
    );
    assert_eq!(lines.count(), 8);
    let again = navstream(&[
        "--seed", "3", "session", "--video", "shark", "--channel", "markov:0.5", "--navigation",
        "nonuniform:0.3", "--start-view", "2.4", "--segments", "8",
    ]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn session_rejects_bad_channel() {
    let o = navstream(&["session", "--video", "shark", "--channel", "wifi"]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_spec(dir: &Path, body: &str) -> String {
    let p = dir.join("spec.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn sweep_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "kind = \"session\"\nseed = 4\nsets = [\"L1\"]\nvideos = [\"hall\"]\nalgos = [\"optimal\", \"2views\"]\n\
         [session]\nnum_segments = 6\nchannels = [\"markov:0.5\", \"markov:0.9\"]\nnav_runs = 2\nchannel_runs = 2\nwrite_runs = true\n\
         [[session.navigation]]\nkind = \"uniform\"\nstart_view = 2.4\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = navstream(&["--out", out.to_str().unwrap(), "--workers", workers, "sweep", &spec]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["session_summary.csv", "session_timeline.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    }
    let runs: Vec<_> = fs::read_dir(a.join("runs")).unwrap().collect();
    assert_eq!(runs.len(), 4);
    let summary = fs::read_to_string(a.join("session_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4);
}

#[test]
fn sweep_budget_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "kind = \"budget\"\nsets = [\"L1\"]\nvideos = [\"dancer\"]\nalgos = [\"optimal\"]\nwindows = [\"1.5:9.5\"]\n\
         budgets_kbps = [2000, 4000, 6000, 8000, 10000, 12000]\n",
    );
    let out = dir.path().join("o");
    let o = navstream(&["--out", out.to_str().unwrap(), "sweep", &spec]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("budget_sweep.csv")).unwrap();
    let d: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(8).unwrap().parse().unwrap())
        .collect();
    assert_eq!(d.len(), 6);
    assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{d:?}");
}

#[test]
fn sweep_reports_failed_cells() {
    // an off-grid start view fails its own cells only
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "kind = \"session\"\nsets = [\"L1\"]\nvideos = [\"hall\"]\nalgos = [\"optimal\"]\n\
         [session]\nnum_segments = 3\nchannels = [\"markov:0.5\"]\n\
         [[session.navigation]]\nkind = \"uniform\"\nstart_view = 2.4\n\
         [[session.navigation]]\nkind = \"uniform\"\nstart_view = 2.45\n",
    );
    let out = dir.path().join("o");
    let o = navstream(&["--out", out.to_str().unwrap(), "sweep", &spec]);
    assert_eq!(o.status.code(), Some(4));
    let summary = fs::read_to_string(out.join("session_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);

    let missing = write_spec(
        dir.path(),
        "kind = \"session\"\nsets = [\"L1\"]\nvideos = [\"hall\"]\nalgos = [\"optimal\"]\n\
         [session]\nchannels = [\"trace:nope.csv\"]\n\
         [[session.navigation]]\nkind = \"uniform\"\nstart_view = 2.4\n",
    );
    let o = navstream(&["--out", out.to_str().unwrap(), "sweep", &missing]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn sweep_rejects_unknown_preset_and_set() {
    assert_eq!(navstream(&["sweep", "--preset", "nope"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "kind = \"budget\"\nsets = [\"L7\"]\nvideos = [\"dancer\"]\nalgos = [\"optimal\"]\nwindows = [\"1:2\"]\nbudgets_kbps = [1000]\n",
    );
    let o = navstream(&["--out", dir.path().join("o").to_str().unwrap(), "sweep", &spec]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trace_convert_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("neubot.csv");
    fs::write(
        &input,
        "timestamp,download_speed,upload_speed\n1000,500000,1\n1010,-1,1\n1004,250000,1\n1004,999999,1\n",
    )
    .unwrap();
    let output = dir.path().join("trace.csv");
    let o = navstream(&[
        "trace-convert",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&output).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "t_seconds,throughput_kbps");
    // negative speed dropped, first of the duplicate timestamps kept
    assert_eq!(rows[1..], ["0,4000", "4,2000"]);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "when,what\n1,2\n").unwrap();
    assert_eq!(navstream(&["trace-convert", bad.to_str().unwrap()]).status.code(), Some(2));
}
