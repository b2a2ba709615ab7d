use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swstream"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_lines(o: &Output) -> Vec<String> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[test]
fn gain_region_single_row() {
    let o = run(&["gain-region", "--source", "zchannel:delta=0.6"]);
    assert_eq!(o.status.code(), Some(0));
    let lines = csv_lines(&o);
    assert_eq!(lines[0], "param,g1,g2");
    assert_eq!(lines.len(), 2);
    let f: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(f[0], 0.6);
    assert!((f[1] - 0.0589).abs() < 1e-3 && (f[2] - 0.0556).abs() < 1e-3);
}

#[test]
fn schedule_matches_backtracking_example() {
    let o = run(&[
        "schedule", "--psi", "8", "--omega", "3", "--delay", "2", "--k", "16",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let lines = csv_lines(&o);
    assert_eq!(lines[0], "stage,block_lo,block_hi,cw_lo,cw_hi,bin_family");
    assert_eq!(lines[1], "1,7,9,9,14,B1");
    assert_eq!(lines.last().unwrap(), "8,16,16,16,17,B4");
    let text = stdout(&o);
    assert!(text.contains("blocks [7:12]     codewords [9:14]"));
    assert!(text.contains("blocks [13:15]    codewords [13:17]"));
}

#[test]
fn invalid_schedule_exits_2() {
    let o = run(&[
        "schedule", "--psi", "5", "--omega", "3", "--delay", "2", "--k", "4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn unknown_subcommand_exits_2() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["analyze", "--source", "nope:p=1"]).status.code(),
        Some(2)
    );
}

#[test]
fn cap_refusal_exits_3() {
    let o = run(&[
        "simulate",
        "--source",
        "dsbs:p=0.1",
        "--n",
        "12",
        "--psi",
        "5",
        "--omega",
        "2",
        "--delay",
        "2",
        "--blocks",
        "3",
        "--trials",
        "2",
        "--n1",
        "2",
        "--n2",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stderr).unwrap().contains("INIT"));
}

#[test]
fn simulate_is_deterministic() {
    let args = [
        "simulate",
        "--source",
        "dsbs:p=0.1",
        "--n",
        "2",
        "--psi",
        "5",
        "--omega",
        "2",
        "--delay",
        "2",
        "--blocks",
        "4",
        "--trials",
        "60",
        "--seed",
        "5",
        "--n1",
        "4",
        "--n2",
        "4",
    ];
    let a = csv_lines(&run(&args));
    let mut with_jobs = args.to_vec();
    with_jobs.extend(["--jobs", "2"]);
    let b = csv_lines(&run(&with_jobs));
    assert_eq!(a, b);
    assert_eq!(a[0], "k,errors,trials,eps_hat,ci_lo,ci_hi");
    assert_eq!(a.len(), 5);
}

#[test]
fn analyze_in_bits() {
    let o = run(&["analyze", "--source", "dsbs:p=0.5", "--bits"]);
    let lines = csv_lines(&o);
    assert_eq!(lines[0], "measure,value");
    assert!(lines.contains(&"H_joint,2".to_string()));
}

#[test]
fn config_recipe_with_override() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig2.cfg");
    let o = run(&["--config", cfg]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(csv_lines(&o).len(), 20);
    let o = run(&["--config", cfg, "--grid", "0.6:0.6:0.1"]);
    let lines = csv_lines(&o);
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0.6,"));
    let cfg3 = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig3.cfg");
    assert_eq!(run(&["--config", cfg3]).status.code(), Some(0));
}

#[test]
fn bound_and_md_constant() {
    let o = run(&[
        "bound",
        "--source",
        "dsbs:p=0.11",
        "--n",
        "20",
        "--psi",
        "8",
        "--omega",
        "3",
        "--delay",
        "3",
        "--rx",
        "0.6",
        "--ry",
        "0.8",
        "--k",
        "20",
    ]);
    let lines = csv_lines(&o);
    assert_eq!(lines[0], "family,log_bound,span,exponent");
    let fams: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(fams, ["1", "2", "3", "5", "6", "total"]);
    let o = run(&[
        "md-constant",
        "--source",
        "dsbs:p=0.11",
        "--case",
        "ii",
        "--theta1",
        "1",
        "--theta2",
        "0",
        "--delay",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let lines = csv_lines(&o);
    let f: Vec<&str> = lines[1].split(',').collect();
    let ns: f64 = f[6].parse().unwrap();
    let s: f64 = f[7].parse().unwrap();
    assert!((s - 3.0 * ns).abs() < 1e-12);
    let o = run(&[
        "md-constant",
        "--source",
        "dsbs:p=0.11",
        "--case",
        "ii",
        "--theta1",
        "1",
        "--theta2",
        "-2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
