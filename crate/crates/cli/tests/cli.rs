use std::process::Command;

fn tetraqg(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tetraqg")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn threed_element_prints_scalar() {
    let (code, out) = tetraqg(&["compute", "--kind", "threed-element", "--index", "0,1,0,1,0,1", "--qroot", "1/2"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "15/16");
}

#[test]
fn passing_suite_exits_zero_and_writes_json() {
    let path = std::env::temp_dir().join(format!("tetraqg-cli-{}.json", std::process::id()));
    let p = path.to_str().unwrap();
    let (code, _) = tetraqg(&["verify", "--suite", "examples", "--name", "A10", "--z", "3/5", "--json", p]);
    assert_eq!(code, 0);
    let json = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(json.contains("\"status\": \"pass\""));
    assert!(json.contains("\"residual\": \"0\""));
}

#[test]
fn boundary_suite_meets_tolerance() {
    let (code, out) = tetraqg(&["verify", "--suite", "boundary", "--s", "1", "--cutoff", "40", "--precision", "256"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn failing_suite_exits_one() {
    let (code, out) = tetraqg(&["verify", "--suite", "spectral", "--eps", "00"]);
    assert_eq!(code, 1);
    assert!(out.contains("FAIL  raising relation, printed A and B 00"));
}

#[test]
fn bad_config_exits_two() {
    assert_eq!(tetraqg(&["verify", "--suite", "nonsense"]).0, 2);
    assert_eq!(tetraqg(&["verify", "--suite", "examples", "--qroot", "abc"]).0, 2);
    assert_eq!(tetraqg(&["compute", "--kind", "rmatrix-trace"]).0, 2);
}

#[test]
fn solver_dump_for_family_b() {
    let (code, out) = tetraqg(&["compute", "--kind", "rmatrix-solver", "--family", "B", "--eps", "10", "--truncation", "3"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("# "));
    assert!(out.lines().any(|l| l.contains("<-")));
}
