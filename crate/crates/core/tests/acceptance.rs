use tetraqg::suites::{cmd_verify, CaseReport, Report, Status, SuiteConfig};

fn run(suite: &str, edit: impl FnOnce(&mut SuiteConfig)) -> Report {
    let mut cfg = SuiteConfig::new(suite);
    edit(&mut cfg);
    cmd_verify(&cfg).unwrap_or_else(|e| panic!("suite {suite}: {e}"))
}

fn all_pass<'a>(cases: impl IntoIterator<Item = &'a CaseReport>) -> (bool, String) {
    let mut n = 0;
    let mut bad = Vec::new();
    for c in cases {
        n += 1;
        if c.status == Status::Fail {
            bad.push(format!("{} residual {}", c.name, c.residual));
        }
    }
    if n == 0 {
        return (false, "no cases".into());
    }
    if bad.is_empty() {
        (true, format!("{n} cases"))
    } else {
        (false, format!("{} of {n} failed: {}", bad.len(), bad.join("; ")))
    }
}

fn main() {
    let mut results: Vec<(u32, &str, bool, String)> = Vec::new();
    let mut record = |id, label, (ok, detail): (bool, String)| results.push((id, label, ok, detail));

    let tetra = run("tetrahedron", |_| {});
    record(1, "tetrahedron RRRR", all_pass(tetra.cases.iter().filter(|c| c.name.starts_with("RRRR"))));
    record(2, "tetrahedron RLLL", all_pass(tetra.cases.iter().filter(|c| c.name.starts_with("RLLL"))));

    let ids = run("identities", |_| {});
    record(3, "3D R symmetries", all_pass(ids.cases.iter().filter(|c| c.name.starts_with("R "))));
    record(4, "local identity suite", all_pass(ids.cases.iter().filter(|c| !c.name.starts_with("R "))));

    record(5, "boundary eigen-relations", all_pass(&run("boundary", |_| {}).cases));

    let main_a = run("theorem-main", |c| c.family = Some("A".into()));
    let main_b = run("theorem-main", |c| c.family = Some("B".into()));
    record(6, "trace side equals solver", all_pass(&main_a.cases));
    record(7, "boundary side equals solver", all_pass(&main_b.cases));

    record(8, "commutativity with generators", all_pass(&run("intertwine", |_| {}).cases));
    record(9, "Yang-Baxter", all_pass(&run("ybe", |_| {}).cases));
    record(10, "examples regression", all_pass(&run("examples", |_| {}).cases));
    record(11, "spectral suite", all_pass(&run("spectral", |_| {}).cases));
    record(12, "Phi equivalence", all_pass(&run("phi-equivalence", |_| {}).cases));

    let nullities: Vec<&CaseReport> = main_a.cases.iter().chain(&main_b.cases).collect();
    let off: Vec<String> = nullities
        .iter()
        .filter(|c| c.diagnostics.get("interior_nullity") != Some(&1))
        .map(|c| format!("{} interior nullity {:?}", c.name, c.diagnostics.get("interior_nullity")))
        .collect();
    record(13, "solver nullity one", (off.is_empty() && !nullities.is_empty(), if off.is_empty() { format!("{} systems", nullities.len()) } else { off.join("; ") }));

    for (id, label, ok, detail) in &results {
        println!("{} {id:>2} {label}: {detail}", if *ok { "PASS" } else { "FAIL" });
    }
    let passed = results.iter().filter(|r| r.2).count();
    println!("{passed}/{} criteria pass", results.len());
}
