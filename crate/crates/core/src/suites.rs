//! Verification suites and single computations behind the command line, with
//! JSON-serializable reports.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::verify_boundary_eigenrelation;
use crate::error::{Error, Result};
use crate::gqg::{intertwining_residual, merge_ops, solve_intertwiner, verify_defining_relations, Family, Gqg, PairDomain};
use crate::layer::{
    build_sst, build_str, dump_header, gauge_tilde, phi_equivalence, triples_by_totals, triples_truncated, verify_ybe, BoundarySource, GaugeSide,
    SstParams, TraceSource,
};
use crate::scalars::{Backend, Exact, ExactBackend, Float, FloatBackend, QPoint};
use crate::spaces::{enumerate_pair_sector, enumerate_wl, sum_vectors, SectorKey, Signature, SparseBlockOperator, State};
use crate::spectral::{
    index_range, j_recursions_hold, orbit_span, reproduce_example, singular_vector, spectral_check, verify_transition, ExampleName,
    SpectralCase, SpectralSector,
};
use crate::threed::{
    l_element, r_element, r_involution_holds, r_transpose_holds, r_weighted_transpose_holds, sweep_identity, tetrahedron_residual,
    IdentityName, TetraKind,
};

pub const SUITES: [&str; 10] = [
    "tetrahedron",
    "boundary",
    "ybe",
    "intertwine",
    "theorem-main",
    "spectral",
    "identities",
    "relations",
    "phi-equivalence",
    "examples",
];

pub const COMPUTE_KINDS: [&str; 4] = ["rmatrix-trace", "rmatrix-boundary", "rmatrix-solver", "threed-element"];

/// Settings for one suite run or computation. Unset fields fall back to the
/// suite defaults.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteConfig {
    pub suite: String,
    pub name: Option<String>,
    pub family: Option<String>,
    pub eps: Option<String>,
    pub qroot: String,
    pub z: Option<String>,
    pub x: Option<String>,
    pub y: Option<String>,
    pub sector: Option<String>,
    pub truncation: Option<i64>,
    pub precision: usize,
    pub tol: Option<f64>,
    pub cutoff: Option<i64>,
    pub s: Option<u8>,
    pub t: Option<u8>,
    pub index: Option<String>,
    pub seed: u64,
    pub json: Option<String>,
    pub dump: Option<String>,
}

impl SuiteConfig {
    pub fn new(suite: &str) -> Self {
        SuiteConfig {
            suite: suite.into(),
            name: None,
            family: None,
            eps: None,
            qroot: "1/2".into(),
            z: None,
            x: None,
            y: None,
            sector: None,
            truncation: None,
            precision: 256,
            tol: None,
            cutoff: None,
            s: None,
            t: None,
            index: None,
            seed: 0,
            json: None,
            dump: None,
        }
    }

    fn qpt(&self) -> Result<QPoint> {
        QPoint::parse(&self.qroot).map_err(|e| Error::Usage(format!("--qroot: {e}")))
    }

    fn family(&self) -> Result<Option<Family>> {
        self.family.as_deref().map(parse_family).transpose()
    }

    fn sigs(&self, default: &[&str]) -> Result<Vec<Signature>> {
        match &self.eps {
            Some(e) => Ok(vec![parse_sig(e)?]),
            None => default.iter().map(|s| parse_sig(s)).collect(),
        }
    }

    fn rational(field: &Option<String>, flag: &str, default: &str) -> Result<Exact> {
        parse_exact(field.as_deref().unwrap_or(default), flag)
    }

    fn zs(&self, default: &[&str]) -> Result<Vec<Exact>> {
        match &self.z {
            Some(z) => Ok(vec![parse_exact(z, "--z")?]),
            None => default.iter().map(|z| parse_exact(z, "--z")).collect(),
        }
    }

    /// (l, m) sectors from --sector, or all l, m ≤ bound.
    fn sectors(&self, bound: i64) -> Result<Vec<(i64, i64)>> {
        match &self.sector {
            Some(s) => {
                let v = parse_ints(s, "--sector")?;
                match v[..] {
                    [l, m] => Ok(vec![(l, m)]),
                    _ => Err(Error::Usage(format!("--sector expects l,m, got {s}"))),
                }
            }
            None => Ok((0..=bound).flat_map(|l| (0..=bound).map(move |m| (l, m))).collect()),
        }
    }
}

pub fn parse_family(s: &str) -> Result<Family> {
    match s.trim() {
        "A" | "a" => Ok(Family::A),
        "B" | "b" => Ok(Family::B),
        _ => Err(Error::Usage(format!("--family expects A or B, got {s}"))),
    }
}

pub fn parse_sig(s: &str) -> Result<Signature> {
    Signature::parse(s).map_err(|e| Error::Usage(format!("--eps: {e}")))
}

pub fn parse_exact(s: &str, flag: &str) -> Result<Exact> {
    Exact::parse_rational(s).map_err(|e| Error::Usage(format!("{flag}: {e}")))
}

pub fn parse_ints(s: &str, flag: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(|p| p.trim().parse::<i64>().map_err(|_| Error::Usage(format!("{flag}: not an integer list: {s}"))))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub name: String,
    pub status: Status,
    /// "0" for an exact zero, otherwise a decimal
    pub residual: String,
    pub diagnostics: BTreeMap<String, i64>,
    pub message: Option<String>,
    pub time_ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub suite: String,
    pub status: Status,
    pub config: SuiteConfig,
    pub cases: Vec<CaseReport>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn case(&self, name: &str) -> Option<&CaseReport> {
        self.cases.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Result of one case body.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: Status,
    pub residual: String,
    pub diagnostics: BTreeMap<String, i64>,
    pub message: Option<String>,
}

impl Outcome {
    fn exact(zero: bool, residual: f64) -> Self {
        Outcome::new(zero, if zero { "0".into() } else { fmt_f64(residual) })
    }

    fn tol(residual: f64, tol: f64) -> Self {
        Outcome::new(residual < tol, fmt_f64(residual))
    }

    fn new(pass: bool, residual: String) -> Self {
        Outcome {
            status: if pass { Status::Pass } else { Status::Fail },
            residual,
            diagnostics: BTreeMap::new(),
            message: None,
        }
    }

    fn skipped(msg: impl Into<String>) -> Self {
        Outcome { status: Status::Skipped, residual: "-".into(), diagnostics: BTreeMap::new(), message: Some(msg.into()) }
    }

    fn diag(mut self, k: &str, v: impl TryInto<i64>) -> Self {
        self.diagnostics.insert(k.into(), v.try_into().unwrap_or(i64::MAX));
        self
    }

    fn msg(mut self, m: impl Into<String>) -> Self {
        self.message = Some(m.into());
        self
    }
}

fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.3e}")
    }
}

type Body = Box<dyn Fn() -> Result<Outcome> + Send + Sync>;

struct Case {
    name: String,
    body: Body,
}

fn case(name: impl Into<String>, body: impl Fn() -> Result<Outcome> + Send + Sync + 'static) -> Case {
    Case { name: name.into(), body: Box::new(body) }
}

/// Runs cases in parallel; solver and usage errors abort the suite, other errors fail the case.
fn run_cases(cases: Vec<Case>) -> Result<Vec<CaseReport>> {
    cases
        .into_par_iter()
        .map(|c| {
            let t0 = Instant::now();
            let out = match (c.body)() {
                Ok(o) => o,
                Err(e @ (Error::Solver(_) | Error::Usage(_))) => return Err(e),
                Err(e) => Outcome::new(false, "-".into()).msg(e.to_string()),
            };
            Ok(CaseReport {
                name: c.name,
                status: out.status,
                residual: out.residual,
                diagnostics: out.diagnostics,
                message: out.message,
                time_ms: t0.elapsed().as_millis() as u64,
            })
        })
        .collect()
}

/// Runs a verification suite.
pub fn cmd_verify(cfg: &SuiteConfig) -> Result<Report> {
    let cases = match cfg.suite.as_str() {
        "tetrahedron" => tetrahedron_cases(cfg)?,
        "boundary" => boundary_cases(cfg)?,
        "ybe" => ybe_cases(cfg)?,
        "intertwine" => intertwine_cases(cfg)?,
        "theorem-main" => theorem_main_cases(cfg)?,
        "spectral" => spectral_cases(cfg)?,
        "identities" => identity_cases(cfg)?,
        "relations" => relation_cases(cfg)?,
        "phi-equivalence" => phi_cases(cfg)?,
        "examples" => example_cases(cfg)?,
        s => return Err(Error::Usage(format!("unknown suite {s}; expected one of {}", SUITES.join(", ")))),
    };
    let cases = run_cases(cases)?;
    let status = if cases.iter().any(|c| c.status == Status::Fail) { Status::Fail } else { Status::Pass };
    Ok(Report { suite: cfg.suite.clone(), status, config: cfg.clone(), cases })
}

// ---- tetrahedron ----

fn tuples(len: usize, max_entry: &[i64]) -> Vec<State> {
    let mut out = vec![vec![]];
    for k in 0..len {
        out = out.into_iter().flat_map(|v: State| (0..=max_entry[k]).map(move |e| [v.clone(), vec![e]].concat())).collect();
    }
    out
}

fn tetra_outcome(qpt: &QPoint, kind: TetraKind, inputs: Vec<State>) -> Result<Outcome> {
    let res: Vec<f64> = inputs
        .par_iter()
        .map(|i| tetrahedron_residual(qpt, kind, i).map(|r| r.max_abs()))
        .collect::<Result<_>>()?;
    let worst = res.iter().copied().fold(0.0, f64::max);
    Ok(Outcome::exact(worst == 0.0, worst).diag("inputs", inputs.len()))
}

fn tetrahedron_cases(cfg: &SuiteConfig) -> Result<Vec<Case>> {
    let qpt = cfg.qpt()?;
    let kinds = match cfg.name.as_deref().map(str::to_ascii_uppercase).as_deref() {
        None => vec![TetraKind::Rrrr, TetraKind::Rlll],
        Some("RRRR") => vec![TetraKind::Rrrr],
        Some("RLLL") => vec![TetraKind::Rlll],
        Some(k) => return Err(Error::Usage(format!("tetrahedron kind must be RRRR or RLLL, got {k}"))),
    };
    let mut cases = Vec::new();
    for kind in kinds {
        let q = qpt.clone();
        match kind {
            TetraKind::Rrrr => {
                let n = cfg.truncation.unwrap_or(2);
                let q2 = q.clone();
                cases.push(case(format!("RRRR total<={n}"), move || {
                    tetra_outcome(&q2, TetraKind::Rrrr, tuples(6, &[n; 6]).into_iter().filter(|t| t.iter().sum::<i64>() <= n).collect())
                }));
                let seed = cfg.seed;
                cases.push(case(format!("RRRR random 50 total<={}", n + 2), move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut inputs = Vec::new();
                    while inputs.len() < 50 {
                        let t: State = (0..6).map(|_| rng.gen_range(0..=n + 2)).collect();
                        if t.iter().sum::<i64>() <= n + 2 {
                            inputs.push(t);
                        }
                    }
                    tetra_outcome(&q, TetraKind::Rrrr, inputs)
                }));
            }
            TetraKind::Rlll => {
                let n = cfg.truncation.unwrap_or(3);
                cases.push(case(format!("RLLL fock<={n}"), move || tetra_outcome(&q, TetraKind::Rlll, tuples(6, &[1, 1, 1, n, n, n]))));
            }
        }
    }
    Ok(cases)
}

// ---- boundary ----

fn boundary_cases(cfg: &SuiteConfig) -> Result<Vec<Case>> {
    let qpt = cfg.qpt()?;
    let ss = cfg.s.map(|s| vec![s]).unwrap_or(vec![1, 2]);
    let points = if cfg.x.is_some() || cfg.y.is_some() {
        vec![(SuiteConfig::rational(&cfg.x, "--x", "1")?, SuiteConfig::rational(&cfg.y, "--y", "1")?)]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut r = || Exact::ratio(rng.gen_range(1..=19), 20);
        vec![(Exact::one(), Exact::one()), (r(), r())]
    };
    let cutoff = cfg.cutoff.unwrap_or(40);
    let max_index = cfg.truncation.unwrap_or(6);
    let prec = cfg.precision;
    let tol = cfg.tol.unwrap_or(1e-40);
    let mut cases = Vec::new();
    for s in ss {
        for (x, y) in &points {
            let (q, x, y) = (qpt.clone(), x.clone(), y.clone());
            cases.push(case(format!("chi{s} x={x} y={y}"), move || {
                let c = verify_boundary_eigenrelation(&q, s, &x, &y, cutoff, prec, max_index)?;
                Ok(Outcome::tol(c.max_residual(), tol).diag("components", c.components).diag("cutoff", cutoff))
            }));
        }
    }
    Ok(cases)
}

// ---- Yang-Baxter ----

fn ybe_cases(cfg: &SuiteConfig) -> Result<Vec<Case>> {
    let qpt = cfg.qpt()?;
    let sig = cfg.sigs(&["10"])?.remove(0);
    let x = SuiteConfig::rational(&cfg.x, "--x", "3/5")?;
    let y = SuiteConfig::rational(&cfg.y, "--y", "2/7")?;
    let fam = cfg.family()?;
    let mut cases = Vec::new();
    if fam != Some(Family::B) {
        let totals = match &cfg.sector {
            Some(s) => parse_ints(s, "--sector")?,
            None => vec![1, 1, 1],
        };
        let [l1, l2, l3] = totals[..] else {
            return Err(Error::Usage("ybe --sector expects l1,l2,l3".into()));
        };
        let (q, sg, x, y) = (qpt.clone(), sig.clone(), x.clone(), y.clone());
        cases.push(case(format!("trace {sg} ({l1},{l2},{l3})"), move || {
            let src = TraceSource { qpt: q.clone(), sig: sg.clone() };
            let rep = verify_ybe(&src, Exact::one(), &x, &y, &triples_by_totals(&sg, [l1, l2, l3]))?;
            Ok(Outcome::exact(rep.exact_zero && rep.triples > 0, rep.max_residual).diag("triples", rep.triples))
        }));
    }
    if fam != Some(Family::A) {
        let n = cfg.truncation.unwrap_or(3);
        let pairs: Vec<(u8, u8)> = match (cfg.s, cfg.t) {
            (Some(s), Some(t)) => vec![(s, t)],
            (None, None) => vec![(1, 1), (1, 2), (2, 1), (2, 2)],
            _ => return Err(Error::Usage("give both --s and --t or neither".into())),
        };
        let tol = cfg.tol.unwrap_or(1e-30);
        let cutoff = cfg.cutoff.unwrap_or(200);
        let prec = cfg.precision;
        for (s, t) in pairs {
            let (q, sg, x, y) = (qpt.clone(), sig.clone(), x.clone(), y.clone());
            cases.push(case(format!("boundary S^({s},{t}) {sg} total<={n}"), move || {
                let src = BoundarySource { qpt: q.clone(), sig: sg.clone(), params: SstParams::new(s, t, cutoff, prec), gauge: false };
                let one = FloatBackend { precision: prec }.one();
                let rep = verify_ybe(&src, one, &x, &y, &triples_truncated(&sg, n))?;
                Ok(Outcome::tol(rep.max_residual, tol).diag("triples", rep.triples).diag("operators", rep.operators_built))
            }));
        }
    }
    Ok(cases)
}

// ---- commutativity ----

fn boundary_operator(qpt: &QPoint, sig: &Signature, z: &Exact, n: i64, params: &SstParams) -> Result<SparseBlockOperator<Float>> {
    let ops = sum_vectors(sig, n)
        .into_iter()
        .map(|sv| build_sst(qpt, sig, z, &SectorKey::B(sv), params).map(|b| b.op))
        .collect::<Result<Vec<_>>>()?;
    merge_ops(ops).ok_or_else(|| Error::Domain(format!("no sectors for {sig} up to {n}")))
}

fn intertwine_cases(cfg: &SuiteConfig) -> Result<Vec<Case>> {
    let qpt = cfg.qpt()?;
    let sigs = cfg.sigs(&["10", "01", "010"])?;
    let x = SuiteConfig::rational(&cfg.x, "--x", "2/7")?;
    let y = SuiteConfig::rational(&cfg.y, "--y", "1")?;
    let fam = cfg.family()?;
    let sectors = cfg.sectors(2)?;
    let n = cfg.truncation.unwrap_or(3);
    let tol = cfg.tol.unwrap_or(1e-30);
    let prec = cfg.precision;
    let cutoff = cfg.cutoff.unwrap_or(200);
    let mut cases = Vec::new();
    for sig in sigs {
        if fam != Some(Family::B) {
            for &(l, m) in &sectors {
                if enumerate_wl(&sig, l).is_empty() || enumerate_wl(&sig, m).is_empty() {
                    continue;
                }
                let (q, sg, x, y) = (qpt.clone(), sig.clone(), x.clone(), y.clone());
                cases.push(case(format!("trace {sg} ({l},{m})"), move || {
                    let g = Gqg::new(&q, Family::A, &sg)?;
                    let op = build_str(&q, &sg, &(&x / &y), l, m)?;
                    let rep = intertwining_residual(&g, &ExactBackend, &x, &y, &op);
                    Ok(Outcome::exact(rep.exact_zero && rep.checks > 0, rep.max_residual).diag("checks", rep.checks))
                }));
            }
        }
        if fam != Some(Family::A) {
            let (q, sg, x, y) = (qpt.clone(), sig.clone(), x.clone(), y.clone());
            cases.push(case(format!("boundary {sg} total<={n}"), move || {
                let g = Gqg::new(&q, Family::B, &sg)?;
                let be = FloatBackend { precision: prec };
                let raw = boundary_operator(&q, &sg, &(&x / &y), n, &SstParams::new(1, 1, cutoff, prec))?;
                let op = gauge_tilde(&q, &be, &raw, GaugeSide::S);
                let rep = intertwining_residual(&g, &be, &x, &y, &op);
                Ok(Outcome::tol(rep.max_residual, tol).diag("checks", rep.checks).msg_if(rep.checks == 0, "no complete columns"))
            }));
        }
    }
    Ok(cases)
}

impl Outcome {
    fn msg_if(self, cond: bool, m: &str) -> Self {
        if cond {
            let mut o = self.msg(m);
            o.status = Status::Fail;
            o
        } else {
            self
        }
    }
}

// ---- layer builds against the solver ----

fn op_diff<B: Backend>(be: &B, a: &SparseBlockOperator<B::S>, b: &SparseBlockOperator<B::S>) -> (bool, f64) {
    let zero = be.zero();
    let d = a.max_diff(b, &zero).max(b.max_diff(a, &zero));
    let same = a.first_mismatch(b, be).is_none() && b.first_mismatch(a, be).is_none();
    (same, d)
}

fn theorem_main_cases(cfg: &SuiteConfig) -> Result<Vec<Case>> {
    let qpt = cfg.qpt()?;
    let fam = cfg.family()?;
    let mut cases = Vec::new();
    if fam != Some(Family::B) {
        let sigs = cfg.sigs(&["10", "01", "11", "110", "100", "00"])?;
        let zs = cfg.zs(&["3/5", "2/7"])?;
        let sectors = cfg.sectors(3)?;
        for sig in &sigs {
            for &(l, m) in &sectors {
                if enumerate_wl(sig, l).is_empty() || enumerate_wl(sig, m).is_empty() {
                    continue;
                }
                for z in &zs {
                    let (q, sg, z) = (qpt.clone(), sig.clone(), z.clone());
                    cases.push(case(format!("A {sg} ({l},{m}) z={z}"), move || {
                        let g = Gqg::new(&q, Family::A, &sg)?;
                        let sol = solve_intertwiner(&g, &z, &Exact::one(), &PairDomain::Sector(l, m), 0)?;
                        let st = build_str(&q, &sg, &z, l, m)?;
                        let (same, d) = op_diff(&ExactBackend, &st, &sol.r);
                        Ok(Outcome::exact(same, d)
                            .diag("unknowns", sol.unknowns)
                            .diag("rank", sol.rank)
                            .diag("nullity", sol.nullity)
                            .diag("interior_nullity", sol.interior_nullity)
                            .diag("entries", st.nnz()))
                    }));
                }
            }
        }
    }
    if fam != Some(Family::A) {
        let sigs = cfg.sigs(&["10", "01", "11", "00"])?;
        let zs = cfg.zs(&["3/5"])?;
        let n = cfg.truncation.unwrap_or(4);
        let tol = cfg.tol.unwrap_or(1e-30);
        let prec = cfg.precision;
        let cutoff = cfg.cutoff.unwrap_or(220);
        for sig in &sigs {
            for z in &zs {
                let (q, sg, z) = (qpt.clone(), sig.clone(), z.clone());
                cases.push(case(format!("B {sg} total<={n} z={z}"), move || {
                    let g = Gqg::new(&q, Family::B, &sg)?;
                    let sol = solve_intertwiner(&g, &z, &Exact::one(), &PairDomain::Truncated(n), 1)?;
                    let ib = sol.interior_bound.unwrap_or(n);
                    let be = FloatBackend { precision: prec };
                    let raw = boundary_operator(&q, &sg, &z, ib, &SstParams::new(1, 1, cutoff, prec))?;
                    let tilde = gauge_tilde(&q, &be, &raw, GaugeSide::S);
                    let (_, d1) = op_diff(&be, &tilde, &sol.raw.map_values(|_, _, v| be.lift(v)));
                    let (_, d2) = op_diff(&be, &raw, &sol.r.map_values(|_, _, v| be.lift(v)));
                    Ok(Outcome::tol(d1.max(d2), tol)
                        .diag("unknowns", sol.unknowns)
                        .diag("rank", sol.rank)
                        .diag("nullity", sol.nullity)
                        .diag("interior_nullity", sol.interior_nullity)
                        .diag("interior_bound", ib))
                }));
            }
        }
    }
    Ok(cases)
}

// ---- spectral ----

fn a_spectral_sigs() -> Vec<(SpectralCase, &'static str)> {
    vec![
        (SpectralCase::AllOnes, "11"),
        (SpectralCase::AllOnes, "111"),
        (SpectralCase::KappaNm1, "10"),
        (SpectralCase::KappaNm1, "110"),
        (SpectralCase::KappaLe, "00"),
        (SpectralCase::KappaLe, "100"),
    ]
}

fn a_sectors(case: SpectralCase, sig: &Signature, bound: i64) -> Vec<(i64, i64)> {
    let cap = if case == SpectralCase::AllOnes { bound.min(sig.n() as i64) } else { bound };
    (0..=cap).flat_map(|l| (0..=cap).map(move |m| (l, m))).collect()
}

fn spectral_cases(cfg: &SuiteConfig) -> Result<Vec<Case>> {
    let qpt = cfg.qpt()?;
    let zs = cfg.zs(&["3/5", "2/7", "5/11"])?;
    let x = SuiteConfig::rational(&cfg.x, "--x", "3/5")?;
    let y = SuiteConfig::rational(&cfg.y, "--y", "-2/7")?;
    let bound = cfg.truncation.unwrap_or(3);
    let b_max = 4;
    let mut cases = Vec::new();
    {
        let q = qpt.clone();
        cases.push(case("J recursions r<=5", move || Ok(Outcome::exact(j_recursions_hold(&q, 5), 1.0))));
    }
    for (sc, s) in a_spectral_sigs() {
        let sig = parse_sig(s)?;
        let (q, sg) = (qpt.clone(), sig.clone());
        cases.push(case(format!("singular vectors {s}"), move || {
            let mut built = 0;
            for (l, m) in a_sectors(sc, &sg, bound) {
                for idx in index_range(sc, sg.n(), l, m) {
                    singular_vector(sc, &q, &sg, l, m, idx)?;
                    built += 1;
                }
            }
            Ok(Outcome::exact(true, 0.0).diag("vectors", built))
        }));
        for (l, m) in a_sectors(sc, &sig, bound) {
            let (q, sg, zs) = (qpt.clone(), sig.clone(), zs.clone());
            cases.push(case(format!("eigenvalues {s} ({l},{m})"), move || {
                let mut all = true;
                let mut checks = 0;
                for z in &zs {
                    let r = build_str(&q, &sg, z, l, m)?;
                    let rep = spectral_check(&r, sc, &q, &sg, z, SpectralSector::A(l, m))?;
                    all &= rep.ok();
                    checks += rep.eigen.len();
                }
                Ok(Outcome::exact(all, 1.0).diag("eigenvalues", checks))
            }));
        }
    }
    let trans_sigs: [(SpectralCase, &str); 7] = [
        (SpectralCase::AllOnes, "11"),
        (SpectralCase::AllOnes, "111"),
        (SpectralCase::KappaNm1, "110"),
        (SpectralCase::KappaNm1, "1110"),
        (SpectralCase::KappaLe, "00"),
        (SpectralCase::KappaLe, "100"),
        (SpectralCase::KappaLe, "000"),
    ];
    for (sc, s) in trans_sigs {
        let sig = parse_sig(s)?;
        for printed in [false, true] {
            if printed && sc != SpectralCase::KappaLe {
                continue;
            }
            let (q, sg, x, y) = (qpt.clone(), sig.clone(), x.clone(), y.clone());
            let label = if printed { "raising relation, printed A and B" } else { "transitions" };
            cases.push(case(format!("{label} {s}"), move || {
                let mut checks = 0;
                let mut worst = 0.0f64;
                let mut zero = true;
                for (l, m) in a_sectors(sc, &sg, bound) {
                    for idx in index_range(sc, sg.n(), l, m) {
                        let cs = match verify_transition(sc, &q, &sg, &x, &y, l, m, idx) {
                            Ok(cs) => cs,
                            Err(Error::Domain(_)) => continue,
                            Err(e) => return Err(e),
                        };
                        for c in cs.iter().filter(|c| c.name.contains("Printed") == printed) {
                            checks += 1;
                            zero &= c.is_zero();
                            worst = worst.max(c.residual.max_abs());
                        }
                    }
                }
                Ok(Outcome::exact(zero && checks > 0, worst).diag("checks", checks))
            }));
        }
    }
    cases.push(case("transitions 10", || {
        Ok(Outcome::skipped("two sites: the lowering word reduces to e1 e1 e0 and Δ(e1)² = 0"))
    }));
    for s in ["10", "100"] {
        let sig = parse_sig(s)?;
        let (q, sg, zs) = (qpt.clone(), sig.clone(), zs.clone());
        cases.push(case(format!("eigenvalues B {s} l<={b_max}"), move || {
            let g = Gqg::new(&q, Family::B, &sg)?;
            let mut all = true;
            let mut checks = 0;
            for z in &zs {
                let sol = solve_intertwiner(&g, z, &Exact::one(), &PairDomain::Truncated(b_max + 1), 1)?;
                let rep = spectral_check(&sol.raw, SpectralCase::B, &q, &sg, z, SpectralSector::B(b_max))?;
                all &= rep.ok();
                checks += rep.eigen.len();
            }
            Ok(Outcome::exact(all, 1.0).diag("eigenvalues", checks))
        }));
    }
    for s in ["10", "100", "0"] {
        let sig = parse_sig(s)?;
        let (q, sg, x, y) = (qpt.clone(), sig.clone(), x.clone(), y.clone());
        cases.push(case(format!("transitions B {s}"), move || {
            let mut checks = 0;
            let mut worst = 0.0f64;
            let mut zero = true;
            for l in 0..=b_max {
                for c in verify_transition(SpectralCase::B, &q, &sg, &x, &y, l, 0, l)? {
                    checks += 1;
                    zero &= c.is_zero();
                    worst = worst.max(c.residual.max_abs());
                }
            }
            Ok(Outcome::exact(zero && checks > 0, worst).diag("checks", checks))
        }));
    }
    let orbit_sets: Vec<(SpectralCase, &str, SpectralSector)> = vec![
        (SpectralCase::AllOnes, "111", SpectralSector::A(2, 1)),
        (SpectralCase::AllOnes, "111", SpectralSector::A(2, 2)),
        (SpectralCase::KappaNm1, "110", SpectralSector::A(2, 2)),
        (SpectralCase::KappaNm1, "110", SpectralSector::A(3, 1)),
        (SpectralCase::KappaLe, "100", SpectralSector::A(2, 3)),
        (SpectralCase::KappaLe, "00", SpectralSector::A(3, 3)),
        (SpectralCase::B, "10", SpectralSector::B(3)),
    ];
    for (sc, s, sector) in orbit_sets {
        let sig = parse_sig(s)?;
        let q = qpt.clone();
        cases.push(case(format!("orbit span {s} {sector:?}"), move || {
            let o = orbit_span(sc, &q, &sig, sector)?;
            Ok(Outcome::new(o.span == o.dimension, format!("{}", o.dimension as i64 - o.span as i64))
                .diag("span", o.span)
                .diag("dimension", o.dimension))
        }));
    }
    Ok(cases)
}

// ---- local identities ----

fn identity_cases(cfg: &SuiteConfig) -> Result<Vec<Case>> {
    let qpt = cfg.qpt()?;
    let bound = cfg.truncation.unwrap_or(3);
    let names = match &cfg.name {
        Some(n) => vec![n.parse::<IdentityName>().map_err(|e| Error::Usage(e.to_string()))?],
        None => IdentityName::all(),
    };
    let mut cases = Vec::new();
    for name in names {
        let q = qpt.clone();
        cases.push(case(format!("{name} indices<={bound}"), move || {
            let s = sweep_identity(&q, name, bound);
            Ok(Outcome::exact(s.failures.is_empty(), 1.0)
                .diag("tuples", s.tuples)
                .diag("nontrivial", s.nontrivial)
                .diag("failures", s.failures.len()))
        }));
    }
    if cfg.name.is_none() {
        let top = 4;
        let q = qpt.clone();
        cases.push(case(format!("R involution indices<={top}"), move || {
            let ok = (0..=2 * top).all(|s1| (0..=2 * top).all(|s2| r_involution_holds(&q, s1, s2)));
            Ok(Outcome::exact(ok, 1.0))
        }));
        let q = qpt.clone();
        cases.push(case(format!("R transposes indices<={top}"), move || {
            let all = tuples(6, &[top; 6]);
            let bad = all
                .par_iter()
                .filter(|t| {
                    let [a, b, c, i, j, k] = t[..] else { unreachable!() };
                    !(r_transpose_holds(&q, a, b, c, i, j, k) && r_weighted_transpose_holds(&q, a, b, c, i, j, k))
                })
                .count();
            Ok(Outcome::exact(bad == 0, bad as f64).diag("tuples", all.len()).diag("failures", bad))
        }));
    }
    Ok(cases)
}

// ---- defining relations ----

fn relation_cases(cfg: &SuiteConfig) -> Result<Vec<Case>> {
    let qpt = cfg.qpt()?;
    let x = SuiteConfig::rational(&cfg.x, "--x", "3/5")?;
    let n_max = cfg.truncation.unwrap_or(3);
    let fam = cfg.family()?;
    let mut sets: Vec<(Family, Vec<Signature>)> = Vec::new();
    if fam != Some(Family::B) {
        sets.push((Family::A, cfg.sigs(&["10", "01", "11", "110", "0110", "00"])?));
    }
    if fam != Some(Family::A) {
        sets.push((Family::B, cfg.sigs(&["10", "01", "1", "0", "011", "100"])?));
    }
    let mut cases = Vec::new();
    for (f, sigs) in sets {
        for sg in sigs {
            let (q, x) = (qpt.clone(), x.clone());
            cases.push(case(format!("{f} {sg} total<={n_max}"), move || {
                let g = Gqg::new(&q, f, &sg)?;
                let rep = verify_defining_relations(&g, &x, n_max)?;
                let o = Outcome::exact(rep.ok(), rep.failures.len() as f64).diag("checks", rep.checks).diag("states", rep.states);
                Ok(match rep.failures.first() {
                    Some(f) => o.msg(f.clone()),
                    None => o,
                })
            }));
        }
    }
    Ok(cases)
}

// ---- Φ equivalence ----

fn phi_cases(cfg: &SuiteConfig) -> Result<Vec<Case>> {
    let qpt = cfg.qpt()?;
    let z = SuiteConfig::rational(&cfg.z, "--z", "3/5")?;
    let fam = cfg.family()?;
    let moves: Vec<(Signature, usize)> = match &cfg.eps {
        Some(e) => {
            let sg = parse_sig(e)?;
            (0..sg.n().saturating_sub(1)).filter(|&p| sg.at(p) != sg.at(p + 1)).map(|p| (sg.clone(), p)).collect()
        }
        None => [("100", 0), ("010", 0), ("010", 1), ("001", 1)].iter().map(|(s, p)| (parse_sig(s).unwrap(), *p)).collect(),
    };
    let sectors = cfg.sectors(2)?;
    let n = cfg.truncation.unwrap_or(2);
    let tol = cfg.tol.unwrap_or(1e-30);
    let prec = cfg.precision;
    let cutoff = cfg.cutoff.unwrap_or(200);
    let mut cases = Vec::new();
    for (sg, pos) in moves {
        let target = sg.swapped(pos);
        if fam != Some(Family::B) {
            let (q, sg, target, z, sectors) = (qpt.clone(), sg.clone(), target.clone(), z.clone(), sectors.clone());
            cases.push(case(format!("trace {sg} -> {target}"), move || {
                let mut same = true;
                let mut worst = 0.0f64;
                let mut blocks = 0;
                for &(l, m) in &sectors {
                    let src = build_str(&q, &sg, &z, l, m)?;
                    let mapped = phi_equivalence(&q, &ExactBackend, pos, &src)?;
                    let want = build_str(&q, &target, &z, l, m)?;
                    let (s, d) = op_diff(&ExactBackend, &mapped, &want);
                    same &= s;
                    worst = worst.max(d);
                    blocks += 1;
                }
                Ok(Outcome::exact(same, worst).diag("sectors", blocks))
            }));
        }
        if fam != Some(Family::A) {
            let (q, sg, target, z) = (qpt.clone(), sg.clone(), target.clone(), z.clone());
            cases.push(case(format!("boundary {sg} -> {target} total<={n}"), move || {
                let params = SstParams::new(1, 1, cutoff, prec);
                let be = FloatBackend { precision: prec };
                let src = boundary_operator(&q, &sg, &z, n, &params)?;
                let mapped = phi_equivalence(&q, &be, pos, &src)?;
                let want = boundary_operator(&q, &target, &z, n, &params)?;
                let (_, d) = op_diff(&be, &mapped, &want);
                Ok(Outcome::tol(d, tol).diag("entries", want.nnz()))
            }));
        }
    }
    Ok(cases)
}

// ---- regression examples ----

fn example_cases(cfg: &SuiteConfig) -> Result<Vec<Case>> {
    let qpt = cfg.qpt()?;
    let z = SuiteConfig::rational(&cfg.z, "--z", "3/5")?;
    let names: Vec<ExampleName> = match &cfg.name {
        Some(n) => vec![n.parse()?],
        None => vec![ExampleName::A10, ExampleName::A110, ExampleName::B10],
    };
    let mut cases = Vec::new();
    for name in names {
        let sectors = match (&cfg.sector, name) {
            (Some(_), _) => cfg.sectors(0)?,
            (None, ExampleName::A10) => vec![(1, 1), (2, 2), (2, 3)],
            (None, ExampleName::A110) => vec![(2, 2)],
            (None, ExampleName::B10) => vec![(0, 0)],
        };
        for (l, m) in sectors {
            let (q, z) = (qpt.clone(), z.clone());
            let label = if name == ExampleName::B10 { format!("{name:?}") } else { format!("{name:?} ({l},{m})") };
            cases.push(case(label, move || {
                let rep = reproduce_example(name, &q, &z, l, m)?;
                let o = Outcome::new(rep.ok(), rep.mismatches.len().to_string())
                    .diag("coefficients", rep.compared)
                    .diag("mismatches", rep.mismatches.len());
                Ok(match rep.mismatches.first() {
                    Some(m) => o.msg(m.clone()),
                    None => o,
                })
            }));
        }
    }
    Ok(cases)
}

// ---- single computations ----

/// Matrix dump for the rmatrix kinds, a scalar string for threed-element.
pub fn cmd_compute(kind: &str, cfg: &SuiteConfig) -> Result<String> {
    let qpt = cfg.qpt()?;
    match kind {
        "threed-element" => {
            let idx = parse_ints(cfg.index.as_deref().ok_or_else(|| Error::Usage("threed-element needs --index a,b,c,i,j,k".into()))?, "--index")?;
            let [a, b, c, i, j, k] = idx[..] else {
                return Err(Error::Usage("--index expects six integers".into()));
            };
            let v = match cfg.name.as_deref().unwrap_or("R") {
                "R" | "r" => r_element(&qpt, a, b, c, i, j, k),
                "L" | "l" => l_element(&qpt, a, b, c, i, j, k),
                other => return Err(Error::Usage(format!("threed-element --name must be R or L, got {other}"))),
            };
            Ok(v.to_string())
        }
        "rmatrix-trace" => {
            let sig = cfg.sigs(&[])?.pop().ok_or_else(|| Error::Usage("rmatrix-trace needs --eps".into()))?;
            let z = SuiteConfig::rational(&cfg.z, "--z", "3/5")?;
            let (l, m) = one_sector(cfg)?;
            let op = build_str(&qpt, &sig, &z, l, m)?;
            Ok(op.dump(&dump_header(&sig, &SectorKey::A(l, m), &qpt, &z, "exact", None), |v| v.to_string()))
        }
        "rmatrix-boundary" => {
            let sig = cfg.sigs(&[])?.pop().ok_or_else(|| Error::Usage("rmatrix-boundary needs --eps".into()))?;
            let z = SuiteConfig::rational(&cfg.z, "--z", "3/5")?;
            let sv = parse_ints(cfg.sector.as_deref().ok_or_else(|| Error::Usage("rmatrix-boundary needs --sector a+b".into()))?, "--sector")?;
            if sv.len() != sig.n() {
                return Err(Error::Usage(format!("--sector needs {} entries for signature {sig}", sig.n())));
            }
            let cutoff = cfg.cutoff.unwrap_or(200);
            let params = SstParams::new(cfg.s.unwrap_or(1), cfg.t.unwrap_or(1), cutoff, cfg.precision);
            let key = SectorKey::B(sv);
            let b = build_sst(&qpt, &sig, &z, &key, &params)?;
            let header = dump_header(&sig, &key, &qpt, &z, &format!("float{}", cfg.precision), Some(cutoff));
            Ok(b.op.dump(&header, |v| v.to_decimal_string(40)))
        }
        "rmatrix-solver" => {
            let sig = cfg.sigs(&[])?.pop().ok_or_else(|| Error::Usage("rmatrix-solver needs --eps".into()))?;
            let z = SuiteConfig::rational(&cfg.z, "--z", "3/5")?;
            let fam = cfg.family()?.unwrap_or(Family::A);
            let g = Gqg::new(&qpt, fam, &sig)?;
            let (dom, key) = match fam {
                Family::A => {
                    let (l, m) = one_sector(cfg)?;
                    (PairDomain::Sector(l, m), SectorKey::A(l, m))
                }
                Family::B => {
                    let n = cfg.truncation.unwrap_or(3);
                    (PairDomain::Truncated(n), SectorKey::A(n, n))
                }
            };
            let sol = solve_intertwiner(&g, &z, &Exact::one(), &dom, 1)?;
            let mut header = dump_header(&sig, &key, &qpt, &z, "exact", None);
            header.push_str(&format!("\nfamily {fam}\nnullity {}\ninterior nullity {}", sol.nullity, sol.interior_nullity));
            if let PairDomain::Truncated(n) = dom {
                header.push_str(&format!("\ntruncation {n}\ngauge tilde"));
            }
            Ok(sol.r.dump(&header, |v| v.to_string()))
        }
        k => Err(Error::Usage(format!("unknown compute kind {k}; expected one of {}", COMPUTE_KINDS.join(", ")))),
    }
}

fn one_sector(cfg: &SuiteConfig) -> Result<(i64, i64)> {
    if cfg.sector.is_none() {
        return Err(Error::Usage("--sector l,m is required".into()));
    }
    Ok(cfg.sectors(0)?[0])
}

/// Whether any (l, m) sector of the signature is nonempty; used to validate configs early.
pub fn sector_nonempty(sig: &Signature, l: i64, m: i64) -> bool {
    enumerate_pair_sector(sig, &SectorKey::A(l, m)).map(|p| !p.is_empty()).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threed_element_scalar() {
        let mut cfg = SuiteConfig::new("compute");
        cfg.index = Some("0,1,0,1,0,1".into());
        assert_eq!(cmd_compute("threed-element", &cfg).unwrap(), "15/16");
    }

    #[test]
    fn examples_suite_a10() {
        let mut cfg = SuiteConfig::new("examples");
        cfg.name = Some("A10".into());
        cfg.z = Some("3/5".into());
        let rep = cmd_verify(&cfg).unwrap();
        assert!(rep.passed());
        assert!(rep.cases.iter().all(|c| c.residual == "0"));
    }

    #[test]
    fn unknown_suite_is_usage_error() {
        assert!(matches!(cmd_verify(&SuiteConfig::new("nope")), Err(Error::Usage(_))));
        let mut cfg = SuiteConfig::new("examples");
        cfg.qroot = "x".into();
        assert!(matches!(cmd_verify(&cfg), Err(Error::Usage(_))));
    }

    #[test]
    fn report_json_is_snake_case() {
        let mut cfg = SuiteConfig::new("tetrahedron");
        cfg.name = Some("RLLL".into());
        cfg.truncation = Some(1);
        let rep = cmd_verify(&cfg).unwrap();
        let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(v["status"], "pass");
        assert!(v["cases"][0]["time_ms"].is_u64());
        assert_eq!(v["config"]["qroot"], "1/2");
    }

    #[test]
    fn trace_dump_has_normalization_row() {
        let mut cfg = SuiteConfig::new("compute");
        cfg.eps = Some("11".into());
        cfg.sector = Some("1,1".into());
        let d = cmd_compute("rmatrix-trace", &cfg).unwrap();
        assert!(d.starts_with("# signature 11"));
        assert!(d.lines().any(|l| l.ends_with(": 1")));
    }
}
