//! Generalized quantum groups U_A(ε) and U_B(ε): Cartan data, the representations
//! π_x on W, coproducts, and the quantum R matrix as the solution of the
//! intertwining equations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::layer::{gauge_tilde, normalization_vector, GaugeSide};
use crate::linalg::{rank_of, Rref, SparseRow};
use crate::scalars::{Backend, Exact, ExactBackend, QPoint, Scalar};
use crate::spaces::{enumerate_pair_sector, pairs_truncated, total, Pair, SectorKey, Signature, SparseBlockOperator, SparseVec, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    A,
    B,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if *self == Family::A { "A" } else { "B" })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GenKind {
    E,
    F,
    K,
    KInv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Generator {
    pub kind: GenKind,
    pub index: usize,
}

impl Generator {
    pub fn e(i: usize) -> Self {
        Generator { kind: GenKind::E, index: i }
    }
    pub fn f(i: usize) -> Self {
        Generator { kind: GenKind::F, index: i }
    }
    pub fn k(i: usize) -> Self {
        Generator { kind: GenKind::K, index: i }
    }
    pub fn kinv(i: usize) -> Self {
        Generator { kind: GenKind::KInv, index: i }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.kind {
            GenKind::E => "e",
            GenKind::F => "f",
            GenKind::K => "k",
            GenKind::KInv => "kinv",
        };
        write!(f, "{s}{}", self.index)
    }
}

#[derive(Clone, Debug)]
pub struct CartanData {
    pub family: Family,
    pub ntilde: usize,
    pub d: Vec<Vec<Exact>>,
    pub r: Vec<Exact>,
}

/// q_i (1-based): q for a Fock site, -q⁻¹ for a two-dimensional site.
pub fn q_site(qpt: &QPoint, sig: &Signature, i: usize) -> Exact {
    if sig.at(i) == 0 {
        qpt.q()
    } else {
        -qpt.q_pow(-1)
    }
}

fn angle(family: Family, n: usize, i: usize) -> Vec<usize> {
    match family {
        // indices mod n, with 0 identified with n
        Family::A => [i, i + 1].iter().map(|&k| (k + n - 1) % n + 1).collect(),
        Family::B => [i, i + 1].into_iter().filter(|&k| (1..=n).contains(&k)).collect(),
    }
}

pub fn cartan_data(qpt: &QPoint, family: Family, sig: &Signature) -> Result<CartanData> {
    let n = sig.n();
    let ntilde = if family == Family::A { n.saturating_sub(1) } else { n };
    if ntilde < 1 {
        return Err(Error::Domain(format!("U_{family} needs ñ ≥ 1, signature {sig} gives {ntilde}")));
    }
    let mut d = vec![vec![Exact::one(); ntilde + 1]; ntilde + 1];
    for (i, row) in d.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let ai = angle(family, n, i);
            let aj = angle(family, n, j);
            let e = if i == j { 1 } else { -1 };
            *v = ai.iter().filter(|k| aj.contains(k)).fold(Exact::one(), |acc, &k| acc * q_site(qpt, sig, k).pow(e));
        }
    }
    let r = (0..=ntilde)
        .map(|i| if family == Family::B && (i == 0 || i == n) { qpt.p() } else { qpt.q() })
        .collect();
    Ok(CartanData { family, ntilde, d, r })
}

/// A generalized quantum group together with its representation data.
#[derive(Clone, Debug)]
pub struct Gqg {
    pub qpt: QPoint,
    pub family: Family,
    pub sig: Signature,
    pub cartan: CartanData,
}

impl Gqg {
    pub fn new(qpt: &QPoint, family: Family, sig: &Signature) -> Result<Self> {
        Ok(Gqg { qpt: qpt.clone(), family, sig: sig.clone(), cartan: cartan_data(qpt, family, sig)? })
    }

    pub fn ntilde(&self) -> usize {
        self.cartan.ntilde
    }

    pub fn n(&self) -> usize {
        self.sig.n()
    }

    /// 0-based array slot of site index i, with 0 read as n.
    fn slot(&self, i: usize) -> usize {
        let n = self.n();
        (i + n - 1) % n
    }

    fn qs(&self, i: usize) -> Exact {
        q_site(&self.qpt, &self.sig, self.slot(i) + 1)
    }

    /// All generators e_r, f_r, k_r, k_r⁻¹.
    pub fn generators(&self) -> Vec<Generator> {
        (0..=self.ntilde())
            .flat_map(|r| [Generator::e(r), Generator::f(r), Generator::k(r), Generator::kinv(r)])
            .collect()
    }

    /// Change of |m| under a generator.
    pub fn shift(&self, g: Generator) -> i64 {
        if self.family == Family::A {
            return 0;
        }
        let n = self.n();
        let mut s = 0;
        if g.index == 0 {
            s += match g.kind {
                GenKind::E => 1,
                GenKind::F => -1,
                _ => 0,
            };
        }
        if g.index == n {
            s += match g.kind {
                GenKind::E => -1,
                GenKind::F => 1,
                _ => 0,
            };
        }
        s
    }

    /// Eigenvalue of k_r on |m⟩.
    pub fn k_eigen(&self, r: usize, m: &State) -> Exact {
        let n = self.n();
        match self.family {
            Family::B if r == 0 => self.qpt.p_pow(-1) * self.qs(1).pow(m[0]),
            Family::B if r == n => self.qpt.p() * self.qs(n).pow(-m[n - 1]),
            _ => self.qs(r).pow(-m[self.slot(r)]) * self.qs(r + 1).pow(m[self.slot(r + 1)]),
        }
    }

    fn moved(&self, m: &State, from: Option<usize>, to: Option<usize>) -> Option<State> {
        let mut v = m.clone();
        if let Some(f) = from {
            v[f] -= 1;
        }
        if let Some(t) = to {
            v[t] += 1;
        }
        self.sig.admits(&v).then_some(v)
    }

    /// π_x(g)|m⟩, or None when the image vanishes.
    pub fn act(&self, x: &Exact, g: Generator, m: &State) -> Option<(State, Exact)> {
        let n = self.n();
        let q = &self.qpt;
        let r = g.index;
        if r > self.ntilde() {
            return None;
        }
        let res = match g.kind {
            GenKind::K => Some((m.clone(), self.k_eigen(r, m))),
            GenKind::KInv => Some((m.clone(), self.k_eigen(r, m).inv())),
            GenKind::E => match self.family {
                Family::B if r == 0 => self.moved(m, None, Some(0)).map(|v| (v, x.clone())),
                Family::B if r == n => self.moved(m, Some(n - 1), None).map(|v| (v, q.qint(m[n - 1]))),
                _ => {
                    let (a, b) = (self.slot(r), self.slot(r + 1));
                    let c = if r == 0 { x.clone() } else { Exact::one() };
                    self.moved(m, Some(a), Some(b)).map(|v| (v, c * q.qint(m[a])))
                }
            },
            GenKind::F => match self.family {
                Family::B if r == 0 => self.moved(m, Some(0), None).map(|v| (v, x.inv() * q.qint(m[0]))),
                Family::B if r == n => self.moved(m, None, Some(n - 1)).map(|v| (v, Exact::one())),
                _ => {
                    let (a, b) = (self.slot(r), self.slot(r + 1));
                    let c = if r == 0 { x.inv() } else { Exact::one() };
                    self.moved(m, Some(b), Some(a)).map(|v| (v, c * q.qint(m[b])))
                }
            },
        };
        res.filter(|(_, c)| !c.is_zero())
    }

    /// Applies a word of generators, rightmost first.
    pub fn act_word(&self, x: &Exact, word: &[Generator], m: &State) -> Option<(State, Exact)> {
        let mut cur = (m.clone(), Exact::one());
        for g in word.iter().rev() {
            let (v, c) = self.act(x, *g, &cur.0)?;
            cur = (v, cur.1 * c);
        }
        Some(cur)
    }

    /// Δ(g) or Δ'(g) under π_x ⊗ π_y on a basis pair.
    pub fn coproduct(&self, x: &Exact, y: &Exact, g: Generator, variant: Coproduct, p: &Pair) -> Vec<(Pair, Exact)> {
        let (u, v) = p;
        let kg = Generator::k(g.index);
        let kig = Generator::kinv(g.index);
        let mut out = Vec::new();
        let mut push = |left: Option<(State, Exact)>, right: Option<(State, Exact)>| {
            if let (Some((a, ca)), Some((b, cb))) = (left, right) {
                out.push(((a, b), ca * cb));
            }
        };
        let id = |s: &State| Some((s.clone(), Exact::one()));
        match (g.kind, variant) {
            (GenKind::K | GenKind::KInv, _) => push(self.act(x, g, u), self.act(y, g, v)),
            (GenKind::E, Coproduct::Delta) => {
                push(id(u), self.act(y, g, v));
                push(self.act(x, g, u), self.act(y, kg, v));
            }
            (GenKind::F, Coproduct::Delta) => {
                push(self.act(x, g, u), id(v));
                push(self.act(x, kig, u), self.act(y, g, v));
            }
            (GenKind::E, Coproduct::Opposite) => {
                push(self.act(x, g, u), id(v));
                push(self.act(x, kg, u), self.act(y, g, v));
            }
            (GenKind::F, Coproduct::Opposite) => {
                push(id(u), self.act(y, g, v));
                push(self.act(x, g, u), self.act(y, kig, v));
            }
        }
        out
    }

    pub fn coproduct_vec(&self, x: &Exact, y: &Exact, g: Generator, variant: Coproduct, v: &SparseVec<Pair, Exact>) -> SparseVec<Pair, Exact> {
        let mut out = SparseVec::new();
        for (p, c) in &v.terms {
            for (p2, c2) in self.coproduct(x, y, g, variant, p) {
                out.add_term(p2, c2 * c);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coproduct {
    /// Δe = 1⊗e + e⊗k, Δf = f⊗1 + k⁻¹⊗f
    Delta,
    /// Δ' = P∘Δ∘P
    Opposite,
}

/// π_x(g) as a sparse map on the states with |m| ≤ n_max whose images stay within n_max.
#[derive(Clone, Debug)]
pub struct GradedOperator {
    pub family: Family,
    pub sig: Signature,
    pub generator: Generator,
    pub x: Exact,
    pub shift: i64,
    pub entries: BTreeMap<State, (State, Exact)>,
}

pub fn rep_action(g: &Gqg, x: &Exact, gen: Generator, n_max: i64) -> GradedOperator {
    let shift = g.shift(gen);
    let entries = crate::spaces::enumerate_truncated(&g.sig, n_max)
        .into_iter()
        .filter(|m| total(m) + shift <= n_max)
        .filter_map(|m| g.act(x, gen, &m).map(|img| (m, img)))
        .collect();
    GradedOperator { family: g.family, sig: g.sig.clone(), generator: gen, x: x.clone(), shift, entries }
}

/// Pair domain of an operator on W⊗W.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairDomain {
    /// W_l ⊗ W_m
    Sector(i64, i64),
    /// all pairs with |a| + |b| ≤ N
    Truncated(i64),
}

impl PairDomain {
    pub fn pairs(&self, sig: &Signature) -> Result<Vec<Pair>> {
        match self {
            PairDomain::Sector(l, m) => enumerate_pair_sector(sig, &SectorKey::A(*l, *m)),
            PairDomain::Truncated(n) => Ok(pairs_truncated(sig, *n)),
        }
    }

    fn bound(&self) -> Option<i64> {
        match self {
            PairDomain::Sector(..) => None,
            PairDomain::Truncated(n) => Some(*n),
        }
    }
}

/// (π_x ⊗ π_y)Δ(g) or Δ'(g) on a pair domain, dropping images outside it.
pub fn coproduct_action(g: &Gqg, x: &Exact, y: &Exact, gen: Generator, variant: Coproduct, dom: &PairDomain) -> Result<SparseBlockOperator<Exact>> {
    let pairs = dom.pairs(&g.sig)?;
    let mut op = SparseBlockOperator::new(g.sig.clone(), format!("{variant:?}({gen})"));
    for p in &pairs {
        let imgs = g.coproduct(x, y, gen, variant, p);
        if let Some(nb) = dom.bound() {
            if imgs.iter().any(|(o, _)| total(&o.0) + total(&o.1) > nb) {
                continue;
            }
        }
        op.touch(p.clone());
        for (o, c) in imgs {
            let cur = op.get(&o, p).cloned().unwrap_or_else(Exact::zero);
            op.insert(o, p.clone(), cur + c);
        }
    }
    Ok(op)
}

// ---- defining relations ----

#[derive(Clone, Debug)]
pub struct RelationReport {
    pub states: usize,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl RelationReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn word_vec(g: &Gqg, x: &Exact, word: &[Generator], m: &State) -> SparseVec<State, Exact> {
    let mut v = SparseVec::new();
    if let Some((s, c)) = g.act_word(x, word, m) {
        v.add_term(s, c);
    }
    v
}

/// Checks the defining relations exactly on every state with |m| ≤ n_max.
pub fn verify_defining_relations(g: &Gqg, x: &Exact, n_max: i64) -> Result<RelationReport> {
    let states = crate::spaces::enumerate_truncated(&g.sig, n_max);
    if states.is_empty() {
        return Err(Error::Domain("truncation contains no states".into()));
    }
    let nt = g.ntilde();
    let results: Vec<(usize, Vec<String>)> = states
        .par_iter()
        .map(|m| {
            let mut checks = 0;
            let mut fails = Vec::new();
            let mut expect = |name: String, lhs: SparseVec<State, Exact>, rhs: SparseVec<State, Exact>| {
                checks += 1;
                if !lhs.sub(&rhs).is_zero() {
                    fails.push(format!("{name} on |{}⟩", crate::spaces::join(m)));
                }
            };
            for i in 0..=nt {
                let (k, ki) = (Generator::k(i), Generator::kinv(i));
                expect(format!("k{i} k{i}^-1"), word_vec(g, x, &[k, ki], m), SparseVec::basis(m.clone(), Exact::one()));
                expect(format!("k{i}^-1 k{i}"), word_vec(g, x, &[ki, k], m), SparseVec::basis(m.clone(), Exact::one()));
                for j in 0..=nt {
                    let (kj, ej, fj) = (Generator::k(j), Generator::e(j), Generator::f(j));
                    let dij = &g.cartan.d[i][j];
                    expect(format!("[k{i},k{j}]"), word_vec(g, x, &[k, kj], m), word_vec(g, x, &[kj, k], m));
                    expect(format!("k{i} e{j}"), word_vec(g, x, &[k, ej], m), word_vec(g, x, &[ej, k], m).scaled(dij));
                    expect(format!("k{i} f{j}"), word_vec(g, x, &[k, fj], m), word_vec(g, x, &[fj, k], m).scaled(&dij.inv()));
                    let ei = Generator::e(i);
                    let comm = word_vec(g, x, &[ei, fj], m).sub(&word_vec(g, x, &[fj, ei], m));
                    let rhs = if i == j {
                        let ri = &g.cartan.r[i];
                        let den = ri - &ri.inv();
                        word_vec(g, x, &[k], m).sub(&word_vec(g, x, &[ki], m)).scaled(&den.inv())
                    } else {
                        SparseVec::new()
                    };
                    expect(format!("[e{i},f{j}]"), comm, rhs);
                }
            }
            (checks, fails)
        })
        .collect();
    let mut rep = RelationReport { states: states.len(), checks: 0, failures: Vec::new() };
    for (c, f) in results {
        rep.checks += c;
        rep.failures.extend(f);
    }
    Ok(rep)
}

// ---- intertwiner solver ----

#[derive(Clone, Debug)]
pub struct SolverOutput {
    /// R(z) for family A, R̃(z) for family B (interior columns only).
    pub r: SparseBlockOperator<Exact>,
    /// R(z) before the gauge.
    pub raw: SparseBlockOperator<Exact>,
    pub unknowns: usize,
    pub equations: usize,
    pub rank: usize,
    pub nullity: usize,
    pub interior_nullity: usize,
    pub interior_bound: Option<i64>,
}

fn weight_key(g: &Gqg, p: &Pair) -> Vec<String> {
    (0..=g.ntilde()).map(|r| (g.k_eigen(r, &p.0) * g.k_eigen(r, &p.1)).to_string()).collect()
}

/// Solves Δ'(g)R = RΔ(g) for all generators on the given domain.
///
/// For truncated domains the equations are kept only when their images stay
/// inside the truncation, and the solution is required to be unique up to scale
/// on the columns with |i| + |j| ≤ N - margin.
pub fn solve_intertwiner(g: &Gqg, x: &Exact, y: &Exact, dom: &PairDomain, margin: i64) -> Result<SolverOutput> {
    if g.family == Family::A && matches!(dom, PairDomain::Truncated(_)) {
        return Err(Error::Usage("family A is solved on a sector (l,m)".into()));
    }
    if g.family == Family::B && matches!(dom, PairDomain::Sector(..)) {
        return Err(Error::Usage("family B is solved on a truncation".into()));
    }
    let pairs = dom.pairs(&g.sig)?;
    let mut blocks: HashMap<Vec<String>, Vec<Pair>> = HashMap::new();
    for p in &pairs {
        blocks.entry(weight_key(g, p)).or_default().push(p.clone());
    }
    let mut index: HashMap<(Pair, Pair), usize> = HashMap::new();
    let mut unknowns: Vec<(Pair, Pair)> = Vec::new();
    for p in &pairs {
        for o in &blocks[&weight_key(g, p)] {
            index.insert((o.clone(), p.clone()), unknowns.len());
            unknowns.push((o.clone(), p.clone()));
        }
    }
    let bound = dom.bound();
    let ptotal = |p: &Pair| total(&p.0) + total(&p.1);
    let gens: Vec<Generator> = (0..=g.ntilde()).flat_map(|r| [Generator::e(r), Generator::f(r)]).collect();
    let jobs: Vec<(Generator, &Pair)> = gens.iter().flat_map(|gen| pairs.iter().map(move |p| (*gen, p))).collect();
    let rows: Vec<SparseRow> = jobs
        .par_iter()
        .flat_map_iter(|&(gen, v)| {
            let mut eqs: BTreeMap<Pair, SparseRow> = BTreeMap::new();
            let keep = bound.is_none_or(|nb| ptotal(v) + g.shift(gen) <= nb);
            if keep {
                let mut add = |w: Pair, col: usize, c: Exact| {
                    let row = eqs.entry(w).or_default();
                    let e = row.entry(col).or_insert_with(Exact::zero);
                    *e = &*e + &c;
                };
                for u in &blocks[&weight_key(g, v)] {
                    let col = index[&(u.clone(), v.clone())];
                    for (w, d) in g.coproduct(x, y, gen, Coproduct::Opposite, u) {
                        add(w, col, d);
                    }
                }
                for (v2, c) in g.coproduct(x, y, gen, Coproduct::Delta, v) {
                    for w in &blocks[&weight_key(g, &v2)] {
                        let col = index[&(w.clone(), v2.clone())];
                        add(w.clone(), col, -c.clone());
                    }
                }
            }
            eqs.into_values().map(|mut r| {
                r.retain(|_, c| !c.is_zero());
                r
            })
        })
        .filter(|r| !r.is_empty())
        .collect();
    let mut rref = Rref::new();
    for r in &rows {
        rref.push(r.clone());
    }
    let ns = rref.nullspace(unknowns.len());
    let interior_bound = bound.map(|nb| nb - margin);
    let interior = |col: usize| interior_bound.is_none_or(|ib| ptotal(&unknowns[col].1) <= ib);
    let projected: Vec<SparseRow> = ns
        .iter()
        .map(|(_, v)| v.iter().filter(|(k, _)| interior(**k)).map(|(k, c)| (*k, c.clone())).collect())
        .collect();
    let interior_nullity = rank_of(projected.iter().cloned());
    if interior_nullity != 1 {
        return Err(Error::Solver(format!(
            "interior solution space has dimension {interior_nullity} ({} unknowns, rank {}, nullity {})",
            unknowns.len(),
            rref.rank(),
            ns.len()
        )));
    }
    let sol = projected.into_iter().find(|v| !v.is_empty()).unwrap();
    let norm_pair = match g.family {
        Family::A => {
            let PairDomain::Sector(l, m) = dom else { unreachable!() };
            normalization_vector(&g.sig, *l, *m)
                .ok_or_else(|| Error::Solver(format!("no normalization vector for sector ({l},{m})")))?
        }
        Family::B => (vec![0; g.n()], vec![0; g.n()]),
    };
    let ncol = index
        .get(&(norm_pair.clone(), norm_pair.clone()))
        .ok_or_else(|| Error::Solver("normalization entry is not an unknown".into()))?;
    let nv = sol.get(ncol).cloned().unwrap_or_else(Exact::zero);
    if nv.is_zero() {
        return Err(Error::Solver("normalization entry vanishes on the solution".into()));
    }
    let scale = nv.inv();
    let mut raw = SparseBlockOperator::new(g.sig.clone(), format!("R_{}", g.family));
    for p in &pairs {
        if interior_bound.is_none_or(|ib| ptotal(p) <= ib) {
            raw.touch(p.clone());
        }
    }
    for (k, c) in &sol {
        let (o, i) = &unknowns[*k];
        raw.insert(o.clone(), i.clone(), c * &scale);
    }
    let r = match g.family {
        Family::A => raw.clone(),
        Family::B => gauge_tilde(&g.qpt, &ExactBackend, &raw, GaugeSide::R),
    };
    Ok(SolverOutput {
        r,
        raw,
        unknowns: unknowns.len(),
        equations: rows.len(),
        rank: rref.rank(),
        nullity: ns.len(),
        interior_nullity,
        interior_bound,
    })
}

// ---- commutativity of a given operator ----

#[derive(Clone, Debug)]
pub struct IntertwiningReport {
    pub columns: usize,
    pub checks: usize,
    pub max_residual: f64,
    pub exact_zero: bool,
    pub worst: Option<String>,
}

/// Residual of Δ'(g)S = SΔ(g) on every column of S whose Δ(g)-image columns are known.
pub fn intertwining_residual<B: Backend>(g: &Gqg, be: &B, x: &Exact, y: &Exact, op: &SparseBlockOperator<B::S>) -> IntertwiningReport {
    let cols: Vec<&Pair> = op.cols.keys().collect();
    let gens = g.generators();
    let results: Vec<(usize, f64, bool, Option<String>)> = cols
        .par_iter()
        .map(|v| {
            let mut checks = 0;
            let mut worst = 0.0f64;
            let mut zero = true;
            let mut label = None;
            for gen in &gens {
                let dv = g.coproduct(x, y, *gen, Coproduct::Delta, v);
                if dv.iter().any(|(p, _)| !op.has_column(p)) {
                    continue;
                }
                let mut rhs = SparseVec::<Pair, B::S>::new();
                for (p, c) in &dv {
                    for (o, s) in &op.cols[p] {
                        rhs.add_term(o.clone(), s.clone() * &be.lift(c));
                    }
                }
                let mut lhs = SparseVec::<Pair, B::S>::new();
                for (o, s) in &op.cols[*v] {
                    for (w, c) in g.coproduct(x, y, *gen, Coproduct::Opposite, o) {
                        lhs.add_term(w, s.clone() * &be.lift(&c));
                    }
                }
                let d = lhs.sub(&rhs);
                checks += 1;
                zero &= d.is_zero();
                let r = d.max_abs();
                if r > worst {
                    worst = r;
                    label = Some(format!("{gen} on {} | {}", crate::spaces::join(&v.0), crate::spaces::join(&v.1)));
                }
            }
            (checks, worst, zero, label)
        })
        .collect();
    let mut rep = IntertwiningReport { columns: cols.len(), checks: 0, max_residual: 0.0, exact_zero: true, worst: None };
    for (c, w, z, l) in results {
        rep.checks += c;
        rep.exact_zero &= z;
        if w > rep.max_residual {
            rep.max_residual = w;
            rep.worst = l;
        }
    }
    rep
}

/// Union of operators on disjoint column sets.
pub fn merge_ops<S: Scalar>(ops: impl IntoIterator<Item = SparseBlockOperator<S>>) -> Option<SparseBlockOperator<S>> {
    let mut it = ops.into_iter();
    let mut acc = it.next()?;
    for op in it {
        for (k, c) in op.cols {
            acc.cols.entry(k).or_default().extend(c);
        }
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::build_str;

    fn qp() -> QPoint {
        QPoint::from_ratio(1, 2).unwrap()
    }

    fn sig(s: &str) -> Signature {
        Signature::parse(s).unwrap()
    }

    #[test]
    fn cartan_examples() {
        let q = qp();
        let s = sig("10");
        let c = cartan_data(&q, Family::A, &s).unwrap();
        let (q1, q2) = (q_site(&q, &s, 1), q_site(&q, &s, 2));
        assert_eq!(c.d[0][0], &q1 * &q2);
        assert_eq!(c.d[0][1], (&q1 * &q2).inv());
        let s3 = sig("011");
        let c = cartan_data(&q, Family::A, &s3).unwrap();
        assert_eq!(c.d[0][0], q_site(&q, &s3, 3) * q_site(&q, &s3, 1));
        assert_eq!(c.d[0][2], q_site(&q, &s3, 3).inv());
        let b = cartan_data(&q, Family::B, &s3).unwrap();
        assert_eq!(b.r, vec![q.p(), q.q(), q.q(), q.p()]);
        assert_eq!(b.d[3][3], q_site(&q, &s3, 3));
        assert!(b.d[0][3].is_one());
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(b.d[i][j], b.d[j][i]);
            }
        }
    }

    #[test]
    fn action_examples() {
        let q = qp();
        let x = Exact::ratio(2, 3);
        let g = Gqg::new(&q, Family::B, &sig("01")).unwrap();
        assert_eq!(g.act(&x, Generator::e(0), &vec![0, 0]), Some((vec![1, 0], x.clone())));
        let g1 = Gqg::new(&q, Family::B, &sig("10")).unwrap();
        assert_eq!(g1.act(&x, Generator::e(0), &vec![1, 0]), None);
        let ga = Gqg::new(&q, Family::A, &sig("01")).unwrap();
        let m = vec![2, 1];
        let want = q_site(&q, &ga.sig, 1).pow(-2) * q_site(&q, &ga.sig, 2).pow(1);
        assert_eq!(ga.act(&x, Generator::k(1), &m).unwrap().1, want);
    }

    #[test]
    fn relations_hold() {
        let q = qp();
        let x = Exact::ratio(3, 7);
        for (fam, s) in [(Family::A, "10"), (Family::A, "0110"), (Family::A, "11"), (Family::B, "10"), (Family::B, "011"), (Family::B, "1")] {
            let g = Gqg::new(&q, fam, &sig(s)).unwrap();
            let rep = verify_defining_relations(&g, &x, 3).unwrap();
            assert!(rep.ok(), "{fam} {s}: {:?}", &rep.failures[..rep.failures.len().min(5)]);
        }
    }

    #[test]
    fn en_fn_commutator_eigenvalue() {
        let q = qp();
        let g = Gqg::new(&q, Family::B, &sig("0")).unwrap();
        let x = Exact::one();
        let m = vec![2];
        let ef = g.act_word(&x, &[Generator::e(1), Generator::f(1)], &m).unwrap().1;
        let fe = g.act_word(&x, &[Generator::f(1), Generator::e(1)], &m).unwrap().1;
        let (p, qn) = (q.p(), q.q());
        let want = (&p * &qn.pow(-2) - p.inv() * qn.pow(2)) / (&p - &p.inv());
        assert_eq!(ef - fe, want);
    }

    #[test]
    fn solver_matches_trace_family_a() {
        let q = qp();
        let (x, y) = (Exact::ratio(3, 5), Exact::one());
        for (s, l, m) in [("10", 1, 1), ("10", 2, 1), ("110", 1, 2), ("00", 2, 1), ("11", 1, 1), ("01", 2, 2)] {
            let g = Gqg::new(&q, Family::A, &sig(s)).unwrap();
            let sol = solve_intertwiner(&g, &x, &y, &PairDomain::Sector(l, m), 0).unwrap();
            let st = build_str(&q, &sig(s), &(&x / &y), l, m).unwrap();
            assert!(sol.r.first_mismatch(&st, &ExactBackend).is_none(), "{s} ({l},{m})");
            assert!(st.first_mismatch(&sol.r, &ExactBackend).is_none(), "{s} ({l},{m})");
        }
    }

    #[test]
    fn solver_depends_on_ratio() {
        let q = qp();
        let g = Gqg::new(&q, Family::A, &sig("10")).unwrap();
        let a = solve_intertwiner(&g, &Exact::ratio(3, 5), &Exact::one(), &PairDomain::Sector(2, 1), 0).unwrap();
        let b = solve_intertwiner(&g, &Exact::ratio(6, 35), &Exact::ratio(2, 7), &PairDomain::Sector(2, 1), 0).unwrap();
        assert!(a.r.first_mismatch(&b.r, &ExactBackend).is_none());
    }

    #[test]
    fn solver_family_b_example() {
        let q = qp();
        let g = Gqg::new(&q, Family::B, &sig("10")).unwrap();
        let z = Exact::ratio(3, 5);
        let sol = solve_intertwiner(&g, &z, &Exact::one(), &PairDomain::Truncated(4), 1).unwrap();
        let col = (vec![0, 0], vec![1, 0]);
        let qq = q.q();
        let one = Exact::one();
        let a = sol.r.get(&(vec![1, 0], vec![0, 0]), &col).unwrap();
        assert_eq!(*a, (&one + &qq) * &z / (&one + &qq * &z));
        let b = sol.r.get(&col, &col).unwrap();
        assert_eq!(*b, -(&qq * (&one - &z)) / (&one + &qq * &z));
        for (_, _, v) in sol.r.entries() {
            assert!(v.is_real());
        }
    }

    #[test]
    fn trace_commutes_mixed_signature() {
        let q = qp();
        let (x, y) = (Exact::ratio(2, 7), Exact::one());
        let g = Gqg::new(&q, Family::A, &sig("010")).unwrap();
        let st = build_str(&q, &sig("010"), &x, 2, 1).unwrap();
        let rep = intertwining_residual(&g, &ExactBackend, &x, &y, &st);
        assert!(rep.exact_zero && rep.checks > 0, "{rep:?}");
    }
}

#[cfg(test)]
mod family_b_tests {
    use super::*;
    use crate::layer::{build_sst, SstParams};
    use crate::scalars::FloatBackend;
    use crate::spaces::sum_vectors;

    #[test]
    fn solver_matches_boundary_build() {
        let q = QPoint::from_ratio(1, 2).unwrap();
        let z = Exact::ratio(3, 5);
        for (s, nmax) in [("10", 4), ("0", 4), ("1", 4), ("110", 3), ("100", 3)] {
            let sg = Signature::parse(s).unwrap();
            let g = Gqg::new(&q, Family::B, &sg).unwrap();
            let sol = solve_intertwiner(&g, &z, &Exact::one(), &PairDomain::Truncated(nmax), 1).unwrap();
            let ib = sol.interior_bound.unwrap();
            let params = SstParams::new(1, 1, 220, 256);
            let ops = sum_vectors(&sg, ib)
                .into_iter()
                .map(|sv| build_sst(&q, &sg, &z, &SectorKey::B(sv), &params).unwrap().op);
            let st = merge_ops(ops).unwrap();
            let be = FloatBackend { precision: 256 };
            let lifted = sol.r.map_values(|_, _, v| be.lift(v));
            let d = lifted.max_diff(&st, &be.zero()).max(st.max_diff(&lifted, &be.zero()));
            assert!(d < 1e-30, "{s}");
        }
    }
}
