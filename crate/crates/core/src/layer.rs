//! Matrix-product solutions S^tr(z) and S^{s,t}(z) of the Yang-Baxter equation.
//!
//! Every entry is a single sum over the auxiliary index c₀ of the first layer:
//! conservation fixes the other auxiliary indices as c₀ plus offsets. Each
//! layer factor is a Laurent polynomial in u = q^{c₀}, so the trace sum
//! collapses to finitely many geometric series.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::laurent::LaurentInT;
use crate::scalars::{poch_infinite_float, Backend, Exact, Float, QPoint, Scalar};
use crate::spaces::{
    enumerate_pair_sector, enumerate_wl, pair_sum, pairs_with_sum, total, unit, Pair, SectorKey, Signature,
    SparseBlockOperator, SparseVec, State,
};
use crate::threed::element_laurent;

/// Auxiliary offsets D_0 = 0, D_k = D_{k-1} + b_k - j_k.
pub fn chain_offsets(b: &[i64], j: &[i64]) -> Vec<i64> {
    let mut d = vec![0];
    for (x, y) in b.iter().zip(j) {
        d.push(d.last().unwrap() + x - y);
    }
    d
}

/// Product of layer factors as a Laurent polynomial in q^{C₀}, where C₀ is the
/// auxiliary index entering the first layer from above.
pub fn layer_product(qpt: &QPoint, sig: &Signature, a: &[i64], b: &[i64], i: &[i64], j: &[i64]) -> (LaurentInT, Vec<i64>) {
    let d = chain_offsets(b, j);
    let mut p = LaurentInT::constant(Exact::one());
    for k in 0..sig.n() {
        let f = element_laurent(qpt, sig.eps()[k], a[k], b[k], i[k], j[k], d[k], d[k + 1]);
        if f.is_zero() {
            return (LaurentInT::zero(), d);
        }
        p = p.mul(&f);
    }
    (p, d)
}

fn outputs_for(sig: &Signature, input: &Pair, keep_totals: bool) -> Vec<Pair> {
    let s = pair_sum(input);
    let l = total(&input.0);
    pairs_with_sum(sig, &s).into_iter().filter(|p| !keep_totals || total(&p.0) == l).collect()
}

// ---- trace construction ----

#[derive(Clone, Debug)]
struct TraceEntry {
    out: Pair,
    inp: Pair,
    poly: LaurentInT,
    c0min: i64,
}

/// The z-independent data of one sector block of S^tr.
#[derive(Clone, Debug)]
pub struct TraceBlock {
    pub sig: Signature,
    pub l: i64,
    pub m: i64,
    columns: Vec<Pair>,
    entries: Vec<TraceEntry>,
}

impl TraceBlock {
    pub fn new(qpt: &QPoint, sig: &Signature, l: i64, m: i64) -> Result<Self> {
        let columns = enumerate_pair_sector(sig, &SectorKey::A(l, m))?;
        let entries: Vec<TraceEntry> = columns
            .par_iter()
            .flat_map_iter(|inp| {
                outputs_for(sig, inp, true).into_iter().filter_map(move |out| {
                    let (poly, d) = layer_product(qpt, sig, &out.0, &out.1, &inp.0, &inp.1);
                    if poly.is_zero() || *d.last().unwrap() != 0 {
                        return None;
                    }
                    let c0min = (-d.iter().min().copied().unwrap()).max(0);
                    Some(TraceEntry { out, inp: inp.clone(), poly, c0min })
                })
            })
            .collect();
        Ok(TraceBlock { sig: sig.clone(), l, m, columns, entries })
    }

    /// The block at a given z, normalized by ρ(z).
    pub fn evaluate(&self, qpt: &QPoint, z: &Exact) -> Result<SparseBlockOperator<Exact>> {
        let rho = rho_trace(qpt, &self.sig, z, self.l, self.m)?;
        let values: Vec<Exact> = self
            .entries
            .par_iter()
            .map(|e| geometric_sum(qpt, z, &e.poly, e.c0min).map(|v| v * &rho))
            .collect::<Result<_>>()?;
        let mut op = SparseBlockOperator::new(self.sig.clone(), format!("Str{}", SectorKey::A(self.l, self.m)));
        for c in &self.columns {
            op.touch(c.clone());
        }
        for (e, v) in self.entries.iter().zip(values) {
            op.insert(e.out.clone(), e.inp.clone(), v);
        }
        Ok(op)
    }
}

/// Σ_{c ≥ c_min} z^c P(q^c) for a polynomial P, summed in closed form.
pub fn geometric_sum(qpt: &QPoint, z: &Exact, poly: &LaurentInT, c_min: i64) -> Result<Exact> {
    let mut acc = Exact::zero();
    for (e, p) in &poly.terms {
        let r = z * &qpt.q_pow(*e);
        let den = Exact::one() - &r;
        if den.is_zero() {
            return Err(Error::Pole(format!("z = q^{} makes a geometric series diverge", -e)));
        }
        acc = acc + p * &r.pow(c_min) / den;
    }
    Ok(acc)
}

/// Position (0-based) of the reference site in the normalization |l e_i⟩⊗|m e_i⟩.
pub fn norm_site(sig: &Signature) -> Option<usize> {
    (0..sig.n()).rev().find(|&k| sig.eps()[k] == 0)
}

/// ρ(z) fixing the trace normalization of the (l,m) block.
pub fn rho_trace(qpt: &QPoint, sig: &Signature, z: &Exact, l: i64, m: i64) -> Result<Exact> {
    if sig.all_ones() {
        let sign = if (m - l).max(0) % 2 == 0 { Exact::one() } else { Exact::int(-1) };
        return Ok(sign * qpt.q_pow(-(m - l).max(0)) * (Exact::one() - qpt.q_pow((l - m).abs()) * z));
    }
    if z.is_zero() {
        return Err(Error::Domain("z = 0 is outside the domain of the trace normalization".into()));
    }
    let num = z.pow(-m) * qpt.poch(&(qpt.q_pow(l - m) * z), 2, m + 1);
    let den = qpt.poch(&(qpt.q_pow(l - m + 2) * z.inv()), 2, m);
    if den.is_zero() {
        return Err(Error::Pole(format!("normalization of sector ({l},{m}) has a pole at this z")));
    }
    Ok(num / den)
}

/// S^tr(z) on W_l ⊗ W_m.
pub fn build_str(qpt: &QPoint, sig: &Signature, z: &Exact, l: i64, m: i64) -> Result<SparseBlockOperator<Exact>> {
    TraceBlock::new(qpt, sig, l, m)?.evaluate(qpt, z)
}

/// The fixed vector of the normalization condition for the (l,m) block.
pub fn normalization_vector(sig: &Signature, l: i64, m: i64) -> Option<Pair> {
    let n = sig.n();
    if sig.all_ones() {
        if l > n as i64 || m > n as i64 {
            return None;
        }
        let tail = |k: i64| -> State { (0..n).map(|s| i64::from(s as i64 >= n as i64 - k)).collect() };
        return Some((tail(l), tail(m)));
    }
    let k = norm_site(sig)?;
    let e = unit(n, k);
    Some((e.iter().map(|x| x * l).collect(), e.iter().map(|x| x * m).collect()))
}

/// Normalization vector using an arbitrary Fock site k.
pub fn normalization_vector_at(sig: &Signature, k: usize, l: i64, m: i64) -> Option<Pair> {
    if sig.eps().get(k) != Some(&0) {
        return None;
    }
    let e = unit(sig.n(), k);
    Some((e.iter().map(|x| x * l).collect(), e.iter().map(|x| x * m).collect()))
}

// ---- boundary construction ----

#[derive(Clone, Copy, Debug)]
pub struct SstParams {
    pub s: u8,
    pub t: u8,
    /// Number of c₀ terms summed beyond the first admissible one.
    pub cutoff: i64,
    pub precision: usize,
    pub tolerance: f64,
}

impl SstParams {
    pub fn new(s: u8, t: u8, cutoff: i64, precision: usize) -> Self {
        SstParams { s, t, cutoff, precision, tolerance: 2f64.powi(-(precision as i32) / 2) }
    }
}

#[derive(Clone, Debug)]
struct BoundaryEntry {
    out: Pair,
    inp: Pair,
    poly: LaurentInT,
    dn: i64,
    c0min: i64,
}

#[derive(Clone, Debug)]
pub struct BoundaryBuild {
    pub op: SparseBlockOperator<Float>,
    /// Estimated absolute contribution of the neglected c₀ terms, maximized over entries.
    pub tail_estimate: f64,
    pub terms: i64,
}

fn sst_entry_data(qpt: &QPoint, sig: &Signature, s: i64, t: i64, out: &Pair, inp: &Pair) -> Option<BoundaryEntry> {
    let (poly, d) = layer_product(qpt, sig, &out.0, &out.1, &inp.0, &inp.1);
    if poly.is_zero() {
        return None;
    }
    let dn = *d.last().unwrap();
    let need = (-d.iter().min().copied().unwrap()).max(0);
    let mut c0min = (need + s - 1) / s;
    // C_n = s c₀ + D_n must be divisible by t
    let mut tries = 0;
    while (s * c0min + dn).rem_euclid(t) != 0 {
        c0min += 1;
        tries += 1;
        if tries > t {
            return None;
        }
    }
    Some(BoundaryEntry { out: out.clone(), inp: inp.clone(), poly, dn, c0min })
}

/// (q^b; q^b)_m for m = 0..=len as floats.
fn poch_table(qf: &Float, b: i64, len: usize, prec: usize) -> Vec<Float> {
    let one = Float::from_exact(&Exact::one(), prec);
    let qb = (0..b).fold(one.clone(), |acc, _| acc * qf);
    let mut out = Vec::with_capacity(len + 1);
    out.push(one.clone());
    let mut pw = one.clone();
    for _ in 0..len {
        pw = pw * &qb;
        let next = out.last().unwrap().clone() * (one.clone() - &pw);
        out.push(next);
    }
    out
}

/// S^{s,t}(z) on a sector of fixed a + b, as a truncated c₀-series.
pub fn build_sst(qpt: &QPoint, sig: &Signature, z: &Exact, key: &SectorKey, params: &SstParams) -> Result<BoundaryBuild> {
    let (s, t) = (params.s as i64, params.t as i64);
    if !(1..=2).contains(&s) || !(1..=2).contains(&t) {
        return Err(Error::Domain(format!("(s,t) = ({s},{t}) must lie in {{1,2}}²")));
    }
    if !matches!(key, SectorKey::B(_)) {
        return Err(Error::Domain(format!("boundary builds need a sum-vector sector, got {key}")));
    }
    if params.cutoff < 2 {
        return Err(Error::Domain("cutoff must be at least 2".into()));
    }
    let prec = params.precision;
    let columns = enumerate_pair_sector(sig, key)?;
    let entries: Vec<BoundaryEntry> = columns
        .par_iter()
        .flat_map_iter(|inp| {
            outputs_for(sig, inp, false)
                .into_iter()
                .filter_map(move |out| sst_entry_data(qpt, sig, s, t, &out, inp))
        })
        .collect();

    let qf = Float::from_exact(&qpt.q(), prec);
    let q64 = qpt.q().to_f64().0;
    let e_min = entries.iter().filter_map(|e| e.poly.min_exponent()).min().unwrap_or(0);
    let guard = z.abs_f64() * q64.powf((s * e_min) as f64);
    if guard >= 1.0 {
        return Err(Error::Convergence(format!("|z| q^(s e_min) = {guard} is not below 1")));
    }

    let c0max = entries.iter().map(|e| e.c0min).max().unwrap_or(0) + params.cutoff;
    let dmax = entries.iter().map(|e| e.dn.abs()).max().unwrap_or(0);
    let p2 = poch_table(&qf, 2, (s * c0max) as usize, prec);
    let ps = poch_table(&qf, s * s, c0max as usize, prec);
    let pt = poch_table(&qf, t * t, ((s * c0max + dmax) / t + 1) as usize, prec);
    let zf = Float::from_exact(z, prec);

    let mut keys: Vec<(i64, i64, i64)> = entries
        .iter()
        .flat_map(|en| en.poly.terms.keys().map(move |e| (*e, en.dn, en.c0min)))
        .collect();
    keys.sort();
    keys.dedup();
    let sums: HashMap<(i64, i64, i64), (Float, f64)> = keys
        .par_iter()
        .map(|&(e, dn, c0min)| {
            let ratio = qf_pow(&qf, s * e, prec);
            let mut acc = Float::zero(prec);
            let mut zc = pow_float(&zf, c0min, prec);
            let mut qc = pow_float(&ratio, c0min, prec);
            let mut last: Vec<(i64, f64)> = Vec::new();
            for c0 in c0min..=c0min + params.cutoff {
                let cn_num = s * c0 + dn;
                if cn_num >= 0 && cn_num % t == 0 {
                    let w = zc.clone() * &p2[(s * c0) as usize] / (ps[c0 as usize].clone() * &pt[(cn_num / t) as usize]);
                    let term = w * &qc;
                    last.push((c0, term.abs_f64()));
                    acc = acc + term;
                }
                zc = zc * &zf;
                qc = qc * &ratio;
            }
            let tail = tail_bound(&last);
            ((e, dn, c0min), (acc, tail))
        })
        .collect();

    let rho = if (s, t) == (1, 1) {
        let one = Float::from_exact(&Exact::one(), prec);
        let num = poch_infinite_float(&zf, &qf, prec);
        let den = poch_infinite_float(&(-(qf.clone() * &zf)), &qf, prec);
        if den.is_zero() {
            return Err(Error::Pole("(-qz; q)_∞ vanishes".into()));
        }
        one * num / den
    } else {
        Float::from_exact(&Exact::one(), prec)
    };

    let mut op = SparseBlockOperator::new(sig.clone(), format!("S{s}{t}{key}"));
    for c in &columns {
        op.touch(c.clone());
    }
    let mut worst_tail = 0.0f64;
    for en in &entries {
        let mut v = Float::zero(prec);
        let mut tail = 0.0;
        for (e, p) in &en.poly.terms {
            let (g, tl) = &sums[&(*e, en.dn, en.c0min)];
            if tl.is_infinite() {
                return Err(Error::Convergence(format!("c₀-series for exponent {e} does not decay")));
            }
            v = v + Float::from_exact(p, prec) * g;
            tail += p.abs_f64() * tl;
        }
        tail *= rho.abs_f64();
        worst_tail = worst_tail.max(tail);
        op.insert(en.out.clone(), en.inp.clone(), v * &rho);
    }
    if worst_tail > params.tolerance {
        return Err(Error::Convergence(format!(
            "tail estimate {worst_tail:e} exceeds tolerance {:e}; raise the cutoff",
            params.tolerance
        )));
    }
    Ok(BoundaryBuild { op, tail_estimate: worst_tail, terms: params.cutoff + 1 })
}

fn qf_pow(qf: &Float, k: i64, prec: usize) -> Float {
    pow_float(qf, k, prec)
}

fn pow_float(x: &Float, k: i64, prec: usize) -> Float {
    let mut acc = Float::from_exact(&Exact::one(), prec);
    let mut base = x.clone();
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * &base;
        }
        base = base.clone() * &base;
        e >>= 1;
    }
    if k < 0 {
        Float::from_exact(&Exact::one(), prec) / acc
    } else {
        acc
    }
}

/// Geometric tail bound from the last few terms; infinite when they do not decay.
fn tail_bound(terms: &[(i64, f64)]) -> f64 {
    let tail: Vec<&(i64, f64)> = terms.iter().rev().take(5).collect();
    if tail.len() < 2 {
        return tail.first().map_or(0.0, |t| t.1);
    }
    let mut r = 0.0f64;
    for w in tail.windows(2) {
        let (c1, m1) = *w[0];
        let (c0, m0) = *w[1];
        if m0 == 0.0 {
            continue;
        }
        r = r.max((m1 / m0).powf(1.0 / (c1 - c0) as f64));
    }
    if r >= 1.0 {
        return f64::INFINITY;
    }
    tail[0].1 * r / (1.0 - r)
}

// ---- gauge ----

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeSide {
    /// (K⊗1) S (1⊗K⁻¹)
    S,
    /// (K⁻¹⊗1) R (1⊗K)
    R,
}

/// Conjugation by K|m⟩ = p^{-|m|}|m⟩ on the first output and second input.
pub fn gauge_tilde<B: Backend>(qpt: &QPoint, be: &B, op: &SparseBlockOperator<B::S>, side: GaugeSide) -> SparseBlockOperator<B::S> {
    let sgn = if side == GaugeSide::S { 1 } else { -1 };
    let mut out = op.map_values(|o, i, v| v.clone() * &be.lift(&qpt.p_pow(sgn * (total(&i.1) - total(&o.0)))));
    out.label = format!("{}~", op.label);
    out
}

// ---- equivalence map ----

/// Fock index bookkeeping for φ: (α, m₄) ⊗ (β, m₅) with α, β ∈ {0,1}.
pub type PhiState = (i64, i64, i64, i64);

/// φ(v_α⊗|m₄⟩ ⊗ v_β⊗|m₅⟩) read off the displayed operator matrix; outputs as (α', m₄', β', m₅').
pub fn phi_local(qpt: &QPoint, st: PhiState) -> Vec<(PhiState, Exact)> {
    let (al, m4, be, m5) = st;
    let q = |k: i64| qpt.q_pow(k);
    let one = Exact::one();
    let mut out = Vec::new();
    match (al, be) {
        (0, 0) => out.push(((0, m4, 0, m5), &one + q(m4 + m5))),
        (1, 1) => out.push(((1, m4, 1, m5), &one + q(2 + m4 + m5))),
        (0, 1) => {
            out.push(((0, m4, 1, m5), q(m4) - q(1 + m5)));
            if m4 > 0 {
                out.push(((1, m4 - 1, 0, m5 + 1), &one - q(2 * m4)));
            }
        }
        (1, 0) => {
            if m5 > 0 {
                out.push(((0, m4 + 1, 1, m5 - 1), &one - q(2 * m5)));
            }
            out.push(((1, m4, 0, m5), q(m5) - q(1 + m4)));
        }
        _ => {}
    }
    out.retain(|(_, c)| !c.is_zero());
    out
}

/// Diagonal of φ².
pub fn phi_square_diag(qpt: &QPoint, st: PhiState) -> Exact {
    let (al, m4, be, m5) = st;
    let one = Exact::one();
    let f = match (al, be) {
        (0, 0) => &one + qpt.q_pow(m4 + m5),
        (1, 1) => &one + qpt.q_pow(2 + m4 + m5),
        _ => &one - qpt.q_pow(1 + m4 + m5),
    };
    &f * &f
}

/// φ as the trace over the first space of L₁₂₄ L₁₃₅.
pub fn phi_from_trace(qpt: &QPoint, st: PhiState, out: PhiState) -> Exact {
    let (al, m4, be, m5) = st;
    let (al2, m4b, be2, m5b) = out;
    let mut acc = Exact::zero();
    for x in 0..=1 {
        for y in 0..=1 {
            acc = acc
                + crate::threed::l_element(qpt, x, al2, m4b, y, al, m4)
                    * crate::threed::l_element(qpt, y, be2, m5b, x, be, m5);
        }
    }
    acc
}

fn phi_pair(qpt: &QPoint, p: &Pair, pos: usize, v_first: bool, inverse: bool) -> Vec<(Pair, Exact)> {
    let (a, b) = p;
    let (vs, fs) = if v_first { (pos, pos + 1) } else { (pos + 1, pos) };
    let st = (a[vs], a[fs], b[vs], b[fs]);
    let scale = if inverse { phi_square_diag(qpt, st).inv() } else { Exact::one() };
    phi_local(qpt, st)
        .into_iter()
        .map(|((al, m4, be, m5), c)| {
            let mut a2 = a.clone();
            let mut b2 = b.clone();
            a2[fs] = al;
            a2[vs] = m4;
            b2[fs] = be;
            b2[vs] = m5;
            ((a2, b2), c * &scale)
        })
        .collect()
}

fn swap_at(p: &Pair, pos: usize) -> Pair {
    let mut a = p.0.clone();
    let mut b = p.1.clone();
    a.swap(pos, pos + 1);
    b.swap(pos, pos + 1);
    (a, b)
}

/// Φ S Φ⁻¹ for the transposition of sites pos, pos+1 (0-based); the result lives on the swapped signature.
pub fn phi_equivalence<B: Backend>(
    qpt: &QPoint,
    be: &B,
    pos: usize,
    op: &SparseBlockOperator<B::S>,
) -> Result<SparseBlockOperator<B::S>> {
    let sig = &op.sig;
    if pos + 1 >= sig.n() {
        return Err(Error::Domain(format!("position {pos} has no right neighbour in {sig}")));
    }
    let v_first = match (sig.eps()[pos], sig.eps()[pos + 1]) {
        (1, 0) => true,
        (0, 1) => false,
        _ => return Err(Error::Domain(format!("sites {pos},{} of {sig} are not a mixed pair", pos + 1))),
    };
    let target = sig.swapped(pos);
    let mut out = SparseBlockOperator::new(target, format!("{}^phi", op.label));
    for src_col in op.cols.keys() {
        let col = swap_at(src_col, pos);
        // Φ⁻¹ maps the target form back to the source form
        let mut v = SparseVec::<Pair, B::S>::new();
        for (p, c) in phi_pair(qpt, &col, pos, !v_first, v_first) {
            v.add_term(p, be.lift(&c));
        }
        let sv = op.apply(&v)?;
        out.touch(col.clone());
        let mut img = SparseVec::<Pair, B::S>::new();
        for (p, c) in &sv.terms {
            for (p2, c2) in phi_pair(qpt, p, pos, v_first, !v_first) {
                img.add_term(p2, c.clone() * &be.lift(&c2));
            }
        }
        for (o, c) in img.terms {
            out.insert(o, col.clone(), c);
        }
    }
    Ok(out)
}

// ---- Yang-Baxter check ----

pub type Triple = (State, State, State);

/// Source of pairwise operators for the Yang-Baxter check.
pub trait PairOperatorSource {
    type S: Scalar;
    fn key_of(&self, a: &State, b: &State) -> SectorKey;
    fn build(&self, z: &Exact, key: &SectorKey) -> Result<SparseBlockOperator<Self::S>>;
}

pub struct TraceSource {
    pub qpt: QPoint,
    pub sig: Signature,
}

impl PairOperatorSource for TraceSource {
    type S = Exact;
    fn key_of(&self, a: &State, b: &State) -> SectorKey {
        SectorKey::A(total(a), total(b))
    }
    fn build(&self, z: &Exact, key: &SectorKey) -> Result<SparseBlockOperator<Exact>> {
        match key {
            SectorKey::A(l, m) => build_str(&self.qpt, &self.sig, z, *l, *m),
            _ => Err(Error::Domain(format!("trace builds use (l,m) sectors, got {key}"))),
        }
    }
}

pub struct BoundarySource {
    pub qpt: QPoint,
    pub sig: Signature,
    pub params: SstParams,
    pub gauge: bool,
}

impl PairOperatorSource for BoundarySource {
    type S = Float;
    fn key_of(&self, a: &State, b: &State) -> SectorKey {
        SectorKey::B(a.iter().zip(b).map(|(x, y)| x + y).collect())
    }
    fn build(&self, z: &Exact, key: &SectorKey) -> Result<SparseBlockOperator<Float>> {
        let op = build_sst(&self.qpt, &self.sig, z, key, &self.params)?.op;
        if self.gauge {
            let be = crate::scalars::FloatBackend { precision: self.params.precision };
            Ok(gauge_tilde(&self.qpt, &be, &op, GaugeSide::S))
        } else {
            Ok(op)
        }
    }
}

#[derive(Clone, Debug)]
pub struct YbeReport {
    pub triples: usize,
    pub max_residual: f64,
    pub exact_zero: bool,
    pub operators_built: usize,
}

struct OpCache<'a, P: PairOperatorSource> {
    src: &'a P,
    zs: [Exact; 3],
    ops: RefCell<HashMap<(usize, SectorKey), SparseBlockOperator<P::S>>>,
}

impl<P: PairOperatorSource> OpCache<'_, P> {
    fn column(&self, zi: usize, a: &State, b: &State) -> Result<BTreeMap<Pair, P::S>> {
        let key = self.src.key_of(a, b);
        let ck = (zi, key.clone());
        if !self.ops.borrow().contains_key(&ck) {
            let op = self.src.build(&self.zs[zi], &key)?;
            self.ops.borrow_mut().insert(ck.clone(), op);
        }
        let ops = self.ops.borrow();
        let op = &ops[&ck];
        let p = (a.clone(), b.clone());
        op.cols
            .get(&p)
            .cloned()
            .ok_or_else(|| Error::Domain(format!("sector {key} lacks column {p:?}")))
    }

    /// Applies S_{ij}(z_zi) for slots (x, y) of the triple.
    fn act(&self, zi: usize, slots: (usize, usize), v: &SparseVec<Triple, P::S>) -> Result<SparseVec<Triple, P::S>> {
        let mut out = SparseVec::new();
        for (t, c) in &v.terms {
            let parts = [&t.0, &t.1, &t.2];
            let col = self.column(zi, parts[slots.0], parts[slots.1])?;
            for ((a, b), x) in col {
                let mut np = [t.0.clone(), t.1.clone(), t.2.clone()];
                np[slots.0] = a;
                np[slots.1] = b;
                let [u, v2, w] = np;
                out.add_term((u, v2, w), x * c);
            }
        }
        Ok(out)
    }
}

/// Residual of S₁₂(x)S₁₃(xy)S₂₃(y) = S₂₃(y)S₁₃(xy)S₁₂(x) on the given basis triples.
pub fn verify_ybe<P: PairOperatorSource>(src: &P, one: P::S, x: &Exact, y: &Exact, triples: &[Triple]) -> Result<YbeReport> {
    let cache = OpCache { src, zs: [x.clone(), x * y, y.clone()], ops: RefCell::new(HashMap::new()) };
    let mut worst = 0.0f64;
    let mut exact_zero = true;
    for t in triples {
        let v = SparseVec::basis(t.clone(), one.clone());
        let lhs = cache.act(0, (0, 1), &cache.act(1, (0, 2), &cache.act(2, (1, 2), &v)?)?)?;
        let rhs = cache.act(2, (1, 2), &cache.act(1, (0, 2), &cache.act(0, (0, 1), &v)?)?)?;
        let d = lhs.sub(&rhs);
        exact_zero &= d.is_zero();
        worst = worst.max(d.max_abs());
    }
    let built = cache.ops.borrow().len();
    Ok(YbeReport { triples: triples.len(), max_residual: worst, exact_zero, operators_built: built })
}

/// Basis triples of W_{l1} ⊗ W_{l2} ⊗ W_{l3}.
pub fn triples_by_totals(sig: &Signature, l: [i64; 3]) -> Vec<Triple> {
    let w: Vec<Vec<State>> = l.iter().map(|&k| enumerate_wl(sig, k)).collect();
    let mut out = Vec::new();
    for a in &w[0] {
        for b in &w[1] {
            for c in &w[2] {
                out.push((a.clone(), b.clone(), c.clone()));
            }
        }
    }
    out
}

/// Basis triples with |a| + |b| + |c| ≤ n_max.
pub fn triples_truncated(sig: &Signature, n_max: i64) -> Vec<Triple> {
    let mut out = Vec::new();
    for l1 in 0..=n_max {
        for l2 in 0..=n_max - l1 {
            for l3 in 0..=n_max - l1 - l2 {
                out.extend(triples_by_totals(sig, [l1, l2, l3]));
            }
        }
    }
    out
}

/// Header lines for a matrix dump.
pub fn dump_header(sig: &Signature, sector: &SectorKey, qpt: &QPoint, z: &Exact, backend: &str, cutoff: Option<i64>) -> String {
    let mut h = format!("signature {sig}\nsector {sector}\nq-root {qpt}\nz {z}\nbackend {backend}");
    if let Some(c) = cutoff {
        h.push_str(&format!("\ncutoff {c}"));
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{ExactBackend, FloatBackend};
    use crate::threed::s_element;

    fn qp() -> QPoint {
        QPoint::from_ratio(1, 2).unwrap()
    }

    fn sig(s: &str) -> Signature {
        Signature::parse(s).unwrap()
    }

    #[test]
    fn laurent_matches_elements() {
        let q = qp();
        let sg = sig("010");
        let out = (vec![1, 1, 0], vec![0, 1, 1]);
        let inp = (vec![0, 1, 1], vec![1, 1, 0]);
        let (p, d) = layer_product(&q, &sg, &out.0, &out.1, &inp.0, &inp.1);
        assert!(!p.is_zero());
        let cmin = (-d.iter().min().copied().unwrap()).max(0);
        for c0 in cmin..cmin + 5 {
            let direct = (0..3).fold(Exact::one(), |acc, k| {
                acc * s_element(&q, sg.eps()[k], out.0[k], out.1[k], c0 + d[k], inp.0[k], inp.1[k], c0 + d[k + 1])
            });
            assert_eq!(p.eval(&q.q_pow(c0)), direct);
        }
    }

    #[test]
    fn example_r10() {
        let q = qp();
        let z = Exact::ratio(3, 7);
        let op = build_str(&q, &sig("10"), &z, 1, 1).unwrap();
        let v = op.get(&(vec![0, 1], vec![1, 0]), &(vec![1, 0], vec![0, 1])).unwrap();
        let q2 = q.q_pow(2);
        assert_eq!(*v, (Exact::one() - &q2) / (&z - &q2));
    }

    #[test]
    fn normalizations_trace() {
        let q = qp();
        let z = Exact::ratio(2, 9);
        for (s, l, m) in [("11", 1, 2), ("111", 2, 1), ("10", 2, 1), ("0", 3, 2), ("01", 1, 2), ("011", 2, 2)] {
            let sg = sig(s);
            let op = build_str(&q, &sg, &z, l, m).unwrap();
            let v = normalization_vector(&sg, l, m).unwrap();
            let col = op.column(&v).unwrap();
            assert_eq!(col.len(), 1, "{s} {l} {m}");
            assert!(col.get(&v).unwrap().is_one(), "{s} {l} {m}");
        }
    }

    #[test]
    fn alternative_norm_site() {
        let q = qp();
        let sg = sig("00");
        let op = build_str(&q, &sg, &Exact::ratio(1, 5), 2, 1).unwrap();
        let v = normalization_vector_at(&sg, 0, 2, 1).unwrap();
        assert!(op.get(&v, &v).unwrap().is_one());
    }

    #[test]
    fn trace_selection_rule() {
        let q = qp();
        let op = build_str(&q, &sig("010"), &Exact::ratio(1, 3), 2, 1).unwrap();
        for (o, i, _) in op.entries() {
            assert_eq!(pair_sum(o), pair_sum(i));
            assert_eq!(total(&o.0), total(&i.0));
        }
    }

    #[test]
    fn pole_detection() {
        let q = qp();
        let r = build_str(&q, &sig("10"), &q.q_pow(2), 1, 1);
        assert!(matches!(r, Err(Error::Pole(_))), "{r:?}");
    }

    #[test]
    fn ybe_trace_small() {
        let q = qp();
        for s in ["0", "10"] {
            let src = TraceSource { qpt: q.clone(), sig: sig(s) };
            let t = triples_by_totals(&src.sig, [1, 1, 1]);
            let r = verify_ybe(&src, Exact::one(), &Exact::ratio(1, 3), &Exact::ratio(2, 5), &t).unwrap();
            assert!(r.exact_zero, "{s}");
        }
    }

    #[test]
    fn phi_matches_trace_and_squares() {
        let q = qp();
        for al in 0..=1 {
            for be in 0..=1 {
                for m4 in 0..3 {
                    for m5 in 0..3 {
                        let st = (al, m4, be, m5);
                        let img = phi_local(&q, st);
                        for al2 in 0..=1 {
                            for be2 in 0..=1 {
                                for m4b in 0..5 {
                                    for m5b in 0..5 {
                                        let o = (al2, m4b, be2, m5b);
                                        let want = img.iter().find(|(k, _)| *k == o).map_or(Exact::zero(), |x| x.1.clone());
                                        assert_eq!(phi_from_trace(&q, st, o), want, "{st:?} -> {o:?}");
                                    }
                                }
                            }
                        }
                        let mut sq: HashMap<PhiState, Exact> = HashMap::new();
                        for (k, c) in &img {
                            for (k2, c2) in phi_local(&q, *k) {
                                let e = sq.entry(k2).or_insert_with(Exact::zero);
                                *e = &*e + &(c * &c2);
                            }
                        }
                        sq.retain(|_, v| !v.is_zero());
                        assert_eq!(sq.len(), 1);
                        assert_eq!(sq[&st], phi_square_diag(&q, st));
                    }
                }
            }
        }
    }

    #[test]
    fn phi_equivalence_trace() {
        let q = qp();
        let z = Exact::ratio(2, 7);
        for (l, m) in [(1, 1), (2, 1), (1, 2)] {
            let a = build_str(&q, &sig("10"), &z, l, m).unwrap();
            let b = build_str(&q, &sig("01"), &z, l, m).unwrap();
            let c = phi_equivalence(&q, &ExactBackend, 0, &a).unwrap();
            assert!(c.first_mismatch(&b, &ExactBackend).is_none(), "({l},{m})");
            assert!(b.first_mismatch(&c, &ExactBackend).is_none());
            let back = phi_equivalence(&q, &ExactBackend, 0, &b).unwrap();
            assert!(back.first_mismatch(&a, &ExactBackend).is_none());
        }
    }

    #[test]
    fn gauge_trivial_entries() {
        let q = qp();
        let op = build_str(&q, &sig("10"), &Exact::ratio(1, 3), 1, 1).unwrap();
        let g = gauge_tilde(&q, &ExactBackend, &op, GaugeSide::S);
        for (o, i, v) in op.entries() {
            if o == i {
                assert_eq!(g.get(o, i).unwrap(), v);
            }
        }
    }

    fn params() -> SstParams {
        SstParams::new(1, 1, 220, 256)
    }

    #[test]
    fn sst_vacuum_normalization() {
        let q = qp();
        let z = Exact::ratio(3, 5);
        let b = build_sst(&q, &sig("10"), &z, &SectorKey::B(vec![0, 0]), &params()).unwrap();
        let v = b.op.get(&(vec![0, 0], vec![0, 0]), &(vec![0, 0], vec![0, 0])).unwrap();
        assert!((v.clone() - Float::from_exact(&Exact::one(), 256)).abs_f64() < 1e-30);
    }

    #[test]
    fn sst_example_rb() {
        let q = qp();
        let z = Exact::ratio(3, 5);
        let be = FloatBackend { precision: 256 };
        let b = build_sst(&q, &sig("10"), &z, &SectorKey::B(vec![1, 0]), &params()).unwrap();
        let g = gauge_tilde(&q, &be, &b.op, GaugeSide::S);
        let v = g.get(&(vec![1, 0], vec![0, 0]), &(vec![0, 0], vec![1, 0])).unwrap();
        let qq = q.q();
        let want = (Exact::one() + &qq) * &z / (Exact::one() + &qq * &z);
        assert!((v.clone() - be.lift(&want)).abs_f64() < 1e-30, "{v:?}");
        // the raw operator is the gauge-transformed R̃ of the table: real entries
        for (_, _, v) in b.op.entries() {
            assert!(v.abs_im_f64() < 1e-30);
        }
        let b2 = build_sst(&q, &sig("10"), &z, &SectorKey::B(vec![1, 1]), &params()).unwrap();
        let v = b2.op.get(&(vec![0, 0], vec![1, 1]), &(vec![0, 1], vec![1, 0])).unwrap();
        let one = Exact::one();
        let want = -(&qq * (&one + &qq) * (&one - &z)) / ((&one + &qq * &z) * (&one + q.q_pow(2) * &z));
        assert!((v.clone() - be.lift(&want)).abs_f64() < 1e-30, "{v:?}");
        let back = gauge_tilde(&q, &be, &g, GaugeSide::R);
        assert!(back.max_diff(&b.op, &be.zero()) < 1e-60);
    }

    #[test]
    fn sst22_parity() {
        let q = qp();
        let p = SstParams::new(2, 2, 120, 192);
        let b = build_sst(&q, &sig("10"), &Exact::ratio(1, 2), &SectorKey::B(vec![1, 2]), &p).unwrap();
        assert!(b.op.nnz() > 0);
        for (o, i, _) in b.op.entries() {
            assert_eq!((total(&o.0) - total(&i.0)).rem_euclid(2), 0);
        }
    }

    #[test]
    fn sst_guard() {
        let q = qp();
        let r = build_sst(&q, &sig("10"), &Exact::int(2), &SectorKey::B(vec![0, 0]), &params());
        assert!(matches!(r, Err(Error::Convergence(_))));
    }
}
