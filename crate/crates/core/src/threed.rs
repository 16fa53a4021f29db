//! The 3D R and 3D L: matrix elements, q-oscillators, tetrahedron equations
//! and the local quadratic identities behind commutativity with the generators.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::laurent::LaurentInT;
use crate::scalars::{Exact, QPoint};
use crate::spaces::{SparseVec, State};

/// Out indices (a,b,c), in indices (i,j,k); flavor 0 is R, flavor 1 is L.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ThreeDIndex {
    pub flavor: u8,
    pub out: [i64; 3],
    pub inp: [i64; 3],
}

impl ThreeDIndex {
    pub fn new(flavor: u8, out: [i64; 3], inp: [i64; 3]) -> Self {
        ThreeDIndex { flavor, out, inp }
    }

    pub fn conserves(&self) -> bool {
        let [a, b, c] = self.out;
        let [i, j, k] = self.inp;
        a + b == i + j && b + c == j + k
    }

    pub fn in_bounds(&self) -> bool {
        let all = self.out.iter().chain(self.inp.iter());
        if all.clone().any(|&v| v < 0) {
            return false;
        }
        self.flavor == 0 || [self.out[0], self.out[1], self.inp[0], self.inp[1]].iter().all(|&v| v <= 1)
    }
}

const CACHE_CAP: usize = 1 << 20;

type CacheKey = (QPoint, [i64; 6]);

fn r_cache() -> &'static RwLock<HashMap<CacheKey, Exact>> {
    static C: OnceLock<RwLock<HashMap<CacheKey, Exact>>> = OnceLock::new();
    C.get_or_init(|| RwLock::new(HashMap::new()))
}

/// 3D R element R^{abc}_{ijk}; zero off conservation or for negative indices.
pub fn r_element(qpt: &QPoint, a: i64, b: i64, c: i64, i: i64, j: i64, k: i64) -> Exact {
    if a < 0 || b < 0 || c < 0 || i < 0 || j < 0 || k < 0 {
        return Exact::zero();
    }
    if a + b != i + j || b + c != j + k {
        return Exact::zero();
    }
    let key = (qpt.clone(), [a, b, c, i, j, k]);
    if let Some(v) = r_cache().read().unwrap().get(&key) {
        return v.clone();
    }
    let v = r_element_uncached(qpt, b, c, i, j, k);
    let mut w = r_cache().write().unwrap();
    if w.len() >= CACHE_CAP {
        w.clear();
    }
    w.insert(key, v.clone());
    v
}

fn r_element_uncached(qpt: &QPoint, b: i64, c: i64, i: i64, j: i64, k: i64) -> Exact {
    let mut acc = Exact::zero();
    for mu in 0..=b.min(i) {
        let lam = b - mu;
        if lam > j {
            continue;
        }
        let sign = if lam % 2 == 0 { Exact::one() } else { Exact::int(-1) };
        let e = i * (c - j) + (k + 1) * lam + mu * (mu - k);
        let ratio = (1..=mu).fold(Exact::one(), |p, s| p * (Exact::one() - qpt.q_pow(2 * (c + s))));
        let term = sign * qpt.q_pow(e) * ratio * qpt.qbinom_poch(2, i, mu) * qpt.qbinom_poch(2, j, lam);
        acc = acc + term;
    }
    acc
}

/// 3D L element L^{abc}_{ijk} with a,b,i,j ∈ {0,1} and Fock indices c (out), k (in).
pub fn l_element(qpt: &QPoint, a: i64, b: i64, c: i64, i: i64, j: i64, k: i64) -> Exact {
    if [a, b, i, j].iter().any(|&v| !(0..=1).contains(&v)) || c < 0 || k < 0 {
        return Exact::zero();
    }
    match (a, b, i, j) {
        (0, 0, 0, 0) | (1, 1, 1, 1) if c == k => Exact::one(),
        (0, 1, 0, 1) if c == k => -qpt.q_pow(k + 1),
        (1, 0, 1, 0) if c == k => qpt.q_pow(k),
        (0, 1, 1, 0) if c == k - 1 => Exact::one() - qpt.q_pow(2 * k),
        (1, 0, 0, 1) if c == k + 1 => Exact::one(),
        _ => Exact::zero(),
    }
}

/// Unified element S^{(ε)abc}_{ijk}.
pub fn s_element(qpt: &QPoint, eps: u8, a: i64, b: i64, c: i64, i: i64, j: i64, k: i64) -> Exact {
    if eps == 0 {
        r_element(qpt, a, b, c, i, j, k)
    } else {
        l_element(qpt, a, b, c, i, j, k)
    }
}

pub fn element(qpt: &QPoint, idx: &ThreeDIndex) -> Exact {
    let [a, b, c] = idx.out;
    let [i, j, k] = idx.inp;
    s_element(qpt, idx.flavor, a, b, c, i, j, k)
}

/// S^{(ε) a,b,t+d_out}_{i,j,t+d_in} as a Laurent polynomial in u = q^t, valid for
/// every t ≥ 0 with t + d_out ≥ 0 and t + d_in ≥ 0.
pub fn element_laurent(qpt: &QPoint, eps: u8, a: i64, b: i64, i: i64, j: i64, d_out: i64, d_in: i64) -> LaurentInT {
    if a + b != i + j || b + d_out != j + d_in || [a, b, i, j].iter().any(|&v| v < 0) {
        return LaurentInT::zero();
    }
    if eps == 1 {
        if [a, b, i, j].iter().any(|&v| v > 1) {
            return LaurentInT::zero();
        }
        return match (a, b, i, j) {
            (0, 0, 0, 0) | (1, 1, 1, 1) | (1, 0, 0, 1) => LaurentInT::constant(Exact::one()),
            (0, 1, 0, 1) => LaurentInT::monomial(-qpt.q_pow(d_in + 1), 1),
            (1, 0, 1, 0) => LaurentInT::monomial(qpt.q_pow(d_in), 1),
            (0, 1, 1, 0) => {
                let mut p = LaurentInT::constant(Exact::one());
                p.add_term(2, -qpt.q_pow(2 * d_in));
                p
            }
            _ => LaurentInT::zero(),
        };
    }
    let mut acc = LaurentInT::zero();
    for mu in 0..=b.min(i) {
        let lam = b - mu;
        if lam > j {
            continue;
        }
        let sign = if lam % 2 == 0 { Exact::one() } else { Exact::int(-1) };
        let e_const = i * (d_out - j) + (d_in + 1) * lam + mu * (mu - d_in);
        let coef = sign * qpt.q_pow(e_const) * qpt.qbinom_poch(2, i, mu) * qpt.qbinom_poch(2, j, lam);
        let mut poly = LaurentInT::monomial(coef, i + lam - mu);
        for s in 1..=mu {
            let mut f = LaurentInT::constant(Exact::one());
            f.add_term(2, -qpt.q_pow(2 * (d_out + s)));
            poly = poly.mul(&f);
        }
        acc = acc.add(&poly);
    }
    acc
}

// ---- multi-slot application ----

/// Images of a basis vector under S^{(ε)} acting on three slots (0-based).
pub fn apply_local(qpt: &QPoint, eps: u8, slots: [usize; 3], state: &State) -> Vec<(State, Exact)> {
    let (i, j, k) = (state[slots[0]], state[slots[1]], state[slots[2]]);
    let mut out = Vec::new();
    let top = (i + j).min(j + k);
    for b in 0..=top {
        let a = i + j - b;
        let c = j + k - b;
        let v = s_element(qpt, eps, a, b, c, i, j, k);
        if !v.is_zero() {
            let mut s = state.clone();
            s[slots[0]] = a;
            s[slots[1]] = b;
            s[slots[2]] = c;
            out.push((s, v));
        }
    }
    out
}

pub fn apply_local_vec(qpt: &QPoint, eps: u8, slots: [usize; 3], v: &SparseVec<State, Exact>) -> SparseVec<State, Exact> {
    let mut out = SparseVec::new();
    for (s, c) in &v.terms {
        for (t, x) in apply_local(qpt, eps, slots, s) {
            out.add_term(t, x * c);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TetraKind {
    Rrrr,
    Rlll,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Factors of one side, listed in the order they act.
fn tetra_factors(kind: TetraKind, side: Side) -> Vec<(u8, [usize; 3])> {
    let v = if kind == TetraKind::Rrrr { 0 } else { 1 };
    let left = [(v, [0, 1, 3]), (v, [0, 2, 4]), (v, [1, 2, 5]), (0, [3, 4, 5])];
    let mut f = left.to_vec();
    if side == Side::Left {
        f.reverse();
    }
    f
}

/// One side of the RRRR or RLLL tetrahedron equation applied to a basis vector.
pub fn apply_threed(qpt: &QPoint, kind: TetraKind, side: Side, input: &State) -> Result<SparseVec<State, Exact>> {
    if input.len() != 6 || input.iter().any(|&x| x < 0) {
        return Err(Error::Domain(format!("tetrahedron input must be 6 nonnegative slots, got {input:?}")));
    }
    if kind == TetraKind::Rlll && input[..3].iter().any(|&x| x > 1) {
        return Err(Error::Domain(format!("slots 1-3 are two-dimensional, got {input:?}")));
    }
    let mut v = SparseVec::basis(input.clone(), Exact::one());
    for (eps, slots) in tetra_factors(kind, side) {
        v = apply_local_vec(qpt, eps, slots, &v);
    }
    Ok(v)
}

/// Left minus right of the tetrahedron equation on one input.
pub fn tetrahedron_residual(qpt: &QPoint, kind: TetraKind, input: &State) -> Result<SparseVec<State, Exact>> {
    let l = apply_threed(qpt, kind, Side::Left, input)?;
    let r = apply_threed(qpt, kind, Side::Right, input)?;
    Ok(l.sub(&r))
}

// ---- structural symmetries of R ----

/// States (i,j,k) of the sector with i+j = s1, j+k = s2.
pub fn r_sector(s1: i64, s2: i64) -> Vec<[i64; 3]> {
    (0..=s1.min(s2)).map(|j| [s1 - j, j, s2 - j]).collect()
}

/// Whether R squares to the identity on the sector (s1, s2).
pub fn r_involution_holds(qpt: &QPoint, s1: i64, s2: i64) -> bool {
    let basis = r_sector(s1, s2);
    for x in &basis {
        for z in &basis {
            let mut acc = Exact::zero();
            for y in &basis {
                acc = acc
                    + r_element(qpt, x[0], x[1], x[2], y[0], y[1], y[2]) * r_element(qpt, y[0], y[1], y[2], z[0], z[1], z[2]);
            }
            let want = if x == z { Exact::one() } else { Exact::zero() };
            if acc != want {
                return false;
            }
        }
    }
    true
}

pub fn r_transpose_holds(qpt: &QPoint, a: i64, b: i64, c: i64, i: i64, j: i64, k: i64) -> bool {
    r_element(qpt, a, b, c, i, j, k) == r_element(qpt, c, b, a, k, j, i)
}

pub fn r_weighted_transpose_holds(qpt: &QPoint, a: i64, b: i64, c: i64, i: i64, j: i64, k: i64) -> bool {
    let w = |x: i64| qpt.qq(2, x);
    r_element(qpt, a, b, c, i, j, k) * w(a) * w(b) * w(c) == w(i) * w(j) * w(k) * r_element(qpt, i, j, k, a, b, c)
}

/// R commutes with x^{h1}(xy)^{h2}y^{h3} on the given element.
pub fn r_weight_commutes(qpt: &QPoint, x: &Exact, y: &Exact, a: i64, b: i64, c: i64, i: i64, j: i64, k: i64) -> bool {
    let xy = x * y;
    let wout = x.pow(a) * xy.pow(b) * y.pow(c);
    let win = x.pow(i) * xy.pow(j) * y.pow(k);
    let r = r_element(qpt, a, b, c, i, j, k);
    &r * &wout == &r * &win
}

// ---- q-oscillators ----

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OscillatorSymbol {
    APlus,
    AMinus,
    K,
    H,
}

/// Action on |m⟩; `None` for the zero vector.
pub fn oscillator_act(qpt: &QPoint, sym: OscillatorSymbol, m: i64) -> Option<(i64, Exact)> {
    match sym {
        OscillatorSymbol::APlus => Some((m + 1, Exact::one())),
        OscillatorSymbol::AMinus => (m > 0).then(|| (m - 1, Exact::one() - qpt.q_pow(2 * m))),
        OscillatorSymbol::K => Some((m, qpt.q_pow(m))),
        OscillatorSymbol::H => Some((m, Exact::int(m))),
    }
}

/// Applies a word (rightmost first) to |m⟩.
pub fn oscillator_word(qpt: &QPoint, word: &[OscillatorSymbol], m: i64) -> Option<(i64, Exact)> {
    let mut cur = (m, Exact::one());
    for s in word.iter().rev() {
        let (n, c) = oscillator_act(qpt, *s, cur.0)?;
        cur = (n, cur.1 * c);
    }
    Some(cur)
}

/// Checks k a± = q^{±1} a± k, a⁺a⁻ = 1 − k², a⁻a⁺ = 1 − q²k² on |0⟩..|n-1⟩.
pub fn oscillator_relations_hold(qpt: &QPoint, n: i64) -> bool {
    use OscillatorSymbol::*;
    let val = |w: &[OscillatorSymbol], m: i64| oscillator_word(qpt, w, m).map(|x| x.1).unwrap_or_else(Exact::zero);
    (0..n).all(|m| {
        let kq = qpt.q_pow(m);
        val(&[K, APlus], m) == qpt.q_pow(1) * val(&[APlus, K], m)
            && val(&[K, AMinus], m) == qpt.q_pow(-1) * val(&[AMinus, K], m)
            && val(&[APlus, AMinus], m) == Exact::one() - &kq * &kq
            && val(&[AMinus, APlus], m) == Exact::one() - qpt.q_pow(2) * &kq * &kq
            && val(&[K], m) == qpt.q_pow(val(&[H], m).re().numerator().try_into().unwrap_or(0))
    })
}

// ---- local identities ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IdentityName {
    Hkr1,
    Hkr2,
    Hkr3,
    Hkr4,
    Hzk,
    Ann,
    Mak,
    Yum,
    Sseq(u8, u8),
    Ior(u8),
    Ior2(u8),
}

impl IdentityName {
    pub fn all() -> Vec<IdentityName> {
        use IdentityName::*;
        let mut v = vec![Hkr1, Hkr2, Hkr3, Hkr4, Hzk, Ann, Mak, Yum];
        for e in 0..2 {
            for f in 0..2 {
                v.push(Sseq(e, f));
            }
        }
        v.extend([Ior(0), Ior(1), Ior2(0), Ior2(1)]);
        v
    }

    pub fn arity(&self) -> usize {
        if matches!(self, IdentityName::Sseq(..)) {
            11
        } else {
            6
        }
    }
}

impl fmt::Display for IdentityName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use IdentityName::*;
        match self {
            Hkr1 => write!(f, "hkr1"),
            Hkr2 => write!(f, "hkr2"),
            Hkr3 => write!(f, "hkr3"),
            Hkr4 => write!(f, "hkr4"),
            Hzk => write!(f, "hzk"),
            Ann => write!(f, "ann"),
            Mak => write!(f, "mak"),
            Yum => write!(f, "yum"),
            Sseq(a, b) => write!(f, "sseq({a},{b})"),
            Ior(e) => write!(f, "ior({e})"),
            Ior2(e) => write!(f, "ior2({e})"),
        }
    }
}

impl FromStr for IdentityName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        IdentityName::all()
            .into_iter()
            .find(|n| n.to_string() == s)
            .ok_or_else(|| Error::Domain(format!("unknown identity {s}")))
    }
}

fn q_eps(qpt: &QPoint, eps: u8) -> Exact {
    if eps == 0 {
        qpt.q()
    } else {
        -qpt.q_pow(-1)
    }
}

/// Left-hand side minus right-hand side of a named identity.
pub fn verify_local_identity(qpt: &QPoint, name: IdentityName, idx: &[i64]) -> Result<Exact> {
    use IdentityName::*;
    if idx.len() != name.arity() {
        return Err(Error::Domain(format!("{name} takes {} indices, got {}", name.arity(), idx.len())));
    }
    let r = |a, b, c, i, j, k| r_element(qpt, a, b, c, i, j, k);
    let qi = |m: i64| qpt.qint(m);
    let q = |e: i64| qpt.q_pow(e);
    let one = Exact::one();
    if let Sseq(e1, e2) = name {
        let [a, b, c, i, j, k, a2, b2, i2, j2, k2] = idx.try_into().unwrap();
        let s = |a, b, c, i, j, k| s_element(qpt, e1, a, b, c, i, j, k);
        let s2 = |a, b, c, i, j, k| s_element(qpt, e2, a, b, c, i, j, k);
        let rho = q_eps(qpt, e1);
        let rho2 = q_eps(qpt, e2);
        let lhs = qi(a + 1) * s(a + 1, b, c, i, j, k) * s2(a2 - 1, b2, k, i2, j2, k2)
            + rho.pow(-a) * rho2.pow(a2) * qi(b + 1) * s(a, b + 1, c, i, j, k + 1) * s2(a2, b2 - 1, k + 1, i2, j2, k2);
        let rhs = qi(j) * s(a, b, c, i, j - 1, k + 1) * s2(a2, b2, k + 1, i2, j2 + 1, k2)
            + rho.pow(-j) * rho2.pow(j2) * qi(i) * s(a, b, c, i - 1, j, k) * s2(a2, b2, k, i2 + 1, j2, k2);
        return Ok(lhs - rhs);
    }
    let [a, b, c, i, j, k]: [i64; 6] = idx.try_into().unwrap();
    let v = match name {
        Hkr1 => qi(a + 1) * r(a + 1, b, c, i, j, k) - qi(j) * r(a, b, c, i, j - 1, k + 1) - q(k - j) * qi(i) * r(a, b, c, i - 1, j, k),
        Hkr2 => {
            q(k + 1) * qi(a + 1) * r(a + 1, b, c, i, j, k) + q(-a - 1) * qi(b + 1) * r(a, b + 1, c, i, j, k + 1)
                - q(-j - 1) * qi(i) * r(a, b, c, i - 1, j, k)
        }
        Hkr3 => {
            q(-a) * qi(b + 1) * r(a, b + 1, c, i, j, k + 1) + q(k + 2) * qi(j) * r(a, b, c, i, j - 1, k + 1)
                - q(-j) * (&one - q(2 * k + 2)) * qi(i) * r(a, b, c, i - 1, j, k)
        }
        Hkr4 => {
            (&one - q(2 * k + 2)) * qi(a + 1) * r(a + 1, b, c, i, j, k) - q(k - a) * qi(b + 1) * r(a, b + 1, c, i, j, k + 1)
                - qi(j) * r(a, b, c, i, j - 1, k + 1)
        }
        Hzk => r(a - 1, b, c, i, j, k) - q(a + c + 2) * r(a, b - 1, c + 1, i, j, k) - r(a, b, c + 1, i, j + 1, k),
        Ann => q(a + 1) * r(a, b - 1, c, i, j, k - 1) + q(c) * r(a, b, c, i, j + 1, k - 1) - q(j + 1) * r(a, b, c - 1, i + 1, j, k - 1),
        Mak => q(c) * r(a - 1, b, c, i, j, k) + q(a) * (&one - q(2 * c + 2)) * r(a, b - 1, c + 1, i, j, k) - q(j) * r(a, b, c, i + 1, j, k),
        Yum => r(a - 1, b, c, i, j, k) - (&one - q(2 * c + 2)) * r(a, b, c + 1, i, j + 1, k) - q(c + j + 2) * r(a, b, c, i + 1, j, k),
        Ior(e) => {
            let s = |a, b, c, i, j, k| s_element(qpt, e, a, b, c, i, j, k);
            let rho = q_eps(qpt, e);
            -q(1) * qi(a + 1) * (&one - q(k)) * s(a + 1, b, c, i, j, k - 1) + rho.pow(-a) * qi(b + 1) * s(a, b + 1, c, i, j, k)
                + q(1) * qi(j) * s(a, b, c, i, j - 1, k)
                - rho.pow(-j) * qi(i) * (&one - q(k)) * s(a, b, c, i - 1, j, k - 1)
        }
        Ior2(e) => {
            let s = |a, b, c, i, j, k| s_element(qpt, e, a, b, c, i, j, k);
            let rho = q_eps(qpt, e);
            s(a - 1, b, c, i, j, k) - q(1) * rho.pow(a) * (&one + q(c + 1)) * s(a, b - 1, c + 1, i, j, k)
                - (&one + q(c + 1)) * s(a, b, c + 1, i, j + 1, k)
                + q(1) * rho.pow(j) * s(a, b, c, i + 1, j, k)
        }
        Sseq(..) => unreachable!(),
    };
    Ok(v)
}

/// Outcome of an exhaustive identity sweep.
#[derive(Clone, Debug, Default)]
pub struct IdentitySweep {
    pub tuples: usize,
    pub nontrivial: usize,
    pub failures: Vec<Vec<i64>>,
}

/// Index ranges per slot: V-type slots run over {0,1}, the rest over 0..=bound.
fn identity_ranges(name: IdentityName, bound: i64) -> Vec<i64> {
    use IdentityName::*;
    let v = |e: u8| if e == 1 { 1 } else { bound };
    match name {
        Sseq(e1, e2) => vec![v(e1), v(e1), bound, v(e1), v(e1), bound, v(e2), v(e2), v(e2), v(e2), bound],
        Ior(e) | Ior2(e) => vec![v(e), v(e), bound, v(e), v(e), bound],
        _ => vec![bound; 6],
    }
}

/// Whether every term of the identity is killed by conservation.
fn trivially_zero(name: IdentityName, t: &[i64]) -> bool {
    use IdentityName::*;
    match name {
        Sseq(..) => {
            let (a, b, c, i, j, k, a2, b2, i2, j2, k2) = (t[0], t[1], t[2], t[3], t[4], t[5], t[6], t[7], t[8], t[9], t[10]);
            !(a + b + 1 == i + j && b + c == j + k && a2 + b2 == i2 + j2 + 1 && b2 + k == j2 + k2)
        }
        _ => false,
    }
}

/// Evaluates the identity on every index tuple with entries ≤ bound.
pub fn sweep_identity(qpt: &QPoint, name: IdentityName, bound: i64) -> IdentitySweep {
    let ranges = identity_ranges(name, bound);
    let mut out = IdentitySweep::default();
    let mut t = vec![0i64; ranges.len()];
    loop {
        out.tuples += 1;
        if !trivially_zero(name, &t) {
            let r = verify_local_identity(qpt, name, &t).expect("arity matches");
            out.nontrivial += 1;
            if !r.is_zero() && out.failures.len() < 16 {
                out.failures.push(t.clone());
            }
        }
        let mut p = 0;
        loop {
            if p == t.len() {
                return out;
            }
            if t[p] < ranges[p] {
                t[p] += 1;
                break;
            }
            t[p] = 0;
            p += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp() -> QPoint {
        QPoint::from_ratio(1, 2).unwrap()
    }

    #[test]
    fn r_examples() {
        let q = qp();
        assert!(r_element(&q, 0, 0, 0, 0, 0, 0).is_one());
        assert_eq!(r_element(&q, 0, 1, 0, 1, 0, 1), Exact::ratio(15, 16));
        assert!(r_element(&q, 1, 0, 1, 0, 1, 0).is_one());
        assert!(r_element(&q, 1, 0, 0, 0, 0, 0).is_zero());
        assert!(r_element(&q, -1, 1, 0, 0, 0, 0).is_zero());
    }

    #[test]
    fn l_examples() {
        let q = qp();
        for m in 0..4 {
            assert_eq!(l_element(&q, 0, 1, m - 1, 1, 0, m), if m >= 1 { Exact::one() - q.q_pow(2 * m) } else { Exact::zero() });
            assert_eq!(l_element(&q, 0, 1, m, 0, 1, m), -q.q_pow(m + 1));
            assert!(l_element(&q, 0, 0, m, 1, 1, m).is_zero());
        }
    }

    /// L written through the q-oscillator table: L(v_α⊗v_β⊗|m⟩).
    #[test]
    fn l_matches_oscillator_table() {
        use OscillatorSymbol::*;
        let q = qp();
        // (γ,δ) ← (α,β): 1, k, -qk, a+, a-, 1
        let table: [((i64, i64), (i64, i64), Vec<OscillatorSymbol>, Exact); 6] = [
            ((0, 0), (0, 0), vec![], Exact::one()),
            ((1, 1), (1, 1), vec![], Exact::one()),
            ((1, 0), (1, 0), vec![K], Exact::one()),
            ((0, 1), (0, 1), vec![K], -q.q()),
            ((1, 0), (0, 1), vec![APlus], Exact::one()),
            ((0, 1), (1, 0), vec![AMinus], Exact::one()),
        ];
        for m in 0..5 {
            for ((g, d), (al, be), w, c) in &table {
                let Some((j, v)) = oscillator_word(&q, w, m) else { continue };
                assert_eq!(l_element(&q, *g, *d, j, *al, *be, m), c * &v);
            }
        }
    }

    #[test]
    fn laurent_form_matches_elements() {
        let q = qp();
        for eps in 0..2u8 {
            let top = if eps == 1 { 1 } else { 3 };
            for a in 0..=top {
                for b in 0..=top {
                    for i in 0..=top {
                        for j in 0..=top {
                            for d_out in -2..=2 {
                                let d_in = b + d_out - j;
                                let p = element_laurent(&q, eps, a, b, i, j, d_out, d_in);
                                for t in 0..4 {
                                    if t + d_out < 0 || t + d_in < 0 {
                                        continue;
                                    }
                                    let want = s_element(&q, eps, a, b, t + d_out, i, j, t + d_in);
                                    assert_eq!(p.eval(&q.q_pow(t)), want, "{eps} {a}{b}{i}{j} {d_out} {t}");
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tetrahedron_small() {
        let q = qp();
        let zero = vec![0; 6];
        let l = apply_threed(&q, TetraKind::Rrrr, Side::Left, &zero).unwrap();
        assert_eq!(l.len(), 1);
        assert!(l.get(&zero).unwrap().is_one());
        let e1 = vec![1, 0, 0, 0, 0, 0];
        assert!(tetrahedron_residual(&q, TetraKind::Rrrr, &e1).unwrap().is_zero());
        assert!(tetrahedron_residual(&q, TetraKind::Rlll, &e1).unwrap().is_zero());
        assert!(apply_threed(&q, TetraKind::Rlll, Side::Left, &vec![2, 0, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn oscillators() {
        assert!(oscillator_relations_hold(&qp(), 6));
    }

    #[test]
    fn identity_examples() {
        let q = qp();
        assert!(verify_local_identity(&q, IdentityName::Hkr1, &[0; 6]).unwrap().is_zero());
        assert!(verify_local_identity(&q, IdentityName::Mak, &[1, 0, 0, 0, 0, 1]).unwrap().is_zero());
        assert!(verify_local_identity(&q, IdentityName::Hkr1, &[0; 5]).is_err());
        assert!("nope".parse::<IdentityName>().is_err());
        assert_eq!("sseq(1,0)".parse::<IdentityName>().unwrap(), IdentityName::Sseq(1, 0));
    }

    #[test]
    fn sseq_vv_exhaustive() {
        let q = qp();
        let s = sweep_identity(&q, IdentityName::Sseq(1, 1), 2);
        assert!(s.failures.is_empty(), "{:?}", s.failures);
    }
}
