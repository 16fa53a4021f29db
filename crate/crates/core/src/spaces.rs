//! Signatures, basis states, sectors and sparse containers.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalars::{Backend, Scalar};

/// Occupation tuple of a basis vector of W = W^{(ε1)}⊗…⊗W^{(εn)}.
pub type State = Vec<i64>;
/// Basis vector of W⊗W.
pub type Pair = (State, State);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature(Vec<u8>);

impl Signature {
    pub fn new(eps: Vec<u8>) -> Result<Self> {
        if eps.is_empty() || eps.iter().any(|&e| e > 1) {
            return Err(Error::Domain(format!("signature must be a nonempty bit string, got {eps:?}")));
        }
        Ok(Signature(eps))
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' ' | '(' | ')'))
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(Error::Usage(format!("bad signature {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Signature::new(bits)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn eps(&self) -> &[u8] {
        &self.0
    }

    /// ε_i for 1-based i.
    pub fn at(&self, i: usize) -> u8 {
        self.0[i - 1]
    }

    pub fn all_ones(&self) -> bool {
        self.0.iter().all(|&e| e == 1)
    }

    pub fn all_zeros(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Upper bound of slot i (0-based), `None` for Fock slots.
    pub fn cap(&self, i: usize) -> Option<i64> {
        (self.0[i] == 1).then_some(1)
    }

    pub fn admits(&self, m: &[i64]) -> bool {
        m.len() == self.n() && m.iter().enumerate().all(|(i, &v)| v >= 0 && self.cap(i).map_or(true, |c| v <= c))
    }

    /// Signature with slots `pos` and `pos+1` (0-based) exchanged.
    pub fn swapped(&self, pos: usize) -> Signature {
        let mut e = self.0.clone();
        e.swap(pos, pos + 1);
        Signature(e)
    }

    /// Number of leading ones, if the signature has the sorted form (1^κ, 0^{n-κ}).
    pub fn sorted_kappa(&self) -> Option<usize> {
        let k = self.0.iter().take_while(|&&e| e == 1).count();
        self.0[k..].iter().all(|&e| e == 0).then_some(k)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.0 {
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SectorKey {
    /// Total occupations (|a|, |b|).
    A(i64, i64),
    /// Componentwise sum a + b.
    B(State),
    /// (|a| mod 2, |b| mod 2).
    Parity(u8, u8),
}

impl fmt::Display for SectorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectorKey::A(l, m) => write!(f, "({l},{m})"),
            SectorKey::B(s) => write!(f, "s={}", join(s)),
            SectorKey::Parity(a, b) => write!(f, "parity({a},{b})"),
        }
    }
}

pub fn join(s: &[i64]) -> String {
    s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

pub fn total(m: &[i64]) -> i64 {
    m.iter().sum()
}

pub fn unit(n: usize, i: usize) -> State {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

/// All states of W_l (|m| = l) in lexicographic order.
pub fn enumerate_wl(sig: &Signature, l: i64) -> Vec<State> {
    let mut out = Vec::new();
    let mut cur = vec![0; sig.n()];
    fill_wl(sig, 0, l, &mut cur, &mut out);
    out
}

fn fill_wl(sig: &Signature, i: usize, left: i64, cur: &mut State, out: &mut Vec<State>) {
    if i == sig.n() {
        if left == 0 {
            out.push(cur.clone());
        }
        return;
    }
    let hi = sig.cap(i).map_or(left, |c| c.min(left));
    for v in 0..=hi {
        cur[i] = v;
        fill_wl(sig, i + 1, left - v, cur, out);
    }
    cur[i] = 0;
}

/// All states with |m| ≤ n_max.
pub fn enumerate_truncated(sig: &Signature, n_max: i64) -> Vec<State> {
    let mut v: Vec<State> = (0..=n_max).flat_map(|l| enumerate_wl(sig, l)).collect();
    v.sort();
    v
}

/// Pairs (a,b) with a + b = s and slot bounds.
pub fn pairs_with_sum(sig: &Signature, s: &[i64]) -> Vec<Pair> {
    let n = sig.n();
    let mut out = Vec::new();
    let mut a = vec![0; n];
    fn rec(sig: &Signature, s: &[i64], i: usize, a: &mut State, out: &mut Vec<Pair>) {
        if i == s.len() {
            let b: State = s.iter().zip(a.iter()).map(|(x, y)| x - y).collect();
            out.push((a.clone(), b));
            return;
        }
        let cap = sig.cap(i).unwrap_or(i64::MAX);
        let lo = (s[i] - cap).max(0);
        let hi = s[i].min(cap);
        for v in lo..=hi {
            a[i] = v;
            rec(sig, s, i + 1, a, out);
        }
        a[i] = 0;
    }
    if s.len() != n || s.iter().any(|&x| x < 0) {
        return out;
    }
    rec(sig, s, 0, &mut a, &mut out);
    out
}

pub fn enumerate_pair_sector(sig: &Signature, key: &SectorKey) -> Result<Vec<Pair>> {
    match key {
        SectorKey::A(l, m) => {
            if *l < 0 || *m < 0 {
                return Err(Error::Domain(format!("negative sector {key}")));
            }
            let wl = enumerate_wl(sig, *l);
            let wm = enumerate_wl(sig, *m);
            Ok(wl.iter().flat_map(|a| wm.iter().map(move |b| (a.clone(), b.clone()))).collect())
        }
        SectorKey::B(s) => {
            if s.len() != sig.n() || s.iter().any(|&x| x < 0) {
                return Err(Error::Domain(format!("malformed sum vector {key} for signature {sig}")));
            }
            Ok(pairs_with_sum(sig, s))
        }
        SectorKey::Parity(..) => Err(Error::Domain("parity sectors are infinite; enumerate by total instead".into())),
    }
}

/// All sum vectors s with |s| ≤ n_max admitting at least one pair.
pub fn sum_vectors(sig: &Signature, n_max: i64) -> Vec<State> {
    let mut out = Vec::new();
    let mut cur = vec![0; sig.n()];
    fn rec(sig: &Signature, i: usize, left: i64, cur: &mut State, out: &mut Vec<State>) {
        if i == sig.n() {
            out.push(cur.clone());
            return;
        }
        let hi = if sig.at(i + 1) == 1 { left.min(2) } else { left };
        for v in 0..=hi {
            cur[i] = v;
            rec(sig, i + 1, left - v, cur, out);
        }
        cur[i] = 0;
    }
    rec(sig, 0, n_max, &mut cur, &mut out);
    out.sort();
    out
}

/// All pairs with |a| + |b| ≤ n_max.
pub fn pairs_truncated(sig: &Signature, n_max: i64) -> Vec<Pair> {
    let mut v: Vec<Pair> = sum_vectors(sig, n_max).iter().flat_map(|s| pairs_with_sum(sig, s)).collect();
    v.sort();
    v
}

pub fn pair_sum(p: &Pair) -> State {
    p.0.iter().zip(p.1.iter()).map(|(x, y)| x + y).collect()
}

pub fn pair_total(p: &Pair) -> i64 {
    total(&p.0) + total(&p.1)
}

pub fn flip(p: &Pair) -> Pair {
    (p.1.clone(), p.0.clone())
}

// ---- sparse vectors ----

#[derive(Clone, Debug)]
pub struct SparseVec<K: Ord, S> {
    pub terms: BTreeMap<K, S>,
}

impl<K: Ord + Clone, S: Scalar> Default for SparseVec<K, S> {
    fn default() -> Self {
        SparseVec { terms: BTreeMap::new() }
    }
}

impl<K: Ord + Clone, S: Scalar> SparseVec<K, S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn basis(k: K, one: S) -> Self {
        let mut v = Self::new();
        v.terms.insert(k, one);
        v
    }

    pub fn add_term(&mut self, k: K, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&k) {
            Some(v) => {
                let nv = v.clone() + c;
                if nv.is_zero() {
                    self.terms.remove(&k);
                } else {
                    *v = nv;
                }
            }
            None => {
                self.terms.insert(k, c);
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Self, c: &S) {
        for (k, v) in &other.terms {
            self.add_term(k.clone(), v.clone() * c);
        }
    }

    pub fn scaled(&self, c: &S) -> Self {
        let mut out = Self::new();
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v.clone() * c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), -v.clone());
        }
        out
    }

    pub fn get(&self, k: &K) -> Option<&S> {
        self.terms.get(k)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|v| v.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|v| v.abs_f64()).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn map_keys<K2: Ord + Clone>(&self, f: impl Fn(&K) -> K2) -> SparseVec<K2, S> {
        let mut out = SparseVec::new();
        for (k, v) in &self.terms {
            out.add_term(f(k), v.clone());
        }
        out
    }
}

// ---- block operators on W⊗W ----

/// Sparse operator on W⊗W stored column by column.
#[derive(Clone, Debug)]
pub struct SparseBlockOperator<S> {
    pub sig: Signature,
    pub label: String,
    pub cols: BTreeMap<Pair, BTreeMap<Pair, S>>,
}

impl<S: Scalar> SparseBlockOperator<S> {
    pub fn new(sig: Signature, label: impl Into<String>) -> Self {
        SparseBlockOperator { sig, label: label.into(), cols: BTreeMap::new() }
    }

    /// Registers a column so that its image is known even when empty.
    pub fn touch(&mut self, input: Pair) {
        self.cols.entry(input).or_default();
    }

    pub fn insert(&mut self, out: Pair, input: Pair, v: S) {
        let col = self.cols.entry(input).or_default();
        if v.is_zero() {
            col.remove(&out);
        } else {
            col.insert(out, v);
        }
    }

    pub fn get(&self, out: &Pair, input: &Pair) -> Option<&S> {
        self.cols.get(input).and_then(|c| c.get(out))
    }

    pub fn has_column(&self, input: &Pair) -> bool {
        self.cols.contains_key(input)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Pair, &Pair, &S)> {
        self.cols.iter().flat_map(|(i, c)| c.iter().map(move |(o, v)| (o, i, v)))
    }

    pub fn nnz(&self) -> usize {
        self.cols.values().map(|c| c.len()).sum()
    }

    /// Image of a vector; errors if a needed column is unknown.
    pub fn apply(&self, v: &SparseVec<Pair, S>) -> Result<SparseVec<Pair, S>> {
        let mut out = SparseVec::new();
        for (k, c) in &v.terms {
            let col = self
                .cols
                .get(k)
                .ok_or_else(|| Error::Domain(format!("operator {} has no column {:?}", self.label, k)))?;
            for (o, x) in col {
                out.add_term(o.clone(), x.clone() * c);
            }
        }
        Ok(out)
    }

    pub fn column(&self, input: &Pair) -> Option<SparseVec<Pair, S>> {
        self.cols.get(input).map(|c| SparseVec { terms: c.clone() })
    }

    pub fn map_values<T: Scalar>(&self, f: impl Fn(&Pair, &Pair, &S) -> T) -> SparseBlockOperator<T> {
        let mut out = SparseBlockOperator::new(self.sig.clone(), self.label.clone());
        for (i, c) in &self.cols {
            out.touch(i.clone());
            for (o, v) in c {
                out.insert(o.clone(), i.clone(), f(o, i, v));
            }
        }
        out
    }

    /// Largest |A - B| over the union of columns present in both.
    pub fn max_diff(&self, other: &Self, zero: &S) -> f64 {
        let mut worst = 0.0f64;
        for (i, c) in &self.cols {
            let Some(d) = other.cols.get(i) else { continue };
            for (o, v) in c {
                let w = d.get(o).cloned().unwrap_or_else(|| zero.clone());
                worst = worst.max((v.clone() - w).abs_f64());
            }
            for (o, w) in d {
                if !c.contains_key(o) {
                    worst = worst.max(w.abs_f64());
                }
            }
        }
        worst
    }

    /// First entry where two operators differ, over the columns of `self`.
    pub fn first_mismatch<B: Backend<S = S>>(&self, other: &Self, be: &B) -> Option<(Pair, Pair, S, S)> {
        for (i, c) in &self.cols {
            let empty = BTreeMap::new();
            let d = other.cols.get(i).unwrap_or(&empty);
            let keys: std::collections::BTreeSet<&Pair> = c.keys().chain(d.keys()).collect();
            for o in keys {
                let a = c.get(o).cloned().unwrap_or_else(|| be.zero());
                let b = d.get(o).cloned().unwrap_or_else(|| be.zero());
                if !(a.clone() - b.clone()).is_zero() {
                    return Some((o.clone(), i.clone(), a, b));
                }
            }
        }
        None
    }

    /// Text dump, one entry per line.
    pub fn dump(&self, header: &str, fmt_value: impl Fn(&S) -> String) -> String {
        let mut s = String::new();
        for line in header.lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        for (o, i, v) in self.entries() {
            s.push_str(&format!(
                "{} | {} <- {} | {} : {}\n",
                join(&o.0),
                join(&o.1),
                join(&i.0),
                join(&i.1),
                fmt_value(v)
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wl_examples() {
        let s11 = Signature::parse("11").unwrap();
        assert_eq!(enumerate_wl(&s11, 1), vec![vec![0, 1], vec![1, 0]]);
        assert!(enumerate_wl(&s11, 3).is_empty());
        let s10 = Signature::parse("10").unwrap();
        assert_eq!(enumerate_wl(&s10, 2), vec![vec![0, 2], vec![1, 1]]);
    }

    #[test]
    fn pair_sector_examples() {
        let s10 = Signature::parse("10").unwrap();
        let got = enumerate_pair_sector(&s10, &SectorKey::B(vec![1, 1])).unwrap();
        let want: Vec<Pair> = vec![
            (vec![0, 0], vec![1, 1]),
            (vec![0, 1], vec![1, 0]),
            (vec![1, 0], vec![0, 1]),
            (vec![1, 1], vec![0, 0]),
        ];
        assert_eq!(got, want);
        let s1 = Signature::parse("1").unwrap();
        assert!(enumerate_pair_sector(&s1, &SectorKey::B(vec![2])).unwrap().len() == 1);
        let s0 = Signature::parse("0").unwrap();
        assert_eq!(enumerate_pair_sector(&s0, &SectorKey::B(vec![2])).unwrap().len(), 3);
        assert!(enumerate_pair_sector(&s0, &SectorKey::B(vec![1, 1])).is_err());
    }

    fn series_coeff(sig: &Signature, l: usize) -> i64 {
        // coefficient of u^l in ∏ (1+u)^{[ε=1]} (1-u)^{-[ε=0]}
        let mut c = vec![0i64; l + 1];
        c[0] = 1;
        for &e in sig.eps() {
            let mut d = vec![0i64; l + 1];
            for k in 0..=l {
                if e == 1 {
                    d[k] = c[k] + if k > 0 { c[k - 1] } else { 0 };
                } else {
                    d[k] = (0..=k).map(|j| c[j]).sum();
                }
            }
            c = d;
        }
        c[l]
    }

    #[test]
    fn wl_counts_match_generating_function() {
        for n in 1..=4 {
            for bits in 0..(1u32 << n) {
                let sig = Signature::new((0..n).map(|i| ((bits >> i) & 1) as u8).collect()).unwrap();
                for l in 0..=6 {
                    assert_eq!(enumerate_wl(&sig, l as i64).len() as i64, series_coeff(&sig, l));
                }
            }
        }
    }

    #[test]
    fn sectors_partition_truncated_basis() {
        for sig in ["10", "01", "110", "00"] {
            let sig = Signature::parse(sig).unwrap();
            let mut all: Vec<Pair> = Vec::new();
            for s in sum_vectors(&sig, 4) {
                all.extend(pairs_with_sum(&sig, &s));
            }
            let n = all.len();
            all.sort();
            all.dedup();
            assert_eq!(n, all.len());
            let direct: Vec<Pair> = enumerate_truncated(&sig, 4)
                .iter()
                .flat_map(|a| enumerate_truncated(&sig, 4).into_iter().map(move |b| (a.clone(), b)))
                .filter(|p| pair_total(p) <= 4)
                .collect();
            assert_eq!(all.len(), direct.len());
        }
    }
}
