//! Boundary vectors χ_1, χ_2 and their 3D R eigen-relations.
//!
//! Each output component of R(χ_s(x)⊗χ_s(xy)⊗χ_s(y)) is a finite sum: the
//! conservation law fixes i = a+b-j and k = b+c-j, leaving 0 ≤ j ≤ min(a+b, b+c).
//! The cutoff therefore only matters once it drops below twice the largest
//! checked index.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalars::{Exact, Float, QPoint};
use crate::threed::r_element;

/// Coefficient of |m⟩ in |χ_s⟩.
pub fn chi_coeff(qpt: &QPoint, s: u8, m: i64) -> Exact {
    match s {
        1 => qpt.qq(1, m).inv(),
        2 if m % 2 == 0 => qpt.qq(4, m / 2).inv(),
        _ => Exact::zero(),
    }
}

/// Coefficient of |m⟩ in |χ_s(z)⟩ = z^{h/s}|χ_s⟩.
pub fn chi_dressed(qpt: &QPoint, s: u8, z: &Exact, m: i64) -> Exact {
    let c = chi_coeff(qpt, s, m);
    if c.is_zero() {
        return c;
    }
    c * z.pow(m / s as i64)
}

#[derive(Clone, Debug)]
pub struct BoundaryVector {
    pub s: u8,
    pub cutoff: i64,
    pub coefficients: Vec<Exact>,
}

impl BoundaryVector {
    pub fn new(qpt: &QPoint, s: u8, z: &Exact, cutoff: i64) -> Result<Self> {
        if s != 1 && s != 2 {
            return Err(Error::Domain(format!("boundary vector index must be 1 or 2, got {s}")));
        }
        let coefficients = (0..=cutoff).map(|m| chi_dressed(qpt, s, z, m)).collect();
        Ok(BoundaryVector { s, cutoff, coefficients })
    }

    pub fn get(&self, m: i64) -> Option<&Exact> {
        (0..=self.cutoff).contains(&m).then(|| &self.coefficients[m as usize])
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryCheck {
    pub ket_residual: f64,
    pub bra_residual: f64,
    pub components: usize,
    /// Largest contribution dropped because an internal index exceeded the cutoff.
    pub tail_estimate: f64,
    /// Ratio test over the last five shells of dropped contributions (0 when none were dropped).
    pub tail_ratio: f64,
}

impl BoundaryCheck {
    pub fn max_residual(&self) -> f64 {
        self.ket_residual.max(self.bra_residual)
    }
}

/// Componentwise residual of the ket and bra eigen-relations in the float backend,
/// on all output components with indices ≤ max_index.
pub fn verify_boundary_eigenrelation(
    qpt: &QPoint,
    s: u8,
    x: &Exact,
    y: &Exact,
    cutoff: i64,
    precision: usize,
    max_index: i64,
) -> Result<BoundaryCheck> {
    if cutoff < 10 {
        return Err(Error::Domain(format!("cutoff {cutoff} below 10")));
    }
    let xy = x * y;
    let vx = BoundaryVector::new(qpt, s, x, cutoff)?;
    let vxy = BoundaryVector::new(qpt, s, &xy, cutoff)?;
    let vy = BoundaryVector::new(qpt, s, y, cutoff)?;
    let lift = |e: &Exact| Float::from_exact(e, precision);
    let fx: Vec<Float> = vx.coefficients.iter().map(lift).collect();
    let fxy: Vec<Float> = vxy.coefficients.iter().map(lift).collect();
    let fy: Vec<Float> = vy.coefficients.iter().map(lift).collect();
    let w: Vec<Float> = (0..=cutoff).map(|m| lift(&qpt.qq(2, m))).collect();

    let comps: Vec<[i64; 3]> = (0..=max_index)
        .flat_map(|a| (0..=max_index).flat_map(move |b| (0..=max_index).map(move |c| [a, b, c])))
        .collect();

    struct Out {
        ket: f64,
        bra: f64,
        dropped: Vec<(i64, f64)>,
    }

    let results: Vec<Out> = comps
        .par_iter()
        .map(|&[a, b, c]| {
            let mut ket = Float::zero(precision);
            let mut bra = Float::zero(precision);
            let mut dropped = Vec::new();
            for j in 0..=(a + b).min(b + c) {
                let i = a + b - j;
                let k = b + c - j;
                let shell = i.max(j).max(k);
                let r = r_element(qpt, a, b, c, i, j, k);
                if r.is_zero() {
                    continue;
                }
                if shell > cutoff {
                    let mag = r.abs_f64()
                        * chi_dressed(qpt, s, x, i).abs_f64()
                        * chi_dressed(qpt, s, &xy, j).abs_f64()
                        * chi_dressed(qpt, s, y, k).abs_f64();
                    dropped.push((shell, mag));
                    continue;
                }
                let (iu, ju, ku) = (i as usize, j as usize, k as usize);
                let psi = fx[iu].clone() * &fxy[ju] * &fy[ku];
                ket = ket + lift(&r) * &psi;
                // bra side through the pairing ⟨m|m'⟩ = δ (q²)_m
                let rt = r_element(qpt, i, j, k, a, b, c);
                bra = bra + lift(&rt) * &psi * &w[iu] * &w[ju] * &w[ku];
            }
            let (au, bu, cu) = (a as usize, b as usize, c as usize);
            let target = fx[au].clone() * &fxy[bu] * &fy[cu];
            let ket_res = (ket - target.clone()).abs_f64();
            let bra_res = (bra - target * &w[au] * &w[bu] * &w[cu]).abs_f64();
            Out { ket: ket_res, bra: bra_res, dropped }
        })
        .collect();

    let mut check = BoundaryCheck { ket_residual: 0.0, bra_residual: 0.0, components: comps.len(), tail_estimate: 0.0, tail_ratio: 0.0 };
    let mut shells = std::collections::BTreeMap::<i64, f64>::new();
    for o in results {
        check.ket_residual = check.ket_residual.max(o.ket);
        check.bra_residual = check.bra_residual.max(o.bra);
        for (sh, m) in o.dropped {
            *shells.entry(sh).or_default() += m;
            check.tail_estimate = check.tail_estimate.max(m);
        }
    }
    let last: Vec<f64> = shells.values().rev().take(5).copied().collect();
    if last.len() >= 2 {
        check.tail_ratio = last.windows(2).map(|p| if p[1] > 0.0 { p[0] / p[1] } else { 0.0 }).fold(0.0, f64::max);
        if check.tail_ratio >= 1.0 {
            return Err(Error::Convergence(format!("tail ratio {} over the last shells", check.tail_ratio)));
        }
    }
    Ok(check)
}

/// Exact componentwise check of the ket relation on components with indices ≤ max_index.
pub fn boundary_eigenrelation_exact(qpt: &QPoint, s: u8, x: &Exact, y: &Exact, max_index: i64) -> bool {
    let xy = x * y;
    (0..=max_index).all(|a| {
        (0..=max_index).all(|b| {
            (0..=max_index).all(|c| {
                let mut acc = Exact::zero();
                for j in 0..=(a + b).min(b + c) {
                    let i = a + b - j;
                    let k = b + c - j;
                    acc = acc
                        + r_element(qpt, a, b, c, i, j, k)
                            * chi_dressed(qpt, s, x, i)
                            * chi_dressed(qpt, s, &xy, j)
                            * chi_dressed(qpt, s, y, k);
                }
                acc == chi_dressed(qpt, s, x, a) * chi_dressed(qpt, s, &xy, b) * chi_dressed(qpt, s, y, c)
            })
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp() -> QPoint {
        QPoint::from_ratio(1, 2).unwrap()
    }

    #[test]
    fn coefficients() {
        let q = qp();
        assert!(chi_coeff(&q, 1, 0).is_one());
        assert!(chi_coeff(&q, 2, 1).is_zero());
        let want = ((Exact::one() - q.q()) * (Exact::one() - q.q_pow(2))).inv();
        assert_eq!(chi_coeff(&q, 1, 2), want);
        assert_eq!(chi_coeff(&q, 2, 4), ((Exact::one() - q.q_pow(4)) * (Exact::one() - q.q_pow(8))).inv());
    }

    #[test]
    fn exact_relation_small() {
        let q = qp();
        for s in 1..=2 {
            assert!(boundary_eigenrelation_exact(&q, s, &Exact::one(), &Exact::one(), 4));
            assert!(boundary_eigenrelation_exact(&q, s, &Exact::ratio(2, 3), &Exact::ratio(-3, 7), 3));
        }
    }

    #[test]
    fn float_relation() {
        let q = qp();
        for s in 1..=2 {
            let c = verify_boundary_eigenrelation(&q, s, &Exact::one(), &Exact::one(), 20, 256, 4).unwrap();
            assert!(c.max_residual() < 1e-60, "{c:?}");
            assert_eq!(c.tail_estimate, 0.0);
        }
    }

    #[test]
    fn short_cutoff_reports_dropped_terms() {
        let q = qp();
        let c = verify_boundary_eigenrelation(&q, 1, &Exact::ratio(1, 3), &Exact::ratio(1, 3), 10, 128, 6).unwrap();
        assert!(c.tail_estimate > 0.0);
        assert!(c.ket_residual > 0.0);
    }

    #[test]
    fn odd_component_of_chi2_vanishes() {
        let q = qp();
        let v = BoundaryVector::new(&q, 2, &Exact::ratio(1, 2), 11).unwrap();
        assert!((0..=11).filter(|m| m % 2 == 1).all(|m| v.get(m).unwrap().is_zero()));
    }
}
