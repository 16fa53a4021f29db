//! Laurent polynomials in one variable with exact coefficients.

use std::collections::BTreeMap;

use crate::scalars::Exact;

/// Σ_e coef_e · t^e.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LaurentInT {
    pub terms: BTreeMap<i64, Exact>,
}

impl LaurentInT {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Exact) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: Exact, e: i64) -> Self {
        let mut t = BTreeMap::new();
        if !c.is_zero() {
            t.insert(e, c);
        }
        LaurentInT { terms: t }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: i64, c: Exact) {
        if c.is_zero() {
            return;
        }
        let v = self.terms.entry(e).or_insert_with(Exact::zero);
        *v = &*v + &c;
        if v.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(*e, c.clone());
        }
        r
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = LaurentInT::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                r.add_term(e1 + e2, c1 * c2);
            }
        }
        r
    }

    pub fn scale(&self, c: &Exact) -> Self {
        let mut r = LaurentInT::zero();
        for (e, v) in &self.terms {
            r.add_term(*e, v * c);
        }
        r
    }

    pub fn eval(&self, t: &Exact) -> Exact {
        self.terms.iter().fold(Exact::zero(), |acc, (e, c)| acc + c * &t.pow(*e))
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_eval() {
        let a = {
            let mut a = LaurentInT::constant(Exact::one());
            a.add_term(1, Exact::int(2));
            a
        };
        let b = LaurentInT::monomial(Exact::int(3), -1);
        let p = a.mul(&b);
        let t = Exact::ratio(2, 5);
        assert_eq!(p.eval(&t), a.eval(&t) * b.eval(&t));
        assert_eq!(p.min_exponent(), Some(-1));
        let z = a.add(&a.scale(&Exact::int(-1)));
        assert!(z.is_zero());
    }
}
