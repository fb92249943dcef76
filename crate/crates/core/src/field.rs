//! Functions and measures on vertex subsets.
//!
//! A [`FieldFunction`] assigns a complex scalar to each vertex of its support
//! (column-vector semantics); a [`FieldMeasure`] does the same with
//! row-vector semantics and integrates functions. Vertices are `usize`
//! indices into the owning network's vertex list.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used for all field values.
pub type Cx = Complex64;

/// A complex-valued function on a vertex subset.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFunction {
    support: Vec<usize>,
    values: Vec<Cx>,
}

impl FieldFunction {
    /// Builds a function from (vertex, value) pairs. Duplicate vertices are
    /// rejected.
    pub fn new(pairs: impl IntoIterator<Item = (usize, Cx)>) -> Result<Self> {
        let mut pairs: Vec<(usize, Cx)> = pairs.into_iter().collect();
        pairs.sort_by_key(|(x, _)| *x);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Invalid(format!(
                    "duplicate vertex index {} in field function",
                    w[0].0
                )));
            }
        }
        Ok(Self {
            support: pairs.iter().map(|(x, _)| *x).collect(),
            values: pairs.into_iter().map(|(_, v)| v).collect(),
        })
    }

    /// Builds from real values.
    pub fn from_real(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(x, v)| (x, Cx::new(v, 0.0))))
    }

    /// Zero function on the given support.
    pub fn zero(support: impl IntoIterator<Item = usize>) -> Self {
        let mut support: Vec<usize> = support.into_iter().collect();
        support.sort_unstable();
        support.dedup();
        let values = vec![Cx::new(0.0, 0.0); support.len()];
        Self { support, values }
    }

    /// Constant function on the given support.
    pub fn constant(support: impl IntoIterator<Item = usize>, c: Cx) -> Self {
        let mut f = Self::zero(support);
        for v in &mut f.values {
            *v = c;
        }
        f
    }

    /// Evaluates a closure on each vertex of `support`.
    pub fn from_fn(support: impl IntoIterator<Item = usize>, mut f: impl FnMut(usize) -> Cx) -> Self {
        let mut out = Self::zero(support);
        for (i, &x) in out.support.clone().iter().enumerate() {
            out.values[i] = f(x);
        }
        out
    }

    /// Reassembles a function from a vector laid out in `order`.
    pub fn from_vector(order: &[usize], v: &DVector<Cx>) -> Self {
        assert_eq!(order.len(), v.len());
        let mut pairs: Vec<(usize, Cx)> = order.iter().copied().zip(v.iter().copied()).collect();
        pairs.sort_by_key(|(x, _)| *x);
        Self {
            support: pairs.iter().map(|(x, _)| *x).collect(),
            values: pairs.into_iter().map(|(_, v)| v).collect(),
        }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn get(&self, x: usize) -> Option<Cx> {
        self.support
            .binary_search(&x)
            .ok()
            .map(|i| self.values[i])
    }

    /// Value at `x`, erroring when `x` is outside the support.
    pub fn at(&self, x: usize, context: &str) -> Result<Cx> {
        self.get(x).ok_or_else(|| Error::SupportMismatch {
            missing: x,
            context: context.to_string(),
        })
    }

    /// Extracts values in the given vertex order. Every vertex of `order`
    /// must lie in the support; extra support vertices are ignored.
    pub fn vector_for(&self, order: &[usize], context: &str) -> Result<DVector<Cx>> {
        let mut out = DVector::from_element(order.len(), Cx::new(0.0, 0.0));
        for (i, &x) in order.iter().enumerate() {
            out[i] = self.at(x, context)?;
        }
        Ok(out)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Cx)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    /// Max modulus over the support; 0 for an empty function.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.norm()))
    }

    /// True when every imaginary part is at most `tol` in modulus.
    pub fn is_real_within(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol)
    }

    /// Pointwise sum; supports must agree.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.support != other.support {
            return Err(Error::Invalid(
                "field function supports differ in add".to_string(),
            ));
        }
        Ok(Self {
            support: self.support.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Adds a constant to every value.
    pub fn shift(&self, c: Cx) -> Self {
        Self {
            support: self.support.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// Merges two functions with disjoint supports.
    pub fn union(&self, other: &Self) -> Result<Self> {
        Self::new(self.iter().chain(other.iter()))
    }

    /// Restriction to the vertices of `subset` (all must be in support).
    pub fn restrict(&self, subset: &[usize], context: &str) -> Result<Self> {
        let mut pairs = Vec::with_capacity(subset.len());
        for &x in subset {
            pairs.push((x, self.at(x, context)?));
        }
        Self::new(pairs)
    }
}

/// A complex measure on a vertex subset (row-vector semantics).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMeasure {
    support: Vec<usize>,
    weights: Vec<Cx>,
}

impl FieldMeasure {
    pub fn new(pairs: impl IntoIterator<Item = (usize, Cx)>) -> Result<Self> {
        let f = FieldFunction::new(pairs)?;
        Ok(Self {
            support: f.support,
            weights: f.values,
        })
    }

    pub fn from_real(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(x, v)| (x, Cx::new(v, 0.0))))
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn get(&self, x: usize) -> Option<Cx> {
        self.support
            .binary_search(&x)
            .ok()
            .map(|i| self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Cx)> + '_ {
        self.support.iter().copied().zip(self.weights.iter().copied())
    }

    /// Total mass.
    pub fn mass(&self) -> Cx {
        self.weights.iter().sum()
    }

    /// Integral of `f` against this measure. `f` must cover the support.
    pub fn integrate(&self, f: &FieldFunction) -> Result<Cx> {
        let mut acc = Cx::new(0.0, 0.0);
        for (x, w) in self.iter() {
            acc += w * f.at(x, "integration")?;
        }
        Ok(acc)
    }

    /// True when all weights are real, non-negative, and sum to 1.
    pub fn is_probability(&self, tol: f64) -> bool {
        self.weights
            .iter()
            .all(|w| w.im.abs() <= tol && w.re >= -tol)
            && (self.mass() - Cx::new(1.0, 0.0)).norm() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_vertex_rejected() {
        let err = FieldFunction::from_real([(0, 1.0), (0, 2.0)]).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn vector_for_reports_missing_vertex() {
        let f = FieldFunction::from_real([(0, 1.0), (2, 3.0)]).unwrap();
        let err = f.vector_for(&[0, 1], "test").unwrap_err();
        match err {
            Error::SupportMismatch { missing, .. } => assert_eq!(missing, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn integrate_weights_values() {
        let mu = FieldMeasure::from_real([(0, 0.25), (1, 0.75)]).unwrap();
        let f = FieldFunction::from_real([(0, 4.0), (1, 8.0)]).unwrap();
        assert_eq!(mu.integrate(&f).unwrap(), Cx::new(7.0, 0.0));
        assert!(mu.is_probability(1e-15));
    }

    #[test]
    fn union_disjoint_supports() {
        let a = FieldFunction::from_real([(0, 1.0)]).unwrap();
        let b = FieldFunction::from_real([(2, 2.0)]).unwrap();
        let u = a.union(&b).unwrap();
        assert_eq!(u.support(), &[0, 2]);
        assert!(a.union(&a).is_err());
    }
}
