use std::collections::{BTreeMap, HashMap};

use num::ToPrimitive;

use super::expr::{Atom, Expression, Family, Jet, VectorExpression};
use super::grid::{sup_norm, GridFunction, SpectralGrid, DEFAULT_MEAN_TOLERANCE};
use crate::error::{Error, Result};

/// Grid samples assigned to each field family.
#[derive(Clone, Debug)]
pub struct FieldData {
    grid: SpectralGrid,
    fields: BTreeMap<Family, GridFunction>,
    mean_tolerance: f64,
}

impl FieldData {
    pub fn new(grid: SpectralGrid) -> FieldData {
        FieldData {
            grid,
            fields: BTreeMap::new(),
            mean_tolerance: DEFAULT_MEAN_TOLERANCE,
        }
    }

    pub fn with(mut self, family: Family, f: GridFunction) -> FieldData {
        self.insert(family, f);
        self
    }

    pub fn insert(&mut self, family: Family, f: GridFunction) {
        assert_eq!(f.grid(), &self.grid, "field grid differs from data grid");
        self.fields.insert(family, f);
    }

    pub fn with_mean_tolerance(mut self, tol: f64) -> FieldData {
        self.mean_tolerance = tol;
        self
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn field(&self, family: Family) -> Option<&GridFunction> {
        self.fields.get(&family)
    }
}

/// Evaluator with memoized jets and atoms for repeated use on one data set.
pub struct Evaluator<'a> {
    data: &'a FieldData,
    jets: HashMap<Jet, Vec<f64>>,
    atoms: HashMap<Atom, Vec<f64>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(data: &'a FieldData) -> Evaluator<'a> {
        Evaluator {
            data,
            jets: HashMap::new(),
            atoms: HashMap::new(),
        }
    }

    fn jet(&mut self, j: &Jet) -> Result<&[f64]> {
        if !self.jets.contains_key(j) {
            let f = self
                .data
                .field(j.family)
                .ok_or(Error::MissingField(j.family.symbol()))?;
            let c = j.component as usize;
            if c > f.dims() {
                return Err(Error::Dimension(format!(
                    "{} has {} components, expression uses {}",
                    j.family.symbol(),
                    f.dims(),
                    c
                )));
            }
            let v = self.data.grid.derivative(f.component(c - 1), j.order as usize);
            self.jets.insert(*j, v);
        }
        Ok(&self.jets[j])
    }

    fn atom(&mut self, a: &Atom) -> Result<Vec<f64>> {
        if let Some(v) = self.atoms.get(a) {
            return Ok(v.clone());
        }
        let arg = self.eval(a.argument())?;
        let grid = &self.data.grid;
        let mean = grid.mean(&arg);
        let tol = self.data.mean_tolerance * sup_norm(&arg);
        if mean.abs() > tol && mean != 0.0 {
            return Err(Error::NonzeroMean {
                atom: format!("Dxi({})", a.argument()),
                mean,
                tolerance: tol,
            });
        }
        let v = grid.antiderivative_unchecked(&arg);
        self.atoms.insert(a.clone(), v.clone());
        Ok(v)
    }

    pub fn eval(&mut self, e: &Expression) -> Result<Vec<f64>> {
        let n = self.data.grid.n();
        let mut out = vec![0.0; n];
        for (m, c) in e.terms() {
            let c = c.to_f64().expect("rational coefficient fits f64");
            let mut prod = vec![c; n];
            for (j, k) in m.jets() {
                let v = self.jet(j)?;
                for (p, x) in prod.iter_mut().zip(v) {
                    *p *= x.powi(*k as i32);
                }
            }
            for (a, k) in m.atoms() {
                let v = self.atom(a)?;
                for (p, x) in prod.iter_mut().zip(&v) {
                    *p *= x.powi(*k as i32);
                }
            }
            for (o, p) in out.iter_mut().zip(&prod) {
                *o += p;
            }
        }
        Ok(out)
    }

    pub fn eval_vec(&mut self, v: &VectorExpression) -> Result<GridFunction> {
        let comps = v.0.iter().map(|c| self.eval(c)).collect::<Result<Vec<_>>>()?;
        GridFunction::new(self.data.grid.clone(), comps)
    }
}

/// Evaluate `e` pointwise on the grid.
pub fn evaluate_on_grid(e: &Expression, data: &FieldData) -> Result<Vec<f64>> {
    Evaluator::new(data).eval(e)
}

pub fn evaluate_vector_on_grid(v: &VectorExpression, data: &FieldData) -> Result<GridFunction> {
    Evaluator::new(data).eval_vec(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffpoly::calculus::dxi;
    use crate::diffpoly::expr::rat;
    use std::f64::consts::PI;

    fn data() -> FieldData {
        let g = SpectralGrid::new(64, 2.0 * PI).unwrap();
        let u = GridFunction::from_fn(g.clone(), 2, |c, x| {
            if c == 0 {
                x.sin() + 0.2 * (2.0 * x).cos()
            } else {
                0.5 * (3.0 * x).sin()
            }
        });
        FieldData::new(g).with(Family::U, u)
    }

    #[test]
    fn evaluates_jet() {
        let d = data();
        let v = evaluate_on_grid(&Expression::u(1, 0), &d).unwrap();
        assert_eq!(v, d.field(Family::U).unwrap().component(0));
    }

    #[test]
    fn atom_matches_symbolic_antiderivative() {
        let d = data();
        let uu = &(&Expression::u(1, 0) * &Expression::u(1, 0))
            + &(&Expression::u(2, 0) * &Expression::u(2, 0));
        let pairing = crate::diffpoly::calculus::dx(&uu).scale(&rat(1, 2));
        // dxi resolves the pairing exactly; evaluate the raw atom too
        let atom_val = d.grid().antiderivative_unchecked(&evaluate_on_grid(&pairing, &d).unwrap());
        let half = evaluate_on_grid(&uu.scale(&rat(1, 2)), &d).unwrap();
        let m = d.grid().mean(&half);
        for (a, h) in atom_val.iter().zip(&half) {
            assert!((a - (h - m)).abs() < 1e-10);
        }
        assert_eq!(dxi(&pairing).unwrap(), uu.scale(&rat(1, 2)));
    }

    #[test]
    fn nonzero_mean_atom_rejected() {
        let d = data();
        let a = dxi(&(&Expression::u(1, 0) * &Expression::u(1, 0))).unwrap();
        assert!(matches!(
            evaluate_on_grid(&a, &d),
            Err(Error::NonzeroMean { .. })
        ));
    }

    #[test]
    fn missing_field() {
        let d = data();
        assert_eq!(
            evaluate_on_grid(&Expression::field(Family::P, 1, 0), &d),
            Err(Error::MissingField('P'))
        );
    }
}
