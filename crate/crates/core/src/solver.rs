//! Sparse direct factorizations and Dirichlet elimination.
//!
//! Every linear system in the pipeline is solved by a sparse LU with partial
//! pivoting. Matrices whose coefficients change each time step (the advection
//! systems) are factored per step; constant blocks (the projection saddle)
//! are factored once and reused. Parallelism is pinned to sequential so runs
//! are bitwise reproducible.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

static INIT: Once = Once::new();

fn init_sequential() {
    INIT.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// LU factorization of a square sparse matrix.
pub struct LuFactor {
    lu: faer::sparse::solvers::Lu<usize, f64>,
    dim: usize,
}

impl LuFactor {
    pub fn new(op: &SparseOperator) -> Result<Self> {
        init_sequential();
        if op.nrows() != op.ncols() {
            return Err(Error::Assembly(format!(
                "cannot factor a {}x{} matrix",
                op.nrows(),
                op.ncols()
            )));
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = op
            .iter()
            .map(|(r, c, v)| Triplet { row: r, col: c, val: v })
            .collect();
        let mat = SparseColMat::try_new_from_triplets(op.nrows(), op.ncols(), &triplets)
            .map_err(|e| Error::Assembly(format!("sparse matrix creation failed: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| Error::DenseSolve(format!("sparse LU failed: {e:?}")))?;
        Ok(Self { lu, dim: op.nrows() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.dim);
        let mut b = faer::Mat::from_fn(self.dim, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(b.as_mut());
        (0..self.dim).map(|i| b[(i, 0)]).collect()
    }
}

/// Square system with Dirichlet constraints eliminated by row/column
/// restriction; prescribed values re-enter through the right-hand-side lift.
pub struct ConstrainedSystem {
    n: usize,
    free: Vec<usize>,
    constrained: Vec<usize>,
    factor: LuFactor,
    /// K restricted to (free rows) x (constrained cols), for the lift.
    kfd: SparseOperator,
}

impl ConstrainedSystem {
    /// `constrained` must be sorted and duplicate-free.
    pub fn new(k: &SparseOperator, constrained: &[usize]) -> Result<Self> {
        let n = k.nrows();
        debug_assert!(constrained.windows(2).all(|w| w[0] < w[1]));
        let mut is_constrained = vec![false; n];
        for &d in constrained {
            is_constrained[d] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&i| !is_constrained[i]).collect();
        let kff = k.restrict(&free, &free);
        let kfd = k.restrict(&free, constrained);
        let factor = LuFactor::new(&kff)?;
        Ok(Self {
            n,
            free,
            constrained: constrained.to_vec(),
            factor,
            kfd,
        })
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    /// Solve with the given full-length right-hand side and one prescribed
    /// value per constrained dof (in the constrained order). Returns the full
    /// solution vector with the prescribed values in place.
    pub fn solve(&self, rhs_full: &[f64], values: &[f64]) -> Vec<f64> {
        assert_eq!(rhs_full.len(), self.n);
        assert_eq!(values.len(), self.constrained.len());
        let mut rhs_f: Vec<f64> = self.free.iter().map(|&i| rhs_full[i]).collect();
        if values.iter().any(|&v| v != 0.0) {
            let lift = self.kfd.matvec(values);
            for (r, l) in rhs_f.iter_mut().zip(lift) {
                *r -= l;
            }
        }
        let x_f = self.factor.solve(&rhs_f);
        let mut x = vec![0.0; self.n];
        for (&i, &v) in self.free.iter().zip(&x_f) {
            x[i] = v;
        }
        for (&d, &v) in self.constrained.iter().zip(values) {
            x[d] = v;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::Triplets;

    #[test]
    fn lu_solves_small_system() {
        let mut t = Triplets::new(3, 3);
        t.push(0, 0, 4.0);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        t.push(1, 1, 3.0);
        t.push(1, 2, 1.0);
        t.push(2, 1, 1.0);
        t.push(2, 2, 2.0);
        let a = t.into_csr();
        let f = LuFactor::new(&a).unwrap();
        let x = f.solve(&[6.0, 10.0, 7.0]);
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip([6.0, 10.0, 7.0]) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn constrained_solve_applies_lift() {
        // 1D Laplacian on 4 nodes, u(0)=1, u(3)=4, interior harmonic
        let mut t = Triplets::new(4, 4);
        for i in 0..4usize {
            t.push(i, i, 2.0);
            if i > 0 {
                t.push(i, i - 1, -1.0);
            }
            if i < 3 {
                t.push(i, i + 1, -1.0);
            }
        }
        let k = t.into_csr();
        let sys = ConstrainedSystem::new(&k, &[0, 3]).unwrap();
        let x = sys.solve(&[0.0; 4], &[1.0, 4.0]);
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-12);
        assert!((x[2] - 3.0).abs() < 1e-12);
        assert!((x[3] - 4.0).abs() < 1e-14);
    }
}
