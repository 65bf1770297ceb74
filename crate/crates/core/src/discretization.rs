//! Uniform grids and the tridiagonal discretization of
//! `u -> -(d(x,t) u_x)_x + r(x,t) u` on `[0, L]`.
//!
//! The interior stencil is in flux form with face diffusivities sampled at
//! `x_i +- h/2`. Dirichlet boundaries are eliminated (unknowns are the
//! `N - 1` interior nodes). Robin/Neumann boundaries keep all `N + 1` nodes;
//! the condition `du/dnu + beta u = 0` is folded into the boundary rows by
//! eliminating a ghost node, which yields the half-cell balance
//!
//! ```text
//! (2 / h^2) d_{1/2} (u_0 - u_1) + (2 / h) d(0) beta(0) u_0
//! ```
//!
//! at `x = 0` and its mirror image at `x = L`. These operators are symmetric
//! in the trapezoidal inner product `diag(h/2, h, ..., h, h/2)`.

use crate::error::{Error, Result};
use crate::model::{BoundaryCondition, CoefficientField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub length: f64,
    pub intervals: usize,
    pub h: f64,
}

pub fn build_grid(length: f64, intervals: usize) -> Result<Grid> {
    if intervals < 4 {
        return Err(Error::Validation(format!(
            "grid needs at least 4 intervals, got {intervals}"
        )));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Validation(format!("grid length must be positive, got {length}")));
    }
    Ok(Grid {
        length,
        intervals,
        h: length / intervals as f64,
    })
}

impl Grid {
    pub fn node_count(&self) -> usize {
        self.intervals + 1
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.length
        } else {
            i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.intervals).map(|i| self.x(i)).collect()
    }

    /// Face midpoints `x_i + h/2`, `i = 0..N`.
    pub fn faces(&self) -> Vec<f64> {
        (0..self.intervals).map(|i| (i as f64 + 0.5) * self.h).collect()
    }

    /// Trapezoidal-rule average of a nodal field over `[0, L]`.
    pub fn average(&self, u: &[f64]) -> f64 {
        let n = self.intervals;
        let inner: f64 = u[1..n].iter().sum();
        (inner + 0.5 * (u[0] + u[n])) / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Robin,
}

impl BoundaryKind {
    pub fn of(bc: &BoundaryCondition) -> Self {
        if bc.is_dirichlet() {
            BoundaryKind::Dirichlet
        } else {
            BoundaryKind::Robin
        }
    }

    /// Index of the first unknown among the grid nodes.
    #[inline]
    pub fn offset(self) -> usize {
        match self {
            BoundaryKind::Dirichlet => 1,
            BoundaryKind::Robin => 0,
        }
    }

    pub fn unknowns(self, grid: &Grid) -> usize {
        match self {
            BoundaryKind::Dirichlet => grid.intervals - 1,
            BoundaryKind::Robin => grid.intervals + 1,
        }
    }
}

/// Tridiagonal matrix over the unknowns of one boundary configuration.
/// `lower[0]` and `upper[n - 1]` are unused and kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub kind: BoundaryKind,
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn identity(kind: BoundaryKind, n: usize) -> Self {
        Self {
            kind,
            lower: vec![0.0; n],
            diag: vec![1.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn unknown_count(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|k| {
                let mut v = self.diag[k] * u[k];
                if k > 0 {
                    v += self.lower[k] * u[k - 1];
                }
                if k + 1 < n {
                    v += self.upper[k] * u[k + 1];
                }
                v
            })
            .collect()
    }

    /// `I + dt * self`.
    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            kind: self.kind,
            lower: self.lower.iter().map(|v| dt * v).collect(),
            diag: self.diag.iter().map(|v| 1.0 + dt * v).collect(),
            upper: self.upper.iter().map(|v| dt * v).collect(),
        }
    }

    /// Nonpositive off-diagonals, positive diagonal, weak row diagonal
    /// dominance: the structural M-matrix conditions that make the implicit
    /// step positivity preserving.
    pub fn is_m_matrix(&self) -> bool {
        let n = self.diag.len();
        (0..n).all(|k| {
            let lo = if k > 0 { self.lower[k] } else { 0.0 };
            let up = if k + 1 < n { self.upper[k] } else { 0.0 };
            lo <= 0.0 && up <= 0.0 && self.diag[k] > 0.0 && self.diag[k] + lo + up >= -1e-12 * self.diag[k]
        })
    }

    /// Symmetry of `W A` with `W` the trapezoidal weights of the unknowns.
    pub fn is_mass_symmetric(&self, tol: f64) -> bool {
        let n = self.diag.len();
        let w = |k: usize| match self.kind {
            BoundaryKind::Robin if k == 0 || k == n - 1 => 0.5,
            _ => 1.0,
        };
        (0..n - 1).all(|k| {
            let a = w(k) * self.upper[k];
            let b = w(k + 1) * self.lower[k + 1];
            (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
        })
    }

    /// Principal (smallest real) eigenvalue by inverse iteration on a shift
    /// that makes the matrix a nonsingular M-matrix. Requires nonpositive
    /// off-diagonals.
    pub fn principal_eigenvalue(&self, tol: f64, max_iter: usize) -> Result<(f64, Vec<f64>)> {
        let n = self.diag.len();
        let mut slack = f64::INFINITY;
        for k in 0..n {
            let lo = if k > 0 { self.lower[k] } else { 0.0 };
            let up = if k + 1 < n { self.upper[k] } else { 0.0 };
            slack = slack.min(self.diag[k] + lo + up);
        }
        let shift = (-slack).max(0.0) + 1.0;
        let mut shifted = self.clone();
        shifted.diag.iter_mut().for_each(|d| *d += shift);
        let lu = TridiagonalLu::factor(&shifted.lower, &shifted.diag, &shifted.upper)?;

        let mut v = vec![1.0; n];
        let mut rho_prev = 0.0;
        for it in 0..max_iter {
            let mut w = v.clone();
            lu.solve_in_place(&mut w);
            let rho = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            w.iter_mut().for_each(|x| *x /= rho);
            let moved = v.iter().zip(&w).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            v = w;
            if it > 0 && (rho - rho_prev).abs() <= tol * rho && moved <= tol.sqrt() {
                return Ok((1.0 / rho - shift, v));
            }
            rho_prev = rho;
        }
        Err(Error::NonConvergence {
            what: "inverse iteration",
            iterations: max_iter,
            residual: f64::NAN,
        })
    }
}

/// Diffusion part sampled at one time: face values, end values of `d` and
/// `beta`.
pub fn assemble_diffusion(
    grid: &Grid,
    kind: BoundaryKind,
    d_faces: &[f64],
    d_ends: [f64; 2],
    beta_ends: [f64; 2],
) -> TridiagonalOperator {
    let n_int = grid.intervals;
    let h2 = grid.h * grid.h;
    let n = kind.unknowns(grid);
    let off = kind.offset();
    let mut op = TridiagonalOperator {
        kind,
        lower: vec![0.0; n],
        diag: vec![0.0; n],
        upper: vec![0.0; n],
    };
    for k in 0..n {
        let i = k + off;
        if i == 0 {
            op.diag[k] = 2.0 * d_faces[0] / h2 + 2.0 * d_ends[0] * beta_ends[0] / grid.h;
            op.upper[k] = -2.0 * d_faces[0] / h2;
        } else if i == n_int {
            op.diag[k] = 2.0 * d_faces[n_int - 1] / h2 + 2.0 * d_ends[1] * beta_ends[1] / grid.h;
            op.lower[k] = -2.0 * d_faces[n_int - 1] / h2;
        } else {
            let (dl, dr) = (d_faces[i - 1], d_faces[i]);
            op.diag[k] = (dl + dr) / h2;
            if k > 0 {
                op.lower[k] = -dl / h2;
            }
            if k + 1 < n {
                op.upper[k] = -dr / h2;
            }
        }
    }
    op
}

/// Samples `d` at faces and ends, checking strict positivity.
pub fn sample_diffusion(grid: &Grid, d: &CoefficientField, t: f64) -> Result<(Vec<f64>, [f64; 2])> {
    let faces: Vec<f64> = grid.faces().iter().map(|&x| d.value(x, t)).collect();
    let ends = [d.value(0.0, t), d.value(grid.length, t)];
    if let Some(bad) = faces.iter().chain(ends.iter()).find(|v| !(**v > 0.0)) {
        return Err(Error::Assembly(format!(
            "diffusion coefficient must be positive, sampled {bad} at t = {t}"
        )));
    }
    Ok((faces, ends))
}

/// Assembles `A(t) u = -(d u_x)_x + reaction u` under the given boundary
/// condition.
pub fn assemble_operator(
    grid: &Grid,
    d: &CoefficientField,
    reaction: &CoefficientField,
    t: f64,
    bc: &BoundaryCondition,
) -> Result<TridiagonalOperator> {
    let kind = BoundaryKind::of(bc);
    let (faces, ends) = sample_diffusion(grid, d, t)?;
    let beta = [bc.beta.value(0.0, t), bc.beta.value(grid.length, t)];
    let mut op = assemble_diffusion(grid, kind, &faces, ends, beta);
    let off = kind.offset();
    for (k, dk) in op.diag.iter_mut().enumerate() {
        *dk += reaction.value(grid.x(k + off), t);
    }
    Ok(op)
}

/// Thomas-algorithm factorization, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    /// Elimination multipliers `l_k = lower_k / pivot_{k-1}`.
    mult: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagonalLu {
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut mult = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut pivot = diag[0];
        for k in 0..n {
            if k > 0 {
                mult[k] = lower[k] * inv_pivot[k - 1];
                pivot = diag[k] - mult[k] * upper[k - 1];
            }
            if pivot == 0.0 || !pivot.is_finite() || pivot.abs() < 1e-300 {
                return Err(Error::Singular { row: k });
            }
            inv_pivot[k] = 1.0 / pivot;
        }
        Ok(Self {
            mult,
            inv_pivot,
            upper: upper.to_vec(),
        })
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        for k in 1..n {
            rhs[k] -= self.mult[k] * rhs[k - 1];
        }
        rhs[n - 1] *= self.inv_pivot[n - 1];
        for k in (0..n - 1).rev() {
            rhs[k] = (rhs[k] - self.upper[k] * rhs[k + 1]) * self.inv_pivot[k];
        }
    }
}

/// Direct `O(n)` solve of `op u = rhs`.
pub fn tridiagonal_solve(op: &TridiagonalOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != op.unknown_count() {
        return Err(Error::Validation(format!(
            "right-hand side has length {}, operator has {} unknowns",
            rhs.len(),
            op.unknown_count()
        )));
    }
    let lu = TridiagonalLu::factor(&op.lower, &op.diag, &op.upper)?;
    let mut u = rhs.to_vec();
    lu.solve_in_place(&mut u);
    Ok(u)
}

/// Scratch buffers for [`solve_implicit`].
#[derive(Debug, Default, Clone)]
pub struct SolveScratch {
    c: Vec<f64>,
    d: Vec<f64>,
}

/// Solves `(I + dt (A + diag(sink))) u = rhs` for node-indexed `sink`,
/// `rhs` and `out`. Dirichlet boundary nodes of `out` are set to zero.
pub fn solve_implicit(
    op: &TridiagonalOperator,
    dt: f64,
    sink: &[f64],
    rhs: &[f64],
    out: &mut [f64],
    scratch: &mut SolveScratch,
) -> Result<()> {
    let n = op.diag.len();
    let off = op.kind.offset();
    scratch.c.resize(n, 0.0);
    scratch.d.resize(n, 0.0);
    let (c, d) = (&mut scratch.c, &mut scratch.d);
    let mut prev_c = 0.0;
    let mut prev_d = 0.0;
    for k in 0..n {
        let i = k + off;
        let lo = if k > 0 { dt * op.lower[k] } else { 0.0 };
        let up = if k + 1 < n { dt * op.upper[k] } else { 0.0 };
        let piv = 1.0 + dt * (op.diag[k] + sink[i]) - lo * prev_c;
        if piv == 0.0 || !piv.is_finite() {
            return Err(Error::Singular { row: k });
        }
        let inv = 1.0 / piv;
        c[k] = up * inv;
        d[k] = (rhs[i] - lo * prev_d) * inv;
        prev_c = c[k];
        prev_d = d[k];
    }
    out[n - 1 + off] = d[n - 1];
    for k in (0..n - 1).rev() {
        out[k + off] = d[k] - c[k] * out[k + 1 + off];
    }
    if off == 1 {
        out[0] = 0.0;
        out[out.len() - 1] = 0.0;
    }
    Ok(())
}
