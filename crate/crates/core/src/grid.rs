//! Finite-difference Laplacian on a uniform mesh of (0,1) with homogeneous
//! Dirichlet conditions.
//!
//! Grid functions store values on the interior nodes `x_j = j dx`,
//! `j = 1..=n`, with `dx = 1/(n+1)`; the boundary values are implicitly 0.
//! The operator `A_h` is the three-point stencil. Its eigenvectors are the
//! sampled sines `sin(k pi x_j)`, so the orthonormal DST-I diagonalises it:
//! that gives the exact semigroup `exp(dt A_h)`, while the resolvent
//! `(I - dt A_h)^{-1}` is a tridiagonal solve.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Uniform mesh of (0,1) described by its number of interior nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    n_interior: usize,
    dx: f64,
}

impl Mesh {
    pub fn new(n_interior: usize) -> Result<Self> {
        if n_interior == 0 {
            return Err(invalid("a mesh needs at least one interior node"));
        }
        Ok(Mesh {
            n_interior,
            dx: 1.0 / (n_interior as f64 + 1.0),
        })
    }

    /// Mesh whose width is `1/cells`, i.e. `cells - 1` interior nodes.
    pub fn with_cells(cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(invalid("a mesh needs at least two cells"));
        }
        Self::new(cells - 1)
    }

    #[inline]
    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Coordinates of the interior nodes.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.n_interior).map(move |j| j as f64 * self.dx)
    }

    pub(crate) fn check_same(&self, other: &Mesh) -> Result<()> {
        if self.n_interior != other.n_interior {
            return Err(Error::MeshMismatch {
                expected: self.n_interior,
                found: other.n_interior,
            });
        }
        Ok(())
    }
}

/// Field values on the interior nodes of a mesh.
#[derive(Clone, PartialEq)]
pub struct GridFunction {
    mesh: Mesh,
    values: Vec<f64>,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("n_interior", &self.mesh.n_interior)
            .field("values", &self.values)
            .finish()
    }
}

impl GridFunction {
    pub fn zeros(mesh: Mesh) -> Self {
        GridFunction {
            mesh,
            values: vec![0.0; mesh.n_interior],
        }
    }

    pub fn from_values(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_interior {
            return Err(Error::MeshMismatch {
                expected: mesh.n_interior,
                found: values.len(),
            });
        }
        Ok(GridFunction { mesh, values })
    }

    /// Samples `f` at the interior nodes.
    pub fn from_fn(mesh: Mesh, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            mesh,
            values: mesh.nodes().map(f).collect(),
        }
    }

    /// Discrete eigenvector `(v_k)_j = sin(k pi j dx)`.
    pub fn sine_mode(mesh: Mesh, k: usize) -> Self {
        Self::from_fn(mesh, |x| (k as f64 * PI * x).sin())
    }

    #[inline]
    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Discrete `L^2(0,1)` norm, `sqrt(dx * sum x_j^2)`.
    pub fn norm_h(&self) -> f64 {
        norm_h(self.mesh.dx, &self.values)
    }

    /// Sup norm, `max_j |x_j|`.
    pub fn norm_e(&self) -> f64 {
        norm_e(&self.values)
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= factor);
        self
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.mesh.check_same(&other.mesh)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(GridFunction {
            mesh: self.mesh,
            values,
        })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.mesh.check_same(&other.mesh)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(GridFunction {
            mesh: self.mesh,
            values,
        })
    }
}

#[inline]
pub fn norm_h(dx: f64, values: &[f64]) -> f64 {
    (dx * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

#[inline]
pub fn norm_e(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Orthonormal DST-I of arbitrary length, computed through a complex FFT
/// of the odd extension (length `2(n+1)`). The transform matrix
/// `sqrt(2/(n+1)) sin(pi j k/(n+1))` is symmetric and its own inverse.
#[derive(Clone)]
pub struct SineTransform {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl SineTransform {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * (len + 1));
        SineTransform {
            len,
            fft,
            scale: (2.0 / (len as f64 + 1.0)).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Applies the transform in place. Forward and inverse coincide.
    pub fn apply(&self, data: &mut [f64]) {
        debug_assert_eq!(data.len(), self.len);
        let n = self.len;
        let period = 2 * (n + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); period];
        for (j, &v) in data.iter().enumerate() {
            buf[j + 1] = Complex::new(v, 0.0);
            buf[period - j - 1] = Complex::new(-v, 0.0);
        }
        self.fft.process(&mut buf);
        // F_k = -2i sum_j x_j sin(pi j k/(n+1))
        for (k, out) in data.iter_mut().enumerate() {
            *out = -0.5 * self.scale * buf[k + 1].im;
        }
    }
}

/// Tridiagonal factorisation of `I - dt A_h`, reusable across solves.
#[derive(Debug, Clone)]
pub struct Resolvent {
    dt: f64,
    off: f64,
    // modified super-diagonal and inverse pivots of the forward sweep
    c_prime: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Resolvent {
    fn new(mesh: Mesh, dt: f64) -> Self {
        let n = mesh.n_interior;
        let r = dt / (mesh.dx * mesh.dx);
        let diag = 1.0 + 2.0 * r;
        let off = -r;
        let mut c_prime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_c = 0.0;
        for j in 0..n {
            let pivot = diag - off * prev_c;
            inv_pivot[j] = 1.0 / pivot;
            c_prime[j] = off * inv_pivot[j];
            prev_c = c_prime[j];
        }
        Resolvent {
            dt,
            off,
            c_prime,
            inv_pivot,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Overwrites `rhs` with `(I - dt A_h)^{-1} rhs` (Thomas algorithm).
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        debug_assert_eq!(n, self.c_prime.len());
        let mut prev = 0.0;
        for (r, p) in rhs.iter_mut().zip(&self.inv_pivot) {
            *r = (*r - self.off * prev) * p;
            prev = *r;
        }
        for j in (0..n.saturating_sub(1)).rev() {
            rhs[j] -= self.c_prime[j] * rhs[j + 1];
        }
    }
}

/// The discrete Dirichlet Laplacian together with its spectral data.
#[derive(Clone)]
pub struct DiscreteOperator {
    mesh: Mesh,
    eigenvalues: Vec<f64>,
    dst: SineTransform,
}

impl fmt::Debug for DiscreteOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteOperator")
            .field("mesh", &self.mesh)
            .finish_non_exhaustive()
    }
}

impl DiscreteOperator {
    pub fn new(mesh: Mesh) -> Self {
        let h = mesh.dx;
        let eigenvalues = (1..=mesh.n_interior)
            .map(|k| {
                let s = (k as f64 * PI * h / 2.0).sin();
                4.0 / (h * h) * s * s
            })
            .collect();
        DiscreteOperator {
            mesh,
            eigenvalues,
            dst: SineTransform::new(mesh.n_interior),
        }
    }

    #[inline]
    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    /// Eigenvalues of `-A_h`, increasing in the mode index.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn transform(&self) -> &SineTransform {
        &self.dst
    }

    pub fn apply_laplacian(&self, x: &GridFunction) -> Result<GridFunction> {
        self.mesh.check_same(&x.mesh)?;
        let v = &x.values;
        let n = v.len();
        let inv_h2 = 1.0 / (self.mesh.dx * self.mesh.dx);
        let values = (0..n)
            .map(|j| {
                let left = if j > 0 { v[j - 1] } else { 0.0 };
                let right = if j + 1 < n { v[j + 1] } else { 0.0 };
                (left - 2.0 * v[j] + right) * inv_h2
            })
            .collect();
        Ok(GridFunction {
            mesh: self.mesh,
            values,
        })
    }

    pub fn resolvent(&self, dt: f64) -> Result<Resolvent> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        Ok(Resolvent::new(self.mesh, dt))
    }

    /// Solves `(I - dt A_h) y = rhs`.
    pub fn solve_resolvent(&self, dt: f64, rhs: &GridFunction) -> Result<GridFunction> {
        self.mesh.check_same(&rhs.mesh)?;
        let solver = self.resolvent(dt)?;
        let mut out = rhs.clone();
        solver.solve_in_place(&mut out.values);
        Ok(out)
    }

    /// Damping factors `exp(-dt lambda_k)` of the semigroup.
    pub fn semigroup_factors(&self, dt: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| (-dt * l).exp()).collect()
    }

    /// Applies a diagonal multiplier in the sine basis.
    pub fn apply_spectral_in_place(&self, factors: &[f64], data: &mut [f64]) {
        self.dst.apply(data);
        data.iter_mut().zip(factors).for_each(|(v, f)| *v *= f);
        self.dst.apply(data);
    }

    /// `exp(dt A_h) x`.
    pub fn apply_semigroup(&self, dt: f64, x: &GridFunction) -> Result<GridFunction> {
        self.mesh.check_same(&x.mesh)?;
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(invalid(format!("semigroup time must be >= 0, got {dt}")));
        }
        let mut out = x.clone();
        self.apply_spectral_in_place(&self.semigroup_factors(dt), &mut out.values);
        Ok(out)
    }
}
