//! Gauss-Hermite quadrature and complex-Gaussian expectations.
//!
//! A rule of order `n` integrates `f(t) * exp(-t^2)` over the real line
//! exactly for polynomials `f` of degree up to `2n - 1` (physicists'
//! convention). Two rules tensored together evaluate expectations over a
//! circularly-symmetric complex Gaussian `Z ~ CN(0, 1)`, whose density
//! `exp(-|z|^2) / pi` puts variance 1/2 on each real component.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::{Error, Result};

/// Largest supported rule order.
pub const MAX_ORDER: usize = 128;

/// Default order per dimension. The information-theoretic integrands
/// develop transition layers of width `1/(sqrt(snr) d_min)` that tensor
/// Gauss-Hermite resolves slowly: measured against finite differences of the
/// mutual information, order 32 leaves errors near 3e-4 around snr 3 on
/// BPSK, order 64 near 2e-5, order 96 near 4e-6, order 128 near 8e-7.
/// 96 nodes per axis keeps the I-MMSE identity good to a few 1e-6 over
/// snr in [0.01, 100] on the built-in constellations while sweeps stay fast.
pub const DEFAULT_ORDER: usize = 96;

/// Nodes and weights of a Gauss-Hermite rule for the weight `exp(-t^2)`.
///
/// Nodes are sorted ascending and exactly symmetric about zero; weights are
/// positive and sum to `sqrt(pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

struct HermiteEval {
    /// p_n(x), the degree-n orthonormal Hermite polynomial.
    value: f64,
    /// p_{n-1}(x).
    previous: f64,
    /// sum_{j=0}^{n-1} p_j(x)^2, the inverse Christoffel number.
    sum_of_squares: f64,
}

/// Evaluates the polynomials orthonormal under `exp(-x^2) dx` via the
/// three-term recurrence `x p_j = b_{j+1} p_{j+1} + b_j p_{j-1}` with
/// `b_j = sqrt(j/2)` and `p_0 = pi^(-1/4)`.
fn orthonormal_hermite(n: usize, x: f64) -> HermiteEval {
    let mut below = 0.0;
    let mut current = PI.powf(-0.25);
    let mut sum_of_squares = current * current;
    for j in 0..n {
        let next = (x * current - (j as f64 / 2.0).sqrt() * below)
            / ((j as f64 + 1.0) / 2.0).sqrt();
        below = current;
        current = next;
        if j + 1 < n {
            sum_of_squares += current * current;
        }
    }
    HermiteEval {
        value: current,
        previous: below,
        sum_of_squares,
    }
}

impl QuadratureRule {
    /// Builds the order-`n` Gauss-Hermite rule via the Golub-Welsch
    /// algorithm: nodes are the eigenvalues of the symmetric tridiagonal
    /// Jacobi matrix (zero diagonal, off-diagonal `sqrt(k/2)`). Each node is
    /// polished with a few Newton steps on the orthonormal Hermite
    /// recurrence and the weights are the Christoffel numbers
    /// `1 / sum_j p_j(x)^2`, which keeps full relative precision even for
    /// the exponentially small edge weights the eigenvector route loses.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_ORDER {
            return Err(Error::InvalidQuadratureOrder(n));
        }

        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let off = (k as f64 / 2.0).sqrt();
            jacobi[(k - 1, k)] = off;
            jacobi[(k, k - 1)] = off;
        }

        let eigen = jacobi.symmetric_eigen();
        let mut nodes: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
        nodes.sort_by(f64::total_cmp);

        let mut weights = Vec::with_capacity(n);
        for node in &mut nodes {
            for _ in 0..3 {
                let eval = orthonormal_hermite(n, *node);
                // p_n'(x) = sqrt(2n) p_{n-1}(x)
                let derivative = (2.0 * n as f64).sqrt() * eval.previous;
                if derivative != 0.0 {
                    *node -= eval.value / derivative;
                }
            }
            weights.push(1.0 / orthonormal_hermite(n, *node).sum_of_squares);
        }

        // Enforce the exact +/- symmetry of the Hermite roots; the eigensolver
        // delivers it only to rounding. Odd moments then cancel bit-for-bit.
        for k in 0..n / 2 {
            let j = n - 1 - k;
            let node = 0.5 * (nodes[j] - nodes[k]);
            nodes[k] = -node;
            nodes[j] = node;
            let w = 0.5 * (weights[k] + weights[j]);
            weights[k] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }

        Ok(Self { nodes, weights })
    }

    /// Rule of [`DEFAULT_ORDER`].
    pub fn default_rule() -> Self {
        Self::gauss_hermite(DEFAULT_ORDER).expect("default order is valid")
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Approximates the 1-D integral of `f(t) * exp(-t^2)` over the real
    /// line. Symmetric node pairs are summed together so that odd integrands
    /// cancel exactly rather than to rounding.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let n = self.nodes.len();
        let mut acc = 0.0;
        for k in 0..n / 2 {
            let j = n - 1 - k;
            acc += self.weights[k] * (f(self.nodes[k]) + f(self.nodes[j]));
        }
        if n % 2 == 1 {
            let mid = n / 2;
            acc += self.weights[mid] * f(self.nodes[mid]);
        }
        acc
    }

    /// Approximates `E[f(Z)]` for `Z ~ CN(0, 1)` as
    /// `(1/pi) * sum_j sum_k w_j w_k f(node_j + i node_k)`.
    ///
    /// Returns an error carrying the offending node if `f` produces a
    /// non-finite value anywhere on the tensor grid.
    pub fn expect_complex_gaussian<F: Fn(Complex64) -> f64>(&self, f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (&u, &wu) in self.nodes.iter().zip(&self.weights) {
            let mut row = 0.0;
            for (&v, &wv) in self.nodes.iter().zip(&self.weights) {
                let value = f(Complex64::new(u, v));
                if !value.is_finite() {
                    return Err(Error::NonFiniteIntegrand { re: u, im: v, value });
                }
                row += wv * value;
            }
            acc += wu * row;
        }
        Ok(acc / PI)
    }
}
