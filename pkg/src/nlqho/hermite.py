"""Hermite functions, Gauss-Hermite quadrature, and product-expansion tables.

Conventions (1-based index j, matching the operator T = -d_xx + x^2):
h_j is the L^2-normalized eigenfunction with T h_j = (2j-1) h_j, so
h_1(x) = pi^{-1/4} exp(-x^2/2).

The quadrature stored in a HermiteBasis uses *total* weights: for any F
that is (polynomial of degree <= 2n-1) times exp(-x^2),

    integral F(x) dx  ==  sum_i weights[i] * F(nodes[i])        (exactly).

Products with a different combined Gaussian exp(-q x^2) are handled by the
substitution x = y / sqrt(q); see scaled_quadrature().
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from ._accel import HAVE_NUMBA, njit


@njit(cache=True)
def _values_kernel(x, cap):
    """Table h_j(x_i) for 1 <= j <= cap via the normalized recurrence."""
    n = x.shape[0]
    out = np.empty((cap, n))
    c0 = np.pi ** (-0.25)
    for i in range(n):
        xi = x[i]
        e = np.exp(-0.5 * xi * xi)
        out[0, i] = c0 * e
        if cap > 1:
            out[1, i] = xi * np.sqrt(2.0) * out[0, i]
        for m in range(2, cap):
            out[m, i] = (xi * np.sqrt(2.0 / m) * out[m - 1, i]
                         - np.sqrt((m - 1.0) / m) * out[m - 2, i])
    return out


def _values_numpy(x, cap):
    out = np.empty((cap, x.shape[0]))
    out[0] = np.pi ** (-0.25) * np.exp(-0.5 * x * x)
    if cap > 1:
        out[1] = x * np.sqrt(2.0) * out[0]
    for m in range(2, cap):
        out[m] = (x * np.sqrt(2.0 / m) * out[m - 1]
                  - np.sqrt((m - 1.0) / m) * out[m - 2])
    return out


def hermite_values(x, cap):
    """Matrix of h_j(x) values, shape (cap, len(x)); row j-1 holds h_j.

    The normalized three-term recurrence keeps every intermediate at unit
    scale, so the table stays finite well past j ~ 150 where raw Hermite
    polynomials overflow.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if HAVE_NUMBA:
        return _values_kernel(x, cap)
    return _values_numpy(x, cap)


@dataclass(frozen=True)
class HermiteBasis:
    """Quadrature rule plus an evaluation table of h_1..h_cap at the nodes."""

    cap: int
    quad_order: int
    nodes: np.ndarray      # strictly increasing abscissae
    weights: np.ndarray    # total weights (Gaussian factor absorbed)
    values: np.ndarray     # values[j-1, i] = h_j(nodes[i])

    def eval_table(self, x, cap=None):
        """h_j values at arbitrary points x, shape (cap, len(x))."""
        return hermite_values(x, self.cap if cap is None else cap)


def gauss_hermite(n):
    """Nodes and total weights of the n-point Gauss-Hermite rule.

    Nodes are the eigenvalues of the Jacobi matrix (Golub-Welsch); weights
    come out of the Christoffel identity w_i = 1 / (n * psi_{n-1}(x_i)^2)
    with psi the orthonormal Hermite functions, which never over/underflows
    because psi stays at unit scale.
    """
    if n < 1:
        raise ValueError("quadrature order must be >= 1")
    off = np.sqrt(np.arange(1, n) / 2.0)
    nodes, _ = eigh_tridiagonal(np.zeros(n), off, eigvals_only=False)
    psi = hermite_values(nodes, n)
    weights = 1.0 / (n * psi[n - 1] ** 2)
    return nodes, weights


def build_basis(cap, quad_order=None):
    """HermiteBasis with quadrature exact for the pair products it serves.

    quad_order defaults to 2*cap + 8; anything below that threshold is a
    configuration error (pair integrals h_i h_j V would lose exactness).
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if quad_order is None:
        quad_order = 2 * cap + 8
    if quad_order < 2 * cap + 8:
        raise ValueError(
            f"quad_order {quad_order} below exactness threshold {2 * cap + 8}")
    nodes, weights = gauss_hermite(quad_order)
    values = hermite_values(nodes, cap)
    return HermiteBasis(cap=cap, quad_order=quad_order, nodes=nodes,
                        weights=weights, values=values)


def scaled_quadrature(basis, q):
    """Nodes and weights for integrands of the form poly(x) * exp(-q x^2).

    Substituting x = y/sqrt(q) maps such integrands onto the stored rule:

        integral F(x) dx == sum_i W_i * F(p_i)

    with p = nodes/sqrt(q), W = weights/sqrt(q), F evaluated literally
    (its own Gaussian factor included -- at p_i it equals exp(-nodes_i^2),
    which is what the total weights expect).  Exact while the polynomial
    part has degree <= 2*quad_order - 1.
    """
    return basis.nodes / np.sqrt(q), basis.weights / np.sqrt(q)


def integrate_gaussian_product(basis, factors, q):
    """integral of prod(factors) dx where factors carry exp(-q x^2) total.

    `factors` is an iterable of arrays evaluated at nodes/sqrt(q) (each
    factor includes its own Gaussian part).  Exact when the polynomial part
    has degree <= 2*quad_order - 1.  The stored total weights absorb
    exp(-y^2), so the product (whose Gaussian at y/sqrt(q) is exp(-y^2))
    integrates as a plain weighted sum.
    """
    pts, w = scaled_quadrature(basis, q)
    prod = np.ones_like(pts)
    for f in factors:
        prod = prod * f
    return float(np.dot(w, prod))


def alpha(j):
    """Central-binomial ratio alpha_j = (2j-2)! / ((j-1)!^2 4^{j-1}).

    Computed in log space; alpha_1 = 1, alpha_2 = 0.5, and
    alpha_j ~ (pi j)^{-1/2} for large j.
    """
    j = np.asarray(j)
    if np.any(j < 1):
        raise ValueError("index must be >= 1")
    lg = gammaln(2 * j - 1) - 2 * gammaln(j) - (j - 1) * np.log(4.0)
    out = np.exp(lg)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MuTable:
    """Coefficients mu_{k,j} of h_j^2 = sum_k mu_{k,j} 2^{1/4} h_{2k-1}(x√2).

    entries[k-1, j-1] holds mu_{k,j} for k <= j and 0 above the diagonal;
    alpha[j-1] holds alpha_j.
    """

    size: int
    entries: np.ndarray
    alpha: np.ndarray

    def mu(self, k, j):
        if not (1 <= k <= j <= self.size):
            raise IndexError(f"need 1 <= k <= j <= {self.size}")
        return float(self.entries[k - 1, j - 1])


def mu_table(j_max):
    """MuTable up to j_max: mu_{k,j} = (2 pi)^{-1/4} sqrt(alpha_k) alpha_{j-k+1}."""
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    a = alpha(np.arange(1, j_max + 1))
    c = (2.0 * np.pi) ** (-0.25)
    entries = np.zeros((j_max, j_max))
    for j in range(1, j_max + 1):
        k = np.arange(1, j + 1)
        entries[:j, j - 1] = c * np.sqrt(a[k - 1]) * a[j - k]
    return MuTable(size=j_max, entries=entries, alpha=a)


def mu_quadrature(basis, k, j):
    """Independent oracle: integral h_j(x)^2 * 2^{1/4} h_{2k-1}(x sqrt(2)) dx.

    Combined Gaussian is exp(-2x^2), so use the sqrt(2) substitution.
    """
    y = basis.nodes / np.sqrt(2.0)
    hj = basis.eval_table(y)[j - 1]
    ek = 2.0 ** 0.25 * basis.values[2 * k - 2]  # h_{2k-1}(sqrt(2)*y) at y=nodes/sqrt2
    return float(np.dot(basis.weights / np.sqrt(2.0), hj * hj * ek))


def verify_eigenrelation(basis, j, grid_step):
    """Max-norm residual of (-d_xx + x^2) h_j - (2j-1) h_j, central differences.

    Second-order accurate in grid_step; the grid spans the quadrature-node
    range so the Gaussian tails are negligible at both ends.
    """
    if not 1 <= j <= basis.cap:
        raise IndexError(f"j={j} outside basis cap {basis.cap}")
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    lo, hi = basis.nodes[0], basis.nodes[-1]
    x = np.arange(lo, hi, grid_step)
    h = hermite_values(x, j)[j - 1]
    lap = (h[2:] - 2.0 * h[1:-1] + h[:-2]) / grid_step ** 2
    res = -lap + (x[1:-1] ** 2) * h[1:-1] - (2 * j - 1) * h[1:-1]
    return float(np.max(np.abs(res)))
