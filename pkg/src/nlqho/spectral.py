"""Galerkin eigenproblem for -d_xx + x^2 + V(x) in the Hermite basis.

The linear oscillator is diagonal here (entries 2j-1) and V couples modes
through exactly computable Gaussian quadratures, so the only approximation
is the truncation dimension D.  Only the first D_trust = 3D/4 modes are
reported; the top quarter is a pollution buffer.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .potential import bracket


class MultiplicityError(RuntimeError):
    """Consecutive trusted eigenvalues closer than the gap floor."""


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues and eigenvector coefficients of the trusted modes.

    evecs column j-1 holds the coefficients of the j-th eigenfunction on
    (h_1..h_D); sign fixed so the h_j component is nonnegative.
    """

    dim: int            # Galerkin dimension D
    d_trust: int        # number of reported modes
    evals: np.ndarray   # Lambda_1..Lambda_{d_trust}, strictly increasing
    evecs: np.ndarray   # D x d_trust

    def eigenfunction_values(self, basis, x):
        """Matrix psi_j(x) for the trusted modes, shape (d_trust, len(x))."""
        tab = basis.eval_table(np.asarray(x, dtype=np.float64), cap=self.dim)
        return self.evecs.T @ tab


def assemble_operator(basis, pot, D):
    """Symmetric Galerkin matrix diag(2j-1) + [integral V h_i h_j dx].

    The pair integrand carries exp(-2x^2), so nodes are scaled by 1/sqrt(2);
    quadrature is exact provided basis.quad_order >= 2*cap + 8 covers the
    combined polynomial degree (enforced at basis construction).
    """
    if D > basis.cap:
        raise ValueError(f"D={D} exceeds basis cap {basis.cap}")
    y = basis.nodes / np.sqrt(2.0)
    H = basis.eval_table(y, cap=D)                       # h_j at scaled nodes
    Vv = pot.values(y)                                   # V at scaled nodes
    W = (basis.weights / np.sqrt(2.0)) * Vv
    M = (H * W) @ H.T
    M = 0.5 * (M + M.T)
    M[np.diag_indices(D)] += 2.0 * np.arange(1, D + 1) - 1.0
    return M


def eigendecompose(matrix, D_trust=None, gap_floor=1e-10):
    """Spectrum of the Galerkin matrix restricted to the trusted modes.

    Raises MultiplicityError when consecutive trusted eigenvalues are closer
    than gap_floor: the whole construction assumes a simple spectrum and
    pseudo-inverting through a near-degeneracy would silently corrupt it.
    """
    D = matrix.shape[0]
    if D_trust is None:
        D_trust = (3 * D) // 4
    if D_trust > D - D // 4:
        raise ValueError(f"D_trust={D_trust} leaves less than a D/4 buffer")
    evals, evecs = np.linalg.eigh(matrix)
    evals = evals[:D_trust]
    evecs = evecs[:, :D_trust]
    gaps = np.diff(evals)
    if np.any(gaps < gap_floor):
        j = int(np.argmin(gaps))
        raise MultiplicityError(
            f"eigenvalue gap {gaps[j]:.3e} below {gap_floor:.1e} "
            f"between modes {j + 1} and {j + 2}")
    # sign convention: component on the matching oscillator mode nonnegative
    signs = np.where(np.diag(evecs[:D_trust, :]) < 0.0, -1.0, 1.0)
    evecs = evecs * signs
    if np.any(np.abs(evals - (2.0 * np.arange(1, D_trust + 1) - 1.0)) >= 1.0):
        warnings.warn("eigenvalue displaced by >= 1 from the oscillator "
                      "ladder; perturbation is outside the small regime",
                      RuntimeWarning)
    return Spectrum(dim=D, d_trust=D_trust, evals=evals, evecs=evecs)


def solve(basis, pot, D, D_trust=None):
    """assemble + eigendecompose in one call."""
    return eigendecompose(assemble_operator(basis, pot, D), D_trust)


def eigenvalue_gradient(spec, basis, j, k):
    """d Lambda_j / d v_{2k-1}: integral 2^{1/4} h_{2k-1}(x sqrt 2) psi_j^2 dx.

    Hellmann-Feynman in the scaled-Hermite coordinates of the potential;
    reduces to the product-expansion coefficient mu_{k,j} at V = 0.
    """
    if not 1 <= j <= spec.d_trust:
        raise IndexError(f"mode {j} beyond trusted range {spec.d_trust}")
    if 2 * k - 1 > basis.cap:
        raise IndexError(f"potential index {2 * k - 1} beyond basis cap")
    y = basis.nodes / np.sqrt(2.0)
    psi = spec.eigenfunction_values(basis, y)[j - 1]
    ek = 2.0 ** 0.25 * basis.values[2 * k - 2]
    return float(np.dot(basis.weights / np.sqrt(2.0), ek * psi * psi))


def _fit_power(j, vals):
    """Least-squares fit vals ~ C * j^a on positive entries; returns (C, a)."""
    j = np.asarray(j, dtype=np.float64)
    vals = np.asarray(vals, dtype=np.float64)
    keep = vals > 0
    if keep.sum() < 2:
        return 0.0, 0.0
    a, logc = np.polyfit(np.log(j[keep]), np.log(vals[keep]), 1)
    return float(np.exp(logc)), float(a)


@dataclass(frozen=True)
class EigenDiagnostics:
    j: np.ndarray
    eval_gap: np.ndarray       # |Lambda_j - (2j-1)|
    l2_dist: np.ndarray        # ||psi_j - h_j||_{l2}
    l4_norm: np.ndarray        # quadrature L4 norm of psi_j
    fits: dict                 # metric -> (C, a) of C * j^a over j in [4, d_trust]


def eigen_diagnostics(spec, basis):
    """Per-mode proximity/decay diagnostics with power-law fits."""
    j = np.arange(1, spec.d_trust + 1)
    eval_gap = np.abs(spec.evals - (2.0 * j - 1.0))
    E = spec.evecs.copy()
    E[np.arange(spec.d_trust), np.arange(spec.d_trust)] -= 1.0
    l2_dist = np.linalg.norm(E[:, :spec.d_trust], axis=0)
    y = basis.nodes / np.sqrt(2.0)
    psi = spec.eigenfunction_values(basis, y)
    w = basis.weights / np.sqrt(2.0)
    l4 = (psi ** 4 @ w) ** 0.25
    lo = j >= 4
    fits = {
        "eval_gap": _fit_power(j[lo], eval_gap[lo]),
        "l2_dist": _fit_power(j[lo], l2_dist[lo]),
        "l4_norm": _fit_power(j[lo], l4[lo]),
    }
    return EigenDiagnostics(j=j, eval_gap=eval_gap, l2_dist=l2_dist,
                            l4_norm=l4, fits=fits)


def spectrum_csv_rows(spec, basis):
    """Rows (j, Lambda_j, gap_to_2j-1, l2_dist_to_hj, L4_norm) for dumps."""
    d = eigen_diagnostics(spec, basis)
    return [(int(jj), float(spec.evals[jj - 1]), float(d.eval_gap[jj - 1]),
             float(d.l2_dist[jj - 1]), float(d.l4_norm[jj - 1]))
            for jj in d.j]


def h_half_norm(u, evals=None):
    """Weighted state norm (sum <j>^1 |u_j|^2)^{1/2} used as smallness gauge."""
    u = np.asarray(u)
    j = np.arange(1, u.size + 1)
    return float(np.sqrt(np.sum(bracket(j) * np.abs(u) ** 2)))
