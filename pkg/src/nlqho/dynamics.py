"""Truncated NLS dynamics in the perturbed-oscillator eigenbasis.

The Hamiltonian is H = Z2 + P with Z2 = (1/2) sum Lambda_j |u_j|^2 and P the
(2p+2)-fold eigenfunction overlap tensor scaled by sign/(2p+2).  Integration
is Strang splitting: exact linear phase rotation for a half step, an RK4
substep on the nonlinear vector field, another half rotation.  In this basis
the actions I_j = |u_j|^2 are read directly off the state.

Two nonlinear substep paths exist and agree to quadrature exactness:
"pseudospectral" (transform to quadrature nodes, multiply, project;
O(M*Q) per evaluation, the default) and "tensor" (direct contraction of the
stored overlap tensor).
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import hampoly
from ._accel import HAVE_NUMBA, njit
from .hampoly import HamPoly


class BlowUpError(RuntimeError):
    pass


@dataclass(frozen=True)
class Nonlinearity:
    p: int
    sign: int
    M: int
    poly: HamPoly          # half-degree p+1, coefficients sign*P_orbit/(2p+2)
    psi: np.ndarray        # (M, Q) eigenfunction values at scaled nodes
    wq: np.ndarray         # scaled quadrature weights, length Q


def assemble_nonlinearity(spec, basis, p, sign, M):
    """Overlap tensor of 2p+2 eigenfunctions over canonical orbits.

    The product of 2p+2 eigenfunctions carries exp(-(p+1) x^2), so nodes are
    scaled by 1/sqrt(p+1); the basis quadrature order must cover the combined
    polynomial degree (p+1)*2*(dim-1).
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if M > spec.d_trust:
        raise ValueError(f"M={M} beyond trusted modes {spec.d_trust}")
    if 2 * basis.quad_order - 1 < 2 * (p + 1) * (spec.dim - 1):
        raise ValueError("quadrature order too low for the 2p+2-fold product")
    q = float(p + 1)
    y = basis.nodes / np.sqrt(q)
    psi = spec.eigenfunction_values(basis, y)[:M]
    wq = basis.weights / np.sqrt(q)
    combos = list(itertools.combinations_with_replacement(range(1, M + 1),
                                                          p + 1))
    prods = np.empty((len(combos), y.size))
    for i, cb in enumerate(combos):
        pr = np.ones_like(y)
        for j in cb:
            pr = pr * psi[j - 1]
        prods[i] = pr
    overlap = (prods * wq) @ prods.T          # integral of the 2p+2 product
    pref = sign / (2.0 * p + 2.0)
    coeffs = {}
    for a, J in enumerate(combos):
        for b, L in enumerate(combos):
            c = pref * overlap[a, b]
            coeffs[(J, L)] = complex(c)
    poly = HamPoly(modes=M, half_degree=p + 1, coeffs=coeffs)
    return Nonlinearity(p=p, sign=sign, M=M, poly=poly,
                        psi=np.ascontiguousarray(psi), wq=wq)


def nonlinear_gradient(nl, u):
    """Pseudo-spectral grad P: sign * integral |u(x)|^{2p} u(x) psi_k(x) dx."""
    phi = nl.psi.T @ u
    dens = np.abs(phi) ** (2 * nl.p) * phi * nl.wq
    return nl.sign * (nl.psi @ dens)


def tail_proxy(nl_ref, u_ref, M):
    """l2 mass of the nonlinear gradient beyond mode M, at a reference
    resolution; behaves like M^{-1/2} for tail-decaying states."""
    g = nonlinear_gradient(nl_ref, u_ref)
    return float(np.linalg.norm(g[M:]))


def hamiltonian(u, evals, nl):
    """Z2(u) + P(u)."""
    u = np.asarray(u, dtype=np.complex128)
    z2 = 0.5 * float(np.sum(evals[:u.size] * np.abs(u) ** 2))
    return z2 + hampoly.evaluate(nl.poly, u)


def mass(u):
    return float(np.sum(np.abs(u) ** 2))


@njit(cache=True)
def _evolve_kernel(u, ph, psi, wq, sign, p, dt, nsteps, stride, limit, out):
    """Strang splitting loop; writes a snapshot every `stride` steps.

    Returns the step index where the norm limit was exceeded, or -1.
    psi is complex-valued (cast at call site) so the matmuls stay typed.
    """
    M = u.shape[0]
    Q = wq.shape[0]
    snap = 0
    out[snap] = u
    snap += 1
    for step in range(nsteps):
        u = ph * u
        # RK4 on du/dt = -i * grad P(u)
        k1 = np.empty(M, dtype=np.complex128)
        k2 = np.empty(M, dtype=np.complex128)
        k3 = np.empty(M, dtype=np.complex128)
        k4 = np.empty(M, dtype=np.complex128)
        for stage in range(4):
            if stage == 0:
                v = u
            elif stage == 1:
                v = u + (0.5 * dt) * k1
            elif stage == 2:
                v = u + (0.5 * dt) * k2
            else:
                v = u + dt * k3
            phi = np.dot(psi.T, v)
            dens = np.empty(Q, dtype=np.complex128)
            for qq in range(Q):
                a = phi[qq].real * phi[qq].real + phi[qq].imag * phi[qq].imag
                dens[qq] = (a ** p) * phi[qq] * wq[qq]
            g = sign * np.dot(psi, dens)
            if stage == 0:
                k1 = -1j * g
            elif stage == 1:
                k2 = -1j * g
            elif stage == 2:
                k3 = -1j * g
            else:
                k4 = -1j * g
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        u = ph * u
        if (step + 1) % stride == 0:
            out[snap] = u
            snap += 1
            nrm = 0.0
            for m in range(M):
                nrm += u[m].real * u[m].real + u[m].imag * u[m].imag
            if nrm > limit:
                return step
    return -1


def _evolve_python(u, ph, psi, wq, sign, p, dt, nsteps, stride, limit, out,
                   grad=None):
    def g(v):
        if grad is not None:
            return grad(v)
        phi = psi.T @ v
        dens = np.abs(phi) ** (2 * p) * phi * wq
        return sign * (psi @ dens)

    snap = 0
    out[snap] = u
    snap += 1
    for step in range(nsteps):
        u = ph * u
        k1 = -1j * g(u)
        k2 = -1j * g(u + (0.5 * dt) * k1)
        k3 = -1j * g(u + (0.5 * dt) * k2)
        k4 = -1j * g(u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        u = ph * u
        if (step + 1) % stride == 0:
            out[snap] = u
            snap += 1
            if np.sum(np.abs(u) ** 2) > limit:
                return step
    return -1


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray         # (n_snap, M) complex
    evals: np.ndarray = field(repr=False, default=None)

    def actions(self):
        return np.abs(self.states) ** 2

    def mass_series(self):
        return np.sum(np.abs(self.states) ** 2, axis=1)

    def hamiltonian_series(self, nl):
        return np.array([hamiltonian(s, self.evals, nl)
                         for s in self.states])


def evolve(u0, evals, nl, T, dt, snapshot_stride=100,
           nonlinear_path="pseudospectral", blowup_factor=10.0):
    """Integrate for n = round(T/dt) Strang steps, snapshotting states.

    dt may be negative (with matching T) to retrace a trajectory; the
    splitting is time-symmetric.  Raises BlowUpError when the l2 norm grows
    past blowup_factor times its initial value.
    """
    u0 = np.asarray(u0, dtype=np.complex128)
    if u0.size != nl.M:
        raise ValueError("state dimension mismatch")
    if dt == 0:
        raise ValueError("dt must be nonzero")
    nsteps = int(round(T / dt))
    if nsteps <= 0:
        raise ValueError("T/dt must be a positive step count")
    stride = max(1, int(snapshot_stride))
    n_snap = 1 + nsteps // stride
    out = np.empty((n_snap, nl.M), dtype=np.complex128)
    ph = np.exp(-0.5j * np.asarray(evals[:nl.M]) * dt)
    limit = blowup_factor ** 2 * float(np.sum(np.abs(u0) ** 2))
    if limit == 0.0:
        limit = np.inf
    if nonlinear_path == "tensor":
        bad = _evolve_python(u0.copy(), ph, None, None, nl.sign, nl.p, dt,
                             nsteps, stride, limit, out,
                             grad=lambda v: hampoly.gradient(nl.poly, v))
    elif nonlinear_path == "pseudospectral":
        psi_c = nl.psi.astype(np.complex128)
        if HAVE_NUMBA:
            bad = _evolve_kernel(u0.copy(), ph, psi_c, nl.wq, float(nl.sign),
                                 nl.p, dt, nsteps, stride, limit, out)
        else:
            bad = _evolve_python(u0.copy(), ph, nl.psi, nl.wq, nl.sign, nl.p,
                                 dt, nsteps, stride, limit, out)
    else:
        raise ValueError(f"unknown nonlinear path {nonlinear_path!r}")
    if bad >= 0:
        raise BlowUpError(f"norm exceeded {blowup_factor}x initial at "
                          f"step {bad}")
    times = dt * stride * np.arange(n_snap)
    return Trajectory(times=times, states=out,
                      evals=np.asarray(evals, dtype=np.float64))


@dataclass(frozen=True)
class DriftReport:
    eps: np.ndarray
    max_drift: np.ndarray          # per epsilon: max_{j<=N} max_t |I_j - I_j(0)|
    per_mode: list                 # per epsilon: array of per-mode drifts
    slope: float                   # log-log fit of max_drift vs eps
    N: int


def action_drift(traj, N):
    """Per-mode max_t |I_j(t) - I_j(0)| for j <= N."""
    acts = traj.actions()[:, :N]
    return np.max(np.abs(acts - acts[0]), axis=0)


def action_drift_report(trajs, eps_grid, N):
    """Drift magnitudes across an epsilon grid with a power-law fit."""
    eps = np.asarray(eps_grid, dtype=np.float64)
    per_mode = [action_drift(t, N) for t in trajs]
    max_drift = np.array([float(np.max(d)) for d in per_mode])
    keep = max_drift > 0
    if keep.sum() >= 2:
        slope, _ = np.polyfit(np.log(eps[keep]), np.log(max_drift[keep]), 1)
    else:
        slope = math.inf
    return DriftReport(eps=eps, max_drift=max_drift, per_mode=per_mode,
                       slope=float(slope), N=N)
