"""Iterative normal-form construction and numerical flow maps.

Starting from H = Z2 + P (P homogeneous of degree 2p+2), stages
r_star = p+1 .. r+p each split the current degree-2r_star term into a
resonant part U (kept) and a non-resonant part L (removed by the time-1
flow of a generating polynomial chi solving {chi, Z2} + L = 0), then push
the adjoint series through every retained degree.  Terms of degree
>= 2r+2p+2 are discarded; their size is tracked as a diagnostic.

The transformation itself is never built as a polynomial map: it is the
composition of the numerical flows of the chis (last stage applied first).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import hampoly
from .hampoly import HamPoly
from .resonance import kappa


class SmallDivisorError(RuntimeError):
    def __init__(self, j, l, om):
        self.j, self.l, self.omega = j, l, om
        super().__init__(f"small divisor |Omega| = {abs(om):.3e} at "
                         f"j={j}, l={l}")


def split_LU(q, N):
    """Partition by resonance index: L gets kappa <= N, U the rest.

    U commutes with every action I_s, s <= N, because any orbit depending
    on a low mode unevenly has kappa at most that mode index.
    """
    lc, uc = {}, {}
    for key, c in q.coeffs.items():
        if kappa(key[0], key[1]) <= N:
            lc[key] = c
        else:
            uc[key] = c
    L = HamPoly(modes=q.modes, half_degree=q.half_degree, coeffs=lc)
    U = HamPoly(modes=q.modes, half_degree=q.half_degree, coeffs=uc)
    return L, U


def solve_cohomological(L, evals, beta_floor):
    """chi with {chi, Z2} + L = 0: coefficient-wise division by i*Omega."""
    coeffs = {}
    for (kj, kl), c in L.coeffs.items():
        om = float(sum(evals[i - 1] for i in kj) - sum(evals[i - 1] for i in kl))
        if abs(om) < beta_floor:
            raise SmallDivisorError(kj, kl, om)
        coeffs[(kj, kl)] = c / (1j * om)
    return HamPoly(modes=L.modes, half_degree=L.half_degree, coeffs=coeffs)


@dataclass
class NormalForm:
    p: int
    r: int
    N: int
    chis: list                 # generating polynomials, stages p+1 .. r+p
    Qs: dict                   # degree n -> HamPoly, 2p+2 <= n <= 2r+2p
    diagnostics: dict = field(default_factory=dict)


def _ad_powers(chi, x, kmax):
    """[x, ad_chi x, ad_chi^2 x, ...] up to kmax applications."""
    out = [x]
    for _ in range(kmax):
        out.append(hampoly.poisson(chi, out[-1]))
    return out


def lie_transform_stage(Qs, chi, L, U, r_star, p, r):
    """One sharp-update: returns (new Qs, dropped-mass diagnostic).

    Degrees below 2r_star are unchanged; degree 2r_star becomes U; a degree
    n > 2r_star collects sum_k ad_chi^k Q^{(n_*)} / k! over n_* + 2k(r_star-1)
    = n, minus sum_k ad_chi^k L / (k+1)! over 2r_star + 2k(r_star-1) = n.
    Truncation: for each source degree n0, only k <= m_{n0} with
    n0 + m_{n0}(2r_star - 2) < 2r + 2p + 2 survive; the norm of the last
    retained bracket over the next factorial is accumulated as a proxy for
    the discarded series mass.
    """
    deg_cap = 2 * r + 2 * p + 2
    step = 2 * r_star - 2
    if step <= 0:
        raise ValueError("stage degree must exceed 2 (quadratic chi excluded)")
    dropped = 0.0
    empty_updates = []

    def m_of(n0):
        # largest integer m with n0 + m*step < deg_cap
        return (deg_cap - 1 - n0) // step

    # adjoint series of each retained source degree
    new = {}
    sources = {n0: q for n0, q in Qs.items() if not q.is_zero()}
    ads = {}
    for n0, q in sources.items():
        m = m_of(n0)
        if m < 0:
            continue
        powers = _ad_powers(chi, q, m) if not chi.is_zero() else [q]
        ads[n0] = powers
        if not chi.is_zero():
            dropped += hampoly.h_norm(powers[-1]) / math.factorial(m + 1)
    if not L.is_zero() and not chi.is_zero():
        mL = max(m_of(2 * r_star), 0)
        adL = _ad_powers(chi, L, mL)
        dropped += hampoly.h_norm(adL[-1]) / math.factorial(mL + 2)
    else:
        adL = None

    for n in range(2 * p + 2, deg_cap - 1, 2):
        if n < 2 * r_star:
            if n in Qs:
                new[n] = Qs[n]
            continue
        r_n = n // 2
        acc = hampoly.zero(chi.modes, r_n)
        hit = False
        if n == 2 * r_star:
            acc = U
            hit = True
        else:
            for n0, powers in ads.items():
                num = n - n0
                if num < 0 or num % step != 0:
                    continue
                k = num // step
                if k < len(powers):
                    acc = hampoly.add(
                        acc, hampoly.scale(powers[k],
                                           1.0 / math.factorial(k)))
                    hit = True
            if adL is not None:
                num = n - 2 * r_star
                if num % step == 0:
                    k = num // step
                    if 0 <= k < len(adL):
                        acc = hampoly.sub(
                            acc, hampoly.scale(adL[k],
                                               1.0 / math.factorial(k + 1)))
                        hit = True
        if not hit:
            empty_updates.append(n)
        if not acc.is_zero() or n in Qs:
            new[n] = acc
    return new, dropped, empty_updates


def normal_form(z2, P, evals, p, r, N, beta_floor):
    """Run stages r_star = p+1 .. r+p on H = Z2 + P.

    Every output Q^{(n)} commutes with the actions I_q, q <= N.  Raises
    SmallDivisorError when a required divisor falls below beta_floor.
    """
    if P.half_degree != p + 1:
        raise ValueError("P must have half-degree p+1")
    Qs = {2 * p + 2: P}
    chis = []
    diag = {"stages": [], "empty_updates": []}
    for r_star in range(p + 1, r + p + 1):
        q = Qs.get(2 * r_star, hampoly.zero(P.modes, r_star))
        L, U = split_LU(q, N)
        if L.is_zero():
            chi = hampoly.zero(P.modes, r_star)
            min_om = math.inf
        else:
            chi = solve_cohomological(L, evals, beta_floor)
            min_om = min(
                abs(sum(evals[i - 1] for i in kj)
                    - sum(evals[i - 1] for i in kl))
                for (kj, kl) in L.coeffs)
        Qs, dropped, empty = lie_transform_stage(Qs, chi, L, U, r_star, p, r)
        chis.append(chi)
        diag["stages"].append({
            "r_star": r_star,
            "min_omega_used": min_om,
            "chi_c_norm": hampoly.c_norm(chi),
            "dropped_mass": dropped,
            "L_orbits": len(L.coeffs),
        })
        diag["empty_updates"].append(empty)
    return NormalForm(p=p, r=r, N=N, chis=chis, Qs=Qs, diagnostics=diag)


# -- numerical flow --------------------------------------------------------

def flow(chi, u0, t, tol=1e-12, radius=math.inf):
    """Time-t flow of the Hamiltonian vector field of chi.

    Integrates du/dt = i * grad(chi)(u) with an adaptive high-order explicit
    scheme (DOP853); symplecticity is checked a posteriori, not enforced.
    """
    u0 = np.asarray(u0, dtype=np.complex128)
    if np.linalg.norm(u0) > radius:
        raise ValueError("initial state outside the configured flow radius")
    if t == 0 or chi.is_zero():
        return u0.copy()

    def rhs(_, y):
        u = y[:chi.modes] + 1j * y[chi.modes:]
        du = 1j * hampoly.gradient(chi, u)
        return np.concatenate([du.real, du.imag])

    y0 = np.concatenate([u0.real, u0.imag])
    sol = solve_ivp(rhs, (0.0, t), y0, method="DOP853",
                    rtol=tol, atol=tol)
    if not sol.success:
        raise RuntimeError(f"flow integration failed: {sol.message}")
    y = sol.y[:, -1]
    return y[:chi.modes] + 1j * y[chi.modes:]


def transform(nf, u, t=1.0, tol=1e-12):
    """The composed change of coordinates: last stage's flow applied first."""
    v = np.asarray(u, dtype=np.complex128)
    for chi in reversed(nf.chis):
        v = flow(chi, v, t, tol=tol)
    return v


@dataclass
class ValidationReport:
    eps: np.ndarray
    max_abs_R: np.ndarray       # remainder magnitude per epsilon
    slope: float                # log-log fit of remainder vs epsilon
    target: int                 # 2r + 2p + 2
    identity_gap: np.ndarray    # max ||tau(u) - u|| / ||u|| per epsilon
    identity_slope: float


def validate_normal_form(nf, z2, P, u_samples, eps_grid, tol=1e-12):
    """Numerical remainder of (Z2+P) o tau = Z2 + sum Q + R at scaled samples."""
    eps_grid = np.asarray(eps_grid, dtype=np.float64)
    maxR = np.zeros(eps_grid.size)
    gap = np.zeros(eps_grid.size)
    for i, eps in enumerate(eps_grid):
        for uh in u_samples:
            u = eps * np.asarray(uh, dtype=np.complex128)
            v = transform(nf, u, tol=tol)
            lhs = hampoly.evaluate(z2, v) + hampoly.evaluate(P, v)
            rhs = hampoly.evaluate(z2, u) + sum(
                hampoly.evaluate(q, u) for q in nf.Qs.values())
            maxR[i] = max(maxR[i], abs(lhs - rhs))
            nu = np.linalg.norm(u)
            if nu > 0:
                gap[i] = max(gap[i], np.linalg.norm(v - u) / nu)

    def fit(vals):
        keep = vals > 0
        if keep.sum() < 2:
            return math.inf
        s, _ = np.polyfit(np.log(eps_grid[keep]), np.log(vals[keep]), 1)
        return float(s)

    return ValidationReport(eps=eps_grid, max_abs_R=maxR, slope=fit(maxR),
                            target=2 * nf.r + 2 * nf.p + 2,
                            identity_gap=gap, identity_slope=fit(gap))
