"""Small divisors, resonance indices, and empirical non-resonance scans.

A divisor is Omega = sum_n sigma_n * Lambda_{j_n} over a signed index tuple;
the certificate is the exhaustive minimum of |Omega| over all admissible
tuples up to a truncation j_cap.  The truncation is reported prominently:
finite certification is the only computable surrogate for the unbounded
index range.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import HAVE_NUMBA, njit


@dataclass(frozen=True)
class SignedTuple:
    """Signed index tuple (r_star, sigma, j): j strictly increasing, no zero signs."""

    r_star: int
    sigma: tuple
    j: tuple

    def __post_init__(self):
        if len(self.sigma) != self.r_star or len(self.j) != self.r_star:
            raise ValueError("sigma and j must have length r_star")
        if any(s == 0 for s in self.sigma):
            raise ValueError("signs must be nonzero")
        if any(b <= a for a, b in zip(self.j, self.j[1:])) or self.j[0] < 1:
            raise ValueError("j must be strictly increasing positive")


def omega(evals, t):
    """Signed frequency sum sum_n sigma_n * Lambda_{j_n}."""
    if t.j[-1] > len(evals):
        raise IndexError(f"index {t.j[-1]} beyond trusted spectrum {len(evals)}")
    return float(sum(s * evals[j - 1] for s, j in zip(t.sigma, t.j)))


def kappa(j, l):
    """Least index with nonzero net multiplicity between j and l; inf if none.

    math.inf means the monomial u^j conj(u)^l depends only on actions and
    its divisor is trivially zero.
    """
    net = {}
    for s in j:
        net[s] = net.get(s, 0) + 1
    for s in l:
        net[s] = net.get(s, 0) - 1
    surviving = [s for s, m in net.items() if m != 0]
    return min(surviving) if surviving else math.inf


def _signed_partitions(r_star, budget):
    """All sigma in (Z*)^{r_star} with sum |sigma_n| <= budget, lexicographic."""
    out = []
    mags = []

    def rec(pos, left, cur):
        if pos == r_star:
            mags.append(tuple(cur))
            return
        # leave at least 1 for each remaining slot
        for m in range(1, left - (r_star - pos - 1) + 1):
            cur.append(m)
            rec(pos + 1, left - m, cur)
            cur.pop()

    rec(0, budget, [])
    for mag in mags:
        for signs in itertools.product((1, -1), repeat=r_star):
            out.append(tuple(s * m for s, m in zip(signs, mag)))
    out.sort()
    return out


def enumerate_tuples(r, N, j_cap):
    """All admissible signed tuples, each exactly once, deterministic order.

    Admissible: 1 <= r_star <= r, j strictly increasing with j_1 <= N and
    j_{r_star} <= j_cap, sum |sigma_n| <= r.  Order is lexicographic on
    (r_star, j, sigma).
    """
    if j_cap < N:
        raise ValueError("j_cap must be >= N")
    for r_star in range(1, r + 1):
        sigmas = _signed_partitions(r_star, r)
        for j1 in range(1, N + 1):
            for rest in itertools.combinations(range(j1 + 1, j_cap + 1),
                                               r_star - 1):
                j = (j1,) + rest
                for sigma in sigmas:
                    yield SignedTuple(r_star=r_star, sigma=sigma, j=j)


@dataclass(frozen=True)
class Certificate:
    r: int
    N: int
    j_cap: int
    beta: float
    argmin: SignedTuple
    n_scanned: int
    j_max_scanned: int
    scaled_margin: float     # min |Omega| * j_{r_star}^{2 r_star}

    @property
    def resonant(self):
        return self.beta <= 1e-12


def certify(evals, r, N, j_cap):
    """Exhaustive minimum of |Omega| over enumerate_tuples(r, N, j_cap)."""
    if j_cap > len(evals):
        raise ValueError("j_cap beyond trusted spectrum")
    best = math.inf
    best_t = None
    best_scaled = math.inf
    n = 0
    for t in enumerate_tuples(r, N, j_cap):
        n += 1
        om = abs(omega(evals, t))
        if om < best:
            best, best_t = om, t
        scaled = om * float(t.j[-1]) ** (2 * t.r_star)
        if scaled < best_scaled:
            best_scaled = scaled
    return Certificate(r=r, N=N, j_cap=j_cap, beta=best, argmin=best_t,
                       n_scanned=n, j_max_scanned=j_cap,
                       scaled_margin=best_scaled)


def scan_rows(evals, r, N, j_cap):
    """CSV-ready rows (r_star, sigma, j, omega, kappa_min, scaled_margin)."""
    rows = []
    for t in enumerate_tuples(r, N, j_cap):
        om = omega(evals, t)
        jj = [idx for s, idx in zip(t.sigma, t.j) for _ in range(max(s, 0))]
        ll = [idx for s, idx in zip(t.sigma, t.j) for _ in range(max(-s, 0))]
        rows.append((t.r_star,
                     " ".join(map(str, t.sigma)),
                     " ".join(map(str, t.j)),
                     om,
                     kappa(jj, ll),
                     abs(om) * float(t.j[-1]) ** (2 * t.r_star)))
    return rows


def weak_scan(evals, r, N, j_cap):
    """Minimum of |k + Omega| over tuples and integer shifts k in [-4r, 4r].

    Exercises the integer-shifted (weak) condition; returns
    (min_value, argmin_tuple, argmin_k).
    """
    best = math.inf
    best_t, best_k = None, 0
    for t in enumerate_tuples(r, N, j_cap):
        om = omega(evals, t)
        for k in range(-4 * r, 4 * r + 1):
            v = abs(k + om)
            if v < best:
                best, best_t, best_k = v, t, k
    return best, best_t, best_k


# -- empirical gamma_r scan ------------------------------------------------

@dataclass(frozen=True)
class GammaEstimate:
    value: float
    r: int
    n_tuples: int
    cap_hits: int          # tuples whose maximizing k sat on the scan cap
    j1_range: tuple = field(default=())


@njit(cache=True)
def _gamma_kernel(J, S, MU, j1_pow):
    """min over (tuple, sigma) of max_k |sum_n sigma_n mu_{k, j_n}| * j1^{1/4}.

    J: (T, r_star) index tuples; S: (Ns, r_star) sign rows; MU: (K, Jmax)
    with MU[k-1, j-1] = mu_{k,j} (zero for k > j).  Returns (gamma, cap_hits).
    """
    T = J.shape[0]
    Ns = S.shape[0]
    r_star = J.shape[1]
    gamma = 1e300
    cap_hits = 0
    for t in range(T):
        j1 = J[t, 0]
        kmax = 4 * j1
        if kmax < 8:
            kmax = 8
        if kmax > MU.shape[0]:
            kmax = MU.shape[0]
        for s in range(Ns):
            best = 0.0
            best_k = 0
            for k in range(1, kmax + 1):
                acc = 0.0
                for n in range(r_star):
                    acc += S[s, n] * MU[k - 1, J[t, n] - 1]
                a = abs(acc)
                if a > best:
                    best = a
                    best_k = k
            val = best * j1_pow[t]
            if best_k == kmax:
                cap_hits += 1
            if val < gamma:
                gamma = val
    return gamma, cap_hits


def _gamma_numpy(J, S, MU, j1_pow):
    gamma = math.inf
    cap_hits = 0
    for t in range(J.shape[0]):
        j1 = int(J[t, 0])
        kmax = min(max(8, 4 * j1), MU.shape[0])
        A = MU[:kmax, J[t] - 1]            # (kmax, r_star)
        D = np.abs(A @ S.T)                # (kmax, Ns)
        best_k = np.argmax(D, axis=0)
        best = D[best_k, np.arange(S.shape[0])]
        cap_hits += int(np.count_nonzero(best_k == kmax - 1))
        val = float(np.min(best)) * j1_pow[t]
        if val < gamma:
            gamma = val
    return gamma, cap_hits


def estimate_gamma_r(r, j1_range, mu, j_span=None):
    """Empirical lower-bound constant for divisor derivatives at V = 0.

    For each admissible (sigma, j) with j_1 in j1_range and j_n <= j_span
    (default 4 * max(j1_range)), scans candidate derivative directions
    k <= max(8, 4*j_1) for the largest |sum_n sigma_n mu_{k, j_n}| and
    multiplies by j_1^{1/4}; returns the minimum over tuples.  Records how
    often the maximizing k sat exactly on the scan cap, since the true cap
    constant is not quantified.
    """
    j1s = sorted(set(int(x) for x in j1_range))
    if not j1s or j1s[0] < 1:
        raise ValueError("j1_range must contain positive integers")
    if j_span is None:
        j_span = 4 * max(j1s)
    kmax_global = max(8, 4 * max(j1s))
    need = max(j_span, kmax_global)
    if mu.size < need:
        raise ValueError(f"mu table size {mu.size} < required {need}")
    MU = np.ascontiguousarray(mu.entries[:kmax_global, :j_span])

    gamma = math.inf
    n_tuples = 0
    cap_hits = 0
    for r_star in range(1, r + 1):
        sigmas = np.asarray(_signed_partitions(r_star, r), dtype=np.int64)
        Js = []
        for j1 in j1s:
            for rest in itertools.combinations(range(j1 + 1, j_span + 1),
                                               r_star - 1):
                Js.append((j1,) + rest)
        if not Js:
            continue
        J = np.asarray(Js, dtype=np.int64)
        j1_pow = J[:, 0].astype(np.float64) ** 0.25
        n_tuples += J.shape[0] * sigmas.shape[0]
        fn = _gamma_kernel if HAVE_NUMBA else _gamma_numpy
        g, hits = fn(J, sigmas, MU, j1_pow)
        cap_hits += int(hits)
        if g < gamma:
            gamma = float(g)
    return GammaEstimate(value=gamma, r=r, n_tuples=n_tuples,
                         cap_hits=cap_hits, j1_range=tuple(j1s))
