"""Sparse real homogeneous polynomials on C^M and their Poisson algebra.

A polynomial of half-degree r is H(u) = sum over all index tuples
H_{j,l} u_{j_1}..u_{j_r} conj(u_{l_1})..conj(u_{l_r}).  Storage is
per-orbit: the canonical key is (sorted j, sorted l) and the stored value is
the common per-tuple coefficient of that symmetry orbit, so evaluation
multiplies by the orbit multiplicity (a multinomial).  Reality means
coeff(j,l) = conj(coeff(l,j)); both conjugate orbits are stored.

Mode indices in keys are 1-based, matching the spectral labeling.
"""

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from ._accel import HAVE_NUMBA, njit

MAX_HALF_DEGREE = 5
MAX_MODES = 256


def _canon(t):
    return tuple(sorted(t))


def multiplicity(key):
    """Number of distinct orderings of a sorted index tuple: r!/prod(counts!)."""
    m = math.factorial(len(key))
    for c in Counter(key).values():
        m //= math.factorial(c)
    return m


def _check_key(t, M):
    if any(not 1 <= i <= M for i in t):
        raise ValueError(f"index out of range 1..{M}: {t}")


@dataclass
class HamPoly:
    """Immutable-by-convention sparse polynomial; do not mutate coeffs."""

    modes: int
    half_degree: int
    coeffs: dict = field(default_factory=dict)
    _grad_cache: object = field(default=None, repr=False, compare=False)
    _eval_cache: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not 1 <= self.half_degree <= MAX_HALF_DEGREE:
            raise ValueError(f"half degree must be in 1..{MAX_HALF_DEGREE}")
        if not 1 <= self.modes <= MAX_MODES:
            raise ValueError(f"modes must be in 1..{MAX_MODES}")

    def coefficient(self, j, l):
        """Per-tuple coefficient at any permutation of (j, l)."""
        return self.coeffs.get((_canon(j), _canon(l)), 0j)

    def is_zero(self):
        return not self.coeffs


def zero(M, r):
    return HamPoly(modes=M, half_degree=r)


def insert_monomial(h, j, l, c):
    """New polynomial with c u^j conj(u)^l + conj. added; canonicalizing.

    On a self-conjugate key (sorted j == sorted l) the monomial and its
    conjugate coincide, so only the Hermitian part Re(c) is added.
    """
    j, l = tuple(j), tuple(l)
    if len(j) != h.half_degree or len(l) != h.half_degree:
        raise ValueError("multi-index length must equal the half degree")
    _check_key(j, h.modes)
    _check_key(l, h.modes)
    kj, kl = _canon(j), _canon(l)
    coeffs = dict(h.coeffs)
    c = complex(c)
    if kj == kl:
        coeffs[(kj, kl)] = coeffs.get((kj, kl), 0j) + c.real
    else:
        coeffs[(kj, kl)] = coeffs.get((kj, kl), 0j) + c
        coeffs[(kl, kj)] = coeffs.get((kl, kj), 0j) + c.conjugate()
    for key in [(kj, kl), (kl, kj)]:
        if key in coeffs and coeffs[key] == 0:
            del coeffs[key]
    return HamPoly(modes=h.modes, half_degree=h.half_degree, coeffs=coeffs)


def from_orbits(M, r, items):
    """HamPoly from (canonical_j, canonical_l, per-tuple coeff) triples."""
    coeffs = {}
    for j, l, c in items:
        kj, kl = _canon(j), _canon(l)
        if len(kj) != r or len(kl) != r:
            raise ValueError("orbit length mismatch")
        c = complex(c)
        if c != 0:
            coeffs[(kj, kl)] = coeffs.get((kj, kl), 0j) + c
    coeffs = {k: v for k, v in coeffs.items() if v != 0}
    return HamPoly(modes=M, half_degree=r, coeffs=coeffs)


def check_reality(h, tol=1e-12):
    """Assert coeff(j,l) = conj(coeff(l,j)) across the stored orbits."""
    for (kj, kl), c in h.coeffs.items():
        mirror = h.coeffs.get((kl, kj), 0j)
        scale = max(1.0, abs(c))
        if abs(mirror - c.conjugate()) > tol * scale:
            raise ValueError(f"reality violated at {(kj, kl)}: "
                             f"{c} vs conj {mirror}")


# -- evaluation and gradient ----------------------------------------------

def _eval_arrays(h):
    if h._eval_cache is None:
        n = len(h.coeffs)
        r = h.half_degree
        w = np.empty(n, dtype=np.complex128)
        J = np.empty((n, r), dtype=np.int64)
        L = np.empty((n, r), dtype=np.int64)
        for i, ((kj, kl), c) in enumerate(h.coeffs.items()):
            w[i] = c * multiplicity(kj) * multiplicity(kl)
            J[i] = np.asarray(kj) - 1
            L[i] = np.asarray(kl) - 1
        object.__setattr__(h, "_eval_cache", (w, J, L))
    return h._eval_cache


def evaluate(h, u):
    """Real value of the full symmetric sum; asserts reality numerically."""
    u = np.asarray(u, dtype=np.complex128)
    if u.size != h.modes:
        raise ValueError("state dimension mismatch")
    if not h.coeffs:
        return 0.0
    w, J, L = _eval_arrays(h)
    val = complex(np.sum(w * np.prod(u[J], axis=1)
                         * np.prod(np.conj(u)[L], axis=1)))
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise ValueError(f"evaluation not real: {val}")
    return val.real


def _grad_arrays(h):
    """Flattened derivative entries: out index, complex weight, factor columns."""
    if h._grad_cache is None:
        out, wts, urows, crows = [], [], [], []
        r = h.half_degree
        for (kj, kl), c in h.coeffs.items():
            f = c * multiplicity(kj) * multiplicity(kl)
            for l, cnt in Counter(kl).items():
                rest = list(kl)
                rest.remove(l)
                out.append(l - 1)
                wts.append(2.0 * cnt * f)
                urows.append([i - 1 for i in kj])
                crows.append([i - 1 for i in rest])
        cache = (np.asarray(out, dtype=np.int64),
                 np.asarray(wts, dtype=np.complex128),
                 np.asarray(urows, dtype=np.int64).reshape(len(out), r),
                 np.asarray(crows, dtype=np.int64).reshape(len(out), r - 1))
        object.__setattr__(h, "_grad_cache", cache)
    return h._grad_cache


@njit(cache=True)
def _grad_kernel(out_idx, wts, ucols, ccols, u, M):
    g = np.zeros(M, dtype=np.complex128)
    for e in range(out_idx.shape[0]):
        v = wts[e]
        for c in range(ucols.shape[1]):
            v = v * u[ucols[e, c]]
        for c in range(ccols.shape[1]):
            v = v * np.conj(u[ccols[e, c]])
        g[out_idx[e]] += v
    return g


def _grad_numpy(out_idx, wts, ucols, ccols, u, M):
    vals = wts * np.prod(u[ucols], axis=1)
    if ccols.shape[1]:
        vals = vals * np.prod(np.conj(u)[ccols], axis=1)
    g = np.zeros(M, dtype=np.complex128)
    np.add.at(g.real, out_idx, vals.real)
    np.add.at(g.imag, out_idx, vals.imag)
    return g


def gradient(h, u):
    """Complex gradient 2 (d/d conj(u_k)) H(u) as a length-M vector."""
    u = np.asarray(u, dtype=np.complex128)
    if u.size != h.modes:
        raise ValueError("state dimension mismatch")
    if not h.coeffs:
        return np.zeros(h.modes, dtype=np.complex128)
    out_idx, wts, ucols, ccols = _grad_arrays(h)
    fn = _grad_kernel if HAVE_NUMBA else _grad_numpy
    return fn(out_idx, wts, ucols, ccols, u, h.modes)


# -- Poisson bracket -------------------------------------------------------

def _remove_one(t, s):
    out = list(t)
    out.remove(s)
    return tuple(out)


def poisson(h, k):
    """Poisson bracket {h, k}; output half-degree r + r' - 1.

    Contributions to each output orbit are accumulated in a canonical order
    (sorted by a tag symmetric under argument swap) and each contribution is
    built from commutative single multiplications, so poisson(h, k) and
    -poisson(k, h) agree bitwise.
    """
    if h.modes != k.modes:
        raise ValueError("mode count mismatch")
    r_out = h.half_degree + k.half_degree - 1
    if r_out > MAX_HALF_DEGREE:
        raise ValueError(f"bracket degree {r_out} exceeds cap")
    fh = {key: c * multiplicity(key[0]) * multiplicity(key[1])
          for key, c in h.coeffs.items()}
    fk = {key: c * multiplicity(key[0]) * multiplicity(key[1])
          for key, c in k.coeffs.items()}
    contrib = defaultdict(list)
    for (J1, L1), F1 in fh.items():
        for (J2, L2), F2 in fk.items():
            pair_lo = min((J1, L1), (J2, L2))
            pair_hi = max((J1, L1), (J2, L2))
            # +2i (d/dconj h)(d/du k): shared index removed from L1 and J2
            for s in set(L1) & set(J2):
                n = L1.count(s) * J2.count(s)
                val = ((F1 * F2) * (2 * n)) * 1j
                key = (_canon(J1 + _remove_one(J2, s)),
                       _canon(_remove_one(L1, s) + L2))
                contrib[key].append(((s, pair_lo, pair_hi, (J2, L2)), val))
            # -2i (d/du h)(d/dconj k): shared index removed from J1 and L2
            for s in set(J1) & set(L2):
                n = J1.count(s) * L2.count(s)
                val = ((F1 * F2) * (2 * n)) * (-1j)
                key = (_canon(_remove_one(J1, s) + J2),
                       _canon(L1 + _remove_one(L2, s)))
                contrib[key].append(((s, pair_lo, pair_hi, (J1, L1)), val))
    coeffs = {}
    for key, items in contrib.items():
        items.sort(key=lambda it: it[0])
        tot = 0j
        for _, v in items:
            tot = tot + v
        if tot != 0:
            coeffs[key] = tot / (multiplicity(key[0]) * multiplicity(key[1]))
    return HamPoly(modes=h.modes, half_degree=r_out, coeffs=coeffs)


def neg(h):
    return HamPoly(modes=h.modes, half_degree=h.half_degree,
                   coeffs={key: -c for key, c in h.coeffs.items()})


def scale(h, a):
    if a == 0:
        return zero(h.modes, h.half_degree)
    return HamPoly(modes=h.modes, half_degree=h.half_degree,
                   coeffs={key: a * c for key, c in h.coeffs.items()})


def add(h, k):
    if h.modes != k.modes or h.half_degree != k.half_degree:
        raise ValueError("can only add polynomials of equal degree and modes")
    coeffs = dict(h.coeffs)
    for key, c in k.coeffs.items():
        v = coeffs.get(key, 0j) + c
        if v == 0:
            coeffs.pop(key, None)
        else:
            coeffs[key] = v
    return HamPoly(modes=h.modes, half_degree=h.half_degree, coeffs=coeffs)


def sub(h, k):
    return add(h, neg(k))


# -- norms and structure checks -------------------------------------------

def h_norm(h):
    """sup of per-tuple coefficient moduli."""
    return max((abs(c) for c in h.coeffs.values()), default=0.0)


def c_norm(h):
    """sup of |coeff| weighted by <sum j - sum l> of the canonical key."""
    best = 0.0
    for (kj, kl), c in h.coeffs.items():
        d = sum(kj) - sum(kl)
        best = max(best, abs(c) * math.sqrt(1.0 + d * d))
    return best


def commutes_with_action(h, q):
    """True iff every stored orbit has zero net multiplicity of mode q."""
    if not 1 <= q <= h.modes:
        raise ValueError("mode index out of range")
    return all(kj.count(q) == kl.count(q) for (kj, kl) in h.coeffs)


# -- convenience constructors ---------------------------------------------

def z2_from_frequencies(w):
    """Quadratic action form (1/2) sum w_j |u_j|^2."""
    w = np.asarray(w, dtype=np.float64)
    coeffs = {((j,), (j,)): complex(w[j - 1] / 2.0)
              for j in range(1, w.size + 1) if w[j - 1] != 0}
    return HamPoly(modes=w.size, half_degree=1, coeffs=coeffs)


def action_poly(M, q):
    """The single action |u_q|^2 as a half-degree-1 polynomial."""
    return HamPoly(modes=M, half_degree=1, coeffs={((q,), (q,)): 1.0 + 0j})


# -- serialization ---------------------------------------------------------

def to_json(h):
    orbits = [{"j": list(kj), "l": list(kl), "re": c.real, "im": c.imag}
              for (kj, kl), c in sorted(h.coeffs.items())]
    return json.dumps({"modes": h.modes, "half_degree": h.half_degree,
                       "orbits": orbits}, sort_keys=True)


def from_json(s):
    d = json.loads(s)
    coeffs = {}
    for o in d["orbits"]:
        kj, kl = _canon(o["j"]), _canon(o["l"])
        coeffs[(kj, kl)] = coeffs.get((kj, kl), 0j) + complex(o["re"], o["im"])
    out = HamPoly(modes=int(d["modes"]), half_degree=int(d["half_degree"]),
                  coeffs={k: v for k, v in coeffs.items() if v != 0})
    check_reality(out)
    return out
