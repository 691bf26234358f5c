"""Random potentials: sampling, weighted sequence norms, budget rescaling.

Coefficients are stored on the orthonormal family e_k(x) = 2^{1/4} h_k(x√2),
so V(x) = sum_k v_k e_k(x) and the discrete weighted norms are plain sums.
The sampler draws v_k = g_k * P_k * 2^{-1/4} (Gaussian g_k, weight P_k on the
non-normalized h_k(x√2)); the 2^{-1/4} converts between the two conventions.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .hermite import hermite_values


def bracket(k):
    """Japanese bracket <k> = sqrt(1 + k^2)."""
    return np.sqrt(1.0 + np.asarray(k, dtype=np.float64) ** 2)


@dataclass(frozen=True)
class Weight:
    """Decay weight P_k, k = 1..K_max, with a label for serialization."""

    coeffs: np.ndarray
    label: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        object.__setattr__(self, "coeffs", c)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("weight needs a 1-d coefficient array")
        if np.any(c < 0):
            raise ValueError("weight coefficients must be >= 0")
        k = np.arange(1, c.size + 1)
        if not np.isfinite(np.sum(bracket(k) ** 3 * c ** 2)):
            raise ValueError("weight not summable in the cubic-weighted norm")


def default_weight(k_max=64, decay=3.0):
    """P_k = (1+k)^{-decay}; comfortably summable, cheap to assemble against."""
    k = np.arange(1, k_max + 1)
    return Weight(coeffs=(1.0 + k) ** (-decay), label="inverse_power",
                  params={"k_max": int(k_max), "decay": float(decay)})


def zero_weight(k_max=64):
    return Weight(coeffs=np.zeros(k_max), label="zero",
                  params={"k_max": int(k_max)})


@dataclass(frozen=True)
class Potential:
    """Sampled potential: orthonormal-basis coefficients plus provenance."""

    coeffs: np.ndarray        # v_k on e_k = 2^{1/4} h_k(x sqrt 2)
    seed: int
    gaussians: np.ndarray     # raw draws g_k, kept for reproducibility
    weight_label: str = "custom"
    weight_params: dict = field(default_factory=dict)

    @property
    def h1_norm(self):
        return sobolev_norm(self, 1)

    def values(self, x):
        """V(x) = sum_k v_k 2^{1/4} h_k(x sqrt 2) at arbitrary points."""
        k_max = self.coeffs.size
        tab = hermite_values(np.asarray(x, dtype=np.float64) * np.sqrt(2.0),
                             k_max)
        return 2.0 ** 0.25 * (self.coeffs @ tab)


def sample_potential(weight, seed):
    """Draw V deterministically from a counter-based generator.

    Philox is counter-based, so sampling is reproducible and trivially
    splittable across seeds.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    g = rng.standard_normal(weight.coeffs.size)
    v = g * weight.coeffs * 2.0 ** (-0.25)
    return Potential(coeffs=v, seed=int(seed), gaussians=g,
                     weight_label=weight.label, weight_params=dict(weight.params))


def sobolev_norm(p, s):
    """Discrete weighted norm (sum_k <k>^s v_k^2)^{1/2}.

    This is the equivalent sequence-space surrogate of the continuum
    weighted norm; the equivalence constant is absorbed downstream into the
    empirical non-resonance constant, never guessed.
    """
    k = np.arange(1, p.coeffs.size + 1)
    return float(np.sqrt(np.sum(bracket(k) ** s * p.coeffs ** 2)))


def _scaled(p, factor):
    return Potential(coeffs=p.coeffs * factor, seed=p.seed,
                     gaussians=p.gaussians, weight_label=p.weight_label,
                     weight_params=dict(p.weight_params))


def rescale_to_norm(p, target):
    """Scalar multiple of p with discrete H1 norm exactly `target`."""
    n = sobolev_norm(p, 1)
    if n == 0.0:
        raise ValueError("cannot rescale a zero potential")
    return _scaled(p, target / n)


def rescale_to_budget(p, r, N, gamma_r):
    """Rescale strictly inside the non-resonance budget.

    Target norm: (gamma_r / (2 r)) * N^{-1/6} * (1 - 1e-9).
    """
    if r < 1 or N < 1 or gamma_r <= 0:
        raise ValueError("need r >= 1, N >= 1, gamma_r > 0")
    target = (gamma_r / (2.0 * r)) * N ** (-1.0 / 6.0) * (1.0 - 1e-9)
    return rescale_to_norm(p, target)


def to_json(p):
    """JSON record round-tripping coefficients bitwise (shortest repr)."""
    return json.dumps({
        "seed": p.seed,
        "weight_label": p.weight_label,
        "weight_params": p.weight_params,
        "coeffs": list(p.coeffs),
        "gaussians": list(p.gaussians),
    }, sort_keys=True)


def from_json(s):
    d = json.loads(s)
    return Potential(coeffs=np.asarray(d["coeffs"], dtype=np.float64),
                     seed=int(d["seed"]),
                     gaussians=np.asarray(d["gaussians"], dtype=np.float64),
                     weight_label=d["weight_label"],
                     weight_params=d["weight_params"])


def zero_potential(k_max=64):
    return Potential(coeffs=np.zeros(k_max), seed=0,
                     gaussians=np.zeros(k_max), weight_label="zero",
                     weight_params={"k_max": int(k_max)})
