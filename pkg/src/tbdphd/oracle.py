"""Cardinality utilities and an exact multi-target Bayes oracle on tiny discrete spaces.

The oracle never uses the closed-form intensity or cardinality updates it
is meant to check: it builds the multi-target posterior from the Poisson
prior and the separable likelihood by summing over target configurations.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .filter import PoissonCardinality

MAX_CELLS = 12


@dataclass(frozen=True)
class CardinalityPmf:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        object.__setattr__(self, "probabilities", p)
        if p.ndim != 1 or len(p) == 0:
            raise ValueError("pmf must be a non-empty 1-D array")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("pmf entries must be >= 0 and sum to 1")

    @property
    def n_max(self) -> int:
        return len(self.probabilities) - 1

    def mean(self) -> float:
        return float(np.arange(len(self.probabilities)) @ self.probabilities)


@dataclass(frozen=True)
class DiscreteIntensity:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or not 0 < len(v) <= MAX_CELLS:
            raise ValueError(f"need 1..{MAX_CELLS} cells")
        if np.any(~np.isfinite(v)) or np.any(v < 0):
            raise ValueError("intensity values must be finite and >= 0")

    @property
    def mass(self) -> float:
        return float(self.values.sum())


def poisson_pmf(rate: float, n_max: int) -> np.ndarray:
    """Poisson pmf on 0..n_max, not renormalized."""
    return poisson.pmf(np.arange(n_max + 1), rate)


def convolve_pmf(a, b) -> np.ndarray:
    """Distribution of the sum of two independent counts, truncated to len(a)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.convolve(a, b)[: len(a)]


def total_variation(a, b) -> float:
    return 0.5 * float(np.abs(np.asarray(a) - np.asarray(b)).sum())


def best_poisson(pmf: CardinalityPmf) -> PoissonCardinality:
    """KLD-optimal Poisson approximation: matching the mean."""
    return PoissonCardinality(pmf.mean())


def kld_cardinality(q: CardinalityPmf | np.ndarray, pi) -> float:
    """sum_n q(n) log(q(n) / pi(n)) with 0 log 0 = 0."""
    q = q.probabilities if isinstance(q, CardinalityPmf) else np.asarray(q, float)
    pi = pi.probabilities if isinstance(pi, CardinalityPmf) else np.asarray(pi, float)
    if len(pi) < len(q):
        pi = np.pad(pi, (0, len(q) - len(pi)))
    pi = pi[: len(q)]
    support = q > 0
    if np.any(pi[support] <= 0):
        raise ValueError("q is not absolutely continuous w.r.t. pi")
    return float(np.sum(q[support] * (np.log(q[support]) - np.log(pi[support]))))


def kld_to_poisson(q: CardinalityPmf | np.ndarray, rates) -> np.ndarray:
    """kld_cardinality(q || Poisson(rate)) for every rate in ``rates``, vectorized."""
    q = q.probabilities if isinstance(q, CardinalityPmf) else np.asarray(q, float)
    rates = np.asarray(rates, dtype=float)
    n = np.arange(len(q))
    s = q > 0
    const = np.sum(q[s] * np.log(q[s])) + q[s] @ gammaln(n[s] + 1)
    return const - (q @ n) * np.log(rates) + rates * q.sum()


def poisson_tail(rate: float, n_max: int) -> float:
    return float(poisson.sf(n_max, rate))


def required_n_max(prior_rate: float, max_lr: float, tol: float = 1e-12) -> int:
    """Smallest N with Poisson(prior_rate * max_lr) tail beyond N below ``tol``.

    The unnormalized posterior count terms are bounded by that Poisson's, so
    this also bounds the posterior truncation error.
    """
    bound = prior_rate * max(max_lr, 1.0)
    n = int(math.ceil(bound))
    while poisson_tail(bound, n) >= tol:
        n += 1
    return n


def _check_inputs(prior: DiscreteIntensity, lr):
    lr = np.asarray(lr, dtype=float)
    if lr.shape != prior.values.shape:
        raise ValueError("one LR per cell required")
    if np.any(~np.isfinite(lr)) or np.any(lr < 0):
        raise ValueError("LRs must be finite and >= 0")
    return lr


def exact_posterior(prior: DiscreteIntensity, lr_per_cell, n_max: int, tol: float = 1e-12,
                    method: str = "factorized"):
    """Exact multi-target posterior under a Poisson prior and separable likelihood.

    The prior is Poisson(lambda) in count with i.i.d. locations pi = v/lambda.
    For n targets in cells (c_1..c_n) the joint is
    rho(n) * prod pi(c_i) * prod L(c_i) (noise likelihood factored out).

    ``method="factorized"`` sums each n-fold configuration sum per cell
    exactly through the multinomial factorization (fast, any n_max).
    ``method="enumerate"`` walks every ordered n-tuple (tiny instances only).

    Returns ``(posterior_intensity, posterior_cardinality)``.
    """
    lr = _check_inputs(prior, lr_per_cell)
    lam = prior.mass
    if lam == 0:
        return DiscreteIntensity(np.zeros_like(prior.values)), CardinalityPmf(
            np.r_[1.0, np.zeros(n_max)])
    if poisson_tail(lam * max(lr.max(), 1.0), n_max) >= tol:
        raise ValueError(f"n_max={n_max} too small for tail < {tol}; "
                         f"use at least {required_n_max(lam, lr.max(), tol)}")
    pi = prior.values / lam
    log_rho = -lam + np.arange(n_max + 1) * math.log(lam) - gammaln(np.arange(n_max + 1) + 1)
    if method == "factorized":
        joint, occ = _configuration_sums(pi, lr, n_max)
    elif method == "enumerate":
        joint, occ = _enumerate_configurations(pi, lr, n_max)
    else:
        raise ValueError(f"unknown method {method!r}")
    # unnormalized p(n) = rho(n) * joint[n]; cell occupancy weighted alike
    with np.errstate(divide="ignore"):
        log_un = log_rho + np.log(joint)
    shift = np.max(log_un)
    un = np.exp(log_un - shift)
    Z = un.sum()
    card = un / Z
    scale = np.exp(log_rho - shift) / Z
    intensity = (scale[:, None] * occ).sum(axis=0)
    card = card / card.sum()
    return DiscreteIntensity(intensity), CardinalityPmf(card)


def _configuration_sums(pi, lr, n_max):
    """joint[n] = sum over ordered n-tuples of prod pi*L; occ[n, c] = same sum
    weighted by the number of targets in cell c."""
    a = pi * lr
    s = a.sum()
    n = np.arange(n_max + 1)
    joint = s ** n
    # each of the n slots is in cell c with share a_c / s
    occ = np.zeros((n_max + 1, len(a)))
    occ[1:] = (n[1:] * s ** (n[1:] - 1))[:, None] * a[None, :]
    return joint, occ


def _enumerate_configurations(pi, lr, n_max):
    C = len(pi)
    if C ** n_max > 2_000_000:
        raise ValueError("instance too large for enumeration")
    a = pi * lr
    joint = np.zeros(n_max + 1)
    occ = np.zeros((n_max + 1, C))
    joint[0] = 1.0
    for n in range(1, n_max + 1):
        for cells in itertools.product(range(C), repeat=n):
            w = float(np.prod(a[list(cells)]))
            joint[n] += w
            np.add.at(occ[n], list(cells), w)
    return joint, occ


def cap_components(masses) -> PoissonCardinality:
    """Cardinality after capping each component's mass at one."""
    return PoissonCardinality(float(np.minimum(np.asarray(masses, float), 1.0).sum()))
