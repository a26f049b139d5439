"""Entropy, mutual information and the Fano-equality function, all in bits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ic_lab.errors import DomainError, ValidationError

PROB_ATOL = 1e-12
RENORMALIZE_ATOL = 1e-9

# Below this value of (d-1)*e the power series for I_d is used instead of logs.
_SERIES_CUTOFF = 0.05
_SERIES_TERMS = 16


def _check_alphabet(d):
    if int(d) != d or d < 2:
        raise DomainError(f"alphabet size must be an integer >= 2, got {d!r}")
    return int(d)


def _check_unit(value, name):
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


def bias_to_probability(d: int, e: float) -> float:
    d = _check_alphabet(d)
    e = _check_unit(e, "bias")
    return (1.0 + (d - 1) * e) / d


def probability_to_bias(d: int, p: float) -> float:
    d = _check_alphabet(d)
    p = _check_unit(p, "probability")
    e = (d * p - 1.0) / (d - 1)
    if e < -PROB_ATOL:
        raise DomainError(f"p={p} is below 1/d and has negative bias")
    return min(max(e, 0.0), 1.0)


@dataclass(frozen=True)
class BiasedProbability:
    """A success probability together with its bias, p = (1 + (d-1) e) / d."""

    d: int
    p: float
    e: float

    def __post_init__(self):
        _check_alphabet(self.d)
        _check_unit(self.p, "probability")
        _check_unit(self.e, "bias")
        if abs(self.p - (1.0 + (self.d - 1) * self.e) / self.d) > PROB_ATOL:
            raise ValidationError(f"p={self.p} and e={self.e} are inconsistent for d={self.d}")

    @classmethod
    def from_bias(cls, d, e):
        return cls(int(d), bias_to_probability(d, e), float(e))

    @classmethod
    def from_probability(cls, d, p):
        e = probability_to_bias(d, p)
        # Recompute p from e so the pair is exactly consistent.
        return cls(int(d), (1.0 + (d - 1) * e) / d, e)


def binary_entropy(q: float) -> float:
    """Shannon entropy of a Bernoulli(q) variable in bits."""
    q = _check_unit(q, "probability")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def fano_information(d: int, e: float) -> float:
    """I_d(e) = log d - h(p) - (1 - p) log(d - 1) with p = (1 + (d-1) e) / d.

    Evaluated as the divergence of the unbiased-error distribution from
    uniform, p log(1 + (d-1) e) + (1 - p) log(1 - e), which is the same
    quantity without the leading-order cancellation. For small arguments a
    power series is used so the result keeps full relative precision as
    e -> 0 (I_d is quadratic there).
    """
    d = _check_alphabet(d)
    e = _check_unit(e, "bias")
    a = d - 1
    if a * e < _SERIES_CUTOFF:
        total = 0.0
        power = e * e
        for m in range(2, _SERIES_TERMS + 2):
            total += power * ((-a) ** m + a) / (m * (m - 1))
            power *= e
        return total / (d * math.log(2.0))
    p = (1.0 + a * e) / d
    value = p * math.log1p(a * e)
    if e < 1.0:
        value += (1.0 - p) * math.log1p(-e)
    return value / math.log(2.0)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint distribution P(a=i, b=j) stored as a rows x cols weight matrix."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2:
            raise ValidationError(f"joint distribution must be 2-D, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValidationError("joint distribution contains non-finite weights")
        if w.min() < -PROB_ATOL:
            raise ValidationError(f"negative weight {w.min():.3g} in joint distribution")
        w = np.clip(w, 0.0, None)
        total = w.sum()
        if abs(total - 1.0) > RENORMALIZE_ATOL:
            raise ValidationError(f"joint distribution has total mass {total!r}, expected 1")
        if abs(total - 1.0) > PROB_ATOL:
            w = w / total
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]

    @property
    def row_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    @property
    def col_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=0)

    @property
    def diagonal_mass(self) -> float:
        return float(np.trace(self.weights))

    @classmethod
    def from_conditional(cls, prior, transition):
        """Build P(a=i, b=j) = r(j|i) P(a=i)."""
        prior = np.asarray(prior, dtype=float)
        transition = np.asarray(transition, dtype=float)
        return cls(prior[:, None] * transition)


def unbiased_error_joint(d: int, e: float) -> JointDistribution:
    """Uniform input, success probability (1 + (d-1) e)/d, errors spread evenly."""
    p = bias_to_probability(d, e)
    r = np.full((d, d), (1.0 - p) / (d - 1))
    np.fill_diagonal(r, p)
    return JointDistribution.from_conditional(np.full(d, 1.0 / d), r)


def mutual_information_array(joints: np.ndarray) -> np.ndarray:
    """Mutual information in bits of a stack of joint tables with shape (..., rows, cols).

    No validation; cells with zero mass contribute exactly 0.
    """
    j = np.asarray(joints, dtype=float)
    pa = j.sum(axis=-1, keepdims=True)
    pb = j.sum(axis=-2, keepdims=True)
    positive = j > 0
    denom = np.where(positive, pa * pb, 1.0)
    ratio = np.where(positive, j, 1.0) / denom
    terms = np.where(positive, j * np.log2(ratio), 0.0)
    return terms.sum(axis=(-2, -1))


def mutual_information(j: JointDistribution) -> float:
    if not isinstance(j, JointDistribution):
        j = JointDistribution(j)
    return max(float(mutual_information_array(j.weights)), 0.0)
