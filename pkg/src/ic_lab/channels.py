"""Discrete memoryless channels r(j|i) and their capacities."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ic_lab.errors import ConvergenceError, DomainError, ValidationError
from ic_lab.info_math import PROB_ATOL, RENORMALIZE_ATOL, bias_to_probability, fano_information

MAX_ITERATIONS = 10_000
GAP_NOISE = 1e-14  # rounding floor of the bound gap, in bits


@dataclass(frozen=True, eq=False)
class DiscreteChannel:
    """Square transition matrix; rows are inputs i, columns outputs j."""

    transition: np.ndarray

    def __post_init__(self):
        r = np.array(self.transition, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValidationError(f"channel transition must be a square matrix, got shape {r.shape}")
        if r.shape[0] < 2:
            raise ValidationError("channel alphabet must have at least 2 symbols")
        if not np.all(np.isfinite(r)) or r.min() < -PROB_ATOL:
            raise ValidationError("channel transition has negative or non-finite entries")
        r = np.clip(r, 0.0, None)
        sums = r.sum(axis=1)
        worst = float(np.max(np.abs(sums - 1.0)))
        if worst > RENORMALIZE_ATOL:
            raise ValidationError(f"channel rows must sum to 1 (worst deviation {worst:.3g})")
        if worst > PROB_ATOL:
            r = r / sums[:, None]
        r.setflags(write=False)
        object.__setattr__(self, "transition", r)

    @property
    def d(self) -> int:
        return self.transition.shape[0]

    def symmetric_bias(self, atol: float = 1e-12):
        """Bias e_c if this is a symmetric channel with e_c in [0, 1], else None."""
        r = self.transition
        d = self.d
        diag = np.diag(r)
        off = r[~np.eye(d, dtype=bool)]
        if np.ptp(diag) > atol or np.ptp(off) > atol:
            return None
        e_c = (d * float(diag.mean()) - 1.0) / (d - 1)
        if e_c < -atol or e_c > 1.0 + atol:
            return None
        return min(max(e_c, 0.0), 1.0)

    def to_dict(self) -> dict:
        return {"d": self.d, "transition": self.transition.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteChannel":
        try:
            d = int(data["d"])
            r = np.asarray(data["transition"], dtype=float)
        except KeyError as exc:
            raise ValidationError(f"channel: missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"channel: malformed field: {exc}") from None
        if r.shape != (d, d):
            raise ValidationError(f"channel.transition: shape {r.shape} does not match d={d}")
        return cls(r)


def identity_channel(d: int = 2) -> DiscreteChannel:
    return DiscreteChannel(np.eye(d))


def symmetric_channel(d: int, e_c: float) -> DiscreteChannel:
    """Keep the symbol with probability p_c = (1 + (d-1) e_c)/d, else pick another uniformly."""
    p_c = bias_to_probability(d, e_c)
    r = np.full((d, d), (1.0 - p_c) / (d - 1))
    np.fill_diagonal(r, p_c)
    return DiscreteChannel(r)


def closed_form_capacity(d: int, e_c: float) -> float:
    return fano_information(d, e_c)


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    input_distribution: np.ndarray
    iterations: int
    gap: float  # upper minus lower capacity estimate at termination

    def __float__(self):
        return self.capacity


def _divergences(prior, r):
    # D_i = sum_j r(j|i) log2(r(j|i) / q(j)), the information density per input.
    q = prior @ r
    positive = r > 0
    ratio = np.where(positive, r, 1.0) / np.where(positive, q[None, :], 1.0)
    return np.where(positive, r * np.log2(ratio), 0.0).sum(axis=1)


def _ba_update(prior, dv, step):
    with np.errstate(divide="ignore"):
        logits = np.log(prior) + step * math.log(2.0) * (dv - dv.max())
    weights = np.exp(logits - logits.max())
    return weights / weights.sum()


def _bounds(prior, dv):
    upper = float(dv.max())
    return upper + math.log2(float(prior @ np.exp2(dv - upper))), upper


def iterative_capacity(
    ch: DiscreteChannel, tol: float = 1e-10, max_iter: int = MAX_ITERATIONS, initial=None
) -> CapacityResult:
    """Blahut-Arimoto alternating maximization with an adaptive step.

    Stops when the standard upper bound max_i D_i and lower bound
    log2 sum_i P(i) 2^{D_i} differ by less than ``tol``, so the returned
    capacity is within ``tol`` of the true value.

    The plain update P <- P 2^D contracts very slowly for nearly useless
    channels, so the exponent is scaled by a step. The step doubles while
    successive moves keep their direction and halves when they reverse or
    the gap would grow. At step 1 the plain update is taken unconditionally.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    r = ch.transition
    if initial is None:
        prior = np.full(ch.d, 1.0 / ch.d)
    else:
        prior = np.asarray(initial, dtype=float)
        if prior.shape != (ch.d,) or prior.min() <= 0 or abs(prior.sum() - 1.0) > RENORMALIZE_ATOL:
            raise ValidationError("initial input distribution must be strictly positive and sum to 1")
        prior = prior / prior.sum()
    step = 1.0
    dv = _divergences(prior, r)
    lower, upper = _bounds(prior, dv)
    last_move = None
    best = None
    for it in range(1, max_iter + 1):
        if best is None or lower > best.capacity:
            best = CapacityResult(lower, prior.copy(), it, upper - lower)
        if upper - lower < tol:
            return CapacityResult(lower, prior, it, upper - lower)
        while True:
            candidate = _ba_update(prior, dv, step)
            cand_dv = _divergences(candidate, r)
            cand_lower, cand_upper = _bounds(candidate, cand_dv)
            if cand_upper - cand_lower < upper - lower + GAP_NOISE or step <= 1.0:
                break
            step = max(step / 2.0, 1.0)
        move = candidate - prior
        # consecutive moves pointing back at each other mean the step overshoots
        if last_move is not None and float(move @ last_move) < 0:
            step = max(step / 2.0, 1.0)
        else:
            step = min(step * 2.0, 1e15)
        last_move = move
        prior, dv, lower, upper = candidate, cand_dv, cand_lower, cand_upper
    raise ConvergenceError(f"Blahut-Arimoto did not reach tol={tol} in {max_iter} iterations", best=best)


def channel_capacity(ch: DiscreteChannel, tol: float = 1e-10) -> float:
    """Closed form for symmetric channels, iterative otherwise."""
    e_c = ch.symmetric_bias()
    if e_c is not None:
        return closed_form_capacity(ch.d, e_c)
    return iterative_capacity(ch, tol).capacity


def load_channel(path) -> DiscreteChannel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    try:
        return DiscreteChannel.from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None
