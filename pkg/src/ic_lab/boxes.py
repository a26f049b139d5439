"""Bipartite nonsignaling boxes P(a,b|x,y) and Bell functionals on them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ic_lab.errors import DomainError, ShapeMismatchError, ValidationError

NS_TOL = 1e-10


@dataclass(frozen=True)
class Violation:
    kind: str  # "normalization", "sender_marginal" or "receiver_marginal"
    index: tuple
    magnitude: float

    def describe(self) -> str:
        if self.kind == "normalization":
            x, y = self.index
            return f"sum_ab P(a,b|x={x},y={y}) off by {self.magnitude:.3g}"
        if self.kind == "sender_marginal":
            a, x = self.index
            return f"marginal P(a={a}|x={x}) depends on y (spread {self.magnitude:.3g})"
        if self.kind == "receiver_marginal":
            b, y = self.index
            return f"marginal P(b={b}|y={y}) depends on x (spread {self.magnitude:.3g})"
        return f"{self.kind} at {self.index}: {self.magnitude:.3g}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def lines(self):
        return [v.describe() for v in self.violations]


@dataclass(frozen=True, eq=False)
class BipartiteBox:
    """Conditional distribution tensor indexed ``probs[x, y, a, b]``.

    Construction only checks shape and sign; use :func:`validate_no_signaling`
    for the normalization and no-signaling conditions.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 4:
            raise ValidationError(f"box tensor must be 4-D (x, y, a, b), got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValidationError("box tensor contains non-finite entries")
        if p.min() < -NS_TOL:
            raise ValidationError(f"box tensor has negative entry {p.min():.3g}")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def nx(self) -> int:
        return self.probs.shape[0]

    @property
    def ny(self) -> int:
        return self.probs.shape[1]

    @property
    def na(self) -> int:
        return self.probs.shape[2]

    @property
    def nb(self) -> int:
        return self.probs.shape[3]

    @property
    def shape(self):
        return self.probs.shape

    def to_dict(self) -> dict:
        return {"na": self.na, "nb": self.nb, "nx": self.nx, "ny": self.ny, "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "BipartiteBox":
        try:
            dims = tuple(int(data[k]) for k in ("nx", "ny", "na", "nb"))
            probs = np.asarray(data["probs"], dtype=float)
        except KeyError as exc:
            raise ValidationError(f"box: missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"box: malformed field: {exc}") from None
        if probs.shape != dims:
            raise ValidationError(f"box.probs: shape {probs.shape} does not match (nx, ny, na, nb) = {dims}")
        return cls(probs)


def white_noise(nx: int, ny: int, na: int = 2, nb: int = 2) -> BipartiteBox:
    return BipartiteBox(np.full((nx, ny, na, nb), 1.0 / (na * nb)))


def mix_with_white_noise(box: BipartiteBox, e: float) -> BipartiteBox:
    """Entrywise convex combination e*box + (1-e)*white noise."""
    if not 0.0 <= e <= 1.0:
        raise DomainError(f"mixing weight must lie in [0, 1], got {e!r}")
    noise = 1.0 / (box.na * box.nb)
    return BipartiteBox(e * box.probs + (1.0 - e) * noise)


def _parity_box(rule, nx, ny, p):
    probs = np.empty((nx, ny, 2, 2))
    for x in range(nx):
        for y in range(ny):
            target = rule(x, y)
            for a in range(2):
                for b in range(2):
                    probs[x, y, a, b] = p / 2 if (a ^ b) == target else (1.0 - p) / 2
    return BipartiteBox(probs)


def pr_box(p: float) -> BipartiteBox:
    """Isotropic CHSH box: a XOR b = x*y with probability p, uniform marginals."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    return _parity_box(lambda x, y: x * y, 2, 2, p)


_ANTI_3322 = {(1, 2), (2, 1), (2, 2)}


def box_3322(e: float) -> BipartiteBox:
    """e * (extremal 3322 box) + (1 - e) * white noise.

    The extremal box has a XOR b = 1 exactly for (x, y) in {(1,2), (2,1), (2,2)}
    and uniform marginals.
    """
    if not 0.0 <= e <= 1.0:
        raise DomainError(f"e must lie in [0, 1], got {e!r}")
    extremal = _parity_box(lambda x, y: int((x, y) in _ANTI_3322), 3, 3, 1.0)
    return mix_with_white_noise(extremal, e)


def validate_no_signaling(box: BipartiteBox, tol: float = NS_TOL) -> ValidationReport:
    p = box.probs
    found = []
    norms = p.sum(axis=(2, 3))
    for x, y in zip(*np.nonzero(np.abs(norms - 1.0) > tol)):
        found.append(Violation("normalization", (int(x), int(y)), float(abs(norms[x, y] - 1.0))))
    # Alice's marginal P(a|x,y) must not depend on y.
    pa = p.sum(axis=3)  # (x, y, a)
    spread_a = pa.max(axis=1) - pa.min(axis=1)  # (x, a)
    for x, a in zip(*np.nonzero(spread_a > tol)):
        found.append(Violation("sender_marginal", (int(a), int(x)), float(spread_a[x, a])))
    pb = p.sum(axis=2)  # (x, y, b)
    spread_b = pb.max(axis=0) - pb.min(axis=0)  # (y, b)
    for y, b in zip(*np.nonzero(spread_b > tol)):
        found.append(Violation("receiver_marginal", (int(b), int(y)), float(spread_b[y, b])))
    return ValidationReport(tuple(found))


@dataclass(frozen=True, eq=False)
class BellFunctional:
    """Linear functional sum_{x,y,a,b} c[x,y,a,b] P(a,b|x,y)."""

    name: str
    coefficients: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim != 4:
            raise ValidationError(f"functional coefficients must be 4-D, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def to_dict(self) -> dict:
        nx, ny, na, nb = self.coefficients.shape
        return {
            "name": self.name,
            "na": na,
            "nb": nb,
            "nx": nx,
            "ny": ny,
            "coefficients": self.coefficients.tolist(),
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BellFunctional":
        try:
            coeffs = np.asarray(data["coefficients"], dtype=float)
            name = str(data["name"])
        except KeyError as exc:
            raise ValidationError(f"functional: missing field {exc.args[0]!r}") from None
        dims = tuple(int(data.get(k, s)) for k, s in zip(("nx", "ny", "na", "nb"), coeffs.shape))
        if coeffs.shape != dims:
            raise ValidationError(f"functional.coefficients: shape {coeffs.shape} does not match {dims}")
        return cls(name, coeffs, dict(data.get("metadata", {})))


def bell_value(box: BipartiteBox, f: BellFunctional) -> float:
    if box.shape != f.coefficients.shape:
        raise ShapeMismatchError(f"functional {f.name!r} has shape {f.coefficients.shape}, box has {box.shape}")
    return float(np.sum(f.coefficients * box.probs))


def chsh_functional() -> BellFunctional:
    """CHSH as the game-winning probability with uniform settings."""
    c = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            for a in range(2):
                c[x, y, a, a ^ (x * y)] = 0.25
    return BellFunctional("CHSH", c, {"local_bound": 0.75, "ns_bound": 1.0, "form": "win probability"})


def load_functional(path) -> BellFunctional:
    return BellFunctional.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def i3322_functional() -> BellFunctional:
    text = resources.files("ic_lab.data").joinpath("i3322.json").read_text(encoding="utf-8")
    return BellFunctional.from_dict(json.loads(text))


def load_box(path) -> BipartiteBox:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    try:
        return BipartiteBox.from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None
