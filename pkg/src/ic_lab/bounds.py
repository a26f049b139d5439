"""Solvers turning the IC condition into bounds on the bias of a box.

Every solver works with a *margin*: capacity minus the IC sum (or the
equivalent rearrangement). Positive margin means IC holds; the bound is the
largest bias with nonnegative margin.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from ic_lab.boxes import BipartiteBox
from ic_lab.channels import DiscreteChannel, channel_capacity, symmetric_channel
from ic_lab.errors import AmbiguityError, DomainError, ExtrapolationError
from ic_lab.info_math import fano_information, mutual_information_array
from ic_lab.protocols import Protocol, index_joints

DEFAULT_TOL = 1e-10
INNER_TOL = 1e-12
MAX_BISECTIONS = 200
LIMIT_EC_VALUES = (1e-2, 5e-3, 2e-3, 1e-3)
LIMIT_FIT_TOL = 1e-6
SCAN_POINTS = 1000
FINE_SCAN_POINTS = 10_000
MONOTONE_SLACK = 1e-12


@dataclass(frozen=True)
class BoundResult:
    e_bound: float
    e_c: float | None
    margin_at_bound: float
    iterations: int
    tolerance: float
    d: int = 2
    diagnostics: dict = field(default_factory=dict)

    @property
    def p_bound(self) -> float:
        return (1.0 + (self.d - 1) * self.e_bound) / self.d

    @property
    def bounded(self) -> bool:
        return not self.diagnostics.get("no_bound", False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["p_bound"] = self.p_bound
        return out


@dataclass(frozen=True)
class ConcatenationQuery:
    n: int
    d: int
    k: int

    def __post_init__(self):
        if self.n < 2 or self.d < 2 or self.k < 1:
            raise DomainError(f"need n >= 2, d >= 2, k >= 1; got {self}")


def _bisect_margin(margin: Callable[[float], float], lo: float, hi: float, tol: float, m_lo=None, m_hi=None):
    """Largest point of [lo, hi] with margin >= 0, for margin going from >= 0 to < 0.

    Returns (e, margin(e), iterations, final bracket width). Stops once the
    bracket is narrower than ``tol`` and the margin at the returned point is
    at most ``tol``, or when the bracket can no longer be split.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    m_lo = margin(lo) if m_lo is None else m_lo
    m_hi = margin(hi) if m_hi is None else m_hi
    if not (m_lo >= 0.0 and m_hi < 0.0):
        raise DomainError(f"invalid bracket: margin({lo})={m_lo!r}, margin({hi})={m_hi!r}")
    iterations = 0
    while iterations < MAX_BISECTIONS:
        if hi - lo <= tol and m_lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        m_mid = margin(mid)
        iterations += 1
        if m_mid >= 0.0:
            lo, m_lo = mid, m_mid
        else:
            hi = mid
    return lo, m_lo, iterations, hi - lo


def symmetric_margin(n: int, d: int, e_c: float, e: float) -> float:
    return fano_information(d, e_c) - n * fano_information(d, e_c * e)


def solve_symmetric_bound(n: int, d: int, e_c: float, tol: float = DEFAULT_TOL) -> BoundResult:
    """Solve n * I_d(e_c * e) = I_d(e_c) for e.

    The left side increases strictly with e, so bisection on [0, 1] finds
    the unique crossing.
    """
    if n < 2 or d < 2:
        raise DomainError(f"need n >= 2 and d >= 2, got n={n}, d={d}")
    if not 0.0 < e_c <= 1.0:
        raise DomainError(f"e_c must lie in (0, 1], got {e_c!r}; use the limit solver for e_c -> 0")
    capacity = fano_information(d, e_c)

    def margin(e):
        return capacity - n * fano_information(d, e_c * e)

    m_top = margin(1.0)
    if m_top >= 0.0:
        return BoundResult(1.0, e_c, m_top, 0, 0.0, d, {"no_bound": True})
    e, m, its, width = _bisect_margin(margin, 0.0, 1.0, tol, m_hi=m_top)
    return BoundResult(e, e_c, m, its, width, d)


def _golden_refine(objective, grid, values, tol):
    i = int(np.argmin(values))  # first minimum, i.e. smallest e_c on ties
    if i == 0 or i == len(grid) - 1:
        return grid[i], values[i], 0
    a, b, c = grid[i - 1], grid[i], grid[i + 1]
    if not (values[i] < values[i - 1] and values[i] < values[i + 1]):
        return b, values[i], 0
    res = minimize_scalar(objective, bracket=(a, b, c), method="golden", tol=tol)
    if res.fun < values[i] and a <= res.x <= c:
        return float(res.x), float(res.fun), int(res.nit)
    return b, values[i], int(res.nit)


def optimize_channel_bias(n: int, d: int, tol: float = 1e-6, grid_step: float = 1e-3) -> BoundResult:
    """Channel bias giving the tightest symmetric bound: coarse grid then golden section."""
    if n < 2 or d < 2:
        raise DomainError(f"need n >= 2 and d >= 2, got n={n}, d={d}")
    steps = int(round(1.0 / grid_step))
    grid = np.arange(1, steps + 1) * grid_step

    def objective(e_c):
        if not 0.0 < e_c <= 1.0:
            return math.inf
        return solve_symmetric_bound(n, d, float(e_c), INNER_TOL).e_bound

    values = np.array([objective(ec) for ec in grid])
    e_c, _, nit = _golden_refine(objective, grid, values, tol)
    best = solve_symmetric_bound(n, d, e_c, INNER_TOL)
    diagnostics = {"grid_argmin": float(grid[int(np.argmin(values))]), "golden_iterations": nit}
    return BoundResult(best.e_bound, e_c, best.margin_at_bound, best.iterations, best.tolerance, d, diagnostics)


def concatenation_bound(q: ConcatenationQuery, tol: float = DEFAULT_TOL) -> BoundResult:
    """Solve n^k * I_d(e^k) = log2 d for e (k levels of concatenation)."""
    n, d, k = q.n, q.d, q.k
    log_target = math.log(math.log2(d))
    log_scale = k * math.log(n)

    # Compared in logs: n**k overflows long before e**k underflows.
    def margin(e):
        info = fano_information(d, e**k)
        if info <= 0.0:
            return math.inf
        return log_target - log_scale - math.log(info)

    e, m, its, width = _bisect_margin(margin, 0.0, 1.0, tol)
    margin_bits = math.log2(d) - math.exp(log_scale + math.log(max(fano_information(d, e**k), 1e-300)))
    return BoundResult(e, None, margin_bits, its, width, d, {"k": k, "log_margin": m})


def best_concatenation_bound(n: int, d: int, k_max: int = 200, tol: float = DEFAULT_TOL) -> BoundResult:
    """Tightest concatenation bound over depths k = 1..k_max."""
    best = None
    for k in range(1, k_max + 1):
        res = concatenation_bound(ConcatenationQuery(n, d, k), tol)
        if best is None or res.e_bound < best.e_bound:
            best = res
    return best


def _fast_ic_sum(proto, box, ch):
    tables = index_joints(proto, box, ch)
    return float(np.clip(mutual_information_array(tables), 0.0, None).sum())


def _crossings(grid, margins):
    nonneg = margins >= 0.0
    idx = np.nonzero(nonneg[:-1] != nonneg[1:])[0]
    return [(float(grid[i]), float(grid[i + 1])) for i in idx]


def protocol_bound(
    proto: Protocol,
    box_family: Callable[[float], BipartiteBox],
    ch: DiscreteChannel,
    tol: float = DEFAULT_TOL,
    scan_points: int = SCAN_POINTS,
) -> BoundResult:
    """Largest family parameter e in [0, 1] for which the protocol does not violate IC."""
    capacity = channel_capacity(ch)

    def margin(e):
        return capacity - _fast_ic_sum(proto, box_family(float(e)), ch)

    grid = np.linspace(0.0, 1.0, scan_points)
    margins = np.array([margin(e) for e in grid])
    diagnostics = {"capacity": capacity, "non_monotone": False}
    if np.any(np.diff(margins) > MONOTONE_SLACK):
        diagnostics["non_monotone"] = True
        grid = np.linspace(0.0, 1.0, FINE_SCAN_POINTS)
        margins = np.array([margin(e) for e in grid])
    if margins[0] < 0.0:
        raise DomainError(f"margin is already negative ({margins[0]:.3g}) at the start of the box family")
    crossings = _crossings(grid, margins)
    if not crossings:
        return BoundResult(1.0, ch.symmetric_bias(), float(margins[-1]), 0, 0.0, 2, {**diagnostics, "no_bound": True})
    if len(crossings) > 1:
        raise AmbiguityError(f"IC margin changes sign {len(crossings)} times", crossings)
    lo, hi = crossings[0]
    i = int(np.searchsorted(grid, lo))
    e, m, its, width = _bisect_margin(margin, lo, hi, tol, m_lo=float(margins[i]), m_hi=float(margins[i + 1]))
    return BoundResult(e, ch.symmetric_bias(), m, its, width, 2, diagnostics)


def extrapolate_to_zero(ec_values, bounds, fit_tol: float = LIMIT_FIT_TOL):
    """Fit bound(e_c) = b0 + b1 e_c + b2 e_c^2 and return (b0, rms residual)."""
    ec = np.asarray(ec_values, dtype=float)
    y = np.asarray(bounds, dtype=float)
    if ec.size < 4:
        raise DomainError("need at least four channel biases to fit and check the extrapolation")
    design = np.vander(ec, 3, increasing=True)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    if residual > fit_tol:
        raise ExtrapolationError(
            f"extrapolation residual {residual:.3g} exceeds {fit_tol:.3g}", list(zip(ec.tolist(), y.tolist()))
        )
    return float(coef[0]), residual


def _limit_result(ec_values, results, fit_tol, d):
    e0, residual = extrapolate_to_zero(ec_values, [r.e_bound for r in results], fit_tol)
    diagnostics = {
        "sequence": [[float(ec), r.e_bound] for ec, r in zip(ec_values, results)],
        "fit_residual": residual,
    }
    return BoundResult(
        e0, 0.0, float("nan"), sum(r.iterations for r in results), residual, d, diagnostics
    )


def limit_bound(
    proto: Protocol,
    box_family: Callable[[float], BipartiteBox],
    d: int = 2,
    tol: float = DEFAULT_TOL,
    ec_values=LIMIT_EC_VALUES,
    fit_tol: float = LIMIT_FIT_TOL,
) -> BoundResult:
    """Bound in the limit of a useless symmetric channel, e_c -> 0.

    Evaluated at a few small e_c and extrapolated; going to e_c below ~1e-3
    directly would lose the signal to rounding.
    """
    results = [protocol_bound(proto, box_family, symmetric_channel(d, ec), tol) for ec in ec_values]
    return _limit_result(ec_values, results, fit_tol, d)


def symmetric_limit_bound(
    n: int, d: int, tol: float = DEFAULT_TOL, ec_values=LIMIT_EC_VALUES, fit_tol: float = LIMIT_FIT_TOL
) -> BoundResult:
    results = [solve_symmetric_bound(n, d, ec, tol) for ec in ec_values]
    return _limit_result(ec_values, results, fit_tol, d)


@dataclass(frozen=True)
class Result1Report:
    n: int
    d: int
    e: float
    k: int
    depth_k_total: float  # n^k I_d(e^k)
    depth_k1_total: float  # n^(k+1) I_d(e^(k+1))
    channel_lhs: float  # n I_d(e^(k+1))
    channel_rhs: float  # I_d(e^k)

    @property
    def premises(self) -> bool:
        target = math.log2(self.d)
        return self.depth_k_total <= target and self.depth_k1_total > target

    @property
    def conclusion(self) -> bool:
        return self.channel_lhs > self.channel_rhs

    @property
    def holds(self) -> bool:
        return (not self.premises) or self.conclusion


def result1_witness(n: int, d: int, e: float, k: int) -> Result1Report:
    """Check that a box caught at concatenation depth k+1 is caught by a single box and a channel with e_c = e^k."""
    if k < 1:
        raise DomainError("k must be >= 1")
    i_k = fano_information(d, e**k)
    i_k1 = fano_information(d, e ** (k + 1))
    return Result1Report(n, d, e, k, n**k * i_k, n ** (k + 1) * i_k1, n * i_k1, i_k)


def sweep_fig1(grid, tol: float = DEFAULT_TOL):
    """(p_c, bound on p) for the two-bit protocol over a binary symmetric channel."""
    rows = []
    for p_c in sorted(float(v) for v in grid):
        if not 0.5 < p_c <= 1.0:
            raise DomainError(f"p_c must lie in (0.5, 1], got {p_c}")
        res = solve_symmetric_bound(2, 2, 2.0 * p_c - 1.0, tol)
        rows.append((p_c, res.p_bound))
    return rows


def table1_row(d: int, n: int = 2, tol: float = 1e-6) -> dict:
    opt = optimize_channel_bias(n, d, tol)
    concat = best_concatenation_bound(n, d)
    return {"d": d, "e_c_opt": opt.e_c, "e": opt.e_bound, "e_concat": concat.e_bound, "k_concat": concat.diagnostics["k"]}
