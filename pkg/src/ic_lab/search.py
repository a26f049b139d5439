"""Protocol search: simulated annealing over the truth tables, and brute force for small cases."""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from ic_lab.boxes import BipartiteBox
from ic_lab.channels import DiscreteChannel
from ic_lab.errors import DomainError, SearchSpaceTooLarge
from ic_lab.info_math import mutual_information_array
from ic_lab.protocols import Protocol, data_digits

RNG_NAME = "PCG64"
MAX_EXHAUSTIVE_SPACE = 10**7
TABLES = ("x_table", "m_table", "decoder_table", "y_map")


def _default_weights():
    return {"x_table": 1.0, "m_table": 1.0, "decoder_table": 1.0, "y_map": 0.0}


@dataclass(frozen=True)
class SearchConfig:
    initial_temperature: float = 1.0
    cooling: float = 0.995
    steps_per_temperature: int = 200
    max_evaluations: int = 1_000_000
    seed: int = 0
    move_weights: dict = field(default_factory=_default_weights)

    def __post_init__(self):
        if not 0.0 < self.cooling < 1.0:
            raise DomainError(f"cooling factor must lie in (0, 1), got {self.cooling}")
        if self.initial_temperature <= 0 or self.steps_per_temperature < 1 or self.max_evaluations < 1:
            raise DomainError("temperature, steps per temperature and evaluation cap must be positive")
        unknown = set(self.move_weights) - set(TABLES)
        if unknown:
            raise DomainError(f"unknown move targets {sorted(unknown)}")
        if any(w < 0 for w in self.move_weights.values()) or sum(self.move_weights.values()) <= 0:
            raise DomainError("move weights must be nonnegative with a positive total")


@dataclass(frozen=True)
class SearchResult:
    protocol: Protocol
    score: float
    seed: int | None
    config: SearchConfig | None
    trace: tuple = ()  # (evaluation, best score) each time the best improves
    evaluations: int = 0
    reached_cap: bool = False
    method: str = "anneal"

    def to_dict(self) -> dict:
        out = self.protocol.to_dict()
        out["provenance"] = {
            "method": self.method,
            "rng": RNG_NAME if self.method == "anneal" else None,
            "seed": self.seed,
            "config": asdict(self.config) if self.config is not None else None,
            "score": self.score,
            "evaluations": self.evaluations,
            "reached_cap": self.reached_cap,
        }
        return out


@njit(cache=True)
def _ic_sum_kernel(x, m, dec, y, probs, transition, digits, q):
    # Tables are flat: m[t*na + a], dec[(i*d + m')*nb + b].
    n_tuples, n_data = digits.shape
    na, nb = probs.shape[2], probs.shape[3]
    d = transition.shape[0]
    joint = np.zeros((q, q))
    row = np.zeros(q)
    col = np.zeros(q)
    w = 1.0 / n_tuples
    total = 0.0
    for i in range(n_data):
        joint[:, :] = 0.0
        yi = y[i]
        for t in range(n_tuples):
            xt = x[t]
            alpha = digits[t, i]
            for a in range(na):
                mt = m[t * na + a]
                for b in range(nb):
                    pab = probs[xt, yi, a, b]
                    if pab == 0.0:
                        continue
                    for mr in range(d):
                        joint[alpha, dec[(i * d + mr) * nb + b]] += w * pab * transition[mt, mr]
        row[:] = 0.0
        col[:] = 0.0
        for u in range(q):
            for v in range(q):
                row[u] += joint[u, v]
                col[v] += joint[u, v]
        info = 0.0
        for u in range(q):
            for v in range(q):
                if joint[u, v] > 0.0:
                    info += joint[u, v] * np.log2(joint[u, v] / (row[u] * col[v]))
        total += max(info, 0.0)
    return total


@njit(cache=True)
def _anneal_chunk(tables, best_tables, ranges, cumulative, uniforms, start, current, best,
                  t0, cooling, steps, probs, transition, digits, q, trace_eval, trace_score):
    x, m, dec, y = tables
    n_trace = 0
    for s in range(uniforms.shape[0]):
        done = start + s
        temperature = t0 * cooling ** ((done - 1) // steps)
        k = 0
        while k < 3 and uniforms[s, 0] >= cumulative[k]:
            k += 1
        arr = x if k == 0 else (m if k == 1 else (dec if k == 2 else y))
        pos = min(int(uniforms[s, 1] * arr.size), arr.size - 1)
        old = arr[pos]
        new = min(int(uniforms[s, 2] * (ranges[k] - 1)), ranges[k] - 2)
        arr[pos] = new + 1 if new >= old else new
        candidate = _ic_sum_kernel(x, m, dec, y, probs, transition, digits, q)
        delta = candidate - current
        if delta >= 0.0 or uniforms[s, 3] < np.exp(delta / temperature):
            current = candidate
            if current > best:
                best = current
                for j in range(4):
                    best_tables[j][:] = tables[j]
                trace_eval[n_trace] = done + 1
                trace_score[n_trace] = best
                n_trace += 1
        else:
            arr[pos] = old
    return current, best, n_trace


class _Scorer:
    """IC sum for raw tables with a fixed box and channel (uniform data prior)."""

    def __init__(self, box: BipartiteBox, ch: DiscreteChannel, n_data: int, q: int):
        self.probs = np.ascontiguousarray(box.probs)
        self.transition = np.ascontiguousarray(ch.transition)
        self.digits = data_digits(n_data, q)
        self.q = q

    def __call__(self, x, m, y, dec):
        return _ic_sum_kernel(
            np.ascontiguousarray(x).reshape(-1), np.ascontiguousarray(m).reshape(-1),
            np.ascontiguousarray(dec).reshape(-1), np.ascontiguousarray(y).reshape(-1),
            self.probs, self.transition, self.digits, self.q,
        )


def _check_search_inputs(box, ch, n_data):
    if n_data < 2:
        raise DomainError(f"n_data must be >= 2, got {n_data}")
    if box.na < 1 or box.nb < 1:
        raise DomainError("box has no outcomes")
    if ch.d < 2:
        raise DomainError("channel needs at least two symbols")


_CHUNK = 1 << 16


def anneal_protocol(
    box: BipartiteBox, ch: DiscreteChannel, n_data: int, cfg: SearchConfig | None = None, data_alphabet: int = 2
) -> SearchResult:
    """Maximize the IC sum over protocol tables by simulated annealing.

    Each move changes one entry of one table, chosen by ``cfg.move_weights``.
    Moves are accepted with probability min(1, exp(delta / T)), and the
    temperature drops geometrically every ``steps_per_temperature``
    evaluations. All randomness is drawn from a PCG64 stream seeded with
    ``cfg.seed``: four uniforms per move (table, entry, new value,
    acceptance). The chain always runs to ``max_evaluations``.
    """
    cfg = cfg or SearchConfig()
    _check_search_inputs(box, ch, n_data)
    q, d = data_alphabet, ch.d
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    n_tuples = q**n_data
    tables = (
        rng.integers(0, box.nx, size=n_tuples),
        rng.integers(0, d, size=n_tuples * box.na),
        rng.integers(0, q, size=n_data * d * box.nb),
        np.arange(n_data, dtype=np.int64) % box.ny,
    )
    ranges = np.array([box.nx, d, q, box.ny], dtype=np.int64)
    weights = np.array([cfg.move_weights.get(t, 0.0) if r > 1 else 0.0 for t, r in zip(TABLES, ranges)])
    if weights.sum() <= 0:
        raise DomainError("no table can be mutated with the given move weights")
    cumulative = np.cumsum(weights) / weights.sum()

    scorer = _Scorer(box, ch, n_data, q)
    current = scorer(tables[0], tables[1], tables[3], tables[2])
    best = current
    best_tables = tuple(t.copy() for t in tables)
    trace = [(1, best)]
    evaluations = 1
    while evaluations < cfg.max_evaluations:
        n = min(_CHUNK, cfg.max_evaluations - evaluations)
        uniforms = rng.random((n, 4))
        trace_eval = np.zeros(n, dtype=np.int64)
        trace_score = np.zeros(n)
        current, best, n_trace = _anneal_chunk(
            tables, best_tables, ranges, cumulative, uniforms, evaluations, current, best,
            cfg.initial_temperature, cfg.cooling, cfg.steps_per_temperature,
            scorer.probs, scorer.transition, scorer.digits, q, trace_eval, trace_score,
        )
        trace.extend(zip(trace_eval[:n_trace].tolist(), trace_score[:n_trace].tolist()))
        evaluations += n
    x, m, dec, y = best_tables
    proto = Protocol(
        n_data, q, d, x, m.reshape(n_tuples, box.na), y, dec.reshape(n_data, d, box.nb),
        name=f"annealed seed={cfg.seed}",
    )
    return SearchResult(proto, float(best), cfg.seed, cfg, tuple(trace), evaluations, True)


def _anneal_job(args):
    box, ch, n_data, cfg = args
    return anneal_protocol(box, ch, n_data, cfg)


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("IC_LAB_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def anneal_many(box, ch, n_data, cfg: SearchConfig, seeds, workers: int | None = None):
    """Independent chains, one per seed. Returns (best result, all results in seed order)."""
    jobs = [(box, ch, n_data, SearchConfig(**{**asdict(cfg), "seed": int(s)})) for s in seeds]
    n = min(worker_count(workers), len(jobs))
    if n <= 1:
        results = [_anneal_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_anneal_job, jobs))
    best = max(results, key=lambda r: (r.score, -r.seed))
    return best, results


def search_space_size(box: BipartiteBox, d: int, n_data: int, q: int = 2) -> int:
    n_tuples = q**n_data
    return (
        box.nx**n_tuples
        * d ** (n_tuples * box.na)
        * box.ny**n_data
        * q ** (n_data * d * box.nb)
    )


def exhaustive_protocol_search(
    box: BipartiteBox, ch: DiscreteChannel, n_data: int, data_alphabet: int = 2, max_space: int = MAX_EXHAUSTIVE_SPACE
) -> SearchResult:
    """Globally optimal deterministic protocol by enumeration.

    The IC sum splits into one term per data index, and index i depends only
    on the shared tables (x, m) plus its own receiver setting and decoder. So
    the per-index choices are optimized independently for every (x, m).
    Ties keep the first protocol in enumeration order.
    """
    _check_search_inputs(box, ch, n_data)
    q, d = data_alphabet, ch.d
    size = search_space_size(box, d, n_data, q)
    if size > max_space:
        raise SearchSpaceTooLarge(f"protocol space has {size:.3e} members, limit is {max_space:.0e}", size)
    digits = data_digits(n_data, q)
    n_tuples = digits.shape[0]
    weighted_onehot = np.eye(q)[digits] / n_tuples  # (t, i, value)
    decoders = np.array(list(itertools.product(range(q), repeat=d * box.nb))).reshape(-1, d, box.nb)
    decoder_onehot = np.eye(q)[decoders]  # (j, m', b, guess)
    m_configs = np.array(list(itertools.product(range(d), repeat=n_tuples * box.na))).reshape(-1, n_tuples, box.na)
    chan_all = ch.transition[m_configs]  # (k, t, a, m')
    n_y = box.ny

    best = (-math.inf, None)
    for x_cfg in itertools.product(range(box.nx), repeat=n_tuples):
        x_cfg = np.array(x_cfg)
        box_sel = box.probs[x_cfg]  # (t, y, a, b)
        for start in range(0, len(m_configs), 4096):
            chan = chan_all[start:start + 4096]
            received = np.einsum("tyab,ktam->ktymb", box_sel, chan)
            per_index = np.einsum("tia,ktymb->kiyamb", weighted_onehot, received)
            joints = np.einsum("kiyamb,jmbc->kiyjac", per_index, decoder_onehot)
            mi = mutual_information_array(joints).reshape(len(chan), n_data, n_y * len(decoders))
            choice = mi.argmax(axis=2)
            scores = np.take_along_axis(mi, choice[:, :, None], axis=2)[:, :, 0].sum(axis=1)
            k = int(scores.argmax())
            if scores[k] > best[0]:
                best = (float(scores[k]), (x_cfg, m_configs[start + k], choice[k]))
    score, (x_cfg, m_cfg, choice) = best
    y_map = choice // len(decoders)
    dec = decoders[choice % len(decoders)]
    proto = Protocol(n_data, q, d, x_cfg, m_cfg, y_map, dec, name="exhaustive optimum")
    return SearchResult(proto, max(score, 0.0), None, None, ((size, score),), size, False, method="exhaustive")
