"""Exact simulation of random-access-coding protocols.

A round: the sender holds N i.i.d. data symbols, picks a box setting x from
them, turns the data and box outcome a into a message m, and sends m through
a discrete memoryless channel. To guess data symbol i the receiver uses box
setting y_map[i] and decodes (i, received message, outcome b) to a guess.

Tables are dense integer arrays indexed mixed-radix with the first data
variable most significant:

    x_table[t]               t = data tuple index
    m_table[t, a]
    y_map[i]
    decoder_table[i, m, b]
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ic_lab.boxes import BipartiteBox
from ic_lab.channels import DiscreteChannel, channel_capacity
from ic_lab.errors import ShapeMismatchError, ValidationError
from ic_lab.info_math import JointDistribution, mutual_information_array


def data_digits(n_data: int, q: int) -> np.ndarray:
    """All data tuples as rows, in mixed-radix order (first variable most significant)."""
    return np.array(list(itertools.product(range(q), repeat=n_data)), dtype=np.int64).reshape(-1, n_data)


@dataclass(frozen=True, eq=False)
class Protocol:
    n_data: int
    data_alphabet: int
    message_alphabet: int
    x_table: np.ndarray
    m_table: np.ndarray
    y_map: np.ndarray
    decoder_table: np.ndarray
    name: str = ""

    def __post_init__(self):
        if self.n_data < 1 or self.data_alphabet < 2 or self.message_alphabet < 2:
            raise ValidationError("protocol needs n_data >= 1 and alphabets >= 2")
        tuples = self.data_alphabet**self.n_data
        x = np.array(self.x_table, dtype=np.int64).reshape(-1)
        if x.size != tuples:
            raise ValidationError(f"x_table: expected {tuples} entries, got {x.size}")
        m = np.array(self.m_table, dtype=np.int64)
        if m.ndim == 1:
            if m.size % tuples:
                raise ValidationError(f"m_table: length {m.size} is not a multiple of {tuples}")
            m = m.reshape(tuples, -1)
        if m.shape[0] != tuples:
            raise ValidationError(f"m_table: expected {tuples} rows, got {m.shape[0]}")
        y = np.array(self.y_map, dtype=np.int64).reshape(-1)
        if y.size != self.n_data:
            raise ValidationError(f"y_map: expected {self.n_data} entries, got {y.size}")
        dec = np.array(self.decoder_table, dtype=np.int64)
        if dec.ndim == 1:
            per_index = self.n_data * self.message_alphabet
            if dec.size % per_index:
                raise ValidationError(f"decoder_table: length {dec.size} is not a multiple of {per_index}")
            dec = dec.reshape(self.n_data, self.message_alphabet, -1)
        if dec.shape[:2] != (self.n_data, self.message_alphabet):
            raise ValidationError(f"decoder_table: leading shape {dec.shape[:2]} != (n_data, message_alphabet)")
        for label, arr in (("x_table", x), ("m_table", m), ("y_map", y), ("decoder_table", dec)):
            if arr.size and arr.min() < 0:
                raise ValidationError(f"{label}: negative entry")
        if m.size and m.max() >= self.message_alphabet:
            raise ValidationError(f"m_table: message {m.max()} outside alphabet {self.message_alphabet}")
        if dec.size and dec.max() >= self.data_alphabet:
            raise ValidationError(f"decoder_table: guess {dec.max()} outside data alphabet {self.data_alphabet}")
        for arr in (x, m, y, dec):
            arr.setflags(write=False)
        object.__setattr__(self, "x_table", x)
        object.__setattr__(self, "m_table", m)
        object.__setattr__(self, "y_map", y)
        object.__setattr__(self, "decoder_table", dec)

    @property
    def na(self) -> int:
        return self.m_table.shape[1]

    @property
    def nb(self) -> int:
        return self.decoder_table.shape[2]

    def check_compatible(self, box: BipartiteBox, ch: DiscreteChannel) -> None:
        if self.na != box.na:
            raise ShapeMismatchError(f"box: sender has {box.na} outcomes, protocol m_table expects {self.na}")
        if self.nb != box.nb:
            raise ShapeMismatchError(f"box: receiver has {box.nb} outcomes, protocol decoder expects {self.nb}")
        if self.x_table.max() >= box.nx:
            raise ShapeMismatchError(f"box: protocol uses setting x={self.x_table.max()} but box has nx={box.nx}")
        if self.y_map.max() >= box.ny:
            raise ShapeMismatchError(f"box: protocol uses setting y={self.y_map.max()} but box has ny={box.ny}")
        if ch.d != self.message_alphabet:
            raise ShapeMismatchError(f"channel: alphabet {ch.d} != protocol message alphabet {self.message_alphabet}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_data": self.n_data,
            "data_alphabet": self.data_alphabet,
            "message_alphabet": self.message_alphabet,
            "na": self.na,
            "nb": self.nb,
            "x_table": self.x_table.tolist(),
            "m_table": self.m_table.reshape(-1).tolist(),
            "y_map": self.y_map.tolist(),
            "decoder_table": self.decoder_table.reshape(-1).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Protocol":
        try:
            proto = cls(
                n_data=int(data["n_data"]),
                data_alphabet=int(data.get("data_alphabet", 2)),
                message_alphabet=int(data["message_alphabet"]),
                x_table=data["x_table"],
                m_table=data["m_table"],
                y_map=data["y_map"],
                decoder_table=data["decoder_table"],
                name=str(data.get("name", "")),
            )
        except KeyError as exc:
            raise ValidationError(f"protocol: missing field {exc.args[0]!r}") from None
        for key, actual in (("na", proto.na), ("nb", proto.nb)):
            if key in data and int(data[key]) != actual:
                raise ValidationError(f"protocol.{key}: declared {data[key]} but tables imply {actual}")
        return proto


def van_dam_protocol() -> Protocol:
    """x = a0 XOR a1, m = a0 XOR a, y = i, guess = received XOR b."""
    digits = data_digits(2, 2)
    x = digits[:, 0] ^ digits[:, 1]
    m = np.array([[t[0] ^ a for a in range(2)] for t in digits])
    dec = np.array([[[mm ^ b for b in range(2)] for mm in range(2)] for _ in range(2)])
    return Protocol(2, 2, 2, x, m, [0, 1], dec, name="van Dam")


def protocol_3322() -> Protocol:
    text = resources.files("ic_lab.data").joinpath("protocol_3322.json").read_text(encoding="utf-8")
    return Protocol.from_dict(json.loads(text))


def load_protocol(path) -> Protocol:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    try:
        return Protocol.from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class SimulationResult:
    joints: tuple  # JointDistribution of (a_i, b_i) per index
    success: np.ndarray
    mutual_information: np.ndarray
    ic_sum: float


def _prior_weights(proto: Protocol, prior) -> np.ndarray:
    q = proto.data_alphabet
    if prior is None:
        return np.full(q**proto.n_data, 1.0 / q**proto.n_data)
    prior = np.asarray(prior, dtype=float)
    if prior.shape != (q,) or prior.min() < 0 or abs(prior.sum() - 1.0) > 1e-12:
        raise ValidationError(f"prior must be a distribution over {q} data symbols")
    digits = data_digits(proto.n_data, q)
    return np.prod(prior[digits], axis=1)


def index_joints(proto: Protocol, box: BipartiteBox, ch: DiscreteChannel, prior=None) -> np.ndarray:
    """Unvalidated joint tables P(a_i, b_i) stacked with shape (N, q, q)."""
    proto.check_compatible(box, ch)
    q = proto.data_alphabet
    digits = data_digits(proto.n_data, q)
    weights = _prior_weights(proto, prior)
    # box_sel[t, i, a, b] = P(a, b | x(t), y_i)
    box_sel = box.probs[proto.x_table[:, None], proto.y_map[None, :]]
    # chan[t, a, m'] = r(m' | m(t, a))
    chan = ch.transition[proto.m_table]
    received = np.einsum("tiab,tam->timb", box_sel, chan)
    decoder = np.eye(q)[proto.decoder_table]  # (i, m', b, guess)
    guesses = np.einsum("timb,imbc->tic", received, decoder)
    data_onehot = np.eye(q)[digits]  # (t, i, value)
    return np.einsum("t,tia,tic->iac", weights, data_onehot, guesses)


def simulate(proto: Protocol, box: BipartiteBox, ch: DiscreteChannel, prior=None) -> SimulationResult:
    """Exact per-index joint distributions by summing over every data tuple and outcome."""
    tables = index_joints(proto, box, ch, prior)
    joints = tuple(JointDistribution(t) for t in tables)
    mi = np.clip(mutual_information_array(np.stack([j.weights for j in joints])), 0.0, None)
    success = np.array([j.diagonal_mass for j in joints])
    return SimulationResult(joints, success, mi, float(mi.sum()))


def ic_check(proto: Protocol, box: BipartiteBox, ch: DiscreteChannel, prior=None) -> float:
    """Capacity minus the IC sum; negative means the box violates Information Causality."""
    return channel_capacity(ch) - simulate(proto, box, ch, prior).ic_sum
