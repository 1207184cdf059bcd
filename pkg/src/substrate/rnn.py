"""Elman-style recurrent networks and behaviour-preserving hidden-space rewrites.

    h_t = act(W_hid h_{t-1} + W_in x_t)
    o_t = W_out h_t

Every weighted sum is computed canonically: the individual products are
sorted by value and accumulated from +0.0.  The result then depends only on
the multiset of products, so permuting hidden units reproduces every bit,
and the zero products contributed by padded units leave every partial sum
unchanged.  Both rewrites are therefore exact substitutions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .canonical import Writer, sha256
from .errors import DimensionMismatch, InvalidPermutation, NonFiniteValue

DEFAULT_TOL = 1e-9
DEFAULT_TRIALS = 50
DEFAULT_HORIZON = 20


class Activation(str, Enum):
    RELU = "relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"

    def __call__(self, z):
        if self is Activation.RELU:
            return np.maximum(z, 0.0)
        if self is Activation.TANH:
            return np.tanh(z)
        return 1.0 / (1.0 + np.exp(-z))


def _matrix(a, shape, what):
    a = np.array(a, dtype=np.float64)
    if a.size == 0 and 0 in shape:
        a = a.reshape(shape)
    if a.shape != shape:
        raise DimensionMismatch(f"{what} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteValue(f"{what} has non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Rnn:
    W_in: np.ndarray
    W_hid: np.ndarray
    W_out: np.ndarray
    activation: Activation
    h0: np.ndarray
    name: str = ""

    def __post_init__(self):
        W_hid = np.asarray(self.W_hid, dtype=np.float64)
        if W_hid.ndim != 2 or W_hid.shape[0] != W_hid.shape[1]:
            raise DimensionMismatch(f"W_hid must be square, got shape {W_hid.shape}")
        H = W_hid.shape[0]
        W_in = np.asarray(self.W_in, dtype=np.float64)
        W_out = np.asarray(self.W_out, dtype=np.float64)
        if W_in.ndim != 2 or W_out.ndim != 2:
            raise DimensionMismatch("W_in and W_out must be matrices")
        object.__setattr__(self, "W_hid", _matrix(W_hid, (H, H), "W_hid"))
        object.__setattr__(self, "W_in", _matrix(W_in, (H, W_in.shape[1]), "W_in"))
        object.__setattr__(self, "W_out", _matrix(W_out, (W_out.shape[0], H), "W_out"))
        object.__setattr__(self, "h0", _matrix(self.h0, (H,), "h0"))
        object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def input_dim(self):
        return self.W_in.shape[1]

    @property
    def hidden_dim(self):
        return self.W_hid.shape[0]

    @property
    def output_dim(self):
        return self.W_out.shape[0]

    @cached_property
    def digest(self):
        w = Writer().text(self.activation.value)
        for a in (self.W_in, self.W_hid, self.W_out):
            w.u32(a.shape[0]).u32(a.shape[1]).f64_array(a.ravel())
        w.f64_array(self.h0)
        return sha256(w.getvalue())

    def __eq__(self, other):
        return isinstance(other, Rnn) and self.digest == other.digest

    def __hash__(self):
        return hash(self.digest)

    def __repr__(self):
        return f"Rnn({self.name or self.digest[:8]}, {self.input_dim}-{self.hidden_dim}-{self.output_dim}, {self.activation.value})"


class WitnessKind(str, Enum):
    PERMUTATION = "permutation"
    ZERO_PAD = "zero_pad"
    COMPOSITE = "composite"


@dataclass(frozen=True, eq=False)
class WitnessMap:
    """Affine map ``h -> forward @ h + offset`` from source to target hidden space.

    ``offset`` is zero except for padded units under the sigmoid, whose
    resting value is act(0) = 0.5.
    """

    forward: np.ndarray
    kind: WitnessKind
    offset: np.ndarray = None

    def __post_init__(self):
        f = np.asarray(self.forward, dtype=np.float64)
        off = np.zeros(f.shape[0]) if self.offset is None else np.asarray(self.offset, dtype=np.float64)
        if off.shape != (f.shape[0],):
            raise DimensionMismatch("witness offset does not match target dimension")
        object.__setattr__(self, "forward", f)
        object.__setattr__(self, "offset", off)

    @property
    def source_dim(self):
        return self.forward.shape[1]

    @property
    def target_dim(self):
        return self.forward.shape[0]

    def apply(self, h):
        """Map hidden vectors (last axis or first axis = hidden, see ``_affine``)."""
        out = _affine(self.forward, h)
        return out + self.offset.reshape((-1,) + (1,) * (np.ndim(h) - 1))

    def then(self, other):
        """Composite map: apply ``self`` first, then ``other``."""
        forward = other.forward @ self.forward
        offset = other.forward @ self.offset + other.offset
        return WitnessMap(forward, WitnessKind.COMPOSITE, offset)


@dataclass(frozen=True)
class WitnessedRnn:
    """A network registered together with its correspondence to a reference network."""

    net: Rnn
    reference: Rnn
    witness: WitnessMap

    @property
    def name(self):
        return self.net.name


def identity_witness(net):
    return WitnessMap(np.eye(net.hidden_dim), WitnessKind.PERMUTATION)


# --------------------------------------------------------------------------- dynamics


def _products(W, v):
    # (rows, cols, *batch): every product W[i, j] * v[j]
    return W.reshape(W.shape + (1,) * (np.ndim(v) - 1)) * np.asarray(v)[None, ...]


def _canonical_sum(terms):
    """Sum over axis 1 in ascending order of value, starting from +0.0.

    The result depends only on the multiset of terms: reordering hidden
    units permutes the terms but not their sorted order, and the zero
    products contributed by padded units never change a partial sum.
    """
    terms = np.sort(terms, axis=1)
    acc = np.zeros((terms.shape[0],) + terms.shape[2:])
    for j in range(terms.shape[1]):
        acc += terms[:, j]
    return acc


def _affine(W, v):
    """``W @ v`` with canonical summation; ``v`` may carry a trailing batch axis."""
    return _canonical_sum(_products(W, v))


def _pre_activation(net, h, x):
    return _canonical_sum(np.concatenate([_products(net.W_hid, h), _products(net.W_in, x)], axis=1))


def rnn_step(net, h, x):
    h = np.asarray(h, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if h.shape[:1] != (net.hidden_dim,) or x.shape[:1] != (net.input_dim,) or h.shape[1:] != x.shape[1:]:
        raise DimensionMismatch(
            f"expected hidden {net.hidden_dim} and input {net.input_dim}, got {h.shape} and {x.shape}"
        )
    with np.errstate(over="ignore", invalid="ignore"):
        h_next = net.activation(_pre_activation(net, h, x))
        o = _affine(net.W_out, h_next)
    if not (np.all(np.isfinite(h_next)) and np.all(np.isfinite(o))):
        raise NonFiniteValue("network state left the finite range")
    return h_next, o


def rnn_run(net, inputs):
    """Run one sequence; returns hidden trace (T, H) and output trace (T, O)."""
    xs = np.asarray(inputs, dtype=np.float64).reshape(-1, net.input_dim) if len(inputs) else np.zeros((0, net.input_dim))
    if xs.shape[1] != net.input_dim:
        raise DimensionMismatch(f"inputs must have dimension {net.input_dim}")
    hs = np.zeros((len(xs), net.hidden_dim))
    os_ = np.zeros((len(xs), net.output_dim))
    h = net.h0
    for t, x in enumerate(xs):
        h, o = rnn_step(net, h, x)
        hs[t], os_[t] = h, o
    return hs, os_


def rnn_run_batch(net, inputs):
    """Run a batch ``(trials, T, input_dim)``; returns ``(trials, T, H)`` and ``(trials, T, O)``.

    Each trial is computed with exactly the same floating-point operations as
    :func:`rnn_run` would perform on it.
    """
    X = np.asarray(inputs, dtype=np.float64)
    if X.ndim != 3 or X.shape[2] != net.input_dim:
        raise DimensionMismatch(f"batch must be (trials, T, {net.input_dim}), got {X.shape}")
    trials, T, _ = X.shape
    H = np.zeros((trials, T, net.hidden_dim))
    O = np.zeros((trials, T, net.output_dim))
    h = np.repeat(net.h0[:, None], trials, axis=1)
    for t in range(T):
        h, o = rnn_step(net, h, X[:, t, :].T)
        H[:, t, :], O[:, t, :] = h.T, o.T
    return H, O


# --------------------------------------------------------------------------- rewrites


def pad_hidden(net, extra):
    """Append ``extra`` hidden units that nothing reads from and nothing writes to."""
    if extra < 1:
        raise ValueError("extra must be >= 1")
    H, n = net.hidden_dim, net.hidden_dim + extra
    W_hid = np.zeros((n, n))
    W_hid[:H, :H] = net.W_hid
    W_in = np.zeros((n, net.input_dim))
    W_in[:H] = net.W_in
    W_out = np.zeros((net.output_dim, n))
    W_out[:, :H] = net.W_out
    h0 = np.concatenate([net.h0, np.zeros(extra)])
    padded = Rnn(W_in, W_hid, W_out, net.activation, h0, name=f"{net.name}+pad{extra}" if net.name else "")
    forward = np.zeros((n, H))
    forward[:H, :H] = np.eye(H)
    offset = np.zeros(n)
    offset[H:] = net.activation(np.zeros(extra))
    return padded, WitnessMap(forward, WitnessKind.ZERO_PAD, offset)


def permutation_matrix(perm):
    perm = list(perm)
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise InvalidPermutation(f"{perm} is not a permutation of 0..{n - 1}")
    P = np.zeros((n, n))
    # new unit i holds old unit perm[i]
    P[np.arange(n), perm] = 1.0
    return P


def permute_hidden(net, perm):
    if len(perm) != net.hidden_dim:
        raise InvalidPermutation(f"permutation has length {len(perm)}, network has {net.hidden_dim} hidden units")
    P = permutation_matrix(perm)
    p = np.asarray(perm)
    # P W P^T and friends, taken by indexing so every weight is copied exactly
    permuted = Rnn(
        net.W_in[p], net.W_hid[np.ix_(p, p)], net.W_out[:, p], net.activation, net.h0[p], name=net.name
    )
    return permuted, WitnessMap(P, WitnessKind.PERMUTATION)


# --------------------------------------------------------------------------- equivalence checks


def random_battery(input_dim, trials=DEFAULT_TRIALS, horizon=DEFAULT_HORIZON, seed=0):
    """Inputs drawn uniform(-1, 1); trial i uses seed ``seed + i``."""
    return np.stack(
        [np.random.default_rng(seed + i).uniform(-1.0, 1.0, size=(horizon, input_dim)) for i in range(trials)]
    ) if trials else np.zeros((0, horizon, input_dim))


def behaviorally_equivalent(n1, n2, trials=DEFAULT_TRIALS, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, seed=0):
    if n1.input_dim != n2.input_dim or n1.output_dim != n2.output_dim:
        raise DimensionMismatch("networks differ in input or output dimension")
    X = random_battery(n1.input_dim, trials, horizon, seed)
    _, O1 = rnn_run_batch(n1, X)
    _, O2 = rnn_run_batch(n2, X)
    return bool(np.all(np.abs(O1 - O2) <= tol))


def witness_valid(n1, n2, witness, trials=DEFAULT_TRIALS, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, seed=0):
    """True iff ``witness`` carries every hidden state of n1 onto the matching state of n2."""
    if witness.source_dim != n1.hidden_dim or witness.target_dim != n2.hidden_dim:
        raise DimensionMismatch("witness shape does not match the two hidden dimensions")
    if n1.input_dim != n2.input_dim:
        raise DimensionMismatch("networks differ in input dimension")
    X = random_battery(n1.input_dim, trials, horizon, seed)
    return hidden_traces_correspond(witness, rnn_run_batch(n1, X)[0], rnn_run_batch(n2, X)[0], tol)


def hidden_traces_correspond(witness, H1, H2, tol):
    """Compare batched hidden traces ``(..., H1)`` and ``(..., H2)`` under ``witness``."""
    flat1 = H1.reshape(-1, H1.shape[-1]).T
    mapped = witness.apply(flat1).T.reshape(H1.shape[:-1] + (witness.target_dim,))
    return bool(mapped.shape == H2.shape and np.all(np.abs(mapped - H2) <= tol))


def random_rnn(rng, input_dim, hidden_dim, output_dim, activation, scale=1.0, name=""):
    def u(*shape):
        return rng.uniform(-scale, scale, size=shape)

    return Rnn(u(hidden_dim, input_dim), u(hidden_dim, hidden_dim), u(output_dim, hidden_dim), activation,
               u(hidden_dim), name=name)


# --------------------------------------------------------------------------- file format


def rnn_to_dict(net):
    d = {
        "input_dim": net.input_dim,
        "hidden_dim": net.hidden_dim,
        "output_dim": net.output_dim,
        "activation": net.activation.value,
        "W_in": net.W_in.tolist(),
        "W_hid": net.W_hid.tolist(),
        "W_out": net.W_out.tolist(),
        "h0": net.h0.tolist(),
    }
    if net.name:
        d["name"] = net.name
    return d


def rnn_from_dict(d):
    for key in ("input_dim", "hidden_dim", "output_dim", "activation", "W_in", "W_hid", "W_out", "h0"):
        if key not in d:
            raise DimensionMismatch(f"network file missing field {key!r}")
    I, H, O = d["input_dim"], d["hidden_dim"], d["output_dim"]
    net = Rnn(
        _matrix(d["W_in"], (H, I), "W_in"),
        _matrix(d["W_hid"], (H, H), "W_hid"),
        _matrix(d["W_out"], (O, H), "W_out"),
        d["activation"],
        _matrix(d["h0"], (H,), "h0"),
        name=d.get("name", ""),
    )
    return net


def load_rnn(path):
    with open(path, encoding="utf-8") as fh:
        return rnn_from_dict(json.load(fh))
