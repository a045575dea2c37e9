"""A small from-scratch LSTM: parameters, sequence forward, and exact BPTT.

Gate layout stacks input/forget/candidate/output blocks into single
(4x, d) and (4x, x) matrices.  Everything is float64 so analytic
gradients can be checked against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, IntegrityError

FORWARD = "forward"
BACKWARD = "backward"
BIDIRECTIONAL = "bidirectional"
DIRECTIONS = (FORWARD, BACKWARD, BIDIRECTIONAL)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class GateParams:
    """One direction's stacked gate weights: W (4x,d), U (4x,x), b (4x,)."""

    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    def check(self, d: int, x: int) -> None:
        if self.W.shape != (4 * x, d) or self.U.shape != (4 * x, x):
            raise ContractError("gate weight shapes inconsistent with (d, x)")
        if self.b.shape != (4 * x,):
            raise ContractError("gate bias shape inconsistent with x")
        for arr in (self.W, self.U, self.b):
            if not np.all(np.isfinite(arr)):
                raise ContractError("gate parameters must be finite")


@dataclass
class LstmParams:
    input_dim: int
    hidden_dim: int
    fwd: GateParams
    direction: str = FORWARD
    bwd: GateParams | None = None

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ContractError(f"unknown direction {self.direction!r}")
        self.fwd.check(self.input_dim, self.hidden_dim)
        if self.direction == BIDIRECTIONAL:
            if self.bwd is None:
                raise ContractError("bidirectional params need a backward gate set")
            self.bwd.check(self.input_dim, self.hidden_dim)

    @property
    def output_dim(self) -> int:
        x = self.hidden_dim
        return 2 * x if self.direction == BIDIRECTIONAL else x

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        """Flat (name, array) view over all parameter tensors, for optimizers."""
        out = [("fwd.W", self.fwd.W), ("fwd.U", self.fwd.U), ("fwd.b", self.fwd.b)]
        if self.bwd is not None:
            out += [("bwd.W", self.bwd.W), ("bwd.U", self.bwd.U), ("bwd.b", self.bwd.b)]
        return out


def init_lstm_params(
    input_dim: int, hidden_dim: int = 150, direction: str = FORWARD, seed: int = 0
) -> LstmParams:
    """Uniform [-1/sqrt(x), 1/sqrt(x)] init with forget-gate bias 1.0."""
    rng = np.random.default_rng(seed)
    x = hidden_dim

    def one_set() -> GateParams:
        bound = 1.0 / np.sqrt(x)
        W = rng.uniform(-bound, bound, size=(4 * x, input_dim))
        U = rng.uniform(-bound, bound, size=(4 * x, x))
        b = rng.uniform(-bound, bound, size=4 * x)
        b[x : 2 * x] = 1.0  # forget gate
        return GateParams(W=W, U=U, b=b)

    fwd = one_set()
    bwd = one_set() if direction == BIDIRECTIONAL else None
    return LstmParams(
        input_dim=input_dim, hidden_dim=hidden_dim, fwd=fwd,
        direction=direction, bwd=bwd,
    )


@dataclass
class DirectionCache:
    X: np.ndarray            # (T, d) inputs in processing order
    i: np.ndarray            # (T, x) gate activations
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray            # (T, x) cell states
    h: np.ndarray            # (T, x) hidden states
    tanh_c: np.ndarray


@dataclass
class GateGrads:
    W: np.ndarray
    U: np.ndarray
    b: np.ndarray


@dataclass
class SequenceCache:
    params: LstmParams
    fwd: DirectionCache | None
    bwd: DirectionCache | None
    length: int
    extras: dict = field(default_factory=dict)


def _run_direction(X: np.ndarray, p: GateParams, x: int) -> tuple[np.ndarray, DirectionCache]:
    T = X.shape[0]
    i = np.zeros((T, x)); f = np.zeros((T, x)); g = np.zeros((T, x))
    o = np.zeros((T, x)); c = np.zeros((T, x)); h = np.zeros((T, x))
    tanh_c = np.zeros((T, x))
    h_prev = np.zeros(x)
    c_prev = np.zeros(x)
    for t in range(T):
        z = p.W @ X[t] + p.U @ h_prev + p.b
        i[t] = _sigmoid(z[:x])
        f[t] = _sigmoid(z[x : 2 * x])
        g[t] = np.tanh(z[2 * x : 3 * x])
        o[t] = _sigmoid(z[3 * x :])
        c[t] = f[t] * c_prev + i[t] * g[t]
        tanh_c[t] = np.tanh(c[t])
        h[t] = o[t] * tanh_c[t]
        h_prev, c_prev = h[t], c[t]
    final = h[-1] if T else np.zeros(x)
    return final, DirectionCache(X=X, i=i, f=f, g=g, o=o, c=c, h=h, tanh_c=tanh_c)


def _backprop_direction(
    cache: DirectionCache, p: GateParams, x: int, dh_final: np.ndarray
) -> tuple[GateGrads, np.ndarray]:
    T = cache.X.shape[0]
    d = cache.X.shape[1]
    dW = np.zeros_like(p.W); dU = np.zeros_like(p.U); db = np.zeros_like(p.b)
    dX = np.zeros((T, d))
    dh = dh_final.copy()
    dc = np.zeros(x)
    for t in range(T - 1, -1, -1):
        i, f, g, o = cache.i[t], cache.f[t], cache.g[t], cache.o[t]
        tc = cache.tanh_c[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        c_prev = cache.c[t - 1] if t > 0 else np.zeros(x)
        df = dc * c_prev
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ])
        h_prev = cache.h[t - 1] if t > 0 else np.zeros(x)
        dW += np.outer(dz, cache.X[t])
        dU += np.outer(dz, h_prev)
        db += dz
        dX[t] = p.W.T @ dz
        dh = p.U.T @ dz
        dc = dc * f
    return GateGrads(W=dW, U=dU, b=db), dX


def run_forward(X: np.ndarray, params: LstmParams) -> tuple[np.ndarray, SequenceCache]:
    """Process an embedded sequence X (T, d); returns (output vector, cache).

    Output is the final hidden state (forward/backward direction), or the
    concatenation of both final states (bidirectional, length 2x).  An
    empty sequence yields the zero-state output, i.e. all zeros.
    """
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise ContractError(
            f"input shape {X.shape} inconsistent with input_dim {params.input_dim}"
        )
    x = params.hidden_dim
    if params.direction == FORWARD:
        out, fc = _run_direction(X, params.fwd, x)
        return out, SequenceCache(params=params, fwd=fc, bwd=None, length=X.shape[0])
    if params.direction == BACKWARD:
        out, bc = _run_direction(X[::-1], params.fwd, x)
        return out, SequenceCache(params=params, fwd=bc, bwd=None, length=X.shape[0])
    f_out, fc = _run_direction(X, params.fwd, x)
    b_out, bc = _run_direction(X[::-1], params.bwd, x)
    return np.concatenate([f_out, b_out]), SequenceCache(
        params=params, fwd=fc, bwd=bc, length=X.shape[0]
    )


def run_backward(
    cache: SequenceCache, upstream: np.ndarray
) -> tuple[dict[str, GateGrads], np.ndarray]:
    """Exact BPTT through a cached forward pass.

    Returns ({"fwd": grads, "bwd": grads?}, dX) where dX has the original
    token order regardless of direction.
    """
    params = cache.params
    x = params.hidden_dim
    if upstream.shape != (params.output_dim,):
        raise IntegrityError(
            f"upstream gradient shape {upstream.shape} does not match "
            f"cached output dim {params.output_dim}"
        )
    if params.direction == FORWARD:
        grads, dX = _backprop_direction(cache.fwd, params.fwd, x, upstream)
        return {"fwd": grads}, dX
    if params.direction == BACKWARD:
        grads, dX_rev = _backprop_direction(cache.fwd, params.fwd, x, upstream)
        return {"fwd": grads}, dX_rev[::-1]
    f_grads, dX_f = _backprop_direction(cache.fwd, params.fwd, x, upstream[:x])
    b_grads, dX_b = _backprop_direction(cache.bwd, params.bwd, x, upstream[x:])
    return {"fwd": f_grads, "bwd": b_grads}, dX_f + dX_b[::-1]
