"""Stacked LSTM Q-network in plain numpy, with exact backpropagation.

Gate equations, per layer, acting on the concatenation z = [h_{t-1}, x_t]:

    f = sigmoid(W_f z + b_f)          forget
    i = sigmoid(W_i z + b_i)          input
    C~ = tanh(W_C z + b_C)            candidate
    C_t = f * C_{t-1} + i * C~        state update
    o = sigmoid(W_o z + b_o)          output
    h_t = o * tanh(C_t)

The Q head is an affine map from the top layer's final hidden state to one
value per action.  All parameters live in a single flat float64 vector;
the per-gate matrices are reshaped views into it, so optimizer steps,
serialization and finite-difference probes all address the same memory.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"VSWQ1"


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_cell(x: np.ndarray, h: np.ndarray, C: np.ndarray,
              weights: dict[str, np.ndarray]):
    """One LSTM cell step on a batch.

    ``weights`` holds W_f, b_f, W_i, b_i, W_C, b_C, W_o, b_o, each acting on
    the concatenation [h, x].  Returns (h', C')."""
    z = np.concatenate([np.atleast_2d(h), np.atleast_2d(x)], axis=1)
    f = sigmoid(z @ weights["W_f"].T + weights["b_f"])
    i = sigmoid(z @ weights["W_i"].T + weights["b_i"])
    Ct = np.tanh(z @ weights["W_C"].T + weights["b_C"])
    o = sigmoid(z @ weights["W_o"].T + weights["b_o"])
    C_new = f * np.atleast_2d(C) + i * Ct
    h_new = o * np.tanh(C_new)
    return h_new, C_new


@dataclass(frozen=True)
class NetSpec:
    input_dim: int
    hidden_size: int = 64
    lstm_layers: int = 3
    n_actions: int = 5

    def param_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        shapes = []
        for layer in range(self.lstm_layers):
            d_in = self.input_dim if layer == 0 else self.hidden_size
            z = self.hidden_size + d_in
            for gate in ("f", "i", "C", "o"):
                shapes.append((f"l{layer}.W_{gate}", (self.hidden_size, z)))
                shapes.append((f"l{layer}.b_{gate}", (self.hidden_size,)))
        shapes.append(("head.W", (self.n_actions, self.hidden_size)))
        shapes.append(("head.b", (self.n_actions,)))
        return shapes


class QNetwork:
    """Parameter container plus forward/backward passes."""

    def __init__(self, spec: NetSpec, seed: int | None = 0):
        self.spec = spec
        self.shapes = spec.param_shapes()
        self.n_params = sum(int(np.prod(s)) for _, s in self.shapes)
        self.flat = np.zeros(self.n_params)
        self.views: dict[str, np.ndarray] = {}
        off = 0
        for name, shape in self.shapes:
            size = int(np.prod(shape))
            self.views[name] = self.flat[off:off + size].reshape(shape)
            off += size
        if seed is not None:
            self._init_weights(np.random.default_rng(seed))

    def _init_weights(self, rng) -> None:
        """Uniform +-1/sqrt(fan-in); forget-gate biases start at +1."""
        for name, shape in self.shapes:
            v = self.views[name]
            if name.endswith(".b_f"):
                v[...] = 1.0
            elif v.ndim == 2:
                bound = 1.0 / np.sqrt(shape[1])
                v[...] = rng.uniform(-bound, bound, size=shape)
            else:
                v[...] = 0.0

    def clone(self) -> "QNetwork":
        other = QNetwork(self.spec, seed=None)
        other.flat[:] = self.flat
        return other

    def copy_from(self, other: "QNetwork") -> None:
        self.flat[:] = other.flat

    def zero_grad_flat(self) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        flat = np.zeros(self.n_params)
        views = {}
        off = 0
        for name, shape in self.shapes:
            size = int(np.prod(shape))
            views[name] = flat[off:off + size].reshape(shape)
            off += size
        return flat, views

    # -- forward -----------------------------------------------------------

    def forward(self, x: np.ndarray, need_cache: bool = False):
        """Q-values for a batch of sequences x of shape (B, T, input_dim)."""
        B, T, _ = x.shape
        H = self.spec.hidden_size
        inp = x
        cache = {"x": x, "layers": []} if need_cache else None
        for layer in range(self.spec.lstm_layers):
            p = self.views
            Wf, bf = p[f"l{layer}.W_f"], p[f"l{layer}.b_f"]
            Wi, bi = p[f"l{layer}.W_i"], p[f"l{layer}.b_i"]
            Wc, bc = p[f"l{layer}.W_C"], p[f"l{layer}.b_C"]
            Wo, bo = p[f"l{layer}.W_o"], p[f"l{layer}.b_o"]
            h = np.zeros((B, H))
            C = np.zeros((B, H))
            hs = np.empty((B, T, H))
            if need_cache:
                rec = {"z": [], "f": [], "i": [], "Ct": [], "o": [],
                       "C": [], "C_prev": [], "tC": []}
            for t in range(T):
                z = np.concatenate([h, inp[:, t]], axis=1)
                f = sigmoid(z @ Wf.T + bf)
                i = sigmoid(z @ Wi.T + bi)
                Ct = np.tanh(z @ Wc.T + bc)
                o = sigmoid(z @ Wo.T + bo)
                C_prev = C
                C = f * C_prev + i * Ct
                tC = np.tanh(C)
                h = o * tC
                hs[:, t] = h
                if need_cache:
                    rec["z"].append(z)
                    rec["f"].append(f)
                    rec["i"].append(i)
                    rec["Ct"].append(Ct)
                    rec["o"].append(o)
                    rec["C"].append(C)
                    rec["C_prev"].append(C_prev)
                    rec["tC"].append(tC)
            if need_cache:
                cache["layers"].append(rec)
            inp = hs
        q = inp[:, -1] @ self.views["head.W"].T + self.views["head.b"]
        if need_cache:
            cache["top_h"] = inp[:, -1]
            cache["top_hs"] = inp
            return q, cache
        return q

    # -- backward ----------------------------------------------------------

    def backward(self, cache, dq: np.ndarray) -> np.ndarray:
        """Gradient of a scalar loss with dL/dQ = dq, as a flat vector."""
        B, T, _ = cache["x"].shape
        H = self.spec.hidden_size
        gflat, g = self.zero_grad_flat()
        g["head.W"] += dq.T @ cache["top_h"]
        g["head.b"] += dq.sum(axis=0)
        # gradient wrt the top layer's hidden sequence
        dh_seq = np.zeros((B, T, H))
        dh_seq[:, -1] = dq @ self.views["head.W"]
        for layer in range(self.spec.lstm_layers - 1, -1, -1):
            rec = cache["layers"][layer]
            p = self.views
            Wf, Wi = p[f"l{layer}.W_f"], p[f"l{layer}.W_i"]
            Wc, Wo = p[f"l{layer}.W_C"], p[f"l{layer}.W_o"]
            d_in = Wf.shape[1] - H
            dx_seq = np.zeros((B, T, d_in))
            dh_next = np.zeros((B, H))   # from t+1 within this layer
            dC_next = np.zeros((B, H))
            for t in range(T - 1, -1, -1):
                dh = dh_seq[:, t] + dh_next
                o = rec["o"][t]
                tC = rec["tC"][t]
                do = dh * tC
                dC = dC_next + dh * o * (1.0 - tC * tC)
                f, i, Ct = rec["f"][t], rec["i"][t], rec["Ct"][t]
                C_prev = rec["C_prev"][t]
                df = dC * C_prev
                di = dC * Ct
                dCt = dC * i
                dC_next = dC * f
                dzf = df * f * (1.0 - f)
                dzi = di * i * (1.0 - i)
                dzc = dCt * (1.0 - Ct * Ct)
                dzo = do * o * (1.0 - o)
                z = rec["z"][t]
                g[f"l{layer}.W_f"] += dzf.T @ z
                g[f"l{layer}.W_i"] += dzi.T @ z
                g[f"l{layer}.W_C"] += dzc.T @ z
                g[f"l{layer}.W_o"] += dzo.T @ z
                g[f"l{layer}.b_f"] += dzf.sum(axis=0)
                g[f"l{layer}.b_i"] += dzi.sum(axis=0)
                g[f"l{layer}.b_C"] += dzc.sum(axis=0)
                g[f"l{layer}.b_o"] += dzo.sum(axis=0)
                dz = dzf @ Wf + dzi @ Wi + dzc @ Wc + dzo @ Wo
                dh_next = dz[:, :H]
                dx_seq[:, t] = dz[:, H:]
            dh_seq = dx_seq  # feeds the layer below
        return gflat

    # -- checkpoint io -------------------------------------------------------

    def save(self, path, adam_state=None) -> None:
        """VSWQ1 checkpoint: shape manifest, parameters, optional Adam
        moments and step counter for exact resume."""
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(self.shapes)))
            for _, shape in self.shapes:
                rows = shape[0]
                cols = shape[1] if len(shape) > 1 else 1
                fh.write(struct.pack("<II", rows, cols))
            fh.write(self.flat.astype("<f8").tobytes())
            if adam_state is None:
                fh.write(struct.pack("<I", 0))
            else:
                fh.write(struct.pack("<I", 1))
                fh.write(struct.pack("<Q", adam_state.step))
                fh.write(adam_state.m.astype("<f8").tobytes())
                fh.write(adam_state.v.astype("<f8").tobytes())

    @classmethod
    def load(cls, path, spec: NetSpec):
        net = cls(spec, seed=None)
        with open(path, "rb") as fh:
            magic = fh.read(5)
            if magic != MAGIC:
                raise ValueError(f"not a VSWQ1 checkpoint: magic {magic!r}")
            (count,) = struct.unpack("<I", fh.read(4))
            manifest = [struct.unpack("<II", fh.read(8)) for _ in range(count)]
            expected = [(s[0], s[1] if len(s) > 1 else 1) for _, s in net.shapes]
            if [tuple(m) for m in manifest] != expected:
                raise ValueError(
                    "checkpoint shape manifest does not match the network "
                    f"architecture ({manifest[:4]}... vs {expected[:4]}...)"
                )
            buf = fh.read(8 * net.n_params)
            if len(buf) != 8 * net.n_params:
                raise ValueError("truncated checkpoint")
            net.flat[:] = np.frombuffer(buf, dtype="<f8")
            (has_adam,) = struct.unpack("<I", fh.read(4))
            adam = None
            if has_adam:
                (step,) = struct.unpack("<Q", fh.read(8))
                m = np.frombuffer(fh.read(8 * net.n_params), dtype="<f8").copy()
                v = np.frombuffer(fh.read(8 * net.n_params), dtype="<f8").copy()
                adam = AdamState(m=m, v=v, step=step)
        return net, adam


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def for_network(cls, net: QNetwork) -> "AdamState":
        return cls(m=np.zeros(net.n_params), v=np.zeros(net.n_params), step=0)


def adam_step(net: QNetwork, grad: np.ndarray, state: AdamState,
              lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """One bias-corrected Adam update, in place on the flat parameters."""
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient")
    state.step += 1
    state.m *= beta1
    state.m += (1.0 - beta1) * grad
    state.v *= beta2
    state.v += (1.0 - beta2) * grad * grad
    mhat = state.m / (1.0 - beta1 ** state.step)
    vhat = state.v / (1.0 - beta2 ** state.step)
    net.flat -= lr * mhat / (np.sqrt(vhat) + eps)
