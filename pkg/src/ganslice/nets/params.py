"""Named parameter collections and multilayer perceptrons built on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .autodiff import Tensor


class ParamSet:
    """Ordered named tensors plus an update counter.

    Every tensor shares ``dtype``; models cast their inputs to it, so a
    float32 set trains in float32 end to end.
    """

    def __init__(self, tensors: dict[str, np.ndarray] | None = None, version: int = 0, dtype=np.float64):
        self._t: dict[str, Tensor] = {}
        self.version = int(version)
        self.dtype = np.dtype(dtype)
        if self.dtype.kind != "f":
            raise ValueError("parameter dtype must be floating point")
        for name, value in (tensors or {}).items():
            self.add(name, value)

    def add(self, name: str, value) -> Tensor:
        if name in self._t:
            raise KeyError(f"duplicate parameter {name!r}")
        arr = np.array(value, dtype=self.dtype, copy=True)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"parameter {name!r} has non-finite values")
        t = Tensor(arr, requires_grad=True, name=name)
        self._t[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._t[name]

    def __contains__(self, name: str) -> bool:
        return name in self._t

    def __iter__(self):
        return iter(self._t)

    def __len__(self) -> int:
        return len(self._t)

    def names(self) -> list[str]:
        return list(self._t)

    def tensors(self) -> list[Tensor]:
        return list(self._t.values())

    def items(self):
        return self._t.items()

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: t.data for k, t in self._t.items()}

    def grads(self) -> dict[str, np.ndarray]:
        return {k: (np.zeros_like(t.data) if t.grad is None else t.grad) for k, t in self._t.items()}

    def zero_grad(self) -> None:
        for t in self._t.values():
            t.grad = None

    def n_values(self) -> int:
        return sum(t.data.size for t in self._t.values())

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        """Overwrite values in place (names and shapes must match)."""
        if set(arrays) != set(self._t):
            raise KeyError("parameter names differ")
        for k, v in arrays.items():
            if v.shape != self._t[k].data.shape:
                raise ValueError(f"{k}: shape {v.shape} != {self._t[k].data.shape}")
            self._t[k].data[...] = v


def clone_params(src: ParamSet) -> ParamSet:
    """Deep copy; the clone keeps ``src``'s version number."""
    return ParamSet(src.arrays(), version=src.version, dtype=src.dtype)


def copy_into(dst: ParamSet, src: ParamSet) -> None:
    """Overwrite ``dst`` with ``src``'s values and version, reusing storage."""
    dst.load_arrays(src.arrays())
    dst.version = src.version


class Activation(str, Enum):
    LEAKY_RELU = "leaky_relu"
    TANH = "tanh"
    IDENTITY = "identity"


class Init(str, Enum):
    UNIFORM_FAN_IN = "uniform_fan_in"
    ORTHOGONAL = "orthogonal"


@dataclass(frozen=True)
class MlpSpec:
    layer_widths: tuple[int, ...]
    activation: Activation = Activation.LEAKY_RELU
    slope: float = 0.01
    init: Init = Init.UNIFORM_FAN_IN
    final_activation: bool = False
    prefix: str = field(default="")

    def __post_init__(self) -> None:
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        object.__setattr__(self, "activation", Activation(self.activation))
        object.__setattr__(self, "init", Init(self.init))
        if len(self.layer_widths) < 2:
            raise ValueError("an MLP needs at least an input and an output width")
        if min(self.layer_widths) < 1:
            raise ValueError("layer widths must be >= 1")

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    def weight(self, i: int) -> str:
        return f"{self.prefix}{i}.W"

    def bias(self, i: int) -> str:
        return f"{self.prefix}{i}.b"

    def init_into(self, params: ParamSet, rng: np.random.Generator) -> None:
        for i, (fan_in, fan_out) in enumerate(zip(self.layer_widths[:-1], self.layer_widths[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            if self.init is Init.ORTHOGONAL:
                a = rng.standard_normal((max(fan_in, fan_out), min(fan_in, fan_out)))
                q, r = np.linalg.qr(a)
                q = q * np.sign(np.diag(r))
                w = q if fan_in >= fan_out else q.T
                b = np.zeros(fan_out)
            else:
                w = rng.uniform(-bound, bound, (fan_in, fan_out))
                b = rng.uniform(-bound, bound, fan_out)
            params.add(self.weight(i), w)
            params.add(self.bias(i), b)

    def activate(self, z: Tensor) -> Tensor:
        if self.activation is Activation.LEAKY_RELU:
            return z.leaky_relu(self.slope)
        if self.activation is Activation.TANH:
            return z.tanh()
        return z

    def forward(self, params: ParamSet, x: Tensor) -> Tensor:
        """Apply the MLP to the last axis of ``x`` (any leading shape)."""
        lead = x.shape[:-1]
        h = x.reshape(-1, x.shape[-1]) if x.ndim != 2 else x
        fuse = self.activation is Activation.LEAKY_RELU and self.slope > 0
        for i in range(self.n_layers):
            w, b = params[self.weight(i)], params[self.bias(i)]
            if i < self.n_layers - 1 or self.final_activation:
                h = h.affine_leaky_relu(w, b, self.slope) if fuse else self.activate(h.affine(w, b))
            else:
                h = h.affine(w, b)
        return h.reshape(*lead, h.shape[-1]) if x.ndim != 2 else h
