"""Named parameter store with a versioned flat-binary checkpoint format."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .tensor import Tensor

__all__ = ["ParamStore", "save_params", "load_params"]

_MAGIC = b"NNP1"
_VERSION = 1
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


class ParamStore:
    """Ordered map of parameter path -> Tensor, with paired gradients.

    Iteration order is insertion order, which makes optimizer state and
    serialization deterministic.
    """

    def __init__(self, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter {name!r}")
        t = Tensor(np.asarray(data, dtype=self.dtype).copy(), requires_grad=True)
        self._params[name] = t
        return t

    def linear_init(self, name: str, din: int, dout: int, rng: np.random.Generator,
                    bias: bool = True):
        """Uniform +-sqrt(1/din) weight and zero bias."""
        bound = math_sqrt_inv(din)
        w = self.add(f"{name}.w", rng.uniform(-bound, bound, size=(din, dout)))
        if not bias:
            return w, None
        b = self.add(f"{name}.b", np.zeros(dout))
        return w, b

    def layernorm_init(self, name: str, dim: int):
        g = self.add(f"{name}.g", np.ones(dim))
        b = self.add(f"{name}.b", np.zeros(dim))
        return g, b

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self):
        return list(self._params.keys())

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def n_values(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def state_dict(self) -> dict:
        return {k: t.data.copy() for k, t in self._params.items()}

    def load_state_dict(self, state: dict) -> None:
        missing = set(self._params) - set(state)
        extra = set(state) - set(self._params)
        if missing or extra:
            raise KeyError(f"state mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for k, t in self._params.items():
            arr = np.asarray(state[k], dtype=t.data.dtype)
            if arr.shape != t.data.shape:
                raise ValueError(f"shape mismatch for {k}: {arr.shape} != {t.data.shape}")
            t.data = arr.copy()

    def astype(self, dtype) -> "ParamStore":
        other = ParamStore(dtype=dtype)
        for k, t in self._params.items():
            other.add(k, t.data)
        return other


def math_sqrt_inv(n: int) -> float:
    return float(np.sqrt(1.0 / n))


def save_params(path, store: ParamStore, meta: dict | None = None) -> None:
    meta_bytes = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<II", _VERSION, len(meta_bytes)))
        f.write(meta_bytes)
        f.write(struct.pack("<Q", len(store)))
        for name, t in store.items():
            nb = name.encode("utf-8")
            arr = np.ascontiguousarray(t.data)
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            f.write(struct.pack("<BB", _DTYPE_CODES[arr.dtype], arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            f.write(arr.astype(arr.dtype.newbyteorder("<")).tobytes())


def load_params(path) -> tuple[dict, dict]:
    """Read a checkpoint; returns (state_dict, meta)."""
    path = Path(path)
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a parameter checkpoint")
        version, meta_len = struct.unpack("<II", f.read(8))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        meta = json.loads(f.read(meta_len).decode("utf-8"))
        (count,) = struct.unpack("<Q", f.read(8))
        state = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", f.read(2))
            name = f.read(name_len).decode("utf-8")
            code, ndim = struct.unpack("<BB", f.read(2))
            shape = struct.unpack(f"<{ndim}Q", f.read(8 * ndim)) if ndim else ()
            dtype = _CODE_DTYPES[code]
            n_bytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize if ndim else dtype.itemsize
            arr = np.frombuffer(f.read(n_bytes), dtype=dtype.newbyteorder("<")).astype(dtype)
            state[name] = arr.reshape(shape)
    return state, meta
