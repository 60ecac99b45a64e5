"""Finite-difference gradient checking harness.

Compares reverse-mode gradients against central differences on a random
scalar projection of the output. 64-bit inputs only: at eps=1e-6 the FD
round-off floor sits near 1e-10, far below the 1e-5 pass tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import functional as F
from .tensor import Tensor, gather_rows

__all__ = ["GradCheckReport", "grad_check", "standard_op_reports"]

# Relative error denominator floor: gradients smaller than this are compared
# on an absolute scale.
_REL_FLOOR = 1e-3


@dataclass
class GradCheckReport:
    op_name: str
    errors: dict = field(default_factory=dict)  # input name -> max relative error
    tolerance: float = 1e-5

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def worst_input(self) -> str:
        return max(self.errors, key=self.errors.get) if self.errors else ""

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        detail = ", ".join(f"{k}={v:.3e}" for k, v in self.errors.items())
        return f"[{status}] {self.op_name}: max_rel_err={self.max_error:.3e} ({detail})"


def grad_check(fn, inputs: dict, eps: float = 1e-6, tolerance: float = 1e-5,
               seed: int = 0, op_name: str = "op") -> GradCheckReport:
    """Check reverse-mode gradients of `fn` against central differences.

    `fn` maps a dict of Tensors to a Tensor of any shape; the check is run on
    a fixed random linear functional of the output so one backward covers all
    output elements.
    """
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in inputs.items()}
    rng = np.random.default_rng(seed)

    tensors = {k: Tensor(v.copy(), requires_grad=True) for k, v in arrays.items()}
    out = fn(tensors)
    proj = rng.standard_normal(out.data.shape)

    def scalar_of(values: dict) -> float:
        ts = {k: Tensor(v) for k, v in values.items()}
        return float(np.sum(fn(ts).data * proj))

    loss = (out * Tensor(proj)).sum()
    loss.backward()

    report = GradCheckReport(op_name=op_name, tolerance=tolerance)
    for name, arr in arrays.items():
        analytic = tensors[name].grad
        if analytic is None:
            analytic = np.zeros_like(arr)
        numeric = np.zeros_like(arr)
        flat = arr.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = scalar_of(arrays)
            flat[i] = orig - eps
            f_minus = scalar_of(arrays)
            flat[i] = orig
            num_flat[i] = (f_plus - f_minus) / (2.0 * eps)
        denom = np.maximum(_REL_FLOOR, np.maximum(np.abs(analytic), np.abs(numeric)))
        report.errors[name] = float(np.max(np.abs(analytic - numeric) / denom))
    return report


def _suite(seed: int = 0):
    """The built-in op suite: (name, fn, inputs, tolerance)."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.05, 0.95, size=(5, 3))

    def trilinear_fn(t):
        return F.trilinear(t["grid"], t["u"])

    def attention_fn(t):
        return F.attention(t["q"], t["k"], t["v"])

    def linear_fn(t):
        return F.linear(t["x"], t["w"], t["b"])

    def layernorm_fn(t):
        return F.layernorm(t["x"], t["g"], t["b"])

    def softmax_fn(t):
        return F.softmax(t["x"])

    def mlp_fn(t):
        return F.mlp(t["x"], [(t["w1"], t["b1"]), (t["w2"], t["b2"])])

    def sigmoid_fn(t):
        return t["x"].sigmoid()

    def gather_fn(t):
        return gather_rows(t["x"], np.array([0, 2, 2, 1]))

    return [
        ("linear", linear_fn,
         {"x": rng.standard_normal((3, 4)), "w": rng.standard_normal((4, 2)),
          "b": rng.standard_normal(2)}, 1e-6),
        ("softmax", softmax_fn, {"x": rng.standard_normal((4, 5))}, 1e-6),
        ("layernorm", layernorm_fn,
         {"x": rng.standard_normal((4, 6)), "g": rng.uniform(0.5, 1.5, 6),
          "b": rng.standard_normal(6)}, 1e-5),
        ("attention", attention_fn,
         {"q": rng.standard_normal((3, 4)), "k": rng.standard_normal((5, 4)),
          "v": rng.standard_normal((5, 2))}, 1e-5),
        ("mlp", mlp_fn,
         {"x": rng.standard_normal((3, 4)), "w1": rng.standard_normal((4, 6)),
          "b1": rng.standard_normal(6), "w2": rng.standard_normal((6, 2)),
          "b2": rng.standard_normal(2)}, 1e-5),
        ("trilinear", trilinear_fn,
         {"grid": rng.standard_normal((5, 2, 2, 2, 3)), "u": u}, 1e-5),
        ("sigmoid", sigmoid_fn, {"x": rng.standard_normal((4, 3))}, 1e-6),
        ("gather_rows", gather_fn, {"x": rng.standard_normal((3, 4))}, 1e-6),
    ]


def standard_op_reports(seed: int = 0) -> list[GradCheckReport]:
    """Run the finite-difference check over every exported op."""
    return [
        grad_check(fn, inputs, tolerance=tol, seed=seed + 1, op_name=name)
        for name, fn, inputs, tol in _suite(seed)
    ]
