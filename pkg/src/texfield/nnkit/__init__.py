"""Minimal differentiable-ops kit on numpy with tape-based reverse mode.

Forward ops build a graph of `Tensor` nodes; `Tensor.backward()` walks it in
reverse topological order. 64-bit is the testing dtype, 32-bit the training
dtype. Every exported op is covered by the finite-difference harness in
`gradcheck`.
"""

from .tensor import Tensor, concat, gather_rows, stack_rows
from .functional import (
    attention,
    layernorm,
    linear,
    mlp,
    relu,
    sigmoid,
    softmax,
    trilinear,
)
from .params import ParamStore, load_params, save_params
from .optim import Adam
from .gradcheck import GradCheckReport, grad_check, standard_op_reports

__all__ = [
    "Tensor",
    "concat",
    "gather_rows",
    "stack_rows",
    "linear",
    "softmax",
    "layernorm",
    "attention",
    "mlp",
    "trilinear",
    "relu",
    "sigmoid",
    "ParamStore",
    "save_params",
    "load_params",
    "Adam",
    "grad_check",
    "GradCheckReport",
    "standard_op_reports",
]
