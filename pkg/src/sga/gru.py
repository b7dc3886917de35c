"""Single GRU cell used by the relation-path encoder.

Gate convention: update gate z and reset gate r are sigmoid units, the
candidate state applies r to the recurrent term, and the new state blends

    h_new = (1 - z) * h_prev + z * tanh(W_h x + U_h (r * h_prev) + b_h)

so all-zero weights leave a zero state at zero (the fixed point the
relation encoder's reduction tests rely on).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Parameter, Tensor, add, glorot_uniform, lift, matmul, mul, sigmoid, tanh
from .errors import ShapeError


@dataclass
class GruCellParams:
    """Gate weights for one GRU cell (input x, recurrent u, bias b)."""

    input_size: int
    hidden_size: int
    w_z: Parameter
    u_z: Parameter
    b_z: Parameter
    w_r: Parameter
    u_r: Parameter
    b_r: Parameter
    w_h: Parameter
    u_h: Parameter
    b_h: Parameter

    @classmethod
    def create(cls, prefix: str, input_size: int, hidden_size: int,
               rng: np.random.Generator) -> "GruCellParams":
        if input_size <= 0 or hidden_size <= 0:
            raise ValueError("GRU sizes must be positive")

        def mat(name, rows, cols):
            return Parameter(f"{prefix}.{name}", glorot_uniform(rng, rows, cols))

        def vec(name):
            return Parameter(f"{prefix}.{name}", np.zeros(hidden_size))

        return cls(
            input_size=input_size,
            hidden_size=hidden_size,
            w_z=mat("w_z", hidden_size, input_size),
            u_z=mat("u_z", hidden_size, hidden_size),
            b_z=vec("b_z"),
            w_r=mat("w_r", hidden_size, input_size),
            u_r=mat("u_r", hidden_size, hidden_size),
            b_r=vec("b_r"),
            w_h=mat("w_h", hidden_size, input_size),
            u_h=mat("u_h", hidden_size, hidden_size),
            b_h=vec("b_h"),
        )

    @classmethod
    def zeros(cls, prefix: str, input_size: int, hidden_size: int) -> "GruCellParams":
        rng = np.random.default_rng(0)
        params = cls.create(prefix, input_size, hidden_size, rng)
        for p in params.parameters():
            p.assign(np.zeros_like(p.data))
        return params

    def parameters(self) -> list[Parameter]:
        return [self.w_z, self.u_z, self.b_z,
                self.w_r, self.u_r, self.b_r,
                self.w_h, self.u_h, self.b_h]


def gru_cell_forward(params: GruCellParams, h_prev, x) -> Tensor:
    """One GRU step; differentiable through all nine weight tensors."""
    h_prev, x = lift(h_prev), lift(x)
    if x.shape != (params.input_size,):
        raise ShapeError(
            f"GRU input has shape {x.shape}, expected ({params.input_size},)"
        )
    if h_prev.shape != (params.hidden_size,):
        raise ShapeError(
            f"GRU state has shape {h_prev.shape}, expected ({params.hidden_size},)"
        )
    z = sigmoid(add(add(matmul(params.w_z, x), matmul(params.u_z, h_prev)), params.b_z))
    r = sigmoid(add(add(matmul(params.w_r, x), matmul(params.u_r, h_prev)), params.b_r))
    candidate = tanh(
        add(add(matmul(params.w_h, x), matmul(params.u_h, mul(r, h_prev))), params.b_h)
    )
    one_minus_z = 1.0 - z
    return add(mul(one_minus_z, h_prev), mul(z, candidate))
