"""Stochastic gradient descent with classical momentum.

Update rule per tensor: v <- momentum * v - lr * grad; w <- w + v.
All updates run in place and in parameter order, so a training step is a
deterministic function of the parameter and velocity state.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError


def sgd_step(value, grad, velocity, lr, momentum):
    """One in-place momentum update of a single tensor."""
    if grad is None:
        raise ShapeError("gradient is missing; run backward before stepping")
    if value.shape != grad.shape or value.shape != velocity.shape:
        raise ShapeError(
            f"mismatched shapes: value {value.shape}, grad {grad.shape}, velocity {velocity.shape}"
        )
    velocity *= velocity.dtype.type(momentum)
    velocity -= velocity.dtype.type(lr) * grad
    value += velocity


class SGD:
    def __init__(self, params, lr, momentum=0.0):
        self.params = list(params)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.velocities = {p.name: np.zeros_like(p.value) for p in self.params}

    def step(self):
        for p in self.params:
            sgd_step(p.value, p.grad, self.velocities[p.name], self.lr, self.momentum)

    def state_arrays(self):
        return [("opt." + p.name + ".v", self.velocities[p.name]) for p in self.params]

    def load_state(self, arrays: dict):
        for p in self.params:
            stored = arrays["opt." + p.name + ".v"]
            if stored.shape != self.velocities[p.name].shape:
                raise ShapeError(
                    f"velocity for {p.name}: stored {stored.shape} != {self.velocities[p.name].shape}"
                )
            self.velocities[p.name][:] = stored
