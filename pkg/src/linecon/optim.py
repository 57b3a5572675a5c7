"""AdamW with decoupled weight decay.

The decay term is applied directly to the parameters, never folded into
the gradient, so its contribution is independent of gradient scale:

    m <- b1*m + (1-b1)*g          v <- b2*v + (1-b2)*g^2
    m_hat = m / (1 - b1^t)        v_hat = v / (1 - b2^t)
    theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)

The step is functional: inputs are never mutated, identical inputs give
bitwise-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NonFiniteGradientError(ValueError):
    """A gradient tensor contained NaN or infinity; the step was aborted."""


@dataclass
class AdamWState:
    lr: float = 1e-3
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def init_adamw(params: dict[str, np.ndarray], lr: float = 1e-3,
               weight_decay: float = 1e-4) -> AdamWState:
    """Fresh zero-moment state shaped like the given parameter tensors."""
    return AdamWState(
        lr=lr,
        weight_decay=weight_decay,
        m={k: np.zeros_like(np.asarray(t, dtype=np.float64)) for k, t in params.items()},
        v={k: np.zeros_like(np.asarray(t, dtype=np.float64)) for k, t in params.items()},
    )


def adamw_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamWState,
) -> tuple[dict[str, np.ndarray], AdamWState]:
    """One AdamW update over every tensor.  Returns (new params, new state)."""
    if set(params) != set(grads):
        raise ValueError(f"parameter/gradient name mismatch: "
                         f"{sorted(params)} vs {sorted(grads)}")
    for name, g in grads.items():
        if np.asarray(g).shape != np.asarray(params[name]).shape:
            raise ValueError(f"{name}: gradient shape {np.asarray(g).shape} != "
                             f"parameter shape {np.asarray(params[name]).shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(f"non-finite entries in gradient {name!r}; "
                                         "step aborted")

    t = state.step_count + 1
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    new_params: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for name in params:
        theta = np.asarray(params[name], dtype=np.float64)
        g = np.asarray(grads[name], dtype=np.float64)
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        update = m_hat / (np.sqrt(v_hat) + state.eps) + state.weight_decay * theta
        new_params[name] = theta - state.lr * update
        new_m[name] = m
        new_v[name] = v
    new_state = AdamWState(lr=state.lr, weight_decay=state.weight_decay,
                           beta1=state.beta1, beta2=state.beta2, eps=state.eps,
                           step_count=t, m=new_m, v=new_v)
    return new_params, new_state
