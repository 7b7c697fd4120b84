"""Global-norm gradient clipping and RAdam wrapped in Lookahead."""

from __future__ import annotations

import math

import numpy as np

from ..errors import StateShapeMismatch


def global_norm(grads):
    return math.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values()))


def clip_by_global_norm(grads, max_norm):
    """
    Rescale all gradients together so their joint L2 norm is at most `max_norm`.

    Returns the clipped gradients and the norm before clipping.
    """
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0:
        return dict(grads), norm
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm


class RAdamLookahead:
    """
    Rectified Adam inner optimizer with Lookahead slow weights.

    Parameters
    ----------
    params : dict of numpy arrays
        Initial (fast) weights; also the initial slow weights.
    lr : float
    clip_norm : float or None
        Global gradient norm cap applied before every update.
    beta1, beta2, eps : float
        Adam moment decay rates and denominator guard.
    k : int
        Inner steps between slow-weight synchronisations.
    alpha : float
        Slow-weight interpolation factor.

    Notes
    -----
    While the variance rectification term ``rho_t`` is at most 4 the update
    is plain bias-corrected momentum ``lr * m_hat``; afterwards it is
    ``lr * r_t * m_hat / (sqrt(v_hat) + eps)``. Every `k` steps the slow
    weights move ``alpha`` of the way to the fast weights and the fast
    weights are reset to them.

    """

    def __init__(self, params, lr=0.0015, clip_norm=0.5, beta1=0.9, beta2=0.999,
                 eps=1e-8, k=5, alpha=0.5):
        self.lr = lr
        self.clip_norm = clip_norm
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.k, self.alpha = k, alpha
        self.t = 0
        self.m = {n: np.zeros(p.shape) for n, p in params.items()}
        self.v = {n: np.zeros(p.shape) for n, p in params.items()}
        self.slow = {n: p.astype(np.float64) for n, p in params.items()}
        self.rho_inf = 2.0 / (1.0 - beta2) - 1.0

    def rho(self, t):
        b2t = self.beta2 ** t
        return self.rho_inf - 2.0 * t * b2t / (1.0 - b2t)

    def step(self, params, grads):
        """Update `params` in place from `grads`; returns `params`."""
        if set(grads) != set(self.m) or any(grads[n].shape != self.m[n].shape for n in grads):
            raise StateShapeMismatch('gradients do not match the optimizer state')
        if self.clip_norm is not None:
            grads, _ = clip_by_global_norm(grads, self.clip_norm)
        self.t += 1
        t = self.t
        b1, b2 = self.beta1, self.beta2
        rho_t = self.rho(t)
        if rho_t > 4.0:
            rect = math.sqrt((rho_t - 4) * (rho_t - 2) * self.rho_inf
                             / ((self.rho_inf - 4) * (self.rho_inf - 2) * rho_t))
        for n, g in grads.items():
            g = g.astype(np.float64)
            m, v = self.m[n], self.v[n]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1 ** t)
            if rho_t > 4.0:
                v_hat = np.sqrt(v / (1 - b2 ** t))
                update = self.lr * rect * m_hat / (v_hat + self.eps)
            else:
                update = self.lr * m_hat
            params[n][...] = params[n] - update

        if t % self.k == 0:
            for n, p in params.items():
                slow = self.slow[n]
                slow += self.alpha * (p - slow)
                p[...] = slow
        return params


def optimizer_step(state, weights, gradients, cfg=None):
    """
    Functional wrapper: create the optimizer on first use, then step it.

    Returns
    -------
    state : RAdamLookahead
    weights : TcnWeights
        Same object, updated in place.

    """
    if state is None:
        kw = {}
        if cfg is not None:
            kw = dict(lr=cfg.learning_rate, clip_norm=cfg.clip_norm,
                      k=cfg.lookahead_k, alpha=cfg.lookahead_alpha)
        state = RAdamLookahead(weights.tensors, **kw)
    state.step(weights.tensors, gradients)
    return state, weights
