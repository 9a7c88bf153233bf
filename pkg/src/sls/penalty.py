"""Scalar penalties and the exact one-dimensional penalized-quadratic minimizer.

The compiled helpers (leading underscore) are shared with the
coordinate-descent kernel; kinds are encoded as integers there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ValidationError

MCP, SCAD, L1 = 0, 1, 2
KINDS = {"mcp": MCP, "scad": SCAD, "l1": L1}


@dataclass(frozen=True)
class PenaltyConfig:
    kind: str = "mcp"
    lambda1: float = 0.0
    gamma: float = 3.0

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in KINDS:
            raise ValidationError(f"unknown penalty {self.kind!r}; choose from {sorted(KINDS)}")
        object.__setattr__(self, "kind", kind)
        if not self.lambda1 >= 0:
            raise ValidationError("lambda1 must be nonnegative")
        if kind == "mcp" and not self.gamma > 1:
            raise ValidationError("MCP needs gamma > 1")
        if kind == "scad" and not self.gamma > 2:
            raise ValidationError("SCAD needs gamma > 2")

    @property
    def code(self) -> int:
        return KINDS[self.kind]


@njit(cache=True, nogil=True)
def _penalty_value(t, lam, gamma, kind):
    a = abs(t)
    if lam == 0.0:
        return 0.0
    if kind == L1:
        return lam * a
    if kind == MCP:
        if a <= gamma * lam:
            return lam * a - a * a / (2.0 * gamma)
        return 0.5 * gamma * lam * lam
    # SCAD
    if a <= lam:
        return lam * a
    if a <= gamma * lam:
        return (2.0 * gamma * lam * a - a * a - lam * lam) / (2.0 * (gamma - 1.0))
    return 0.5 * lam * lam * (gamma + 1.0)


@njit(cache=True, nogil=True)
def _penalty_derivative(t, lam, gamma, kind):
    # at t == 0 report the subgradient bound lam
    a = abs(t)
    sgn = 1.0 if t >= 0.0 else -1.0
    if kind == L1:
        return lam * sgn
    if kind == MCP:
        if a >= gamma * lam:
            return 0.0
        return (lam - a / gamma) * sgn
    if a <= lam:
        return lam * sgn
    if a >= gamma * lam:
        return 0.0
    return (gamma * lam - a) / (gamma - 1.0) * sgn


@njit(cache=True, nogil=True)
def _soft(z, lam):
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


@njit(cache=True, nogil=True)
def _uni_obj(b, z, v, lam, gamma, kind):
    return 0.5 * v * b * b - z * b + _penalty_value(b, lam, gamma, kind)


@njit(cache=True, nogil=True)
def _best_candidate(z, v, lam, gamma, kind):
    # Piecewise-quadratic objective: the global minimum sits at a knot or at
    # a stationary point interior to one piece. Scan all of them.
    s = 1.0 if z >= 0.0 else -1.0
    az = abs(z)
    best_b = 0.0
    best_f = 0.0
    cands = np.empty(6)
    m = 0
    cands[m] = az / v
    m += 1
    if kind == MCP:
        cands[m] = gamma * lam
        m += 1
        c = v - 1.0 / gamma
        if c > 0.0:
            cands[m] = min(max((az - lam) / c, 0.0), gamma * lam)
            m += 1
    elif kind == SCAD:
        cands[m] = lam
        m += 1
        cands[m] = gamma * lam
        m += 1
        cands[m] = min(max((az - lam) / v, 0.0), lam)
        m += 1
        c = v - 1.0 / (gamma - 1.0)
        if c > 0.0:
            t = (az - gamma * lam / (gamma - 1.0)) / c
            cands[m] = min(max(t, lam), gamma * lam)
            m += 1
    else:
        cands[m] = max(az - lam, 0.0) / v
        m += 1
    for i in range(m):
        b = cands[i]
        f = _uni_obj(b, az, v, lam, gamma, kind)
        if f < best_f - 1e-15 * (1.0 + abs(best_f)):
            best_f = f
            best_b = b
    return s * best_b


@njit(cache=True, nogil=True)
def _univariate_minimize(z, v, lam, gamma, kind):
    """argmin_b (v/2) b^2 - z b + rho(|b|)."""
    if lam == 0.0:
        return z / v
    az = abs(z)
    if kind == L1:
        return _soft(z, lam) / v
    if kind == MCP:
        c = v - 1.0 / gamma
        if c > 0.0:
            if az <= v * gamma * lam:
                return _soft(z, lam) / c
            return z / v
        return _best_candidate(z, v, lam, gamma, kind)
    # SCAD
    c = v - 1.0 / (gamma - 1.0)
    if c > 0.0:
        if az <= lam * (1.0 + v):
            return _soft(z, lam) / v
        if az <= v * gamma * lam:
            return _soft(z, gamma * lam / (gamma - 1.0)) / c
        return z / v
    return _best_candidate(z, v, lam, gamma, kind)


def penalty_value(t, cfg: PenaltyConfig):
    """Penalty ``rho(|t|)``; works elementwise on arrays."""
    f = np.vectorize(lambda x: _penalty_value(float(x), cfg.lambda1, cfg.gamma, cfg.code),
                     otypes=[float])
    out = f(t)
    return float(out) if np.ndim(out) == 0 else out


def penalty_derivative(t, cfg: PenaltyConfig):
    """Signed derivative; at ``t == 0`` returns ``lambda1`` (the subgradient bound)."""
    f = np.vectorize(lambda x: _penalty_derivative(float(x), cfg.lambda1, cfg.gamma, cfg.code),
                     otypes=[float])
    out = f(t)
    return float(out) if np.ndim(out) == 0 else out


def univariate_minimize(z: float, v: float, cfg: PenaltyConfig) -> float:
    if not v > 0:
        raise ValidationError("curvature v must be positive")
    return float(_univariate_minimize(float(z), float(v), cfg.lambda1, cfg.gamma, cfg.code))
