"""Scalar fields on a chart, with optional analytic derivatives.

A scalar field is any callable ``f(x: ChartPoint) -> float``.  Fields may
additionally provide ``gradient(x) -> (2,)`` and ``hessian(x) -> (2,2)``;
the helpers below fall back to central finite differences when they do
not.  Fields on the torus chart must be 1-periodic in both coordinates.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from .charts import ChartPoint

GRAD_STEP = 1e-5
HESS_STEP = 1e-4

_TRIG = {
    "one": (lambda t: 1.0, lambda t: 0.0, lambda t: 0.0),
    "sin": (math.sin, math.cos, lambda t: -math.sin(t)),
    "cos": (math.cos, lambda t: -math.sin(t), lambda t: -math.cos(t)),
}


def field_value(f, x: ChartPoint) -> float:
    return float(f(x))


def field_gradient(f, x: ChartPoint, h: float = GRAD_STEP) -> np.ndarray:
    """Gradient of f at x, analytic when the field provides one."""
    g = getattr(f, "gradient", None)
    if g is not None:
        return np.asarray(g(x), dtype=float)
    du = (f(x.shifted(h, 0.0)) - f(x.shifted(-h, 0.0))) / (2.0 * h)
    dv = (f(x.shifted(0.0, h)) - f(x.shifted(0.0, -h))) / (2.0 * h)
    return np.array([du, dv])


def field_hessian(f, x: ChartPoint, h: float = HESS_STEP) -> np.ndarray:
    """Hessian of f at x, analytic when the field provides one."""
    hess = getattr(f, "hessian", None)
    if hess is not None:
        return np.asarray(hess(x), dtype=float)
    f0 = f(x)
    fuu = (f(x.shifted(h, 0)) - 2.0 * f0 + f(x.shifted(-h, 0))) / h**2
    fvv = (f(x.shifted(0, h)) - 2.0 * f0 + f(x.shifted(0, -h))) / h**2
    fuv = (
        f(x.shifted(h, h)) - f(x.shifted(h, -h)) - f(x.shifted(-h, h)) + f(x.shifted(-h, -h))
    ) / (4.0 * h**2)
    return np.array([[fuu, fuv], [fuv, fvv]])


class CallableField:
    """Wrap explicit value/gradient/hessian closures into a field."""

    def __init__(self, value: Callable[[ChartPoint], float],
                 gradient: Optional[Callable] = None,
                 hessian: Optional[Callable] = None):
        self._value = value
        if gradient is not None:
            self.gradient = gradient
        if hessian is not None:
            self.hessian = hessian

    def __call__(self, x: ChartPoint) -> float:
        return float(self._value(x))


class ConstantField:
    def __init__(self, c: float):
        self.c = float(c)

    def __call__(self, x: ChartPoint) -> float:
        return self.c

    def gradient(self, x: ChartPoint) -> np.ndarray:
        return np.zeros(2)

    def hessian(self, x: ChartPoint) -> np.ndarray:
        return np.zeros((2, 2))


class SeparableTrigField:
    """a * trig_u(2*pi*p*u) * trig_v(2*pi*q*v) with analytic derivatives.

    ``trig_u``/``trig_v`` are one of "one", "sin", "cos".  Periodic on the
    torus chart for integer p, q.
    """

    def __init__(self, a: float, trig_u: str, p: float, trig_v: str, q: float):
        self.a = float(a)
        self.fu, self.dfu, self.ddfu = _TRIG[trig_u]
        self.fv, self.dfv, self.ddfv = _TRIG[trig_v]
        self.wu = 2.0 * math.pi * p
        self.wv = 2.0 * math.pi * q

    def __call__(self, x: ChartPoint) -> float:
        return self.a * self.fu(self.wu * x.u) * self.fv(self.wv * x.v)

    def gradient(self, x: ChartPoint) -> np.ndarray:
        tu, tv = self.wu * x.u, self.wv * x.v
        return self.a * np.array([
            self.wu * self.dfu(tu) * self.fv(tv),
            self.wv * self.fu(tu) * self.dfv(tv),
        ])

    def hessian(self, x: ChartPoint) -> np.ndarray:
        tu, tv = self.wu * x.u, self.wv * x.v
        huu = self.wu**2 * self.ddfu(tu) * self.fv(tv)
        hvv = self.wv**2 * self.fu(tu) * self.ddfv(tv)
        huv = self.wu * self.wv * self.dfu(tu) * self.dfv(tv)
        return self.a * np.array([[huu, huv], [huv, hvv]])


class SumField:
    def __init__(self, fields: Sequence):
        self.fields = list(fields)

    def __call__(self, x: ChartPoint) -> float:
        return sum(f(x) for f in self.fields)

    def gradient(self, x: ChartPoint) -> np.ndarray:
        return np.sum([field_gradient(f, x) for f in self.fields], axis=0)

    def hessian(self, x: ChartPoint) -> np.ndarray:
        return np.sum([field_hessian(f, x) for f in self.fields], axis=0)
