import math

import numpy as np
import pytest

import finlap as fl


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_point(metric, rng):
    if metric.chart == fl.SPHERE:
        return fl.sphere_point(rng.uniform(0.15, math.pi - 0.15),
                               rng.uniform(0.0, 2.0 * math.pi))
    return fl.ChartPoint(metric.chart, rng.uniform(0, 1), rng.uniform(0, 1))


def random_vector(rng, rmin=0.2, rmax=3.0):
    ang = rng.uniform(0, 2 * math.pi)
    return rng.uniform(rmin, rmax) * np.array([math.cos(ang), math.sin(ang)])


def quartic_norm(x, vs):
    """Smooth strongly convex non-Riemannian norm for the custom-metric kind."""
    vs = np.asarray(vs, dtype=float)
    r2 = vs[..., 0] ** 2 + vs[..., 1] ** 2
    return (r2**2 + 0.5 * vs[..., 0] ** 4) ** 0.25


def builtin_metrics():
    """One representative of each built-in kind, keyed for test ids."""
    return {
        "riemannian-id": fl.riemannian(np.eye(2), chart=fl.TORUS),
        "riemannian-var": fl.riemannian(
            lambda p: np.array([
                [1.0 + 0.3 * math.sin(2 * math.pi * p.v), 0.1 * math.cos(2 * math.pi * p.u)],
                [0.1 * math.cos(2 * math.pi * p.u), 1.2 + 0.2 * math.cos(2 * math.pi * p.u)],
            ]),
            chart=fl.TORUS,
        ),
        "randers-06": fl.make_randers(np.eye(2), np.array([0.6, 0.0]), chart=fl.TORUS),
        "randers-var": fl.make_randers(
            np.eye(2),
            lambda p: np.array([0.3 * math.sin(2 * math.pi * p.v), 0.0]),
            chart=fl.TORUS,
        ),
        "kz-torus-06": fl.kz_torus(0.6),
        "kz-sphere-03": fl.kz_sphere(0.3),
        "custom-quartic": fl.custom(quartic_norm, chart=fl.TORUS),
    }
