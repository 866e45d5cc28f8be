import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gl2modp.induction import Region, TreeModel
from gl2modp.weights import SerreWeight

settings.register_profile(
    "repo",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repo")


@functools.lru_cache(maxsize=None)
def tree_model(p, r_vec, e=1, radius=2, w=0):
    """Shared models; building normal-form caches is the slow part of most tests."""
    return TreeModel(SerreWeight(p, tuple(r_vec), w), e=e, radius=radius)


def random_element(model, rng, radius, density=0.3, sides=(0, 1)):
    vals = {}
    for v in Region.sphere_union(model.q, radius).vertices():
        if v.side in sides and rng.random() < density:
            vals[v] = rng.integers(0, model.q, model.dim)
    return model.element(vals)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def _rmul(a, b, h, m):
    """Product in (Z/m)[X]/(h), h monic, coefficients low to high."""
    f = len(h) - 1
    out = [0] * (2 * f - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    for k in range(len(out) - 1, f - 1, -1):
        c = out[k]
        for i in range(f + 1):
            out[k - f + i] -= c * h[i]
    return [x % m for x in out[:f]]


def carry_oracle(fld, a, b):
    """c with [a] + [b] = [a+b] + p[c] mod p^2, computed in (Z/p^2)[X]/(h).

    Any lift x of a satisfies x^q = [a] mod p^2, so
    c = (x^q + y^q - (x+y)^q) / p mod p.
    """
    p, q = fld.p, fld.q
    h = list(fld.params.modulus)
    m = p * p

    def power(x, k):
        out = [1] + [0] * (len(h) - 2)
        while k:
            if k & 1:
                out = _rmul(out, x, h, m)
            x = _rmul(x, x, h, m)
            k >>= 1
        return out

    x, y = list(fld.digits[a]), list(fld.digits[b])
    s = [(u + v) for u, v in zip(x, y)]
    z = [(u + v - w) % m for u, v, w in zip(power(x, q), power(y, q), power(s, q))]
    assert all(c % p == 0 for c in z)
    return fld.encode([c // p for c in z])


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
