"""Independent reference computations shared by the test modules."""

import math

import numpy as np
from scipy.optimize import minimize


def brute_force_min(V, mib, box=1.5, starts=200, seed=0):
    """Multistart L-BFGS-B over a box in x-space, with gradients through the orbit map."""
    grads = V.gradient()
    rng = np.random.default_rng(seed)

    def f(x):
        p = mib.orbit_map(x[None, :])
        J = mib.jacobian(x[None, :])[0]
        g = np.array([gi.evaluate_many(p)[0] for gi in grads])
        return float(V.evaluate_many(p)[0]), g @ J

    best = math.inf
    for x0 in rng.uniform(-box, box, (starts, mib.n)):
        res = minimize(f, x0, jac=True, method="L-BFGS-B", bounds=[(-box, box)] * mib.n,
                       options={"ftol": 1e-15, "gtol": 1e-12})
        best = min(best, float(res.fun))
    return best


def table_label(p, tol=1e-7):
    """Hand-written classifier from the closed-form stratum relations of the example."""
    p1, p2, p3 = (float(v) for v in p)
    if p3 <= tol:
        return "s0"
    a, b = p1 / p3**3, p2 / p3**2
    if abs(a) <= tol and abs(b) <= tol:
        return "s1"
    on_sphere = abs(b - 1) <= tol
    disc = a * a - 4 * b**3
    if on_sphere and abs(disc) <= tol:
        return "s1+" if a > 0 else "s1-"
    if on_sphere:
        return "s2"
    if abs(disc) <= tol:
        return "s2+" if a > 0 else "s2-"
    return "sp"


# plane rotations: the smallest configuration, with strata {origin, principal}
SO2_CONFIG = {
    "name": "rotations of the plane",
    "dimension": 2,
    "generators": {},
    "continuous_family": {"blocks": [[0, 1, 1]]},
    "mib": {"polynomials": ["x1^2 + x2^2"], "degrees": [2]},
    "potential": {"terms": [{"monomial": "p1", "coeff": "a"}, {"monomial": "p1^2", "coeff": "1"}],
                  "parameters": {"a": "-1"}},
    "sweep": {"parameter": "a", "start": -1, "stop": 1, "num": 5},
}
