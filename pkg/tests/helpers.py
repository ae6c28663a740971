"""Shared finite-difference utilities for the test suite."""
import numpy as np

FD_EPS = 1e-5
# below this magnitude both derivatives count as zero
FD_FLOOR = 1e-7


def rel_error(analytic, numeric, floor=FD_FLOOR):
    analytic, numeric = float(analytic), float(numeric)
    denom = max(abs(analytic), abs(numeric))
    if denom < floor:
        return 0.0
    return abs(analytic - numeric) / denom


def fd_check(loss_fn, params, grads, rng, n_coords=100, eps=FD_EPS):
    """Worst relative error over ``n_coords`` random coordinates of ``params``.

    ``loss_fn()`` re-evaluates the scalar loss from the current parameter
    arrays, which are perturbed in place and restored.
    """
    sizes = np.array([p.size for p in params])
    worst = 0.0
    for _ in range(n_coords):
        k = int(rng.choice(len(params), p=sizes / sizes.sum()))
        idx = np.unravel_index(int(rng.integers(params[k].size)), params[k].shape)
        old = params[k][idx]
        params[k][idx] = old + eps
        up = loss_fn()
        params[k][idx] = old - eps
        down = loss_fn()
        params[k][idx] = old
        worst = max(worst, rel_error(grads[k][idx], (up - down) / (2 * eps)))
    return worst


# (criterion id, passed, detail) rows collected by the acceptance suite and
# printed at the end of the pytest session
ACCEPTANCE = []


def report(criterion, passed, detail):
    passed = bool(passed)
    ACCEPTANCE.append((criterion, passed, detail))
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} ({detail})")
    return passed
