import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


def loop_stress(points, target):
    """Raw stress by an explicit double loop over ordered pairs."""
    n = len(points)
    total = 0.0
    for i in range(n):
        for j in range(n):
            dist = np.sqrt(sum((a - b) ** 2 for a, b in zip(points[i], points[j])))
            total += (dist - target[i][j]) ** 2
    return total


def loop_distances(points):
    n = len(points)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = np.sqrt(sum((a - b) ** 2 for a, b in zip(points[i], points[j])))
    return out


def brute_force_min_stress(delta, d=2, samples=100_000, polish=40, seed=0):
    """Global raw-stress minimum by random search followed by L-BFGS polish.

    Independent of the SMACOF solver: candidates are uniform in a box sized
    by the largest dissimilarity, the best `polish` are refined by
    scipy.optimize.minimize on the explicit objective.
    """
    from scipy.optimize import minimize

    delta = np.asarray(delta, dtype=float)
    n = delta.shape[0]
    rng = np.random.default_rng(seed)
    box = float(delta.max()) or 1.0
    cands = rng.uniform(-box, box, size=(samples, n, d))
    diff = cands[:, :, None, :] - cands[:, None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    vals = ((dist - delta) ** 2).sum(axis=(1, 2))
    order = np.argsort(vals)[:polish]

    def objective(flat):
        z = flat.reshape(n, d)
        dz = z[:, None, :] - z[None, :, :]
        dist = np.sqrt((dz ** 2).sum(-1) + 1e-300)
        resid = dist - delta
        np.fill_diagonal(resid, 0.0)
        grad_coef = np.where(dist > 1e-150, resid / dist, 0.0)
        grad = 4 * (grad_coef[:, :, None] * dz).sum(axis=1)
        return float((resid ** 2).sum()), grad.ravel()

    best = np.inf
    for idx in order:
        res = minimize(objective, cands[idx].ravel(), jac=True, method="L-BFGS-B",
                       options={"maxiter": 5000, "ftol": 1e-15, "gtol": 1e-12})
        best = min(best, res.fun)
    return best
