"""
Limit Hamiltonian H(x, p) = <b1_bar(x), p> - 1/2 <a1_bar(x) p, p>, its
sup form, and the reflected-control Hamiltonian at an endpoint of a box.
"""
import numpy as np


def hamiltonian(avg, x, p):
    """H at a point ((n,) arrays) or a batch ((n, B) arrays, result (B,))."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    drift = avg.drift(x)
    diffusion = avg.diffusion(x)
    if x.ndim <= 1:
        p = np.atleast_1d(p)
        return float(drift @ p - 0.5 * p @ diffusion @ p)
    return np.einsum('ib,ib->b', drift, p) - 0.5 * np.einsum('ib,ijb,jb->b', p, diffusion, p)


def hamiltonian_sup(avg, x, p, z_grid):
    """
    <b1_bar, p> - sup_z {-<p, sigma1_bar z> - |z|^2/2} with the sup taken over
    z_grid: a 1D array when n == 1, otherwise an (n, K) array of candidates.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    z = np.asarray(z_grid, dtype=float)
    if z.ndim == 1:
        z = z[None, :]
    sigma = np.atleast_2d(avg.sigma(x))
    candidates = -(p @ sigma @ z) - 0.5 * np.sum(z ** 2, axis=0)
    return float(avg.drift(x) @ p - np.max(candidates))


def reflected_hamiltonian(b, a, q):
    """
    inf_z {|z|^2/2 + min(b + sqrt(a) z, 0) q}: the Hamiltonian at an endpoint
    whose outward normal is +1, where outward velocity is removed. Arguments
    are expressed along the outward normal; arrays broadcast.
    """
    b, a, q = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (b, a, q)))
    safe_a = np.where(a > 0, a, 1.0)
    # controls with outward velocity are stopped at the wall and cost |z|^2/2 only
    stopped = np.where(b > 0, 0.0, np.where(a > 0, 0.5 * b * b / safe_a, np.inf))
    free = np.where(
        a > 0,
        np.where(b - a * q <= 0, b * q - 0.5 * a * q * q, 0.5 * b * b / safe_a),
        np.where(b <= 0, b * q, np.inf),
    )
    out = np.minimum(stopped, free)
    return float(out) if out.ndim == 0 else out


def boundary_hamiltonian(avg, x_b, normal, p):
    """Reflected-control Hamiltonian at a 1D box endpoint with outward normal +-1."""
    x_b = np.atleast_1d(np.asarray(x_b, dtype=float))
    sign = float(np.sign(np.asarray(normal, dtype=float).ravel()[0]))
    if sign == 0:
        raise ValueError("normal must be +1 or -1")
    b = sign * float(avg.drift(x_b)[0])
    a = float(avg.diffusion(x_b)[0, 0])
    return reflected_hamiltonian(b, a, sign * np.asarray(p, dtype=float))


def hopf_lax(x, t, s, h, y_grid):
    """min over y_grid of (x - y)^2 / (2 s^2 t) + h(y)."""
    y = np.asarray(y_grid, dtype=float).ravel()
    values = np.atleast_1d(h(y[None, :]))
    x = np.asarray(x, dtype=float)
    cost = (np.atleast_1d(x)[:, None] - y[None, :]) ** 2 / (2.0 * s * s * t) + values[None, :]
    out = cost.min(axis=1)
    return float(out[0]) if x.ndim == 0 else out
