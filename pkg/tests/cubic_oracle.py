"""Brute-force grid oracle for min <v,h> + h'Hh/2 + (M/6)||h||^3."""
import math

import numpy as np


def bracket_radius(v, H, M):
    """Any global minimizer satisfies M r^2/2 + lambda_min r - ||v|| <= 0."""
    lam1 = float(np.linalg.eigvalsh(H)[0])
    return (-lam1 + math.sqrt(lam1**2 + 2 * M * float(np.linalg.norm(v)))) / M


def grid_minimum(v, H, M, points=401, box=None):
    """Best objective over a points^n grid on [-box, box]^n in the eigenbasis of H.

    The rotation is orthogonal, so the box still contains the ball of radius
    ``box`` and with it every global minimizer when box >= bracket_radius.
    Returns (best value, grid spacing).
    """
    v = np.asarray(v, float)
    H = 0.5 * (np.asarray(H, float) + np.asarray(H, float).T)
    lam, Q = np.linalg.eigh(H)
    w = Q.T @ v
    n = v.size
    if box is None:
        box = 1.1 * bracket_radius(v, H, M) + 1e-3
    z = np.linspace(-box, box, points)
    lin = [w[i] * z + 0.5 * lam[i] * z**2 for i in range(n)]
    sq = z**2
    if n == 1:
        vals = lin[0] + M / 6 * np.abs(z) ** 3
        return float(vals.min()), z[1] - z[0]
    if n == 2:
        s = lin[0][:, None] + lin[1][None, :]
        r2 = sq[:, None] + sq[None, :]
        return float((s + M / 6 * r2**1.5).min()), z[1] - z[0]
    best = math.inf
    s12 = lin[1][:, None] + lin[2][None, :]
    r12 = sq[:, None] + sq[None, :]
    buf, root = np.empty_like(r12), np.empty_like(r12)
    for i in range(points):
        np.add(r12, sq[i], out=buf)
        np.sqrt(buf, out=root)
        buf *= root
        buf *= M / 6
        buf += s12
        best = min(best, lin[0][i] + float(buf.min()))
    return best, z[1] - z[0]


def grid_minimum_plain(v, H, M, lo, hi, points):
    """Grid search in the original coordinates on [lo, hi]^2."""
    z = np.linspace(lo, hi, points)
    X, Y = np.meshgrid(z, z, indexing="ij")
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    vals = P @ v + 0.5 * np.einsum("ij,jk,ik->i", P, H, P) + M / 6 * np.linalg.norm(P, axis=1) ** 3
    return float(vals.min()), z[1] - z[0]


def random_instances(count, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    Ms = (0.5, 2.0, 10.0)
    for i in range(count):
        n = 1 + i % 3
        G = rng.standard_normal((n, n))
        out.append((rng.standard_normal(n), 0.5 * (G + G.T), Ms[(i // 3) % 3]))
    return out


def hard_case_instances():
    """v orthogonal to the bottom eigenvector and too short to reach the threshold."""
    out = [(np.zeros(1), np.array([[-1.0]]), 3.0), (np.array([1.0, 0.0]), np.diag([1.0, -2.0]), 2.0)]
    rng = np.random.default_rng(11)
    for n, M in ((2, 0.5), (3, 2.0), (3, 10.0), (2, 10.0)):
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        lam = np.sort(np.concatenate([[-1.5], rng.uniform(0.5, 2.0, n - 1)]))
        H = Q @ np.diag(lam) @ Q.T
        v = Q[:, 1:] @ rng.uniform(-0.2, 0.2, n - 1)
        out.append((v, 0.5 * (H + H.T), M))
    return out
