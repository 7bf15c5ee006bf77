"""A cubic-regularized step, including the degenerate "hard case".

Minimizes <v,h> + h'Hh/2 + (M/6)||h||^3 for an indefinite H and prints the
global-optimality certificate next to a brute-force check.
"""
import numpy as np

from hodc import CubicSubproblem, solve_cubic_global

H = np.diag([1.0, -2.0])
M = 2.0

for v in (np.array([1.0, 0.5]), np.array([1.0, 0.0])):
    sub = CubicSubproblem(v, H, M)
    sol = solve_cubic_global(sub)
    print(f"v = {v}")
    print(f"  h* = {sol.h_star}, ||h*|| = {sol.r_star:.6f}, hard case: {sol.hard_case}")
    print(f"  objective {sol.objective:.8f}, KKT residual {sol.kkt_residual:.1e}")
    print(f"  lambda_min(H + M r/2 I) = {sol.certificate_min_eig(sub):.3e}  (>= 0 certifies a global minimum)")

    # brute force on a coarse grid, just to see it agree
    z = np.linspace(-4, 4, 801)
    X, Y = np.meshgrid(z, z, indexing="ij")
    vals = v[0] * X + v[1] * Y + 0.5 * (X**2 - 2 * Y**2) + M / 6 * np.hypot(X, Y) ** 3
    print(f"  grid best {vals.min():.8f}\n")

# With v orthogonal to the bottom eigenvector the secular equation has no
# root above -2 lambda_min / M; the step is completed along that eigenvector.
