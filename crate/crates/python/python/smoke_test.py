"""Smoke test for the peridyn_py extension module."""

import json
import math
import tempfile

import peridyn_py as pd


def main():
    k = pd.Kernel.exponential()
    assert k.name == "exponential"
    assert all(passed for _, passed, _, _ in k.validate())

    disp = pd.Dispersion(k)
    assert abs(disp.c - math.sqrt(2.0)) < 1e-12
    for xi in (-3.0, -0.2, 0.0, 0.7, 12.0):
        exact = xi / math.sqrt(1.0 + 4.0 * math.pi**2 * xi**2)
        assert abs(disp.psi(xi) - exact) < 1e-9, xi
        assert abs(disp.psi_prime(xi)) <= 1.0 + 1e-6

    data = pd.InitialData(u=[(1.0, 0.0, 1.0)])
    u, ut, q = disp.evolve_point(data, 2.0, 1.0)
    assert abs(disp.solve_via_kernels(data, 2.0, 1.0, a=0.5) - u) < 1e-5

    n, dx = 1024, 0.125
    x0 = -0.5 * n * dx
    xs = [x0 + j * dx for j in range(n)]
    u_grid, _ = disp.evolve_grid(x0, dx, [data.u(x) for x in xs], [0.0] * n, 2.0)
    assert abs(u_grid[n // 2 + 8] - u) < 1e-8

    g = pd.Dispersion(pd.Kernel.gaussian())
    times, energies, slope = g.ray_scan(data, 1.5 * g.c)
    assert len(times) == len(energies) and slope is not None and slope <= -6.0

    classical, leak, error, _, peak = g.cone_leak(pd.InitialData(u=[(1.0, 0.0, 0.1)]), 2.0)
    assert classical <= 1e-12 * peak and leak > 10.0 * error

    with tempfile.TemporaryDirectory() as out:
        summary = json.loads(pd.run("dispersion", out, "[dispersion]\npoints = 11\n"))
        assert summary["passed"], summary

    print("smoke test passed")


if __name__ == "__main__":
    main()
