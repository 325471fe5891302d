"""Independent oracle for the rotationally symmetric self-shrinking torus.

Integrates the profile equation in arclength with an adaptive high-order
scheme (scipy DOP853) and locates the closing profile by Brent's method, once
from the outermost point and once from the innermost point. Writes the golden
record consumed by the Rust tests.

Profile ODE, tangent (cos th, sin th) in the (r, z) half-plane:
    r' = cos th,  z' = sin th,
    th' = (r sin th - z cos th) / 2 - sin th / r.

Usage: python3 angenent_torus.py [output.json]
"""

import json
import sys

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.optimize import brentq

TOL = 1e-13


def rhs(_s, y):
    r, z, th = y
    return [np.cos(th), np.sin(th), (r * np.sin(th) - z * np.cos(th)) / 2 - np.sin(th) / r]


def shoot(r0, theta0, direction):
    def cross(_s, y):
        return y[1]

    cross.terminal = True
    cross.direction = direction
    sol = solve_ivp(rhs, [0, 50], [r0, 0.0, theta0], method="DOP853", events=cross, rtol=TOL, atol=TOL)
    y = sol.y_events[0][0]
    return np.cos(y[2]), sol.t_events[0][0], y[0]


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "angenent_torus.json"
    window_outer = (3.25, 3.45)
    window_inner = (0.40, 0.47)
    r_outer = brentq(lambda r: shoot(r, np.pi / 2, -1)[0], *window_outer, xtol=1e-15)
    _, half_length, r_inner = shoot(r_outer, np.pi / 2, -1)
    r_inner_start = brentq(lambda r: shoot(r, -np.pi / 2, 1)[0], *window_inner, xtol=1e-15)
    _, half_length_inner, r_outer_from_inner = shoot(r_inner_start, -np.pi / 2, 1)

    sol = solve_ivp(rhs, [0, half_length], [r_outer, 0.0, np.pi / 2], method="DOP853",
                    rtol=TOL, atol=TOL, dense_output=True)
    s = np.linspace(0, half_length, 40001)
    r, z, _ = sol.sol(s)
    gaussian_area = 2 * simpson(2 * np.pi * r * np.exp(-(r**2 + z**2) / 4), x=s)
    record = {
        "schema": "shrinkerlab.torus-golden/v1",
        "oracle": "scipy DOP853, rtol=atol=1e-13, brentq xtol=1e-15",
        "window_outer": window_outer,
        "window_inner": window_inner,
        "r_outer": r_outer,
        "r_inner": r_inner,
        "r_inner_start": r_inner_start,
        "r_outer_from_inner": r_outer_from_inner,
        "half_length": half_length,
        "half_length_inner": half_length_inner,
        "max_z": float(z.max()),
        "f_at_origin": gaussian_area / (4 * np.pi),
    }
    with open(out, "w") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")
    print(json.dumps(record, indent=2))


if __name__ == "__main__":
    main()
