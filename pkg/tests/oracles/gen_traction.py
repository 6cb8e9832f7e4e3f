"""Regenerate tests/data/traction_oracle.json.

Stresses of the plane P+S wave and of the smoothed plane pulse, obtained by
symbolic differentiation of the displacement fields in sympy.
"""

import json
from pathlib import Path

import numpy as np
import sympy as sp

OUT = Path(__file__).resolve().parents[1] / "data" / "traction_oracle.json"

LAM, MU, RHO = sp.Integer(5), sp.Integer(3), sp.Rational(5, 2)
CL = sp.sqrt((LAM + 2 * MU) / RHO)
CT = sp.sqrt(MU / RHO)
x, y, t = sp.symbols("x y t", real=True)
D = sp.Matrix([1, 1]) / sp.sqrt(2)
DP = sp.Matrix([-D[1], D[0]])
Z = sp.Matrix([x, y])


def stress(U):
    grad = U.jacobian(Z)
    return MU * (grad + grad.T) + LAM * grad.trace() * sp.eye(2)


def plane_wave(s):
    amp = sp.exp(-s * Z.dot(D) / CL) + sp.exp(-s * Z.dot(DP) / CT)
    return amp * D


def pulse(t0=sp.Rational(23, 10)):
    a = CL * (t - t0) - Z.dot(D)
    # degree-9 smoothstep on [0, 1]; only evaluated where 0 < a < 1 or a > 1
    h = 126 * a**5 - 420 * a**6 + 540 * a**7 - 315 * a**8 + 70 * a**9
    return sp.Piecewise((0, a <= 0), (h, a < 1), (1, True)) * sp.sin(2 * a) * D


def as_pairs(M):
    return [[[float(sp.re(v)), float(sp.im(v))] for v in row] for row in M.tolist()]


def main():
    rng = np.random.default_rng(7)
    s = -3 * sp.I
    sig = stress(plane_wave(s))
    wave_rows = []
    for p in rng.uniform(-4, 4, (5, 2)):
        val = sig.subs({x: sp.Float(p[0], 30), y: sp.Float(p[1], 30)}).evalf(30)
        wave_rows.append({"z": p.tolist(), "stress": as_pairs(val)})
    sig_p = stress(pulse())
    pulse_rows = []
    # phases a = cL (t - t0) - z.d chosen to cover the ramp and the plateau
    cl = float(CL)
    for p, a in zip(rng.uniform(-3, 3, (5, 2)), (0.05, 0.3, 0.7, 1.5, 2.2)):
        tt = 2.3 + (a + p.sum() / np.sqrt(2)) / cl
        val = sig_p.subs({x: sp.Float(p[0], 30), y: sp.Float(p[1], 30), t: sp.Float(tt, 30)}).evalf(30)
        pulse_rows.append({"z": p.tolist(), "t": float(tt), "stress": [[float(v) for v in r] for r in val.tolist()]})
    OUT.write_text(json.dumps({"material": [5, 3, 2.5], "s": [0.0, -3.0], "d": [2**-0.5, 2**-0.5],
                               "plane_wave": wave_rows, "pulse": pulse_rows}, indent=1))
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
