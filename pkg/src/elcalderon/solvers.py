"""Frequency-domain solvers for the ellipse testbed and the crack problems.

The interior Dirichlet problem uses the direct representation
``U_h = S_h λ - D_h φ`` with ``Mφ = β₀`` and ``λ`` from either the first-kind
equation ``V_h λ = (½M + K_h) φ`` or the second-kind equation
``(-½M + J_h) λ = -W_h φ``.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import mixing, operators
from .geometry import ARC, Ellipse, GridData, HalfCircleArc, observation_points, sample_arc, sample_closed
from .material import DEFAULT_MATERIAL, Material

TESTBED_S = -3j
TESTBED_CURVE = Ellipse(4.0, 3.0)
OBS_SEED = 20240611


class SingularSystemError(RuntimeError):
    """Raised when a system matrix is numerically singular."""

    def __init__(self, name, rcond):
        self.rcond = rcond
        super().__init__(f"{name} is numerically singular (reciprocal condition estimate {rcond:.3e})")


def lu_factor(A, name="system matrix", rcond_min=1e-14):
    """Dense LU with partial pivoting plus a 1-norm condition estimate."""
    A = np.asarray(A, dtype=complex)
    with warnings.catch_warnings():
        # an exactly singular pivot is reported below through the condition estimate
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=True)
    anorm = np.linalg.norm(A, 1)
    rcond, info = sla.lapack.zgecon(lu, anorm, norm="1")
    if info != 0 or not np.isfinite(rcond) or rcond < rcond_min:
        raise SingularSystemError(name, float(rcond))
    return lu, piv


def dense_solve(A, b, name="system matrix"):
    return sla.lu_solve(lu_factor(A, name), b)


@dataclass
class FrequencyProblem:
    grid: GridData
    mat: Material
    s: complex
    wave: operators.PlaneWave
    observation: np.ndarray
    incident: operators.IncidentSamples = None

    def __post_init__(self):
        self.observation = np.atleast_2d(np.asarray(self.observation, dtype=float))
        if self.incident is None:
            self.incident = operators.sample_incident(self.grid, self.wave)


@dataclass
class Solution:
    kind: str
    grid: GridData
    lambda_density: np.ndarray = None
    phi_density: np.ndarray = None
    phi_eff: np.ndarray = None
    field: np.ndarray = None
    extra: dict = dataclasses.field(default_factory=dict)


def testbed_problem(N, mat=DEFAULT_MATERIAL, s=TESTBED_S, curve=TESTBED_CURVE, seed=OBS_SEED, radius=2.0):
    """Interior Dirichlet testbed: P+S plane wave, observation points on ``|z| = radius``."""
    grid = sample_closed(curve, N)
    return FrequencyProblem(grid, mat, s, operators.PlaneWave(mat, s), observation_points(radius, 10, seed))


def crack_problem(N, mat=DEFAULT_MATERIAL, s=TESTBED_S, seed=OBS_SEED, radius=5.0):
    """Half-circle crack with the pressure part of the plane wave."""
    grid = sample_arc(HalfCircleArc(1.0), N)
    wave = operators.PlaneWave(mat, s, shear=False)
    return FrequencyProblem(grid, mat, s, wave, observation_points(radius, 10, seed))


def _project_trace(problem):
    M = mixing.matrix_M(problem.grid.N, problem.grid.offsets).dense()
    phi = dense_solve(M, problem.incident.beta0, "mass matrix")
    return M, phi


def _interior_field(problem, lam, phi):
    g, z = problem.grid, problem.observation
    return operators.potential_S(g, problem.s, problem.mat, z, lam) - operators.potential_D(
        g, problem.s, problem.mat, z, phi
    )


def solve_dirichlet_first_kind(problem: FrequencyProblem) -> Solution:
    g = problem.grid
    if g.kind == ARC:
        raise ValueError("interior Dirichlet solver needs a closed curve")
    M, phi = _project_trace(problem)
    A = operators.assemble(g, problem.s, problem.mat, ("V", "K"))
    lam = dense_solve(A["V"], (0.5 * M + A["K"]) @ phi, "V_h")
    Q = mixing.matrix_Q(g.N, g.offsets)
    return Solution("first", g, lam, phi, Q @ phi, _interior_field(problem, lam, phi))


def solve_dirichlet_second_kind(problem: FrequencyProblem) -> Solution:
    g = problem.grid
    if g.kind == ARC:
        raise ValueError("interior Dirichlet solver needs a closed curve")
    M, phi = _project_trace(problem)
    A = operators.assemble(g, problem.s, problem.mat, ("J", "W"))
    lam = dense_solve(-0.5 * M + A["J"], -(A["W"] @ phi), "-M/2 + J_h")
    Q = mixing.matrix_Q(g.N, g.offsets)
    return Solution("second", g, lam, phi, Q @ phi, _interior_field(problem, lam, phi))


def solve_crack_dirichlet(problem: FrequencyProblem) -> Solution:
    """``(V_h + H) η = -β₀`` and ``U_h = S_h η``."""
    g = problem.grid
    if g.kind != ARC:
        raise ValueError("crack solver needs an arc grid")
    V = operators.assemble_V(g, problem.s, problem.mat)
    eta = dense_solve(V + mixing.matrix_H(g.N), -problem.incident.beta0, "V_h + H")
    U = operators.potential_S(g, problem.s, problem.mat, problem.observation, eta)
    return Solution("crack-dirichlet", g, lambda_density=eta, field=U)


def solve_crack_neumann(problem: FrequencyProblem) -> Solution:
    """``(W_h + |H|) ψ = β₁`` and ``U_h = D_h ψ``."""
    g = problem.grid
    if g.kind != ARC:
        raise ValueError("crack solver needs an arc grid")
    W = operators.assemble_W(g, problem.s, problem.mat)
    psi = dense_solve(W + mixing.matrix_absH(g.N), problem.incident.beta1, "W_h + |H|")
    U = operators.potential_D(g, problem.s, problem.mat, problem.observation, psi)
    return Solution("crack-neumann", g, phi_density=psi, field=U)


def _rel_max(approx, exact, what):
    den = np.max(np.abs(exact))
    if den == 0:
        raise ZeroDivisionError(f"exact {what} vanishes; relative error undefined")
    return float(np.max(np.abs(approx - exact)) / den)


def error_metrics(solution: Solution, problem: FrequencyProblem):
    """``(E_U, E_λ, E_φ)``: relative max errors over all scalar components."""
    g, wave = solution.grid, problem.wave
    U_obs = wave.displacement(problem.observation)
    trac = operators.stack_blocks(operators.traction_samples(wave, g.m, g.n))
    trace = operators.stack_blocks(wave.displacement(g.m))
    return (
        _rel_max(solution.field, U_obs, "field"),
        _rel_max(solution.lambda_density, trac, "traction"),
        _rel_max(solution.phi_eff, trace, "trace"),
    )


def ecr(errors):
    """Rates ``log2(e_{k-1}/e_k)`` for a doubling sequence; first entry is None."""
    out = [None]
    for a, b in zip(errors[:-1], errors[1:]):
        out.append(math.log2(a / b) if a > 0 and b > 0 else None)
    return out


def three_grid_ecr(u_N, u_2N, u_4N, floor=1e-14):
    """``log2(|u_N - u_2N| / |u_2N - u_4N|)`` in the max norm."""
    u_N, u_2N, u_4N = (np.asarray(u) for u in (u_N, u_2N, u_4N))
    d1 = np.max(np.abs(u_N - u_2N))
    d2 = np.max(np.abs(u_2N - u_4N))
    scale = max(np.max(np.abs(u_4N)), 1e-300)
    if d2 <= floor * scale:
        raise ValueError(f"grid difference {d2:.3e} is below the rounding floor")
    return math.log2(d1 / d2)


SOLVERS = {"first": solve_dirichlet_first_kind, "second": solve_dirichlet_second_kind}

FREQUENCY_COLUMNS = ["N", "E_U", "ecr_U", "E_lambda", "ecr_lambda", "E_phi", "ecr_phi"]
CRACK_COLUMNS = ["N", "ecr_dirichlet", "ecr_neumann"]


def convergence_table(Ns, equation="first", mat=DEFAULT_MATERIAL, s=TESTBED_S, seed=OBS_SEED, curve=TESTBED_CURVE):
    """Rows shaped like the frequency-domain error tables."""
    solver = SOLVERS[equation]
    errs = []
    for N in Ns:
        problem = testbed_problem(N, mat, s, curve, seed)
        errs.append(error_metrics(solver(problem), problem))
    cols = list(zip(*errs))
    rates = [ecr(list(c)) for c in cols]
    rows = []
    for k, N in enumerate(Ns):
        rows.append({
            "N": N,
            "E_U": cols[0][k], "ecr_U": rates[0][k],
            "E_lambda": cols[1][k], "ecr_lambda": rates[1][k],
            "E_phi": cols[2][k], "ecr_phi": rates[2][k],
        })
    return rows


def crack_fields(Ns, bc, mat=DEFAULT_MATERIAL, s=TESTBED_S, seed=OBS_SEED):
    solver = {"dirichlet": solve_crack_dirichlet, "neumann": solve_crack_neumann}[bc]
    return [solver(crack_problem(N, mat, s, seed)).field for N in Ns]


def crack_table(Ns, bcs=("dirichlet", "neumann"), mat=DEFAULT_MATERIAL, s=TESTBED_S, seed=OBS_SEED):
    """Three-grid rates; the rate at ``N_k`` uses ``N_{k-2}, N_{k-1}, N_k``."""
    if len(Ns) < 3:
        raise ValueError("three-grid rates need at least three levels")
    rates = {}
    for bc in bcs:
        fields = crack_fields(Ns, bc, mat, s, seed)
        rates[bc] = [None, None] + [three_grid_ecr(*fields[k - 2:k + 1]) for k in range(2, len(Ns))]
    return [
        {"N": N, "ecr_dirichlet": rates.get("dirichlet", [None] * len(Ns))[k],
         "ecr_neumann": rates.get("neumann", [None] * len(Ns))[k]}
        for k, N in enumerate(Ns)
    ]


def write_csv(path_or_file, rows, columns):
    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return f"{v:.6e}"
        return str(v)

    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in columns])
    finally:
        if own:
            fh.close()
