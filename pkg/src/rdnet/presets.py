"""Built-in benchmark systems and their reference values.

All constants of the reproduction targets are embedded here so the harness
needs no hand-typed input: the three-mode switched financial system with its
three parameter cases, the scalar boundary-layer benchmark with its closed
form, the linear variational benchmark, and the multiplicity benchmark with
the piecewise cube-root activation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .geometry import Grid, RectDomain, first_eigenvalue
from .model import Activation, Mode, SwitchedNetwork
from .stationary import StationaryProblem


@dataclass(frozen=True)
class CasePoint:
    """Reference feasible point (beta, gamma) and its reported rate."""

    beta: tuple[float, float, float]
    gamma: float
    tau: float
    rate: float


# three-mode benchmark: reference feasible points per case
CASE_POINTS = {
    1: CasePoint((0.5676, 0.3633, 0.0691), 0.38, 3.5, 0.19),
    2: CasePoint((0.6769, 0.2333, 0.0898), 0.44, 3.5, 0.22),
    3: CasePoint((0.6616, 0.3113, 0.0271), 0.58, 3.0, 0.29),
}

REFERENCE_EIGENVALUES = (19.7392, 11.68, 8.7730)

_DOMAINS = (RectDomain((1.0, 1.0)), RectDomain((1.3, 1.3)), RectDomain((1.5, 1.5)))

_C = (np.diag([0.448, 0.441]), np.diag([0.455, 0.441]), np.diag([0.438, 0.433]))
_A = (np.array([[0.45, 0.00003], [-0.00003, 0.44]]),
      np.array([[0.452, 0.00001], [-0.00001, 0.441]]),
      np.array([[0.439, 0.000015], [-0.00001, 0.433]]))
_B = (np.array([[0.446, -0.00003], [0.00003, 0.442]]),
      np.array([[0.458, -0.00001], [0.00001, 0.441]]),
      np.array([[0.437, -0.000015], [0.00001, 0.433]]))
_J = tuple(np.array([0.2 * math.sin(s), -0.1 * math.cos(s)]) for s in (1, 2, 3))

# smaller diffusion set (cases 1 and 3) and larger set (case 2)
_D_SMALL = (np.diag([0.05, 0.055]), np.diag([0.07, 0.075]), np.diag([0.09, 0.095]))
_D_LARGE = (np.diag([0.1, 0.15]), np.diag([0.15, 0.2]), np.diag([0.1, 0.15]))


def switched_benchmark_activation() -> Activation:
    """g_i(s) = (39 + 2s + 1e-6 sin s)/4 with declared Lipschitz 0.51."""
    return Activation.uniform(
        "scaled_sine", {"a": 39.0 / 4.0, "b": 0.5, "c": 0.25e-6}, 0.51, 2)


def switched_benchmark(case: int = 1) -> SwitchedNetwork:
    """The three-mode switched network for the requested parameter case."""
    if case not in CASE_POINTS:
        raise ValueError("case must be 1, 2 or 3")
    point = CASE_POINTS[case]
    D = _D_LARGE if case == 2 else _D_SMALL
    modes = tuple(
        Mode(D[s], _C[s], _A[s], _B[s], _J[s], _DOMAINS[s]) for s in range(3)
    )
    return SwitchedNetwork(
        modes=modes, activation=switched_benchmark_activation(),
        tau_max=point.tau, Psi=0.00018 * np.eye(2), q=1.00001, gamma=point.gamma)


def switched_benchmark_initial(grid: Grid, dps: int = 420):
    """The benchmark's oscillatory initial field on a 2D grid.

    phi_j(x) = prod_s sin^j[x1^33 (x1 - 5(s+1))^353 x2^63 (x2 - 5(s+1))^79]
    for j = 1, 2. The sine argument reaches ~1e353, so it is reduced in
    extended precision before taking the sine; the result is a bounded field
    as the theory requires. Returns a constant-in-s history sampler.
    """
    if grid.domain.dims != 2:
        raise ValueError("the benchmark initial data lives on a 2D grid")
    x1_axis, x2_axis = grid.axes()
    with mpmath.workdps(dps):
        sin1 = np.ones(grid.shape)
        for s in (1, 2, 3):
            shift = 5 * (s + 1)
            # per-axis factors, computed once per node and combined per pair
            f1 = [mpmath.mpf(float(x)) ** 33 * (mpmath.mpf(float(x)) - shift) ** 353
                  for x in x1_axis]
            f2 = [mpmath.mpf(float(x)) ** 63 * (mpmath.mpf(float(x)) - shift) ** 79
                  for x in x2_axis]
            for i, a in enumerate(f1):
                for k, b in enumerate(f2):
                    sin1[i, k] *= float(mpmath.sin(a * b))
    field = np.stack([sin1, sin1**2])

    def phi(s: float) -> np.ndarray:
        return field

    return phi


# scalar boundary-layer benchmark: D u'' - 1.8 u + 0.3 g(u) + 1.09 with
# g(s) = 0.05 (s - 6); equilibrium of the lumped ODE at 200/357
def boundary_layer_mode() -> Mode:
    return Mode(D=[[0.001]], C=[[1.8]], A=[[0.2]], B=[[0.1]], J=[1.09],
                domain=RectDomain((1.0,)))


def boundary_layer_activation() -> Activation:
    return Activation.uniform("affine", {"a": 0.05, "b": -0.3}, 0.05, 1)


def boundary_layer_problem(nodes: int = 401) -> StationaryProblem:
    mode = boundary_layer_mode()
    return StationaryProblem(mode, boundary_layer_activation(),
                             Grid(mode.domain, (nodes,)))


BOUNDARY_LAYER_EQUILIBRIUM = 200.0 / 357.0
BOUNDARY_LAYER_TAU = 1.0  # conventional value; the benchmark leaves it free


# linear variational benchmark: 0.1 u'' - 1.98 u + 0.1 = 0 on (0, 1)
def linear_variational_mode() -> Mode:
    return Mode(D=[[0.1]], C=[[2.0]], A=[[0.01]], B=[[0.01]], J=[0.1],
                domain=RectDomain((1.0,)))


def linear_variational_problem(nodes: int = 401) -> StationaryProblem:
    mode = linear_variational_mode()
    activation = Activation.uniform("identity", {}, 1.0, 1)
    return StationaryProblem(mode, activation, Grid(mode.domain, (nodes,)))


LINEAR_VARIATIONAL_EQUILIBRIUM = 0.1 / 1.98


def linear_variational_profile(x) -> np.ndarray:
    """Analytic solution of u'' = 19.8 u - 1, u(0) = u(1) = 0."""
    x = np.asarray(x, dtype=float)
    s = math.sqrt(19.8)
    return (1.0 - np.cosh(s * (x - 0.5)) / math.cosh(s / 2.0)) / 19.8


# multiplicity benchmark: piecewise cube-root activation tuned so the whole
# segment t * phi1 with |t phi1| <= 1 solves the stationary equation
def multiplicity_problem(nodes: int = 201, diffusion: float = 0.1,
                         decay: float = 0.2, coupling: float = 1.0,
                         domain: RectDomain | None = None) -> StationaryProblem:
    domain = domain or RectDomain((1.0,))
    mu1 = decay / diffusion + first_eigenvalue(domain)
    n_axes = (nodes,) * domain.dims
    mode = Mode(D=np.diag([diffusion]), C=np.diag([decay]),
                A=np.array([[coupling]]), B=np.zeros((1, 1)), J=np.zeros(1),
                domain=domain)
    activation = Activation.uniform(
        "piecewise_cbrt", {"d": diffusion, "a_weight": coupling, "mu1": mu1},
        diffusion / coupling * mu1, 1)
    return StationaryProblem(mode, activation, Grid(domain, n_axes))
