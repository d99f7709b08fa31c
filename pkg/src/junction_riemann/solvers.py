"""Riemann solvers at the node and their supporting optimization routines.

Five solvers are provided, all mapping a :class:`RiemannState` to a
:class:`TraceSolution`:

* ``rs1_solve``      -- maximizes total incoming flux subject to a distribution matrix
                        routing it to the outgoing arcs (unique for matrices in the
                        uniqueness class checked by :func:`matrix_in_n`).
* ``rs2_solve``      -- maximizes the through-flow, then splits it by projecting
                        priority targets onto capped simplexes on each side.
* ``rs3_solve``      -- like rs2 but with per-line caps (incoming arc i feeds outgoing
                        arc n+i) and an overall crossing capacity; needs n == m.
* ``rs_1x1_solve``   -- the classical single-road solver, min(demand, supply).
* ``rs_e1_2x2_solve``-- the constructed 2x2 solver whose outputs always satisfy the
                        global entropy condition; a finite case split on the number of
                        bad data.

The optimization helpers (exact low-dimensional vertex enumeration, capped-simplex
projection by bisection on the KKT shift) are deliberately simple and are cross-checked
against independent oracles in the test suite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import (DegeneracyError, InadmissibleFluxError, InputError,
                     InvalidMatrixError, TopologyError)
from .flux import DECREASING, INCREASING, FluxModel
from .junction import (NodeTopology, RiemannState, TraceSolution,
                       trace_in_from_flux, trace_out_from_flux)

#: good/bad tie window around sigma (a trace at sigma is good in both directions).
SIGMA_TIE = 1e-12

#: flux comparisons closer than this are treated as ties in the 2x2 case split.
FLUX_TIE = 1e-11


# -- parameter types ------------------------------------------------------------------

@dataclass(frozen=True)
class DistributionMatrix:
    """Column-stochastic routing of incoming flux: m rows (outgoing) by n columns."""

    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if not self.rows or not self.rows[0]:
            raise InvalidMatrixError("distribution matrix cannot be empty")
        n = len(self.rows[0])
        if any(len(r) != n for r in self.rows):
            raise InvalidMatrixError("distribution matrix rows have unequal lengths")
        for r in self.rows:
            for a in r:
                if not 0.0 < a < 1.0:
                    raise InvalidMatrixError(
                        f"entry {a!r} outside the open interval (0, 1)")
        for i in range(n):
            col = sum(r[i] for r in self.rows)
            if abs(col - 1.0) > 1e-9:
                raise InvalidMatrixError(f"column {i} sums to {col!r}, expected 1")

    @staticmethod
    def from_rows(values) -> "DistributionMatrix":
        try:
            rows = tuple(tuple(float(a) for a in row) for row in values)
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad distribution matrix: {exc}") from exc
        return DistributionMatrix(rows)

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.rows[0])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=float)


@dataclass(frozen=True)
class ThetaWeights:
    """Strictly positive priority weights, normalized on each side of the node."""

    incoming: tuple[float, ...]
    outgoing: tuple[float, ...]

    def __post_init__(self):
        for side, values in (("incoming", self.incoming), ("outgoing", self.outgoing)):
            if not values:
                raise InputError(f"{side} weights cannot be empty")
            if any(not w > 0.0 for w in values):
                raise InputError(f"{side} weights must be strictly positive")
            if abs(sum(values) - 1.0) > 1e-9:
                raise InputError(f"{side} weights must sum to 1, got {sum(values)!r}")

    @staticmethod
    def uniform(topology: NodeTopology) -> "ThetaWeights":
        return ThetaWeights((1.0 / topology.n,) * topology.n,
                            (1.0 / topology.m,) * topology.m)

    @staticmethod
    def from_flat(values, n: int) -> "ThetaWeights":
        try:
            flat = tuple(float(w) for w in values)
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad weight vector: {exc}") from exc
        if len(flat) <= n:
            raise InputError(f"weight vector needs more than {n} entries")
        return ThetaWeights(flat[:n], flat[n:])


@dataclass(frozen=True)
class CrossingCapacity:
    """Upper bound on the total flux through the node (may be infinite)."""

    gamma_j: float

    def __post_init__(self):
        if not self.gamma_j > 0.0:
            raise InputError(f"crossing capacity must be positive, got {self.gamma_j!r}")


# -- the uniqueness class of distribution matrices -------------------------------------

def matrix_in_n(matrix: DistributionMatrix, topology: NodeTopology | None = None,
                tol: float = 1e-10) -> bool:
    """Whether the matrix admits a unique flux maximizer for every cap choice.

    The test: for every nonempty tuple of at most n-1 vectors drawn from the n
    coordinate directions and the m matrix rows, the all-ones vector must stay
    outside their span. Always false when n > m (the m rows alone sum to 1).
    """
    if topology is not None and (matrix.m, matrix.n) != (topology.m, topology.n):
        raise InvalidMatrixError(
            f"matrix is {matrix.m}x{matrix.n}, topology wants "
            f"{topology.m}x{topology.n}")
    return _in_n_cached(matrix.rows, tol)


@lru_cache(maxsize=512)
def _in_n_cached(rows: tuple[tuple[float, ...], ...], tol: float) -> bool:
    m, n = len(rows), len(rows[0])
    if n > m:
        return False
    normals = [tuple(1.0 if k == i else 0.0 for k in range(n)) for i in range(n)]
    normals += [tuple(r) for r in rows]
    ones = np.ones((1, n))
    for size in range(1, n):
        for combo in itertools.combinations(range(n + m), size):
            V = np.asarray([normals[i] for i in combo])
            if np.linalg.matrix_rank(V, tol=tol) == \
                    np.linalg.matrix_rank(np.vstack([V, ones]), tol=tol):
                return False
    return True


# -- linear programming over the demand box / supply polytope --------------------------

def _solve_square(M: list[list[float]], r: list[float]) -> list[float] | None:
    """Cramer solve for 1x1/2x2/3x3 systems; None when close to singular."""
    n = len(r)
    if n == 1:
        d = M[0][0]
        return None if abs(d) < 1e-12 else [r[0] / d]
    if n == 2:
        d = M[0][0] * M[1][1] - M[0][1] * M[1][0]
        if abs(d) < 1e-12:
            return None
        return [(r[0] * M[1][1] - M[0][1] * r[1]) / d,
                (M[0][0] * r[1] - r[0] * M[1][0]) / d]

    def det3(a):
        return (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]))

    d = det3(M)
    if abs(d) < 1e-12:
        return None
    out = []
    for col in range(3):
        Mc = [row[:] for row in M]
        for i in range(3):
            Mc[i][col] = r[i]
        out.append(det3(Mc) / d)
    return out


def lp_maximize_box_polytope(caps_in: Sequence[float], caps_out: Sequence[float],
                             matrix, feas_tol: float = 1e-9,
                             match_tol: float = 1e-9) -> tuple[float, ...]:
    """Maximize sum(gamma) over {0 <= gamma <= caps_in, 0 <= A gamma <= caps_out}.

    Exact vertex enumeration for n <= 3; a bounded-variable simplex (HiGHS) with a
    uniqueness probe beyond that. A detected tie between geometrically distinct optima
    raises DegeneracyError (the numerical signature of a matrix outside the
    uniqueness class).
    """
    if isinstance(matrix, DistributionMatrix):
        A = [list(r) for r in matrix.rows]
    else:
        A = [[float(a) for a in row] for row in matrix]
    b = [float(x) for x in caps_in]
    c = [float(x) for x in caps_out]
    n, m = len(b), len(c)
    if len(A) != m or any(len(row) != n for row in A):
        raise InvalidMatrixError("matrix shape does not match the cap vectors")
    if any(x < -1e-12 for x in b) or any(x < -1e-12 for x in c):
        raise InadmissibleFluxError("caps must be nonnegative")
    b = [max(0.0, x) for x in b]
    c = [max(0.0, x) for x in c]

    if n > 3:
        return _lp_simplex(b, c, A, match_tol)

    rows: list[list[float]] = []
    rhs: list[float] = []
    for i in range(n):
        low = [0.0] * n
        low[i] = -1.0
        rows.append(low)
        rhs.append(0.0)
        high = [0.0] * n
        high[i] = 1.0
        rows.append(high)
        rhs.append(b[i])
    for j in range(m):
        rows.append(list(A[j]))
        rhs.append(c[j])

    vertices: list[list[float]] = []
    for combo in itertools.combinations(range(len(rows)), n):
        sol = _solve_square([rows[i] for i in combo], [rhs[i] for i in combo])
        if sol is None:
            continue
        if any(sum(rw[k] * sol[k] for k in range(n)) > rr + feas_tol
               for rw, rr in zip(rows, rhs)):
            continue
        if not any(max(abs(x - y) for x, y in zip(sol, v)) <= match_tol
                   for v in vertices):
            vertices.append(sol)
    if not vertices:
        raise InadmissibleFluxError("empty feasible set (should not happen: 0 is in it)")
    best = max(sum(v) for v in vertices)
    top = [v for v in vertices if sum(v) >= best - match_tol]
    for v, w in itertools.combinations(top, 2):
        if max(abs(x - y) for x, y in zip(v, w)) > match_tol:
            raise DegeneracyError(
                "flux maximizer is not unique; matrix outside the uniqueness class")
    return tuple(max(top, key=sum))


def _lp_simplex(b: list[float], c: list[float], A: list[list[float]],
                match_tol: float) -> tuple[float, ...]:
    from scipy.optimize import linprog

    n = len(b)
    res = linprog(c=[-1.0] * n, A_ub=A, b_ub=c, bounds=list(zip([0.0] * n, b)),
                  method="highs")
    if not res.success:
        raise InadmissibleFluxError(f"flux maximization failed: {res.message}")
    e0 = float(res.x.sum())
    # probe the optimal face along a generic direction from both sides
    A_face = A + [[-1.0] * n]
    c_face = c + [-(e0 - match_tol)]
    w = np.random.default_rng(7).uniform(0.5, 1.5, n)
    probes = []
    for sign in (-1.0, 1.0):
        p = linprog(c=sign * w, A_ub=A_face, b_ub=c_face,
                    bounds=list(zip([0.0] * n, b)), method="highs")
        if not p.success:
            raise InadmissibleFluxError(f"uniqueness probe failed: {p.message}")
        probes.append(p.x)
    if float(np.max(np.abs(probes[0] - probes[1]))) > 10.0 * match_tol:
        raise DegeneracyError(
            "flux maximizer is not unique; matrix outside the uniqueness class")
    return tuple(float(x) for x in res.x)


# -- projection onto a capped simplex --------------------------------------------------

def project_capped_simplex(target: Sequence[float], caps: Sequence[float],
                           total: float, sum_tol: float = 1e-13,
                           max_iter: int = 200) -> tuple[float, ...]:
    """Euclidean projection of ``target`` onto {0 <= x <= caps, sum x = total}.

    Bisects the KKT shift: the projection is clip(target + lam, 0, caps) for the
    lam making the coordinates sum to ``total``. The sum is monotone in lam, so
    plain bisection converges; flat segments (every coordinate clamped) terminate
    through the sum tolerance.
    """
    t = [float(x) for x in target]
    c = [float(x) for x in caps]
    if len(t) != len(c) or not t:
        raise InputError("target and caps must be equal-length, nonempty vectors")
    if any(x < -1e-12 for x in c):
        raise InadmissibleFluxError("caps must be nonnegative")
    c = [max(0.0, x) for x in c]
    cap_sum = sum(c)
    if total < -1e-9 or total > cap_sum + 1e-9:
        raise InadmissibleFluxError(
            f"total {total!r} outside the feasible range [0, {cap_sum!r}]")
    total = min(max(total, 0.0), cap_sum)
    lo = -max(t) - 1.0
    hi = max(ci - ti for ti, ci in zip(t, c)) + 1.0
    lam = 0.0
    for _ in range(max_iter):
        lam = 0.5 * (lo + hi)
        s = sum(min(max(ti + lam, 0.0), ci) for ti, ci in zip(t, c))
        if abs(s - total) <= sum_tol:
            break
        if s < total:
            lo = lam
        else:
            hi = lam
    return tuple(min(max(ti + lam, 0.0), ci) for ti, ci in zip(t, c))


# -- solvers ---------------------------------------------------------------------------

def rs1_solve(model: FluxModel, matrix: DistributionMatrix,
              initial: RiemannState) -> TraceSolution:
    """Maximize total incoming flux routed through the distribution matrix."""
    topo = initial.topology
    if (matrix.m, matrix.n) != (topo.m, topo.n):
        raise InvalidMatrixError(
            f"matrix is {matrix.m}x{matrix.n}, node is {topo.n}x{topo.m}")
    if not matrix_in_n(matrix, topo):
        raise InvalidMatrixError(
            "matrix outside the uniqueness class (no unique flux maximizer)")
    caps_in = [model.demand(r).sup for r in initial.incoming]
    caps_out = [model.supply(r).sup for r in initial.outgoing]
    g_in = lp_maximize_box_polytope(caps_in, caps_out, matrix)
    g_out = [sum(matrix.rows[j][i] * g_in[i] for i in range(topo.n))
             for j in range(topo.m)]
    traces = [trace_in_from_flux(model, r, g) for r, g in zip(initial.incoming, g_in)]
    traces += [trace_out_from_flux(model, r, min(g, model.supply(r).sup))
               for r, g in zip(initial.outgoing, g_out)]
    return TraceSolution.from_traces(model, initial, traces)


def rs2_solve(model: FluxModel, theta: ThetaWeights,
              initial: RiemannState) -> TraceSolution:
    """Maximal through-flow split by projecting priority targets on both sides."""
    topo = initial.topology
    if (len(theta.incoming), len(theta.outgoing)) != (topo.n, topo.m):
        raise TopologyError(
            f"weights are {len(theta.incoming)}+{len(theta.outgoing)}, "
            f"node is {topo.n}x{topo.m}")
    caps_in = [model.demand(r).sup for r in initial.incoming]
    caps_out = [model.supply(r).sup for r in initial.outgoing]
    through = min(sum(caps_in), sum(caps_out))
    g_in = project_capped_simplex([through * w for w in theta.incoming],
                                  caps_in, through)
    g_out = project_capped_simplex([through * w for w in theta.outgoing],
                                   caps_out, through)
    traces = [trace_in_from_flux(model, r, g) for r, g in zip(initial.incoming, g_in)]
    traces += [trace_out_from_flux(model, r, g)
               for r, g in zip(initial.outgoing, g_out)]
    return TraceSolution.from_traces(model, initial, traces)


def rs3_solve(model: FluxModel, theta: ThetaWeights, cap: CrossingCapacity,
              initial: RiemannState) -> TraceSolution:
    """Per-line capped through-flow: incoming arc i feeds outgoing arc n+i."""
    topo = initial.topology
    if topo.n != topo.m:
        raise TopologyError(
            f"per-line solver needs matching arc counts, got {topo.n}x{topo.m}")
    if len(theta.incoming) != topo.n:
        raise TopologyError("incoming weight count does not match the topology")
    line_caps = [min(model.demand(initial.rho[i]).sup,
                     model.supply(initial.rho[topo.n + i]).sup)
                 for i in range(topo.n)]
    total = min(sum(line_caps), cap.gamma_j)
    g = project_capped_simplex([total * w for w in theta.incoming], line_caps, total)
    traces = [trace_in_from_flux(model, initial.rho[i], g[i]) for i in range(topo.n)]
    traces += [trace_out_from_flux(model, initial.rho[topo.n + i], g[i])
               for i in range(topo.n)]
    return TraceSolution.from_traces(model, initial, traces)


def rs_1x1_solve(model: FluxModel, initial: RiemannState) -> TraceSolution:
    """The unique entropy solver for one incoming and one outgoing arc."""
    topo = initial.topology
    if (topo.n, topo.m) != (1, 1):
        raise TopologyError(f"single-road solver needs a 1x1 node, got "
                            f"{topo.n}x{topo.m}")
    g = min(model.demand(initial.rho[0]).sup, model.supply(initial.rho[1]).sup)
    traces = [trace_in_from_flux(model, initial.rho[0], g),
              trace_out_from_flux(model, initial.rho[1], g)]
    return TraceSolution.from_traces(model, initial, traces)


def rs_e1_2x2_solve(model: FluxModel, initial: RiemannState) -> TraceSolution:
    """The constructed 2x2 solver whose outputs satisfy the global entropy condition.

    Finite case split on the number h of bad data (incoming below sigma, outgoing
    above). Each branch pins traces so that the result lands in an admissible row of
    the 2x2 table, balances exactly, and is a fixed point of the map.
    """
    topo = initial.topology
    if (topo.n, topo.m) != (2, 2):
        raise TopologyError(f"this solver needs a 2x2 node, got {topo.n}x{topo.m}")
    rho = list(initial.rho)
    s = model.sigma
    fm = model.f_max
    f = [float(model.value(r)) for r in rho]
    bad = [rho[0] < s - SIGMA_TIE, rho[1] < s - SIGMA_TIE,
           rho[2] > s + SIGMA_TIE, rho[3] > s + SIGMA_TIE]
    h = sum(bad)
    tr: list[float] = [0.0] * 4

    if h == 0:
        tr = [s, s, s, s]

    elif h == 1:
        l = bad.index(True)
        if l <= 1:
            tr[l] = rho[l]
            tr[1 - l] = s
            tr[2], tr[3] = tr[0], tr[1]
        else:
            tr[l] = rho[l]
            tr[5 - l] = s
            tr[0], tr[1] = tr[2], tr[3]

    elif h == 2:
        if bad[0] and bad[1]:
            tr = [rho[0], rho[1], rho[0], rho[1]]
        elif bad[2] and bad[3]:
            tr = [rho[2], rho[3], rho[2], rho[3]]
        else:
            bi = 0 if bad[0] else 1
            bo = 2 if bad[2] else 3
            tr[bi] = rho[bi]
            tr[bo] = rho[bo]
            tr[1 - bi] = rho[bo]
            tr[5 - bo] = rho[bi]

    elif h == 3:
        if not (bad[0] and bad[1]):
            # the single good datum is incoming
            g_arc = 0 if not bad[0] else 1
            b_arc = 1 - g_arc
            shifted = f[2] + f[3] - f[b_arc]
            lo = min(f[2], f[3])
            if lo - FLUX_TIE <= shifted <= fm + FLUX_TIE:
                tr = rho.copy()
                tr[g_arc] = model.invert(min(shifted, fm), DECREASING)
            elif shifted > fm:
                jhi, jlo = (2, 3) if f[2] >= f[3] else (3, 2)
                tr[b_arc] = rho[b_arc]
                tr[jhi] = rho[b_arc]
                tr[g_arc] = rho[jlo]
                tr[jlo] = rho[jlo]
            else:
                tr = [rho[2], rho[3], rho[2], rho[3]]
        else:
            # the single good datum is outgoing
            g_arc = 2 if not bad[2] else 3
            b_arc = 5 - g_arc
            shifted = f[0] + f[1] - f[b_arc]
            lo = min(f[0], f[1])
            if lo - FLUX_TIE <= shifted <= fm + FLUX_TIE:
                tr = rho.copy()
                tr[g_arc] = model.invert(min(shifted, fm), INCREASING)
            elif shifted > fm:
                ihi, ilo = (0, 1) if f[0] >= f[1] else (1, 0)
                tr[ihi] = rho[b_arc]
                tr[b_arc] = rho[b_arc]
                tr[ilo] = rho[ilo]
                tr[g_arc] = rho[ilo]
            else:
                tr = [rho[0], rho[1], rho[0], rho[1]]

    else:
        delta = (f[0] + f[1]) - (f[2] + f[3])
        if abs(delta) <= FLUX_TIE:
            tr = rho.copy()
        elif delta < 0.0:
            ihi = 0 if f[0] > f[1] else 1
            jhi, jlo = (2, 3) if f[2] >= f[3] else (3, 2)
            if f[jlo] > f[ihi]:
                tr = [rho[0], rho[1], rho[0], rho[1]]
            else:
                tr = rho.copy()
                tr[jhi] = model.invert(min(f[0] + f[1] - f[jlo], fm), INCREASING)
        else:
            ilo, ihi = (0, 1) if f[0] <= f[1] else (1, 0)
            jhi = 2 if f[2] >= f[3] else 3
            if f[ilo] > f[jhi]:
                tr = [rho[2], rho[3], rho[2], rho[3]]
            else:
                tr = rho.copy()
                tr[ihi] = model.invert(min(f[2] + f[3] - f[ilo], fm), DECREASING)

    return TraceSolution.from_traces(model, initial, tr)


# -- immutable solver handles and config loading ----------------------------------------

@dataclass(frozen=True)
class RS1Solver:
    model: FluxModel
    matrix: DistributionMatrix

    def __call__(self, state: RiemannState) -> TraceSolution:
        return rs1_solve(self.model, self.matrix, state)


@dataclass(frozen=True)
class RS2Solver:
    model: FluxModel
    theta: ThetaWeights

    def __call__(self, state: RiemannState) -> TraceSolution:
        return rs2_solve(self.model, self.theta, state)


@dataclass(frozen=True)
class RS3Solver:
    model: FluxModel
    theta: ThetaWeights
    cap: CrossingCapacity

    def __call__(self, state: RiemannState) -> TraceSolution:
        return rs3_solve(self.model, self.theta, self.cap, state)


@dataclass(frozen=True)
class RS1x1Solver:
    model: FluxModel

    def __call__(self, state: RiemannState) -> TraceSolution:
        return rs_1x1_solve(self.model, state)


@dataclass(frozen=True)
class RSE12x2Solver:
    model: FluxModel

    def __call__(self, state: RiemannState) -> TraceSolution:
        return rs_e1_2x2_solve(self.model, state)


SOLVER_NAMES = ("rs1", "rs2", "rs3", "rs_1x1", "rs_e1_2x2")


def solver_from_config(model: FluxModel, config, topology: NodeTopology):
    """Build a solver handle from a configuration mapping, validating dimensions."""
    if not isinstance(config, Mapping):
        raise InputError("solver config must be an object")
    name = config.get("solver")
    if name == "rs1":
        if "A" not in config:
            raise InputError("rs1 needs a distribution matrix under key 'A'")
        matrix = DistributionMatrix.from_rows(config["A"])
        if (matrix.m, matrix.n) != (topology.m, topology.n):
            raise InvalidMatrixError(
                f"matrix is {matrix.m}x{matrix.n}, node is "
                f"{topology.n}x{topology.m}")
        return RS1Solver(model, matrix)
    if name == "rs2":
        return RS2Solver(model, _theta_from(config, topology))
    if name == "rs3":
        if topology.n != topology.m:
            raise TopologyError(
                f"rs3 needs matching arc counts (topology is "
                f"{topology.n}x{topology.m})")
        try:
            gamma_j = float(config.get("gamma_j", math.inf))
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad crossing capacity: {exc}") from exc
        return RS3Solver(model, _theta_from(config, topology),
                         CrossingCapacity(gamma_j))
    if name == "rs_1x1":
        if (topology.n, topology.m) != (1, 1):
            raise TopologyError(f"rs_1x1 needs a 1x1 node, got "
                                f"{topology.n}x{topology.m}")
        return RS1x1Solver(model)
    if name == "rs_e1_2x2":
        if (topology.n, topology.m) != (2, 2):
            raise TopologyError(f"rs_e1_2x2 needs a 2x2 node, got "
                                f"{topology.n}x{topology.m}")
        return RSE12x2Solver(model)
    raise InputError(f"unknown solver {name!r}; expected one of {SOLVER_NAMES}")


def _theta_from(config, topology: NodeTopology) -> ThetaWeights:
    if "theta" in config:
        return ThetaWeights.from_flat(config["theta"], topology.n)
    return ThetaWeights.uniform(topology)
