"""Godunov finite-volume evolution of one node's arcs.

Each arc is a half-line grid (incoming arcs end at the node, outgoing arcs start
there). Interior interfaces use the classical Godunov flux, written as
min(demand(left), supply(right)). At the node, the configured Riemann solver is
re-applied every step to the current boundary-cell averages and its fluxes are imposed
as the node-side numerical fluxes. Outer ends use zero-order extrapolation (free
inflow/outflow).

Mass bookkeeping: every step appends (t, total_mass, boundary_in, boundary_out) to a
ledger, where the boundary columns are cumulative time-integrated outer-boundary
fluxes, so total_mass(t) - total_mass(0) - (in - out) is the conservation drift.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InputError, StepSizeError, TopologyError
from .flux import FluxModel
from .junction import NodeTopology, RiemannState, TraceSolution

INCOMING = "incoming"
OUTGOING = "outgoing"


@dataclass
class ArcGrid:
    """Cell-average densities on one arc; ``dx`` is the (uniform) cell width."""

    orientation: str
    dx: float
    rho: np.ndarray

    def __post_init__(self):
        if self.orientation not in (INCOMING, OUTGOING):
            raise InputError(
                f"orientation must be {INCOMING!r} or {OUTGOING!r}, "
                f"got {self.orientation!r}")
        if not self.dx > 0.0:
            raise InputError(f"dx must be positive, got {self.dx!r}")
        arr = np.array(self.rho, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise InputError("an arc needs a 1-D grid with at least 2 cells")
        if float(arr.min()) < -1e-12 or float(arr.max()) > 1.0 + 1e-12:
            raise DomainError("cell densities must lie in [0, 1]")
        self.rho = np.clip(arr, 0.0, 1.0)

    @property
    def cells(self) -> int:
        return int(self.rho.size)

    @property
    def boundary_value(self) -> float:
        """Cell average adjacent to the node."""
        return float(self.rho[-1] if self.orientation == INCOMING else self.rho[0])

    def x_centers(self) -> np.ndarray:
        """Cell centers; incoming arcs occupy [-cells*dx, 0], outgoing [0, cells*dx]."""
        idx = np.arange(self.cells) + 0.5
        if self.orientation == INCOMING:
            return (idx - self.cells) * self.dx
        return idx * self.dx

    def copy(self) -> "ArcGrid":
        return ArcGrid(self.orientation, self.dx, self.rho.copy())


@dataclass(frozen=True)
class SimConfig:
    """Run parameters: flux model, node solver handle, CFL number, end time."""

    flux: FluxModel
    solver: Callable[[RiemannState], TraceSolution]
    cfl: float = 0.5
    t_end: float = 1.0
    boundary: str = "extrapolate"

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise InputError(f"cfl must lie in (0, 1], got {self.cfl!r}")
        if not self.t_end > 0.0:
            raise InputError(f"t_end must be positive, got {self.t_end!r}")
        if self.boundary != "extrapolate":
            raise InputError(
                f"only 'extrapolate' outer boundaries are supported, "
                f"got {self.boundary!r}")


def godunov_interface_flux(model: FluxModel, rho_left, rho_right):
    """Godunov numerical flux min(sup demand(left), sup supply(right)).

    Accepts scalars or equal-length numpy arrays.
    """
    if np.isscalar(rho_left) and np.isscalar(rho_right):
        return min(model.demand(rho_left).sup, model.supply(rho_right).sup)
    left = np.asarray(rho_left, dtype=float)
    right = np.asarray(rho_right, dtype=float)
    dem = np.where(left <= model.sigma, model.value(left), model.f_max)
    sup = np.where(right <= model.sigma, model.f_max, model.value(right))
    return np.minimum(dem, sup)


def topology_of(grids: Sequence[ArcGrid]) -> NodeTopology:
    """Topology implied by the grid list; incoming arcs must come first."""
    orientations = [g.orientation for g in grids]
    n = sum(1 for o in orientations if o == INCOMING)
    if orientations != [INCOMING] * n + [OUTGOING] * (len(grids) - n):
        raise TopologyError("grids must list every incoming arc before the outgoing")
    return NodeTopology(n, len(grids) - n)


def max_stable_dt(model: FluxModel, grids: Sequence[ArcGrid]) -> float:
    """Largest dt satisfying the CFL condition dt * max|f'| <= dx on every arc."""
    return min(g.dx for g in grids) / model.max_wave_speed()


@dataclass
class StepResult:
    grids: list[ArcGrid]
    dt: float
    node: TraceSolution
    inflow: float
    outflow: float


def step(grids: Sequence[ArcGrid], config: SimConfig,
         node_solver: Callable[[RiemannState], TraceSolution] | None = None,
         dt: float | None = None) -> StepResult:
    """Advance every arc by one Godunov step, coupling them through the node solver."""
    model = config.flux
    solver = node_solver if node_solver is not None else config.solver
    topo = topology_of(grids)
    dt_max = max_stable_dt(model, grids)
    if dt is None:
        dt = config.cfl * dt_max
    elif dt > dt_max * (1.0 + 1e-12):
        raise StepSizeError(
            f"dt {dt!r} violates the CFL bound {dt_max!r} "
            f"(max wave speed {model.max_wave_speed()!r})")
    node = solver(RiemannState(topo, tuple(g.boundary_value for g in grids)))

    new: list[ArcGrid] = []
    inflow = 0.0
    outflow = 0.0
    for l, g in enumerate(grids):
        r = g.rho
        interior = godunov_interface_flux(model, r[:-1], r[1:])
        if g.orientation == INCOMING:
            outer = float(model.value(r[0]))
            fluxes = np.concatenate(([outer], interior, [node.gamma[l]]))
            inflow += outer
        else:
            outer = float(model.value(r[-1]))
            fluxes = np.concatenate(([node.gamma[l]], interior, [outer]))
            outflow += outer
        updated = r - (dt / g.dx) * (fluxes[1:] - fluxes[:-1])
        new.append(ArcGrid(g.orientation, g.dx, updated))
    return StepResult(new, dt, node, inflow, outflow)


def total_mass(grids: Sequence[ArcGrid]) -> float:
    return sum(float(g.rho.sum()) * g.dx for g in grids)


@dataclass
class SimResult:
    """Everything a run produces: final grids, ledger, snapshots, node history."""

    topology: NodeTopology
    grids: list[ArcGrid]
    ledger: list[tuple[float, float, float, float]]
    snapshots: list[tuple[float, list[ArcGrid]]]
    node_history: list[tuple[float, TraceSolution]] = field(default_factory=list)

    def boundary_state(self) -> RiemannState:
        return RiemannState(self.topology,
                            tuple(g.boundary_value for g in self.grids))

    def mass_drift(self) -> float:
        """Worst absolute violation of mass(t) - mass(0) = in - out over the run."""
        _, m0, _, _ = self.ledger[0]
        return max(abs(m - m0 - (bi - bo)) for _, m, bi, bo in self.ledger)


def make_grids(topology: NodeTopology, initial: Sequence, cells: int = 200,
               length: float = 1.0) -> list[ArcGrid]:
    """Build one grid per arc from scalars (uniform) or per-cell arrays."""
    if len(initial) != topology.total:
        raise TopologyError(
            f"need {topology.total} initial profiles, got {len(initial)}")
    if cells < 2 or not length > 0.0:
        raise InputError("need at least 2 cells and a positive arc length")
    grids = []
    for l, profile in enumerate(initial):
        orientation = INCOMING if l < topology.n else OUTGOING
        if np.isscalar(profile):
            rho = np.full(cells, float(profile))
        else:
            rho = np.asarray(profile, dtype=float)
        grids.append(ArcGrid(orientation, length / rho.size, rho))
    return grids


def run(config: SimConfig, grids: Sequence[ArcGrid],
        snapshot_times: Sequence[float] = (), steps: int | None = None) -> SimResult:
    """Iterate :func:`step` until ``t_end`` (or a fixed step count).

    Snapshots are recorded at t=0, at the first step crossing each requested time,
    and at the end. The ledger gains one row per step.
    """
    topo = topology_of(grids)
    grids = [g.copy() for g in grids]
    t = 0.0
    ledger = [(0.0, total_mass(grids), 0.0, 0.0)]
    snapshots = [(0.0, [g.copy() for g in grids])]
    pending = sorted(set(float(s) for s in snapshot_times if s > 0.0))
    node_history: list[tuple[float, TraceSolution]] = []
    in_cum = 0.0
    out_cum = 0.0
    count = 0
    while (count < steps) if steps is not None else (t < config.t_end - 1e-12):
        dt = config.cfl * max_stable_dt(config.flux, grids)
        if steps is None:
            dt = min(dt, config.t_end - t)
        result = step(grids, config, dt=dt)
        grids = result.grids
        t += dt
        count += 1
        in_cum += result.inflow * dt
        out_cum += result.outflow * dt
        ledger.append((t, total_mass(grids), in_cum, out_cum))
        node_history.append((t, result.node))
        while pending and t >= pending[0] - 1e-12:
            snapshots.append((t, [g.copy() for g in grids]))
            pending.pop(0)
    if snapshots[-1][0] != t:
        snapshots.append((t, [g.copy() for g in grids]))
    return SimResult(topo, list(grids), ledger, snapshots, node_history)


def write_snapshots_csv(result: SimResult, path) -> None:
    """Emit snapshots as rows (t, arc, x, rho)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "arc", "x", "rho"])
        for t, grids in result.snapshots:
            for arc, g in enumerate(grids):
                for x, r in zip(g.x_centers(), g.rho):
                    writer.writerow([f"{t:.17g}", arc, f"{x:.17g}", f"{r:.17g}"])


def write_mass_csv(result: SimResult, path) -> None:
    """Emit the ledger as rows (t, total_mass, boundary_in, boundary_out)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "total_mass", "boundary_in", "boundary_out"])
        for row in result.ledger:
            writer.writerow([f"{v:.17g}" for v in row])


def summary_json(result: SimResult) -> dict:
    """Compact JSON summary of a finished run."""
    t_final, mass_final, in_cum, out_cum = result.ledger[-1]
    return {
        "n": result.topology.n,
        "m": result.topology.m,
        "t_final": t_final,
        "steps": len(result.ledger) - 1,
        "total_mass": mass_final,
        "boundary_in": in_cum,
        "boundary_out": out_cum,
        "mass_drift": result.mass_drift(),
        "boundary_state": list(result.boundary_state().rho),
        "node_gamma": list(result.node_history[-1][1].gamma)
        if result.node_history else None,
    }
