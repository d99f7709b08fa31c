"""Entropy functional at the node, admissibility checks, and face geometry.

For a trace vector rho at an n x m node and a constant k in [0, 1], the node entropy
functional is

    F(rho, k) = sum over incoming arcs of sgn(rho_l - k) (f(rho_l) - f(k))
              - sum over outgoing arcs of sgn(rho_l - k) (f(rho_l) - f(k)),

with sgn(0) = 0. Two admissibility notions are built on it: the global condition (E1),
F(rho, k) >= 0 for every k, and the weaker single-constant condition (E2) at k = sigma.

Because each term is piecewise (constant + integer multiple of f(k)) in k, the minimum
over k is attained on the finite candidate set {0, 1, sigma} union {rho_l}, which is
what check_E1 evaluates; a dense-grid cross-check lives in the test suite.

For 2 x 2 nodes, balanced trace vectors are classified into the admissible rows of a
finite table (sorted by density on each side); the classification is equivalent to (E1).

The face machinery evaluates F(., sigma) restricted to a face of the flux polytope
(a set of arcs pinned at their demand/supply maxima) in closed form and verifies that,
composed with trace reconstruction, the objective differs from twice the free incoming
flux by a constant on each face.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import FaceMismatchError, TopologyError, UnbalancedStateError
from .flux import FluxModel, _check_density
from .junction import (BALANCE_TOL, RiemannState, flux_imbalance,
                       trace_in_from_flux, trace_out_from_flux)

#: minima above this threshold count as satisfying the entropy inequalities.
ENTROPY_TOL = 1e-10

#: equality window for the 2x2 table comparisons.
CLASSIFY_EQ_TOL = 1e-10

#: traces within this window of sigma count as good in both directions.
SIGMA_TIE = 1e-12


def _sgn(x: float) -> int:
    x = float(x)
    return (x > 0.0) - (x < 0.0)


def entropy_flux(model: FluxModel, state: RiemannState, k: float) -> float:
    """The node entropy functional F(rho, k); no balance requirement."""
    k = _check_density(k, "entropy constant")
    fk = float(model.value(k))
    total = 0.0
    n = state.topology.n
    for l, r in enumerate(state.rho):
        term = _sgn(r - k) * (float(model.value(r)) - fk)
        total += term if l < n else -term
    return total


def entropy_candidates(model: FluxModel,
                       state: RiemannState) -> tuple[tuple[float, float], ...]:
    """(k, F(rho, k)) over the finite candidate set {0, 1, sigma} union {rho_l}."""
    ks = sorted({0.0, 1.0, model.sigma, *state.rho})
    return tuple((k, entropy_flux(model, state, k)) for k in ks)


@dataclass(frozen=True)
class EntropyReport:
    """Outcome of the entropy checks; E1 fields are None for an E2-only check."""

    min_value: float | None
    argmin_k: float | None
    candidates: tuple[tuple[float, float], ...]
    satisfied_E1: bool | None
    value_at_sigma: float
    satisfied_E2: bool

    def to_json(self) -> dict:
        return {
            "min_value": self.min_value,
            "argmin_k": self.argmin_k,
            "candidates": [[k, v] for k, v in self.candidates],
            "satisfied_E1": self.satisfied_E1,
            "value_at_sigma": self.value_at_sigma,
            "satisfied_E2": self.satisfied_E2,
        }


def _require_balanced(model: FluxModel, state: RiemannState) -> None:
    gamma = [float(model.value(r)) for r in state.rho]
    gap = flux_imbalance(state.topology, gamma)
    if abs(gap) > BALANCE_TOL:
        raise UnbalancedStateError(f"trace fluxes do not balance (gap {gap!r})")


def check_E1(model: FluxModel, state: RiemannState,
             tol: float = ENTROPY_TOL) -> EntropyReport:
    """Evaluate the global entropy condition via the finite candidate set."""
    _require_balanced(model, state)
    candidates = entropy_candidates(model, state)
    argmin_k, min_value = min(candidates, key=lambda kv: kv[1])
    at_sigma = entropy_flux(model, state, model.sigma)
    return EntropyReport(min_value=min_value, argmin_k=argmin_k,
                         candidates=candidates, satisfied_E1=min_value >= -tol,
                         value_at_sigma=at_sigma, satisfied_E2=at_sigma >= -tol)


def check_E2(model: FluxModel, state: RiemannState,
             tol: float = ENTROPY_TOL) -> EntropyReport:
    """Evaluate only the single-constant condition at k = sigma."""
    _require_balanced(model, state)
    at_sigma = entropy_flux(model, state, model.sigma)
    return EntropyReport(min_value=None, argmin_k=None, candidates=(),
                         satisfied_E1=None, value_at_sigma=at_sigma,
                         satisfied_E2=at_sigma >= -tol)


# -- 2 x 2 classification -----------------------------------------------------------

#: row identifiers of the admissible 2x2 table; "none" marks an unmatched state.
ROWS_2X2 = ("0-bad", "1-bad-incoming", "1-bad-outgoing", "2-bad-incoming",
            "2-bad-outgoing", "2-bad-mixed", "3-bad-good-incoming",
            "3-bad-good-outgoing", "4-bad")


@dataclass(frozen=True)
class EquilibriumClassification:
    """Verdict of the 2x2 table: bad-arc count, sort permutation, row, and result."""

    bad_count: int
    permutation: tuple[int, int, int, int]
    row: str
    admissible: bool

    def to_json(self) -> dict:
        return {"bad_count": self.bad_count, "permutation": list(self.permutation),
                "row": self.row, "admissible": self.admissible}


def classify_2x2(model: FluxModel, state: RiemannState,
                 eq_tol: float = CLASSIFY_EQ_TOL) -> EquilibriumClassification:
    """Classify a balanced 2x2 trace vector against the admissible-row table.

    An incoming trace is *bad* when it is strictly below sigma, an outgoing one when
    strictly above (a trace at sigma is good in both directions). Each side is sorted
    ascending before matching, and the applied permutation is reported.
    """
    topo = state.topology
    if (topo.n, topo.m) != (2, 2):
        raise TopologyError(f"classification needs a 2x2 node, got {topo.n}x{topo.m}")
    _require_balanced(model, state)
    s = model.sigma
    order_in = sorted((0, 1), key=lambda i: state.rho[i])
    order_out = sorted((2, 3), key=lambda j: state.rho[j])
    perm = (*order_in, *order_out)
    r1, r2, r3, r4 = (state.rho[i] for i in perm)
    bad = [r1 < s - SIGMA_TIE, r2 < s - SIGMA_TIE,
           r3 > s + SIGMA_TIE, r4 > s + SIGMA_TIE]
    count = sum(bad)

    def le(a: float, b: float) -> bool:
        return a <= b + eq_tol

    def eq(a: float, b: float) -> bool:
        return abs(a - b) <= eq_tol

    fv = [float(model.value(r)) for r in (r1, r2, r3, r4)]
    row, ok = "none", False
    if count == 0:
        if all(eq(r, s) for r in (r1, r2, r3, r4)):
            row, ok = "0-bad", True
    elif count == 1:
        if bad[0] and eq(r2, s) and le(r1, r3):
            row, ok = "1-bad-incoming", True
        elif bad[3] and eq(r3, s) and le(r2, r4):
            row, ok = "1-bad-outgoing", True
    elif count == 2:
        if bad[0] and bad[1] and le(r1, r3) and le(r4, r2):
            row, ok = "2-bad-incoming", True
        elif bad[2] and bad[3] and le(r3, r1) and le(r2, r4):
            row, ok = "2-bad-outgoing", True
        elif bad[0] and bad[3] and le(r1, r3) and le(r2, r4):
            row, ok = "2-bad-mixed", True
    elif count == 3:
        if not bad[1] and le(r2, r4) and fv[0] <= max(fv[1], fv[2]) + eq_tol:
            row, ok = "3-bad-good-incoming", True
        elif not bad[2] and le(r1, r3) and fv[3] <= max(fv[1], fv[2]) + eq_tol:
            row, ok = "3-bad-good-outgoing", True
    else:
        row, ok = "4-bad", True
    return EquilibriumClassification(bad_count=count, permutation=perm, row=row,
                                     admissible=ok)


# -- faces of the flux polytope -------------------------------------------------------

@dataclass(frozen=True)
class RestrictedEntropy:
    """F(., sigma) on a face: direct evaluation and the closed form."""

    direct: float
    closed_form: float


def face_entropy_closed_form(model: FluxModel, traces: RiemannState,
                             active: Iterable[int]) -> float:
    """Closed form of F(rho, sigma) on the face with active-arc set ``active``.

    Arcs in the active set contribute f(sigma) - f(rho_l); the others contribute
    f(rho_l) - f(sigma). Performs no face validation (see restricted_entropy_g).
    """
    H = frozenset(active)
    bad = [l for l in H if not 0 <= l < traces.topology.total]
    if bad:
        raise FaceMismatchError(f"active-set indices {sorted(bad)} out of range")
    fs = model.f_max
    total = 0.0
    for l, r in enumerate(traces.rho):
        fr = float(model.value(r))
        total += (fs - fr) if l in H else (fr - fs)
    return total


def face_active_set(model: FluxModel, initial: RiemannState,
                    gamma: Sequence[float], tol: float = 1e-9) -> frozenset[int]:
    """Arcs whose flux sits at its demand/supply maximum (within ``tol``)."""
    topo = initial.topology
    if len(gamma) != topo.total:
        raise TopologyError("flux vector length does not match the topology")
    out = set()
    for l, g in enumerate(gamma):
        cap = (model.demand(initial.rho[l]).sup if l < topo.n
               else model.supply(initial.rho[l]).sup)
        if abs(g - cap) <= tol:
            out.add(l)
    return frozenset(out)


def restricted_entropy_g(model: FluxModel, initial: RiemannState,
                         traces: RiemannState, active: Iterable[int],
                         face_tol: float = 1e-9) -> RestrictedEntropy:
    """Evaluate F(., sigma) on a face both directly and in closed form.

    ``initial`` is the Riemann datum defining the demand/supply caps, ``traces`` the
    candidate point, ``active`` the face's saturated-arc set (at most n-1 arcs).
    Raises FaceMismatchError when the point does not lie on that face.
    """
    topo = initial.topology
    if traces.topology != topo:
        raise TopologyError("trace vector topology does not match the datum")
    H = frozenset(active)
    if any(not 0 <= l < topo.total for l in H):
        raise FaceMismatchError("active-set indices out of range")
    if len(H) > topo.n - 1:
        raise FaceMismatchError(
            f"active set has {len(H)} arcs; at most n-1 = {topo.n - 1} allowed")
    for l in range(topo.total):
        member = (model.contains_trace_in(initial.rho[l], traces.rho[l]) if l < topo.n
                  else model.contains_trace_out(initial.rho[l], traces.rho[l]))
        if not member:
            raise FaceMismatchError(f"trace on arc {l} is not admissible for the datum")
    gamma = [float(model.value(r)) for r in traces.rho]
    actual = face_active_set(model, initial, gamma, tol=face_tol)
    if actual != H:
        raise FaceMismatchError(
            f"trace vector lies on face {sorted(actual)}, not {sorted(H)}")
    direct = entropy_flux(model, traces, model.sigma)
    closed = face_entropy_closed_form(model, traces, H)
    return RestrictedEntropy(direct=direct, closed_form=closed)


@dataclass(frozen=True)
class FaceSampleReport:
    """Sampled test of objective/entropy equivalence on one face."""

    active: frozenset[int]
    face_nonempty: bool
    gammas: tuple[tuple[float, ...], ...]
    values: tuple[float, ...]
    spread: float
    constant: bool


def face_objective_equivalence(model: FluxModel, initial: RiemannState, matrix,
                               active: Iterable[int], samples: int = 100,
                               rng: np.random.Generator | None = None,
                               margin: float = 1e-7,
                               spread_tol: float = 1e-9) -> FaceSampleReport:
    """Sample a face of the flux polytope and test G(traces) - 2 E_free == const.

    ``matrix`` routes incoming flux to outgoing arcs (a DistributionMatrix or array).
    E_free is the total incoming flux over the arcs not pinned by the face. On every
    face the difference is constant; the report carries the sampled values and spread.
    """
    from .sampling import default_rng
    from .solvers import DistributionMatrix, matrix_in_n

    topo = initial.topology
    if not isinstance(matrix, DistributionMatrix):
        matrix = DistributionMatrix.from_rows(matrix)
    if (matrix.m, matrix.n) != (topo.m, topo.n):
        raise TopologyError("distribution matrix shape does not match the topology")
    if not matrix_in_n(matrix, topo):
        from .errors import InvalidMatrixError
        raise InvalidMatrixError("matrix outside the uniqueness class")
    H = frozenset(active)
    if any(not 0 <= l < topo.total for l in H):
        raise FaceMismatchError("active-set indices out of range")
    if len(H) > topo.n - 1:
        raise FaceMismatchError(
            f"active set has {len(H)} arcs; at most n-1 = {topo.n - 1} allowed")
    rng = rng if rng is not None else default_rng()

    n, m = topo.n, topo.m
    A = matrix.as_array()
    caps_in = np.array([model.demand(r).sup for r in initial.incoming])
    caps_out = np.array([model.supply(r).sup for r in initial.outgoing])

    rows, rhs = [], []
    for l in sorted(H):
        if l < n:
            e = np.zeros(n)
            e[l] = 1.0
            rows.append(e)
            rhs.append(caps_in[l])
        else:
            rows.append(A[l - n])
            rhs.append(caps_out[l - n])

    if rows:
        E = np.vstack(rows)
        d = np.asarray(rhs)
        z0, *_ = np.linalg.lstsq(E, d, rcond=None)
        if np.linalg.norm(E @ z0 - d) > 1e-9:
            return FaceSampleReport(H, False, (), (), 0.0, True)
        _, sv, vt = np.linalg.svd(E)
        rank = int(np.sum(sv > 1e-12))
        null = vt[rank:].T
    else:
        z0 = np.zeros(n)
        null = np.eye(n)

    span = 2.0 * max(1.0, float(caps_in.max()))
    found: list[np.ndarray] = []
    max_tries = max(2000, samples * 500)
    for _ in range(max_tries):
        if len(found) >= samples:
            break
        g = z0 if null.shape[1] == 0 else \
            z0 + null @ rng.uniform(-span, span, null.shape[1])
        if np.any(g < 0.0):
            continue
        gout = A @ g
        ok = True
        for i in range(n):
            lim = caps_in[i]
            if i in H:
                ok &= abs(g[i] - lim) <= 1e-9
            else:
                ok &= g[i] <= lim - margin * max(1.0, lim)
        for j in range(m):
            lim = caps_out[j]
            if n + j in H:
                ok &= abs(gout[j] - lim) <= 1e-9
            else:
                ok &= gout[j] <= lim - margin * max(1.0, lim)
        if ok:
            found.append(g)
            if null.shape[1] == 0:
                break

    if not found:
        return FaceSampleReport(H, False, (), (), 0.0, True)

    gammas, values = [], []
    for g in found:
        gout = A @ g
        traces = [trace_in_from_flux(model, initial.rho[i], float(g[i]))
                  for i in range(n)]
        traces += [trace_out_from_flux(model, initial.rho[n + j], float(gout[j]))
                   for j in range(m)]
        tr_state = RiemannState(topo, tuple(traces))
        g_val = entropy_flux(model, tr_state, model.sigma)
        e_free = sum(float(g[i]) for i in range(n) if i not in H)
        gammas.append(tuple(float(x) for x in g) + tuple(float(x) for x in gout))
        values.append(g_val - 2.0 * e_free)
    spread = max(values) - min(values)
    return FaceSampleReport(H, True, tuple(gammas), tuple(values), spread,
                            spread <= spread_tol)
