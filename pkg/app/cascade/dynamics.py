"""Failure rule and controlled cascade dynamics."""

import os
from typing import Sequence

import numpy as np

from grid.flow import balance_tolerance, compute_flow, connected_components
from grid.network import Network
from utils.errors import InadmissibleControl, UnbalancedInjection
from utils.logs import set_logger

from .state import AdmissibleSet, ControlBox, NetworkState, node_indices


logger = set_logger(__name__)

EPS_CAP = float(os.getenv("EPS_CAP", "1e-9"))


def admissible_set(net: Network, state: NetworkState) -> AdmissibleSet:
    """
    U(E, p) = Pi(p) intersected with the balance subspace of E.

    Args:
        net (Network): The network.
        state (NetworkState): Current (E, p).

    Returns:
        AdmissibleSet: Box plus one balance group per component with a nonzero coordinate.
    """
    box = ControlBox.of(state.p)
    groups = []
    for comp in connected_components(net, state.active):
        idx = tuple(i for i in node_indices(net, comp) if state.p[i] != 0.0)
        if idx:
            groups.append(idx)
    return AdmissibleSet(box=box, balance=tuple(groups))


def check_admissible(net: Network, state: NetworkState, u: np.ndarray) -> None:
    """
    Raises:
        InadmissibleControl: If ``u`` leaves Pi(p) or breaks balance on E.
    """
    tol = balance_tolerance(state.p)
    if not ControlBox.of(state.p).contains(u, tol):
        raise InadmissibleControl("Control leaves the shedding box Pi(p).")
    for comp in connected_components(net, state.active):
        total = float(np.sum(u[node_indices(net, comp)]))
        if abs(total) > tol:
            raise InadmissibleControl(f"Control unbalanced by {total:.3e} on component {sorted(comp)}.")


def surviving_links(net: Network, active: frozenset[int], u: np.ndarray) -> frozenset[int]:
    """Links of ``active`` whose flow under ``u`` stays within capacity."""
    flows = compute_flow(net, active, u).flows
    return frozenset(i for i, f in flows.items() if abs(f) <= net.link(i).capacity + EPS_CAP)


def failure_step(net: Network, state: NetworkState, u) -> NetworkState:
    """
    One step of the controlled dynamics: (E, p) -> (F(E, u), u).

    Args:
        net (Network): The network.
        state (NetworkState): Current state.
        u: Node-ordered control, admissible for ``state``.

    Returns:
        NetworkState: Surviving links and the applied control.

    Raises:
        InadmissibleControl: If ``u`` is not in U(E, p).
    """
    u = np.asarray(u, dtype=float)
    check_admissible(net, state, u)
    survivors = surviving_links(net, state.active, u)
    failed = state.active - survivors
    if failed:
        logger.debug(f"Links failed: {sorted(failed)}")
    return NetworkState(survivors, u.copy())


def is_feasible(net: Network, state: NetworkState) -> bool:
    """True iff p is balanced per component and every active flow is within capacity."""
    try:
        return surviving_links(net, state.active, state.p) == state.active
    except UnbalancedInjection:
        return False


def balanced_part(net: Network, state: NetworkState) -> np.ndarray:
    """``p`` with the injections of unbalanced components set to zero."""
    u = state.p.copy()
    tol = balance_tolerance(state.p)
    for comp in connected_components(net, state.active):
        idx = node_indices(net, comp)
        if abs(float(np.sum(u[idx]))) > tol:
            u[idx] = 0.0
    return u


def run_uncontrolled(net: Network, state: NetworkState, horizon: int | None = None) -> list[NetworkState]:
    """
    Uncontrolled cascade: apply u = p (unbalanced components zeroed) until a feasible state.

    The sequence stops at the first feasible state (it is frozen afterwards),
    at a fixpoint, or after ``horizon`` steps.

    Args:
        net (Network): The network.
        state (NetworkState): Initial state, included in the output.
        horizon (int | None): Maximum number of steps (default: number of links + 1).

    Returns:
        list[NetworkState]: Visited states, starting with ``state``.
    """
    horizon = len(net.links) + 1 if horizon is None else horizon
    states = [state]
    for _ in range(horizon):
        current = states[-1]
        if is_feasible(net, current):
            break
        nxt = failure_step(net, current, balanced_part(net, current))
        if nxt.same_as(current):
            break
        states.append(nxt)
    logger.debug(f"Uncontrolled cascade ran {len(states) - 1} steps")
    return states


def simulate(net: Network, state: NetworkState, controls: Sequence, horizon: int | None = None) -> list[NetworkState]:
    """
    Apply a control sequence through ``failure_step``; the last control is held up to ``horizon`` steps.

    Returns:
        list[NetworkState]: States starting with ``state``.
    """
    controls = [np.asarray(u, dtype=float) for u in controls]
    if not controls:
        return [state]
    horizon = len(controls) if horizon is None else max(horizon, len(controls))
    states = [state]
    for t in range(horizon):
        u = controls[min(t, len(controls) - 1)]
        states.append(failure_step(net, states[-1], u))
    return states


def proportional_control(state: NetworkState, lam: float) -> np.ndarray:
    """u = lam * p, the proportional shedding policy."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("Proportional factor must lie in [0, 1].")
    return lam * state.p


def residual(net: Network, p: np.ndarray) -> float:
    """s^T p, the residual load served."""
    return net.residual(p)


__all__ = [
    "EPS_CAP",
    "admissible_set",
    "check_admissible",
    "surviving_links",
    "failure_step",
    "is_feasible",
    "balanced_part",
    "run_uncontrolled",
    "simulate",
    "proportional_control",
    "residual",
]
