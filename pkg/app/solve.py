import os

import numpy as np
import pandas as pd

from approx import eta_family, projected_result
from cascade import NetworkState
from chi import solve_one_shot, solve_tree_constant, tree_reduce
from grid import Network
from models import load_instance
from search import SearchResult, retrieve_control, root_node, value_iteration
from utils.data import format_frame, save_csv
from utils.logs import set_logger


logger = set_logger(__name__)

OUTPUT_PATH = os.getenv("OUTPUT_PATH", "outputs")


def _parse_method(method: str, eta: float | None) -> tuple[str, float | None]:
    name, _, arg = str(method).partition(":")
    if name not in ("exact", "tree-constant", "one-shot", "proj"):
        raise ValueError(f"Unknown method '{method}'.")
    if name == "proj":
        eta = float(arg) if arg else eta
        if eta is None:
            raise ValueError("Method proj needs eta, e.g. proj:0.5.")
    return name, eta


def _retrieved(net: Network, result: SearchResult, epsilon: float) -> list[np.ndarray]:
    return [net.vector(u) for u in retrieve_control(net, result, epsilon)]


def solve(
    net: Network,
    state: NetworkState,
    N: int,
    method: str = "exact",
    eta: float | None = None,
    epsilon: float = 1e-4,
    eta_basis=None,
    verbose: bool = False,
) -> tuple[float, list[np.ndarray]]:
    """
    Optimal residual load and a control sequence for one method.

    Returns:
        tuple[float, list[np.ndarray]]: ``J`` and one node-ordered control per stage.
    """
    name, eta = _parse_method(method, eta)
    if name == "exact":
        result = value_iteration(net, root_node(net, state), N, verbose=verbose)
        return result.value, _retrieved(net, result, epsilon)
    if name == "proj":
        if eta_basis is None:
            raise ValueError("Method proj needs an instance with eta_basis.")
        result = projected_result(net, state, N, eta_family(net, eta, eta_basis))
        return result.value, _retrieved(net, result, epsilon)
    if name == "tree-constant":
        tree = tree_reduce(net, state.p, active=state.active)
        value, u = solve_tree_constant(net, tree, N)
        return value, [net.vector(u)] * N
    return solve_one_shot(net, state, N)


def controls_frame(net: Network, value: float, controls: list[np.ndarray]) -> pd.DataFrame:
    columns = [str(v) for v, s in zip(net.nodes, net.sign_vector) if s != 0]
    rows = []
    for t, u in enumerate(controls):
        row = {"t": t, "J": value}
        row.update({str(v): float(u[net.node_index[v]]) for v in net.nodes if str(v) in columns})
        rows.append(row)
    return pd.DataFrame(rows, columns=["t", "J"] + columns)


def cmd_solve(
    instance: str,
    N: int = 1,
    method: str = "exact",
    eta: float | None = None,
    epsilon: float = 1e-4,
    version: str = "latest",
    output: bool = False,
    full_precision: bool = False,
    verbose: bool = False,
) -> str:
    """
    Solve the load-shedding problem of an instance.

    Args:
        instance (str): Bundled instance name or path to an instance file.
        N (int): Control horizon (default: 1).
        method (str): ``exact``, ``tree-constant``, ``one-shot`` or ``proj:<eta>``.
        eta (float | None): Mixing weight for ``proj`` when not given in ``method``.
        epsilon (float): Optimality gap allowed when recovering controls.
        version (str): Instance version (default: "latest").
        output (bool): Also write ``$OUTPUT_PATH/<instance>/<method>/N<N>.csv``.
        full_precision (bool): Print 12 decimals instead of 6 significant digits.
        verbose (bool): Log per-depth search statistics.

    Returns:
        str: CSV with ``J`` and one control row per stage.
    """
    manager = load_instance(instance, version=version)
    net, state = manager.network, manager.state
    value, controls = solve(
        net, state, N, method=method, eta=eta, epsilon=epsilon,
        eta_basis=manager.instance.eta_basis, verbose=verbose,
    )
    logger.info(f"{manager.name}: J_{N} = {value:.6g} by {method}")

    frame = controls_frame(net, value, controls)
    if output:
        path = os.path.join(OUTPUT_PATH, manager.name, str(method).replace(":", "-"), f"N{N}.csv")
        save_csv(path, frame, full_precision=full_precision)
        logger.info(f"Solution saved at {path}")
    return format_frame(frame, full_precision=full_precision)


__all__ = [
    "solve",
    "controls_frame",
    "cmd_solve",
]
