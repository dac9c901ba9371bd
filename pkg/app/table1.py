import numpy as np
import pandas as pd
from tabulate import tabulate

from approx import eta_family, projected_search
from models import SweepRunner, load_instance
from search import root_node, value_iteration
from utils.data import format_frame
from utils.logs import set_logger


logger = set_logger(__name__)

ETAS = tuple(round(x, 1) for x in np.linspace(0.0, 1.0, 11))
OPTIMAL = "Optimal"


def residual_table(manager, horizons: int = 5, workers: int | None = None, save: bool = False, override: bool = False) -> pd.DataFrame:
    """
    Residual load for every horizon under each eta projection and under the exact search.

    Returns:
        pd.DataFrame: Rows ``N = 1..horizons``; columns ``N``, one per eta, and ``Optimal``.
    """
    net, state = manager.network, manager.state
    basis = manager.instance.eta_basis
    if basis is None:
        raise ValueError(f"Instance {manager.name} has no eta_basis.")

    def task(key):
        N, eta = key
        if eta == OPTIMAL:
            return value_iteration(net, root_node(net, state), N).value
        return projected_search(net, state, N, eta_family(net, eta, basis))[0]

    keys = [(N, eta) for N in range(1, horizons + 1) for eta in ETAS + (OPTIMAL,)]
    values = SweepRunner(f"{manager.name}-table", workers=workers, save=save)(task, keys, override=override)
    rows = []
    for N in range(1, horizons + 1):
        row = {"N": N}
        row.update({str(eta): values[(N, eta)] for eta in ETAS + (OPTIMAL,)})
        rows.append(row)
    return pd.DataFrame(rows, columns=["N"] + [str(eta) for eta in ETAS] + [OPTIMAL])


def cmd_table1(
    instance: str = "ieee39",
    horizons: int = 5,
    markdown: bool = False,
    full_precision: bool = False,
    workers: int | None = None,
    save: bool = False,
    override: bool = False,
    version: str = "latest",
) -> str:
    """
    Residual load table: horizons against projection weights eta, plus the exact optimum.

    Args:
        instance (str): Instance with an ``eta_basis`` (default: "ieee39").
        horizons (int): Largest horizon N (default: 5).
        markdown (bool): Render a markdown table instead of CSV.
        full_precision (bool): Print 12 decimals instead of 6 significant digits.
        workers (int | None): Sweep threads (default: ``$SWEEP_WORKERS``).
        save (bool): Keep cell values under ``$OUTPUT_PATH``.
        override (bool): Recompute stored cells.
        version (str): Instance version (default: "latest").
    """
    manager = load_instance(instance, version=version)
    frame = residual_table(manager, horizons=horizons, workers=workers, save=save, override=override)
    logger.info(f"Residual table of {manager.name} for N=1..{horizons}")
    if markdown:
        return tabulate(frame, headers="keys", tablefmt="github", floatfmt=".3f", showindex=False)
    return format_frame(frame, full_precision=full_precision)


__all__ = [
    "ETAS",
    "residual_table",
    "cmd_table1",
]
