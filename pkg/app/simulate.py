import numpy as np
import pandas as pd

from cascade import proportional_control, run_uncontrolled, simulate
from models import load_instance
from utils.data import format_frame
from utils.logs import set_logger


logger = set_logger(__name__)


def _read_controls(path: str, net) -> list[np.ndarray]:
    """Control file: one row per stage, one column per node id."""
    frame = pd.read_csv(path)
    frame = frame.drop(columns=[c for c in ("t", "J") if c in frame.columns])
    return [net.vector({int(col): float(row[col]) for col in frame.columns}) for _, row in frame.iterrows()]


def trajectory_frame(net, states) -> pd.DataFrame:
    rows = []
    for t, state in enumerate(states):
        failed = states[t - 1].active - state.active if t else frozenset()
        rows.append({
            "t": t,
            "active": len(state.active),
            "failed": " ".join(str(i) for i in sorted(failed)),
            "residual": net.residual(state.p),
        })
    return pd.DataFrame(rows, columns=["t", "active", "failed", "residual"])


def cmd_simulate(
    instance: str,
    control: str = "none",
    horizon: int | None = None,
    version: str = "latest",
    full_precision: bool = False,
) -> str:
    """
    Run the cascade of an instance under a simple control policy.

    Args:
        instance (str): Bundled instance name or path to an instance file.
        control (str): ``none``, ``proportional:<lambda>`` or ``file:<csv>``.
        horizon (int | None): Number of stages (default: until the cascade stops).
        version (str): Instance version (default: "latest").
        full_precision (bool): Print 12 decimals instead of 6 significant digits.

    Returns:
        str: CSV with one row per stage: active link count, failed links, residual load.
    """
    manager = load_instance(instance, version=version)
    net, state = manager.network, manager.state
    mode, _, arg = str(control).partition(":")

    if mode == "none":
        states = run_uncontrolled(net, state, horizon=horizon)
    elif mode == "proportional":
        if not arg:
            raise ValueError("Proportional control needs a factor, e.g. proportional:0.5.")
        u = proportional_control(state, float(arg))
        states = simulate(net, state, [u], horizon=horizon or len(net.links) + 1)
    elif mode == "file":
        states = simulate(net, state, _read_controls(arg, net), horizon=horizon)
    else:
        raise ValueError(f"Unknown control mode '{mode}'.")

    logger.info(f"Simulated {manager.name} for {len(states) - 1} stages under control '{control}'")
    return format_frame(trajectory_frame(net, states), full_precision=full_precision)


__all__ = [
    "cmd_simulate",
    "trajectory_frame",
]
