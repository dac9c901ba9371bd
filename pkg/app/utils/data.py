"""Utils for data load and save (instance YAML, JSON reports, CSV tables)"""

import os, json, yaml

import pandas as pd

from .errors import InstanceParseError
from .logs import set_logger


logger = set_logger(__name__)

LINE_KEY = "__line__"


class _LineLoader(yaml.SafeLoader):
    """SafeLoader that records the 1-based source line of every mapping."""

    def construct_mapping(self, node, deep=False):
        mapping = super().construct_mapping(node, deep=deep)
        mapping[LINE_KEY] = node.start_mark.line + 1
        return mapping


def load_yaml(file_path, track_lines: bool = False) -> dict:
    """
    Load a YAML document.

    Args:
        file_path (str): Path of the YAML file.
        track_lines (bool): Annotate every mapping with its source line under ``__line__``.

    Returns:
        dict: Parsed document (empty dict for an empty file).

    Raises:
        InstanceParseError: If the file is not valid YAML.
    """
    loader = _LineLoader if track_lines else yaml.SafeLoader
    with open(file_path, 'r', encoding='utf-8') as stream:
        try:
            yaml_dict = yaml.load(stream, Loader=loader)
        except yaml.MarkedYAMLError as exc:
            line = exc.problem_mark.line + 1 if exc.problem_mark else None
            logger.error(f"YAML error in {file_path}: {exc}")
            raise InstanceParseError(str(exc.problem), line=line) from exc
    return yaml_dict or {}


def strip_lines(data):
    """Remove ``__line__`` annotations recursively."""
    if isinstance(data, dict):
        return {k: strip_lines(v) for k, v in data.items() if k != LINE_KEY}
    if isinstance(data, list):
        return [strip_lines(v) for v in data]
    return data


def save_yaml(file_path, data: dict):
    os.makedirs(os.path.dirname(file_path) or ".", exist_ok=True)
    with open(file_path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(data, f, sort_keys=False, allow_unicode=True)


def load_json(file_path) -> dict:
    with open(file_path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    return data


# -------------- Data Saving -------------
def save_json(filename, ds):
    os.makedirs(os.path.dirname(filename) or ".", exist_ok=True)
    with open(filename, 'w', encoding="utf-8") as f:
        json.dump(ds, f, ensure_ascii=False, indent=4)


def format_frame(frame: pd.DataFrame, full_precision: bool = False) -> str:
    """
    Render a frame as CSV text with 6 significant digits (or 1e-12 resolution).

    Args:
        frame (pd.DataFrame): Table to render.
        full_precision (bool): Use 12 decimals instead of 6 significant digits.

    Returns:
        str: CSV text without the index column.
    """
    float_format = "%.12f" if full_precision else "%.6g"
    return frame.to_csv(index=False, float_format=float_format, lineterminator="\n")


def save_csv(filename, frame: pd.DataFrame, full_precision: bool = False):
    os.makedirs(os.path.dirname(filename) or ".", exist_ok=True)
    with open(filename, 'w', encoding="utf-8", newline="") as f:
        f.write(format_frame(frame, full_precision=full_precision))
    logger.debug(f"CSV saved at {filename}")


__all__ = [
    "LINE_KEY",
    "load_yaml",
    "strip_lines",
    "save_yaml",
    "load_json",
    "save_json",
    "format_frame",
    "save_csv",
]
