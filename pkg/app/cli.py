"""Command-line entry: subcommands and exit codes."""

import pandas as pd
from fire import Fire
from pydantic import ValidationError

from models import InstanceManager
from simulate import cmd_simulate
from solve import cmd_solve
from table1 import cmd_table1
from utils.data import format_frame
from utils.errors import InfeasibilityError, InstanceParseError
from utils.logs import set_logger


logger = set_logger(__name__)

EXIT_PARSE = 2
EXIT_INFEASIBLE = 3


def cmd_instances() -> str:
    """
    List bundled instances and their versions.
    """
    rows = [{"name": name, "versions": " ".join(versions)} for name, versions in InstanceManager.available().items()]
    return format_frame(pd.DataFrame(rows, columns=["name", "versions"]))


def main(argv: list[str] | None = None) -> int:
    try:
        Fire({
            "simulate": cmd_simulate,
            "solve": cmd_solve,
            "table1": cmd_table1,
            "instances": cmd_instances,
        }, command=argv)
    except (InstanceParseError, ValidationError) as e:
        logger.error(f"Parse error: {e}")
        return EXIT_PARSE
    except InfeasibilityError as e:
        logger.error(f"Infeasible: {e}")
        return EXIT_INFEASIBLE
    return 0


__all__ = [
    "EXIT_PARSE",
    "EXIT_INFEASIBLE",
    "cmd_instances",
    "main",
]
