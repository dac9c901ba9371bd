"""Per-module loggers writing a dated file log and a console stream."""

import logging, os
from datetime import datetime

from dotenv import load_dotenv


load_dotenv()

FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


def _log_file(name: str) -> str:
    day_dir = os.path.join(os.getenv("LOG_DIR", "logs"), datetime.now().strftime('%Y%m%d'))
    os.makedirs(day_dir, exist_ok=True)
    return os.path.join(day_dir, f"{name}.log")


def set_logger(name: str) -> logging.Logger:
    """
    Logger with a DEBUG file handler under ``$LOG_DIR/<YYYYMMDD>/<name>.log``
    and a console handler at ``$LOG_LEVEL`` (default INFO).

    Args:
        name (str): Logger name, usually ``__name__``.

    Returns:
        logging.Logger: The configured logger; repeated calls reuse its handlers.
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)
    if logger.handlers:
        return logger

    formatter = logging.Formatter(FORMAT)
    file_handler = logging.FileHandler(_log_file(name), encoding="utf-8")
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(os.getenv("LOG_LEVEL", "INFO").upper())
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # root handlers would print every record twice
    logging.getLogger().handlers.clear()

    return logger


__all__ = ['set_logger']
