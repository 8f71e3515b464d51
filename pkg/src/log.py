# src/log.py
import logging
import sys

ROOT_LOGGER = "kaf"
LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def get_logger(name):
    """Logger namespaced under ``kaf`` so one call configures the whole package."""
    short = name.split(".", 1)[1] if name.startswith("src.") else name
    return logging.getLogger(f"{ROOT_LOGGER}.{short}")


def configure(verbose=False):
    level = logging.DEBUG if verbose else logging.INFO
    root = logging.getLogger(ROOT_LOGGER)
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt="%H:%M:%S"))
        root.addHandler(handler)
    # stderr may have been swapped (CLI test runners) since the handler was made
    root.handlers[0].setStream(sys.stderr)
    root.setLevel(level)
    return root
