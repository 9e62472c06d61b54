"""Common utilities."""
import hashlib
import logging
from typing import Sequence, Any

import numpy as np


eps = 1e-6
inf = float("inf")

# Exit status per failure class of the command line front end.
EXIT_OK = 0
EXIT_IO = 1
EXIT_CAPACITY = 2
EXIT_DECODE_FAILURE = 3
EXIT_GAIN_SOLVE = 4
EXIT_BAD_PARAMS = 5


def build_logger(name="ssmark"):
    logger = logging.getLogger(name)
    # Module loggers inherit from the package logger.
    if "." not in name:
        logger.setLevel(logging.INFO)
    return logger


def setup_logging(verbose: int = 0):
    """Route package logs to stderr; stdout is reserved for reports."""
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logger = build_logger("ssmark")
    logger.setLevel(level)
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
    return logger


def write_csv_row(heads: Sequence[str],
                  values: Sequence[Any],
                  fout,
                  print_line: bool = False):
    """Append one comma separated row to an open file and flush it."""
    assert len(heads) == len(values)

    values = [to_str_round(x) for x in values]
    fout.write(",".join(values) + "\n")
    fout.flush()

    if print_line:
        line = ""
        for i in range(len(heads)):
            line += heads[i] + ": " + values[i] + "  "
        print(line)


def to_str_round(x: Any, decimal: int = 6):
    """Print a python object but round all floating point numbers."""
    if isinstance(x, str):
        return x
    if isinstance(x, (list, tuple, np.ndarray)):
        tmp_str = ", ".join([to_str_round(y, decimal=decimal) for y in x])
        return "[" + tmp_str + "]"
    if isinstance(x, dict):
        return str({k: to_str_round(v, decimal=decimal) for k, v in x.items()})
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.int32, np.int64, np.uint64)):
        return str(x)
    if isinstance(x, (float, np.float32, np.float64)):
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        format_str = f"%.{decimal}f"
        return format_str % x
    if x is None:
        return str(x)
    raise ValueError("Invalid value: " + str(x))


def short_digest(value: Any, length: int = 8):
    """A stable short hex digest, identical across runs and platforms."""
    h = hashlib.blake2b(str(value).encode("utf-8"), digest_size=16)
    return h.hexdigest()[:length]
