import argparse
import json
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from exact_arith import parse_rational, rational_str

DEFAULT_SEED = 0
DEFAULT_N_JOBS = 1
BANNER = "-" * 83
STATUSES = ("pass", "fail", "witness")


def parse_rational_arg(text):
    """argparse type for exact rationals written as ``N`` or ``N/D``.

    Parameters
    ----------
    text : str
        The command-line value.

    Returns
    -------
    QQ element
        The parsed rational.

    Raises
    ------
    argparse.ArgumentTypeError
        If the value is not an exact rational.
    """
    try:
        return parse_rational(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def parse_window(text):
    """argparse type for a label window ``LO:HI`` with LO < HI."""
    parts = str(text).split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("Window must be LO:HI, got {!r}".format(text))
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError("Window bounds must be integers, got {!r}".format(text)) from None
    if lo >= hi:
        raise argparse.ArgumentTypeError("Window {!r} is empty".format(text))
    return lo, hi


def make_rng(seed=DEFAULT_SEED):
    return np.random.default_rng(seed)


def format_parameters(parameters):
    """Exact strings for rational parameters, ``"symbolic"`` when none are fixed."""
    if parameters is None:
        return "symbolic"
    return {name: (value if isinstance(value, str) else rational_str(value)) for name, value in parameters.items()}


@dataclass
class Report:
    """One verification record; ``to_dict`` fixes the field order."""
    check: str
    status: str
    payload: dict = field(default_factory=dict)
    sector: str = None
    parameters: object = None
    timing: float = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError("Unknown report status: {}".format(self.status))

    @property
    def passed(self):
        return self.status != "fail"

    def to_dict(self):
        return {
            "check": self.check,
            "sector": self.sector,
            "parameters": format_parameters(self.parameters),
            "status": self.status,
            "payload": self.payload,
            "timing": None if self.timing is None else "{:.3f}".format(self.timing),
        }


def status_of(ok):
    return "pass" if ok else "fail"


def canonical_json(reports):
    """Serialize reports deterministically: insertion-ordered keys, two-space indent."""
    document = [r.to_dict() if isinstance(r, Report) else r for r in reports]
    return json.dumps(document, indent=2) + "\n"


def write_report(reports, path):
    outdir = os.path.dirname(path)
    if outdir and not os.path.isdir(outdir):
        os.makedirs(outdir)
    with open(path, "w") as out:
        out.write(canonical_json(reports))


def results_table(rows, columns):
    """Plain-text table of report rows for terminal output."""
    if not rows:
        return "(no rows)"
    df = pd.DataFrame(rows, columns=columns)
    return df.to_string(index=False)


def print_banner(title):
    print(BANNER, flush=True)
    print(title, flush=True)
    print(BANNER, flush=True)
