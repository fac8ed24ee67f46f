"""Output writers: RFC-4180 CSV, static SVG, JSON run manifest."""

import csv
import json
import platform

import numpy as np
from matplotlib.figure import Figure

from .. import __version__


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def save_svg(fig, path, comment):
    """Save a figure as SVG with a data comment after the XML prolog."""
    fig.savefig(path, format="svg", metadata={"Date": None})
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    comment = comment.replace("--", "- -")
    head, sep, rest = text.partition("?>")
    text = f"{head}{sep}\n<!-- ntkgauss {__version__}\n{comment}\n-->{rest}" if sep else text
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def new_figure(width=6.0, height=4.0):
    fig = Figure(figsize=(width, height))
    return fig, fig.add_subplot(1, 1, 1)


def write_manifest(path, payload):
    info = {
        "ntkgauss": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"versions": info, **payload}, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")
