"""Delimited output and companion figures for the experiment drivers.

CSV files are the contract: fixed column order, C locale, floats at
full precision so reruns are byte-comparable.  Each CSV gets a rendered
PNG next to it showing the same numbers (error curves for convergence
tables, energy and mass traces for time series); the figures are a
convenience and carry no data of their own.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import ErrorReport

DIAG_COLUMNS = ("step", "time", "energy_system", "energy_algorithm",
                "mass", "diss_omega", "diss_u", "diss_curlB", "diss_divB",
                "newton_iters")


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.16e}"


class CsvWriter:
    """Line-buffered CSV emission so aborted runs keep partial output."""

    def __init__(self, path, columns):
        self.columns = tuple(columns)
        self._handle = open(path, "w", encoding="ascii", newline="\n")
        self._handle.write(",".join(self.columns) + "\n")
        self._handle.flush()

    def row(self, values):
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, "
                             f"got {len(values)}")
        self._handle.write(",".join(_fmt(v) for v in values) + "\n")
        self._handle.flush()

    def close(self):
        self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def convergence_columns():
    cols = ["h", "dt"]
    for name in ErrorReport.NAMES:
        cols.append(f"err_{name}")
        cols.append(f"rate_{name}")
    return tuple(cols)


def write_convergence_csv(path, table):
    """Emit a rate table; rates of the first row are left empty."""
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        handle.write(",".join(convergence_columns()) + "\n")
        for i, (h, dt) in enumerate(zip(table.h, table.dt)):
            cells = [_fmt(h), _fmt(dt)]
            for name in ErrorReport.NAMES:
                cells.append(_fmt(table.errors[name][i]))
                rate = table.rates[name][i]
                cells.append("" if np.isnan(rate) else _fmt(rate))
            handle.write(",".join(cells) + "\n")


def plot_convergence(path, table, title):
    """Log-log error curves against h, one line per tracked norm."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    h = np.asarray(table.h)
    for name in ErrorReport.NAMES:
        ax.loglog(h, table.errors[name], marker="o", label=name)
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_diagnostics(path, rows, title):
    """Energy decay and mass drift traces from diagnostics rows."""
    data = np.array([[float(v) for v in row] for row in rows])
    cols = {name: data[:, i] for i, name in enumerate(DIAG_COLUMNS)}
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.0, 5.5),
                                      sharex=True)
    top.plot(cols["time"], cols["energy_system"], lw=1.2)
    top.set_ylabel("energy")
    top.grid(alpha=0.3)
    top.set_title(title)
    drift = cols["mass"] - cols["mass"][0]
    bottom.plot(cols["time"], drift, lw=1.2)
    bottom.set_ylabel("mass drift")
    bottom.set_xlabel("time")
    bottom.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
