"""Corrective security-constrained multi-objective OPF for hybrid
AC/VSC-MTDC grids: coupled AC/DC power flow, Lasso-based contingency
filtering, indicator-based bi-criterion evolution and integrated
decision analysis."""

from . import decide, evo, netmodel, opfcore, powerflow, run, screen

__version__ = "0.1.0"

__all__ = ["decide", "evo", "netmodel", "opfcore", "powerflow", "run",
           "screen", "__version__"]
