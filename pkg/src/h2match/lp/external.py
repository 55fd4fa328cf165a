"""Out-of-process solver backend.

``solve_external`` serializes a program to MPS, runs a solver command in a
subprocess, and parses the JSON solution it writes. The contract for the
command is::

    <command...> <input.mps> <output.json>

where the JSON output holds ``status`` (optimal | infeasible | unbounded |
iteration_limit), ``objective``, and ``values`` / ``duals`` /
``reduced_costs`` keyed by variable/row name, with duals following the
d(objective)/d(rhs) convention for a minimization.

Running this module itself (``python -m h2match.lp.external in.mps
out.json``) provides a reference command backed by scipy's HiGHS
interface, which is what the default backend uses. It exercises a fully
independent simplex implementation, so agreement with the embedded solver
is a real cross-check rather than a change of file format.
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from h2match.lp.program import LinearProgram, Solution
from h2match.lp.simplex import SolveError

__all__ = ["solve_external", "solve_with_scipy", "main"]

_DEFAULT_TIMEOUT = 1800.0


def default_command() -> list[str]:
    return [sys.executable, "-m", "h2match.lp.external"]


def solve_external(program: LinearProgram,
                   command: Optional[Sequence[str]] = None,
                   timeout: float = _DEFAULT_TIMEOUT) -> Solution:
    cmd = list(command) if command else default_command()
    with tempfile.TemporaryDirectory(prefix="h2match_lp_") as tmp:
        mps = Path(tmp) / "problem.mps"
        out = Path(tmp) / "solution.json"
        program.emit(mps, fmt="mps")
        proc = subprocess.run([*cmd, str(mps), str(out)],
                              capture_output=True, text=True,
                              timeout=timeout)
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout or "").strip()[-2000:]
            raise SolveError(f"external solver failed "
                             f"(exit {proc.returncode}): {tail}")
        try:
            payload = json.loads(out.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SolveError("external solver wrote no readable "
                             f"solution: {exc}") from exc

    values = {n: float(payload.get("values", {}).get(n, 0.0))
              for n in program.variable_names}
    duals = {n: float(payload.get("duals", {}).get(n, 0.0))
             for n in program.constraint_names}
    rcs = {n: float(payload.get("reduced_costs", {}).get(n, 0.0))
           for n in program.variable_names}
    return Solution(status=str(payload.get("status", "error")),
                    objective=float(payload.get("objective", float("nan"))),
                    values=values, duals=duals, reduced_costs=rcs,
                    iterations=int(payload.get("iterations", 0)),
                    backend="external")


def solve_with_scipy(program: LinearProgram) -> dict:
    """Solve via scipy.optimize.linprog (HiGHS) and return the JSON payload."""
    from scipy.optimize import linprog

    c, A, senses, b, lo, hi = program.to_arrays()
    senses = np.asarray(senses)
    le = senses == "<="
    ge = senses == ">="
    eq = senses == "="

    A_csr = A.tocsr()
    A_ub = b_ub = A_eq = b_eq = None
    ub_rows = np.nonzero(le | ge)[0]
    if ub_rows.size:
        flip = np.where(ge[ub_rows], -1.0, 1.0)
        import scipy.sparse as sp
        A_ub = sp.diags(flip) @ A_csr[ub_rows]
        b_ub = flip * b[ub_rows]
    eq_rows = np.nonzero(eq)[0]
    if eq_rows.size:
        A_eq = A_csr[eq_rows]
        b_eq = b[eq_rows]

    bounds = [(None if np.isneginf(l) else l, None if np.isposinf(u) else u)
              for l, u in zip(lo, hi)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")

    status = {0: "optimal", 1: "iteration_limit", 2: "infeasible",
              3: "unbounded"}.get(res.status, "error")
    names = program.variable_names
    rows = program.constraint_names
    values = {}
    duals = {n: 0.0 for n in rows}
    rcs = {}
    if res.x is not None:
        x = np.asarray(res.x, dtype=float).copy()
        pinned = lo == hi  # pinned variables report their bound exactly
        x[pinned] = lo[pinned]
        values = dict(zip(names, map(float, x)))
    if status == "optimal":
        # marginals are d(obj)/d(rhs) of the rows as passed; undo the
        # sign flip applied to >= rows
        if ub_rows.size:
            marg = res.ineqlin.marginals
            for k, i in enumerate(ub_rows):
                duals[rows[i]] = float(marg[k] * (-1.0 if ge[i] else 1.0))
        if eq_rows.size:
            for k, i in enumerate(eq_rows):
                duals[rows[i]] = float(res.eqlin.marginals[k])
        rc = res.lower.marginals + res.upper.marginals
        rcs = dict(zip(names, map(float, rc)))
    return {"status": status,
            "objective": float(res.fun) if res.fun is not None
            else float("nan"),
            "values": values, "duals": duals, "reduced_costs": rcs,
            "iterations": int(getattr(res, "nit", 0) or 0)}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if len(argv) != 2:
        print("usage: python -m h2match.lp.external input.mps output.json",
              file=sys.stderr)
        return 2
    from h2match.lp.fileio import read_mps

    program = read_mps(argv[0])
    payload = solve_with_scipy(program)
    Path(argv[1]).write_text(json.dumps(payload))
    return 0


if __name__ == "__main__":
    sys.exit(main())
