"""Named-variable linear program builder and solution container.

Model code builds programs incrementally by name; rows follow the
``family[scenario,hour]`` convention (for example ``power_balance[1987,16]``)
so that duals can be pulled back out as time series without the caller
knowing column order. All senses are "<=", ">=", or "=".
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from h2match.lp.simplex import SolveError, solve_lp

__all__ = ["LinearProgram", "Solution", "SolveError"]

_SENSES = ("<=", ">=", "=")


@dataclass
class Solution:
    """Solver output keyed by the names used to build the program.

    ``duals`` follow d(objective)/d(rhs) for the minimization, so binding
    >= rows carry nonnegative prices and binding <= rows nonpositive ones.
    ``reduced_costs`` are the matching sensitivities to a variable's
    active bound.
    """

    status: str
    objective: float
    values: dict[str, float]
    duals: dict[str, float]
    reduced_costs: dict[str, float]
    iterations: int = 0
    backend: str = "embedded"
    solve_seconds: float = 0.0
    max_violation: float = 0.0
    _series_index: Optional[dict] = field(default=None, repr=False,
                                          compare=False)

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"

    def value(self, name: str) -> float:
        return self.values[name]

    def dual(self, name: str) -> float:
        return self.duals[name]

    def reduced_cost(self, name: str) -> float:
        return self.reduced_costs[name]

    def _index_for(self, names) -> dict:
        index: dict[tuple[str, str], list[tuple[int, str]]] = {}
        for name in names:
            if not name.endswith("]") or "[" not in name:
                continue
            base, args = name[:-1].split("[", 1)
            parts = args.split(",")
            try:
                t = int(parts[-1])
            except ValueError:
                continue
            key = (base, ",".join(parts[:-1]))
            index.setdefault(key, []).append((t, name))
        for lst in index.values():
            lst.sort()
        return index

    def _series(self, mapping: Mapping[str, float], base: str,
                key: tuple) -> np.ndarray:
        if self._series_index is None:
            merged = dict.fromkeys(self.values)
            merged.update(dict.fromkeys(self.duals))
            self._series_index = self._index_for(merged)
        entries = self._series_index.get((base, ",".join(str(k) for k in key)))
        if not entries:
            raise KeyError(f"no series {base!r} with key {key!r}")
        return np.array([mapping[name] for _, name in entries])

    def value_series(self, base: str, *key) -> np.ndarray:
        """Values of ``base[key...,t]`` for ascending integer t."""
        return self._series(self.values, base, key)

    def dual_series(self, base: str, *key) -> np.ndarray:
        """Duals of ``base[key...,t]`` for ascending integer t."""
        return self._series(self.duals, base, key)


class LinearProgram:
    """Incrementally built LP: variables and rows addressed by name."""

    def __init__(self, name: str = "lp"):
        self.name = name
        self._var_names: list[str] = []
        self._var_index: dict[str, int] = {}
        self._lower: list[float] = []
        self._upper: list[float] = []
        self._cost: list[float] = []
        self._row_names: list[str] = []
        self._row_index: dict[str, int] = {}
        self._row_coeffs: list[dict[int, float]] = []
        self._senses: list[str] = []
        self._rhs: list[float] = []

    # -- construction ------------------------------------------------------

    def add_variable(self, name: str, *, lower: Optional[float] = 0.0,
                     upper: Optional[float] = None,
                     cost: float = 0.0) -> int:
        """Register a variable; ``None`` bounds mean unbounded on that side."""
        if name in self._var_index:
            raise ValueError(f"duplicate variable {name!r}")
        idx = len(self._var_names)
        self._var_index[name] = idx
        self._var_names.append(name)
        self._lower.append(-np.inf if lower is None else float(lower))
        self._upper.append(np.inf if upper is None else float(upper))
        self._cost.append(float(cost))
        return idx

    def add_constraint(self, name: str, coeffs: Mapping[str, float],
                       sense: str, rhs: float) -> int:
        if sense not in _SENSES:
            raise ValueError(f"sense must be one of {_SENSES}, got {sense!r}")
        if name in self._row_index:
            raise ValueError(f"duplicate constraint {name!r}")
        row: dict[int, float] = {}
        for var, coef in coeffs.items():
            if coef == 0.0:
                continue
            try:
                j = self._var_index[var]
            except KeyError:
                raise KeyError(f"constraint {name!r} references unknown "
                               f"variable {var!r}") from None
            row[j] = row.get(j, 0.0) + float(coef)
        idx = len(self._row_names)
        self._row_index[name] = idx
        self._row_names.append(name)
        self._row_coeffs.append(row)
        self._senses.append(sense)
        self._rhs.append(float(rhs))
        return idx

    def add_cost(self, name: str, delta: float) -> None:
        """Accumulate an objective coefficient onto an existing variable."""
        self._cost[self._var_index[name]] += float(delta)

    def set_bounds(self, name: str, *, lower: Optional[float] = None,
                   upper: Optional[float] = None) -> None:
        j = self._var_index[name]
        if lower is not None:
            self._lower[j] = float(lower)
        if upper is not None:
            self._upper[j] = float(upper)

    def has_variable(self, name: str) -> bool:
        return name in self._var_index

    def has_constraint(self, name: str) -> bool:
        return name in self._row_index

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(self._var_names)

    @property
    def constraint_names(self) -> tuple[str, ...]:
        return tuple(self._row_names)

    @property
    def n_variables(self) -> int:
        return len(self._var_names)

    @property
    def n_constraints(self) -> int:
        return len(self._row_names)

    def cost_of(self, name: str) -> float:
        return self._cost[self._var_index[name]]

    def bounds_of(self, name: str) -> tuple[float, float]:
        j = self._var_index[name]
        return self._lower[j], self._upper[j]

    def row(self, name: str) -> tuple[dict[str, float], str, float]:
        i = self._row_index[name]
        coeffs = {self._var_names[j]: v
                  for j, v in self._row_coeffs[i].items()}
        return coeffs, self._senses[i], self._rhs[i]

    # -- export ------------------------------------------------------------

    def to_arrays(self):
        """Return (c, A, senses, b, lower, upper) with A in CSR form."""
        n, m = self.n_variables, self.n_constraints
        data, rows, cols = [], [], []
        for i, row in enumerate(self._row_coeffs):
            for j, v in row.items():
                rows.append(i)
                cols.append(j)
                data.append(v)
        A = sp.csr_matrix((data, (rows, cols)), shape=(m, n))
        return (np.array(self._cost), A, tuple(self._senses),
                np.array(self._rhs), np.array(self._lower),
                np.array(self._upper))

    def emit(self, path, fmt: str = "mps") -> None:
        """Write the program to ``path`` as MPS or CPLEX-style LP text."""
        from h2match.lp import fileio

        if fmt == "mps":
            fileio.write_mps(self, path)
        elif fmt == "lp":
            fileio.write_lp(self, path)
        else:
            raise ValueError(f"unknown format {fmt!r}")

    # -- solving -----------------------------------------------------------

    def solve(self, backend: Union[str, Callable] = "embedded", *,
              feas_tol: float = 1e-7, opt_tol: float = 1e-7,
              max_iterations: Optional[int] = None,
              command: Optional[Sequence[str]] = None) -> Solution:
        """Solve and map the result back onto names.

        ``backend`` is "embedded" (built-in simplex), "external"
        (subprocess over an emitted MPS file), or a callable with the same
        signature as :func:`h2match.lp.simplex.solve_lp`.
        """
        started = time.perf_counter()
        if backend == "external":
            from h2match.lp import external

            sol = external.solve_external(self, command=command)
            sol.solve_seconds = time.perf_counter() - started
            return sol

        fn = solve_lp if backend == "embedded" else backend
        if not callable(fn):
            raise ValueError(f"unknown backend {backend!r}")
        c, A, senses, b, lo, hi = self.to_arrays()
        res = fn(c, A, senses, b, lo, hi, feas_tol=feas_tol,
                 opt_tol=opt_tol, max_iterations=max_iterations)
        elapsed = time.perf_counter() - started
        return Solution(
            status=res.status,
            objective=res.objective,
            values=dict(zip(self._var_names, map(float, res.x))),
            duals=dict(zip(self._row_names, map(float, res.duals))),
            reduced_costs=dict(zip(self._var_names,
                                   map(float, res.reduced_costs))),
            iterations=res.iterations,
            backend="embedded" if fn is solve_lp else "callable",
            solve_seconds=elapsed,
            max_violation=res.max_violation,
        )
