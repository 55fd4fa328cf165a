"""Linear programming layer: builder, embedded solver, file I/O."""

from h2match.lp.program import LinearProgram, Solution, SolveError
from h2match.lp.simplex import SimplexResult, solve_lp
from h2match.lp.fileio import read_lp, read_mps, write_lp, write_mps

__all__ = [
    "LinearProgram",
    "Solution",
    "SolveError",
    "SimplexResult",
    "solve_lp",
    "read_lp",
    "read_mps",
    "write_lp",
    "write_mps",
]
