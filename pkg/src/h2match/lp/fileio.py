"""MPS and LP-text serialization for :class:`LinearProgram`.

Both writers emit shortest round-trip float representations and both
parsers reconstruct a program with identical variable/row ordering,
bounds, costs, and coefficients, so write -> read -> write is a fixed
point. Free-format MPS is used (names are whitespace-delimited, so row
names like ``power_balance[1987,4]`` survive).
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

from h2match.lp.program import LinearProgram

__all__ = ["write_mps", "read_mps", "write_lp", "read_lp"]

_OBJ = "COST"


def _num(v: float) -> str:
    return repr(float(v))


def _checked_names(program: LinearProgram):
    for name in (*program.variable_names, *program.constraint_names):
        if any(ch.isspace() for ch in name):
            raise ValueError(f"name {name!r} contains whitespace and cannot "
                             "be serialized")
        if name.upper() == _OBJ:
            raise ValueError(f"name {name!r} collides with the objective row")


def write_mps(program: LinearProgram, path: Union[str, Path]) -> None:
    _checked_names(program)
    c, A, senses, b, lo, hi = program.to_arrays()
    rows = program.constraint_names
    cols = program.variable_names
    sense_tag = {"<=": "L", ">=": "G", "=": "E"}
    csc = A.tocsc()

    out = [f"NAME {program.name}", "ROWS", f" N {_OBJ}"]
    for name, s in zip(rows, senses):
        out.append(f" {sense_tag[s]} {name}")
    out.append("COLUMNS")
    for j, var in enumerate(cols):
        out.append(f" {var} {_OBJ} {_num(c[j])}")
        start, end = csc.indptr[j], csc.indptr[j + 1]
        order = sorted(range(start, end), key=lambda k: csc.indices[k])
        for k in order:
            out.append(f" {var} {rows[csc.indices[k]]} {_num(csc.data[k])}")
    out.append("RHS")
    for i, name in enumerate(rows):
        if b[i] != 0.0:
            out.append(f" RHS1 {name} {_num(b[i])}")
    out.append("BOUNDS")
    inf = float("inf")
    for j, var in enumerate(cols):
        l, u = lo[j], hi[j]
        if l == u:
            out.append(f" FX BND1 {var} {_num(l)}")
        elif l == -inf and u == inf:
            out.append(f" FR BND1 {var}")
        else:
            if l == -inf:
                out.append(f" MI BND1 {var}")
            elif l != 0.0:
                out.append(f" LO BND1 {var} {_num(l)}")
            if u != inf:
                out.append(f" UP BND1 {var} {_num(u)}")
    out.append("ENDATA")
    Path(path).write_text("\n".join(out) + "\n")


def read_mps(path: Union[str, Path]) -> LinearProgram:
    lines = Path(path).read_text().splitlines()
    program = LinearProgram()
    section = None
    obj_row = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    row_coeffs: dict[str, dict[str, float]] = {}
    rhs: dict[str, float] = {}
    tag_sense = {"L": "<=", "G": ">=", "E": "="}
    inf = float("inf")

    for raw in lines:
        if raw.startswith("*") or not raw.strip():
            continue
        head = raw.split(None, 1)[0].upper()
        if not raw[0].isspace() and head in ("NAME", "ROWS", "COLUMNS", "RHS",
                                             "RANGES", "BOUNDS", "ENDATA",
                                             "OBJSENSE"):
            section = head
            if head == "NAME":
                parts = raw.split()
                program.name = parts[1] if len(parts) > 1 else "lp"
            elif head == "RANGES":
                raise ValueError("RANGES sections are not supported")
            continue
        tokens = raw.split()
        if section == "ROWS":
            tag, name = tokens[0].upper(), tokens[1]
            if tag == "N":
                if obj_row is None:
                    obj_row = name
                continue
            row_sense[name] = tag_sense[tag]
            row_order.append(name)
            row_coeffs[name] = {}
        elif section == "COLUMNS":
            var = tokens[0]
            if not program.has_variable(var):
                program.add_variable(var, lower=0.0, upper=None, cost=0.0)
            for rname, val in zip(tokens[1::2], tokens[2::2]):
                coef = float(val)
                if rname == obj_row:
                    program.add_cost(var, coef)
                else:
                    entry = row_coeffs[rname]
                    entry[var] = entry.get(var, 0.0) + coef
        elif section == "RHS":
            for rname, val in zip(tokens[1::2], tokens[2::2]):
                if rname == obj_row:
                    raise ValueError("objective constants are not supported")
                rhs[rname] = float(val)
        elif section == "BOUNDS":
            tag = tokens[0].upper()
            var = tokens[2]
            if not program.has_variable(var):
                program.add_variable(var, lower=0.0, upper=None, cost=0.0)
            if tag == "FR":
                program.set_bounds(var, lower=-inf, upper=inf)
            elif tag == "MI":
                program.set_bounds(var, lower=-inf)
            elif tag == "PL":
                program.set_bounds(var, upper=inf)
            elif tag == "FX":
                v = float(tokens[3])
                program.set_bounds(var, lower=v, upper=v)
            elif tag == "LO":
                program.set_bounds(var, lower=float(tokens[3]))
            elif tag == "UP":
                program.set_bounds(var, upper=float(tokens[3]))
            else:
                raise ValueError(f"unsupported bound tag {tag!r}")

    for name in row_order:
        program.add_constraint(name, row_coeffs[name], row_sense[name],
                               rhs.get(name, 0.0))
    return program


# -- CPLEX-style LP text -----------------------------------------------------


def _terms(coeffs: dict[str, float]) -> str:
    parts = []
    for var, coef in coeffs.items():
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_num(abs(coef))} {var}")
    return " ".join(parts) if parts else "+ 0.0 _zero_"


def _wrap(prefix: str, body: str, width: int = 78) -> list[str]:
    words = body.split()
    lines = [prefix]
    for w in words:
        if len(lines[-1]) + 1 + len(w) > width and lines[-1].strip():
            lines.append("   ")
        lines[-1] += " " + w
    return lines


def write_lp(program: LinearProgram, path: Union[str, Path]) -> None:
    _checked_names(program)
    c, A, senses, b, lo, hi = program.to_arrays()
    cols = program.variable_names
    out = [f"\\ Problem: {program.name}", "Minimize"]
    obj = {cols[j]: c[j] for j in range(len(cols)) if c[j] != 0.0}
    out.extend(_wrap(" obj:", _terms(obj) if obj else "+ 0.0 " + cols[0]
                     if cols else "0"))
    out.append("Subject To")
    sense_txt = {"<=": "<=", ">=": ">=", "=": "="}
    for i, rname in enumerate(program.constraint_names):
        coeffs, sense, rhs_v = program.row(rname)
        body = f"{_terms(coeffs)} {sense_txt[sense]} {_num(rhs_v)}"
        out.extend(_wrap(f" {rname}:", body))
    out.append("Bounds")
    inf = float("inf")
    for j, var in enumerate(cols):
        l, u = lo[j], hi[j]
        if l == u:
            out.append(f" {var} = {_num(l)}")
        elif l == -inf and u == inf:
            out.append(f" {var} free")
        else:
            ltxt = "-inf" if l == -inf else _num(l)
            utxt = "+inf" if u == inf else _num(u)
            out.append(f" {ltxt} <= {var} <= {utxt}")
    out.append("End")
    Path(path).write_text("\n".join(out) + "\n")


def _parse_terms(tokens: list[str], program: LinearProgram,
                 create_missing: bool) -> dict[str, float]:
    coeffs: dict[str, float] = {}
    sign = 1.0
    coef: float = None  # type: ignore[assignment]
    for tok in tokens:
        if tok == "+":
            sign = 1.0 if coef is None else sign
            continue
        if tok == "-":
            sign = -sign if coef is not None else -1.0
            continue
        try:
            v = float(tok)
        except ValueError:
            v = None
        if v is not None:
            coef = v if coef is None else coef * v
            continue
        value = sign * (1.0 if coef is None else coef)
        if tok != "_zero_":
            if create_missing and not program.has_variable(tok):
                program.add_variable(tok, lower=0.0, upper=None, cost=0.0)
            coeffs[tok] = coeffs.get(tok, 0.0) + value
        sign, coef = 1.0, None
    return coeffs


def read_lp(path: Union[str, Path]) -> LinearProgram:
    program = LinearProgram()
    text = Path(path).read_text()
    lines = []
    for raw in text.splitlines():
        if raw.startswith("\\ Problem:"):
            program.name = raw.split(":", 1)[1].strip()
            continue
        body = raw.split("\\", 1)[0].rstrip()
        if body.strip():
            lines.append(body)

    section = None
    pending: list[str] = []
    pending_name: str = ""
    inf = float("inf")
    rows: list[tuple[str, list[str]]] = []

    def flush():
        nonlocal pending_name
        if pending:
            rows.append((pending_name, list(pending)))
            pending.clear()
        pending_name = ""

    for line in lines:
        word = line.strip().lower()
        if word in ("minimize", "min"):
            section = "obj"
            continue
        if word in ("maximize", "max"):
            raise ValueError("maximization is not supported")
        if word in ("subject to", "such that", "st", "s.t."):
            flush()
            section, pending_name = "rows", ""
            continue
        if word == "bounds":
            flush()
            section = "bounds"
            continue
        if word == "end":
            flush()
            section = None
            continue
        if section == "obj":
            chunk = line.strip()
            if ":" in chunk:
                chunk = chunk.split(":", 1)[1]
            pending_name = "obj"
            pending.extend(chunk.split())
        elif section == "rows":
            chunk = line.strip()
            if ":" in chunk:
                flush()
                pending_name, chunk = chunk.split(":", 1)
                pending_name = pending_name.strip()
            pending.extend(chunk.split())
        elif section == "bounds":
            toks = line.split()
            if len(toks) == 2 and toks[1].lower() == "free":
                _ensure(program, toks[0])
                program.set_bounds(toks[0], lower=-inf, upper=inf)
            elif len(toks) == 3 and toks[1] == "=":
                _ensure(program, toks[0])
                v = float(toks[2])
                program.set_bounds(toks[0], lower=v, upper=v)
            elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
                var = toks[2]
                _ensure(program, var)
                l = -inf if toks[0] in ("-inf", "-infinity") else float(toks[0])
                u = inf if toks[4] in ("+inf", "inf", "+infinity") \
                    else float(toks[4])
                program.set_bounds(var, lower=l, upper=u)
            elif len(toks) == 3 and toks[1] in ("<=", ">="):
                _ensure(program, toks[0])
                if toks[1] == "<=":
                    program.set_bounds(toks[0], upper=float(toks[2]))
                else:
                    program.set_bounds(toks[0], lower=float(toks[2]))
            else:
                raise ValueError(f"cannot parse bounds line {line!r}")

    # objective first, then constraint rows in order of appearance
    for name, tokens in rows:
        if name == "obj":
            for var, coef in _parse_terms(tokens, program, True).items():
                program.add_cost(var, coef)
            continue
        sense_pos = next(i for i, t in enumerate(tokens)
                         if t in ("<=", ">=", "="))
        coeffs = _parse_terms(tokens[:sense_pos], program, True)
        rhs = float(tokens[sense_pos + 1])
        program.add_constraint(name, coeffs, tokens[sense_pos], rhs)
    return program


def _ensure(program: LinearProgram, var: str) -> None:
    if not program.has_variable(var):
        program.add_variable(var, lower=0.0, upper=None, cost=0.0)
