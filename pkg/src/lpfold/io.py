"""Reading and writing MPS instances, solution files, and the postsolve-map
archive that makes reductions reversible offline.

MPS is free-format with exact rational parsing; archives are versioned
line-oriented text and are the source of truth for postsolve (MPS cannot
carry rationals, archives can).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .milpfold import AtuLedger, LinkedPart
from .model import (
    BiPartition,
    Part,
    Polarity,
    Problem,
    RowSense,
    SparseMatrix,
)
from .netmat import NetworkMode
from .rationals import (
    Bound,
    NEG_INF,
    POS_INF,
    Rational,
    format_exact,
    format_mps,
    is_finite,
    normalize,
    parse_bound,
    parse_rational,
)


class MpsParseError(Exception):
    def __init__(self, message: str, line_no: int = 0):
        super().__init__(f"line {line_no}: {message}" if line_no else message)
        self.line_no = line_no


class ArchiveError(Exception):
    pass


_BOUND_CODES = {"LO", "UP", "FX", "FR", "MI", "PL", "BV", "LI", "UI"}


def read_mps(path: str) -> Problem:
    """Parse free-format MPS exactly.

    Supports NAME, OBJSENSE, ROWS (N/E/L/G), COLUMNS with INTORG/INTEND
    markers, RHS (an entry on the objective row stores the negated offset),
    RANGES (materialized as an equality row plus a bounded slack column),
    and BOUNDS.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()

    name = "problem"
    maximize = False
    obj_row: Optional[str] = None
    row_order: List[str] = []
    row_sense: Dict[str, RowSense] = {}
    col_order: List[str] = []
    col_entries: Dict[str, Dict[str, Rational]] = {}
    col_integral: Dict[str, bool] = {}
    objective: Dict[str, Rational] = {}
    rhs: Dict[str, Rational] = {}
    ranges: Dict[str, Rational] = {}
    bounds: Dict[str, List[Tuple[str, Optional[Rational], int]]] = {}
    offset: Rational = 0

    section = None
    integer_mode = False
    expect_objsense = False

    def number(text: str, line_no: int) -> Rational:
        try:
            return parse_rational(text)
        except (ValueError, ZeroDivisionError):
            raise MpsParseError(f"bad numeric literal {text!r}", line_no)

    for line_no, raw in enumerate(lines, start=1):
        if raw.startswith("*"):
            continue
        stripped = raw.rstrip("\n")
        if not stripped.strip():
            continue
        is_header = not stripped[0].isspace()
        tokens = stripped.split()
        if is_header:
            head = tokens[0].upper()
            if head == "NAME":
                name = tokens[1] if len(tokens) > 1 else name
                section = None
            elif head == "OBJSENSE":
                section = "OBJSENSE"
                expect_objsense = True
                if len(tokens) > 1:
                    maximize = tokens[1].upper().startswith("MAX")
                    expect_objsense = False
            elif head in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
                section = head
                integer_mode = False
            elif head == "ENDATA":
                section = "DONE"
                break
            else:
                raise MpsParseError(f"unknown section {tokens[0]!r}", line_no)
            continue
        if section == "OBJSENSE" and expect_objsense:
            maximize = tokens[0].upper().startswith("MAX")
            expect_objsense = False
            continue
        if section == "ROWS":
            if len(tokens) != 2:
                raise MpsParseError("ROWS line needs sense and name", line_no)
            sense, rname = tokens[0].upper(), tokens[1]
            if rname in row_sense or rname == obj_row:
                raise MpsParseError(f"duplicate row {rname!r}", line_no)
            if sense == "N":
                if obj_row is not None:
                    raise MpsParseError("multiple objective (N) rows", line_no)
                obj_row = rname
            elif sense in ("E", "L", "G"):
                row_order.append(rname)
                row_sense[rname] = RowSense(sense)
            else:
                raise MpsParseError(f"unknown row sense {tokens[0]!r}", line_no)
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].upper() == "'MARKER'":
                marker = tokens[2].strip("'").upper()
                if marker == "INTORG":
                    integer_mode = True
                elif marker == "INTEND":
                    integer_mode = False
                else:
                    raise MpsParseError(f"unknown marker {tokens[2]!r}", line_no)
                continue
            if len(tokens) not in (3, 5):
                raise MpsParseError("COLUMNS line needs 1 or 2 (row, value) pairs", line_no)
            cname = tokens[0]
            if cname not in col_entries:
                col_order.append(cname)
                col_entries[cname] = {}
                col_integral[cname] = integer_mode
            for k in range(1, len(tokens), 2):
                rname, val = tokens[k], number(tokens[k + 1], line_no)
                if rname == obj_row:
                    if cname in objective:
                        raise MpsParseError(f"duplicate objective entry for {cname!r}", line_no)
                    objective[cname] = val
                elif rname in row_sense:
                    if rname in col_entries[cname]:
                        raise MpsParseError(f"duplicate entry ({rname!r}, {cname!r})", line_no)
                    if val != 0:
                        col_entries[cname][rname] = val
                else:
                    raise MpsParseError(f"unknown row {rname!r}", line_no)
        elif section == "RHS":
            if len(tokens) not in (3, 5):
                raise MpsParseError("RHS line needs 1 or 2 (row, value) pairs", line_no)
            for k in range(1, len(tokens), 2):
                rname, val = tokens[k], number(tokens[k + 1], line_no)
                if rname == obj_row:
                    offset = normalize(-val)
                elif rname in row_sense:
                    if rname in rhs:
                        raise MpsParseError(f"duplicate RHS for {rname!r}", line_no)
                    rhs[rname] = val
                else:
                    raise MpsParseError(f"unknown row {rname!r}", line_no)
        elif section == "RANGES":
            if len(tokens) not in (3, 5):
                raise MpsParseError("RANGES line needs 1 or 2 (row, value) pairs", line_no)
            for k in range(1, len(tokens), 2):
                rname, val = tokens[k], number(tokens[k + 1], line_no)
                if rname not in row_sense:
                    raise MpsParseError(f"unknown row {rname!r}", line_no)
                if rname in ranges:
                    raise MpsParseError(f"duplicate range for {rname!r}", line_no)
                ranges[rname] = val
        elif section == "BOUNDS":
            code = tokens[0].upper()
            if code not in _BOUND_CODES:
                raise MpsParseError(f"unknown bound code {tokens[0]!r}", line_no)
            if code in ("FR", "MI", "PL", "BV"):
                if len(tokens) < 3:
                    raise MpsParseError("bound line needs set and column", line_no)
                cname, val = tokens[2], None
            else:
                if len(tokens) < 4:
                    raise MpsParseError("bound line needs a value", line_no)
                cname, val = tokens[2], number(tokens[3], line_no)
            if cname not in col_entries and cname not in objective:
                raise MpsParseError(f"unknown column {cname!r}", line_no)
            bounds.setdefault(cname, []).append((code, val, line_no))
        elif section in (None, "DONE"):
            raise MpsParseError("data outside any section", line_no)

    if obj_row is None:
        raise MpsParseError("no objective (N) row")

    nrows, ncols = len(row_order), len(col_order)
    row_index = {r: i for i, r in enumerate(row_order)}
    mat_entries = []
    for j, cname in enumerate(col_order):
        for rname, val in col_entries[cname].items():
            mat_entries.append((row_index[rname], j, val))
    lower: List[Bound] = [0] * ncols
    upper: List[Bound] = [POS_INF] * ncols
    integral = {j for j, c in enumerate(col_order) if col_integral[c]}
    for j, cname in enumerate(col_order):
        for code, val, line_no in bounds.get(cname, ()):
            if code == "LO":
                lower[j] = val
            elif code == "UP":
                upper[j] = val
            elif code == "FX":
                lower[j] = upper[j] = val
            elif code == "FR":
                lower[j], upper[j] = NEG_INF, POS_INF
            elif code == "MI":
                lower[j] = NEG_INF
            elif code == "PL":
                upper[j] = POS_INF
            elif code == "BV":
                lower[j], upper[j] = 0, 1
                integral.add(j)
            elif code == "LI":
                lower[j] = val
                integral.add(j)
            elif code == "UI":
                upper[j] = val
                integral.add(j)

    sense_list = [row_sense[r] for r in row_order]
    rhs_list: List[Rational] = [rhs.get(r, 0) for r in row_order]
    obj_list: List[Rational] = [objective.get(c, 0) for c in col_order]
    if maximize:
        obj_list = [normalize(-c) for c in obj_list]
        offset = normalize(-offset)

    # materialize RANGES as equality rows with bounded slacks
    extra_cols = 0
    for rname, rng in ranges.items():
        i = row_index[rname]
        sense = sense_list[i]
        b = rhs_list[i]
        mag = rng if rng >= 0 else -rng
        if sense is RowSense.LE:
            lo_act, hi_act = normalize(b - mag), b
        elif sense is RowSense.GE:
            lo_act, hi_act = b, normalize(b + mag)
        else:
            if rng >= 0:
                lo_act, hi_act = b, normalize(b + mag)
            else:
                lo_act, hi_act = normalize(b - mag), b
        sense_list[i] = RowSense.EQ
        rhs_list[i] = hi_act
        j = ncols + extra_cols
        mat_entries.append((i, j, 1))
        col_order.append(f"{rname}__rng")
        lower.append(0)
        upper.append(normalize(hi_act - lo_act))
        obj_list.append(0)
        extra_cols += 1
    ncols += extra_cols

    matrix = SparseMatrix.from_entries(nrows, ncols, mat_entries)
    return Problem(
        matrix=matrix, rhs=rhs_list, lower=lower, upper=upper,
        objective=obj_list, row_sense=sense_list, integral=frozenset(integral),
        objective_offset=offset, row_names=row_order, col_names=col_order,
        name=name,
    )


def write_mps(problem: Problem, path: str) -> None:
    """Byte-deterministic free-format MPS writer (minimize sense)."""
    lines: List[str] = [f"NAME          {problem.name}", "ROWS", " N  OBJ"]
    for i, rname in enumerate(problem.row_names):
        lines.append(f" {problem.row_sense[i].value}  {rname}")
    lines.append("COLUMNS")
    integer_mode = False
    marker_id = 0
    for j, cname in enumerate(problem.col_names):
        want_int = j in problem.integral
        if want_int != integer_mode:
            marker_id += 1
            kind = "INTORG" if want_int else "INTEND"
            lines.append(f"    MARKER{marker_id:<4}  'MARKER'                 '{kind}'")
            integer_mode = want_int
        pairs: List[Tuple[str, Rational]] = []
        if problem.objective[j]:
            pairs.append(("OBJ", problem.objective[j]))
        for i in sorted(problem.matrix.cols[j]):
            pairs.append((problem.row_names[i], problem.matrix.cols[j][i]))
        if not pairs:
            pairs.append(("OBJ", 0))  # keep empty columns present in the file
        for rname, val in pairs:
            lines.append(f"    {cname:<10}{rname:<10}{format_mps(val)}")
    if integer_mode:
        marker_id += 1
        lines.append(f"    MARKER{marker_id:<4}  'MARKER'                 'INTEND'")
    lines.append("RHS")
    if problem.objective_offset:
        lines.append(f"    RHS       OBJ       {format_mps(-problem.objective_offset)}")
    for i, rname in enumerate(problem.row_names):
        if problem.rhs[i]:
            lines.append(f"    RHS       {rname:<10}{format_mps(problem.rhs[i])}")
    bound_lines: List[str] = []
    for j, cname in enumerate(problem.col_names):
        lo, hi = problem.lower[j], problem.upper[j]
        if lo == 0 and hi == POS_INF:
            continue
        if j in problem.integral and lo == 0 and hi == 1:
            bound_lines.append(f" BV BND       {cname}")
            continue
        if is_finite(lo) and lo == hi:
            bound_lines.append(f" FX BND       {cname:<10}{format_mps(lo)}")
            continue
        if lo == NEG_INF and hi == POS_INF:
            bound_lines.append(f" FR BND       {cname}")
            continue
        if lo == NEG_INF:
            bound_lines.append(f" MI BND       {cname}")
        elif lo != 0:
            bound_lines.append(f" LO BND       {cname:<10}{format_mps(lo)}")
        if is_finite(hi):
            bound_lines.append(f" UP BND       {cname:<10}{format_mps(hi)}")
    if bound_lines:
        lines.append("BOUNDS")
        lines.extend(bound_lines)
    lines.append("ENDATA")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class PostsolveArchive:
    """Self-contained recipe for mapping reduced solutions back.

    Carries the bi-partition with signs, the affine offset, the coarse ATU
    linking data, and the source column names (structural variables first,
    internal slack columns after)."""

    mode: str  # "lp" | "lp-reflect" | "milp"
    network: str  # "none" | "network" | "transposed"
    original_shape: Tuple[int, int, int]
    n_structural: int
    source_col_names: List[str]
    partition: BiPartition
    delta: List[Rational]
    reduced_offset: Rational
    ledger: Optional[AtuLedger] = None
    version: int = 1

    def reduced_col_names(self) -> List[str]:
        return [self.source_col_names[p.members[0]]
                for p in self.partition.unipolar_col_parts()]


def write_archive(archive: PostsolveArchive, path: str) -> None:
    out: List[str] = [f"LPFOLD-ARCHIVE {archive.version}",
                      f"mode {archive.mode}",
                      f"network {archive.network}",
                      "shape {} {} {}".format(*archive.original_shape),
                      f"structural {archive.n_structural}",
                      "[COLS]"]
    out.extend(archive.source_col_names)
    out.append("[PARTS]")
    for p in archive.partition.col_parts:
        kind = "bipolar-col" if p.polarity is Polarity.BIPOLAR else "col"
        out.append(f"{kind} {','.join(map(str, p.members))}")
    for p in archive.partition.row_parts:
        kind = "bipolar-row" if p.polarity is Polarity.BIPOLAR else "row"
        out.append(f"{kind} {','.join(map(str, p.members))}")
    out.append("[SIGNS]")
    for p in archive.partition.col_parts:
        if p.polarity is Polarity.UNIPOLAR:
            out.append(f"col {p.members[0]} {','.join(map(str, p.signs))}")
    for p in archive.partition.row_parts:
        if p.polarity is Polarity.UNIPOLAR:
            out.append(f"row {p.members[0]} {','.join(map(str, p.signs))}")
    out.append("[DELTA]")
    for w, d in enumerate(archive.delta):
        if d:
            out.append(f"{w} {format_exact(d)}")
    out.append("[OFFSET]")
    out.append(format_exact(archive.reduced_offset))
    out.append("[LEDGER]")
    if archive.ledger is not None:
        led = archive.ledger
        out.append(f"vr {','.join(map(str, sorted(led.v_r)))}")
        for lp in led.linked:
            cancel = ";".join(f"{v}:{format_exact(a)}" for v, a in sorted(lp.cancel.items()))
            out.append(f"link {','.join(map(str, lp.cols))} "
                       f"{','.join(map(str, lp.signs))} {cancel}")
        for cols in led.free_aggregated:
            out.append(f"free {','.join(map(str, cols))}")
        out.append(f"netcols {','.join(map(str, led.network_cols))}")
        out.append(f"individualized {','.join(map(str, led.individualized))}")
    out.append("[END]")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def _ints(text: str) -> Tuple[int, ...]:
    return tuple(int(t) for t in text.split(",")) if text else ()


def read_archive(path: str) -> PostsolveArchive:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith("LPFOLD-ARCHIVE"):
        raise ArchiveError(f"{path}: not an lpfold archive")
    version = int(lines[0].split()[1])
    if version != 1:
        raise ArchiveError(f"{path}: unsupported archive version {version}")
    mode = network = ""
    shape = (0, 0, 0)
    structural = 0
    idx = 1
    while idx < len(lines) and not lines[idx].startswith("["):
        key, *rest = lines[idx].split()
        if key == "mode":
            mode = rest[0]
        elif key == "network":
            network = rest[0]
        elif key == "shape":
            shape = (int(rest[0]), int(rest[1]), int(rest[2]))
        elif key == "structural":
            structural = int(rest[0])
        else:
            raise ArchiveError(f"{path}: unknown header line {lines[idx]!r}")
        idx += 1

    sections: Dict[str, List[str]] = {}
    current = None
    for ln in lines[idx:]:
        if ln.startswith("[") and ln.endswith("]"):
            current = ln[1:-1]
            sections[current] = []
        elif current is not None and ln:
            sections[current].append(ln)
    for required in ("COLS", "PARTS", "SIGNS", "DELTA", "OFFSET"):
        if required not in sections:
            raise ArchiveError(f"{path}: missing [{required}] section")

    col_names = sections["COLS"]
    ncols = len(col_names)
    col_signs: Dict[int, Tuple[int, ...]] = {}
    row_signs: Dict[int, Tuple[int, ...]] = {}
    for ln in sections["SIGNS"]:
        kind, anchor, signs = ln.split()
        target = col_signs if kind == "col" else row_signs
        target[int(anchor)] = _ints(signs)
    col_parts: List[Part] = []
    row_parts: List[Part] = []
    nrows = shape[0]
    for ln in sections["PARTS"]:
        kind, members_text = ln.split()
        members = _ints(members_text)
        if kind == "col":
            col_parts.append(Part(members, Polarity.UNIPOLAR, col_signs[members[0]]))
        elif kind == "bipolar-col":
            col_parts.append(Part(members, Polarity.BIPOLAR, None))
        elif kind == "row":
            row_parts.append(Part(members, Polarity.UNIPOLAR, row_signs[members[0]]))
        elif kind == "bipolar-row":
            row_parts.append(Part(members, Polarity.BIPOLAR, None))
        else:
            raise ArchiveError(f"{path}: bad part line {ln!r}")
    partition = BiPartition(nrows, ncols, tuple(row_parts), tuple(col_parts))

    delta: List[Rational] = [0] * ncols
    for ln in sections["DELTA"]:
        w, val = ln.split()
        delta[int(w)] = parse_rational(val)
    reduced_offset = parse_rational(sections["OFFSET"][0])

    ledger = None
    if mode == "milp":
        led = AtuLedger(
            NetworkMode.NETWORK if network == "network" else NetworkMode.TRANSPOSED,
            frozenset())
        for ln in sections.get("LEDGER", ()):
            key, _, rest = ln.partition(" ")
            if key == "vr":
                led.v_r = frozenset(_ints(rest))
            elif key == "link":
                cols_text, signs_text, cancel_text = (rest.split() + ["", ""])[:3]
                cancel = {}
                if cancel_text:
                    for item in cancel_text.split(";"):
                        v, a = item.split(":")
                        cancel[int(v)] = parse_rational(a)
                led.linked.append(LinkedPart(_ints(cols_text), _ints(signs_text), cancel))
            elif key == "free":
                led.free_aggregated.append(_ints(rest))
            elif key == "netcols":
                led.network_cols = _ints(rest)
            elif key == "individualized":
                led.individualized = _ints(rest)
        ledger = led

    return PostsolveArchive(
        mode=mode, network=network, original_shape=shape,
        n_structural=structural, source_col_names=col_names,
        partition=partition, delta=delta, reduced_offset=reduced_offset,
        ledger=ledger, version=version,
    )


def write_solution(names: Sequence[str], values: Sequence[Bound], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for name, val in zip(names, values):
            fh.write(f"{name} {format_exact(val)}\n")


def read_solution(path: str) -> Dict[str, Rational]:
    out: Dict[str, Rational] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip() or raw.startswith("#"):
                continue
            parts = raw.split()
            if len(parts) != 2:
                raise MpsParseError("solution lines are '<name> <value>'", line_no)
            out[parts[0]] = parse_rational(parts[1])
    return out
