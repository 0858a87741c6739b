"""Readers and writers for the plain-text files used by the command line."""

import numpy as np

from .grouping import MetaFeatureSet
from .losses import ClassScores
from .numerics import InvalidInputError


class ParseError(InvalidInputError):
    def __init__(self, path, line, col, msg):
        self.path, self.line, self.col = path, line, col
        super().__init__(f"{path}:{line}:{col}: {msg}")


def fmt(value):
    """Fixed 9-significant-digit rendering for printed loss and summary values."""
    return f"{value:.9g}"


def fmt_precise(value):
    """15 significant digits, for outputs compared against oracles."""
    return f"{value:.15g}"


def exact(value):
    """Shortest round-trip decimal for written data files."""
    return repr(float(value))


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def _floats(path, lineno, text, start_field=0):
    fields = text.split(",")
    values = []
    col = 1
    for i, raw in enumerate(fields):
        if i >= start_field:
            try:
                values.append(float(raw))
            except ValueError:
                raise ParseError(path, lineno, col, f"cannot parse {raw.strip()!r} as a number") from None
        col += len(raw) + 1
    return fields, values


def read_scores(path) -> ClassScores:
    """``true_label=<index>`` on the first line, comma-separated scores on the second."""
    lines = [(i + 1, ln) for i, ln in enumerate(_read_lines(path))
             if ln.strip() and not ln.lstrip().startswith("#")]
    if len(lines) != 2:
        raise ParseError(path, lines[-1][0] if lines else 1, 1,
                         "expected a true_label line followed by one line of scores")
    (n1, head), (n2, body) = lines
    key, sep, val = head.partition("=")
    if key.strip() != "true_label" or not sep:
        raise ParseError(path, n1, 1, "expected 'true_label=<index>'")
    try:
        label = int(val)
    except ValueError:
        raise ParseError(path, n1, len(key) + 2, f"cannot parse {val.strip()!r} as an index") from None
    _, scores = _floats(path, n2, body)
    try:
        return ClassScores(scores, label)
    except InvalidInputError as exc:
        raise ParseError(path, n2, 1, str(exc)) from None


def read_features(path) -> MetaFeatureSet:
    """Header ``category,f0,f1,...`` then one row per category."""
    lines = _read_lines(path)
    if not lines or not lines[0].startswith("category"):
        raise ParseError(path, 1, 1, "expected header 'category,<f0>,<f1>,...'")
    width = len(lines[0].split(",")) - 1
    names, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields, values = _floats(path, lineno, line, start_field=1)
        if len(values) != width:
            raise ParseError(path, lineno, 1, f"expected {width} feature values, found {len(values)}")
        names.append(fields[0].strip())
        rows.append(values)
    if not rows:
        raise ParseError(path, len(lines) + 1, 1, "no category rows")
    try:
        return MetaFeatureSet(names, np.array(rows))
    except InvalidInputError as exc:
        raise ParseError(path, 2, 1, str(exc)) from None


def format_features(x: MetaFeatureSet) -> str:
    head = "category," + ",".join(f"f{i}" for i in range(x.feature_dim))
    rows = [name + "," + ",".join(exact(v) for v in row)
            for name, row in zip(x.categories, x.features)]
    return "\n".join([head, *rows]) + "\n"


def read_ap_table(path):
    """Rows of ``class,ap``; an optional header row is skipped."""
    names, aps = [], []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise ParseError(path, lineno, 1, "expected 'class,ap'")
        if lineno == 1 and fields[1].strip().lower() == "ap":
            continue
        _, (ap,) = _floats(path, lineno, line, start_field=1)
        if not 0.0 <= ap <= 100.0:
            raise ParseError(path, lineno, len(fields[0]) + 2, f"AP {ap} outside [0, 100]")
        name = fields[0].strip()
        if name in names:
            raise ParseError(path, lineno, 1, f"duplicate class {name!r}")
        names.append(name)
        aps.append(ap)
    return names, np.array(aps)


def format_trace(trace) -> str:
    k = len(trace[0].w_mean_std) if trace else 0
    head = ["iteration", "loss", *(f"w_mean_std_{j + 1}" for j in range(k)),
            "min_mean_gap", "min_std_gap"]
    lines = [",".join(head)]
    for r in trace:
        lines.append(",".join([str(r.iteration), exact(r.loss),
                               *(exact(w) for w in r.w_mean_std),
                               exact(r.min_mean_gap), exact(r.min_std_gap)]))
    return "\n".join(lines) + "\n"


def format_histogram(categories, counts, edges) -> str:
    head = "category," + ",".join(f"{edges[b]:.6g}:{edges[b + 1]:.6g}"
                                  for b in range(len(edges) - 1))
    rows = [name + "," + ",".join(str(int(c)) for c in row)
            for name, row in zip(categories, counts)]
    return "\n".join([head, *rows]) + "\n"
