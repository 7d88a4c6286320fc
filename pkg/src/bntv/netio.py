"""JSON net documents.

    {"n": 2, "alphabet": 2, "parents": [[], [0]],
     "cpt": [[["2/3", "1/3"]], [[0.9, 0.1], [0.5, 0.5]]]}

``cpt[i][r][s]`` is Pr[X_i = s | parents = r-th assignment], rows row-major
over the declared parent order, 0-based throughout. A probability is a JSON
number or a string "a/b" (or "a"). Coupling nets carry an extra
``"pair_base"`` field holding the base alphabet.
"""
from __future__ import annotations

import json
from decimal import Decimal
from fractions import Fraction

import numpy as np

from .errors import ParseError
from .model import BayesNet, Cpt, Dag


def _parse_prob(v, loc):
    if isinstance(v, bool):
        raise ParseError("probability must be a number or an 'a/b' string", loc)
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad rational {v!r}", loc) from None
    if isinstance(v, (int, Decimal)):
        return v
    raise ParseError("probability must be a number or an 'a/b' string", loc)


def _int_field(doc, key):
    if key not in doc:
        raise ParseError(f"missing field {key!r}")
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError("expected an integer", f"$.{key}")
    return v


def parse_net(data, exact: bool | None = None) -> BayesNet:
    """Parse a net document.

    ``exact=None`` stores the net exactly when every probability is written as
    a rational string (or integer), otherwise as float64. ``exact=True`` keeps
    decimals at their written decimal value as Fractions.
    """
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data, parse_float=Decimal)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", f"line {e.lineno} column {e.colno}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    n = _int_field(doc, "n")
    ell = _int_field(doc, "alphabet")
    if n < 1:
        raise ParseError("n must be >= 1", "$.n")
    if ell < 2:
        raise ParseError("alphabet must be >= 2", "$.alphabet")
    parents = doc.get("parents")
    if not isinstance(parents, list) or len(parents) != n:
        raise ParseError(f"expected a list of {n} parent lists", "$.parents")
    for i, ps in enumerate(parents):
        if not isinstance(ps, list) or any(isinstance(p, bool) or not isinstance(p, int) for p in ps):
            raise ParseError("parent list must be a list of integers", f"$.parents[{i}]")
        for j, p in enumerate(ps):
            if not 0 <= p < n:
                raise ParseError(f"parent index {p} out of range", f"$.parents[{i}][{j}]")
    cpt = doc.get("cpt")
    if not isinstance(cpt, list) or len(cpt) != n:
        raise ParseError(f"expected a list of {n} tables", "$.cpt")
    raw = []
    all_rational = True
    for i, rows in enumerate(cpt):
        want = ell ** len(parents[i])
        if not isinstance(rows, list) or len(rows) != want:
            raise ParseError(f"expected {want} rows", f"$.cpt[{i}]")
        tab = []
        for r, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != ell:
                raise ParseError(f"expected a row of {ell} probabilities", f"$.cpt[{i}][{r}]")
            vals = [_parse_prob(v, f"$.cpt[{i}][{r}][{s}]") for s, v in enumerate(row)]
            all_rational &= not any(isinstance(v, Decimal) for v in vals)
            tab.append(vals)
        raw.append(tab)
    pair_base = doc.get("pair_base")
    if pair_base is not None and (not isinstance(pair_base, int) or pair_base * pair_base != ell):
        raise ParseError("pair_base must satisfy pair_base**2 == alphabet", "$.pair_base")
    use_exact = all_rational if exact is None else exact
    cpts = []
    for i, tab in enumerate(raw):
        if use_exact:
            arr = np.empty((len(tab), ell), dtype=object)
            for r, row in enumerate(tab):
                for s, v in enumerate(row):
                    arr[r, s] = Fraction(v)
        else:
            arr = np.array([[float(v) for v in row] for row in tab], dtype=np.float64)
        cpts.append(Cpt(i, arr))
    return BayesNet(Dag(n, tuple(tuple(ps) for ps in parents)), ell, tuple(cpts), pair_base=pair_base)


def _fmt(v):
    if isinstance(v, Fraction):
        return str(v)
    return float(v)


def net_to_dict(net: BayesNet) -> dict:
    doc = {
        "n": net.n,
        "alphabet": net.alphabet,
        "parents": [list(ps) for ps in net.parents],
        "cpt": [[[_fmt(v) for v in row] for row in c.table] for c in net.cpts],
    }
    if net.pair_base is not None:
        doc["pair_base"] = net.pair_base
    return doc


def serialize_net(net: BayesNet) -> bytes:
    """Canonical form: fixed key order, one node table per line."""
    doc = net_to_dict(net)
    lines = ["{", f'  "n": {doc["n"]},', f'  "alphabet": {doc["alphabet"]},']
    if "pair_base" in doc:
        lines.append(f'  "pair_base": {doc["pair_base"]},')
    lines.append(f'  "parents": {json.dumps(doc["parents"])},')
    lines.append('  "cpt": [')
    tabs = [f"    {json.dumps(t)}" for t in doc["cpt"]]
    lines.append(",\n".join(tabs))
    lines.append("  ]")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def canonicalize(data) -> bytes:
    return serialize_net(parse_net(data))


def load_net(path, exact: bool | None = None) -> BayesNet:
    with open(path, "rb") as fh:
        return parse_net(fh.read(), exact=exact)


def save_net(net: BayesNet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_net(net))
