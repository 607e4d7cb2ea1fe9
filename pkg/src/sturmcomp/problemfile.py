"""Problem files: a small sectioned text format.

Example::

    # comparison target
    [interval]
    a = 0
    b = pi
    [coefficients]
    p = 1
    q = k - 1 - x
    [params]
    k = 1.672
    [gauge]
    F_deriv = 0.3
    G_deriv = 0.6

Lines are ``key = value`` inside a ``[section]``; ``#`` starts a comment.
The ``[potential]`` section also takes lines ``jump at=<x> weight=<w>``.
Exactly one of ``[coefficients]``, ``[potential]`` and ``[jacobi]`` must be
present.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coeffs import CoefficientError, CoefficientSet, GaugeFunction, coefficient_set
from .expr import ParseError, parse_expr

__all__ = ["ProblemFile", "ProblemFileError", "load_problem", "parse_problem"]

SECTIONS = {
    "interval": {"a", "b", "singular"},
    "coefficients": {"p", "q", "r", "s", "breakpoints"},
    "params": None,  # any name
    "gauge": {"F_deriv", "G_deriv", "F_at_a", "G_at_a"},
    "potential": {"V", "breakpoints"},
    "jacobi": {"N0", "N1", "alpha", "v", "beta"},
}
KINDS = ("coefficients", "potential", "jacobi")
# sections that may accompany each problem kind
COMPANIONS = {
    "coefficients": {"interval", "params", "gauge"},
    "potential": {"interval", "params"},
    "jacobi": {"params"},
}

_SECTION_RE = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_KEY_RE = re.compile(r"^([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(.*)$")
_JUMP_RE = re.compile(r"^jump\s+at\s*=\s*(\S+)\s+weight\s*=\s*(\S+)$")
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z_0-9]*$")


class ProblemFileError(ValueError):
    """Input error naming the file, section and line at fault."""

    def __init__(self, source: str, message: str, section: str | None = None, line: int | None = None):
        where = source
        if section:
            where += f": [{section}]"
        if line:
            where += f": line {line}"
        super().__init__(f"{where}: {message}")


@dataclass
class ProblemFile:
    source: str
    sections: dict = field(default_factory=dict)  # name -> {key: (value, line)}
    jumps: list = field(default_factory=list)  # (at text, weight text, line)

    @property
    def kind(self) -> str:
        return next(k for k in KINDS if k in self.sections)

    def _err(self, message, section=None, line=None):
        return ProblemFileError(self.source, message, section, line)

    def get(self, section: str, key: str, default=None):
        entry = self.sections.get(section, {}).get(key)
        return default if entry is None else entry[0]

    def line_of(self, section: str, key: str):
        entry = self.sections.get(section, {}).get(key)
        return None if entry is None else entry[1]

    @property
    def params(self) -> dict[str, float]:
        out = {}
        for name, (text, line) in self.sections.get("params", {}).items():
            try:
                out[name] = _constant(text, out)
            except (ParseError, ValueError) as exc:
                raise self._err(f"{name}: {exc}", "params", line) from exc
        return out

    def number(self, section: str, key: str, default=None) -> float:
        text = self.get(section, key)
        if text is None:
            if default is None:
                raise self._err(f"missing {key}", section)
            return default
        try:
            return _constant(text, self.params)
        except (ParseError, ValueError) as exc:
            raise self._err(f"{key}: {exc}", section, self.line_of(section, key)) from exc

    def interval(self) -> tuple[float, float, tuple[bool, bool]]:
        if "interval" not in self.sections:
            raise self._err("missing [interval] section")
        a, b = self.number("interval", "a"), self.number("interval", "b")
        if not a < b:
            raise self._err(f"need a < b, got a = {a}, b = {b}", "interval")
        text = (self.get("interval", "singular") or "none").replace(",", " ").split()
        bad = [t for t in text if t not in ("a", "b", "none")]
        if bad:
            raise self._err(f"singular takes a, b or none, got {bad[0]!r}", "interval", self.line_of("interval", "singular"))
        return a, b, ("a" in text, "b" in text)

    def breakpoints(self, section: str) -> list[float]:
        text = self.get(section, "breakpoints")
        if not text:
            return []
        params = self.params
        try:
            return [_constant(t, params) for t in text.replace(",", " ").split()]
        except (ParseError, ValueError) as exc:
            raise self._err(f"breakpoints: {exc}", section, self.line_of(section, "breakpoints")) from exc

    def coefficient_set(self, tol: float) -> CoefficientSet:
        if self.kind != "coefficients":
            raise self._err("expected a [coefficients] problem")
        a, b, sing = self.interval()
        bps = self.breakpoints("coefficients")
        params = self.params
        texts = {k: self.get("coefficients", k, "1" if k == "p" else "0") for k in "pqrs"}
        for k, text in texts.items():
            pieces = text.split("|")
            if len(pieces) > 1 and len(pieces) != len(bps) + 1:
                raise self._err(f"{k} has {len(pieces)} pieces but {len(bps)} breakpoints", "coefficients", self.line_of("coefficients", k))
        try:
            return coefficient_set(a, b, params=params, breakpoints=bps, singular=sing, tol=tol, **texts)
        except ParseError as exc:
            raise self._err(str(exc), "coefficients") from exc
        except (CoefficientError, ValueError) as exc:
            raise self._err(str(exc), "coefficients") from exc

    def gauges(self, a: float, b: float) -> tuple[GaugeFunction, GaugeFunction] | None:
        if "gauge" not in self.sections:
            return None
        params = self.params
        out = []
        for name in ("F", "G"):
            text = self.get("gauge", f"{name}_deriv", "0")
            start = self.number("gauge", f"{name}_at_a", 0.0)
            try:
                out.append(GaugeFunction.parse(a, b, text, start, params))
            except (ParseError, ValueError) as exc:
                raise self._err(f"{name}_deriv: {exc}", "gauge", self.line_of("gauge", f"{name}_deriv")) from exc
        return out[0], out[1]

    def potential(self):
        from .distributional import PotentialAntiderivative

        if self.kind != "potential":
            raise self._err("expected a [potential] problem")
        a, b, _ = self.interval()
        params = self.params
        jumps = []
        for at, w, line in self.jumps:
            try:
                jumps.append((_constant(at, params), _constant(w, params)))
            except (ParseError, ValueError) as exc:
                raise self._err(f"jump: {exc}", "potential", line) from exc
        try:
            return PotentialAntiderivative.from_parts(
                a, b, self.get("potential", "V", "0"), jumps, params, self.breakpoints("potential")
            )
        except (ParseError, ValueError) as exc:
            raise self._err(str(exc), "potential") from exc

    def jacobi(self):
        from .jacobi import JacobiProblem

        if self.kind != "jacobi":
            raise self._err("expected a [jacobi] problem")
        sec = "jacobi"
        ints = {}
        for key in ("N0", "N1"):
            text = self.get(sec, key)
            if text is None:
                raise self._err(f"missing {key}", sec)
            try:
                ints[key] = int(text)
            except ValueError:
                raise self._err(f"{key} must be an integer, got {text!r}", sec, self.line_of(sec, key)) from None
        rows = {}
        for key in ("alpha", "v", "beta"):
            text = self.get(sec, key)
            if text is None:
                continue
            try:
                rows[key] = np.array([_constant(t, self.params) for t in text.replace(",", " ").split()])
            except (ParseError, ValueError) as exc:
                raise self._err(f"{key}: {exc}", sec, self.line_of(sec, key)) from exc
        if "alpha" not in rows:
            raise self._err("missing alpha", sec)
        if ("v" in rows) == ("beta" in rows):
            raise self._err("give exactly one of v and beta", sec)
        try:
            if "v" in rows:
                return JacobiProblem(ints["N0"], ints["N1"], rows["alpha"], rows["v"])
            return JacobiProblem.from_beta(ints["N0"], ints["N1"], rows["alpha"], rows["beta"])
        except ValueError as exc:
            raise self._err(str(exc), sec) from exc


def _constant(text: str, params) -> float:
    expr = parse_expr(text, params)
    if expr.depends_on_x():
        raise ValueError(f"{text!r} must not depend on x")
    value = float(expr(0.0))
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def parse_problem(text: str, source: str = "<string>") -> ProblemFile:
    """Parse problem-file text; raises :class:`ProblemFileError`."""
    pf = ProblemFile(source)
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1)
            if section not in SECTIONS:
                raise ProblemFileError(source, f"unknown section [{section}]", line=lineno)
            if section in pf.sections:
                raise ProblemFileError(source, f"duplicate section [{section}]", line=lineno)
            pf.sections[section] = {}
            continue
        if section is None:
            raise ProblemFileError(source, "content before the first section", line=lineno)
        m = _JUMP_RE.match(line)
        if m and section == "potential":
            pf.jumps.append((m.group(1), m.group(2), lineno))
            continue
        m = _KEY_RE.match(line)
        if not m:
            raise ProblemFileError(source, f"cannot read {line!r}", section, lineno)
        key, value = m.group(1), m.group(2).strip()
        allowed = SECTIONS[section]
        if allowed is not None and key not in allowed:
            raise ProblemFileError(source, f"unknown key {key!r}", section, lineno)
        if key in pf.sections[section]:
            raise ProblemFileError(source, f"duplicate key {key!r}", section, lineno)
        if not value:
            raise ProblemFileError(source, f"empty value for {key!r}", section, lineno)
        pf.sections[section][key] = (value, lineno)
    kinds = [k for k in KINDS if k in pf.sections]
    if len(kinds) != 1:
        found = ", ".join(f"[{k}]" for k in kinds) or "none"
        raise ProblemFileError(source, f"need exactly one of [coefficients], [potential], [jacobi]; found {found}")
    extra = sorted(set(pf.sections) - COMPANIONS[kinds[0]] - {kinds[0]})
    if extra:
        raise ProblemFileError(source, f"section [{extra[0]}] has no meaning in a [{kinds[0]}] problem")
    return pf


def load_problem(path: str | Path) -> ProblemFile:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except OSError as exc:
        raise ProblemFileError(str(path), f"cannot read file: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise ProblemFileError(str(path), f"not UTF-8 (byte {exc.start})") from exc
    return parse_problem(text, str(path))
