"""Theory files: a key=value header followed by ``N n`` and ``W n`` series blocks."""

from __future__ import annotations

import datetime as _dt
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, TextIO

from .normalizer import OrderStats, TransformTheory
from .series import Series, poly_class

FORMAT_VERSION = 1
_STAT_FIELDS = ("n", "w_terms", "max_w_coeff", "residual_ratio", "n_terms", "seconds", "max_digits")


def _block(kind: str, n: int, poly, backend: str) -> list[str]:
    lines = [f"{kind} {n}"]
    if not poly.is_zero():
        lines += Series(backend, {n: poly}).to_lines()
    return lines


def theory_lines(theory: TransformTheory, timestamp: str | None = None) -> list[str]:
    stamp = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    lines = [
        f"format={FORMAT_VERSION}",
        f"order={theory.order}",
        f"backend={theory.backend}",
        f"map={theory.map_label}",
        f"built={stamp}",
        f"restricted={int(theory.restricted)}",
        f"detuned={int(theory.delta_detuned)}",
    ]
    for s in theory.stats:
        row = asdict(s)
        lines.append("stat=" + " ".join(f"{row[k]!r}" for k in _STAT_FIELDS))
    for n, p in enumerate(theory.N):
        lines += _block("N", n, p, theory.backend)
    for n, p in enumerate(theory.W, start=1):
        lines += _block("W", n, p, theory.backend)
    return lines


def write_theory(theory: TransformTheory, path: str | Path, timestamp: str | None = None) -> None:
    Path(path).write_text("\n".join(theory_lines(theory, timestamp)) + "\n")


def _stat(text: str) -> OrderStats:
    values = text.split()
    if len(values) != len(_STAT_FIELDS):
        raise ValueError(f"malformed stat line: {text!r}")
    kinds = (int, int, float, float, int, float, int)
    return OrderStats(*(k(v) for k, v in zip(kinds, values)))


def parse_theory(lines: Iterable[str]) -> TransformTheory:
    header: dict[str, str] = {}
    stats: list[OrderStats] = []
    blocks: dict[tuple[str, int], list[str]] = {}
    current: list[str] | None = None
    for raw in lines:
        line = raw.strip()
        if not line:
            continue
        if line[0].isdigit():
            if current is None:
                raise ValueError("series line before the first block header")
            current.append(line)
        elif line[0] in "NW" and " " in line and "=" not in line:
            kind, n = line.split()
            current = blocks.setdefault((kind, int(n)), [])
        elif "=" in line:
            key, value = line.split("=", 1)
            if key == "stat":
                stats.append(_stat(value))
            else:
                header[key] = value
        else:
            raise ValueError(f"unrecognized theory line: {line!r}")
    for key in ("order", "backend", "map"):
        if key not in header:
            raise ValueError(f"theory file lacks the {key}= header")
    if int(header.get("format", FORMAT_VERSION)) != FORMAT_VERSION:
        raise ValueError(f"unsupported theory format {header['format']}")
    order, backend = int(header["order"]), header["backend"]
    if backend not in ("exact", "float"):
        raise ValueError(f"unknown backend {backend!r}")

    def poly(kind: str, n: int):
        body = blocks.get((kind, n))
        if body is None:
            raise ValueError(f"theory file lacks block {kind} {n}")
        return Series.from_lines(backend, body).bucket(n) if body else poly_class(backend).zero()

    N = [poly("N", n) for n in range(order + 1)]
    W = [poly("W", n) for n in range(1, order + 1)]
    return TransformTheory(order, backend, header["map"], N, W, stats,
                           restricted=header.get("restricted", "0") == "1",
                           delta_detuned=header.get("detuned", "1") == "1")


def read_theory(path: str | Path) -> TransformTheory:
    with open(path) as fh:
        return parse_theory(fh)


def dump(theory: TransformTheory, fh: TextIO) -> None:
    fh.write("\n".join(theory_lines(theory)) + "\n")


__all__ = ["FORMAT_VERSION", "theory_lines", "write_theory", "parse_theory", "read_theory", "dump"]
