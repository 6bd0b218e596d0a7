"""Generation-structured cascade records: data model, validation and persistence.

A cascade is an ordered list of generations; generation ``g`` holds the ids of
the components that failed in that generation.  Ids are dense 0-based ints.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "CascadeError",
    "Cascade",
    "CascadeSet",
    "normalize_generations",
    "load_cascades",
    "save_cascades",
    "dumps_cascades",
    "take_prefix",
]

CSV_HEADER = ("cascade_id", "generation", "component_id")


class CascadeError(ValueError):
    """Raised when cascade data fails to parse or violates an invariant."""


def normalize_generations(generations: Iterable[Iterable[int]]) -> tuple[tuple[int, ...], ...]:
    """Sort each generation and drop trailing empty generations."""
    gens = [tuple(sorted(int(c) for c in g)) for g in generations]
    while gens and not gens[-1]:
        gens.pop()
    return tuple(gens)


@dataclass(frozen=True)
class Cascade:
    generations: tuple[tuple[int, ...], ...]

    @classmethod
    def from_lists(cls, generations: Iterable[Iterable[int]], dedupe: bool = False) -> "Cascade":
        if dedupe:
            seen: set[int] = set()
            kept = []
            for g in generations:
                fresh = []
                for c in g:
                    if c not in seen:
                        seen.add(c)
                        fresh.append(c)
                kept.append(fresh)
            generations = kept
        return cls(normalize_generations(generations))

    def validate(self, n_components: int) -> None:
        gens = self.generations
        if not gens or not gens[0]:
            raise CascadeError("generation 0 must be non-empty")
        seen: set[int] = set()
        for g, members in enumerate(gens):
            if not members:
                raise CascadeError(f"empty generation {g} before the end of the cascade")
            for c in members:
                if c < 0 or c >= n_components:
                    raise CascadeError(f"component id {c} outside [0, {n_components})")
                if c in seen:
                    raise CascadeError(f"repeated component {c}")
                seen.add(c)

    @property
    def total(self) -> int:
        return sum(len(g) for g in self.generations)

    @property
    def initial(self) -> int:
        return len(self.generations[0]) if self.generations else 0

    def __len__(self) -> int:
        return len(self.generations)

    def to_lists(self) -> list[list[int]]:
        return [list(g) for g in self.generations]


@dataclass(frozen=True)
class CascadeSet:
    n_components: int
    cascades: tuple[Cascade, ...]

    def __post_init__(self) -> None:
        if self.n_components < 1:
            raise CascadeError("n_components must be positive")
        if len(self.cascades) < 1:
            raise CascadeError("M >= 1 required")
        for m, cascade in enumerate(self.cascades):
            try:
                cascade.validate(self.n_components)
            except CascadeError as exc:
                raise CascadeError(f"cascade {m}: {exc}") from None

    @classmethod
    def from_lists(
        cls, n_components: int, cascades: Sequence[Iterable[Iterable[int]]], dedupe: bool = False
    ) -> "CascadeSet":
        return cls(int(n_components), tuple(Cascade.from_lists(c, dedupe=dedupe) for c in cascades))

    @property
    def M(self) -> int:
        return len(self.cascades)

    def __len__(self) -> int:
        return len(self.cascades)

    def __iter__(self):
        return iter(self.cascades)

    def __getitem__(self, m: int) -> Cascade:
        return self.cascades[m]

    def to_lists(self) -> list[list[list[int]]]:
        return [c.to_lists() for c in self.cascades]


def take_prefix(cs: CascadeSet, m_u: int) -> CascadeSet:
    """First ``m_u`` cascades in their original order."""
    if not 1 <= m_u <= cs.M:
        raise CascadeError(f"m_u={m_u} outside [1, {cs.M}]")
    if m_u == cs.M:
        return cs
    return CascadeSet(cs.n_components, cs.cascades[:m_u])


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt:
        fmt = fmt.lower()
    else:
        fmt = path.suffix.lstrip(".").lower()
    if fmt not in ("json", "csv"):
        raise CascadeError(f"unknown cascade format {fmt!r}; expected json or csv")
    return fmt


def _parse_json(text: str, dedupe: bool) -> CascadeSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CascadeError(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or "n_components" not in doc or "cascades" not in doc:
        raise CascadeError("JSON cascade file needs keys 'n_components' and 'cascades'")
    raw = doc["cascades"]
    if not isinstance(raw, list):
        raise CascadeError("'cascades' must be a list")
    for m, cascade in enumerate(raw):
        if not isinstance(cascade, list) or not all(isinstance(g, list) for g in cascade):
            raise CascadeError(f"record {m}: a cascade must be a list of generation lists")
        for g in cascade:
            if not all(isinstance(c, int) and not isinstance(c, bool) for c in g):
                raise CascadeError(f"record {m}: component ids must be integers")
    return CascadeSet.from_lists(doc["n_components"], raw, dedupe=dedupe)


def _parse_csv(text: str, n_components: int | None, dedupe: bool) -> CascadeSet:
    lines = text.splitlines()
    start = 0
    if lines and lines[0].startswith("#"):
        meta = lines[0].lstrip("#").strip()
        key, _, value = meta.partition(":")
        if key.strip() != "n_components":
            raise CascadeError(f"line 1: unknown metadata {meta!r}")
        try:
            n_components = int(value)
        except ValueError:
            raise CascadeError(f"line 1: bad n_components {value.strip()!r}") from None
        start = 1
    reader = csv.reader(lines[start:])
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise CascadeError(f"line {start + 1}: header must be {','.join(CSV_HEADER)}")
    grouped: dict[int, dict[int, list[int]]] = {}
    order: list[int] = []
    max_id = -1
    for lineno, row in enumerate(reader, start=start + 2):
        if not row:
            continue
        if len(row) != 3:
            raise CascadeError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            m, g, c = (int(x) for x in row)
        except ValueError:
            raise CascadeError(f"line {lineno}: non-integer field") from None
        if g < 0:
            raise CascadeError(f"line {lineno}: negative generation")
        if m not in grouped:
            grouped[m] = {}
            order.append(m)
        grouped[m].setdefault(g, []).append(c)
        max_id = max(max_id, c)
    cascades = []
    for m in order:
        gens = grouped[m]
        depth = max(gens) + 1
        cascades.append([gens.get(g, []) for g in range(depth)])
    if n_components is None:
        n_components = max_id + 1
    return CascadeSet.from_lists(n_components, cascades, dedupe=dedupe)


def load_cascades(
    path: str | Path,
    fmt: str | None = None,
    *,
    n_components: int | None = None,
    dedupe: bool = False,
) -> CascadeSet:
    """Read a cascade file.

    CSV files carry ``n_components`` in an optional ``# n_components: N`` first
    line; without it the ``n_components`` argument is used, falling back to
    ``max id + 1``.  ``dedupe`` keeps only the first occurrence of a component
    that fails more than once in a cascade.
    """
    path = Path(path)
    fmt = _infer_format(path, fmt)
    text = path.read_text(encoding="utf-8")
    if fmt == "json":
        return _parse_json(text, dedupe)
    return _parse_csv(text, n_components, dedupe)


def dumps_cascades(cs: CascadeSet, fmt: str = "json") -> str:
    if fmt == "json":
        # one cascade per line keeps large files diffable
        body = ",\n".join("  " + json.dumps(c.to_lists(), separators=(",", ":")) for c in cs.cascades)
        return '{"n_components": %d, "cascades": [\n%s\n]}\n' % (cs.n_components, body)
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# n_components: {cs.n_components}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for m, cascade in enumerate(cs.cascades):
            for g, members in enumerate(cascade.generations):
                for c in members:
                    writer.writerow((m, g, c))
        return buf.getvalue()
    raise CascadeError(f"unknown cascade format {fmt!r}")


def save_cascades(cs: CascadeSet, path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = _infer_format(path, fmt)
    path.write_text(dumps_cascades(cs, fmt), encoding="utf-8")
