"""Resource caps for the exponential searches.

Defaults can be overridden through environment variables, e.g.
``EPPAKIT_MAX_VERTICES=50000``.  Every field maps to ``EPPAKIT_<FIELD>``.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Caps:
    # largest witness that may be materialised
    max_vertices: int = 40_000
    # relation tuples of a materialised witness
    max_tuples: int = 12_000_000
    # node budget for a single backtracking search
    max_search_nodes: int = 20_000_000
    # largest structure on which subsets are enumerated exhaustively
    max_subset_universe: int = 24
    # number of closed subsets / irreducible substructures visited
    max_subsets: int = 2_000_000
    # induced cycles of length at least four given keys by one unwinding layer
    max_cycles: int = 20_000
    # number of partial automorphisms enumerated
    max_partial_automorphisms: int = 200_000

    def replace(self, **kw) -> "Caps":
        return dataclasses.replace(self, **kw)


def caps_from_env(environ=None) -> Caps:
    environ = os.environ if environ is None else environ
    values = {}
    for field in dataclasses.fields(Caps):
        raw = environ.get("EPPAKIT_" + field.name.upper())
        if raw is not None:
            values[field.name] = int(raw)
    return Caps(**values)


def resolve(caps: Caps | None) -> Caps:
    return caps_from_env() if caps is None else caps
