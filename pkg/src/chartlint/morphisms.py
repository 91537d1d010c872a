"""Data and visual perturbations, plus the seeded deterministic RNG.

Every data morphism is a pure function of (table, rng): equal seeds give
equal outputs on every platform. Schema is always preserved.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

from .data import Table, Value, _with_rows
from .scene import group_indices

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    # SplitMix64 finalizer; the documented seed-mixing primitive.
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, trial_index: int, tag: str) -> int:
    """Mix (master seed, trial index, morphism tag) into a per-trial seed.

    Trials are reproducible independently of execution order, so they can
    run concurrently without changing results.
    """
    acc = _splitmix64(master & _MASK64)
    acc = _splitmix64(acc ^ (trial_index & _MASK64))
    for byte in tag.encode("utf-8"):
        acc = _splitmix64(acc ^ byte)
    return acc


class Rng:
    """Seeded deterministic pseudo-random generator.

    The uniform stream is CPython's Mersenne Twister (stable across
    platforms); shuffling, sampling, and the Gaussian transform are
    implemented here on top of that stream so the full stream is fixed by
    this file, not by the stdlib's convenience methods.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._rand = random.Random(self.seed)

    def random(self) -> float:
        return self._rand.random()

    def randrange(self, n: int) -> int:
        return self._rand.randrange(n)

    def uniform(self, a: float, b: float) -> float:
        return a + (b - a) * self._rand.random()

    def gauss(self, mu: float, sigma: float) -> float:
        # Box-Muller, one deviate per uniform pair (no spare caching).
        u1 = 1.0 - self._rand.random()  # in (0, 1]
        u2 = self._rand.random()
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def shuffle(self, items: list) -> None:
        # Fisher-Yates, in place.
        for i in range(len(items) - 1, 0, -1):
            j = self._rand.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> list[int]:
        out = list(range(n))
        self.shuffle(out)
        return out

    def sample_with_replacement(self, items: list, k: int) -> list:
        return [items[self._rand.randrange(len(items))] for _ in range(k)]

    def sample_without_replacement(self, items: list, k: int) -> list:
        pool = list(items)
        out = []
        for _ in range(k):
            j = self._rand.randrange(len(pool))
            out.append(pool.pop(j))
        return out


# ---------------------------------------------------------------------------
# Data morphisms


def shuffle_rows(table: Table, rng: Rng) -> Table:
    """Uniformly random permutation of row order; row multiset unchanged."""
    rows = list(table.rows)
    rng.shuffle(rows)
    return _with_rows(table, rows)


def _grouped_indices(table: Table, category_field: str):
    """(group index lists in category order, Null-category row indices)."""
    groups = []
    null_rows: list[int] = []
    for category, indices in group_indices(table, category_field):
        if category is None:
            null_rows = indices
        else:
            groups.append(indices)
    return groups, null_rows


def bootstrap_groups(
    table: Table, category_field: str, value_field: str, rng: Rng
) -> Table:
    """Resample each category's rows with replacement to its original size.

    Whole rows are resampled so extra columns ride along. Rows with a Null
    category are not part of any bar's provenance and pass through unchanged.
    """
    groups, null_rows = _grouped_indices(table, category_field)
    rows = []
    for indices in groups:
        rows.extend(
            table.rows[i]
            for i in rng.sample_with_replacement(indices, len(indices))
        )
    rows.extend(table.rows[i] for i in null_rows)
    return _with_rows(table, rows)


def contract_groups(
    table: Table, category_field: str, value_field: str, rng: Rng
) -> Table:
    """Reduce every category to the minimum group size, sampling uniformly
    without replacement within each group."""
    groups, null_rows = _grouped_indices(table, category_field)
    if groups:
        m = min(len(g) for g in groups)
        rows = []
        for indices in groups:
            rows.extend(
                table.rows[i] for i in rng.sample_without_replacement(indices, m)
            )
    else:
        rows = []
    rows.extend(table.rows[i] for i in null_rows)
    return _with_rows(table, rows)


def randomize_assignment(
    table: Table, category_field: str, value_field: str, rng: Rng
) -> Table:
    """Permute the value column uniformly at random relative to everything
    else; both marginal multisets (categories, values) are preserved."""
    val_idx = table.column_index(value_field)
    table.column_index(category_field)  # existence check
    perm = rng.permutation(table.num_rows)
    rows = []
    for i, row in enumerate(table.rows):
        cells = list(row)
        cells[val_idx] = table.rows[perm[i]][val_idx]
        rows.append(tuple(cells))
    return _with_rows(table, rows)


@dataclass(frozen=True)
class DataMorphism:
    tag = "identity"

    def apply(self, table: Table, rng: Rng) -> Table:
        raise NotImplementedError


@dataclass(frozen=True)
class IdentityRows(DataMorphism):
    tag = "identity"

    def apply(self, table: Table, rng: Rng) -> Table:
        return table


@dataclass(frozen=True)
class Shuffle(DataMorphism):
    tag = "shuffle"

    def apply(self, table: Table, rng: Rng) -> Table:
        return shuffle_rows(table, rng)


@dataclass(frozen=True)
class Bootstrap(DataMorphism):
    category_field: str
    value_field: str
    tag = "bootstrap"

    def apply(self, table: Table, rng: Rng) -> Table:
        return bootstrap_groups(table, self.category_field, self.value_field, rng)


@dataclass(frozen=True)
class ContractRecords(DataMorphism):
    category_field: str
    value_field: str
    tag = "contract"

    def apply(self, table: Table, rng: Rng) -> Table:
        return contract_groups(table, self.category_field, self.value_field, rng)


@dataclass(frozen=True)
class RandomizeAssignment(DataMorphism):
    category_field: str
    value_field: str
    tag = "randomize"

    def apply(self, table: Table, rng: Rng) -> Table:
        return randomize_assignment(table, self.category_field, self.value_field, rng)


# ---------------------------------------------------------------------------
# Visual morphisms


@dataclass(frozen=True)
class VisualMorphism:
    tag = "identity"


@dataclass(frozen=True)
class Identity(VisualMorphism):
    tag = "identity"


@dataclass(frozen=True)
class OpacityScale(VisualMorphism):
    f: float
    tag = "opacity"

    def __post_init__(self):
        if not 0 < self.f <= 1:
            raise ValueError(f"opacity scale {self.f} outside (0, 1]")


def apply_visual(morphism: VisualMorphism, spec):
    """Apply a visual morphism to a spec; Identity returns an equal spec."""
    if isinstance(morphism, OpacityScale):
        return replace(spec, opacity=spec.opacity * morphism.f)
    return spec
