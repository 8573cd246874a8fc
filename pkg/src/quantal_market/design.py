"""Choice-experiment design generation, swap-based improvement, diagnostics.

Generation deals levels so that every attribute is balanced within one
occurrence per level (exactly when counts divide).  The improvement pass is
a randomized hill climb over two move types: count-preserving level swaps
between rows, and single-row level flips; a move is accepted only when the
objective (level imbalance plus a weighted maximum absolute pairwise
column correlation) strictly decreases.  Price and weight levels are
cut-specific, so their moves stay within one cut.

Correlations are measured between coded categorical columns (zero where an
attribute does not apply) and continuous attributes mapped to their level
index, which keeps the cut-specific price/weight scales comparable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, SchemaError
from .schema import AttributeSchema, DesignRow, build_design_row, decode_design_row, effects_code

CUT_LEVELED = ("price", "weight")


@dataclass(frozen=True)
class Design:
    """Tasks of n_alts coded alternatives with a block id per task."""

    schema: AttributeSchema
    tasks: tuple[tuple[DesignRow, ...], ...]
    blocks: tuple[int, ...]

    def __post_init__(self):
        if len(self.tasks) != len(self.blocks):
            raise DataError("one block id per task required")
        sizes = {len(t) for t in self.tasks}
        if len(sizes) > 1:
            raise DataError("all tasks must hold the same number of alternatives")

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_alts(self) -> int:
        return len(self.tasks[0]) if self.tasks else 0

    @property
    def rows(self) -> tuple[DesignRow, ...]:
        return tuple(row for task in self.tasks for row in task)


@dataclass
class DesignDiagnostics:
    """Level frequencies, worst pairwise correlation, and imbalance."""

    frequencies: dict[str, dict[str, int]]
    max_abs_correlation: float
    worst_pair: tuple[str, str] | None
    imbalance: int
    degenerate_columns: tuple[str, ...] = ()
    exact_balance_possible: bool = True

    def objective(self, corr_weight: float = 1.0) -> float:
        return self.imbalance + corr_weight * self.max_abs_correlation


def _deal(levels: Sequence, count: int, rng: np.random.Generator) -> list:
    """Multiset of ``count`` values spread over ``levels`` within +-1, shuffled."""
    base, extra = divmod(count, len(levels))
    pool = list(levels) * base
    if extra:
        picks = rng.choice(len(levels), size=extra, replace=False)
        pool.extend(levels[int(i)] for i in picks)
    order = rng.permutation(len(pool))
    return [pool[int(i)] for i in order]


def generate(
    schema: AttributeSchema,
    n_tasks: int,
    n_alts: int,
    n_blocks: int,
    seed: int,
) -> Design:
    """Level-balanced random design: ``n_tasks`` tasks in ``n_blocks`` blocks.

    Blocks partition the tasks evenly (n_tasks must divide) and alternate
    between the schema's seasons so each block is a single-season booklet.
    """
    if n_tasks <= 0 or n_alts <= 0 or n_blocks <= 0:
        raise DataError("task, alternative and block counts must be positive")
    if n_tasks % n_blocks:
        raise DataError(f"{n_tasks} tasks cannot be split evenly into {n_blocks} blocks")
    rng = np.random.default_rng(seed)
    n_rows = n_tasks * n_alts

    blocks = tuple(int(t % n_blocks) for t in range(n_tasks))
    season_of_block = {b: schema.seasons[b % len(schema.seasons)] for b in range(n_blocks)}
    row_season = [season_of_block[blocks[t]] for t in range(n_tasks) for _ in range(n_alts)]
    cuts = _deal(schema.cuts, n_rows, rng)

    assignment: list[dict] = [{} for _ in range(n_rows)]
    for attr in schema.attributes:
        applicable = [i for i in range(n_rows) if schema.applies(attr.name, cuts[i])]
        if attr.name in CUT_LEVELED:
            for cut in schema.cuts:
                rows_c = [i for i in applicable if cuts[i] == cut]
                levels = (
                    schema.price_levels[cut] if attr.name == "price" else schema.weight_levels[cut]
                )
                for i, level in zip(rows_c, _deal(levels, len(rows_c), rng)):
                    assignment[i][attr.name] = float(level)
        else:
            levels = attr.levels if not attr.is_continuous else attr.design_levels
            if not levels:
                raise SchemaError(f"attribute {attr.name!r} has no design levels")
            values = _deal(levels, len(applicable), rng)
            for i, level in zip(applicable, values):
                assignment[i][attr.name] = float(level) if attr.is_continuous else level

    rows = [
        build_design_row(schema, cuts[i], row_season[i], assignment[i]) for i in range(n_rows)
    ]
    tasks = tuple(
        tuple(rows[t * n_alts : (t + 1) * n_alts]) for t in range(n_tasks)
    )
    return Design(schema=schema, tasks=tasks, blocks=blocks)


# -- diagnostics -------------------------------------------------------------


def _design_columns(schema: AttributeSchema):
    """(label, attr, column) triples for the diagnostics matrix."""
    columns = []
    for attr in schema.attributes:
        if attr.is_continuous:
            columns.append((f"{attr.name}", attr.name, None))
        else:
            for col in attr.columns():
                columns.append((f"{attr.name}:{col}", attr.name, col))
    return columns


def _level_index(schema: AttributeSchema, attr_name: str, cut: str, value: float) -> float:
    if attr_name == "price":
        levels = schema.price_levels[cut]
    elif attr_name == "weight":
        levels = schema.weight_levels[cut]
    else:
        levels = schema.attribute(attr_name).design_levels
    diffs = [abs(value - lv) for lv in levels]
    return float(np.argmin(diffs))


def _matrix(design: Design) -> tuple[np.ndarray, list[str], np.ndarray]:
    schema = design.schema
    columns = _design_columns(schema)
    rows = design.rows
    M = np.zeros((len(rows), len(columns)))
    for r, row in enumerate(rows):
        for c, (label, attr_name, col) in enumerate(columns):
            if not schema.applies(attr_name, row.cut):
                continue
            if col is None:
                value = row.coded[(attr_name, "unit")]
                M[r, c] = _level_index(schema, attr_name, row.cut, value)
            else:
                M[r, c] = row.coded[(attr_name, col)]
    attr_names = [a.name for a in schema.attributes]
    groups = np.array([attr_names.index(attr) for _, attr, _ in columns])
    return M, [label for label, *_ in columns], groups


def _corr_and_degenerate(M: np.ndarray, groups: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cross-attribute correlation matrix; same-attribute pairs are zeroed.

    Effects coding makes columns of one multi-level attribute correlated by
    construction (every non-base column shares the -1 base rows), so only
    correlations between different attributes measure design quality.
    """
    centered = M - M.mean(axis=0)
    var = (centered**2).mean(axis=0)
    degenerate = var <= 1e-12
    sd = np.sqrt(np.where(degenerate, 1.0, var))
    corr = (centered.T @ centered) / len(M) / np.outer(sd, sd)
    corr[degenerate, :] = 0.0
    corr[:, degenerate] = 0.0
    corr[groups[:, None] == groups[None, :]] = 0.0
    return corr, degenerate


def _frequencies(design: Design) -> tuple[dict[str, dict[str, int]], int, bool]:
    schema = design.schema
    freq: dict[str, dict[str, int]] = {}
    imbalance = 0
    exact_possible = True
    rows = design.rows

    def account(key: str, values: list, levels: Sequence) -> None:
        nonlocal imbalance, exact_possible
        counts = {str(lv): 0 for lv in levels}
        for v in values:
            counts[str(v)] += 1
        freq[key] = counts
        spread = max(counts.values()) - min(counts.values())
        min_spread = 0 if len(values) % len(levels) == 0 else 1
        if min_spread:
            exact_possible = False
        imbalance += max(0, spread - min_spread)

    account("cut", [r.cut for r in rows], schema.cuts)
    for attr in schema.attributes:
        applicable = [r for r in rows if schema.applies(attr.name, r.cut)]
        if attr.name in CUT_LEVELED:
            for cut in schema.cuts:
                values = [
                    r.coded[(attr.name, "unit")] for r in applicable if r.cut == cut
                ]
                levels = (
                    schema.price_levels[cut] if attr.name == "price" else schema.weight_levels[cut]
                )
                account(f"{attr.name}[{cut}]", [float(v) for v in values], [float(l) for l in levels])
        elif attr.is_continuous:
            account(
                attr.name,
                [float(r.coded[(attr.name, "unit")]) for r in applicable],
                [float(l) for l in attr.design_levels],
            )
        else:
            decoded = [decode_design_row(schema, r)[attr.name] for r in applicable]
            account(attr.name, decoded, attr.levels)
    return freq, imbalance, exact_possible


def diagnostics(design: Design) -> DesignDiagnostics:
    """Exact level counts plus the worst pairwise coded-column correlation."""
    M, labels, groups = _matrix(design)
    corr, degenerate = _corr_and_degenerate(M, groups)
    abs_corr = np.abs(corr)
    worst_flat = int(np.argmax(abs_corr))
    i, j = divmod(worst_flat, len(labels))
    freq, imbalance, exact_possible = _frequencies(design)
    return DesignDiagnostics(
        frequencies=freq,
        max_abs_correlation=float(abs_corr[i, j]),
        worst_pair=(labels[i], labels[j]) if abs_corr[i, j] > 0 else None,
        imbalance=imbalance,
        degenerate_columns=tuple(lb for lb, d in zip(labels, degenerate) if d),
        exact_balance_possible=exact_possible,
    )


# -- improvement -------------------------------------------------------------


class _Improver:
    """Objective bookkeeping for the swap/flip hill climb.

    The correlation term is recomputed from the design matrix per candidate;
    the imbalance term is tracked incrementally (swaps never change counts,
    flips change exactly two).
    """

    def __init__(self, design: Design, corr_weight: float):
        self.schema = design.schema
        self.corr_weight = corr_weight
        self.rows = [decode_design_row(design.schema, r) for r in design.rows]
        self.cuts = [r.cut for r in design.rows]
        self.seasons = [r.season for r in design.rows]
        self.M, self.labels, self.groups = _matrix(design)
        self.n = len(self.rows)
        self.col_of: dict[tuple[str, str | None], int] = {}
        for c, label in enumerate(self.labels):
            if ":" in label:
                attr, col = label.split(":", 1)
                self.col_of[(attr, col)] = c
            else:
                self.col_of[(label, None)] = c
        # level counts per balance group: (attr, cut-or-None) -> {level: n}
        self.counts: dict[tuple[str, str | None], dict] = {}
        self.min_spread: dict[tuple[str, str | None], int] = {}
        for attr in self.schema.attributes:
            for group, levels, rows_g in self._groups(attr.name):
                counts = {lv: 0 for lv in levels}
                for i in rows_g:
                    counts[self.rows[i][attr.name]] += 1
                self.counts[group] = counts
                self.min_spread[group] = 0 if len(rows_g) % len(levels) == 0 else 1
        self.imbalance = sum(
            max(0, max(c.values()) - min(c.values()) - self.min_spread[g])
            for g, c in self.counts.items()
        )

    def _groups(self, attr_name: str):
        attr = self.schema.attribute(attr_name)
        applicable = self.applicable_rows(attr_name)
        if attr_name in CUT_LEVELED:
            for cut in self.schema.cuts:
                levels = (
                    self.schema.price_levels[cut]
                    if attr_name == "price"
                    else self.schema.weight_levels[cut]
                )
                yield (attr_name, cut), [float(lv) for lv in levels], [
                    i for i in applicable if self.cuts[i] == cut
                ]
        elif attr.is_continuous:
            yield (attr_name, None), [float(lv) for lv in attr.design_levels], applicable
        else:
            yield (attr_name, None), list(attr.levels), applicable

    def _group_of(self, attr_name: str, i: int) -> tuple[str, str | None]:
        return (attr_name, self.cuts[i] if attr_name in CUT_LEVELED else None)

    def objective(self) -> float:
        corr, _ = _corr_and_degenerate(self.M, self.groups)
        return self.imbalance + self.corr_weight * float(np.max(np.abs(corr)))

    def _spread_penalty(self, group) -> int:
        counts = self.counts[group]
        return max(0, max(counts.values()) - min(counts.values()) - self.min_spread[group])

    def set_value(self, i: int, attr_name: str, value, update_counts: bool = False) -> None:
        attr = self.schema.attribute(attr_name)
        old = self.rows[i][attr_name]
        self.rows[i][attr_name] = value
        if update_counts and old != value:
            group = self._group_of(attr_name, i)
            before = self._spread_penalty(group)
            self.counts[group][old] -= 1
            self.counts[group][value] += 1
            self.imbalance += self._spread_penalty(group) - before
        if attr.is_continuous:
            c = self.col_of[(attr_name, None)]
            self.M[i, c] = _level_index(self.schema, attr_name, self.cuts[i], float(value))
        else:
            codes = effects_code(attr, value)
            for col, v in zip(attr.columns(), codes):
                self.M[i, self.col_of[(attr_name, col)]] = v

    def applicable_rows(self, attr_name: str) -> list[int]:
        return [i for i in range(self.n) if self.schema.applies(attr_name, self.cuts[i])]


def improve(
    design: Design,
    max_iters: int = 2000,
    corr_weight: float = 1.0,
    seed: int = 0,
    patience: int | None = None,
) -> Design:
    """Hill climb on imbalance + corr_weight * max |correlation|.

    Accepts only strictly improving moves, so the objective is
    non-increasing; returns after ``max_iters`` candidate moves or once
    ``patience`` consecutive candidates fail to improve.
    """
    if max_iters <= 0:
        return design
    rng = np.random.default_rng(seed)
    state = _Improver(design, corr_weight)
    current = state.objective()
    patience = patience if patience is not None else max(500, 5 * state.n)
    stale = 0

    moveable = [
        a.name
        for a in design.schema.attributes
        if not a.is_continuous or a.design_levels or a.name in CUT_LEVELED
    ]
    for _ in range(max_iters):
        if stale >= patience or current <= 1e-12:
            break
        attr_name = moveable[int(rng.integers(len(moveable)))]
        attr = design.schema.attribute(attr_name)
        rows = state.applicable_rows(attr_name)
        if len(rows) < 2:
            continue
        swap = rng.random() < 0.8
        if attr_name in CUT_LEVELED:
            cut = design.schema.cuts[int(rng.integers(len(design.schema.cuts)))]
            rows = [i for i in rows if state.cuts[i] == cut]
            if len(rows) < 2:
                stale += 1
                continue
            levels = (
                design.schema.price_levels[cut]
                if attr_name == "price"
                else design.schema.weight_levels[cut]
            )
        else:
            levels = attr.levels if not attr.is_continuous else attr.design_levels
        i, j = (int(k) for k in rng.choice(len(rows), size=2, replace=False))
        i, j = rows[i], rows[j]
        vi = state.rows[i][attr_name]
        if swap:
            vj = state.rows[j][attr_name]
            if vi == vj:
                stale += 1
                continue
            state.set_value(i, attr_name, vj)
            state.set_value(j, attr_name, vi)
            candidate = state.objective()
            if candidate < current - 1e-12:
                current = candidate
                stale = 0
            else:
                state.set_value(j, attr_name, vj)
                state.set_value(i, attr_name, vi)
                stale += 1
        else:
            new = levels[int(rng.integers(len(levels)))]
            new = float(new) if attr.is_continuous else new
            if new == vi:
                stale += 1
                continue
            state.set_value(i, attr_name, new, update_counts=True)
            candidate = state.objective()
            if candidate < current - 1e-12:
                current = candidate
                stale = 0
            else:
                state.set_value(i, attr_name, vi, update_counts=True)
                stale += 1

    rows = [
        build_design_row(design.schema, state.cuts[i], state.seasons[i], state.rows[i])
        for i in range(state.n)
    ]
    n_alts = design.n_alts
    tasks = tuple(
        tuple(rows[t * n_alts : (t + 1) * n_alts]) for t in range(design.n_tasks)
    )
    return Design(schema=design.schema, tasks=tasks, blocks=design.blocks)
