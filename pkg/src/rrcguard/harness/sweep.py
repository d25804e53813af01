"""Parameter sweeps over seeded scenario runs."""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Union

from ..core import AlgorithmParams
from ..ransim.config import ScenarioConfig
from ..ransim.engine import run_scenario
from .metrics import RunOutcome, SummaryTable, aggregate, classify_run

Builder = Callable[[int, Dict[str, Any]], ScenarioConfig]
_PARAM_FIELDS = {f.name for f in dataclasses.fields(AlgorithmParams)}


def expand_grid(grid: Union[Mapping[str, Sequence[Any]], Sequence[Mapping[str, Any]]]
                ) -> List[Dict[str, Any]]:
    """``{"a": [1, 2], "b": [3]}`` is a cartesian product; a list of dicts is taken as is."""
    if isinstance(grid, Mapping):
        keys = list(grid)
        cells = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    else:
        cells = [dict(c) for c in grid]
    if not cells:
        raise ValueError("parameter grid is empty")
    return cells


def apply_cell(config: ScenarioConfig, cell: Mapping[str, Any], seed: int) -> ScenarioConfig:
    """Apply one grid cell to a concrete config: algorithm knobs, ``max_ue``, or config fields."""
    params = {k: v for k, v in cell.items() if k in _PARAM_FIELDS}
    rest = {k: v for k, v in cell.items() if k not in _PARAM_FIELDS}
    out = config.replace(seed=seed, params=config.params.replace(**params))
    if "max_ue" in rest:
        out = out.replace(gnb=dataclasses.replace(out.gnb, max_ue=rest.pop("max_ue")))
    if rest:
        out = out.replace(**rest)
    return out.validate()


@dataclass
class SweepCell:
    params: Dict[str, Any]
    summary: SummaryTable
    outcomes: List[RunOutcome] = field(default_factory=list)


def run_outcomes(build: Callable[[int], ScenarioConfig], seeds: Sequence[int],
                 map_fn: Callable = map) -> List[RunOutcome]:
    def one(seed):
        config = build(seed)
        return classify_run(run_scenario(config), config)
    return list(map_fn(one, seeds))


def sweep(base: Union[ScenarioConfig, Builder], grid, seeds: Sequence[int],
          map_fn: Callable = map) -> List[SweepCell]:
    """Run every grid cell over ``seeds`` and aggregate each cell.

    ``base`` is either a config (cells are applied to a copy) or a builder
    ``(seed, cell) -> ScenarioConfig``. ``map_fn`` lets a caller fan runs out
    to an executor; each run owns its simulator so any mapping is safe.
    """
    out = []
    for cell in expand_grid(grid):
        if isinstance(base, ScenarioConfig):
            build = lambda seed, cell=cell: apply_cell(base, cell, seed)
        else:
            build = lambda seed, cell=cell: base(seed, cell)
        outcomes = run_outcomes(build, seeds, map_fn)
        out.append(SweepCell(cell, aggregate(outcomes), outcomes))
    return out


def rows_to_csv(rows: Sequence[Mapping[str, Any]]) -> str:
    columns: List[str] = []
    for row in rows:
        columns += [k for k in row if k not in columns]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    return buf.getvalue()


def write_csv(rows: Sequence[Mapping[str, Any]], path: Union[str, Path]) -> None:
    Path(path).write_text(rows_to_csv(rows))
