"""Per-(layer, SA) latency, bandwidth and energy figures.

Costs come either from a roofline-style analytic estimate or from an
externally produced CSV table (one row per model/layer/SA).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from gmpy2 import mpq

from .core import Dataflow, DnnModelDesc, LayerDesc, MasConfig, SaSpec

CSV_HEADER = ("model", "layer", "sa", "cycles", "bandwidth_bytes_per_cycle", "energy_pj")


class CostTableError(ValueError):
    pass


@dataclass(frozen=True)
class LayerCost:
    cycles: int
    total_bytes: int
    energy_pj: float

    def __post_init__(self) -> None:
        if self.cycles < 1:
            raise ValueError("layer cost needs at least one cycle")
        if self.total_bytes < 0:
            raise ValueError("bytes moved must be >= 0")

    @property
    def bandwidth(self) -> Fraction:
        """Bytes per cycle, kept exact as total_bytes / cycles."""
        return Fraction(self.total_bytes, self.cycles)


@dataclass(frozen=True)
class CostModelParams:
    utilization: Mapping[Dataflow, Fraction] = field(
        default_factory=lambda: {
            Dataflow.ROW_STATIONARY: Fraction(3, 4),
            Dataflow.WEIGHT_STATIONARY: Fraction(17, 20),
        }
    )
    e_mac_pj: Mapping[Dataflow, float] = field(
        default_factory=lambda: {
            Dataflow.ROW_STATIONARY: 0.5,
            Dataflow.WEIGHT_STATIONARY: 0.4,
        }
    )
    e_byte_pj: float = 4.0

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CostModelParams":
        base = cls()
        util = dict(base.utilization)
        emac = dict(base.e_mac_pj)
        for k, v in doc.get("utilization", {}).items():
            util[Dataflow(k)] = Fraction(str(v))
        for k, v in doc.get("e_mac_pj", {}).items():
            emac[Dataflow(k)] = float(v)
        return cls(util, emac, float(doc.get("e_byte_pj", base.e_byte_pj)))


def analytic_cost(
    layer: LayerDesc, sa: SaSpec, cfg: MasConfig, params: Optional[CostModelParams] = None
) -> LayerCost:
    params = params or CostModelParams()
    u = Fraction(params.utilization[sa.dataflow])
    compute_cycles = math.ceil(Fraction(layer.macs) / (sa.peak_macs_per_cycle * u))
    total_bytes = layer.total_bytes
    mem_cycles = math.ceil(Fraction(total_bytes) / cfg.dram_bandwidth_bytes_per_cycle)
    cycles = max(compute_cycles, mem_cycles, 1)
    energy = (
        layer.macs * params.e_mac_pj[sa.dataflow]
        + total_bytes * params.e_byte_pj
        + total_bytes * 8 * cfg.nop_energy_pj_per_bit
    )
    return LayerCost(cycles, total_bytes, energy)


class CostTable:
    """Immutable map (model_id, layer_id, sa_id) -> LayerCost, complete over models x SAs."""

    def __init__(
        self,
        entries: Mapping[tuple[int, int, int], LayerCost],
        models: Sequence[DnnModelDesc],
        num_sas: int,
    ) -> None:
        self._entries = dict(entries)
        self.models = tuple(models)
        self.num_sas = num_sas
        self._by_id = {m.model_id: m for m in self.models}
        missing = [
            (m.name, s, sa)
            for m in self.models
            for s in range(m.num_layers)
            for sa in range(num_sas)
            if (m.model_id, s, sa) not in self._entries
        ]
        if missing:
            name, s, sa = missing[0]
            raise CostTableError(
                f"cost table incomplete: no entry for (model={name}, layer={s}, sa={sa})"
                + (f" and {len(missing) - 1} more" if len(missing) > 1 else "")
            )
        # row-major caches used by hot paths
        self._cycles = {
            (m, s): tuple(self._entries[(m, s, a)].cycles for a in range(num_sas))
            for (m, s, _a) in self._entries
        }
        self._bw = {
            (m, s): tuple(self._entries[(m, s, a)].bandwidth for a in range(num_sas))
            for (m, s, _a) in self._entries
        }
        self._bw_q = {key: tuple(mpq(b) for b in row) for key, row in self._bw.items()}

    def __getitem__(self, key: tuple[int, int, int]) -> LayerCost:
        return self._entries[key]

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()

    def cycles(self, model_id: int, layer_id: int, sa: int) -> int:
        return self._cycles[(model_id, layer_id)][sa]

    def cycles_row(self, model_id: int, layer_id: int) -> tuple[int, ...]:
        return self._cycles[(model_id, layer_id)]

    def bandwidth(self, model_id: int, layer_id: int, sa: int) -> Fraction:
        return self._bw[(model_id, layer_id)][sa]

    def bandwidth_row(self, model_id: int, layer_id: int) -> tuple[Fraction, ...]:
        return self._bw[(model_id, layer_id)]

    def bandwidth_q(self, model_id: int, layer_id: int, sa: int):
        """Same value as bandwidth(), as a gmpy2 rational for the simulator's hot path."""
        return self._bw_q[(model_id, layer_id)][sa]

    def energy(self, model_id: int, layer_id: int, sa: int) -> float:
        return self._entries[(model_id, layer_id, sa)].energy_pj

    def model(self, model_id: int) -> DnnModelDesc:
        try:
            return self._by_id[model_id]
        except KeyError:
            raise KeyError(f"unknown model id {model_id}") from None

    def model_by_name(self, name: str) -> DnnModelDesc:
        for m in self.models:
            if m.name.lower() == name.lower():
                return m
        raise KeyError(f"unknown model {name!r}")

    def num_layers(self, model_id: int) -> int:
        return self.model(model_id).num_layers


def build_analytic_table(
    cfg: MasConfig, models: Sequence[DnnModelDesc], params: Optional[CostModelParams] = None
) -> CostTable:
    entries = {
        (m.model_id, layer.layer_id, sa.id): analytic_cost(layer, sa, cfg, params)
        for m in models
        for layer in m.layers
        for sa in cfg.sas
    }
    return CostTable(entries, models, cfg.num_sas)


def _parse_row(row: list[str], lineno: int, models: Sequence[DnnModelDesc], num_sas: int):
    if len(row) != len(CSV_HEADER):
        raise CostTableError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
    name, layer, sa, cycles, bw, energy = (x.strip() for x in row)
    model = next((m for m in models if m.name.lower() == name.lower()), None)
    if model is None:
        raise CostTableError(f"line {lineno}: unknown model {name!r}")
    try:
        layer_i, sa_i, cycles_i = int(layer), int(sa), int(cycles)
        bw_d = Decimal(bw)
        energy_f = float(energy)
    except (ValueError, InvalidOperation) as exc:
        raise CostTableError(f"line {lineno}: malformed value ({exc})") from None
    if not 0 <= layer_i < model.num_layers:
        raise CostTableError(f"line {lineno}: layer {layer_i} out of range for {model.name}")
    if not 0 <= sa_i < num_sas:
        raise CostTableError(f"line {lineno}: sa {sa_i} out of range")
    if cycles_i < 1 or bw_d < 0:
        raise CostTableError(f"line {lineno}: cycles must be >= 1 and bandwidth >= 0")
    # bandwidth is stored as total_bytes / cycles
    total_bytes = int((bw_d * cycles_i).to_integral_value())
    return (model.model_id, layer_i, sa_i), LayerCost(cycles_i, total_bytes, energy_f)


def load_cost_table(
    path: Union[str, Path],
    cfg: MasConfig,
    models: Sequence[DnnModelDesc],
    allow_partial: bool = False,
    params: Optional[CostModelParams] = None,
) -> CostTable:
    """Read a cost-table CSV; with allow_partial, missing pairs fall back to the analytic model."""
    entries: dict[tuple[int, int, int], LayerCost] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not x.strip() for x in row):
                continue
            if lineno == 1 and row[0].strip().lower() == "model":
                if tuple(x.strip() for x in row) != CSV_HEADER:
                    raise CostTableError(f"line 1: unexpected header {row}")
                continue
            key, cost = _parse_row(row, lineno, models, cfg.num_sas)
            entries[key] = cost
    if allow_partial:
        for m in models:
            for layer in m.layers:
                for sa in cfg.sas:
                    key = (m.model_id, layer.layer_id, sa.id)
                    if key not in entries:
                        entries[key] = analytic_cost(layer, sa, cfg, params)
    return CostTable(entries, models, cfg.num_sas)


def write_cost_table(path: Union[str, Path], table: CostTable) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for (m, s, a), cost in sorted(table.items()):
            bw = Decimal(cost.total_bytes) / Decimal(cost.cycles)
            w.writerow([table.model(m).name, s, a, cost.cycles, f"{bw:.12f}", repr(cost.energy_pj)])


def min_job_latency(model_id: int, table: CostTable) -> int:
    """Contention-free latency of the layer chain when every layer takes its fastest SA."""
    model = table.model(model_id)
    return sum(min(table.cycles_row(model_id, s)) for s in range(model.num_layers))


def table_from_costs(
    costs: Mapping[str, Sequence[Sequence[tuple]]], num_sas: int
) -> CostTable:
    """Build a table from explicit costs: {model name: [[(cycles, total_bytes[, energy]) per SA] per layer]}.

    Layer MAC counts of the generated model descriptions are placeholders.
    """
    models = []
    entries = {}
    for model_id, (name, layers) in enumerate(costs.items()):
        models.append(DnnModelDesc(model_id, name, tuple(LayerDesc(s, 1) for s in range(len(layers)))))
        for s, row in enumerate(layers):
            if len(row) != num_sas:
                raise CostTableError(f"{name} layer {s}: expected {num_sas} SA entries, got {len(row)}")
            for sa, cell in enumerate(row):
                cycles, total_bytes = int(cell[0]), int(cell[1])
                energy = float(cell[2]) if len(cell) > 2 else float(cycles)
                entries[(model_id, s, sa)] = LayerCost(cycles, total_bytes, energy)
    return CostTable(entries, models, num_sas)
