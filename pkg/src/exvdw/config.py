"""Scenario configuration: strict JSON parsing with unit-suffixed keys.

Every mapping is checked against an allow-list so a misspelled key fails the
run before anything is written.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .atomic import AtomicSpecies, PopulationState, SpeciesError, load_species
from .force import QuadratureSpec
from .green import FREE_SPACE, DiluteBody, lattice_body

LENGTH = {"_m": 1.0, "_nm": 1e-9, "_um": 1e-6}
TIME = {"_s": 1.0, "_ns": 1e-9, "_us": 1e-6}


class ConfigError(ValueError):
    pass


def _check_keys(d: Mapping, allowed: set, where: str):
    if not isinstance(d, Mapping):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}")


def _unit_keys(base: str, units: Mapping[str, float]) -> set:
    return {base + suffix for suffix in units}


def _quantity(d: Mapping, base: str, units: Mapping[str, float], where: str,
              required: bool = True):
    present = [base + s for s in units if base + s in d]
    if len(present) > 1:
        raise ConfigError(f"{where}: give only one of {present}")
    if not present:
        if required:
            raise ConfigError(f"{where}: missing '{base}' with a unit suffix "
                              f"({', '.join(base + s for s in units)})")
        return None
    key = present[0]
    try:
        return np.asarray(d[key], dtype=float) * units[key[len(base):]]
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: cannot parse {key}={d[key]!r}") from None


@dataclass(frozen=True)
class Grid:
    values: np.ndarray

    @classmethod
    def parse(cls, d: Mapping, units: Mapping[str, float], where: str) -> "Grid":
        allowed = _unit_keys("start", units) | _unit_keys("stop", units) | {"count", "spacing"}
        _check_keys(d, allowed, where)
        start = float(_quantity(d, "start", units, where))
        stop = float(_quantity(d, "stop", units, where))
        count = d.get("count")
        if not isinstance(count, int) or count < 1:
            raise ConfigError(f"{where}: 'count' must be a positive integer")
        spacing = d.get("spacing", "linear")
        if spacing == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError(f"{where}: log grid needs positive bounds")
            vals = np.geomspace(start, stop, count)
        elif spacing == "linear":
            vals = np.linspace(start, stop, count)
        else:
            raise ConfigError(f"{where}: spacing must be 'log' or 'linear'")
        if count > 1 and not np.all(np.diff(vals) > 0):
            raise ConfigError(f"{where}: grid must be strictly increasing")
        return cls(vals)


@dataclass(frozen=True, eq=False)
class AtomSetup:
    species: AtomicSpecies
    initial: PopulationState


def parse_atom(d: Mapping, where: str) -> AtomSetup:
    record = dict(d)
    init = record.pop("initial_state", None)
    pops = record.pop("populations", None)
    try:
        species = load_species(record)
    except (SpeciesError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if init is not None and pops is not None:
        raise ConfigError(f"{where}: give 'initial_state' or 'populations', not both")
    p = np.zeros(species.n_levels)
    if pops is not None:
        _check_keys(pops, set(species.labels), f"{where}.populations")
        for label, value in pops.items():
            p[species.index(label)] = float(value)
    elif init is not None:
        if init not in species.labels:
            raise ConfigError(f"{where}: unknown initial_state {init!r}")
        p[species.index(init)] = 1.0
    else:
        p[0] = 1.0
    try:
        return AtomSetup(species, PopulationState(p, 0.0))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_body(d: Mapping, where: str) -> DiluteBody:
    allowed = ({"species", "shape", "number_density_per_m3", "type"}
               | _unit_keys("spacing", LENGTH) | _unit_keys("center", LENGTH))
    _check_keys(d, allowed, where)
    if d.get("type", "dilute_lattice") != "dilute_lattice":
        raise ConfigError(f"{where}: unsupported body type {d.get('type')!r}")
    try:
        species = load_species(d["species"])
    except KeyError:
        raise ConfigError(f"{where}: missing 'species'") from None
    except (SpeciesError, ValueError, TypeError) as exc:
        raise ConfigError(f"{where}.species: {exc}") from None
    shape = d.get("shape")
    if not (isinstance(shape, list) and len(shape) == 3
            and all(isinstance(s, int) and s > 0 for s in shape)):
        raise ConfigError(f"{where}: 'shape' must be three positive integers")
    spacing = float(_quantity(d, "spacing", LENGTH, where))
    center = _quantity(d, "center", LENGTH, where)
    if center.shape != (3,):
        raise ConfigError(f"{where}: center must be a 3-vector")
    density = d.get("number_density_per_m3")
    if not isinstance(density, (int, float)) or density <= 0:
        raise ConfigError(f"{where}: 'number_density_per_m3' must be positive")
    try:
        return lattice_body(species, shape, spacing, center, float(density))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_environment(d: Mapping | None):
    if d is None:
        return FREE_SPACE
    kind = d.get("type") if isinstance(d, Mapping) else None
    if kind == "free_space":
        _check_keys(d, {"type"}, "environment")
        return FREE_SPACE
    if kind == "dilute_lattice":
        return parse_body(d, "environment")
    raise ConfigError("environment.type must be 'free_space' or 'dilute_lattice'")


def parse_quadrature(d: Mapping | None) -> QuadratureSpec:
    if d is None:
        return QuadratureSpec()
    _check_keys(d, {"rel_tol", "abs_tol_N", "max_subdivisions", "scale_rad_per_s"},
                "quadrature")
    try:
        return QuadratureSpec(rel_tol=float(d.get("rel_tol", 1e-10)),
                              abs_tol=float(d.get("abs_tol_N", 0.0)),
                              max_subdivisions=int(d.get("max_subdivisions", 4000)),
                              scale=(float(d["scale_rad_per_s"])
                                     if "scale_rad_per_s" in d else None))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"quadrature: {exc}") from None


@dataclass(frozen=True, eq=False)
class ScanConfig:
    """A two-atom scan: over distance at fixed time, or over time at fixed distance."""

    A: AtomSetup
    B: AtomSetup
    environment: Any
    axis: np.ndarray
    quad: QuadratureSpec
    distances: np.ndarray
    times: np.ndarray
    mode: str  # "distance" or "time"


_SCAN_KEYS = ({"atoms", "environment", "separation_axis", "quadrature",
               "distance_grid", "time_grid"}
              | _unit_keys("distance", LENGTH) | _unit_keys("time", TIME))


def parse_scan(cfg: Mapping, mode: str) -> ScanConfig:
    _check_keys(cfg, _SCAN_KEYS, "config")
    atoms = cfg.get("atoms")
    _check_keys(atoms or {}, {"A", "B"}, "atoms")
    if not atoms or set(atoms) != {"A", "B"}:
        raise ConfigError("atoms: both 'A' and 'B' are required")
    A = parse_atom(atoms["A"], "atoms.A")
    B = parse_atom(atoms["B"], "atoms.B")
    env = parse_environment(cfg.get("environment"))
    axis = np.asarray(cfg.get("separation_axis", [0.0, 0.0, 1.0]), dtype=float)
    if axis.shape != (3,) or not np.linalg.norm(axis) > 0:
        raise ConfigError("separation_axis must be a nonzero 3-vector")
    axis = axis / np.linalg.norm(axis)
    quad = parse_quadrature(cfg.get("quadrature"))
    has_dgrid, has_tgrid = "distance_grid" in cfg, "time_grid" in cfg
    fixed_d = _quantity(cfg, "distance", LENGTH, "config", required=False)
    fixed_t = _quantity(cfg, "time", TIME, "config", required=False)
    if mode == "distance":
        if not has_dgrid or has_tgrid or fixed_d is not None:
            raise ConfigError("force-vs-distance needs 'distance_grid' and an optional "
                              "fixed time; 'time_grid' and a fixed distance are not allowed")
        distances = Grid.parse(cfg["distance_grid"], LENGTH, "distance_grid").values
        times = np.array([0.0 if fixed_t is None else float(fixed_t)])
        if distances[0] <= 0:
            raise ConfigError("distance_grid: distances must be positive")
    elif mode == "time":
        if not has_tgrid or has_dgrid or fixed_t is not None or fixed_d is None:
            raise ConfigError("force-vs-time needs 'time_grid' and a fixed distance; "
                              "'distance_grid' and a fixed time are not allowed")
        times = Grid.parse(cfg["time_grid"], TIME, "time_grid").values
        distances = np.array([float(fixed_d)])
        if distances[0] <= 0:
            raise ConfigError("distance must be positive")
    else:
        raise ValueError(mode)
    if times[0] < 0:
        raise ConfigError("times must be nonnegative")
    return ScanConfig(A, B, env, axis, quad, distances, times, mode)


@dataclass(frozen=True, eq=False)
class CPConfig:
    atom: AtomSetup
    body: DiluteBody
    time: float


def parse_cp(cfg: Mapping) -> CPConfig:
    _check_keys(cfg, {"atom", "body"} | _unit_keys("time", TIME), "config")
    if "atom" not in cfg or "body" not in cfg:
        raise ConfigError("cp-consistency needs 'atom' and 'body'")
    atom = parse_atom(cfg["atom"], "atom")
    body = parse_body(cfg["body"], "body")
    t = _quantity(cfg, "time", TIME, "config", required=False)
    return CPConfig(atom, body, 0.0 if t is None else float(t))


@dataclass(frozen=True)
class KernelCheckConfig:
    count: int = 1000
    tolerance: float | None = None  # None: each identity keeps its own tolerance


def parse_kernel_check(cfg: Mapping | None) -> KernelCheckConfig:
    if cfg is None:
        return KernelCheckConfig()
    _check_keys(cfg, {"count", "tolerance"}, "config")
    count = cfg.get("count", 1000)
    tol = cfg.get("tolerance")
    if not isinstance(count, int) or count < 1:
        raise ConfigError("count must be a positive integer")
    if tol is not None and (not isinstance(tol, (int, float)) or tol <= 0):
        raise ConfigError("tolerance must be positive")
    return KernelCheckConfig(count, None if tol is None else float(tol))


def load_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
