"""Versioned JSON run configuration.

Every key is checked: unknown keys and out-of-range values raise
:class:`~rlscatter.errors.ConfigError` naming the offending field.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import LEBEDEV_ORDERS
from .potentials import Gaussian, PotentialSpec, SquareWell, Yukawa, Zero, read_tabulated

SCHEMA_VERSION = 1
MAX_KH = 0.3

_FAMILIES = {
    "zero": (Zero, ()),
    "yukawa": (Yukawa, ("g", "mu0")),
    "gaussian": (Gaussian, ("g", "width")),
    "square_well": (SquareWell, ("depth", "radius")),
    "tabulated": (None, ("path",)),
}

_TOP = {"schema_version", "problem", "potential", "mass", "energies", "grid", "mesh_order", "solver",
        "oracles", "scan", "bound", "output", "seed"}
_GRID = {"h", "eps_cut", "rel_cut", "half_width", "max_half_width"}
_SOLVER = {"mode", "gmres_tol", "gmres_maxiter"}
_ORACLES = {"born", "partial_waves", "far_field", "gamma"}
_SCAN = {"threshold", "report_threshold"}
_BOUND = {"range", "n_scan", "richardson"}
_DIRAC_POT = {"scalar", "vector", "charge"}


def _check_keys(obj, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(where, "must be an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"{where}.{extra[0]}" if where else extra[0], "unknown key")


def _number(obj: dict, key: str, where: str, default=None, positive: bool = False, allow_none: bool = False):
    name = f"{where}.{key}" if where else key
    val = obj.get(key, default)
    if val is None:
        if allow_none:
            return None
        raise ConfigError(name, "required")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(name, f"must be a number, got {val!r}")
    if positive and val <= 0:
        raise ConfigError(name, f"must be positive, got {val}")
    return float(val)


@dataclass
class GridConfig:
    h: float
    eps_cut: float | None = None
    rel_cut: float = 1e-8
    half_width: float | None = None
    max_half_width: float = 12.0


@dataclass
class SolverConfig:
    mode: str = "auto"
    gmres_tol: float = 1e-10
    gmres_maxiter: int = 500


@dataclass
class OracleConfig:
    born: bool = False
    partial_waves: bool = True
    far_field: bool = False
    gamma: bool = True


@dataclass
class ScanConfig:
    threshold: float = 1e-6
    report_threshold: float = 1e-5


@dataclass
class BoundConfig:
    range: tuple | None = None
    n_scan: int = 24
    richardson: bool = False


@dataclass
class RunConfig:
    """Parsed and validated run configuration."""

    problem: str
    potential: dict
    energies: list
    grid: GridConfig
    mass: float | None = None
    mesh_order: int = 17
    solver: SolverConfig = field(default_factory=SolverConfig)
    oracles: OracleConfig = field(default_factory=OracleConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    bound: BoundConfig = field(default_factory=BoundConfig)
    output: str | None = None
    seed: int = 0
    schema_version: int = SCHEMA_VERSION
    base_dir: str = "."

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    # --- model construction ---------------------------------------------

    def family(self, desc: dict):
        return _build_family(desc, self.base_dir)

    def potential_object(self):
        """Scalar family (Schrodinger) or :class:`PotentialSpec` (Dirac)."""
        if self.problem == "schrodinger":
            return self.family(self.potential)
        scalar = self.family(self.potential.get("scalar", {"family": "zero"}))
        vec = self.potential.get("vector")
        vector = None if vec is None else tuple(self.family(c) for c in vec)
        return PotentialSpec(scalar=scalar, vector=vector, charge=float(self.potential.get("charge", 1.0)))

    def make_problem(self, h: float | None = None):
        from .dirac import DiracProblem
        from .schrodinger import SchrodingerProblem

        g = self.grid
        kw = dict(h=g.h if h is None else h, half_width=g.half_width, eps_cut=g.eps_cut, rel_cut=g.rel_cut,
                  max_half_width=g.max_half_width, mode=self.solver.mode)
        if self.problem == "schrodinger":
            return SchrodingerProblem(self.potential_object(), **kw)
        return DiracProblem(self.potential_object(), self.mass, **kw)


def _build_family(desc, base_dir: str):
    if not isinstance(desc, dict) or "family" not in desc:
        raise ConfigError("potential", "each potential needs a 'family'")
    name = desc["family"]
    if name not in _FAMILIES:
        raise ConfigError("potential.family", f"unknown family {name!r}; choose from {sorted(_FAMILIES)}")
    cls, params = _FAMILIES[name]
    _check_keys(desc, {"family", *params}, "potential")
    if name == "tabulated":
        path = Path(desc.get("path", ""))
        if not path.is_absolute():
            path = Path(base_dir) / path
        if not path.exists():
            raise ConfigError("potential.path", f"file {path} not found")
        return read_tabulated(path)
    args = [_number(desc, p, "potential") for p in params]
    try:
        return cls(*args)
    except (ValueError, TypeError) as exc:
        raise ConfigError("potential", str(exc)) from exc


def _energies(val) -> list:
    if isinstance(val, list):
        if not val:
            raise ConfigError("energies", "must not be empty")
        out = []
        for i, e in enumerate(val):
            if isinstance(e, bool) or not isinstance(e, (int, float)):
                raise ConfigError(f"energies[{i}]", f"must be a number, got {e!r}")
            out.append(float(e))
        return out
    if isinstance(val, dict):
        _check_keys(val, {"start", "stop", "num"}, "energies")
        start = _number(val, "start", "energies")
        stop = _number(val, "stop", "energies")
        num = val.get("num")
        if not isinstance(num, int) or isinstance(num, bool) or num < 1:
            raise ConfigError("energies.num", "must be a positive integer")
        return [float(x) for x in np.linspace(start, stop, num)]
    raise ConfigError("energies", "must be a list or {start, stop, num}")


def parse_config(data: dict, base_dir: str = ".") -> RunConfig:
    """Build a :class:`RunConfig` from decoded JSON, validating structure and ranges."""
    _check_keys(data, _TOP, "")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    problem = data.get("problem")
    if problem not in ("schrodinger", "dirac"):
        raise ConfigError("problem", "must be 'schrodinger' or 'dirac'")
    mass = None
    if problem == "dirac":
        mass = _number(data, "mass", "", positive=True)
    elif "mass" in data:
        raise ConfigError("mass", "only meaningful for the dirac problem")

    pot = data.get("potential")
    if pot is None:
        raise ConfigError("potential", "required")
    if problem == "dirac":
        _check_keys(pot, _DIRAC_POT, "potential")
        if pot.get("scalar") is not None:
            _build_family(pot["scalar"], base_dir)
        vec = pot.get("vector")
        if vec is not None:
            if not isinstance(vec, list) or len(vec) != 3:
                raise ConfigError("potential.vector", "must be a list of three families (A_x, A_y, A_z)")
            for c in vec:
                _build_family(c, base_dir)
        if "charge" in pot:
            _number(pot, "charge", "potential")
    else:
        _build_family(pot, base_dir)

    energies = _energies(data.get("energies"))

    graw = data.get("grid")
    if graw is None:
        raise ConfigError("grid", "required")
    _check_keys(graw, _GRID, "grid")
    grid = GridConfig(
        h=_number(graw, "h", "grid", positive=True),
        eps_cut=_number(graw, "eps_cut", "grid", allow_none=True),
        rel_cut=_number(graw, "rel_cut", "grid", default=1e-8, positive=True),
        half_width=_number(graw, "half_width", "grid", allow_none=True, positive=True),
        max_half_width=_number(graw, "max_half_width", "grid", default=12.0, positive=True),
    )

    order = data.get("mesh_order", 17)
    if order not in LEBEDEV_ORDERS:
        raise ConfigError("mesh_order", f"must be one of {sorted(LEBEDEV_ORDERS)}")

    sraw = data.get("solver", {})
    _check_keys(sraw, _SOLVER, "solver")
    mode = sraw.get("mode", "auto")
    if mode not in ("auto", "dense", "iterative"):
        raise ConfigError("solver.mode", "must be 'auto', 'dense' or 'iterative'")
    maxiter = sraw.get("gmres_maxiter", 500)
    if not isinstance(maxiter, int) or isinstance(maxiter, bool) or maxiter < 1:
        raise ConfigError("solver.gmres_maxiter", "must be a positive integer")
    solver = SolverConfig(mode=mode, gmres_tol=_number(sraw, "gmres_tol", "solver", default=1e-10, positive=True),
                          gmres_maxiter=maxiter)

    oraw = data.get("oracles", {})
    _check_keys(oraw, _ORACLES, "oracles")
    for k, v in oraw.items():
        if not isinstance(v, bool):
            raise ConfigError(f"oracles.{k}", "must be true or false")
    oracles = OracleConfig(**oraw)

    scraw = data.get("scan", {})
    _check_keys(scraw, _SCAN, "scan")
    scan = ScanConfig(threshold=_number(scraw, "threshold", "scan", default=1e-6, positive=True),
                      report_threshold=_number(scraw, "report_threshold", "scan", default=1e-5, positive=True))

    braw = data.get("bound", {})
    _check_keys(braw, _BOUND, "bound")
    brange = braw.get("range")
    if brange is not None:
        if (not isinstance(brange, list) or len(brange) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in brange)):
            raise ConfigError("bound.range", "must be a pair of numbers")
        brange = tuple(float(x) for x in brange)
    n_scan = braw.get("n_scan", 24)
    if not isinstance(n_scan, int) or isinstance(n_scan, bool) or n_scan < 2:
        raise ConfigError("bound.n_scan", "must be an integer >= 2")
    rich = braw.get("richardson", False)
    if not isinstance(rich, bool):
        raise ConfigError("bound.richardson", "must be true or false")
    bound = BoundConfig(range=brange, n_scan=n_scan, richardson=rich)

    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed", "must be an integer")
    output = data.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output", "must be a string")

    return RunConfig(problem=problem, potential=pot, energies=energies, grid=grid, mass=mass, mesh_order=order,
                     solver=solver, oracles=oracles, scan=scan, bound=bound, output=output, seed=seed,
                     base_dir=str(base_dir))


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError("config", f"file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from exc
    return parse_config(data, base_dir=str(path.parent))


def check_scattering_energies(cfg: RunConfig) -> None:
    """Energies must lie on the continuum and resolve the wavelength: ``k h <= 0.3``."""
    for i, lam in enumerate(cfg.energies):
        where = f"energies[{i}]"
        if cfg.problem == "schrodinger":
            if lam <= 0:
                raise ConfigError(where, f"scattering energy must be positive, got {lam}")
            k = np.sqrt(lam)
            if k * cfg.grid.h > MAX_KH + 1e-12:
                raise ConfigError("grid.h", f"sqrt(lambda) h = {k * cfg.grid.h:.3f} exceeds {MAX_KH} at lambda={lam}")
        else:
            if abs(lam) <= cfg.mass:
                raise ConfigError(where, f"lambda={lam} lies in the gap [-m, m] with m={cfg.mass}")
            k = np.sqrt(lam * lam - cfg.mass**2)
            if k * cfg.grid.h > MAX_KH + 1e-12:
                raise ConfigError("grid.h", f"kappa h = {k * cfg.grid.h:.3f} exceeds {MAX_KH} at lambda={lam}")


def check_bound_range(cfg: RunConfig) -> tuple | None:
    rng = cfg.bound.range
    if rng is None:
        return None
    lo, hi = sorted(rng)
    if cfg.problem == "schrodinger":
        if hi >= 0:
            raise ConfigError("bound.range", "must lie below zero")
    elif lo <= -cfg.mass or hi >= cfg.mass:
        raise ConfigError("bound.range", f"must lie inside the gap (-{cfg.mass}, {cfg.mass})")
    return lo, hi
