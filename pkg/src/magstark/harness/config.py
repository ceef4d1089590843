"""Scenario configuration: a TOML file with nested sections.

Unknown keys anywhere are errors.  Every section except ``potential`` and
``params`` is optional and falls back to the defaults below.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields, replace

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..distortion import DistortionParams
from ..potential import PotentialSpec
from ..regions import region_from_dict


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WindowConfig:
    a: float = -1.0
    b: float = 1.0
    # None: 0.05 * (barrier height - b)
    delta: float | None = None


@dataclass(frozen=True)
class SurgeryConfig:
    region: dict = field(default_factory=lambda: {"shape": "disc", "center": [0.0, 0.0], "radius": 1.5})
    ramp: float = 0.5
    # None: b + 2 delta
    level: float | None = None


@dataclass(frozen=True)
class GridConfig:
    """Spacings are multiples of h.  ``box`` is the domain of the distorted
    operators; ``reference_box`` (default: surgery collar plus
    ``reference_margin``) that of P and P^int."""
    box: tuple = (-3.0, 3.0, -3.0, 3.0)
    reference_box: tuple | None = None
    reference_margin: float = 1.0
    spacing_x: float = 0.5
    spacing_y: float = 0.5
    # bottom spectrum: halve the spacing until the error estimate is < h^2
    refine: bool = False
    max_refinements: int = 3


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 12345
    tol: float = 1e-10
    n_levels: int = 6
    well_seed: tuple = (0.0, 0.0)
    # classical sampling
    r_esc: float = 10.0
    x_esc: float = math.inf
    t_max: float | None = None
    sample_grid: tuple = (6, 6, 2, 4)
    # volume
    mc_samples: int = 1_000_000
    volume_resolution: int = 1200
    # bottom spectrum
    fit_C_max: float = 5.0
    # gap
    gamma_M: float = 0.2
    eps_factor: float = 10.0
    shifts_per_unit: float = 40.0
    # non-trapping
    probe_re: int = 7
    probe_im: int = 4
    probe_iterations: int = 30
    theta_zero_control: bool = True
    # weyl
    relative_bound: float = 0.15
    check_trend: bool = True
    # real-theta invariance
    real_theta: float = 0.05
    refinements: tuple = (60, 120, 240)
    invariance_levels: int = 4
    stability_rel: float = 1e-6


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    emit: tuple = ("json",)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    potential: PotentialSpec
    B: float
    h_list: tuple
    window: WindowConfig = WindowConfig()
    surgery: SurgeryConfig | None = None
    distortion: DistortionParams | None = None
    grid: GridConfig = GridConfig()
    experiment: ExperimentConfig = ExperimentConfig()
    output: OutputConfig = OutputConfig()

    def __post_init__(self):
        hs = tuple(float(h) for h in self.h_list)
        if not hs or any(h <= 0 for h in hs):
            raise ConfigError("h list must be nonempty and positive")
        if any(h1 <= h2 for h1, h2 in zip(hs, hs[1:])):
            raise ConfigError("h list must be strictly descending")
        object.__setattr__(self, "h_list", hs)
        if self.window.a > self.window.b:
            raise ConfigError("window needs a <= b")
        if self.surgery is not None and self.surgery.level is not None:
            d = self.window.delta or 0.0
            if self.surgery.level < self.window.b + 2 * d:
                raise ConfigError("surgery level must be at least b + 2 delta")

    @property
    def region(self):
        return region_from_dict(self.surgery.region) if self.surgery else None

    def with_h(self, h_list):
        return replace(self, h_list=tuple(h_list))

    def to_dict(self):
        out = {"name": self.name, "potential": {"terms": self.potential.to_records(),
                                                "delta0": _num(self.potential.delta0)},
               "params": {"B": self.B, "h": list(self.h_list)},
               "window": _dc(self.window), "grid": _dc(self.grid),
               "experiment": _dc(self.experiment), "output": _dc(self.output)}
        if self.surgery is not None:
            out["surgery"] = _dc(self.surgery)
        if self.distortion is not None:
            out["distortion"] = self.distortion.to_dict()
        return out


def _num(v):
    return v if v is None or math.isfinite(v) else str(v)


def _dc(obj):
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, tuple):
            v = [_num(x) if isinstance(x, float) else x for x in v]
        elif isinstance(v, float):
            v = _num(v)
        out[f.name] = v
    return out


def _build(cls, section, where):
    if section is None:
        return cls()
    if not isinstance(section, dict):
        raise ConfigError(f"[{where}] must be a table")
    names = {f.name: f for f in fields(cls)}
    bad = sorted(set(section) - set(names))
    if bad:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(bad)}")
    kw = {}
    for k, v in section.items():
        default = names[k].default
        if isinstance(default, tuple) or (default is None and isinstance(v, list)):
            v = tuple(v)
        elif isinstance(default, float) and isinstance(v, (int, str)):
            v = float(v)
        kw[k] = v
    return cls(**kw)


_TOP = {"name", "potential", "params", "window", "surgery", "distortion", "grid",
        "experiment", "output"}


def config_from_dict(d, name="scenario"):
    bad = sorted(set(d) - _TOP)
    if bad:
        raise ConfigError(f"unknown section(s): {', '.join(bad)}")
    if "potential" not in d or "params" not in d:
        raise ConfigError("[potential] and [params] are required")
    pot = dict(d["potential"])
    extra = sorted(set(pot) - {"terms", "delta0"})
    if extra:
        raise ConfigError(f"unknown key(s) in [potential]: {', '.join(extra)}")
    spec = PotentialSpec.from_records(pot.get("terms", []))
    if "delta0" in pot:
        spec = PotentialSpec(spec.terms, float(pot["delta0"]))
    params = dict(d["params"])
    extra = sorted(set(params) - {"B", "h"})
    if extra:
        raise ConfigError(f"unknown key(s) in [params]: {', '.join(extra)}")
    if "B" not in params or "h" not in params:
        raise ConfigError("[params] needs B and h")
    hs = params["h"]
    hs = tuple(hs) if isinstance(hs, list) else (hs,)
    dist = None
    if "distortion" in d:
        dd = dict(d["distortion"])
        allowed = {"R0", "ramp_width", "theta_re", "theta_im", "mode", "M_tilde"}
        extra = sorted(set(dd) - allowed)
        if extra:
            raise ConfigError(f"unknown key(s) in [distortion]: {', '.join(extra)}")
        dist = DistortionParams(
            R0=float(dd.get("R0", 1.0)), w=float(dd.get("ramp_width", 0.75)),
            theta=complex(dd.get("theta_re", 0.0), dd.get("theta_im", -0.1)),
            mode=dd.get("mode", "fixed"), M_tilde=float(dd.get("M_tilde", 1.0)))
    surgery = _build(SurgeryConfig, d["surgery"], "surgery") if "surgery" in d else None
    if surgery is not None:
        region_from_dict(surgery.region)
    return ScenarioConfig(
        name=str(d.get("name", name)), potential=spec, B=float(params["B"]), h_list=hs,
        window=_build(WindowConfig, d.get("window"), "window"), surgery=surgery,
        distortion=dist, grid=_build(GridConfig, d.get("grid"), "grid"),
        experiment=_build(ExperimentConfig, d.get("experiment"), "experiment"),
        output=_build(OutputConfig, d.get("output"), "output"))


def load_config(path):
    with open(path, "rb") as f:
        try:
            d = tomllib.load(f)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    stem = str(path).rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return config_from_dict(d, name=stem)
