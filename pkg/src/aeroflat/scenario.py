"""Scenario files: flat-output trajectories, iteration and feedback settings."""
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from . import yamlio
from .errors import ConfigError
from .expr import Expression
from .flatplan import CHOICES, ControlMode, FlatOutputChoice, FlatOutputTrajectory
from .genflat import IterationPlan
from .track import PoleConfig, chain_orders

MODES = ("plan", "open_loop", "feedback", "trim_table", "convergence_table")
TOP_KEYS = ("name", "description", "aircraft", "flat_output", "trajectory", "time", "iteration", "control",
            "poles", "simulation", "trim_table", "convergence_table", "modes", "output")


@dataclass
class TrimRow:
    model: str
    alpha: float
    beta: float


@dataclass
class ScenarioConfig:
    name: str
    aircraft: str
    trajectory: dict                    # x, y, z, zeta -> Expression
    t_start: float
    t_end: float
    steps: int
    flat_output: str = "beta"
    weights: tuple = (None, None)       # combo weights as Expressions
    J: int = 4
    e: int = 1
    L: int = 2
    r: int = 4
    u4: str = "delta_n"
    eta: Expression = field(default_factory=lambda: Expression("0"))
    delta_n: Expression = field(default_factory=lambda: Expression("0"))
    poles: tuple = None
    substeps: int = 20
    perturbation: dict = field(default_factory=dict)
    feedback_model: str = "simplified"
    trim_rows: list = field(default_factory=list)
    trim_fixed: dict = field(default_factory=dict)
    convergence_t: float = None
    convergence_J: int = 7
    modes: tuple = ("plan",)
    output: str = None
    description: str = ""
    source: str = None

    # builders -----------------------------------------------------------
    def choice(self):
        if self.flat_output == "combo":
            return FlatOutputChoice("combo", self.weights[0], self.weights[1])
        return FlatOutputChoice(self.flat_output)

    def flat_trajectory(self):
        tr = self.trajectory
        return FlatOutputTrajectory(tr["x"], tr["y"], tr["z"], tr.get("zeta", Expression("0")))

    def iteration_plan(self, J=None):
        return IterationPlan(J=self.J if J is None else J, e=self.e, L=self.L, r=self.r)

    def control_mode(self):
        return ControlMode(self.u4, eta=self.eta, delta_n=self.delta_n)

    def pole_config(self):
        if self.poles is None:
            raise ConfigError(f"{self.source or self.name}: feedback needs a 'poles' entry")
        return PoleConfig(self.poles)

    def aircraft_base(self):
        return None if self.source is None else os.path.dirname(os.path.abspath(self.source))


def _expr(d, key, source, default=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"{yamlio.where(d, source=source)}: missing key {key!r}")
        return Expression(default)
    return Expression(d[key], source=yamlio.where(d, key, source))


def _int(d, key, source, default, low=0):
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < low:
        raise ConfigError(f"{yamlio.where(d, key, source)}: {key!r} must be an integer >= {low}")
    return v


def _poles(v, kind, source, where):
    want = chain_orders(kind)
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        rows = tuple((float(v),) * n for n in want)
    elif isinstance(v, list) and all(isinstance(r, list) for r in v):
        rows = tuple(tuple(r) for r in v)
    else:
        raise ConfigError(f"{where}: poles must be a number or a list of lists")
    for r in rows:
        for x in r:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ConfigError(f"{where}: pole values must be numbers, got {x!r}")
    pc = PoleConfig(rows)
    if tuple(len(r) for r in pc.lambdas) != want:
        raise ConfigError(f"{where}: pole lists for flat output '{kind}' must have lengths {want}, "
                          f"got {tuple(len(r) for r in pc.lambdas)}")
    return pc.lambdas


def parse_scenario(doc, source=None):
    yamlio.check_keys(doc, TOP_KEYS, ("aircraft", "trajectory", "time"), source, "scenario")
    name = str(doc.get("name", Path(source).stem if source else "scenario"))

    fo = doc.get("flat_output", {"kind": "beta"})
    if isinstance(fo, str):
        fo = {"kind": fo}
    yamlio.check_keys(fo, ("kind", "f1", "f2"), ("kind",), source, "flat_output")
    kind = fo["kind"]
    if kind not in CHOICES:
        raise ConfigError(f"{yamlio.where(fo, 'kind', source)}: flat output must be one of {CHOICES}")
    weights = (None, None)
    if kind == "combo":
        weights = (_expr(fo, "f1", source), _expr(fo, "f2", source))

    tr = doc["trajectory"]
    yamlio.check_keys(tr, ("x", "y", "z", "zeta"), ("x", "y", "z"), source, "trajectory")
    traj = {k: _expr(tr, k, source, "0") for k in ("x", "y", "z", "zeta")}

    tm = doc["time"]
    yamlio.check_keys(tm, ("start", "end", "steps"), ("start", "end", "steps"), source, "time")
    t0 = yamlio.number(tm, "start", source)
    t1 = yamlio.number(tm, "end", source)
    if not t1 > t0:
        raise ConfigError(f"{yamlio.where(tm, 'end', source)}: end must exceed start")
    steps = _int(tm, "steps", source, None, low=1)

    it = doc.get("iteration", {})
    yamlio.check_keys(it, ("J", "e", "L", "r"), (), source, "iteration")
    J, e = _int(it, "J", source, 4), _int(it, "e", source, 1, 1)
    L, r = _int(it, "L", source, 2), _int(it, "r", source, 4, 1)

    ct = doc.get("control", {})
    yamlio.check_keys(ct, ("u4", "eta", "delta_n"), (), source, "control")
    u4 = ct.get("u4", "delta_n")
    if u4 not in ("delta_n", "eta"):
        raise ConfigError(f"{yamlio.where(ct, 'u4', source)}: u4 must be 'delta_n' or 'eta'")

    poles = None
    if "poles" in doc:
        poles = _poles(doc["poles"], kind, source, yamlio.where(doc, "poles", source))

    sm = doc.get("simulation", {})
    yamlio.check_keys(sm, ("substeps", "perturbation", "feedback_model"), (), source, "simulation")
    substeps = _int(sm, "substeps", source, 20, 1)
    pert = sm.get("perturbation", {}) or {}
    yamlio.check_keys(pert, ("x", "y", "z", "V", "gamma", "chi", "alpha", "beta", "mu", "p", "q", "r"),
                      (), source, "perturbation")
    pert = {k: yamlio.number(pert, k, source) for k in pert}
    fmodel = sm.get("feedback_model", "simplified")
    if fmodel not in ("simplified", "full"):
        raise ConfigError(f"{yamlio.where(sm, 'feedback_model', source)}: must be 'simplified' or 'full'")

    rows, fixed = [], {}
    if "trim_table" in doc:
        tt = doc["trim_table"]
        yamlio.check_keys(tt, ("rows", "fixed"), ("rows",), source, "trim_table")
        fx = tt.get("fixed", {}) or {}
        fixed = {k: yamlio.number(fx, k, source) for k in fx}
        for k, row in enumerate(tt["rows"]):
            yamlio.check_keys(row, ("model", "alpha", "beta"), ("model", "alpha", "beta"), source, "trim row")
            if row["model"] not in ("full", "simplified"):
                raise ConfigError(f"{yamlio.where(row, 'model', source)}: model must be 'full' or 'simplified'")
            rows.append(TrimRow(row["model"], yamlio.number(row, "alpha", source),
                                yamlio.number(row, "beta", source)))

    conv_t, conv_J = None, 7
    if "convergence_table" in doc:
        cv = doc["convergence_table"]
        yamlio.check_keys(cv, ("t", "J_max"), ("t",), source, "convergence_table")
        conv_t = yamlio.number(cv, "t", source)
        conv_J = _int(cv, "J_max", source, 7)

    modes = doc.get("modes", ["plan"])
    if isinstance(modes, str):
        modes = [modes]
    for k, m in enumerate(modes):
        if m not in MODES:
            raise ConfigError(f"{yamlio.where(modes, k, source)}: unknown mode {m!r}; allowed {MODES}")

    cfg = ScenarioConfig(
        name=name, aircraft=str(doc["aircraft"]), trajectory=traj, t_start=t0, t_end=t1, steps=steps,
        flat_output=kind, weights=weights, J=J, e=e, L=L, r=r, u4=u4,
        eta=_expr(ct, "eta", source, "0"), delta_n=_expr(ct, "delta_n", source, "0"), poles=poles,
        substeps=substeps, perturbation=pert, feedback_model=fmodel, trim_rows=rows, trim_fixed=fixed,
        convergence_t=conv_t, convergence_J=conv_J, modes=tuple(modes), output=doc.get("output"),
        description=str(doc.get("description", "")), source=source,
    )
    try:
        cfg.iteration_plan()
    except ConfigError as e:
        raise ConfigError(f"{yamlio.where(doc, 'iteration', source)}: {e}") from None
    return cfg


def load_scenario(path):
    path = resolve_scenario(path)
    return parse_scenario(yamlio.load_file(path), source=str(path))


def loads_scenario(text, source="<string>"):
    return parse_scenario(yamlio.load(text, source), source=source)


def bundled_scenarios():
    root = resources.files("aeroflat") / "data" / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve_scenario(ref):
    p = Path(ref)
    if p.exists():
        return p
    if p.suffix == "" and ref in bundled_scenarios():
        return Path(str(resources.files("aeroflat") / "data" / "scenarios" / f"{ref}.yaml"))
    raise ConfigError(f"scenario {ref!r} not found (bundled: {', '.join(bundled_scenarios())})")


def to_document(cfg):
    """Plain mapping that :func:`parse_scenario` reads back to an equal config."""
    fo = {"kind": cfg.flat_output}
    if cfg.flat_output == "combo":
        fo["f1"], fo["f2"] = str(cfg.weights[0]), str(cfg.weights[1])
    doc = {
        "name": cfg.name,
        "description": cfg.description,
        "aircraft": cfg.aircraft,
        "flat_output": fo,
        "trajectory": {k: str(v) for k, v in cfg.trajectory.items()},
        "time": {"start": cfg.t_start, "end": cfg.t_end, "steps": cfg.steps},
        "iteration": {"J": cfg.J, "e": cfg.e, "L": cfg.L, "r": cfg.r},
        "control": {"u4": cfg.u4, "eta": str(cfg.eta), "delta_n": str(cfg.delta_n)},
        "simulation": {"substeps": cfg.substeps, "perturbation": dict(cfg.perturbation),
                       "feedback_model": cfg.feedback_model},
        "modes": list(cfg.modes),
    }
    if cfg.poles is not None:
        doc["poles"] = [list(r) for r in cfg.poles]
    if cfg.trim_rows:
        doc["trim_table"] = {"fixed": dict(cfg.trim_fixed),
                             "rows": [{"model": r.model, "alpha": r.alpha, "beta": r.beta} for r in cfg.trim_rows]}
    if cfg.convergence_t is not None:
        doc["convergence_table"] = {"t": cfg.convergence_t, "J_max": cfg.convergence_J}
    if cfg.output is not None:
        doc["output"] = cfg.output
    return doc


def serialize(cfg):
    return yaml.safe_dump(to_document(cfg), sort_keys=False, width=100)


def semantically_equal(a, b):
    skip = ("source",)
    return all(getattr(a, f) == getattr(b, f) for f in a.__dataclass_fields__ if f not in skip)
