"""Run configuration: sectioned key-value files with typed parsing.

Data fields (boundary saturation, initial saturation, flux factor,
flux cutoff) are specified through a small expression vocabulary::

    const V            constant value
    poly C0 C1 ...     polynomial in x (low order first)
    bump LO HI AMP     smooth bump supported exactly on (LO, HI)

``s_d_rate`` adds a linear-in-time drift to the boundary saturation.
The bump primitive makes compactly supported smooth cutoffs easy to
state, which the flux model requires.
"""

import configparser
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coefficients import ModelParams
from .fem import Mesh1D, ProblemData
from .hypotheses import check_hypotheses
from .stepping import StepperOptions

__all__ = ["ConfigError", "RunConfig", "load_config", "FieldSpec"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration (CLI exit code 2)."""


def _bump(x, lo, hi, amp):
    x = np.asarray(x, dtype=float)
    u = (2.0 * x - lo - hi) / (hi - lo)
    out = np.zeros_like(x)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = amp * np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out


def _bump_deriv(x, lo, hi, amp):
    x = np.asarray(x, dtype=float)
    u = (2.0 * x - lo - hi) / (hi - lo)
    out = np.zeros_like(x)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    core = amp * np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    out[inside] = core * (-2.0 * ui / (1.0 - ui * ui) ** 2) * (2.0 / (hi - lo))
    return out


@dataclass(frozen=True)
class FieldSpec:
    """Parsed spatial field expression with an analytic derivative."""

    kind: str
    values: tuple

    @classmethod
    def parse(cls, text, where):
        tokens = text.split()
        if not tokens:
            raise ConfigError(f"{where}: empty field expression")
        kind = tokens[0].lower()
        try:
            values = tuple(float(v) for v in tokens[1:])
        except ValueError as exc:
            raise ConfigError(f"{where}: non-numeric value ({exc})") from None
        if kind == "const":
            if len(values) != 1:
                raise ConfigError(f"{where}: const takes one value")
        elif kind == "poly":
            if not values:
                raise ConfigError(f"{where}: poly needs coefficients")
        elif kind == "bump":
            if len(values) != 3:
                raise ConfigError(f"{where}: bump takes LO HI AMP")
            if not values[0] < values[1]:
                raise ConfigError(f"{where}: bump needs LO < HI")
        else:
            raise ConfigError(f"{where}: unknown field kind {kind!r}")
        return cls(kind=kind, values=values)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "const":
            return np.full_like(x, self.values[0])
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(x, self.values)
        return _bump(x, *self.values)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "const":
            return np.zeros_like(x)
        if self.kind == "poly":
            der = np.polynomial.polynomial.polyder(self.values)
            return np.polynomial.polynomial.polyval(x, der)
        return _bump_deriv(x, *self.values)


@dataclass
class RunConfig:
    params: ModelParams
    eps_list: list
    x_left: float
    x_right: float
    elements: int
    left_bc: str
    right_bc: str
    quad_order: int
    s_d_spec: FieldSpec
    s_d_rate: float
    s_i_spec: FieldSpec
    r0_spec: FieldSpec
    sigma_spec: Optional[FieldSpec]
    t_final: float
    stepper: StepperOptions
    n_dim: int
    p_hoelder: float
    entropy_enabled: bool
    m0_setting: str
    csv_stride: int
    profile_stride: int
    mms: dict = field(default_factory=dict)

    def build_mesh(self):
        return Mesh1D.uniform(self.x_left, self.x_right, self.elements,
                              left_bc=self.left_bc, right_bc=self.right_bc,
                              quad_order=self.quad_order)

    def build_data(self):
        sd, rate = self.s_d_spec, self.s_d_rate
        return ProblemData(
            s_d=lambda x, t: sd(x) + rate * t,
            s_d_t=lambda x, t: np.full_like(np.asarray(x, dtype=float), rate),
            s_d_x=lambda x, t: sd.deriv(x),
            s_d_xt=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
            s_i=lambda x: self.s_i_spec(x),
            r0=lambda x, t: self.r0_spec(x),
            sigma=(lambda s: self.sigma_spec(s)) if self.sigma_spec else None,
            t_final=self.t_final)

    def hypothesis_report(self):
        return check_hypotheses(self.params, self.n_dim,
                                self.p_hoelder if self.n_dim == 2 else None)

    def hypotheses_pass(self, report=None):
        rep = report or self.hypothesis_report()
        if self.entropy_enabled:
            return rep.overall_pass
        return rep.structure_pass and rep.admissibility_pass

    def resolve_m0(self):
        if self.m0_setting != "auto":
            return float(self.m0_setting)
        rep = self.hypothesis_report()
        return rep.m0_default if rep.m0_default is not None else 1.5


class _Section:
    def __init__(self, parser, name, path):
        self.name = name
        self.path = path
        self.data = parser[name] if parser.has_section(name) else {}

    def _fetch(self, key, default, cast):
        if key not in self.data:
            if default is _REQUIRED:
                raise ConfigError(f"{self.path}: missing [{self.name}] {key}")
            return default
        raw = self.data[key]
        try:
            return cast(raw)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(
                f"{self.path}: bad value for [{self.name}] {key}: {exc}") from None

    def get_float(self, key, default=None):
        return self._fetch(key, default, float)

    def get_int(self, key, default=None):
        return self._fetch(key, default, int)

    def get_str(self, key, default=None):
        return self._fetch(key, default, str.strip)

    def get_floats(self, key, default=None):
        return self._fetch(key, default,
                           lambda raw: [float(v) for v in raw.split()])

    def get_bool(self, key, default=None):
        def cast(raw):
            val = raw.strip().lower()
            if val in ("1", "on", "true", "yes"):
                return True
            if val in ("0", "off", "false", "no"):
                return False
            raise ValueError(f"expected on/off, got {raw!r}")
        return self._fetch(key, default, cast)

    def get_field(self, key, default=None):
        return self._fetch(
            key, default,
            lambda raw: FieldSpec.parse(raw, f"[{self.name}] {key}"))


class _Required:
    pass


_REQUIRED = _Required()


def load_config(path):
    """Parse and validate one run configuration file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"{path}: cannot read config file")

    model = _Section(parser, "model", path)
    try:
        params = ModelParams(
            mu=model.get_float("mu", _REQUIRED),
            lam=model.get_float("lambda", _REQUIRED),
            gamma=model.get_float("gamma", _REQUIRED),
            t_m=model.get_float("t_m", _REQUIRED),
            beta1=model.get_float("beta1", _REQUIRED),
            beta2=model.get_float("beta2", _REQUIRED),
            g_coeffs=tuple(model.get_floats("g", [1.0])),
            h_coeffs=tuple(model.get_floats("h", [1.0])))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: [model] rejected: {exc}") from None

    reg = _Section(parser, "regularization", path)
    eps_list = reg.get_floats("epsilon", _REQUIRED)
    for eps in eps_list:
        if not 0.0 < eps < 0.5:
            raise ConfigError(
                f"{path}: [regularization] epsilon {eps} outside (0, 1/2)")

    mesh = _Section(parser, "mesh", path)
    problem = _Section(parser, "problem", path)
    stepper = _Section(parser, "stepper", path)
    hyp = _Section(parser, "hypotheses", path)
    diag = _Section(parser, "diagnostics", path)
    out = _Section(parser, "output", path)
    mms = _Section(parser, "mms", path)

    n_dim = hyp.get_int("n", 1)
    if n_dim not in (1, 2, 3):
        raise ConfigError(f"{path}: [hypotheses] n must be 1, 2 or 3")
    m0_setting = diag.get_str("m0", "auto")
    if m0_setting != "auto":
        m0_val = float(m0_setting)
        if not 1.0 < m0_val < 2.0:
            raise ConfigError(f"{path}: [diagnostics] m0 must lie in (1, 2)")

    cfg = RunConfig(
        params=params,
        eps_list=eps_list,
        x_left=mesh.get_float("x_left", 0.0),
        x_right=mesh.get_float("x_right", 1.0),
        elements=mesh.get_int("elements", 64),
        left_bc=mesh.get_str("left_bc", "dirichlet"),
        right_bc=mesh.get_str("right_bc", "neumann"),
        quad_order=mesh.get_int("quad_order", 5),
        s_d_spec=problem.get_field("s_d", _REQUIRED),
        s_d_rate=problem.get_float("s_d_rate", 0.0),
        s_i_spec=problem.get_field("s_i", _REQUIRED),
        r0_spec=problem.get_field("r0", FieldSpec("const", (0.0,))),
        sigma_spec=problem.get_field("sigma", None),
        t_final=problem.get_float("t_final", _REQUIRED),
        stepper=StepperOptions(
            dt=stepper.get_float("dt", _REQUIRED),
            dt_min=stepper.get_float("dt_min", 1e-10),
            tol_nl=stepper.get_float("tol_nl", 1e-10),
            max_iters=stepper.get_int("max_iters", 50)),
        n_dim=n_dim,
        p_hoelder=hyp.get_float("p", 4.0),
        entropy_enabled=diag.get_bool("entropy", True),
        m0_setting=m0_setting,
        csv_stride=out.get_int("csv_stride", 1),
        profile_stride=out.get_int("profile_stride", 10),
        mms={
            "amplitude": mms.get_float("amplitude", 0.25),
            "rate": mms.get_float("rate", 1.0),
            "s_center": mms.get_float("s_center", 0.5),
            "t_final": mms.get_float("t_final", 0.25),
            "elements": mms.get_int("elements", 8),
            "spatial_levels": mms.get_int("spatial_levels", 5),
            "dt_coarse": mms.get_float("dt_coarse", 0.03125),
            "temporal_elements": mms.get_int("temporal_elements", 192),
            "temporal_levels": mms.get_int("temporal_levels", 5),
            "dt_base": mms.get_float("dt_base", 0.25 / 16.0),
        })

    if cfg.x_left >= cfg.x_right:
        raise ConfigError(f"{path}: [mesh] needs x_left < x_right")
    if cfg.elements < 1:
        raise ConfigError(f"{path}: [mesh] needs at least one element")
    if cfg.t_final <= 0.0:
        raise ConfigError(f"{path}: [problem] t_final must be positive")
    if n_dim == 2 and cfg.p_hoelder <= 2.0:
        raise ConfigError(f"{path}: [hypotheses] p must exceed 2 for n = 2")
    try:
        cfg.build_mesh()
        cfg.build_data().validate(cfg.build_mesh())
    except ValueError as exc:
        raise ConfigError(f"{path}: data rejected: {exc}") from None
    return cfg
