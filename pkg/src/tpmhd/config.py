"""Run configuration: plain key = value files, validated and typed.

The format is deliberately minimal: one assignment per line, blank
lines and # comments ignored, no sections, no quoting.  Unknown keys
are rejected by name and line number, so a typo cannot silently fall
back to a default.  All numeric parameters must be positive; the time
step may be given directly (dt) or derived from the mesh (dt_rule).
"""

from dataclasses import dataclass

from .forms import SchemeParams

EXPERIMENTS = ("converge", "spinodal", "kh")
CASES = ("I", "II")
DT_RULES = ("h2", "h3", "fixed")
KH_MODES = ("single", "double")

# config key -> (attribute, converter); lambda names the capillary
# coefficient in files but is a reserved word as an attribute
_FLOAT_KEYS = {
    "dt": "dt", "T_final": "T_final", "gamma": "gamma",
    "mobility": "mobility", "nu": "nu", "mu": "mu", "lambda": "lam",
    "sigma": "sigma", "newton_tol": "newton_tol", "lin_tol": "lin_tol",
}
_INT_KEYS = {"n": "n", "seed": "seed", "newton_max": "newton_max",
             "dump_every": "dump_every"}
_CHOICE_KEYS = {"experiment": ("experiment", EXPERIMENTS),
                "case": ("case", CASES),
                "dt_rule": ("dt_rule", DT_RULES),
                "kh_mode": ("kh_mode", KH_MODES)}


class ConfigError(ValueError):
    """Invalid configuration file content."""


@dataclass
class RunConfig:
    """Typed configuration of one run with all defaults resolved."""

    experiment: str = ""
    case: str = "I"
    n: int = 0
    n_list: tuple = ()
    dt: float = 0.0
    dt_rule: str = ""
    T_final: float = 1.0
    gamma: float = 1.0
    mobility: float = 1.0
    nu: float = 1.0
    mu: float = 1.0
    lam: float = 1.0
    sigma: float = 1.0
    seed: int = 0
    kh_mode: str = "single"
    newton_tol: float = 1e-10
    newton_max: int = 30
    lin_tol: float = 1e-10
    output_dir: str = ""
    dump_every: int = 0

    def scheme_params(self, dt):
        return SchemeParams(gamma=self.gamma, mobility=self.mobility,
                            nu=self.nu, mu=self.mu, lam=self.lam,
                            sigma=self.sigma, dt=dt, T_final=self.T_final,
                            newton_tol=self.newton_tol,
                            newton_max=self.newton_max,
                            lin_tol=self.lin_tol, seed=self.seed)

    def resolve_dt(self, n):
        """Time step and step count for a mesh of refinement n.

        The nominal step follows dt_rule on the mesh size h = sqrt(2)/n
        (h2: dt = h*h, h3: dt = h**3) or is the configured dt.  The
        count is the nearest integer of T_final over the nominal step
        and the step is adjusted to land on T_final exactly.
        """
        h = 2.0 ** 0.5 / n
        if self.dt_rule == "h2":
            nominal = h * h
        elif self.dt_rule == "h3":
            nominal = h ** 3
        else:
            nominal = self.dt
        n_steps = max(1, round(self.T_final / nominal))
        return self.T_final / n_steps, n_steps


def _positive(value, key, line_no):
    if not value > 0.0:
        raise ConfigError(f"line {line_no}: {key} must be positive")


def parse_text(text):
    """Parse configuration text; see parse_config for the format."""
    cfg = RunConfig()
    seen = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key = value, "
                              f"got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {line_no}: expected key = value, "
                              f"got {line!r}")
        if key in seen:
            raise ConfigError(f"line {line_no}: duplicate key {key}")
        seen.add(key)
        if key in _FLOAT_KEYS:
            try:
                num = float(value)
            except ValueError:
                raise ConfigError(
                    f"line {line_no}: {key} expects a number, "
                    f"got {value!r}") from None
            _positive(num, key, line_no)
            setattr(cfg, _FLOAT_KEYS[key], num)
        elif key in _INT_KEYS:
            try:
                num = int(value)
            except ValueError:
                raise ConfigError(
                    f"line {line_no}: {key} expects an integer, "
                    f"got {value!r}") from None
            if key == "n":
                _positive(num, key, line_no)
            elif num < 0:
                raise ConfigError(f"line {line_no}: {key} must not be "
                                  "negative")
            setattr(cfg, _INT_KEYS[key], num)
        elif key in _CHOICE_KEYS:
            attr, allowed = _CHOICE_KEYS[key]
            if value not in allowed:
                raise ConfigError(
                    f"line {line_no}: {key} must be one of "
                    f"{', '.join(allowed)}, got {value!r}")
            setattr(cfg, attr, value)
        elif key == "n_list":
            try:
                entries = tuple(int(part) for part in value.split(","))
            except ValueError:
                raise ConfigError(
                    f"line {line_no}: n_list expects comma-separated "
                    f"integers, got {value!r}") from None
            if not entries or any(e <= 0 for e in entries):
                raise ConfigError(f"line {line_no}: n_list entries must "
                                  "be positive")
            if any(b <= a for a, b in zip(entries, entries[1:])):
                raise ConfigError(f"line {line_no}: n_list must be "
                                  "strictly increasing")
            cfg.n_list = entries
        elif key == "output_dir":
            cfg.output_dir = value
        else:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
    _validate(cfg)
    return cfg


def _validate(cfg):
    if not cfg.experiment:
        raise ConfigError("missing required key: experiment")
    if cfg.dt and cfg.dt_rule and cfg.dt_rule != "fixed":
        raise ConfigError("dt and dt_rule conflict; use dt_rule = fixed "
                          "to keep an explicit dt")
    if cfg.dt_rule == "fixed" and not cfg.dt:
        raise ConfigError("dt_rule = fixed requires dt")
    if cfg.experiment == "converge":
        if not cfg.n_list:
            if not cfg.n:
                raise ConfigError("converge requires n or n_list")
            cfg.n_list = (cfg.n,)
        if not cfg.dt and not cfg.dt_rule:
            cfg.dt_rule = "h2" if cfg.case == "I" else "h3"
    else:
        if not cfg.n:
            raise ConfigError(f"{cfg.experiment} requires n")
        if not cfg.dt and cfg.dt_rule not in ("h2", "h3"):
            raise ConfigError(f"{cfg.experiment} requires dt or a mesh "
                              "dt_rule")


def parse_config(path):
    """Read and validate a configuration file.

    Parameters
    ----------
    path : str or pathlib.Path

    Returns
    -------
    RunConfig

    Raises
    ------
    ConfigError
        Malformed line, unknown or duplicate key, invalid value, or a
        missing required key.
    """
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    return parse_text(text)
