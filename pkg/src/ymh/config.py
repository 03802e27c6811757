"""Line-based ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored; every other line must be an
assignment to a known key.  Values are validated on parse, and
``parse_config(emit_config(c)) == c`` for every valid ``c``.
"""

from dataclasses import asdict, dataclass, fields, replace

from .errors import ParseError, ValidationError

BOUNDARIES = ("periodic", "dirichlet")
INITS = ("trivial", "perturbed", "sweepout", "hedgehog", "snapshot")


@dataclass(frozen=True)
class RunConfig:
    """Every knob a subcommand may read; unused keys are simply ignored by it."""

    # grid
    n: int = 32
    h: float = 1.0 / 32
    boundary: str = "periodic"
    twist_n: int = 0
    # couplings
    epsilon: float = 1.0 / 32
    lam: float = 1.0
    # descent
    step0: float = 1.0
    tol_residual: float = 1e-6
    max_iters: int = 1000
    backtrack: float = 0.5
    # initial data and probes
    init: str = "perturbed"
    input: str = ""
    amplitude: float = 0.1
    trials: int = 20
    seed: int = 0
    y_samples: int = 100
    window: float = 4.0
    # radial profiles
    r_max: float = 20.0
    radial_n: int = 4000
    # measures
    radius: float = 2.0
    level: int = 4
    eta_star_user: float = 1.0
    min_boundary_higgs: float = 0.5


# key as written in files -> field name
_ALIASES = {"lambda": "lam"}
_KEYS = {f.name: f for f in fields(RunConfig)}
_FILE_KEY = {v: k for k, v in _ALIASES.items()}

_POSITIVE = {"h", "epsilon", "step0", "tol_residual", "amplitude", "window", "r_max",
             "radius", "eta_star_user"}


def _check(key, value):
    if key in _POSITIVE and not value > 0:
        raise ValidationError(_FILE_KEY.get(key, key), f"must be positive, got {value!r}")
    if key == "n" and value < 4:
        raise ValidationError(key, "must be at least 4")
    if key == "lam" and not value >= 0:
        raise ValidationError("lambda", f"must be non-negative, got {value!r}")
    if key in ("max_iters", "twist_n") and value < 0:
        raise ValidationError(key, "must be non-negative")
    if key in ("trials", "y_samples", "level") and value < 1:
        raise ValidationError(key, "must be at least 1")
    if key == "radial_n" and value < 1000:
        raise ValidationError(key, "must be at least 1000")
    if key == "seed" and not 0 <= value < 2 ** 64:
        raise ValidationError(key, "must be an unsigned 64-bit integer")
    if key == "backtrack" and not 0 < value < 1:
        raise ValidationError(key, "must lie in (0, 1)")
    if key == "min_boundary_higgs" and not 0 <= value < 1:
        raise ValidationError(key, "must lie in [0, 1)")
    if key == "boundary" and value not in BOUNDARIES:
        raise ValidationError(key, f"must be one of {', '.join(BOUNDARIES)}")
    if key == "init" and value not in INITS:
        raise ValidationError(key, f"must be one of {', '.join(INITS)}")


def _convert(key, raw):
    kind = _KEYS[key].type
    name = _FILE_KEY.get(key, key)
    if kind in (str, "str"):
        return raw
    try:
        if kind in (int, "int"):
            return int(raw, 0)
        value = float(raw)
    except ValueError:
        raise ValidationError(name, f"cannot read {raw!r} as {kind}") from None
    if value != value or value in (float("inf"), float("-inf")):
        raise ValidationError(name, "must be finite")
    return value


def validate(cfg):
    for key, value in asdict(cfg).items():
        _check(key, value)
    if cfg.init == "snapshot" and not cfg.input:
        raise ValidationError("input", "init = snapshot needs an input path")
    if cfg.twist_n and cfg.boundary != "periodic":
        raise ValidationError("twist_n", "a twist needs a periodic grid")
    return cfg


def parse_config(text, base=None):
    """Parse configuration text into a validated :class:`RunConfig`.

    Raises
    ------
    ParseError
        Malformed line, unknown key or repeated key (with 1-based line number).
    ValidationError
        A value of the wrong type or out of range (with the key).
    """
    seen = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, raw = body.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ParseError(lineno, f"expected 'key = value', got {line.strip()!r}")
        name = _ALIASES.get(key, key)
        if name not in _KEYS or key in _FILE_KEY:
            raise ParseError(lineno, f"unknown key {key!r}")
        if name in seen:
            raise ParseError(lineno, f"duplicate key {key!r} (first on line {seen[name][0]})")
        seen[name] = (lineno, _convert(name, raw))
    cfg = replace(base or RunConfig(), **{k: v for k, (_, v) in seen.items()})
    return validate(cfg)


def emit_config(cfg):
    """Text form of ``cfg`` listing every key; floats use ``repr`` so values survive exactly."""
    lines = []
    for key, value in asdict(cfg).items():
        text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{_FILE_KEY.get(key, key)} = {text}")
    return "\n".join(lines) + "\n"


def load_config(path, base=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), base)
