"""Simulation configuration and its ``key = value`` text format.

Keys are dotted (``grid.n_rbs = 270``); ``#`` starts a comment; unknown or
repeated keys are errors. Example::

    n_tx = 4
    schemes = WB:legacy, SB:legacy, SB:proposed(3,3,3), SB:svd
    snr.start_db = -8
    snr.stop_db = 4
"""
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .channel import GridSpec, exp_pdp
from .codebook import parse_codebook_spec
from .exceptions import ConfigError, SbPrecodeError
from .linkabs import McsModel
from .precoding import Mode


@dataclass(frozen=True)
class Scheme:
    """One precoding scheme: selection mode plus codebook token (or ``svd``)."""

    mode: Mode
    codebook: str

    @classmethod
    def parse(cls, text):
        mode, sep, cb = text.strip().partition(":")
        if not sep:
            raise ValueError(f"scheme {text.strip()!r} must look like MODE:CODEBOOK")
        return cls(Mode(mode.strip().upper()), cb.strip().lower())

    @property
    def name(self):
        return f"{self.mode.value}-{self.codebook}"

    @property
    def is_svd(self):
        return self.codebook == "svd"

    def build(self, n_tx):
        """The scheme's :class:`Codebook`, or ``None`` for the SVD precoder."""
        return None if self.is_svd else parse_codebook_spec(self.codebook, n_tx)

    def __str__(self):
        return f"{self.mode.value}:{self.codebook}"


DEFAULT_SCHEMES = (Scheme(Mode.WB, "legacy"), Scheme(Mode.SB, "legacy"))


@dataclass(frozen=True)
class SimConfig:
    grid: GridSpec = field(default_factory=GridSpec)
    n_taps: int = 12
    rms_delay_spread_s: float = 300e-9
    max_delay_s: float = 2e-6
    n_rx: int = 8
    n_tx: int = 2
    schemes: tuple = DEFAULT_SCHEMES
    sbs_rbs: int = 1
    snr_start_db: float = -10.0
    snr_stop_db: float = 10.0
    snr_step_db: float = 0.25
    n_tbs: int = 1500
    seed: int = 0
    mcs: McsModel = field(default_factory=McsModel)
    sbs_list: tuple = (1, 2, 5, 10, 30, 90, 270)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n_tx not in (2, 4, 8):
            raise ConfigError("n_tx", f"must be 2, 4 or 8, got {self.n_tx}")
        if self.n_rx < 1:
            raise ConfigError("n_rx", f"must be >= 1, got {self.n_rx}")
        if self.n_tbs < 1:
            raise ConfigError("n_tbs", f"must be >= 1, got {self.n_tbs}")
        if self.seed < 0:
            raise ConfigError("seed", f"must be >= 0, got {self.seed}")
        if not self.snr_step_db > 0:
            raise ConfigError("snr.step_db", f"must be > 0, got {self.snr_step_db}")
        if self.snr_stop_db < self.snr_start_db:
            raise ConfigError("snr.stop_db", "must be >= snr.start_db")
        if not 1 <= self.sbs_rbs <= self.grid.n_rbs:
            raise ConfigError("sbs_rbs", f"must be in [1, {self.grid.n_rbs}], got {self.sbs_rbs}")
        for s in self.sbs_list:
            if not 1 <= s <= self.grid.n_rbs:
                raise ConfigError("sbs.list", f"sub-band size {s} outside [1, {self.grid.n_rbs}]")
        names = [s.name for s in self.schemes]
        if len(set(names)) != len(names):
            raise ConfigError("schemes", "duplicate scheme")
        for s in self.schemes:
            try:
                s.build(self.n_tx)
            except SbPrecodeError as exc:
                raise ConfigError("schemes", f"{s}: {exc}") from None
        try:
            self.profile
        except SbPrecodeError as exc:
            raise ConfigError("profile", str(exc)) from None

    @property
    def profile(self):
        return exp_pdp(self.n_taps, self.rms_delay_spread_s, self.max_delay_s)

    @property
    def snr_grid_db(self):
        """Sweep points, rounded to 6 significant digits so CSV output is exact."""
        n = int(np.floor((self.snr_stop_db - self.snr_start_db) / self.snr_step_db + 1e-9)) + 1
        return tuple(float(f"{self.snr_start_db + i * self.snr_step_db:.6g}") + 0.0 for i in range(n))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in _dump(self).items())


def _split_top_level(text):
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def _int_list(text):
    return tuple(int(x) for x in _split_top_level(text))


def _schemes(text):
    return tuple(Scheme.parse(p) for p in _split_top_level(text))


# key -> (dataclass path, parser)
_KEYS = {
    "grid.n_rbs": (("grid", "n_rbs"), int),
    "grid.sc_per_rb": (("grid", "sc_per_rb"), int),
    "grid.scs_hz": (("grid", "scs_hz"), float),
    "profile.n_taps": (("n_taps",), int),
    "profile.rms_delay_spread_s": (("rms_delay_spread_s",), float),
    "profile.max_delay_s": (("max_delay_s",), float),
    "n_rx": (("n_rx",), int),
    "n_tx": (("n_tx",), int),
    "schemes": (("schemes",), _schemes),
    "sbs_rbs": (("sbs_rbs",), int),
    "snr.start_db": (("snr_start_db",), float),
    "snr.stop_db": (("snr_stop_db",), float),
    "snr.step_db": (("snr_step_db",), float),
    "n_tbs": (("n_tbs",), int),
    "seed": (("seed",), int),
    "mcs.spectral_eff_bits": (("mcs", "spectral_eff_bits"), float),
    "mcs.shannon_gap_db": (("mcs", "shannon_gap_db"), float),
    "mcs.transition_slope": (("mcs", "transition_slope"), float),
    "sbs.list": (("sbs_list",), _int_list),
}


def _dump(cfg):
    out = {}
    for key, (path, _) in _KEYS.items():
        obj = cfg
        for attr in path:
            obj = getattr(obj, attr)
        if isinstance(obj, tuple):
            obj = ", ".join(str(x) for x in obj)
        elif isinstance(obj, float):
            obj = repr(obj)
        out[key] = obj
    return out


def parse_pairs(text):
    """Parse ``key = value`` lines into an ordered dict of raw strings."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        if key in pairs:
            raise ConfigError(key, f"repeated on line {lineno}")
        pairs[key] = value.strip()
    return pairs


def apply_pairs(cfg, pairs):
    """Return ``cfg`` with the raw ``pairs`` applied; errors name the key."""
    top, nested = {}, {"grid": {}, "mcs": {}}
    for key, value in pairs.items():
        if key not in _KEYS:
            raise ConfigError(key, "unknown key")
        path, conv = _KEYS[key]
        try:
            parsed = conv(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(key, f"cannot parse {value!r}: {exc}") from None
        if len(path) == 2:
            nested[path[0]][path[1]] = parsed
        else:
            top[path[0]] = parsed
    try:
        if nested["grid"]:
            top["grid"] = dataclasses.replace(cfg.grid, **nested["grid"])
        if nested["mcs"]:
            top["mcs"] = dataclasses.replace(cfg.mcs, **nested["mcs"])
    except SbPrecodeError as exc:
        raise ConfigError(next(k for k in pairs if k.startswith(("grid.", "mcs."))), str(exc)) from None
    return dataclasses.replace(cfg, **top)


def parse_config(text, base=None):
    return apply_pairs(base or SimConfig(), parse_pairs(text))


def load_config(path, base=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, base)
