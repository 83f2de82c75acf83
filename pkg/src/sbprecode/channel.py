"""Frequency-selective MIMO channels over an OFDM resource grid.

A tapped-delay-line model with an exponential power-delay profile and
i.i.d. Rayleigh gains per (tap, rx, tx). The channel is constant over one
transport block.
"""
import enum
import io
import struct
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import rng as rng_streams
from .exceptions import ParameterError, StructuralError

_MAGIC = b"SBPCHGRID1\n"


@dataclass(frozen=True)
class GridSpec:
    n_rbs: int = 270
    sc_per_rb: int = 12
    scs_hz: float = 30e3

    def __post_init__(self):
        if self.n_rbs < 1 or self.sc_per_rb < 1:
            raise ParameterError(f"grid needs n_rbs >= 1 and sc_per_rb >= 1, got {self}")
        if not self.scs_hz > 0:
            raise ParameterError(f"scs_hz must be positive, got {self.scs_hz}")

    @property
    def n_sc(self):
        return self.n_rbs * self.sc_per_rb

    @property
    def frequencies(self):
        """Baseband subcarrier frequencies ``c * scs_hz`` in Hz."""
        return np.arange(self.n_sc) * self.scs_hz


def rms_delay_spread(delays, powers):
    delays = np.asarray(delays, dtype=float)
    p = np.asarray(powers, dtype=float)
    p = p / p.sum()
    mean = np.dot(p, delays)
    return float(np.sqrt(max(np.dot(p, delays**2) - mean**2, 0.0)))


@dataclass(frozen=True)
class TdlProfile:
    tap_delays_s: tuple
    tap_powers: tuple
    rms_delay_spread_s: float

    def __post_init__(self):
        d = np.asarray(self.tap_delays_s, dtype=float)
        p = np.asarray(self.tap_powers, dtype=float)
        if d.ndim != 1 or d.size == 0 or d.shape != p.shape:
            raise StructuralError("tap delays and powers must be equal-length 1-D sequences")
        if d[0] != 0.0 or np.any(np.diff(d) <= 0):
            raise ParameterError("tap delays must start at 0 and be strictly ascending")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ParameterError(f"tap powers must be non-negative and sum to 1, got sum {p.sum()!r}")
        realized = rms_delay_spread(d, p)
        target = self.rms_delay_spread_s
        if abs(realized - target) > 0.05 * max(target, 1e-300):
            raise ParameterError(
                f"profile RMS delay spread {realized:.4g} s is not within 5% of {target:.4g} s"
            )
        object.__setattr__(self, "tap_delays_s", tuple(float(x) for x in d))
        object.__setattr__(self, "tap_powers", tuple(float(x) for x in p))

    @property
    def n_taps(self):
        return len(self.tap_delays_s)


def _exp_powers(delays, rate):
    p = np.exp(-rate * (delays - delays[0]))
    return p / p.sum()


def exp_pdp(n_taps=12, rms_delay_spread_s=300e-9, max_delay_s=2e-6):
    """Exponential power-delay profile on ``n_taps`` equally spaced delays.

    Powers are proportional to ``exp(-tau / scale)`` with ``scale`` solved so
    the profile's RMS delay spread equals the target. The largest reachable
    spread is that of equal powers; asking for exactly that returns the flat
    profile, asking for more raises :class:`ParameterError`.
    """
    if n_taps < 2:
        raise ParameterError(f"need at least 2 taps for a non-zero delay spread, got {n_taps}")
    if not max_delay_s > 0:
        raise ParameterError(f"max_delay_s must be positive, got {max_delay_s}")
    if not rms_delay_spread_s > 0:
        raise ParameterError(f"rms_delay_spread_s must be positive, got {rms_delay_spread_s}")
    delays = np.linspace(0.0, max_delay_s, n_taps)
    flat = rms_delay_spread(delays, np.ones(n_taps))
    rel = (rms_delay_spread_s - flat) / flat
    if rel > 1e-12:
        raise ParameterError(
            f"RMS delay spread {rms_delay_spread_s:.4g} s exceeds the maximum "
            f"{flat:.4g} s reachable with {n_taps} taps over {max_delay_s:.4g} s"
        )
    if rel >= -1e-12:
        powers = np.full(n_taps, 1.0 / n_taps)
    else:
        # spread decreases monotonically with the decay rate; rate is in 1/s
        def gap(log_rate):
            return rms_delay_spread(delays, _exp_powers(delays, np.exp(log_rate))) - rms_delay_spread_s

        lo = np.log(1e-6 / max_delay_s)
        hi = np.log(1e4 * (n_taps - 1) / max_delay_s)
        log_rate = brentq(gap, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)
        powers = _exp_powers(delays, np.exp(log_rate))
    powers = powers / powers.sum()
    return TdlProfile(tuple(delays), tuple(powers), float(rms_delay_spread_s))


def default_profile():
    """12 taps over [0, 2 us] with 300 ns RMS delay spread."""
    return exp_pdp(12, 300e-9, 2e-6)


@dataclass(frozen=True, eq=False)
class ChannelGrid:
    """One channel realization; ``h[c]`` is the ``n_rx x n_tx`` matrix on subcarrier ``c``."""

    spec: GridSpec
    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.complex128)
        if h.ndim != 3 or h.shape[0] != self.spec.n_sc:
            raise StructuralError(
                f"expected h of shape ({self.spec.n_sc}, n_rx, n_tx), got {h.shape}"
            )
        if not np.all(np.isfinite(h)):
            raise ParameterError("channel contains non-finite entries")
        object.__setattr__(self, "h", h)

    @property
    def n_rx(self):
        return self.h.shape[1]

    @property
    def n_tx(self):
        return self.h.shape[2]


def frequency_response(spec, delays, gains):
    """``H(f_c) = sum_k A_k exp(-j 2 pi f_c tau_k)`` for tap gains ``(K, n_rx, n_tx)``."""
    gains = np.asarray(gains, dtype=np.complex128)
    k, n_rx, n_tx = gains.shape
    phase = np.exp(-2j * np.pi * np.outer(spec.frequencies, np.asarray(delays, dtype=float)))
    return (phase @ gains.reshape(k, n_rx * n_tx)).reshape(spec.n_sc, n_rx, n_tx)


def generate_realization(spec, profile, n_rx, n_tx, seed, index=0):
    """Draw channel realization ``index`` of stream ``seed``.

    Tap gains are i.i.d. circularly symmetric complex Gaussian with variance
    equal to the tap power. The same ``(seed, index)`` always returns a
    bit-identical grid.
    """
    if n_rx < 1 or n_tx < 1:
        raise ParameterError(f"n_rx and n_tx must be >= 1, got {n_rx}, {n_tx}")
    gen = rng_streams.stream(seed, rng_streams.CHANNEL, index)
    std = np.sqrt(np.asarray(profile.tap_powers) / 2.0)[:, None, None]
    draws = gen.standard_normal((2, profile.n_taps, n_rx, n_tx))
    gains = std * (draws[0] + 1j * draws[1])
    return ChannelGrid(spec, frequency_response(spec, profile.tap_delays_s, gains))


class Fixture(enum.Enum):
    FLAT = "flat"
    TWO_TAP = "two_tap"
    LOS_RANK1 = "los_rank1"


def steering_vector(n, sin_theta):
    """Half-wavelength ULA response ``exp(j pi k sin_theta)``, unit-modulus entries."""
    return np.exp(1j * np.pi * np.arange(n) * sin_theta)


def fixture(kind, spec, n_rx, n_tx):
    """Deterministic grids for tests.

    ``FLAT``: all-ones matrix on every subcarrier. ``TWO_TAP``: two equal
    all-ones taps (power 1/2 each) at 0 and 1 us. ``LOS_RANK1``: ``a b^H``
    with ULA steering vectors at sin(theta) = 0.5 (rx) and -0.3 (tx),
    constant over frequency. All have unit average gain per entry.
    """
    kind = Fixture(kind)
    if kind is Fixture.FLAT:
        h = np.ones((spec.n_sc, n_rx, n_tx), dtype=np.complex128)
    elif kind is Fixture.TWO_TAP:
        tap = np.ones((n_rx, n_tx), dtype=np.complex128) / np.sqrt(2.0)
        h = frequency_response(spec, (0.0, 1e-6), np.stack([tap, tap]))
    else:
        a = steering_vector(n_rx, 0.5)
        b = steering_vector(n_tx, -0.3)
        h = np.broadcast_to(np.outer(a, b.conj()), (spec.n_sc, n_rx, n_tx)).copy()
    return ChannelGrid(spec, h)


def write_grid(grid, fh):
    """Binary export: magic line, text header, little-endian interleaved re/im float64."""
    s = grid.spec
    header = f"{s.n_rbs} {s.sc_per_rb} {s.scs_hz!r} {grid.n_rx} {grid.n_tx}\n".encode("ascii")
    fh.write(_MAGIC)
    fh.write(struct.pack("<I", len(header)))
    fh.write(header)
    fh.write(np.ascontiguousarray(grid.h, dtype="<c16").tobytes())


def read_grid(fh):
    if fh.read(len(_MAGIC)) != _MAGIC:
        raise StructuralError("not a channel grid file")
    (hlen,) = struct.unpack("<I", fh.read(4))
    fields = fh.read(hlen).decode("ascii").split()
    if len(fields) != 5:
        raise StructuralError(f"bad channel grid header {fields!r}")
    spec = GridSpec(int(fields[0]), int(fields[1]), float(fields[2]))
    n_rx, n_tx = int(fields[3]), int(fields[4])
    count = spec.n_sc * n_rx * n_tx
    raw = fh.read(16 * count)
    if len(raw) != 16 * count:
        raise StructuralError("truncated channel grid body")
    h = np.frombuffer(raw, dtype="<c16").astype(np.complex128).reshape(spec.n_sc, n_rx, n_tx)
    return ChannelGrid(spec, h)


def save_grid(grid, path):
    with open(path, "wb") as fh:
        write_grid(grid, fh)


def load_grid(path):
    with open(path, "rb") as fh:
        return read_grid(fh)


def grid_to_bytes(grid):
    buf = io.BytesIO()
    write_grid(grid, buf)
    return buf.getvalue()
