"""Single-layer uplink codebooks for fully coherent antenna ports.

Three families are provided:

* ``LEGACY``: the standardized 2TX (4 entries) and 4TX (16 entries)
  codebooks, and for 8TX the Type-I derived set with N1=4, N2=1.
* ``TYPE1_8TX``: Kronecker DFT beams with per-polarization co-phasing,
  no oversampling.
* ``PROPOSED``: a phase grid with ``2**M_i`` relative phases on port i.

Every entry has unit Frobenius norm, constant modulus ``1/sqrt(n_tx)`` and a
real positive first entry. Codebooks are immutable and cached.
"""
import enum
import functools
import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError, StructuralError
from .numerics import kron

SUPPORTED_N_TX = (2, 4, 8)


class Family(enum.Enum):
    LEGACY = "legacy"
    TYPE1_8TX = "type1"
    PROPOSED = "proposed"


@dataclass(frozen=True)
class Precoder:
    weights: np.ndarray
    index: int


@dataclass(frozen=True, eq=False)
class Codebook:
    """Ordered set of unit-norm precoders; row ``i`` of ``weights`` has TPMI ``i``."""

    n_tx: int
    family: Family
    weights: np.ndarray
    params: tuple = ()

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.complex128)
        if w.ndim != 2 or w.shape[1] != self.n_tx:
            raise StructuralError(f"weights must have shape (K, {self.n_tx}), got {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.shape[0]

    def __getitem__(self, i):
        return Precoder(self.weights[i], int(i))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def entries(self):
        return list(self)

    @property
    def label(self):
        """Compact family token, e.g. ``legacy``, ``type1(4,1)``, ``proposed(3,3,3)``."""
        if self.family is Family.LEGACY or not self.params:
            return self.family.value
        return f"{self.family.value}({','.join(str(p) for p in self.params)})"

    @property
    def tpmi_bits(self):
        return int(np.ceil(np.log2(len(self)))) if len(self) > 1 else 0


def unit_phasor(num, den):
    """``exp(2j*pi*num/den)``, exact when the angle is a multiple of pi/2."""
    num = num % den
    if (4 * num) % den == 0:
        return (1.0, 1j, -1.0, -1j)[(4 * num) // den]
    return complex(np.exp(2j * np.pi * num / den))


def _check_n_tx(n_tx):
    if n_tx not in SUPPORTED_N_TX:
        raise StructuralError(f"n_tx must be one of {SUPPORTED_N_TX}, got {n_tx}")


@functools.lru_cache(maxsize=None)
def _proposed(n_tx, m_bits):
    grids = [[unit_phasor(m, 2**bits) for m in range(2**bits)] for bits in m_bits]
    rows = [(1.0, *phases) for phases in itertools.product(*grids)]
    w = np.array(rows, dtype=np.complex128) / np.sqrt(n_tx)
    return Codebook(n_tx, Family.PROPOSED, w, tuple(m_bits))


def proposed_codebook(n_tx, m_bits):
    """Phase-grid codebook with ``2**m_bits[i]`` relative phases on port ``i+2``.

    Entries are ``(1, e^{j2pi m_2/2^M_2}, ..., e^{j2pi m_N/2^M_N}) / sqrt(n_tx)``
    enumerated with ``m_2`` slowest and ``m_N`` fastest, so the codebook has
    ``2**sum(m_bits)`` entries. ``M_i = 0`` gives port ``i`` the single phase 1.
    """
    _check_n_tx(n_tx)
    m_bits = tuple(int(m) for m in m_bits)
    if len(m_bits) != n_tx - 1:
        raise StructuralError(f"need {n_tx - 1} phase bit counts for {n_tx}TX, got {len(m_bits)}")
    if any(m < 0 for m in m_bits):
        raise ParameterError(f"phase bit counts must be >= 0, got {m_bits}")
    return _proposed(n_tx, m_bits)


@functools.lru_cache(maxsize=None)
def type1_8tx_codebook(n1, n2):
    """Type-I style 8TX codebook without oversampling (O1 = O2 = 1).

    ``W = (v, phi_n v) / (2 sqrt 2)`` with ``v = v_h(i_h) kron v_v(i_v)``,
    ``phi_n = e^{j pi n / 2}``. Enumeration order is ``i_h`` slowest, then
    ``i_v``, then ``n``; the codebook has ``4 * n1 * n2 = 16`` entries.
    """
    if n1 < 1 or n2 < 1 or n1 * n2 != 4:
        raise StructuralError(f"cross-polar 8TX needs n1*n2 == 4, got n1={n1}, n2={n2}")
    rows = []
    for ih in range(n1):
        vh = np.array([unit_phasor(ih * k, n1) for k in range(n1)])
        for iv in range(n2):
            vv = np.array([unit_phasor(iv * k, n2) for k in range(n2)])
            v = kron(vh, vv)
            for n in range(4):
                rows.append(np.concatenate([v, unit_phasor(n, 4) * v]))
    w = np.array(rows) / (2.0 * np.sqrt(2.0))
    return Codebook(8, Family.TYPE1_8TX, w, (n1, n2))


# TS 38.211 Table 6.3.1.5-3, single layer, four antenna ports, transform
# precoding disabled, fully coherent TPMI 12..27 (scaled by 1/2 below).
_LEGACY_4TX = (
    (1, 1, 1, 1), (1, 1, 1j, 1j), (1, 1, -1, -1), (1, 1, -1j, -1j),
    (1, 1j, 1, 1j), (1, 1j, 1j, -1), (1, 1j, -1, -1j), (1, 1j, -1j, 1),
    (1, -1, 1, -1), (1, -1, 1j, -1j), (1, -1, -1, 1), (1, -1, -1j, 1j),
    (1, -1j, 1, -1j), (1, -1j, 1j, 1), (1, -1j, -1, 1j), (1, -1j, -1j, -1),
)


@functools.lru_cache(maxsize=None)
def legacy_codebook(n_tx):
    """Standardized wide-band codebook for fully coherent ports.

    2TX: the four QPSK co-phasing vectors (same entries and order as
    ``proposed_codebook(2, [2])``). 4TX: the 16 fully coherent entries of the
    four-port table. 8TX: ``type1_8tx_codebook(4, 1)``.
    """
    _check_n_tx(n_tx)
    if n_tx == 2:
        w = proposed_codebook(2, [2]).weights
    elif n_tx == 4:
        w = np.array(_LEGACY_4TX, dtype=np.complex128) / 2.0
    else:
        w = type1_8tx_codebook(4, 1).weights
    return Codebook(n_tx, Family.LEGACY, w)


def is_superset(big, small, tol=1e-9):
    """True iff every entry of ``small`` is within ``tol`` (entrywise) of an entry of ``big``."""
    if big.n_tx != small.n_tx:
        raise StructuralError(f"n_tx mismatch: {big.n_tx} vs {small.n_tx}")
    if len(small) == 0:
        return True
    if len(big) == 0:
        return False
    for w in small.weights:
        dist = np.abs(big.weights - w[None, :]).max(axis=1)
        if dist.min() > tol:
            return False
    return True


def parse_codebook_spec(text, n_tx):
    """Build a codebook from a token such as ``legacy``, ``type1(4,1)`` or ``proposed(3,3,3)``.

    A single number in ``proposed(M)`` is repeated for every port.
    """
    text = text.strip().lower()
    name, _, rest = text.partition("(")
    args = ()
    if rest:
        if not rest.endswith(")"):
            raise ParameterError(f"malformed codebook spec {text!r}")
        body = rest[:-1].strip()
        try:
            args = tuple(int(a) for a in body.split(",")) if body else ()
        except ValueError:
            raise ParameterError(f"malformed codebook spec {text!r}") from None
    if name == "legacy" and not args:
        return legacy_codebook(n_tx)
    if name == "type1":
        if n_tx != 8:
            raise StructuralError("type1 codebooks exist only for 8TX")
        if len(args) != 2:
            raise ParameterError(f"type1 needs (n1,n2), got {text!r}")
        return type1_8tx_codebook(*args)
    if name == "proposed":
        if len(args) == 1:
            args = args * (n_tx - 1)
        return proposed_codebook(n_tx, args)
    raise ParameterError(f"unknown codebook spec {text!r}")


def _fmt_complex(z):
    im = repr(float(z.imag))
    if not im.startswith("-"):
        im = "+" + im
    return f"{float(z.real)!r}{im}j"


def format_codebook(cb):
    """Text export: header ``n_tx family count``, then one precoder per line."""
    lines = [f"{cb.n_tx} {cb.label} {len(cb)}"]
    lines += [" ".join(_fmt_complex(z) for z in row) for row in cb.weights]
    return "\n".join(lines) + "\n"


def parse_codebook(text):
    """Inverse of :func:`format_codebook`; values round-trip bit for bit."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise StructuralError("empty codebook file")
    head = lines[0].split()
    if len(head) != 3:
        raise StructuralError(f"bad header {lines[0]!r}")
    n_tx, label, count = int(head[0]), head[1], int(head[2])
    name, _, rest = label.partition("(")
    try:
        family = Family(name)
    except ValueError:
        raise StructuralError(f"unknown codebook family {name!r}") from None
    params = tuple(int(a) for a in rest.rstrip(")").split(",")) if rest else ()
    rows = [[complex(tok) for tok in ln.split()] for ln in lines[1:]]
    if len(rows) != count:
        raise StructuralError(f"header says {count} entries, found {len(rows)}")
    w = np.array(rows, dtype=np.complex128).reshape(count, n_tx)
    return Codebook(n_tx, family, w, params)


def save_codebook(cb, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_codebook(cb))


def load_codebook(path):
    with open(path, encoding="utf-8") as fh:
        return parse_codebook(fh.read())
