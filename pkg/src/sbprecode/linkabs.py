"""PHY abstraction from per-sub-band SNRs to a transport-block error decision.

Effective SNR uses mean Shannon capacity across sub-bands; the block error
probability is a logistic curve in dB centred on the capacity threshold of
the MCS plus an implementation gap.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .exceptions import ParameterError

# PUSCH MCS index table 1 (TS 38.214 Table 5.1.3.1-1), I_MCS = 22:
# Qm = 6, target code rate R x 1024 = 666.
MCS22_SPECTRAL_EFF = 6 * 666 / 1024

_LN2 = np.log(2.0)


@dataclass(frozen=True)
class McsModel:
    spectral_eff_bits: float = MCS22_SPECTRAL_EFF
    shannon_gap_db: float = 2.0
    transition_slope: float = 5.0

    def __post_init__(self):
        if not self.spectral_eff_bits > 0:
            raise ParameterError(f"spectral_eff_bits must be positive, got {self.spectral_eff_bits}")
        if not self.transition_slope > 0:
            raise ParameterError(f"transition_slope must be positive, got {self.transition_slope}")

    @property
    def threshold_db(self):
        """Effective SNR (dB) at which the block error probability is 0.5."""
        return 10.0 * np.log10(2.0**self.spectral_eff_bits - 1.0) + self.shannon_gap_db


@dataclass(frozen=True)
class BlerPoint:
    snr_db: float
    trials: int
    errors: int

    def __post_init__(self):
        if self.trials < 1 or not 0 <= self.errors <= self.trials:
            raise ParameterError(f"need trials >= 1 and 0 <= errors <= trials, got {self}")

    @property
    def bler(self):
        return self.errors / self.trials


def effective_snr(gammas):
    """``C^-1(mean C(gamma_l))`` with ``C(g) = log2(1 + g)``, along the last axis."""
    g = np.asarray(gammas, dtype=float)
    if g.ndim == 0 or g.shape[-1] == 0:
        raise ParameterError("effective_snr needs at least one sub-band SNR")
    if np.any(g < 0):
        raise ParameterError("sub-band SNRs must be non-negative")
    out = np.expm1(np.log1p(g).mean(axis=-1))
    return float(out) if out.ndim == 0 else out


def tb_error_prob(gamma_eff, mcs):
    """Logistic block error probability, exactly 0.5 at ``mcs.threshold_db``."""
    g = np.asarray(gamma_eff, dtype=float)
    with np.errstate(divide="ignore"):
        g_db = 10.0 * np.log10(g)
    out = expit(-mcs.transition_slope * (g_db - mcs.threshold_db))
    return float(out) if out.ndim == 0 else out


def simulate_tb(assignments, mcs, rng_draw):
    """Block error iff ``rng_draw < tb_error_prob(effective_snr(...))``."""
    gammas = [a.post_snr_linear for a in assignments]
    return bool(rng_draw < tb_error_prob(effective_snr(gammas), mcs))
