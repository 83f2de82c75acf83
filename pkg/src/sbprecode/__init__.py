"""Sub-band codebook precoding for single-layer uplink MIMO."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .channel import ChannelGrid, GridSpec, TdlProfile, default_profile, exp_pdp, generate_realization
from .codebook import Codebook, Family, Precoder, legacy_codebook, proposed_codebook, type1_8tx_codebook
from .config import Scheme, SimConfig, load_config, parse_config
from .harness import SweepResult, emit_csv, gain_db, run_sweep, sbs_study, tpmi_report
from .linkabs import BlerPoint, McsModel, effective_snr, tb_error_prob
from .precoding import Mode, SubbandAssignment, assign_all, partition

__all__ = [
    "BACKEND", "BlerPoint", "ChannelGrid", "Codebook", "Family", "GridSpec", "McsModel", "Mode",
    "Precoder", "Scheme", "SimConfig", "SubbandAssignment", "SweepResult", "TdlProfile",
    "assign_all", "default_profile", "effective_snr", "emit_csv", "exp_pdp", "gain_db",
    "generate_realization", "legacy_codebook", "load_config", "parse_config", "partition",
    "proposed_codebook", "run_sweep", "sbs_study", "tb_error_prob", "tpmi_report",
    "type1_8tx_codebook",
]
