"""Diversity laboratory for linearly precoded MIMO links.

Precoders (ZF in two designs, regularized ZF, matched filter, Wiener),
receive equalizers (ZF, MMSE), exact per-stream SINRs, Monte Carlo outage
and symbol-error estimation, high-SNR slope fitting, closed-form diversity
predictions and random-matrix checks.
"""

from .channel import (EigenSpectrum, ExponentialOrders, TrialStream,
                      draw_channels, exponential_orders, sample_channel,
                      spectral)
from .equalizers import (EqualizerKind, build_mmse_equalizer,
                         build_zf_equalizer)
from .errors import (ConfigurationError, DomainError, InfeasibleCheckError,
                     InsufficientDataError, MimoPrecError, NumericError,
                     SingularChannelError)
from .precoders import (PrecoderKind, PrecoderOutput, build_mf, build_rzf,
                        build_wiener, build_zf_max_throughput,
                        build_zf_min_power)
from .sinr import LinkConfig, link_sinr, mutual_info

__version__ = "0.1.0"
