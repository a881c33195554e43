"""Sliding-channel convolution on CPU: direct kernels, reference oracles, cost model and harness."""
import numba as _numba

try:  # OpenMP is thread-safe for concurrent callers and avoids the TBB version probe
    import numba.np.ufunc.omppool  # noqa: F401
except ImportError:
    pass
else:
    if _numba.config.THREADING_LAYER == "default":
        _numba.config.THREADING_LAYER = "omp"

from .cost import CostReport, LayerSpec, layer_cost, model_cost, reduction_ratio
from .cycle import (
    ChannelCycle,
    ChannelWindow,
    SccConfig,
    compute_channel_cycle,
    covering_filters,
    scc_config,
    window_of,
)
from .errors import ConfigError, FormatError, NumericError, ShapeError, SpecError
from .reference import (
    CompositionStats,
    ConvSpec,
    ConvWeights,
    grouped_conv_backward,
    grouped_conv_forward,
    scc_channel_stack_forward,
    scc_conv_stack_forward,
)
from .scc import SccGradients, SccWeights, scc_backward, scc_backward_input, scc_backward_params, scc_forward
from .tensor import concat_channels, fixture_read, fixture_write, slice_channels_cyclic, tensor_filled

__version__ = "0.1.0"
