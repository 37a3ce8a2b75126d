"""sp8d: simulation toolkit for 8D set-partitioned QPSK formats.

Boolean-equation format definitions, Gray-labeled QPSK mapping, an AWGN
channel with exact LLR-domain observations, four soft demappers (1D,
exhaustive max-log, single-pass min-sum, and LRP candidate demapping),
an LDPC min-sum FEC chain, and a reproducible Monte Carlo harness with
instrumented complexity accounting.
"""

from .beq import (
    FormatParseError, FormatSpec,
    compute_parity, eval_expr, expr_op_count, is_affine,
    load_format, parse_format, format_to_text, shipped_format_names,
)
from .channel import ChannelParams, add_awgn, frame_stream, observations, snr_to_sigma
from .demap import (
    NonlinearFormatError, OpCount, PosdParams,
    analog_weight, count_ops, demap_1d, demap_mlm, demap_ms, demap_posd,
    hard_decide, select_lrp,
)
from .fec import (
    DecodeResult, LdpcCode, dump_alist, ldpc_decode_ms, ldpc_encode,
    load_alist, make_regular_code,
)
from .harness import (
    ComplexityRow, ConfigError, SimConfig, SimResult,
    emit_results, parse_results, run_ber_sweep, run_complexity_report,
    run_gmi_sweep,
)
from .modem import Codebook, build_codebook, gray_map_qpsk, map_8d, min_squared_distance

__version__ = "0.1.0"
