"""Two-level (DRAM + SSD) I/O cache simulation and reuse-distance analysis."""
from .config import RunConfig, load_config
from .engine import EticaEngine, VmCacheState, run_etica
from .partition import AllocationPlan, VmDemand, optimize_partition, ppc
from .policy_sim import WritePolicy, simulate_single_level
from .popularity import PopularityTable, select_queues
from .reuse import INFINITE, MRC, DistanceMetric, build_mrc, compute_distances, max_pod
from .trace import BlockRef, Op, TraceRecord, merge_streams, parse_trace, to_blocks

__version__ = "0.1.0"
