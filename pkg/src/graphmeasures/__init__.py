"""Graph closeness measures benchmarked as kernels for kernel k-means community detection."""

from .graph import Graph, derive_matrices, read_graph, write_graph
from .measures import ALL_MEASURES, MeasureId, build_measure
from .scoring import ari, modularity

__all__ = [
    "ALL_MEASURES", "Graph", "MeasureId", "ari", "build_measure", "derive_matrices",
    "modularity", "read_graph", "write_graph",
]
__version__ = "0.1.0"
