"""Multilayer network analysis of world input-output trade tables.

Countries are nodes, sectors are layers; all weights live in one dense
supra-adjacency matrix. The package computes strength/degree metrics,
layer-pair statistics, matrix-exponential communicability, communicability
distances, and distance-threshold communities, plus CSV/binary IO and a CLI.
"""

__version__ = "0.1.0"

from .communicability import (
    CommunicabilityField,
    DistanceField,
    broadcast_centrality,
    cohesion,
    communicability,
    distance_field,
    expm,
    quality,
    receive_centrality,
)
from .community import (
    CommunityReport,
    CommunityRow,
    Partition,
    SweepTrace,
    community_report,
    components_at_threshold,
    detect_communities,
    detect_monolayer,
    rank_members,
)
from .errors import (
    AsymmetricInputError,
    MlionError,
    ParseError,
    UndefinedStatisticError,
)
from .layers import (
    Dendrogram,
    LayerPairTable,
    avg_connectivity,
    avg_intensity,
    correlation,
    hcluster_layers,
    jaccard_sector_similarity,
    overlap,
    pair_table,
    to_newick,
    weighted_overlap,
)
from .metrics import (
    ConcentrationIndex,
    StrengthProfile,
    degree_profile,
    degree_table,
    gini_heterogeneity,
    hhi,
    pearson,
    strength_profile,
    strength_table,
)
from .network import (
    MultilayerNetwork,
    NetworkMeta,
    Subnetwork,
    aggregate_monolayer,
    binarize,
    block,
    cell_of,
    normalize_strength,
    split_intra_inter,
    subnetwork,
    supra_index,
    symmetrize,
)
from .io import (
    parse_long,
    parse_wiot_wide,
    read_partition_csv,
    read_snapshot,
    write_long,
    write_partition_csv,
    write_snapshot,
    write_wiot_wide,
)

__all__ = [name for name in dir() if not name.startswith("_")]
