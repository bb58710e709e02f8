"""Echo-chamber analysis of follow networks.

Builds the reciprocal (mutual-follow) graph from directed edges, partitions
it into speech communities by Louvain modularity optimization, profiles the
communities by seed-account follow ratios, fits an LDA topic model over
per-user pooled documents, and cross-tabulates topics against communities to
flag topics circulating in a single community.
"""

from .community import (Dendrogram, LouvainConfig, Partition, aggregate_graph,
                        filter_communities, louvain, modularity)
from .crosstab import (CommunityTopicMatrix, EchoChamberReport,
                       community_topic_distribution, echo_chamber_score)
from .errors import (DocumentFormatError, EchomapError, EdgeFormatError, EmptyDocumentError,
                     EmptyVocabularyError, ModularityUndefinedError, OverParameterizedError,
                     PipelineStageError)
from .gexf import export_gexf, write_gexf
from .graph import (DirectedFollowGraph, UndirectedGraph, load_directed_edges,
                    load_node_metadata, reciprocalize)
from .lda import (LdaConfig, TopicModel, fit_lda, held_out_perplexity, infer_theta,
                  top_words, topic_sweep)
from .pipeline import PipelineConfig, run_pipeline, run_stage
from .profiles import CommunityProfile, SeedAccount, dominant_seed, follow_ratio
from .synth import (PlantedPartitionSpec, SyntheticCorpusSpec, match_topics, nmi,
                    planted_partition_graph, synthetic_lda_corpus, write_synthetic_dataset)
from .text import BowCorpus, Vocabulary, build_vocabulary, pool_by_user, tokenize

__version__ = "0.1.0"

__all__ = [
    "BowCorpus", "CommunityProfile", "CommunityTopicMatrix", "Dendrogram",
    "DirectedFollowGraph", "DocumentFormatError", "EchoChamberReport", "EchomapError",
    "EdgeFormatError", "EmptyDocumentError", "EmptyVocabularyError", "LdaConfig",
    "LouvainConfig", "ModularityUndefinedError", "OverParameterizedError", "Partition",
    "PipelineConfig", "PipelineStageError", "PlantedPartitionSpec", "SeedAccount",
    "SyntheticCorpusSpec", "TopicModel", "UndirectedGraph", "Vocabulary",
    "aggregate_graph", "build_vocabulary", "community_topic_distribution",
    "dominant_seed", "echo_chamber_score", "export_gexf", "filter_communities",
    "fit_lda", "follow_ratio", "held_out_perplexity", "infer_theta",
    "load_directed_edges", "load_node_metadata", "louvain", "match_topics",
    "modularity", "nmi", "planted_partition_graph", "pool_by_user", "reciprocalize",
    "run_pipeline", "run_stage", "synthetic_lda_corpus", "tokenize", "top_words",
    "topic_sweep", "write_gexf", "write_synthetic_dataset",
]
