import pytest

from echomap.pipeline import PipelineConfig, run_pipeline
from echomap.synth import SyntheticDatasetSpec, write_synthetic_dataset

# Desk-scale knobs shared by the pipeline and acceptance suites.
DATASET_SPEC = SyntheticDatasetSpec(
    block_sizes=(30, 30, 30, 30),
    p_in=0.35,
    p_out=0.02,
    oneway_edges=200,
    bot_block=12,
    tiny_block=4,
    tweets_per_user=4,
    tokens_per_tweet=20,
    seed=101,
)


def pipeline_config(dataset, out_dir, seed=7) -> PipelineConfig:
    return PipelineConfig(
        edges=str(dataset.edges), docs=str(dataset.docs), seeds=str(dataset.seeds),
        stopwords=str(dataset.stopwords), exclude=str(dataset.exclude),
        out=str(out_dir), seed=seed,
        topics=4, alpha=0.5, iterations=150, burn_in=50, stride=5,
        min_count=3, max_doc_fraction=0.9,
    )


@pytest.fixture(scope="session")
def dataset(tmp_path_factory):
    return write_synthetic_dataset(DATASET_SPEC, tmp_path_factory.mktemp("dataset"))


@pytest.fixture(scope="session")
def completed_run(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = pipeline_config(dataset, out)
    manifest = run_pipeline(cfg)
    return cfg, manifest
