"""Neighbor-aware informal-settlement classification.

Thin Python layer over the C++ core: grid feature tables, a seeded
synthetic city generator with a Bayes-oracle ceiling, three window
classifiers (two-layer GCN, local MLP, neighbor-concat MLP), and the
balanced spatial cross-validation protocol.
"""

import json as _json

from ._core import (
    FEATURE_NAMES,
    CellRecord,
    FeatureTable,
    GridSpec,
    IsmapError,
    SynthConfig,
    __version__,
    class_counts,
    compute_metrics,
    generate_city,
    gradcheck,
    load_feature_table,
    neighbors_king,
    oracle_metrics,
    parse_feature_table_csv,
    save_feature_table,
    synth_sidecar_json,
)
from ._core import crossval_raw as _crossval_raw

__all__ = [
    "FEATURE_NAMES",
    "CellRecord",
    "FeatureTable",
    "GridSpec",
    "IsmapError",
    "SynthConfig",
    "__version__",
    "class_counts",
    "compute_metrics",
    "crossval",
    "generate_city",
    "gradcheck",
    "load_feature_table",
    "neighbors_king",
    "oracle_metrics",
    "parse_feature_table_csv",
    "save_feature_table",
    "synth_sidecar_json",
]

MODELS = ("gcn", "mlp-local", "mlp-neighbors")


def crossval(
    table,
    model,
    *,
    seed=1,
    repetitions=10,
    zones=0,
    jobs=1,
    epochs=400,
    batch_size=32,
    learning_rate=0.001,
    standardize=True,
    natural_test=False,
):
    """Spatial cross-validation of one model on a labeled feature table.

    Returns ``(summary, report_csv)``: the summary as a dict (per-zone and
    global mean/std of precision, recall, f1, kappa) and the per-fold report
    as CSV text. ``zones=0`` uses every zone in the table; ``zones=N`` keeps
    the first N.
    """
    report_csv, summary_json = _crossval_raw(
        table,
        model,
        seed,
        repetitions,
        zones,
        jobs,
        epochs,
        batch_size,
        learning_rate,
        standardize,
        natural_test,
    )
    return _json.loads(summary_json), report_csv
