"""Stroke-level version control and stroke intelligence for concept sketching.

Subsystems:
    strokes     canonical stroke records, parsing, canonical serialization,
                content addressing
    synth       seeded synthetic stroke/session generators and vector-domain
                augmentation
    features    158-dimensional handcrafted feature extraction and scaling
    classify    native classical classifiers (tree, forest, kNN, logistic,
                Gaussian NB) with stratified CV and grid search
    repo        the content-addressed, stroke-level version-control engine
    analytics   concept-pyramid, documentation-density, and stroke-distribution
                metrics
    similarity  activation-matrix pooling, cosine similarity matrices, layer
                ranking, Mann-Whitney U
    summarize   deterministic and LLM-backed narrative summaries of commit logs
    service     HTTP API over all of the above
    cli         command-line front door
"""

__version__ = "0.1.0"
