"""Multi-label frame classifier inference with a file-based contract.

Reads the analysis pipeline's posts JSONL, runs a fine-tuned sequence
classifier, and writes labels JSONL the pipeline can attach as-is. The two
packages share nothing at runtime but the file formats.
"""

from .infer import LABELS, InferenceConfig, InferenceReport, infer

__all__ = ["LABELS", "InferenceConfig", "InferenceReport", "infer"]

__version__ = "0.1.0"
