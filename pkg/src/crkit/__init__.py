"""crkit: black-box compression-ratio prediction for gridded scientific data.

Pipeline: load or synthesize 2D/3D fields, measure compression ratios with
error-bounded reference codecs (or external tools), extract
compressor-agnostic statistical predictors, fit regression models of the
ratio, then use the fitted models to search error bounds for a target ratio
or to rank compressors without running them.
"""

__version__ = "0.1.0"

__all__ = [
    "fields",
    "predictors",
    "synth",
    "codecs",
    "regression",
    "evaluation",
    "usecases",
    "errors",
]
