"""Python bindings for the privkt C++ core."""

from ._privkt import (
    __version__,
    account,
    clip_l2,
    experiment,
    gen_blobs,
    gumbel_sample,
    per_example_vector,
    rdp_sgm_step,
    run_cli,
    temperature_softmax,
)

__all__ = [
    "__version__",
    "account",
    "clip_l2",
    "experiment",
    "gen_blobs",
    "gumbel_sample",
    "per_example_vector",
    "rdp_sgm_step",
    "run_cli",
    "temperature_softmax",
]
