"""Compressive learning of diagonal Gaussian mixtures from sketches."""

from ._sketchmix import (
    Algorithm,
    FormatError,
    FreqKind,
    FrequencySet,
    IntegrityError,
    InvalidArgument,
    Mixture,
    NumericError,
    Sketch,
    SketchmixError,
    design_frequencies,
    draw_freq,
    em,
    estim_mean_sigma,
    gen_synthetic,
    kl_sym,
    merge,
    mmd,
    read_dataset,
    read_freqs,
    read_gmm,
    read_sketch,
    recover,
    sample,
    sketch,
    sketch_gmm,
    sketch_size_gmm,
    sketch_size_single_gauss,
    write_dataset,
    write_freqs,
    write_gmm,
    write_sketch,
)

__all__ = [name for name in dir() if not name.startswith("_")]
