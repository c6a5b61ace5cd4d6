"""Class-adapted Gaussian mixture priors for plug-and-play image restoration.

Images are 2-D float64 arrays on the [0, 255] scale.
"""

from ._pnpgmm import (
    COVARIANCE_FLOOR,
    ArgumentError,
    ClassLibrary,
    DataError,
    DivergenceError,
    GmmModel,
    add_noise,
    aggregate_patches,
    bsnr,
    classify,
    convolve,
    denoise,
    em_fit,
    extract_patches,
    isnr,
    label_accuracy,
    psnr,
    read_kernel,
    read_pgm,
    registry_experiment,
    registry_kernel,
    restore,
    synth_image,
    write_pgm,
)

__version__ = "0.1.0"
