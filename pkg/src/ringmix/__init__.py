"""Ring-mixing batches, consistency losses, and lambda-landscape experiments.

Training a separator against noisy targets with the plain SDR objective is
optimized by keeping half of the mixture noise in every estimate. Reusing
each source in two mixtures (ring mixing) and penalizing disagreement
between the two estimates of the same source (the SCER consistency loss)
breaks that symmetry and moves the optimum to full denoising. This package
provides the signal primitives, batch constructors, loss kernels, landscape
analysis, and a toy gradient-descent experiment that make those claims
directly checkable at desk scale.
"""

from .audioio import AudioFile, read_wav, write_wav
from .config import ExperimentConfig, load_config
from .errors import (
    AudioFormatError,
    ConfigError,
    CorruptFileError,
    CoverageError,
    DegenerateRingError,
    DegenerateSignalError,
    DimensionError,
    InsufficientDataError,
    NoMinimumError,
    PairingError,
    RingmixError,
    SampleRangeError,
    UndefinedScaleError,
    UnsupportedChannelsError,
    UnsupportedFormatError,
)
from .landscape import (
    LambdaLandscape,
    NoiseProfile,
    analytic_pair_loss,
    analytic_scer_curve,
    analytic_sdr_term,
    combined_curve,
    descend_to_minimum,
    find_minima,
    golden_section,
    lambda_grid,
    mc_noise_energy,
    mc_pair_loss,
    scan,
)
from .losses import (
    LOSS_CAP_DB,
    RATIO_FLOOR,
    EstimatePair,
    LossReport,
    SourceTerms,
    align_estimates,
    batch_loss,
    occupancy,
    resolve_permutation,
    scer_loss,
    sdr_loss,
    si_sdr,
)
from .mixing import (
    ConventionalBatch,
    RingBatch,
    batch_from_manifest,
    build_conventional_batch,
    build_ring_batch,
    manifest_dict,
    ring_cycle_length,
    sample_batch_from_corpus,
)
from .signal_core import (
    DEFAULT_SAMPLE_RATE,
    Waveform,
    dot,
    energy,
    measured_snr_db,
    projection_scale,
    scale_to_snr,
)
from .synthgen import (
    PRNG_ALGORITHM,
    NoisySource,
    crop_source,
    gen_noise,
    gen_pseudo_speech,
    make_noisy_source,
    normalize_source,
    source_from_waveform,
)
from .toysep import (
    LambdaModel,
    TrajectoryRecord,
    estimates_for_lambdas,
    forward,
    loss_and_grad,
    loss_with_betas,
    mixture_noise_sums,
    optimize,
)

__version__ = "0.1.0"
