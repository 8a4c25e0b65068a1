"""Multivariate selfsimilar process synthesis and Hurst-vector estimation.

Build a model with :func:`make_params`, draw paths with
:func:`synthesize_mfbm` (or a reusable :class:`CirculantEmbedding`), and
estimate the exponent vector with :func:`analyze` or benchmark estimators
with :func:`run_mc`.
"""

__version__ = "0.1.0"

from .analysis import (
    GroupTestReport,
    McConfig,
    McReport,
    bh_reject,
    chi2_quantiles,
    estimate_correlation,
    mahalanobis_samples,
    performance_matrices,
    qq_correlation,
    run_mc,
    sliding_window_estimates,
    spectral_norm,
    v_n_approx,
    wilcoxon_ranksum,
)
from .errors import OfbmkitError
from .estimation import (
    EstimateRecord,
    RegressionWeights,
    ScalingRangeConfig,
    analyze,
    estimate_multivariate,
    estimate_multivariate_bc,
    estimate_univariate,
    regression_weights,
    scaling_range,
    sorted_eigenvalues,
    varpi,
)
from .model import (
    HurstVector,
    IntrinsicCovariance,
    MixingMatrix,
    ModelParams,
    OfbmEquivalent,
    load_params,
    make_params,
    ofbm_equivalent,
    params_from_json,
    params_to_json,
    rho_max,
    save_params,
    validate_params,
)
from .synthesis import (
    CirculantEmbedding,
    EmbeddingReport,
    SamplePath,
    mfgn_cross_covariance,
    synthesize_mfbm,
    synthesize_mfgn,
    synthesize_mfgn_batch,
)
from .wavelet import (
    WaveletFilter,
    WaveletPyramid,
    WaveletSpectrumSet,
    dwt,
    filter_bank,
    spectrum_set,
    wavelet_spectrum,
    windowed_spectra,
)
