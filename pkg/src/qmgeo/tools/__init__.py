"""
Tools module for qmgeo.

Distribution arithmetic, the QMGeo quantizer, privacy accounting and the
convergence-bound calculator.
"""

from .geom_tools import (
    DiscreteDistribution,
    TGeoParams,
    tgeo_pmf,
    tgeo_mean_closed_form,
    tgeo_variance_paper,
    moments_bruteforce,
    sample,
    renyi_divergence,
)
from .quantizer_tools import (
    QuantizerConfig,
    QuantizedValue,
    bin_value,
    clip_elementwise,
    interval_index,
    mixture_weight,
    output_distribution,
    klevel_output_distribution,
    quantize_scalar,
    quantize_vector,
    dequantize,
    quantization_moments,
    communication_bits,
)
from .privacy_tools import (
    PrivacyParams,
    PrivacyReport,
    eps_scalar_paper,
    eps_vector_paper,
    rdp_scalar_paper,
    rdp_vector_paper,
    eps_oracle_scalar,
    rdp_oracle_scalar,
    compose_rounds,
    rdp_to_dp,
    build_report,
    sweep,
)
from .convergence_tools import (
    BoundParams,
    StepTrace,
    step_terms,
    gap_bound,
    verify_descent_inequality,
    bound_table,
)


__all__ = [
    # Distributions
    "DiscreteDistribution",
    "TGeoParams",
    "tgeo_pmf",
    "tgeo_mean_closed_form",
    "tgeo_variance_paper",
    "moments_bruteforce",
    "sample",
    "renyi_divergence",
    # Quantizer
    "QuantizerConfig",
    "QuantizedValue",
    "bin_value",
    "clip_elementwise",
    "interval_index",
    "mixture_weight",
    "output_distribution",
    "klevel_output_distribution",
    "quantize_scalar",
    "quantize_vector",
    "dequantize",
    "quantization_moments",
    "communication_bits",
    # Privacy
    "PrivacyParams",
    "PrivacyReport",
    "eps_scalar_paper",
    "eps_vector_paper",
    "rdp_scalar_paper",
    "rdp_vector_paper",
    "eps_oracle_scalar",
    "rdp_oracle_scalar",
    "compose_rounds",
    "rdp_to_dp",
    "build_report",
    "sweep",
    # Convergence
    "BoundParams",
    "StepTrace",
    "step_terms",
    "gap_bound",
    "verify_descent_inequality",
    "bound_table",
]
