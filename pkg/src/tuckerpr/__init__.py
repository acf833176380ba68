"""Tucker-structured and unstructured low-rank phase retrieval for image sequences."""
from .linop import CglsConfig, LinearMap, cgls, dense_map, stacked_map
from .lowrank import AltMinConfig, LowRankFactors, altmin_lowrap, altmin_trunc
from .measurement import MeasurementEnsemble, gen_cdp, gen_gaussian, observe
from .metrics import (frame_dist, mat_dist, model_correct, param_count, per_frame_dist,
                      relative_error)
from .pr import (RwfConfig, SpectralInitConfig, leading_eigvec, rwf, spectral_frames,
                 twf_init_frame)
from .tensor import (TuckerFactors, frames_to_tensor, hosvd, matricize, tensor_to_frames,
                     tucker_reconstruct)
from .tspr import TsprConfig, TsprState, tspr_init, tspr_run

__version__ = "0.1.0"

__all__ = [
    "altmin_lowrap", "altmin_trunc", "AltMinConfig", "cgls", "CglsConfig",
    "dense_map", "frame_dist", "frames_to_tensor", "gen_cdp", "gen_gaussian",
    "hosvd", "leading_eigvec", "LinearMap", "LowRankFactors", "mat_dist",
    "matricize", "MeasurementEnsemble", "model_correct", "observe",
    "param_count", "per_frame_dist", "relative_error", "rwf", "RwfConfig",
    "spectral_frames", "SpectralInitConfig", "stacked_map", "tensor_to_frames",
    "tspr_init", "tspr_run", "TsprConfig", "TsprState", "tucker_reconstruct",
    "TuckerFactors", "twf_init_frame",
]
