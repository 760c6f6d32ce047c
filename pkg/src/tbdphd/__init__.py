"""Track-before-detect PHD filtering with a Poisson-conjugate particle implementation."""
from .amplitude import AmplitudeParams, noise_pdf, pixel_lr, signal_pdf, snr_db, target_lr
from .baseline import BkConfig, BkPhdFilter, bk_update
from .filter import (FilterConfig, IntensityParticles, PoissonCardinality, TargetComponent,
                     TbdPhdFilter, extract, predict, prune_merge, resample, update)
from .grid import GridSpec, PixelIndex, cell_center, illuminated_pixels, pixel_count
from .ospa import OspaParams, OspaResult, aggregate, ospa
from .scenario import EchoFrame, MotionModel, ScenarioTarget, synthesize_frame

__version__ = "0.1.0"
