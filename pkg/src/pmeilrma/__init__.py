"""Determined blind source separation by ILRMA with a tunable source-model step size ``p``."""

from .evaluation import EvalReport, evaluate_run, projection_back, sdr
from .mixer import MixSpec, make_fixture, mix, synth_sources
from .model import IlrmaState, cost, separate
from .optimizer import OptimizerConfig, RunResult, normalize, run, update_t, update_v, update_w
from .stft import StftConfig, istft, stft
from .surrogate import SurrogateState, aux_plus, aux_pp, lemma1_upper
from .tensors import FLOOR, SourceModel, estimated_power

__version__ = "0.1.0"
