# charpoly_tools __init__.py
__version__ = '0.2.0'

from .hyperbolic import DomainParams, BranchSweep, hyp_dist, pseudo_dist, joukowsky, ray_point
from .gaussfield import GaussKernel, BiasSpec, BrwCheck, sample_gauss, exp_moment_g
from .ensemble import Spectrum, get_model, gue_model, quartic_model, sample_spectrum
from .orthopoly import OPTable, recurrence_table, eval_pi, eval_h, y_matrix, m_matrix
from .charpoly import FsVerify, fs_balanced, fs_general, exp_moment_field, exp_pm2_moment
from .extremes import MaxExperiment, factor14_check, max_experiment, regularized_max
from .momentlab import (MemVerify, LowerBoundParams, LowerBoundResult, lower_bound_mc,
                        mem_ratio, matching_sup)
from .load_spectrum import load_spectrum, save_spectrum
from .load_config import load_config, RunConfig
from .emit import emit
