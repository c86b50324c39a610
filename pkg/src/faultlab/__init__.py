"""faultlab: a desk-scale fault-localization data-augmentation workbench.

Pipeline: run seeded-fault mini-language programs under instrumentation,
build coverage spectra, slice the failing executions into a semantic
context, fuse it with an eigen-analysis ranking of the coverage columns,
train a conditional diffusion model on the fused columns, generate
synthetic failing rows until the classes balance, and measure how the
rebalanced data shifts suspiciousness rankings.
"""

from .minilang import Mutation, Program, TestCase, execute, parse, seed_fault
from .spectra import CoverageDataset, build_spectra, rank, score, tally
from .slicing import SliceCriterion, default_criterion, dynamic_slice, fault_context
from .context import contribution_select, eigen_sym, fuse
from .diffusion import (
    DiffusionBundle,
    TrainConfig,
    ancestral_sample,
    dpm_solve,
    guided_eps,
    make_schedule,
    q_sample,
    train,
)
from .augment import binarize, generate_until_balanced, resample, undersample
from .dlfl import MlpFlConfig, train_mlpfl, virtual_suspiciousness
from .metrics import VersionResult, rank_metrics, rimp, topk
from .corpus import generate_corpus, load_corpus, write_corpus
from .pipeline import RunConfig, emit_report, run_pipeline

__version__ = "0.1.0"
