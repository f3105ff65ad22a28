"""Script-side companion kit for the pipeline-search engine.

Provides metrics emission per the sandbox ABI, seeded synthetic benchmark
tasks with a documented scoring rule, and a reference pipeline template
implementing the standardized preprocessing recipe.
"""

from .metrics import emit_metrics
from .synthetic import (
    SyntheticTask,
    load_scoring,
    make_synthetic_task,
    ridge_peak_score,
)
from .template import reference_template

__version__ = "0.1.0"
