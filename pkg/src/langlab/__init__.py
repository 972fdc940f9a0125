"""langlab: desk-scale experiments on learning natural vs. linearly
transformed languages with miniature language models."""

__version__ = "0.1.0"

from .grammar import (  # noqa: F401
    GenerationConfig,
    Grammar,
    RewriteRule,
    Sentence,
    default_grammar,
    derives,
    generate_corpus,
    generate_sentence,
)
from .transforms import (  # noqa: F401
    NOT_TOKEN,
    TransformKind,
    apply_transform,
    invert_parity_negation,
    transform_corpus,
)
from .tokenizer import (  # noqa: F401
    EncodedSequence,
    Vocabulary,
    build_vocabulary,
    decode,
    encode,
)
from .numcore import Tape, Tensor, finite_difference_check  # noqa: F401
from .models import (  # noqa: F401
    LstmConfig,
    ModelParameters,
    TransformerConfig,
    init_model,
    lstm_forward,
    transformer_forward,
)
from .training import (  # noqa: F401
    MetricSeries,
    TrainingConfig,
    evaluate_perplexity,
    lr_schedule,
    train,
)
from .stats import (  # noqa: F401
    TTestResult,
    cohen_d,
    stabilized_window,
    student_t_sf,
    welch_t_test,
)
from .harness import ExperimentSpec, RunReport, run_experiment  # noqa: F401
