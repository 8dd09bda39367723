from .errors import (
    AlignmentError, BenchError, ComparabilityError, ConfigError, GroupingError,
    IngestionError, InversionFailedError, LookupErrorJudge, ParameterError,
    ParseError, RecordError, RemovalFailedError, ShapeError, TemplateError,
    TrainingDivergedError, TriggerError, VocabularyError,
)
from .model import Denoiser, DenoiserArch, load_checkpoint, save_checkpoint
from .sampler import sample
from .schedule import NoiseSchedule, make_linear_schedule, q_sample
from .text import (
    TextEncoder, TextPrompt, Vocabulary, encode_text, tokenize,
    HOMOGLYPH_FOLD, TOKEN_INSERTION_TRIGGER, TRANSLATION_TABLE,
)
from .train import OptimizerConfig, TrainResult, train_denoiser
from .traces import (
    ActivationTrace, CrossAttentionTrace, SamplingRun, record_traces,
)
from .types import ImageBatch, NoiseBatch

DEFAULT_SEED = 35
