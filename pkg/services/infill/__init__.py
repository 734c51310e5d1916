from .model import (
    ConvPositionEmbedding,
    InfillCondition,
    InfillTransformer,
    InfillVelocityModel,
    TimestepEmbedding,
    infill_forward,
)
from .sequence import acoustic_context, build_extended_sequence, collate_examples, make_train_example
from .synthesis import synthesize
from .trainer import InfillCorpus, TTSTrainingRun, load_tts, save_tts, train_tts
from .vocab import BYTE_OFFSET, FILLER_ID, FIRST_CHAR_ID, CharVocab
