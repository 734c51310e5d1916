from .base import BaseUnitCounter, ChineseUnitCounter, EnglishUnitCounter
from .factory import UnitCounterFactory, count_units, text_length, utterance_rate
from .lexicon import Lexicon, load_cmudict_lexicon, load_lexicon, load_pinyin_table
