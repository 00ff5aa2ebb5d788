"""Feature extraction: boolean n-gram/word spaces, IDX images, synthetic corpora."""

from .images import (IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC, IdxError, ImageSample,
                     load_idx_images, save_idx)
from .mailbox import load_mail_index, write_mail_corpus
from .space import (BYTE_NGRAM, DEFAULT_TOP_WORDS, WORD_BAG, BooleanVector,
                    FeatureSpace, build_ngram_space, build_word_space,
                    featurize_bytes, featurize_text, space_from_doc,
                    space_to_doc, stack_dense, tokenize)
from .synth import (BYTES, MODES, TOYEXE, WORDS, SynthCorpus, SynthSpec,
                    generate_synthetic)

__all__ = [
    "BYTE_NGRAM", "BYTES", "DEFAULT_TOP_WORDS", "IDX_IMAGE_MAGIC",
    "IDX_LABEL_MAGIC", "MODES", "TOYEXE", "WORD_BAG", "WORDS",
    "BooleanVector", "FeatureSpace", "IdxError", "ImageSample", "SynthCorpus",
    "SynthSpec", "build_ngram_space", "build_word_space", "featurize_bytes",
    "featurize_text", "generate_synthetic", "load_idx_images",
    "load_mail_index", "save_idx", "space_from_doc", "space_to_doc",
    "stack_dense", "tokenize", "write_mail_corpus",
]
