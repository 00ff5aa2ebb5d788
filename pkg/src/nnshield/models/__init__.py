"""Classifiers: constrained/lasso logistic regression, byte convnet, K-class heads."""

from .linear import (LASSO, MODES, NONNEGATIVE, LinearModel, linear_scores,
                     predict_linear, train_linear)
from .multiclass import (HEAD_MODES, OVA_MODE, SOFTMAX_MODE, MulticlassHead,
                         Prediction, copy_net, normalize_responses,
                         predict_multiclass, probs_multiclass, raw_responses,
                         train_multiclass, trunk_activations)
from .store import (LINEAR_KIND, MODEL_FORMAT_VERSION, MULTICLASS_KIND,
                    TINYCONV_KIND, load_model, model_from_doc, model_to_doc,
                    save_model)
from .tinyconv import (DESK_PAD_LEN, EOF_ROW, PAPER_PAD_LEN, VOCAB, TinyConv,
                       build_tinyconv, embed_tokens, exes_to_sequences,
                       files_to_sequences, scores_from_embedding,
                       tinyconv_scores, train_tinyconv)

__all__ = [
    "DESK_PAD_LEN", "EOF_ROW", "HEAD_MODES", "LASSO", "LINEAR_KIND", "MODES",
    "MODEL_FORMAT_VERSION", "MULTICLASS_KIND", "NONNEGATIVE", "OVA_MODE",
    "PAPER_PAD_LEN", "SOFTMAX_MODE", "TINYCONV_KIND", "VOCAB", "LinearModel",
    "MulticlassHead", "Prediction", "TinyConv", "build_tinyconv", "copy_net",
    "embed_tokens", "exes_to_sequences", "files_to_sequences",
    "linear_scores", "load_model",
    "model_from_doc", "model_to_doc", "normalize_responses", "predict_linear",
    "predict_multiclass",
    "probs_multiclass", "raw_responses", "save_model", "scores_from_embedding",
    "tinyconv_scores", "train_linear", "train_multiclass", "train_tinyconv",
]
