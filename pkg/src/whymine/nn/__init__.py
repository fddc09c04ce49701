from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .decode import DecodeResult, beam_decode, greedy_decode
from .models import (LanguageModel, OutOfVocabError, Seq2SeqModel,
                     lm_forward, loss_and_grads, seq2seq_forward)
from .optim import AdaGrad, NoamAdam, TrainConfig, make_optimizer, noam_lr
from .train import NumericFailure, evaluate_model, train

__all__ = [
    "AdaGrad", "CheckpointError", "DecodeResult", "LanguageModel",
    "NoamAdam", "NumericFailure", "OutOfVocabError", "Seq2SeqModel",
    "TrainConfig", "beam_decode", "evaluate_model", "greedy_decode",
    "lm_forward", "load_checkpoint", "loss_and_grads", "make_optimizer",
    "noam_lr", "save_checkpoint", "seq2seq_forward", "train",
]
