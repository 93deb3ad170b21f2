"""Label classification on top of an encoder, plus the codemixed rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .conllu import LabelInventory
from .errors import DataError
from .tensor import Parameter, Tensor


class TaggingHead:
    """Linear layer mapping encoder states to label logits."""

    def __init__(self, encoder_dim: int, inventory: LabelInventory, seed: int = 0,
                 prefix: str = "head"):
        rng = np.random.default_rng(seed)
        self.inventory = inventory
        self.w = Parameter(f"{prefix}.w",
                           rng.normal(0.0, 0.02, (encoder_dim, len(inventory))))
        self.b = Parameter(f"{prefix}.b", np.zeros(len(inventory)))

    def parameters(self) -> dict[str, Parameter]:
        return {self.w.name: self.w, self.b.name: self.b}

    def logits(self, states: Tensor) -> Tensor:
        """[..., encoder_dim] -> [..., n_labels]."""
        return T.add(T.matmul(states, self.w), self.b)


@dataclass
class TokenPrediction:
    label: str
    second_label: str
    logits: np.ndarray


def predictions_from_logits(logits: np.ndarray,
                            inventory: LabelInventory) -> list[TokenPrediction]:
    """One prediction per row; ties break toward the lower inventory index."""
    logits = np.asarray(logits)
    preds = []
    for row in logits:
        best = int(np.argmax(row))
        masked = row.copy()
        masked[best] = -np.inf
        second = int(np.argmax(masked))
        preds.append(TokenPrediction(inventory.label(best),
                                     inventory.label(second), row))
    return preds


def predict(encoder_out: Tensor, first_subword_index: list[int],
            head: TaggingHead) -> list[TokenPrediction]:
    """Read logits at each token's first-subword position.

    ``encoder_out`` is one encoding's [positions, dim] states; alignment
    indices must come from the same encoding, so exactly one prediction is
    produced per original token.
    """
    with T.no_grad():
        rows = encoder_out.data[np.asarray(first_subword_index, dtype=np.int64)]
        logits = head.logits(Tensor(rows)).data
    return predictions_from_logits(logits, head.inventory)


def resolve_codemixed(predictions: list[TokenPrediction],
                      task: str = "pos") -> list[str]:
    """Substitute the second-best label wherever the first choice is X.

    Tokens foreign to the annotation language come out labeled X; their
    second-most-likely label is usually the right one. Only defined for
    the POS task.
    """
    if task != "pos":
        raise DataError(f"codemixed resolution is undefined for task {task!r}")
    return [p.second_label if p.label == "X" else p.label for p in predictions]


def supervised_loss(logits: Tensor, gold_labels: list[str],
                    inventory: LabelInventory) -> Tensor:
    """Mean over tokens of cross-entropy against one-hot gold labels."""
    if logits.shape[0] != len(gold_labels):
        raise ValueError(
            f"{logits.shape[0]} logit rows for {len(gold_labels)} gold labels")
    n_labels = len(inventory)
    onehot = np.zeros((len(gold_labels), n_labels))
    for i, lab in enumerate(gold_labels):
        onehot[i, inventory.id(lab)] = 1.0
    probs = T.softmax_with_temperature(logits, 1.0)
    return T.cross_entropy(Tensor(onehot), probs)
